//! Multi-soliton modulation.
//!
//! A state `(w, w_s)` near `sum_i e_i (kappa(d_i), 0)` is split as
//! `q = (w, w_s) - sum_i e_i (kappa(d_i), 0)` with the centers chosen so that
//! `pi_0^{d_i}(q) = 0` for every `i`. The remainder further splits as
//! `q = sum_i alpha_1^i F_1(d_i) + q_-`.

use crate::error::{Error, Result};
use crate::grid::{lncosh, Pair, WState};
use crate::linalg::{solve_dense, solve_tridiagonal};
use crate::params::Params;
use crate::profiles::{d_of_zeta, f_lambda_at, kappa_xi, w_lambda_at, Lambda, WeightedSpace};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// `phi(q, r) = int (q1 r1 + q1' r1' (1-y^2) + q2 r2) rho dy`.
pub fn phi_inner(space: &WeightedSpace, q: &Pair, r: &Pair) -> f64 {
    space.phi_pair(q, r)
}

/// Projectors `pi_0^d`, `pi_1^d` with their eigenfunctions, biorthogonal on the grid.
#[derive(Debug, Clone)]
pub struct ProjectorBasis {
    pub d: f64,
    pub zeta: f64,
    pub f0: Pair,
    pub f1: Pair,
    /// Dual functions after biorthogonalisation.
    pub w0: Pair,
    pub w1: Pair,
    /// Calibrated constants of the explicit second components.
    pub c0: f64,
    pub c1: f64,
    /// `pi_lambda(r) = a1[lambda] . r1 + a2[lambda] . r2`.
    a1: [Vec<f64>; 2],
    a2: [Vec<f64>; 2],
    /// `pi~_lambda(F_mu)` before biorthogonalisation.
    pub gram: [[f64; 2]; 2],
    pub bvp_residual: f64,
}

impl ProjectorBasis {
    pub fn new(d: f64, space: &WeightedSpace) -> Result<Self> {
        if !(d.abs() < 1.0) {
            return Err(Error::Input(format!("|d| must be < 1, got {d}")));
        }
        Self::at_zeta(-d.atanh(), space)
    }

    /// Basis for the soliton centered at `xi = zeta`.
    pub fn at_zeta(zeta: f64, space: &WeightedSpace) -> Result<Self> {
        let grid = &space.grid;
        let m0 = w_lambda_at(Lambda::Zero, zeta, space)?;
        let m1 = w_lambda_at(Lambda::One, zeta, space)?;
        let f0 = f_lambda_at(Lambda::Zero, zeta, grid, &space.params);
        let f1 = f_lambda_at(Lambda::One, zeta, grid, &space.params);
        let modes = [&m0, &m1];
        let fs = [&f0, &f1];
        let mut gram = [[0.0; 2]; 2];
        for l in 0..2 {
            for m in 0..2 {
                gram[l][m] = modes[l].project(&fs[m].q1, &fs[m].q2);
            }
        }
        let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        if !(det.abs() > 1e-12) {
            return Err(Error::Singular { context: "projector Gram matrix", row: 0 });
        }
        let inv = [[gram[1][1] / det, -gram[0][1] / det], [-gram[1][0] / det, gram[0][0] / det]];
        let n = grid.len();
        let combine = |sel: &dyn Fn(&crate::profiles::DualMode) -> &[f64], l: usize| -> Vec<f64> {
            let (x, y) = (sel(&m0), sel(&m1));
            (0..n).map(|i| inv[l][0] * x[i] + inv[l][1] * y[i]).collect()
        };
        let a1 = [combine(&|m| &m.a1, 0), combine(&|m| &m.a1, 1)];
        let a2 = [combine(&|m| &m.a2, 0), combine(&|m| &m.a2, 1)];
        let w0 = Pair {
            grid: grid.clone(),
            q1: combine(&|m| &m.w.q1, 0),
            q2: combine(&|m| &m.w.q2, 0),
        };
        let w1 = Pair {
            grid: grid.clone(),
            q1: combine(&|m| &m.w.q1, 1),
            q2: combine(&|m| &m.w.q2, 1),
        };
        Ok(ProjectorBasis {
            d: d_of_zeta(zeta),
            zeta,
            f0,
            f1,
            w0,
            w1,
            c0: m0.c,
            c1: m1.c,
            a1,
            a2,
            gram,
            bvp_residual: m0.bvp_residual.max(m1.bvp_residual),
        })
    }

    /// `pi_lambda^d(r)` for a pair given by its components.
    pub fn project_parts(&self, lambda: Lambda, r1: &[f64], r2: &[f64]) -> f64 {
        let l = lambda as usize;
        let (a1, a2) = (&self.a1[l], &self.a2[l]);
        let mut acc = 0.0;
        for i in 0..r1.len() {
            acc += a1[i] * r1[i] + a2[i] * r2[i];
        }
        acc
    }

    pub fn project(&self, lambda: Lambda, r: &Pair) -> f64 {
        self.project_parts(lambda, &r.q1, &r.q2)
    }

    /// Nodal weights of `pi_lambda` on the first component.
    pub fn first_weights(&self, lambda: Lambda) -> &[f64] {
        &self.a1[lambda as usize]
    }

    pub fn f(&self, lambda: Lambda) -> &Pair {
        match lambda {
            Lambda::Zero => &self.f0,
            Lambda::One => &self.f1,
        }
    }
}

/// `pi_lambda^d(q)`.
pub fn project(q: &Pair, basis: &ProjectorBasis, lambda: Lambda) -> f64 {
    basis.project(lambda, q)
}

/// Result of the modulation.
#[derive(Debug, Clone)]
pub struct SolitonDecomposition {
    pub k: usize,
    pub signs: Vec<f64>,
    /// Ascending centers in `xi`.
    pub zeta: Vec<f64>,
    pub d: Vec<f64>,
    /// `q = (w, w_s) - sum e_i (kappa(d_i), 0)`.
    pub q: Pair,
    pub alpha1: Vec<f64>,
    pub a_minus: f64,
    pub q_norm: f64,
    /// `|pi_0^{d_i}(q)|`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Initial data for the modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub k: usize,
    pub signs: Vec<f64>,
    pub zeta: Vec<f64>,
}

/// Peak threshold relative to `kappa0`.
pub const SEED_THRESHOLD: f64 = 0.3;

/// Local maxima of `|(1-y^2)^{1/(p-1)} w|` above `0.3 kappa0`, refined by a parabola.
pub fn count_and_seed(state: &WState, params: &Params) -> Seed {
    let g = state.grid();
    let b = params.b();
    let bar: Vec<f64> = state
        .w1
        .values
        .iter()
        .zip(g.lncosh())
        .map(|(w, lc)| (w * (-b * lc).exp()).abs())
        .collect();
    let n = bar.len();
    let thr = SEED_THRESHOLD * params.kappa0;
    let mut seed = Seed { k: 0, signs: vec![], zeta: vec![] };
    for i in 1..n - 1 {
        if bar[i] > thr && bar[i] >= bar[i - 1] && bar[i] > bar[i + 1] {
            let den = bar[i - 1] - 2.0 * bar[i] + bar[i + 1];
            let shift = if den < 0.0 { (0.5 * (bar[i - 1] - bar[i + 1]) / den).clamp(-0.5, 0.5) } else { 0.0 };
            seed.zeta.push(g.xi()[i] + shift * g.h());
            seed.signs.push(if state.w1.values[i] >= 0.0 { 1.0 } else { -1.0 });
            seed.k += 1;
        }
    }
    seed
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationControls {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub min_gap: f64,
}

impl Default for ModulationControls {
    fn default() -> Self {
        ModulationControls { tol: 1e-10, max_iter: 50, fd_step: 1e-6, min_gap: 0.5 }
    }
}

/// `q1 = w - sum e_j kappa(d_j)` on the grid.
fn remainder_first(space: &WeightedSpace, w: &[f64], signs: &[f64], zeta: &[f64]) -> Vec<f64> {
    let xi = space.grid.xi();
    let pr = &space.params;
    (0..w.len())
        .map(|i| {
            let k: f64 = zeta.iter().zip(signs).map(|(z, e)| e * kappa_xi(*z, xi[i], pr)).sum();
            w[i] - k
        })
        .collect()
}

fn check_gaps(zeta: &[f64], min_gap: f64) -> Result<()> {
    for (i, w) in zeta.windows(2).enumerate() {
        if !(w[1] - w[0] >= min_gap) {
            return Err(Error::IllSeparated { index: i, gap: w[1] - w[0] });
        }
    }
    Ok(())
}

/// Orthogonality residuals `pi_0^{d_i}(q)` and the bases at `zeta`.
fn conditions(
    space: &WeightedSpace,
    state: &WState,
    signs: &[f64],
    zeta: &[f64],
) -> Result<(Vec<f64>, Vec<ProjectorBasis>, Vec<f64>)> {
    let q1 = remainder_first(space, &state.w1.values, signs, zeta);
    let q2 = &state.w2.values;
    let bases = zeta.iter().map(|&z| ProjectorBasis::at_zeta(z, space)).collect::<Result<Vec<_>>>()?;
    let g = bases.iter().map(|b| b.project_parts(Lambda::Zero, &q1, q2)).collect();
    Ok((g, bases, q1))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton iteration on `pi_0^{d_i}(q) = 0` with a finite-difference Jacobian. Signs stay
/// as given.
pub fn solve_modulation(
    state: &WState,
    space: &WeightedSpace,
    signs: &[f64],
    zeta_guess: &[f64],
    ctl: &ModulationControls,
) -> Result<SolitonDecomposition> {
    let k = zeta_guess.len();
    if k == 0 || signs.len() != k {
        return Err(Error::Input(format!("need k >= 1 guesses with one sign each ({k} vs {})", signs.len())));
    }
    if !alloc::sync::Arc::ptr_eq(state.grid(), &space.grid) && state.grid().len() != space.grid.len() {
        return Err(Error::Input("state and weighted space use different grids".into()));
    }
    let mut zeta = zeta_guess.to_vec();
    check_gaps(&zeta, ctl.min_gap)?;
    let (mut g, mut bases, mut q1) = conditions(space, state, signs, &zeta)?;
    let mut iterations = 0;
    while max_abs(&g) > ctl.tol {
        if iterations >= ctl.max_iter {
            return Err(Error::Modulation { iterations, residuals: g });
        }
        iterations += 1;
        let mut jac = vec![0.0; k * k];
        for j in 0..k {
            let mut zp = zeta.clone();
            zp[j] += ctl.fd_step;
            let (gp, _, _) = conditions(space, state, signs, &zp)?;
            for i in 0..k {
                jac[i * k + j] = (gp[i] - g[i]) / ctl.fd_step;
            }
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut step = solve_dense(&jac, &rhs)?;
        let tight = zeta.windows(2).any(|w| w[1] - w[0] < 1.0);
        let cap = if tight { 0.25 } else { 2.0 };
        let big = max_abs(&step);
        if big > cap {
            step.iter_mut().for_each(|s| *s *= cap / big);
        }
        let base = max_abs(&g);
        let mut lam = 1.0;
        loop {
            let trial: Vec<f64> = zeta.iter().zip(&step).map(|(z, s)| z + lam * s).collect();
            let ok_gaps = check_gaps(&trial, ctl.min_gap).is_ok();
            if ok_gaps {
                let (gt, bt, qt) = conditions(space, state, signs, &trial)?;
                if max_abs(&gt) < base || lam < 1.0 / 64.0 {
                    zeta = trial;
                    g = gt;
                    bases = bt;
                    q1 = qt;
                    break;
                }
            } else if lam < 1.0 / 64.0 {
                check_gaps(&trial, ctl.min_gap)?;
            }
            lam *= 0.5;
        }
    }
    let q = Pair { grid: space.grid.clone(), q1, q2: state.w2.values.clone() };
    let (alpha1, q_minus) = split_minus(&q, &bases);
    let a_minus = quadratic_a_minus(space, &q_minus, &zeta, signs);
    Ok(SolitonDecomposition {
        k,
        signs: signs.to_vec(),
        d: zeta.iter().map(|&z| d_of_zeta(z)).collect(),
        q_norm: space.norm_h_pair(&q),
        residuals: g.iter().map(|v| v.abs()).collect(),
        zeta,
        q,
        alpha1,
        a_minus,
        iterations,
    })
}

/// [`count_and_seed`] followed by [`solve_modulation`]. With no peaks the
/// decomposition has `k = 0` and `q` is the state itself.
pub fn modulate(state: &WState, space: &WeightedSpace, ctl: &ModulationControls) -> Result<SolitonDecomposition> {
    let seed = count_and_seed(state, &space.params);
    if seed.k == 0 {
        let q = state.pair();
        return Ok(SolitonDecomposition {
            k: 0,
            signs: vec![],
            zeta: vec![],
            d: vec![],
            q_norm: space.norm_h_pair(&q),
            a_minus: quadratic_a_minus(space, &q, &[], &[]),
            q,
            alpha1: vec![],
            residuals: vec![],
            iterations: 0,
        });
    }
    solve_modulation(state, space, &seed.signs, &seed.zeta, ctl)
}

/// `alpha_1^i = pi_1^{d_i}(q)` and `q_- = q - sum alpha_1^i F_1(d_i)`.
pub fn split_minus(q: &Pair, bases: &[ProjectorBasis]) -> (Vec<f64>, Pair) {
    let alpha: Vec<f64> = bases.iter().map(|b| b.project(Lambda::One, q)).collect();
    let mut rest = q.clone();
    for (a, b) in alpha.iter().zip(bases) {
        rest.axpy(-a, &b.f1);
    }
    (alpha, rest)
}

/// `K = sum e_j kappa(d_j)` on the grid.
pub fn soliton_sum(space: &WeightedSpace, zeta: &[f64], signs: &[f64]) -> Vec<f64> {
    let zeros = vec![0.0; space.len()];
    remainder_first(space, &zeros, signs, zeta).iter().map(|v| -v).collect()
}

/// `A_- = int (q1'^2 (1-y^2) - psi q1^2 + q2^2) rho dy` with `psi = f'(K) - 2(p+1)/(p-1)^2`.
pub fn quadratic_a_minus(space: &WeightedSpace, q_minus: &Pair, zeta: &[f64], signs: &[f64]) -> f64 {
    bilinear_psi(space, q_minus, q_minus, zeta, signs)
}

/// The bilinear form with potential `psi`.
pub fn bilinear_psi(space: &WeightedSpace, r: &Pair, rr: &Pair, zeta: &[f64], signs: &[f64]) -> f64 {
    let k = soliton_sum(space, zeta, signs);
    let pr = &space.params;
    let mut acc = space.grad_inner(&r.q1, &rr.q1);
    for i in 0..space.len() {
        let psi = pr.df(k[i]) - pr.mass();
        acc += space.mass[i] * (-psi * r.q1[i] * rr.q1[i] + r.q2[i] * rr.q2[i]);
    }
    acc
}

/// Fields entering the equation for `q`.
#[derive(Debug, Clone)]
pub struct Interaction {
    /// `K = sum e_j kappa(d_j)`.
    pub k: Vec<f64>,
    /// `psi = f'(K) - 2(p+1)/(p-1)^2`.
    pub psi: Vec<f64>,
    /// `V_i = f'(K) - f'(kappa(d_i))`.
    pub v: Vec<Vec<f64>>,
    /// `R = f(K) - sum e_j f(kappa(d_j))`.
    pub r: Vec<f64>,
    params: Params,
}

impl Interaction {
    /// `f(K + q1) - f(K) - f'(K) q1`.
    pub fn f_of(&self, q1: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        self.k.iter().zip(q1).map(|(&k, &q)| pr.f(k + q) - pr.f(k) - pr.df(k) * q).collect()
    }
}

pub fn interaction_terms(space: &WeightedSpace, zeta: &[f64], signs: &[f64]) -> Interaction {
    let pr = space.params;
    let xi = space.grid.xi();
    let k = soliton_sum(space, zeta, signs);
    let kap: Vec<Vec<f64>> = zeta.iter().map(|&z| xi.iter().map(|&x| kappa_xi(z, x, &pr)).collect()).collect();
    let psi = k.iter().map(|&v| pr.df(v) - pr.mass()).collect();
    let v = kap.iter().map(|ki| k.iter().zip(ki).map(|(&kk, &s)| pr.df(kk) - pr.df(s)).collect()).collect();
    let r = (0..k.len())
        .map(|i| pr.f(k[i]) - kap.iter().zip(signs).map(|(ki, e)| e * pr.f(ki[i])).sum::<f64>())
        .collect();
    Interaction { k, psi, v, r, params: pr }
}

/// Remainder `q = (q1, 0)` that makes `K + q1` stationary to first order.
///
/// In the variable `bar w = cosh^{-2/(p-1)}(xi) w` the stationary equation reads
/// `bar w'' - 4/(p-1)^2 bar w + f(bar w) = 0`, so `bar q` solves
/// `(-d^2 + 4/(p-1)^2 - f'(bar K)) bar q = f(bar K) - sum e_j f(bar kappa_j)` up to the
/// translation modes `bar kappa_i'`. Their multipliers are fixed by
/// `pi_0^{d_i}(q) = 0`, so `zeta` is the modulated center set of `K + q`.
pub fn quasi_static_corrector(space: &WeightedSpace, zeta: &[f64], signs: &[f64]) -> Result<Pair> {
    let k = zeta.len();
    if k == 0 || signs.len() != k {
        return Err(Error::Input("need one sign per center".into()));
    }
    let pr = space.params;
    let b = pr.b();
    let grid = &space.grid;
    let n = grid.len();
    let h = grid.h();
    let xi = grid.xi();
    let bars: Vec<Vec<f64>> = zeta.iter().map(|&z| xi.iter().map(|&x| pr.kappa0 * (-b * lncosh(x - z)).exp()).collect()).collect();
    let kbar: Vec<f64> = (0..n).map(|i| bars.iter().zip(signs).map(|(v, e)| e * v[i]).sum()).collect();
    let rbar: Vec<f64> =
        (0..n).map(|i| pr.f(kbar[i]) - bars.iter().zip(signs).map(|(v, e)| e * pr.f(v[i])).sum::<f64>()).collect();
    // Interior nodes 1..n-1, Dirichlet ends.
    let m = n - 2;
    let diag: Vec<f64> = (1..n - 1).map(|i| 2.0 / (h * h) + b * b - pr.df(kbar[i])).collect();
    let off = vec![-1.0 / (h * h); m - 1];
    let mut cols: Vec<Vec<f64>> = vec![solve_tridiagonal(&off, &diag, &off, &rbar[1..n - 1])?];
    for (i, z) in zeta.iter().enumerate() {
        let d: Vec<f64> = (1..n - 1).map(|j| -b * (xi[j] - z).tanh() * bars[i][j]).collect();
        cols.push(solve_tridiagonal(&off, &diag, &off, &d)?);
    }
    let lift: Vec<f64> = (1..n - 1).map(|j| (b * grid.lncosh()[j]).exp()).collect();
    let bases = zeta.iter().map(|&z| ProjectorBasis::at_zeta(z, space)).collect::<Result<Vec<_>>>()?;
    let constraint = |basis: &ProjectorBasis, v: &[f64]| -> f64 {
        let a = basis.first_weights(Lambda::Zero);
        (0..m).map(|j| a[j + 1] * lift[j] * v[j]).sum()
    };
    let mut mat = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for (i, basis) in bases.iter().enumerate() {
        rhs[i] = constraint(basis, &cols[0]);
        for j in 0..k {
            mat[i * k + j] = constraint(basis, &cols[j + 1]);
        }
    }
    let mu = solve_dense(&mat, &rhs)?;
    let mut q1 = vec![0.0; n];
    for j in 0..m {
        let mut v = cols[0][j];
        for (i, c) in mu.iter().enumerate() {
            v -= c * cols[i + 1][j];
        }
        q1[j + 1] = lift[j] * v;
    }
    Ok(Pair { grid: grid.clone(), q1, q2: vec![0.0; n] })
}

/// `h(zeta)`: `e^{-p zeta/(p-1)}` for `p < 2`, `e^{-2 zeta} sqrt(zeta)` for `p = 2`,
/// `e^{-2 zeta/(p-1)}` for `p > 2`.
pub fn h_gap(zeta: f64, p: f64) -> f64 {
    if p < 2.0 {
        (-p * zeta / (p - 1.0)).exp()
    } else if p == 2.0 {
        (-2.0 * zeta).exp() * zeta.sqrt()
    } else {
        (-2.0 * zeta / (p - 1.0)).exp()
    }
}

/// Planted state `K + q` with the quasi-static remainder, at rest.
pub fn planted_state(space: &WeightedSpace, zeta: &[f64], signs: &[f64]) -> Result<WState> {
    let q = quasi_static_corrector(space, zeta, signs)?;
    let k = soliton_sum(space, zeta, signs);
    let w: Vec<f64> = k.iter().zip(&q.q1).map(|(a, b)| a + b).collect();
    Ok(WState::from_pair(&Pair { grid: space.grid.clone(), q1: w, q2: vec![0.0; space.len()] }, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::XiGrid;
    use crate::profiles::kappa;
    use alloc::sync::Arc;
    use proptest::prelude::*;

    fn space(p: f64, xmax: f64, n: usize) -> WeightedSpace {
        let g = Arc::new(XiGrid::symmetric(xmax, n).unwrap());
        WeightedSpace::new(&g, &Params::signed(p).unwrap())
    }

    fn state_from(space: &WeightedSpace, w: Vec<f64>) -> WState {
        WState::from_pair(&Pair { grid: space.grid.clone(), q1: w, q2: vec![0.0; space.len()] }, 0.0)
    }

    #[test]
    fn basis_is_biorthonormal() {
        let sp = space(3.0, 12.0, 2049);
        for &d in &[-0.9, -0.3, 0.0, 0.6] {
            let b = ProjectorBasis::new(d, &sp).unwrap();
            for l in [Lambda::Zero, Lambda::One] {
                for m in [Lambda::Zero, Lambda::One] {
                    let want = if l == m { 1.0 } else { 0.0 };
                    assert!((b.project(l, b.f(m)) - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn projection_of_d_derivative() {
        let sp = space(3.0, 12.0, 2049);
        let pr = sp.params;
        for &d in &[-0.5, 0.2, 0.7] {
            let b = ProjectorBasis::new(d, &sp).unwrap();
            let e = 1e-5;
            let dk: Vec<f64> = sp
                .grid
                .y()
                .iter()
                .map(|&y| (kappa(d + e, y, &pr).unwrap() - kappa(d - e, y, &pr).unwrap()) / (2.0 * e))
                .collect();
            let got = b.project_parts(Lambda::Zero, &dk, &vec![0.0; sp.len()]);
            let want = -2.0 * pr.kappa0 / ((pr.p - 1.0) * (1.0 - d * d));
            assert!((got / want - 1.0).abs() < 1e-6, "{d}: {got} {want}");
        }
    }

    #[test]
    fn one_soliton_is_recovered_exactly() {
        let sp = space(3.0, 12.0, 2049);
        let d = 0.35;
        let z = -d.atanh();
        let w: Vec<f64> = sp.grid.xi().iter().map(|&x| kappa_xi(z, x, &sp.params)).collect();
        let st = state_from(&sp, w);
        let seed = count_and_seed(&st, &sp.params);
        assert_eq!((seed.k, seed.signs.clone()), (1, vec![1.0]));
        let dec = solve_modulation(&st, &sp, &seed.signs, &seed.zeta, &ModulationControls::default()).unwrap();
        assert!((dec.zeta[0] - z).abs() < 1e-8);
        assert!(dec.q_norm < 1e-8);
    }

    #[test]
    fn zero_state_has_no_solitons() {
        let sp = space(3.0, 12.0, 257);
        let st = WState::zeros(&sp.grid, 0.0);
        assert_eq!(count_and_seed(&st, &sp.params).k, 0);
        let dec = modulate(&st, &sp, &ModulationControls::default()).unwrap();
        assert_eq!(dec.k, 0);
        assert_eq!(dec.a_minus, 0.0);
    }

    #[test]
    fn planted_pair_is_recovered() {
        let sp = space(3.0, 24.0, 4097);
        let zeta = [-5.0, 5.0];
        let signs = [1.0, -1.0];
        let st = planted_state(&sp, &zeta, &signs).unwrap();
        let seed = count_and_seed(&st, &sp.params);
        assert_eq!(seed.signs, signs.to_vec());
        let ctl = ModulationControls::default();
        let dec = solve_modulation(&st, &sp, &seed.signs, &seed.zeta, &ctl).unwrap();
        for i in 0..2 {
            assert!((dec.zeta[i] - zeta[i]).abs() < 1e-4, "{:?}", dec.zeta);
        }
        assert!(dec.residuals.iter().all(|r| *r <= 1e-10));
        let ratio = dec.q_norm / h_gap(10.0, 3.0);
        assert!(ratio > 1e-2 && ratio < 1e2, "{ratio}");
        // idempotence
        let again = solve_modulation(&st, &sp, &dec.signs, &dec.zeta, &ctl).unwrap();
        for i in 0..2 {
            assert!((again.zeta[i] - dec.zeta[i]).abs() < 1e-10);
        }
        // noise of size 1e-3 in H
        let mut noisy = st.clone();
        let bump: Vec<f64> = sp.grid.xi().iter().map(|&x| (-(x - 2.0) * (x - 2.0)).exp()).collect();
        let nb = sp.norm_h(&bump, &vec![0.0; sp.len()]);
        for (w, v) in noisy.w1.values.iter_mut().zip(&bump) {
            *w += 1e-3 * v / nb;
        }
        let dn = solve_modulation(&noisy, &sp, &seed.signs, &seed.zeta, &ctl).unwrap();
        assert!(dn.residuals.iter().all(|r| *r <= 1e-10));
        for i in 0..2 {
            assert!((dn.zeta[i] - zeta[i]).abs() < 0.1, "{:?}", dn.zeta);
        }
    }

    #[test]
    fn seeds_three_alternating() {
        let sp = space(3.0, 20.0, 2049);
        let zeta = [-8.0, 0.0, 8.0];
        let signs = [1.0, -1.0, 1.0];
        let k = soliton_sum(&sp, &zeta, &signs);
        let seed = count_and_seed(&state_from(&sp, k), &sp.params);
        assert_eq!(seed.k, 3);
        assert_eq!(seed.signs, signs.to_vec());
        for i in 0..3 {
            assert!((seed.zeta[i] - zeta[i]).abs() < 0.01);
        }
    }

    #[test]
    fn split_of_f1_and_zero() {
        let sp = space(3.0, 12.0, 1025);
        let b = ProjectorBasis::at_zeta(0.4, &sp).unwrap();
        let (a, rest) = split_minus(&b.f1, core::slice::from_ref(&b));
        assert!((a[0] - 1.0).abs() < 1e-10);
        assert!(rest.max_abs() < 1e-9);
        let (a, rest) = split_minus(&Pair::zeros(&sp.grid), core::slice::from_ref(&b));
        assert_eq!(a[0], 0.0);
        assert_eq!(rest.max_abs(), 0.0);
    }

    #[test]
    fn single_soliton_interaction_vanishes() {
        let sp = space(3.0, 12.0, 513);
        let it = interaction_terms(&sp, &[0.7], &[1.0]);
        assert!(it.r.iter().all(|v| v.abs() < 1e-12 * sp.params.kappa0.powi(3)));
        assert!(it.v[0].iter().all(|v| v.abs() < 1e-12));
        assert!(it.f_of(&vec![0.0; sp.len()]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn corrector_satisfies_orthogonality() {
        let sp = space(3.0, 24.0, 2049);
        let zeta = [-4.0, 4.5];
        let signs = [1.0, -1.0];
        let q = quasi_static_corrector(&sp, &zeta, &signs).unwrap();
        for &z in &zeta {
            let b = ProjectorBasis::at_zeta(z, &sp).unwrap();
            assert!(b.project(Lambda::Zero, &q).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn projection_is_linear(a in -3.0f64..3.0, c in -3.0f64..3.0, z in -2.0f64..2.0, s1 in 0.1f64..3.0, s2 in 0.1f64..3.0) {
            let sp = space(3.0, 10.0, 257);
            let b = ProjectorBasis::at_zeta(z, &sp).unwrap();
            let q = Pair::new(&sp.grid, sp.grid.xi().iter().map(|x| (-x * x / s1).exp()).collect(), sp.grid.xi().iter().map(|x| (x / s2).sin()).collect()).unwrap();
            let r = Pair::new(&sp.grid, sp.grid.xi().iter().map(|x| x.tanh()).collect(), sp.grid.xi().iter().map(|x| (-x.abs()).exp()).collect()).unwrap();
            let mut comb = q.scaled(a);
            comb.axpy(c, &r);
            for l in [Lambda::Zero, Lambda::One] {
                let lhs = b.project(l, &comb);
                let rhs = a * b.project(l, &q) + c * b.project(l, &r);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn bilinear_psi_is_bounded(z1 in -6.0f64..-2.0, z2 in 2.0f64..6.0, s1 in 0.2f64..3.0, s2 in 0.2f64..3.0) {
            let sp = space(3.0, 12.0, 513);
            let r = Pair::new(&sp.grid, sp.grid.xi().iter().map(|x| (-(x - s1).powi(2)).exp()).collect(), sp.grid.xi().iter().map(|x| (x * s2).cos() * 0.1).collect()).unwrap();
            let rr = Pair::new(&sp.grid, sp.grid.xi().iter().map(|x| (x / s2).tanh()).collect(), vec![0.0; sp.len()]).unwrap();
            let v = bilinear_psi(&sp, &r, &rr, &[z1, z2], &[1.0, -1.0]);
            let bound = (1.0 + sp.params.p * sp.params.kappa0.powf(sp.params.p - 1.0)) * sp.norm_h_pair(&r) * sp.norm_h_pair(&rr);
            prop_assert!(v.abs() <= bound);
        }
    }
}
