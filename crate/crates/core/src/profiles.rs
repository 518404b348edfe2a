//! Soliton family, weights, weighted norms, the Lyapunov functional and the
//! eigenfunctions `F_lambda`, `W_lambda` of the linearized operator.
//!
//! All integrals over `(-1, 1)` are computed on a [`XiGrid`] with `y = tanh xi`,
//! `dy = sech^2 xi dxi`. The gradient part of the energy-space norm is
//! `int q'^2 (1-y^2) rho dy = int (d_xi q)^2 rho dxi`, evaluated with staggered
//! differences so that `phi(q, q)` and `norm_H(q)^2` agree exactly.

use crate::error::{Error, Result};
use crate::grid::{lncosh, Field, Pair, Representation, WState, XiGrid};
use crate::linalg::solve_tridiagonal;
use crate::params::Params;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// `kappa(d, y) = kappa0 (1-d^2)^{1/(p-1)} / (1+dy)^{2/(p-1)}`, continuous up to `|y| = 1`.
pub fn kappa(d: f64, y: f64, params: &Params) -> Result<f64> {
    if !(d.abs() < 1.0) || !(y.abs() <= 1.0) {
        return Err(Error::Input(format!("kappa needs |d|<1 and |y|<=1, got d={d}, y={y}")));
    }
    let b = params.b();
    Ok(params.kappa0 * (1.0 - d * d).powf(0.5 * b) / (1.0 + d * y).powf(b))
}

/// `kappa0 cosh^{-2/(p-1)}(z)`.
#[inline]
pub fn kappa_bar(z: f64, params: &Params) -> f64 {
    params.kappa0 * (-params.b() * lncosh(z)).exp()
}

/// `kappa(-tanh zeta, tanh xi)`, evaluated without cancellation near `|y| = 1`.
#[inline]
pub fn kappa_xi(zeta: f64, xi: f64, params: &Params) -> f64 {
    params.kappa0 * (params.b() * (lncosh(xi) - lncosh(xi - zeta))).exp()
}

/// `rho(y) = (1-y^2)^{2/(p-1)}`.
pub fn rho(y: f64, params: &Params) -> f64 {
    (1.0 - y * y).powf(2.0 * params.b() * 0.5)
}

/// `rho` sampled on the grid.
pub fn weight_table(grid: &Arc<XiGrid>, params: &Params) -> Field {
    let b = params.b();
    let values = grid.lncosh().iter().map(|&lc| (-2.0 * b * lc).exp()).collect();
    Field { grid: grid.clone(), values, repr: Representation::YForm }
}

/// `d = -tanh zeta` and back.
#[inline]
pub fn d_of_zeta(zeta: f64) -> f64 {
    -zeta.tanh()
}

#[inline]
pub fn zeta_of_d(d: f64) -> f64 {
    -d.atanh()
}

/// Discrete weighted geometry of a grid for one exponent: quadrature weights for
/// the energy space and the conservative discretisation of
/// `L r = rho^{-1} d_y (rho (1-y^2) d_y r)`.
#[derive(Debug, Clone)]
pub struct WeightedSpace {
    pub grid: Arc<XiGrid>,
    pub params: Params,
    /// `rho` at the nodes.
    pub rho: Vec<f64>,
    /// Nodal quadrature weights for `int g dy`, i.e. trapezoid times `sech^2`.
    pub dy: Vec<f64>,
    /// Nodal weights for `int g rho dy`.
    pub mass: Vec<f64>,
    /// Cell weights `rho(xi_{i+1/2}) / h` for `int (d_xi g)^2 rho dxi`.
    pub stiff: Vec<f64>,
    lp: Vec<f64>,
    lm: Vec<f64>,
}

impl WeightedSpace {
    pub fn new(grid: &Arc<XiGrid>, params: &Params) -> Self {
        let n = grid.len();
        let h = grid.h();
        let b = params.b();
        let lrho: Vec<f64> = grid.lncosh().iter().map(|&lc| -2.0 * b * lc).collect();
        let rho: Vec<f64> = lrho.iter().map(|v| v.exp()).collect();
        let dy: Vec<f64> = (0..n).map(|i| grid.trap(i) * grid.sech2()[i]).collect();
        let mass: Vec<f64> = (0..n).map(|i| dy[i] * rho[i]).collect();
        let lrho_mid: Vec<f64> = grid
            .xi()
            .windows(2)
            .map(|w| -2.0 * b * lncosh(0.5 * (w[0] + w[1])))
            .collect();
        let stiff = lrho_mid.iter().map(|v| v.exp() / h).collect();
        let mut lp = vec![0.0; n];
        let mut lm = vec![0.0; n];
        let lc = grid.lncosh();
        for i in 0..n {
            let end = if i == 0 || i + 1 == n { 2.0 } else { 1.0 };
            if i + 1 < n {
                lp[i] = end * (2.0 * lc[i] + lrho_mid[i] - lrho[i]).exp() / (h * h);
            }
            if i > 0 {
                lm[i] = end * (2.0 * lc[i] + lrho_mid[i - 1] - lrho[i]).exp() / (h * h);
            }
        }
        WeightedSpace { grid: grid.clone(), params: *params, rho, dy, mass, stiff, lp, lm }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// `int a b rho dy`
    pub fn l2_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
    }

    /// `int a' b' (1-y^2) rho dy`
    pub fn grad_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.stiff.len() {
            acc += self.stiff[i] * (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
        }
        acc
    }

    /// `phi(q, r) = int (q1 r1 + q1' r1' (1-y^2) + q2 r2) rho dy`
    pub fn phi(&self, q1: &[f64], q2: &[f64], r1: &[f64], r2: &[f64]) -> f64 {
        self.grad_inner(q1, r1) + self.l2_inner(q1, r1) + self.l2_inner(q2, r2)
    }

    pub fn phi_pair(&self, q: &Pair, r: &Pair) -> f64 {
        self.phi(&q.q1, &q.q2, &r.q1, &r.q2)
    }

    pub fn norm_h_pair(&self, q: &Pair) -> f64 {
        self.phi_pair(q, q).max(0.0).sqrt()
    }

    pub fn norm_h(&self, q1: &[f64], q2: &[f64]) -> f64 {
        self.phi(q1, q2, q1, q2).max(0.0).sqrt()
    }

    /// `||r||_{H0}^2 = int (r'^2 (1-y^2) + r^2) rho dy`
    pub fn norm_h0(&self, r: &[f64]) -> f64 {
        (self.grad_inner(r, r) + self.l2_inner(r, r)).max(0.0).sqrt()
    }

    /// Conservative second-order discretisation of `L r`, with natural boundary
    /// closure so that `-int (L q) r rho dy = int q' r' (1-y^2) rho dy` holds exactly.
    pub fn script_l(&self, q: &[f64], out: &mut [f64]) {
        let n = q.len();
        for i in 0..n {
            let mut v = 0.0;
            if i + 1 < n {
                v += self.lp[i] * (q[i + 1] - q[i]);
            }
            if i > 0 {
                v += self.lm[i] * (q[i - 1] - q[i]);
            }
            out[i] = v;
        }
    }

    /// Second-order centered `d_xi` with one-sided ends.
    pub fn d_xi(&self, q: &[f64], out: &mut [f64]) {
        let n = q.len();
        let h = self.grid.h();
        for i in 1..n - 1 {
            out[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
        }
        out[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
        out[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
    }

    /// Lyapunov functional for the state `(w, w_s)`.
    pub fn energy(&self, w: &[f64], ws: &[f64]) -> f64 {
        let pr = &self.params;
        let half_mass = 0.5 * pr.mass();
        let mut acc = 0.5 * self.grad_inner(w, w);
        for i in 0..w.len() {
            acc += self.mass[i] * (0.5 * ws[i] * ws[i] + half_mass * w[i] * w[i] - pr.prim(w[i]));
        }
        acc
    }

    /// `int w_s^2 rho / (1-y^2) dy`, the dissipation density of the energy.
    pub fn dissipation(&self, ws: &[f64]) -> f64 {
        (0..ws.len()).map(|i| self.grid.trap(i) * self.rho[i] * ws[i] * ws[i]).sum()
    }

    /// Linearized operator around `kappa(d)`:
    /// `L_d (q1, q2) = (q2, L q1 + psi_d q1 - (p+3)/(p-1) q2 - 2y d_y q2)`.
    pub fn apply_l_d(&self, d: f64, q: &Pair) -> Pair {
        let n = self.len();
        let pr = &self.params;
        let zeta = zeta_of_d(d);
        let mut lq = vec![0.0; n];
        self.script_l(&q.q1, &mut lq);
        let mut dq2 = vec![0.0; n];
        self.d_xi(&q.q2, &mut dq2);
        let xi = self.grid.xi();
        let out2 = (0..n)
            .map(|i| {
                let k = kappa_xi(zeta, xi[i], pr);
                let psi = pr.p * k.powf(pr.p - 1.0) - pr.mass();
                lq[i] + psi * q.q1[i] - pr.damping() * q.q2[i] - (2.0 * xi[i]).sinh() * dq2[i]
            })
            .collect();
        Pair { grid: q.grid.clone(), q1: q.q2.clone(), q2: out2 }
    }
}

/// `||(w, w_s)||_H`
pub fn norm_h(state: &WState, params: &Params) -> f64 {
    WeightedSpace::new(state.grid(), params).norm_h(&state.w1.values, &state.w2.values)
}

/// `||r||_{H0}` of a `YForm` field.
pub fn norm_h0(field: &Field, params: &Params) -> f64 {
    let f = field.transform(Representation::YForm, params);
    WeightedSpace::new(&f.grid, params).norm_h0(&f.values)
}

/// Lyapunov functional `E` (or its `Unsigned` analogue).
pub fn energy(state: &WState, params: &Params) -> f64 {
    WeightedSpace::new(state.grid(), params).energy(&state.w1.values, &state.w2.values)
}

/// Soliton `kappa(d)` sampled on the grid.
pub fn kappa_field(d: f64, grid: &Arc<XiGrid>, params: &Params) -> Result<Field> {
    if !(d.abs() < 1.0) {
        return Err(Error::Input(format!("|d| must be < 1, got {d}")));
    }
    let zeta = zeta_of_d(d);
    Ok(Field::from_fn(grid, |xi, _| kappa_xi(zeta, xi, params)))
}

/// The two modes of the linearized operator used by the modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lambda {
    Zero,
    One,
}

impl Lambda {
    pub fn value(self) -> f64 {
        match self {
            Lambda::Zero => 0.0,
            Lambda::One => 1.0,
        }
    }

    pub fn from_index(l: u8) -> Result<Self> {
        match l {
            0 => Ok(Lambda::Zero),
            1 => Ok(Lambda::One),
            _ => Err(Error::Input(format!("lambda must be 0 or 1, got {l}"))),
        }
    }
}

/// Eigenfunction `F_lambda(d)` with `L_d F = lambda F`.
pub fn f_lambda(lambda: Lambda, d: f64, grid: &Arc<XiGrid>, params: &Params) -> Result<Pair> {
    if !(d.abs() < 1.0) {
        return Err(Error::Input(format!("|d| must be < 1, got {d}")));
    }
    Ok(f_lambda_at(lambda, zeta_of_d(d), grid, params))
}

/// [`f_lambda`] parametrized by the center `zeta = artanh(-d)`, exact for large `|zeta|`.
pub fn f_lambda_at(lambda: Lambda, zeta: f64, grid: &Arc<XiGrid>, params: &Params) -> Pair {
    let b = params.b();
    let m = (params.p + 1.0) / (params.p - 1.0);
    let lz = lncosh(zeta);
    let n = grid.len();
    match lambda {
        Lambda::One => {
            let g: Vec<f64> = grid
                .xi()
                .iter()
                .zip(grid.lncosh())
                .map(|(&xi, &lc)| (m * (lc - lncosh(xi - zeta)) - lz).exp())
                .collect();
            Pair { grid: grid.clone(), q1: g.clone(), q2: g }
        }
        Lambda::Zero => {
            let g = grid
                .xi()
                .iter()
                .zip(grid.lncosh())
                .map(|(&xi, &lc)| (xi - zeta).tanh() * (b * (lc - lncosh(xi - zeta))).exp())
                .collect();
            Pair { grid: grid.clone(), q1: g, q2: vec![0.0; n] }
        }
    }
}

/// Dual function `W_lambda(d)` with `phi(W_lambda, F_mu) = delta`.
#[derive(Debug, Clone)]
pub struct DualMode {
    pub lambda: Lambda,
    pub d: f64,
    pub zeta: f64,
    /// Calibrated `W_lambda(d)`.
    pub w: Pair,
    /// Normalisation constant `c_0` or `c_1(d)` multiplying the explicit `W_{lambda,2}`.
    pub c: f64,
    /// Nodal weights such that `pi(r) = a1 . r1 + a2 . r2` equals `phi(W, r)`.
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// Residual of the boundary-value problem, max norm, relative to its right side.
    pub bvp_residual: f64,
}

impl DualMode {
    /// `pi_lambda^d(r) = phi(W_lambda(d), r)`.
    pub fn project(&self, r1: &[f64], r2: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..r1.len() {
            acc += self.a1[i] * r1[i] + self.a2[i] * r2[i];
        }
        acc
    }
}

/// Builds the uncalibrated `W_{lambda,2}` (constant 1) and the right side
/// `(1-y^2) * (rhs of the W_{lambda,1} equation)` on the grid.
fn dual_sources(lambda: Lambda, zeta: f64, space: &WeightedSpace) -> (Vec<f64>, Vec<f64>) {
    let grid = &space.grid;
    let pr = &space.params;
    let b = pr.b();
    let m = (pr.p + 1.0) / (pr.p - 1.0);
    let a = pr.damping();
    let lz = lncosh(zeta);
    let n = grid.len();
    let mut w2 = vec![0.0; n];
    let mut g = vec![0.0; n];
    for i in 0..n {
        let xi = grid.xi()[i];
        let lc = grid.lncosh()[i];
        let t = grid.y()[i];
        let z = xi - zeta;
        let tz = z.tanh();
        let (val, dxi) = match lambda {
            Lambda::Zero => {
                let k = pr.kappa0 * (b * (lc - lncosh(z))).exp();
                let sz = crate::grid::sech2(z);
                (tz * k, k * (sz + b * tz * (t - tz)))
            }
            Lambda::One => {
                let v = (-2.0 * lc + m * (lc + lz - lncosh(z))).exp();
                (v, v * (-2.0 * t + m * (t - tz)))
            }
        };
        w2[i] = val;
        g[i] = grid.sech2()[i] * (lambda.value() - a) * val - 2.0 * t * dxi + 4.0 * b * val;
    }
    (w2, g)
}

/// Solves for `W_lambda(d)` and calibrates its constant against `F_lambda(d)`.
pub fn w_lambda(lambda: Lambda, d: f64, space: &WeightedSpace) -> Result<DualMode> {
    if !(d.abs() < 1.0) {
        return Err(Error::Input(format!("|d| must be < 1, got {d}")));
    }
    w_lambda_at(lambda, zeta_of_d(d), space)
}

/// [`w_lambda`] parametrized by the center `zeta = artanh(-d)`.
pub fn w_lambda_at(lambda: Lambda, zeta: f64, space: &WeightedSpace) -> Result<DualMode> {
    if !zeta.is_finite() {
        return Err(Error::Input(format!("center must be finite, got {zeta}")));
    }
    let grid = &space.grid;
    let n = grid.len();
    let (w2, g) = dual_sources(lambda, zeta, space);
    // (K + M) w1 = rhs, the Euler-Lagrange system of the discrete phi-form.
    let mut diag = space.mass.clone();
    let mut off = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let s = space.stiff[i];
        diag[i] += s;
        diag[i + 1] += s;
        off[i] = -s;
    }
    let rhs: Vec<f64> = (0..n).map(|i| grid.trap(i) * space.rho[i] * g[i]).collect();
    let w1 = solve_tridiagonal(&off, &diag, &off, &rhs)?;
    let mut resid: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let mut v = diag[i] * w1[i];
        if i > 0 {
            v += off[i - 1] * w1[i - 1];
        }
        if i + 1 < n {
            v += off[i] * w1[i + 1];
        }
        resid = resid.max((v - rhs[i]).abs());
        scale = scale.max(rhs[i].abs());
    }
    let f = f_lambda_at(lambda, zeta, grid, &space.params);
    let raw: f64 = (0..n).map(|i| rhs[i] * f.q1[i] + space.mass[i] * w2[i] * f.q2[i]).sum();
    if !(raw.abs() > 0.0) || !raw.is_finite() {
        return Err(Error::Singular { context: "W_lambda calibration", row: 0 });
    }
    let c = 1.0 / raw;
    let w = Pair {
        grid: grid.clone(),
        q1: w1.iter().map(|v| c * v).collect(),
        q2: w2.iter().map(|v| c * v).collect(),
    };
    let a1 = rhs.iter().map(|v| c * v).collect();
    let a2 = (0..n).map(|i| c * space.mass[i] * w2[i]).collect();
    Ok(DualMode { lambda, d: d_of_zeta(zeta), zeta, w, c, a1, a2, bvp_residual: resid / scale.max(f64::MIN_POSITIVE) })
}
