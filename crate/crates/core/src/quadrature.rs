//! Soliton integrals in the `xi = artanh y` variable.
//!
//! With `bar kappa_i(xi) = kappa0 cosh^{-2/(p-1)}(xi - zeta_i)` every weighted
//! integral of soliton products over `(-1, 1)` becomes a product of `sech`
//! powers over the real line, with no endpoint singularities.

use crate::error::{Error, Result};
use crate::grid::lncosh;
use crate::params::Params;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) on `[a, b]`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad> {
    integrate_pieces(&mut f, &[a, b], abs_tol, rel_tol)
}

/// Adaptive Gauss–Kronrod over consecutive pieces `[breaks[i], breaks[i+1]]`.
pub fn integrate_pieces(
    f: &mut impl FnMut(f64) -> f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quad> {
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = kronrod(f, w[0], w[1]);
            parts.push((w[0], w[1], v, e));
        }
    }
    for _ in 0..20_000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Quad { value: total, error: err });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (a, b, _, _) = parts[idx];
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let (v1, e1) = kronrod(f, a, m);
        let (v2, e2) = kronrod(f, m, b);
        parts[idx] = (a, m, v1, e1);
        parts.push((m, b, v2, e2));
    }
    let value: f64 = parts.iter().map(|p| p.2).sum();
    let error: f64 = parts.iter().map(|p| p.3).sum();
    if error <= abs_tol.max(rel_tol * value.abs()) {
        Ok(Quad { value, error })
    } else {
        Err(Error::Quadrature { estimate: value, error })
    }
}

const REL: f64 = 1e-12;
const ABS: f64 = 1e-300;

/// `cosh^{-gamma}(z)`.
pub fn sech_pow(z: f64, gamma: f64) -> f64 {
    (-gamma * lncosh(z)).exp()
}

/// Separators between ordered soliton centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Separators {
    pub centers: Vec<f64>,
    /// `theta_0 = -inf, theta_j = (zeta_j + zeta_{j+1})/2, theta_k = +inf`.
    pub theta: Vec<f64>,
    /// `y_j = tanh theta_j`.
    pub y: Vec<f64>,
}

impl Separators {
    pub fn new(centers: &[f64]) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Input("no centers".into()));
        }
        if centers.iter().any(|c| !c.is_finite()) || centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!("centers must be finite and strictly increasing: {centers:?}")));
        }
        let k = centers.len();
        let mut theta = vec![f64::NEG_INFINITY];
        theta.extend(centers.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        theta.push(f64::INFINITY);
        let y = theta.iter().map(|t| t.tanh()).collect();
        debug_assert_eq!(theta.len(), k + 1);
        Ok(Separators { centers: centers.to_vec(), theta, y })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Window of the soliton with 0-based index `j`.
    pub fn window(&self, j: usize) -> (f64, f64) {
        (self.theta[j], self.theta[j + 1])
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.k()) {
            Some(i) => Err(Error::Input(format!("index {i} out of range for k={}", self.k()))),
            None => Ok(()),
        }
    }
}

/// Integral of `f` over `(a, b)` (possibly infinite) for an integrand that decays at
/// least like `exp(-rate |xi|)` outside the hull of `centers`.
fn integrate_window(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    centers: &[f64],
    rate: f64,
) -> Result<Quad> {
    let reach = 60.0 / rate;
    let lo = if a.is_finite() { a } else { centers[0] - reach };
    let hi = if b.is_finite() { b } else { centers[centers.len() - 1] + reach };
    let mut breaks = vec![lo];
    breaks.extend(centers.iter().cloned().filter(|&c| c > lo && c < hi));
    breaks.push(hi);
    integrate_pieces(f, &breaks, ABS, REL)
}

/// Numeric value with its asymptotic model and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub numeric: f64,
    pub model: f64,
    pub ratio: f64,
    pub error: f64,
}

impl Entry {
    fn new(q: Quad, model: f64) -> Self {
        Entry { numeric: q.value, model, ratio: q.value / model, error: q.error }
    }
}

/// `I1 = kappa0^{a+b} int cosh^{-2a/(p-1)}(z) cosh^{-2b/(p-1)}(z + dzeta) dz`.
/// The model is `dzeta e^{-2 beta dzeta/(p-1)}` for `alpha = beta` and
/// `e^{-2 min(alpha,beta) dzeta/(p-1)}` otherwise; the ratio tends to `C0`.
pub fn i1(alpha: f64, beta: f64, dzeta: f64, params: &Params) -> Result<Entry> {
    if !(alpha > 0.0 && beta > 0.0 && dzeta >= 0.0) {
        return Err(Error::Input(format!("I1 needs alpha, beta > 0 and dzeta >= 0 (got {alpha}, {beta}, {dzeta})")));
    }
    let b = params.b();
    let (ga, gb) = (alpha * b, beta * b);
    let mut f = |z: f64| (-(ga * lncosh(z)) - gb * lncosh(z + dzeta)).exp();
    let q = integrate_window(&mut f, f64::NEG_INFINITY, f64::INFINITY, &[-dzeta, 0.0], ga + gb)?;
    let scale = params.kappa0.powf(alpha + beta);
    let q = Quad { value: q.value * scale, error: q.error * scale };
    let model = if alpha == beta {
        dzeta * (-gb * dzeta).exp()
    } else {
        (-alpha.min(beta) * b * dzeta).exp()
    };
    Ok(Entry::new(q, model))
}

/// `I2 = int over window j of bar kappa_j^alpha bar kappa_i^beta dxi`, with the bound
/// model of the matching case (`alpha = beta`, `alpha > beta`, `beta > alpha`).
pub fn i2(alpha: f64, beta: f64, i: usize, j: usize, sep: &Separators, params: &Params) -> Result<Entry> {
    sep.check(&[i, j])?;
    if i == j {
        return Err(Error::Input("I2 needs i != j".into()));
    }
    let b = params.b();
    let (zi, zj) = (sep.centers[i], sep.centers[j]);
    let (ga, gb) = (alpha * b, beta * b);
    let mut f = |x: f64| (-(ga * lncosh(x - zj)) - gb * lncosh(x - zi)).exp();
    let (lo, hi) = sep.window(j);
    let q = integrate_window(&mut f, lo, hi, &[zi.min(zj), zi.max(zj)], ga + gb)?;
    let scale = params.kappa0.powf(alpha + beta);
    let q = Quad { value: q.value * scale, error: q.error * scale };
    let mut model = 0.0;
    for nb in [j.wrapping_sub(1), j + 1] {
        if nb < sep.k() {
            let gap = (sep.centers[nb] - zj).abs();
            model += if alpha == beta {
                gap * (-gb * gap).exp()
            } else if alpha > beta {
                (-gb * gap).exp()
            } else {
                (-0.5 * (ga + gb) * gap).exp()
            };
        }
    }
    Ok(Entry::new(q, model))
}

/// `A_{i,j,l} = int over window j of tanh(xi - zeta_i) bar kappa_i bar kappa_j^{p-1} bar kappa_l dxi`.
pub fn a_ijl(i: usize, j: usize, l: usize, sep: &Separators, params: &Params) -> Result<Quad> {
    sep.check(&[i, j, l])?;
    if l == j {
        return Err(Error::Input("A_{i,j,l} needs l != j".into()));
    }
    let b = params.b();
    let p = params.p;
    let (zi, zj, zl) = (sep.centers[i], sep.centers[j], sep.centers[l]);
    let mut f =
        |x: f64| (x - zi).tanh() * (-(b * lncosh(x - zi)) - (p - 1.0) * b * lncosh(x - zj) - b * lncosh(x - zl)).exp();
    let (lo, hi) = sep.window(j);
    let mut cs = vec![zi, zj, zl];
    cs.sort_by(f64::total_cmp);
    let q = integrate_window(&mut f, lo, hi, &cs, (p + 1.0) * b)?;
    let scale = params.kappa0.powf(p + 1.0);
    Ok(Quad { value: q.value * scale, error: q.error * scale })
}

/// `c1''' = 2^{2/(p-1)} kappa0^{p+1} int cosh^{-2p/(p-1)}(z) tanh(z) e^{2z/(p-1)} dz`.
pub fn c1_triple(params: &Params) -> Result<f64> {
    let b = params.b();
    let p = params.p;
    // Positive form over the half-line: tanh(z) (e^{bz} - e^{-bz}) sech^{pb}(z).
    let mut f = |z: f64| z.tanh() * 2.0 * (b * z).sinh() * sech_pow(z, p * b);
    let q = integrate_window(&mut f, 0.0, f64::INFINITY, &[0.0], (p - 1.0) * b)?;
    Ok(2f64.powf(b) * params.kappa0.powf(p + 1.0) * q.value)
}

/// `B_{i,j,l} = int over window j of bar kappa_i bar kappa_j^{p - pbar} bar kappa_l^{pbar} dxi`, `pbar = min(p, 2)`.
pub fn b_ijl(i: usize, j: usize, l: usize, sep: &Separators, params: &Params) -> Result<Quad> {
    sep.check(&[i, j, l])?;
    if l == j {
        return Err(Error::Input("B_{i,j,l} needs l != j".into()));
    }
    let b = params.b();
    let p = params.p;
    let pb = p.min(2.0);
    let (zi, zj, zl) = (sep.centers[i], sep.centers[j], sep.centers[l]);
    let mut f = |x: f64| (-(b * lncosh(x - zi)) - (p - pb) * b * lncosh(x - zj) - pb * b * lncosh(x - zl)).exp();
    let (lo, hi) = sep.window(j);
    let mut cs = vec![zi, zj, zl];
    cs.sort_by(f64::total_cmp);
    let q = integrate_window(&mut f, lo, hi, &cs, (p + 1.0) * b)?;
    let scale = params.kappa0.powf(p + 1.0);
    Ok(Quad { value: q.value * scale, error: q.error * scale })
}

/// `bar K(xi) = sum_j e_j cosh^{-2/(p-1)}(xi - zeta_j)`.
pub fn k_bar(xi: f64, centers: &[f64], signs: &[f64], params: &Params) -> f64 {
    let b = params.b();
    centers.iter().zip(signs).map(|(z, e)| e * sech_pow(xi - z, b)).sum()
}

/// Zeros of `bar K` between neighbors of opposite sign, by bisection.
pub fn k_bar_zeros(sep: &Separators, signs: &[f64], params: &Params) -> Vec<f64> {
    let c = &sep.centers;
    let mut zeros = Vec::new();
    for j in 0..c.len().saturating_sub(1) {
        if signs[j] * signs[j + 1] >= 0.0 {
            continue;
        }
        let (mut a, mut b) = (c[j], c[j + 1]);
        let fa = k_bar(a, c, signs, params);
        if fa * k_bar(b, c, signs, params) > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if k_bar(m, c, signs, params) * fa > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        zeros.push(0.5 * (a + b));
    }
    zeros
}

/// `J_i = kappa0^{p-1} int cosh^{-2/(p-1)}(xi - zeta_i) |bar K(xi)|^{p-2} dxi`.
///
/// For `p < 2` the integrand is singular at zeros of `bar K`; each piece adjacent
/// to a zero `z` is mapped by `xi = z +- h t^m` with `m = ceil(1/(p-1))`, which
/// turns `|xi - z|^{p-2} dxi` into a bounded density in `t`.
pub fn j_i(i: usize, sep: &Separators, signs: &[f64], params: &Params, rel_tol: f64) -> Result<Quad> {
    sep.check(&[i])?;
    if signs.len() != sep.k() || signs.iter().any(|s| s.abs() != 1.0) {
        return Err(Error::Input(format!("signs must be +-1, one per center: {signs:?}")));
    }
    let b = params.b();
    let p = params.p;
    let c = &sep.centers;
    let zi = c[i];
    let integrand = |x: f64| sech_pow(x - zi, b) * k_bar(x, c, signs, params).abs().powf(p - 2.0);
    let reach = 60.0 / 2.0;
    let zeros = if p < 2.0 { k_bar_zeros(sep, signs, params) } else { Vec::new() };
    let mut pts: Vec<(f64, bool)> = vec![(c[0] - reach, false)];
    pts.extend(c.iter().map(|&z| (z, false)));
    pts.extend(zeros.iter().map(|&z| (z, true)));
    pts.push((c[c.len() - 1] + reach, false));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = (1.0 / (p - 1.0)).ceil().max(1.0);
    let mut total = Quad { value: 0.0, error: 0.0 };
    for w in pts.windows(2) {
        let ((a, za), (bb, zb)) = (w[0], w[1]);
        if bb <= a {
            continue;
        }
        let res = if za || zb {
            let mid = 0.5 * (a + bb);
            let mut acc = Quad { value: 0.0, error: 0.0 };
            for (z, other, is_zero) in [(a, mid, za), (bb, mid, zb)] {
                let h = other - z;
                let q = if is_zero {
                    let mut g = |t: f64| {
                        let tm = t.powf(m);
                        integrand(z + h * tm) * h.abs() * m * t.powf(m - 1.0)
                    };
                    integrate(&mut g, 0.0, 1.0, ABS, rel_tol)
                } else {
                    integrate(integrand, z.min(other), z.max(other), ABS, rel_tol)
                };
                match q {
                    Ok(q) => {
                        acc.value += q.value;
                        acc.error += q.error;
                    }
                    Err(e) => return Err(Error::Resolution(format!("J_{} piece near xi={z}: {e}", i + 1))),
                }
            }
            Ok(acc)
        } else {
            integrate(integrand, a, bb, ABS, rel_tol)
        };
        let q = res?;
        total.value += q.value;
        total.error += q.error;
    }
    let scale = params.kappa0.powf(p - 1.0);
    Ok(Quad { value: total.value * scale, error: total.error * scale })
}

/// One line of the integral table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub name: String,
    pub parameters: String,
    pub gap: f64,
    pub numeric: f64,
    pub model: f64,
    pub ratio: f64,
}

/// The table of soliton integrals over a sweep of gaps, for three equally spaced
/// alternating solitons where three centers are needed.
pub fn table(params: &Params, gaps: &[f64]) -> Result<Vec<TableRow>> {
    let p = params.p;
    let b = params.b();
    let c1t = c1_triple(params)?;
    let mut rows = Vec::new();
    rows.push(TableRow {
        name: "c1_triple".into(),
        parameters: format!("p={p}"),
        gap: f64::NAN,
        numeric: c1t,
        model: c1t,
        ratio: 1.0,
    });
    for &gap in gaps {
        for (al, be) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (p, 1.0)] {
            let e = i1(al, be, gap, params)?;
            rows.push(TableRow {
                name: "I1".into(),
                parameters: format!("alpha={al};beta={be}"),
                gap,
                numeric: e.numeric,
                model: e.model,
                ratio: e.ratio,
            });
        }
        let sep = Separators::new(&[-gap, 0.0, gap])?;
        for (al, be) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)] {
            let e = i2(al, be, 2, 1, &sep, params)?;
            rows.push(TableRow {
                name: "I2".into(),
                parameters: format!("alpha={al};beta={be};i=3;j=2"),
                gap,
                numeric: e.numeric,
                model: e.model,
                ratio: e.ratio,
            });
        }
        let model = (-b * gap).exp();
        for l in [0usize, 2] {
            let a = a_ijl(1, 1, l, &sep, params)?;
            rows.push(TableRow {
                name: "A".into(),
                parameters: format!("i=2;j=2;l={}", l + 1),
                gap,
                numeric: a.value,
                model: if l > 1 { c1t * model } else { -c1t * model },
                ratio: a.value / (c1t * model),
            });
        }
        let bq = b_ijl(0, 1, 2, &sep, params)?;
        rows.push(TableRow {
            name: "B".into(),
            parameters: "i=1;j=2;l=3".into(),
            gap,
            numeric: bq.value,
            model,
            ratio: bq.value / model,
        });
        let signs = [1.0, -1.0, 1.0];
        for i in 0..3 {
            let q = j_i(i, &sep, &signs, params, 1e-10)?;
            rows.push(TableRow {
                name: "J".into(),
                parameters: format!("i={};signs=+-+", i + 1),
                gap,
                numeric: q.value,
                model: f64::NAN,
                ratio: f64::NAN,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pr(p: f64) -> Params {
        Params::signed(p).unwrap()
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
    }

    #[test]
    fn kronrod_known_integrals() {
        let q = integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-300, 1e-13).unwrap();
        assert!((q.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-300, 1e-10).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn i1_zero_gap_p3() {
        let p = pr(3.0);
        let e = i1(1.0, 1.0, 0.0, &p).unwrap();
        assert!((e.numeric - 2.0 * p.kappa0 * p.kappa0).abs() < 1e-11);
    }

    #[test]
    fn i1_closed_form_p3() {
        // int sech z sech(z + D) dz = 2 D / sinh D.
        let p = pr(3.0);
        for &d in &[0.5, 3.0, 10.0, 14.0] {
            let e = i1(1.0, 1.0, d, &p).unwrap();
            let exact = 2.0 * p.kappa0 * p.kappa0 * d / d.sinh();
            assert!((e.numeric / exact - 1.0).abs() < 1e-10, "{d}");
        }
    }

    #[test]
    fn i1_ratio_converges() {
        let p = pr(3.0);
        for (a, b) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (3.0, 1.0)] {
            let r10 = i1(a, b, 10.0, &p).unwrap().ratio;
            let r14 = i1(a, b, 14.0, &p).unwrap().ratio;
            assert!((r10 / r14 - 1.0).abs() < 0.03, "{a} {b}: {r10} {r14}");
        }
    }

    #[test]
    fn separators_match_soliton_values() {
        let p = pr(3.0);
        let sep = Separators::new(&[-2.0, 0.5, 3.0]).unwrap();
        for j in 0..2 {
            let y = sep.y[j + 1];
            let dj = -sep.centers[j].tanh();
            let dk = -sep.centers[j + 1].tanh();
            let a = crate::profiles::kappa(dj, y, &p).unwrap();
            let b = crate::profiles::kappa(dk, y, &p).unwrap();
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!(Separators::new(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn a_signs_and_constant() {
        for &pp in &[2.0, 3.0, 5.0] {
            let p = pr(pp);
            let c = c1_triple(&p).unwrap();
            assert!(c > 0.0);
            let gap = 12.0;
            let sep = Separators::new(&[-gap, 0.0, gap]).unwrap();
            let up = a_ijl(1, 1, 2, &sep, &p).unwrap().value;
            let down = a_ijl(1, 1, 0, &sep, &p).unwrap().value;
            assert!(up > 0.0 && down < 0.0);
            let model = (-p.b() * gap).exp();
            assert!((up / model / c - 1.0).abs() < 0.03, "p={pp}: {}", up / model / c);
        }
    }

    #[test]
    fn j_same_sign_bounded_and_refines() {
        let p = pr(1.5);
        let sep = Separators::new(&[0.0, 8.0]).unwrap();
        let q = j_i(0, &sep, &[1.0, 1.0], &p, 1e-10).unwrap();
        assert!(q.value > 0.0 && q.value < 2.0 * p.kappa0.powf(0.5) + 1e-9);
        let vals: Vec<f64> =
            [1e-6, 1e-8, 1e-10].iter().map(|&t| j_i(0, &sep, &[1.0, -1.0], &p, t).unwrap().value).collect();
        assert!(vals.iter().all(|v| v.is_finite() && *v > 0.0));
        for w in vals.windows(2) {
            assert!((w[0] / w[1] - 1.0).abs() < 0.01, "{vals:?}");
        }
    }

    proptest! {
        #[test]
        fn table_entries_are_translation_invariant(shift in -20.0f64..20.0, g1 in 4.0f64..10.0, g2 in 4.0f64..10.0) {
            let p = pr(3.0);
            let c = [0.0, g1, g1 + g2];
            let s = [shift, g1 + shift, g1 + g2 + shift];
            let a = Separators::new(&c).unwrap();
            let b = Separators::new(&s).unwrap();
            let x = a_ijl(1, 1, 2, &a, &p).unwrap().value;
            let y = a_ijl(1, 1, 2, &b, &p).unwrap().value;
            prop_assert!((x / y - 1.0).abs() < 1e-9);
            let x = i2(1.0, 2.0, 0, 1, &a, &p).unwrap().numeric;
            let y = i2(1.0, 2.0, 0, 1, &b, &p).unwrap().numeric;
            prop_assert!((x / y - 1.0).abs() < 1e-9);
        }

        #[test]
        fn i1_is_symmetric_in_its_exponents(a in 0.5f64..3.0, b in 0.5f64..3.0, d in 0.0f64..12.0) {
            let p = pr(3.0);
            let x = i1(a, b, d, &p).unwrap().numeric;
            let y = i1(b, a, d, &p).unwrap().numeric;
            prop_assert!((x / y - 1.0).abs() < 1e-9);
        }
    }
}
