//! Toda system for the soliton centers
//!
//! ```text
//! zeta_i' = c1 (-e_{i-1} e_i exp(-2(zeta_i - zeta_{i-1})/(p-1))
//!               + e_i e_{i+1} exp(-2(zeta_{i+1} - zeta_i)/(p-1))) + c1 R_i
//! ```
//!
//! with `e_0 = e_{k+1} = 0`.

use crate::error::{Error, Result};
use crate::linalg::fit_line;
use crate::ode::{self, Flow};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

/// Small parameter in the weighted gap sum.
pub const EPS0: f64 = 1e-3;

/// Correction term `R_i(s, zeta)`, expected to satisfy `|R_i| <= C J^{1+delta}`.
pub trait Perturbation: Send + Sync {
    fn eval(&self, s: f64, zeta: &[f64], p: f64, out: &mut [f64]);
}

/// `R_i = (-1)^i C J^{1+delta0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stress {
    pub c: f64,
    pub delta0: f64,
}

impl Perturbation for Stress {
    fn eval(&self, _s: f64, zeta: &[f64], p: f64, out: &mut [f64]) {
        let m = self.c * interaction(zeta, p).powf(1.0 + self.delta0);
        for (i, o) in out.iter_mut().enumerate() {
            *o = if i % 2 == 0 { m } else { -m };
        }
    }
}

#[derive(Clone)]
pub struct TodaState {
    pub s: f64,
    pub zeta: Vec<f64>,
    /// `e_i`, each `+1` or `-1`.
    pub signs: Vec<f64>,
    pub c1: f64,
    pub p: f64,
    pub perturbation: Option<Arc<dyn Perturbation>>,
}

impl fmt::Debug for TodaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TodaState")
            .field("s", &self.s)
            .field("zeta", &self.zeta)
            .field("signs", &self.signs)
            .field("c1", &self.c1)
            .field("p", &self.p)
            .field("perturbed", &self.perturbation.is_some())
            .finish()
    }
}

impl TodaState {
    pub fn new(s: f64, zeta: Vec<f64>, signs: Vec<f64>, c1: f64, p: f64) -> Result<Self> {
        if zeta.is_empty() || zeta.len() != signs.len() {
            return Err(Error::Input(format!("need k >= 1 centers with one sign each ({} vs {})", zeta.len(), signs.len())));
        }
        if signs.iter().any(|e| e.abs() != 1.0) {
            return Err(Error::Input(format!("signs must be +-1: {signs:?}")));
        }
        if zeta.iter().any(|z| !z.is_finite()) || zeta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!("centers must be finite and ascending: {zeta:?}")));
        }
        if !(c1 > 0.0) || !(p > 1.0) {
            return Err(Error::Input(format!("need c1 > 0 and p > 1 (got {c1}, {p})")));
        }
        Ok(TodaState { s, zeta, signs, c1, p, perturbation: None })
    }

    /// Alternating signs starting with `+1`.
    pub fn alternating(s: f64, zeta: Vec<f64>, c1: f64, p: f64) -> Result<Self> {
        let signs = (0..zeta.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Self::new(s, zeta, signs, c1, p)
    }

    /// Equally spaced centers, symmetric about `0`.
    pub fn equal_gaps(s: f64, k: usize, gap: f64, signs: Vec<f64>, c1: f64, p: f64) -> Result<Self> {
        let zeta = (0..k).map(|i| (i as f64 - 0.5 * (k as f64 - 1.0)) * gap).collect();
        Self::new(s, zeta, signs, c1, p)
    }

    pub fn with_perturbation(mut self, r: Arc<dyn Perturbation>) -> Self {
        self.perturbation = Some(r);
        self
    }

    pub fn k(&self) -> usize {
        self.zeta.len()
    }
}

/// `J = sum_j exp(-2(zeta_{j+1} - zeta_j)/(p-1))`.
pub fn interaction(zeta: &[f64], p: f64) -> f64 {
    let b = 2.0 / (p - 1.0);
    zeta.windows(2).map(|w| (-b * (w[1] - w[0])).exp()).sum()
}

fn rhs_into(s: f64, zeta: &[f64], signs: &[f64], c1: f64, p: f64, pert: Option<&dyn Perturbation>, out: &mut [f64]) {
    let k = zeta.len();
    let b = 2.0 / (p - 1.0);
    for i in 0..k {
        let mut v = 0.0;
        if i > 0 {
            v -= signs[i - 1] * signs[i] * (-b * (zeta[i] - zeta[i - 1])).exp();
        }
        if i + 1 < k {
            v += signs[i] * signs[i + 1] * (-b * (zeta[i + 1] - zeta[i])).exp();
        }
        out[i] = c1 * v;
    }
    if let Some(r) = pert {
        let mut extra = vec![0.0; k];
        r.eval(s, zeta, p, &mut extra);
        for i in 0..k {
            out[i] += c1 * extra[i];
        }
    }
}

/// `zeta'` at the current state.
pub fn toda_rhs(state: &TodaState) -> Vec<f64> {
    let mut out = vec![0.0; state.k()];
    rhs_into(state.s, &state.zeta, &state.signs, state.c1, state.p, state.perturbation.as_deref(), &mut out);
    out
}

/// Gaps and their weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    /// `L_i = zeta_{i+1} - zeta_i`.
    pub l: Vec<f64>,
    /// `r = floor(k/2)`.
    pub r: usize,
    /// `S_j = sum_{i=j}^{k-j} L_i`, `j = 1..r`.
    pub s_j: Vec<f64>,
    /// `sigma = sum_j eps0^{j-1} S_j`; `None` for `k < 2`.
    pub sigma: Option<f64>,
    /// `max L_i - min L_i`.
    pub lbar: f64,
}

impl GapVector {
    pub fn from_centers(zeta: &[f64]) -> Self {
        let l: Vec<f64> = zeta.windows(2).map(|w| w[1] - w[0]).collect();
        let k = zeta.len();
        let r = k / 2;
        let s_j = weighted_sums(&l, k);
        let sigma = if k >= 2 { Some(s_j.iter().enumerate().map(|(j, s)| EPS0.powi(j as i32) * s).sum()) } else { None };
        let lbar = if l.is_empty() {
            0.0
        } else {
            l.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - l.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        GapVector { l, r, s_j, sigma, lbar }
    }
}

/// `S_j` for `j = 1..floor(k/2)` from gaps `L_1..L_{k-1}`.
fn weighted_sums(l: &[f64], k: usize) -> Vec<f64> {
    (1..=k / 2).map(|j| (j..=k - j).map(|i| l[i - 1]).sum()).collect()
}

/// `sigma'` from the exact right side.
pub fn sigma_prime(state: &TodaState) -> Option<f64> {
    let k = state.k();
    if k < 2 {
        return None;
    }
    let z = toda_rhs(state);
    let lp: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    Some(weighted_sums(&lp, k).iter().enumerate().map(|(j, s)| EPS0.powi(j as i32) * s).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TodaRecord {
    pub s: f64,
    pub zeta: Vec<f64>,
    pub gaps: GapVector,
    pub j: f64,
    /// `(zeta_1 + ... + zeta_k)/k`.
    pub mean: f64,
}

impl TodaRecord {
    fn new(s: f64, zeta: &[f64], p: f64) -> Self {
        TodaRecord {
            s,
            zeta: zeta.to_vec(),
            gaps: GapVector::from_centers(zeta),
            j: interaction(zeta, p),
            mean: zeta.iter().sum::<f64>() / zeta.len() as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TodaTrajectory {
    pub records: Vec<TodaRecord>,
    pub signs: Vec<f64>,
    pub c1: f64,
    pub p: f64,
    pub final_state: TodaState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaControls {
    pub rtol: f64,
    pub atol: f64,
    /// Output times per decade of `s` (log-spaced).
    pub outputs_per_decade: usize,
    pub max_steps: usize,
}

impl Default for TodaControls {
    fn default() -> Self {
        TodaControls { rtol: 1e-10, atol: 1e-12, outputs_per_decade: 40, max_steps: 10_000_000 }
    }
}

/// Integrates to `s_end`, recording at log-spaced times. A gap reaching zero is a
/// collision error.
pub fn integrate_toda(state: &TodaState, s_end: f64, ctl: &TodaControls) -> Result<TodaTrajectory> {
    if !(s_end > state.s) {
        return Err(Error::Input(format!("s_end={s_end} must exceed s={}", state.s)));
    }
    let k = state.k();
    let (signs, c1, p) = (state.signs.clone(), state.c1, state.p);
    let pert = state.perturbation.clone();
    let mut sys = |s: f64, z: &[f64], dz: &mut [f64]| rhs_into(s, z, &signs, c1, p, pert.as_deref(), dz);
    let mut y = state.zeta.clone();
    let mut records = vec![TodaRecord::new(state.s, &y, p)];
    let times = output_times(state.s, s_end, ctl.outputs_per_decade.max(1));
    let mut s = state.s;
    let mut h0 = 0.0;
    for &t in &times {
        let oc = ode::Controls {
            rtol: ctl.rtol,
            atol: ctl.atol,
            h0,
            h_min: 1e-14 * t.abs().max(1.0),
            h_max: f64::INFINITY,
            max_steps: ctl.max_steps,
        };
        let mut hit: Option<(f64, usize, f64)> = None;
        let sum = ode::integrate(&mut sys, s, &mut y, t, &oc, |ts, z| {
            for i in 0..k.saturating_sub(1) {
                let gap = z[i + 1] - z[i];
                if !(gap > 0.0) {
                    hit = Some((ts, i, gap));
                    return Flow::Stop;
                }
            }
            Flow::Continue
        })?;
        if let Some((s_hit, index, gap)) = hit {
            return Err(Error::Collision { s: s_hit, index, gap });
        }
        s = sum.t;
        h0 = sum.h_next;
        records.push(TodaRecord::new(s, &y, p));
    }
    let mut final_state = state.clone();
    final_state.s = s;
    final_state.zeta = y;
    Ok(TodaTrajectory { records, signs: state.signs.clone(), c1, p, final_state })
}

fn output_times(s0: f64, s_end: f64, per_decade: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let base = s0.max(1.0);
    let ratio = 10f64.powf(1.0 / per_decade as f64);
    let mut t = base;
    loop {
        t *= ratio;
        if t >= s_end * (1.0 - 1e-12) {
            break;
        }
        if t > s0 {
            out.push(t);
        }
    }
    out.push(s_end);
    out
}

/// Exact gap of the unperturbed alternating pair:
/// `e^{2L/(p-1)} = e^{2L0/(p-1)} + 4 c1 (s - s0)/(p-1)`.
pub fn closed_form_k2(s: f64, l0: f64, s0: f64, c1: f64, p: f64) -> Result<f64> {
    if !(l0 > 0.0) {
        return Err(Error::Input(format!("L0 must be positive, got {l0}")));
    }
    let b = 2.0 / (p - 1.0);
    let x = 2.0 * b * c1 * (s - s0) * (-b * l0).exp();
    if x <= -1.0 {
        return Err(Error::Domain(format!("closed form undefined at s={s}")));
    }
    Ok(l0 + x.ln_1p() / b)
}

/// Least-squares fit `zeta_i(s) ~ a_i log s + b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquidFit {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `(i - (k+1)/2)(p-1)/2`.
    pub expected: Vec<f64>,
    /// `|a_i - expected_i| / ((p-1)/2)`.
    pub deviation: Vec<f64>,
    /// Largest fit residual over all centers.
    pub residual_max: f64,
    pub samples: usize,
}

pub fn fit_equid(traj: &TodaTrajectory, s_min: f64, s_max: f64) -> Result<EquidFit> {
    let recs: Vec<&TodaRecord> = traj.records.iter().filter(|r| r.s >= s_min && r.s <= s_max).collect();
    if recs.len() < 3 || !(s_max / s_min >= 2.0) {
        return Err(Error::Fit(format!("{} samples in [{s_min}, {s_max}] are not enough", recs.len())));
    }
    let k = traj.signs.len();
    let half = 0.5 * (traj.p - 1.0);
    let x: Vec<f64> = recs.iter().map(|r| r.s.ln()).collect();
    let mut fit = EquidFit { a: vec![], b: vec![], expected: vec![], deviation: vec![], residual_max: 0.0, samples: recs.len() };
    for i in 0..k {
        let y: Vec<f64> = recs.iter().map(|r| r.zeta[i]).collect();
        let lf = fit_line(&x, &y)?;
        let e = ((i + 1) as f64 - 0.5 * (k as f64 + 1.0)) * half;
        let worst = x.iter().zip(&y).map(|(a, b)| (b - lf.slope * a - lf.intercept).abs()).fold(0.0, f64::max);
        fit.residual_max = fit.residual_max.max(worst);
        fit.deviation.push((lf.slope - e).abs() / half);
        fit.a.push(lf.slope);
        fit.b.push(lf.intercept);
        fit.expected.push(e);
    }
    Ok(fit)
}

/// Slope of `L_i` against `log s` for each gap.
pub fn fit_gap_slopes(traj: &TodaTrajectory, s_min: f64, s_max: f64) -> Result<Vec<f64>> {
    let recs: Vec<&TodaRecord> = traj.records.iter().filter(|r| r.s >= s_min && r.s <= s_max).collect();
    if recs.len() < 3 {
        return Err(Error::Fit(format!("{} samples in [{s_min}, {s_max}] are not enough", recs.len())));
    }
    let x: Vec<f64> = recs.iter().map(|r| r.s.ln()).collect();
    (0..traj.signs.len().saturating_sub(1))
        .map(|i| {
            let y: Vec<f64> = recs.iter().map(|r| r.gaps.l[i]).collect();
            fit_line(&x, &y).map(|f| f.slope)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapBalance {
    /// `max_{s >= s_from} max_i |L_i - L_1|`.
    pub max_spread: f64,
    /// Range over `s >= s_from` of `sigma' / (c1 sum_j exp(-2 L_j/(p-1)))`.
    pub sandwich_min: f64,
    pub sandwich_max: f64,
    /// `eps0^{r-1}/2`, the lower end of the sandwich.
    pub lower: f64,
    /// Upper end of the sandwich.
    pub upper: f64,
    pub holds: bool,
}

pub fn gap_balance(traj: &TodaTrajectory, s_from: f64) -> Result<GapBalance> {
    let k = traj.signs.len();
    if k < 2 {
        return Err(Error::Input("gap balance needs k >= 2".into()));
    }
    let b = 2.0 / (traj.p - 1.0);
    let mut spread: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut n = 0;
    for r in traj.records.iter().filter(|r| r.s >= s_from) {
        n += 1;
        let l1 = r.gaps.l[0];
        spread = r.gaps.l.iter().fold(spread, |m, l| m.max((l - l1).abs()));
        let st = TodaState { s: r.s, zeta: r.zeta.clone(), perturbation: None, ..traj.final_state.clone() };
        let sp = sigma_prime(&st).unwrap_or(0.0);
        let denom: f64 = r.gaps.l.iter().map(|l| (-b * l).exp()).sum();
        let q = sp / (traj.c1 * denom);
        lo = lo.min(q);
        hi = hi.max(q);
    }
    if n == 0 {
        return Err(Error::Input(format!("no records after s={s_from}")));
    }
    let lower = 0.5 * EPS0.powi(k as i32 / 2 - 1);
    let upper = 3.0;
    Ok(GapBalance { max_spread: spread, sandwich_min: lo, sandwich_max: hi, lower, upper, holds: lo >= lower && hi <= upper })
}

/// Least-squares `c1` from sampled centers: matches centered differences of
/// `zeta` against the unit-coupling right side.
pub fn estimate_c1(samples: &[(f64, Vec<f64>)], signs: &[f64], p: f64) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::Fit("need at least three samples".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    let k = signs.len();
    let mut unit = vec![0.0; k];
    for w in samples.windows(3) {
        let (s0, z0) = (&w[0].0, &w[0].1);
        let (s1, z1) = (&w[1].0, &w[1].1);
        let (s2, z2) = (&w[2].0, &w[2].1);
        if z0.len() != k || z1.len() != k || z2.len() != k {
            return Err(Error::Input("sample size does not match the signs".into()));
        }
        rhs_into(*s1, z1, signs, 1.0, p, None, &mut unit);
        for i in 0..k {
            let d = (z2[i] - z0[i]) / (s2 - s0);
            num += d * unit[i];
            den += unit[i] * unit[i];
        }
    }
    if !(den > 0.0) {
        return Err(Error::Fit("right side vanishes on all samples".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_center_is_still() {
        let st = TodaState::alternating(0.0, vec![0.3], 1.0, 3.0).unwrap();
        assert_eq!(toda_rhs(&st), vec![0.0]);
    }

    #[test]
    fn pair_and_symmetric_triple() {
        let st = TodaState::alternating(0.0, vec![0.0, 4.0], 0.7, 3.0).unwrap();
        let r = toda_rhs(&st);
        let e = 0.7 * (-4.0f64).exp();
        assert!((r[0] + e).abs() < 1e-16 && (r[1] - e).abs() < 1e-16);
        let st = TodaState::alternating(0.0, vec![-5.0, 0.0, 5.0], 1.0, 2.0).unwrap();
        assert_eq!(toda_rhs(&st)[1], 0.0);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_k2(5.0, 3.0, 5.0, 1.0, 3.0).unwrap(), 3.0);
        // L - (p-1)/2 log s -> (p-1)/2 log(4 c1/(p-1))
        for &p in &[2.0, 3.0, 5.0] {
            let s = 1e12;
            let l = closed_form_k2(s, 1.0, 0.0, 1.3, p).unwrap();
            let lim = 0.5 * (p - 1.0) * (4.0 * 1.3 / (p - 1.0)).ln();
            assert!((l - 0.5 * (p - 1.0) * s.ln() - lim).abs() < 1e-9, "{p}");
        }
    }

    #[test]
    fn pair_matches_closed_form() {
        for &p in &[2.0, 3.0] {
            let st = TodaState::alternating(10.0, vec![0.0, 3.0], 1.0, p).unwrap();
            let tr = integrate_toda(&st, 1e4, &TodaControls::default()).unwrap();
            for r in &tr.records {
                let exact = closed_form_k2(r.s, 3.0, 10.0, 1.0, p).unwrap();
                assert!((r.gaps.l[0] / exact - 1.0).abs() < 1e-8, "p={p} s={}", r.s);
            }
        }
    }

    #[test]
    fn same_signs_collide() {
        let st = TodaState::new(0.0, vec![0.0, 4.0], vec![1.0, 1.0], 1.0, 3.0).unwrap();
        match integrate_toda(&st, 1e6, &TodaControls::default()) {
            Err(Error::Collision { index: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_vector_sigma() {
        let g = GapVector::from_centers(&[0.0, 1.0, 3.0, 6.0, 10.0]);
        assert_eq!(g.l, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.r, 2);
        assert_eq!(g.s_j, vec![10.0, 5.0]);
        assert!((g.sigma.unwrap() - (10.0 + EPS0 * 5.0)).abs() < 1e-15);
        assert_eq!(g.lbar, 3.0);
        assert_eq!(GapVector::from_centers(&[1.0]).sigma, None);
    }

    #[test]
    fn estimate_c1_recovers_coupling() {
        let st = TodaState::alternating(1.0, vec![-2.0, 0.0, 2.5], 0.37, 3.0).unwrap();
        let tr = integrate_toda(&st, 100.0, &TodaControls { outputs_per_decade: 400, ..Default::default() }).unwrap();
        let samples: Vec<(f64, Vec<f64>)> = tr.records.iter().map(|r| (r.s, r.zeta.clone())).collect();
        let c = estimate_c1(&samples, &tr.signs, 3.0).unwrap();
        assert!((c / 0.37 - 1.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn stress_perturbation_is_bounded_by_contract() {
        let r = Stress { c: 2.0, delta0: 0.5 };
        let z = [0.0, 3.0, 7.0];
        let mut out = [0.0; 3];
        r.eval(0.0, &z, 3.0, &mut out);
        let j = interaction(&z, 3.0);
        assert!(out.iter().all(|v| v.abs() <= 2.0 * j.powf(1.5) + 1e-18));
    }

    proptest! {
        #[test]
        fn alternating_mean_is_conserved(g1 in 1.0f64..6.0, g2 in 1.0f64..6.0, g3 in 1.0f64..6.0, p in 1.5f64..4.0) {
            let st = TodaState::alternating(1.0, vec![0.0, g1, g1 + g2, g1 + g2 + g3], 1.0, p).unwrap();
            let tr = integrate_toda(&st, 200.0, &TodaControls::default()).unwrap();
            let m0 = tr.records[0].mean;
            for r in &tr.records {
                prop_assert!((r.mean - m0).abs() < 1e-8);
            }
            let rhs = toda_rhs(&st);
            prop_assert!(rhs.iter().sum::<f64>().abs() < 1e-12);
        }

        #[test]
        fn alternating_gaps_eventually_grow(u1 in 0.5f64..2.0, u2 in 0.5f64..2.0, p in 1.5f64..4.0) {
            // Gaps with e^{2L/(p-1)} <= e^4, so s >= 1e3 is already late.
            let (g1, g2) = (u1 * (p - 1.0), u2 * (p - 1.0));
            let st = TodaState::alternating(1.0, vec![0.0, g1, g1 + g2], 1.0, p).unwrap();
            let tr = integrate_toda(&st, 1e4, &TodaControls::default()).unwrap();
            let late: Vec<&TodaRecord> = tr.records.iter().filter(|r| r.s >= 1e3).collect();
            for w in late.windows(2) {
                for i in 0..2 {
                    prop_assert!(w[1].gaps.l[i] > w[0].gaps.l[i]);
                }
            }
        }
    }
}
