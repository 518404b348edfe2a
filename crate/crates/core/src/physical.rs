//! Direct solver for `u_tt = u_xx + f(u)` and blow-up curve reconstruction.
//!
//! Blow-up times come from two estimators. The amplitude fit reads
//! `|u|^{-(p-1)/2} ~ c (T - t)` off the node history of a leapfrog run. Cone shooting
//! bisects on `T0`: in the self-similar frame of `(x0, T0)` the solution blows up when
//! `T0 > T(x0)` and decays when `T0 < T(x0)`.

use crate::error::{Error, Result};
use crate::grid::{interp_cubic, XiGrid};
use crate::linalg::fit_line;
use crate::modulation::{count_and_seed, solve_modulation, ModulationControls};
use crate::ode::Flow;
use crate::params::{Params, Variant};
use crate::profiles::WeightedSpace;
use crate::selfsimilar::{evolve_cone, transform_to_cone, ConeGrid, ConeState, ConeTrajectory, EvolveControls, Outcome, StepRecord};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Solution on a uniform grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x_min: f64,
    pub dx: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    /// Nodes that stopped updating at the amplitude ceiling.
    pub frozen: Vec<bool>,
}

impl Snapshot {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Fourth-order `u_x` with one-sided closures.
    pub fn ux(&self) -> Vec<f64> {
        let u = &self.u;
        let n = u.len();
        let c = 1.0 / (12.0 * self.dx);
        let mut out = vec![0.0; n];
        if n < 5 {
            return out;
        }
        out[0] = c * (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]);
        out[1] = c * (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]);
        for j in 2..n - 2 {
            out[j] = c * (u[j - 2] - 8.0 * u[j - 1] + 8.0 * u[j + 1] - u[j + 2]);
        }
        let m = n - 1;
        out[m] = -c * (-25.0 * u[m] + 48.0 * u[m - 1] - 36.0 * u[m - 2] + 16.0 * u[m - 3] - 3.0 * u[m - 4]);
        out[m - 1] = -c * (-3.0 * u[m] - 10.0 * u[m - 1] + 18.0 * u[m - 2] - 6.0 * u[m - 3] + u[m - 4]);
        out
    }

    /// `u` at `x` by cubic interpolation.
    pub fn sample(&self, x: f64) -> f64 {
        interp_cubic(self.x_min, self.dx, &self.u, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Period `n dx`; the last node is followed by the first.
    Periodic,
    /// End nodes keep their initial values. Only valid while the ends are causally
    /// disconnected from the region of interest.
    Fixed,
}

/// Initial data `(u0, u1)` on `x_i = x_min + i dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub x_min: f64,
    pub dx: f64,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub boundary: Boundary,
}

impl CauchyData {
    pub fn new(x_min: f64, dx: f64, u0: Vec<f64>, u1: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if !(dx > 0.0) || u0.len() != u1.len() || u0.len() < 8 {
            return Err(Error::Input(format!("bad Cauchy grid: dx={dx}, {} and {} values", u0.len(), u1.len())));
        }
        if u0.iter().chain(&u1).any(|v| !v.is_finite()) {
            return Err(Error::Input("Cauchy data must be finite".into()));
        }
        Ok(CauchyData { x_min, dx, u0, u1, boundary })
    }

    /// Samples `u0`, `u1` on `[x_min, x_max]` with spacing close to `dx`.
    pub fn from_fn(
        x_min: f64,
        x_max: f64,
        dx: f64,
        u0: impl Fn(f64) -> f64,
        u1: impl Fn(f64) -> f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(x_max > x_min) || !(dx > 0.0) {
            return Err(Error::Input(format!("bad interval [{x_min}, {x_max}] or dx={dx}")));
        }
        let cells = ((x_max - x_min) / dx).round().max(8.0) as usize;
        let h = (x_max - x_min) / cells as f64;
        let n = if boundary == Boundary::Periodic { cells } else { cells + 1 };
        let xs: Vec<f64> = (0..n).map(|i| x_min + i as f64 * h).collect();
        Self::new(x_min, h, xs.iter().map(|&x| u0(x)).collect(), xs.iter().map(|&x| u1(x)).collect(), boundary)
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len() - 1)
    }

    /// The data as a snapshot at `t = 0`.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            t: 0.0,
            x_min: self.x_min,
            dx: self.dx,
            u: self.u0.clone(),
            ut: self.u1.clone(),
            frozen: vec![false; self.len()],
        }
    }

    /// `int (u0'^2/2 + u1^2/2 - F(u0)) dx`; negative values give blow-up.
    pub fn levine_integral(&self, params: &Params) -> f64 {
        let ux = self.snapshot().ux();
        (0..self.len())
            .map(|i| {
                let w = if self.boundary == Boundary::Fixed && (i == 0 || i + 1 == self.len()) { 0.5 } else { 1.0 };
                w * self.dx * (0.5 * ux[i] * ux[i] + 0.5 * self.u1[i] * self.u1[i] - params.prim(self.u0[i]))
            })
            .sum()
    }

    /// Checks that `[a - t_bar, b + t_bar]` stays inside a `Fixed` domain.
    pub fn check_margin(&self, a: f64, b: f64, t_bar: f64) -> Result<()> {
        if self.boundary == Boundary::Periodic {
            return Ok(());
        }
        if a - t_bar < self.x_min + self.dx || b + t_bar > self.x_max() - self.dx {
            return Err(Error::Domain(format!(
                "window [{a}, {b}] with horizon {t_bar} reaches the ends of [{}, {}]",
                self.x_min,
                self.x_max()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeControls {
    pub cfl: f64,
    /// `dt <= nl_factor * (kappa0 / max|u|)^{(p-1)/2}`.
    pub nl_factor: f64,
    /// Freeze ceiling; zero selects `min(1e8, kappa0 (freeze_cells dx)^{-2/(p-1)})`.
    pub ceiling: f64,
    pub freeze_cells: f64,
    pub t_end: f64,
    /// Snapshot spacing in `t`; zero keeps none besides the last.
    pub snapshot_every: f64,
    /// Run until every node of this window is closed.
    pub window: Option<(f64, f64)>,
    pub max_steps: usize,
    /// `false` solves the linear wave equation.
    pub nonlinear: bool,
}

impl Default for PdeControls {
    fn default() -> Self {
        PdeControls {
            cfl: 0.9,
            nl_factor: 0.05,
            ceiling: 0.0,
            freeze_cells: 4.0,
            t_end: 10.0,
            snapshot_every: 0.0,
            window: None,
            max_steps: 2_000_000,
            nonlinear: true,
        }
    }
}

impl PdeControls {
    pub fn resolved_ceiling(&self, dx: f64, params: &Params) -> f64 {
        if self.ceiling > 0.0 {
            self.ceiling
        } else {
            (params.kappa0 * (self.freeze_cells * dx).powf(-params.b())).min(1e8)
        }
    }
}

/// Amplitude history of one node over its last growth decade.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeTrack {
    /// `(t, |u|)` while `|u|` stays above a tenth of the ceiling.
    pub samples: Vec<(f64, f64)>,
    /// First time `|u|` reached a hundredth of the ceiling.
    pub t_cross: Option<f64>,
    /// `|u|` at `t_cross`; above the crossing level when the data start there.
    pub a_cross: f64,
    pub t_freeze: Option<f64>,
    /// Time the node stopped updating because its backward cone closed: `t` passed the
    /// Lipschitz bound plus `freeze_cells dx`.
    pub t_closed: Option<f64>,
    /// `min_f (t_freeze(f) + |x - x_f|)` over frozen nodes, an upper bound for `T(x)` up to
    /// the freeze offset.
    pub lipschitz_bound: Option<f64>,
    /// Minimum of `u` while the node was active.
    pub min_u: f64,
}

/// Leapfrog (kick-drift-kick) integrator with per-node freezing.
#[derive(Debug, Clone)]
pub struct PdeSolver {
    pub params: Params,
    pub ctl: PdeControls,
    pub t: f64,
    pub steps: usize,
    pub x_min: f64,
    pub dx: f64,
    pub boundary: Boundary,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub frozen: Vec<bool>,
    pub closed: Vec<bool>,
    pub tracks: Vec<NodeTrack>,
    pub ceiling: f64,
    acc: Vec<f64>,
}

impl PdeSolver {
    pub fn new(data: &CauchyData, params: &Params, ctl: &PdeControls) -> Self {
        let n = data.len();
        let ceiling = ctl.resolved_ceiling(data.dx, params);
        let mut s = PdeSolver {
            params: *params,
            ctl: *ctl,
            t: 0.0,
            steps: 0,
            x_min: data.x_min,
            dx: data.dx,
            boundary: data.boundary,
            u: data.u0.clone(),
            v: data.u1.clone(),
            frozen: vec![false; n],
            closed: vec![false; n],
            tracks: data.u0.iter().map(|&u| NodeTrack { min_u: u, ..Default::default() }).collect(),
            ceiling,
            acc: vec![0.0; n],
        };
        s.update_flags();
        s.compute_acc();
        s
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    fn active(&self, i: usize) -> bool {
        !(self.frozen[i] || self.closed[i] || (self.boundary == Boundary::Fixed && (i == 0 || i + 1 == self.len())))
    }

    fn compute_acc(&mut self) {
        let n = self.len();
        let inv = 1.0 / (self.dx * self.dx);
        let periodic = self.boundary == Boundary::Periodic;
        for i in 0..n {
            if !self.active(i) {
                self.acc[i] = 0.0;
                continue;
            }
            let (l, r) = if periodic { ((i + n - 1) % n, (i + 1) % n) } else { (i - 1, i + 1) };
            let lap = (self.u[l] - 2.0 * self.u[i] + self.u[r]) * inv;
            self.acc[i] = if self.ctl.nonlinear { lap + self.params.f(self.u[i]) } else { lap };
        }
    }

    /// Largest stable step: CFL and the nonlinear time scale of the largest active value.
    pub fn suggested_dt(&self) -> f64 {
        let umax = (0..self.len()).filter(|&i| self.active(i)).fold(0.0f64, |m, i| m.max(self.u[i].abs()));
        let mut dt = self.ctl.cfl * self.dx;
        if self.ctl.nonlinear && umax > 0.0 {
            dt = dt.min(self.ctl.nl_factor * (self.params.kappa0 / umax).powf(1.0 / self.params.b()));
        }
        dt
    }

    /// One kick-drift-kick step of size `dt`.
    pub fn step_u(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || dt > self.dx * (1.0 + 1e-12) {
            return Err(Error::Input(format!("step {dt} violates 0 < dt <= dx = {}", self.dx)));
        }
        let n = self.len();
        for i in 0..n {
            if self.active(i) {
                self.v[i] += 0.5 * dt * self.acc[i];
                self.u[i] += dt * self.v[i];
            }
        }
        self.compute_acc();
        for i in 0..n {
            if self.active(i) {
                self.v[i] += 0.5 * dt * self.acc[i];
            }
        }
        self.t += dt;
        self.steps += 1;
        for i in 0..n {
            if self.active(i) && !(self.u[i].is_finite() && self.v[i].is_finite()) {
                return Err(Error::Resolution(format!("non-finite value at x={} t={}", self.x(i), self.t)));
            }
        }
        self.update_flags();
        Ok(())
    }

    fn update_flags(&mut self) {
        let n = self.len();
        let (ceil, decade, cross) = (self.ceiling, 0.1 * self.ceiling, 0.01 * self.ceiling);
        let mut changed = false;
        for i in 0..n {
            if !self.active(i) {
                continue;
            }
            let a = self.u[i].abs();
            let tr = &mut self.tracks[i];
            tr.min_u = tr.min_u.min(self.u[i]);
            if a >= cross && tr.t_cross.is_none() {
                tr.t_cross = Some(self.t);
                tr.a_cross = a;
            }
            if a >= decade {
                tr.samples.push((self.t, a));
            } else if !tr.samples.is_empty() {
                tr.samples.clear();
            }
            if a > ceil {
                self.frozen[i] = true;
                tr.t_freeze = Some(self.t);
                changed = true;
            }
        }
        if changed {
            self.update_bounds();
        }
        let slack = self.ctl.freeze_cells * self.dx;
        for i in 0..n {
            if !self.active(i) {
                continue;
            }
            if let Some(b) = self.tracks[i].lipschitz_bound {
                if self.t >= b + slack {
                    self.closed[i] = true;
                    self.tracks[i].t_closed = Some(self.t);
                }
            }
        }
    }

    /// `min_f (t_freeze(f) + |x - x_f|)` over frozen nodes `f`.
    fn update_bounds(&mut self) {
        let n = self.len();
        let laps = if self.boundary == Boundary::Periodic { 2 } else { 1 };
        let mut best: Vec<f64> = (0..n).map(|i| self.tracks[i].t_freeze.unwrap_or(f64::INFINITY)).collect();
        for _ in 0..laps {
            for k in 1..n * laps {
                let (i, j) = (k % n, (k - 1) % n);
                best[i] = best[i].min(best[j] + self.dx);
            }
            for k in (0..n * laps - 1).rev() {
                let (i, j) = (k % n, (k + 1) % n);
                best[i] = best[i].min(best[j] + self.dx);
            }
        }
        for (tr, b) in self.tracks.iter_mut().zip(best) {
            tr.lipschitz_bound = b.is_finite().then_some(b);
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            t: self.t,
            x_min: self.x_min,
            dx: self.dx,
            u: self.u.clone(),
            ut: self.v.clone(),
            frozen: (0..self.len()).map(|i| self.frozen[i] || self.closed[i]).collect(),
        }
    }

    fn window_closed(&self, window: Option<(f64, f64)>) -> bool {
        (0..self.len())
            .filter(|&i| window.is_none_or(|(a, b)| self.x(i) >= a && self.x(i) <= b))
            .all(|i| self.frozen[i] || self.closed[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    WindowClosed,
    TimeLimit,
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub params: Params,
    pub x_min: f64,
    pub dx: f64,
    pub ceiling: f64,
    pub snapshots: Vec<Snapshot>,
    pub tracks: Vec<NodeTrack>,
    pub frozen: Vec<bool>,
    pub t_final: f64,
    pub steps: usize,
    pub stop: StopReason,
}

impl PdeRun {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Node index nearest to `x`.
    pub fn index(&self, x: f64) -> usize {
        (((x - self.x_min) / self.dx).round().max(0.0) as usize).min(self.len() - 1)
    }
}

/// Runs until every node of the window is frozen or closed.
pub fn evolve_u(data: &CauchyData, params: &Params, ctl: &PdeControls) -> Result<PdeRun> {
    let mut solver = PdeSolver::new(data, params, ctl);
    let mut snapshots = Vec::new();
    let mut next_snap = 0.0;
    let stop = loop {
        if ctl.snapshot_every > 0.0 && solver.t >= next_snap - 1e-14 {
            snapshots.push(solver.snapshot());
            next_snap += ctl.snapshot_every;
        }
        if solver.window_closed(ctl.window) {
            break StopReason::WindowClosed;
        }
        if solver.t >= ctl.t_end - 1e-14 {
            break StopReason::TimeLimit;
        }
        if solver.steps >= ctl.max_steps {
            break StopReason::StepLimit;
        }
        let mut dt = solver.suggested_dt().min(ctl.t_end - solver.t);
        if ctl.snapshot_every > 0.0 && next_snap > solver.t {
            dt = dt.min(next_snap - solver.t);
        }
        solver.step_u(dt)?;
    };
    if snapshots.last().map(|s| s.t) != Some(solver.t) {
        snapshots.push(solver.snapshot());
    }
    Ok(PdeRun {
        params: *params,
        x_min: solver.x_min,
        dx: solver.dx,
        ceiling: solver.ceiling,
        snapshots,
        frozen: solver.frozen.clone(),
        t_final: solver.t,
        steps: solver.steps,
        stop,
        tracks: solver.tracks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TMethod {
    /// Linear fit of `|u|^{-(p-1)/2}` over the last amplitude decade.
    Fit,
    /// Crossing of a hundredth of the ceiling plus the ODE time to blow-up from there.
    Threshold,
    /// Cone shooting in self-similar variables.
    Shooting,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TEstimate {
    pub t: f64,
    /// Relative rms residual of the fit (zero for exact linearity).
    pub quality: f64,
    pub method: TMethod,
    pub low_quality: bool,
    /// Distance between the fit and the threshold estimate, or the shooting bracket.
    pub spread: f64,
}

/// Quality above which a fit is flagged.
pub const FIT_QUALITY_LIMIT: f64 = 1e-2;

fn threshold_estimate(track: &NodeTrack, ceiling: f64, params: &Params) -> Option<f64> {
    let a = track.a_cross.max(0.01 * ceiling);
    track.t_cross.map(|t| t + (params.kappa0 / a).powf(1.0 / params.b()))
}

/// Blow-up time of one node from its amplitude history.
pub fn estimate_t(track: &NodeTrack, ceiling: f64, params: &Params) -> TEstimate {
    let thr = threshold_estimate(track, ceiling, params);
    let none = TEstimate { t: f64::NAN, quality: f64::INFINITY, method: TMethod::None, low_quality: true, spread: f64::INFINITY };
    let fallback = |q: f64| match thr {
        Some(t) => TEstimate { t, quality: q, method: TMethod::Threshold, low_quality: true, spread: f64::INFINITY },
        None => none,
    };
    if track.t_freeze.is_none() || track.samples.len() < 4 {
        return fallback(f64::INFINITY);
    }
    let inv_b = 1.0 / params.b();
    let ts: Vec<f64> = track.samples.iter().map(|s| s.0).collect();
    let gs: Vec<f64> = track.samples.iter().map(|s| s.1.powf(-inv_b)).collect();
    let monotone = gs.windows(2).all(|w| w[1] <= w[0]);
    let Ok(fit) = fit_line(&ts, &gs) else { return fallback(f64::INFINITY) };
    let range = gs[0] - gs[gs.len() - 1];
    let quality = if range > 0.0 { fit.rms / range } else { f64::INFINITY };
    if !monotone || !(fit.slope < 0.0) {
        return fallback(quality);
    }
    let t = -fit.intercept / fit.slope;
    let spread = thr.map(|a| (a - t).abs()).unwrap_or(f64::INFINITY);
    TEstimate { t, quality, method: TMethod::Fit, low_quality: quality > FIT_QUALITY_LIMIT, spread }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    R,
    S,
    Unknown,
}

impl PointClass {
    pub fn label(self) -> &'static str {
        match self {
            PointClass::R => "R",
            PointClass::S => "S",
            PointClass::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub estimate: TEstimate,
    pub slope_l: f64,
    pub slope_r: f64,
    pub class: PointClass,
    pub k_est: Option<usize>,
}

impl CurvePoint {
    pub fn t(&self) -> f64 {
        self.estimate.t
    }
}

#[derive(Debug, Clone)]
pub struct BlowupCurve {
    pub points: Vec<CurvePoint>,
    /// Sample spacing.
    pub spacing: f64,
    /// Adjacent pairs `(i, i+1)` with `|dT| > |dx| + 2 (error bound)`.
    pub lipschitz_violations: Vec<usize>,
}

impl BlowupCurve {
    pub fn nearest(&self, x: f64) -> Option<usize> {
        (0..self.points.len()).min_by(|&a, &b| (self.points[a].x - x).abs().total_cmp(&(self.points[b].x - x).abs()))
    }

    /// Indices where `T` has a local maximum; the only places an `S` point can sit.
    pub fn local_maxima(&self) -> Vec<usize> {
        let p = &self.points;
        let ok = |i: usize| p[i].estimate.method != TMethod::None;
        let n = p.len();
        let mut out = Vec::new();
        for i in 0..n {
            if !ok(i) {
                // an unfitted node between fitted ones is a candidate by itself
                let l = (0..i).rev().find(|&j| ok(j));
                let r = (i + 1..n).find(|&j| ok(j));
                if l.is_some() && r.is_some() {
                    out.push(i);
                }
                continue;
            }
            let l = (0..i).rev().find(|&j| ok(j));
            let r = (i + 1..n).find(|&j| ok(j));
            if let (Some(l), Some(r)) = (l, r) {
                if p[i].t() >= p[l].t() && p[i].t() >= p[r].t() {
                    out.push(i);
                }
            }
        }
        out
    }

    pub fn count(&self, class: PointClass) -> usize {
        self.points.iter().filter(|p| p.class == class).count()
    }
}

/// Per-point error bound used by the Lipschitz pass.
fn error_bound(e: &TEstimate, dx: f64) -> f64 {
    match e.method {
        TMethod::Fit => 2.0 * dx + e.spread.min(1.0) * e.quality.min(1.0) + e.quality.min(1.0) * dx,
        TMethod::Shooting => e.spread,
        _ => f64::INFINITY,
    }
}

/// Richardson combination of one-sided secants at `h, 2h, 4h`.
pub fn richardson(s1: f64, s2: f64, s4: f64) -> f64 {
    (8.0 * s1 - 6.0 * s2 + s4) / 3.0
}

/// Slope test for a characteristic point.
pub fn slopes_characteristic(slope_l: f64, slope_r: f64, tau: f64) -> bool {
    slope_l >= 1.0 - tau && slope_l <= 1.0 + tau && slope_r <= -1.0 + tau && slope_r >= -1.0 - tau
}

/// Per-node estimates on `[a, b]` every `stride` nodes, with secant slopes and a
/// classification that uses the curve only: `S` when the slope test holds at offsets
/// `{2,4,8}` samples and every sampled neighbour lies strictly above the chapeau
/// `T(x0) - |x - x0|`, `unknown` otherwise. The energy test needs cone runs; see
/// [`classify_point`].
pub fn scan_blowup_curve(run: &PdeRun, window: (f64, f64), stride: usize, tau: f64) -> BlowupCurve {
    let stride = stride.max(1);
    let (i0, i1) = (run.index(window.0), run.index(window.1));
    let points: Vec<CurvePoint> = (i0..=i1)
        .step_by(stride)
        .map(|i| CurvePoint {
            x: run.x(i),
            estimate: estimate_t(&run.tracks[i], run.ceiling, &run.params),
            slope_l: f64::NAN,
            slope_r: f64::NAN,
            class: PointClass::Unknown,
            k_est: None,
        })
        .collect();
    let spacing = run.dx * stride as f64;
    let mut curve = BlowupCurve { points, spacing, lipschitz_violations: vec![] };
    let n = curve.points.len();
    let ts: Vec<f64> = curve.points.iter().map(|p| p.t()).collect();
    let xs: Vec<f64> = curve.points.iter().map(|p| p.x).collect();
    let ok: Vec<bool> = curve.points.iter().map(|p| p.estimate.method != TMethod::None).collect();
    let usable = |j: usize| ok[j];
    for i in 0..n {
        if !usable(i) {
            continue;
        }
        let sec = |o: usize, left: bool| -> Option<f64> {
            let j = if left { i.checked_sub(o)? } else { i + o };
            (j < n && usable(j)).then(|| if left { (ts[i] - ts[j]) / (o as f64 * spacing) } else { (ts[j] - ts[i]) / (o as f64 * spacing) })
        };
        if let (Some(a), Some(b), Some(c)) = (sec(2, true), sec(4, true), sec(8, true)) {
            curve.points[i].slope_l = richardson(a, b, c);
        }
        if let (Some(a), Some(b), Some(c)) = (sec(2, false), sec(4, false), sec(8, false)) {
            curve.points[i].slope_r = richardson(a, b, c);
        }
        let pt = curve.points[i];
        if slopes_characteristic(pt.slope_l, pt.slope_r, tau) {
            let strict = (0..n).filter(|&j| j != i && usable(j)).all(|j| ts[j] - ts[i] + (xs[j] - pt.x).abs() > 0.0);
            if strict {
                curve.points[i].class = PointClass::S;
            }
        }
    }
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (&curve.points[i], &curve.points[i + 1]);
        let tol = error_bound(&a.estimate, run.dx) + error_bound(&b.estimate, run.dx);
        if (b.t() - a.t()).abs() > (b.x - a.x).abs() + tol {
            curve.lipschitz_violations.push(i);
        }
    }
    curve
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootControls {
    pub intervals: usize,
    /// Length of each frame run in `s`.
    pub ds: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Bisection stops when the bracket is narrower than this.
    pub tol_t: f64,
    pub max_runs: usize,
    /// A run is declared decaying when `sup|w| < decay kappa0` after `s0 + 3`.
    pub decay: f64,
}

impl Default for ShootControls {
    fn default() -> Self {
        ShootControls { intervals: 512, ds: 12.0, rtol: 1e-8, atol: 1e-10, tol_t: 1e-6, max_runs: 80, decay: 1e-2 }
    }
}

impl ShootControls {
    fn evolve(&self, record_every: f64) -> EvolveControls {
        EvolveControls {
            intervals: self.intervals,
            rtol: self.rtol,
            atol: self.atol,
            energy_tol: f64::INFINITY,
            record_every,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Frame blow-up: `T0 > T(x0)`.
    Late,
    /// Decay or bounded: `T0 <= T(x0)` up to the resolution `e^{-ds}`.
    Early,
}

/// One frame run from the initial data for the cone of `(x0, t0)`.
pub fn frame_run(
    data: &CauchyData,
    params: &Params,
    x0: f64,
    t0: f64,
    ctl: &ShootControls,
    record_every: f64,
) -> Result<(Verdict, ConeTrajectory)> {
    let cone = ConeGrid::new(ctl.intervals, params)?;
    let start = transform_to_cone(&data.snapshot(), x0, t0, &cone, params)?;
    let s0 = start.s;
    let floor = ctl.decay * params.kappa0;
    let traj = evolve_cone(&cone, &start, s0 + ctl.ds, &ctl.evolve(record_every), |c: &ConeState| {
        if c.s > s0 + 3.0 && c.sup() < floor {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })?;
    let verdict = match traj.outcome {
        Outcome::FrameBlowup { .. } => Verdict::Late,
        _ => Verdict::Early,
    };
    Ok((verdict, traj))
}

/// Result of the bisection for `T(x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub x0: f64,
    /// Latest `T0` whose frame stays bounded.
    pub lo: f64,
    /// Earliest `T0` whose frame blows up.
    pub hi: f64,
    pub runs: usize,
}

impl Shot {
    pub fn t(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn estimate(&self) -> TEstimate {
        TEstimate { t: self.t(), quality: 0.0, method: TMethod::Shooting, low_quality: false, spread: 0.5 * (self.hi - self.lo) }
    }
}

/// Bisection for `T(x0)` starting from the bracket `(lo, hi)`, widened when needed.
pub fn shoot_blowup_time(
    data: &CauchyData,
    params: &Params,
    x0: f64,
    bracket: (f64, f64),
    ctl: &ShootControls,
) -> Result<Shot> {
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) || !(lo > 0.0) {
        return Err(Error::Input(format!("bad bracket ({lo}, {hi})")));
    }
    let mut runs = 0;
    let verdict = |t0: f64, runs: &mut usize| -> Result<Verdict> {
        *runs += 1;
        if *runs > ctl.max_runs {
            return Err(Error::Resolution(format!("shooting for x0={x0} exceeded {} runs", ctl.max_runs)));
        }
        Ok(frame_run(data, params, x0, t0, ctl, f64::INFINITY)?.0)
    };
    let width = hi - lo;
    let mut hi_known = false;
    while verdict(lo, &mut runs)? == Verdict::Late {
        hi = lo;
        hi_known = true;
        lo = (lo - width).max(0.5 * lo);
    }
    if !hi_known {
        while verdict(hi, &mut runs)? == Verdict::Early {
            lo = hi;
            hi += width;
        }
    }
    while hi - lo > ctl.tol_t {
        let mid = 0.5 * (lo + hi);
        match verdict(mid, &mut runs)? {
            Verdict::Late => hi = mid,
            Verdict::Early => lo = mid,
        }
    }
    Ok(Shot { x0, lo, hi, runs })
}

/// Self-similar energy over the last resolvable decade at `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyWindow {
    /// `s` where the trajectories at `lo` and `hi` separate.
    pub s_resolved: f64,
    pub s_from: f64,
    pub e_min: f64,
    pub e_max: f64,
    /// `E(kappa0)` on the same cone grid.
    pub e_kappa0: f64,
    /// `E` along the bounded trajectory up to `s_resolved`.
    pub series: Vec<(f64, f64)>,
}

fn interp_records(rec: &[StepRecord], s: f64) -> Option<f64> {
    let j = rec.partition_point(|r| r.s < s);
    if j == 0 || j >= rec.len() {
        return None;
    }
    let (a, b) = (&rec[j - 1], &rec[j]);
    let w = (s - a.s) / (b.s - a.s);
    Some(a.energy + w * (b.energy - a.energy))
}

/// `E(kappa0)` with the quadrature of `cone`.
pub fn energy_kappa0(cone: &ConeGrid) -> f64 {
    let k = vec![cone.params.kappa0; cone.len()];
    cone.energy(&k, &vec![0.0; cone.len()])
}

/// Compares the frames at both ends of the bracket. They agree until the bracket
/// width becomes visible; the decade of `s` before that point is the last resolvable one.
pub fn energy_window(lo: &ConeTrajectory, hi: &ConeTrajectory) -> EnergyWindow {
    let e0 = energy_kappa0(&lo.cone);
    let tol = 1e-2 * e0;
    let mut s_res = lo.records.last().map(|r| r.s).unwrap_or(0.0);
    for r in &lo.records {
        match interp_records(&hi.records, r.s) {
            Some(eh) if (eh - r.energy).abs() <= tol => {}
            _ => {
                s_res = r.s;
                break;
            }
        }
    }
    let s_from = (s_res - 10f64.ln()).max(lo.records[0].s);
    let series: Vec<(f64, f64)> = lo.records.iter().filter(|r| r.s <= s_res).map(|r| (r.s, r.energy)).collect();
    let inside = series.iter().filter(|(s, _)| *s >= s_from).map(|(_, e)| *e);
    let (e_min, e_max) = inside.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e), b.max(e)));
    EnergyWindow { s_resolved: s_res, s_from, e_min, e_max, e_kappa0: e0, series }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyControls {
    pub shoot: ShootControls,
    /// Slope tolerance of the `S` test.
    pub tau: f64,
    /// `R` when `E < 2 E(kappa0) (1 - margin)`.
    pub margin: f64,
    /// Secant unit; neighbours sit at `x0 +- {2,4,8} delta`.
    pub delta: f64,
    /// Half width of the initial bracket when the curve has no estimate.
    pub bracket: f64,
}

impl Default for ClassifyControls {
    fn default() -> Self {
        ClassifyControls { shoot: ShootControls::default(), tau: 0.1, margin: 0.1, delta: 0.005, bracket: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub x0: f64,
    pub shot: Shot,
    pub slope_l: f64,
    pub slope_r: f64,
    /// Refined neighbours `(x, T)` at `x0 -+ {2,4,8} delta`.
    pub neighbours: Vec<(f64, f64)>,
    /// `T(x) - T(x0) + |x - x0|` at refined neighbours and curve samples.
    pub deficits: Vec<(f64, f64)>,
    pub slope_test: bool,
    pub chapeau_strict: bool,
    pub energy: EnergyWindow,
    pub energy_test_r: bool,
    pub k_est: Option<usize>,
    pub class: PointClass,
}

/// Bracket for `T(x0)` from the curve: the estimate itself, or the Lipschitz cone of the
/// nearest usable sample.
pub fn bracket_from_curve(curve: &BlowupCurve, x0: f64, half: f64) -> Option<(f64, f64)> {
    let p = curve
        .points
        .iter()
        .filter(|p| p.estimate.method != TMethod::None && p.t().is_finite())
        .min_by(|a, b| (a.x - x0).abs().total_cmp(&(b.x - x0).abs()))?;
    let r = (p.x - x0).abs();
    Some(((p.t() - r - half).max(1e-3), p.t() + r + half))
}

/// Full classification at `x0` with cone-shooting estimates. `guess` brackets `T(x0)`.
pub fn classify_point(
    data: &CauchyData,
    params: &Params,
    curve: Option<&BlowupCurve>,
    x0: f64,
    guess: (f64, f64),
    ctl: &ClassifyControls,
) -> Result<Classification> {
    let shot = shoot_blowup_time(data, params, x0, guess, &ctl.shoot)?;
    let t0 = shot.t();
    let mut neighbours = Vec::new();
    for &sgn in &[-1.0, 1.0] {
        for m in [2.0, 4.0, 8.0] {
            let h = m * ctl.delta;
            let eps = 4.0 * ctl.shoot.tol_t;
            let s = shoot_blowup_time(data, params, x0 + sgn * h, (t0 - h - eps, t0 + h + eps), &ctl.shoot)?;
            neighbours.push((x0 + sgn * h, s.t()));
        }
    }
    let sec = |j: usize| (t0 - neighbours[j].1) / (2f64.powi(j as i32 + 1) * ctl.delta);
    let slope_l = richardson(sec(0), sec(1), sec(2));
    let sec_r = |j: usize| (neighbours[3 + j].1 - t0) / (2f64.powi(j as i32 + 1) * ctl.delta);
    let slope_r = richardson(sec_r(0), sec_r(1), sec_r(2));
    let mut deficits: Vec<(f64, f64)> = neighbours.iter().map(|&(x, t)| (x, t - t0 + (x - x0).abs())).collect();
    if let Some(c) = curve {
        let near = 16.0 * ctl.delta;
        for p in &c.points {
            if (p.x - x0).abs() > near && p.estimate.method != TMethod::None && !p.estimate.low_quality {
                deficits.push((p.x, p.t() - t0 + (p.x - x0).abs()));
            }
        }
    }
    let slope_test = slopes_characteristic(slope_l, slope_r, ctl.tau);
    let chapeau_strict = deficits.iter().all(|d| d.1 > 0.0);
    let (_, lo) = frame_run(data, params, x0, shot.lo, &ctl.shoot, 0.25)?;
    let (_, hi) = frame_run(data, params, x0, shot.hi, &ctl.shoot, f64::INFINITY)?;
    let energy = energy_window(&lo, &hi);
    let e_end = energy.series.last().map(|e| e.1).unwrap_or(f64::NAN);
    let energy_test_r = e_end < 2.0 * energy.e_kappa0 * (1.0 - ctl.margin);
    let k_est = lo
        .snapshots
        .iter().rfind(|c| c.s <= energy.s_resolved)
        .map(|c| count_and_seed(&c.to_wstate(&lo.cone, &frame_grid()), params).k);
    let class = if slope_test && chapeau_strict {
        PointClass::S
    } else if energy_test_r {
        PointClass::R
    } else {
        PointClass::Unknown
    };
    Ok(Classification {
        x0,
        shot,
        slope_l,
        slope_r,
        neighbours,
        deficits,
        slope_test,
        chapeau_strict,
        energy,
        energy_test_r,
        k_est,
        class,
    })
}

/// `xi` grid used to read frame states.
pub fn frame_grid() -> Arc<XiGrid> {
    Arc::new(XiGrid::symmetric(10.0, 2001).expect("static grid"))
}

/// Fit of `T(x) - T(x0) + |x - x0| = C |x - x0| / |log|x - x0||^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChapeauReport {
    pub beta: f64,
    pub beta_expected: f64,
    pub log_c0: f64,
    pub rms: f64,
    pub samples: usize,
    /// Every deficit positive.
    pub strict: bool,
}

/// Consistency check of the corner shape at an `S` point with `k` solitons.
pub fn chapeau_bound_check(points: &[(f64, f64)], x0: f64, t0: f64, k: usize, p: f64) -> Result<ChapeauReport> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut strict = true;
    for &(x, t) in points {
        let r = (x - x0).abs();
        if r == 0.0 || r >= 1.0 {
            continue;
        }
        let def = t - t0 + r;
        if def <= 0.0 {
            strict = false;
            continue;
        }
        xs.push((-r.ln()).ln());
        ys.push((def / r).ln());
    }
    let fit = fit_line(&xs, &ys)?;
    Ok(ChapeauReport {
        beta: -fit.slope,
        beta_expected: (k as f64 - 1.0) * (p - 1.0) / 2.0,
        log_c0: fit.intercept,
        rms: fit.rms,
        samples: fit.n,
        strict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    pub s: f64,
    pub zeta: f64,
    /// `z = x0 + (T0 - t) tanh zeta`.
    pub z: f64,
    /// `u(z, t)` from the frame.
    pub u: f64,
    /// `w(tanh zeta) / (e kappa0 cosh^{2/(p-1)} zeta)`.
    pub growth_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedTrack {
    pub j: usize,
    pub sign: f64,
    pub points: Vec<TrackPoint>,
    /// The decomposition was lost before the end of the resolvable range.
    pub truncated: bool,
}

/// Soliton tracks `z_j(t)` from modulation along the bounded frame trajectory of
/// `(x0, T0)`, over `s` up to `s_end`. Tracks follow the soliton count at the last
/// successful decomposition backwards in `s`.
pub fn signed_lines(traj: &ConeTrajectory, x0: f64, t0: f64, s_end: f64) -> Vec<SignedTrack> {
    let params = traj.cone.params;
    let grid = frame_grid();
    let space = WeightedSpace::new(&grid, &params);
    let ctl = ModulationControls::default();
    let mut decs = Vec::new();
    for c in traj.snapshots.iter().filter(|c| c.s <= s_end) {
        let st = c.to_wstate(&traj.cone, &grid);
        let seed = count_and_seed(&st, &params);
        let dec = if seed.k == 0 {
            None
        } else {
            solve_modulation(&st, &space, &seed.signs, &seed.zeta, &ctl).ok().map(|d| (c.clone(), d))
        };
        decs.push(dec);
    }
    let Some(last) = decs.iter().rposition(|d| d.is_some()) else { return vec![] };
    let last_ok = last + 1 == decs.len();
    let (k, signs) = {
        let d = &decs[last].as_ref().expect("checked").1;
        (d.k, d.signs.clone())
    };
    let mut tracks: Vec<SignedTrack> =
        (0..k).map(|j| SignedTrack { j, sign: signs[j], points: vec![], truncated: !last_ok }).collect();
    let b = params.b();
    for d in decs[..=last].iter().rev() {
        let Some((c, dec)) = d else { break };
        if dec.k != k || dec.signs != signs {
            break;
        }
        let tau = (-c.s).exp();
        for (j, tr) in tracks.iter_mut().enumerate() {
            let z = dec.zeta[j];
            let yj = z.tanh();
            let w = traj.cone.sample(&c.w, yj);
            let model = signs[j] * params.kappa0 * (b * crate::grid::lncosh(z)).exp();
            tr.points.push(TrackPoint {
                t: t0 - tau,
                s: c.s,
                zeta: z,
                z: x0 + tau * yj,
                u: w * tau.powf(-b),
                growth_ratio: w / model,
            });
        }
    }
    for tr in &mut tracks {
        tr.points.reverse();
    }
    tracks
}

/// Lower bound on `u` for the unsigned nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub r: f64,
    pub r0: f64,
    /// `M(R) = ||u0||_inf + sqrt(R0) ||u1||_2` over `(-R0, R0)`.
    pub m: f64,
    pub min_u: f64,
    /// `(x, min u)` at nodes below `-M (1 + tol)`.
    pub violations: Vec<(f64, f64)>,
}

/// Checks `u >= -M(R)` on `(-R, R)` over the active life of every node.
pub fn lower_bound_monitor(data: &CauchyData, run: &PdeRun, r: f64, t_max: f64, tol: f64) -> Result<LowerBound> {
    if run.params.variant != Variant::Unsigned {
        return Err(Error::Input("the lower bound monitor applies to the unsigned nonlinearity".into()));
    }
    let r0 = r + t_max;
    let mut sup = 0.0f64;
    let mut l2 = 0.0;
    for i in 0..data.len() {
        let x = data.x(i);
        if x.abs() < r0 {
            sup = sup.max(data.u0[i].abs());
            l2 += data.dx * data.u1[i] * data.u1[i];
        }
    }
    let m = sup + r0.sqrt() * l2.sqrt();
    let mut min_u = f64::INFINITY;
    let mut violations = Vec::new();
    for i in 0..run.len() {
        let x = run.x(i);
        if x.abs() >= r {
            continue;
        }
        let mu = run.tracks[i].min_u;
        min_u = min_u.min(mu);
        if mu < -m * (1.0 + tol) {
            violations.push((x, mu));
        }
    }
    Ok(LowerBound { r, r0, m, min_u, violations })
}
