//! Adaptive Dormand–Prince 5(4) integrator for first-order systems.

use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Right-hand side of `y' = F(t, y)`.
pub trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: FnMut(f64, &[f64], &mut [f64])> OdeSystem for F {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        self(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; zero picks one from the right-hand side.
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Controls { rtol: 1e-8, atol: 1e-10, h0: 0.0, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 10_000_000 }
    }
}

/// Returned by the step observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub t: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub stopped: bool,
    /// Step size suggested for a continuation.
    pub h_next: f64,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `t0` to `t_end`, updating `y` in place. The observer sees every
/// accepted step and may stop the integration early.
pub fn integrate<S: OdeSystem>(
    sys: &mut S,
    t0: f64,
    y: &mut [f64],
    t_end: f64,
    ctl: &Controls,
    mut observer: impl FnMut(f64, &[f64]) -> Flow,
) -> Result<Summary> {
    let n = y.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut t = t0;
    sys.rhs(t, y, &mut k[0]);
    let mut h = if ctl.h0 > 0.0 { ctl.h0 } else { initial_step(y, &k[0], ctl) };
    h = h.min(ctl.h_max).min((t_end - t0).abs().max(ctl.h_min));
    let mut accepted = 0;
    let mut rejected = 0;
    let mut last_reject = false;
    while dir * (t_end - t) > 1e-15 * t_end.abs().max(1.0) {
        if accepted + rejected >= ctl.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut last = false;
        if h >= (t_end - t).abs() {
            h = (t_end - t).abs();
            last = true;
        }
        let hs = dir * h;
        for st in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(st) {
                    acc += A[st][j] * kj[i];
                }
                tmp[i] = y[i] + hs * acc;
            }
            let (head, tail) = k.split_at_mut(st);
            let _ = head;
            sys.rhs(t + C[st] * hs, &tmp, &mut tail[0]);
            if st == 6 {
                ynew.copy_from_slice(&tmp);
            }
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(ynew[i].abs());
            let r = hs * e / sc;
            err += r * r;
        }
        err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            rejected += 1;
            last_reject = true;
            if h < ctl.h_min {
                return Err(Error::StepUnderflow { t, h });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + hs };
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            accepted += 1;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 5.0);
            if last_reject {
                fac = fac.min(1.0);
            }
            last_reject = false;
            let h_next = (h * fac).min(ctl.h_max);
            if observer(t, y) == Flow::Stop {
                return Ok(Summary { t, accepted, rejected, stopped: true, h_next });
            }
            if !last {
                h = h_next;
            } else {
                return Ok(Summary { t, accepted, rejected, stopped: false, h_next });
            }
        } else {
            rejected += 1;
            last_reject = true;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < ctl.h_min {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok(Summary { t, accepted, rejected, stopped: false, h_next: h })
}

fn initial_step(y: &[f64], f0: &[f64], ctl: &Controls) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (a, b) in y.iter().zip(f0) {
        let sc = ctl.atol + ctl.rtol * a.abs();
        d0 += (a / sc).powi(2);
        d1 += (b / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.max(ctl.h_min)
}
