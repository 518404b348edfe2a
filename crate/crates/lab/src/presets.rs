//! Named initial data for the direct solver.
//!
//! | name | `u0` | `u1` | defaults |
//! |---|---|---|---|
//! | `odd-sine` | `A sin(pi x/L)` on `|x| < L`, zero outside | `0` | `A = 3`, `L = 2` |
//! | `plateaus-opposite` | `A tanh(x/w) (1 + tanh((L - |x|)/w))/2`, `w = L/8` | `0` | `A = 3`, `L = 2` |
//! | `gaussian-positive` | `A exp(-x^2/(2 L^2))` | `0` | `A = 3`, `L = 1` |
//! | `constant-exact` | `kappa0 T^{-b}` on a periodic cell | `b kappa0 T^{-b-1}` | `T = 1` |
//!
//! `A` is the config `amplitude`, `L` its `width`. Fixed-end domains are
//! `[-(L_s + t_bar + 2), L_s + t_bar + 2]` with `L_s` the support scale (`L` or `5L`
//! for the Gaussian), so the dependence cone of the scan window never reaches the ends.

use crate::config::{PdeScanConfig, PresetName};
use anyhow::Result;
use blowup_core::physical::{Boundary, CauchyData};
use blowup_core::Params;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetSpec {
    pub name: PresetName,
    pub amplitude: f64,
    pub width: f64,
    /// Blow-up time of `constant-exact`.
    pub t_blow: f64,
    pub t_bar: f64,
    pub dx: f64,
}

impl PresetSpec {
    /// Preset from a scan config; zero amplitude or width picks the defaults.
    pub fn from_config(c: &PdeScanConfig) -> Self {
        let (a, l) = defaults(c.preset);
        PresetSpec {
            name: c.preset,
            amplitude: if c.amplitude != 0.0 { c.amplitude } else { a },
            width: if c.width > 0.0 { c.width } else { l },
            t_blow: c.t_blow,
            t_bar: c.t_bar,
            dx: c.dx,
        }
    }

    pub fn new(name: PresetName, dx: f64) -> Self {
        let (amplitude, width) = defaults(name);
        PresetSpec { name, amplitude, width, t_blow: 1.0, t_bar: 2.0, dx }
    }

    /// Half length of the fixed-end domain.
    pub fn half_domain(&self) -> f64 {
        let support = match self.name {
            PresetName::GaussianPositive => 5.0 * self.width,
            _ => self.width,
        };
        support + self.t_bar + 2.0
    }

    pub fn build(&self, params: &Params) -> Result<CauchyData> {
        let (a, l) = (self.amplitude, self.width);
        let half = self.half_domain();
        let data = match self.name {
            PresetName::OddSine => CauchyData::from_fn(
                -half,
                half,
                self.dx,
                |x| if x.abs() < l { a * (PI * x / l).sin() } else { 0.0 },
                |_| 0.0,
                Boundary::Fixed,
            ),
            PresetName::PlateausOpposite => {
                let w = l / 8.0;
                CauchyData::from_fn(
                    -half,
                    half,
                    self.dx,
                    |x| a * (x / w).tanh() * 0.5 * (1.0 + ((l - x.abs()) / w).tanh()),
                    |_| 0.0,
                    Boundary::Fixed,
                )
            }
            PresetName::GaussianPositive => CauchyData::from_fn(
                -half,
                half,
                self.dx,
                |x| a * (-0.5 * x * x / (l * l)).exp(),
                |_| 0.0,
                Boundary::Fixed,
            ),
            PresetName::ConstantExact => {
                let (u0, u1) = exact_ode(self.t_blow, params);
                CauchyData::from_fn(-1.0, 1.0, self.dx, |_| u0, |_| u1, Boundary::Periodic)
            }
        };
        Ok(data?)
    }
}

fn defaults(name: PresetName) -> (f64, f64) {
    match name {
        PresetName::OddSine => (3.0, 2.0),
        PresetName::PlateausOpposite => (3.0, 2.0),
        PresetName::GaussianPositive => (3.0, 1.0),
        PresetName::ConstantExact => (0.0, 1.0),
    }
}

/// `(u, u_t)` at `t = 0` of `kappa0 (T - t)^{-b}`.
pub fn exact_ode(t_blow: f64, params: &Params) -> (f64, f64) {
    let b = params.b();
    (params.kappa0 * t_blow.powf(-b), b * params.kappa0 * t_blow.powf(-b - 1.0))
}

pub const ALL: [PresetName; 4] =
    [PresetName::OddSine, PresetName::PlateausOpposite, PresetName::GaussianPositive, PresetName::ConstantExact];

pub fn name(p: PresetName) -> &'static str {
    match p {
        PresetName::OddSine => "odd-sine",
        PresetName::PlateausOpposite => "plateaus-opposite",
        PresetName::GaussianPositive => "gaussian-positive",
        PresetName::ConstantExact => "constant-exact",
    }
}
