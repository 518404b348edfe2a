//! Uniform grid in `xi = artanh y` and the fields living on it.

use crate::error::{Error, Result};
use crate::params::Params;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// `ln cosh z`, accurate for all real `z`.
#[inline]
pub fn lncosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - core::f64::consts::LN_2
}

/// `sech^2 z = 1 - tanh^2 z` without cancellation.
#[inline]
pub fn sech2(z: f64) -> f64 {
    let e = (-2.0 * z.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    xi_min: f64,
    xi_max: f64,
    h: f64,
    xi: Vec<f64>,
    y: Vec<f64>,
    sech2: Vec<f64>,
    lncosh: Vec<f64>,
}

impl XiGrid {
    pub fn new(xi_min: f64, xi_max: f64, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::Input(format!("grid needs at least 5 nodes, got {n}")));
        }
        if !(xi_max > xi_min) || !xi_min.is_finite() || !xi_max.is_finite() {
            return Err(Error::Input(format!("bad grid bounds [{xi_min}, {xi_max}]")));
        }
        let m = (n - 1) as f64;
        let xi: Vec<f64> = (0..n)
            .map(|i| (xi_min * (m - i as f64) + xi_max * i as f64) / m)
            .collect();
        let y = xi.iter().map(|&z| z.tanh()).collect();
        let s2 = xi.iter().map(|&z| sech2(z)).collect();
        let lc = xi.iter().map(|&z| lncosh(z)).collect();
        Ok(XiGrid { xi_min, xi_max, h: (xi_max - xi_min) / m, xi, y, sech2: s2, lncosh: lc })
    }

    pub fn symmetric(xi_max: f64, n: usize) -> Result<Self> {
        Self::new(-xi_max, xi_max, n)
    }

    /// The default grid: `[-12, 12]` with 2049 nodes.
    pub fn standard() -> Self {
        Self::symmetric(12.0, 2049).expect("valid default grid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    #[inline]
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `1 - y^2` at the nodes.
    #[inline]
    pub fn sech2(&self) -> &[f64] {
        &self.sech2
    }

    #[inline]
    pub fn lncosh(&self) -> &[f64] {
        &self.lncosh
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn trap(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len() {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Index of the node nearest to `xi`, clamped to the grid.
    pub fn nearest(&self, xi: f64) -> usize {
        let t = ((xi - self.xi_min) / self.h).round();
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.len() - 1)
        }
    }

    /// Cubic Lagrange interpolation of nodal values at `xi`, constant outside the grid.
    pub fn interpolate(&self, values: &[f64], xi: f64) -> f64 {
        interp_cubic(self.xi_min, self.h, values, xi)
    }
}

/// Cubic Lagrange interpolation on a uniform grid starting at `x0` with spacing `h`.
/// Values outside the grid are clamped to the end values.
pub fn interp_cubic(x0: f64, h: f64, v: &[f64], x: f64) -> f64 {
    let n = v.len();
    let t = (x - x0) / h;
    if t <= 0.0 {
        return v[0];
    }
    if t >= (n - 1) as f64 {
        return v[n - 1];
    }
    let i = (t.floor() as usize).clamp(1, n - 3);
    let u = t - i as f64;
    let (a, b, c, d) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
    let w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    w0 * a + w1 * b + w2 * c + w3 * d
}

/// How the samples of a field relate to the underlying function `r(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Samples of `r(y)`.
    YForm,
    /// Samples of `(1-y^2)^{1/(p-1)} r(y)`.
    BarForm,
    /// Samples of `(1-y^2)^{1/(p-1)+1/2} r(y)`.
    HatForm,
}

impl Representation {
    fn exponent(self, p: f64) -> f64 {
        match self {
            Representation::YForm => 0.0,
            Representation::BarForm => 1.0 / (p - 1.0),
            Representation::HatForm => 1.0 / (p - 1.0) + 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Arc<XiGrid>,
    pub values: Vec<f64>,
    pub repr: Representation,
}

impl Field {
    pub fn new(grid: Arc<XiGrid>, values: Vec<f64>, repr: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("field contains non-finite values".into()));
        }
        Ok(Field { grid, values, repr })
    }

    pub fn zeros(grid: &Arc<XiGrid>) -> Self {
        Field { grid: grid.clone(), values: alloc::vec![0.0; grid.len()], repr: Representation::YForm }
    }

    /// Samples `f(xi, y)` in `YForm`.
    pub fn from_fn(grid: &Arc<XiGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.xi().iter().zip(grid.y()).map(|(&x, &y)| f(x, y)).collect();
        Field { grid: grid.clone(), values, repr: Representation::YForm }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Converts between `YForm`, `BarForm` and `HatForm`.
    pub fn transform(&self, target: Representation, params: &Params) -> Field {
        let e = target.exponent(params.p) - self.repr.exponent(params.p);
        if e == 0.0 {
            return Field { repr: target, ..self.clone() };
        }
        let values = self
            .values
            .iter()
            .zip(self.grid.lncosh())
            .map(|(&v, &lc)| v * (-2.0 * e * lc).exp())
            .collect();
        Field { grid: self.grid.clone(), values, repr: target }
    }
}

/// Free-function form of [`Field::transform`].
pub fn transform(field: &Field, target: Representation, params: &Params) -> Field {
    field.transform(target, params)
}

/// A pair `(q1, q2)` of `YForm` samples on one grid, the carrier of the energy space.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub grid: Arc<XiGrid>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

impl Pair {
    pub fn new(grid: &Arc<XiGrid>, q1: Vec<f64>, q2: Vec<f64>) -> Result<Self> {
        if q1.len() != grid.len() || q2.len() != grid.len() {
            return Err(Error::Input("pair components do not match the grid".into()));
        }
        Ok(Pair { grid: grid.clone(), q1, q2 })
    }

    pub fn zeros(grid: &Arc<XiGrid>) -> Self {
        let n = grid.len();
        Pair { grid: grid.clone(), q1: alloc::vec![0.0; n], q2: alloc::vec![0.0; n] }
    }

    pub fn scale(&mut self, a: f64) {
        self.q1.iter_mut().for_each(|v| *v *= a);
        self.q2.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Pair {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Pair) {
        for (v, o) in self.q1.iter_mut().zip(&other.q1) {
            *v += a * o;
        }
        for (v, o) in self.q2.iter_mut().zip(&other.q2) {
            *v += a * o;
        }
    }

    pub fn sub(&self, other: &Pair) -> Pair {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn first(&self) -> Field {
        Field { grid: self.grid.clone(), values: self.q1.clone(), repr: Representation::YForm }
    }

    pub fn second(&self) -> Field {
        Field { grid: self.grid.clone(), values: self.q2.clone(), repr: Representation::YForm }
    }

    pub fn max_abs(&self) -> f64 {
        self.q1.iter().chain(&self.q2).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A self-similar state `(w, w_s)` at time `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct WState {
    pub w1: Field,
    pub w2: Field,
    pub s: f64,
}

impl WState {
    pub fn new(w1: Field, w2: Field, s: f64) -> Result<Self> {
        if w1.grid != w2.grid {
            return Err(Error::Input("state components live on different grids".into()));
        }
        if w1.repr != Representation::YForm || w2.repr != Representation::YForm {
            return Err(Error::Input("state components must be in YForm".into()));
        }
        Ok(WState { w1, w2, s })
    }

    pub fn from_pair(pair: &Pair, s: f64) -> Self {
        WState { w1: pair.first(), w2: pair.second(), s }
    }

    pub fn zeros(grid: &Arc<XiGrid>, s: f64) -> Self {
        WState { w1: Field::zeros(grid), w2: Field::zeros(grid), s }
    }

    pub fn grid(&self) -> &Arc<XiGrid> {
        &self.w1.grid
    }

    pub fn pair(&self) -> Pair {
        Pair { grid: self.w1.grid.clone(), q1: self.w1.values.clone(), q2: self.w2.values.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lncosh_matches_direct() {
        for &z in &[-30.0, -3.0, -0.1, 0.0, 0.2, 5.0, 40.0] {
            let direct = if z.abs() < 20.0 { z.cosh().ln() } else { z.abs() - core::f64::consts::LN_2 };
            assert!((lncosh(z) - direct).abs() < 1e-14 * (1.0 + direct.abs()));
            let t = z.tanh();
            if z.abs() < 5.0 {
                assert!((sech2(z) - (1.0 - t * t)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn grid_is_symmetric_and_increasing() {
        let g = XiGrid::symmetric(12.0, 101).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.xi()[i], -g.xi()[g.len() - 1 - i]);
            assert!(g.y()[i].abs() < 1.0);
        }
        assert!(g.xi().windows(2).all(|w| w[1] > w[0]));
        assert!((g.h() - 0.24).abs() < 1e-14);
        assert!(XiGrid::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let v: Vec<f64> = (0..20).map(|i| {
            let x = 0.5 * i as f64;
            x * x * x - 2.0 * x + 1.0
        }).collect();
        for &x in &[0.3, 2.71, 7.9, 9.2] {
            let exact = x * x * x - 2.0 * x + 1.0;
            assert!((interp_cubic(0.0, 0.5, &v, x) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn representation_round_trip() {
        let g = Arc::new(XiGrid::symmetric(10.0, 201).unwrap());
        let pr = Params::signed(3.0).unwrap();
        let f = Field::from_fn(&g, |_, y| 1.0 + y * y);
        let back = f
            .transform(Representation::HatForm, &pr)
            .transform(Representation::BarForm, &pr)
            .transform(Representation::YForm, &pr);
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-12 * a.abs());
        }
        let one = Field::from_fn(&g, |_, _| 1.0).transform(Representation::BarForm, &pr);
        for (v, &s) in one.values.iter().zip(g.sech2()) {
            assert!((v - s.sqrt()).abs() < 1e-14);
        }
    }
}
