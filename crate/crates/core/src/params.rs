use crate::error::{Error, Result};
use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

/// Which power nonlinearity drives the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `|u|^{p-1} u`
    Signed,
    /// `|u|^p`
    Unsigned,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Signed => "signed",
            Variant::Unsigned => "unsigned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub p: f64,
    pub variant: Variant,
    pub kappa0: f64,
    pub eps0: f64,
}

impl Params {
    pub fn new(p: f64, variant: Variant) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Input(format!("exponent p must be finite and > 1, got {p}")));
        }
        let kappa0 = (2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0))).powf(1.0 / (p - 1.0));
        Ok(Params { p, variant, kappa0, eps0: 1.0 / 1000.0 })
    }

    pub fn signed(p: f64) -> Result<Self> {
        Self::new(p, Variant::Signed)
    }

    /// `2/(p-1)`, the self-similar scaling exponent.
    #[inline]
    pub fn b(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// `2(p+1)/(p-1)^2`, the mass coefficient in the self-similar equation.
    #[inline]
    pub fn mass(&self) -> f64 {
        2.0 * (self.p + 1.0) / ((self.p - 1.0) * (self.p - 1.0))
    }

    /// `(p+3)/(p-1)`, the damping coefficient in the self-similar equation.
    #[inline]
    pub fn damping(&self) -> f64 {
        (self.p + 3.0) / (self.p - 1.0)
    }

    /// `r = floor(k/2)` for a configuration of `k` solitons.
    pub fn r(k: usize) -> usize {
        k / 2
    }

    /// Nonlinearity `f(u)`.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        let a = u.abs();
        if self.p == 3.0 {
            return match self.variant {
                Variant::Signed => u * u * u,
                Variant::Unsigned => a * a * a,
            };
        }
        if self.p == 2.0 {
            return match self.variant {
                Variant::Signed => a * u,
                Variant::Unsigned => a * a,
            };
        }
        match self.variant {
            Variant::Signed => a.powf(self.p - 1.0) * u,
            Variant::Unsigned => a.powf(self.p),
        }
    }

    /// Derivative `f'(u)`.
    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        let a = u.abs();
        match self.variant {
            Variant::Signed => self.p * a.powf(self.p - 1.0),
            Variant::Unsigned => self.p * a.powf(self.p - 1.0) * u.signum(),
        }
    }

    /// Primitive `F(u)` with `F(0) = 0`.
    #[inline]
    pub fn prim(&self, u: f64) -> f64 {
        let a = u.abs();
        match self.variant {
            Variant::Signed => a.powf(self.p + 1.0) / (self.p + 1.0),
            Variant::Unsigned => a.powf(self.p) * u / (self.p + 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa0_identity() {
        for &p in &[1.5, 2.0, 3.0, 5.0, 7.3] {
            let pr = Params::signed(p).unwrap();
            let lhs = pr.kappa0.powf(p - 1.0);
            assert!((lhs - pr.mass()).abs() < 1e-12 * pr.mass());
        }
        let pr = Params::signed(3.0).unwrap();
        assert!((pr.kappa0 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(pr.eps0, 0.001);
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(Params::signed(1.0).is_err());
        assert!(Params::signed(f64::NAN).is_err());
    }

    #[test]
    fn primitives_differentiate_to_nonlinearity() {
        for v in [Variant::Signed, Variant::Unsigned] {
            let pr = Params::new(2.5, v).unwrap();
            for &u in &[-1.7, -0.3, 0.4, 2.2] {
                let h = 1e-6;
                let d = (pr.prim(u + h) - pr.prim(u - h)) / (2.0 * h);
                assert!((d - pr.f(u)).abs() < 1e-7 * (1.0 + pr.f(u).abs()));
                let d2 = (pr.f(u + h) - pr.f(u - h)) / (2.0 * h);
                assert!((d2 - pr.df(u)).abs() < 1e-6 * (1.0 + pr.df(u).abs()));
            }
        }
    }
}
