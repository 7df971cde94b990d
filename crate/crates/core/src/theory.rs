//! Uniform deviation and estimation error bounds for Pconf learning.
//!
//! With `R_n` the Rademacher complexity of the model class, `C_ℓ` and `L_ℓ`
//! the loss bound and Lipschitz constant on `|z| ≤ C_g`, and `C_r` a lower
//! bound on the confidence, with probability at least `1 − δ`
//!
//! ```text
//! sup_g |R̂(g) − R(g)| ≤ 2π₊(L_ℓ + L_ℓ/C_r)·R_n + π₊(C_ℓ + C_ℓ/C_r)·√(ln(2/δ)/(2n))
//! ```
//!
//! and the excess risk of the empirical minimizer is at most twice that.

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::model::Basis;
use crate::risk::PconfSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub pi_plus: f64,
    pub c_r: f64,
    pub c_ell: f64,
    pub l_ell: f64,
    pub rademacher: f64,
    pub delta: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(self.pi_plus > 0.0 && self.pi_plus <= 1.0) {
            return Err(Error::domain(format!("class prior {} outside (0, 1]", self.pi_plus)));
        }
        if !(self.c_r > 0.0 && self.c_r <= 1.0) {
            return Err(Error::domain(format!("C_r {} outside (0, 1]", self.c_r)));
        }
        positive("C_ell", self.c_ell)?;
        positive("L_ell", self.l_ell)?;
        if !(self.rademacher >= 0.0 && self.rademacher.is_finite()) {
            return Err(Error::domain(format!("Rademacher complexity must be non-negative, got {}", self.rademacher)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

/// `C_w·C_φ/√n`, the Rademacher bound for norm-constrained linear classes.
pub fn rademacher_linear(c_w: f64, c_phi: f64, n: usize) -> Result<f64> {
    if !(c_w > 0.0 && c_phi > 0.0 && c_w.is_finite() && c_phi.is_finite()) {
        return Err(Error::domain(format!("C_w and C_phi must be positive, got {c_w} and {c_phi}")));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    Ok(c_w * c_phi / (n as f64).sqrt())
}

/// High-probability bound on `sup_g |R̂(g) − R(g)|`.
pub fn uniform_deviation_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let inv = 1.0 / b.c_r;
    let complexity = 2.0 * b.pi_plus * (b.l_ell + b.l_ell * inv) * b.rademacher;
    let concentration = b.pi_plus * (b.c_ell + b.c_ell * inv) * ((2.0 / b.delta).ln() / (2.0 * b.n as f64)).sqrt();
    Ok(complexity + concentration)
}

/// High-probability bound on `R(ĝ) − R(g*)`; exactly twice the deviation bound.
pub fn estimation_error_bound(b: &BoundInputs) -> Result<f64> {
    Ok(2.0 * uniform_deviation_bound(b)?)
}

/// Constants measured from a model class and a (clamped) dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalConstants {
    pub c_w: f64,
    pub c_phi: f64,
    pub c_g: f64,
    pub c_ell: f64,
    pub l_ell: f64,
    pub c_r: f64,
    pub n: usize,
}

impl EmpiricalConstants {
    /// Complete bound inputs using the linear-class Rademacher bound.
    pub fn bound_inputs(&self, pi_plus: f64, delta: f64) -> Result<BoundInputs> {
        Ok(BoundInputs {
            n: self.n,
            pi_plus,
            c_r: self.c_r,
            c_ell: self.c_ell,
            l_ell: self.l_ell,
            rademacher: rademacher_linear(self.c_w, self.c_phi, self.n)?,
            delta,
        })
    }
}

/// Measures `C_φ = max_i ‖φ(x_i)‖`, sets `C_g = C_w·C_φ`, derives the loss
/// constants, and takes `C_r = max(min_i r_i, floor)`.
pub fn empirical_constants(
    basis: &Basis,
    c_w: f64,
    dataset: &[PconfSample],
    loss: LossKind,
    floor: f64,
) -> Result<EmpiricalConstants> {
    if dataset.is_empty() {
        return Err(Error::domain("empirical constants need at least one sample"));
    }
    if !(c_w > 0.0 && c_w.is_finite()) {
        return Err(Error::domain(format!("C_w must be positive, got {c_w}")));
    }
    let c_phi = basis.feature_norm_sup(dataset.iter().map(|s| s.x.as_slice()))?;
    let c_g = c_w * c_phi;
    let (c_ell, l_ell) = loss.constants(c_g)?;
    let min_r = dataset.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
    Ok(EmpiricalConstants {
        c_w,
        c_phi,
        c_g,
        c_ell,
        l_ell,
        c_r: min_r.max(floor).min(1.0),
        n: dataset.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> BoundInputs {
        BoundInputs {
            n: 1,
            pi_plus: 0.5,
            c_r: 1.0,
            c_ell: 1.0,
            l_ell: 1.0,
            rademacher: 0.0,
            delta: 2.0 / std::f64::consts::E.powi(2),
        }
    }

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher_linear(1.0, 1.0, 1).unwrap(), 1.0);
        assert_eq!(rademacher_linear(2.0, 3.0, 4).unwrap(), 3.0);
        assert_eq!(rademacher_linear(1.0, 1.0, 10_000).unwrap(), 0.01);
        assert!(rademacher_linear(0.0, 1.0, 1).is_err());
        assert!(rademacher_linear(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn deviation_arithmetic() {
        assert_relative_eq!(uniform_deviation_bound(&unit()).unwrap(), 1.0, max_relative = 1e-15);
        let r = BoundInputs { rademacher: 1.0, c_ell: 1e-300, ..unit() };
        let halved = BoundInputs { c_r: 0.5, ..r };
        let ratio = uniform_deviation_bound(&halved).unwrap() / uniform_deviation_bound(&r).unwrap();
        assert_relative_eq!(ratio, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn full_instance_matches_extended_precision() {
        // 50-digit evaluation of the same formula.
        let b = BoundInputs {
            n: 1000,
            pi_plus: 0.5,
            c_r: 0.01,
            c_ell: LossKind::Logistic.constants(1.0).unwrap().0,
            l_ell: 1.0,
            rademacher: rademacher_linear(1.0, 1.0, 1000).unwrap(),
            delta: 0.05,
        };
        assert_relative_eq!(uniform_deviation_bound(&b).unwrap(), 6.0421293224816541, max_relative = 1e-13);
        assert_relative_eq!(estimation_error_bound(&b).unwrap(), 12.084258644963308, max_relative = 1e-13);
    }

    #[test]
    fn vanishes_with_n() {
        let b = BoundInputs { n: usize::MAX / 2, ..unit() };
        assert!(estimation_error_bound(&b).unwrap() < 1e-8);
    }

    #[test]
    fn invalid_inputs() {
        for bad in [
            BoundInputs { n: 0, ..unit() },
            BoundInputs { c_r: 0.0, ..unit() },
            BoundInputs { c_r: 1.5, ..unit() },
            BoundInputs { delta: 1.0, ..unit() },
            BoundInputs { c_ell: 0.0, ..unit() },
            BoundInputs { rademacher: -1.0, ..unit() },
        ] {
            assert!(uniform_deviation_bound(&bad).is_err());
        }
    }

    #[test]
    fn empirical_constant_examples() {
        let centers: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64 * 0.3, 0.0]).collect();
        let kernel = Basis::gaussian(centers, 0.5).unwrap();
        let data: Vec<PconfSample> = (0..20)
            .map(|i| PconfSample::new(vec![i as f64 * 0.1, -0.2], 0.001 + i as f64 * 0.04))
            .collect();
        let k = empirical_constants(&kernel, 2.0, &data, LossKind::Logistic, 0.01).unwrap();
        assert!(k.c_phi <= 3.0);
        assert_eq!(k.c_r, 0.01);
        assert_eq!(k.c_g, 2.0 * k.c_phi);

        let pts: Vec<PconfSample> = [[3.0, 4.0], [-1.0, 2.0], [0.0, 0.0]]
            .iter()
            .map(|x| PconfSample::new(x.to_vec(), 0.5))
            .collect();
        let a = empirical_constants(&Basis::affine(2), 1.0, &pts, LossKind::Ramp, 0.01).unwrap();
        assert!(a.c_phi <= 26f64.sqrt());
        assert_relative_eq!(a.c_phi, 26f64.sqrt());
        assert_eq!((a.c_ell, a.l_ell, a.c_r), (1.0, 1.0, 0.5));
    }

    proptest! {
        #[test]
        fn estimation_is_exactly_twice_deviation(
            n in 1usize..100_000, pi in 0.01f64..1.0, c_r in 0.001f64..1.0,
            c_ell in 0.01f64..50.0, l_ell in 0.01f64..10.0, rad in 0.0f64..5.0, delta in 0.001f64..0.999,
        ) {
            let b = BoundInputs { n, pi_plus: pi, c_r, c_ell, l_ell, rademacher: rad, delta };
            prop_assert_eq!(estimation_error_bound(&b).unwrap(), 2.0 * uniform_deviation_bound(&b).unwrap());
        }

        #[test]
        fn bounds_are_monotone(
            n in 1usize..10_000, c_r in 0.01f64..0.9, delta in 0.01f64..0.5,
            c_w in 0.1f64..5.0, c_phi in 0.1f64..5.0, idx in 0usize..4,
        ) {
            let loss = LossKind::TRAINABLE[idx];
            let (c_ell, l_ell) = loss.constants(c_w * c_phi).unwrap();
            let at = |n: usize, c_r: f64, delta: f64| {
                let b = BoundInputs { n, pi_plus: 0.5, c_r, c_ell, l_ell, rademacher: rademacher_linear(c_w, c_phi, n).unwrap(), delta };
                (uniform_deviation_bound(&b).unwrap(), estimation_error_bound(&b).unwrap())
            };
            let base = at(n, c_r, delta);
            let more_n = at(n + 1 + n / 3, c_r, delta);
            let more_cr = at(n, (c_r * 1.1).min(1.0), delta);
            let smaller_delta = at(n, c_r, delta * 0.5);
            prop_assert!(more_n.0 <= base.0 && more_n.1 <= base.1);
            prop_assert!(more_cr.0 <= base.0 && more_cr.1 <= base.1);
            prop_assert!(smaller_delta.0 >= base.0 && smaller_delta.1 >= base.1);
        }
    }
}
