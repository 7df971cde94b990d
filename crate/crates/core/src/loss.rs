//! Margin losses `ℓ(z)` used by the training objectives.
//!
//! All losses are functions of the margin `z = y·g(x)`. Besides value and
//! (sub)gradient, each trainable loss reports the constants the
//! generalization bounds need: the sup of the loss over `|z| ≤ C_g` and a
//! Lipschitz constant on that interval.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `log(1 + e^(−z))`
    Logistic,
    /// `(z − 1)²`
    Squared,
    /// `max(0, 1 − z)`
    Hinge,
    /// `min(1, max(0, 1 − z))`
    Ramp,
    /// `1` if `z ≤ 0`, else `0`. Evaluation only.
    ZeroOne,
}

/// Numerically stable `log(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x <= 0.0 {
        x.exp().ln_1p()
    } else {
        x + (-x).exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LossKind {
    pub const TRAINABLE: [LossKind; 4] = [
        LossKind::Logistic,
        LossKind::Squared,
        LossKind::Hinge,
        LossKind::Ramp,
    ];

    pub fn is_trainable(self) -> bool {
        self != LossKind::ZeroOne
    }

    /// Loss value at margin `z`. Unchecked; `z` must be finite.
    #[inline]
    pub(crate) fn eval(self, z: f64) -> f64 {
        match self {
            LossKind::Logistic => softplus(-z),
            LossKind::Squared => (z - 1.0) * (z - 1.0),
            LossKind::Hinge => (1.0 - z).max(0.0),
            LossKind::Ramp => (1.0 - z).clamp(0.0, 1.0),
            LossKind::ZeroOne => {
                if z <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative at `z`; the zero subgradient at the hinge and ramp kinks.
    /// Returns 0 for `ZeroOne`, callers must reject it beforehand.
    #[inline]
    pub(crate) fn deriv(self, z: f64) -> f64 {
        match self {
            LossKind::Logistic => -sigmoid(-z),
            LossKind::Squared => 2.0 * (z - 1.0),
            LossKind::Hinge => {
                if z < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Ramp => {
                if z > 0.0 && z < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::ZeroOne => 0.0,
        }
    }

    pub fn value(self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::domain(format!("loss evaluated at non-finite margin {z}")));
        }
        Ok(self.eval(z))
    }

    pub fn grad(self, z: f64) -> Result<f64> {
        if !self.is_trainable() {
            return Err(Error::Unsupported(
                "the zero-one loss has no useful gradient".into(),
            ));
        }
        if !z.is_finite() {
            return Err(Error::domain(format!("loss gradient at non-finite margin {z}")));
        }
        Ok(self.deriv(z))
    }

    /// `(C_ℓ, L_ℓ)`: the sup of the loss over `[−c_g, c_g]` and a Lipschitz
    /// constant valid on that interval.
    pub fn constants(self, c_g: f64) -> Result<(f64, f64)> {
        if !(c_g > 0.0 && c_g.is_finite()) {
            return Err(Error::domain(format!("C_g must be positive and finite, got {c_g}")));
        }
        match self {
            LossKind::Logistic => Ok((softplus(c_g), 1.0)),
            LossKind::Squared => Ok(((c_g + 1.0).powi(2), 2.0 * (c_g + 1.0))),
            LossKind::Hinge => Ok((1.0 + c_g, 1.0)),
            LossKind::Ramp => Ok((1.0, 1.0)),
            LossKind::ZeroOne => Err(Error::Unsupported(
                "the zero-one loss is not Lipschitz".into(),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Squared => "squared",
            LossKind::Hinge => "hinge",
            LossKind::Ramp => "ramp",
            LossKind::ZeroOne => "zero-one",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            "hinge" => Ok(LossKind::Hinge),
            "ramp" => Ok(LossKind::Ramp),
            "zero-one" | "zeroone" | "01" => Ok(LossKind::ZeroOne),
            other => Err(Error::format("loss", format!("unknown loss '{other}'"))),
        }
    }
}

/// Free-function form of [`LossKind::value`].
pub fn loss_value(kind: LossKind, z: f64) -> Result<f64> {
    kind.value(z)
}

/// Free-function form of [`LossKind::grad`].
pub fn loss_grad(kind: LossKind, z: f64) -> Result<f64> {
    kind.grad(z)
}

/// Free-function form of [`LossKind::constants`].
pub fn loss_constants(kind: LossKind, c_g: f64) -> Result<(f64, f64)> {
    kind.constants(c_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn forced_values() {
        assert_relative_eq!(loss_value(LossKind::Logistic, 0.0).unwrap(), std::f64::consts::LN_2);
        assert_eq!(loss_value(LossKind::Squared, 1.0).unwrap(), 0.0);
        assert_eq!(loss_value(LossKind::Ramp, -5.0).unwrap(), 1.0);
        assert_eq!(loss_value(LossKind::Ramp, 0.5).unwrap(), 0.5);
        assert_eq!(loss_value(LossKind::Hinge, 2.0).unwrap(), 0.0);
        assert_eq!(loss_value(LossKind::ZeroOne, 0.0).unwrap(), 1.0);
        assert_eq!(loss_value(LossKind::ZeroOne, 1e-300).unwrap(), 0.0);
    }

    // Reference values from 40-digit arithmetic of log1p(exp(-z)).
    const LOGISTIC_REFERENCE: [(f64, f64); 10] = [
        (-50.0, 50.0),
        (-10.0, 10.000045398899216865),
        (-1.0, 1.313261687518222834),
        (0.0, 0.69314718055994530942),
        (0.5, 0.47407698418010668087),
        (1.0, 0.31326168751822283405),
        (10.0, 4.5398899216864646769e-5),
        (30.0, 9.3576229688397367794e-14),
        (50.0, 1.928749847963917783e-22),
        (700.0, 9.8596765437597708567e-305),
    ];

    #[test]
    fn logistic_matches_extended_precision() {
        for (z, want) in LOGISTIC_REFERENCE {
            let got = loss_value(LossKind::Logistic, z).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
        assert!(loss_value(LossKind::Logistic, -700.0).unwrap().is_finite());
    }

    #[test]
    fn gradients_at_forced_points() {
        assert_eq!(loss_grad(LossKind::Logistic, 0.0).unwrap(), -0.5);
        assert_eq!(loss_grad(LossKind::Squared, 0.0).unwrap(), -2.0);
        assert_eq!(loss_grad(LossKind::Hinge, 1.0).unwrap(), 0.0);
        assert_eq!(loss_grad(LossKind::Ramp, 0.0).unwrap(), 0.0);
        assert_eq!(loss_grad(LossKind::Ramp, 1.0).unwrap(), 0.0);
        assert!(matches!(
            loss_grad(LossKind::ZeroOne, 0.3),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn non_finite_margin_rejected() {
        assert!(matches!(loss_value(LossKind::Hinge, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            loss_grad(LossKind::Logistic, f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn constants_examples() {
        assert_eq!(loss_constants(LossKind::Ramp, 0.3).unwrap(), (1.0, 1.0));
        assert_eq!(loss_constants(LossKind::Ramp, 7.0).unwrap(), (1.0, 1.0));
        let (c, l) = loss_constants(LossKind::Logistic, 1.0).unwrap();
        assert_relative_eq!(c, 1.3132616875182228, max_relative = 1e-15);
        assert_eq!(l, 1.0);
        assert_eq!(loss_constants(LossKind::Squared, 2.0).unwrap(), (9.0, 6.0));
        assert!(loss_constants(LossKind::Hinge, 0.0).is_err());
        assert!(loss_constants(LossKind::ZeroOne, 1.0).is_err());
    }

    #[test]
    fn constants_dominate_grid_scan() {
        for kind in LossKind::TRAINABLE {
            for c_g in [0.1, 0.5, 1.0, 2.5, 6.0] {
                let (c_l, l_l) = kind.constants(c_g).unwrap();
                let steps = (2.0 * c_g / 1e-3).round() as usize;
                let mut prev: Option<(f64, f64)> = None;
                for k in 0..=steps {
                    let z = -c_g + k as f64 * 1e-3;
                    let z = z.min(c_g);
                    let v = kind.eval(z);
                    assert!(v <= c_l + 1e-12, "{kind} sup violated at {z}");
                    if let Some((pz, pv)) = prev {
                        if z > pz {
                            let slope = ((v - pv) / (z - pz)).abs();
                            assert!(slope <= l_l + 1e-9, "{kind} slope {slope} > {l_l}");
                        }
                    }
                    prev = Some((z, v));
                }
            }
        }
    }

    fn near_kink(kind: LossKind, z: f64) -> bool {
        match kind {
            LossKind::Hinge => (z - 1.0).abs() < 1e-3,
            LossKind::Ramp => z.abs() < 1e-3 || (z - 1.0).abs() < 1e-3,
            _ => false,
        }
    }

    proptest! {
        #[test]
        fn grad_matches_central_difference(z in -20.0f64..20.0, idx in 0usize..4) {
            let kind = LossKind::TRAINABLE[idx];
            prop_assume!(!near_kink(kind, z));
            let h = 1e-4;
            let fd = (kind.eval(z + h) - kind.eval(z - h)) / (2.0 * h);
            prop_assert!((kind.grad(z).unwrap() - fd).abs() <= 1e-5);
        }

        #[test]
        fn values_non_negative(z in -1e3f64..1e3, idx in 0usize..5) {
            let kind = [LossKind::Logistic, LossKind::Squared, LossKind::Hinge, LossKind::Ramp, LossKind::ZeroOne][idx];
            prop_assert!(kind.value(z).unwrap() >= 0.0);
        }

        #[test]
        fn logistic_finite_on_wide_range(z in -700.0f64..700.0) {
            let v = LossKind::Logistic.value(z).unwrap();
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
