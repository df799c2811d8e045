//! Scalar parameter functions that weight the separable terms.

use serde::{Deserialize, Serialize};

/// A scalar function `Γ -> R` of the parameter.
///
/// The reduced model only ever needs a handful of cheap closed forms, so the
/// set is closed and serializable (it ends up in the run manifest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    /// `c`
    Const { value: f64 },
    /// `offset + slope * mu`
    Affine { offset: f64, slope: f64 },
    /// `mu^exponent`
    Power { exponent: i32 },
}

impl ScalarFn {
    pub const ONE: ScalarFn = ScalarFn::Const { value: 1.0 };
    pub const MU: ScalarFn = ScalarFn::Power { exponent: 1 };

    pub fn constant(value: f64) -> Self {
        ScalarFn::Const { value }
    }

    pub fn affine(offset: f64, slope: f64) -> Self {
        ScalarFn::Affine { offset, slope }
    }

    #[inline]
    pub fn eval(&self, mu: f64) -> f64 {
        match *self {
            ScalarFn::Const { value } => value,
            ScalarFn::Affine { offset, slope } => offset + slope * mu,
            ScalarFn::Power { exponent } => mu.powi(exponent),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_closed_forms() {
        assert_eq!(ScalarFn::ONE.eval(7.0), 1.0);
        assert_eq!(ScalarFn::MU.eval(7.0), 7.0);
        assert_eq!(ScalarFn::affine(1.0, -2.0).eval(3.0), -5.0);
        assert_eq!(ScalarFn::Power { exponent: 2 }.eval(3.0), 9.0);
    }

    #[test]
    fn serializes_with_kind_tag() {
        let s = serde_json::to_string(&ScalarFn::affine(0.5, 2.0)).unwrap();
        assert_eq!(s, r#"{"kind":"affine","offset":0.5,"slope":2.0}"#);
        let back: ScalarFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ScalarFn::affine(0.5, 2.0));
    }
}
