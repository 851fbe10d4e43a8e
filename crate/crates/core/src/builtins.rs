//! Builtin field registry.
//!
//! | name        | parameter | field                      |
//! |-------------|-----------|----------------------------|
//! | `cassini`   | `a`       | `(x²+y²)² − 2a²(x²−y²)`    |
//! | `cassini-g` | `b`       | `(x²+y²)² + 2b²(x²−y²)`    |
//! | `quadratic` |           | `x² + y²`                  |
//! | `saddle`    |           | `x² − y²`                  |
//! | `exp-sum`   |           | `e^{x+y}`                  |
//!
//! Bivariate polynomials are given as `(i, j, c)` monomial triples.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cassini::{cassini_field, g_field, CassiniParams};
use crate::error::{invalid, Error, Result};
use crate::field::{Monomial, Point2, Polynomial, ScalarField2, SymMat2, Vec2};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quadratic;

impl ScalarField2 for Quadratic {
    fn value(&self, p: Point2) -> f64 {
        p.x * p.x + p.y * p.y
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        [2.0 * p.x, 2.0 * p.y]
    }
    fn hessian(&self, _: Point2) -> SymMat2 {
        SymMat2::diag(2.0, 2.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Saddle;

impl ScalarField2 for Saddle {
    fn value(&self, p: Point2) -> f64 {
        p.x * p.x - p.y * p.y
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        [2.0 * p.x, -2.0 * p.y]
    }
    fn hessian(&self, _: Point2) -> SymMat2 {
        SymMat2::diag(2.0, -2.0)
    }
}

/// `e^{x+y}`: convex, with smallest (quasi)convexity level 0 that is never
/// attained.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpSum;

impl ScalarField2 for ExpSum {
    fn value(&self, p: Point2) -> f64 {
        (p.x + p.y).exp()
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        let e = (p.x + p.y).exp();
        [e, e]
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        let e = (p.x + p.y).exp();
        SymMat2::new(e, e, e)
    }
}

/// Serializable description of a field: a registry entry or a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum FieldSpec {
    Cassini { a: f64 },
    CassiniG { b: f64 },
    Quadratic,
    Saddle,
    ExpSum,
    Polynomial { terms: Vec<Monomial> },
}

pub const REGISTRY_NAMES: [&str; 6] = [
    "cassini",
    "cassini-g",
    "quadratic",
    "saddle",
    "exp-sum",
    "polynomial",
];

impl FieldSpec {
    /// Looks a registry name up. `param` supplies `a` or `b` where needed.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |what: &str| {
            param.ok_or_else(|| invalid(format!("field {name:?} needs parameter {what}")))
        };
        Ok(match name {
            "cassini" => FieldSpec::Cassini { a: need("a")? },
            "cassini-g" => FieldSpec::CassiniG { b: need("b")? },
            "quadratic" => FieldSpec::Quadratic,
            "saddle" => FieldSpec::Saddle,
            "exp-sum" => FieldSpec::ExpSum,
            "polynomial" => return Err(invalid("polynomial fields need monomial triples")),
            other => return Err(Error::UnknownField(other.to_owned())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldSpec::Cassini { .. } => "cassini",
            FieldSpec::CassiniG { .. } => "cassini-g",
            FieldSpec::Quadratic => "quadratic",
            FieldSpec::Saddle => "saddle",
            FieldSpec::ExpSum => "exp-sum",
            FieldSpec::Polynomial { .. } => "polynomial",
        }
    }

    pub fn build(&self) -> Result<Arc<dyn ScalarField2>> {
        Ok(match self {
            FieldSpec::Cassini { a } => Arc::new(cassini_field(CassiniParams::new(*a)?)),
            FieldSpec::CassiniG { b } => Arc::new(g_field(*b)?),
            FieldSpec::Quadratic => Arc::new(Quadratic),
            FieldSpec::Saddle => Arc::new(Saddle),
            FieldSpec::ExpSum => Arc::new(ExpSum),
            FieldSpec::Polynomial { terms } => Arc::new(Polynomial::new(terms.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::check_derivatives;

    #[test]
    fn registry_lookup() {
        assert_eq!(
            FieldSpec::from_name("cassini", Some(2.0)).unwrap(),
            FieldSpec::Cassini { a: 2.0 }
        );
        assert!(FieldSpec::from_name("cassini", None).is_err());
        assert!(matches!(
            FieldSpec::from_name("rosenbrock", None),
            Err(Error::UnknownField(_))
        ));
        assert!(FieldSpec::Cassini { a: -1.0 }.build().is_err());
        for name in REGISTRY_NAMES.iter().filter(|n| **n != "polynomial") {
            let spec = FieldSpec::from_name(name, Some(1.0)).unwrap();
            assert_eq!(spec.name(), *name);
            spec.build().unwrap();
        }
    }

    #[test]
    fn spec_json_shape() {
        let s = serde_json::to_string(&FieldSpec::CassiniG { b: 0.5 }).unwrap();
        assert_eq!(s, r#"{"name":"cassini-g","b":0.5}"#);
        let p: FieldSpec =
            serde_json::from_str(r#"{"name":"polynomial","terms":[{"i":2,"j":0,"c":1.0}]}"#).unwrap();
        assert_eq!(p.build().unwrap().value(Point2::new(3.0, 7.0)), 9.0);
    }

    #[test]
    fn quadratic_derivatives_are_exact() {
        let c = check_derivatives(&Quadratic, Point2::new(0.3, -0.7), 1e-4).unwrap();
        assert!(c.grad_err < 1e-6 && c.hess_err < 1e-4, "{c:?}");
    }
}
