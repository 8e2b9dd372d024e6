//! Hard-constraint wrapper `G = c·G̃ + g`.

use std::fmt;
use std::sync::Arc;

use crate::geometry::DomainSpec;
use crate::jet::ScalarJet;

use super::ModelError;

/// Field of the trunk coordinate `y` with derivatives up to the requested
/// order.
pub type FieldFn = dyn Fn(&[f64], usize) -> ScalarJet + Send + Sync;

/// A named closure-backed scalar field. The name is recorded in model
/// manifests; the closure itself cannot be serialized.
#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    pub f: Arc<FieldFn>,
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[f64], usize) -> ScalarJet + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

/// The factor `c` that vanishes on the constrained boundary.
#[derive(Debug, Clone)]
pub enum DistanceField {
    /// `c(x, t) = t·x·(1 − x)` on `[0, 1] × [0, 1]`: zero at `t = 0`,
    /// `x = 0` and `x = 1`.
    UnitIntervalTime,
    /// `c` of the per-realization [`DomainSpec`].
    Domain,
    Custom(ScalarField),
}

/// The lift `g` carrying the boundary data.
#[derive(Debug, Clone)]
pub enum LiftField {
    Zero,
    Custom(ScalarField),
}

#[derive(Debug, Clone, Default)]
pub enum ConstraintWrapper {
    #[default]
    None,
    Dirichlet {
        distance: DistanceField,
        lift: LiftField,
    },
}

fn unit_interval_time(y: &[f64], order: usize) -> ScalarJet {
    let (x, t) = (y[0], y[1]);
    let s = x * (1.0 - x);
    let ds = 1.0 - 2.0 * x;
    ScalarJet {
        value: t * s,
        grad: vec![t * ds, s],
        hess: vec![-2.0 * t, ds, ds, 0.0],
    }
    .truncated(order)
}

impl ConstraintWrapper {
    /// Homogeneous Dirichlet data on a realization's [`DomainSpec`].
    pub fn domain() -> Self {
        ConstraintWrapper::Dirichlet {
            distance: DistanceField::Domain,
            lift: LiftField::Zero,
        }
    }

    /// Zero initial and boundary values on `[0, 1]` in space.
    pub fn unit_interval_time() -> Self {
        ConstraintWrapper::Dirichlet {
            distance: DistanceField::UnitIntervalTime,
            lift: LiftField::Zero,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ConstraintWrapper::None)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConstraintWrapper::None => "none",
            ConstraintWrapper::Dirichlet { .. } => "dirichlet",
        }
    }

    /// `c(y)` with derivatives; identically one without a constraint.
    pub fn c_jet(
        &self,
        y: &[f64],
        domain: Option<&DomainSpec>,
        order: usize,
    ) -> Result<ScalarJet, ModelError> {
        match self {
            ConstraintWrapper::None => Ok(ScalarJet::constant(1.0, y.len()).truncated(order)),
            ConstraintWrapper::Dirichlet { distance, .. } => match distance {
                DistanceField::UnitIntervalTime => {
                    if y.len() != 2 {
                        return Err(ModelError::DimensionMismatch {
                            expected: 2,
                            got: y.len(),
                        });
                    }
                    Ok(unit_interval_time(y, order))
                }
                DistanceField::Domain => {
                    let domain = domain.ok_or(ModelError::MissingDomain)?;
                    if y.len() != 2 {
                        return Err(ModelError::DimensionMismatch {
                            expected: 2,
                            got: y.len(),
                        });
                    }
                    Ok(domain.c_field(y[0], y[1], order)?)
                }
                DistanceField::Custom(field) => Ok((field.f)(y, order).truncated(order)),
            },
        }
    }

    /// `g(y)` with derivatives; zero without a constraint.
    pub fn g_jet(&self, y: &[f64], order: usize) -> ScalarJet {
        match self {
            ConstraintWrapper::Dirichlet {
                lift: LiftField::Custom(field),
                ..
            } => (field.f)(y, order).truncated(order),
            _ => ScalarJet::constant(0.0, y.len()).truncated(order),
        }
    }

    pub fn c_value(&self, y: &[f64], domain: Option<&DomainSpec>) -> Result<f64, ModelError> {
        Ok(self.c_jet(y, domain, 0)?.value)
    }

    pub fn g_value(&self, y: &[f64]) -> f64 {
        self.g_jet(y, 0).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_time_vanishes_on_constrained_edges() {
        let w = ConstraintWrapper::unit_interval_time();
        for s in [0.0, 0.13, 0.5, 0.91, 1.0] {
            assert_eq!(w.c_value(&[s, 0.0], None).unwrap(), 0.0);
            assert_eq!(w.c_value(&[0.0, s], None).unwrap(), 0.0);
            assert_eq!(w.c_value(&[1.0, s], None).unwrap(), 0.0);
        }
        assert!(w.c_value(&[0.5, 0.5], None).unwrap() > 0.0);
        assert_eq!(w.c_value(&[0.5, 1.0], None).unwrap(), 0.25);
    }

    #[test]
    fn unit_interval_time_derivatives() {
        let w = ConstraintWrapper::unit_interval_time();
        let j = w.c_jet(&[0.3, 0.8], None, 2).unwrap();
        let h = 1e-6;
        let c = |x: f64, t: f64| t * x * (1.0 - x);
        assert!((j.grad[0] - (c(0.3 + h, 0.8) - c(0.3 - h, 0.8)) / (2.0 * h)).abs() < 1e-9);
        assert!((j.grad[1] - (c(0.3, 0.8 + h) - c(0.3, 0.8 - h)) / (2.0 * h)).abs() < 1e-9);
        assert_eq!(j.hess, vec![-1.6, 0.4, 0.4, 0.0]);
    }

    #[test]
    fn domain_kind_needs_a_domain() {
        let w = ConstraintWrapper::domain();
        assert!(matches!(w.c_value(&[1.0, 1.0], None), Err(ModelError::MissingDomain)));
        let d = DomainSpec::rectangle(0.5, 0.5, 1.5, 1.5).unwrap();
        assert_eq!(w.c_value(&[1.0, 1.0], Some(&d)).unwrap(), 0.0625);
    }

    #[test]
    fn none_is_unit_factor_zero_lift() {
        let w = ConstraintWrapper::None;
        let j = w.c_jet(&[0.2, 0.3], None, 2).unwrap();
        assert_eq!(j, ScalarJet::constant(1.0, 2));
        assert_eq!(w.g_value(&[0.2, 0.3]), 0.0);
    }

    #[test]
    fn custom_lift() {
        let w = ConstraintWrapper::Dirichlet {
            distance: DistanceField::UnitIntervalTime,
            lift: LiftField::Custom(ScalarField::new("x", |y, _| ScalarJet {
                value: y[0],
                grad: vec![1.0, 0.0],
                hess: vec![0.0; 4],
            })),
        };
        assert_eq!(w.g_value(&[0.4, 0.1]), 0.4);
        assert!(w.g_jet(&[0.4, 0.1], 1).hess.is_empty());
    }
}
