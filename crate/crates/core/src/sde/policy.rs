use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hjb::ValueFunction;

/// A control rule `x -> u(x) > 0`.
#[derive(Debug, Clone)]
pub struct Policy(Rule);

#[derive(Debug, Clone)]
enum Rule {
    Constant(f64),
    Benchmark,
    Feedback(Arc<ValueFunction>),
}

impl Policy {
    /// Constant load `u0 > 0`.
    pub fn constant(u0: f64) -> Result<Self> {
        if u0.is_finite() && u0 > 0.0 {
            Ok(Self(Rule::Constant(u0)))
        } else {
            Err(Error::Domain(format!(
                "constant control must be finite and > 0, got {u0}"
            )))
        }
    }

    /// `u(x) = (1 + x)/(1 + x^2)`.
    pub fn benchmark() -> Self {
        Self(Rule::Benchmark)
    }

    /// `u(x) = -1/V'(x)` from a solved value function.
    pub fn feedback(v: impl Into<Arc<ValueFunction>>) -> Self {
        Self(Rule::Feedback(v.into()))
    }

    pub fn value_function(&self) -> Option<&ValueFunction> {
        match &self.0 {
            Rule::Feedback(v) => Some(v),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.0 {
            Rule::Constant(u) => format!("constant:{u}"),
            Rule::Benchmark => "benchmark".into(),
            Rule::Feedback(_) => "feedback".into(),
        }
    }

    #[inline]
    pub fn control(&self, x: f64) -> Result<f64> {
        match &self.0 {
            Rule::Constant(u) => Ok(*u),
            Rule::Benchmark => Ok((1.0 + x) / (1.0 + x * x)),
            Rule::Feedback(v) => feedback_control(v, x),
        }
    }
}

/// `-1/V'(x)`, with `V'` interpolated between nodes and taken from the
/// large-state slope beyond the grid.
pub fn feedback_control(v: &ValueFunction, x: f64) -> Result<f64> {
    let slope = v.slope_at(x.max(0.0))?;
    if !(slope < 0.0) {
        return Err(Error::Internal(format!(
            "value function gradient {slope} is not negative at x = {x}"
        )));
    }
    Ok(-1.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjb::{gradient, tail_slope, Grid};
    use crate::model::LakeParams;

    fn toy() -> ValueFunction {
        let g = Grid::new(2.0, 8).unwrap();
        let values = g.nodes().map(|x| -x - 0.4 * x * x).collect();
        ValueFunction::new(g, values, LakeParams::standard()).unwrap()
    }

    #[test]
    fn constant_must_be_positive() {
        assert!(Policy::constant(0.0).is_err());
        assert!(Policy::constant(-1.0).is_err());
        assert!(Policy::constant(f64::NAN).is_err());
        assert_eq!(Policy::constant(0.3).unwrap().control(5.0).unwrap(), 0.3);
    }

    #[test]
    fn benchmark_rule() {
        let p = Policy::benchmark();
        assert_eq!(p.control(0.0).unwrap(), 1.0);
        assert_eq!(p.control(1.0).unwrap(), 1.0);
        assert!((p.control(3.0).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn feedback_at_nodes_and_beyond() {
        let v = toy();
        let d = gradient(&v);
        for (i, x) in v.xs().into_iter().enumerate() {
            assert!((feedback_control(&v, x).unwrap() + 1.0 / d[i]).abs() < 1e-12);
        }
        let beyond = feedback_control(&v, 3.0).unwrap();
        assert!(beyond > 0.0);
        assert_eq!(beyond, -1.0 / tail_slope(3.0, v.params()).unwrap());
        assert!(Policy::feedback(v).control(1.3).unwrap() > 0.0);
    }
}
