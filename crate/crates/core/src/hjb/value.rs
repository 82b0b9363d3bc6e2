use super::{tail_slope, Grid};
use crate::error::{Error, Result};
use crate::model::LakeParams;

/// Node values of a (discrete) value function on a uniform grid.
///
/// Values are strictly decreasing. The node gradients are computed once at
/// construction and shared by the feedback law.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    grid: Grid,
    params: LakeParams,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl ValueFunction {
    pub fn new(grid: Grid, values: Vec<f64>, params: LakeParams) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidValueFunction(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValueFunction(format!(
                "non-finite value at node {i}"
            )));
        }
        if let Some(i) = values.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidValueFunction(format!(
                "values not strictly decreasing at node {i} ({} -> {})",
                values[i],
                values[i + 1]
            )));
        }
        let slopes = node_gradients(&values, grid.dx());
        Ok(Self {
            grid,
            params,
            values,
            slopes,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &LakeParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Node gradients, see [`gradient`].
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn xs(&self) -> Vec<f64> {
        self.grid.nodes().collect()
    }

    /// Piecewise linear interpolation of the node values on `[0, l]`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.interpolate(&self.values, x)
    }

    /// `V'(x)`: node gradients interpolated linearly on `[0, l]`, the
    /// large-state slope beyond `l`.
    pub fn slope_at(&self, x: f64) -> Result<f64> {
        if x > self.grid.l() {
            tail_slope(x, &self.params)
        } else {
            self.interpolate(&self.slopes, x)
        }
    }

    fn interpolate(&self, table: &[f64], x: f64) -> Result<f64> {
        if !(x >= 0.0 && x <= self.grid.l()) {
            return Err(Error::Domain(format!(
                "x = {x} outside the grid [0, {}]",
                self.grid.l()
            )));
        }
        let i = self.grid.locate(x);
        if i == self.grid.n() {
            return Ok(table[i]);
        }
        let theta = (x - self.grid.x(i)) / self.grid.dx();
        Ok(table[i] + theta * (table[i + 1] - table[i]))
    }
}

fn node_gradients(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut out = Vec::with_capacity(n + 1);
    out.push((values[1] - values[0]) / dx);
    for i in 1..n {
        out.push((values[i + 1] - values[i - 1]) / (2.0 * dx));
    }
    out.push((values[n] - values[n - 1]) / dx);
    out
}

/// Central differences at interior nodes, one-sided at the ends.
/// Every entry is negative for a strictly decreasing value function.
pub fn gradient(v: &ValueFunction) -> Vec<f64> {
    v.slopes.clone()
}
