use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Locates `x` on an ascending axis: returns the left node index of the
/// bracketing cell and the fractional position inside it. Callers must have
/// checked `axis[0] <= x <= axis[last]`.
#[inline]
pub(crate) fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1).min(n - 2);
    let f = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, f)
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::Validation(format!("{name} needs at least 2 breakpoints")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation(format!("{name} must be finite and strictly ascending")));
    }
    Ok(())
}

/// A rectangular lookup table over (speed, torque).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub kind: String,
    pub units: String,
    /// Speed breakpoints, rad/s.
    pub x_axis: Vec<f64>,
    /// Torque breakpoints, N·m.
    pub y_axis: Vec<f64>,
    /// Row-major values, one row per `x_axis` entry.
    pub values: Vec<f64>,
}

impl Grid2D {
    pub fn new(
        kind: impl Into<String>,
        units: impl Into<String>,
        x_axis: Vec<f64>,
        y_axis: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let g = Self { kind: kind.into(), units: units.into(), x_axis, y_axis, values };
        g.validate()?;
        Ok(g)
    }

    /// Fills a grid by evaluating `f(x, y)` at every node.
    pub fn from_fn(
        kind: impl Into<String>,
        units: impl Into<String>,
        x_axis: Vec<f64>,
        y_axis: Vec<f64>,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(x_axis.len() * y_axis.len());
        for &x in &x_axis {
            for &y in &y_axis {
                values.push(f(x, y));
            }
        }
        Self::new(kind, units, x_axis, y_axis, values)
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("x_axis", &self.x_axis)?;
        check_axis("y_axis", &self.y_axis)?;
        if self.values.len() != self.x_axis.len() * self.y_axis.len() {
            return Err(Error::Validation(format!(
                "{} map: {} values for a {}x{} grid",
                self.kind,
                self.values.len(),
                self.x_axis.len(),
                self.y_axis.len()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.y_axis.len() + j]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_axis[0]
            && x <= self.x_axis[self.x_axis.len() - 1]
            && y >= self.y_axis[0]
            && y <= self.y_axis[self.y_axis.len() - 1]
    }

    /// Bilinear interpolation; exact at grid nodes.
    pub fn interp(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(Error::OutOfRange { x, y });
        }
        Ok(self.interp_unchecked(x, y))
    }

    /// Bilinear interpolation with the query clamped into the bounding box.
    #[inline]
    pub fn interp_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(self.x_axis[0], self.x_axis[self.x_axis.len() - 1]);
        let y = y.clamp(self.y_axis[0], self.y_axis[self.y_axis.len() - 1]);
        self.interp_unchecked(x, y)
    }

    #[inline]
    fn interp_unchecked(&self, x: f64, y: f64) -> f64 {
        let (i, fx) = locate(&self.x_axis, x);
        let (j, fy) = locate(&self.y_axis, y);
        let ny = self.y_axis.len();
        let v00 = self.values[i * ny + j];
        let v01 = self.values[i * ny + j + 1];
        let v10 = self.values[(i + 1) * ny + j];
        let v11 = self.values[(i + 1) * ny + j + 1];
        (1.0 - fx) * (1.0 - fy) * v00 + (1.0 - fx) * fy * v01 + fx * (1.0 - fy) * v10 + fx * fy * v11
    }

    /// Values along the torque axis at speed `x`, interpolated between the
    /// two neighbouring speed rows.
    pub fn column_at(&self, x: f64) -> Vec<f64> {
        let x = x.clamp(self.x_axis[0], self.x_axis[self.x_axis.len() - 1]);
        let (i, fx) = locate(&self.x_axis, x);
        let ny = self.y_axis.len();
        (0..ny).map(|j| (1.0 - fx) * self.values[i * ny + j] + fx * self.values[(i + 1) * ny + j]).collect()
    }

    pub fn map_values(&self, kind: &str, units: &str, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            kind: kind.into(),
            units: units.into(),
            x_axis: self.x_axis.clone(),
            y_axis: self.y_axis.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Convenience wrapper around [`Grid2D::interp`].
pub fn interp2(map: &Grid2D, x: f64, y: f64) -> Result<f64> {
    map.interp(x, y)
}

/// A piecewise-linear curve over speed, clamped outside its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub x_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(x_axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Self { x_axis, values };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("curve x_axis", &self.x_axis)?;
        if self.values.len() != self.x_axis.len() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("curve values must be finite and match the axis".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x_axis.len();
        if x <= self.x_axis[0] {
            return self.values[0];
        }
        if x >= self.x_axis[n - 1] {
            return self.values[n - 1];
        }
        let (i, f) = locate(&self.x_axis, x);
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { x_axis: self.x_axis.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Maximum of `x * value(x)` over the curve's segments. Each segment is
    /// a quadratic in `x`, so the maximum is at a node or at the vertex.
    pub fn max_power(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.x_axis.len() - 1 {
            let (x0, x1) = (self.x_axis[i], self.x_axis[i + 1]);
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            best = best.max(x0 * v0).max(x1 * v1);
            let slope = (v1 - v0) / (x1 - x0);
            if slope < 0.0 {
                // d/dx [x (v0 + slope (x - x0))] = 0
                let xv = (slope * x0 - v0) / (2.0 * slope);
                if xv > x0 && xv < x1 {
                    best = best.max(xv * (v0 + slope * (xv - x0)));
                }
            }
        }
        best
    }
}
