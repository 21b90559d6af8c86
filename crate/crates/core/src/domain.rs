//! Reservation vectors, the box feasible set and Euclidean projection onto it.
//!
//! A decision `z = (x, y)` stacks the in-advance reservations `x` over the
//! spot reservations `y`; both live in `[0, D_1] x ... x [0, D_m]`.

use crate::error::{ensure_len, Error, Result};

/// Per-resource reservation caps `D_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleBox {
    bounds: Vec<f64>,
}

impl FeasibleBox {
    pub fn new(bounds: Vec<f64>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("feasible box needs at least one resource".into()));
        }
        if let Some(b) = bounds.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Config(format!("resource bound must be positive, got {b}")));
        }
        Ok(Self { bounds })
    }

    /// `m` unit-capacity resources.
    pub fn unit(m: usize) -> Result<Self> {
        Self::new(vec![1.0; m])
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Number of resource types `m`.
    pub fn resources(&self) -> usize {
        self.bounds.len()
    }

    /// Length `2m` of a stacked decision vector.
    pub fn dim(&self) -> usize {
        2 * self.bounds.len()
    }

    /// `D = sqrt(sum D_i^2)`; the decision space `Δ²` has diameter `√2·D`.
    pub fn diameter(&self) -> f64 {
        self.bounds.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// Upper bound of stacked coordinate `k` (x-block then y-block).
    pub fn upper(&self, k: usize) -> f64 {
        self.bounds[k % self.bounds.len()]
    }

    /// Euclidean projection onto `Δ²`. The set is an axis-aligned box, so the
    /// coordinate-wise clamp is the exact minimizer of the distance.
    pub fn project(&self, point: &[f64]) -> Result<Decision> {
        ensure_len(self.dim(), point.len())?;
        let m = self.resources();
        let clamp = |k: usize| point[k].clamp(0.0, self.upper(k));
        Ok(Decision {
            x: (0..m).map(clamp).collect(),
            y: (m..2 * m).map(clamp).collect(),
        })
    }

    /// Geometric center of `Δ²`.
    pub fn center(&self) -> Decision {
        let half: Vec<f64> = self.bounds.iter().map(|b| 0.5 * b).collect();
        Decision {
            x: half.clone(),
            y: half,
        }
    }

    pub fn contains(&self, z: &Decision) -> bool {
        z.x.len() == self.resources()
            && z.y.len() == self.resources()
            && z.x
                .iter()
                .chain(z.y.iter())
                .enumerate()
                .all(|(k, v)| *v >= 0.0 && *v <= self.upper(k))
    }
}

/// A reservation plan: in-advance amounts `x` and spot amounts `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Decision {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        ensure_len(x.len(), y.len())?;
        Ok(Self { x, y })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            x: vec![0.0; m],
            y: vec![0.0; m],
        }
    }

    /// Splits a stacked `2m` vector into `(x, y)` without any projection.
    pub fn from_stacked(z: &[f64]) -> Result<Self> {
        if z.len() % 2 != 0 {
            return Err(Error::Dimension {
                expected: z.len() + 1,
                got: z.len(),
            });
        }
        let m = z.len() / 2;
        Ok(Self {
            x: z[..m].to_vec(),
            y: z[m..].to_vec(),
        })
    }

    pub fn resources(&self) -> usize {
        self.x.len()
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.x.iter().chain(self.y.iter()).copied().collect()
    }

    pub fn distance(&self, other: &Decision) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .zip(other.x.iter().chain(other.y.iter()))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Stacked partial derivatives of a slot loss: `∂/∂x` then `∂/∂y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradVector(Vec<f64>);

impl GradVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(Error::Dimension {
                expected: values.len() + 1,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("gradient has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; 2 * m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// `||self - other||²`.
    pub fn dist_sq(&self, other: &GradVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> GradVector {
        GradVector(self.0.iter().map(|v| v * factor).collect())
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }
}
