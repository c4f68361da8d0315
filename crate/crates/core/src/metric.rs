//! Finite metric spaces.
//!
//! The geometry diagnostics and the point-estimate machinery only need
//! pairwise distances, so they are written against this trait. Model
//! families implement it with the Hellinger distance; tests and engineered
//! verification cases use explicit matrices or point clouds.

use crate::error::{Error, Result};

pub trait Metric {
    fn len(&self) -> usize;

    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }

    /// Indices within distance `radius` of `center` (closed ball).
    fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.dist(center, j) <= radius)
            .collect()
    }
}

/// Dense symmetric distance matrix.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Dimension {
                left: d.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::domain(format!("invalid distance at ({i},{j}): {v}")));
                }
                if (v - d[j * n + i]).abs() > 0.0 {
                    return Err(Error::domain(format!("asymmetric distance at ({i},{j})")));
                }
            }
            if d[i * n + i] != 0.0 {
                return Err(Error::domain(format!("nonzero self-distance at {i}")));
            }
        }
        Ok(Self { n, d })
    }

    /// Points on the real line with the absolute-value distance.
    pub fn from_points_1d(points: &[f64]) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        Self { n, d }
    }
}

impl Metric for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}
