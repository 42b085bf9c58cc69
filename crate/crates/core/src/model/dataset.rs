use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A set of points in R^d stored row-major, tagged with the seed that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<f64>,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn from_flat(dim: usize, points: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dataset dimension must be at least 1".into()));
        }
        if points.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, found: points.len() % dim });
        }
        Ok(Dataset { dim, points, seed })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(1);
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            flat.extend_from_slice(p);
        }
        Dataset::from_flat(dim, flat, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.points
    }

    /// Mutable access to one point; used to build neighboring datasets.
    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Points `start..end` as a new dataset (same seed tag).
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset { dim: self.dim, points: self.points[start * self.dim..end * self.dim].to_vec(), seed: self.seed }
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            points.extend_from_slice(self.point(i));
        }
        Dataset { dim: self.dim, points, seed: self.seed }
    }

    /// One point per line, coordinates separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 20);
        for p in self.iter() {
            for (j, v) in p.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                write!(out, "{v:?}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = 0;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|e| Error::InvalidParameter(format!("line {}: {e}", lineno + 1)))?;
            if dim == 0 {
                dim = row.len();
            } else if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            points.extend(row);
        }
        Dataset::from_flat(dim.max(1), points, None)
    }
}
