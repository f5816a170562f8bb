use crate::error::{Error, Result};

/// `n` observations `(x_i, y_i)` with `x_i` in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("input dimension must be positive".into()));
        }
        if ys.is_empty() {
            return Err(Error::InvalidData("dataset must contain at least one point".into()));
        }
        if xs.len() != ys.len() * dim {
            return Err(Error::InvalidData(format!(
                "{} inputs of dimension {dim} do not match {} responses",
                xs.len() as f64 / dim as f64,
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("dataset contains non-finite values".into()));
        }
        Ok(Dataset { dim, xs, ys })
    }

    /// Univariate dataset from paired slices.
    pub fn univariate(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Dataset::new(1, xs, ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    /// Points `start..end` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidData(format!(
                "range {start}..{end} is not a non-empty part of {} points",
                self.len()
            )));
        }
        Dataset::new(
            self.dim,
            self.xs[start * self.dim..end * self.dim].to_vec(),
            self.ys[start..end].to_vec(),
        )
    }

    pub fn with_ys(&self, ys: Vec<f64>) -> Result<Self> {
        Dataset::new(self.dim, self.xs.clone(), ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shapes() {
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(1, vec![], vec![]).is_err());
        assert!(Dataset::new(1, vec![f64::NAN], vec![0.0]).is_err());
        let d = Dataset::new(2, vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0]).unwrap();
        assert_eq!(d.x(1), &[3.0, 4.0]);
        assert_eq!(d.slice(1, 2).unwrap().ys(), &[6.0]);
        assert!(d.slice(1, 1).is_err());
    }
}
