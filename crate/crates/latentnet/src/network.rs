//! Symmetric weighted network with node labels.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::scalar::Scalar;
use nalgebra::DMatrix;

/// Symmetric `n×n` weighted adjacency matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct Network<T: Scalar> {
    weights: DMatrix<T>,
    labels: Vec<String>,
}

impl<T: Scalar> Network<T> {
    /// Builds a network, enforcing symmetry and a zero diagonal.
    pub fn new(weights: DMatrix<T>, labels: Vec<String>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::Shape(format!(
                "adjacency matrix must be square, got {}x{}",
                n,
                weights.ncols()
            )));
        }
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                n
            )));
        }
        for i in 0..n {
            if weights[(i, i)] != T::zero() {
                return Err(Error::Shape(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..i {
                if weights[(i, j)] != weights[(j, i)] {
                    return Err(Error::Shape(format!("asymmetric weights at ({i}, {j})")));
                }
            }
        }
        Ok(Self { weights, labels })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<T> {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[(i, j)]
    }

    /// Checks every off-diagonal entry against the family's support.
    pub fn validate_support(&self, family: EdgeFamily) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                family.check_support(self.weights[(i, j)], &format!("edge ({i}, {j})"))?;
            }
        }
        Ok(())
    }

    /// Mean of all `n²` matrix entries (used by the SVT threshold default).
    pub fn mean_entry(&self) -> T {
        let n = T::from_usize(self.n()).unwrap();
        self.weights.iter().copied().sum::<T>() / (n * n)
    }
}
