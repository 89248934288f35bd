//! Linear maps between algebras as dense complex matrices acting on the
//! column-stacked vectorization of operators.
//!
//! Vectorization order is part of the file format: each block is
//! column-stacked, blocks concatenated in descriptor order.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{AlgebraDescriptor, CMat, Operator};
use crate::{Error, Result};

/// A linear map as a matrix on vectorized operators.
#[derive(Debug, Clone)]
pub struct LinearMapMatrix {
    domain: Arc<AlgebraDescriptor>,
    codomain: Arc<AlgebraDescriptor>,
    matrix: CMat,
}

/// Column-stack an operator: per-block column-major entries, blocks in
/// descriptor order.
pub fn vectorize(x: &Operator) -> DVector<Complex64> {
    let n = x.algebra().total_dim();
    let mut v = DVector::zeros(n);
    let mut off = 0;
    for m in x.blocks() {
        for (i, e) in m.iter().enumerate() {
            v[off + i] = *e;
        }
        off += m.len();
    }
    v
}

/// Inverse of [`vectorize`].
pub fn devectorize(alg: &Arc<AlgebraDescriptor>, v: &DVector<Complex64>) -> Result<Operator> {
    if v.len() != alg.total_dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector length {} does not match algebra dimension {}",
            v.len(),
            alg.total_dim()
        )));
    }
    let mut blocks = Vec::with_capacity(alg.num_blocks());
    let mut off = 0;
    for b in alg.blocks() {
        let len = b.dim * b.dim;
        let m = DMatrix::from_column_slice(b.dim, b.dim, &v.as_slice()[off..off + len]);
        blocks.push(m);
        off += len;
    }
    Operator::new(alg.clone(), blocks)
}

impl LinearMapMatrix {
    pub fn new(
        domain: Arc<AlgebraDescriptor>,
        codomain: Arc<AlgebraDescriptor>,
        matrix: CMat,
    ) -> Result<Self> {
        if matrix.nrows() != codomain.total_dim() || matrix.ncols() != domain.total_dim() {
            return Err(Error::ShapeMismatch(format!(
                "map matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                codomain.total_dim(),
                domain.total_dim()
            )));
        }
        Ok(LinearMapMatrix {
            domain,
            codomain,
            matrix,
        })
    }

    pub fn identity(alg: &Arc<AlgebraDescriptor>) -> Self {
        let n = alg.total_dim();
        LinearMapMatrix {
            domain: alg.clone(),
            codomain: alg.clone(),
            matrix: CMat::identity(n, n),
        }
    }

    pub fn zero(domain: &Arc<AlgebraDescriptor>, codomain: &Arc<AlgebraDescriptor>) -> Self {
        LinearMapMatrix {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: CMat::zeros(codomain.total_dim(), domain.total_dim()),
        }
    }

    /// Materialize a complex-linear action by evaluating it on the matrix-unit
    /// basis of the domain.
    pub fn from_action<F>(
        domain: &Arc<AlgebraDescriptor>,
        codomain: &Arc<AlgebraDescriptor>,
        mut action: F,
    ) -> Result<Self>
    where
        F: FnMut(&Operator) -> Operator,
    {
        let mut matrix = CMat::zeros(codomain.total_dim(), domain.total_dim());
        let mut col = 0;
        for (k, b) in domain.blocks().iter().enumerate() {
            // column-major matrix units to match vectorization order
            for j in 0..b.dim {
                for i in 0..b.dim {
                    let e = Operator::matrix_unit(domain, k, i, j);
                    let img = action(&e);
                    matrix.set_column(col, &vectorize(&img));
                    col += 1;
                }
            }
        }
        LinearMapMatrix::new(domain.clone(), codomain.clone(), matrix)
    }

    /// The map x -> a x b (left and right multiplication), as a matrix.
    pub fn sandwich(a: &Operator, b: &Operator) -> Result<Self> {
        let alg = a.algebra().clone();
        if alg != *b.algebra() {
            return Err(Error::ShapeMismatch("sandwich factors in different algebras".into()));
        }
        LinearMapMatrix::from_action(&alg, &alg, |x| a.mul(x).mul(b))
    }

    /// The map x -> h x (left multiplication), as a matrix.
    pub fn left_multiplication(h: &Operator) -> Result<Self> {
        let alg = h.algebra().clone();
        LinearMapMatrix::from_action(&alg, &alg, |x| h.mul(x))
    }

    /// The block-wise transpose map.
    pub fn transpose_map(alg: &Arc<AlgebraDescriptor>) -> Self {
        LinearMapMatrix::from_action(alg, alg, |x| x.map_blocks(|m| m.transpose())).unwrap()
    }

    pub fn domain(&self) -> &Arc<AlgebraDescriptor> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<AlgebraDescriptor> {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        if *x.algebra() != self.domain {
            return Err(Error::ShapeMismatch(
                "operator does not belong to the map's domain".into(),
            ));
        }
        let v = vectorize(x);
        devectorize(&self.codomain, &(&self.matrix * v))
    }

    /// Composition self . other (apply `other` first).
    pub fn compose(&self, other: &LinearMapMatrix) -> Result<Self> {
        if other.codomain != self.domain {
            return Err(Error::ShapeMismatch("composition domains do not match".into()));
        }
        LinearMapMatrix::new(
            other.domain.clone(),
            self.codomain.clone(),
            &self.matrix * &other.matrix,
        )
    }

    pub fn add(&self, other: &LinearMapMatrix) -> Result<Self> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::ShapeMismatch("map shapes do not match".into()));
        }
        LinearMapMatrix::new(
            self.domain.clone(),
            self.codomain.clone(),
            &self.matrix + &other.matrix,
        )
    }

    pub fn sub(&self, other: &LinearMapMatrix) -> Result<Self> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::ShapeMismatch("map shapes do not match".into()));
        }
        LinearMapMatrix::new(
            self.domain.clone(),
            self.codomain.clone(),
            &self.matrix - &other.matrix,
        )
    }

    pub fn scale(&self, c: Complex64) -> Self {
        LinearMapMatrix {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: self.matrix.clone() * c,
        }
    }

    /// Largest singular value of the matrix (the map norm used for
    /// route-agreement and uniqueness comparisons).
    pub fn map_norm(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix.clone().svd(false, false).singular_values.max()
    }

    /// Numerical rank of the matrix at relative threshold `rel_eps`.
    pub fn rank(&self, rel_eps: f64) -> usize {
        let svd = self.matrix.clone().svd(false, false);
        let max = svd.singular_values.max();
        if max == 0.0 {
            return 0;
        }
        svd.singular_values.iter().filter(|&&s| s > rel_eps * max).count()
    }

    /// Inverse map, when the matrix is square and invertible.
    pub fn inverse(&self) -> Option<Self> {
        if self.matrix.nrows() != self.matrix.ncols() {
            return None;
        }
        self.matrix.clone().try_inverse().map(|inv| LinearMapMatrix {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            matrix: inv,
        })
    }
}
