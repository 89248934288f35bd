//! Finite-dimensional model of a semi-finite von Neumann algebra with a
//! faithful trace: a direct sum of full complex matrix blocks, each carrying a
//! strictly positive trace weight. Elements are one complex matrix per block.
//!
//! All values are immutable after construction and every operation is a pure
//! function.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::tol::Tolerances;
use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// One matrix block of an algebra: its dimension and the weight its ordinary
/// matrix trace carries in the algebra trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

/// A finite list of matrix-block dimensions with strictly positive trace
/// weights; models the pair (algebra, trace).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraDescriptor {
    blocks: Vec<Block>,
    total_dim: usize,
}

impl AlgebraDescriptor {
    pub fn new(blocks: Vec<(usize, f64)>) -> Result<Arc<Self>> {
        if blocks.is_empty() {
            return Err(Error::InvalidDescriptor("no blocks".into()));
        }
        for &(dim, weight) in &blocks {
            if dim == 0 {
                return Err(Error::InvalidDescriptor("block dimension 0".into()));
            }
            if weight.is_nan() || weight <= 0.0 {
                return Err(Error::InvalidDescriptor(format!(
                    "non-positive block weight {weight}"
                )));
            }
        }
        let total_dim = blocks.iter().map(|&(d, _)| d * d).sum();
        Ok(Arc::new(AlgebraDescriptor {
            blocks: blocks
                .into_iter()
                .map(|(dim, weight)| Block { dim, weight })
                .collect(),
            total_dim,
        }))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Dimension of the algebra as a complex vector space (sum of dim^2).
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Sum of matrix dimensions (size of the underlying Hilbert space).
    pub fn hilbert_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("M{}(w={})", b.dim, b.weight))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// An element of an algebra: one complex matrix per block, shapes matching
/// the descriptor exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    algebra: Arc<AlgebraDescriptor>,
    blocks: Vec<CMat>,
}

impl Operator {
    pub fn new(algebra: Arc<AlgebraDescriptor>, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "operator has {} blocks, algebra has {}",
                blocks.len(),
                algebra.num_blocks()
            )));
        }
        for (k, (m, b)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::ShapeMismatch(format!(
                    "block {k} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    b.dim,
                    b.dim
                )));
            }
        }
        Ok(Operator { algebra, blocks })
    }

    pub fn zero(algebra: &Arc<AlgebraDescriptor>) -> Self {
        let blocks = algebra
            .blocks()
            .iter()
            .map(|b| CMat::zeros(b.dim, b.dim))
            .collect();
        Operator {
            algebra: algebra.clone(),
            blocks,
        }
    }

    pub fn identity(algebra: &Arc<AlgebraDescriptor>) -> Self {
        let blocks = algebra
            .blocks()
            .iter()
            .map(|b| CMat::identity(b.dim, b.dim))
            .collect();
        Operator {
            algebra: algebra.clone(),
            blocks,
        }
    }

    /// Matrix unit e_{ij} inside one block (zero elsewhere).
    pub fn matrix_unit(algebra: &Arc<AlgebraDescriptor>, block: usize, i: usize, j: usize) -> Self {
        let mut op = Operator::zero(algebra);
        op.blocks[block][(i, j)] = Complex64::new(1.0, 0.0);
        op
    }

    pub fn algebra(&self) -> &Arc<AlgebraDescriptor> {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    fn check_same_algebra(&self, other: &Operator) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::ShapeMismatch(
                "operators belong to different algebras".into(),
            ));
        }
        Ok(())
    }

    pub fn map_blocks<F: FnMut(&CMat) -> CMat>(&self, f: F) -> Operator {
        Operator {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        debug_assert_eq!(self.algebra, other.algebra);
        Operator {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        debug_assert_eq!(self.algebra, other.algebra);
        Operator {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        self.map_blocks(|m| m * c)
    }

    pub fn scale_re(&self, c: f64) -> Operator {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        debug_assert_eq!(self.algebra, other.algebra);
        Operator {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Operator {
        self.map_blocks(|m| m.adjoint())
    }

    /// Hermitian part (x + x*)/2.
    pub fn herm_part(&self) -> Operator {
        self.map_blocks(|m| (m + m.adjoint()).scale(0.5))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        operator_norm(self) <= tol
    }
}

/// Weighted trace: sum over blocks of weight_k * Tr(x_k). Linear in x;
/// trace(x* x) is real, nonnegative, and zero only at x = 0 (faithfulness).
pub fn trace(x: &Operator) -> Complex64 {
    x.blocks()
        .iter()
        .zip(x.algebra().blocks())
        .map(|(m, b)| m.trace() * Complex64::new(b.weight, 0.0))
        .sum()
}

/// Largest singular value across blocks; the C*-norm of the model.
pub fn operator_norm(x: &Operator) -> f64 {
    x.blocks()
        .iter()
        .map(|m| {
            if m.nrows() == 0 {
                0.0
            } else {
                m.clone().svd(false, false).singular_values.max()
            }
        })
        .fold(0.0, f64::max)
}

/// Jordan product xy + yx.
pub fn jordan_product(x: &Operator, y: &Operator) -> Result<Operator> {
    x.check_same_algebra(y)?;
    Ok(x.mul(y).add(&y.mul(x)))
}

/// Smallest eigenvalue of the Hermitian part-free interpretation: the minimum
/// eigenvalue across blocks of a self-adjoint operator.
pub fn min_eigenvalue(x: &Operator) -> f64 {
    x.blocks()
        .iter()
        .map(|m| {
            if m.nrows() == 0 {
                return f64::INFINITY;
            }
            let eig = m.clone().symmetric_eigen();
            eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

fn polish_projection_block(p: &CMat) -> CMat {
    // re-symmetrize, then one Newton-like idempotency step p <- 3p^2 - 2p^3
    let s = (p + p.adjoint()).scale(0.5);
    let s2 = &s * &s;
    let s3 = &s2 * &s;
    s2.scale(3.0) - s3.scale(2.0)
}

fn polish_projection(p: &Operator) -> Operator {
    p.map_blocks(polish_projection_block)
}

fn rank_threshold(max_sv: f64, tols: &Tolerances) -> f64 {
    tols.rank_eps() * if max_sv > 0.0 { max_sv } else { 1.0 }
}

/// Support projection s(x): projection onto the row space (range of x*), the
/// smallest projection e with x e = x.
pub fn support_projection(x: &Operator, tols: &Tolerances) -> Operator {
    support_projection_scaled(x, 0.0, tols)
}

/// Support projection with an external scale floor for the rank threshold.
/// Used where the natural scale of the input is known (e.g. sums of
/// projections), so that an input that is pure rounding noise relative to
/// that scale maps to zero instead of a spurious full-rank projection.
pub(crate) fn support_projection_scaled(x: &Operator, scale: f64, tols: &Tolerances) -> Operator {
    let global_max = x
        .blocks()
        .iter()
        .map(|m| m.clone().svd(false, false).singular_values.max())
        .fold(0.0, f64::max);
    let thresh = rank_threshold(global_max.max(scale), tols);
    let p = x.map_blocks(|m| {
        let svd = m.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut acc = CMat::zeros(m.ncols(), m.ncols());
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > thresh {
                let v = vt.row(i).adjoint(); // column vector
                acc += &v * v.adjoint();
            }
        }
        acc
    });
    polish_projection(&p)
}

/// Range projection r(x): projection onto the column space of x, the smallest
/// projection e with e x = x.
pub fn range_projection(x: &Operator, tols: &Tolerances) -> Operator {
    support_projection(&x.adjoint(), tols)
}

/// Projection onto the kernel of x: identity minus the support projection.
pub fn kernel_projection(x: &Operator, tols: &Tolerances) -> Operator {
    Operator::identity(x.algebra()).sub(&support_projection(x, tols))
}

/// Numerical rank of x (total across blocks).
pub fn numerical_rank(x: &Operator, tols: &Tolerances) -> usize {
    let global_max = x
        .blocks()
        .iter()
        .map(|m| m.clone().svd(false, false).singular_values.max())
        .fold(0.0, f64::max);
    let thresh = rank_threshold(global_max, tols);
    x.blocks()
        .iter()
        .map(|m| {
            m.clone()
                .svd(false, false)
                .singular_values
                .iter()
                .filter(|&&s| s > thresh)
                .count()
        })
        .sum()
}

pub fn is_selfadjoint(x: &Operator, tols: &Tolerances) -> bool {
    operator_norm(&x.sub(&x.adjoint())) <= tols.cert() * (1.0 + operator_norm(x))
}

pub fn is_projection(x: &Operator, tols: &Tolerances) -> bool {
    let idem = operator_norm(&x.mul(x).sub(x));
    is_selfadjoint(x, tols) && idem <= tols.cert() * (1.0 + operator_norm(x))
}

pub fn is_positive(x: &Operator, tols: &Tolerances) -> bool {
    is_selfadjoint(x, tols) && min_eigenvalue(&x.herm_part()) >= -tols.cert() * (1.0 + operator_norm(x))
}

/// p <= q in the projection lattice: q p = p within tolerance.
pub fn projection_leq(p: &Operator, q: &Operator, tols: &Tolerances) -> bool {
    operator_norm(&q.mul(p).sub(p)) <= tols.cert() * (1.0 + operator_norm(p))
}

fn require_projection(x: &Operator, tols: &Tolerances, what: &str) -> Result<()> {
    if !is_projection(x, tols) {
        return Err(Error::Precondition(format!("{what} is not a projection")));
    }
    Ok(())
}

/// Lattice join p v q = range projection of p + q.
pub fn lattice_join(p: &Operator, q: &Operator, tols: &Tolerances) -> Result<Operator> {
    p.check_same_algebra(q)?;
    require_projection(p, tols, "join argument p")?;
    require_projection(q, tols, "join argument q")?;
    // projections have scale 1; anchor the rank threshold there so that a
    // numerically-zero sum does not turn rounding noise into range
    Ok(support_projection_scaled(&p.add(q).adjoint(), 1.0, tols))
}

/// Lattice meet p ^ q = 1 - ((1-p) v (1-q)).
pub fn lattice_meet(p: &Operator, q: &Operator, tols: &Tolerances) -> Result<Operator> {
    p.check_same_algebra(q)?;
    require_projection(p, tols, "meet argument p")?;
    require_projection(q, tols, "meet argument q")?;
    let one = Operator::identity(p.algebra());
    let join = lattice_join(&one.sub(p), &one.sub(q), tols)?;
    Ok(one.sub(&join))
}

/// A nonempty increasing chain of projections q_1 <= q_2 <= ... <= q_m.
/// Finite chains stand in for the increasing nets of the infinite theory.
#[derive(Debug, Clone)]
pub struct ProjectionChain {
    links: Vec<Operator>,
}

impl ProjectionChain {
    pub fn new(links: Vec<Operator>, tols: &Tolerances) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::Precondition("empty projection chain".into()));
        }
        for (j, q) in links.iter().enumerate() {
            require_projection(q, tols, &format!("chain link {j}"))?;
        }
        for j in 0..links.len() - 1 {
            if !projection_leq(&links[j], &links[j + 1], tols) {
                return Err(Error::Precondition(format!(
                    "chain not monotone at link {j}"
                )));
            }
        }
        Ok(ProjectionChain { links })
    }

    pub fn links(&self) -> &[Operator] {
        &self.links
    }

    pub fn last(&self) -> &Operator {
        self.links.last().unwrap()
    }
}
