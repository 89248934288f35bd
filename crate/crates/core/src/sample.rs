//! Seeded random generation of operators, projections, and chains. Random
//! self-adjoint elements are (g + g*)/2 with i.i.d. standard complex Gaussian
//! g; random projections arise as spectral projections of random Hermitian
//! operators truncated to random rank.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraDescriptor, CMat, Operator, ProjectionChain};
use crate::tol::Tolerances;

pub fn ginibre_block<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Generic element with i.i.d. standard complex Gaussian entries per block.
pub fn random_operator<R: Rng>(alg: &Arc<AlgebraDescriptor>, rng: &mut R) -> Operator {
    let blocks = alg
        .blocks()
        .iter()
        .map(|b| ginibre_block(b.dim, rng))
        .collect();
    Operator::new(alg.clone(), blocks).unwrap()
}

/// Random self-adjoint element (g + g*)/2.
pub fn random_selfadjoint<R: Rng>(alg: &Arc<AlgebraDescriptor>, rng: &mut R) -> Operator {
    random_operator(alg, rng).herm_part()
}

/// Random positive element y* y.
pub fn random_positive<R: Rng>(alg: &Arc<AlgebraDescriptor>, rng: &mut R) -> Operator {
    let y = random_operator(alg, rng);
    y.adjoint().mul(&y)
}

/// Haar-distributed block-diagonal unitary (QR of a Ginibre matrix per block,
/// phases fixed so R has positive diagonal).
pub fn random_unitary<R: Rng>(alg: &Arc<AlgebraDescriptor>, rng: &mut R) -> Operator {
    let blocks = alg
        .blocks()
        .iter()
        .map(|b| {
            let g = ginibre_block(b.dim, rng);
            let qr = g.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..b.dim {
                let d = r[(j, j)];
                let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
                for i in 0..b.dim {
                    q[(i, j)] *= phase;
                }
            }
            q
        })
        .collect();
    Operator::new(alg.clone(), blocks).unwrap()
}

/// Random projection of random rank: per block, the span of k random
/// orthonormal vectors (columns of a Haar unitary), k uniform in 0..=dim.
pub fn random_projection<R: Rng>(
    alg: &Arc<AlgebraDescriptor>,
    rng: &mut R,
    _tols: &Tolerances,
) -> Operator {
    let u = random_unitary(alg, rng);
    let blocks = u
        .blocks()
        .iter()
        .zip(alg.blocks())
        .map(|(q, b)| {
            let k = rng.gen_range(0..=b.dim);
            let cols = q.columns(0, k);
            cols * cols.adjoint()
        })
        .collect();
    Operator::new(alg.clone(), blocks).unwrap()
}

/// Random projection of prescribed total rank (ranks distributed across
/// blocks left to right).
pub fn random_projection_of_rank<R: Rng>(
    alg: &Arc<AlgebraDescriptor>,
    total_rank: usize,
    rng: &mut R,
) -> Operator {
    let u = random_unitary(alg, rng);
    let mut remaining = total_rank;
    let blocks = u
        .blocks()
        .iter()
        .zip(alg.blocks())
        .map(|(q, b)| {
            let k = remaining.min(b.dim);
            remaining -= k;
            let cols = q.columns(0, k);
            cols * cols.adjoint()
        })
        .collect();
    Operator::new(alg.clone(), blocks).unwrap()
}

/// Random nonzero projection.
pub fn random_nonzero_projection<R: Rng>(
    alg: &Arc<AlgebraDescriptor>,
    rng: &mut R,
    tols: &Tolerances,
) -> Operator {
    loop {
        let p = random_projection(alg, rng, tols);
        if crate::algebra::operator_norm(&p) > 0.5 {
            return p;
        }
    }
}

/// Random pair of mutually orthogonal projections (p, q), pq = 0.
/// Built from disjoint column sets of one Haar unitary per block, so
/// orthogonality is exact up to rounding.
pub fn random_orthogonal_projection_pair<R: Rng>(
    alg: &Arc<AlgebraDescriptor>,
    rng: &mut R,
) -> (Operator, Operator) {
    let u = random_unitary(alg, rng);
    let mut p_blocks = Vec::new();
    let mut q_blocks = Vec::new();
    for (q_mat, b) in u.blocks().iter().zip(alg.blocks()) {
        let k = rng.gen_range(0..=b.dim);
        let l = rng.gen_range(0..=(b.dim - k));
        let pc = q_mat.columns(0, k);
        let qc = q_mat.columns(k, l);
        p_blocks.push(pc * pc.adjoint());
        q_blocks.push(qc * qc.adjoint());
    }
    (
        Operator::new(alg.clone(), p_blocks).unwrap(),
        Operator::new(alg.clone(), q_blocks).unwrap(),
    )
}

/// Random pair of commuting self-adjoint elements: both diagonal in one
/// random orthonormal eigenbasis, with independent Gaussian eigenvalue lists.
pub fn random_commuting_sa_pair<R: Rng>(
    alg: &Arc<AlgebraDescriptor>,
    rng: &mut R,
) -> (Operator, Operator) {
    let u = random_unitary(alg, rng);
    let mut diag = |dim: usize| -> CMat {
        DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(rng.sample(StandardNormal), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let mut x_blocks = Vec::new();
    let mut y_blocks = Vec::new();
    for (q, b) in u.blocks().iter().zip(alg.blocks()) {
        let dx = diag(b.dim);
        let dy = diag(b.dim);
        x_blocks.push(q * dx * q.adjoint());
        y_blocks.push(q * dy * q.adjoint());
    }
    (
        Operator::new(alg.clone(), x_blocks).unwrap(),
        Operator::new(alg.clone(), y_blocks).unwrap(),
    )
}

/// Random increasing chain of `len` projections ending at the given final
/// rank profile; the last link is the identity when `to_identity` is set.
pub fn random_chain<R: Rng>(
    alg: &Arc<AlgebraDescriptor>,
    len: usize,
    to_identity: bool,
    rng: &mut R,
    tols: &Tolerances,
) -> ProjectionChain {
    assert!(len >= 1);
    let u = random_unitary(alg, rng);
    // choose nested per-block ranks 0 <= k_1 <= ... <= k_len (<= dim)
    let mut links = Vec::with_capacity(len);
    let mut rank_profiles: Vec<Vec<usize>> = Vec::with_capacity(len);
    let final_ranks: Vec<usize> = alg
        .blocks()
        .iter()
        .map(|b| if to_identity { b.dim } else { rng.gen_range(0..=b.dim) })
        .collect();
    for j in 0..len {
        let profile: Vec<usize> = final_ranks
            .iter()
            .map(|&fr| {
                if j + 1 == len {
                    fr
                } else {
                    rng.gen_range(0..=fr)
                }
            })
            .collect();
        rank_profiles.push(profile);
    }
    // sort per block so ranks are nondecreasing along the chain
    for b in 0..alg.num_blocks() {
        let mut col: Vec<usize> = rank_profiles.iter().map(|p| p[b]).collect();
        col.sort_unstable();
        for (j, v) in col.into_iter().enumerate() {
            rank_profiles[j][b] = v;
        }
    }
    for profile in &rank_profiles {
        let blocks = u
            .blocks()
            .iter()
            .zip(profile)
            .map(|(q, &k)| {
                let cols = q.columns(0, k);
                cols * cols.adjoint()
            })
            .collect();
        links.push(Operator::new(alg.clone(), blocks).unwrap());
    }
    ProjectionChain::new(links, tols).expect("constructed chain is monotone")
}
