//! Ground-truth instance generation: Jordan *-homomorphisms J assembled from
//! block assignments (direct embeddings or transposes, conjugated by a
//! unitary), and maps U = h J(.) with h a positive weight commuting with the
//! range of J, so that s(U(p)) = J(p) exactly. The pipeline's output can then
//! be compared against J.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{operator_norm, AlgebraDescriptor, CMat, Operator};
use crate::extension::ExtensionProblem;
use crate::linmap::LinearMapMatrix;
use crate::sample;
use crate::{Error, Result};

/// How a source block lands in its target block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Homomorphic,
    AntiHomomorphic,
}

/// One source block embedded into one target block.
#[derive(Debug, Clone, Copy)]
pub struct Assignment {
    pub source_block: usize,
    pub target_block: usize,
    pub mode: Mode,
}

/// A Jordan *-homomorphism presented structurally: each target block carries
/// the assigned source blocks diagonally (in assignment order), the whole
/// image conjugated by a unitary. Target blocks with no assignments receive
/// zero (J is then non-unital); source blocks with no assignments are killed
/// (J is then non-injective).
#[derive(Debug, Clone)]
pub struct JordanSpec {
    source: Arc<AlgebraDescriptor>,
    target: Arc<AlgebraDescriptor>,
    assignments: Vec<Assignment>,
    conjugating_unitary: Operator,
}

impl JordanSpec {
    pub fn new(
        source: Arc<AlgebraDescriptor>,
        target: Arc<AlgebraDescriptor>,
        assignments: Vec<Assignment>,
        conjugating_unitary: Operator,
    ) -> Result<Self> {
        if *conjugating_unitary.algebra() != target {
            return Err(Error::ShapeMismatch(
                "conjugating unitary does not live in the target".into(),
            ));
        }
        let one = Operator::identity(&target);
        let defect = operator_norm(
            &conjugating_unitary
                .adjoint()
                .mul(&conjugating_unitary)
                .sub(&one),
        );
        if defect > 1e-10 {
            return Err(Error::Precondition(format!(
                "conjugating matrix is not unitary (defect {defect:.3e})"
            )));
        }
        let mut used: Vec<usize> = vec![0; target.num_blocks()];
        for a in &assignments {
            if a.source_block >= source.num_blocks() || a.target_block >= target.num_blocks() {
                return Err(Error::InvalidDescriptor(
                    "assignment block index out of range".into(),
                ));
            }
            used[a.target_block] += source.blocks()[a.source_block].dim;
        }
        for (t, b) in target.blocks().iter().enumerate() {
            if used[t] > b.dim {
                return Err(Error::InvalidDescriptor(format!(
                    "target block {t} overfull: assigned {} > dim {}",
                    used[t], b.dim
                )));
            }
        }
        Ok(JordanSpec {
            source,
            target,
            assignments,
            conjugating_unitary,
        })
    }

    pub fn source(&self) -> &Arc<AlgebraDescriptor> {
        &self.source
    }

    pub fn target(&self) -> &Arc<AlgebraDescriptor> {
        &self.target
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn conjugating_unitary(&self) -> &Operator {
        &self.conjugating_unitary
    }

    /// Diagonal offsets of each assignment inside its target block, in
    /// assignment order.
    fn offsets(&self) -> Vec<usize> {
        let mut next: Vec<usize> = vec![0; self.target.num_blocks()];
        self.assignments
            .iter()
            .map(|a| {
                let off = next[a.target_block];
                next[a.target_block] += self.source.blocks()[a.source_block].dim;
                off
            })
            .collect()
    }

    /// The image of x before conjugation: assigned source blocks stacked
    /// diagonally in their target blocks.
    fn embed(&self, x: &Operator) -> Operator {
        let offsets = self.offsets();
        let mut blocks: Vec<CMat> = self
            .target
            .blocks()
            .iter()
            .map(|b| DMatrix::zeros(b.dim, b.dim))
            .collect();
        for (a, &off) in self.assignments.iter().zip(&offsets) {
            let src = x.block(a.source_block);
            let m = match a.mode {
                Mode::Homomorphic => src.clone(),
                Mode::AntiHomomorphic => src.transpose(),
            };
            let d = m.nrows();
            blocks[a.target_block].view_mut((off, off), (d, d)).copy_from(&m);
        }
        Operator::new(self.target.clone(), blocks).unwrap()
    }
}

/// Materializes J as a matrix: x -> u (embed x) u*.
pub fn build_jordan(spec: &JordanSpec) -> Result<LinearMapMatrix> {
    let u = spec.conjugating_unitary.clone();
    let u_star = u.adjoint();
    LinearMapMatrix::from_action(&spec.source, &spec.target, |x| {
        u.mul(&spec.embed(x)).mul(&u_star)
    })
}

/// A generated problem with its known answer.
#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub problem: ExtensionProblem,
    pub ground_truth: LinearMapMatrix,
    pub commutant_weight: Operator,
}

/// Builds the commutant weight h: one log-uniform scalar in [0.1, 10] per
/// assignment (constant on that embedded source block) and per unassigned
/// remainder, conjugated by the `JordanSpec` unitary. h then commutes with every
/// J(x) and is strictly positive on the range of J.
fn draw_weight<R: Rng>(spec: &JordanSpec, rng: &mut R) -> Operator {
    let offsets = spec.offsets();
    let mut diag: Vec<Vec<f64>> = spec
        .target
        .blocks()
        .iter()
        .map(|b| vec![0.0; b.dim])
        .collect();
    let scalar = |rng: &mut R| 10f64.powf(rng.gen_range(-1.0..1.0));
    for (a, &off) in spec.assignments.iter().zip(&offsets) {
        let d = spec.source.blocks()[a.source_block].dim;
        let c = scalar(rng);
        for i in 0..d {
            diag[a.target_block][off + i] = c;
        }
    }
    for row in diag.iter_mut() {
        let c = scalar(rng);
        for v in row.iter_mut() {
            if *v == 0.0 {
                *v = c;
            }
        }
    }
    let base = Operator::new(
        spec.target.clone(),
        diag.iter()
            .map(|row| {
                DMatrix::from_fn(row.len(), row.len(), |i, j| {
                    if i == j {
                        Complex64::new(row[i], 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect(),
    )
    .unwrap();
    let u = spec.conjugating_unitary.clone();
    u.mul(&base).mul(&u.adjoint())
}

fn assemble(spec: &JordanSpec, h: Operator) -> Result<InstanceBundle> {
    let j = build_jordan(spec)?;
    let u_map = LinearMapMatrix::left_multiplication(&h)?.compose(&j)?;
    let problem = ExtensionProblem::new(spec.source.clone(), spec.target.clone(), u_map)?;
    Ok(InstanceBundle {
        problem,
        ground_truth: j,
        commutant_weight: h,
    })
}

/// Instance with a random commutant weight (log-uniform scalars).
pub fn build_instance(spec: &JordanSpec, h_seed: u64) -> Result<InstanceBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(h_seed);
    let h = draw_weight(spec, &mut rng);
    assemble(spec, h)
}

/// Instance with h = identity, so U = J exactly.
pub fn build_instance_unit_weight(spec: &JordanSpec) -> Result<InstanceBundle> {
    assemble(spec, Operator::identity(&spec.target))
}

/// Random spec with total vector-space dimension at most 16 on both sides:
/// one or two source blocks, each copied into one or two target blocks with
/// random modes, a Haar conjugating unitary, and optionally one unassigned
/// target block.
pub fn random_spec<R: Rng>(rng: &mut R) -> JordanSpec {
    loop {
        let n_src = rng.gen_range(1..=2);
        let src_dims: Vec<usize> = (0..n_src).map(|_| rng.gen_range(1..=3)).collect();
        let mut tgt_dims: Vec<usize> = Vec::new();
        let mut assignments: Vec<Assignment> = Vec::new();
        for (s, &d) in src_dims.iter().enumerate() {
            let copies = rng.gen_range(1..=2);
            for _ in 0..copies {
                let mode = if rng.gen_bool(0.5) {
                    Mode::Homomorphic
                } else {
                    Mode::AntiHomomorphic
                };
                assignments.push(Assignment {
                    source_block: s,
                    target_block: tgt_dims.len(),
                    mode,
                });
                tgt_dims.push(d);
            }
        }
        if rng.gen_bool(0.25) {
            tgt_dims.push(rng.gen_range(1..=2));
        }
        let total_src: usize = src_dims.iter().map(|d| d * d).sum();
        let total_tgt: usize = tgt_dims.iter().map(|d| d * d).sum();
        if total_src > 16 || total_tgt > 16 {
            continue;
        }
        let weight = |rng: &mut R| 2f64.powf(rng.gen_range(-1.0..1.0));
        let source = AlgebraDescriptor::new(
            src_dims.iter().map(|&d| (d, weight(rng))).collect(),
        )
        .unwrap();
        let target = AlgebraDescriptor::new(
            tgt_dims.iter().map(|&d| (d, weight(rng))).collect(),
        )
        .unwrap();
        let u = sample::random_unitary(&target, rng);
        return JordanSpec::new(source, target, assignments, u).unwrap();
    }
}

/// Fully seeded random instance (spec and weight from one stream).
pub fn random_instance(seed: u64) -> Result<InstanceBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_spec(&mut rng);
    let h = draw_weight(&spec, &mut rng);
    assemble(&spec, h)
}

/// The doubling embedding M2 -> M2 + M2, x -> x + x^T: injective, unital,
/// not surjective.
pub fn doubling_spec() -> JordanSpec {
    let source = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
    let target = AlgebraDescriptor::new(vec![(2, 1.0), (2, 1.0)]).unwrap();
    let u = Operator::identity(&target);
    JordanSpec::new(
        source,
        target,
        vec![
            Assignment {
                source_block: 0,
                target_block: 0,
                mode: Mode::Homomorphic,
            },
            Assignment {
                source_block: 0,
                target_block: 1,
                mode: Mode::AntiHomomorphic,
            },
        ],
        u,
    )
    .unwrap()
}

/// Kills the first source block: not injective.
pub fn killing_spec() -> JordanSpec {
    let source = AlgebraDescriptor::new(vec![(1, 1.0), (2, 1.0)]).unwrap();
    let target = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
    let u = Operator::identity(&target);
    JordanSpec::new(
        source,
        target,
        vec![Assignment {
            source_block: 1,
            target_block: 0,
            mode: Mode::Homomorphic,
        }],
        u,
    )
    .unwrap()
}

/// A surjective single-block spec (homomorphic, random unitary).
pub fn surjective_spec(dim: usize, seed: u64) -> JordanSpec {
    let source = AlgebraDescriptor::new(vec![(dim, 1.0)]).unwrap();
    let target = AlgebraDescriptor::new(vec![(dim, 1.0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sample::random_unitary(&target, &mut rng);
    JordanSpec::new(
        source,
        target,
        vec![Assignment {
            source_block: 0,
            target_block: 0,
            mode: Mode::Homomorphic,
        }],
        u,
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::support_projection;
    use crate::battery::jordan_battery;
    use crate::extension::{extend_full, phi_on_projection};
    use crate::tol::Tolerances;

    #[test]
    fn single_block_identity_and_transpose() {
        let alg = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
        let one = Operator::identity(&alg);
        let homo = JordanSpec::new(
            alg.clone(),
            alg.clone(),
            vec![Assignment {
                source_block: 0,
                target_block: 0,
                mode: Mode::Homomorphic,
            }],
            one.clone(),
        )
        .unwrap();
        let j = build_jordan(&homo).unwrap();
        assert!(j.sub(&LinearMapMatrix::identity(&alg)).unwrap().map_norm() < 1e-12);

        let anti = JordanSpec::new(
            alg.clone(),
            alg.clone(),
            vec![Assignment {
                source_block: 0,
                target_block: 0,
                mode: Mode::AntiHomomorphic,
            }],
            one,
        )
        .unwrap();
        let j = build_jordan(&anti).unwrap();
        assert!(j.sub(&LinearMapMatrix::transpose_map(&alg)).unwrap().map_norm() < 1e-12);
    }

    #[test]
    fn doubling_passes_battery_tightly() {
        let t = Tolerances::default();
        let j = build_jordan(&doubling_spec()).unwrap();
        let rep = jordan_battery(&j, 100, 21, &t).unwrap();
        assert!(rep.overall);
        for c in &rep.checks {
            assert!(c.residual <= 1e-9, "{}: {:.3e}", c.name, c.residual);
        }
    }

    #[test]
    fn inconsistent_specs_rejected() {
        let a = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
        let b = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
        let one = Operator::identity(&b);
        // two copies of a 2x2 block do not fit in a 2x2 target
        let overfull = JordanSpec::new(
            a.clone(),
            b.clone(),
            vec![
                Assignment { source_block: 0, target_block: 0, mode: Mode::Homomorphic },
                Assignment { source_block: 0, target_block: 0, mode: Mode::Homomorphic },
            ],
            one,
        );
        assert!(overfull.is_err());
        // non-unitary conjugator
        let two = Operator::identity(&b).scale_re(2.0);
        let bad_u = JordanSpec::new(
            a,
            b,
            vec![Assignment { source_block: 0, target_block: 0, mode: Mode::Homomorphic }],
            two,
        );
        assert!(bad_u.is_err());
    }

    #[test]
    fn instance_support_oracle() {
        // the defining guarantee: s(U(p)) = J(p) on sampled projections
        let t = Tolerances::default();
        let bundle = build_instance(&doubling_spec(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let p = sample::random_projection(bundle.problem.source(), &mut rng, &t);
            let fp = phi_on_projection(&bundle.problem, &p, &t).unwrap();
            let jp = bundle.ground_truth.apply(&p).unwrap();
            assert!(operator_norm(&fp.sub(&jp)) <= 1e-9);
        }
    }

    #[test]
    fn weight_commutes_and_covers_range() {
        let t = Tolerances::default();
        let bundle = build_instance(&doubling_spec(), 8).unwrap();
        let h = &bundle.commutant_weight;
        assert!(crate::algebra::is_positive(h, &t));
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let x = sample::random_operator(bundle.problem.source(), &mut rng);
            let jx = bundle.ground_truth.apply(&x).unwrap();
            assert!(operator_norm(&h.mul(&jx).sub(&jx.mul(h))) < 1e-9);
        }
        // s(h) >= J(1)
        let s = support_projection(h, &t);
        let j1 = bundle
            .ground_truth
            .apply(&Operator::identity(bundle.problem.source()))
            .unwrap();
        assert!(operator_norm(&s.mul(&j1).sub(&j1)) < 1e-9);
    }

    #[test]
    fn extend_full_recovers_ground_truth() {
        let t = Tolerances::default();
        for seed in [1u64, 42, 99] {
            let bundle = random_instance(seed).unwrap();
            let res = extend_full(&bundle.problem, 60, seed, &t).unwrap();
            let diff = res.phi.sub(&bundle.ground_truth).unwrap().map_norm();
            assert!(diff <= 1e-8, "seed {seed}: residual {diff:.3e}");
        }
    }

    #[test]
    fn unit_weight_gives_u_equal_j() {
        let bundle = build_instance_unit_weight(&doubling_spec()).unwrap();
        let diff = bundle
            .problem
            .u_map()
            .sub(&bundle.ground_truth)
            .unwrap()
            .map_norm();
        assert!(diff < 1e-12);
    }

    #[test]
    fn seeded_instances_are_deterministic() {
        let a = random_instance(5).unwrap();
        let b = random_instance(5).unwrap();
        assert_eq!(a.problem.u_map().matrix(), b.problem.u_map().matrix());
        assert_eq!(a.ground_truth.matrix(), b.ground_truth.matrix());
    }

    #[test]
    fn killing_spec_has_kernel() {
        let j = build_jordan(&killing_spec()).unwrap();
        assert_eq!(j.rank(1e-9), 4);
        let e = Operator::matrix_unit(j.domain(), 0, 0, 0);
        assert!(operator_norm(&j.apply(&e).unwrap()) < 1e-12);
    }
}
