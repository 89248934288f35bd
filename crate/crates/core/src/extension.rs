//! The extension pipeline: from a projection mapping of the form
//! `phi(p) = support(U(p))` to a fully linear, certified Jordan
//! *-homomorphism, with every intermediate lemma realized as a checkable
//! certificate.
//!
//! Failure policy: hypothesis violations abort with the offending
//! certificate attached; conclusion-check failures never abort, they are
//! reported. The pipeline doubles as a falsification tool for bad inputs.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{
    is_positive, is_projection, min_eigenvalue, operator_norm, projection_leq,
    range_projection, support_projection, AlgebraDescriptor, CMat, Operator, ProjectionChain,
};
use crate::battery::{self, BatteryReport, Check};
use crate::linmap::LinearMapMatrix;
use crate::sample;
use crate::spectral::{spectral_decomposition, SpectralForm};
use crate::tol::Tolerances;
use crate::{Error, Result};

/// The data of an extension problem: source and target algebras and the
/// linear map U whose support projections define the projection mapping.
#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    source: Arc<AlgebraDescriptor>,
    target: Arc<AlgebraDescriptor>,
    u_map: LinearMapMatrix,
}

impl ExtensionProblem {
    pub fn new(
        source: Arc<AlgebraDescriptor>,
        target: Arc<AlgebraDescriptor>,
        u_map: LinearMapMatrix,
    ) -> Result<Self> {
        if *u_map.domain() != source || *u_map.codomain() != target {
            return Err(Error::ShapeMismatch(
                "u_map domain/codomain do not match source/target".into(),
            ));
        }
        Ok(ExtensionProblem {
            source,
            target,
            u_map,
        })
    }

    pub fn source(&self) -> &Arc<AlgebraDescriptor> {
        &self.source
    }

    pub fn target(&self) -> &Arc<AlgebraDescriptor> {
        &self.target
    }

    pub fn u_map(&self) -> &LinearMapMatrix {
        &self.u_map
    }
}

/// A named residual with its tolerance and the context it was realized on.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub context: String,
}

impl CertificateReport {
    pub fn new(
        name: impl Into<String>,
        residual: f64,
        tolerance: f64,
        context: impl Into<String>,
    ) -> Self {
        CertificateReport {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
            context: context.into(),
        }
    }
}

/// Output of `extend_full`: the extended map and its certificates.
#[derive(Debug, Clone)]
pub struct ExtensionResult {
    pub phi: LinearMapMatrix,
    pub certificates: Vec<CertificateReport>,
    pub hypothesis_report: BatteryReport,
}

impl ExtensionResult {
    pub fn certificate(&self, name: &str) -> Option<&CertificateReport> {
        self.certificates.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.hypothesis_report.overall && self.certificates.iter().all(|c| c.passed)
    }
}

/// The corner inverse v_p: a positive element supported in phi(p) with
/// `U(p)^(1/2) v_p = phi(p) = v_p U(p)^(1/2)`.
#[derive(Debug, Clone)]
pub struct CornerInverse {
    pub p: Operator,
    pub v: Operator,
}

/// phi(p) = support(U(p)).
pub fn phi_on_projection(prob: &ExtensionProblem, p: &Operator, tols: &Tolerances) -> Result<Operator> {
    if !is_projection(p, tols) {
        return Err(Error::Precondition(
            "phi_on_projection requires a projection".into(),
        ));
    }
    Ok(support_projection(&prob.u_map.apply(p)?, tols))
}

/// Internal variant without the projection predicate, for projections that
/// are exact by construction.
fn phi_proj_unchecked(prob: &ExtensionProblem, p: &Operator, tols: &Tolerances) -> Result<Operator> {
    Ok(support_projection(&prob.u_map.apply(p)?, tols))
}

/// Samples orthogonal projection pairs (p, q) and checks both
/// `phi(p+q) = phi(p) + phi(q)` and image orthogonality `phi(p) phi(q) = 0`.
pub fn orthogonal_additivity_check(
    prob: &ExtensionProblem,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_ctx = String::from("no samples");
    for k in 0..samples {
        let (p, q) = sample::random_orthogonal_projection_pair(&prob.source, &mut rng);
        let fp = phi_proj_unchecked(prob, &p, tols)?;
        let fq = phi_proj_unchecked(prob, &q, tols)?;
        let fpq = phi_proj_unchecked(prob, &p.add(&q), tols)?;
        let additivity = operator_norm(&fpq.sub(&fp.add(&fq)));
        let orthogonality = operator_norm(&fp.mul(&fq));
        let r = additivity.max(orthogonality);
        if r > worst {
            worst = r;
            worst_ctx = format!("sample {k} (seed {seed})");
        }
    }
    Ok(CertificateReport::new(
        "orthogonal_additivity",
        worst,
        tols.cert(),
        worst_ctx,
    ))
}

/// phi extended over one orthogonal decomposition: sum of coefficient times
/// phi of each projection.
pub fn extend_orthospan(
    prob: &ExtensionProblem,
    x: &SpectralForm,
    tols: &Tolerances,
) -> Result<Operator> {
    let mut acc = Operator::zero(&prob.target);
    for (a, p) in x.terms() {
        acc = acc.add(&phi_proj_unchecked(prob, p, tols)?.scale_re(*a));
    }
    Ok(acc)
}

/// phi on a self-adjoint element: spectral decomposition followed by the
/// orthogonal-span extension.
pub fn extend_selfadjoint(
    prob: &ExtensionProblem,
    x: &Operator,
    tols: &Tolerances,
) -> Result<Operator> {
    let sf = spectral_decomposition(x, tols)?;
    extend_orthospan(prob, &sf, tols)
}

/// Splits a projection into rank-one sub-projections. Each block contributes
/// its range basis, optionally mixed by a random unitary.
fn rank_one_split<R: Rng>(p: &Operator, rng: Option<&mut R>, tols: &Tolerances) -> Vec<Operator> {
    let mut pieces = Vec::new();
    let mut rng = rng;
    for (k, m) in p.blocks().iter().enumerate() {
        let herm = (m + m.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        let mut basis: Vec<nalgebra::DVector<Complex64>> = Vec::new();
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > 0.5 {
                basis.push(eig.eigenvectors.column(i).into_owned());
            }
        }
        let r = basis.len();
        if r == 0 {
            continue;
        }
        // optional random unitary mix of the range basis
        if let Some(rng) = rng.as_deref_mut() {
            let g = sample::ginibre_block(r, rng);
            let q = g.qr().q();
            let mut mixed = Vec::with_capacity(r);
            for j in 0..r {
                let mut v = nalgebra::DVector::<Complex64>::zeros(m.nrows());
                for (b, vec_b) in basis.iter().enumerate() {
                    v += vec_b * q[(b, j)];
                }
                mixed.push(v);
            }
            basis = mixed;
        }
        for v in basis {
            let mut blocks: Vec<CMat> = p
                .algebra()
                .blocks()
                .iter()
                .map(|b| DMatrix::zeros(b.dim, b.dim))
                .collect();
            blocks[k] = &v * v.adjoint();
            pieces.push(Operator::new(p.algebra().clone(), blocks).unwrap());
        }
    }
    let _ = tols;
    pieces
}

/// Re-expresses a self-adjoint element through alternative orthogonal
/// decompositions (random rank-one splits and a refinement against a random
/// commuting regrouping) and checks all routes yield the same image.
pub fn welldefinedness_probe(
    prob: &ExtensionProblem,
    x: &Operator,
    trials: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    let sf = spectral_decomposition(x, tols)?;
    let reference = extend_orthospan(prob, &sf, tols)?;
    let scale = 1.0 + operator_norm(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_ctx = format!("{} spectral terms, {trials} trials", sf.terms().len());
    for trial in 0..trials {
        // route B: random rank-one refinement of each spectral projection
        let mut route_b = Operator::zero(&prob.target);
        let mut all_pieces: Vec<(f64, Operator)> = Vec::new();
        for (a, p) in sf.terms() {
            for piece in rank_one_split(p, Some(&mut rng), tols) {
                route_b = route_b.add(&phi_proj_unchecked(prob, &piece, tols)?.scale_re(*a));
                all_pieces.push((*a, piece));
            }
        }
        let rb = operator_norm(&route_b.sub(&reference)) / scale;

        // route C: regroup the rank-one pieces into a commuting partition q_j
        // and use the refinement r_{i,j} = p_i q_j
        let mut rc = 0.0;
        if !all_pieces.is_empty() {
            let groups = rng.gen_range(1..=all_pieces.len());
            let mut q_sums: Vec<Operator> =
                (0..groups).map(|_| Operator::zero(&prob.source)).collect();
            let mut piece_group = Vec::with_capacity(all_pieces.len());
            for (_, piece) in &all_pieces {
                let g = rng.gen_range(0..groups);
                q_sums[g] = q_sums[g].add(piece);
                piece_group.push(g);
            }
            let mut route_c = Operator::zero(&prob.target);
            for (i, (a, p_i)) in sf.terms().iter().enumerate() {
                for q_j in &q_sums {
                    let r_ij = p_i.mul(q_j);
                    if operator_norm(&r_ij) > 0.5 {
                        route_c = route_c.add(&phi_proj_unchecked(prob, &r_ij, tols)?.scale_re(*a));
                    }
                }
                let _ = i;
            }
            rc = operator_norm(&route_c.sub(&reference)) / scale;
        }

        let r = rb.max(rc);
        if r > worst {
            worst = r;
            worst_ctx = format!("trial {trial} (seed {seed})");
        }
    }
    Ok(CertificateReport::new(
        "welldefinedness",
        worst,
        tols.cert(),
        worst_ctx,
    ))
}

/// Materializes a complex-linear map from an evaluator defined on
/// self-adjoint elements, by evaluating it on the standard self-adjoint
/// basis (e_ii, e_ij + e_ji, i e_ij - i e_ji) and complexifying.
fn materialize_from_sa<F>(
    source: &Arc<AlgebraDescriptor>,
    target: &Arc<AlgebraDescriptor>,
    mut eval_sa: F,
) -> Result<LinearMapMatrix>
where
    F: FnMut(&Operator) -> Result<Operator>,
{
    let mut matrix = CMat::zeros(target.total_dim(), source.total_dim());
    let mut offset = 0;
    let i_unit = Complex64::new(0.0, 1.0);
    for (k, b) in source.blocks().iter().enumerate() {
        let col_of = |i: usize, j: usize| offset + j * b.dim + i;
        for i in 0..b.dim {
            let e_ii = Operator::matrix_unit(source, k, i, i);
            let img = eval_sa(&e_ii)?;
            matrix.set_column(col_of(i, i), &crate::linmap::vectorize(&img));
        }
        for i in 0..b.dim {
            for j in (i + 1)..b.dim {
                let e_ij = Operator::matrix_unit(source, k, i, j);
                let e_ji = Operator::matrix_unit(source, k, j, i);
                let h = e_ij.add(&e_ji);
                let w = e_ij.sub(&e_ji).scale(i_unit);
                let fh = eval_sa(&h)?;
                let fw = eval_sa(&w)?;
                // e_ij = (h - i w)/2, e_ji = (h + i w)/2
                let f_ij = fh.sub(&fw.scale(i_unit)).scale_re(0.5);
                let f_ji = fh.add(&fw.scale(i_unit)).scale_re(0.5);
                matrix.set_column(col_of(i, j), &crate::linmap::vectorize(&f_ij));
                matrix.set_column(col_of(j, i), &crate::linmap::vectorize(&f_ji));
            }
        }
        offset += b.dim * b.dim;
    }
    LinearMapMatrix::new(source.clone(), target.clone(), matrix)
}

/// Runs the hypothesis checks (orthogonal additivity of the projection
/// mapping; positivity of U) and returns them as a battery, or the failing
/// certificate as an error.
fn check_hypotheses(
    prob: &ExtensionProblem,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<BatteryReport> {
    let ortho = orthogonal_additivity_check(prob, samples, seed, tols)?;
    let u_pos = battery::positivity_probe(&prob.u_map, samples, seed.wrapping_add(1), tols)?;
    let mut checks = vec![Check::new(&ortho.name, ortho.residual, ortho.tolerance)];
    for c in &u_pos.checks {
        checks.push(Check::new(format!("u_{}", c.name), c.residual, c.tolerance));
    }
    let report = BatteryReport::from_checks(checks);
    if let Some(bad) = report.checks.iter().find(|c| !c.passed) {
        return Err(Error::Hypothesis {
            name: bad.name.clone(),
            residual: bad.residual,
            tolerance: bad.tolerance,
            context: ortho.context,
        });
    }
    Ok(report)
}

/// The full pipeline: hypothesis checks, materialization of phi as a linear
/// map (spectral route on the self-adjoint basis, complexified), and the
/// conclusion certificates of the extension theorems.
pub fn extend_full(
    prob: &ExtensionProblem,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<ExtensionResult> {
    let hypothesis_report = check_hypotheses(prob, samples, seed, tols)?;
    let phi = materialize_from_sa(&prob.source, &prob.target, |x| {
        extend_selfadjoint(prob, x, tols)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut certificates = Vec::new();

    // additivity on non-commuting pairs, via the nonlinear spectral route
    // (the materialized matrix is linear by construction; the route is not)
    let mut worst_add = 0.0f64;
    let mut worst_sq = 0.0f64;
    let mut worst_contr = 0.0f64;
    let mut worst_consistency = 0.0f64;
    for _ in 0..samples {
        let x = sample::random_selfadjoint(&prob.source, &mut rng);
        let y = sample::random_selfadjoint(&prob.source, &mut rng);
        let nx = operator_norm(&x);
        let ny = operator_norm(&y);
        let fx = extend_selfadjoint(prob, &x, tols)?;
        let fy = extend_selfadjoint(prob, &y, tols)?;
        let fxy = extend_selfadjoint(prob, &x.add(&y), tols)?;
        worst_add = worst_add.max(operator_norm(&fxy.sub(&fx.add(&fy))) / (1.0 + nx + ny));

        let fx2 = extend_selfadjoint(prob, &x.mul(&x), tols)?;
        worst_sq = worst_sq.max(operator_norm(&fx2.sub(&fx.mul(&fx))) / (1.0 + nx * nx));

        worst_contr = worst_contr.max((operator_norm(&fx) - nx).max(0.0) / (1.0 + nx));

        let via_matrix = phi.apply(&x)?;
        worst_consistency =
            worst_consistency.max(operator_norm(&via_matrix.sub(&fx)) / (1.0 + nx));
    }
    certificates.push(CertificateReport::new(
        "noncommuting_additivity",
        worst_add,
        tols.cert(),
        format!("{samples} random self-adjoint pairs"),
    ));
    certificates.push(CertificateReport::new(
        "square_preservation",
        worst_sq,
        tols.cert(),
        format!("{samples} random self-adjoint samples"),
    ));
    certificates.push(CertificateReport::new(
        "sa_contraction",
        worst_contr,
        tols.contraction_slack().max(tols.cert()),
        format!("{samples} random self-adjoint samples"),
    ));
    certificates.push(CertificateReport::new(
        "route_consistency",
        worst_consistency,
        tols.cert(),
        "materialized matrix vs direct spectral route",
    ));

    let pos = battery::positivity_probe(&phi, samples, seed.wrapping_add(3), tols)?;
    certificates.push(CertificateReport::new(
        "positivity",
        pos.checks[0].residual,
        pos.checks[0].tolerance,
        format!("{samples} random positive samples"),
    ));

    let jb = battery::jordan_battery(&phi, samples, seed.wrapping_add(4), tols)?;
    let worst_item = jb
        .checks
        .iter()
        .max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
        .unwrap();
    certificates.push(CertificateReport::new(
        "jordan_battery",
        worst_item.residual,
        worst_item.tolerance,
        format!("worst item: {}", worst_item.name),
    ));

    Ok(ExtensionResult {
        phi,
        certificates,
        hypothesis_report,
    })
}

/// Alternative route used for uniqueness: phi evaluated through rank-one
/// refinements of every spectral projection instead of the projections
/// themselves.
pub fn extend_full_via_rank1(prob: &ExtensionProblem, tols: &Tolerances) -> Result<LinearMapMatrix> {
    materialize_from_sa(&prob.source, &prob.target, |x| {
        let sf = spectral_decomposition(x, tols)?;
        let mut acc = Operator::zero(&prob.target);
        for (a, p) in sf.terms() {
            for piece in rank_one_split::<ChaCha8Rng>(p, None, tols) {
                acc = acc.add(&phi_proj_unchecked(prob, &piece, tols)?.scale_re(*a));
            }
        }
        Ok(acc)
    })
}

fn require_dominates(x: &Operator, p: &Operator, tols: &Tolerances) -> Result<()> {
    if !is_projection(p, tols) {
        return Err(Error::Precondition("p is not a projection".into()));
    }
    let s = support_projection(x, tols);
    if !projection_leq(&s, p, tols) {
        return Err(Error::Precondition("p does not dominate s(x)".into()));
    }
    Ok(())
}

/// Checks `U(x) = U(p) phi(x)` for p >= s(x); when U(p) is positive, also the
/// two-sided and symmetrized forms.
pub fn certificate_ux(
    prob: &ExtensionProblem,
    phi: &LinearMapMatrix,
    x: &Operator,
    p: Option<&Operator>,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    let one = Operator::identity(&prob.source);
    let p = p.unwrap_or(&one);
    require_dominates(x, p, tols)?;
    let ux = prob.u_map.apply(x)?;
    let up = prob.u_map.apply(p)?;
    let fx = phi.apply(x)?;
    let scale = 1.0 + operator_norm(&up) * operator_norm(&fx);
    let mut worst = operator_norm(&ux.sub(&up.mul(&fx))) / scale;
    let mut ctx = String::from("one-sided");
    if is_positive(&up, tols) {
        let left = operator_norm(&ux.sub(&fx.mul(&up))) / scale;
        let root = positive_sqrt(&up, tols);
        let sym = operator_norm(&ux.sub(&root.mul(&fx).mul(&root))) / scale;
        worst = worst.max(left).max(sym);
        ctx = String::from("two-sided and symmetrized (U(p) positive)");
    }
    Ok(CertificateReport::new("ux_identity", worst, tols.cert(), ctx))
}

/// Checks `r(phi(x)) <= support(U(p)) = phi(p)` for p >= s(x).
pub fn certificate_range(
    prob: &ExtensionProblem,
    phi: &LinearMapMatrix,
    x: &Operator,
    p: Option<&Operator>,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    let one = Operator::identity(&prob.source);
    let p = p.unwrap_or(&one);
    require_dominates(x, p, tols)?;
    let fp = phi_proj_unchecked(prob, p, tols)?;
    let r = range_projection(&phi.apply(x)?, tols);
    let residual = operator_norm(&fp.mul(&r).sub(&r));
    Ok(CertificateReport::new(
        "range_domination",
        residual,
        tols.cert(),
        "r(phi(x)) under phi(p)",
    ))
}

/// Given an increasing chain ending at p, checks the image chain is
/// increasing and terminates at phi(p).
pub fn chain_extension(
    phi: &LinearMapMatrix,
    p: &Operator,
    chain: &ProjectionChain,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    for (j, q) in chain.links().iter().enumerate() {
        if !projection_leq(q, p, tols) {
            return Err(Error::Precondition(format!("chain link {j} not below p")));
        }
    }
    if operator_norm(&chain.last().sub(p)) > tols.cert() {
        return Err(Error::Precondition("chain does not terminate at p".into()));
    }
    let images: Vec<Operator> = chain
        .links()
        .iter()
        .map(|q| phi.apply(q))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for j in 0..images.len() - 1 {
        let diff = images[j + 1].sub(&images[j]).herm_part();
        worst = worst.max((-min_eigenvalue(&diff)).max(0.0));
    }
    let terminal = operator_norm(&images.last().unwrap().sub(&phi.apply(p)?));
    worst = worst.max(terminal);
    Ok(CertificateReport::new(
        "chain_extension",
        worst,
        tols.cert(),
        format!("{} links", chain.links().len()),
    ))
}

/// The corner identities for projections p, q:
/// `phi(q p q) = phi(q) phi(p) phi(q)` and `phi(1) phi(p) phi(1) = phi(p)`.
pub fn corner_identities(
    phi: &LinearMapMatrix,
    p: &Operator,
    q: &Operator,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    if !is_projection(p, tols) || !is_projection(q, tols) {
        return Err(Error::Precondition("corner identities require projections".into()));
    }
    let fp = phi.apply(p)?;
    let fq = phi.apply(q)?;
    let lhs = phi.apply(&q.mul(p).mul(q))?;
    let rhs = fq.mul(&fp).mul(&fq);
    let r1 = operator_norm(&lhs.sub(&rhs));
    let f1 = phi.apply(&Operator::identity(phi.domain()))?;
    let r2 = operator_norm(&f1.mul(&fp).mul(&f1).sub(&fp));
    Ok(CertificateReport::new(
        "corner_identities",
        r1.max(r2),
        tols.cert(),
        format!("compression [{r1:.3e}], unit corner [{r2:.3e}]"),
    ))
}

/// Additivity transfer along orthogonal chains: with chains for p and q whose
/// links are pairwise orthogonal, the summed chain is a chain for p + q and
/// the terminal images add.
pub fn chain_additivity_transfer(
    phi: &LinearMapMatrix,
    chain_p: &ProjectionChain,
    chain_q: &ProjectionChain,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    if chain_p.links().len() != chain_q.links().len() {
        return Err(Error::Precondition("chains have different lengths".into()));
    }
    for (j, (a, b)) in chain_p.links().iter().zip(chain_q.links()).enumerate() {
        if operator_norm(&a.mul(b)) > tols.cert() {
            return Err(Error::Precondition(format!(
                "chain links {j} are not orthogonal"
            )));
        }
    }
    let mut worst = 0.0f64;
    let mut prev: Option<Operator> = None;
    for (a, b) in chain_p.links().iter().zip(chain_q.links()) {
        let sum = a.add(b);
        let img = phi.apply(&sum)?;
        let split = phi.apply(a)?.add(&phi.apply(b)?);
        worst = worst.max(operator_norm(&img.sub(&split)));
        if let Some(prev) = &prev {
            let diff = img.sub(prev).herm_part();
            worst = worst.max((-min_eigenvalue(&diff)).max(0.0));
        }
        prev = Some(img);
    }
    Ok(CertificateReport::new(
        "chain_additivity_transfer",
        worst,
        tols.cert(),
        format!("{} links", chain_p.links().len()),
    ))
}

/// For a chain ending at the identity, checks `phi(q x q) -> phi(x)` with
/// terminal equality; the full residual sequence goes into the context.
pub fn sot_limit_check(
    phi: &LinearMapMatrix,
    x: &Operator,
    chain: &ProjectionChain,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    let one = Operator::identity(phi.domain());
    if operator_norm(&chain.last().sub(&one)) > tols.cert() {
        return Err(Error::Precondition(
            "chain does not terminate at the identity".into(),
        ));
    }
    let fx = phi.apply(x)?;
    let scale = 1.0 + operator_norm(x);
    let residuals: Vec<f64> = chain
        .links()
        .iter()
        .map(|q| {
            let compressed = q.mul(x).mul(q);
            Ok(operator_norm(&phi.apply(&compressed)?.sub(&fx)) / scale)
        })
        .collect::<Result<_>>()?;
    let terminal = *residuals.last().unwrap();
    let seq = residuals
        .iter()
        .map(|r| format!("{r:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(CertificateReport::new(
        "sot_limit",
        terminal,
        tols.cert(),
        format!("residual sequence [{seq}]"),
    ))
}

/// Spectral square root of a positive operator; eigenvalues below the rank
/// threshold are clamped to zero before rooting.
pub fn positive_sqrt(x: &Operator, tols: &Tolerances) -> Operator {
    let max_eig = x
        .blocks()
        .iter()
        .map(|m| {
            if m.nrows() == 0 {
                return 0.0;
            }
            let eig = (m + m.adjoint()).scale(0.5).symmetric_eigen();
            eig.eigenvalues.iter().cloned().fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let thresh = tols.rank_eps() * max_eig.max(1.0);
    spectral_function(x, |lambda| if lambda > thresh { lambda.sqrt() } else { 0.0 })
}

/// Spectral pseudo-inverse square root: inverts sqrt(lambda) only above the
/// rank threshold.
fn pinv_sqrt(x: &Operator, tols: &Tolerances) -> Operator {
    let max_eig = x
        .blocks()
        .iter()
        .map(|m| {
            if m.nrows() == 0 {
                return 0.0;
            }
            let eig = (m + m.adjoint()).scale(0.5).symmetric_eigen();
            eig.eigenvalues.iter().cloned().fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let thresh = tols.rank_eps() * max_eig.max(1.0);
    spectral_function(x, |lambda| {
        if lambda > thresh {
            1.0 / lambda.sqrt()
        } else {
            0.0
        }
    })
}

fn spectral_function<F: Fn(f64) -> f64>(x: &Operator, f: F) -> Operator {
    x.map_blocks(|m| {
        if m.nrows() == 0 {
            return m.clone();
        }
        let eig = (m + m.adjoint()).scale(0.5).symmetric_eigen();
        let mut acc = CMat::zeros(m.nrows(), m.ncols());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            acc += (v * v.adjoint()).scale(f(lambda));
        }
        acc
    })
}

/// Computes the corner inverse v_p: the inverse of `U(p)^(1/2)` inside the
/// reduced algebra cut down by phi(p), realized as a spectral pseudo-inverse.
pub fn corner_inverse(
    prob: &ExtensionProblem,
    p: &Operator,
    tols: &Tolerances,
) -> Result<CornerInverse> {
    if !is_projection(p, tols) {
        return Err(Error::Precondition("corner_inverse requires a projection".into()));
    }
    let up = prob.u_map.apply(p)?;
    if !is_positive(&up, tols) {
        return Err(Error::Hypothesis {
            name: "u_image_positivity".into(),
            residual: (-min_eigenvalue(&up.herm_part())).max(0.0),
            tolerance: tols.cert() * (1.0 + operator_norm(&up)),
            context: "U(p) must be positive for the corner inverse".into(),
        });
    }
    let v = pinv_sqrt(&up, tols);
    Ok(CornerInverse { p: p.clone(), v })
}

/// Verifies the corner-inverse identities: `U(p)^(1/2) v = phi(p) = v
/// U(p)^(1/2)` and, for self-adjoint x with s(x) <= p, `phi(x) = v U(x) v`.
pub fn corner_inverse_check(
    prob: &ExtensionProblem,
    phi: &LinearMapMatrix,
    ci: &CornerInverse,
    x: &Operator,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    require_dominates(x, &ci.p, tols)?;
    let up = prob.u_map.apply(&ci.p)?;
    let root = positive_sqrt(&up, tols);
    let fp = phi_proj_unchecked(prob, &ci.p, tols)?;
    let r1 = operator_norm(&root.mul(&ci.v).sub(&fp));
    let r2 = operator_norm(&ci.v.mul(&root).sub(&fp));
    let fx = phi.apply(x)?;
    let conj = ci.v.mul(&prob.u_map.apply(x)?).mul(&ci.v);
    let r3 = operator_norm(&fx.sub(&conj)) / (1.0 + operator_norm(x));
    Ok(CertificateReport::new(
        "corner_inverse",
        r1.max(r2).max(r3),
        tols.cert(),
        format!("identities [{r1:.3e}, {r2:.3e}, {r3:.3e}]"),
    ))
}

/// The corner-conjugation route: the map `x -> v U(x) v` with v the corner
/// inverse at the identity. Agrees with phi when the hypotheses hold.
pub fn corner_conjugation_map(
    prob: &ExtensionProblem,
    tols: &Tolerances,
) -> Result<LinearMapMatrix> {
    let one = Operator::identity(&prob.source);
    let ci = corner_inverse(prob, &one, tols)?;
    let sandwich = LinearMapMatrix::sandwich(&ci.v, &ci.v)?;
    sandwich.compose(&prob.u_map)
}

/// Map-norm comparison of two extension routes.
pub fn uniqueness_check(
    phi_a: &LinearMapMatrix,
    phi_b: &LinearMapMatrix,
    tols: &Tolerances,
) -> Result<CertificateReport> {
    if phi_a.domain() != phi_b.domain() || phi_a.codomain() != phi_b.codomain() {
        return Err(Error::ShapeMismatch("routes have different shapes".into()));
    }
    let diff = phi_a.sub(phi_b)?.map_norm();
    let scale = phi_a.map_norm().max(1.0);
    Ok(CertificateReport::new(
        "uniqueness",
        diff / scale,
        tols.cert(),
        "map-norm route comparison",
    ))
}

/// Result of the isometry check: the kernel hypothesis (phi kills no nonzero
/// projection) plus the worst isometry defect on self-adjoint samples.
#[derive(Debug, Clone)]
pub struct IsometryReport {
    pub kernel_hypothesis_holds: bool,
    pub kernel_witness: Option<String>,
    pub worst_defect: f64,
    pub tolerance: f64,
    /// Defect check outcome; meaningful only when the kernel hypothesis
    /// holds (otherwise the remark is not applicable).
    pub passed: bool,
}

/// First verifies the kernel hypothesis over sampled projections, then the
/// isometry defect on self-adjoint samples.
pub fn isometry_check(
    prob: &ExtensionProblem,
    phi: &LinearMapMatrix,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<IsometryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kernel_witness = None;
    for k in 0..samples {
        let p = sample::random_nonzero_projection(&prob.source, &mut rng, tols);
        let fp = phi.apply(&p)?;
        if operator_norm(&fp) <= tols.cert() {
            kernel_witness = Some(format!("sample {k} (seed {seed}): nonzero p with phi(p) = 0"));
            break;
        }
    }
    let kernel_hypothesis_holds = kernel_witness.is_none();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = sample::random_selfadjoint(&prob.source, &mut rng);
        let defect = (operator_norm(&phi.apply(&x)?) - operator_norm(&x)).abs();
        worst = worst.max(defect / (1.0 + operator_norm(&x)));
    }
    Ok(IsometryReport {
        kernel_hypothesis_holds,
        kernel_witness,
        worst_defect: worst,
        tolerance: tols.cert(),
        passed: kernel_hypothesis_holds && worst <= tols.cert(),
    })
}
