//! Sample-based verification batteries for Jordan-homomorphism-like
//! properties, positivity, and normality of linear maps.
//!
//! Positivity and Jordan properties of arbitrary maps are tested on seeded
//! random samples, not decided exactly; sample count and seed are inputs so
//! reports are reproducible. Residual aggregation is a maximum, so results
//! do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{self, min_eigenvalue, operator_norm, Operator};
use crate::linmap::LinearMapMatrix;
use crate::sample;
use crate::tol::Tolerances;
use crate::{Error, Result};

/// One named check: a residual against a tolerance.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

/// A list of checks; `overall` is their conjunction.
#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl BatteryReport {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        BatteryReport { checks, overall }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Self-adjointness defect plus negative-part size of an image, normalized.
fn positivity_defect(img: &Operator) -> f64 {
    let scale = operator_norm(img).max(1.0);
    let sa_defect = operator_norm(&img.sub(&img.adjoint()));
    let neg = (-min_eigenvalue(&img.herm_part())).max(0.0);
    sa_defect.max(neg) / scale
}

/// Checks that the map sends sampled positive elements to positive elements.
pub fn positivity_probe(
    m: &LinearMapMatrix,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<BatteryReport> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = sample::random_positive(m.domain(), &mut rng);
        let img = m.apply(&x)?;
        worst = worst.max(positivity_defect(&img));
    }
    Ok(BatteryReport::from_checks(vec![Check::new(
        "positivity",
        worst,
        tols.cert(),
    )]))
}

/// The eight Jordan-homomorphism properties, checked on seeded samples.
///
/// (1) adjoint preservation, (2) Jordan multiplicativity, (3) power
/// preservation for n = 2, 3, 4, (4) triple products, (5) projections map to
/// projections, (6) orthogonal projections map to orthogonal images,
/// (7) commuting pairs commute in the image and multiply, (8) contraction on
/// self-adjoint elements.
pub fn jordan_battery(
    m: &LinearMapMatrix,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<BatteryReport> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = m.domain();
    let mut worst = [0.0f64; 8];
    for _ in 0..samples {
        let x = sample::random_operator(dom, &mut rng);
        let y = sample::random_operator(dom, &mut rng);
        let nx = operator_norm(&x);
        let ny = operator_norm(&y);
        let mx = m.apply(&x)?;
        let my = m.apply(&y)?;

        // (1) adjoint preservation
        let r1 = operator_norm(&m.apply(&x.adjoint())?.sub(&mx.adjoint()));
        worst[0] = worst[0].max(r1 / (1.0 + nx));

        // (2) Jordan multiplicativity
        let lhs = m.apply(&algebra::jordan_product(&x, &y)?)?;
        let rhs = algebra::jordan_product(&mx, &my)?;
        worst[1] = worst[1].max(operator_norm(&lhs.sub(&rhs)) / (1.0 + nx * ny));

        // (3) power preservation n = 2, 3, 4
        let mut xp = x.clone();
        let mut mxp = mx.clone();
        for n in 2..=4u32 {
            xp = xp.mul(&x);
            mxp = mxp.mul(&mx);
            let r = operator_norm(&m.apply(&xp)?.sub(&mxp));
            worst[2] = worst[2].max(r / (1.0 + nx.powi(n as i32)));
        }

        // (4) triple product
        let lhs = m.apply(&x.mul(&y).mul(&x))?;
        let rhs = mx.mul(&my).mul(&mx);
        worst[3] = worst[3].max(operator_norm(&lhs.sub(&rhs)) / (1.0 + nx * nx * ny));

        // (5) projections map to projections
        let p = sample::random_projection(dom, &mut rng, tols);
        let mp = m.apply(&p)?;
        let idem = operator_norm(&mp.mul(&mp).sub(&mp));
        let sa = operator_norm(&mp.sub(&mp.adjoint()));
        worst[4] = worst[4].max(idem.max(sa) / (1.0 + operator_norm(&mp)));

        // (6) orthogonal projections map to orthogonal images
        let (p, q) = sample::random_orthogonal_projection_pair(dom, &mut rng);
        let r6 = operator_norm(&m.apply(&p)?.mul(&m.apply(&q)?));
        worst[5] = worst[5].max(r6);

        // (7) commuting pairs
        let (cx, cy) = sample::random_commuting_sa_pair(dom, &mut rng);
        let mcx = m.apply(&cx)?;
        let mcy = m.apply(&cy)?;
        let scale = 1.0 + operator_norm(&cx) * operator_norm(&cy);
        let comm = operator_norm(&mcx.mul(&mcy).sub(&mcy.mul(&mcx)));
        let mult = operator_norm(&m.apply(&cx.mul(&cy))?.sub(&mcx.mul(&mcy)));
        worst[6] = worst[6].max(comm.max(mult) / scale);

        // (8) contraction on self-adjoint elements
        let sx = sample::random_selfadjoint(dom, &mut rng);
        let excess = (operator_norm(&m.apply(&sx)?) - operator_norm(&sx)).max(0.0);
        worst[7] = worst[7].max(excess / (1.0 + operator_norm(&sx)));
    }
    let names = [
        "adjoint_preservation",
        "jordan_multiplicativity",
        "power_preservation",
        "triple_product",
        "projections_to_projections",
        "orthogonality_preservation",
        "commuting_pairs",
        "sa_contraction",
    ];
    let checks = names
        .iter()
        .zip(worst.iter())
        .map(|(n, &r)| Check::new(*n, r, tols.cert()))
        .collect();
    Ok(BatteryReport::from_checks(checks))
}

/// Independently tests the four equivalent characterizations of a
/// projection-preserving continuous linear map and asserts they agree:
/// (1) projections map to projections; (2) adjoint-preserving and Jordan
/// multiplicative; (3) positive and square-preserving on positives;
/// (4) positive, square-preserving on self-adjoints, and a contraction on
/// self-adjoints.
pub fn equivalence_battery(
    m: &LinearMapMatrix,
    samples: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<BatteryReport> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = m.domain();
    let mut worst = [0.0f64; 4];
    for _ in 0..samples {
        // (1) projection-preserving
        let p = sample::random_projection(dom, &mut rng, tols);
        let mp = m.apply(&p)?;
        let idem = operator_norm(&mp.mul(&mp).sub(&mp));
        let sa = operator_norm(&mp.sub(&mp.adjoint()));
        worst[0] = worst[0].max(idem.max(sa) / (1.0 + operator_norm(&mp)));

        // (2) adjoint preservation + Jordan multiplicativity
        let x = sample::random_operator(dom, &mut rng);
        let y = sample::random_operator(dom, &mut rng);
        let mx = m.apply(&x)?;
        let my = m.apply(&y)?;
        let adj = operator_norm(&m.apply(&x.adjoint())?.sub(&mx.adjoint()));
        let jmult = operator_norm(
            &m.apply(&algebra::jordan_product(&x, &y)?)?
                .sub(&algebra::jordan_product(&mx, &my)?),
        );
        let scale = 1.0 + operator_norm(&x) * operator_norm(&y) + operator_norm(&x);
        worst[1] = worst[1].max(adj.max(jmult) / scale);

        // (3) positive + square-preserving on positives
        let pos = sample::random_positive(dom, &mut rng);
        let mpos = m.apply(&pos)?;
        let posdef = positivity_defect(&mpos);
        let sq = operator_norm(&m.apply(&pos.mul(&pos))?.sub(&mpos.mul(&mpos)))
            / (1.0 + operator_norm(&pos).powi(2));
        worst[2] = worst[2].max(posdef.max(sq));

        // (4) positive + square-preserving on sa + contraction on sa
        let sx = sample::random_selfadjoint(dom, &mut rng);
        let msx = m.apply(&sx)?;
        let nsx = operator_norm(&sx);
        let sq = operator_norm(&m.apply(&sx.mul(&sx))?.sub(&msx.mul(&msx))) / (1.0 + nsx * nsx);
        let contr = (operator_norm(&msx) - nsx).max(0.0) / (1.0 + nsx);
        worst[3] = worst[3].max(posdef.max(sq).max(contr));
    }
    let mut checks: Vec<Check> = (0..4)
        .map(|i| Check::new(format!("condition_{}", i + 1), worst[i], tols.cert()))
        .collect();
    let flags: Vec<bool> = checks.iter().map(|c| c.passed).collect();
    let agree = flags.iter().all(|&f| f == flags[0]);
    checks.push(Check::new("agreement", if agree { 0.0 } else { 1.0 }, 0.5));
    Ok(BatteryReport::from_checks(checks))
}

/// A finite increasing chain of self-adjoint operators; stands in for the
/// increasing nets of the normality definition.
#[derive(Debug, Clone)]
pub struct MonotoneChain {
    links: Vec<Operator>,
}

impl MonotoneChain {
    pub fn new(links: Vec<Operator>, tols: &Tolerances) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::Precondition("empty monotone chain".into()));
        }
        for (j, x) in links.iter().enumerate() {
            if !algebra::is_selfadjoint(x, tols) {
                return Err(Error::Precondition(format!(
                    "chain element {j} is not self-adjoint"
                )));
            }
        }
        for j in 0..links.len() - 1 {
            let diff = links[j + 1].sub(&links[j]);
            let scale = 1.0 + operator_norm(&links[j + 1]);
            if min_eigenvalue(&diff.herm_part()) < -tols.cert() * scale {
                return Err(Error::Precondition(format!(
                    "operator chain not monotone at link {j}"
                )));
            }
        }
        Ok(MonotoneChain { links })
    }

    pub fn links(&self) -> &[Operator] {
        &self.links
    }

    pub fn last(&self) -> &Operator {
        self.links.last().unwrap()
    }
}

/// Checks that a map carries each supplied monotone chain to a monotone
/// chain with matching terminal image.
pub fn normality_check(
    m: &LinearMapMatrix,
    chains: &[MonotoneChain],
    tols: &Tolerances,
) -> Result<BatteryReport> {
    let mut checks = Vec::with_capacity(chains.len());
    for (c, chain) in chains.iter().enumerate() {
        let mut worst = 0.0f64;
        let images: Vec<Operator> = chain
            .links()
            .iter()
            .map(|x| m.apply(x))
            .collect::<Result<_>>()?;
        for j in 0..images.len() - 1 {
            let diff = images[j + 1].sub(&images[j]).herm_part();
            let scale = 1.0 + operator_norm(&images[j + 1]);
            worst = worst.max((-min_eigenvalue(&diff)).max(0.0) / scale);
        }
        // terminal image equals the image of the supremum (the last link)
        let terminal = operator_norm(&images.last().unwrap().sub(&m.apply(chain.last())?));
        worst = worst.max(terminal);
        checks.push(Check::new(format!("chain_{c}"), worst, tols.cert()));
    }
    Ok(BatteryReport::from_checks(checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraDescriptor;
    use crate::algebra::CMat;
    use num_complex::Complex64;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn m2() -> std::sync::Arc<AlgebraDescriptor> {
        AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap()
    }

    #[test]
    fn transpose_passes_everything() {
        let t = Tolerances::default();
        let alg = m2();
        let tr = LinearMapMatrix::transpose_map(&alg);
        assert!(positivity_probe(&tr, 50, 1, &t).unwrap().overall);
        let jb = jordan_battery(&tr, 50, 2, &t).unwrap();
        assert!(jb.overall, "{:?}", jb);
        let eq = equivalence_battery(&tr, 50, 3, &t).unwrap();
        assert!(eq.overall, "{:?}", eq);
    }

    #[test]
    fn identity_passes() {
        let t = Tolerances::default();
        let alg = AlgebraDescriptor::new(vec![(2, 1.0), (1, 2.0)]).unwrap();
        let id = LinearMapMatrix::identity(&alg);
        assert!(positivity_probe(&id, 50, 1, &t).unwrap().overall);
        assert!(jordan_battery(&id, 50, 2, &t).unwrap().overall);
    }

    #[test]
    fn trace_deflation_fails_positivity() {
        // x -> x - trace(x) * identity is not positive: on e11 the image has
        // eigenvalue -1
        let t = Tolerances::default();
        let alg = m2();
        let m = LinearMapMatrix::from_action(&alg, &alg, |x| {
            let tr = crate::algebra::trace(x);
            x.sub(&Operator::identity(&alg).scale(tr))
        })
        .unwrap();
        let e11 = Operator::matrix_unit(&alg, 0, 0, 0);
        let img = m.apply(&e11).unwrap();
        assert!((min_eigenvalue(&img) + 1.0).abs() < 1e-12);
        assert!(!positivity_probe(&m, 50, 4, &t).unwrap().overall);
    }

    #[test]
    fn conjugation_by_non_unitary_fails_items_2_and_5() {
        let t = Tolerances::default();
        let alg = m2();
        let a = Operator::new(
            alg.clone(),
            vec![CMat::from_fn(2, 2, |i, j| {
                if i == j {
                    re(if i == 0 { 1.0 } else { 2.0 })
                } else {
                    re(0.0)
                }
            })],
        )
        .unwrap();
        let m = LinearMapMatrix::sandwich(&a, &a).unwrap();
        let jb = jordan_battery(&m, 50, 5, &t).unwrap();
        assert!(!jb.check("jordan_multiplicativity").unwrap().passed);
        assert!(!jb.check("projections_to_projections").unwrap().passed);
        // item (5) on p = e22: image is 4 e22, not a projection
        let e22 = Operator::matrix_unit(&alg, 0, 1, 1);
        let img = m.apply(&e22).unwrap();
        assert!((operator_norm(&img) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_conjugation_passes_equivalence() {
        use rand::SeedableRng;
        let t = Tolerances::default();
        let alg = m2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let u = crate::sample::random_unitary(&alg, &mut rng);
        let m = LinearMapMatrix::sandwich(&u, &u.adjoint()).unwrap();
        let eq = equivalence_battery(&m, 100, 7, &t).unwrap();
        assert!(eq.overall, "{:?}", eq);
    }

    #[test]
    fn doubled_identity_fails_all_four_but_agrees() {
        let t = Tolerances::default();
        let alg = m2();
        let m = LinearMapMatrix::identity(&alg).scale(re(2.0));
        let eq = equivalence_battery(&m, 50, 8, &t).unwrap();
        for i in 1..=4 {
            assert!(!eq.check(&format!("condition_{i}")).unwrap().passed);
        }
        assert!(eq.check("agreement").unwrap().passed);
    }

    #[test]
    fn normality_on_projection_chain() {
        let t = Tolerances::default();
        let alg = m2();
        let e11 = Operator::matrix_unit(&alg, 0, 0, 0);
        let one = Operator::identity(&alg);
        let chain = MonotoneChain::new(vec![e11, one], &t).unwrap();
        let tr = LinearMapMatrix::transpose_map(&alg);
        assert!(normality_check(&tr, &[chain], &t).unwrap().overall);
    }

    #[test]
    fn normality_rejects_non_monotone_chain() {
        let t = Tolerances::default();
        let alg = m2();
        let e11 = Operator::matrix_unit(&alg, 0, 0, 0);
        let e22 = Operator::matrix_unit(&alg, 0, 1, 1);
        assert!(MonotoneChain::new(vec![e11, e22], &t).is_err());
    }

    #[test]
    fn normality_follows_positivity_on_random_chains() {
        use rand::SeedableRng;
        // in finite dimension a positive linear map is automatically normal
        let t = Tolerances::default();
        let alg = AlgebraDescriptor::new(vec![(2, 1.0), (2, 1.0)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        // trace-like positive map x -> trace(x) e11
        let e11 = Operator::matrix_unit(&alg, 0, 0, 0);
        let m = LinearMapMatrix::from_action(&alg, &alg, |x| e11.scale(crate::algebra::trace(x)))
            .unwrap();
        assert!(positivity_probe(&m, 100, 1, &t).unwrap().overall);
        let chains: Vec<MonotoneChain> = (0..20)
            .map(|_| {
                let pc = crate::sample::random_chain(&alg, 3, false, &mut rng, &t);
                MonotoneChain::new(pc.links().to_vec(), &t).unwrap()
            })
            .collect();
        assert!(normality_check(&m, &chains, &t).unwrap().overall);
    }
}
