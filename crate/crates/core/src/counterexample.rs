//! The M2 obstruction: a latitude-dependent azimuth twist of the Bloch
//! sphere is an orthogonally additive projection mapping on M2 (the only
//! nontrivial orthogonal pairs are antipodes), yet for a non-constant
//! profile no linear map matches it on projections. This is why algebras
//! with M2 summands need the s(U(p)) presentation hypothesis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{is_projection, operator_norm, trace, AlgebraDescriptor, CMat, Operator};
use crate::linmap::vectorize;
use crate::tol::Tolerances;
use crate::{Error, Result};

/// Regression floor for the sin-profile witness residual, computed by dense
/// deterministic sphere sampling and exact least squares (converged value
/// 0.09653 at 8000 points; random 200-point draws stay within [0.096, 0.106]).
pub const R0_SIN: f64 = 0.0965;

/// Rotation angle about the z-axis as a function of the polar angle
/// theta in [0, pi]. All built-in profiles satisfy
/// profile(pi - theta) = profile(theta), which makes the twist
/// antipode-compatible and hence orthogonally additive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwistProfile {
    Zero,
    Constant(f64),
    Sin,
}

impl TwistProfile {
    pub fn angle(&self, theta: f64) -> f64 {
        match self {
            TwistProfile::Zero => 0.0,
            TwistProfile::Constant(c) => *c,
            TwistProfile::Sin => theta.sin(),
        }
    }

    /// Parses "zero", "constant:<c>", or "sin".
    pub fn parse(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(TwistProfile::Zero);
        }
        if s == "sin" {
            return Ok(TwistProfile::Sin);
        }
        if let Some(c) = s.strip_prefix("constant:") {
            let v: f64 = c.parse().map_err(|_| Error::Parse {
                path: "profile".into(),
                message: format!("bad constant in profile '{s}'"),
            })?;
            return Ok(TwistProfile::Constant(v));
        }
        Err(Error::Parse {
            path: "profile".into(),
            message: format!("unknown profile '{s}' (expected zero, constant:<c>, sin)"),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            TwistProfile::Zero => "zero".into(),
            TwistProfile::Constant(c) => format!("constant:{c}"),
            TwistProfile::Sin => "sin".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwistMap {
    pub profile: TwistProfile,
    pub description: String,
}

impl TwistMap {
    pub fn new(profile: TwistProfile) -> Self {
        let description = format!(
            "Bloch-sphere azimuth twist with profile {}",
            profile.describe()
        );
        TwistMap { profile, description }
    }
}

/// The M2 model algebra the twist lives on.
pub fn m2_algebra() -> Arc<AlgebraDescriptor> {
    AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap()
}

fn bloch_vector(p: &CMat) -> [f64; 3] {
    [
        2.0 * p[(0, 1)].re,
        -2.0 * p[(0, 1)].im,
        p[(0, 0)].re - p[(1, 1)].re,
    ]
}

fn projection_from_bloch(alg: &Arc<AlgebraDescriptor>, n: [f64; 3]) -> Operator {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.5 * (1.0 + n[2]), 0.0),
            Complex64::new(0.5 * n[0], -0.5 * n[1]),
            Complex64::new(0.5 * n[0], 0.5 * n[1]),
            Complex64::new(0.5 * (1.0 - n[2]), 0.0),
        ],
    );
    Operator::new(alg.clone(), vec![m]).unwrap()
}

fn rotate_z(n: [f64; 3], a: f64) -> [f64; 3] {
    let (s, c) = a.sin_cos();
    [c * n[0] - s * n[1], s * n[0] + c * n[1], n[2]]
}

/// Applies the twist to a projection in M2: 0 and 1 are fixed; a rank-1
/// projection has its Bloch vector rotated about the z-axis by the profile
/// angle at its latitude.
pub fn twist_apply(t: &TwistMap, p: &Operator, tols: &Tolerances) -> Result<Operator> {
    if p.algebra().num_blocks() != 1 || p.algebra().blocks()[0].dim != 2 {
        return Err(Error::ShapeMismatch("twist_apply expects an M2 operator".into()));
    }
    if !is_projection(p, tols) {
        return Err(Error::Precondition("twist_apply requires a projection".into()));
    }
    let rank = trace(p).re.round() as i64;
    match rank {
        0 => Ok(Operator::zero(p.algebra())),
        2 => Ok(Operator::identity(p.algebra())),
        1 => {
            let n = bloch_vector(p.block(0));
            let theta = n[2].clamp(-1.0, 1.0).acos();
            let rotated = rotate_z(n, t.profile.angle(theta));
            Ok(projection_from_bloch(p.algebra(), rotated))
        }
        _ => Err(Error::Precondition("projection of impossible rank".into())),
    }
}

/// Uniform random rank-1 projection of M2 (normalized Gaussian Bloch vector).
pub fn random_rank1<R: Rng>(alg: &Arc<AlgebraDescriptor>, rng: &mut R) -> Operator {
    use rand_distr::StandardNormal;
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-6 {
            return projection_from_bloch(alg, [v[0] / norm, v[1] / norm, v[2] / norm]);
        }
    }
}

/// Fits the best linear map L on M2 matching L(p_j) = twist(p_j) over
/// sampled rank-1 projections plus the unitality constraint L(1) = 1, and
/// returns the worst operator-norm misfit. Strictly positive (bounded below
/// by [`R0_SIN`]) for the sin profile: no linear extension exists.
pub fn nonextendability_witness(
    t: &TwistMap,
    sample_count: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::Precondition("sample_count must be >= 1".into()));
    }
    let alg = m2_algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut projections: Vec<Operator> = (0..sample_count)
        .map(|_| random_rank1(&alg, &mut rng))
        .collect();
    let images: Vec<Operator> = projections
        .iter()
        .map(|p| twist_apply(t, p, tols))
        .collect::<Result<_>>()?;

    // rows: one equation block per constraint, unknown L^T solved
    // column-by-column from P^T L^T = T^T
    let n_eq = sample_count + 1;
    let mut pt = CMat::zeros(n_eq, 4);
    let mut tt = CMat::zeros(n_eq, 4);
    for (j, (p, img)) in projections.iter().zip(&images).enumerate() {
        pt.row_mut(j).copy_from(&vectorize(p).transpose());
        tt.row_mut(j).copy_from(&vectorize(img).transpose());
    }
    let one = Operator::identity(&alg);
    pt.row_mut(sample_count).copy_from(&vectorize(&one).transpose());
    tt.row_mut(sample_count).copy_from(&vectorize(&one).transpose());

    let svd = pt.svd(true, true);
    let mut l_t = CMat::zeros(4, 4);
    for c in 0..4 {
        let rhs: DVector<Complex64> = tt.column(c).into_owned();
        let sol = svd.solve(&rhs, tols.rank_eps()).map_err(|e| {
            Error::Precondition(format!("least squares failed: {e}"))
        })?;
        l_t.set_column(c, &sol);
    }
    let l = l_t.transpose();

    projections.push(one.clone());
    let mut worst = 0.0f64;
    for p in &projections {
        let fitted = &l * vectorize(p);
        let target = if operator_norm(&p.sub(&one)) < 1e-12 {
            one.clone()
        } else {
            twist_apply(t, p, tols)?
        };
        let img = crate::linmap::devectorize(&alg, &fitted)?;
        worst = worst.max(operator_norm(&img.sub(&target)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn poles_and_trivial_ranks_fixed() {
        let t = Tolerances::default();
        let alg = m2_algebra();
        let tw = TwistMap::new(TwistProfile::Sin);
        for p in [
            Operator::matrix_unit(&alg, 0, 0, 0),
            Operator::matrix_unit(&alg, 0, 1, 1),
            Operator::zero(&alg),
            Operator::identity(&alg),
        ] {
            let img = twist_apply(&tw, &p, &t).unwrap();
            assert!(operator_norm(&img.sub(&p)) < 1e-12);
        }
    }

    #[test]
    fn equator_quarter_turn() {
        // constant pi/2 profile sends azimuth 0 to pi/2:
        // (1/2)[[1,1],[1,1]] -> (1/2)[[1,-i],[i,1]]
        let t = Tolerances::default();
        let alg = m2_algebra();
        let tw = TwistMap::new(TwistProfile::Constant(FRAC_PI_2));
        let m = DMatrix::from_row_slice(2, 2, &[re(0.5), re(0.5), re(0.5), re(0.5)]);
        let p = Operator::new(alg.clone(), vec![m]).unwrap();
        let img = twist_apply(&tw, &p, &t).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[
                re(0.5),
                Complex64::new(0.0, -0.5),
                Complex64::new(0.0, 0.5),
                re(0.5),
            ],
        );
        let e = Operator::new(alg, vec![expected]).unwrap();
        assert!(operator_norm(&img.sub(&e)) < 1e-12);
    }

    #[test]
    fn twist_preserves_rank_and_projection_property() {
        let t = Tolerances::default();
        let alg = m2_algebra();
        let tw = TwistMap::new(TwistProfile::Sin);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let p = random_rank1(&alg, &mut rng);
            let img = twist_apply(&tw, &p, &t).unwrap();
            assert!(is_projection(&img, &t));
            assert!((trace(&img).re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_additivity_of_twist() {
        // the only nontrivial orthogonal pairs in M2 are antipodes
        let t = Tolerances::default();
        let alg = m2_algebra();
        let tw = TwistMap::new(TwistProfile::Sin);
        let one = Operator::identity(&alg);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..500 {
            let p = random_rank1(&alg, &mut rng);
            let q = one.sub(&p);
            let a = twist_apply(&tw, &p, &t).unwrap();
            let b = twist_apply(&tw, &q, &t).unwrap();
            assert!(operator_norm(&a.add(&b).sub(&one)) <= 1e-9);
        }
    }

    #[test]
    fn linear_profiles_have_vanishing_residual() {
        let t = Tolerances::default();
        let zero = nonextendability_witness(&TwistMap::new(TwistProfile::Zero), 200, 33, &t)
            .unwrap();
        assert!(zero <= 1e-10, "{zero:.3e}");
        let constant =
            nonextendability_witness(&TwistMap::new(TwistProfile::Constant(0.7)), 200, 34, &t)
                .unwrap();
        assert!(constant <= 1e-10, "{constant:.3e}");
    }

    #[test]
    fn sin_profile_residual_floor() {
        let t = Tolerances::default();
        let r = nonextendability_witness(&TwistMap::new(TwistProfile::Sin), 200, 35, &t).unwrap();
        assert!(r >= R0_SIN / 2.0, "{r:.3e}");
        assert!(r <= 2.0 * R0_SIN, "{r:.3e}");
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(TwistProfile::parse("zero").unwrap(), TwistProfile::Zero);
        assert_eq!(TwistProfile::parse("sin").unwrap(), TwistProfile::Sin);
        assert_eq!(
            TwistProfile::parse("constant:1.5").unwrap(),
            TwistProfile::Constant(1.5)
        );
        assert!(TwistProfile::parse("spiral").is_err());
        assert!(TwistProfile::parse("constant:x").is_err());
    }

    #[test]
    fn non_projection_and_wrong_algebra_rejected() {
        let t = Tolerances::default();
        let alg = m2_algebra();
        let tw = TwistMap::new(TwistProfile::Sin);
        let x = Operator::identity(&alg).scale_re(2.0);
        assert!(twist_apply(&tw, &x, &t).is_err());
        let m3 = AlgebraDescriptor::new(vec![(3, 1.0)]).unwrap();
        assert!(twist_apply(&tw, &Operator::zero(&m3), &t).is_err());
    }
}
