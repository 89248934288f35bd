//! Exact finite-dimensional spectral theorem: a self-adjoint operator is a
//! finite real linear combination of mutually orthogonal projections. The
//! zero operator decomposes as the empty list (coefficients are nonzero by
//! convention).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{self, CMat, Operator};
use crate::tol::Tolerances;
use crate::{Error, Result};

/// A list of (distinct real coefficient, projection) pairs with mutually
/// orthogonal projections.
#[derive(Debug, Clone)]
pub struct SpectralForm {
    terms: Vec<(f64, Operator)>,
}

impl SpectralForm {
    /// Validates distinct coefficients, projection property, and mutual
    /// orthogonality at the given tolerance.
    pub fn new(terms: Vec<(f64, Operator)>, tols: &Tolerances) -> Result<Self> {
        for (i, (a, p)) in terms.iter().enumerate() {
            if *a == 0.0 {
                return Err(Error::Precondition("zero spectral coefficient".into()));
            }
            if !algebra::is_projection(p, tols) {
                return Err(Error::Precondition(format!(
                    "spectral term {i} is not a projection"
                )));
            }
            for (j, (b, q)) in terms.iter().enumerate() {
                if i == j {
                    continue;
                }
                if a == b {
                    return Err(Error::Precondition("repeated spectral coefficient".into()));
                }
                if algebra::operator_norm(&p.mul(q)) > tols.cert() {
                    return Err(Error::Precondition(format!(
                        "spectral projections {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        Ok(SpectralForm { terms })
    }

    /// No validation; for internally constructed forms.
    pub(crate) fn from_terms_unchecked(terms: Vec<(f64, Operator)>) -> Self {
        SpectralForm { terms }
    }

    pub fn terms(&self) -> &[(f64, Operator)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of coefficient * projection.
    pub fn reconstruct(&self, alg: &std::sync::Arc<crate::AlgebraDescriptor>) -> Operator {
        let mut acc = Operator::zero(alg);
        for (a, p) in &self.terms {
            acc = acc.add(&p.scale_re(*a));
        }
        acc
    }

    /// Sum of the projections; equals the support projection of the
    /// reconstructed operator.
    pub fn support(&self, alg: &std::sync::Arc<crate::AlgebraDescriptor>) -> Operator {
        let mut acc = Operator::zero(alg);
        for (_, p) in &self.terms {
            acc = acc.add(p);
        }
        acc
    }
}

/// Spectral decomposition of a self-adjoint operator: eigenvalues within the
/// clustering width are merged into one projection; clusters at zero are
/// dropped.
pub fn spectral_decomposition(x: &Operator, tols: &Tolerances) -> Result<SpectralForm> {
    let norm = algebra::operator_norm(x);
    if algebra::operator_norm(&x.sub(&x.adjoint())) > tols.cert() * (1.0 + norm) {
        return Err(Error::Precondition(
            "spectral decomposition requires a self-adjoint operator".into(),
        ));
    }
    let group_eps = tols.group_eps() * norm.max(1.0);

    // gather (eigenvalue, block index, eigenvector) across blocks
    let mut eigenpairs: Vec<(f64, usize, nalgebra::DVector<Complex64>)> = Vec::new();
    for (k, m) in x.blocks().iter().enumerate() {
        let herm = (m + m.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            eigenpairs.push((lambda, k, eig.eigenvectors.column(i).into_owned()));
        }
    }
    eigenpairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut terms: Vec<(f64, Operator)> = Vec::new();
    let mut i = 0;
    while i < eigenpairs.len() {
        let mut j = i + 1;
        while j < eigenpairs.len() && eigenpairs[j].0 - eigenpairs[j - 1].0 <= group_eps {
            j += 1;
        }
        let cluster = &eigenpairs[i..j];
        let coeff = cluster.iter().map(|c| c.0).sum::<f64>() / cluster.len() as f64;
        if coeff.abs() > group_eps {
            let mut blocks: Vec<CMat> = x
                .algebra()
                .blocks()
                .iter()
                .map(|b| DMatrix::zeros(b.dim, b.dim))
                .collect();
            for (_, k, v) in cluster {
                blocks[*k] += v * v.adjoint();
            }
            let p = Operator::new(x.algebra().clone(), blocks).unwrap();
            terms.push((coeff, p));
        }
        i = j;
    }
    Ok(SpectralForm::from_terms_unchecked(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{operator_norm, support_projection, AlgebraDescriptor};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn repeated_eigenvalues_grouped() {
        let alg = AlgebraDescriptor::new(vec![(3, 1.0)]).unwrap();
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(2.0), re(2.0), re(5.0)]));
        let x = Operator::new(alg.clone(), vec![m]).unwrap();
        let t = Tolerances::default();
        let sf = spectral_decomposition(&x, &t).unwrap();
        assert_eq!(sf.terms().len(), 2);
        let mut coeffs: Vec<f64> = sf.terms().iter().map(|t| t.0).collect();
        coeffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((coeffs[0] - 2.0).abs() < 1e-12);
        assert!((coeffs[1] - 5.0).abs() < 1e-12);
        assert!(operator_norm(&sf.reconstruct(&alg).sub(&x)) < 1e-10);
    }

    #[test]
    fn zero_operator_is_empty_form() {
        let alg = AlgebraDescriptor::new(vec![(2, 1.0), (1, 1.0)]).unwrap();
        let t = Tolerances::default();
        let sf = spectral_decomposition(&Operator::zero(&alg), &t).unwrap();
        assert!(sf.is_empty());
    }

    #[test]
    fn pauli_x_eigenprojections() {
        let alg = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
        let m = CMat::from_fn(2, 2, |i, j| if i != j { re(1.0) } else { re(0.0) });
        let x = Operator::new(alg.clone(), vec![m]).unwrap();
        let t = Tolerances::default();
        let sf = spectral_decomposition(&x, &t).unwrap();
        assert_eq!(sf.terms().len(), 2);
        for (a, p) in sf.terms() {
            let sign = if *a > 0.0 { 1.0 } else { -1.0 };
            let expected = CMat::from_fn(2, 2, |i, j| {
                if i == j {
                    re(0.5)
                } else {
                    re(0.5 * sign)
                }
            });
            let exp_op = Operator::new(alg.clone(), vec![expected]).unwrap();
            assert!((a.abs() - 1.0).abs() < 1e-12);
            assert!(operator_norm(&p.sub(&exp_op)) < 1e-10);
        }
    }

    #[test]
    fn non_selfadjoint_rejected() {
        let alg = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
        let m = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { re(1.0) } else { re(0.0) });
        let x = Operator::new(alg, vec![m]).unwrap();
        assert!(spectral_decomposition(&x, &Tolerances::default()).is_err());
    }

    fn random_sa(alg: &Arc<AlgebraDescriptor>, seed: u64) -> Vec<Operator> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100).map(|_| sample::random_selfadjoint(alg, &mut rng)).collect()
    }

    #[test]
    fn reconstruction_and_support_random() {
        let alg = AlgebraDescriptor::new(vec![(3, 1.0), (2, 0.5)]).unwrap();
        let t = Tolerances::default();
        for x in random_sa(&alg, 17) {
            let sf = spectral_decomposition(&x, &t).unwrap();
            let recon = sf.reconstruct(&alg);
            let nx = operator_norm(&x);
            assert!(operator_norm(&recon.sub(&x)) <= 1e-9 * nx.max(1.0));
            let s = support_projection(&x, &t);
            assert!(operator_norm(&sf.support(&alg).sub(&s)) < 1e-8);
            // projections mutually orthogonal, coefficients distinct
            SpectralForm::new(sf.terms().to_vec(), &t).unwrap();
        }
    }
}
