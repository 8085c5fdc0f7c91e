//! Accuracy metrics for calibrated responses and reconstructions.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::math;
use crate::tensor::{norm_sqr, ComplexTensor4};

/// Complementary normalized cross-correlation `1 − |qᴴq̂| / (‖q‖ ‖q̂‖)`.
pub fn complementary_correlation(q: &[Complex64], q_hat: &[Complex64]) -> Result<f64> {
    check_len("estimated atom", q.len(), q_hat.len())?;
    let nq = norm_sqr(q);
    let nh = norm_sqr(q_hat);
    if nq == 0.0 || nh == 0.0 {
        return Err(Error::ZeroSignal("atom"));
    }
    let inner: Complex64 = q.iter().zip(q_hat).map(|(a, b)| a.conj() * b).sum();
    let rho = (inner.norm() / math::sqrt(nq * nh)).min(1.0);
    Ok(1.0 - rho)
}

/// Mean complementary normalized cross-correlation over paired atoms.
pub fn mcncc<A, B>(truth: &[A], estimate: &[B]) -> Result<f64>
where
    A: AsRef<[Complex64]>,
    B: AsRef<[Complex64]>,
{
    if truth.is_empty() {
        return Err(Error::Empty("atom list"));
    }
    check_len("estimated atoms", truth.len(), estimate.len())?;
    let mut terms = alloc::vec::Vec::with_capacity(truth.len());
    for (q, q_hat) in truth.iter().zip(estimate) {
        terms.push(complementary_correlation(q.as_ref(), q_hat.as_ref())?);
    }
    Ok(math::compensated_sum(terms) / truth.len() as f64)
}

/// Relative reconstruction error `‖Y − Ŷ‖_F / ‖Y‖_F`.
pub fn reconstruction_error(y: &ComplexTensor4, y_hat: &ComplexTensor4) -> Result<f64> {
    check_len("reconstruction", y.dims().len(), y_hat.dims().len())?;
    if y.dims() != y_hat.dims() {
        return Err(Error::ShapeMismatch {
            what: "reconstruction dimensions",
            expected: y.dims().len(),
            found: y_hat.dims().len(),
        });
    }
    let energy = y.norm_sqr();
    if energy == 0.0 {
        return Err(Error::ZeroSignal("reference tensor"));
    }
    let diff = math::compensated_sum(
        y.data()
            .iter()
            .zip(y_hat.data())
            .map(|(a, b)| (a - b).norm_sqr()),
    );
    Ok(math::sqrt(diff / energy))
}
