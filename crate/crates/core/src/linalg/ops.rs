use super::matrix::{BipartiteDims, ComplexMatrix, DensityMatrix, HermitianOperator, Subsystem, C64, ZERO};
use crate::error::{Error, Result};

/// Kronecker product with the first factor as the slow index:
/// `(A⊗B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let overflow = || Error::Size("Kronecker product dimension overflows".into());
    let rows = a.rows().checked_mul(b.rows()).ok_or_else(overflow)?;
    let cols = a.cols().checked_mul(b.cols()).ok_or_else(overflow)?;
    rows.checked_mul(cols).ok_or_else(overflow)?;
    let (rb, cb) = (b.rows(), b.cols());
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    }))
}

/// Partial trace of a `dS·dB` square matrix, removing the factor `over`.
pub fn partial_trace(a: &ComplexMatrix, dims: BipartiteDims, over: Subsystem) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    dims.check(a.rows())?;
    let (ds, db) = (dims.system(), dims.bath());
    let out = match over {
        Subsystem::Bath => ComplexMatrix::from_fn(ds, ds, |s, t| (0..db).map(|b| a[(s * db + b, t * db + b)]).sum()),
        Subsystem::System => ComplexMatrix::from_fn(db, db, |b, c| (0..ds).map(|s| a[(s * db + b, s * db + c)]).sum()),
    };
    Ok(out)
}

/// `Σ|λ_i|`
pub fn trace_norm(a: &HermitianOperator) -> Result<f64> {
    Ok(a.eigenvalues()?.iter().map(|x| x.abs()).sum())
}

/// `√(Σ|A_ij|²)`
pub fn hs_norm(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm()
}

/// `max|λ_i|`
pub fn operator_norm(a: &HermitianOperator) -> Result<f64> {
    let values = a.eigenvalues()?;
    Ok(match (values.first(), values.last()) {
        (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
        _ => 0.0,
    })
}

/// Von Neumann entropy in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(shannon_entropy(rho.eigenvalues()?))
}

/// `−Σ p ln p` over probabilities clamped to `[0, 1]`.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .map(|&p| p.clamp(0.0, 1.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Trace distance `‖ρ − σ‖₁` between two states of equal dimension.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_norm(&rho.operator().checked_sub(sigma.operator())?)
}

/// `‖A − B‖₁` for two Hermitian matrices given as raw entries.
pub(crate) fn hermitian_difference_trace_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let diff = a.checked_sub(b)?;
    if diff.rows() == 2 {
        // closed form for 2×2: λ± = m ± r
        let p = diff[(0, 0)].re;
        let q = diff[(1, 1)].re;
        let off = diff[(0, 1)].norm();
        let m = 0.5 * (p + q);
        let r = (0.25 * (p - q) * (p - q) + off * off).sqrt();
        return Ok((m + r).abs() + (m - r).abs());
    }
    trace_norm(&HermitianOperator::from_hermitian_unchecked(diff))
}

pub(crate) fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).fold(ZERO, |acc, x| acc + x)
}
