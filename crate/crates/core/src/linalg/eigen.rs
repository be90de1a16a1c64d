//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `A[p,q]` with a
//! diagonal unitary, then annihilates the now real off-diagonal pair with a
//! real plane rotation. A sweep visits every pivot once in round-robin order:
//! each of its `n − 1` steps applies `⌊n/2⌋` rotations on disjoint index
//! pairs, rows first and then columns, so all memory traffic is row-wise.
//! Sweeps stop once the off-diagonal Frobenius mass is at most `1e-14 · ‖A‖_F`.

use num_complex::Complex64 as C64;

use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(λ) V†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj()).sum()
        })
    }
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Diagonalizes a Hermitian matrix. The caller guarantees Hermiticity.
pub(crate) fn jacobi_eigh(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    let mut a: Vec<C64> = m.as_slice().to_vec();
    // Eigenvectors are accumulated as rows, so every update is contiguous.
    let mut vt = vec![ZERO; n * n];
    for i in 0..n {
        vt[i * n + i] = ONE;
    }

    let scale = m.frobenius_norm();
    let tol = OFF_DIAGONAL_TOL * scale;
    // Skipping pivots below tol/n still leaves off-diagonal mass ≤ tol.
    let pivot_floor = tol / n.max(1) as f64;

    let mut players: Vec<usize> = (0..n + n % 2).collect();
    let mut rotations = Vec::with_capacity(n / 2);
    let mut sweeps = 0;
    while scale > 0.0 && off_diagonal_norm(&a, n) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off_diagonal_norm(&a, n) / scale,
            });
        }
        sweeps += 1;
        for _ in 1..players.len() {
            rotations.clear();
            let half = players.len() / 2;
            for i in 0..half {
                let (x, y) = (players[i], players[players.len() - 1 - i]);
                let (p, q) = (x.min(y), x.max(y));
                if q < n {
                    if let Some(r) = Rotation::annihilating(&a, n, p, q, pivot_floor) {
                        rotations.push(r);
                    }
                }
            }
            apply(&mut a, &mut vt, n, &rotations);
            // round-robin: keep the first player fixed, cycle the rest
            players[1..].rotate_right(1);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vt[order[j] * n + i]);
    Ok(EigenDecomposition { values, vectors })
}

/// `G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]` acting on coordinates `p < q`.
struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    gqp: C64,
    gqq: C64,
    app: f64,
    aqq: f64,
}

impl Rotation {
    fn annihilating(a: &[C64], n: usize, p: usize, q: usize, floor: f64) -> Option<Self> {
        let apq = a[p * n + q];
        let b = apq.norm();
        if b <= floor {
            return None;
        }
        let phase = apq / b;
        let (app, aqq) = (a[p * n + p].re, a[q * n + q].re);
        let theta = (aqq - app) / (2.0 * b);
        let t = if theta.is_infinite() {
            0.0
        } else {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        Some(Rotation {
            p,
            q,
            c,
            s,
            gqp: -phase.conj() * s,
            gqq: phase.conj() * c,
            app: app - t * b,
            aqq: aqq + t * b,
        })
    }

    /// `(x_p, x_q) ← (x_p, x_q) · G` on one row.
    fn right(&self, row: &mut [C64]) {
        let (xp, xq) = (row[self.p], row[self.q]);
        row[self.p] = xp * self.c + xq * self.gqp;
        row[self.q] = xp * self.s + xq * self.gqq;
    }
}

/// Rows `p < q` of a row-major `n × n` buffer.
fn row_pair(buf: &mut [C64], n: usize, p: usize, q: usize) -> (&mut [C64], &mut [C64]) {
    let (lo, hi) = buf.split_at_mut(q * n);
    (&mut lo[p * n..(p + 1) * n], &mut hi[..n])
}

/// `(x, y) ← (c x + β y, s x + δ y)` elementwise.
fn mix(x: &mut [C64], y: &mut [C64], c: f64, beta: C64, s: f64, delta: C64) {
    for (u, w) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*u, *w);
        *u = a * c + b * beta;
        *w = a * s + b * delta;
    }
}

/// `A ← G†AG` and `Vᵀ ← (VG)ᵀ` for rotations on disjoint index pairs.
fn apply(a: &mut [C64], vt: &mut [C64], n: usize, rotations: &[Rotation]) {
    for r in rotations {
        let (row_p, row_q) = row_pair(a, n, r.p, r.q);
        mix(row_p, row_q, r.c, r.gqp.conj(), r.s, r.gqq.conj());
        let (col_p, col_q) = row_pair(vt, n, r.p, r.q);
        mix(col_p, col_q, r.c, r.gqp, r.s, r.gqq);
    }
    for row in a.chunks_exact_mut(n) {
        for r in rotations {
            r.right(row);
        }
    }
    for r in rotations {
        a[r.p * n + r.q] = ZERO;
        a[r.q * n + r.p] = ZERO;
        a[r.p * n + r.p] = C64::new(r.app, 0.0);
        a[r.q * n + r.q] = C64::new(r.aqq, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianOperator;
    use crate::rng::RngStream;

    fn random_hermitian(n: usize, rng: &mut RngStream) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
        g.checked_add(&g.adjoint()).unwrap().scale_real(0.5)
    }

    /// det(A − xI) by Gaussian elimination with partial pivoting.
    fn char_poly(a: &ComplexMatrix, x: f64) -> f64 {
        let n = a.rows();
        let mut m: Vec<Vec<C64>> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)] - if i == j { x } else { 0.0 }).collect())
            .collect();
        let mut det = ONE;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
                .unwrap();
            if m[piv][col] == ZERO {
                return 0.0;
            }
            if piv != col {
                m.swap(piv, col);
                det = -det;
            }
            det *= m[col][col];
            let pivot_row = m[col].clone();
            for row in m.iter_mut().skip(col + 1) {
                let f = row[col] / pivot_row[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
        det.re
    }

    /// Roots of the characteristic polynomial by scanning for sign changes
    /// and bisecting each bracket.
    fn bisection_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
        let bound = a.frobenius_norm() + 1.0;
        let steps = 40_000;
        let h = 2.0 * bound / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = -bound;
        let mut f0 = char_poly(a, x0);
        for k in 1..=steps {
            let x1 = -bound + k as f64 * h;
            let f1 = char_poly(a, x1);
            if f0.signum() != f1.signum() {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = char_poly(a, mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    fn orthonormality_error(v: &ComplexMatrix) -> f64 {
        let g = v.adjoint().matmul(v).unwrap();
        g.max_abs_diff(&ComplexMatrix::identity(v.cols())).unwrap()
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let m = ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let e = jacobi_eigh(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let m = ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let e = jacobi_eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_two_by_two_with_phase() {
        let m = ComplexMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(1.0, 0.0),
                C64::new(0.0, -2.0),
                C64::new(0.0, 2.0),
                C64::new(-1.0, 0.0),
            ],
        )
        .unwrap();
        let e = jacobi_eigh(&m).unwrap();
        let r5 = 5f64.sqrt();
        assert!((e.values[0] + r5).abs() < 1e-14);
        assert!((e.values[1] - r5).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&m).unwrap() < 1e-14);
    }

    #[test]
    fn random_six_by_six_matches_characteristic_polynomial() {
        let mut rng = RngStream::new(11, 0);
        let a = random_hermitian(6, &mut rng);
        let oracle = bisection_eigenvalues(&a);
        assert_eq!(oracle.len(), 6);
        let e = jacobi_eigh(&a).unwrap();
        for (x, y) in e.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn reconstruction_and_orthonormality_up_to_256() {
        let mut rng = RngStream::new(5, 1);
        for &n in &[1usize, 2, 7, 32, 128, 256] {
            let a = random_hermitian(n, &mut rng);
            let op = HermitianOperator::new(a.clone()).unwrap();
            let e = op.eigen().unwrap();
            let norm = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let residual = e.reconstruct().max_abs_diff(&a).unwrap();
            assert!(residual <= 1e-10 * norm, "n={n} residual {residual}");
            assert!(orthonormality_error(&e.vectors) <= 1e-12, "n={n}");
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // Projector of rank 3 in dimension 6, rotated by a random unitary-ish basis.
        let mut rng = RngStream::new(2, 3);
        let g = random_hermitian(6, &mut rng);
        let basis = jacobi_eigh(&g).unwrap().vectors;
        let d = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let p = basis.matmul(&d).unwrap().matmul(&basis.adjoint()).unwrap();
        let e = HermitianOperator::new(p.clone()).unwrap().eigen().unwrap().clone();
        for (k, &x) in e.values.iter().enumerate() {
            let expect = if k < 3 { 0.0 } else { 1.0 };
            assert!((x - expect).abs() < 1e-12);
        }
        assert!(e.reconstruct().max_abs_diff(&p).unwrap() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let mut rng = RngStream::new(9, 0);
        let a = random_hermitian(20, &mut rng);
        assert_eq!(jacobi_eigh(&a).unwrap(), jacobi_eigh(&a).unwrap());
    }
}
