//! Uniformly distributed pure states, constrained sampling and fast reduced
//! states.
//!
//! A uniform point on the unit sphere of `ℂ^d` is obtained by normalizing a
//! vector of `2d` independent standard normals; the Gaussian measure is
//! unitarily invariant, so the normalized vector is too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, BipartiteDims, ComplexMatrix, DensityMatrix, C64, ZERO};
use crate::parallel::Sampling;
use crate::rng::{domain, RngStream};
use crate::stats::CompensatedSum;

pub const NORM_TOL: f64 = 1e-12;
pub const ORTHONORMAL_TOL: f64 = 1e-10;
const ZERO_VECTOR_GUARD: f64 = 1e-300;

/// A unit vector in `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Size("pure state needs dimension ≥ 1".into()));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes `v`; fails on (numerically) zero vectors.
    pub fn normalized(mut v: Vec<C64>) -> Result<Self> {
        let n = norm(&v);
        if n.is_nan() || n <= ZERO_VECTOR_GUARD {
            return Err(Error::NotNormalized { norm: n });
        }
        v.iter_mut().for_each(|z| *z /= n);
        Self::new(v)
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: k + 1,
            });
        }
        let mut v = vec![ZERO; dim];
        v[k] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    /// `|u⟩ ⊗ |v⟩`, system-major.
    pub fn product(u: &PureState, v: &PureState) -> Self {
        let amplitudes = u
            .amplitudes
            .iter()
            .flat_map(|a| v.amplitudes.iter().map(move |b| a * b))
            .collect();
        PureState { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    /// `e^{iθ}|φ⟩`
    pub fn with_phase(&self, theta: f64) -> Self {
        let p = C64::from_polar(1.0, theta);
        PureState {
            amplitudes: self.amplitudes.iter().map(|z| z * p).collect(),
        }
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// Euclidean distance `‖φ₁ − φ₂‖`.
    pub fn euclidean_distance(&self, other: &PureState) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.amplitudes).expect("normalized by construction")
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Fills `buf` with a uniformly distributed unit vector.
pub(crate) fn fill_uniform(buf: &mut [C64], rng: &mut RngStream) {
    loop {
        let mut sq = 0.0;
        for z in buf.iter_mut() {
            *z = rng.complex_normal();
            sq += z.norm_sqr();
        }
        let n = sq.sqrt();
        if n >= ZERO_VECTOR_GUARD {
            let inv = 1.0 / n;
            buf.iter_mut().for_each(|z| *z *= inv);
            return;
        }
    }
}

/// Uniform (unitarily invariant) pure state in `ℂ^dim`.
pub fn sample_uniform(dim: usize, rng: &mut RngStream) -> Result<PureState> {
    if dim == 0 {
        return Err(Error::Size("cannot sample a state of dimension 0".into()));
    }
    let mut amplitudes = vec![ZERO; dim];
    fill_uniform(&mut amplitudes, rng);
    Ok(PureState { amplitudes })
}

/// Columns of a `d × dR` matrix that are orthonormal within `1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    columns: ComplexMatrix,
}

impl OrthonormalBasis {
    pub fn new(columns: ComplexMatrix) -> Result<Self> {
        if columns.cols() == 0 || columns.cols() > columns.rows() {
            return Err(Error::Size(format!(
                "basis must have 1..={} columns, got {}",
                columns.rows(),
                columns.cols()
            )));
        }
        let gram = columns.adjoint().matmul(&columns)?;
        let deviation = gram.max_abs_diff(&ComplexMatrix::identity(columns.cols()))?;
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(OrthonormalBasis { columns })
    }

    /// Haar-random `dr`-dimensional subspace of `ℂ^d` (Gaussian columns,
    /// Gram–Schmidt applied twice).
    pub fn random(d: usize, dr: usize, rng: &mut RngStream) -> Result<Self> {
        if dr == 0 || dr > d {
            return Err(Error::invalid("dr", format!("must be in 1..={d}, got {dr}")));
        }
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dr);
        while cols.len() < dr {
            let mut v: Vec<C64> = (0..d).map(|_| rng.complex_normal()).collect();
            for _ in 0..2 {
                for u in &cols {
                    let c = inner(u, &v);
                    v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
                }
            }
            let n = norm(&v);
            if n > 1e-8 {
                v.iter_mut().for_each(|z| *z /= n);
                cols.push(v);
            }
        }
        Self::new(ComplexMatrix::from_columns(&cols)?)
    }

    pub fn full(d: usize) -> Self {
        OrthonormalBasis {
            columns: ComplexMatrix::identity(d),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.rows()
    }

    pub fn dim(&self) -> usize {
        self.columns.cols()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.columns
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        self.columns.column(k)
    }

    /// `Σ_k c_k u_k`
    pub(crate) fn combine_into(&self, coefficients: &[C64], out: &mut [C64]) {
        let dr = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.columns.as_slice()[i * dr..(i + 1) * dr];
            *o = row.iter().zip(coefficients).map(|(a, b)| a * b).sum();
        }
    }
}

/// Uniform pure state on the unit sphere of the span of `basis`.
pub fn sample_in_subspace(basis: &OrthonormalBasis, rng: &mut RngStream) -> PureState {
    let mut coefficients = vec![ZERO; basis.dim()];
    fill_uniform(&mut coefficients, rng);
    let mut amplitudes = vec![ZERO; basis.ambient_dim()];
    basis.combine_into(&coefficients, &mut amplitudes);
    let n = norm(&amplitudes);
    amplitudes.iter_mut().for_each(|z| *z /= n);
    PureState { amplitudes }
}

/// `ρ[s,t] = Σ_b z[s·dB+b]·conj(z[t·dB+b])` written into `out` (row-major
/// `dS × dS`), without forming the `d × d` projector.
pub(crate) fn reduce_into(amplitudes: &[C64], dims: BipartiteDims, out: &mut [C64]) {
    let (ds, db) = (dims.system(), dims.bath());
    for s in 0..ds {
        let zs = &amplitudes[s * db..(s + 1) * db];
        for t in s..ds {
            let zt = &amplitudes[t * db..(t + 1) * db];
            let mut acc = ZERO;
            for (a, b) in zs.iter().zip(zt) {
                acc += a * b.conj();
            }
            out[s * ds + t] = acc;
            out[t * ds + s] = acc.conj();
        }
        out[s * ds + s].im = 0.0;
    }
}

/// System reduced state `tr_B |φ⟩⟨φ|` in `O(dS²·dB)` time.
pub fn reduced_state(phi: &PureState, dims: BipartiteDims) -> Result<DensityMatrix> {
    dims.check(phi.dim())?;
    let ds = dims.system();
    let mut out = vec![ZERO; ds * ds];
    reduce_into(&phi.amplitudes, dims, &mut out);
    Ok(DensityMatrix::from_trusted(ComplexMatrix::from_vec(ds, ds, out)?))
}

/// Sample moments of the coefficients of a uniform state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub schema: String,
    pub dim: usize,
    pub samples: u64,
    /// `max_k |⟨z_k⟩|`
    pub max_abs_first_moment: f64,
    /// `max_k |⟨z_k⟩| / SE_k`
    pub max_first_moment_z: f64,
    /// `max_kl |⟨z_k z̄_l⟩ − δ_kl/d|`
    pub max_second_moment_deviation: f64,
    /// `max_kl |⟨z_k z̄_l⟩ − δ_kl/d| / SE_kl`
    pub max_second_moment_z: f64,
    /// `max_k |⟨|z_k|²⟩ − 1/d|`
    pub max_diagonal_deviation: f64,
    pub max_diagonal_z: f64,
    pub first_moment_se: Vec<f64>,
    /// Row-major `d × d`.
    pub second_moment_se: Vec<f64>,
}

impl MomentReport {
    pub const SCHEMA: &'static str = "moments/1";

    /// All statistics within `k` standard errors of their expected values.
    pub fn within(&self, k: f64) -> bool {
        self.max_first_moment_z <= k && self.max_second_moment_z <= k
    }
}

/// Accumulates Σw, Σ|w|² for a complex statistic.
#[derive(Debug, Clone, Default)]
struct ComplexMoment {
    re: CompensatedSum,
    im: CompensatedSum,
    sq: CompensatedSum,
}

impl ComplexMoment {
    fn mean_and_se(&self, n: f64) -> (C64, f64) {
        let mean = C64::new(self.re.value() / n, self.im.value() / n);
        let var = (self.sq.value() / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

fn z_score(deviation: f64, se: f64) -> f64 {
    if se > 0.0 {
        deviation / se
    } else if deviation <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Single-pass first and second moments of `samples` uniform states in `ℂ^dim`.
/// Memory and time per sample are `O(dim²)`.
pub fn coefficient_moments(dim: usize, samples: u64, sampling: Sampling) -> Result<MomentReport> {
    if dim == 0 {
        return Err(Error::Size("dimension must be ≥ 1".into()));
    }
    if samples < 100 {
        return Err(Error::invalid("samples", format!("need at least 100, got {samples}")));
    }
    let plan = sampling.plan(domain::MOMENTS, samples);
    let d = dim;

    let mut first = vec![ComplexMoment::default(); d];
    let mut second = vec![ComplexMoment::default(); d * d];

    let per_block = |block: crate::parallel::Block, rng: &mut RngStream| {
        let mut f = vec![[0.0f64; 3]; d];
        let mut s = vec![[0.0f64; 3]; d * d];
        let mut z = vec![ZERO; d];
        for _ in 0..block.len {
            fill_uniform(&mut z, rng);
            for k in 0..d {
                let zk = z[k];
                f[k][0] += zk.re;
                f[k][1] += zk.im;
                f[k][2] += zk.norm_sqr();
                for l in 0..d {
                    let w = zk * z[l].conj();
                    let e = &mut s[k * d + l];
                    e[0] += w.re;
                    e[1] += w.im;
                    e[2] += w.norm_sqr();
                }
            }
        }
        (f, s)
    };
    let merge = |acc: &mut [ComplexMoment], part: &[[f64; 3]]| {
        for (a, p) in acc.iter_mut().zip(part) {
            a.re.add(p[0]);
            a.im.add(p[1]);
            a.sq.add(p[2]);
        }
    };
    plan.for_each_chunked(per_block, |(f, s)| {
        merge(&mut first, &f);
        merge(&mut second, &s);
        Ok(())
    })?;

    let n = samples as f64;
    let mut report = MomentReport {
        schema: MomentReport::SCHEMA.into(),
        dim,
        samples,
        max_abs_first_moment: 0.0,
        max_first_moment_z: 0.0,
        max_second_moment_deviation: 0.0,
        max_second_moment_z: 0.0,
        max_diagonal_deviation: 0.0,
        max_diagonal_z: 0.0,
        first_moment_se: Vec::with_capacity(d),
        second_moment_se: Vec::with_capacity(d * d),
    };
    for m in &first {
        let (mean, se) = m.mean_and_se(n);
        report.max_abs_first_moment = report.max_abs_first_moment.max(mean.norm());
        report.max_first_moment_z = report.max_first_moment_z.max(z_score(mean.norm(), se));
        report.first_moment_se.push(se);
    }
    for k in 0..d {
        for l in 0..d {
            let (mean, se) = second[k * d + l].mean_and_se(n);
            let expected = if k == l { 1.0 / d as f64 } else { 0.0 };
            let dev = (mean - expected).norm();
            let z = z_score(dev, se);
            report.max_second_moment_deviation = report.max_second_moment_deviation.max(dev);
            report.max_second_moment_z = report.max_second_moment_z.max(z);
            if k == l {
                report.max_diagonal_deviation = report.max_diagonal_deviation.max(dev);
                report.max_diagonal_z = report.max_diagonal_z.max(z);
            }
            report.second_moment_se.push(se);
        }
    }
    Ok(report)
}
