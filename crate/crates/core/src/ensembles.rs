//! Spectral windows, restricted subspaces and the ensembles built on them:
//! equiprobable (microcanonical) states, their system marginals, Gibbs states,
//! bath entropy and inverse temperature, and weakly coupled model Hamiltonians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    kron, operator_norm, partial_trace, trace_distance, BipartiteDims, ComplexMatrix, DensityMatrix, HermitianOperator,
    Subsystem, C64, ZERO,
};
use crate::rng::{domain, RngStream};
use crate::states::{fill_uniform, reduce_into, OrthonormalBasis, PureState};

/// Relative tolerance on window edges: a level within `1e-9·scale` of an edge
/// counts as inside.
pub const WINDOW_TOL: f64 = 1e-9;

/// Largest total dimension `dS·dB` for which a dense model Hamiltonian is built.
pub const MAX_DENSE_DIM: usize = 1 << 15;

/// Closed energy interval `[energy, energy + delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub energy: f64,
    pub delta: f64,
}

impl SpectralWindow {
    pub fn new(energy: f64, delta: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::invalid("window_e", format!("must be finite, got {energy}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("window_delta", format!("must be positive, got {delta}")));
        }
        Ok(SpectralWindow { energy, delta })
    }

    pub fn lower(&self) -> f64 {
        self.energy
    }

    pub fn upper(&self) -> f64 {
        self.energy + self.delta
    }

    /// Same width, shifted by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        SpectralWindow {
            energy: self.energy + shift,
            delta: self.delta,
        }
    }

    fn empty_error(&self) -> Error {
        Error::EmptyWindow {
            lower: self.lower(),
            upper: self.upper(),
        }
    }
}

/// Sorted list of energy levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    levels: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Size("spectrum needs at least one level".into()));
        }
        if let Some(index) = levels.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        levels.sort_by(f64::total_cmp);
        Ok(Spectrum { levels })
    }

    /// Eigenvalues of `h`.
    pub fn of(h: &HermitianOperator) -> Result<Self> {
        Ok(Spectrum {
            levels: h.eigenvalues()?.to_vec(),
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `max|E_k|`, the operator norm of the diagonal Hamiltonian.
    pub fn norm(&self) -> f64 {
        let lo = self.levels[0].abs();
        let hi = self.levels[self.levels.len() - 1].abs();
        lo.max(hi)
    }

    fn tolerance(&self) -> f64 {
        WINDOW_TOL * self.norm().max(f64::MIN_POSITIVE)
    }

    /// Index range of the levels inside `w` (edges included within tolerance).
    pub fn window_range(&self, w: &SpectralWindow) -> std::ops::Range<usize> {
        let tol = self.tolerance();
        let lo = self.levels.partition_point(|&x| x < w.lower() - tol);
        let hi = self.levels.partition_point(|&x| x <= w.upper() + tol);
        lo..hi.max(lo)
    }

    pub fn count_in(&self, w: &SpectralWindow) -> usize {
        self.window_range(w).len()
    }

    /// Narrowest window starting at `energy` that holds at least `count` levels.
    pub fn window_for_count(&self, energy: f64, count: usize) -> Result<SpectralWindow> {
        let start = self.levels.partition_point(|&x| x < energy - self.tolerance());
        let last = start + count.max(1) - 1;
        if last >= self.levels.len() {
            return Err(Error::invalid(
                "window_e",
                format!("fewer than {count} levels above {energy}"),
            ));
        }
        let delta = (self.levels[last] - energy).max(self.tolerance()).max(f64::EPSILON);
        SpectralWindow::new(energy, delta)
    }
}

/// A subspace `H_R` of `ℂ^d`: either the whole space (kept implicit so that
/// large `d` costs nothing) or the span of explicit orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub enum Subspace {
    Full { dim: usize },
    Span(OrthonormalBasis),
}

impl Subspace {
    pub fn full(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Size("subspace dimension must be ≥ 1".into()));
        }
        Ok(Subspace::Full { dim })
    }

    pub fn span(basis: OrthonormalBasis) -> Self {
        Subspace::Span(basis)
    }

    /// Haar-random `dr`-dimensional subspace of `ℂ^d`.
    pub fn random(d: usize, dr: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(Subspace::Span(OrthonormalBasis::random(d, dr, rng)?))
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Subspace::Full { dim } => *dim,
            Subspace::Span(b) => b.ambient_dim(),
        }
    }

    /// `d_R`
    pub fn dim(&self) -> usize {
        match self {
            Subspace::Full { dim } => *dim,
            Subspace::Span(b) => b.dim(),
        }
    }

    /// Dense orthonormal basis (the identity for the full space).
    pub fn basis(&self) -> OrthonormalBasis {
        match self {
            Subspace::Full { dim } => OrthonormalBasis::full(*dim),
            Subspace::Span(b) => b.clone(),
        }
    }

    /// Dense projector `P_R = Σ_k |u_k⟩⟨u_k|`.
    pub fn projector(&self) -> HermitianOperator {
        match self {
            Subspace::Full { dim } => HermitianOperator::identity(*dim),
            Subspace::Span(b) => {
                let u = b.matrix();
                let p = u.matmul(&u.adjoint()).expect("conforming shapes");
                HermitianOperator::from_hermitian_unchecked(p)
            }
        }
    }

    /// Uniform unit vector of the subspace written into `out`; `coefficients`
    /// is scratch space of length `d_R`.
    pub(crate) fn sample_into(&self, coefficients: &mut [C64], out: &mut [C64], rng: &mut RngStream) {
        match self {
            Subspace::Full { .. } => fill_uniform(out, rng),
            Subspace::Span(b) => {
                fill_uniform(coefficients, rng);
                b.combine_into(coefficients, out);
                let n = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                out.iter_mut().for_each(|z| *z /= n);
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> PureState {
        let mut coefficients = vec![ZERO; self.dim()];
        let mut out = vec![ZERO; self.ambient_dim()];
        self.sample_into(&mut coefficients, &mut out, rng);
        PureState::new(out).expect("normalized")
    }

    /// `Ω_S = tr_B(P_R)/d_R` without forming `P_R`.
    pub fn canonical_state(&self, dims: BipartiteDims) -> Result<DensityMatrix> {
        dims.check(self.ambient_dim())?;
        let ds = dims.system();
        match self {
            Subspace::Full { .. } => Ok(DensityMatrix::maximally_mixed(ds)),
            Subspace::Span(b) => {
                let mut acc = vec![ZERO; ds * ds];
                let mut part = vec![ZERO; ds * ds];
                for k in 0..b.dim() {
                    reduce_into(&b.column(k), dims, &mut part);
                    acc.iter_mut().zip(&part).for_each(|(a, p)| *a += p);
                }
                let scale = 1.0 / b.dim() as f64;
                acc.iter_mut().for_each(|a| *a *= scale);
                Ok(DensityMatrix::from_trusted(ComplexMatrix::from_vec(ds, ds, acc)?))
            }
        }
    }

    /// `1 / tr Ω_B²` with `Ω_B = tr_S(P_R)/d_R`, without forming `P_R`.
    pub fn effective_bath_dim(&self, dims: BipartiteDims) -> Result<f64> {
        dims.check(self.ambient_dim())?;
        let (ds, db) = (dims.system(), dims.bath());
        match self {
            Subspace::Full { .. } => Ok(db as f64),
            Subspace::Span(b) => {
                // Ω_B[c,e] = (1/dR) Σ_k Σ_s u_k[s·dB+c] conj(u_k[s·dB+e])
                let mut omega = vec![ZERO; db * db];
                for k in 0..b.dim() {
                    let u = b.column(k);
                    for s in 0..ds {
                        let block = &u[s * db..(s + 1) * db];
                        for (c, x) in block.iter().enumerate() {
                            let row = &mut omega[c * db..(c + 1) * db];
                            for (o, y) in row.iter_mut().zip(block) {
                                *o += x * y.conj();
                            }
                        }
                    }
                }
                let dr = b.dim() as f64;
                let purity = omega.iter().map(|z| z.norm_sqr()).sum::<f64>() / (dr * dr);
                Ok(1.0 / purity)
            }
        }
    }
}

/// Span of the eigenvectors of `h` whose eigenvalues lie in `w`. The window
/// edges are widened by `1e-9·‖h‖`.
pub fn spectral_window_subspace(h: &HermitianOperator, w: &SpectralWindow) -> Result<Subspace> {
    let eig = h.eigen()?;
    let tol = WINDOW_TOL * operator_norm(h)?.max(f64::MIN_POSITIVE);
    let columns: Vec<Vec<C64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= w.lower() - tol && x <= w.upper() + tol)
        .map(|(k, _)| eig.vectors.column(k))
        .collect();
    if columns.is_empty() {
        return Err(w.empty_error());
    }
    Ok(Subspace::Span(OrthonormalBasis::new(ComplexMatrix::from_columns(
        &columns,
    )?)?))
}

/// `E_R = P_R / d_R`
pub fn equiprobable_state(r: &Subspace) -> DensityMatrix {
    let p = r.projector();
    DensityMatrix::from_trusted(p.into_matrix().scale_real(1.0 / r.dim() as f64))
}

/// `Ω_S = tr_B E_R`
pub fn canonical_state(e_r: &DensityMatrix, dims: BipartiteDims) -> Result<DensityMatrix> {
    let omega = partial_trace(e_r.matrix(), dims, Subsystem::Bath)?;
    Ok(DensityMatrix::from_trusted(omega))
}

/// `d_B^eff = 1 / tr Ω_B²` with `Ω_B = tr_S E_R`.
pub fn effective_bath_dim(e_r: &DensityMatrix, dims: BipartiteDims) -> Result<f64> {
    let omega_b = partial_trace(e_r.matrix(), dims, Subsystem::System)?;
    Ok(1.0 / omega_b.frobenius_norm().powi(2))
}

/// Boltzmann weights `e^{−βε}/Z`, shifted by the minimum level.
pub fn gibbs_weights(levels: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("must be finite and ≥ 0, got {beta}")));
    }
    let min = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = levels.iter().map(|e| (-beta * (e - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// `e^{−βH}/Z`, built in the eigenbasis of `h`.
pub fn gibbs_state(h: &HermitianOperator, beta: f64) -> Result<DensityMatrix> {
    let eig = h.eigen()?;
    let p = gibbs_weights(&eig.values, beta)?;
    let v = &eig.vectors;
    let n = h.dim();
    let m = ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * p[k]).sum());
    Ok(DensityMatrix::from_trusted(m))
}

/// `S_B = ln(number of levels in w)`.
pub fn bath_entropy(bath: &Spectrum, w: &SpectralWindow) -> Result<f64> {
    match bath.count_in(w) {
        0 => Err(w.empty_error()),
        n => Ok((n as f64).ln()),
    }
}

/// Forward difference `(S_B(E + dE) − S_B(E)) / dE`.
pub fn inverse_temperature(bath: &Spectrum, w: &SpectralWindow, de: f64) -> Result<f64> {
    if !(de > 0.0 && de.is_finite()) {
        return Err(Error::invalid("de", format!("must be positive, got {de}")));
    }
    let s0 = bath_entropy(bath, w)?;
    let s1 = bath_entropy(bath, &w.shifted(de))?;
    Ok((s1 - s0) / de)
}

/// Inverse-temperature estimate with `dE = 4δ`, averaged over the windows
/// starting at `E − δ`, `E` and `E + δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    /// Largest deviation of a single-window estimate from `beta`.
    pub spread: f64,
    pub de: f64,
}

pub fn smoothed_inverse_temperature(bath: &Spectrum, w: &SpectralWindow) -> Result<BetaEstimate> {
    let de = 4.0 * w.delta;
    let mut estimates = [0.0; 3];
    for (k, shift) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        estimates[k] = inverse_temperature(bath, &w.shifted(shift * w.delta), de)?;
    }
    let beta = estimates.iter().sum::<f64>() / 3.0;
    let spread = estimates.iter().map(|b| (b - beta).abs()).fold(0.0, f64::max);
    Ok(BetaEstimate { beta, spread, de })
}

/// How the bath levels are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BathSpectrum {
    /// `E_k = k·spacing`
    Linear {
        spacing: f64,
    },
    /// `dB` i.i.d. uniform levels on `[0, dB·spacing]`, sorted.
    RandomUniform {
        spacing: f64,
    },
    /// Deterministic quantiles of the density `∝ e^{βE}` on `[0, width]`.
    Exponential {
        beta: f64,
        width: f64,
    },
    Custom {
        levels: Vec<f64>,
    },
}

/// System levels, bath spectrum and coupling of `H = H_S⊗1 + 1⊗H_B + λH_int`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub system_levels: Vec<f64>,
    pub bath_dim: usize,
    pub bath: BathSpectrum,
    pub lambda: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn dims(&self) -> Result<BipartiteDims> {
        BipartiteDims::new(self.system_levels.len(), self.bath_dim)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        if let Some(index) = self.system_levels.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and ≥ 0, got {}", self.lambda),
            ));
        }
        match &self.bath {
            BathSpectrum::Linear { spacing } | BathSpectrum::RandomUniform { spacing } => {
                if !(*spacing > 0.0 && spacing.is_finite()) {
                    return Err(Error::invalid("spacing", format!("must be positive, got {spacing}")));
                }
            }
            BathSpectrum::Exponential { beta, width } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
                }
                if !(*width > 0.0 && width.is_finite() && beta * width < 700.0) {
                    return Err(Error::invalid(
                        "width",
                        format!("must be positive with β·width < 700, got {width}"),
                    ));
                }
            }
            BathSpectrum::Custom { levels } => {
                if levels.len() != self.bath_dim {
                    return Err(Error::invalid(
                        "levels",
                        format!("expected {} bath levels, got {}", self.bath_dim, levels.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn system_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.system_levels.clone())
    }

    /// Materialized bath levels, sorted ascending.
    pub fn bath_spectrum(&self) -> Result<Spectrum> {
        self.validate()?;
        let db = self.bath_dim;
        let levels = match &self.bath {
            BathSpectrum::Linear { spacing } => (0..db).map(|k| k as f64 * spacing).collect(),
            BathSpectrum::RandomUniform { spacing } => {
                let mut rng = RngStream::new(self.seed, domain::base(domain::MODEL));
                let width = db as f64 * spacing;
                (0..db).map(|_| rng.uniform() * width).collect()
            }
            BathSpectrum::Exponential { beta, width } => {
                let span = (beta * width).exp_m1();
                (0..db)
                    .map(|k| ((k as f64 + 0.5) / db as f64 * span).ln_1p() / beta)
                    .collect()
            }
            BathSpectrum::Custom { levels } => levels.clone(),
        };
        Spectrum::new(levels)
    }
}

/// Dense Hamiltonians of a weakly coupled model.
#[derive(Debug, Clone)]
pub struct WeakCouplingModel {
    pub total: HermitianOperator,
    pub system: HermitianOperator,
    pub bath: HermitianOperator,
    /// Set when `λ > 0.1·min(‖H_S‖, ‖H_B‖)`.
    pub warnings: Vec<String>,
}

/// Gaussian-entry Hermitian matrix scaled to unit operator norm.
pub fn random_interaction(dim: usize, rng: &mut RngStream) -> Result<HermitianOperator> {
    let mut g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
    g = g.checked_add(&g.adjoint())?.scale_real(0.5);
    let h = HermitianOperator::from_hermitian_unchecked(g);
    let norm = operator_norm(&h)?;
    Ok(h.scale(1.0 / norm))
}

/// `H = H_S⊗1_B + 1_S⊗H_B + λ·H_int`, deterministic in `spec`.
pub fn build_weak_coupling_model(spec: &ModelSpec) -> Result<WeakCouplingModel> {
    spec.validate()?;
    let dims = spec.dims()?;
    if dims.total() > MAX_DENSE_DIM {
        return Err(Error::Size(format!(
            "dense model of dimension {} exceeds {MAX_DENSE_DIM}",
            dims.total()
        )));
    }
    let system = HermitianOperator::from_real_diagonal(spec.system_spectrum()?.levels())?;
    let bath = HermitianOperator::from_real_diagonal(spec.bath_spectrum()?.levels())?;
    let mut h = kron(system.matrix(), &ComplexMatrix::identity(dims.bath()))?
        .checked_add(&kron(&ComplexMatrix::identity(dims.system()), bath.matrix())?)?;

    let mut warnings = Vec::new();
    if spec.lambda > 0.0 {
        let mut rng = RngStream::new(spec.seed, domain::base(domain::MODEL) + 1);
        let h_int = random_interaction(dims.total(), &mut rng)?;
        h = h.checked_add(&h_int.matrix().scale_real(spec.lambda))?;
        let scale = operator_norm(&system)?.min(operator_norm(&bath)?);
        if spec.lambda > 0.1 * scale {
            warnings.push(format!(
                "coupling λ = {} exceeds 0.1·min(‖H_S‖, ‖H_B‖) = {}",
                spec.lambda,
                0.1 * scale
            ));
        }
    }
    Ok(WeakCouplingModel {
        total: HermitianOperator::from_hermitian_unchecked(h),
        system,
        bath,
        warnings,
    })
}

/// Result of the Gibbs-emergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalReport {
    pub schema: String,
    pub ds: usize,
    pub db: usize,
    pub lambda: f64,
    pub window: SpectralWindow,
    pub dr: usize,
    /// Bath levels in `[E − ε_α, E − ε_α + δ]` per system level (uncoupled model only).
    pub bath_counts: Option<Vec<usize>>,
    /// Bath levels in the window used for `β̂`.
    pub bath_levels_in_window: usize,
    pub canonical: ComplexMatrix,
    pub beta: BetaEstimate,
    pub gibbs: ComplexMatrix,
    pub trace_distance: f64,
    pub warnings: Vec<String>,
}

impl ThermalReport {
    pub const SCHEMA: &'static str = "thermal/1";
}

/// `Ω_S = Σ_α (d_α / d_R)|ε_α⟩⟨ε_α|` for the uncoupled model, by counting
/// bath levels in the shifted windows. Returns the counts and `Ω_S`.
pub fn uncoupled_canonical_state(
    system: &[f64],
    bath: &Spectrum,
    w: &SpectralWindow,
) -> Result<(Vec<usize>, DensityMatrix)> {
    let counts: Vec<usize> = system.iter().map(|e| bath.count_in(&w.shifted(-e))).collect();
    let dr: usize = counts.iter().sum();
    if dr == 0 {
        return Err(w.empty_error());
    }
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / dr as f64).collect();
    Ok((
        counts,
        DensityMatrix::from_trusted(ComplexMatrix::from_real_diagonal(&p)),
    ))
}

/// Builds `Ω_S` for the shell `w` of the model and compares it with the Gibbs
/// state at the bath's inverse temperature `β̂`. The uncoupled model is handled
/// by level counting at any `dB`; a coupled model is diagonalized densely.
pub fn thermal_experiment(spec: &ModelSpec, w: &SpectralWindow) -> Result<ThermalReport> {
    spec.validate()?;
    let dims = spec.dims()?;
    let bath = spec.bath_spectrum()?;
    let system = spec.system_spectrum()?;

    let (dr, bath_counts, canonical, warnings) = if spec.lambda == 0.0 {
        let (counts, omega) = uncoupled_canonical_state(&spec.system_levels, &bath, w)?;
        (counts.iter().sum(), Some(counts), omega, Vec::new())
    } else {
        let model = build_weak_coupling_model(spec)?;
        let r = spectral_window_subspace(&model.total, w)?;
        (r.dim(), None, r.canonical_state(dims)?, model.warnings)
    };

    // bath energy E − ε̄ seen by the central system level
    let levels = system.levels();
    let mid = 0.5 * (levels[0] + levels[levels.len() - 1]);
    let bath_window = w.shifted(-mid);
    let beta = smoothed_inverse_temperature(&bath, &bath_window)?;
    let h_s = HermitianOperator::from_real_diagonal(&spec.system_levels)?;
    // a slightly negative β̂ from counting noise is clamped to infinite temperature
    let gibbs = gibbs_state(&h_s, beta.beta.max(0.0))?;
    let trace_distance = trace_distance(&canonical, &gibbs)?;

    Ok(ThermalReport {
        schema: ThermalReport::SCHEMA.into(),
        ds: dims.system(),
        db: dims.bath(),
        lambda: spec.lambda,
        window: *w,
        dr,
        bath_counts,
        bath_levels_in_window: bath.count_in(&bath_window),
        canonical: canonical.matrix().clone(),
        beta,
        gibbs: gibbs.matrix().clone(),
        trace_distance,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hs_norm;

    fn diag(values: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(values).unwrap()
    }

    fn random_hermitian(n: usize, rng: &mut RngStream) -> HermitianOperator {
        let g = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
        HermitianOperator::new(g.checked_add(&g.adjoint()).unwrap()).unwrap()
    }

    #[test]
    fn window_on_diagonal_spectrum() {
        let h = diag(&[0.0, 1.0, 2.0, 3.0]);
        let r = spectral_window_subspace(&h, &SpectralWindow::new(0.5, 2.0).unwrap()).unwrap();
        assert_eq!(r.dim(), 2);
        let expected = ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 1.0, 0.0]);
        assert!(r.projector().matrix().max_abs_diff(&expected).unwrap() < 1e-12);
        let e = equiprobable_state(&r);
        let half = ComplexMatrix::from_real_diagonal(&[0.0, 0.5, 0.5, 0.0]);
        assert!(e.matrix().max_abs_diff(&half).unwrap() < 1e-12);
    }

    #[test]
    fn empty_window_is_an_error() {
        let h = diag(&[0.0, 1.0, 2.0, 3.0]);
        let err = spectral_window_subspace(&h, &SpectralWindow::new(5.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::EmptyWindow { .. }));
        assert!(err.to_string().contains("empty spectral window"));
    }

    #[test]
    fn window_edges_are_inclusive() {
        let h = diag(&[0.0, 1.0, 2.0, 3.0]);
        let r = spectral_window_subspace(&h, &SpectralWindow::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(r.dim(), 2);
        let r = spectral_window_subspace(&h, &SpectralWindow::new(1.0 + 1e-10, 1.0).unwrap()).unwrap();
        assert_eq!(r.dim(), 2);
    }

    #[test]
    fn full_window_gives_identity() {
        let mut rng = RngStream::new(4, 0);
        let h = random_hermitian(16, &mut rng);
        let values = h.eigenvalues().unwrap();
        let w = SpectralWindow::new(values[0] - 1.0, values[15] - values[0] + 2.0).unwrap();
        let r = spectral_window_subspace(&h, &w).unwrap();
        assert_eq!(r.dim(), 16);
        let p = r.projector();
        assert!(p.matrix().max_abs_diff(&ComplexMatrix::identity(16)).unwrap() < 1e-10);
    }

    #[test]
    fn projector_is_idempotent_with_trace_dr() {
        let mut rng = RngStream::new(5, 0);
        let r = Subspace::random(12, 5, &mut rng).unwrap();
        let p = r.projector();
        let p2 = p.matrix().matmul(p.matrix()).unwrap();
        assert!(p2.max_abs_diff(p.matrix()).unwrap() < 1e-10);
        assert!((p.matrix().trace().re - 5.0).abs() < 1e-8);
    }

    #[test]
    fn equiprobable_state_purity() {
        let mut rng = RngStream::new(6, 0);
        for dr in [1, 3, 8] {
            let r = Subspace::random(8, dr, &mut rng).unwrap();
            assert!((equiprobable_state(&r).purity() - 1.0 / dr as f64).abs() < 1e-10);
        }
        let e = equiprobable_state(&Subspace::full(6).unwrap());
        assert!(
            e.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(6).matrix())
                .unwrap()
                < 1e-15
        );
        let single = Subspace::random(4, 1, &mut rng).unwrap();
        assert!((equiprobable_state(&single).purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_state_examples() {
        let dims = BipartiteDims::new(3, 4).unwrap();
        let omega = canonical_state(&DensityMatrix::maximally_mixed(12), dims).unwrap();
        assert!(
            omega
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(3).matrix())
                .unwrap()
                < 1e-15
        );

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        let e = DensityMatrix::pure(&bell).unwrap();
        let omega = canonical_state(&e, BipartiteDims::new(2, 2).unwrap()).unwrap();
        assert!(
            omega
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn fast_canonical_state_matches_dense() {
        let mut rng = RngStream::new(7, 0);
        let dims = BipartiteDims::new(3, 5).unwrap();
        let r = Subspace::random(15, 6, &mut rng).unwrap();
        let dense = canonical_state(&equiprobable_state(&r), dims).unwrap();
        let fast = r.canonical_state(dims).unwrap();
        assert!(dense.matrix().max_abs_diff(fast.matrix()).unwrap() < 1e-12);
    }

    #[test]
    fn effective_bath_dim_examples() {
        let dims = BipartiteDims::new(2, 8).unwrap();
        let full = DensityMatrix::maximally_mixed(16);
        assert!((effective_bath_dim(&full, dims).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(Subspace::full(16).unwrap().effective_bath_dim(dims).unwrap(), 8.0);

        let u = PureState::normalized(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]).unwrap();
        let v = PureState::basis(8, 3).unwrap();
        let product = PureState::product(&u, &v).projector();
        assert!((effective_bath_dim(&product, dims).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_bath_dim_on_random_subspace() {
        let mut rng = RngStream::new(8, 0);
        let dims = BipartiteDims::new(2, 8).unwrap();
        for _ in 0..5 {
            let r = Subspace::random(16, 5, &mut rng).unwrap();
            let e = equiprobable_state(&r);
            // brute force: explicit Ω_B from the four-index sum
            let m = e.matrix();
            let mut purity = 0.0;
            for b in 0..8 {
                for c in 0..8 {
                    let entry: C64 = (0..2).map(|s| m[(s * 8 + b, s * 8 + c)]).sum();
                    purity += entry.norm_sqr();
                }
            }
            let dense = effective_bath_dim(&e, dims).unwrap();
            let fast = r.effective_bath_dim(dims).unwrap();
            assert!((dense - 1.0 / purity).abs() < 1e-10);
            assert!((fast - dense).abs() < 1e-10);
            assert!(dense >= 5.0 / 2.0 - 1e-6);
        }
    }

    #[test]
    fn gibbs_examples() {
        let h = diag(&[0.0, 1.0]);
        let g = gibbs_state(&h, 0.0).unwrap();
        assert!(
            g.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                .unwrap()
                < 1e-15
        );
        let g = gibbs_state(&h, 3f64.ln()).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[0.75, 0.25]);
        assert!(g.matrix().max_abs_diff(&expected).unwrap() < 1e-14);

        let beta = 30.0;
        let g = gibbs_state(&diag(&[0.0, 1.0, 2.0]), beta).unwrap();
        assert!(g.matrix()[(1, 1)].re <= (-beta).exp());
        assert!(g.matrix()[(2, 2)].re <= (-beta).exp());
        assert!((g.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);

        assert!(matches!(
            gibbs_state(&h, -1.0),
            Err(Error::InvalidParameter { name: "beta", .. })
        ));
    }

    #[test]
    fn gibbs_commutes_with_hamiltonian() {
        let mut rng = RngStream::new(9, 0);
        let h = random_hermitian(6, &mut rng);
        let g = gibbs_state(&h, 0.7).unwrap();
        let a = g.matrix().matmul(h.matrix()).unwrap();
        let b = h.matrix().matmul(g.matrix()).unwrap();
        assert!(hs_norm(&a.checked_sub(&b).unwrap()) <= 1e-10);
        assert!((g.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bath_entropy_counts() {
        let one = Spectrum::new(vec![0.0, 5.0]).unwrap();
        assert_eq!(
            bath_entropy(&one, &SpectralWindow::new(4.0, 2.0).unwrap()).unwrap(),
            0.0
        );

        let h = diag(&(0..16).map(f64::from).collect::<Vec<_>>());
        let s = Spectrum::of(&h).unwrap();
        let w = SpectralWindow::new(0.0, 7.5).unwrap();
        assert!((bath_entropy(&s, &w).unwrap() - 8f64.ln()).abs() < 1e-15);
        assert!(bath_entropy(&s, &SpectralWindow::new(20.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn bath_entropy_matches_exhaustive_count() {
        let mut rng = RngStream::new(10, 0);
        let levels: Vec<f64> = (0..4096).map(|_| rng.uniform()).collect();
        let s = Spectrum::new(levels.clone()).unwrap();
        let w = SpectralWindow::new(0.37, 0.1).unwrap();
        let direct = levels.iter().filter(|&&x| (0.37..=0.47).contains(&x)).count();
        assert_eq!(bath_entropy(&s, &w).unwrap(), (direct as f64).ln());
    }

    #[test]
    fn bath_entropy_nondecreasing_in_delta() {
        let mut rng = RngStream::new(11, 0);
        let s = Spectrum::new((0..500).map(|_| rng.uniform() * 10.0).collect()).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 1..40 {
            let e = bath_entropy(&s, &SpectralWindow::new(3.0, 0.05 * k as f64).unwrap()).unwrap();
            assert!(e >= last);
            last = e;
        }
    }

    /// `c·2^j` evenly spaced levels on each `[j, j+1)`.
    fn doubling_spectrum(c: usize, units: u32) -> Spectrum {
        let mut levels = Vec::new();
        for j in 0..units {
            let n = c << j;
            levels.extend((0..n).map(|i| j as f64 + (i as f64 + 0.5) / n as f64));
        }
        Spectrum::new(levels).unwrap()
    }

    #[test]
    fn beta_of_doubling_spectrum_is_ln2() {
        let s = doubling_spectrum(4, 10);
        for e in [2.25, 3.25, 5.25] {
            let w = SpectralWindow::new(e, 1.0).unwrap();
            let beta = inverse_temperature(&s, &w, 1.0).unwrap();
            assert!((beta - 2f64.ln()).abs() < 1e-12, "{beta}");
        }
    }

    #[test]
    fn beta_of_flat_density_is_zero() {
        let s = Spectrum::new((0..4096).map(f64::from).collect()).unwrap();
        let b = smoothed_inverse_temperature(&s, &SpectralWindow::new(1000.0, 64.0).unwrap()).unwrap();
        assert!(b.beta.abs() < 1e-3);
    }

    #[test]
    fn beta_of_exponential_density() {
        // density ∝ e^{βE} on [0, L]; levels at inverse-CDF midpoints
        let (beta, l, n) = (1.5f64, 6.0f64, 1usize << 14);
        let scale = (beta * l).exp_m1();
        let levels: Vec<f64> = (0..n)
            .map(|i| ((i as f64 + 0.5) / n as f64 * scale).ln_1p() / beta)
            .collect();
        let s = Spectrum::new(levels).unwrap();
        let est = smoothed_inverse_temperature(&s, &SpectralWindow::new(4.0, 0.1).unwrap()).unwrap();
        assert!((est.beta - beta).abs() < 0.15, "{est:?}");
    }

    #[test]
    fn inverse_temperature_reports_failing_window() {
        let s = Spectrum::new(vec![0.0, 0.1, 0.2]).unwrap();
        let err = inverse_temperature(&s, &SpectralWindow::new(0.0, 0.5).unwrap(), 2.0).unwrap_err();
        assert_eq!(err, Error::EmptyWindow { lower: 2.0, upper: 2.5 });
    }

    #[test]
    fn window_for_count_holds_count() {
        let s = Spectrum::new((0..100).map(f64::from).collect()).unwrap();
        let w = s.window_for_count(10.0, 32).unwrap();
        assert_eq!(s.count_in(&w), 32);
        assert!(s.window_for_count(90.0, 32).is_err());
    }

    fn spec(levels: Vec<f64>, bath: BathSpectrum, db: usize, lambda: f64) -> ModelSpec {
        ModelSpec {
            system_levels: levels,
            bath_dim: db,
            bath,
            lambda,
            seed: 3,
        }
    }

    fn sorted_sums(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn uncoupled_spectrum_is_sum_of_levels() {
        let m = build_weak_coupling_model(&spec(
            vec![0.0, 1.0],
            BathSpectrum::Custom { levels: vec![0.0, 2.0] },
            2,
            0.0,
        ))
        .unwrap();
        let values = m.total.eigenvalues().unwrap();
        for (x, y) in values.iter().zip([0.0, 1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }

        let s = spec(
            vec![0.0, 0.7, 1.3],
            BathSpectrum::RandomUniform { spacing: 0.5 },
            8,
            0.0,
        );
        let m = build_weak_coupling_model(&s).unwrap();
        let expected = sorted_sums(&s.system_levels, s.bath_spectrum().unwrap().levels());
        for (x, y) in m.total.eigenvalues().unwrap().iter().zip(&expected) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn weak_coupling_respects_weyl_bound() {
        let base = spec(vec![0.0, 1.0], BathSpectrum::Linear { spacing: 0.25 }, 64, 0.0);
        let coupled = ModelSpec {
            lambda: 0.01,
            ..base.clone()
        };
        let m0 = build_weak_coupling_model(&base).unwrap();
        let m1 = build_weak_coupling_model(&coupled).unwrap();
        assert!(m1.warnings.is_empty());
        let bound = 0.01 * (128f64).sqrt();
        for (x, y) in m0
            .total
            .eigenvalues()
            .unwrap()
            .iter()
            .zip(m1.total.eigenvalues().unwrap())
        {
            assert!((x - y).abs() <= bound);
        }
        // identical spec, identical matrix
        let again = build_weak_coupling_model(&coupled).unwrap();
        assert_eq!(again.total.matrix(), m1.total.matrix());
    }

    #[test]
    fn interaction_has_unit_norm() {
        let mut rng = RngStream::new(12, 0);
        let h = random_interaction(10, &mut rng).unwrap();
        assert!((operator_norm(&h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strong_coupling_warns() {
        let s = spec(vec![0.0, 1.0], BathSpectrum::Linear { spacing: 1.0 }, 4, 0.5);
        let m = build_weak_coupling_model(&s).unwrap();
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn dense_model_size_guard() {
        let s = spec(vec![0.0, 1.0], BathSpectrum::Linear { spacing: 1.0 }, 1 << 15, 0.0);
        assert!(matches!(build_weak_coupling_model(&s), Err(Error::Size(_))));
    }

    #[test]
    fn counting_path_matches_dense_canonical_state() {
        let s = spec(vec![0.0, 1.0], BathSpectrum::RandomUniform { spacing: 0.25 }, 64, 0.0);
        let w = SpectralWindow::new(5.0, 2.0).unwrap();
        let (counts, omega) = uncoupled_canonical_state(&s.system_levels, &s.bath_spectrum().unwrap(), &w).unwrap();
        let m = build_weak_coupling_model(&s).unwrap();
        let r = spectral_window_subspace(&m.total, &w).unwrap();
        assert_eq!(r.dim(), counts.iter().sum::<usize>());
        let dense = r.canonical_state(s.dims().unwrap()).unwrap();
        assert!(dense.matrix().max_abs_diff(omega.matrix()).unwrap() < 1e-10);
    }

    #[test]
    fn thermal_experiment_on_exponential_bath() {
        // bath with density ∝ e^{E}: Ω_S should be close to Gibbs(β = 1)
        let n = 1usize << 12;
        let scale = 8f64.exp_m1();
        let levels: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64 * scale).ln_1p()).collect();
        let s = spec(vec![0.0, 0.5], BathSpectrum::Custom { levels }, n, 0.0);
        let report = thermal_experiment(&s, &SpectralWindow::new(6.0, 0.25).unwrap()).unwrap();
        assert!((report.beta.beta - 1.0).abs() < 0.1, "{:?}", report.beta);
        assert!(report.trace_distance < 0.05, "{}", report.trace_distance);
        assert_eq!(report.dr, report.bath_counts.unwrap().iter().sum::<usize>());
    }

    #[test]
    fn exponential_bath_levels() {
        let s = spec(
            vec![0.0, 0.5],
            BathSpectrum::Exponential { beta: 1.0, width: 8.0 },
            1 << 12,
            0.0,
        );
        let levels = s.bath_spectrum().unwrap();
        assert!(levels.levels().iter().all(|&e| (0.0..=8.0).contains(&e)));
        // count above E − 1 over count below it: e^{1}-fold growth per unit energy
        let lower = levels.count_in(&SpectralWindow::new(5.0, 1.0).unwrap()) as f64;
        let upper = levels.count_in(&SpectralWindow::new(6.0, 1.0).unwrap()) as f64;
        assert!(((upper / lower).ln() - 1.0).abs() < 0.01);
        for bad in [
            BathSpectrum::Exponential { beta: 0.0, width: 1.0 },
            BathSpectrum::Exponential { beta: 1.0, width: -1.0 },
            BathSpectrum::Exponential { beta: 1.0, width: 1e4 },
        ] {
            assert!(spec(vec![0.0], bad, 4, 0.0).validate().is_err());
        }
    }
}
