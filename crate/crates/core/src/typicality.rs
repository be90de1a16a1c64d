//! Monte Carlo test of canonical typicality.
//!
//! For `|φ⟩` uniform on the unit sphere of a subspace `H_R ⊂ H_S ⊗ H_B` the
//! distance `f(φ) = ‖tr_B|φ⟩⟨φ| − Ω_S‖₁` is compared with
//!
//! ```text
//! ⟨f⟩ ≤ √(dS / d_B^eff) ≤ √(dS² / dR)
//! Prob(f ≥ ε + √(dS / d_B^eff)) ≤ 2 exp(−C dR ε²),   C = 1/(18π³)
//! ```

use serde::{Deserialize, Serialize};

use crate::ensembles::Subspace;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_difference_trace_norm, BipartiteDims, ComplexMatrix, DensityMatrix, C64, ZERO};
use crate::parallel::{Block, Sampling};
use crate::rng::{domain, RngStream};
use crate::states::{reduce_into, PureState};
use crate::stats::{CompensatedSum, MeanAccumulator, Proportion};

/// `C = 1/(18π³)`
pub const CONCENTRATION_CONSTANT: f64 =
    1.0 / (18.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI);

/// Largest possible trace distance between two states.
pub const MAX_TRACE_DISTANCE: f64 = 2.0;

pub const DEFAULT_EPSILONS: [f64; 4] = [0.1, 0.2, 0.3, 0.5];

/// `η′ = 2 exp(−C dR ε²)`
pub fn tail_bound(dr: usize, epsilon: f64) -> f64 {
    2.0 * (-CONCENTRATION_CONSTANT * dr as f64 * epsilon * epsilon).exp()
}

#[derive(Debug, Clone)]
pub struct TypicalityConfig {
    pub dims: BipartiteDims,
    pub subspace: Subspace,
    pub samples: u64,
    pub epsilons: Vec<f64>,
    pub sampling: Sampling,
}

impl TypicalityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be at least 1"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {e}")));
        }
        self.dims.check(self.subspace.ambient_dim())
    }
}

/// Empirical `Prob(f ≥ threshold)` next to its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub epsilon: f64,
    pub threshold: f64,
    pub tail: Proportion,
    /// `η′`
    pub bound: f64,
    /// Threshold at or above the maximal trace distance 2: the event is impossible.
    pub vacuous: bool,
    /// `η′ < 1`
    pub informative: bool,
    /// Upper Wilson limit at or below the bound.
    pub certified: bool,
    /// Lower Wilson limit above the bound.
    pub violated: bool,
}

impl TailEstimate {
    fn new(epsilon: f64, threshold: f64, exceed: u64, trials: u64, bound: f64) -> Self {
        let vacuous = threshold >= MAX_TRACE_DISTANCE;
        let tail = Proportion::new(if vacuous { 0 } else { exceed }, trials);
        TailEstimate {
            epsilon,
            threshold,
            tail,
            bound,
            vacuous,
            informative: bound < 1.0,
            certified: tail.ci_high <= bound,
            violated: tail.ci_low > bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub schema: String,
    pub ds: usize,
    pub db: usize,
    pub dr: usize,
    pub effective_bath_dim: f64,
    pub samples: u64,
    pub seed: u64,
    pub mean_distance: f64,
    pub std_error: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    /// `√(dS / d_B^eff)`
    pub mean_bound: f64,
    /// `√(dS² / dR)`
    pub corollary_mean_bound: f64,
    pub constant: f64,
    /// Thresholds `ε + √(dS / d_B^eff)`.
    pub tails: Vec<TailEstimate>,
    /// Thresholds `ε + √(dS² / dR)`.
    pub corollary_tails: Vec<TailEstimate>,
    pub stream_range: (u64, u64),
}

impl TypicalityReport {
    pub const SCHEMA: &'static str = "typicality/1";

    /// `mean ≤ bound + k·SE` for both mean bounds.
    pub fn mean_within(&self, k: f64) -> bool {
        let slack = k * self.std_error;
        self.mean_distance <= self.mean_bound + slack && self.mean_distance <= self.corollary_mean_bound + slack
    }
}

/// `‖ρ_S − Ω_S‖₁` with `ρ_S` reduced from `amplitudes`; `rho` is `dS²` scratch.
fn distance_with(amplitudes: &[C64], omega: &ComplexMatrix, dims: BipartiteDims, rho: &mut [C64]) -> f64 {
    reduce_into(amplitudes, dims, rho);
    let ds = dims.system();
    let rho = ComplexMatrix::from_vec(ds, ds, rho.to_vec()).expect("dS × dS");
    hermitian_difference_trace_norm(&rho, omega).expect("same shape")
}

fn check_omega(omega: &DensityMatrix, dims: BipartiteDims) -> Result<()> {
    if omega.dim() != dims.system() {
        return Err(Error::DimensionMismatch {
            expected: dims.system(),
            actual: omega.dim(),
        });
    }
    Ok(())
}

/// `f(φ) = ‖tr_B|φ⟩⟨φ| − Ω_S‖₁`
pub fn distance_to_canonical(phi: &PureState, omega: &DensityMatrix, dims: BipartiteDims) -> Result<f64> {
    dims.check(phi.dim())?;
    check_omega(omega, dims)?;
    let mut rho = vec![ZERO; dims.system() * dims.system()];
    Ok(distance_with(phi.amplitudes(), omega.matrix(), dims, &mut rho))
}

/// `‖ |φ₁⟩⟨φ₁| − |φ₂⟩⟨φ₂| ‖₁ = 2√(1 − |⟨φ₁|φ₂⟩|²)`
///
/// `1 − |⟨φ₁|φ₂⟩|²` is evaluated as `‖φ₂ − ⟨φ₁|φ₂⟩φ₁‖²`, which keeps full
/// relative precision for nearly parallel states.
pub fn pure_state_trace_distance(a: &PureState, b: &PureState) -> Result<f64> {
    let c = a.overlap(b)?;
    let orthogonal: f64 = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (y - c * x).norm_sqr())
        .sum();
    Ok(2.0 * orthogonal.min(1.0).sqrt())
}

struct BlockStats {
    acc: MeanAccumulator,
    min: f64,
    max: f64,
    exceed: Vec<u64>,
    exceed_corollary: Vec<u64>,
    distances: Vec<f64>,
}

/// Runs the experiment; per-sample distances are discarded.
pub fn run_typicality(config: &TypicalityConfig) -> Result<TypicalityReport> {
    run_typicality_streaming(config, None)
}

/// Runs the experiment, handing every `(sample index, distance)` to `sink` in
/// sample order when one is given.
pub fn run_typicality_streaming(
    config: &TypicalityConfig,
    mut sink: Option<&mut (dyn FnMut(u64, f64) + Send)>,
) -> Result<TypicalityReport> {
    config.validate()?;
    let dims = config.dims;
    let r = &config.subspace;
    let (ds, dr) = (dims.system() as f64, r.dim());
    let omega = r.canonical_state(dims)?;
    let d_eff = r.effective_bath_dim(dims)?;
    let mean_bound = (ds / d_eff).sqrt();
    let corollary_mean_bound = (ds * ds / dr as f64).sqrt();
    let thresholds: Vec<f64> = config.epsilons.iter().map(|e| e + mean_bound).collect();
    let corollary: Vec<f64> = config.epsilons.iter().map(|e| e + corollary_mean_bound).collect();
    let keep = sink.is_some();

    let plan = config.sampling.plan(domain::TYPICALITY, config.samples);
    let per_block = |block: Block, rng: &mut RngStream| {
        let mut coefficients = vec![ZERO; dr];
        let mut phi = vec![ZERO; r.ambient_dim()];
        let mut rho = vec![ZERO; dims.system() * dims.system()];
        let mut stats = BlockStats {
            acc: MeanAccumulator::default(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            exceed: vec![0; thresholds.len()],
            exceed_corollary: vec![0; corollary.len()],
            distances: Vec::with_capacity(if keep { block.len as usize } else { 0 }),
        };
        for _ in 0..block.len {
            r.sample_into(&mut coefficients, &mut phi, rng);
            let f = distance_with(&phi, omega.matrix(), dims, &mut rho);
            stats.acc.push(f);
            stats.min = stats.min.min(f);
            stats.max = stats.max.max(f);
            for (c, t) in stats.exceed.iter_mut().zip(&thresholds) {
                *c += u64::from(f >= *t);
            }
            for (c, t) in stats.exceed_corollary.iter_mut().zip(&corollary) {
                *c += u64::from(f >= *t);
            }
            if keep {
                stats.distances.push(f);
            }
        }
        stats
    };

    let mut acc = MeanAccumulator::default();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut exceed = vec![0u64; thresholds.len()];
    let mut exceed_corollary = vec![0u64; corollary.len()];
    let mut index = 0u64;
    plan.for_each_chunked(per_block, |b: BlockStats| {
        acc.merge(&b.acc);
        min = min.min(b.min);
        max = max.max(b.max);
        exceed.iter_mut().zip(&b.exceed).for_each(|(a, x)| *a += x);
        exceed_corollary
            .iter_mut()
            .zip(&b.exceed_corollary)
            .for_each(|(a, x)| *a += x);
        if let Some(s) = sink.as_mut() {
            for f in b.distances {
                s(index, f);
                index += 1;
            }
        }
        Ok(())
    })?;

    let n = config.samples;
    let tails = config
        .epsilons
        .iter()
        .zip(&thresholds)
        .zip(&exceed)
        .map(|((&e, &t), &k)| TailEstimate::new(e, t, k, n, tail_bound(dr, e)))
        .collect();
    let corollary_tails = config
        .epsilons
        .iter()
        .zip(&corollary)
        .zip(&exceed_corollary)
        .map(|((&e, &t), &k)| TailEstimate::new(e, t, k, n, tail_bound(dr, e)))
        .collect();

    Ok(TypicalityReport {
        schema: TypicalityReport::SCHEMA.into(),
        ds: dims.system(),
        db: dims.bath(),
        dr,
        effective_bath_dim: d_eff,
        samples: n,
        seed: config.sampling.seed,
        mean_distance: acc.mean(),
        std_error: acc.std_error(),
        min_distance: min,
        max_distance: max,
        mean_bound,
        corollary_mean_bound,
        constant: CONCENTRATION_CONSTANT,
        tails,
        corollary_tails,
        stream_range: plan.stream_range(),
    })
}

/// `f` read as a function on the real sphere `S^{2dR−1} ⊂ ℝ^{2dR}`:
/// `x ↦ f(Σ_k (x_{2k} + i x_{2k+1}) u_k)` for the basis `u_k` of `R`.
pub fn lifted_distance(r: &Subspace, dims: BipartiteDims) -> Result<impl Fn(&[f64]) -> f64 + Sync + '_> {
    dims.check(r.ambient_dim())?;
    let omega = r.canonical_state(dims)?;
    Ok(move |x: &[f64]| {
        let coefficients: Vec<C64> = x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        let mut rho = vec![ZERO; dims.system() * dims.system()];
        match r {
            Subspace::Full { .. } => distance_with(&coefficients, omega.matrix(), dims, &mut rho),
            Subspace::Span(b) => {
                let mut phi = vec![ZERO; r.ambient_dim()];
                b.combine_into(&coefficients, &mut phi);
                distance_with(&phi, omega.matrix(), dims, &mut rho)
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub pairs: u64,
    /// `max |f(φ₁) − f(φ₂)| / ‖φ₁ − φ₂‖`
    pub max_ratio: f64,
    /// Pairs with `φ₁ = φ₂`, left out of the ratio.
    pub skipped: u64,
}

/// Largest observed difference quotient of `f` over random pairs in `R`.
///
/// Even-numbered pairs are independent; odd-numbered pairs are local
/// perturbations `φ₂ ∝ φ₁ + t·ξ` with `t` log-uniform in `[1e-3, 1]`, which is
/// where the quotient is largest.
pub fn lipschitz_probe(r: &Subspace, dims: BipartiteDims, pairs: u64, sampling: Sampling) -> Result<LipschitzReport> {
    if pairs == 0 {
        return Err(Error::invalid("pairs", "must be at least 1"));
    }
    dims.check(r.ambient_dim())?;
    let omega = r.canonical_state(dims)?;
    let plan = sampling.plan(domain::LIPSCHITZ, pairs);
    let parts = plan.map_blocks(|block, rng| {
        let d = r.ambient_dim();
        let mut coefficients = vec![ZERO; r.dim()];
        let (mut a, mut b) = (vec![ZERO; d], vec![ZERO; d]);
        let mut rho = vec![ZERO; dims.system() * dims.system()];
        let (mut max_ratio, mut skipped) = (0.0f64, 0u64);
        for i in block.start..block.start + block.len {
            r.sample_into(&mut coefficients, &mut a, rng);
            r.sample_into(&mut coefficients, &mut b, rng);
            if i % 2 == 1 {
                let t = 10f64.powf(-3.0 * rng.uniform());
                b.iter_mut().zip(&a).for_each(|(y, x)| *y = x + t * *y);
                let n = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                b.iter_mut().for_each(|z| *z /= n);
            }
            let dist = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            if dist == 0.0 {
                skipped += 1;
                continue;
            }
            let fa = distance_with(&a, omega.matrix(), dims, &mut rho);
            let fb = distance_with(&b, omega.matrix(), dims, &mut rho);
            max_ratio = max_ratio.max((fa - fb).abs() / dist);
        }
        (max_ratio, skipped)
    })?;
    Ok(LipschitzReport {
        pairs,
        max_ratio: parts.iter().map(|p| p.0).fold(0.0, f64::max),
        skipped: parts.iter().map(|p| p.1).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageStateReport {
    pub samples: u64,
    /// `‖mean(ρ_S) − Ω_S‖₂`
    pub deviation: f64,
    /// `√(Σ_ij Var(ρ_ij) / N)`, the expected size of `deviation`.
    pub std_error: f64,
}

impl AverageStateReport {
    pub fn within(&self, k: f64) -> bool {
        self.deviation <= k * self.std_error + 1e-12
    }
}

/// Compares the sample mean of `ρ_S` over uniform states of `R` with `Ω_S`.
pub fn average_state_check(
    r: &Subspace,
    dims: BipartiteDims,
    samples: u64,
    sampling: Sampling,
) -> Result<AverageStateReport> {
    if samples < 1000 {
        return Err(Error::invalid("samples", format!("need at least 1000, got {samples}")));
    }
    dims.check(r.ambient_dim())?;
    let omega = r.canonical_state(dims)?;
    let m = dims.system() * dims.system();
    let plan = sampling.plan(domain::AVERAGE_STATE, samples);

    let mut sums = vec![[CompensatedSum::default(); 3]; m];
    plan.for_each_chunked(
        |block, rng| {
            let mut coefficients = vec![ZERO; r.dim()];
            let mut phi = vec![ZERO; r.ambient_dim()];
            let mut rho = vec![ZERO; m];
            let mut part = vec![[0.0f64; 3]; m];
            for _ in 0..block.len {
                r.sample_into(&mut coefficients, &mut phi, rng);
                reduce_into(&phi, dims, &mut rho);
                for (p, z) in part.iter_mut().zip(&rho) {
                    p[0] += z.re;
                    p[1] += z.im;
                    p[2] += z.norm_sqr();
                }
            }
            part
        },
        |part| {
            for (s, p) in sums.iter_mut().zip(&part) {
                s.iter_mut().zip(p).for_each(|(a, x)| a.add(*x));
            }
            Ok(())
        },
    )?;

    let n = samples as f64;
    let (mut dev2, mut var) = (0.0, 0.0);
    for (s, w) in sums.iter().zip(omega.matrix().as_slice()) {
        let mean = C64::new(s[0].value() / n, s[1].value() / n);
        dev2 += (mean - w).norm_sqr();
        var += (s[2].value() / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0);
    }
    Ok(AverageStateReport {
        samples,
        deviation: dev2.sqrt(),
        std_error: (var / n).sqrt(),
    })
}
