//! Concentration of measure on the real sphere `S^{n−1} ⊂ ℝ^n`: ball
//! volumes, spherical caps and belts, and Lévy's lemma in median form.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::parallel::Sampling;
use crate::rng::{domain, RngStream};
use crate::stats::{median_sorted, quantile_sorted, MeanAccumulator, Proportion};

const UNIT_TOL: f64 = 1e-12;
const QUADRATURE_TOL: f64 = 1e-10;
const MAX_SUBDIVISIONS: usize = 1_000_000;

/// A point of `S^{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coordinates: Vec<f64>,
}

impl SpherePoint {
    pub fn new(coordinates: Vec<f64>) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::Size("sphere dimension must be ≥ 1".into()));
        }
        let norm = coordinates.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(SpherePoint { coordinates })
    }

    /// `e_k ∈ ℝ^n`
    pub fn axis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: k + 1,
            });
        }
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        Self::new(c)
    }

    /// Ambient dimension `n`.
    pub fn n(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coordinates.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Volume of the unit ball of `ℝ^n`, with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallVolume {
    pub n: usize,
    pub log_volume: f64,
    /// Underflows to 0 for `n` beyond a few hundred; `log_volume` does not.
    pub volume: f64,
}

/// `π^{n/2} / Γ(n/2 + 1)`
pub fn ball_volume(n: usize) -> Result<BallVolume> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let half = n as f64 / 2.0;
    let log_volume = half * std::f64::consts::PI.ln() - ln_gamma(half + 1.0);
    Ok(BallVolume {
        n,
        log_volume,
        volume: log_volume.exp(),
    })
}

/// Log-volume with `Γ(x + 1) ≈ √(2πx)(x/e)^x`, `x = n/2`.
pub fn ball_volume_stirling(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "must be at least 2"));
    }
    let x = n as f64 / 2.0;
    let log_gamma = 0.5 * (std::f64::consts::TAU * x).ln() + x * x.ln() - x;
    Ok(x * std::f64::consts::PI.ln() - log_gamma)
}

/// Gaussian vector of `ℝ^n` normalized to the sphere.
pub(crate) fn fill_sphere(buf: &mut [f64], rng: &mut RngStream) {
    loop {
        let mut sq = 0.0;
        for x in buf.iter_mut() {
            *x = rng.standard_normal();
            sq += *x * *x;
        }
        if sq > 1e-300 {
            let inv = 1.0 / sq.sqrt();
            buf.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Uniform point of `S^{n−1}`.
pub fn sample_sphere(n: usize, rng: &mut RngStream) -> Result<SpherePoint> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let mut c = vec![0.0; n];
    fill_sphere(&mut c, rng);
    Ok(SpherePoint { coordinates: c })
}

/// The cap `{φ : φ·v ≥ ε}` of `S^{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapSpec {
    pub epsilon: f64,
    pub axis: SpherePoint,
}

impl CapSpec {
    /// Cap about the first coordinate axis.
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        Self::with_axis(SpherePoint::axis(n, 0)?, epsilon)
    }

    pub fn with_axis(axis: SpherePoint, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
        }
        Ok(CapSpec { epsilon, axis })
    }

    pub fn n(&self) -> usize {
        self.axis.n()
    }
}

/// `exp(−nε²/2)`
pub fn cap_bound(n: usize, epsilon: f64) -> f64 {
    (-(n as f64) * epsilon * epsilon / 2.0).exp()
}

/// `1 − 2 exp(−nε²/2)`
pub fn belt_bound(n: usize, epsilon: f64) -> f64 {
    1.0 - 2.0 * cap_bound(n, epsilon)
}

fn check_mc_samples(samples: u64) -> Result<()> {
    if samples < 1000 {
        return Err(Error::invalid("samples", format!("need at least 1000, got {samples}")));
    }
    Ok(())
}

/// Fraction of `samples` uniform points satisfying `hit(φ·v)`.
fn count_projection(
    axis: &SpherePoint,
    samples: u64,
    plan_tag: u64,
    sampling: Sampling,
    hit: impl Fn(f64) -> bool + Sync + Send,
) -> Result<Proportion> {
    let plan = sampling.plan(plan_tag, samples);
    let counts = plan.map_blocks(|block, rng| {
        let mut x = vec![0.0; axis.n()];
        let mut k = 0u64;
        for _ in 0..block.len {
            fill_sphere(&mut x, rng);
            k += u64::from(hit(axis.dot(&x)));
        }
        k
    })?;
    Ok(Proportion::new(counts.iter().sum(), samples))
}

/// Monte Carlo measure of a cap, with a Wilson 95% interval.
pub fn cap_measure_mc(cap: &CapSpec, samples: u64, sampling: Sampling) -> Result<Proportion> {
    check_mc_samples(samples)?;
    let eps = cap.epsilon;
    count_projection(&cap.axis, samples, domain::CAP, sampling, move |t| t >= eps)
}

/// Monte Carlo measure of the belt `{φ : |φ·e₁| < ε}`.
pub fn belt_measure(n: usize, epsilon: f64, samples: u64, sampling: Sampling) -> Result<Proportion> {
    check_mc_samples(samples)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    let axis = SpherePoint::axis(n, 0)?;
    count_projection(&axis, samples, domain::BELT, sampling, move |t| t.abs() < epsilon)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
    }
    let simpson = |a: f64, b: f64, fa: f64, fm: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol,
    }];
    let mut total = 0.0;
    let mut subdivisions = 0usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol {
            total += left + right + delta / 15.0;
            continue;
        }
        subdivisions += 1;
        if subdivisions > MAX_SUBDIVISIONS || !delta.is_finite() || lm <= p.a || rm >= p.b {
            return Err(Error::QuadratureNoConvergence { lower: a, upper: b });
        }
        let half = 0.5 * p.tol;
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: half,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: half,
        });
    }
    Ok(total)
}

/// Normalized cap measure
/// `∫_ε^1 (1−t²)^{(n−3)/2} dt / ∫_{−1}^1 (1−t²)^{(n−3)/2} dt`,
/// integrated as `∫ cos^{n−2}u du` after `t = sin u`.
pub fn cap_measure_exact(n: usize, epsilon: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "must be at least 2"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let power = (n - 2) as i32;
    let f = move |u: f64| u.cos().max(0.0).powi(power);
    let half_pi = std::f64::consts::FRAC_PI_2;
    // ∫_0^{π/2} cos^{n−2} is at least √(π/(2n)); scale tolerances by it
    let scale = (std::f64::consts::PI / (2.0 * n as f64)).sqrt();
    let half_total = adaptive_simpson(f, 0.0, half_pi, 1e-3 * QUADRATURE_TOL * scale)?;
    // The tail integrand is divided by its value at the lower limit so the
    // tolerance stays relative for caps far below 1e-10. With h = u − lower,
    // cos u / cos lower = 1 − 2sin²(h/2) − tan(lower)·sin h.
    let lower = epsilon.asin();
    let slope = lower.tan();
    let power = power as f64;
    let g = move |u: f64| {
        let h = u - lower;
        let x = -2.0 * (0.5 * h).sin().powi(2) - slope * h.sin();
        if power == 0.0 {
            1.0
        } else if x <= -1.0 {
            0.0
        } else {
            (power * x.ln_1p()).exp()
        }
    };
    // g decays from 1 over a width of about 1/(power·tan(lower))
    let width = if power > 0.0 {
        scale.min(1.0 / (power * slope))
    } else {
        scale
    };
    let tail = adaptive_simpson(g, lower, half_pi, 0.1 * QUADRATURE_TOL * width)?;
    let peak = (power * lower.cos().ln()).exp();
    Ok((tail * peak / (2.0 * half_total)).max(0.0))
}

/// Tail probabilities of one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTail {
    pub epsilon: f64,
    /// `Prob(|f − m̂| > ε)`
    pub median_tail: Proportion,
    /// `Prob(|f − mean| > ε)`, reported only.
    pub mean_tail: Proportion,
    /// `2 exp(−nε²/(2η²))`
    pub bound: f64,
    /// Lower Wilson limit of the median tail above the bound.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub schema: String,
    pub n: usize,
    pub samples: u64,
    pub lipschitz: f64,
    /// Sample median of the first pass.
    pub median: f64,
    /// Sample median of the second, independent pass.
    pub second_median: f64,
    pub interquartile_range: f64,
    pub mean: f64,
    pub tails: Vec<LevyTail>,
}

impl ConcentrationReport {
    pub const SCHEMA: &'static str = "levy/1";

    pub fn any_violation(&self) -> bool {
        self.tails.iter().any(|t| t.violated)
    }
}

/// `2 exp(−nε²/(2η²))`
pub fn levy_bound(n: usize, epsilon: f64, lipschitz: f64) -> f64 {
    2.0 * (-(n as f64) * epsilon * epsilon / (2.0 * lipschitz * lipschitz)).exp()
}

/// Evaluates `f` on `samples` uniform points of `S^{n−1}` drawn from stream
/// namespace `tag`, in sample order.
fn evaluate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    samples: u64,
    tag: u64,
    sampling: Sampling,
) -> Result<Vec<f64>> {
    let plan = sampling.plan(tag, samples);
    let blocks = plan.map_blocks(|block, rng| {
        let mut x = vec![0.0; n];
        let mut out = Vec::with_capacity(block.len as usize);
        for i in 0..block.len {
            fill_sphere(&mut x, rng);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    sample: block.start + i,
                    value: v,
                });
            }
            out.push(v);
        }
        Ok(out)
    })?;
    let mut values = Vec::with_capacity(samples as usize);
    for b in blocks {
        values.extend(b?);
    }
    Ok(values)
}

/// Median-form concentration of an `η`-Lipschitz `f` on `S^{n−1}`.
///
/// A first pass estimates the median; a second, independent pass counts
/// deviations from it.
pub fn levy_experiment(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lipschitz: f64,
    n: usize,
    samples: u64,
    epsilons: &[f64],
    sampling: Sampling,
) -> Result<ConcentrationReport> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::invalid(
            "lipschitz",
            format!("must be positive, got {lipschitz}"),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if samples < 10_000 {
        return Err(Error::invalid("samples", format!("need at least 10000, got {samples}")));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {e}")));
    }

    let mut first = evaluate(f, n, samples, domain::LEVY_MEDIAN, sampling)?;
    let mut acc = MeanAccumulator::default();
    first.iter().for_each(|&v| acc.push(v));
    first.sort_by(f64::total_cmp);
    let median = median_sorted(&first);
    let iqr = quantile_sorted(&first, 0.75) - quantile_sorted(&first, 0.25);
    let mean = acc.mean();
    drop(first);

    let mut second = evaluate(f, n, samples, domain::LEVY_TAIL, sampling)?;
    let tails = epsilons
        .iter()
        .map(|&e| {
            let from_median = second.iter().filter(|&&v| (v - median).abs() > e).count() as u64;
            let from_mean = second.iter().filter(|&&v| (v - mean).abs() > e).count() as u64;
            let median_tail = Proportion::new(from_median, samples);
            let bound = levy_bound(n, e, lipschitz);
            LevyTail {
                epsilon: e,
                median_tail,
                mean_tail: Proportion::new(from_mean, samples),
                bound,
                violated: median_tail.ci_low > bound,
            }
        })
        .collect();
    second.sort_by(f64::total_cmp);

    Ok(ConcentrationReport {
        schema: ConcentrationReport::SCHEMA.into(),
        n,
        samples,
        lipschitz,
        median,
        second_median: median_sorted(&second),
        interquartile_range: iqr,
        mean,
        tails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical_1pct, ks_statistic};
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_small_n() {
        assert!((ball_volume(1).unwrap().volume - 2.0).abs() < 1e-12);
        assert!((ball_volume(2).unwrap().volume - PI).abs() < 1e-12);
        let v3 = ball_volume(3).unwrap().volume;
        assert!((v3 - 4.0 * PI / 3.0).abs() / v3 < 1e-10);
        // V(n) = 2π/n · V(n−2)
        for n in 3..60 {
            let a = ball_volume(n).unwrap().log_volume;
            let b = ball_volume(n - 2).unwrap().log_volume + (2.0 * PI / n as f64).ln();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn ball_volume_by_rejection() {
        let n = 2_000_000u64;
        let mut rng = RngStream::new(1, 0);
        let mut hits = 0u64;
        for _ in 0..n {
            let (x, y, z) = (
                2.0 * rng.uniform() - 1.0,
                2.0 * rng.uniform() - 1.0,
                2.0 * rng.uniform() - 1.0,
            );
            hits += u64::from(x * x + y * y + z * z <= 1.0);
        }
        let p = Proportion::new(hits, n);
        let exact = ball_volume(3).unwrap().volume / 8.0;
        assert!((p.estimate - exact).abs() <= 3.0 * p.std_error());
    }

    #[test]
    fn ball_volume_vanishes_in_high_dimension() {
        let mut last = ball_volume(5).unwrap().log_volume;
        for n in 6..3000 {
            let v = ball_volume(n).unwrap().log_volume;
            assert!(v < last);
            last = v;
        }
        assert_eq!(ball_volume(2000).unwrap().volume, 0.0);
        assert!(last.is_finite());
    }

    #[test]
    fn stirling_log_volume() {
        let rel = |n: usize| {
            let exact = ball_volume(n).unwrap().log_volume;
            ((ball_volume_stirling(n).unwrap() - exact) / exact).abs()
        };
        assert!(rel(10) < 0.02);
        assert!(rel(100) < 0.002);
        assert!(ball_volume_stirling(2).unwrap().is_finite());
        assert!(ball_volume_stirling(1).is_err());
    }

    #[test]
    fn sphere_samples() {
        let mut rng = RngStream::new(2, 0);
        let mut plus = 0;
        for _ in 0..10_000 {
            let p = sample_sphere(1, &mut rng).unwrap();
            assert!((p.coordinates()[0].abs() - 1.0).abs() < 1e-15);
            plus += usize::from(p.coordinates()[0] > 0.0);
        }
        assert!((plus as f64 - 5000.0).abs() < 5.0 * 50.0);

        let mut angles: Vec<f64> = (0..20_000)
            .map(|_| {
                let p = sample_sphere(2, &mut rng).unwrap();
                p.coordinates()[1].atan2(p.coordinates()[0]).rem_euclid(2.0 * PI)
            })
            .collect();
        let d = ks_statistic(&mut angles, |a| a / (2.0 * PI));
        assert!(d < ks_critical_1pct(angles.len()));

        let mut acc = MeanAccumulator::default();
        for _ in 0..10_000 {
            let p = sample_sphere(50, &mut rng).unwrap();
            let norm: f64 = p.coordinates().iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            acc.push(p.coordinates()[0]);
        }
        assert!(acc.mean().abs() <= 5.0 * acc.std_error());
    }

    #[test]
    fn cap_exact_closed_forms() {
        for eps in [0.1, 0.25, 0.5, 0.9] {
            assert!((cap_measure_exact(3, eps).unwrap() - (1.0 - eps) / 2.0).abs() < 1e-10);
            let arc = (0.5 * PI - f64::asin(eps)) / PI;
            assert!((cap_measure_exact(2, eps).unwrap() - arc).abs() < 1e-10);
        }
        assert!((cap_measure_exact(2, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cap_exact_matches_incomplete_beta_identity() {
        // n = 5: ∫_ε^1 (1−t²) dt / (4/3) = (2 − 3ε + ε³)/4
        for eps in [0.05, 0.3, 0.7] {
            let expected = (2.0 - 3.0 * eps + eps * eps * eps) / 4.0;
            assert!((cap_measure_exact(5, eps).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn tiny_caps_keep_relative_accuracy() {
        // ½·I_{1−ε²}((n−1)/2, 1/2) at 40 digits
        for (n, eps, expected) in [
            (1677, 0.16795473555911886, 2.193618239658367e-12),
            (2048, 0.7, 6.281378648090521e-302),
            (1000, 0.1, 7.678569210682e-4),
        ] {
            let c = cap_measure_exact(n, eps).unwrap();
            assert!((c / expected - 1.0).abs() < 1e-8, "n={n}, ε={eps}: {c:e}");
            assert!(c <= cap_bound(n, eps));
        }
    }

    #[test]
    fn cap_near_one_is_tiny() {
        for n in [3, 10, 100, 1000] {
            let c = cap_measure_exact(n, 0.999).unwrap();
            assert!(c < 1e-3 && c <= cap_bound(n, 0.999), "n={n}: {c}");
        }
        // on the circle the arc of a near-degenerate cap shrinks only like √(1−ε)
        assert!(cap_measure_exact(2, 0.999).unwrap() > 1e-3);
    }

    #[test]
    fn cap_respects_lemma_bound_on_proof_range() {
        for n in [2, 3, 5, 10, 50, 200, 1000, 2048] {
            for k in 1..=14 {
                let eps = 0.05 * k as f64;
                if eps <= std::f64::consts::FRAC_1_SQRT_2 {
                    assert!(cap_measure_exact(n, eps).unwrap() <= cap_bound(n, eps));
                }
            }
        }
    }

    #[test]
    fn cap_mc_agrees_with_exact() {
        let cap = CapSpec::new(2, 0.5).unwrap();
        let p = cap_measure_mc(&cap, 30_000, Sampling::new(3, 0)).unwrap();
        assert!((p.estimate - 1.0 / 3.0).abs() <= 3.0 * p.std_error());

        let cap = CapSpec::new(100, 0.3).unwrap();
        let p = cap_measure_mc(&cap, 50_000, Sampling::new(4, 0)).unwrap();
        let exact = cap_measure_exact(100, 0.3).unwrap();
        assert!((p.estimate - exact).abs() <= 3.0 * p.std_error() + 1e-12);
        assert!(p.ci_high <= cap_bound(100, 0.3));
    }

    #[test]
    fn cap_is_axis_invariant() {
        let mut rng = RngStream::new(5, 0);
        let exact = cap_measure_exact(20, 0.2).unwrap();
        for seed in 0..3 {
            let cap = CapSpec::with_axis(sample_sphere(20, &mut rng).unwrap(), 0.2).unwrap();
            let p = cap_measure_mc(&cap, 20_000, Sampling::new(seed, 0)).unwrap();
            assert!((p.estimate - exact).abs() <= 3.0 * p.std_error());
        }
    }

    #[test]
    fn degenerate_cap_is_empty() {
        let cap = CapSpec::new(50, 0.99).unwrap();
        assert_eq!(cap_measure_mc(&cap, 2000, Sampling::new(6, 1)).unwrap().successes, 0);
        assert!(CapSpec::new(5, 1.0).is_err());
    }

    #[test]
    fn belt_examples() {
        let p = belt_measure(1000, 0.1, 20_000, Sampling::new(7, 0)).unwrap();
        assert!(p.estimate >= belt_bound(1000, 0.1) - 3.0 * p.std_error());
        assert!((belt_bound(1000, 0.1) - 0.9865).abs() < 1e-4);

        let p = belt_measure(2, 0.5, 30_000, Sampling::new(8, 0)).unwrap();
        assert!((p.estimate - 1.0 / 3.0).abs() <= 3.0 * p.std_error());

        let p = belt_measure(10, 1.0 + 1e-9, 2000, Sampling::new(9, 0)).unwrap();
        assert_eq!(p.successes, p.trials);
    }

    #[test]
    fn cap_is_half_the_belt_complement() {
        let (n, eps) = (30, 0.15);
        let belt = belt_measure(n, eps, 40_000, Sampling::new(10, 0)).unwrap();
        let cap = cap_measure_exact(n, eps).unwrap();
        let se = belt.std_error() / 2.0;
        assert!(((1.0 - belt.estimate) / 2.0 - cap).abs() <= 3.0 * se);
    }

    #[test]
    fn quadrature_failure_is_numerical() {
        let err = adaptive_simpson(
            |x: f64| if x < 0.5 { 0.0 } else { 1.0 / (x - 0.5).sqrt() },
            0.0,
            1.0,
            1e-30,
        )
        .unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn levy_first_coordinate() {
        let f = |x: &[f64]| x[0];
        let report = levy_experiment(&f, 1.0, 200, 20_000, &[0.2, 0.3, 0.5], Sampling::new(11, 0)).unwrap();
        assert!(!report.any_violation());
        assert!((levy_bound(200, 0.3, 1.0) - 2.0 * (-9.0f64).exp()).abs() < 1e-15);
        assert!(report.median.abs() < 0.02);
        let stability = 3.0 * report.interquartile_range / (report.samples as f64).sqrt();
        assert!((report.median - report.second_median).abs() <= stability);
    }

    #[test]
    fn levy_constant_function() {
        let f = |_: &[f64]| 0.25;
        let report = levy_experiment(&f, 1.0, 10, 10_000, &[0.01, 0.1], Sampling::new(12, 2)).unwrap();
        assert!(report
            .tails
            .iter()
            .all(|t| t.median_tail.successes == 0 && t.mean_tail.successes == 0));
        assert_eq!(report.median, 0.25);
    }

    #[test]
    fn levy_rejects_non_finite_values() {
        let g = |x: &[f64]| if x[0] > 0.9 { f64::NAN } else { 0.0 };
        let err = levy_experiment(&g, 1.0, 2, 10_000, &[0.1], Sampling::new(13, 1)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteSample { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn levy_validates_inputs() {
        let f = |x: &[f64]| x[0];
        assert!(levy_experiment(&f, 0.0, 5, 10_000, &[0.1], Sampling::new(0, 1)).is_err());
        assert!(levy_experiment(&f, 1.0, 5, 9_999, &[0.1], Sampling::new(0, 1)).is_err());
    }
}
