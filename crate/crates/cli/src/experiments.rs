//! One driver per experiment kind. Each writes its report files and returns
//! the one-line summary plus the stream ranges it consumed.

use serde::Serialize;
use typlab::ensembles::{self, thermal_experiment, ModelSpec};
use typlab::geometry::{
    belt_bound, belt_measure, cap_bound, cap_measure_exact, cap_measure_mc, levy_experiment, CapSpec,
};
use typlab::linalg::{hs_norm, operator_norm, trace_distance, trace_norm};
use typlab::parallel::MonteCarloPlan;
use typlab::rng::domain;
use typlab::states::coefficient_moments;
use typlab::typicality::{lifted_distance, run_typicality, run_typicality_streaming, TailEstimate, TypicalityConfig};
use typlab::{BipartiteDims, DensityMatrix, Proportion, RngStream, Sampling, SpectralWindow, Spectrum, Subspace};

use crate::config::{
    ExperimentConfig, Format, LevyFunction, LevyParams, MomentsParams, NormsParams, Params, SphereParams,
    ThermalParams, TypicalityParams,
};
use crate::failure::Failure;
use crate::output::{OutputDir, StreamRange, Table};

/// Lipschitz constant of `φ ↦ ‖tr_B|φ⟩⟨φ| − Ω_S‖₁` on the unit sphere.
const CANONICAL_DISTANCE_LIPSCHITZ: f64 = 2.0;

/// Absolute slack allowed in the norm inequalities for unit-norm matrices.
const NORM_SLACK: f64 = 1e-10;

pub struct Outcome {
    pub summary: String,
    pub streams: Vec<StreamRange>,
}

pub fn run(config: &ExperimentConfig, sampling: Sampling, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let ctx = Context { config, sampling };
    match &config.params {
        Params::Typicality(p) => typicality(&ctx, p, out),
        Params::Thermal(p) => thermal(&ctx, p, out),
        Params::Moments(p) => moments(&ctx, p, out),
        Params::Cap(p) => sphere(&ctx, p, Region::Cap, out),
        Params::Belt(p) => sphere(&ctx, p, Region::Belt, out),
        Params::Levy(p) => levy(&ctx, p, out),
        Params::Norms(p) => norms(&ctx, p, out),
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    sampling: Sampling,
}

impl Context<'_> {
    fn json(&self) -> bool {
        self.config.wants(Format::Json)
    }

    fn csv(&self) -> bool {
        self.config.wants(Format::Csv)
    }

    fn streams(&self, estimator: &'static str, tag: u64, samples: u64) -> StreamRange {
        range(estimator, self.sampling.plan(tag, samples))
    }
}

fn range(estimator: &'static str, plan: MonteCarloPlan) -> StreamRange {
    let (first, last) = plan.stream_range();
    StreamRange { estimator, first, last }
}

fn single(estimator: &'static str, stream: u64) -> StreamRange {
    StreamRange {
        estimator,
        first: stream,
        last: stream,
    }
}

fn typicality(ctx: &Context, p: &TypicalityParams, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let dims = BipartiteDims::new(p.ds, p.db)?;
    let d = dims.total();
    let mut streams = Vec::new();
    let subspace = match p.dr {
        Some(dr) if dr < d => {
            let stream = domain::base(domain::SUBSPACE);
            streams.push(single("subspace", stream));
            Subspace::random(d, dr, &mut RngStream::new(ctx.config.seed, stream))?
        }
        _ => Subspace::full(d)?,
    };
    let config = TypicalityConfig {
        dims,
        subspace,
        samples: p.samples,
        epsilons: p.epsilon.clone(),
        sampling: ctx.sampling,
    };
    let report = if ctx.csv() {
        let mut csv = out.csv("distances.csv", "typicality/1", &["sample", "distance"])?;
        let mut sink = |i: u64, x: f64| csv.push(format_args!("{i},{x}"));
        let report = run_typicality_streaming(&config, Some(&mut sink))?;
        csv.finish(out)?;
        report
    } else {
        run_typicality(&config)?
    };
    streams.push(single("typicality", report.stream_range.0));
    streams.last_mut().expect("just pushed").last = report.stream_range.1;

    if ctx.json() {
        out.write_json("typicality.json", &report)?;
    }
    if ctx.csv() {
        let mut table = Table::new(&[
            "statement",
            "epsilon",
            "threshold",
            "estimate",
            "ci_low",
            "ci_high",
            "bound",
            "vacuous",
            "certified",
            "violated",
        ]);
        let rows = report.tails.iter().map(|t| ("theorem", t));
        for (statement, t) in rows.chain(report.corollary_tails.iter().map(|t| ("corollary", t))) {
            let TailEstimate { tail, .. } = t;
            table.push(&[
                &statement,
                &t.epsilon,
                &t.threshold,
                &tail.estimate,
                &tail.ci_low,
                &tail.ci_high,
                &t.bound,
                &t.vacuous,
                &t.certified,
                &t.violated,
            ]);
        }
        out.write_csv("tails.csv", "typicality/1", &table)?;
    }

    let certified = report.tails.iter().filter(|t| t.certified).count();
    let violated = report.tails.iter().filter(|t| t.violated).count();
    let summary = format!(
        "typicality dS={} dB={} dR={}: mean ‖ρ_S − Ω_S‖₁ = {:.4} ± {:.4} vs bound √(dS/d_B^eff) = {:.4}; \
         tail below η′ certified for {certified}/{} ε, exceeded for {violated}",
        report.ds,
        report.db,
        report.dr,
        report.mean_distance,
        report.std_error,
        report.mean_bound,
        report.tails.len(),
    );
    Ok(Outcome { summary, streams })
}

fn thermal(ctx: &Context, p: &ThermalParams, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let system_levels = match &p.system_levels {
        Some(levels) => levels.clone(),
        None => (0..p.ds.unwrap_or(2)).map(|k| k as f64).collect(),
    };
    let spec = ModelSpec {
        system_levels,
        bath_dim: p.db,
        bath: p.bath.clone(),
        lambda: p.lambda,
        seed: ctx.config.seed,
    };
    let system = spec.system_spectrum()?;
    let bath = spec.bath_spectrum()?;
    let window = default_window(p, &system, &bath)?;
    let report = thermal_experiment(&spec, &window)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    let mut streams = Vec::new();
    if matches!(spec.bath, ensembles::BathSpectrum::RandomUniform { .. }) {
        streams.push(single("bath-levels", domain::base(domain::MODEL)));
    }
    if spec.lambda > 0.0 {
        streams.push(single("interaction", domain::base(domain::MODEL) + 1));
    }

    if ctx.json() {
        out.write_json("thermal.json", &report)?;
    }
    if ctx.csv() {
        let mut levels = Table::new(&["index", "eigenvalue"]);
        for (k, e) in bath.levels().iter().enumerate() {
            levels.push(&[&k, e]);
        }
        out.write_csv("spectrum.csv", "thermal/1", &levels)?;
        let mut states = Table::new(&["level", "energy", "canonical", "gibbs"]);
        for (k, e) in system.levels().iter().enumerate() {
            let omega = report.canonical[(k, k)].re;
            let gibbs = report.gibbs[(k, k)].re;
            states.push(&[&k, e, &omega, &gibbs]);
        }
        out.write_csv("thermal.csv", "thermal/1", &states)?;
    }

    let summary = format!(
        "thermal dS={} dB={} λ={}: ‖Ω_S − Gibbs(β̂)‖₁ = {:.4} at β̂ = {:.4} (±{:.2e}); window [{:.4}, {:.4}] has dR = {}, \
         bath shell holds {} levels",
        report.ds,
        report.db,
        report.lambda,
        report.trace_distance,
        report.beta.beta,
        report.beta.spread,
        window.lower(),
        window.upper(),
        report.dr,
        report.bath_levels_in_window,
    );
    Ok(Outcome { summary, streams })
}

/// Fills in `window_e` and `window_delta` when absent. The width is the
/// narrowest holding `window_levels` bath levels at the bath energy
/// `b = E − mid(ε_α)`; the default `E` centres the stencil `[b − δ, b + 6δ]` of
/// the inverse-temperature estimate on the median bath level.
fn default_window(p: &ThermalParams, system: &Spectrum, bath: &Spectrum) -> Result<SpectralWindow, Failure> {
    let delta_at = |b: f64| match p.window_delta {
        Some(delta) => Ok(delta),
        None => bath.window_for_count(b, p.window_levels).map(|w| w.delta),
    };
    let system_mid = midpoint(system);
    let (energy, delta) = match p.window_e {
        Some(e) => (e, delta_at(e - system_mid)?),
        None => {
            let centre = bath.levels()[bath.len() / 2];
            let b = centre - 2.5 * delta_at(centre)?;
            (b + system_mid, delta_at(b)?)
        }
    };
    Ok(SpectralWindow::new(energy, delta)?)
}

fn midpoint(s: &Spectrum) -> f64 {
    let levels = s.levels();
    (levels[0] + levels[levels.len() - 1]) / 2.0
}

fn moments(ctx: &Context, p: &MomentsParams, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let report = coefficient_moments(p.n, p.samples, ctx.sampling)?;
    if ctx.json() {
        out.write_json("moments.json", &report)?;
    }
    if ctx.csv() {
        let mut table = Table::new(&[
            "dim",
            "samples",
            "max_abs_first_moment",
            "max_first_moment_z",
            "max_second_moment_deviation",
            "max_second_moment_z",
            "max_diagonal_deviation",
        ]);
        table.push(&[
            &report.dim,
            &report.samples,
            &report.max_abs_first_moment,
            &report.max_first_moment_z,
            &report.max_second_moment_deviation,
            &report.max_second_moment_z,
            &report.max_diagonal_deviation,
        ]);
        out.write_csv("moments.csv", "moments/1", &table)?;
    }
    let summary = format!(
        "moments d={} N={}: max |⟨z_k⟩| at {:.2} SE, max |⟨z_k z̄_l⟩ − δ_kl/d| at {:.2} SE",
        report.dim, report.samples, report.max_first_moment_z, report.max_second_moment_z
    );
    Ok(Outcome {
        summary,
        streams: vec![ctx.streams("moments", domain::MOMENTS, p.samples)],
    })
}

#[derive(Clone, Copy)]
enum Region {
    Cap,
    Belt,
}

#[derive(Serialize)]
struct RegionRow {
    epsilon: f64,
    estimate: Proportion,
    /// Quadrature value; absent for n = 1.
    exact: Option<f64>,
    bound: f64,
    /// The bound lies inside or beyond the confidence interval in the asserted direction.
    consistent: bool,
}

#[derive(Serialize)]
struct RegionReport {
    schema: &'static str,
    n: usize,
    samples: u64,
    rows: Vec<RegionRow>,
}

fn sphere(ctx: &Context, p: &SphereParams, region: Region, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let (name, tag) = match region {
        Region::Cap => ("cap", domain::CAP),
        Region::Belt => ("belt", domain::BELT),
    };
    let mut rows = Vec::new();
    for &epsilon in &p.epsilon {
        let exact_cap = if p.n >= 2 {
            Some(cap_measure_exact(p.n, epsilon)?)
        } else {
            None
        };
        let row = match region {
            Region::Cap => {
                let estimate = cap_measure_mc(&CapSpec::new(p.n, epsilon)?, p.samples, ctx.sampling)?;
                let bound = cap_bound(p.n, epsilon);
                RegionRow {
                    epsilon,
                    estimate,
                    exact: exact_cap,
                    bound,
                    consistent: estimate.ci_low <= bound,
                }
            }
            Region::Belt => {
                let estimate = belt_measure(p.n, epsilon, p.samples, ctx.sampling)?;
                let bound = belt_bound(p.n, epsilon);
                RegionRow {
                    epsilon,
                    estimate,
                    exact: exact_cap.map(|c| 1.0 - 2.0 * c),
                    bound,
                    consistent: estimate.ci_high >= bound,
                }
            }
        };
        rows.push(row);
    }
    let schema = match region {
        Region::Cap => "cap/1",
        Region::Belt => "belt/1",
    };
    let report = RegionReport {
        schema,
        n: p.n,
        samples: p.samples,
        rows,
    };
    if ctx.json() {
        out.write_json(&format!("{name}.json"), &report)?;
    }
    if ctx.csv() {
        let mut table = Table::new(&["n", "epsilon", "estimate", "ci_low", "ci_high", "bound"]);
        for r in &report.rows {
            table.push(&[
                &p.n,
                &r.epsilon,
                &r.estimate.estimate,
                &r.estimate.ci_low,
                &r.estimate.ci_high,
                &r.bound,
            ]);
        }
        out.write_csv(&format!("{name}.csv"), schema, &table)?;
    }
    let parts: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            let exact = r.exact.map_or(String::new(), |x| format!(" (exact {x:.4e})"));
            format!(
                "ε={}: {:.4e}{exact} vs bound {:.4e}",
                r.epsilon, r.estimate.estimate, r.bound
            )
        })
        .collect();
    let inconsistent = report.rows.iter().filter(|r| !r.consistent).count();
    let summary = format!(
        "{name} n={}: {}; {inconsistent} rows contradict the bound",
        p.n,
        parts.join("; ")
    );
    Ok(Outcome {
        summary,
        streams: vec![ctx.streams(name, tag, p.samples)],
    })
}

fn levy(ctx: &Context, p: &LevyParams, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let report = match p.function {
        LevyFunction::FirstCoordinate => {
            let f = |x: &[f64]| x[0];
            levy_experiment(&f, 1.0, p.n.unwrap_or(200), p.samples, &p.epsilon, ctx.sampling)?
        }
        LevyFunction::CanonicalDistance => {
            let dims = BipartiteDims::new(p.ds.unwrap_or(2), p.db.unwrap_or(4))?;
            let r = Subspace::full(dims.total())?;
            let f = lifted_distance(&r, dims)?;
            let n = 2 * dims.total();
            levy_experiment(&f, CANONICAL_DISTANCE_LIPSCHITZ, n, p.samples, &p.epsilon, ctx.sampling)?
        }
    };
    if ctx.json() {
        out.write_json("levy.json", &report)?;
    }
    if ctx.csv() {
        let mut table = Table::new(&["n", "epsilon", "estimate", "ci_low", "ci_high", "bound"]);
        for t in &report.tails {
            let m = &t.median_tail;
            table.push(&[&report.n, &t.epsilon, &m.estimate, &m.ci_low, &m.ci_high, &t.bound]);
        }
        out.write_csv("levy.csv", "levy/1", &table)?;
    }
    let worst = report
        .tails
        .iter()
        .map(|t| t.median_tail.estimate / t.bound)
        .fold(0.0f64, f64::max);
    let summary = format!(
        "levy n={} η={}: median {:.4}, largest tail/bound ratio {:.3}, {} ε exceed the bound",
        report.n,
        report.lipschitz,
        report.median,
        worst,
        report.tails.iter().filter(|t| t.violated).count(),
    );
    Ok(Outcome {
        summary,
        streams: vec![
            ctx.streams("levy-median", domain::LEVY_MEDIAN, p.samples),
            ctx.streams("levy-tail", domain::LEVY_TAIL, p.samples),
        ],
    })
}

#[derive(Serialize)]
struct NormRow {
    dim: usize,
    matrices: u64,
    violations: u64,
    /// Smallest `‖A‖₁ / ‖A‖₂`; at least 1.
    min_trace_over_hs: f64,
    /// Largest `‖A‖₁ / (√d‖A‖₂)`; at most 1.
    max_trace_over_root_d_hs: f64,
    /// Largest `‖A‖ / ‖A‖₂`; at most 1.
    max_operator_over_hs: f64,
}

#[derive(Serialize)]
struct DisjointSupportRow {
    d: usize,
    trace_distance: f64,
    hs_distance: f64,
    expected_hs_distance: f64,
}

#[derive(Serialize)]
struct NormsReport {
    schema: &'static str,
    slack: f64,
    rows: Vec<NormRow>,
    disjoint_support: Vec<DisjointSupportRow>,
}

#[derive(Clone, Copy)]
struct NormStats {
    violations: u64,
    min_lower: f64,
    max_upper: f64,
    max_operator: f64,
}

impl NormStats {
    fn merge(self, o: Self) -> Self {
        NormStats {
            violations: self.violations + o.violations,
            min_lower: self.min_lower.min(o.min_lower),
            max_upper: self.max_upper.max(o.max_upper),
            max_operator: self.max_operator.max(o.max_operator),
        }
    }
}

fn norm_stats(dim: usize, plan: &MonteCarloPlan) -> Result<NormStats, Failure> {
    let root = (dim as f64).sqrt();
    let empty = NormStats {
        violations: 0,
        min_lower: f64::INFINITY,
        max_upper: 0.0,
        max_operator: 0.0,
    };
    let blocks = plan.map_blocks(|block, rng| -> typlab::Result<NormStats> {
        let mut s = empty;
        for _ in 0..block.len {
            let a = ensembles::random_interaction(dim, rng)?;
            let (hs, tr, op) = (hs_norm(a.matrix()), trace_norm(&a)?, operator_norm(&a)?);
            if hs > tr + NORM_SLACK || tr > root * hs + NORM_SLACK || op > hs + NORM_SLACK {
                s.violations += 1;
            }
            s.min_lower = s.min_lower.min(tr / hs);
            s.max_upper = s.max_upper.max(tr / (root * hs));
            s.max_operator = s.max_operator.max(op / hs);
        }
        Ok(s)
    })?;
    let mut total = empty;
    for b in blocks {
        total = total.merge(b?);
    }
    Ok(total)
}

fn disjoint_support(d: usize) -> Result<DisjointSupportRow, Failure> {
    let p1: Vec<f64> = (0..2 * d).map(|i| if i < d { 1.0 / d as f64 } else { 0.0 }).collect();
    let p2: Vec<f64> = p1.iter().map(|x| 1.0 / d as f64 - x).collect();
    let (r1, r2) = (DensityMatrix::diagonal(&p1)?, DensityMatrix::diagonal(&p2)?);
    Ok(DisjointSupportRow {
        d,
        trace_distance: trace_distance(&r1, &r2)?,
        hs_distance: hs_norm(&r1.matrix().checked_sub(r2.matrix())?),
        expected_hs_distance: (2.0 / d as f64).sqrt(),
    })
}

fn norms(ctx: &Context, p: &NormsParams, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let mut rows = Vec::new();
    let mut streams = Vec::new();
    for (i, &dim) in p.n.iter().enumerate() {
        // dimensions draw from disjoint sub-ranges of the namespace
        let base = domain::base(domain::NORMS) + ((i as u64) << 32);
        let plan = MonteCarloPlan::new(ctx.config.seed, base, p.samples, ctx.sampling.workers);
        streams.push(range("norms", plan));
        let s = norm_stats(dim, &plan)?;
        rows.push(NormRow {
            dim,
            matrices: p.samples,
            violations: s.violations,
            min_trace_over_hs: s.min_lower,
            max_trace_over_root_d_hs: s.max_upper,
            max_operator_over_hs: s.max_operator,
        });
    }
    let disjoint = [2, 8, 32]
        .into_iter()
        .map(disjoint_support)
        .collect::<Result<Vec<_>, _>>()?;
    let report = NormsReport {
        schema: "norms/1",
        slack: NORM_SLACK,
        rows,
        disjoint_support: disjoint,
    };
    if ctx.json() {
        out.write_json("norms.json", &report)?;
    }
    if ctx.csv() {
        let mut table = Table::new(&[
            "dim",
            "matrices",
            "violations",
            "min_trace_over_hs",
            "max_trace_over_root_d_hs",
            "max_operator_over_hs",
        ]);
        for r in &report.rows {
            table.push(&[
                &r.dim,
                &r.matrices,
                &r.violations,
                &r.min_trace_over_hs,
                &r.max_trace_over_root_d_hs,
                &r.max_operator_over_hs,
            ]);
        }
        out.write_csv("norms.csv", "norms/1", &table)?;
    }
    let violations: u64 = report.rows.iter().map(|r| r.violations).sum();
    let example_error = report
        .disjoint_support
        .iter()
        .map(|r| {
            (r.trace_distance - 2.0)
                .abs()
                .max((r.hs_distance - r.expected_hs_distance).abs())
        })
        .fold(0.0f64, f64::max);
    let summary = format!(
        "norms: {violations} violations of ‖A‖ ≤ ‖A‖₂ ≤ ‖A‖₁ ≤ √d‖A‖₂ in {} matrices; \
         disjoint-support example off by {example_error:.1e}",
        p.samples * p.n.len() as u64
    );
    Ok(Outcome { summary, streams })
}
