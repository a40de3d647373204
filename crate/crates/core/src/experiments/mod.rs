//! Reproducible experiments: convergence studies, stability sweeps, path
//! polylines, SSP curves and the Schrödinger comparison.

mod config;
mod methods;
mod output;

pub use config::{ExperimentConfig, ExperimentKind, Ladder, NormKind, SspConfig, StabilityConfig};
pub use methods::{composite_coefficients, inline_method, reference_order, resolve_method, resolve_path, NamedMethod};
pub use output::{write_outputs, CsvHeader};

use crate::error::{Error, Result};
use crate::integrators::{step_count, IntegrateOptions, MethodSpec, ReferenceMethod};
use crate::order_conditions::{solve_composite_rk23, CompositeSettings, CompositeSolution, SchemeDescriptor};
use crate::paths::{lookup, solve_linear_path, ValidityClass};
use crate::problems::{problem, reference::ReferenceFixture, reference::REFERENCE_DT, OdeProblem};
use crate::ssp::{log_grid, test_rhs, SspCurve, SspSettings};
use crate::stability::{
    boundary_points, optimize_free_coefficients, ray_extent, raster_region, stability_function, Objective,
    OptimizeSettings, RayExtent, RegionRaster, StabilityPolynomial, StabilityVariant, Window,
};
use num_complex::Complex64;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Least-squares slope of `log error` against `log Δt` over the finite
/// positive pairs.
pub fn estimate_order(errors: &[f64], dts: &[f64]) -> Result<f64> {
    if errors.len() != dts.len() {
        return Err(Error::arg("errors and steps differ in length"));
    }
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .zip(errors)
        .filter(|(d, e)| d.is_finite() && e.is_finite() && **d > 0.0 && **e > 0.0)
        .map(|(d, e)| (d.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::arg(format!(
            "need at least 3 valid (Δt, error) pairs, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("all step sizes are equal"));
    }
    Ok(sxy / sxx)
}

pub fn error_norm(kind: NormKind, approx: &[Complex64], exact: &[Complex64]) -> f64 {
    let inf = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0, f64::max);
    match kind {
        NormKind::Inf => inf(&mut approx.iter().zip(exact).map(|(a, b)| (a - b).norm())),
        NormKind::Two => {
            let s: f64 = approx.iter().zip(exact).map(|(a, b)| (a - b).norm_sqr()).sum();
            (s / approx.len().max(1) as f64).sqrt()
        }
        NormKind::Relative => {
            let d = inf(&mut approx.iter().zip(exact).map(|(a, b)| (a - b).norm()));
            let scale = inf(&mut exact.iter().map(|b| b.norm()));
            if scale > 0.0 {
                d / scale
            } else {
                d
            }
        }
    }
}

/// Runs `jobs` on a small thread pool; results keep the input order.
fn parallel_map<I: Sync, O: Send>(jobs: &[I], f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let mut out: Vec<(usize, O)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= jobs.len() {
                            break local;
                        }
                        local.push((i, f(&jobs[i])));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("experiment worker"))
            .collect()
    });
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, o)| o).collect()
}

/// Problems and methods named by the config, in config order.
pub fn configured_problems(cfg: &ExperimentConfig) -> Result<Vec<OdeProblem>> {
    let mut params = cfg.params.clone();
    if cfg.t_end.is_some() {
        params.t_end = cfg.t_end;
    }
    cfg.problems.iter().map(|n| problem(n, &params)).collect()
}

pub fn configured_methods(cfg: &ExperimentConfig) -> Result<Vec<NamedMethod>> {
    let mut out: Vec<NamedMethod> = cfg
        .methods
        .iter()
        .map(|n| resolve_method(n, cfg.seed))
        .collect::<Result<_>>()?;
    for (i, s) in cfg.schemes.iter().enumerate() {
        if let MethodSpec::Scheme(d) = s {
            d.validate()?;
        }
        out.push(inline_method(i, s));
    }
    Ok(out)
}

/// Terminal-time comparison state for a problem.
pub fn terminal_reference(p: &OdeProblem, fixture: Option<&ReferenceFixture>) -> Result<Vec<Complex64>> {
    if let Some(e) = p.exact(p.t_end) {
        return Ok(e);
    }
    if let Some(f) = fixture {
        if f.state.len() != p.dim || (f.t_end - p.t_end).abs() > 1e-12 {
            return Err(Error::arg(format!(
                "reference fixture does not match {} at t = {}",
                p.name, p.t_end
            )));
        }
        return Ok(f.complex_state());
    }
    if p.name.starts_with("vdp") {
        let r = p.integrate(
            &MethodSpec::reference(ReferenceMethod::Rk4),
            REFERENCE_DT,
            &IntegrateOptions::default(),
        )?;
        return Ok(r.final_state().to_vec());
    }
    Err(Error::Capability(format!(
        "{} has neither an exact solution nor a reference",
        p.name
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// `None` when the run failed; see `note`.
    pub error: Option<f64>,
    pub evaluations: u64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub problem: String,
    pub method: String,
    pub nominal_order: usize,
    pub norm: NormKind,
    pub rows: Vec<ConvergenceRow>,
    /// `None` when fewer than 3 rows succeeded.
    pub slope: Option<f64>,
}

impl ConvergenceTable {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error.unwrap_or(f64::NAN)).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.dt).collect()
    }
}

/// Snaps `dt` so that it divides `[t0, t_end]`.
fn snap_step(p: &OdeProblem, dt: f64) -> f64 {
    if step_count(p.t0, p.t_end, dt).is_ok() {
        return dt;
    }
    let span = p.t_end - p.t0;
    span / (span / dt).round().max(1.0)
}

fn convergence_row(
    p: &OdeProblem,
    m: &NamedMethod,
    dt: f64,
    reference: &[Complex64],
    norm: NormKind,
    options: &IntegrateOptions,
) -> ConvergenceRow {
    let dt = snap_step(p, dt);
    match p.integrate(&m.spec, dt, options) {
        Ok(r) => {
            let e = error_norm(norm, r.final_state(), reference);
            let note = (!(e.is_finite() && e > 0.0)).then(|| format!("non-positive error {e:e}"));
            ConvergenceRow {
                dt,
                error: note.is_none().then_some(e),
                evaluations: r.function_evaluations,
                note,
            }
        }
        Err(e) => ConvergenceRow {
            dt,
            error: None,
            evaluations: 0,
            note: Some(e.to_string()),
        },
    }
}

/// Integrates every (problem, method) pair over the ladder and fits slopes.
///
/// With `fair`, each explicit method's step is scaled by its evaluations
/// per step relative to the most expensive one, so that all runs spend the
/// same number of right-hand-side calls.
pub fn run_converge(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceTable>> {
    let problems = configured_problems(cfg)?;
    let methods = configured_methods(cfg)?;
    if problems.is_empty() || methods.is_empty() {
        return Err(Error::arg("converge needs at least one problem and one method"));
    }
    let fixture = match &cfg.reference {
        Some(path) => Some(ReferenceFixture::read(std::io::BufReader::new(std::fs::File::open(path)?))?),
        None => None,
    };
    let references: Vec<Vec<Complex64>> = problems
        .iter()
        .map(|p| terminal_reference(p, fixture.as_ref()))
        .collect::<Result<_>>()?;
    let max_evals = methods
        .iter()
        .filter_map(|m| m.spec.explicit_evaluations())
        .max()
        .unwrap_or(1);
    let ladder = cfg.ladder().steps();
    let mut jobs = Vec::new();
    for pi in 0..problems.len() {
        for (mi, m) in methods.iter().enumerate() {
            let scale = match (cfg.fair, m.spec.explicit_evaluations()) {
                (true, Some(e)) => e as f64 / max_evals as f64,
                _ => 1.0,
            };
            for &dt in &ladder {
                jobs.push((pi, mi, dt * scale));
            }
        }
    }
    let options = IntegrateOptions::default();
    let rows = parallel_map(&jobs, |&(pi, mi, dt)| {
        convergence_row(&problems[pi], &methods[mi], dt, &references[pi], cfg.norm, &options)
    });
    let mut tables = Vec::new();
    let mut rows = rows.into_iter();
    for p in &problems {
        for m in &methods {
            let rows: Vec<ConvergenceRow> = rows.by_ref().take(ladder.len()).collect();
            let mut t = ConvergenceTable {
                problem: p.name.clone(),
                method: m.name.clone(),
                nominal_order: m.nominal_order,
                norm: cfg.norm,
                rows,
                slope: None,
            };
            t.slope = estimate_order(&t.errors(), &t.steps()).ok();
            tables.push(t);
        }
    }
    Ok(tables)
}

#[derive(Debug, Clone)]
pub struct StabilityEntry {
    pub name: String,
    pub polynomial: StabilityPolynomial<f64>,
    pub raster: RegionRaster,
    pub boundary: Vec<Complex64>,
    /// One extent per configured ray.
    pub extents: Vec<(Complex64, RayExtent)>,
}

/// Stability polynomial by name.
///
/// Accepted: path names (variant from the path's class), `linear-N`,
/// `optimized-sS-pP` (real free coefficients, negative real axis) and
/// `cubic:RE:IM` for `1 + z + z²/2 + k z³`.
pub fn resolve_polynomial(name: &str, seed: u64) -> Result<StabilityPolynomial<f64>> {
    if let Some(k) = name.strip_prefix("cubic:") {
        let (re, im) = k
            .split_once(':')
            .ok_or_else(|| Error::arg(format!("expected cubic:RE:IM, got {name:?}")))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::arg(format!("bad number {s:?} in {name:?}")))
        };
        return Ok(StabilityPolynomial::consistent(2, &[Complex64::new(parse(re)?, parse(im)?)]));
    }
    if let Some(rest) = name.strip_prefix("optimized-s") {
        let parsed = rest
            .split_once("-p")
            .and_then(|(s, p)| Some((s.parse::<usize>().ok()?, p.parse::<usize>().ok()?)));
        let (s, p) = parsed.ok_or_else(|| Error::arg(format!("expected optimized-sS-pP, got {name:?}")))?;
        let settings = OptimizeSettings {
            seed,
            ..Default::default()
        };
        return Ok(optimize_free_coefficients(s, p, Objective::NegativeRealAxis, false, &settings)?.polynomial);
    }
    let path = resolve_path(name)?;
    let variant = match path.validity_class() {
        ValidityClass::ImplicitMidpoint => StabilityVariant::ImplicitMidpoint,
        ValidityClass::BackwardEuler => StabilityVariant::BackwardEuler,
        _ => StabilityVariant::Explicit,
    };
    Ok(stability_function(&path, variant))
}

pub fn run_stability(cfg: &ExperimentConfig) -> Result<Vec<StabilityEntry>> {
    let names: Vec<String> = if cfg.methods.is_empty() {
        (1..=3).map(|n| format!("linear-{n}")).collect()
    } else {
        cfg.methods.clone()
    };
    let st = &cfg.stability;
    let [x0, x1, y0, y1] = st.window;
    let window = Window::new(x0, x1, y0, y1)?;
    let rays: Vec<Complex64> = st
        .rays
        .iter()
        .map(|&r| Objective::Ray(r).direction())
        .collect::<Result<_>>()?;
    let entries = parallel_map(&names, |name| -> Result<StabilityEntry> {
        let phi = resolve_polynomial(name, cfg.seed)?;
        let raster = raster_region(&phi, window, st.nx, st.ny)?;
        let boundary = boundary_points(&phi, &raster);
        let extents = rays
            .iter()
            .map(|&d| ray_extent(&phi, d).map(|e| (d, e)))
            .collect::<Result<_>>()?;
        Ok(StabilityEntry {
            name: name.clone(),
            polynomial: phi,
            raster,
            boundary,
            extents,
        })
    });
    entries.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    pub name: String,
    /// Partial sums of `w_i Δt` with `Δt = 1`, starting at the origin.
    pub points: Vec<Complex64>,
}

/// Every ordering of the `n`-step linear paths for the configured step
/// counts, followed by any named paths.
pub fn run_paths(cfg: &ExperimentConfig) -> Result<Vec<PathPolyline>> {
    let mut out = Vec::new();
    for &n in &cfg.path_steps {
        let family = solve_linear_path(n)?;
        for (i, p) in family.iter().enumerate() {
            out.push(PathPolyline {
                name: format!("linear-{n}-{i}"),
                points: p.partial_sums(),
            });
        }
    }
    for name in &cfg.methods {
        let p = resolve_path(name)?;
        out.push(PathPolyline {
            name: name.clone(),
            points: p.partial_sums(),
        });
    }
    Ok(out)
}

/// Default SSP comparison: midpoint, SSPRK2 and the projected complex
/// 2-step path in both orders (`w, w̄` and `w̄, w`).
pub fn default_ssp_methods() -> Result<Vec<(String, MethodSpec)>> {
    let path = lookup("complex-2-linear")?;
    let mut complex = SchemeDescriptor::euler(&path);
    complex.real_projection = true;
    let mut conj = SchemeDescriptor::euler(&path.permuted(&[1, 0])?);
    conj.real_projection = true;
    Ok(vec![
        ("midpoint".into(), MethodSpec::reference(ReferenceMethod::Midpoint)),
        ("ssprk2".into(), MethodSpec::reference(ReferenceMethod::Ssprk2)),
        ("complex-2".into(), MethodSpec::Scheme(complex)),
        ("complex-2-conj".into(), MethodSpec::Scheme(conj)),
    ])
}

pub fn run_ssp(cfg: &ExperimentConfig) -> Result<SspCurve> {
    let methods = if cfg.methods.is_empty() && cfg.schemes.is_empty() {
        default_ssp_methods()?
    } else {
        configured_methods(cfg)?
            .into_iter()
            .map(|m| (m.name, m.spec))
            .collect()
    };
    let grid = log_grid(cfg.ssp.u_min, cfg.ssp.u_max, cfg.ssp.points);
    SspCurve::compute(&methods, &test_rhs, &grid, &SspSettings::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub dt: f64,
    pub errors: [f64; 2],
    pub evaluations: [u64; 2],
}

impl ComparisonRow {
    pub fn ratio(&self) -> f64 {
        self.errors[0] / self.errors[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub methods: [String; 2],
    pub rows: Vec<ComparisonRow>,
}

/// Ralston RK3 against the complex 3-step Euler path on the Schrödinger
/// problem, with the step of each scaled to equal evaluation budgets.
pub fn run_schrodinger_compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let mut params = cfg.params.clone();
    if cfg.t_end.is_some() {
        params.t_end = cfg.t_end;
    }
    let p = problem("schrodinger", &params)?;
    let names = ["ralston-rk3", "complex-3-linear"];
    let methods: Vec<NamedMethod> = names.iter().map(|n| resolve_method(n, cfg.seed)).collect::<Result<_>>()?;
    let evals: Vec<usize> = methods
        .iter()
        .map(|m| m.spec.explicit_evaluations().expect("explicit methods"))
        .collect();
    let max_evals = *evals.iter().max().expect("two methods");
    let reference = terminal_reference(&p, None)?;
    let ladder = cfg.ladder().steps();
    let mut jobs = Vec::new();
    for &dt in &ladder {
        for (m, &e) in methods.iter().zip(&evals) {
            jobs.push((m, dt * e as f64 / max_evals as f64));
        }
    }
    let options = IntegrateOptions::default();
    let results = parallel_map(&jobs, |(m, dt)| -> Result<(f64, u64)> {
        let r = p.integrate(&m.spec, snap_step(&p, *dt), &options)?;
        Ok((error_norm(NormKind::Inf, r.final_state(), &reference), r.function_evaluations))
    });
    let mut rows = Vec::new();
    let mut it = results.into_iter();
    for &dt in &ladder {
        let a = it.next().expect("paired job")?;
        let b = it.next().expect("paired job")?;
        rows.push(ComparisonRow {
            dt,
            errors: [a.0, b.0],
            evaluations: [a.1, b.1],
        });
    }
    Ok(Comparison {
        methods: names.map(String::from),
        rows,
    })
}

pub fn run_solve_composite(cfg: &ExperimentConfig) -> Result<CompositeSolution> {
    solve_composite_rk23(&CompositeSettings {
        seed: cfg.seed,
        ..Default::default()
    })
}

/// Result of any experiment kind.
#[derive(Debug, Clone)]
pub enum ExperimentOutput {
    Converge(Vec<ConvergenceTable>),
    Stability(Vec<StabilityEntry>),
    Paths(Vec<PathPolyline>),
    Ssp(SspCurve),
    Schrodinger(Comparison),
    SolveComposite(CompositeSolution),
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    Ok(match cfg.kind {
        ExperimentKind::Converge => ExperimentOutput::Converge(run_converge(cfg)?),
        ExperimentKind::Stability => ExperimentOutput::Stability(run_stability(cfg)?),
        ExperimentKind::Paths => ExperimentOutput::Paths(run_paths(cfg)?),
        ExperimentKind::Ssp => ExperimentOutput::Ssp(run_ssp(cfg)?),
        ExperimentKind::Schrodinger => ExperimentOutput::Schrodinger(run_schrodinger_compare(cfg)?),
        ExperimentKind::SolveComposite => ExperimentOutput::SolveComposite(run_solve_composite(cfg)?),
    })
}

/// One threshold verdict for `--check` mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub const SLOPE_TOLERANCE: f64 = 0.25;

/// Threshold checks for an experiment's output.
pub fn checks(output: &ExperimentOutput) -> Vec<Check> {
    let mut out = Vec::new();
    match output {
        ExperimentOutput::Converge(tables) => {
            for t in tables {
                let passed = t
                    .slope
                    .is_some_and(|s| (s - t.nominal_order as f64).abs() <= SLOPE_TOLERANCE);
                out.push(Check {
                    name: format!("{}/{}", t.problem, t.method),
                    passed,
                    detail: format!(
                        "slope {}, expected {} ± {SLOPE_TOLERANCE}",
                        t.slope.map_or("n/a".to_string(), |s| format!("{s:.4}")),
                        t.nominal_order
                    ),
                });
            }
        }
        ExperimentOutput::Stability(entries) => {
            for e in entries {
                out.push(Check {
                    name: format!("{} conjugate symmetry", e.name),
                    passed: !e.polynomial_is_real() || e.raster.is_conjugate_symmetric(),
                    detail: String::new(),
                });
            }
        }
        ExperimentOutput::Paths(lines) => {
            for l in lines {
                let end = *l.points.last().expect("non-empty polyline");
                out.push(Check {
                    name: format!("{} closes on 1", l.name),
                    passed: l.points[0] == Complex64::new(0.0, 0.0) && (end - 1.0).norm() < 1e-12,
                    detail: format!("end {end}"),
                });
            }
        }
        ExperimentOutput::Ssp(curve) => {
            if let (Some(c), Some(s)) = (curve.curve("complex-2"), curve.curve("ssprk2")) {
                let start = curve.u.len() * 3 / 4;
                let beaten = (start..curve.u.len()).filter(|&i| c[i] > s[i]).count();
                out.push(Check {
                    name: "complex-2 exceeds ssprk2 on the upper quartile".into(),
                    passed: beaten == curve.u.len() - start,
                    detail: format!("{beaten} of {} points", curve.u.len() - start),
                });
            }
        }
        ExperimentOutput::Schrodinger(cmp) => {
            let equal = cmp.rows.iter().all(|r| r.evaluations[0] == r.evaluations[1]);
            out.push(Check {
                name: "evaluation counts equal".into(),
                passed: equal,
                detail: String::new(),
            });
            let ratios = cmp.rows.iter().all(|r| (0.2..=5.0).contains(&r.ratio()));
            out.push(Check {
                name: "error ratio within a factor of 5".into(),
                passed: ratios,
                detail: format!("{:?}", cmp.rows.iter().map(ComparisonRow::ratio).collect::<Vec<_>>()),
            });
            let finest = cmp.rows.last().map_or([f64::NAN; 2], |r| r.errors);
            out.push(Check {
                name: "finest errors ≤ 1e-8".into(),
                passed: finest.iter().all(|&e| e <= 1e-8),
                detail: format!("{finest:?}"),
            });
        }
        ExperimentOutput::SolveComposite(sol) => out.push(Check {
            name: "composite residual < 1e-10".into(),
            passed: sol.residual_inf < 1e-10,
            detail: format!("{:e}", sol.residual_inf),
        }),
    }
    out
}

impl StabilityEntry {
    fn polynomial_is_real(&self) -> bool {
        self.polynomial.coefficients().is_none_or(|c| c.iter().all(|z| z.im == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_estimate_contract() {
        let dts = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = dts.iter().map(|d| 3.0 * d * d).collect();
        assert!((estimate_order(&errs, &dts).unwrap() - 2.0).abs() < 1e-12);
        let mut blown = errs.clone();
        blown.push(f64::NAN);
        let mut dts5 = dts.to_vec();
        dts5.push(0.00625);
        assert!((estimate_order(&blown, &dts5).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(estimate_order(&errs[..2], &dts[..2]), Err(Error::Argument(_))));
    }

    #[test]
    fn paths_and_polylines() {
        let cfg = ExperimentConfig {
            path_steps: vec![3],
            methods: vec!["complex-3-linear".into()],
            ..ExperimentConfig::for_kind(ExperimentKind::Paths)
        };
        let lines = run_paths(&cfg).unwrap();
        assert_eq!(lines.len(), 7);
        let last = lines.last().unwrap();
        assert_eq!(last.points[0], Complex64::new(0.0, 0.0));
        assert!((last.points[3] - 1.0).norm() < 1e-12);
        assert!(checks(&ExperimentOutput::Paths(lines)).iter().all(|c| c.passed));
    }

    #[test]
    fn dahlquist_three_step_slope() {
        let cfg = ExperimentConfig {
            problems: vec!["dahlquist".into()],
            methods: vec!["complex-3-linear".into()],
            ladder: Some(Ladder::new(0.5, 0.5, 7).unwrap()),
            ..Default::default()
        };
        let t = run_converge(&cfg).unwrap();
        let s = t[0].slope.unwrap();
        assert!((s - 3.0).abs() < 0.15, "slope {s}");
    }
}
