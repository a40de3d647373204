//! Time steppers for complex paths, the composite scheme and real
//! reference Runge–Kutta methods.

pub mod linalg;
pub mod rhs;
pub mod steps;

pub use linalg::Jacobian;
pub use rhs::{Counters, FnRhs, Rhs};
pub use steps::{
    composite_rk23_step, euler_path_step, explicit_rk_step, implicit_path_step, ButcherTableau,
    ImplicitVariant, JacobianMode, NewtonConfig, BLOW_UP_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::order_conditions::{SchemeDescriptor, SchemeKind};
use crate::scalar::{recast, Cx, Real};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Real-coefficient Runge–Kutta methods used as baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMethod {
    RalstonRk3,
    Midpoint,
    Ssprk2,
    Rk4,
}

impl ReferenceMethod {
    pub const ALL: [ReferenceMethod; 4] = [
        ReferenceMethod::RalstonRk3,
        ReferenceMethod::Midpoint,
        ReferenceMethod::Ssprk2,
        ReferenceMethod::Rk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceMethod::RalstonRk3 => "ralston-rk3",
            ReferenceMethod::Midpoint => "midpoint",
            ReferenceMethod::Ssprk2 => "ssprk2",
            ReferenceMethod::Rk4 => "rk4",
        }
    }

    pub fn tableau(self) -> ButcherTableau {
        match self {
            ReferenceMethod::RalstonRk3 => ButcherTableau {
                a: vec![vec![], vec![0.5], vec![0.0, 0.75]],
                b: vec![2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0],
                c: vec![0.0, 0.5, 0.75],
            },
            ReferenceMethod::Midpoint => ButcherTableau {
                a: vec![vec![], vec![0.5]],
                b: vec![0.0, 1.0],
                c: vec![0.0, 0.5],
            },
            // u_m = u + Δt f(u); u⁺ = u/2 + u_m/2 + Δt f(u_m)/2
            ReferenceMethod::Ssprk2 => ButcherTableau {
                a: vec![vec![], vec![1.0]],
                b: vec![0.5, 0.5],
                c: vec![0.0, 1.0],
            },
            ReferenceMethod::Rk4 => ButcherTableau {
                a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
                b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
                c: vec![0.0, 0.5, 0.5, 1.0],
            },
        }
    }
}

/// Anything `integrate` can run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    Scheme(SchemeDescriptor),
    Reference { reference: ReferenceMethod },
}

impl MethodSpec {
    pub fn reference(m: ReferenceMethod) -> Self {
        MethodSpec::Reference { reference: m }
    }

    pub fn requires_real_projection(&self) -> bool {
        match self {
            MethodSpec::Scheme(s) => s.real_projection,
            MethodSpec::Reference { .. } => false,
        }
    }

    /// Evaluations per macro step for explicit methods.
    pub fn explicit_evaluations(&self) -> Option<usize> {
        match self {
            MethodSpec::Scheme(s) => s.explicit_evaluations(),
            MethodSpec::Reference { reference } => Some(reference.tableau().stages()),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MethodSpec = serde_json::from_str(s)?;
        if let MethodSpec::Scheme(d) = &m {
            d.validate()?;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn reference_methods() -> BTreeMap<String, MethodSpec> {
    ReferenceMethod::ALL
        .iter()
        .map(|&m| (m.name().to_string(), MethodSpec::reference(m)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Record {
    /// Initial and final state only.
    #[default]
    Endpoints,
    EveryStep,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// The exact solution is real at real times; required for projection.
    pub real_solution: bool,
    /// Overrides the method's projection flag.
    pub projection: Option<bool>,
    pub newton: NewtonConfig,
    pub record: Record,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            real_solution: true,
            projection: None,
            newton: NewtonConfig::default(),
            record: Record::Endpoints,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationResult<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<Vec<Cx<T>>>,
    pub steps: usize,
    pub function_evaluations: u64,
    pub newton_iterations_total: u64,
    pub projected: bool,
}

impl<T: Real> IntegrationResult<T> {
    pub fn final_state(&self) -> &[Cx<T>] {
        self.states.last().expect("at least the initial state")
    }

    pub fn final_time(&self) -> T {
        *self.times.last().expect("at least the initial time")
    }

    /// CSV with columns `t, re_1..re_N, im_1..im_N`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.states.first().map_or(0, |s| s.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("re_{i}")));
        header.extend((1..=n).map(|i| format!("im_{i}")));
        w.write_record(&header)?;
        for (t, y) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{:.16e}", t.to_f64_lossy())];
            row.extend(y.iter().map(|z| format!("{:.16e}", z.re.to_f64_lossy())));
            row.extend(y.iter().map(|z| format!("{:.16e}", z.im.to_f64_lossy())));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Prepared<T: Real> {
    Euler(Vec<Cx<T>>),
    Implicit(Vec<Cx<T>>, ImplicitVariant),
    Composite(crate::order_conditions::CompositeCoefficients),
    Rk(ButcherTableau),
}

impl<T: Real> Prepared<T> {
    fn new(method: &MethodSpec) -> Result<Self> {
        let weights = |w: &[num_complex::Complex64]| w.iter().map(|&z| recast(z)).collect();
        Ok(match method {
            MethodSpec::Scheme(s) => {
                s.validate()?;
                match &s.kind {
                    SchemeKind::EulerPath { weights: w } => Prepared::Euler(weights(w)),
                    SchemeKind::ImplicitMidpointPath { weights: w } => {
                        Prepared::Implicit(weights(w), ImplicitVariant::Midpoint)
                    }
                    SchemeKind::BackwardEulerPath { weights: w } => {
                        Prepared::Implicit(weights(w), ImplicitVariant::BackwardEuler)
                    }
                    SchemeKind::CompositeRk23 { coefficients } => Prepared::Composite(*coefficients),
                }
            }
            MethodSpec::Reference { reference } => Prepared::Rk(reference.tableau()),
        })
    }

    fn step<R: Rhs<T> + ?Sized>(
        &self,
        f: &R,
        t: Cx<T>,
        y: &[Cx<T>],
        dt: T,
        newton: &NewtonConfig,
        counters: &mut Counters,
    ) -> Result<Vec<Cx<T>>> {
        match self {
            Prepared::Euler(w) => euler_path_step(f, t, y, dt, w, counters),
            Prepared::Implicit(w, v) => implicit_path_step(f, t, y, dt, w, *v, newton, counters),
            Prepared::Composite(c) => composite_rk23_step(f, t, y, dt, c, counters),
            Prepared::Rk(tab) => explicit_rk_step(f, t, y, dt, tab, counters),
        }
    }
}

/// One macro step of `method` without projection.
pub fn single_step<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    dt: T,
    method: &MethodSpec,
    newton: &NewtonConfig,
    counters: &mut Counters,
) -> Result<Vec<Cx<T>>> {
    Prepared::<T>::new(method)?.step(f, t, y, dt, newton, counters)
}

/// Number of macro steps of size `dt` covering `[t0, t_end]`.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::arg(format!("time step must be positive, got {dt}")));
    }
    let span = t_end - t0;
    if span < 0.0 {
        return Err(Error::arg("end time precedes start time"));
    }
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::arg(format!(
            "time step {dt} does not divide the interval {span}"
        )));
    }
    Ok(n as usize)
}

/// Repeats the macro step from `t0` to `t_end`, projecting onto the real
/// line after each step when the method asks for it.
pub fn integrate<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    y0: &[Cx<T>],
    t0: T,
    t_end: T,
    dt: T,
    method: &MethodSpec,
    options: &IntegrateOptions,
) -> Result<IntegrationResult<T>> {
    if y0.len() != f.dim() || y0.is_empty() {
        return Err(Error::arg(format!(
            "initial state has {} components, problem expects {}",
            y0.len(),
            f.dim()
        )));
    }
    let project = options
        .projection
        .unwrap_or_else(|| method.requires_real_projection());
    if project && !options.real_solution {
        return Err(Error::arg(
            "real projection requested for a problem whose solution is not real",
        ));
    }
    let stepper = Prepared::<T>::new(method)?;
    let n = step_count(t0.to_f64_lossy(), t_end.to_f64_lossy(), dt.to_f64_lossy())?;
    let mut counters = Counters::default();
    let mut y = y0.to_vec();
    let mut times = vec![t0];
    let mut states = vec![y.clone()];
    for step in 0..n {
        let t = t0 + dt * T::lit(step as f64);
        y = stepper
            .step(f, Cx::new(t, T::zero()), &y, dt, &options.newton, &mut counters)
            .map_err(|e| with_step(e, step))?;
        if project {
            for v in y.iter_mut() {
                v.im = T::zero();
            }
        }
        if options.record == Record::EveryStep || step + 1 == n {
            times.push(t0 + dt * T::lit((step + 1) as f64));
            states.push(y.clone());
        }
    }
    Ok(IntegrationResult {
        times,
        states,
        steps: n,
        function_evaluations: counters.function_evaluations,
        newton_iterations_total: counters.newton_iterations,
        projected: project,
    })
}

fn with_step(e: Error, step: usize) -> Error {
    match e {
        Error::BlowUp {
            substep,
            time,
            detail,
            ..
        } => Error::BlowUp {
            step,
            substep,
            time,
            detail,
        },
        Error::Newton {
            substep,
            iterations,
            residual,
            ..
        } => Error::Newton {
            step,
            substep,
            iterations,
            residual,
        },
        other => other,
    }
}
