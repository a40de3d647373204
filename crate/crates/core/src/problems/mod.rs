//! Test problems: scalar ODEs, small systems and method-of-lines PDEs.

pub mod operators;
pub mod reference;

pub use operators::{fd_laplacian, spectral_derivative, FdOperator, SpectralOperator};

use crate::error::{Error, Result};
use crate::integrators::{integrate, IntegrateOptions, IntegrationResult, Jacobian, MethodSpec, Rhs};
use crate::order_conditions::{Indeterminate, Restriction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stiffness {
    NonStiff,
    Stiff,
}

type RhsFn = dyn Fn(Complex64, &[Complex64], &mut [Complex64]) + Send + Sync;
type JacFn = dyn Fn(Complex64, &[Complex64]) -> Jacobian<f64> + Send + Sync;
type ExactFn = dyn Fn(f64) -> Vec<Complex64> + Send + Sync;
/// `F_{a,b}` at `(t, y)` for scalar problems.
type DerivFn = dyn Fn(f64, f64, Indeterminate) -> f64 + Send + Sync;

/// An initial value problem with optional exact solution.
#[derive(Clone)]
pub struct OdeProblem {
    pub name: String,
    pub dim: usize,
    pub t0: f64,
    pub t_end: f64,
    pub y0: Vec<Complex64>,
    pub real_solution: bool,
    pub stiffness: Stiffness,
    rhs: Arc<RhsFn>,
    jacobian: Option<Arc<JacFn>>,
    exact: Option<Arc<ExactFn>>,
    derivatives: Option<(Restriction, Arc<DerivFn>)>,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("real_solution", &self.real_solution)
            .field("stiffness", &self.stiffness)
            .finish_non_exhaustive()
    }
}

impl Rhs<f64> for OdeProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: Complex64, y: &[Complex64], out: &mut [Complex64]) {
        (self.rhs)(t, y, out)
    }

    fn jacobian(&self, t: Complex64, y: &[Complex64]) -> Option<Jacobian<f64>> {
        self.jacobian.as_ref().map(|j| j(t, y))
    }
}

impl OdeProblem {
    fn new(
        name: &str,
        t_end: f64,
        y0: Vec<Complex64>,
        rhs: impl Fn(Complex64, &[Complex64], &mut [Complex64]) + Send + Sync + 'static,
    ) -> Self {
        OdeProblem {
            name: name.to_string(),
            dim: y0.len(),
            t0: 0.0,
            t_end,
            y0,
            real_solution: true,
            stiffness: Stiffness::NonStiff,
            rhs: Arc::new(rhs),
            jacobian: None,
            exact: None,
            derivatives: None,
        }
    }

    fn with_exact(mut self, exact: impl Fn(f64) -> Vec<Complex64> + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    fn with_jacobian(
        mut self,
        jac: impl Fn(Complex64, &[Complex64]) -> Jacobian<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    fn with_derivatives(
        mut self,
        restriction: Restriction,
        d: impl Fn(f64, f64, Indeterminate) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = Some((restriction, Arc::new(d)));
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self, t: f64) -> Option<Vec<Complex64>> {
        self.exact.as_ref().map(|e| e(t))
    }

    /// Derivative values `F_{a,b}(t, y)` for scalar problems, together with
    /// the smallest restriction that keeps every nonzero one.
    pub fn derivative_values(&self) -> Option<(Restriction, &DerivFn)> {
        self.derivatives.as_ref().map(|(r, d)| (*r, d.as_ref()))
    }

    pub fn integrate(&self, method: &MethodSpec, dt: f64, options: &IntegrateOptions) -> Result<IntegrationResult<f64>> {
        let opts = IntegrateOptions {
            real_solution: self.real_solution,
            ..options.clone()
        };
        integrate(self, &self.y0, self.t0, self.t_end, dt, method, &opts)
    }

    /// Max-norm error of the final state against the exact solution.
    pub fn final_error(&self, result: &IntegrationResult<f64>) -> Result<f64> {
        let exact = self
            .exact(result.final_time())
            .ok_or_else(|| Error::Capability(format!("{} has no exact solution", self.name)))?;
        Ok(max_error(result.final_state(), &exact))
    }
}

pub fn max_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Tunable parameters for catalog problems; unset fields keep defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemParams {
    /// Dahlquist eigenvalue `[re, im]`.
    pub lambda: Option<[f64; 2]>,
    /// Van der Pol stiffness.
    pub mu: Option<f64>,
    /// Burgers viscosity.
    pub nu: Option<f64>,
    pub modes: Option<usize>,
    pub cells: Option<usize>,
    pub t_end: Option<f64>,
}

pub const DEFAULT_SPECTRAL_MODES: usize = 70;
pub const DEFAULT_SCHRODINGER_MODES: usize = 32;
pub const DEFAULT_HEAT_CELLS: usize = 10_000;
pub const DEFAULT_BURGERS_NU: f64 = 0.1;
pub const DEFAULT_VDP_MU: f64 = 1.0;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn dahlquist(lambda: Complex64) -> OdeProblem {
    let mut p = OdeProblem::new("dahlquist", 1.0, vec![c(1.0)], move |_t, y, out| {
        out[0] = lambda * y[0]
    })
    .with_exact(move |t| vec![(lambda * t).exp()])
    .with_jacobian(move |_t, _y| Jacobian::Dense {
        n: 1,
        data: vec![lambda],
    });
    p.real_solution = lambda.im == 0.0;
    if lambda.im == 0.0 {
        let l = lambda.re;
        p = p.with_derivatives(Restriction::Linear, move |_t, y, x| match (x.t_order, x.y_order) {
            (0, 0) => l * y,
            (0, 1) => l,
            _ => 0.0,
        });
    }
    p
}

pub fn shm() -> OdeProblem {
    OdeProblem::new("shm", 1.0, vec![c(1.0), c(0.0)], |_t, y, out| {
        out[0] = y[1];
        out[1] = -y[0];
    })
    .with_exact(|t| vec![c(t.cos()), c(-t.sin())])
}

pub fn square() -> OdeProblem {
    OdeProblem::new("square", 1.0, vec![c(1.0)], |_t, y, out| out[0] = -y[0] * y[0])
        .with_exact(|t| vec![c(1.0 / (1.0 + t))])
        .with_jacobian(|_t, y| Jacobian::Dense {
            n: 1,
            data: vec![-2.0 * y[0]],
        })
        .with_derivatives(Restriction::Autonomous, |_t, y, x| match (x.t_order, x.y_order) {
            (0, 0) => -y * y,
            (0, 1) => -2.0 * y,
            (0, 2) => -2.0,
            _ => 0.0,
        })
}

pub fn exp_decay() -> OdeProblem {
    OdeProblem::new("exp", 1.0, vec![c(1.0)], |_t, y, out| out[0] = -y[0].exp())
        .with_exact(|t| vec![c(-(t + (-1.0f64).exp()).ln())])
        .with_jacobian(|_t, y| Jacobian::Dense {
            n: 1,
            data: vec![-y[0].exp()],
        })
        .with_derivatives(Restriction::Autonomous, |_t, y, x| {
            if x.t_order == 0 {
                -y.exp()
            } else {
                0.0
            }
        })
}

/// `g(t) = 4 sin³t cos t = sin 2t − ½ sin 4t` and its derivatives.
fn nlsin_g(t: f64, a: usize) -> f64 {
    let shift = a as f64 * PI / 2.0;
    2f64.powi(a as i32) * (2.0 * t + shift).sin() - 0.5 * 4f64.powi(a as i32) * (4.0 * t + shift).sin()
}

pub fn nlsin() -> OdeProblem {
    OdeProblem::new("nlsin", 1.0, vec![c(1.0)], |t, y, out| {
        let (s, co) = (t.sin(), t.cos());
        out[0] = 4.0 * y[0] * s * s * s * co;
    })
    .with_exact(|t| vec![c(t.sin().powi(4).exp())])
    .with_derivatives(Restriction::General, |t, y, x| match x.y_order {
        0 => y * nlsin_g(t, x.t_order),
        1 => nlsin_g(t, x.t_order),
        _ => 0.0,
    })
}

pub fn vdp(mu: f64) -> OdeProblem {
    let mut p = OdeProblem::new("vdp", 1.0, vec![c(2.0), c(0.0)], move |_t, y, out| {
        out[0] = y[1];
        out[1] = mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    })
    .with_jacobian(move |_t, y| Jacobian::Dense {
        n: 2,
        data: vec![c(0.0), c(1.0), -2.0 * mu * y[0] * y[1] - 1.0, mu * (1.0 - y[0] * y[0])],
    });
    if mu >= 10.0 {
        p.stiffness = Stiffness::Stiff;
    }
    p
}

/// Periodic Gaussian profile used by the advection problem.
pub fn wave_profile(x: f64) -> f64 {
    (-7.0 * (x - PI).powi(2)).exp()
}

pub fn wave(modes: usize) -> Result<OdeProblem> {
    let op = Arc::new(SpectralOperator::new(modes, 2.0 * PI)?);
    let grid = op.grid();
    let y0 = grid.iter().map(|&x| c(wave_profile(x))).collect();
    let o = op.clone();
    Ok(OdeProblem::new("wave", 1.0, y0, move |_t, y, out| {
        o.apply_into(1, y, out).expect("state matches grid")
    })
    .with_exact(move |t| {
        grid.iter()
            .map(|&x| c(wave_profile((x + t).rem_euclid(2.0 * PI))))
            .collect()
    }))
}

pub fn burgers(modes: usize, nu: f64) -> Result<OdeProblem> {
    let op = Arc::new(SpectralOperator::new(modes, 2.0 * PI)?);
    let grid = op.grid();
    let exact = move |t: f64, x: f64| {
        let d = (-nu * t).exp();
        2.0 * nu * d * x.sin() / (1.5 + d * x.cos())
    };
    let y0 = grid.iter().map(|&x| c(exact(0.0, x))).collect();
    let o = op.clone();
    Ok(OdeProblem::new("burgers", 2.0, y0, move |_t, y, out| {
        let n = y.len();
        let mut ux = vec![c(0.0); n];
        o.apply_into(1, y, &mut ux).expect("state matches grid");
        o.apply_into(2, y, out).expect("state matches grid");
        for i in 0..n {
            out[i] = nu * out[i] - y[i] * ux[i];
        }
    })
    .with_exact(move |t| grid.iter().map(|&x| c(exact(t, x))).collect()))
}

pub fn heat(cells: usize) -> Result<OdeProblem> {
    let op = FdOperator::new(cells)?;
    let grid = op.grid();
    let y0 = grid.iter().map(|&x| c((PI * x).sin())).collect();
    let jac = Arc::new(op.jacobian());
    let mut p = OdeProblem::new("heat", 0.1, y0, move |_t, y, out| {
        op.apply_into(y, out).expect("state matches grid")
    })
    .with_exact(move |t| {
        let d = (-PI * PI * t).exp();
        grid.iter().map(|&x| c(d * (PI * x).sin())).collect()
    })
    .with_jacobian(move |_t, _y| (*jac).clone());
    p.stiffness = Stiffness::Stiff;
    Ok(p)
}

pub fn schrodinger(modes: usize) -> Result<OdeProblem> {
    let op = Arc::new(SpectralOperator::new(modes, 2.0 * PI)?);
    let grid = op.grid();
    let y0 = grid.iter().map(|&x| Complex64::from_polar(1.0, x)).collect();
    let o = op.clone();
    let mut p = OdeProblem::new("schrodinger", 3.0, y0, move |_t, y, out| {
        o.apply_into(2, y, out).expect("state matches grid");
        out.iter_mut().for_each(|v| *v *= Complex64::i());
    })
    .with_exact(move |t| grid.iter().map(|&x| Complex64::from_polar(1.0, x - t)).collect());
    p.real_solution = false;
    Ok(p)
}

pub const NAMES: [&str; 11] = [
    "dahlquist",
    "shm",
    "square",
    "exp",
    "nlsin",
    "vdp",
    "vdp-stiff",
    "wave",
    "burgers",
    "heat",
    "schrodinger",
];

/// Builds one catalog problem with parameter overrides.
pub fn problem(name: &str, params: &ProblemParams) -> Result<OdeProblem> {
    let p = match name {
        "dahlquist" => {
            let l = params.lambda.unwrap_or([1.0, 0.0]);
            dahlquist(Complex64::new(l[0], l[1]))
        }
        "shm" => shm(),
        "square" => square(),
        "exp" => exp_decay(),
        "nlsin" => nlsin(),
        "vdp" => vdp(params.mu.unwrap_or(DEFAULT_VDP_MU)),
        "vdp-stiff" => {
            let mut p = vdp(params.mu.unwrap_or(10.0)).with_t_end(10.0);
            p.name = "vdp-stiff".into();
            p
        }
        "wave" => wave(params.modes.unwrap_or(DEFAULT_SPECTRAL_MODES))?,
        "burgers" => burgers(
            params.modes.unwrap_or(DEFAULT_SPECTRAL_MODES),
            params.nu.unwrap_or(DEFAULT_BURGERS_NU),
        )?,
        "heat" => heat(params.cells.unwrap_or(DEFAULT_HEAT_CELLS))?,
        "schrodinger" => schrodinger(params.modes.unwrap_or(DEFAULT_SCHRODINGER_MODES))?,
        other => return Err(Error::NotFound(format!("no problem named {other:?}"))),
    };
    Ok(match params.t_end {
        Some(t) => p.with_t_end(t),
        None => p,
    })
}

pub fn catalog() -> Result<BTreeMap<String, OdeProblem>> {
    NAMES
        .iter()
        .map(|&n| problem(n, &ProblemParams::default()).map(|p| (n.to_string(), p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_solutions_satisfy_their_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small = ProblemParams {
            cells: Some(200),
            ..Default::default()
        };
        for name in NAMES {
            let p = problem(name, &small).unwrap();
            let Some(y0) = p.exact(p.t0) else { continue };
            assert!(max_error(&y0, &p.y0) < 1e-12, "{name}");
            let (tol, h) = (1e-8, 1e-6);
            for _ in 0..100 {
                let t = rng.gen_range(p.t0 + 0.01..p.t_end - 0.01);
                let (a, b) = (p.exact(t + h).unwrap(), p.exact(t - h).unwrap());
                let mid = p.exact(t).unwrap();
                let mut f = vec![c(0.0); p.dim];
                p.eval(c(t), &mid, &mut f);
                let scale = f.iter().map(|v| v.norm()).fold(1.0, f64::max);
                let err = (0..p.dim)
                    .map(|i| ((a[i] - b[i]) / (2.0 * h) - f[i]).norm())
                    .fold(0.0, f64::max);
                assert!(err < tol * scale, "{name} at {t}: {err}");
                if p.real_solution {
                    assert!(mid.iter().all(|v| v.im.abs() < 1e-13), "{name}");
                }
            }
        }
    }

    #[test]
    fn unknown_problem_is_not_found() {
        assert!(matches!(
            problem("lorenz", &ProblemParams::default()),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn nlsin_derivatives_match_finite_differences() {
        let t = 0.37;
        let h = 1e-4;
        for a in 0..4 {
            let fd = (nlsin_g(t + h, a) - nlsin_g(t - h, a)) / (2.0 * h);
            assert!((fd - nlsin_g(t, a + 1)).abs() < 1e-5);
        }
        assert!((nlsin_g(t, 0) - 4.0 * t.sin().powi(3) * t.cos()).abs() < 1e-14);
    }
}
