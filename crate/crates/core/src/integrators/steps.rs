//! Single macro-step kernels.

use super::linalg::Jacobian;
use super::rhs::{call, Counters, Rhs};
use crate::error::{Error, Result};
use crate::order_conditions::CompositeCoefficients;
use crate::scalar::{recast, Cx, Real};
use num_traits::One;
use serde::{Deserialize, Serialize};

/// Magnitude beyond which a state counts as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

pub(crate) fn check_state<T: Real>(y: &[Cx<T>], substep: usize, t: Cx<T>) -> Result<()> {
    let limit = T::lit(BLOW_UP_THRESHOLD);
    for (i, v) in y.iter().enumerate() {
        let bad = if !(v.re.is_finite() && v.im.is_finite()) {
            Some("non-finite value")
        } else if v.norm() > limit {
            Some("magnitude above 1e12")
        } else {
            None
        };
        if let Some(why) = bad {
            return Err(Error::BlowUp {
                step: 0,
                substep,
                time: t.re.to_f64_lossy(),
                detail: format!("{why} in component {i}"),
            });
        }
    }
    Ok(())
}

fn axpy<T: Real>(y: &[Cx<T>], s: Cx<T>, k: &[Cx<T>]) -> Vec<Cx<T>> {
    y.iter().zip(k).map(|(a, b)| *a + s * *b).collect()
}

fn scale_dt<T: Real>(w: Cx<T>, dt: T) -> Cx<T> {
    w * dt
}

/// Forward Euler along the path `t → t + w_1Δt → …`.
pub fn euler_path_step<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    dt: T,
    weights: &[Cx<T>],
    counters: &mut Counters,
) -> Result<Vec<Cx<T>>> {
    let mut y = y.to_vec();
    let mut time = t;
    for (i, &w) in weights.iter().enumerate() {
        let k = call(f, time, &y, counters);
        let h = scale_dt(w, dt);
        y = axpy(&y, h, &k);
        time += h;
        check_state(&y, i, time)?;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImplicitVariant {
    Midpoint,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    /// Analytic when the right-hand side offers one, else finite differences.
    Auto,
    Analytic,
    ForwardDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Residual bound relative to `‖y‖∞ + 1`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobian: JacobianMode,
    /// Forward-difference step relative to `1 + |y_j|`.
    pub fd_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tolerance: 1e-12,
            max_iterations: 50,
            jacobian: JacobianMode::Auto,
            fd_step: 1e-7,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 || !(self.fd_step > 0.0) {
            return Err(Error::arg("Newton tolerance, step and iteration limit must be positive"));
        }
        Ok(())
    }
}

fn inf<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), |a, b| a.max(b))
}

fn jacobian<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    fy: &[Cx<T>],
    cfg: &NewtonConfig,
    counters: &mut Counters,
) -> Result<Jacobian<T>> {
    if cfg.jacobian != JacobianMode::ForwardDifference {
        if let Some(j) = f.jacobian(t, y) {
            return Ok(j);
        }
        if cfg.jacobian == JacobianMode::Analytic {
            return Err(Error::Capability(
                "right-hand side has no analytic Jacobian".into(),
            ));
        }
    }
    let n = y.len();
    let mut jac = Jacobian::dense_zeros(n);
    let mut yp = y.to_vec();
    for j in 0..n {
        let h = T::lit(cfg.fd_step) * (T::one() + y[j].norm());
        yp[j] = y[j] + h;
        let fp = call(f, t, &yp, counters);
        yp[j] = y[j];
        for i in 0..n {
            jac.set(i, j, (fp[i] - fy[i]) / h);
        }
    }
    Ok(jac)
}

/// Solves one implicit substep by Newton's method, starting from `y`.
#[allow(clippy::too_many_arguments)]
fn implicit_substep<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    time: Cx<T>,
    y: &[Cx<T>],
    h: Cx<T>,
    variant: ImplicitVariant,
    cfg: &NewtonConfig,
    substep: usize,
    counters: &mut Counters,
) -> Result<Vec<Cx<T>>> {
    let half = T::lit(0.5);
    let (tau, coupling) = match variant {
        ImplicitVariant::Midpoint => (time + h * half, h * half),
        ImplicitVariant::BackwardEuler => (time + h, h),
    };
    let argument = |z: &[Cx<T>]| -> Vec<Cx<T>> {
        match variant {
            ImplicitVariant::Midpoint => y.iter().zip(z).map(|(a, b)| (*a + *b) * half).collect(),
            ImplicitVariant::BackwardEuler => z.to_vec(),
        }
    };
    let tol = T::lit(cfg.tolerance);
    let mut z = y.to_vec();
    let mut iterations = 0usize;
    let mut previous_update: Option<T> = None;
    loop {
        let arg = argument(&z);
        let fz = call(f, tau, &arg, counters);
        let mut g: Vec<Cx<T>> = (0..z.len()).map(|i| z[i] - y[i] - h * fz[i]).collect();
        let scale = tol * (inf(&z) + T::one());
        let residual = inf(&g);
        if residual <= scale {
            return Ok(z);
        }
        if iterations >= cfg.max_iterations || !residual.is_finite() {
            return Err(Error::Newton {
                step: 0,
                substep,
                iterations,
                residual: residual.to_f64_lossy(),
            });
        }
        let m = jacobian(f, tau, &arg, &fz, cfg, counters)?.identity_minus(coupling);
        for v in g.iter_mut() {
            *v = -*v;
        }
        m.solve(&mut g)?;
        for (zi, d) in z.iter_mut().zip(&g) {
            *zi += *d;
        }
        iterations += 1;
        counters.newton_iterations += 1;
        check_state(&z, substep, tau)?;
        // the residual of a stiff operator carries rounding above the
        // tolerance; a correction below it means the iterate has converged
        let update = inf(&g);
        let size = inf(&z) + T::one();
        if update <= tol * size {
            return Ok(z);
        }
        // corrections that stop contracting while already small sit on the
        // rounding floor of the linear solve
        if let Some(prev) = previous_update {
            if update >= prev * half && update <= tol.sqrt() * size {
                return Ok(z);
            }
        }
        previous_update = Some(update);
    }
}

/// Implicit midpoint or backward Euler along the path.
pub fn implicit_path_step<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    dt: T,
    weights: &[Cx<T>],
    variant: ImplicitVariant,
    cfg: &NewtonConfig,
    counters: &mut Counters,
) -> Result<Vec<Cx<T>>> {
    cfg.validate()?;
    let mut y = y.to_vec();
    let mut time = t;
    for (i, &w) in weights.iter().enumerate() {
        let h = scale_dt(w, dt);
        y = implicit_substep(f, time, &y, h, variant, cfg, i, counters)?;
        time += h;
        check_state(&y, i, time)?;
    }
    Ok(y)
}

/// RK2 step to `y_m`, then RK3 step to the end of the macro step.
pub fn composite_rk23_step<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    dt: T,
    coefficients: &CompositeCoefficients,
    counters: &mut Counters,
) -> Result<Vec<Cx<T>>> {
    let c: Vec<Cx<T>> = coefficients.as_array().iter().map(|&z| recast(z) * dt).collect();
    let (a121, b11, b12, a221, a231, a232, b21, b22, b23) =
        (c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8]);
    let k11 = call(f, t, y, counters);
    let k12 = call(f, t + a121, &axpy(y, a121, &k11), counters);
    let ym: Vec<Cx<T>> = (0..y.len()).map(|i| y[i] + b11 * k11[i] + b12 * k12[i]).collect();
    let tm = t + b11 + b12;
    check_state(&ym, 0, tm)?;
    let k21 = call(f, tm, &ym, counters);
    let k22 = call(f, tm + a221, &axpy(&ym, a221, &k21), counters);
    let arg: Vec<Cx<T>> = (0..y.len()).map(|i| ym[i] + a231 * k21[i] + a232 * k22[i]).collect();
    let k23 = call(f, tm + a231 + a232, &arg, counters);
    let out: Vec<Cx<T>> = (0..y.len())
        .map(|i| ym[i] + b21 * k21[i] + b22 * k22[i] + b23 * k23[i])
        .collect();
    check_state(&out, 1, t + Cx::one() * dt)?;
    Ok(out)
}

/// Explicit Butcher tableau with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    /// Strictly lower triangular, row `i` has `i` entries.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

pub fn explicit_rk_step<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    dt: T,
    tableau: &ButcherTableau,
    counters: &mut Counters,
) -> Result<Vec<Cx<T>>> {
    let s = tableau.stages();
    let mut ks: Vec<Vec<Cx<T>>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut arg = y.to_vec();
        for (j, &aij) in tableau.a[i].iter().enumerate() {
            if aij != 0.0 {
                let coeff = Cx::new(T::lit(aij) * dt, T::zero());
                for (a, k) in arg.iter_mut().zip(&ks[j]) {
                    *a += coeff * *k;
                }
            }
        }
        let time = t + Cx::new(T::lit(tableau.c[i]) * dt, T::zero());
        ks.push(call(f, time, &arg, counters));
    }
    let mut out = y.to_vec();
    for (k, &bi) in ks.iter().zip(&tableau.b) {
        if bi == 0.0 {
            continue;
        }
        let coeff = Cx::new(T::lit(bi) * dt, T::zero());
        for (o, v) in out.iter_mut().zip(k) {
            *o += coeff * *v;
        }
    }
    check_state(&out, s - 1, t + Cx::new(dt, T::zero()))?;
    Ok(out)
}
