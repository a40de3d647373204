//! Largest time steps keeping `|u_{n+1}| ≤ |u_n|` on scalar problems.

use crate::error::{Error, Result};
use crate::integrators::{single_step, Counters, FnRhs, MethodSpec, NewtonConfig};
use crate::paths::ComplexPath;
use num_complex::Complex64;
use std::io::Write;

pub const DEFAULT_CAP: f64 = 100.0;
pub const DEFAULT_SCAN_POINTS: usize = 10_000;
pub const DEFAULT_BISECTION_TOLERANCE: f64 = 1e-8;

/// A step bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn value(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::Unbounded => f64::INFINITY,
        }
    }
}

/// `2 / |f(u)/u|`.
pub fn fe_ssp_bound(f: &dyn Fn(f64) -> f64, u: f64) -> Bound {
    let fu = f(u);
    if u == 0.0 || fu == 0.0 {
        return Bound::Unbounded;
    }
    Bound::Finite(2.0 / (fu / u).abs())
}

/// Intermediate states `u^0..u^{k-1}` of the Euler path from `u` with step `dt`.
pub fn substep_states(path: &ComplexPath<f64>, f: &dyn Fn(Complex64) -> Complex64, u: f64, dt: f64) -> Vec<Complex64> {
    let mut states = Vec::with_capacity(path.len());
    let mut v = Complex64::new(u, 0.0);
    for &w in path.weights() {
        states.push(v);
        v += w * dt * f(v);
    }
    states
}

/// `min_i −2 Re(w_i F_i/u_i) / (|w_i|² |F_i/u_i|²)` over the given
/// substep states, negative terms clamped to zero.
pub fn strict_substep_bound(
    path: &ComplexPath<f64>,
    f: &dyn Fn(Complex64) -> Complex64,
    states: &[Complex64],
) -> Result<Bound> {
    if states.len() != path.len() {
        return Err(Error::arg("one state per substep is required"));
    }
    let mut best = Bound::Unbounded;
    for (&w, &u) in path.weights().iter().zip(states) {
        if u.norm() == 0.0 {
            return Err(Error::arg("zero intermediate state"));
        }
        let q = f(u) / u;
        let denom = w.norm_sqr() * q.norm_sqr();
        if denom == 0.0 {
            continue;
        }
        let v = (-2.0 * (w * q).re / denom).max(0.0);
        if v < best.value() {
            best = Bound::Finite(v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SspFlag {
    Ok,
    /// Every scanned step up to the cap satisfied the inequality.
    Capped,
    /// The smallest scanned step already failed.
    ViolatedAtSmallest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SspStep {
    pub dt: f64,
    pub flag: SspFlag,
}

#[derive(Debug, Clone, Copy)]
pub struct SspSettings {
    pub cap: f64,
    pub scan_points: usize,
    pub bisection_tolerance: f64,
}

impl Default for SspSettings {
    fn default() -> Self {
        SspSettings {
            cap: DEFAULT_CAP,
            scan_points: DEFAULT_SCAN_POINTS,
            bisection_tolerance: DEFAULT_BISECTION_TOLERANCE,
        }
    }
}

/// `|u_{n+1}|` after one step of size `dt`, projected when the method asks.
fn next_magnitude(method: &MethodSpec, f: &(dyn Fn(Complex64) -> Complex64 + Sync), u: f64, dt: f64) -> f64 {
    let rhs = FnRhs::new(1, |_t: Complex64, y: &[Complex64], out: &mut [Complex64]| out[0] = f(y[0]));
    let mut c = Counters::default();
    match single_step(
        &rhs,
        Complex64::new(0.0, 0.0),
        &[Complex64::new(u, 0.0)],
        dt,
        method,
        &NewtonConfig::default(),
        &mut c,
    ) {
        Ok(y) if method.requires_real_projection() => y[0].re.abs(),
        Ok(y) => y[0].norm(),
        Err(_) => f64::INFINITY,
    }
}

/// Largest `Δt ≤ cap` with `|u_{n+1}(Δt')| ≤ |u_n|` for every scanned
/// `Δt' ≤ Δt`.
pub fn max_ssp_step(
    method: &MethodSpec,
    u: f64,
    f: &(dyn Fn(Complex64) -> Complex64 + Sync),
    settings: &SspSettings,
) -> Result<SspStep> {
    if u == 0.0 {
        return Err(Error::arg("the SSP step is undefined at u = 0"));
    }
    if method.explicit_evaluations().is_none() {
        return Err(Error::Capability("SSP scans need an explicit method".into()));
    }
    let ok = |dt: f64| next_magnitude(method, f, u, dt) <= u.abs();
    let h = settings.cap / settings.scan_points as f64;
    for k in 1..=settings.scan_points {
        let dt = h * k as f64;
        if !ok(dt) {
            if k == 1 {
                return Ok(SspStep {
                    dt: 0.0,
                    flag: SspFlag::ViolatedAtSmallest,
                });
            }
            let (mut lo, mut hi) = (dt - h, dt);
            while hi - lo > settings.bisection_tolerance {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(SspStep { dt: lo, flag: SspFlag::Ok });
        }
    }
    Ok(SspStep {
        dt: settings.cap,
        flag: SspFlag::Capped,
    })
}

/// `n` log-spaced samples on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

pub fn default_grid() -> Vec<f64> {
    log_grid(0.1, 10.0, 200)
}

/// The scalar test problem `f(y) = −y e^{−y}`.
pub fn test_rhs(y: Complex64) -> Complex64 {
    -y * (-y).exp()
}

#[derive(Debug, Clone)]
pub struct SspCurve {
    pub u: Vec<f64>,
    pub methods: Vec<String>,
    /// `dt_max[m][i]` for method `m` at `u[i]`.
    pub dt_max: Vec<Vec<f64>>,
    pub flags: Vec<Vec<SspFlag>>,
}

impl SspCurve {
    pub fn compute(
        methods: &[(String, MethodSpec)],
        f: &(dyn Fn(Complex64) -> Complex64 + Sync),
        grid: &[f64],
        settings: &SspSettings,
    ) -> Result<Self> {
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("SSP grid must be strictly increasing"));
        }
        let mut dt_max = Vec::new();
        let mut flags = Vec::new();
        for (_, m) in methods {
            let steps: Vec<SspStep> = std::thread::scope(|scope| {
                let handles: Vec<_> = grid
                    .chunks(grid.len().div_ceil(8).max(1))
                    .map(|chunk| {
                        scope.spawn(move || {
                            chunk
                                .iter()
                                .map(|&u| max_ssp_step(m, u, f, settings))
                                .collect::<Result<Vec<_>>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("ssp worker"))
                    .collect::<Result<Vec<Vec<_>>>>()
                    .map(|v| v.into_iter().flatten().collect())
            })?;
            dt_max.push(steps.iter().map(|s| s.dt).collect());
            flags.push(steps.iter().map(|s| s.flag).collect());
        }
        Ok(SspCurve {
            u: grid.to_vec(),
            methods: methods.iter().map(|(n, _)| n.clone()).collect(),
            dt_max,
            flags,
        })
    }

    pub fn curve(&self, method: &str) -> Option<&[f64]> {
        self.methods
            .iter()
            .position(|m| m == method)
            .map(|i| self.dt_max[i].as_slice())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["u_n".to_string()];
        header.extend(self.methods.iter().cloned());
        w.write_record(&header)?;
        for (i, u) in self.u.iter().enumerate() {
            let mut row = vec![format!("{u:.16e}")];
            row.extend(self.dt_max.iter().map(|c| format!("{:.16e}", c[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::ReferenceMethod;
    use crate::order_conditions::SchemeDescriptor;
    use crate::paths::lookup;

    fn neg(y: Complex64) -> Complex64 {
        -y
    }

    #[test]
    fn forward_euler_bounds() {
        assert_eq!(fe_ssp_bound(&|y| -y, 3.0), Bound::Finite(2.0));
        let g = |y: f64| -y * (-y).exp();
        match fe_ssp_bound(&g, 1.0) {
            Bound::Finite(v) => assert!((v - 2.0 * std::f64::consts::E).abs() < 1e-12),
            b => panic!("{b:?}"),
        }
        assert_eq!(fe_ssp_bound(&|_| 0.0, 1.0), Bound::Unbounded);
        let fe = lookup("euler-1").unwrap();
        let b = strict_substep_bound(&fe, &neg, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(b, Bound::Finite(2.0));
        let m = MethodSpec::Scheme(SchemeDescriptor::euler(&fe));
        let s = max_ssp_step(&m, 1.0, &neg, &SspSettings::default()).unwrap();
        assert!((s.dt - 2.0).abs() < 1e-7, "{s:?}");
    }

    #[test]
    fn imaginary_weight_gives_zero_strict_bound() {
        let path = ComplexPath::new(
            vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, -1.0)],
            1,
            crate::paths::ValidityClass::Nonlinear,
            true,
        )
        .unwrap();
        let states = substep_states(&path, &neg, 1.0, 0.1);
        assert_eq!(strict_substep_bound(&path, &neg, &states).unwrap(), Bound::Finite(0.0));
    }

    #[test]
    fn ssprk2_linear_limit_matches_stability_boundary() {
        let m = MethodSpec::reference(ReferenceMethod::Ssprk2);
        let s = max_ssp_step(&m, 2.0, &neg, &SspSettings::default()).unwrap();
        // |1 − h + h²/2| ≤ 1 ⇔ h ≤ 2
        assert!((s.dt - 2.0).abs() < 1e-7);
        let fixed = |_y: Complex64| Complex64::new(0.0, 0.0);
        assert_eq!(max_ssp_step(&m, 1.0, &fixed, &SspSettings::default()).unwrap().flag, SspFlag::Capped);
    }
}
