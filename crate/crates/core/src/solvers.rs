//! Small dense nonlinear solvers: damped multi-start Newton, Levenberg–Marquardt
//! and Nelder–Mead. All operate on `f64` vectors with finite-difference
//! Jacobians; the systems handled here have at most a few dozen unknowns.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Central-difference Jacobian, `rows × x.len()`.
pub fn fd_jacobian<F>(f: &F, x: &[f64], fx_len: usize, step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::<f64>::zeros(fx_len, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = step * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..fx_len {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn lstsq(jac: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(rhs, smax * 1e-14).ok()
}

#[derive(Debug, Clone)]
pub struct NewtonSettings {
    pub starts: usize,
    pub box_half_width: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub tolerance: f64,
    pub divergence: f64,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            starts: 100,
            box_half_width: 2.0,
            max_iterations: 100,
            max_halvings: 20,
            tolerance: 1e-12,
            divergence: 1e3,
            fd_step: 1e-6,
            seed: 0,
        }
    }
}

/// Damped Newton from one start. Returns the converged point and its
/// residual ∞-norm, or `None` on stagnation or divergence.
pub fn damped_newton<F>(f: &F, x0: &[f64], s: &NewtonSettings) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let mut rn = inf_norm(&r);
    for _ in 0..s.max_iterations {
        if rn < s.tolerance {
            return Some((x, rn));
        }
        let jac = fd_jacobian(f, &x, r.len(), s.fd_step);
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
        let dx = lstsq(&jac, &rhs)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=s.max_halvings {
            let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            let rc = f(&cand);
            let rcn = inf_norm(&rc);
            if rcn < rn || (rcn.is_finite() && sq_norm(&rc) < sq_norm(&r)) {
                x = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > s.divergence {
            return None;
        }
    }
    (rn < s.tolerance).then_some((x, rn))
}

/// Runs [`damped_newton`] from `s.starts` seeded uniform starts and returns
/// the distinct solutions (componentwise clustering at `dedup_tol`) in
/// start-index order of first discovery.
pub fn multistart_newton<F>(f: &F, dim: usize, s: &NewtonSettings, dedup_tol: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut found: Vec<Vec<f64>> = Vec::new();
    for _ in 0..s.starts {
        let x0: Vec<f64> = (0..dim)
            .map(|_| rng.gen_range(-s.box_half_width..=s.box_half_width))
            .collect();
        if let Some((x, _)) = damped_newton(f, &x0, s) {
            let known = found
                .iter()
                .any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() <= dedup_tol));
            if !known {
                found.push(x);
            }
        }
    }
    found
}

#[derive(Debug, Clone)]
pub struct LmSettings {
    pub initial_damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub fd_step: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            initial_damping: 1e-3,
            max_iterations: 500,
            tolerance: 1e-10,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
}

/// Levenberg–Marquardt on `min ½‖r(x)‖²` with damping `μ I`, `μ` divided by
/// ten after an accepted step and multiplied by ten after a rejected one.
pub fn levenberg_marquardt<F>(f: &F, x0: &[f64], s: &LmSettings) -> LmOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let mut cost = sq_norm(&r);
    let mut mu = s.initial_damping;
    let mut it = 0;
    while it < s.max_iterations {
        if inf_norm(&r) < s.tolerance || !cost.is_finite() {
            break;
        }
        it += 1;
        let jac = fd_jacobian(f, &x, r.len(), s.fd_step);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        while mu < 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu;
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let rc = f(&cand);
            let cc = sq_norm(&rc);
            if cc.is_finite() && cc < cost {
                x = cand;
                r = rc;
                cost = cc;
                mu = (mu / 10.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    LmOutcome {
        residual_inf: inf_norm(&r),
        x,
        iterations: it,
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadSettings {
    pub max_evaluations: usize,
    pub initial_step: f64,
    pub f_tolerance: f64,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        NelderMeadSettings {
            max_evaluations: 2000,
            initial_step: 0.05,
            f_tolerance: 1e-12,
        }
    }
}

/// Minimises `f` by the Nelder–Mead simplex method. Returns `(x, f(x))`.
pub fn nelder_mead<F>(f: &F, x0: &[f64], s: &NelderMeadSettings) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return (Vec::new(), f(x0));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1e-12 { s.initial_step * p[i].abs().max(0.1) } else { s.initial_step };
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = n + 1;
    let cmp = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| {
        a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)
    };
    while evals < s.max_evaluations {
        simplex.sort_by(cmp);
        let spread = (simplex[n].1 - simplex[0].1).abs();
        if spread <= s.f_tolerance * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = lerp(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = lerp(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = lerp(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = lerp(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        p.0[j] = best[j] + 0.5 * (p.0[j] - best[j]);
                    }
                    p.1 = f(&p.0);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(cmp);
    simplex.swap_remove(0)
}
