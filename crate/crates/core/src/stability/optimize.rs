use super::{ray_extent, StabilityPolynomial};
use crate::error::{Error, Result};
use crate::scalar::factorial;
use crate::solvers::{nelder_mead, NelderMeadSettings};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    NegativeRealAxis,
    /// Extent along the ray through `[re, im]`.
    Ray([f64; 2]),
}

impl Objective {
    pub fn direction(self) -> Result<Complex64> {
        let d = match self {
            Objective::NegativeRealAxis => Complex64::new(-1.0, 0.0),
            Objective::Ray([re, im]) => Complex64::new(re, im),
        };
        let n = d.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::arg("objective ray is degenerate"));
        }
        Ok(d / n)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeSettings {
    pub starts: usize,
    pub seed: u64,
    /// Total coarse-grid evaluations, spread evenly over the dimensions.
    pub grid_budget: usize,
    pub nelder_mead: NelderMeadSettings,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            starts: 20,
            seed: 0,
            grid_budget: 1600,
            nelder_mead: NelderMeadSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedPolynomial {
    pub polynomial: StabilityPolynomial<f64>,
    pub free: Vec<Complex64>,
    pub extent: f64,
}

fn extent_of(order: usize, free: &[Complex64], d: Complex64) -> f64 {
    let p = StabilityPolynomial::consistent(order, free);
    ray_extent(&p, d).map(|r| r.extent).unwrap_or(0.0)
}

/// Maximises the extent along the objective ray over `c_{p+1}..c_s`,
/// keeping `c_k = 1/k!` for `k ≤ p`.
pub fn optimize_free_coefficients(
    stages: usize,
    order: usize,
    objective: Objective,
    allow_complex: bool,
    settings: &OptimizeSettings,
) -> Result<OptimizedPolynomial> {
    if order >= stages || order == 0 {
        return Err(Error::arg(format!(
            "need 1 ≤ p < s, got s = {stages}, p = {order}"
        )));
    }
    let d = objective.direction()?;
    let nfree = stages - order;
    let per = if allow_complex { 2 } else { 1 };
    let dim = nfree * per;
    // coefficients are searched as multiples of 1/k!
    let scale: Vec<f64> = (order + 1..=stages).map(|k| 1.0 / factorial::<f64>(k)).collect();
    let decode = |x: &[f64]| -> Vec<Complex64> {
        (0..nfree)
            .map(|i| {
                let im = if allow_complex { x[per * i + 1] } else { 0.0 };
                Complex64::new(x[per * i], im) * scale[i]
            })
            .collect()
    };
    let cost = |x: &[f64]| -extent_of(order, &decode(x), d);

    let g = ((settings.grid_budget.max(2) as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    let axis = |j: usize, param: usize| -> f64 {
        let (lo, hi) = if allow_complex && param % 2 == 1 { (-0.6, 0.6) } else { (0.0, 1.2) };
        lo + (hi - lo) * j as f64 / (g - 1) as f64
    };
    let mut grid: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = g.pow(dim as u32);
    for idx in 0..total {
        let mut rem = idx;
        let x: Vec<f64> = (0..dim)
            .map(|param| {
                let j = rem % g;
                rem /= g;
                axis(j, param)
            })
            .collect();
        grid.push((cost(&x), x));
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let spacing = 1.2 / (g - 1) as f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, x0) in grid.iter().take(settings.starts.max(1)) {
        let start: Vec<f64> = x0.iter().map(|v| v + rng.gen_range(-0.25..0.25) * spacing).collect();
        let nm = NelderMeadSettings {
            initial_step: settings.nelder_mead.initial_step.min(spacing),
            ..settings.nelder_mead.clone()
        };
        for candidate in [nelder_mead(&cost, &start, &nm), (x0.clone(), cost(x0))] {
            if best.as_ref().map_or(true, |b| candidate.1 < b.0) {
                best = Some((candidate.1, candidate.0));
            }
        }
    }
    let (value, x) = best.expect("at least one start");
    let free = decode(&x);
    Ok(OptimizedPolynomial {
        polynomial: StabilityPolynomial::consistent(order, &free),
        free,
        extent: -value,
    })
}

/// Exhaustive scan of a single real free coefficient `c_{p+1} = k`.
pub fn brute_force_k(order: usize, objective: Objective, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
    let d = objective.direction()?;
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let k = lo + step * i as f64;
        let e = extent_of(order, &[Complex64::new(k, 0.0)], d);
        if e > best.1 {
            best = (k, e);
        }
    }
    Ok(best)
}
