//! Coefficient search for the complex RK2 then RK3 composite scheme.

use super::jet::Jet;
use super::monomial::Monomial;
use super::scheme::{scheme_jet, CompositeCoefficients, SchemeDescriptor, SchemeKind};
use super::{exact_flow_jet, Restriction};
use crate::error::{Error, Result};
use crate::solvers::{inf_norm, levenberg_marquardt, LmSettings};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CompositeSettings {
    /// Jet truncation order, i.e. the target order.
    pub order: usize,
    pub starts: usize,
    pub seed: u64,
    pub box_half_width: f64,
    pub tolerance: f64,
    pub lm: LmSettings,
    /// Pins every imaginary part to zero.
    pub real_only: bool,
    /// Starts evaluated concurrently; the lowest qualifying index wins.
    pub batch: usize,
}

impl Default for CompositeSettings {
    fn default() -> Self {
        CompositeSettings {
            order: 5,
            starts: 10_000,
            seed: 0,
            box_half_width: 1.5,
            tolerance: 1e-10,
            lm: LmSettings::default(),
            real_only: false,
            batch: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompositeSolution {
    pub scheme: SchemeDescriptor,
    pub coefficients: CompositeCoefficients,
    pub residual_inf: f64,
    pub start_index: usize,
}

/// Residual system in the free coefficients; `b23` absorbs the real-return
/// constraint.
pub struct CompositeSystem {
    order: usize,
    real_only: bool,
    exact: Jet<f64>,
    monomials: Vec<(usize, Monomial)>,
}

impl CompositeSystem {
    pub fn new(order: usize, real_only: bool) -> Result<Self> {
        let exact = exact_flow_jet::<f64>(order, Restriction::Autonomous)?;
        let monomials = (2..=order)
            .flat_map(|k| exact.coefficient(k).monomials().map(move |m| (k, m)))
            .collect();
        Ok(CompositeSystem {
            order,
            real_only,
            exact,
            monomials,
        })
    }

    pub fn unknowns(&self) -> usize {
        if self.real_only {
            8
        } else {
            16
        }
    }

    pub fn coefficients(&self, x: &[f64]) -> CompositeCoefficients {
        let mut c = [Complex64::new(0.0, 0.0); 9];
        for (i, slot) in c.iter_mut().take(8).enumerate() {
            *slot = if self.real_only {
                Complex64::new(x[i], 0.0)
            } else {
                Complex64::new(x[2 * i], x[2 * i + 1])
            };
        }
        let partial: Complex64 = c[1] + c[2] + c[6] + c[7];
        c[8] = Complex64::new(1.0, 0.0) - partial;
        CompositeCoefficients::from_array(c)
    }

    /// Order-2 conditions in full, higher orders real part only.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let scheme = SchemeDescriptor {
            kind: SchemeKind::CompositeRk23 {
                coefficients: self.coefficients(x),
            },
            real_projection: true,
        };
        let jet = match scheme_jet(&scheme, self.order, Restriction::Autonomous) {
            Ok(j) => j,
            Err(_) => return vec![f64::NAN; self.monomials.len() + 1],
        };
        let mut out = Vec::with_capacity(self.monomials.len() + 1);
        for &(k, m) in &self.monomials {
            let d = jet.coefficient(k).coefficient(m) - self.exact.coefficient(k).coefficient(m);
            out.push(d.re);
            if k == 2 && !self.real_only {
                out.push(d.im);
            }
        }
        out
    }
}

fn draw_start(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// Multistart Levenberg–Marquardt search for order-`P` coefficients on
/// scalar autonomous problems.
pub fn solve_composite_rk23(settings: &CompositeSettings) -> Result<CompositeSolution> {
    let system = CompositeSystem::new(settings.order, settings.real_only)?;
    let dim = system.unknowns();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut best = f64::INFINITY;
    let batch = settings.batch.max(1);
    let mut index = 0;
    while index < settings.starts {
        let n = batch.min(settings.starts - index);
        let starts: Vec<Vec<f64>> = (0..n)
            .map(|_| draw_start(&mut rng, dim, settings.box_half_width))
            .collect();
        let outcomes: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = starts
                .iter()
                .map(|x0| {
                    let system = &system;
                    scope.spawn(move || {
                        levenberg_marquardt(&|x: &[f64]| system.residual(x), x0, &settings.lm)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("solver thread")).collect()
        });
        for (offset, outcome) in outcomes.into_iter().enumerate() {
            let r = inf_norm(&system.residual(&outcome.x));
            if r < settings.tolerance {
                let coefficients = system.coefficients(&outcome.x);
                return Ok(CompositeSolution {
                    scheme: SchemeDescriptor::composite(coefficients)?,
                    coefficients,
                    residual_inf: r,
                    start_index: index + offset,
                });
            }
            if r.is_finite() {
                best = best.min(r);
            }
        }
        index += n;
    }
    Err(Error::Numeric {
        message: format!(
            "no composite coefficients with residual below {:e} after {} starts",
            settings.tolerance, settings.starts
        ),
        best_residual: best.is_finite().then_some(best),
    })
}
