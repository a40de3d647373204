//! Linear stability: amplification factors of paths, region rasters,
//! extents along rays and optimisation of free polynomial coefficients.

mod optimize;

pub use optimize::{brute_force_k, optimize_free_coefficients, Objective, OptimizeSettings, OptimizedPolynomial};

use crate::error::{Error, Result};
use crate::paths::{ComplexPath, ValidityClass};
use crate::poly;
use crate::scalar::{cx, factorial, recast, Cx, Real};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Scan step along a ray before bisection.
pub const SCAN_STEP: f64 = 1e-3;
/// Bisection width at which an extent is reported.
pub const BISECTION_TOLERANCE: f64 = 1e-10;
/// Ray length beyond which the extent is reported as unbounded.
pub const SCAN_LIMIT: f64 = 1e4;
const POLE_GUARD: f64 = 1e-12;
const UNIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVariant {
    Explicit,
    ImplicitMidpoint,
    BackwardEuler,
}

/// Amplification factor `Φ(z)` of one macro step on `y' = λy`, `z = λΔt`.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilityPolynomial<T: Real> {
    Explicit(Vec<Cx<T>>),
    Rational {
        numerator: Vec<Cx<T>>,
        denominator: Vec<Cx<T>>,
    },
}

impl<T: Real> StabilityPolynomial<T> {
    pub fn explicit(coefficients: Vec<Cx<T>>) -> Result<Self> {
        if coefficients.first().map_or(true, |c| (*c - Cx::one()).norm() > T::lit(1e-12)) {
            return Err(Error::arg("stability polynomial must have c_0 = 1"));
        }
        Ok(StabilityPolynomial::Explicit(coefficients))
    }

    /// `1 + z + … + z^p/p! + Σ_{k>p} free_k z^k`.
    pub fn consistent(order: usize, free: &[Cx<T>]) -> Self {
        let mut c: Vec<Cx<T>> = (0..=order)
            .map(|k| cx(factorial::<T>(k).recip(), T::zero()))
            .collect();
        c.extend_from_slice(free);
        StabilityPolynomial::Explicit(c)
    }

    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        match self {
            StabilityPolynomial::Explicit(c) => poly::eval(c, z),
            StabilityPolynomial::Rational {
                numerator,
                denominator,
            } => {
                let d = poly::eval(denominator, z);
                if d.norm() < T::lit(POLE_GUARD) {
                    return cx(T::infinity(), T::zero());
                }
                poly::eval(numerator, z) / d
            }
        }
    }

    pub fn is_stable_at(&self, z: Cx<T>) -> bool {
        let v = self.eval(z).norm();
        v.is_finite() && v <= T::one() + T::lit(UNIT_SLACK)
    }

    pub fn coefficients(&self) -> Option<&[Cx<T>]> {
        match self {
            StabilityPolynomial::Explicit(c) => Some(c),
            StabilityPolynomial::Rational { .. } => None,
        }
    }

    /// Taylor coefficients of `Φ` about 0.
    pub fn series(&self, terms: usize) -> Result<Vec<Cx<T>>> {
        match self {
            StabilityPolynomial::Explicit(c) => {
                let mut out = c.clone();
                out.resize(terms.max(out.len()), Cx::zero());
                out.truncate(terms);
                Ok(out)
            }
            StabilityPolynomial::Rational {
                numerator,
                denominator,
            } => poly::series_div(numerator, denominator, terms),
        }
    }

    pub fn cast<B: Real>(&self) -> StabilityPolynomial<B> {
        let r = |v: &[Cx<T>]| v.iter().map(|&z| recast(z)).collect();
        match self {
            StabilityPolynomial::Explicit(c) => StabilityPolynomial::Explicit(r(c)),
            StabilityPolynomial::Rational {
                numerator,
                denominator,
            } => StabilityPolynomial::Rational {
                numerator: r(numerator),
                denominator: r(denominator),
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum PolynomialRecord {
    ExplicitPolynomial {
        coefficients: Vec<[f64; 2]>,
    },
    ImplicitRational {
        numerator: Vec<[f64; 2]>,
        denominator: Vec<[f64; 2]>,
    },
}

fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

impl StabilityPolynomial<f64> {
    pub fn to_json(&self) -> Result<String> {
        let rec = match self {
            StabilityPolynomial::Explicit(c) => PolynomialRecord::ExplicitPolynomial {
                coefficients: pairs(c),
            },
            StabilityPolynomial::Rational {
                numerator,
                denominator,
            } => PolynomialRecord::ImplicitRational {
                numerator: pairs(numerator),
                denominator: pairs(denominator),
            },
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        match serde_json::from_str::<PolynomialRecord>(s)? {
            PolynomialRecord::ExplicitPolynomial { coefficients } => {
                StabilityPolynomial::explicit(unpairs(&coefficients))
            }
            PolynomialRecord::ImplicitRational {
                numerator,
                denominator,
            } => Ok(StabilityPolynomial::Rational {
                numerator: unpairs(&numerator),
                denominator: unpairs(&denominator),
            }),
        }
    }
}

pub fn stability_function<T: Real>(path: &ComplexPath<T>, variant: StabilityVariant) -> StabilityPolynomial<T> {
    let w = path.weights();
    let one = Cx::<T>::one();
    match variant {
        StabilityVariant::Explicit => StabilityPolynomial::Explicit(poly::product_of_linear_factors(w, one)),
        StabilityVariant::ImplicitMidpoint => {
            let half = cx(T::lit(0.5), T::zero());
            StabilityPolynomial::Rational {
                numerator: poly::product_of_linear_factors(w, half),
                denominator: poly::product_of_linear_factors(w, -half),
            }
        }
        StabilityVariant::BackwardEuler => StabilityPolynomial::Rational {
            numerator: vec![one],
            denominator: poly::product_of_linear_factors(w, -one),
        },
    }
}

/// Axis-aligned window `[x_min, x_max] × [y_min, y_max]` in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let w = Window {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        if !(x_max > x_min && y_max > y_min) || [x_min, x_max, y_min, y_max].iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("degenerate stability window"));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRaster {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    /// Row-major over `y`, then `x`.
    pub inside: Vec<bool>,
}

impl RegionRaster {
    pub fn x(&self, i: usize) -> f64 {
        self.window.x_min + (self.window.x_max - self.window.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.window.y_min + (self.window.y_max - self.window.y_min) * j as f64 / (self.ny - 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> bool {
        self.inside[j * self.nx + i]
    }

    /// Raster point nearest to `z`.
    pub fn contains(&self, z: Complex64) -> bool {
        let fx = (z.re - self.window.x_min) / (self.window.x_max - self.window.x_min) * (self.nx - 1) as f64;
        let fy = (z.im - self.window.y_min) / (self.window.y_max - self.window.y_min) * (self.ny - 1) as f64;
        let (i, j) = (fx.round(), fy.round());
        if i < 0.0 || j < 0.0 || i > (self.nx - 1) as f64 || j > (self.ny - 1) as f64 {
            return false;
        }
        self.at(i as usize, j as usize)
    }

    /// Mirror image about the real axis is the same raster.
    pub fn is_conjugate_symmetric(&self) -> bool {
        (0..self.ny).all(|j| (0..self.nx).all(|i| self.at(i, j) == self.at(i, self.ny - 1 - j)))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "inside"])?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                w.write_record([
                    format!("{:.16e}", self.x(i)),
                    format!("{:.16e}", self.y(j)),
                    u8::from(self.at(i, j)).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn raster_region(phi: &StabilityPolynomial<f64>, window: Window, nx: usize, ny: usize) -> Result<RegionRaster> {
    let window = Window::new(window.x_min, window.x_max, window.y_min, window.y_max)?;
    if nx < 2 || ny < 2 {
        return Err(Error::arg("raster resolution must be at least 2×2"));
    }
    let mut r = RegionRaster {
        window,
        nx,
        ny,
        inside: vec![false; nx * ny],
    };
    for j in 0..ny {
        // evaluate mirrored rows at exactly negated ordinates so real
        // polynomials give bitwise symmetric rasters
        let y = if 2 * j + 1 > ny && (window.y_min + window.y_max) == 0.0 {
            -r.y(ny - 1 - j)
        } else {
            r.y(j)
        };
        for i in 0..nx {
            r.inside[j * nx + i] = phi.is_stable_at(Complex64::new(r.x(i), y));
        }
    }
    Ok(r)
}

/// Points on `|Φ| = 1` found by bisection between raster neighbours of
/// opposite membership, ordered by angle about their centroid.
pub fn boundary_points(phi: &StabilityPolynomial<f64>, raster: &RegionRaster) -> Vec<Complex64> {
    let mut pts = Vec::new();
    let mut refine = |a: Complex64, b: Complex64| {
        let (mut lo, mut hi) = (a, b);
        let inside_lo = phi.is_stable_at(lo);
        for _ in 0..50 {
            let mid = (lo + hi) * 0.5;
            if phi.is_stable_at(mid) == inside_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        pts.push((lo + hi) * 0.5);
    };
    for j in 0..raster.ny {
        for i in 0..raster.nx {
            let here = Complex64::new(raster.x(i), raster.y(j));
            if i + 1 < raster.nx && raster.at(i, j) != raster.at(i + 1, j) {
                refine(here, Complex64::new(raster.x(i + 1), raster.y(j)));
            }
            if j + 1 < raster.ny && raster.at(i, j) != raster.at(i, j + 1) {
                refine(here, Complex64::new(raster.x(i), raster.y(j + 1)));
            }
        }
    }
    if pts.is_empty() {
        return pts;
    }
    let centre = pts.iter().sum::<Complex64>() / pts.len() as f64;
    pts.sort_by(|a, b| {
        (a - centre)
            .arg()
            .partial_cmp(&(b - centre).arg())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pts
}

pub fn write_polyline_csv<W: Write>(points: &[Complex64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"])?;
    for p in points {
        w.write_record([format!("{:.16e}", p.re), format!("{:.16e}", p.im)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayExtent {
    pub extent: f64,
    /// The ray stayed inside the region up to the scan limit.
    pub unbounded: bool,
}

/// Largest `h` with `|Φ(h·d)| ≤ 1` on every scan sample in `[0, h]`.
pub fn ray_extent(phi: &StabilityPolynomial<f64>, direction: Complex64) -> Result<RayExtent> {
    let n = direction.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::arg("ray direction must be nonzero"));
    }
    let d = direction / n;
    let steps = (SCAN_LIMIT / SCAN_STEP) as usize;
    for k in 1..=steps {
        let h = k as f64 * SCAN_STEP;
        if !phi.is_stable_at(d * h) {
            let (mut lo, mut hi) = ((k - 1) as f64 * SCAN_STEP, h);
            while hi - lo > BISECTION_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                if phi.is_stable_at(d * mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(RayExtent {
                extent: lo,
                unbounded: false,
            });
        }
    }
    Ok(RayExtent {
        extent: SCAN_LIMIT,
        unbounded: true,
    })
}

/// Path whose explicit amplification factor is `Φ`: the weights are the
/// roots of `Σ (−1)^k c_k z^{n−k}`.
pub fn weights_from_polynomial(phi: &StabilityPolynomial<f64>) -> Result<ComplexPath<f64>> {
    let c = phi
        .coefficients()
        .ok_or_else(|| Error::arg("only explicit polynomials map to Euler paths"))?;
    let mut c = c.to_vec();
    while c.len() > 1 && c.last().is_some_and(|z| z.is_zero()) {
        c.pop();
    }
    if c.len() < 2 {
        return Err(Error::arg("polynomial has no linear term"));
    }
    let monic: Vec<Complex64> = (1..c.len())
        .map(|k| if k % 2 == 1 { -c[k] } else { c[k] })
        .collect();
    let roots = poly::monic_roots(&monic)?;
    let mut order = 0;
    for (k, ck) in c.iter().enumerate().skip(1) {
        if (ck - Complex64::new(1.0 / factorial::<f64>(k), 0.0)).norm() <= 1e-10 {
            order = k;
        } else {
            break;
        }
    }
    ComplexPath::new(roots, order.max(1), ValidityClass::LinearOnly, false)
}
