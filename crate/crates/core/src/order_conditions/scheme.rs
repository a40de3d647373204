//! Scheme descriptors and their symbolic execution on jets.

use super::jet::{rhs_jet, Jet};
use super::Restriction;
use crate::error::{Error, Result};
use crate::paths::ComplexPath;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients of the two-step RK2 then RK3 scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeCoefficients {
    pub a121: Complex64,
    pub b11: Complex64,
    pub b12: Complex64,
    pub a221: Complex64,
    pub a231: Complex64,
    pub a232: Complex64,
    pub b21: Complex64,
    pub b22: Complex64,
    pub b23: Complex64,
}

impl CompositeCoefficients {
    pub fn step_sum(&self) -> Complex64 {
        self.b11 + self.b12 + self.b21 + self.b22 + self.b23
    }

    /// Time reached after the RK2 step, as a fraction of the macro step.
    pub fn midpoint(&self) -> Complex64 {
        self.b11 + self.b12
    }

    pub fn as_array(&self) -> [Complex64; 9] {
        [
            self.a121, self.b11, self.b12, self.a221, self.a231, self.a232, self.b21, self.b22,
            self.b23,
        ]
    }

    pub fn from_array(c: [Complex64; 9]) -> Self {
        CompositeCoefficients {
            a121: c[0],
            b11: c[1],
            b12: c[2],
            a221: c[3],
            a231: c[4],
            a232: c[5],
            b21: c[6],
            b22: c[7],
            b23: c[8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeKind {
    EulerPath { weights: Vec<Complex64> },
    ImplicitMidpointPath { weights: Vec<Complex64> },
    BackwardEulerPath { weights: Vec<Complex64> },
    CompositeRk23 { coefficients: CompositeCoefficients },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDescriptor {
    #[serde(rename = "scheme")]
    pub kind: SchemeKind,
    pub real_projection: bool,
}

const SUM_TOLERANCE: f64 = 1e-12;

impl SchemeDescriptor {
    pub fn new(kind: SchemeKind, real_projection: bool) -> Result<Self> {
        let d = SchemeDescriptor {
            kind,
            real_projection,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn euler(path: &ComplexPath<f64>) -> Self {
        SchemeDescriptor {
            kind: SchemeKind::EulerPath {
                weights: path.weights().to_vec(),
            },
            real_projection: path.requires_real_projection(),
        }
    }

    pub fn implicit_midpoint(path: &ComplexPath<f64>) -> Self {
        SchemeDescriptor {
            kind: SchemeKind::ImplicitMidpointPath {
                weights: path.weights().to_vec(),
            },
            real_projection: path.requires_real_projection(),
        }
    }

    pub fn backward_euler(path: &ComplexPath<f64>) -> Self {
        SchemeDescriptor {
            kind: SchemeKind::BackwardEulerPath {
                weights: path.weights().to_vec(),
            },
            real_projection: path.requires_real_projection(),
        }
    }

    pub fn composite(coefficients: CompositeCoefficients) -> Result<Self> {
        SchemeDescriptor::new(SchemeKind::CompositeRk23 { coefficients }, true)
    }

    pub fn validate(&self) -> Result<()> {
        let sum = match &self.kind {
            SchemeKind::EulerPath { weights }
            | SchemeKind::ImplicitMidpointPath { weights }
            | SchemeKind::BackwardEulerPath { weights } => {
                if weights.is_empty() {
                    return Err(Error::arg("scheme needs at least one weight"));
                }
                weights.iter().sum::<Complex64>()
            }
            SchemeKind::CompositeRk23 { coefficients } => coefficients.step_sum(),
        };
        if (sum.re - 1.0).abs() > SUM_TOLERANCE || sum.im.abs() > SUM_TOLERANCE {
            return Err(Error::arg(format!(
                "scheme steps sum to {sum}, expected 1 within {SUM_TOLERANCE:e}"
            )));
        }
        if let SchemeKind::EulerPath { weights }
        | SchemeKind::ImplicitMidpointPath { weights }
        | SchemeKind::BackwardEulerPath { weights } = &self.kind
        {
            if weights.iter().any(|w| !(w.re.is_finite() && w.im.is_finite())) {
                return Err(Error::arg("non-finite weight"));
            }
        }
        Ok(())
    }

    pub fn is_implicit(&self) -> bool {
        matches!(
            self.kind,
            SchemeKind::ImplicitMidpointPath { .. } | SchemeKind::BackwardEulerPath { .. }
        )
    }

    /// Right-hand side evaluations per macro step for explicit schemes.
    pub fn explicit_evaluations(&self) -> Option<usize> {
        match &self.kind {
            SchemeKind::EulerPath { weights } => Some(weights.len()),
            SchemeKind::CompositeRk23 { .. } => Some(5),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: SchemeDescriptor = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }
}

/// Resolves `Z = base + s h f(τ, mix(Z))` by fixed-point iteration.
fn picard(
    base: &Jet<f64>,
    step: Complex64,
    time: Complex64,
    argument: &dyn Fn(&Jet<f64>) -> Jet<f64>,
    restriction: Restriction,
    limit: Option<usize>,
) -> Result<Jet<f64>> {
    let order = base.order();
    let max_iterations = limit.unwrap_or(order + 2);
    let mut z = base.clone();
    for _ in 0..max_iterations {
        let mut next = base.clone();
        next.add_scaled(&rhs_jet(time, &argument(&z), restriction).times_h(step), Complex64::new(1.0, 0.0));
        if limit.is_none() && next == z {
            return Ok(z);
        }
        z = next;
    }
    if limit.is_some() {
        Ok(z)
    } else {
        Err(Error::Internal(format!(
            "implicit stage jet did not stabilise after {max_iterations} iterations"
        )))
    }
}

/// Jet of `y_end − y_0` through `h^P` for the scheme.
pub fn scheme_jet(scheme: &SchemeDescriptor, order: usize, restriction: Restriction) -> Result<Jet<f64>> {
    scheme_jet_impl(scheme, order, restriction, None)
}

/// As [`scheme_jet`], stopping every implicit stage after `iterations`
/// fixed-point sweeps instead of iterating to stabilisation.
pub fn scheme_jet_with_picard_limit(
    scheme: &SchemeDescriptor,
    order: usize,
    restriction: Restriction,
    iterations: usize,
) -> Result<Jet<f64>> {
    scheme_jet_impl(scheme, order, restriction, Some(iterations))
}

fn scheme_jet_impl(
    scheme: &SchemeDescriptor,
    order: usize,
    restriction: Restriction,
    limit: Option<usize>,
) -> Result<Jet<f64>> {
    if order == 0 || order > super::jet::MAX_JET_ORDER {
        return Err(Error::arg(format!("jet order {order} out of range")));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut y = Jet::zero(order);
    let mut t = Complex64::new(0.0, 0.0);
    match &scheme.kind {
        SchemeKind::EulerPath { weights } => {
            for &w in weights {
                let k = rhs_jet(t, &y, restriction).times_h(w);
                y.add_scaled(&k, one);
                t += w;
            }
        }
        SchemeKind::BackwardEulerPath { weights } => {
            for &w in weights {
                t += w;
                y = picard(&y, w, t, &|z| z.clone(), restriction, limit)?;
            }
        }
        SchemeKind::ImplicitMidpointPath { weights } => {
            for &w in weights {
                let base = y.clone();
                let mid = t + w * 0.5;
                let half = Complex64::new(0.5, 0.0);
                y = picard(
                    &y,
                    w,
                    mid,
                    &|z| (&base + z).scaled(half),
                    restriction,
                    limit,
                )?;
                t += w;
            }
        }
        SchemeKind::CompositeRk23 { coefficients: k } => {
            let f = |time: Complex64, arg: &Jet<f64>| rhs_jet(time, arg, restriction);
            let lin = |parts: &[(Complex64, &Jet<f64>)]| -> Jet<f64> {
                let mut out = Jet::zero(order);
                for (s, j) in parts {
                    out.add_scaled(&j.times_h(*s), one);
                }
                out
            };
            let k11 = f(t, &y);
            let k12 = f(t + k.a121, &(&y + &lin(&[(k.a121, &k11)])));
            let ym = &y + &lin(&[(k.b11, &k11), (k.b12, &k12)]);
            let tm = t + k.midpoint();
            let k21 = f(tm, &ym);
            let k22 = f(tm + k.a221, &(&ym + &lin(&[(k.a221, &k21)])));
            let k23 = f(
                tm + k.a231 + k.a232,
                &(&ym + &lin(&[(k.a231, &k21), (k.a232, &k22)])),
            );
            y = &ym + &lin(&[(k.b21, &k21), (k.b22, &k22), (k.b23, &k23)]);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::super::{exact_flow_jet, Indeterminate, Monomial};
    use super::*;

    #[test]
    fn forward_euler_has_no_second_order_term() {
        let s = SchemeDescriptor::new(
            SchemeKind::EulerPath {
                weights: vec![Complex64::new(1.0, 0.0)],
            },
            false,
        )
        .unwrap();
        let j = scheme_jet(&s, 2, Restriction::General).unwrap();
        assert_eq!(j.coefficient(1).len(), 1);
        assert!(j.coefficient(2).is_zero());
        let f = Monomial::var(Indeterminate::new(0, 0));
        assert_eq!(j.coefficient(1).coefficient(f), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn two_step_complex_path_matches_second_order() {
        let s = SchemeDescriptor::new(
            SchemeKind::EulerPath {
                weights: vec![Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5)],
            },
            false,
        )
        .unwrap();
        let j = scheme_jet(&s, 2, Restriction::General).unwrap();
        let e = exact_flow_jet::<f64>(2, Restriction::General).unwrap();
        assert!(j.max_difference(&e) < 1e-15);
    }

    #[test]
    fn descriptor_json_round_trip() {
        let s = SchemeDescriptor::new(
            SchemeKind::BackwardEulerPath {
                weights: vec![Complex64::new(0.25, 0.1), Complex64::new(0.75, -0.1)],
            },
            true,
        )
        .unwrap();
        let text = s.to_json().unwrap();
        assert!(text.contains("backward-euler-path"));
        assert_eq!(SchemeDescriptor::from_json(&text).unwrap(), s);
        let bad = text.replace("0.75", "0.70");
        assert!(SchemeDescriptor::from_json(&bad).is_err());
    }
}
