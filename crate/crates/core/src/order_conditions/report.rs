//! Monomial-wise comparison of a scheme jet against the exact flow.

use super::jet::Jet;
use super::monomial::{Indeterminate, Monomial};
use super::scheme::{scheme_jet, SchemeDescriptor};
use super::{exact_flow_jet, Restriction};
use crate::error::Result;
use num_complex::Complex64;
use std::collections::BTreeSet;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialResidual {
    pub h_power: usize,
    /// `None` when the jet was evaluated at concrete derivative values.
    pub monomial: Option<Monomial>,
    pub residual: Complex64,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub restriction: Restriction,
    pub tolerance: f64,
    /// First h-power at which only real parts are compared in relaxed mode.
    pub relaxed_from: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            restriction: Restriction::General,
            tolerance: 1e-12,
            relaxed_from: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderReport {
    pub truncation: usize,
    pub residuals: Vec<MonomialResidual>,
    pub achieved_order: usize,
    pub achieved_order_relaxed: usize,
}

impl OrderReport {
    fn from_residuals(
        truncation: usize,
        residuals: Vec<MonomialResidual>,
        options: &ReportOptions,
        projection: bool,
    ) -> Self {
        let strict = |r: &MonomialResidual| r.residual.norm() < options.tolerance;
        let relaxed = |r: &MonomialResidual| {
            if r.h_power >= options.relaxed_from {
                r.residual.re.abs() < options.tolerance
            } else {
                strict(r)
            }
        };
        let achieved = |ok: &dyn Fn(&MonomialResidual) -> bool| {
            (1..=truncation)
                .find(|&k| residuals.iter().any(|r| r.h_power == k && !ok(r)))
                .map(|k| k - 1)
                .unwrap_or(truncation)
        };
        let achieved_order = achieved(&strict);
        let achieved_order_relaxed = if projection {
            achieved(&relaxed).max(achieved_order)
        } else {
            achieved_order
        };
        OrderReport {
            truncation,
            residuals,
            achieved_order,
            achieved_order_relaxed,
        }
    }

    pub fn at_power(&self, k: usize) -> impl Iterator<Item = &MonomialResidual> {
        self.residuals.iter().filter(move |r| r.h_power == k)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.residual.norm())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `monomial,h_power,residual_re,residual_im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["monomial", "h_power", "residual_re", "residual_im"])?;
        for r in &self.residuals {
            let name = r.monomial.map(|m| m.to_string()).unwrap_or_else(|| "*".into());
            w.write_record([
                name,
                r.h_power.to_string(),
                format!("{:.16e}", r.residual.re),
                format!("{:.16e}", r.residual.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Residuals of every monomial at `h^1..h^P`.
pub fn jet_residuals(scheme: &Jet<f64>, exact: &Jet<f64>) -> Vec<MonomialResidual> {
    let mut out = Vec::new();
    for k in 1..=exact.order().min(scheme.order()) {
        let (s, e) = (scheme.coefficient(k), exact.coefficient(k));
        let monomials: BTreeSet<Monomial> = s.monomials().chain(e.monomials()).collect();
        for m in monomials {
            out.push(MonomialResidual {
                h_power: k,
                monomial: Some(m),
                residual: s.coefficient(m) - e.coefficient(m),
            });
        }
    }
    out
}

pub fn order_report(scheme: &SchemeDescriptor, order: usize, tolerance: f64) -> Result<OrderReport> {
    order_report_with(
        scheme,
        order,
        &ReportOptions {
            tolerance,
            ..ReportOptions::default()
        },
    )
}

pub fn order_report_with(
    scheme: &SchemeDescriptor,
    order: usize,
    options: &ReportOptions,
) -> Result<OrderReport> {
    let s = scheme_jet(scheme, order, options.restriction)?;
    let e = exact_flow_jet::<f64>(order, options.restriction)?;
    Ok(OrderReport::from_residuals(
        order,
        jet_residuals(&s, &e),
        options,
        scheme.real_projection,
    ))
}

/// Report for one concrete right-hand side: the indeterminates are replaced
/// by the derivative values of `f` at the expansion point, leaving one
/// residual per h-power.
pub fn order_report_specialized(
    scheme: &SchemeDescriptor,
    order: usize,
    values: &dyn Fn(Indeterminate) -> f64,
    options: &ReportOptions,
) -> Result<OrderReport> {
    let s = scheme_jet(scheme, order, options.restriction)?;
    let e = exact_flow_jet::<f64>(order, options.restriction)?;
    let at = |x: Indeterminate| Complex64::new(values(x), 0.0);
    let (sv, ev) = (s.evaluate(&at), e.evaluate(&at));
    let residuals = (1..=order)
        .map(|k| MonomialResidual {
            h_power: k,
            monomial: None,
            residual: sv[k] - ev[k],
        })
        .collect();
    Ok(OrderReport::from_residuals(
        order,
        residuals,
        options,
        scheme.real_projection,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::lookup;

    #[test]
    fn linear_three_step_path_orders() {
        let path = lookup("complex-3-linear").unwrap();
        let scheme = SchemeDescriptor::euler(&path);
        let linear = order_report_with(
            &scheme,
            4,
            &ReportOptions {
                restriction: Restriction::Linear,
                ..ReportOptions::default()
            },
        )
        .unwrap();
        assert_eq!(linear.achieved_order, 3);
        let general = order_report(&scheme, 4, 1e-12).unwrap();
        assert_eq!(general.achieved_order, 2);
    }

    #[test]
    fn relaxed_three_step_path() {
        for name in ["complex-3-nonlinear", "complex-3-nonlinear-conj"] {
            let scheme = SchemeDescriptor::euler(&lookup(name).unwrap());
            let r = order_report(&scheme, 4, 1e-10).unwrap();
            assert_eq!(r.achieved_order, 2, "{name}");
            assert_eq!(r.achieved_order_relaxed, 3, "{name}");
        }
    }

    #[test]
    fn csv_dump_has_one_row_per_residual() {
        let scheme = SchemeDescriptor::euler(&lookup("complex-2-linear").unwrap());
        let r = order_report(&scheme, 3, 1e-12).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.residuals.len() + 1);
        assert!(text.starts_with("monomial,h_power,residual_re,residual_im"));
    }
}
