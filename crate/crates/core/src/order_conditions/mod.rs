//! Order conditions for scalar right-hand sides `f(t, y)`, computed by
//! expanding schemes and the exact flow as jets in the step size.

pub mod composite;
pub mod jet;
pub mod monomial;
pub mod report;
pub mod scheme;

pub use composite::{solve_composite_rk23, CompositeSettings, CompositeSolution};
pub use jet::{rhs_jet, Jet, Poly};
pub use monomial::{Indeterminate, Monomial};
pub use report::{order_report, order_report_with, MonomialResidual, OrderReport, ReportOptions};
pub use scheme::{scheme_jet, scheme_jet_with_picard_limit, CompositeCoefficients, SchemeDescriptor, SchemeKind};

use crate::error::{Error, Result};
use crate::scalar::{factorial, Cx, Real};
use num_traits::One;
use serde::{Deserialize, Serialize};

/// Which derivative indeterminates are allowed to be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Restriction {
    /// Every `F_{a,b}`.
    #[default]
    General,
    /// No explicit time dependence: `F_{a,b} = 0` for `a > 0`.
    Autonomous,
    /// `f = λ y`: only `F_00` and `F_01` survive.
    Linear,
}

impl Restriction {
    pub fn admits(self, x: Indeterminate) -> bool {
        if x.index().is_none() {
            return false;
        }
        match self {
            Restriction::General => true,
            Restriction::Autonomous => x.t_order == 0,
            Restriction::Linear => x.t_order == 0 && x.y_order <= 1,
        }
    }

    pub fn admits_monomial(self, m: Monomial) -> bool {
        m.factors().all(|(x, _)| self.admits(x))
    }
}

/// Jet of `y(t_0 + h) − y_0` through `h^P`.
pub fn exact_flow_jet<T: Real>(order: usize, restriction: Restriction) -> Result<Jet<T>> {
    if !(2..=jet::MAX_JET_ORDER).contains(&order) {
        return Err(Error::arg(format!(
            "exact flow order must lie in 2..={}, got {order}",
            jet::MAX_JET_ORDER
        )));
    }
    let mut coeffs = vec![Poly::zero(); order + 1];
    let mut derivative = Poly::var(Indeterminate::new(0, 0));
    for (k, slot) in coeffs.iter_mut().enumerate().skip(1) {
        if k > 1 {
            derivative = derivative.total_derivative(restriction);
        }
        *slot = derivative.scaled(Cx::<T>::one() / factorial::<T>(k));
    }
    Jet::from_coefficients(coeffs)
}
