use super::linalg::Jacobian;
use crate::scalar::{Cx, Real};

/// Right-hand side `f(t, y)` evaluated at complex arguments.
pub trait Rhs<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, t: Cx<T>, y: &[Cx<T>], out: &mut [Cx<T>]);

    /// Analytic `∂f/∂y`, when the problem provides one.
    fn jacobian(&self, _t: Cx<T>, _y: &[Cx<T>]) -> Option<Jacobian<T>> {
        None
    }
}

/// Adapts a closure to [`Rhs`].
pub struct FnRhs<F> {
    dim: usize,
    f: F,
}

impl<F> FnRhs<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnRhs { dim, f }
    }
}

impl<T: Real, F> Rhs<T> for FnRhs<F>
where
    F: Fn(Cx<T>, &[Cx<T>], &mut [Cx<T>]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: Cx<T>, y: &[Cx<T>], out: &mut [Cx<T>]) {
        (self.f)(t, y, out)
    }
}

/// Evaluation bookkeeping shared by every stepper.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub function_evaluations: u64,
    pub newton_iterations: u64,
}

pub(crate) fn call<T: Real, R: Rhs<T> + ?Sized>(
    f: &R,
    t: Cx<T>,
    y: &[Cx<T>],
    counters: &mut Counters,
) -> Vec<Cx<T>> {
    let mut out = vec![Cx::new(T::zero(), T::zero()); y.len()];
    f.eval(t, y, &mut out);
    counters.function_evaluations += 1;
    out
}
