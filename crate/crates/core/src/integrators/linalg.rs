//! Complex LU factorisations for Newton corrections.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};
use num_traits::{One, Zero};

/// Jacobian `∂f/∂y`, dense (row-major) or banded.
#[derive(Debug, Clone, PartialEq)]
pub enum Jacobian<T: Real> {
    Dense { n: usize, data: Vec<Cx<T>> },
    /// Row `i` stores columns `i − lower ..= i + upper`.
    Banded {
        n: usize,
        lower: usize,
        upper: usize,
        data: Vec<Cx<T>>,
    },
}

impl<T: Real> Jacobian<T> {
    pub fn dense_zeros(n: usize) -> Self {
        Jacobian::Dense {
            n,
            data: vec![Cx::zero(); n * n],
        }
    }

    pub fn banded_zeros(n: usize, lower: usize, upper: usize) -> Self {
        Jacobian::Banded {
            n,
            lower,
            upper,
            data: vec![Cx::zero(); n * (lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Jacobian::Dense { n, .. } | Jacobian::Banded { n, .. } => *n,
        }
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        match self {
            Jacobian::Dense { n, data } => data[i * n + j],
            Jacobian::Banded {
                lower, upper, data, ..
            } => {
                if j + lower < i || j > i + upper {
                    Cx::zero()
                } else {
                    data[i * (lower + upper + 1) + (j + lower - i)]
                }
            }
        }
    }

    /// Sets entry (i, j); panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: Cx<T>) {
        match self {
            Jacobian::Dense { n, data } => data[i * *n + j] = v,
            Jacobian::Banded {
                lower, upper, data, ..
            } => {
                assert!(j + *lower >= i && j <= i + *upper, "entry outside band");
                data[i * (*lower + *upper + 1) + (j + *lower - i)] = v;
            }
        }
    }

    /// `I − s·J`.
    pub fn identity_minus(&self, s: Cx<T>) -> Jacobian<T> {
        let mut out = self.clone();
        match &mut out {
            Jacobian::Dense { data, .. } | Jacobian::Banded { data, .. } => {
                for v in data.iter_mut() {
                    *v = -*v * s;
                }
            }
        }
        for i in 0..self.dim() {
            let d = out.get(i, i);
            out.set(i, i, d + Cx::one());
        }
        out
    }

    pub fn apply(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.dim();
        let mut out = vec![Cx::zero(); n];
        match self {
            Jacobian::Dense { data, .. } => {
                for i in 0..n {
                    out[i] = (0..n).map(|j| data[i * n + j] * x[j]).fold(Cx::zero(), |a, b| a + b);
                }
            }
            Jacobian::Banded { lower, upper, .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let lo = i.saturating_sub(*lower);
                    let hi = (i + upper).min(n - 1);
                    *o = (lo..=hi).map(|j| self.get(i, j) * x[j]).fold(Cx::zero(), |a, b| a + b);
                }
            }
        }
        out
    }

    /// Solves `self · x = rhs` in place.
    pub fn solve(self, rhs: &mut [Cx<T>]) -> Result<()> {
        match self {
            Jacobian::Dense { n, data } => dense_solve(n, data, rhs),
            Jacobian::Banded {
                n,
                lower,
                upper,
                data,
            } => banded_solve(n, lower, upper, data, rhs),
        }
    }
}

fn dense_solve<T: Real>(n: usize, mut a: Vec<Cx<T>>, b: &mut [Cx<T>]) -> Result<()> {
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].norm().partial_cmp(&a[j * n + k].norm()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(k);
        if a[p * n + k].is_zero() || !a[p * n + k].norm().is_finite() {
            return Err(Error::numeric("singular Newton matrix", None));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let m = a[i * n + k] / pivot;
            if m.is_zero() {
                continue;
            }
            for j in (k + 1)..n {
                let akj = a[k * n + j];
                a[i * n + j] -= m * akj;
            }
            let bk = b[k];
            b[i] -= m * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k * n + j] * b[j];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(())
}

/// Band elimination without pivoting; the Newton matrices here are
/// `I − sJ` with diagonally dominant or definite real part.
fn banded_solve<T: Real>(
    n: usize,
    lower: usize,
    upper: usize,
    mut a: Vec<Cx<T>>,
    b: &mut [Cx<T>],
) -> Result<()> {
    let w = lower + upper + 1;
    let at = |i: usize, j: usize| i * w + (j + lower - i);
    for k in 0..n {
        let pivot = a[at(k, k)];
        if pivot.is_zero() || !pivot.norm().is_finite() {
            return Err(Error::numeric("zero pivot in banded Newton solve", None));
        }
        let last_row = (k + lower).min(n - 1);
        let last_col = (k + upper).min(n - 1);
        for i in (k + 1)..=last_row {
            let m = a[at(i, k)] / pivot;
            if m.is_zero() {
                continue;
            }
            a[at(i, k)] = Cx::zero();
            for j in (k + 1)..=last_col {
                let akj = a[at(k, j)];
                a[at(i, j)] -= m * akj;
            }
            let bk = b[k];
            b[i] -= m * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..=(k + upper).min(n - 1) {
            s -= a[at(k, j)] * b[j];
        }
        b[k] = s / a[at(k, k)];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn dense_and_banded_agree() {
        let n = 9;
        let mut band = Jacobian::<f64>::banded_zeros(n, 2, 2);
        let mut dense = Jacobian::<f64>::dense_zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                let v = Complex64::new(1.0 / (1.0 + (i + 2 * j) as f64), 0.3 * (i as f64 - j as f64));
                band.set(i, j, v);
                dense.set(i, j, v);
            }
        }
        let s = Complex64::new(0.4, 0.2);
        let (mb, md) = (band.identity_minus(s), dense.identity_minus(s));
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let rhs = md.apply(&x);
        let (mut r1, mut r2) = (rhs.clone(), rhs);
        mb.solve(&mut r1).unwrap();
        md.solve(&mut r2).unwrap();
        for i in 0..n {
            assert!((r1[i] - x[i]).norm() < 1e-12);
            assert!((r2[i] - x[i]).norm() < 1e-12);
        }
    }
}
