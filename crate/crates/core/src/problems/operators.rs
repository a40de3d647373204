//! Spatial operators for the method-of-lines problems.

use crate::error::{Error, Result};
use crate::integrators::Jacobian;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Dense Fourier differentiation on `M` equispaced points of `[0, L)`.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    modes: usize,
    length: f64,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
}

impl SpectralOperator {
    pub fn new(modes: usize, length: f64) -> Result<Self> {
        if modes < 2 || !(length > 0.0) {
            return Err(Error::arg("spectral operator needs at least 2 modes and a positive length"));
        }
        let m = modes;
        let wavenumbers: Vec<(f64, bool)> = (0..m)
            .map(|j| {
                let k = if j <= (m - 1) / 2 { j as f64 } else { j as f64 - m as f64 };
                // the unpaired Nyquist mode of an even grid has no odd derivative
                let nyquist = m % 2 == 0 && j == m / 2;
                (k * 2.0 * PI / length, nyquist)
            })
            .collect();
        let mut d1 = vec![Complex64::new(0.0, 0.0); m * m];
        let mut d2 = d1.clone();
        for r in 0..m {
            for c in 0..m {
                let mut s1 = Complex64::new(0.0, 0.0);
                let mut s2 = Complex64::new(0.0, 0.0);
                for (j, &(k, nyquist)) in wavenumbers.iter().enumerate() {
                    let phase = Complex64::from_polar(1.0, 2.0 * PI * (j * ((r + m - c) % m)) as f64 / m as f64);
                    if !nyquist {
                        s1 += Complex64::new(0.0, k) * phase;
                    }
                    s2 += -k * k * phase;
                }
                d1[r * m + c] = s1 / m as f64;
                d2[r * m + c] = s2 / m as f64;
            }
        }
        Ok(SpectralOperator {
            modes,
            length,
            d1,
            d2,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.modes)
            .map(|j| self.length * j as f64 / self.modes as f64)
            .collect()
    }

    pub fn matrix(&self, order: usize) -> Result<&[Complex64]> {
        match order {
            1 => Ok(&self.d1),
            2 => Ok(&self.d2),
            _ => Err(Error::arg(format!("derivative order {order} not available"))),
        }
    }

    pub fn apply_into(&self, order: usize, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let m = self.modes;
        if u.len() != m || out.len() != m {
            return Err(Error::arg(format!(
                "state has {} entries, operator has {m} modes",
                u.len()
            )));
        }
        let d = self.matrix(order)?;
        for (r, o) in out.iter_mut().enumerate() {
            let row = &d[r * m..(r + 1) * m];
            *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }
}

pub fn spectral_derivative(op: &SpectralOperator, u: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    op.apply_into(order, u, &mut out)?;
    Ok(out)
}

/// Fourth-order second difference on the interior nodes of `(0, 1)` with
/// homogeneous Dirichlet ends closed by odd reflection.
#[derive(Debug, Clone, Copy)]
pub struct FdOperator {
    cells: usize,
    dx: f64,
}

impl FdOperator {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::arg("finite-difference grid needs at least 3 nodes"));
        }
        Ok(FdOperator {
            cells,
            dx: 1.0 / (cells + 1) as f64,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Interior node positions `i·dx`, `i = 1..=cells`.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.cells).map(|i| i as f64 * self.dx).collect()
    }

    /// Value at node `i` of the extended grid, `u_0 = u_{N+1} = 0`.
    fn at(u: &[Complex64], i: isize) -> Complex64 {
        let n = u.len() as isize;
        if i == 0 || i == n + 1 {
            Complex64::new(0.0, 0.0)
        } else if i < 0 {
            -u[(-i - 1) as usize]
        } else if i > n + 1 {
            -u[(2 * (n + 1) - i - 1) as usize]
        } else {
            u[(i - 1) as usize]
        }
    }

    pub fn apply_into(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.cells;
        if u.len() != n || out.len() != n {
            return Err(Error::arg(format!(
                "state has {} entries, operator has {n} cells",
                u.len()
            )));
        }
        let s = 1.0 / (12.0 * self.dx * self.dx);
        for (k, o) in out.iter_mut().enumerate() {
            let i = k as isize + 1;
            let v = if k >= 2 && k + 2 < n {
                -u[k - 2] + 16.0 * u[k - 1] - 30.0 * u[k] + 16.0 * u[k + 1] - u[k + 2]
            } else {
                -Self::at(u, i - 2) + 16.0 * Self::at(u, i - 1) - 30.0 * u[k]
                    + 16.0 * Self::at(u, i + 1)
                    - Self::at(u, i + 2)
            };
            *o = v * s;
        }
        Ok(())
    }

    /// The operator as a pentadiagonal matrix.
    pub fn jacobian(&self) -> Jacobian<f64> {
        let n = self.cells;
        let s = 1.0 / (12.0 * self.dx * self.dx);
        let stencil = [-1.0, 16.0, -30.0, 16.0, -1.0];
        let mut j = Jacobian::banded_zeros(n, 2, 2);
        for r in 0..n {
            for c in r.saturating_sub(2)..=(r + 2).min(n - 1) {
                j.set(r, c, Complex64::new(stencil[c + 2 - r] * s, 0.0));
            }
        }
        // odd reflection folds u_{-1} = -u_1 onto the first diagonal entry
        for r in [0, n - 1] {
            j.set(r, r, Complex64::new(-29.0 * s, 0.0));
        }
        j
    }
}

pub fn fd_laplacian(op: &FdOperator, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    op.apply_into(u, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(op: &SpectralOperator, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        op.grid().into_iter().map(f).collect()
    }

    #[test]
    fn spectral_derivatives_of_trig_modes() {
        let op = SpectralOperator::new(70, 2.0 * PI).unwrap();
        let d = spectral_derivative(&op, &samples(&op, |x| x.sin().into()), 1).unwrap();
        let c = samples(&op, |x| x.cos().into());
        assert!(d.iter().zip(&c).all(|(a, b)| (a - b).norm() < 1e-10));
        let e3 = samples(&op, |x| Complex64::from_polar(1.0, 3.0 * x));
        let d2 = spectral_derivative(&op, &e3, 2).unwrap();
        assert!(d2.iter().zip(&e3).all(|(a, b)| (a + 9.0 * b).norm() < 1e-10));
        let e1 = samples(&op, |x| Complex64::from_polar(1.0, x));
        let d1 = spectral_derivative(&op, &e1, 1).unwrap();
        assert!(d1.iter().zip(&e1).all(|(a, b)| (a - Complex64::i() * b).norm() < 1e-10));
        for order in [1, 2] {
            let k = spectral_derivative(&op, &vec![Complex64::new(2.5, 0.0); 70], order).unwrap();
            assert!(k.iter().all(|z| z.norm() < 1e-10));
        }
        assert!(spectral_derivative(&op, &[Complex64::new(0.0, 0.0); 3], 1).is_err());
    }

    #[test]
    fn first_derivative_is_anti_hermitian() {
        let op = SpectralOperator::new(32, 2.0 * PI).unwrap();
        let d = op.matrix(1).unwrap();
        let m = 32;
        let worst = (0..m)
            .map(|r| (0..m).map(|c| (d[r * m + c] + d[c * m + r].conj()).norm()).sum::<f64>())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10);
    }

    #[test]
    fn laplacian_eigenfunction_converges_at_fourth_order() {
        let err = |n: usize| {
            let op = FdOperator::new(n).unwrap();
            let u: Vec<Complex64> = op.grid().iter().map(|&x| (PI * x).sin().into()).collect();
            let l = fd_laplacian(&op, &u).unwrap();
            l.iter().zip(&u).map(|(a, b)| (a + PI * PI * b).norm()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(40), err(80));
        let slope = (e1 / e2).log2();
        assert!((slope - 4.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn laplacian_is_exact_on_low_degree_polynomials() {
        let op = FdOperator::new(50).unwrap();
        let xs = op.grid();
        let ramp: Vec<Complex64> = xs.iter().map(|&x| x.into()).collect();
        let l = fd_laplacian(&op, &ramp).unwrap();
        assert!(l[..45].iter().all(|z| z.norm() < 1e-8));
        let quartic = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let u: Vec<Complex64> = xs.iter().map(|&x| quartic(x).into()).collect();
        let l = fd_laplacian(&op, &u).unwrap();
        for k in 2..48 {
            let x = xs[k];
            let exact = 12.0 * x * x - 12.0 * x;
            assert!((l[k].re - exact).abs() < 1e-7, "{k}");
        }
    }

    #[test]
    fn banded_jacobian_matches_operator() {
        let op = FdOperator::new(12).unwrap();
        let j = op.jacobian();
        let u: Vec<Complex64> = (0..12).map(|i| Complex64::new((i as f64).sin(), 0.1 * i as f64)).collect();
        let a = j.apply(&u);
        let b = fd_laplacian(&op, &u).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-9 * y.norm().max(1.0)));
    }
}
