//! Dense univariate polynomial helpers and companion-matrix root finding.
//!
//! Coefficient vectors are stored lowest degree first: `c[k]` multiplies `z^k`.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::cmp::Ordering;

/// Horner evaluation.
pub fn eval<T: Real>(coeffs: &[Cx<T>], z: Cx<T>) -> Cx<T> {
    coeffs
        .iter()
        .rev()
        .fold(Cx::<T>::zero(), |acc, &c| acc * z + c)
}

pub fn mul<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Vec<Cx<T>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Cx::<T>::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `∏ (1 + s·w_i z)`, i.e. coefficients `s^k e_k(w)`.
pub fn product_of_linear_factors<T: Real>(weights: &[Cx<T>], scale: Cx<T>) -> Vec<Cx<T>> {
    let mut out = vec![Cx::<T>::one()];
    for &w in weights {
        out = mul(&out, &[Cx::<T>::one(), scale * w]);
    }
    out
}

/// Power-series quotient `num / den` truncated to `terms` coefficients.
/// Requires `den[0] != 0`.
pub fn series_div<T: Real>(num: &[Cx<T>], den: &[Cx<T>], terms: usize) -> Result<Vec<Cx<T>>> {
    let d0 = *den
        .first()
        .ok_or_else(|| Error::arg("empty denominator series"))?;
    if d0.norm() == T::zero() {
        return Err(Error::arg("denominator series has zero constant term"));
    }
    let mut q = vec![Cx::<T>::zero(); terms];
    for k in 0..terms {
        let mut acc = num.get(k).copied().unwrap_or_else(Cx::<T>::zero);
        for j in 1..=k.min(den.len().saturating_sub(1)) {
            acc -= den[j] * q[k - j];
        }
        q[k] = acc / d0;
    }
    Ok(q)
}

/// Lexicographic `(re, im)` ordering used for canonical outputs.
pub fn cmp_re_im(a: &Complex64, b: &Complex64) -> Ordering {
    a.re
        .partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// Roots of the monic polynomial `z^n + a[0] z^{n-1} + … + a[n-1]`.
///
/// Eigenvalues of the companion matrix (complex Schur form), each polished
/// with a few Newton steps on the polynomial itself. When every coefficient
/// is real the result is symmetrised so that the multiset is exactly closed
/// under conjugation. Roots are returned sorted by `(re, im)`.
pub fn monic_roots(a: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::arg("non-finite polynomial coefficient"));
    }
    let mut roots: Vec<Complex64> = if n == 1 {
        vec![-a[0]]
    } else {
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            m[(0, j)] = -a[j];
        }
        for i in 1..n {
            m[(i, i - 1)] = Complex64::one();
        }
        let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 10_000).ok_or_else(|| {
            Error::numeric(
                format!("companion Schur iteration did not converge (degree {n})"),
                None,
            )
        })?;
        schur.eigenvalues().map(|v| v.iter().copied().collect()).ok_or_else(|| {
            Error::numeric(format!("companion eigenvalues unavailable (degree {n})"), None)
        })?
    };

    // p(z) with descending monic coefficients → ascending vector
    let mut asc: Vec<Complex64> = a.iter().rev().copied().collect();
    asc.push(Complex64::one());
    let dasc: Vec<Complex64> = asc
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let p = eval(&asc, *r);
            let dp = eval(&dasc, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let cand = *r - step;
            if eval(&asc, cand).norm() <= p.norm() {
                *r = cand;
            } else {
                break;
            }
            if step.norm() <= f64::EPSILON * r.norm().max(1.0) {
                break;
            }
        }
    }
    for r in &roots {
        let resid = eval(&asc, *r).norm();
        let scale = asc.iter().map(|c| c.norm()).fold(0.0, f64::max) * r.norm().max(1.0).powi(n as i32);
        if !resid.is_finite() || resid > 1e-8 * scale.max(1.0) {
            return Err(Error::numeric(
                format!("root {r} failed polish: |p(r)| = {resid:e}"),
                Some(resid),
            ));
        }
    }

    if a.iter().all(|c| c.im == 0.0) {
        symmetrize_conjugates(&mut roots);
    }
    roots.sort_by(cmp_re_im);
    Ok(roots)
}

fn symmetrize_conjugates(roots: &mut [Complex64]) {
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let snap = 1e-10 * scale;
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if roots[i].im.abs() <= snap {
            roots[i].im = 0.0;
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&j, &k| {
                (roots[j] - target)
                    .norm()
                    .partial_cmp(&(roots[k] - target).norm())
                    .unwrap_or(Ordering::Equal)
            });
        if let Some(j) = partner {
            if (roots[j] - target).norm() <= 1e-6 * scale {
                used[j] = true;
                let re = 0.5 * (roots[i].re + roots[j].re);
                let im = 0.5 * (roots[i].im.abs() + roots[j].im.abs());
                let (si, sj) = if roots[i].im > 0.0 { (1.0, -1.0) } else { (-1.0, 1.0) };
                roots[i] = Complex64::new(re, si * im);
                roots[j] = Complex64::new(re, sj * im);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_roots() {
        // z^2 - z + 1/2 → 1/2 ± i/2
        let r = monic_roots(&[Complex64::new(-1.0, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - Complex64::new(0.5, -0.5)).norm() < 1e-15);
        assert!((r[1] - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        assert_eq!(r[0], r[1].conj());
    }

    #[test]
    fn complex_coefficient_roots() {
        let want = [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25), Complex64::new(0.0, -1.0)];
        let asc = product_of_linear_factors(&want, Complex64::new(-1.0, 0.0));
        // ∏(1 - r z) reversed gives the monic polynomial with roots r
        let desc: Vec<Complex64> = asc[1..].to_vec();
        let got = monic_roots(&desc).unwrap();
        for w in want {
            assert!(got.iter().any(|g| (g - w).norm() < 1e-12), "{w} missing in {got:?}");
        }
    }

    #[test]
    fn series_division_of_geometric() {
        let one = Complex64::one();
        let q = series_div(&[one], &[one, -one], 5).unwrap();
        assert!(q.iter().all(|c| (c - one).norm() < 1e-15));
        assert!(series_div::<f64>(&[one], &[Complex64::zero()], 3).is_err());
    }
}
