//! Truncated power series in the step size `h` whose coefficients are
//! polynomials in the derivative indeterminates.

use super::monomial::{Indeterminate, Monomial, MAX_DERIVATIVE};
use super::Restriction;
use crate::error::{Error, Result};
use crate::scalar::{factorial, Cx, Real};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial over the indeterminates with complex coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly<T: Real> {
    terms: BTreeMap<Monomial, Cx<T>>,
}

impl<T: Real> Poly<T> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Cx<T>) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::ONE, c);
        p
    }

    pub fn var(x: Indeterminate) -> Self {
        Poly::monomial(Monomial::var(x), Cx::one())
    }

    pub fn monomial(m: Monomial, c: Cx<T>) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: Monomial) -> Cx<T> {
        self.terms.get(&m).copied().unwrap_or_else(Cx::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Monomial, Cx<T>)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.keys().copied()
    }

    /// Adds `c·m`; exact zeros are not stored.
    pub fn add_term(&mut self, m: Monomial, c: Cx<T>) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Cx::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add_scaled(&mut self, other: &Poly<T>, s: Cx<T>) {
        if s.is_zero() {
            return;
        }
        for (m, c) in other.iter() {
            self.add_term(m, c * s);
        }
    }

    pub fn scaled(&self, s: Cx<T>) -> Poly<T> {
        let mut out = Poly::zero();
        out.add_scaled(self, s);
        out
    }

    pub fn mul(&self, other: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero();
        for (ma, ca) in self.iter() {
            for (mb, cb) in other.iter() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Drops monomials not admitted by the restriction.
    pub fn restricted(&self, r: Restriction) -> Poly<T> {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| r.admits_monomial(**m))
                .map(|(m, c)| (*m, *c))
                .collect(),
        }
    }

    /// Total time derivative along the flow, `D F_{a,b} = F_{a+1,b} + F_{00} F_{a,b+1}`.
    pub fn total_derivative(&self, r: Restriction) -> Poly<T> {
        let f00 = Monomial::var(Indeterminate::new(0, 0));
        let mut out = Poly::zero();
        for (m, c) in self.iter() {
            for (x, e) in m.factors() {
                let rest = m.without_one(x).expect("factor present");
                let ce = c * T::lit(e as f64);
                let dt = Indeterminate::new(x.t_order + 1, x.y_order);
                if r.admits(dt) {
                    out.add_term(rest.mul(Monomial::var(dt)), ce);
                }
                let dy = Indeterminate::new(x.t_order, x.y_order + 1);
                if r.admits(dy) {
                    out.add_term(rest.mul(Monomial::var(dy)).mul(f00), ce);
                }
            }
        }
        out
    }

    /// Evaluates with numeric values for the indeterminates.
    pub fn evaluate(&self, value: &dyn Fn(Indeterminate) -> Cx<T>) -> Cx<T> {
        self.iter()
            .map(|(m, c)| {
                m.factors()
                    .fold(c, |acc, (x, e)| acc * value(x).powu(e))
            })
            .fold(Cx::zero(), |a, b| a + b)
    }

    pub fn max_abs_coefficient(&self) -> T {
        self.terms
            .values()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// `Σ_{k=0}^{P} c_k h^k` with polynomial coefficients, truncated at `h^P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T: Real> {
    coeffs: Vec<Poly<T>>,
}

pub const MAX_JET_ORDER: usize = MAX_DERIVATIVE + 1;

impl<T: Real> Jet<T> {
    pub fn zero(order: usize) -> Self {
        assert!(order <= MAX_JET_ORDER, "jet order {order} exceeds {MAX_JET_ORDER}");
        Jet {
            coeffs: vec![Poly::zero(); order + 1],
        }
    }

    pub fn constant(order: usize, p: Poly<T>) -> Self {
        let mut j = Jet::zero(order);
        j.coeffs[0] = p;
        j
    }

    pub fn from_coefficients(coeffs: Vec<Poly<T>>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_JET_ORDER + 1 {
            return Err(Error::arg("jet needs between 1 and 7 coefficients"));
        }
        Ok(Jet { coeffs })
    }

    /// Truncation order `P`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, k: usize) -> &Poly<T> {
        &self.coeffs[k]
    }

    pub fn coefficients(&self) -> &[Poly<T>] {
        &self.coeffs
    }

    pub fn add_scaled(&mut self, other: &Jet<T>, s: Cx<T>) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            a.add_scaled(b, s);
        }
    }

    pub fn scaled(&self, s: Cx<T>) -> Jet<T> {
        Jet {
            coeffs: self.coeffs.iter().map(|p| p.scaled(s)).collect(),
        }
    }

    /// `s · h · self`, dropping the term shifted past `h^P`.
    pub fn times_h(&self, s: Cx<T>) -> Jet<T> {
        let p = self.order();
        let mut coeffs = vec![Poly::zero(); p + 1];
        for k in 0..p {
            coeffs[k + 1] = self.coeffs[k].scaled(s);
        }
        Jet { coeffs }
    }

    pub fn mul(&self, other: &Jet<T>) -> Jet<T> {
        let p = self.order().min(other.order());
        let mut out = Jet::zero(p);
        for i in 0..=p {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(p - i) {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                let prod = self.coeffs[i].mul(&other.coeffs[j]);
                out.coeffs[i + j].add_scaled(&prod, Cx::one());
            }
        }
        out
    }

    /// Zeroes every coefficient above `h^k`.
    pub fn truncated(&self, k: usize) -> Jet<T> {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().skip(k + 1) {
            *c = Poly::zero();
        }
        out
    }

    pub fn restricted(&self, r: Restriction) -> Jet<T> {
        Jet {
            coeffs: self.coeffs.iter().map(|p| p.restricted(r)).collect(),
        }
    }

    /// Numeric series coefficients after substituting indeterminate values.
    pub fn evaluate(&self, value: &dyn Fn(Indeterminate) -> Cx<T>) -> Vec<Cx<T>> {
        self.coeffs.iter().map(|p| p.evaluate(value)).collect()
    }

    /// Monomial count over `h^1..h^P`.
    pub fn monomial_count(&self) -> usize {
        self.coeffs.iter().skip(1).map(|p| p.len()).sum()
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn max_difference(&self, other: &Jet<T>) -> T {
        let mut d = self.clone();
        d.add_scaled(other, -Cx::<T>::one());
        d.coeffs
            .iter()
            .map(|p| p.max_abs_coefficient())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

impl<T: Real> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: &Jet<T>) -> Jet<T> {
        let mut out = self.clone();
        out.add_scaled(rhs, Cx::one());
        out
    }
}

impl<T: Real> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &Jet<T>) -> Jet<T> {
        let mut out = self.clone();
        out.add_scaled(rhs, -Cx::<T>::one());
        out
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scaled(-Cx::<T>::one())
    }
}

impl<T: Real> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &Jet<T>) -> Jet<T> {
        Jet::mul(self, rhs)
    }
}

/// Jet of `f(t_0 + c h, y_0 + Y)` for a deviation jet `Y` with zero
/// constant term, accurate through `h^{P-1}` (enough once multiplied by a
/// step `h`). Coefficient `h^P` is left zero.
pub fn rhs_jet<T: Real>(time_offset: Cx<T>, y: &Jet<T>, r: Restriction) -> Jet<T> {
    let p = y.order();
    let top = p.saturating_sub(1);
    let mut out = Jet::zero(p);
    // powers Y^b / b!, truncated at h^{P-1}
    let mut ypow = Jet::constant(p, Poly::constant(Cx::one()));
    for b in 0..=top {
        if b > 0 {
            ypow = ypow.mul(y).truncated(top).scaled(Cx::new(T::lit(b as f64).recip(), T::zero()));
        }
        for a in 0..=(top - b) {
            let x = Indeterminate::new(a, b);
            if !r.admits(x) || x.index().is_none() {
                continue;
            }
            // (c h)^a / a!
            let tc = time_offset.powu(a as u32) / factorial::<T>(a);
            if a > 0 && tc.is_zero() {
                continue;
            }
            let fx = Poly::var(x);
            for k in 0..=(top - a) {
                let src = &ypow.coeffs[k];
                if src.is_zero() {
                    continue;
                }
                let prod = src.mul(&fx);
                out.coeffs[k + a].add_scaled(&prod, tc);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_jet(rng: &mut ChaCha8Rng, order: usize) -> Jet<f64> {
        let vars = [
            Indeterminate::new(0, 0),
            Indeterminate::new(0, 1),
            Indeterminate::new(1, 0),
            Indeterminate::new(0, 2),
        ];
        let mut j = Jet::zero(order);
        for k in 0..=order {
            for _ in 0..3 {
                let mut m = Monomial::ONE;
                for _ in 0..rng.gen_range(0..3) {
                    m = m.mul(Monomial::var(vars[rng.gen_range(0..vars.len())]));
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                j.coeffs[k].add_term(m, c);
            }
        }
        j
    }

    #[test]
    fn ring_axioms_on_random_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_jet(&mut rng, 4);
            let b = random_jet(&mut rng, 4);
            let c = random_jet(&mut rng, 4);
            assert!((&a + &b).max_difference(&(&b + &a)) < 1e-14);
            assert!((&a * &b).max_difference(&(&b * &a)) < 1e-14);
            let lhs = &a * &(&b + &c);
            let rhs = &(&a * &b) + &(&a * &c);
            assert!(lhs.max_difference(&rhs) < 1e-13);
            let t = a.truncated(2);
            assert_eq!(t.truncated(2), t);
        }
    }

    #[test]
    fn multiplication_truncates() {
        let h = Jet::<f64>::from_coefficients(vec![
            Poly::zero(),
            Poly::constant(Complex64::one()),
            Poly::zero(),
        ])
        .unwrap();
        let h2 = &h * &h;
        assert_eq!(h2.coefficient(2).coefficient(Monomial::ONE), Complex64::one());
        let h3 = &h2 * &h;
        assert!(h3.coefficients().iter().all(|p| p.is_zero()));
    }
}
