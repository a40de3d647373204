//! Monomials over the derivative indeterminates `F_{a,b} = ∂^{a+b} f / ∂t^a ∂y^b`
//! evaluated at the expansion point, packed into a `u64` with three bits of
//! exponent per indeterminate.

use std::fmt;

/// Largest supported `a + b`.
pub const MAX_DERIVATIVE: usize = 5;
/// Number of indeterminates with `a + b ≤ MAX_DERIVATIVE`.
pub const N_INDETERMINATES: usize = (MAX_DERIVATIVE + 1) * (MAX_DERIVATIVE + 2) / 2;

const BITS: u32 = 3;
const MASK: u64 = (1 << BITS) - 1;
const CARRY_BITS: u64 = {
    let mut m = 0u64;
    let mut i = 1;
    while i <= N_INDETERMINATES {
        m |= 1 << (BITS as usize * i);
        i += 1;
    }
    m
};

/// `F_{a,b}`: `a` time derivatives, `b` state derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Indeterminate {
    pub t_order: usize,
    pub y_order: usize,
}

impl Indeterminate {
    pub const fn new(t_order: usize, y_order: usize) -> Self {
        Indeterminate { t_order, y_order }
    }

    pub fn index(self) -> Option<usize> {
        let d = self.t_order + self.y_order;
        (d <= MAX_DERIVATIVE).then(|| d * (d + 1) / 2 + self.t_order)
    }

    pub fn from_index(i: usize) -> Self {
        let mut d = 0;
        while (d + 1) * (d + 2) / 2 <= i {
            d += 1;
        }
        let a = i - d * (d + 1) / 2;
        Indeterminate::new(a, d - a)
    }

    /// Contribution to the h-power of any monomial containing it.
    pub fn weight(self) -> usize {
        1 + self.t_order
    }
}

impl fmt::Display for Indeterminate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}{}", self.t_order, self.y_order)
    }
}

/// Product of indeterminates with multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(u64);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn var(x: Indeterminate) -> Self {
        let i = x.index().expect("indeterminate within supported derivative order");
        Monomial(1 << (BITS * i as u32))
    }

    pub fn exponent(self, x: Indeterminate) -> u32 {
        x.index()
            .map(|i| ((self.0 >> (BITS * i as u32)) & MASK) as u32)
            .unwrap_or(0)
    }

    /// `(indeterminate, exponent)` pairs with nonzero exponent.
    pub fn factors(self) -> impl Iterator<Item = (Indeterminate, u32)> {
        (0..N_INDETERMINATES).filter_map(move |i| {
            let e = ((self.0 >> (BITS * i as u32)) & MASK) as u32;
            (e > 0).then(|| (Indeterminate::from_index(i), e))
        })
    }

    /// Product; panics on exponent overflow (more than 7 of one factor).
    pub fn mul(self, other: Monomial) -> Monomial {
        let sum = self.0 + other.0;
        // a carry into the lowest bit of a field means the field below overflowed
        assert!(
            (self.0 ^ other.0 ^ sum) & CARRY_BITS == 0,
            "monomial exponent overflow"
        );
        Monomial(sum)
    }

    /// Divides out one factor of `x`, if present.
    pub fn without_one(self, x: Indeterminate) -> Option<Monomial> {
        (self.exponent(x) > 0).then(|| Monomial(self.0 - Monomial::var(x).0))
    }

    pub fn degree(self) -> u32 {
        self.factors().map(|(_, e)| e).sum()
    }

    /// Sum of factor weights, equal to the h-power at which the monomial
    /// appears in a flow expansion.
    pub fn weight(self) -> usize {
        self.factors().map(|(x, e)| x.weight() * e as usize).sum()
    }

    pub fn contains_time_derivative(self) -> bool {
        self.factors().any(|(x, _)| x.t_order > 0)
    }

    pub fn is_linear_shape(self) -> bool {
        self.factors()
            .all(|(x, _)| x.t_order == 0 && x.y_order <= 1)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, e) in self.factors() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{x}")?;
            } else {
                write!(f, "{x}^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}
