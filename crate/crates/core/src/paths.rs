//! Complex step paths: representation, derivation from order conditions and
//! residual checks.
//!
//! A path is an ordered list of weights `w_i` such that stepping by `w_i Δt`
//! in turn starts and ends on the real time axis (`Σ w_i = 1`).

use crate::error::{Error, Result};
use crate::poly;
use crate::scalar::{cx, factorial, recast, Cx, Real};
use crate::solvers::{multistart_newton, NewtonSettings};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which order conditions a path was built against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidityClass {
    LinearOnly,
    Nonlinear,
    ImplicitMidpoint,
    BackwardEuler,
    ProblemSpecific,
}

impl ValidityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidityClass::LinearOnly => "linear-only",
            ValidityClass::Nonlinear => "nonlinear",
            ValidityClass::ImplicitMidpoint => "implicit-midpoint",
            ValidityClass::BackwardEuler => "backward-euler",
            ValidityClass::ProblemSpecific => "problem-specific",
        }
    }
}

pub(crate) fn tol<T: Real>(base: f64) -> T {
    T::lit(base.max(T::epsilon().to_f64_lossy() * 256.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPath<T: Real> {
    name: String,
    weights: Vec<Cx<T>>,
    order_claim: usize,
    validity_class: ValidityClass,
    requires_real_projection: bool,
}

impl<T: Real> ComplexPath<T> {
    /// Builds a path after checking closure (`Σ w = 1`) and, for the
    /// linear-only class, the claimed linear order conditions.
    pub fn new(
        weights: Vec<Cx<T>>,
        order_claim: usize,
        validity_class: ValidityClass,
        requires_real_projection: bool,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::arg("path needs at least one weight"));
        }
        if order_claim == 0 {
            return Err(Error::arg("order_claim must be at least 1"));
        }
        if weights.iter().any(|w| !crate::scalar::is_finite(*w)) {
            return Err(Error::arg("non-finite path weight"));
        }
        let total: Cx<T> = weights.iter().copied().sum();
        let close = tol::<T>(1e-12);
        if (total.re - T::one()).abs() > close || total.im.abs() > close {
            return Err(Error::arg(format!(
                "path weights sum to {total} instead of 1"
            )));
        }
        if validity_class == ValidityClass::LinearOnly {
            let e = elementary_symmetric_all(&weights);
            for k in 1..=order_claim {
                let got = e.get(k).copied().unwrap_or_else(Cx::zero);
                if (got - cx(factorial::<T>(k).recip(), T::zero())).norm() > tol::<T>(1e-10) {
                    return Err(Error::arg(format!(
                        "linear order condition e_{k} = 1/{k}! violated (e_{k} = {got})"
                    )));
                }
            }
        }
        Ok(ComplexPath {
            name: String::new(),
            weights,
            order_claim,
            validity_class,
            requires_real_projection,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weights(&self) -> &[Cx<T>] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn order_claim(&self) -> usize {
        self.order_claim
    }

    pub fn validity_class(&self) -> ValidityClass {
        self.validity_class
    }

    pub fn requires_real_projection(&self) -> bool {
        self.requires_real_projection
    }

    /// Same path with the weights reordered; `perm[i]` is the index of the
    /// old weight placed at position `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.weights.len() {
            return Err(Error::arg("permutation length mismatch"));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::arg("not a permutation"));
            }
        }
        let mut out = self.clone();
        out.weights = perm.iter().map(|&p| self.weights[p]).collect();
        Ok(out)
    }

    /// Converts the weights into another real field.
    pub fn cast<B: Real>(&self) -> ComplexPath<B> {
        ComplexPath {
            name: self.name.clone(),
            weights: self.weights.iter().map(|&w| recast(w)).collect(),
            order_claim: self.order_claim,
            validity_class: self.validity_class,
            requires_real_projection: self.requires_real_projection,
        }
    }

    /// Cumulative positions `Σ_{j≤i} w_j` starting from `0`; `len() + 1` points.
    pub fn partial_sums(&self) -> Vec<Cx<T>> {
        let mut acc = Cx::<T>::zero();
        let mut out = vec![acc];
        for &w in &self.weights {
            acc += w;
            out.push(acc);
        }
        out
    }
}

/// JSON form of a path: `{name, order_claim, validity_class,
/// requires_real_projection, weights: [[re, im], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathRecord {
    #[serde(default)]
    pub name: String,
    pub order_claim: usize,
    pub validity_class: ValidityClass,
    pub requires_real_projection: bool,
    pub weights: Vec<[f64; 2]>,
}

impl From<&ComplexPath<f64>> for PathRecord {
    fn from(p: &ComplexPath<f64>) -> Self {
        PathRecord {
            name: p.name.clone(),
            order_claim: p.order_claim,
            validity_class: p.validity_class,
            requires_real_projection: p.requires_real_projection,
            weights: p.weights.iter().map(|w| [w.re, w.im]).collect(),
        }
    }
}

impl TryFrom<PathRecord> for ComplexPath<f64> {
    type Error = Error;

    fn try_from(r: PathRecord) -> Result<Self> {
        let weights = r.weights.iter().map(|w| Complex64::new(w[0], w[1])).collect();
        Ok(ComplexPath::new(weights, r.order_claim, r.validity_class, r.requires_real_projection)?
            .with_name(r.name))
    }
}

impl ComplexPath<f64> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PathRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: PathRecord = serde_json::from_str(s)?;
        rec.try_into()
    }
}

/// All elementary symmetric polynomials `e_0..e_n` of the weights.
pub fn elementary_symmetric_all<T: Real>(weights: &[Cx<T>]) -> Vec<Cx<T>> {
    let mut e = vec![Cx::<T>::zero(); weights.len() + 1];
    e[0] = Cx::one();
    for (i, &w) in weights.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            let prev = e[k - 1];
            e[k] += w * prev;
        }
    }
    e
}

/// `e_k(weights)`; `e_0 = 1`.
pub fn elementary_symmetric<T: Real>(weights: &[Cx<T>], k: usize) -> Result<Cx<T>> {
    if k > weights.len() {
        return Err(Error::arg(format!(
            "k = {k} exceeds number of weights {}",
            weights.len()
        )));
    }
    Ok(elementary_symmetric_all(weights)[k])
}

/// `Σ_i w_i (Σ_{j<i} w_j)^2`, the cubic non-autonomous/nonlinear combination
/// that must equal `1/3` for third order on scalar equations.
pub fn cubic_nonlinear_sum<T: Real>(weights: &[Cx<T>]) -> Cx<T> {
    let mut c = Cx::<T>::zero();
    let mut s = Cx::<T>::zero();
    for &w in weights {
        s += w * c * c;
        c += w;
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResidualReport<T: Real> {
    /// `(label, residual)` per checked condition.
    pub residuals: Vec<(String, Cx<T>)>,
    pub max_abs: T,
    pub relaxed: bool,
}

impl<T: Real> PathResidualReport<T> {
    fn from_list(residuals: Vec<(String, Cx<T>)>, relaxed: bool) -> Self {
        let max_abs = residuals
            .iter()
            .map(|(_, r)| r.norm())
            .fold(T::zero(), |a, b| a.max(b));
        PathResidualReport {
            residuals,
            max_abs,
            relaxed,
        }
    }
}

fn relax<T: Real>(r: Cx<T>, k: usize, relaxed: bool) -> Cx<T> {
    if relaxed && k >= 3 {
        cx(r.re, T::zero())
    } else {
        r
    }
}

/// Linear-problem stability-function series of a path, `terms` coefficients.
pub(crate) fn linear_series<T: Real>(
    weights: &[Cx<T>],
    class: ValidityClass,
    terms: usize,
) -> Result<Vec<Cx<T>>> {
    let one = Cx::<T>::one();
    match class {
        ValidityClass::ImplicitMidpoint => {
            let half = cx(T::lit(0.5), T::zero());
            let num = poly::product_of_linear_factors(weights, half);
            let den = poly::product_of_linear_factors(weights, -half);
            poly::series_div(&num, &den, terms)
        }
        ValidityClass::BackwardEuler => {
            let den = poly::product_of_linear_factors(weights, -one);
            poly::series_div(&[one], &den, terms)
        }
        _ => {
            let mut e = elementary_symmetric_all(weights);
            e.resize(terms.max(e.len()), Cx::zero());
            e.truncate(terms);
            Ok(e)
        }
    }
}

/// Residuals of the order conditions a path is expected to satisfy.
///
/// Linear classes are checked against the exponential series through the
/// path's linear amplification factor (explicit product, backward-Euler or
/// implicit-midpoint rational). The nonlinear class uses the scalar
/// non-autonomous conditions through order 3. With `relaxed`, conditions of
/// order ≥ 3 only constrain real parts.
pub fn verify_path<T: Real>(
    path: &ComplexPath<T>,
    order: usize,
    relaxed: bool,
) -> Result<PathResidualReport<T>> {
    if order == 0 {
        return Err(Error::arg("order must be at least 1"));
    }
    let w = path.weights();
    let inv_fact = |k: usize| cx(factorial::<T>(k).recip(), T::zero());
    match path.validity_class() {
        ValidityClass::LinearOnly | ValidityClass::ImplicitMidpoint | ValidityClass::BackwardEuler => {
            let series = linear_series(w, path.validity_class(), order + 1)?;
            let list = (1..=order)
                .map(|k| (format!("phi_{k}"), relax(series[k] - inv_fact(k), k, relaxed)))
                .collect();
            Ok(PathResidualReport::from_list(list, relaxed))
        }
        ValidityClass::Nonlinear => {
            if order > 3 {
                return Err(Error::Capability(format!(
                    "nonlinear path conditions are available through order 3, requested {order}"
                )));
            }
            let e = elementary_symmetric_all(w);
            let ek = |k: usize| e.get(k).copied().unwrap_or_else(Cx::zero);
            let mut list = vec![("e_1".to_string(), ek(1) - inv_fact(1))];
            if order >= 2 {
                list.push(("e_2".into(), ek(2) - inv_fact(2)));
            }
            if order >= 3 {
                list.push(("e_3".into(), relax(ek(3) - inv_fact(3), 3, relaxed)));
                let third = cx(T::one() / T::lit(3.0), T::zero());
                list.push((
                    "cubic".into(),
                    relax(cubic_nonlinear_sum(w) - third, 3, relaxed),
                ));
            }
            Ok(PathResidualReport::from_list(list, relaxed))
        }
        ValidityClass::ProblemSpecific => Err(Error::Capability(
            "problem-specific paths are verified against their own targets".into(),
        )),
    }
}

/// The `n!` orderings of the roots of `Σ (−1)^k z^{n−k}/k!`.
#[derive(Debug, Clone)]
pub struct LinearPathFamily {
    roots: Vec<Complex64>,
    ranks: Vec<usize>,
}

impl LinearPathFamily {
    /// Weight multiset, sorted by `(re, im)`.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn order(&self) -> usize {
        self.roots.len()
    }

    /// Number of distinct orderings.
    pub fn len(&self) -> usize {
        let n = self.roots.len();
        let mut count: u128 = (1..=n as u128).product();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && self.ranks[j] == self.ranks[i] {
                j += 1;
            }
            let m = (j - i) as u128;
            count /= (1..=m).product::<u128>();
            i = j;
        }
        count as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// First ordering in canonical (lexicographic `(re, im)`) order.
    pub fn canonical(&self) -> ComplexPath<f64> {
        self.make(self.roots.clone())
    }

    /// Distinct orderings in canonical order, generated lazily.
    pub fn iter(&self) -> impl Iterator<Item = ComplexPath<f64>> + '_ {
        let mut idx: Option<Vec<usize>> = Some((0..self.roots.len()).collect());
        std::iter::from_fn(move || {
            let cur = idx.take()?;
            let out = self.make(cur.iter().map(|&i| self.roots[i]).collect());
            idx = next_permutation(cur, &self.ranks);
            Some(out)
        })
    }

    pub fn to_vec(&self) -> Vec<ComplexPath<f64>> {
        self.iter().collect()
    }

    fn make(&self, weights: Vec<Complex64>) -> ComplexPath<f64> {
        let n = weights.len();
        ComplexPath {
            name: format!("complex-{n}-linear"),
            weights,
            order_claim: n,
            validity_class: ValidityClass::LinearOnly,
            requires_real_projection: false,
        }
    }
}

// Next multiset permutation by rank; positions holding equal ranks are
// interchangeable, so duplicates are skipped.
fn next_permutation(mut idx: Vec<usize>, ranks: &[usize]) -> Option<Vec<usize>> {
    let r = |i: usize| ranks[i];
    let n = idx.len();
    if n < 2 {
        return None;
    }
    let mut i = n - 1;
    while i > 0 && r(idx[i - 1]) >= r(idx[i]) {
        i -= 1;
    }
    if i == 0 {
        return None;
    }
    let mut j = n - 1;
    while r(idx[j]) <= r(idx[i - 1]) {
        j -= 1;
    }
    idx.swap(i - 1, j);
    idx[i..].reverse();
    Some(idx)
}

/// Solves the `n`-step linear order conditions `e_k = 1/k!`, `k = 1..n`.
///
/// The weights are the roots of the monic polynomial with coefficient
/// `(−1)^k/k!` on `z^{n−k}`, found from the companion matrix.
pub fn solve_linear_path(n: usize) -> Result<LinearPathFamily> {
    if !(1..=12).contains(&n) {
        return Err(Error::arg(format!("n = {n} outside 1..=12")));
    }
    let coeffs: Vec<Complex64> = (1..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign / factorial::<f64>(k), 0.0)
        })
        .collect();
    let roots = poly::monic_roots(&coeffs)?;
    let mut ranks = vec![0; n];
    for i in 1..n {
        ranks[i] = if (roots[i] - roots[i - 1]).norm() <= 1e-12 {
            ranks[i - 1]
        } else {
            ranks[i - 1] + 1
        };
    }
    let fam = LinearPathFamily { roots, ranks };
    let e = elementary_symmetric_all(fam.roots());
    for (k, ek) in e.iter().enumerate().skip(1) {
        let target = 1.0 / factorial::<f64>(k);
        if (ek - target).norm() > 1e-10 {
            return Err(Error::numeric(
                format!("linear path n = {n}: e_{k} residual {:e}", (ek - target).norm()),
                Some((ek - target).norm()),
            ));
        }
    }
    Ok(fam)
}

fn weights_from_reals(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = poly::cmp_re_im(x, y);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn push_distinct(found: &mut Vec<Vec<Complex64>>, w: Vec<Complex64>, tol: f64) {
    let dup = found.iter().any(|f| {
        f.iter()
            .zip(&w)
            .all(|(a, b)| (a.re - b.re).abs() <= tol && (a.im - b.im).abs() <= tol)
    });
    if !dup {
        found.push(w);
    }
}

/// Deduplication tolerance for solver output, componentwise.
pub const DEDUP_TOLERANCE: f64 = 1e-6;

/// Three-step paths satisfying the relaxed third-order nonlinear conditions
/// (`e_1 = 1`, `e_2 = 1/2` exactly, real parts of `e_3 = 1/6` and of the
/// cubic combination `= 1/3`).
///
/// Combines the linear orderings that already pass with a multi-start damped
/// Newton search over the six real unknowns. Output is sorted canonically.
pub fn solve_relaxed_path3(settings: &NewtonSettings) -> Result<Vec<ComplexPath<f64>>> {
    let mut found: Vec<Vec<Complex64>> = Vec::new();
    for p in solve_linear_path(3)?.iter() {
        let mut p = p;
        p.validity_class = ValidityClass::Nonlinear;
        if verify_path(&p, 3, true)?.max_abs < 1e-8 {
            push_distinct(&mut found, p.weights.clone(), DEDUP_TOLERANCE);
        }
    }
    let residual = |x: &[f64]| -> Vec<f64> {
        let w = weights_from_reals(x);
        let e = elementary_symmetric_all(&w);
        let s = cubic_nonlinear_sum(&w);
        vec![
            e[1].re - 1.0,
            e[1].im,
            e[2].re - 0.5,
            e[2].im,
            e[3].re - 1.0 / 6.0,
            s.re - 1.0 / 3.0,
        ]
    };
    for x in multistart_newton(&residual, 6, settings, DEDUP_TOLERANCE) {
        push_distinct(&mut found, weights_from_reals(&x), DEDUP_TOLERANCE);
    }
    if found.is_empty() {
        return Err(Error::numeric("no relaxed 3-step path found", None));
    }
    found.sort_by(|a, b| lexicographic(a, b));
    found
        .into_iter()
        .map(|w| ComplexPath::new(w, 3, ValidityClass::Nonlinear, true))
        .collect()
}

/// Two-step paths whose expansion on a quadratic right-hand side matches
/// the given normalised targets.
///
/// For `f = −y^2`, two Euler substeps give
/// `y_2 = y_0 − (w_1+w_2) y_0^2 Δt + 2 w_1 w_2 y_0^3 Δt^2 − w_1^2 w_2 y_0^4 Δt^3`;
/// `targets[k-1]` is the required value of the `k`-th normalised coefficient
/// (`w_1+w_2`, `2 w_1 w_2`, `w_1^2 w_2`). The first target is imposed exactly
/// by setting `w_2 = c_1 − w_1`; with `relaxed`, the remaining ones only fix
/// real parts.
pub fn solve_problem_specific_path(
    targets: &[Complex64],
    relaxed: bool,
    settings: &NewtonSettings,
) -> Result<Vec<ComplexPath<f64>>> {
    if targets.is_empty() || targets.len() > 3 {
        return Err(Error::arg("expected 1 to 3 expansion targets"));
    }
    let c1 = targets[0];
    if (c1 - Complex64::one()).norm() > 1e-12 {
        return Err(Error::arg("first target must be 1 for a closed path"));
    }
    let order = targets.len();
    let residual = |x: &[f64]| -> Vec<f64> {
        let w1 = Complex64::new(x[0], x[1]);
        let w2 = c1 - w1;
        let coeffs = [w1 + w2, 2.0 * w1 * w2, w1 * w1 * w2];
        let mut r = Vec::new();
        for k in 1..order {
            let d = coeffs[k] - targets[k];
            r.push(d.re);
            if !relaxed {
                r.push(d.im);
            }
        }
        if r.is_empty() {
            // first-order only: any w1 works; pin the real-step solution
            r = vec![x[0] - 1.0, x[1]];
        }
        r
    };
    let sols = multistart_newton(&residual, 2, settings, DEDUP_TOLERANCE);
    if sols.is_empty() {
        return Err(Error::numeric(
            "no problem-specific 2-step path within the restart budget",
            None,
        ));
    }
    let mut ws: Vec<Vec<Complex64>> = sols
        .into_iter()
        .map(|x| {
            let w1 = Complex64::new(x[0], x[1]);
            vec![w1, c1 - w1]
        })
        .collect();
    ws.sort_by(|a, b| lexicographic(a, b));
    ws.into_iter()
        .map(|w| ComplexPath::new(w, order, ValidityClass::ProblemSpecific, relaxed && order > 1))
        .collect()
}

/// Named library of ready-made paths.
pub fn library() -> Result<BTreeMap<String, ComplexPath<f64>>> {
    let mut lib = BTreeMap::new();
    let mut add = |name: &str, p: ComplexPath<f64>| {
        lib.insert(name.to_string(), p.with_name(name));
    };
    let c = Complex64::new;

    add("euler-1", ComplexPath::new(vec![c(1.0, 0.0)], 1, ValidityClass::Nonlinear, false)?);
    add(
        "complex-2-linear",
        ComplexPath::new(vec![c(0.5, 0.5), c(0.5, -0.5)], 2, ValidityClass::LinearOnly, false)?,
    );

    let fam3 = solve_linear_path(3)?;
    let canonical = fam3.canonical();
    add("complex-3-linear", canonical.clone());

    // roots sorted by (re, im): [conj(a), a, b] with b real
    let r = fam3.roots();
    let (a_conj, a, b) = (r[0], r[1], r[2]);
    add(
        "complex-3-nonlinear",
        ComplexPath::new(vec![a, b, a_conj], 3, ValidityClass::Nonlinear, true)?,
    );
    add(
        "complex-3-nonlinear-conj",
        ComplexPath::new(vec![a_conj, b, a], 3, ValidityClass::Nonlinear, true)?,
    );

    let s = 0.5 / 3f64.sqrt();
    add(
        "implicit-midpoint-2",
        ComplexPath::new(vec![c(0.5, s), c(0.5, -s)], 4, ValidityClass::ImplicitMidpoint, true)?,
    );
    add(
        "backward-euler-3",
        ComplexPath::new(canonical.weights.clone(), 3, ValidityClass::BackwardEuler, false)?,
    );
    let q = 0.5f64.sqrt();
    add(
        "problem-y2-2step",
        ComplexPath::new(vec![c(1.0, -q), c(0.0, q)], 3, ValidityClass::ProblemSpecific, true)?,
    );
    Ok(lib)
}

pub fn lookup(name: &str) -> Result<ComplexPath<f64>> {
    library()?
        .remove(name)
        .ok_or_else(|| Error::NotFound(format!("path '{name}'")))
}
