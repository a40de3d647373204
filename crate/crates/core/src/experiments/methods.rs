//! Name resolution for methods used by the experiment runners.

use crate::error::{Error, Result};
use crate::integrators::{MethodSpec, ReferenceMethod};
use crate::order_conditions::{
    solve_composite_rk23, CompositeCoefficients, CompositeSettings, SchemeDescriptor, SchemeKind,
};
use crate::paths::{lookup, solve_linear_path, ComplexPath, ValidityClass};
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

/// A runnable method with the order it is expected to show.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMethod {
    pub name: String,
    pub spec: MethodSpec,
    pub nominal_order: usize,
}

pub fn reference_order(m: ReferenceMethod) -> usize {
    match m {
        ReferenceMethod::RalstonRk3 => 3,
        ReferenceMethod::Midpoint | ReferenceMethod::Ssprk2 => 2,
        ReferenceMethod::Rk4 => 4,
    }
}

fn composite_cache() -> &'static Mutex<BTreeMap<u64, CompositeCoefficients>> {
    static CACHE: OnceLock<Mutex<BTreeMap<u64, CompositeCoefficients>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// Composite coefficients from the multistart solver, memoised per seed.
pub fn composite_coefficients(seed: u64) -> Result<CompositeCoefficients> {
    if let Some(c) = composite_cache().lock().expect("cache lock").get(&seed) {
        return Ok(*c);
    }
    let sol = solve_composite_rk23(&CompositeSettings {
        seed,
        ..Default::default()
    })?;
    composite_cache()
        .lock()
        .expect("cache lock")
        .insert(seed, sol.coefficients);
    Ok(sol.coefficients)
}

/// Path by library name, or `linear-N` for the canonical `N`-step linear path.
pub fn resolve_path(name: &str) -> Result<ComplexPath<f64>> {
    if let Some(n) = name.strip_prefix("linear-") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::arg(format!("bad step count in {name:?}")))?;
        return Ok(solve_linear_path(n)?.canonical().with_name(name));
    }
    lookup(name)
}

fn path_scheme(path: &ComplexPath<f64>, variant: Option<&str>) -> Result<SchemeDescriptor> {
    Ok(match variant {
        Some("euler") => SchemeDescriptor::euler(path),
        Some("implicit-midpoint") => SchemeDescriptor::implicit_midpoint(path),
        Some("backward-euler") => SchemeDescriptor::backward_euler(path),
        Some(v) => return Err(Error::arg(format!("unknown scheme variant {v:?}"))),
        None => match path.validity_class() {
            ValidityClass::ImplicitMidpoint => SchemeDescriptor::implicit_midpoint(path),
            ValidityClass::BackwardEuler => SchemeDescriptor::backward_euler(path),
            _ => SchemeDescriptor::euler(path),
        },
    })
}

/// Resolves `name` to a method.
///
/// Accepted forms: a reference method (`rk4`, `ralston-rk3`, …),
/// `composite-rk23`, a path name (`complex-3-nonlinear`, `linear-2`), or
/// `variant:path` with variant `euler`, `implicit-midpoint` or
/// `backward-euler`.
pub fn resolve_method(name: &str, seed: u64) -> Result<NamedMethod> {
    if let Some(&m) = ReferenceMethod::ALL.iter().find(|m| m.name() == name) {
        return Ok(NamedMethod {
            name: name.into(),
            spec: MethodSpec::reference(m),
            nominal_order: reference_order(m),
        });
    }
    if name == "composite-rk23" {
        let c = composite_coefficients(seed)?;
        return Ok(NamedMethod {
            name: name.into(),
            spec: MethodSpec::Scheme(SchemeDescriptor::composite(c)?),
            nominal_order: 5,
        });
    }
    let (variant, path_name) = match name.split_once(':') {
        Some((v, p)) => (Some(v), p),
        None => (None, name),
    };
    let path = resolve_path(path_name)?;
    Ok(NamedMethod {
        name: name.into(),
        spec: MethodSpec::Scheme(path_scheme(&path, variant)?),
        nominal_order: path.order_claim(),
    })
}

/// Display name and nominal order for an inline scheme.
pub fn inline_method(index: usize, spec: &MethodSpec) -> NamedMethod {
    let (label, order) = match spec {
        MethodSpec::Reference { reference } => (reference.name().to_string(), reference_order(*reference)),
        MethodSpec::Scheme(s) => match &s.kind {
            SchemeKind::EulerPath { weights } => ("euler-path".into(), weights.len()),
            SchemeKind::ImplicitMidpointPath { weights } => ("implicit-midpoint-path".into(), 2 * weights.len()),
            SchemeKind::BackwardEulerPath { weights } => ("backward-euler-path".into(), weights.len()),
            SchemeKind::CompositeRk23 { .. } => ("composite-rk23".into(), 5),
        },
    };
    NamedMethod {
        name: format!("inline-{index}-{label}"),
        spec: spec.clone(),
        nominal_order: order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_forms() {
        let m = resolve_method("implicit-midpoint-2", 0).unwrap();
        assert!(matches!(&m.spec, MethodSpec::Scheme(s) if s.is_implicit()));
        assert_eq!(m.nominal_order, 4);
        let m = resolve_method("euler:backward-euler-3", 0).unwrap();
        assert!(matches!(&m.spec, MethodSpec::Scheme(s) if !s.is_implicit()));
        assert_eq!(resolve_method("rk4", 0).unwrap().nominal_order, 4);
        assert_eq!(resolve_method("linear-2", 0).unwrap().nominal_order, 2);
        assert!(matches!(resolve_method("nope", 0), Err(Error::NotFound(_))));
        assert!(matches!(resolve_method("zig:euler-1", 0), Err(Error::Argument(_))));
    }
}
