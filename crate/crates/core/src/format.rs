//! JSON distribution specs and the built-in families.
//!
//! A distribution is one of
//!
//! ```json
//! {"atoms": [[-1, 0.5], [1, 0.5]]}
//! {"lattice": {"offset": 0, "step": 1, "weights": [0.25, 0.5, 0.25]}}
//! {"family": "two_point", "params": {"a": 1}}
//! {"mixture": {"p": 0.3, "u": {...}, "v": {...}}}
//! ```
//!
//! Parsing is strict: unknown keys are errors and every error names the
//! offending field. Families can also be written as call expressions such
//! as `two_point(1)` or `zero_mean_three_point(0.25, 2)`.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::lattice::LatticeDist;
use crate::measure::{DiscreteDist, MixtureSpec};

/// A parsed distribution in whichever carrier it was given.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Discrete(DiscreteDist),
    Lattice(LatticeDist),
    Mixture(MixtureSpec),
}

impl DistSpec {
    pub fn to_discrete(&self) -> DiscreteDist {
        match self {
            DistSpec::Discrete(d) => d.clone(),
            DistSpec::Lattice(l) => l.to_discrete(),
            DistSpec::Mixture(m) => m.mixed(),
        }
    }

    /// A mixture decomposition of this law. Plain laws become `U` with `p = 0`,
    /// or the lazy law `(1-p)U + pδ₀` when `p` is given.
    pub fn to_mixture(&self, p: Option<f64>) -> Result<MixtureSpec> {
        match (self, p) {
            (DistSpec::Mixture(m), None) => Ok(m.clone()),
            (DistSpec::Mixture(m), Some(p)) => {
                MixtureSpec::new(p, m.u().clone(), m.v().clone())
            }
            (other, p) => {
                MixtureSpec::new(p.unwrap_or(0.0), other.to_discrete(), DiscreteDist::point(0.0))
            }
        }
    }
}

/// Parameter names of each family, in positional order.
pub const FAMILIES: [(&str, &[&str]); 5] = [
    ("two_point", &["a"]),
    ("fair_coin", &[]),
    ("uniform_lattice", &["m", "h"]),
    ("counterexample", &["n"]),
    ("zero_mean_three_point", &["p", "a"]),
];

/// Builds a named family.
///
/// * `two_point(a)`: `½δ₋ₐ + ½δₐ`
/// * `fair_coin`: `two_point(1)`
/// * `uniform_lattice(m, h)`: uniform on `m` centered points spaced `h`
/// * `counterexample(n)`: `½δ₋ₙ + ½δₙ`
/// * `zero_mean_three_point(p, a)`: `(1-p)δ₀ + (p/2)(δ₋ₐ + δₐ)`
pub fn family(name: &str, params: &BTreeMap<String, f64>) -> Result<DistSpec> {
    let names = FAMILIES
        .iter()
        .find(|(f, _)| *f == name)
        .map(|(_, p)| *p)
        .ok_or_else(|| Error::Parse(format!("unknown family `{name}`")))?;
    if let Some(extra) = params.keys().find(|k| !names.contains(&k.as_str())) {
        return Err(Error::Parse(format!("family `{name}` has no parameter `{extra}`")));
    }
    let get = |key: &str| -> Result<f64> {
        params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parse(format!("family `{name}` needs parameter `{key}`")))
    };
    let positive = |key: &str| -> Result<f64> {
        let v = get(key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::param(key, format!("must be positive, got {v}")))
        }
    };
    let dist = match name {
        "two_point" => DistSpec::Discrete(DiscreteDist::two_point(positive("a")?)?),
        "fair_coin" => DistSpec::Discrete(DiscreteDist::two_point(1.0)?),
        "uniform_lattice" => {
            let m = positive("m")?;
            if m.fract() != 0.0 {
                return Err(Error::param("m", "must be an integer"));
            }
            let h = positive("h")?;
            let count = m as usize;
            let offset = -0.5 * (count - 1) as f64 * h;
            DistSpec::Lattice(LatticeDist::new(offset, h, vec![1.0 / m; count])?)
        }
        "counterexample" => DistSpec::Discrete(DiscreteDist::two_point(positive("n")?)?),
        "zero_mean_three_point" => {
            let p = get("p")?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::param("p", format!("must lie in (0, 1], got {p}")));
            }
            let a = positive("a")?;
            DistSpec::Discrete(DiscreteDist::new(vec![
                (-a, 0.5 * p),
                (0.0, 1.0 - p),
                (a, 0.5 * p),
            ])?)
        }
        _ => unreachable!(),
    };
    Ok(dist)
}

/// Parses `name` or `name(v1, v2, …)` with positional family parameters.
pub fn parse_family_expr(expr: &str) -> Result<DistSpec> {
    let expr = expr.trim();
    let (name, args) = match expr.find('(') {
        Some(open) => {
            let close = expr
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("`{expr}`: missing closing parenthesis")))?;
            (&expr[..open], &close[open + 1..])
        }
        None => (expr, ""),
    };
    let names = FAMILIES
        .iter()
        .find(|(f, _)| *f == name)
        .map(|(_, p)| *p)
        .ok_or_else(|| Error::Parse(format!("unknown distribution `{name}`")))?;
    let values: Vec<&str> = args.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if values.len() != names.len() {
        return Err(Error::Parse(format!(
            "family `{name}` takes {} parameter(s) ({}), got {}",
            names.len(),
            names.join(", "),
            values.len()
        )));
    }
    let mut params = BTreeMap::new();
    for (key, raw) in names.iter().zip(values) {
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::Parse(format!("family `{name}`, parameter `{key}`: bad number `{raw}`")))?;
        params.insert(key.to_string(), v);
    }
    family(name, &params)
}

pub fn parse_dist_json(text: &str) -> Result<DistSpec> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    parse_dist_value(&value, "distribution")
}

/// Parses one distribution object; `path` names it in error messages.
pub fn parse_dist_value(value: &Value, path: &str) -> Result<DistSpec> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse(format!("`{path}`: expected an object")))?;
    let kind = ["atoms", "lattice", "family", "mixture"]
        .into_iter()
        .find(|k| obj.contains_key(*k))
        .ok_or_else(|| {
            Error::Parse(format!(
                "`{path}`: expected one of `atoms`, `lattice`, `family`, `mixture`"
            ))
        })?;
    let allowed: &[&str] = if kind == "family" { &["family", "params"] } else { &[kind] };
    check_keys(obj, allowed, path)?;
    let field = |k: &str| format!("{path}.{k}");
    match kind {
        "atoms" => {
            let list = obj["atoms"]
                .as_array()
                .ok_or_else(|| Error::Parse(format!("`{}`: expected an array", field("atoms"))))?;
            let mut atoms = Vec::with_capacity(list.len());
            for (i, pair) in list.iter().enumerate() {
                let at = format!("{}[{i}]", field("atoms"));
                let pair = pair
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| Error::Parse(format!("`{at}`: expected [position, mass]")))?;
                atoms.push((number(&pair[0], &at)?, number(&pair[1], &at)?));
            }
            DiscreteDist::new(atoms)
                .map(DistSpec::Discrete)
                .map_err(|e| Error::Parse(format!("`{}`: {e}", field("atoms"))))
        }
        "lattice" => {
            let path = field("lattice");
            let inner = obj["lattice"]
                .as_object()
                .ok_or_else(|| Error::Parse(format!("`{path}`: expected an object")))?;
            check_keys(inner, &["offset", "step", "weights"], &path)?;
            let get = |k: &str| {
                inner
                    .get(k)
                    .ok_or_else(|| Error::Parse(format!("`{path}`: missing `{k}`")))
            };
            let offset = number(get("offset")?, &format!("{path}.offset"))?;
            let step = number(get("step")?, &format!("{path}.step"))?;
            let weights = get("weights")?
                .as_array()
                .ok_or_else(|| Error::Parse(format!("`{path}.weights`: expected an array")))?
                .iter()
                .enumerate()
                .map(|(i, w)| number(w, &format!("{path}.weights[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            LatticeDist::new(offset, step, weights)
                .map(DistSpec::Lattice)
                .map_err(|e| Error::Parse(format!("`{path}`: {e}")))
        }
        "family" => {
            let name = obj["family"]
                .as_str()
                .ok_or_else(|| Error::Parse(format!("`{}`: expected a string", field("family"))))?;
            let mut params = BTreeMap::new();
            if let Some(raw) = obj.get("params") {
                let raw = raw.as_object().ok_or_else(|| {
                    Error::Parse(format!("`{}`: expected an object", field("params")))
                })?;
                for (k, v) in raw {
                    params.insert(k.clone(), number(v, &format!("{}.{k}", field("params")))?);
                }
            }
            family(name, &params).map_err(|e| Error::Parse(format!("`{path}`: {e}")))
        }
        "mixture" => {
            let path = field("mixture");
            let inner = obj["mixture"]
                .as_object()
                .ok_or_else(|| Error::Parse(format!("`{path}`: expected an object")))?;
            check_keys(inner, &["p", "u", "v"], &path)?;
            let get = |k: &str| {
                inner
                    .get(k)
                    .ok_or_else(|| Error::Parse(format!("`{path}`: missing `{k}`")))
            };
            let p = number(get("p")?, &format!("{path}.p"))?;
            let u = parse_dist_value(get("u")?, &format!("{path}.u"))?.to_discrete();
            let v = parse_dist_value(get("v")?, &format!("{path}.v"))?.to_discrete();
            MixtureSpec::new(p, u, v)
                .map(DistSpec::Mixture)
                .map_err(|e| Error::Parse(format!("`{path}`: {e}")))
        }
        _ => unreachable!(),
    }
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::Parse(format!("`{path}`: unknown key `{k}`"))),
        None => Ok(()),
    }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Parse(format!("`{path}`: expected a number")))
}

/// `{"atoms": [[x, m], …]}`, the form accepted back by [`parse_dist_json`].
pub fn dist_to_json(d: &DiscreteDist) -> Value {
    json!({ "atoms": d.atoms().iter().map(|&(x, m)| json!([x, m])).collect::<Vec<_>>() })
}
