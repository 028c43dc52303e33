//! Scenario files: named distributions plus a list of runs.
//!
//! ```json
//! {
//!   "distributions": {
//!     "coin": {"family": "fair_coin"},
//!     "lazy": {"mixture": {"p": 0.3, "u": {"family": "fair_coin"}, "v": {"atoms": [[0, 1]]}}}
//!   },
//!   "runs": [
//!     {"command": "q", "params": {"dist": "coin", "n": 4, "b": 0}},
//!     {"command": "bound", "params": {"bound": "cor1", "dist": "lazy", "n": 64, "b": 1}, "out": "cor1.csv"},
//!     {"command": "sweep", "params": {"bound": "cor1", "dist": "coin", "b": 1, "grid": {"n": [16, 64, 256]}}}
//!   ]
//! }
//! ```
//!
//! Every name and parameter is checked when the file is loaded, before any
//! run starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::format::{parse_dist_json, parse_dist_value, parse_family_expr, DistSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Q,
    Bound,
    Verify,
    Sweep,
    Convpow,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Q => "q",
            Command::Bound => "bound",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Convpow => "convpow",
        }
    }

    /// Parameter keys each command accepts.
    pub fn keys(self) -> &'static [&'static str] {
        const BOUND: &[&str] = &[
            "bound", "dist", "h", "n", "b", "alpha", "p", "r", "s", "delta", "prune_eps", "format",
        ];
        const SWEEP: &[&str] = &[
            "bound", "dist", "h", "n", "b", "alpha", "p", "r", "s", "delta", "prune_eps", "format",
            "grid",
        ];
        match self {
            Command::Q => &["dist", "n", "b", "prune_eps"],
            Command::Bound => BOUND,
            Command::Verify => &["suite", "seed", "format"],
            Command::Sweep => SWEEP,
            Command::Convpow => &["dist", "n", "prune_eps"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Command::Q, Command::Bound, Command::Verify, Command::Sweep, Command::Convpow]
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Parse(format!("unknown format `{s}` (expected json or csv)"))),
        }
    }
}

/// Parameters of one command, from flags or from a scenario run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunParams {
    /// Bound id for `bound` and `sweep`, suite for `verify`.
    pub target: Option<String>,
    pub dist: Option<String>,
    pub h: Option<String>,
    pub n: Option<u64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub r: Option<u64>,
    pub s: Option<u64>,
    pub delta: Option<f64>,
    pub prune_eps: f64,
    pub seed: u64,
    pub grid: Vec<(String, Vec<f64>)>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub command: Command,
    pub params: RunParams,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioFile {
    pub distributions: BTreeMap<String, DistSpec>,
    pub runs: Vec<Run>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("scenario: expected an object".into()))?;
        if let Some(k) = obj.keys().find(|k| !["distributions", "runs"].contains(&k.as_str())) {
            return Err(Error::Parse(format!("scenario: unknown key `{k}`")));
        }
        let mut file = ScenarioFile::default();
        if let Some(dists) = obj.get("distributions") {
            let dists = dists
                .as_object()
                .ok_or_else(|| Error::Parse("`distributions`: expected an object".into()))?;
            for (name, v) in dists {
                let d = parse_dist_value(v, &format!("distributions.{name}"))?;
                file.distributions.insert(name.clone(), d);
            }
        }
        if let Some(runs) = obj.get("runs") {
            let runs = runs
                .as_array()
                .ok_or_else(|| Error::Parse("`runs`: expected an array".into()))?;
            for (i, run) in runs.iter().enumerate() {
                let run = parse_run(run, &format!("runs[{i}]"))?;
                for (key, name) in [("dist", &run.params.dist), ("h", &run.params.h)] {
                    if let Some(name) = name {
                        // placeholders are filled per grid point, so check later
                        if !name.contains('{') {
                            file.resolve(name)
                                .map_err(|e| Error::Parse(format!("`runs[{i}].params.{key}`: {e}")))?;
                        }
                    }
                }
                file.runs.push(run);
            }
        }
        Ok(file)
    }

    /// A distribution by scenario name, inline JSON, or family expression.
    pub fn resolve(&self, name: &str) -> Result<DistSpec> {
        resolve_dist(name, Some(self))
    }
}

/// Resolves a `--dist` argument: a name from `scenario`, an inline JSON
/// object, or a family expression such as `two_point(1)`.
pub fn resolve_dist(name: &str, scenario: Option<&ScenarioFile>) -> Result<DistSpec> {
    if let Some(d) = scenario.and_then(|s| s.distributions.get(name)) {
        return Ok(d.clone());
    }
    let trimmed = name.trim_start();
    if trimmed.starts_with('{') {
        return parse_dist_json(trimmed);
    }
    parse_family_expr(name)
}

fn parse_run(value: &Value, path: &str) -> Result<Run> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse(format!("`{path}`: expected an object")))?;
    if let Some(k) = obj.keys().find(|k| !["command", "params", "out"].contains(&k.as_str())) {
        return Err(Error::Parse(format!("`{path}`: unknown key `{k}`")));
    }
    let command: Command = obj
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse(format!("`{path}.command`: expected a string")))?
        .parse()
        .map_err(|e| Error::Parse(format!("`{path}.command`: {e}")))?;
    let out = match obj.get("out") {
        None => None,
        Some(v) => Some(PathBuf::from(
            v.as_str()
                .ok_or_else(|| Error::Parse(format!("`{path}.out`: expected a string")))?,
        )),
    };
    let empty = Map::new();
    let params = match obj.get("params") {
        None => &empty,
        Some(v) => v
            .as_object()
            .ok_or_else(|| Error::Parse(format!("`{path}.params`: expected an object")))?,
    };
    let params = parse_params(command, params, &format!("{path}.params"))?;
    Ok(Run {
        command,
        params,
        out,
    })
}

fn parse_params(command: Command, obj: &Map<String, Value>, path: &str) -> Result<RunParams> {
    let allowed = command.keys();
    let mut p = RunParams::default();
    for (key, v) in obj {
        let at = format!("{path}.{key}");
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Parse(format!(
                "`{at}`: `{command}` takes no parameter `{key}`"
            )));
        }
        let text = || {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("`{at}`: expected a string")))
        };
        let real = || {
            v.as_f64()
                .ok_or_else(|| Error::Parse(format!("`{at}`: expected a number")))
        };
        let int = || {
            v.as_u64()
                .ok_or_else(|| Error::Parse(format!("`{at}`: expected a nonnegative integer")))
        };
        match key.as_str() {
            "bound" | "suite" => p.target = Some(text()?),
            "dist" => p.dist = Some(text()?),
            "h" => p.h = Some(text()?),
            "n" => p.n = Some(int()?),
            "r" => p.r = Some(int()?),
            "s" => p.s = Some(int()?),
            "seed" => p.seed = int()?,
            "b" => p.b = Some(real()?),
            "alpha" => p.alpha = Some(real()?),
            "p" => p.p = Some(real()?),
            "delta" => p.delta = Some(real()?),
            "prune_eps" => p.prune_eps = real()?,
            "format" => p.format = Some(text()?.parse().map_err(|e| Error::Parse(format!("`{at}`: {e}")))?),
            "grid" => {
                let grid = v
                    .as_object()
                    .ok_or_else(|| Error::Parse(format!("`{at}`: expected an object")))?;
                for (gk, gv) in grid {
                    let values = gv
                        .as_array()
                        .ok_or_else(|| Error::Parse(format!("`{at}.{gk}`: expected an array")))?
                        .iter()
                        .map(|x| {
                            x.as_f64()
                                .ok_or_else(|| Error::Parse(format!("`{at}.{gk}`: expected numbers")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    p.grid.push((gk.clone(), values));
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(p)
}
