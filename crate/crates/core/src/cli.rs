//! The `concbound` command line.
//!
//! Exit codes: 0 on success, 1 when a `verify` check fails, 2 on usage,
//! parse or validation errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bounds::{BoundRequest, Bounds};
use crate::concentration::q_exact;
use crate::convolution::{conv_power, power_auto};
use crate::error::{Error, Result};
use crate::format::{dist_to_json, DistSpec};
use crate::lattice::try_lattice;
use crate::measure::DiscreteDist;
use crate::report::{fmt_float, write_reports_csv, BoundId, BoundReport};
use crate::scenario::{resolve_dist, Command, Format, RunParams, ScenarioFile};
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "concbound", version, about = "Exact concentration functions and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Q(F^n, b) as JSON.
    Q(Flags),
    /// Evaluate one bound and print its report row.
    Bound {
        /// th1_general, th1_simple, cor1, mult_1_7, cor2, esseen_1_11,
        /// sharpened_1_13, cf_1_15, cf_1_16 or lemma1
        bound: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a self-check suite: identities, constants, counterexample or all.
    Verify {
        suite: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Evaluate a bound over a parameter grid and estimate its constant.
    Sweep {
        bound: String,
        /// `key=v1,v2,...`; repeat for a cartesian product. Keys are bound
        /// parameters or `{key}` placeholders in --dist/--h.
        #[arg(long = "grid")]
        grid: Vec<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// F^n as a distribution JSON.
    Convpow(Flags),
    /// Execute every run of the scenario file given by --spec.
    Run(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// Scenario file with named distributions.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Distribution name, family expression like `two_point(1)`, or inline JSON.
    #[arg(long)]
    dist: Option<String>,
    /// Auxiliary law H (or G for lemma1); defaults to a point mass at 0.
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Mixture weight; on a plain law this builds (1-p)F + pδ₀.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    s: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "prune-eps")]
    prune_eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Flags {
    /// Flags as run parameters, rejecting any the command does not take.
    fn into_params(self, command: Command, target: Option<String>) -> Result<RunParams> {
        let given = [
            ("dist", self.dist.is_some()),
            ("h", self.h.is_some()),
            ("n", self.n.is_some()),
            ("b", self.b.is_some()),
            ("alpha", self.alpha.is_some()),
            ("p", self.p.is_some()),
            ("r", self.r.is_some()),
            ("s", self.s.is_some()),
            ("delta", self.delta.is_some()),
            ("prune_eps", self.prune_eps.is_some()),
            ("seed", self.seed.is_some()),
            ("format", self.format.is_some()),
        ];
        if let Some((key, _)) = given
            .iter()
            .find(|(k, set)| *set && !command.keys().contains(k))
        {
            return Err(Error::Parse(format!(
                "`{command}` does not take --{}",
                key.replace('_', "-")
            )));
        }
        Ok(RunParams {
            target,
            dist: self.dist,
            h: self.h,
            n: self.n,
            b: self.b,
            alpha: self.alpha,
            p: self.p,
            r: self.r,
            s: self.s,
            delta: self.delta,
            prune_eps: self.prune_eps.unwrap_or(0.0),
            seed: self.seed.unwrap_or(0),
            grid: Vec::new(),
            format: self.format,
        })
    }
}

/// Result of one command: text for the output sink and, for `verify`, the
/// first failing check.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome {
            text,
            failure: None,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(None) => 0,
        Ok(Some(failure)) => {
            let _ = writeln!(stderr, "verification failed: {failure}");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<Option<String>> {
    let (command, target, grid, flags) = match cli.command {
        Sub::Q(f) => (Command::Q, None, Vec::new(), f),
        Sub::Bound { bound, flags } => (Command::Bound, Some(bound), Vec::new(), flags),
        Sub::Verify { suite, flags } => (Command::Verify, Some(suite), Vec::new(), flags),
        Sub::Sweep { bound, grid, flags } => (Command::Sweep, Some(bound), grid, flags),
        Sub::Convpow(f) => (Command::Convpow, None, Vec::new(), f),
        Sub::Run(f) => return run_scenario_file(f, stdout),
    };
    let scenario = match &flags.spec {
        Some(path) => Some(load_scenario(path)?),
        None => None,
    };
    let out = flags.out.clone();
    let mut params = flags.into_params(command, target)?;
    params.grid = grid.iter().map(|g| parse_grid_flag(g)).collect::<Result<_>>()?;
    let outcome = execute(command, &params, scenario.as_ref())?;
    emit(out.as_deref(), &outcome.text, stdout)?;
    Ok(outcome.failure)
}

fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read `{}`: {e}", path.display())))?;
    ScenarioFile::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn run_scenario_file(flags: Flags, stdout: &mut dyn Write) -> Result<Option<String>> {
    let path = flags
        .spec
        .clone()
        .ok_or_else(|| Error::Parse("`run` needs --spec".into()))?;
    let extra = flags.out.is_some()
        || flags.dist.is_some()
        || flags.h.is_some()
        || flags.n.is_some()
        || flags.b.is_some()
        || flags.alpha.is_some()
        || flags.p.is_some()
        || flags.r.is_some()
        || flags.s.is_some()
        || flags.delta.is_some()
        || flags.prune_eps.is_some()
        || flags.seed.is_some()
        || flags.format.is_some();
    if extra {
        return Err(Error::Parse("`run` takes only --spec".into()));
    }
    let scenario = load_scenario(&path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut first_failure = None;
    for (i, run) in scenario.runs.iter().enumerate() {
        let outcome = execute(run.command, &run.params, Some(&scenario))
            .map_err(|e| Error::Parse(format!("runs[{i}] ({}): {e}", run.command)))?;
        let out = run.out.as_ref().map(|o| base.join(o));
        emit(out.as_deref(), &outcome.text, stdout)?;
        if first_failure.is_none() {
            first_failure = outcome.failure.map(|f| format!("runs[{i}]: {f}"));
        }
    }
    Ok(first_failure)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Parse(format!("cannot write `{}`: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::Parse(format!("stdout: {e}"))),
    }
}

/// `key=v1,v2,...`
pub fn parse_grid_flag(text: &str) -> Result<(String, Vec<f64>)> {
    let (key, values) = text
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("grid `{text}`: expected key=v1,v2,...")))?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("grid `{key}`: bad number `{v}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((key.trim().to_string(), values))
}

/// Runs one command with already parsed parameters.
pub fn execute(command: Command, p: &RunParams, scenario: Option<&ScenarioFile>) -> Result<Outcome> {
    match command {
        Command::Q => cmd_q(p, scenario),
        Command::Bound => cmd_bound(p, scenario),
        Command::Verify => cmd_verify(p),
        Command::Sweep => cmd_sweep(p, scenario),
        Command::Convpow => cmd_convpow(p, scenario),
    }
}

fn need<T: Copy>(value: Option<T>, command: &str, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Parse(format!("`{command}` needs parameter `{key}`")))
}

fn dist_arg<'a>(p: &'a RunParams, command: &str) -> Result<&'a str> {
    p.dist
        .as_deref()
        .ok_or_else(|| Error::Parse(format!("`{command}` needs parameter `dist`")))
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// `F^n` in the carrier the input suggests.
enum Power {
    Discrete(DiscreteDist),
    Lattice(crate::lattice::LatticeDist),
}

fn power_of(spec: &DistSpec, n: u64, prune_eps: f64) -> Result<Power> {
    Ok(match spec {
        DistSpec::Lattice(l) => Power::Lattice(conv_power(l, n, prune_eps)?),
        other => {
            let d = other.to_discrete();
            match (n > 1).then(|| try_lattice(&d)).flatten() {
                Some(l) => Power::Lattice(conv_power(&l, n, prune_eps)?),
                None => Power::Discrete(power_auto(&d, n, prune_eps)?),
            }
        }
    })
}

fn cmd_q(p: &RunParams, scenario: Option<&ScenarioFile>) -> Result<Outcome> {
    let name = dist_arg(p, "q")?;
    let b = need(p.b, "q", "b")?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::param("b", format!("must be a nonnegative number, got {b}")));
    }
    let n = p.n.unwrap_or(1);
    let spec = resolve_dist(name, scenario)?;
    let (q, budget) = match power_of(&spec, n, p.prune_eps)? {
        Power::Discrete(d) => (q_exact(&d, b), d.budget()),
        Power::Lattice(l) => (q_exact(&l, b), l.budget()),
    };
    Ok(Outcome::ok(pretty(&json!({
        "dist": name,
        "n": n,
        "b": b,
        "value": q.value,
        "certified_error": q.certified_error,
        "argmax_x": q.argmax_x,
        "budgets": budget,
    }))))
}

fn cmd_convpow(p: &RunParams, scenario: Option<&ScenarioFile>) -> Result<Outcome> {
    let name = dist_arg(p, "convpow")?;
    let n = need(p.n, "convpow", "n")?;
    let spec = resolve_dist(name, scenario)?;
    let (distribution, budget, mass) = match power_of(&spec, n, p.prune_eps)? {
        Power::Discrete(d) => (dist_to_json(&d), d.budget(), d.total_mass()),
        Power::Lattice(l) => (
            json!({"lattice": {"offset": l.offset(), "step": l.step(), "weights": l.weights()}}),
            l.budget(),
            l.total_mass(),
        ),
    };
    Ok(Outcome::ok(pretty(&json!({
        "dist": name,
        "n": n,
        "total_mass": mass,
        "budgets": budget,
        "distribution": distribution,
    }))))
}

fn cmd_verify(p: &RunParams) -> Result<Outcome> {
    let suite: Suite = need(p.target.as_deref().map(Some), "verify", "suite")?
        .unwrap()
        .parse()?;
    let checks = run_suite(suite, p.seed)?;
    let failure = checks
        .iter()
        .find(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail));
    let text = match p.format.unwrap_or(Format::Csv) {
        Format::Json => pretty(&json!({
            "seed": p.seed,
            "passed": failure.is_none(),
            "checks": checks,
        })),
        Format::Csv => {
            let mut text: String = checks.iter().map(|c| format!("{c}\n")).collect();
            let failed = checks.iter().filter(|c| !c.passed).count();
            text.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
            text
        }
    };
    Ok(Outcome { text, failure })
}

/// Parameters each bound reads; anything else given is an error.
fn bound_keys(id: BoundId) -> &'static [&'static str] {
    match id {
        BoundId::Lemma1 => &["dist", "h", "n", "b"],
        BoundId::Cor1 => &["dist", "h", "n", "b", "p"],
        BoundId::Mult17 | BoundId::Cf116 => &["dist", "n", "alpha", "b", "p"],
        BoundId::Th1Simple => &["dist", "h", "n", "r", "b", "p"],
        BoundId::Th1General => &["dist", "h", "n", "r", "s", "b", "p"],
        BoundId::Esseen111 | BoundId::Sharpened113 | BoundId::Cf115 => &["dist", "n", "b"],
        BoundId::Cor2 => &["dist", "n", "b", "delta", "p"],
    }
}

fn given_keys(p: &RunParams) -> Vec<&'static str> {
    [
        ("dist", p.dist.is_some()),
        ("h", p.h.is_some()),
        ("n", p.n.is_some()),
        ("b", p.b.is_some()),
        ("alpha", p.alpha.is_some()),
        ("p", p.p.is_some()),
        ("r", p.r.is_some()),
        ("s", p.s.is_some()),
        ("delta", p.delta.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, set)| set.then_some(k))
    .collect()
}

/// Builds the request for `id` from `p`.
pub fn bound_request(id: BoundId, p: &RunParams, scenario: Option<&ScenarioFile>) -> Result<BoundRequest> {
    let cmd = id.as_str();
    if let Some(extra) = given_keys(p).into_iter().find(|k| !bound_keys(id).contains(k)) {
        return Err(Error::Parse(format!("`{cmd}` takes no parameter `{extra}`")));
    }
    let dist = resolve_dist(dist_arg(p, cmd)?, scenario)?;
    let h = match &p.h {
        Some(name) => resolve_dist(name, scenario)?.to_discrete(),
        None => DiscreteDist::point(0.0),
    };
    let n = need(p.n, cmd, "n")?;
    let b = need(p.b, cmd, "b")?;
    let mixture = || dist.to_mixture(p.p);
    Ok(match id {
        BoundId::Lemma1 => BoundRequest::Lemma1 {
            w_base: dist.to_discrete(),
            n,
            g: h,
            b,
        },
        BoundId::Cor1 => BoundRequest::Cor1 {
            spec: mixture()?,
            h,
            n,
            b,
        },
        BoundId::Mult17 => BoundRequest::Mult17 {
            spec: mixture()?,
            n,
            alpha: need(p.alpha, cmd, "alpha")?,
            b,
        },
        BoundId::Th1Simple => BoundRequest::Th1Simple {
            spec: mixture()?,
            h,
            n,
            r: need(p.r, cmd, "r")?,
            b,
        },
        BoundId::Th1General => BoundRequest::Th1General {
            spec: mixture()?,
            h,
            n,
            r: need(p.r, cmd, "r")?,
            s: need(p.s, cmd, "s")?,
            b,
        },
        BoundId::Esseen111 => BoundRequest::Esseen111 {
            f: dist.to_discrete(),
            n,
            b,
        },
        BoundId::Sharpened113 => BoundRequest::Sharpened113 {
            f: dist.to_discrete(),
            n,
            b,
        },
        BoundId::Cf115 => BoundRequest::Cf115 {
            f: dist.to_discrete(),
            n,
            b,
        },
        BoundId::Cf116 => BoundRequest::Cf116 {
            spec: mixture()?,
            n,
            alpha: need(p.alpha, cmd, "alpha")?,
            b,
        },
        BoundId::Cor2 => BoundRequest::Cor2 {
            spec: mixture()?,
            n,
            b,
            delta: need(p.delta, cmd, "delta")?,
        },
    })
}

fn bound_id(p: &RunParams, command: &str) -> Result<BoundId> {
    p.target
        .as_deref()
        .ok_or_else(|| Error::Parse(format!("`{command}` needs parameter `bound`")))?
        .parse()
}

fn cmd_bound(p: &RunParams, scenario: Option<&ScenarioFile>) -> Result<Outcome> {
    let id = bound_id(p, "bound")?;
    let bounds = Bounds::new(p.prune_eps);
    let report = bound_request(id, p, scenario)?.evaluate(&bounds)?;
    render_reports(&[report], p.format.unwrap_or(Format::Csv), None)
}

fn render_reports(reports: &[BoundReport], format: Format, footer: Option<Footer>) -> Result<Outcome> {
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_reports_csv(&mut buf, reports)?;
            let mut text = String::from_utf8(buf).expect("csv output is UTF-8");
            if let Some(footer) = footer {
                text.push_str(&footer.comment());
            }
            text
        }
        Format::Json => {
            let reports = serde_json::to_value(reports).expect("reports serialize");
            match footer {
                None if reports.as_array().is_some_and(|r| r.len() == 1) => pretty(&reports[0]),
                None => pretty(&reports),
                Some(f) => pretty(&json!({
                    "reports": reports,
                    "c_hat": f.c_hat,
                    "witness_row": f.witness_row,
                    "admissible": f.admissible,
                })),
            }
        }
    };
    Ok(Outcome::ok(text))
}

struct Footer {
    c_hat: Option<f64>,
    witness_row: Option<usize>,
    admissible: usize,
}

impl Footer {
    /// Largest implied constant over admissible rows; ties go to the first.
    fn of(reports: &[BoundReport]) -> Self {
        let mut best: Option<(usize, f64)> = None;
        let mut admissible = 0;
        for (i, r) in reports.iter().enumerate() {
            if !r.hypothesis_ok {
                continue;
            }
            admissible += 1;
            if best.is_none_or(|(_, c)| r.implied_c > c) {
                best = Some((i, r.implied_c));
            }
        }
        Footer {
            c_hat: best.map(|(_, c)| c),
            witness_row: best.map(|(i, _)| i),
            admissible,
        }
    }

    fn comment(&self) -> String {
        match (self.c_hat, self.witness_row) {
            (Some(c), Some(row)) => format!(
                "# c_hat={} witness_row={row} admissible={}\n",
                fmt_float(c),
                self.admissible
            ),
            _ => "# c_hat=none admissible=0\n".to_string(),
        }
    }
}

/// One parameter assignment per grid point, first key outermost.
fn grid_points(grid: &[(String, Vec<f64>)]) -> Vec<Vec<(&str, f64)>> {
    let mut points: Vec<Vec<(&str, f64)>> = vec![Vec::new()];
    for (key, values) in grid {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut point = prefix.clone();
                    point.push((key.as_str(), v));
                    point
                })
            })
            .collect();
    }
    points
}

fn as_count(key: &str, v: f64) -> Result<u64> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(Error::Parse(format!("grid `{key}`: {v} is not a nonnegative integer")))
    }
}

fn apply_point(base: &RunParams, point: &[(&str, f64)]) -> Result<RunParams> {
    let mut p = base.clone();
    for &(key, v) in point {
        let placeholder = format!("{{{key}}}");
        let mut used = false;
        for slot in [&mut p.dist, &mut p.h] {
            if let Some(text) = slot.as_mut() {
                if text.contains(&placeholder) {
                    *text = text.replace(&placeholder, &v.to_string());
                    used = true;
                }
            }
        }
        match key {
            "n" => p.n = Some(as_count(key, v)?),
            "r" => p.r = Some(as_count(key, v)?),
            "s" => p.s = Some(as_count(key, v)?),
            "b" => p.b = Some(v),
            "alpha" => p.alpha = Some(v),
            "p" => p.p = Some(v),
            "delta" => p.delta = Some(v),
            _ if used => {}
            _ => {
                return Err(Error::Parse(format!(
                    "grid key `{key}` is neither a bound parameter nor a placeholder"
                )))
            }
        }
    }
    Ok(p)
}

fn cmd_sweep(p: &RunParams, scenario: Option<&ScenarioFile>) -> Result<Outcome> {
    let id = bound_id(p, "sweep")?;
    if p.grid.is_empty() || p.grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::Parse("sweep needs a nonempty --grid".into()));
    }
    let requests = grid_points(&p.grid)
        .iter()
        .map(|point| bound_request(id, &apply_point(p, point)?, scenario))
        .collect::<Result<Vec<_>>>()?;
    let bounds = Bounds::new(p.prune_eps);
    let reports = requests
        .par_iter()
        .map(|r| r.evaluate(&bounds))
        .collect::<Result<Vec<_>>>()?;
    let footer = Footer::of(&reports);
    render_reports(&reports, p.format.unwrap_or(Format::Csv), Some(footer))
}
