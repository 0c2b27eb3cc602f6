//! Command-line front end.
//!
//! Settings come from flags, then an optional `--config` file of `key=value`
//! lines, then built-in defaults. Exit codes: 0 success, 1 failed check or
//! runtime error, 2 invalid configuration.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::entanglement::{concurrence_x, entropy_derivative_sweep};
use crate::error::{Error, Result};
use crate::lmg::{lmg_free_energy_derivatives, thermal_moments, LmgParams};
use crate::qudit::{
    random_family, verify_identities, PairOperator, ParameterizedQudit, PolynomialFamily,
    QuditHamiltonian,
};
use crate::scaling::{find_peak, fit_nu, uniform_grid, CollapseOptions, Control, SweepCurve};
use crate::sweep::{reproduce, run_sweep, Check, Figure, FigureSpec, FixedParams, Observable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Identity-residual bounds for first- and second-derivative identities.
pub const FIRST_ORDER_BOUND: f64 = 1e-6;
pub const SECOND_ORDER_BOUND: f64 = 1e-4;
pub const FREE_SPIN_BOUND: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "lmg-rdm",
    version,
    about = "Pair reduced density matrices, free-energy identities and finite-size scaling"
)]
struct Cli {
    /// Flat key=value file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the free-energy identities on random qudit models and the LMG model.
    Verify(VerifyArgs),
    /// Sweep λ or T and write one CSV per system size.
    Sweep(SweepArgs),
    /// Fit ν by data collapse of derivative curves written by `sweep`.
    Collapse(CollapseArgs),
    /// Rényi entropy of the pair RDM and its derivative along a sweep.
    Entropy(EntropyArgs),
    /// Regenerate a figure dataset and check it against acceptance bands.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Coupling J.
    #[arg(long = "J", alias = "coupling")]
    coupling: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Field λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Temperature; 0 selects the ground state.
    #[arg(long, alias = "T")]
    temperature: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Control parameter: lambda or T.
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated system sizes.
    #[arg(long)]
    sizes: Option<String>,
    /// lo:hi:points
    #[arg(long)]
    range: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Perturbs the analytic ∂U so the first identity must fail.
    #[arg(long, hide = true)]
    corrupt_coupling: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Extra columns, also checked for boundary peaks, e.g. S_renyi(2),concurrence.
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CollapseArgs {
    /// Directory written by `sweep`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// lo:hi
    #[arg(long)]
    nu_window: Option<String>,
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    min_relative_height: Option<f64>,
    /// Defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EntropyArgs {
    #[arg(long)]
    order: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// fig1 or fig2
    figure: String,
    /// Sizes {50, 100} on a wider grid; no acceptance claim.
    #[arg(long)]
    smoke: bool,
    #[arg(long)]
    nu_window: Option<String>,
    #[arg(long)]
    min_relative_height: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "J",
    "gamma",
    "lambda",
    "T",
    "temperature",
    "param",
    "sizes",
    "range",
    "observable",
    "seed",
    "instances",
    "out",
    "in",
    "nu_window",
    "order",
    "smoke",
    "min_relative_height",
];

/// Values from a `key=value` file. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{}'",
                    no + 1,
                    k.trim()
                )));
            }
            let key = if key == "temperature" {
                "T".to_string()
            } else {
                key
            };
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("cannot parse {key}={v}")))
            })
            .transpose()
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub coupling: f64,
    pub gamma: f64,
    pub field: f64,
    pub temperature: f64,
    pub control: Option<Control>,
    pub sizes: Vec<usize>,
    pub range: Option<(f64, f64, usize)>,
    pub observables: Vec<String>,
    pub seed: u64,
    pub instances: usize,
    pub order: f64,
    pub nu_window: (f64, f64),
    pub min_relative_height: f64,
    pub figure: Option<Figure>,
    pub smoke: bool,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            coupling: 1.0,
            gamma: 0.0,
            field: 0.0,
            temperature: 0.0,
            control: None,
            sizes: Vec::new(),
            range: None,
            observables: Vec::new(),
            seed: 42,
            instances: 20,
            order: 2.0,
            nu_window: (0.5, 4.0),
            min_relative_height: CollapseOptions::default().min_relative_height,
            figure: None,
            smoke: false,
            input: None,
            out: None,
        }
    }
}

impl RunConfig {
    /// Key/value echo written into every output header.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("command".into(), self.command.clone());
        m.insert("J".into(), self.coupling.to_string());
        m.insert("gamma".into(), self.gamma.to_string());
        m.insert("lambda".into(), self.field.to_string());
        m.insert("T".into(), self.temperature.to_string());
        if let Some(c) = self.control {
            m.insert("param".into(), c.name().into());
        }
        if !self.sizes.is_empty() {
            let s: Vec<String> = self.sizes.iter().map(|n| n.to_string()).collect();
            m.insert("sizes".into(), s.join(","));
        }
        if let Some((lo, hi, n)) = self.range {
            m.insert("range".into(), format!("{lo}:{hi}:{n}"));
        }
        if !self.observables.is_empty() {
            m.insert("observable".into(), self.observables.join(","));
        }
        match self.command.as_str() {
            "verify" => {
                m.insert("seed".into(), self.seed.to_string());
                m.insert("instances".into(), self.instances.to_string());
            }
            "entropy" => {
                m.insert("order".into(), self.order.to_string());
            }
            "collapse" | "reproduce" => {
                m.insert(
                    "nu_window".into(),
                    format!("{}:{}", self.nu_window.0, self.nu_window.1),
                );
                m.insert(
                    "min_relative_height".into(),
                    self.min_relative_height.to_string(),
                );
            }
            _ => {}
        }
        if let Some(f) = self.figure {
            m.insert("figure".into(), format!("{f:?}").to_lowercase());
            m.insert("smoke".into(), self.smoke.to_string());
        }
        m
    }

    fn fixed(&self) -> FixedParams {
        FixedParams {
            coupling: self.coupling,
            gamma: self.gamma,
            field: self.field,
            temperature: self.temperature,
        }
    }

    fn grid(&self) -> Result<Vec<f64>> {
        let (lo, hi, n) = self
            .range
            .ok_or_else(|| Error::Config("--range is required".into()))?;
        uniform_grid(lo, hi, n)
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required".into()))
    }
}

fn parse_control(s: &str) -> Result<Control> {
    match s {
        "lambda" => Ok(Control::Field),
        "T" => Ok(Control::Temperature),
        _ => Err(Error::Config(format!(
            "--param must be lambda or T, got '{s}'"
        ))),
    }
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let sizes = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad size '{x}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(Error::Config(
            "sizes must be nonempty and at least 2".into(),
        ));
    }
    Ok(sizes)
}

fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("range must be lo:hi:points, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo < hi) || n < 5 {
        return Err(Error::Config(format!(
            "range needs lo < hi and at least 5 points, got '{s}'"
        )));
    }
    Ok((lo, hi, n))
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    let bad = || {
        Error::Config(format!(
            "nu window must be lo:hi with 0 < lo < hi, got '{s}'"
        ))
    };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.parse().map_err(|_| bad())?;
    let hi: f64 = b.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn apply_model(cfg: &mut RunConfig, m: &ModelArgs, file: &FileConfig) -> Result<()> {
    if let Some(v) = pick(m.coupling, file, "J")? {
        cfg.coupling = v;
    }
    if let Some(v) = pick(m.gamma, file, "gamma")? {
        cfg.gamma = v;
    }
    if let Some(v) = pick(m.lambda, file, "lambda")? {
        cfg.field = v;
    }
    if let Some(v) = pick(m.temperature, file, "T")? {
        cfg.temperature = v;
    }
    if !(cfg.coupling >= 0.0) || !(0.0..=1.0).contains(&cfg.gamma) || !cfg.field.is_finite() {
        return Err(Error::Config(
            "need J >= 0, 0 <= gamma <= 1 and finite lambda".into(),
        ));
    }
    if !(cfg.temperature >= 0.0) || !cfg.temperature.is_finite() {
        return Err(Error::Config(format!(
            "temperature must be >= 0, got {}",
            cfg.temperature
        )));
    }
    Ok(())
}

fn apply_grid(cfg: &mut RunConfig, g: &GridArgs, file: &FileConfig) -> Result<()> {
    let param = pick(g.param.clone(), file, "param")?
        .ok_or_else(|| Error::Config("--param is required".into()))?;
    cfg.control = Some(parse_control(&param)?);
    let sizes = pick(g.sizes.clone(), file, "sizes")?
        .ok_or_else(|| Error::Config("--sizes is required".into()))?;
    cfg.sizes = parse_sizes(&sizes)?;
    let range = pick(g.range.clone(), file, "range")?
        .ok_or_else(|| Error::Config("--range is required".into()))?;
    cfg.range = Some(parse_range(&range)?);
    if cfg.control == Some(Control::Temperature) && cfg.range.is_some_and(|r| r.0 <= 0.0) {
        return Err(Error::Config("temperature range must be positive".into()));
    }
    Ok(())
}

fn apply_collapse_opts(
    cfg: &mut RunConfig,
    window: &Option<String>,
    mrh: Option<f64>,
    file: &FileConfig,
) -> Result<()> {
    if let Some(w) = pick(window.clone(), file, "nu_window")? {
        cfg.nu_window = parse_window(&w)?;
    }
    if let Some(v) = pick(mrh, file, "min_relative_height")? {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Config(format!(
                "min_relative_height must be in [0, 1), got {v}"
            )));
        }
        cfg.min_relative_height = v;
    }
    Ok(())
}

fn resolve(cli: &Cli) -> Result<(RunConfig, bool)> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            other => other,
        })?,
        None => FileConfig::default(),
    };
    let mut cfg = RunConfig::default();
    let mut corrupt = false;
    match &cli.command {
        Command::Verify(a) => {
            cfg.command = "verify".into();
            cfg.field = 0.7;
            cfg.temperature = 1.0;
            apply_model(&mut cfg, &a.model, &file)?;
            if cfg.temperature == 0.0 {
                return Err(Error::Config("verify needs T > 0".into()));
            }
            if let Some(s) = pick(a.seed, &file, "seed")? {
                cfg.seed = s;
            }
            if let Some(k) = pick(a.instances, &file, "instances")? {
                cfg.instances = k;
            }
            cfg.out = pick(a.out.clone(), &file, "out")?;
            corrupt = a.corrupt_coupling;
        }
        Command::Sweep(a) => {
            cfg.command = "sweep".into();
            apply_model(&mut cfg, &a.model, &file)?;
            apply_grid(&mut cfg, &a.grid, &file)?;
            if let Some(o) = pick(a.observable.clone(), &file, "observable")? {
                for name in o.split(',').filter(|s| !s.trim().is_empty()) {
                    let obs: Observable = name
                        .parse()
                        .map_err(|e: Error| Error::Config(e.to_string()))?;
                    cfg.observables.push(obs.name());
                }
            }
            cfg.out = pick(a.out.clone(), &file, "out")?;
            cfg.out_dir()?;
        }
        Command::Collapse(a) => {
            cfg.command = "collapse".into();
            cfg.input = pick(a.input.clone(), &file, "in")?;
            if cfg.input.is_none() {
                return Err(Error::Config("--in is required".into()));
            }
            apply_collapse_opts(&mut cfg, &a.nu_window, a.min_relative_height, &file)?;
            let obs =
                pick(a.observable.clone(), &file, "observable")?.unwrap_or_else(|| "r11".into());
            let obs: Observable = obs
                .parse()
                .map_err(|e: Error| Error::Config(e.to_string()))?;
            cfg.observables = vec![obs.name()];
            cfg.out = pick(a.out.clone(), &file, "out")?.or_else(|| cfg.input.clone());
        }
        Command::Entropy(a) => {
            cfg.command = "entropy".into();
            apply_model(&mut cfg, &a.model, &file)?;
            apply_grid(&mut cfg, &a.grid, &file)?;
            if let Some(n) = pick(a.order, &file, "order")? {
                if !(n > 0.0) || !n.is_finite() {
                    return Err(Error::Config(format!("order must be positive, got {n}")));
                }
                cfg.order = n;
            }
            cfg.out = pick(a.out.clone(), &file, "out")?;
            cfg.out_dir()?;
        }
        Command::Reproduce(a) => {
            cfg.command = "reproduce".into();
            let figure: Figure = a.figure.parse()?;
            let spec = FigureSpec::for_figure(figure);
            cfg.figure = Some(figure);
            cfg.smoke = a.smoke || file.get::<bool>("smoke")?.unwrap_or(false);
            let spec = if cfg.smoke { spec.smoke() } else { spec };
            cfg.coupling = spec.fixed.coupling;
            cfg.gamma = spec.fixed.gamma;
            cfg.field = spec.fixed.field;
            cfg.temperature = spec.fixed.temperature;
            cfg.control = Some(spec.control);
            cfg.sizes = spec.sizes.clone();
            cfg.range = Some(spec.range);
            cfg.observables = vec![spec.observable.name()];
            cfg.nu_window = spec.nu_window;
            apply_collapse_opts(&mut cfg, &a.nu_window, a.min_relative_height, &file)?;
            cfg.out = pick(a.out.clone(), &file, "out")?;
            cfg.out_dir()?;
        }
    }
    Ok((cfg, corrupt))
}

/// Written next to the outputs of every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub details: serde_json::Value,
}

/// Result of one command before anything touches the filesystem.
#[derive(Debug)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub files: Vec<(String, Vec<u8>)>,
    pub details: serde_json::Value,
    pub summary: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            warnings: Vec::new(),
            files: Vec::new(),
            details: serde_json::Value::Null,
            summary: Vec::new(),
        }
    }
}

/// 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(
    cfg: &RunConfig,
    extra: &[(&str, String)],
    header: &[String],
    rows: &[Vec<String>],
) -> Result<Vec<u8>> {
    let mut out = format!("# lmg-rdm {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.echo() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for (k, v) in extra {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::Writer::from_writer(out.into_bytes());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

fn run_verify(cfg: &RunConfig, corrupt: bool) -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut worst = [0.0f64; 4];
    let mut instances = Vec::new();
    for (sites, d) in [(4usize, 2usize), (3, 3)] {
        for k in 0..cfg.instances {
            let seed = cfg.seed.wrapping_add(k as u64);
            let family = random_family(sites, d, seed)?;
            let r = if corrupt {
                verify_identities(&Corrupted(family), cfg.field, cfg.temperature, None)?
            } else {
                verify_identities(&family, cfg.field, cfg.temperature, None)?
            };
            let tag = format!("qudit N={sites} d={d} seed={seed}");
            for (i, (v, bound)) in [
                (r.r1, FIRST_ORDER_BOUND),
                (r.r2, SECOND_ORDER_BOUND),
                (r.r3, FIRST_ORDER_BOUND),
                (r.r4, SECOND_ORDER_BOUND),
            ]
            .into_iter()
            .enumerate()
            {
                worst[i] = worst[i].max(v);
                out.checks.push(Check::new(
                    format!("{tag} r{}", i + 1),
                    v <= bound,
                    format!("{v:.3e}"),
                    format!("<= {bound:e}"),
                ));
            }
            instances.push(r);
        }
    }
    out.summary.push(format!(
        "qudit identities over {} instances: max r1={:.3e} r2={:.3e} r3={:.3e} r4={:.3e}",
        instances.len(),
        worst[0],
        worst[1],
        worst[2],
        worst[3]
    ));

    let lmg = LmgParams::new(6, cfg.coupling, cfg.gamma, cfg.field)?;
    let report = lmg_free_energy_derivatives(&lmg, cfg.temperature)?;
    let res = report.residuals();
    for (i, v) in res.iter().enumerate() {
        let bound = if i % 2 == 0 {
            FIRST_ORDER_BOUND
        } else {
            SECOND_ORDER_BOUND
        };
        out.checks.push(Check::new(
            format!("lmg N=6 r{}", i + 1),
            *v <= bound,
            format!("{v:.3e}"),
            format!("<= {bound:e}"),
        ));
    }
    out.summary.push(format!(
        "lmg N=6 identities: r1={:.3e} r2={:.3e} r3={:.3e} r4={:.3e}",
        res[0], res[1], res[2], res[3]
    ));

    for n in [2usize, 100, 500] {
        let p = LmgParams::new(n, 0.0, cfg.gamma, cfg.field)?;
        let t = thermal_moments(&p, cfg.temperature)?;
        let x = cfg.field / cfg.temperature;
        let f_exact = -(n as f64) * cfg.temperature * free_spin_log_partition(x);
        let df = (t.free_energy - f_exact).abs();
        let dsz = (2.0 * t.moments.jz / n as f64 - x.tanh()).abs();
        out.checks.push(Check::new(
            format!("free spins N={n} F"),
            df <= FREE_SPIN_BOUND * f_exact.abs().max(1.0),
            format!("{df:.3e}"),
            format!("<= {FREE_SPIN_BOUND:e} relative"),
        ));
        out.checks.push(Check::new(
            format!("free spins N={n} sigma_z"),
            dsz <= FREE_SPIN_BOUND,
            format!("{dsz:.3e}"),
            format!("<= {FREE_SPIN_BOUND:e}"),
        ));
    }
    out.details = serde_json::json!({ "qudit": instances, "lmg": report });
    Ok(out)
}

/// `ln(2 cosh x)` without overflow.
fn free_spin_log_partition(x: f64) -> f64 {
    let a = x.abs();
    a + (1.0 + (-2.0 * a).exp()).ln()
}

/// A family whose analytic `∂U` is off by one percent; used to show that
/// `verify` catches a wrong coupling derivative.
struct Corrupted(PolynomialFamily);

impl ParameterizedQudit for Corrupted {
    fn hamiltonian(&self, lambda: f64) -> Result<QuditHamiltonian> {
        self.0.hamiltonian(lambda)
    }

    fn coupling_derivatives(&self, lambda: f64) -> Result<(Vec<PairOperator>, Vec<PairOperator>)> {
        let (first, second) = self.0.coupling_derivatives(lambda)?;
        let first = first
            .into_iter()
            .map(|p| PairOperator {
                pair: p.pair,
                matrix: p.matrix.scaled(1.01),
            })
            .collect();
        Ok((first, second))
    }
}

fn sweep_columns(cfg: &RunConfig) -> Result<Vec<Observable>> {
    let mut cols = Observable::standard();
    for name in &cfg.observables {
        let o: Observable = name.parse()?;
        if !cols.contains(&o) {
            cols.push(o);
        }
    }
    Ok(cols)
}

fn run_sweep_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new();
    let control = cfg.control.expect("resolved");
    let grid = cfg.grid()?;
    let cols = sweep_columns(cfg)?;
    let mut header = vec![control.name().to_string()];
    header.extend(cols.iter().map(|c| c.name()));
    let mut dheader = vec![control.name().to_string()];
    dheader.extend(cols.iter().map(|c| format!("d{}", c.name())));

    // Peak warnings only for the requested observables, r11 by default.
    let watched: Vec<Observable> = if cfg.observables.is_empty() {
        vec![Observable::Rdm(crate::lmg::RdmElement::R11)]
    } else {
        cfg.observables
            .iter()
            .map(|o| o.parse())
            .collect::<Result<_>>()?
    };
    for &n in &cfg.sizes {
        let s = run_sweep(n, control, &grid, &cfg.fixed())?;
        let curves = cols
            .iter()
            .map(|&c| s.curve(c))
            .collect::<Result<Vec<_>>>()?;
        let derivs = cols
            .iter()
            .map(|&c| s.derivative(c))
            .collect::<Result<Vec<_>>>()?;
        let rows = table(&grid, &curves);
        let drows = table(&grid, &derivs);
        let extra = [("spins", n.to_string())];
        out.files.push((
            format!("sweep_N{n}.csv"),
            csv_bytes(cfg, &extra, &header, &rows)?,
        ));
        out.files.push((
            format!("sweep_N{n}_deriv.csv"),
            csv_bytes(cfg, &extra, &dheader, &drows)?,
        ));
        for (c, d) in cols.iter().zip(&derivs) {
            if !watched.contains(c) {
                continue;
            }
            if let Err(Error::BoundaryPeak { location }) = find_peak(&d.oriented().0) {
                out.warnings.push(format!(
                    "N={n}: peak of {} at grid edge {location}; extend sweep range",
                    d.label
                ));
            }
        }
    }
    out.summary.push(format!(
        "wrote {} sizes x {} points ({} columns)",
        cfg.sizes.len(),
        grid.len(),
        cols.len()
    ));
    Ok(out)
}

fn table(grid: &[f64], curves: &[SweepCurve]) -> Vec<Vec<String>> {
    grid.iter()
        .enumerate()
        .map(|(k, &x)| {
            let mut row = vec![format_number(x)];
            row.extend(curves.iter().map(|c| format_number(c.values[k])));
            row
        })
        .collect()
}

/// Reads `column` from every `sweep_N*_deriv.csv` in `dir`.
pub fn read_derivative_curves(dir: &Path, column: &str) -> Result<Vec<SweepCurve>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        if let Some(n) = name
            .strip_prefix("sweep_N")
            .and_then(|s| s.strip_suffix("_deriv.csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            files.push((n, path));
        }
    }
    files.sort();
    let mut curves = Vec::new();
    for (n, path) in files {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(&path)?;
        let headers = r.headers()?.clone();
        let control = parse_control(headers.get(0).unwrap_or_default())?;
        let col = headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::Config(format!("{} has no column '{column}'", path.display())))?;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad number in {}", path.display())))
            };
            grid.push(num(0)?);
            values.push(num(col)?);
        }
        curves.push(SweepCurve::new(n, control, grid, values, column)?);
    }
    Ok(curves)
}

fn run_collapse(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new();
    let dir = cfg.input.as_deref().expect("resolved");
    let column = format!("d{}", cfg.observables[0]);
    let curves = read_derivative_curves(dir, &column)?;
    let opts = CollapseOptions {
        min_relative_height: cfg.min_relative_height,
        ..CollapseOptions::default()
    };
    let fit = fit_nu(&curves, cfg.nu_window, &opts)?;
    for s in &fit.scaled {
        let rows: Vec<Vec<String>> =
            s.x.iter()
                .zip(&s.y)
                .map(|(x, y)| vec![format_number(*x), format_number(*y)])
                .collect();
        let header = vec!["x_scaled".to_string(), "y_scaled".to_string()];
        let extra = [
            ("spins", s.spins.to_string()),
            ("nu", format_number(fit.nu)),
        ];
        out.files.push((
            format!("collapse_N{}.csv", s.spins),
            csv_bytes(cfg, &extra, &header, &rows)?,
        ));
    }
    out.summary.push(format!(
        "{column}: nu = {:.4}, quality = {:.3e}, locally minimal: {}",
        fit.nu, fit.quality, fit.locally_minimal
    ));
    for (n, x) in &fit.peak_locations {
        out.summary.push(format!("  N={n} peak at {x:.6}"));
    }
    out.details = serde_json::to_value(&fit)?;
    Ok(out)
}

fn run_entropy(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new();
    let control = cfg.control.expect("resolved");
    let grid = cfg.grid()?;
    let name = Observable::Renyi(cfg.order).name();
    let header = vec![
        control.name().to_string(),
        name.clone(),
        format!("d{name}"),
        "concurrence".to_string(),
    ];
    let mut peaks = BTreeMap::new();
    for &n in &cfg.sizes {
        let s = run_sweep(n, control, &grid, &cfg.fixed())?;
        let rdms: Vec<_> = s.points.iter().map(|p| p.rdm).collect();
        let entropy = s.curve(Observable::Renyi(cfg.order))?;
        let deriv = entropy_derivative_sweep(n, control, &grid, &rdms, cfg.order)?;
        let rows: Vec<Vec<String>> = (0..grid.len())
            .map(|k| {
                vec![
                    format_number(grid[k]),
                    format_number(entropy.values[k]),
                    format_number(deriv.values[k]),
                    format_number(concurrence_x(&rdms[k])),
                ]
            })
            .collect();
        let extra = [("spins", n.to_string())];
        out.files.push((
            format!("entropy_N{n}.csv"),
            csv_bytes(cfg, &extra, &header, &rows)?,
        ));
        match find_peak(&deriv.oriented().0) {
            Ok(p) => {
                out.summary.push(format!(
                    "N={n}: |d{name}/d{control}| peaks at {:.6}",
                    p.location
                ));
                peaks.insert(n, p.location);
            }
            Err(Error::BoundaryPeak { location }) => out.warnings.push(format!(
                "N={n}: entropy derivative peaks at grid edge {location}; extend sweep range"
            )),
            Err(e) => return Err(e),
        }
    }
    out.details = serde_json::json!({ "peak_locations": peaks });
    Ok(out)
}

fn run_reproduce(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new();
    let figure = cfg.figure.expect("resolved");
    let mut spec = FigureSpec::for_figure(figure);
    if cfg.smoke {
        spec = spec.smoke();
    }
    spec.nu_window = cfg.nu_window;
    let opts = CollapseOptions {
        min_relative_height: cfg.min_relative_height,
        ..CollapseOptions::default()
    };
    let report = reproduce(&spec, &opts)?;
    let tag = format!("{figure:?}").to_lowercase();
    let obs = spec.observable.name();
    let control = spec.control.name().to_string();

    for (sweep, deriv) in report.sweeps.iter().zip(&report.curves) {
        let base = sweep.curve(spec.observable)?;
        let rows = table(&base.grid, &[base.clone(), deriv.clone()]);
        let header = vec![control.clone(), obs.clone(), format!("d{obs}")];
        let extra = [("spins", sweep.spins.to_string())];
        out.files.push((
            format!("{tag}_N{}.csv", sweep.spins),
            csv_bytes(cfg, &extra, &header, &rows)?,
        ));
    }
    let rows: Vec<Vec<String>> = report
        .crossings
        .iter()
        .map(|c| {
            vec![
                c.sizes.0.to_string(),
                c.sizes.1.to_string(),
                format_number(c.location),
                format_number(c.bracket.0),
                format_number(c.bracket.1),
                c.sign_changes.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = [
        "n_a",
        "n_b",
        "location",
        "bracket_lo",
        "bracket_hi",
        "sign_changes",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    out.files.push((
        format!("{tag}_crossings.csv"),
        csv_bytes(cfg, &[], &header, &rows)?,
    ));
    if let Some(fit) = &report.fit {
        for s in &fit.scaled {
            let rows: Vec<Vec<String>> =
                s.x.iter()
                    .zip(&s.y)
                    .map(|(x, y)| vec![format_number(*x), format_number(*y)])
                    .collect();
            let header = vec!["x_scaled".to_string(), "y_scaled".to_string()];
            let extra = [
                ("spins", s.spins.to_string()),
                ("nu", format_number(fit.nu)),
            ];
            out.files.push((
                format!("{tag}_collapse_N{}.csv", s.spins),
                csv_bytes(cfg, &extra, &header, &rows)?,
            ));
        }
        out.summary.push(format!(
            "fitted nu = {:.4} (quality {:.3e})",
            fit.nu, fit.quality
        ));
    }
    for p in &report.peaks {
        if let Some(q) = p.peak {
            out.summary.push(format!(
                "N={}: peak of d{obs}/d{control} at {:.5}",
                p.spins, q.location
            ));
        } else {
            out.warnings.push(format!(
                "N={}: peak at grid edge; extend sweep range",
                p.spins
            ));
        }
    }
    for c in &report.crossings {
        out.summary.push(format!(
            "crossing N={} / N={}: {:.5}",
            c.sizes.0, c.sizes.1, c.location
        ));
    }
    out.checks = report.checks.clone();
    out.details = serde_json::to_value(&report)?;
    Ok(out)
}

fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LMG_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!("LMG_THREADS must be a positive integer, got '{v}'"))
        })?;
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidParams(_)
            | Error::BadGrid(_)
            | Error::GridTooCoarse(_)
            | Error::InvalidOrder(_)
            | Error::NonPositiveTemperature(_)
            | Error::TooFewSizes { .. }
    )
}

fn execute(cfg: &RunConfig, corrupt: bool) -> Result<(RunManifest, Vec<String>)> {
    let start = Instant::now();
    let outcome = match cfg.command.as_str() {
        "verify" => run_verify(cfg, corrupt)?,
        "sweep" => run_sweep_cmd(cfg)?,
        "collapse" => run_collapse(cfg)?,
        "entropy" => run_entropy(cfg)?,
        "reproduce" => run_reproduce(cfg)?,
        other => return Err(Error::Config(format!("unknown command {other}"))),
    };
    let manifest_name = match cfg.figure {
        Some(f) => format!("{f:?}_manifest.json").to_lowercase(),
        None => format!("{}_manifest.json", cfg.command),
    };
    let mut outputs: Vec<String> = outcome.files.iter().map(|(n, _)| n.clone()).collect();
    if cfg.out.is_some() {
        outputs.push(manifest_name.clone());
    }
    let manifest = RunManifest {
        tool: "lmg-rdm",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.clone(),
        config: cfg.echo(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: outcome.checks,
        warnings: outcome.warnings,
        outputs,
        details: outcome.details,
    };
    if let Some(dir) = &cfg.out {
        let mut files = outcome.files;
        files.push((manifest_name, serde_json::to_vec_pretty(&manifest)?));
        write_outputs(dir, &files)?;
    }
    Ok((manifest, outcome.summary))
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let (cfg, corrupt) = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cfg, corrupt) {
        Ok((manifest, summary)) => {
            for line in summary {
                println!("{line}");
            }
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            let failed: Vec<&Check> = manifest.checks.iter().filter(|c| !c.passed).collect();
            if manifest.command != "verify" || !failed.is_empty() {
                for c in &manifest.checks {
                    if manifest.command != "verify" || !c.passed {
                        println!("{c}");
                    }
                }
            }
            if !manifest.checks.is_empty() {
                println!(
                    "{} of {} checks passed",
                    manifest.checks.len() - failed.len(),
                    manifest.checks.len()
                );
            }
            if failed.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                EXIT_CONFIG
            } else {
                EXIT_FAILED
            }
        }
    }
}
