//! `late-power` command-line interface.
//!
//! Every subcommand is a thin wrapper over a library call; results are
//! rendered as JSON (sorted keys), CSV or aligned text.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::power::{self, AssignmentMode, AssumptionSet, Rounding};
use crate::sim::{self, ObservedTable, SimConfig, StrataSpec};
use crate::tables;
use crate::{CovariateAdjust, DesignPoint, Error, ErrorSpec};

pub const THREADS_ENV: &str = "LATE_POWER_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "late-power",
    version,
    about = "Power analysis for local average treatment effects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Power bounds at a design point.
    Power(PowerArgs),
    /// Minimum detectable effect size bounds.
    Mdes(MdesArgs),
    /// Required sample size bounds.
    N(NArgs),
    /// Monte-Carlo power of the Wald IV and ITT tests for a spec file.
    Simulate(SimulateArgs),
    /// Sweep κ for a spec template and check the analytic bounds.
    Validate(ValidateArgs),
    /// Regenerate a published table (1, 2, B1, B2, B3 or B4).
    Tables(TablesArgs),
    /// Stratum-mean or residual-covariance diagnostics.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Equal,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RoundArg {
    Ceil,
    Nearest,
}

impl From<RoundArg> for Rounding {
    fn from(r: RoundArg) -> Self {
        match r {
            RoundArg::Ceil => Rounding::Ceil,
            RoundArg::Nearest => Rounding::Nearest,
        }
    }
}

#[derive(Args, Debug)]
struct DesignArgs {
    /// First-stage effect π.
    #[arg(long)]
    pi: f64,
    /// Assignment probability P(Z = 1).
    #[arg(long, default_value_t = 0.5)]
    pz: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bound on E[ν²]; `auto` uses equal assignment exactly when pz = 0.5.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
}

impl DesignArgs {
    fn mode(&self) -> AssignmentMode {
        match self.mode {
            ModeArg::Auto => AssignmentMode::for_assignment(self.pz),
            ModeArg::Equal => AssignmentMode::EqualAssignment,
            ModeArg::General => AssignmentMode::GeneralAssignment,
        }
    }
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long)]
    n: f64,
    #[command(flatten)]
    design: DesignArgs,
    /// Also report the lower bound under ordered means.
    #[arg(long)]
    ordered: bool,
    /// Share of first-stage residual variance explained by covariates.
    #[arg(long, default_value_t = 0.0)]
    r2dw: f64,
    /// Share of reduced-form residual variance explained by covariates.
    #[arg(long, default_value_t = 0.0)]
    r2yw: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct MdesArgs {
    #[arg(long)]
    n: f64,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct NArgs {
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = RoundArg::Ceil)]
    round: RoundArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct SimFlags {
    /// Superpopulation spec (JSON): a bare spec or `{"spec": .., "config": ..}`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimFlags,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    sim: SimFlags,
    /// Inclusive grid `start:stop:step`.
    #[arg(long)]
    kappa_grid: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[arg(long)]
    which: String,
    #[arg(long, default_value_t = 5000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RoundArg::Nearest)]
    round: RoundArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "source")]
struct DiagnoseSource {
    /// Observed (Z, D) table (JSON).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Spec file for the residual-covariance check.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    source: DiagnoseSource,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// A failure with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. } | Error::Config(_) => 2,
            Error::DegenerateSample(_) | Error::InfeasibleTable(_) | Error::Bracket { .. } => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Rendered output plus the status it should exit with.
struct Outcome {
    body: String,
    code: i32,
}

type CmdResult = std::result::Result<Outcome, Failure>;

/// Parses `args` (including the program name), runs the command and
/// writes its document to `out`. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = workers().and_then(|w| dispatch(cli.command, w));
    match result {
        Ok(o) => {
            if out.write_all(o.body.as_bytes()).is_err() {
                return 1;
            }
            o.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn workers() -> std::result::Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            Failure::usage(format!(
                "{THREADS_ENV} must be a nonnegative integer (got {s:?})"
            ))
        }),
    }
}

fn dispatch(cmd: Command, workers: usize) -> CmdResult {
    match cmd {
        Command::Power(a) => cmd_power(&a),
        Command::Mdes(a) => cmd_mdes(&a),
        Command::N(a) => cmd_n(&a),
        Command::Simulate(a) => cmd_simulate(&a, workers),
        Command::Validate(a) => cmd_validate(&a, workers),
        Command::Tables(a) => cmd_tables(&a, workers),
        Command::Diagnose(a) => cmd_diagnose(&a),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct PowerOut {
    kappa: f64,
    pi: f64,
    n: f64,
    p_z: f64,
    alpha: f64,
    mode: AssignmentMode,
    r2_dw: f64,
    r2_yw: f64,
    lower: f64,
    upper: f64,
    ordered_lower: Option<f64>,
    ncp_lower: f64,
    ncp_upper: Option<f64>,
    ncp_ordered: Option<f64>,
}

fn cmd_power(a: &PowerArgs) -> CmdResult {
    let d = &a.design;
    let err = ErrorSpec::new(d.alpha, 0.2)?;
    let design = DesignPoint::new(a.kappa, d.pi, a.n, d.pz)?;
    let assumptions = AssumptionSet::new(d.mode(), a.ordered);
    let cov = CovariateAdjust::new(a.r2dw, a.r2yw)?;
    let b = power::covariate_power_bounds(&design, &cov, assumptions, &err)?;
    let ncp = power::covariate_ncp_bounds(&design, &cov, assumptions)?;
    let doc = PowerOut {
        kappa: a.kappa,
        pi: d.pi,
        n: a.n,
        p_z: d.pz,
        alpha: d.alpha,
        mode: assumptions.mode,
        r2_dw: a.r2dw,
        r2_yw: a.r2yw,
        lower: b.lower,
        upper: b.upper,
        ordered_lower: b.ordered_lower,
        ncp_lower: ncp.lower,
        ncp_upper: finite(ncp.upper),
        ncp_ordered: a.ordered.then_some(ncp.ordered),
    };
    render_one(&doc, a.format, 0)
}

#[derive(Serialize)]
struct MdesOut {
    pi: f64,
    n: f64,
    p_z: f64,
    alpha: f64,
    beta: f64,
    mode: AssignmentMode,
    kappa_low: f64,
    kappa_high: Option<f64>,
    kappa_star: Option<f64>,
    status: &'static str,
    reason: Option<String>,
}

fn cmd_mdes(a: &MdesArgs) -> CmdResult {
    let d = &a.design;
    let err = ErrorSpec::new(d.alpha, a.beta)?;
    let assumptions = AssumptionSet::new(d.mode(), true);
    let m = power::mdes(d.pi, a.n, d.pz, assumptions, &err)?;
    let ok = m.is_attainable();
    let doc = MdesOut {
        pi: d.pi,
        n: a.n,
        p_z: d.pz,
        alpha: d.alpha,
        beta: a.beta,
        mode: assumptions.mode,
        kappa_low: m.kappa_low,
        kappa_high: finite(m.kappa_high),
        kappa_star: finite(m.kappa_star),
        status: if ok { "ok" } else { "unattainable" },
        reason: m.unattainable_reason(),
    };
    render_one(&doc, a.format, if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct NOut {
    kappa: f64,
    pi: f64,
    p_z: f64,
    alpha: f64,
    beta: f64,
    mode: AssignmentMode,
    rounding: &'static str,
    conservative_n: f64,
    alternative_n: f64,
    optimistic_n: f64,
    conservative_exact: f64,
    alternative_exact: f64,
    optimistic_exact: f64,
}

fn cmd_n(a: &NArgs) -> CmdResult {
    let d = &a.design;
    let err = ErrorSpec::new(d.alpha, a.beta)?;
    let assumptions = AssumptionSet::new(d.mode(), true);
    let s = power::required_n(a.kappa, d.pi, d.pz, assumptions, &err)?;
    let r: Rounding = a.round.into();
    let doc = NOut {
        kappa: a.kappa,
        pi: d.pi,
        p_z: d.pz,
        alpha: d.alpha,
        beta: a.beta,
        mode: assumptions.mode,
        rounding: match a.round {
            RoundArg::Ceil => "ceil",
            RoundArg::Nearest => "nearest",
        },
        conservative_n: power::round_sample_size(s.n_high, r),
        alternative_n: power::round_sample_size(s.n_star, r),
        optimistic_n: power::round_sample_size(s.n_low, r),
        conservative_exact: s.n_high,
        alternative_exact: s.n_star,
        optimistic_exact: s.n_low,
    };
    render_one(&doc, a.format, 0)
}

fn read_json(path: &Path) -> std::result::Result<Value, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{} is not valid JSON: {e}", path.display())))
}

/// Loads a bare spec or a `{spec, config}` wrapper.
fn load_spec(path: &Path) -> std::result::Result<(StrataSpec, SimConfig), Failure> {
    let v = read_json(path)?;
    let bad = |e: serde_json::Error| Failure::usage(format!("{}: {e}", path.display()));
    let (spec, cfg) = match v.get("spec") {
        Some(inner) => {
            let spec: StrataSpec = serde_json::from_value(inner.clone()).map_err(bad)?;
            let cfg = match v.get("config") {
                Some(c) => serde_json::from_value(c.clone()).map_err(bad)?,
                None => SimConfig::default(),
            };
            (spec, cfg)
        }
        None => (
            serde_json::from_value(v).map_err(bad)?,
            SimConfig::default(),
        ),
    };
    spec.validate()?;
    Ok((spec, cfg))
}

fn sim_inputs(f: &SimFlags) -> std::result::Result<(StrataSpec, SimConfig), Failure> {
    let (spec, mut cfg) = load_spec(&f.spec)?;
    if let Some(n) = f.n {
        cfg.n = n;
    }
    if let Some(r) = f.reps {
        cfg.reps = r;
    }
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
    if let Some(a) = f.alpha {
        cfg.alpha = a;
    }
    cfg.validate()?;
    Ok((spec, cfg))
}

fn cmd_simulate(a: &SimulateArgs, workers: usize) -> CmdResult {
    let (spec, cfg) = sim_inputs(&a.sim)?;
    let r = sim::simulate_power_with_workers(&spec, &cfg, workers)?;
    render_one(&r, a.format, 0)
}

fn cmd_validate(a: &ValidateArgs, workers: usize) -> CmdResult {
    let (spec, cfg) = sim_inputs(&a.sim)?;
    let grid = sim::parse_grid(&a.kappa_grid)?;
    let points = sim::validate_bounds(&spec, &grid, &cfg, workers)?;
    render_many(&points, a.format)
}

fn cmd_tables(a: &TablesArgs, workers: usize) -> CmdResult {
    let which = a.which.trim();
    if let Some(pi) = tables::analytic_table_pi(which) {
        let rows = tables::sample_size_table(
            pi,
            tables::JTPA_P_Z,
            &tables::kappa_grid(),
            &ErrorSpec::conventional(),
            a.round.into(),
        )?;
        return render_many(&rows, a.format);
    }
    if sim::scenarios::table(which).is_none() {
        return Err(Failure::usage(format!(
            "--which must be one of 1, 2, B1, B2, B3, B4 (got {which:?})"
        )));
    }
    let rows = tables::simulate_table(which, a.reps, a.seed, workers)?;
    render_many(&rows, a.format)
}

fn cmd_diagnose(a: &DiagnoseArgs) -> CmdResult {
    if let Some(path) = &a.source.table {
        let v = read_json(path)?;
        let t: ObservedTable = serde_json::from_value(v)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let r = sim::stratum_means_from_table(&t)?;
        return render_one(&r, a.format, 0);
    }
    let path = a.source.spec.as_ref().expect("clap enforces one source");
    let (spec, mut cfg) = load_spec(path)?;
    cfg.n = a.n.unwrap_or(100_000);
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let r = sim::covariance_diagnostics(&spec, &cfg)?;
    render_one(&r, a.format, 0)
}

fn render_one<T: Serialize>(doc: &T, format: Format, code: i32) -> CmdResult {
    let body = match format {
        Format::Json => json(doc)?,
        Format::Csv => csv_rows(std::slice::from_ref(doc))?,
        Format::Text => {
            let (header, rows) = cells(std::slice::from_ref(doc))?;
            let width = header.iter().map(|h| h.len()).max().unwrap_or(0);
            let mut s = String::new();
            for (h, v) in header.iter().zip(&rows[0]) {
                s.push_str(&format!("{h:<width$}  {v}\n"));
            }
            s
        }
    };
    Ok(Outcome { body, code })
}

fn render_many<T: Serialize>(rows: &[T], format: Format) -> CmdResult {
    let body = match format {
        Format::Json => json(&rows)?,
        Format::Csv => csv_rows(rows)?,
        Format::Text => {
            let (header, cells) = cells(rows)?;
            let widths: Vec<usize> = (0..header.len())
                .map(|j| {
                    cells
                        .iter()
                        .map(|r| r[j].len())
                        .chain([header[j].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |fields: &[String]| {
                let parts: Vec<String> = fields
                    .iter()
                    .zip(&widths)
                    .map(|(f, w)| format!("{f:>w$}"))
                    .collect();
                parts.join("  ").trim_end().to_string() + "\n"
            };
            let mut s = line(&header);
            for r in &cells {
                s.push_str(&line(r));
            }
            s
        }
    };
    Ok(Outcome { body, code: 0 })
}

fn json<T: Serialize + ?Sized>(doc: &T) -> std::result::Result<String, Failure> {
    // round-tripping through Value sorts object keys
    let v = serde_json::to_value(doc).map_err(internal)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(internal)?;
    s.push('\n');
    Ok(s)
}

fn csv_rows<T: Serialize>(rows: &[T]) -> std::result::Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(internal)?;
    }
    let bytes = w.into_inner().map_err(internal)?;
    String::from_utf8(bytes).map_err(internal)
}

fn cells<T: Serialize>(
    rows: &[T],
) -> std::result::Result<(Vec<String>, Vec<Vec<String>>), Failure> {
    let text = csv_rows(rows)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(internal)?
        .iter()
        .map(String::from)
        .collect();
    let body = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(internal)?;
    Ok((header, body))
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: format!("output formatting failed: {e}"),
    }
}
