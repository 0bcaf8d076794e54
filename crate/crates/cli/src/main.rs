//! `klsrp`: runs the verification suites and writes machine-readable reports.

mod config;
mod report;
mod suites;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use klsrp_core::criterion::integral_id;
use klsrp_core::Error;
use rayon::prelude::*;

use config::{apply_sweep, ConfigError, Format, RunConfig, Suite, SweepParam};
use report::{write_csv, write_json, CheckRecord, Status, SuiteReport, Table, Timing};
use suites::{integral_check, integral_table, sweep_header, sweep_point, Context};

#[derive(Parser, Debug)]
#[command(name = "klsrp", version, about = "Verification suites for trace inequalities and quantum rotor bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomized matrix trace inequality suite.
    Kls(Common),
    /// Truncation ladders for Hilbert–Schmidt operators.
    Ladder(Common),
    /// Brillouin-zone integral I_d.
    Integral(Common),
    /// Ground state and momentum observables of the rotor model.
    Diagonalize(Diagonalize),
    /// Runs the selected suites.
    Verify(Verify),
    /// Rotor pipeline over a range of one model parameter.
    Sweep(Sweep),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Lattice dimension d.
    #[arg(short = 'd', long = "dim", alias = "d")]
    dim: Option<usize>,
    /// Lattice edge 2N (even).
    #[arg(long)]
    edge: Option<usize>,
    /// Angular momentum cutoff M.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    inertia: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    /// Randomized trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Largest random matrix side.
    #[arg(long)]
    max_dim: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for output files when --out is absent.
    #[arg(long, env = "KLSRP_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// TOML configuration, or a JSON report whose embedded configuration is reused.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Diagonalize {
    #[command(flatten)]
    common: Common,
    /// Writes the Hamiltonian as `row col re im` lines.
    #[arg(long)]
    coo: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Verify {
    #[command(flatten)]
    common: Common,
    /// Suites to run; `all` selects every suite.
    #[arg(long, value_delimiter = ',', value_parser = parse_suite)]
    suite: Vec<SuiteChoice>,
}

#[derive(Args, Debug)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    param: Option<SweepParam>,
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum SuiteChoice {
    All,
    One(Suite),
}

fn parse_suite(s: &str) -> Result<SuiteChoice, String> {
    if s == "all" {
        return Ok(SuiteChoice::All);
    }
    Suite::ALL
        .into_iter()
        .find(|x| x.name() == s)
        .map(SuiteChoice::One)
        .ok_or_else(|| format!("unknown suite `{s}`; expected all, kls, vectorize, ladder, rotor, rp or criterion"))
}

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Exit {
    Pass = 0,
    CheckFailure = 1,
    Usage = 2,
    Numerical = 3,
}

fn classify(e: &Error) -> Exit {
    match e {
        Error::NonConvergence { .. } | Error::Precision { .. } | Error::Degenerate { .. } => Exit::Numerical,
        Error::Contract(_) => Exit::CheckFailure,
        _ => Exit::Usage,
    }
}

/// Failure that ends the run before a report exists.
enum Abort {
    Config(ConfigError),
    Core(Error),
    Io(std::io::Error),
}

impl From<ConfigError> for Abort {
    fn from(e: ConfigError) -> Self {
        Abort::Config(e)
    }
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        Abort::Core(e)
    }
}

impl From<std::io::Error> for Abort {
    fn from(e: std::io::Error) -> Self {
        Abort::Io(e)
    }
}

fn effective_config(c: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let m = &mut cfg.model;
    m.dim = c.dim.unwrap_or(m.dim);
    m.edge = c.edge.unwrap_or(m.edge);
    m.cutoff = c.cutoff.unwrap_or(m.cutoff);
    m.inertia = c.inertia.unwrap_or(m.inertia);
    m.coupling = c.coupling.unwrap_or(m.coupling);
    let r = &mut cfg.random;
    r.trials = c.trials.unwrap_or(r.trials);
    r.max_dim = c.max_dim.unwrap_or(r.max_dim);
    r.seed = c.seed.unwrap_or(r.seed);
    if let Some(t) = c.tol {
        cfg.tolerances.integral = t;
    }
    let o = &mut cfg.output;
    o.format = c.format.unwrap_or(o.format);
    if c.out.is_some() {
        o.out = c.out.clone();
    }
    if c.out_dir.is_some() {
        o.dir = c.out_dir.clone();
    }
    Ok(cfg)
}

/// Report destination: `--out`, else `<dir>/<command>.<ext>`, else stdout.
fn destination(cfg: &RunConfig, command: &str) -> Result<Option<PathBuf>, std::io::Error> {
    let o = &cfg.output;
    let ext = match o.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    match (&o.out, &o.dir) {
        (Some(p), _) => Ok(Some(p.clone())),
        (None, Some(d)) => {
            std::fs::create_dir_all(d)?;
            Ok(Some(d.join(format!("{command}.{ext}"))))
        }
        (None, None) => Ok(None),
    }
}

struct Outcome {
    checks: Vec<CheckRecord>,
    table: Option<Table>,
    timing: BTreeMap<String, f64>,
    exit: Exit,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            table: None,
            timing: BTreeMap::new(),
            exit: Exit::Pass,
            notes: Vec::new(),
        }
    }

    fn error(&mut self, suite: &str, e: &Error) -> Result<(), Abort> {
        match classify(e) {
            Exit::Usage => Err(Abort::Core(e.clone())),
            class => {
                self.exit = self.exit.max(class);
                let rec = CheckRecord::new(suite, "error", serde_json::Value::Null).assert(false, e.to_string());
                self.checks.push(rec);
                Ok(())
            }
        }
    }
}

fn run_suites(cfg: &RunConfig, suites: &[Suite], out: &mut Outcome) -> Result<(), Abort> {
    let cx = Context::new(cfg);
    for &s in Suite::ALL.iter().filter(|s| suites.contains(s)) {
        let t = Instant::now();
        match cx.run(s) {
            Ok(r) => {
                out.checks.extend(r.checks);
                if out.table.is_none() {
                    out.table = r.momentum.or(r.ladder);
                }
            }
            Err(e) => out.error(s.name(), &e)?,
        }
        out.timing.insert(s.name().into(), t.elapsed().as_secs_f64());
    }
    Ok(())
}

fn execute(command: &Command) -> Result<(String, RunConfig, Outcome), Abort> {
    let mut out = Outcome::new();
    let (name, cfg) = match command {
        Command::Kls(c) | Command::Ladder(c) | Command::Integral(c) => {
            let mut cfg = effective_config(c)?;
            let (name, suite) = match command {
                Command::Kls(_) => ("kls", Some(Suite::Kls)),
                Command::Ladder(_) => ("ladder", Some(Suite::Ladder)),
                _ => ("integral", None),
            };
            cfg.suites = suite.into_iter().collect();
            cfg.validate()?;
            match suite {
                Some(s) => {
                    run_suites(&cfg, &[s], &mut out)?;
                    if s == Suite::Kls {
                        out.table = None;
                    }
                }
                None => {
                    let t = Instant::now();
                    match integral_id(cfg.model.dim, cfg.tolerances.integral) {
                        Ok(res) => {
                            let rec = integral_check(&res, cfg.tolerances.integral);
                            out.notes.push(if res.diverged {
                                format!("I_{} diverges", res.dim)
                            } else {
                                format!("I_{} = {:.9} (error estimate {:.1e})", res.dim, res.value, res.error_estimate)
                            });
                            out.checks.push(rec);
                            out.table = Some(integral_table(&res));
                        }
                        Err(e) => out.error("criterion", &e)?,
                    }
                    out.timing.insert("criterion".into(), t.elapsed().as_secs_f64());
                }
            }
            (name, cfg)
        }
        Command::Diagonalize(d) => {
            let mut cfg = effective_config(&d.common)?;
            cfg.suites = vec![Suite::Rotor];
            if d.coo.is_some() {
                cfg.output.coo = d.coo.clone();
            }
            cfg.validate()?;
            let cx = Context::new(&cfg);
            let t = Instant::now();
            match cx.run(Suite::Rotor) {
                Ok(r) => {
                    out.checks.extend(r.checks);
                    out.table = r.momentum;
                    let sys = cx.system()?;
                    out.notes.push(format!(
                        "E0 = {:.12}, gap = {:.6e}, dim = {}",
                        sys.ground.energy, sys.ground.gap, sys.hamiltonian.dim
                    ));
                    if let Some(p) = &cfg.output.coo {
                        let f = std::io::BufWriter::new(std::fs::File::create(p)?);
                        sys.hamiltonian.write_coo(f)?;
                        out.notes.push(format!("{} nonzeros written to {}", sys.hamiltonian.nnz(), p.display()));
                    }
                }
                Err(e) => out.error("rotor", &e)?,
            }
            out.timing.insert("rotor".into(), t.elapsed().as_secs_f64());
            ("diagonalize", cfg)
        }
        Command::Verify(v) => {
            let mut cfg = effective_config(&v.common)?;
            if !v.suite.is_empty() {
                cfg.suites = if v.suite.iter().any(|s| matches!(s, SuiteChoice::All)) {
                    Suite::ALL.to_vec()
                } else {
                    v.suite
                        .iter()
                        .filter_map(|s| match s {
                            SuiteChoice::One(x) => Some(*x),
                            SuiteChoice::All => None,
                        })
                        .collect()
                };
            }
            cfg.suites.sort();
            cfg.suites.dedup();
            cfg.validate()?;
            if cfg.suites.is_empty() {
                return Err(ConfigError::new("suites", "no suite selected").into());
            }
            let suites = cfg.suites.clone();
            run_suites(&cfg, &suites, &mut out)?;
            out.table = None;
            ("verify", cfg)
        }
        Command::Sweep(s) => {
            let mut cfg = effective_config(&s.common)?;
            cfg.suites = vec![Suite::Rotor];
            if let Some(p) = s.param {
                cfg.sweep.param = p;
            }
            if !s.values.is_empty() {
                cfg.sweep.values = s.values.clone();
            }
            cfg.validate()?;
            let t = Instant::now();
            let points: Vec<_> = cfg
                .sweep
                .values
                .par_iter()
                .map(|&v| {
                    let mut m = cfg.model.clone();
                    apply_sweep(&mut m, cfg.sweep.param, v);
                    sweep_point(&cfg, m)
                })
                .collect();
            let mut table = Table::new(sweep_header());
            for p in points {
                match p {
                    Ok((row, rec)) => {
                        table.rows.push(row);
                        out.checks.push(rec);
                    }
                    Err(e) => out.error("sweep", &e)?,
                }
            }
            out.table = Some(table);
            out.timing.insert("sweep".into(), t.elapsed().as_secs_f64());
            ("sweep", cfg)
        }
    };
    if out.checks.iter().any(|c| c.status == Status::Fail) {
        out.exit = out.exit.max(Exit::CheckFailure);
    }
    Ok((name.to_string(), cfg, out))
}

fn emit(name: &str, cfg: RunConfig, out: Outcome, total: f64) -> Result<Exit, Abort> {
    let dest = destination(&cfg, name)?;
    let to_stdout = dest.is_none();
    let say = |line: &str| {
        let _ = if to_stdout {
            writeln!(std::io::stderr(), "{line}")
        } else {
            writeln!(std::io::stdout(), "{line}")
        };
    };
    for n in &out.notes {
        say(n);
    }
    for c in &out.checks {
        say(&format!("{} {}.{}: {}", c.status.label(), c.suite, c.name, c.detail));
    }
    let report = SuiteReport::new(
        name,
        cfg,
        out.checks,
        Timing {
            total_seconds: total,
            suites: out.timing,
        },
    );
    let s = &report.summary;
    say(&format!(
        "{} passed, {} failed, {} flagged; seed {}",
        s.passed, s.failed, s.flagged, report.seed
    ));
    if !s.failing.is_empty() {
        say(&format!("failing: {}", s.failing.join(", ")));
    }
    match report.config.output.format {
        Format::Json => write_json(&report, dest.as_deref())?,
        Format::Csv => {
            let table = out.table.unwrap_or_else(|| Table::from_checks(&report.checks));
            write_csv(&table, dest.as_deref())?;
        }
    }
    if let Some(p) = dest {
        say(&format!("wrote {}", p.display()));
    }
    Ok(out.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = execute(&cli.command).and_then(|(name, cfg, out)| emit(&name, cfg, out, start.elapsed().as_secs_f64()));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(Abort::Config(e)) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(Exit::Usage as u8)
        }
        Err(Abort::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e) as u8)
        }
        Err(Abort::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(Exit::Usage as u8)
        }
    }
}
