//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::bounds::{bounds_report, BoundParams};
use crate::error::{Error, Result};
use crate::estimation::{theorem3_experiment, EstimationResult, ExperimentSpec, StateSource};
use crate::linalg::SystemShape;
use crate::observables::{decompose_product, twisted_phase_operator, TermSelection};
use crate::private_states::{make_private_state, maximally_mixed, verify_privacy, Twisting};
use crate::protocol::{
    apply_channel, sweep, write_results_csv, write_sweep_csv, AttackSpec, Protocol, ProtocolConfig, SweepParam,
    TwistingSpec,
};
use crate::wire;

#[derive(Parser, Debug)]
#[command(name = "privqkd", version, about = "Private-state QKD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose the twisted phase operator into local product terms.
    Decompose(DecomposeArgs),
    /// Check that Eve learns nothing about the key of a state.
    VerifyPrivate(VerifyArgs),
    /// Indirect versus direct estimation experiment.
    Estimate(EstimateArgs),
    /// Evaluate finite-sample bounds.
    Bounds(BoundsArgs),
    /// Run the protocol from a JSON config.
    Run(RunArgs),
    /// Run the protocol over a range of one parameter.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TwistingKind {
    Identity,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct StateArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    a: usize,
    #[arg(long, value_enum, default_value = "identity")]
    twisting: TwistingKind,
    /// Required for random twistings.
    #[arg(long)]
    seed: Option<u64>,
}

impl StateArgs {
    fn shape(&self) -> Result<SystemShape> {
        SystemShape::new(self.d, self.a)
    }

    fn twisting(&self) -> Result<Twisting<f64>> {
        let shape = self.shape()?;
        let spec = match self.twisting {
            TwistingKind::Identity => TwistingSpec::Identity,
            TwistingKind::Random => TwistingSpec::Random {
                seed: Some(self.seed.ok_or_else(|| Error::Config("--seed is required for a random twisting".into()))?),
            },
        };
        spec.build(shape, 0)
    }
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    state: StateArgs,
    /// JSON matrix of the state to check, in A, B, A', B' order; replaces
    /// the generated private state.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    a: usize,
    #[arg(long, value_enum, default_value = "identity")]
    twisting: TwistingKind,
    #[arg(long)]
    seed: u64,
    /// Depolarizing strength on Bob's share.
    #[arg(long, default_value_t = 0.0)]
    depolarizing: f64,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_enum, default_value = "nonzero")]
    terms: Terms,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Terms {
    Nonzero,
    All,
}

impl From<Terms> for TermSelection {
    fn from(t: Terms) -> Self {
        match t {
            Terms::Nonzero => TermSelection::Nonzero,
            Terms::All => TermSelection::All,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    LoChau,
    Theorem3,
    TwistedLc,
}

impl BoundKind {
    fn key(self) -> &'static str {
        match self {
            BoundKind::LoChau => "lo_chau",
            BoundKind::Theorem3 => "theorem3",
            BoundKind::TwistedLc => "twisted_lc",
        }
    }
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// JSON parameter file with optional `lo_chau`, `theorem3`, `twisted_lc` sections.
    #[arg(long, conflicts_with = "kind")]
    json: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "json")]
    kind: Option<BoundKind>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    m_z: Option<u64>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    d_prime: Option<u64>,
    #[arg(long)]
    hs_norm: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    definetti_power: Option<u32>,
    /// Parameter to sweep; output becomes CSV.
    #[arg(long, requires = "values", requires = "kind")]
    sweep: Option<String>,
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    /// Trial table (CSV); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full results with bounds and transcripts (JSON).
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum)]
    param: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on usage or configuration errors,
/// 2 on numerical failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        // downstream closed the pipe (e.g. `| head`)
        Err(e) if e.is_broken_pipe() => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Decompose(args) => {
            let twisting = args.state.twisting()?;
            let sigma = twisted_phase_operator(&twisting)?;
            let dec = decompose_product(sigma.matrix(), &twisting.shape())?;
            emit_json(&dec.summary(), args.out.as_deref())
        }
        Command::VerifyPrivate(args) => {
            let shape = args.state.shape()?;
            let rho = match &args.input {
                Some(path) => {
                    let rows: wire::MatrixRepr = serde_json::from_str(&fs::read_to_string(path)?)?;
                    wire::from_repr(&rows)?
                }
                None => {
                    let twisting = args.state.twisting()?;
                    make_private_state(maximally_mixed(shape.d_prime()), twisting)?.gamma
                }
            };
            emit_json(&verify_privacy(&rho, &shape)?, args.out.as_deref())
        }
        Command::Estimate(args) => estimate(args),
        Command::Bounds(args) => bounds(args),
        Command::Run(args) => {
            let mut cfg = read_config(&args.config)?;
            cfg.seed = args.seed;
            if let Some(trials) = args.trials {
                cfg.trials = trials;
            }
            let results = Protocol::new(cfg)?.run_trials()?;
            if let Some(path) = &args.json_out {
                fs::write(path, serde_json::to_string_pretty(&results)?)?;
            }
            with_output(args.out.as_deref(), |w| write_results_csv(&results, w))
        }
        Command::Sweep(args) => {
            let mut cfg = read_config(&args.config)?;
            cfg.seed = args.seed;
            if let Some(trials) = args.trials {
                cfg.trials = trials;
            }
            let points = sweep(&cfg, args.param, &args.values)?;
            with_output(args.out.as_deref(), |w| write_sweep_csv(&points, w))
        }
    }
}

fn read_config(path: &Path) -> Result<ProtocolConfig> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let shape = SystemShape::new(args.d, args.a)?;
    let state = StateArgs { d: args.d, a: args.a, twisting: args.twisting, seed: Some(args.seed) };
    let twisting = state.twisting()?;
    let gamma = make_private_state(maximally_mixed(shape.d_prime()), twisting.clone())?.gamma;
    let rho = apply_channel(&gamma, &shape, &AttackSpec::Depolarizing { p: args.depolarizing })?;
    let sigma = twisted_phase_operator(&twisting)?;
    let dec = decompose_product(sigma.matrix(), &shape)?;
    let spec = ExperimentSpec { m: args.m, n: args.n, trials: args.trials, seed: args.seed, selection: args.terms.into() };
    let results = theorem3_experiment(&StateSource::iid(shape, rho)?, &dec, spec)?;
    match args.format {
        Format::Json => emit_json(&results, args.out.as_deref()),
        Format::Csv => with_output(args.out.as_deref(), |w| write_estimation_csv(&results, w)),
    }
}

#[derive(Serialize)]
struct EstimationRow {
    trial: usize,
    seed: u64,
    component: usize,
    sigma_indirect: f64,
    sigma_direct: f64,
    deviation: f64,
}

pub fn write_estimation_csv<W: Write>(results: &[EstimationResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(EstimationRow {
            trial: r.trial,
            seed: r.seed,
            component: r.component,
            sigma_indirect: r.sigma_indirect,
            sigma_direct: r.sigma_direct,
            deviation: r.deviation,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let Some(kind) = args.kind else {
        let path = args.json.as_deref().expect("clap enforces --json or --kind");
        let params: BoundParams = serde_json::from_str(&fs::read_to_string(path)?)?;
        return emit_json(&bounds_report(&params)?, args.out.as_deref());
    };

    let mut section = serde_json::Map::new();
    let fields: [(&str, Option<Value>); 10] = [
        ("n", args.n.map(Value::from)),
        ("m", args.m.map(Value::from)),
        ("m_z", args.m_z.map(Value::from)),
        ("r", args.r.map(Value::from)),
        ("t", args.t.map(Value::from)),
        ("d", args.d.map(Value::from)),
        ("d_prime", args.d_prime.map(Value::from)),
        ("hs_norm", args.hs_norm.map(Value::from)),
        ("delta", args.delta.map(Value::from)),
        ("definetti_power", args.definetti_power.map(Value::from)),
    ];
    for (name, value) in fields {
        if let Some(v) = value {
            section.insert(name.to_string(), v);
        }
    }

    let report_at = |section: &serde_json::Map<String, Value>| -> Result<_> {
        let params: BoundParams = serde_json::from_value(Value::Object(
            [(kind.key().to_string(), Value::Object(section.clone()))].into_iter().collect(),
        ))
        .map_err(|e| Error::Config(format!("bound parameters for {}: {e}", kind.key())))?;
        bounds_report(&params)
    };

    let Some(name) = &args.sweep else {
        return emit_json(&report_at(&section)?, args.out.as_deref());
    };
    let integral = !matches!(name.as_str(), "hs_norm" | "delta");
    let mut rows = Vec::with_capacity(args.values.len());
    for &v in &args.values {
        let value = if integral {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Config(format!("{name} must be a non-negative integer, got {v}")));
            }
            Value::from(v as u64)
        } else {
            Value::from(v)
        };
        section.insert(name.clone(), value);
        let rep = report_at(&section)?;
        let three = match kind {
            BoundKind::Theorem3 => rep.theorem3,
            BoundKind::TwistedLc => rep.twisted_lc,
            BoundKind::LoChau => None,
        };
        rows.push(SweepRow {
            value: v,
            definetti_log2: three.map(|b| b.definetti.log2),
            chernoff_log2: three.map(|b| b.chernoff.log2),
            sampling_log2: three.map(|b| b.sampling.log2),
            total_log2: three.map(|b| b.total.log2).or(rep.lo_chau.map(|t| t.log2)),
            total_value: three.map(|b| b.total.value).or(rep.lo_chau.map(|t| t.value)),
        });
    }
    with_output(args.out.as_deref(), |w| {
        let mut w = csv::Writer::from_writer(w);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    definetti_log2: Option<f64>,
    chernoff_log2: Option<f64>,
    sampling_log2: Option<f64>,
    total_log2: Option<f64>,
    total_value: Option<f64>,
}

fn emit_json<S: Serialize>(value: &S, out: Option<&Path>) -> Result<()> {
    with_output(out, |mut w| {
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}
