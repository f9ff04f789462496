//! Command-line front end.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ensystem::{psi, EnSystem, SystemError};
use crate::fexplorer::{
    double_by_idempotent, explore, ExploreError, ExploreOptions, DEFAULT_BUDGET,
};
use crate::gadgets::{
    build_phi, build_system_s, eight_square_split, four_square_block, majorant_g, majorant_h,
    power_tower, DeltaError, DeltaSpec, GadgetError, GadgetSystem,
};
use crate::json_int::JsonInt;
use crate::polyalg::{parse_polynomial, PolyError};
use crate::reducer::{
    compile, random_polynomial, verify_conditions, CompileError, PolynomialShape,
};
use crate::solver::{DomainSpec, SolveError, Solver, DEFAULT_WITNESS_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Limit(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Limit(_) => EXIT_LIMIT,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Parse(m)
            | CliError::Limit(m)
            | CliError::Invariant(m) => m,
        }
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::PsiCeiling { .. } | SystemError::RelabelCeiling { .. } => {
                CliError::Limit(e.to_string())
            }
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::System(s) => s.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::ScanCeiling { .. } => CliError::Limit(e.to_string()),
            SolveError::BadBound | SolveError::PinOutOfRange { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<GadgetError> for CliError {
    fn from(e: GadgetError) -> Self {
        match e {
            GadgetError::Compile(c) => c.into(),
            GadgetError::System(s) => s.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ExploreError> for CliError {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::System(s) => s.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<DeltaError> for CliError {
    fn from(e: DeltaError) -> Self {
        match e {
            DeltaError::System(s) => s.into(),
            DeltaError::NotPositive { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "finfold",
    version,
    about = "Compile Diophantine equations into unit/sum/product systems and count their solutions"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by all commands. Unset options fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// JSON file with default values for these options
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Solution domain: z, n or n+
    #[arg(long, global = true)]
    domain: Option<DomainSpec>,
    /// Search box radius
    #[arg(long, global = true)]
    bound: Option<u64>,
    /// Maximum number of subsystems handed to the solver
    #[arg(long, global = true, value_parser = parse_count)]
    budget: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized corpora
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Input file (standard input when absent)
    #[arg(long, short, global = true)]
    input: Option<PathBuf>,
    /// Output file (standard output when absent)
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Print a progress line to standard error every N examined subsystems
    #[arg(long, global = true)]
    progress: Option<u64>,
}

/// Fully resolved options.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub bound: Option<u64>,
    pub budget: u64,
    pub workers: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub progress: Option<u64>,
}

impl RunConfig {
    fn resolve(flags: &CommonArgs) -> Result<Self, CliError> {
        let file = match &flags.config {
            None => CommonArgs::default(),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Parse(format!("config {}: {e}", path.display())))?
            }
        };
        let config = RunConfig {
            domain: flags.domain.or(file.domain).unwrap_or(DomainSpec::Integers),
            bound: flags.bound.or(file.bound),
            budget: flags.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET),
            workers: flags.workers.or(file.workers).unwrap_or(1),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            input: flags.input.clone().or(file.input),
            output: flags.out.clone().or(file.out),
            progress: flags.progress.or(file.progress),
        };
        if config.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if config.bound == Some(0) {
            return Err(CliError::Usage("--bound must be at least 1".into()));
        }
        Ok(config)
    }

    fn bound_or(&self, default: u64) -> u64 {
        self.bound.unwrap_or(default)
    }
}

/// Accepts plain integers and integral scientific notation such as `1e6`.
fn parse_count(text: &str) -> Result<u64, String> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let (mantissa, exp) = text
        .split_once(['e', 'E'])
        .ok_or_else(|| format!("not a count: '{text}'"))?;
    let mantissa: u64 = mantissa
        .parse()
        .map_err(|_| format!("not a count: '{text}'"))?;
    let exp: u32 = exp.parse().map_err(|_| format!("not a count: '{text}'"))?;
    10u64
        .checked_pow(exp)
        .and_then(|p| p.checked_mul(mantissa))
        .ok_or_else(|| format!("count too large: '{text}'"))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a polynomial equation into a system
    Compile {
        #[arg(long)]
        poly: Option<String>,
    },
    /// Count the solutions of a system
    Solve {
        /// Fix a variable: x3=5, 3=5, or a role name such as x2=2
        #[arg(long = "pin")]
        pins: Vec<String>,
        #[arg(long)]
        witness_cap: Option<usize>,
    },
    /// Search subsystems of the full equation set for the largest finite count
    ExploreF {
        #[arg(long)]
        n: usize,
        /// Examine every subsystem instead of one per relabeling class
        #[arg(long)]
        no_symmetry: bool,
    },
    /// Add a fresh variable with x*x = x, doubling the count
    Lift,
    /// Build a named gadget system
    Gadget {
        #[command(subcommand)]
        kind: GadgetCommand,
    },
    /// Print the sum-of-squares polynomial of a system
    EmitEquation,
    /// Length bound for the equation of a full equation set
    Psi {
        #[arg(long)]
        n: usize,
    },
    /// Majorant values h(1..n) and g(1..n) for a given delta
    Majorant {
        #[arg(long, default_value = "identity")]
        delta: String,
        #[arg(long)]
        n: usize,
    },
    /// Check that a compiled system has the solutions of its polynomial
    Verify {
        #[arg(long)]
        poly: Option<String>,
        /// Check this many seeded random polynomials instead
        #[arg(long)]
        random: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum GadgetCommand {
    Tower {
        #[arg(long)]
        s: usize,
    },
    FourSquare {
        #[arg(long, default_value = "")]
        prefix: String,
    },
    EightSquare {
        #[arg(long = "pin")]
        pins: Vec<String>,
    },
    SystemS {
        #[arg(long)]
        poly: String,
    },
    Phi {
        #[arg(long)]
        poly: String,
    },
}

/// Parses the command line and runs it, writing the primary output to
/// `stdout` (or the output file) and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let config = RunConfig::resolve(&cli.common)?;
    let mut status = EXIT_OK;
    let document = match &cli.command {
        Command::Compile { poly } => {
            let text = match poly {
                Some(p) => p.clone(),
                None => read_input(&config)?,
            };
            compile(&parse_polynomial(text.trim())?)?.to_json()
        }
        Command::Solve { pins, witness_cap } => {
            let input = read_json(&config)?;
            let (system, roles, mut pinned) = system_from_json(&input)?;
            for spec in pins {
                let (k, v) = parse_pin(spec, &roles)?;
                pinned.insert(k, v);
            }
            let report = Solver::new(&system, config.domain)
                .radius(config.bound_or(10))
                .pins(&pinned)
                .witness_cap(witness_cap.unwrap_or(DEFAULT_WITNESS_CAP))
                .workers(config.workers)
                .run()?;
            to_value(&report)
        }
        Command::ExploreF { n, no_symmetry } => {
            let options = ExploreOptions {
                box_radius: config.bound_or(64),
                budget: config.budget,
                workers: config.workers,
                use_symmetry: !no_symmetry,
            };
            let mut last = 0u64;
            let every = config.progress;
            let report = explore(*n, &options, |c| {
                if let Some(step) = every.filter(|&s| s > 0) {
                    if c.examined / step > last / step {
                        let _ = writeln!(
                            stderr,
                            "examined {} certified {} pruned {} uncertified {}",
                            c.examined, c.certified_finite, c.pruned, c.uncertified
                        );
                    }
                    last = c.examined;
                }
            })?;
            if !report.exhaustive {
                status = EXIT_LIMIT;
            }
            to_value(&report)
        }
        Command::Lift => {
            let (system, _, _) = system_from_json(&read_json(&config)?)?;
            to_value(&double_by_idempotent(&system))
        }
        Command::Gadget { kind } => gadget_document(kind)?,
        Command::EmitEquation => {
            let (system, _, _) = system_from_json(&read_json(&config)?)?;
            let text = system.to_diophantine().canonical_text();
            write_output(&config, stdout, format!("{text}\n").as_bytes())?;
            return Ok(status);
        }
        Command::Psi { n } => {
            if *n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            serde_json::json!({ "n": n, "psi": psi(*n)? })
        }
        Command::Majorant { delta, n } => {
            if *n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let spec: DeltaSpec = delta.parse()?;
            let mut h = Vec::with_capacity(*n);
            let mut g = Vec::with_capacity(*n);
            for i in 1..=*n {
                h.push(JsonInt(majorant_h(i, &spec)?));
                g.push(JsonInt(majorant_g(i, &spec)?));
            }
            to_value(&MajorantReport {
                delta: spec.to_string(),
                n: *n,
                h,
                g,
            })
        }
        Command::Verify { poly, random } => {
            let bound = config.bound_or(8);
            let polys = match (poly, random) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage("give either --poly or --random".into()))
                }
                (Some(p), None) => vec![parse_polynomial(p)?],
                (None, Some(k)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    (0..*k)
                        .map(|_| random_polynomial(&mut rng, PolynomialShape::default()))
                        .collect()
                }
                (None, None) => vec![parse_polynomial(read_input(&config)?.trim())?],
            };
            let domains = if cli.common.domain.is_some() {
                vec![config.domain]
            } else {
                DomainSpec::ALL.to_vec()
            };
            let mut checks = Vec::new();
            for poly in &polys {
                let compiled = compile(poly)?;
                for &d in &domains {
                    let report = verify_conditions(&compiled, bound, d);
                    if report.inconclusive && status == EXIT_OK {
                        status = EXIT_LIMIT;
                    }
                    if !report.passed && !report.inconclusive {
                        status = EXIT_INVARIANT;
                    }
                    checks.push(serde_json::json!({ "polynomial": poly.canonical_text(), "report": report }));
                }
            }
            serde_json::json!({ "passed": status == EXIT_OK, "checks": checks })
        }
    };
    let mut text = serde_json::to_string_pretty(&document).expect("serializable");
    text.push('\n');
    write_output(&config, stdout, text.as_bytes())?;
    Ok(status)
}

#[derive(Serialize)]
struct MajorantReport {
    delta: String,
    n: usize,
    h: Vec<JsonInt>,
    g: Vec<JsonInt>,
}

fn gadget_document(kind: &GadgetCommand) -> Result<Value, CliError> {
    let (gadget, extra): (GadgetSystem, Option<(&str, usize)>) = match kind {
        GadgetCommand::Tower { s } => (power_tower(*s)?, None),
        GadgetCommand::FourSquare { prefix } => (four_square_block(prefix), None),
        GadgetCommand::EightSquare { .. } => (eight_square_split(), None),
        GadgetCommand::SystemS { poly } => {
            let (g, s) = build_system_s(&parse_polynomial(poly)?)?;
            (g, Some(("s", s)))
        }
        GadgetCommand::Phi { poly } => {
            let (g, s) = build_phi(&parse_polynomial(poly)?)?;
            (g, Some(("s", s)))
        }
    };
    let mut doc = to_value(&gadget);
    if let GadgetCommand::EightSquare { pins } = kind {
        if !pins.is_empty() {
            let mut map = serde_json::Map::new();
            for spec in pins {
                let (role, value) = spec
                    .split_once('=')
                    .ok_or_else(|| CliError::Parse(format!("bad pin '{spec}'")))?;
                gadget.index(role.trim())?;
                map.insert(
                    role.trim().to_string(),
                    to_value(&JsonInt(parse_int(value)?)),
                );
            }
            doc["pins"] = Value::Object(map);
        }
    }
    if let Some((key, value)) = extra {
        doc[key] = Value::from(value);
    }
    Ok(doc)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn parse_int(text: &str) -> Result<BigInt, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("not an integer: '{text}'")))
}

/// `x3=5`, `3=5` or `<role>=5`.
fn parse_pin(spec: &str, roles: &BTreeMap<String, usize>) -> Result<(usize, BigInt), CliError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("bad pin '{spec}', expected var=value")))?;
    let key = key.trim();
    let index = match roles.get(key) {
        Some(&k) => k,
        None => {
            let digits = key.strip_prefix('x').unwrap_or(key);
            digits
                .parse()
                .map_err(|_| CliError::Parse(format!("unknown variable '{key}'")))?
        }
    };
    Ok((index, parse_int(value)?))
}

/// Accepts a system, a gadget (with roles and optional pins) or a
/// compilation result.
fn system_from_json(
    value: &Value,
) -> Result<(EnSystem, BTreeMap<String, usize>, BTreeMap<usize, BigInt>), CliError> {
    let bad = |e: serde_json::Error| CliError::Parse(format!("bad system: {e}"));
    let body = if value.get("equations").is_some() {
        value
    } else {
        value
            .get("system")
            .ok_or_else(|| CliError::Parse("input has no system".into()))?
    };
    let system: EnSystem = serde_json::from_value(body.clone()).map_err(bad)?;
    let roles: BTreeMap<String, usize> = match value.get("roles") {
        Some(r) => serde_json::from_value(r.clone()).map_err(bad)?,
        None => BTreeMap::new(),
    };
    let mut pins = BTreeMap::new();
    if let Some(p) = value.get("pins") {
        let raw: BTreeMap<String, JsonInt> = serde_json::from_value(p.clone()).map_err(bad)?;
        for (k, v) in raw {
            let (index, _) = parse_pin(&format!("{k}=0"), &roles)?;
            pins.insert(index, v.0);
        }
    }
    Ok((system, roles, pins))
}

fn read_input(config: &RunConfig) -> Result<String, CliError> {
    match &config.input {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display()))),
        None => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::Usage(format!("cannot read input: {e}")))?;
            Ok(text)
        }
    }
}

fn read_json(config: &RunConfig) -> Result<Value, CliError> {
    serde_json::from_str(&read_input(config)?)
        .map_err(|e| CliError::Parse(format!("bad JSON input: {e}")))
}

fn write_output(config: &RunConfig, stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match &config.output {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(bytes)
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}
