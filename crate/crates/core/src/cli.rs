//! The `kcsp` command-line workbench.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: `0` on success, `1` on invalid input, `2` when an enumeration
//! budget is exceeded and `3` when `verify` finds a failed check.
//!
//! Data-producing subcommands (`gen`, `reduce`) write plain instance or game
//! files. The others write reports that embed the full configuration
//! (arguments, seed, format, the text of every input file and the resolved
//! parameters), either as a top-level `config` object (JSON) or as a leading
//! `# config=` line (CSV). `replay` re-executes that configuration.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algorithms::{
    expected_blend_value, extend_algorithm_run, naive_random, BaseAlgorithm, BruteForce, ExtensionParams, NaiveRandom,
};
use crate::csp::{brute_force_optimum, generate_random_instance, CspInstance, DEFAULT_BRUTE_FORCE_BUDGET};
use crate::dictator::{
    averaged_projection, dictator_closed_form, quasirandomness_check, run_test_exact, run_test_mc, RFunction, TestParams,
    DEFAULT_DICTATOR_BUDGET, DEFAULT_TRIALS,
};
use crate::error::{check_budget, invalid, Error, Result};
use crate::fourier::{BooleanRep, TableFunction};
use crate::games::pcp::DEFAULT_PCP_BUDGET;
use crate::games::{
    generate_game, honest_proof, proof_assignment, reduce_d21_to_ug, reduce_ug_to_csp, verifier_acceptance,
    vertex_acceptance_sums, AcceptanceMode, Game, GameKind, PcpMode, PcpParams, Proof,
};
use crate::lab::{
    hypercontractivity_margin, invariance_gap, k_vs_one_plus_eps, main_lemma_report, InequalityReport, PsiFunction,
    DEFAULT_LAB_BUDGET,
};
use crate::numeric::{derive_seed, rng_from_seed};
use crate::params::{default_rho, LogThreshold};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "kcsp", version, about = "Max k-CSP approximation and hardness workbench")]
struct Cli {
    /// Master seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate a random CSP instance or game.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve a CSP instance.
    Solve(SolveArgs),
    /// Reduce a d-to-1 game to a unique game, or a unique game to a CSP.
    #[command(subcommand)]
    Reduce(ReduceCommand),
    /// Run the dictator test on a function [R]^n -> [R].
    Dtest(DtestArgs),
    /// Numeric inequality checks.
    #[command(subcommand)]
    Lab(LabCommand),
    /// Cross-module consistency checks.
    Verify(VerifyArgs),
    /// Re-run the configuration embedded in a report.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenCommand {
    Csp(GenCspArgs),
    Ug(GenGameArgs),
    D21(GenD21Args),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GenCspArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GenGameArgs {
    #[arg(long = "V")]
    #[serde(rename = "V")]
    pub left: usize,
    #[arg(long = "W")]
    #[serde(rename = "W")]
    pub right: usize,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub alphabet: usize,
    /// Right neighbours per left vertex.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Plant a labeling satisfying every edge.
    #[arg(long)]
    pub planted: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GenD21Args {
    #[arg(long)]
    pub d: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub game: GenGameArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Naive,
    Brute,
    Extend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseAlgo {
    Naive,
    Brute,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Base solver for `--algo extend`.
    #[arg(long, value_enum, default_value_t = BaseAlgo::Brute)]
    pub base: BaseAlgo,
    /// Base arity for `--algo extend` (default k - 1).
    #[arg(long)]
    pub kprime: Option<usize>,
    /// Blend probability for `--algo extend` (default (k - k')/k).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_BUDGET)]
    pub budget: u64,
    pub input: PathBuf,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceCommand {
    D21(ReduceD21Args),
    Ug2csp(Ug2CspArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReduceD21Args {
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceMode {
    Exact,
    Sampled,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct Ug2CspArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReduceMode::Exact)]
    pub mode: ReduceMode,
    /// Verifier tuples drawn in sampled mode.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_PCP_BUDGET)]
    pub budget: u64,
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    /// x -> x_coord
    Dictator,
    /// x -> value
    Constant,
    /// Uniformly random table.
    Random,
    /// Random table read through folding (balanced).
    Folded,
    /// Most frequent coordinate value.
    Plurality,
    /// Sum of coordinates mod R.
    Sum,
    /// Table from `--input`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtestMode {
    Exact,
    Mc,
    Both,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DtestArgs {
    #[arg(long, value_enum)]
    pub function: FunctionKind,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long = "R", default_value_t = 3)]
    #[serde(rename = "R")]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Truncation degree for the quasirandomness check.
    #[arg(long)]
    pub d: Option<usize>,
    /// Natural log of the influence threshold.
    #[arg(long)]
    pub ln_delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub coord: usize,
    #[arg(long, default_value_t = 0)]
    pub value: usize,
    #[arg(long, value_enum, default_value_t = DtestMode::Exact)]
    pub mode: DtestMode,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    /// Functions to draw for the random families.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = DEFAULT_DICTATOR_BUDGET)]
    pub budget: u64,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabCommand {
    /// ||T_rho h||_q <= ||h||_p on random h, or ||T_{2rho} G||_k <= ||G||_{1+eps} with --keps.
    Hyper(HyperArgs),
    /// Invariance gap between [R]^n and its boolean analog.
    Invariance(InvarianceArgs),
    /// E[(T_rho g)^k] and its intermediate bounds.
    Mainlemma(MainLemmaArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    /// Default sqrt((p-1)/(q-1)), or the default noise rate with --keps.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Check the (k, 1 + 4/ln R) specialization instead of (p, q).
    #[arg(long)]
    pub keps: bool,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long = "R", default_value_t = 16)]
    #[serde(rename = "R")]
    pub r: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiKind {
    Abs,
    Clamped,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long = "R", default_value_t = 4)]
    #[serde(rename = "R")]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = PsiKind::Abs)]
    pub psi: PsiKind,
    /// Exponent of the clamped power.
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Values of the random functions lie in [-scale, scale].
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaFunction {
    /// Averaged projection of a random function.
    Random,
    /// g = 1/R
    Constant,
    /// Indicator of x_1 = 0.
    Dictator,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MainLemmaArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long = "R", default_value_t = 3)]
    #[serde(rename = "R")]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub ln_delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = LemmaFunction::Random)]
    pub function: LemmaFunction,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Monte-Carlo trials for the sampled checks.
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub report: PathBuf,
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    pub command: Command,
    /// Input file contents keyed by the path given on the command line.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    /// Parameters after defaults were applied (informational).
    #[serde(default)]
    pub resolved: Value,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

enum Output {
    Data(String),
    Report {
        resolved: Value,
        result: Value,
        table: Table,
        failed: bool,
    },
}

fn report(resolved: Value, result: Value, table: Table) -> Output {
    Output::Report {
        resolved,
        result,
        table,
        failed: false,
    }
}

struct Ctx {
    seed: u64,
    inputs: BTreeMap<String, String>,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> Result<String> {
        let key = path.display().to_string();
        if let Some(text) = self.inputs.get(&key) {
            return Ok(text.clone());
        }
        let text = fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {key}: {e}")))?;
        self.inputs.insert(key, text.clone());
        Ok(text)
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    let rendered = e.render().to_string();
                    let line = rendered
                        .lines()
                        .find(|l| !l.trim().is_empty())
                        .unwrap_or("error: bad arguments");
                    eprintln!("{line}");
                    EXIT_INVALID
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget { .. } => EXIT_BUDGET,
        _ => EXIT_INVALID,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let config = match cli.command {
        Command::Replay(ref args) => load_config(&args.report)?,
        command => RunConfig {
            seed: cli.seed,
            format: cli.format,
            command,
            inputs: BTreeMap::new(),
            resolved: Value::Null,
        },
    };
    if matches!(config.command, Command::Replay(_)) {
        return invalid("a replayed configuration cannot itself be a replay");
    }
    match cli.threads {
        Some(0) => invalid("threads must be positive"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Validation(format!("cannot start thread pool: {e}")))?;
            pool.install(|| execute(config, cli.output.as_deref()))
        }
        None => execute(config, cli.output.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let config = if let Some(rest) = text.strip_prefix("# config=") {
        serde_json::from_str(rest.lines().next().unwrap_or_default())?
    } else {
        let value: Value = serde_json::from_str(&text)?;
        let config = value
            .get("config")
            .ok_or_else(|| Error::Validation("report: missing field `config`".into()))?;
        serde_json::from_value(config.clone())?
    };
    Ok(config)
}

fn execute(config: RunConfig, output: Option<&Path>) -> Result<i32> {
    let mut ctx = Ctx {
        seed: config.seed,
        inputs: config.inputs.clone(),
    };
    let produced = match &config.command {
        Command::Gen(cmd) => gen(cmd, &ctx)?,
        Command::Solve(args) => solve(args, &mut ctx)?,
        Command::Reduce(cmd) => reduce(cmd, &mut ctx)?,
        Command::Dtest(args) => dtest(args, &mut ctx)?,
        Command::Lab(cmd) => lab(cmd, &ctx)?,
        Command::Verify(args) => verify(args, &ctx)?,
        Command::Replay(_) => unreachable!("rejected in dispatch"),
    };
    let (text, code) = match produced {
        Output::Data(text) => (text + "\n", EXIT_OK),
        Output::Report {
            resolved,
            result,
            table,
            failed,
        } => {
            let config = RunConfig {
                inputs: ctx.inputs,
                resolved,
                ..config
            };
            let text = match config.format {
                Format::Json => serde_json::to_string_pretty(&json!({"config": config, "result": result}))? + "\n",
                Format::Csv => render_csv(&config, &table)?,
            };
            (text, if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
    };
    match output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(code)
}

fn render_csv(config: &RunConfig, table: &Table) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Validation(format!("csv: {e}"));
    writer.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        writer.write_record(row).map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| Error::Validation(format!("csv: {e}")))?;
    Ok(format!(
        "# config={}\n{}",
        serde_json::to_string(config)?,
        String::from_utf8(body).expect("csv output is utf-8")
    ))
}

fn gen(cmd: &GenCommand, ctx: &Ctx) -> Result<Output> {
    let text = match cmd {
        GenCommand::Csp(a) => generate_random_instance(a.n, a.r, a.k, a.m, ctx.seed)?.to_json()?,
        GenCommand::Ug(a) => generate_game(a.left, a.right, a.alphabet, 1, a.degree, a.planted, ctx.seed)?
            .0
            .to_json()?,
        GenCommand::D21(a) => {
            let g = &a.game;
            generate_game(g.left, g.right, g.alphabet, a.d, g.degree, g.planted, ctx.seed)?
                .0
                .to_json()?
        }
    };
    Ok(Output::Data(text))
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn solve(args: &SolveArgs, ctx: &mut Ctx) -> Result<Output> {
    let instance = CspInstance::from_json(&ctx.read(&args.input)?)?;
    let (assignment, result, resolved) = match args.algo {
        Algo::Naive => {
            let a = naive_random(&instance, ctx.seed);
            (a, json!({}), json!({}))
        }
        Algo::Brute => {
            let (a, _) = brute_force_optimum(&instance, args.budget)?;
            (a, json!({}), json!({"budget": args.budget}))
        }
        Algo::Extend => {
            let k = instance
                .uniform_arity()
                .ok_or_else(|| Error::Validation("constraints: extension needs a uniform arity".into()))?;
            let k_prime = args.kprime.unwrap_or(k.saturating_sub(1));
            let mut params = ExtensionParams::new(k, k_prime)?;
            if let Some(alpha) = args.alpha {
                params = params.with_alpha(alpha)?;
            }
            let base: Box<dyn BaseAlgorithm> = match args.base {
                BaseAlgo::Naive => Box::new(NaiveRandom { arity: k_prime }),
                BaseAlgo::Brute => Box::new(BruteForce {
                    arity: k_prime,
                    budget: args.budget,
                }),
            };
            let run = extend_algorithm_run(&instance, base.as_ref(), &params, ctx.seed)?;
            let projected_value = run.projected.evaluate(&run.base_assignment)?;
            let expected = expected_blend_value(&instance, &run.base_assignment, params.alpha)?;
            let factor = params.guarantee_factor();
            let result = json!({
                "projected_value": projected_value,
                "expected_value": expected,
                "guarantee_factor": factor,
                "guarantee": factor * projected_value,
                "base_assignment": run.base_assignment,
            });
            let resolved = json!({"k": k, "k_prime": k_prime, "alpha": params.alpha, "base": args.base, "budget": args.budget});
            (run.assignment, result, resolved)
        }
    };
    let value = instance.evaluate(&assignment)?;
    let mut result = result;
    result["algo"] = json!(args.algo);
    result["value"] = json!(value);
    result["assignment"] = json!(assignment);
    let table = Table {
        header: vec!["algo", "value", "assignment"],
        rows: vec![vec![
            format!("{:?}", args.algo).to_lowercase(),
            value.to_string(),
            join(&assignment.0),
        ]],
    };
    Ok(report(resolved, result, table))
}

fn reduce(cmd: &ReduceCommand, ctx: &mut Ctx) -> Result<Output> {
    let text = match cmd {
        ReduceCommand::D21(a) => reduce_d21_to_ug(&Game::from_json(&ctx.read(&a.input)?)?)?.to_json()?,
        ReduceCommand::Ug2csp(a) => {
            let game = Game::from_json(&ctx.read(&a.input)?)?;
            if game.kind != GameKind::Unique {
                return invalid("kind: ug2csp needs a unique game");
            }
            let mut params = PcpParams::new(a.k, a.r)?;
            if let Some(rho) = a.rho {
                params = params.with_rho(rho)?;
            }
            params.budget = a.budget;
            params.mode = match a.mode {
                ReduceMode::Exact => PcpMode::Exact,
                ReduceMode::Sampled => PcpMode::Sampled(a.samples),
            };
            reduce_ug_to_csp(&game, &params, ctx.seed)?.to_json()?
        }
    };
    Ok(Output::Data(text))
}

fn dtest_functions(args: &DtestArgs, ctx: &mut Ctx) -> Result<Vec<(String, RFunction)>> {
    let (n, r) = (args.n, args.r);
    let family = |make: &dyn Fn(u64) -> Result<RFunction>, name: &str| -> Result<Vec<(String, RFunction)>> {
        (0..args.count)
            .map(|i| Ok((format!("{name}#{i}"), make(derive_seed(ctx.seed, i as u64))?)))
            .collect()
    };
    Ok(match args.function {
        FunctionKind::Dictator => vec![(
            format!("dictator(coord={})", args.coord),
            RFunction::dictator(n, r, args.coord)?,
        )],
        FunctionKind::Constant => {
            if args.value >= r {
                return invalid(format!("value: {} outside 0..{r}", args.value));
            }
            vec![(
                format!("constant(value={})", args.value),
                RFunction::constant(n, r, args.value)?,
            )]
        }
        FunctionKind::Plurality => vec![("plurality".into(), RFunction::plurality(n, r)?)],
        FunctionKind::Sum => vec![("sum".into(), RFunction::from_fn(n, r, |x| x.iter().sum::<usize>() % r)?)],
        FunctionKind::Random => family(&|s| RFunction::random(n, r, s), "random")?,
        FunctionKind::Folded => family(&|s| RFunction::folded_random(n, r, s), "folded")?,
        FunctionKind::File => {
            let path = args
                .input
                .as_ref()
                .ok_or_else(|| Error::Validation("input: --function file needs --input".into()))?;
            let f = RFunction::from_json(&ctx.read(path)?)?;
            vec![(path.display().to_string(), f)]
        }
    })
}

fn dtest(args: &DtestArgs, ctx: &mut Ctx) -> Result<Output> {
    let mut params = TestParams::new(args.k, args.r)?;
    if let Some(rho) = args.rho {
        params = params.with_rho(rho)?;
    }
    if let Some(d) = args.d {
        params.d = d;
    }
    if let Some(ln) = args.ln_delta {
        params.log_delta = LogThreshold::from_ln(ln);
    }
    params.budget = args.budget;
    if args.function != FunctionKind::File {
        check_budget("function table", args.r, args.n, args.budget)?;
    }
    let functions = dtest_functions(args, ctx)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (index, (id, f)) in functions.iter().enumerate() {
        if f.r != params.r {
            return invalid(format!("R: function has R = {}, expected {}", f.r, params.r));
        }
        let quasi = quasirandomness_check(f, params.d, params.log_delta, params.budget)?;
        let mut runs = Vec::new();
        if matches!(args.mode, DtestMode::Exact | DtestMode::Both) {
            runs.push(("exact", run_test_exact(f, &params)?, 0.0));
        }
        if matches!(args.mode, DtestMode::Mc | DtestMode::Both) {
            let mc_params = params
                .clone()
                .with_trials(args.trials, derive_seed(ctx.seed, 1 << 32 | index as u64));
            let est = run_test_mc(f, &mc_params)?;
            runs.push(("mc", est.value, est.stderr));
        }
        for (mode, acceptance, stderr) in runs {
            rows.push(vec![
                id.clone(),
                mode.to_string(),
                params.k.to_string(),
                params.r.to_string(),
                params.rho.to_string(),
                acceptance.to_string(),
                stderr.to_string(),
                quasi.is_quasirandom.to_string(),
                quasi.max_influence.to_string(),
            ]);
            results.push(json!({
                "f_id": id,
                "mode": mode,
                "acceptance": acceptance,
                "stderr": stderr,
                "quasirandom": quasi.is_quasirandom,
                "max_influence": quasi.max_influence,
                "argmax": [quasi.argmax.0, quasi.argmax.1],
            }));
        }
    }
    let closed = dictator_closed_form(params.k, params.r, params.rho);
    let resolved = json!({"params": params, "dictator_closed_form": closed});
    let table = Table {
        header: vec![
            "f_id",
            "mode",
            "k",
            "R",
            "rho",
            "acceptance",
            "stderr",
            "quasirandom",
            "max_influence",
        ],
        rows,
    };
    Ok(report(resolved, json!({"rows": results}), table))
}

fn random_values(len: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..len).map(|_| rng.gen_range(-scale..=scale)).collect()
}

fn lab_output(resolved: Value, reports: Vec<InequalityReport>) -> Output {
    let min_margin = reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let table = Table {
        header: InequalityReport::CSV_HEADER.to_vec(),
        rows: reports.iter().map(|r| r.csv_record().to_vec()).collect(),
    };
    report(resolved, json!({"min_margin": min_margin, "reports": reports}), table)
}

fn lab(cmd: &LabCommand, ctx: &Ctx) -> Result<Output> {
    match cmd {
        LabCommand::Hyper(a) => {
            let rho = match (a.rho, a.keps) {
                (Some(rho), _) => rho,
                (None, true) => default_rho(a.k, a.r),
                (None, false) if a.q == 1.0 => 1.0,
                (None, false) => ((a.p - 1.0) / (a.q - 1.0)).sqrt(),
            };
            let reports = (0..a.count)
                .map(|i| {
                    if a.m > crate::fourier::MAX_BOOLEAN_VARIABLES {
                        return invalid(format!("m: {} exceeds {}", a.m, crate::fourier::MAX_BOOLEAN_VARIABLES));
                    }
                    let h = BooleanRep::from_values(a.m, &random_values(1 << a.m, 1.0, derive_seed(ctx.seed, i as u64)))?;
                    let rep = if a.keps {
                        k_vs_one_plus_eps(&h, a.k, rho, a.r)?
                    } else {
                        hypercontractivity_margin(&h, a.p, a.q, rho)?
                    };
                    Ok(rep.with_id(format!("h#{i}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let resolved = if a.keps {
                json!({"m": a.m, "k": a.k, "R": a.r, "rho": rho})
            } else {
                json!({"m": a.m, "p": a.p, "q": a.q, "rho": rho})
            };
            Ok(lab_output(resolved, reports))
        }
        LabCommand::Invariance(a) => {
            let psi = match a.psi {
                PsiKind::Abs => PsiFunction::Abs,
                PsiKind::Clamped => PsiFunction::Clamped(a.k),
            };
            check_budget("function table", a.r, a.n, DEFAULT_LAB_BUDGET)?;
            let len = a.r.pow(a.n as u32);
            let reports = (0..a.count)
                .map(|i| {
                    let f = TableFunction::new(a.n, a.r, random_values(len, a.scale, derive_seed(ctx.seed, i as u64)))?;
                    Ok(invariance_gap(&f, a.d, psi, DEFAULT_LAB_BUDGET)?.with_id(format!("f#{i}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(lab_output(
                json!({"n": a.n, "R": a.r, "d": a.d, "psi": psi, "scale": a.scale}),
                reports,
            ))
        }
        LabCommand::Mainlemma(a) => {
            let mut params = TestParams::new(a.k, a.r)?;
            if let Some(rho) = a.rho {
                params = params.with_rho(rho)?;
            }
            if let Some(d) = a.d {
                params.d = d;
            }
            if let Some(ln) = a.ln_delta {
                params.log_delta = LogThreshold::from_ln(ln);
            }
            check_budget("function table", a.r, a.n, DEFAULT_LAB_BUDGET)?;
            let count = if a.function == LemmaFunction::Random { a.count } else { 1 };
            let reports = (0..count)
                .map(|i| {
                    let g = match a.function {
                        LemmaFunction::Random => {
                            averaged_projection(&RFunction::random(a.n, a.r, derive_seed(ctx.seed, i as u64))?, 0)
                        }
                        LemmaFunction::Constant => TableFunction::constant(a.n, a.r, 1.0 / a.r as f64)?,
                        LemmaFunction::Dictator => RFunction::dictator(a.n, a.r, 0)?.projection(0),
                    };
                    let rep = main_lemma_report(&g, params.k, params.rho, params.d, params.log_delta, DEFAULT_LAB_BUDGET)?;
                    Ok(rep.with_id(format!("{:?}#{i}", a.function).to_lowercase()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(lab_output(json!({"n": a.n, "params": params}), reports))
        }
    }
}

fn verify(args: &VerifyArgs, ctx: &Ctx) -> Result<Output> {
    let seed = ctx.seed;
    let mut checks: Vec<(&'static str, bool, f64, f64)> = Vec::new();

    let params = TestParams::new(2, 3)?.with_rho(0.5)?;
    let exact = run_test_exact(&RFunction::dictator(3, 3, 0)?, &params)?;
    checks.push(("dictator_closed_form", (exact - 0.5).abs() <= 1e-12, exact, 0.5));

    let f = RFunction::random(2, 3, derive_seed(seed, 0))?;
    let exact = run_test_exact(&f, &params)?;
    let est = run_test_mc(&f, &params.clone().with_trials(args.trials, derive_seed(seed, 1)))?;
    checks.push(("dtest_exact_vs_mc", est.within_sigmas(exact, 3.0), est.value, exact));

    let (game, labels) = generate_game(3, 3, 3, 1, 2, true, derive_seed(seed, 2))?;
    let pcp = PcpParams::new(2, 3)?;
    let proof = honest_proof(&game, &labels, 3)?;
    let acceptance = verifier_acceptance(&game, &pcp, &proof, AcceptanceMode::Exact, 0)?.value;
    let csp = reduce_ug_to_csp(&game, &pcp, 0)?;
    let value = csp.evaluate(&proof_assignment(&proof))?;
    checks.push(("csp_vs_verifier", (acceptance - value).abs() <= 1e-9, value, acceptance));
    let completeness = pcp.rho.powi(pcp.k as i32);
    checks.push((
        "verifier_completeness",
        acceptance >= completeness - 1e-12,
        acceptance,
        completeness,
    ));

    let mut rng = rng_from_seed(derive_seed(seed, 3));
    let tables = (0..game.right)
        .map(|_| (0..27).map(|_| rng.gen_range(0..3)).collect())
        .collect();
    let sums = vertex_acceptance_sums(&game, &pcp, &Proof::new(3, 3, tables)?)?;
    let worst = sums.iter().copied().fold(0.0, f64::max);
    checks.push(("projection_sum", worst <= 1.0 + 1e-12, worst, 1.0));

    let instance = generate_random_instance(6, 2, 3, 10, derive_seed(seed, 4))?;
    let ext = ExtensionParams::new(3, 2)?;
    let run = extend_algorithm_run(&instance, &BruteForce::new(2), &ext, seed)?;
    let expected = expected_blend_value(&instance, &run.base_assignment, ext.alpha)?;
    let bound = ext.guarantee_factor() * run.projected.evaluate(&run.base_assignment)?;
    checks.push(("extension_guarantee", expected >= bound - 1e-12, expected, bound));

    let failed = checks.iter().any(|c| !c.1);
    let table = Table {
        header: vec!["check", "ok", "value", "target"],
        rows: checks
            .iter()
            .map(|(name, ok, value, target)| vec![name.to_string(), ok.to_string(), value.to_string(), target.to_string()])
            .collect(),
    };
    let result = json!({
        "passed": !failed,
        "checks": checks.iter().map(|(name, ok, value, target)| json!({"check": name, "ok": ok, "value": value, "target": target})).collect::<Vec<_>>(),
    });
    Ok(Output::Report {
        resolved: json!({"trials": args.trials}),
        result,
        table,
        failed,
    })
}
