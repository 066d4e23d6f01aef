//! The `gewave` command-line front end.
//!
//! Subcommands:
//!
//! - `solve` — run the evolutionary search and emit a run report plus a
//!   per-generation convergence trace.
//! - `map` — decode a chromosome and print the derivation table.
//! - `eval` — evaluate an expression at a point, or score it against a
//!   problem.
//! - `oracle` — finite-difference eigenvalues for a problem.
//! - `grammar-check` — parse and validate a grammar file.
//!
//! Exit codes: 0 on success, 2 on configuration/validation errors (the
//! message names the offending key), 1 on runtime failures such as
//! unreadable files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::evolution::{evolve, ConfigError, EvolutionConfig, InitMode, PcForm, RunReport};
use crate::expr::{evaluate, parse_expression, Env, RbfConfig};
use crate::grammar::{parse_grammar, BuiltinVariant, Grammar};
use crate::mapper::{format_trace, map_genotype, Chromosome, MappingOutcome, RejectReason};
use crate::quantum::{
    fd_eigenvalue, fd_ground_state, fitness, EnergyMode, NormConvention, PotentialSpec,
    ProblemSpec, QuantumError, ResidualForm,
};

#[derive(Debug)]
enum CliError {
    /// Bad flags or config values; exits 2.
    Validation(String),
    /// IO or other environment failures; exits 1.
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn validation(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{key}: {reason}"))
}

#[derive(Parser)]
#[command(
    name = "gewave",
    version,
    about = "Evolve closed-form trial wavefunctions for 1-D Schrödinger problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the evolutionary search.
    Solve(SolveArgs),
    /// Decode a chromosome and print its derivation table.
    Map(MapArgs),
    /// Evaluate an expression at a point or score it against a problem.
    Eval(EvalArgs),
    /// Finite-difference eigenvalues, independent of the symbolic path.
    Oracle(OracleArgs),
    /// Parse and validate a grammar file.
    GrammarCheck(GrammarCheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemName {
    /// Infinite square well on [0,1].
    Box,
    /// Harmonic oscillator, omega = 1 on [-5,5].
    Harmonic,
    /// Harmonic oscillator with omega = sqrt(20)*100 on [-0.5,0.5].
    HarmonicPaper,
}

#[derive(Clone, Copy, ValueEnum)]
enum PcFormArg {
    Standard,
    PaperLiteral,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitModeArg {
    Random,
    Permutation,
}

fn parse_domain(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers, e.g. 0,1")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("invalid number '{}'", a.trim()))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("invalid number '{}'", b.trim()))?;
    Ok((a, b))
}

#[derive(Args)]
struct ProblemArgs {
    /// Bundled problem preset.
    #[arg(long, value_enum)]
    problem: Option<ProblemName>,
    /// Custom potential V(x) as an expression in x.
    #[arg(long)]
    potential_expr: Option<String>,
    /// Domain as "a,b".
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    domain: Option<(f64, f64)>,
    /// Energy: a number for a fixed E, or "rayleigh".
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Config file (JSON); flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and trace.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grammar file; defaults to the built-in x-only grammar.
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Population size.
    #[arg(long)]
    pop: Option<usize>,
    /// Maximum generations.
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tournament size.
    #[arg(long)]
    k: Option<usize>,
    /// Initial crossover probability.
    #[arg(long)]
    pc0: Option<f64>,
    /// Learning rate of the pc adaptation.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum)]
    pc_form: Option<PcFormArg>,
    #[arg(long, value_enum)]
    init_mode: Option<InitModeArg>,
    /// Early-stop fitness tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Fitness evaluation threads (1 = bitwise reproducible).
    #[arg(long)]
    threads: Option<usize>,
    /// Radial basis shape constant.
    #[arg(long)]
    rbf_c: Option<f64>,
    /// Sum absolute residuals instead of squared ones.
    #[arg(long)]
    residual_abs: bool,
}

#[derive(Args)]
struct MapArgs {
    /// Comma-separated codons, e.g. 10,4,8,15,3,7,19,21,9.
    #[arg(long, required = true)]
    codons: String,
    /// Grammar file; defaults to the built-in full grammar, whose traces
    /// match the published derivation table.
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    max_wraps: u32,
}

#[derive(Args)]
struct EvalArgs {
    /// Expression text, e.g. "sqrt(3/x)". Numeric literals are accepted
    /// even though the grammar only produces single digits.
    #[arg(long, required = true)]
    expr: String,
    /// Evaluate at this point instead of scoring against a problem.
    #[arg(long, allow_hyphen_values = true)]
    at: Option<f64>,
    /// Radial basis shape constant.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Interior grid size N (minimum 10).
    #[arg(long, default_value_t = 2000)]
    grid_n: usize,
    /// Eigenvalue index, 0 = ground state.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 1.0)]
    rbf_c: f64,
}

#[derive(Args)]
struct GrammarCheckArgs {
    /// Grammar file to validate.
    #[arg(long, required = true)]
    grammar: PathBuf,
}

/// One structured key-value document holding every tunable; all keys are
/// optional and unknown keys are a load error.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub problem: Option<String>,
    pub domain: Option<[f64; 2]>,
    pub potential_expr: Option<String>,
    pub energy: Option<serde_json::Value>,
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub points: Option<usize>,
    pub lambda_norm: Option<f64>,
    pub mu_boundary: Option<f64>,
    pub penalty_fitness: Option<f64>,
    pub norm_convention: Option<NormConvention>,
    pub residual_form: Option<ResidualForm>,
    pub population_size: Option<usize>,
    pub chromosome_length: Option<usize>,
    pub codon_max: Option<u32>,
    pub init_mode: Option<InitMode>,
    pub tournament_size: Option<usize>,
    pub pc0: Option<f64>,
    pub gamma: Option<f64>,
    pub pc_form: Option<PcForm>,
    pub max_generations: Option<usize>,
    pub fitness_tolerance: Option<f64>,
    pub max_wraps: Option<u32>,
    pub elitism_count: Option<usize>,
    pub crossover_retries: Option<usize>,
    pub rng_seed: Option<u64>,
    pub threads: Option<usize>,
    pub rbf_c: Option<f64>,
    pub grammar: Option<PathBuf>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<RunConfigFile, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config '{}': {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config '{}': {e}", path.display()))
    }
}

/// Parsed entry point used by the binary. Returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Map(args) => cmd_map(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::GrammarCheck(args) => cmd_grammar_check(&args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn load_grammar(path: Option<&Path>, fallback: BuiltinVariant) -> Result<Grammar, CliError> {
    match path {
        None => Ok(Grammar::builtin(fallback)),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::Runtime(format!("cannot read grammar '{}': {e}", p.display()))
            })?;
            parse_grammar(&text).map_err(|e| validation("grammar", e))
        }
    }
}

fn preset(name: ProblemName) -> ProblemSpec {
    match name {
        ProblemName::Box => ProblemSpec::infinite_well(),
        ProblemName::Harmonic => ProblemSpec::harmonic(),
        ProblemName::HarmonicPaper => ProblemSpec::harmonic_paper(),
    }
}

fn preset_by_name(name: &str) -> Result<ProblemSpec, CliError> {
    match name {
        "box" => Ok(ProblemSpec::infinite_well()),
        "harmonic" => Ok(ProblemSpec::harmonic()),
        "harmonic-paper" => Ok(ProblemSpec::harmonic_paper()),
        other => Err(validation("problem", format!("unknown preset '{other}'"))),
    }
}

fn parse_energy(text: &str) -> Result<EnergyMode, CliError> {
    if text.eq_ignore_ascii_case("rayleigh") {
        return Ok(EnergyMode::Rayleigh);
    }
    text.parse::<f64>()
        .map(EnergyMode::Fixed)
        .map_err(|_| validation("energy", format!("expected a number or 'rayleigh', got '{text}'")))
}

fn energy_from_value(value: &serde_json::Value) -> Result<EnergyMode, CliError> {
    match value {
        serde_json::Value::Number(n) => n
            .as_f64()
            .map(EnergyMode::Fixed)
            .ok_or_else(|| validation("energy", "number out of range")),
        serde_json::Value::String(s) => parse_energy(s),
        other => Err(validation("energy", format!("expected a number or 'rayleigh', got {other}"))),
    }
}

/// Build the problem from config-file keys and flag overrides; `required`
/// demands an explicit problem selection.
fn resolve_problem(
    args: &ProblemArgs,
    file: &RunConfigFile,
    required: bool,
) -> Result<ProblemSpec, CliError> {
    if args.problem.is_some() && args.potential_expr.is_some() {
        return Err(validation("potential-expr", "conflicts with --problem"));
    }
    let flag_expr = args.potential_expr.as_deref().or(file.potential_expr.as_deref());
    let preset_choice: Option<ProblemSpec> = match (&args.problem, &file.problem) {
        (Some(p), _) => Some(preset(*p)),
        (None, Some(name)) => Some(preset_by_name(name)?),
        (None, None) => None,
    };

    let mut problem = match (preset_choice, flag_expr) {
        (Some(p), None) => p,
        (None, Some(expr_text)) => {
            let expr = parse_expression(expr_text).map_err(|e| validation("potential-expr", e))?;
            let mut p = ProblemSpec::infinite_well();
            p.potential = PotentialSpec::Custom { expr };
            let (a, b) = args
                .domain
                .or(file.domain.map(|d| (d[0], d[1])))
                .ok_or_else(|| validation("domain", "required with a custom potential"))?;
            p.a = a;
            p.b = b;
            p.energy_mode = match (&args.energy, &file.energy) {
                (Some(t), _) => parse_energy(t)?,
                (None, Some(v)) => energy_from_value(v)?,
                (None, None) => {
                    return Err(validation("energy", "required with a custom potential"))
                }
            };
            p
        }
        (Some(_), Some(_)) => {
            return Err(validation("potential_expr", "conflicts with a problem preset"))
        }
        (None, None) => {
            if required {
                return Err(validation(
                    "problem",
                    "select --problem {box|harmonic|harmonic-paper} or --potential-expr",
                ));
            }
            ProblemSpec::infinite_well()
        }
    };

    if let Some((a, b)) = args.domain.or(file.domain.map(|d| (d[0], d[1]))) {
        problem.a = a;
        problem.b = b;
    }
    if let Some(text) = &args.energy {
        problem.energy_mode = parse_energy(text)?;
    } else if let Some(v) = &file.energy {
        problem.energy_mode = energy_from_value(v)?;
    }
    if let Some(v) = file.hbar {
        problem.hbar = v;
    }
    if let Some(v) = file.mass {
        problem.mass = v;
    }
    if let Some(v) = file.points {
        problem.collocation_count = v;
    }
    if let Some(v) = file.lambda_norm {
        problem.lambda_norm = v;
    }
    if let Some(v) = file.mu_boundary {
        problem.mu_boundary = v;
    }
    if let Some(v) = file.penalty_fitness {
        problem.penalty_fitness = v;
    }
    if let Some(v) = file.norm_convention {
        problem.norm_convention = v;
    }
    if let Some(v) = file.residual_form {
        problem.residual_form = v;
    }

    if !(problem.a < problem.b) {
        return Err(validation("domain", "must satisfy a < b"));
    }
    if !(problem.hbar > 0.0) {
        return Err(validation("hbar", "must be positive"));
    }
    if !(problem.mass > 0.0) {
        return Err(validation("mass", "must be positive"));
    }
    if problem.collocation_count < 2 {
        return Err(validation("points", "must be at least 2"));
    }
    if let PotentialSpec::Harmonic { omega } = problem.potential {
        if !(omega > 0.0) {
            return Err(validation("omega", "must be positive"));
        }
    }
    Ok(problem)
}

fn resolve_evolution(args: &SolveArgs, file: &RunConfigFile) -> Result<EvolutionConfig, CliError> {
    let mut cfg = EvolutionConfig::default();
    if let Some(v) = file.population_size {
        cfg.population_size = v;
    }
    if let Some(v) = file.chromosome_length {
        cfg.chromosome_length = v;
    }
    if let Some(v) = file.codon_max {
        cfg.codon_max = v;
    }
    if let Some(v) = file.init_mode {
        cfg.init_mode = v;
    }
    if let Some(v) = file.tournament_size {
        cfg.tournament_size = v;
    }
    if let Some(v) = file.pc0 {
        cfg.pc0 = v;
    }
    if let Some(v) = file.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = file.pc_form {
        cfg.pc_form = v;
    }
    if let Some(v) = file.max_generations {
        cfg.max_generations = v;
    }
    if let Some(v) = file.fitness_tolerance {
        cfg.fitness_tolerance = v;
    }
    if let Some(v) = file.max_wraps {
        cfg.max_wraps = v;
    }
    if let Some(v) = file.elitism_count {
        cfg.elitism_count = v;
    }
    if let Some(v) = file.crossover_retries {
        cfg.crossover_retries = v;
    }
    if let Some(v) = file.rng_seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = file.threads {
        cfg.threads = v;
    }

    if let Some(v) = args.pop {
        cfg.population_size = v;
    }
    if let Some(v) = args.gens {
        cfg.max_generations = v;
    }
    if let Some(v) = args.seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = args.k {
        cfg.tournament_size = v;
    }
    if let Some(v) = args.pc0 {
        cfg.pc0 = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.pc_form {
        cfg.pc_form = match v {
            PcFormArg::Standard => PcForm::Standard,
            PcFormArg::PaperLiteral => PcForm::PaperLiteral,
        };
    }
    if let Some(v) = args.init_mode {
        cfg.init_mode = match v {
            InitModeArg::Random => InitMode::Random,
            InitModeArg::Permutation => InitMode::Permutation,
        };
    }
    if let Some(v) = args.tolerance {
        cfg.fitness_tolerance = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_rbf(flag: Option<f64>, file: &RunConfigFile) -> Result<RbfConfig, CliError> {
    let c = flag.or(file.rbf_c).unwrap_or(1.0);
    if !(c > 0.0) {
        return Err(validation("rbf_c", "must be positive"));
    }
    Ok(RbfConfig { c })
}

fn trace_csv(report: &RunReport) -> String {
    let mut out = String::from("generation,best,mean,worst,pc,invalid_count\n");
    for s in &report.generations {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.generation, s.best_total, s.mean_total, s.worst_total, s.pc, s.invalid_count
        );
    }
    out
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => RunConfigFile::load(path).map_err(CliError::Validation)?,
        None => RunConfigFile::default(),
    };
    let mut problem = resolve_problem(&args.problem, &file, false)?;
    if args.residual_abs {
        problem.residual_form = ResidualForm::Abs;
    }
    let cfg = resolve_evolution(args, &file)?;
    let rbf = resolve_rbf(args.rbf_c, &file)?;
    let grammar_path = args.grammar.as_deref().or(file.grammar.as_deref());
    let grammar = load_grammar(grammar_path, BuiltinVariant::XOnly)?;

    let echo = serde_json::json!({
        "problem": problem,
        "evolution": cfg,
        "rbf": rbf,
    });
    println!("config: {}", serde_json::to_string_pretty(&echo).expect("config serializes"));

    let report = evolve(&problem, &grammar, &rbf, &cfg)?;

    print!("{}", trace_csv(&report));
    println!();
    println!("termination: {:?}", report.termination);
    println!("generations: {}", report.generations.len() - 1);
    match &report.best.expression {
        Some(expr) => println!("best expression: {expr}"),
        None => println!("best expression: <rejected mapping>"),
    }
    let f = &report.best.fitness;
    println!("energy used: {}", f.energy_used);
    println!("residual_sse: {}", f.residual_sse);
    println!("norm_penalty: {}", f.norm_penalty);
    println!("boundary_penalty: {}", f.boundary_penalty);
    println!("total: {}", f.total);

    if let Some(out_dir) = &args.out {
        fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Runtime(format!("cannot create '{}': {e}", out_dir.display()))
        })?;
        let report_path = out_dir.join("report.json");
        let mut json = serde_json::to_string_pretty(&report).expect("run report serializes");
        json.push('\n');
        fs::write(&report_path, json).map_err(|e| {
            CliError::Runtime(format!("cannot write '{}': {e}", report_path.display()))
        })?;
        let trace_path = out_dir.join("trace.csv");
        fs::write(&trace_path, trace_csv(&report)).map_err(|e| {
            CliError::Runtime(format!("cannot write '{}': {e}", trace_path.display()))
        })?;
        println!("wrote {} and {}", report_path.display(), trace_path.display());
    }
    Ok(())
}

fn parse_codons(text: &str) -> Result<Chromosome, CliError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(validation("codons", "at least one codon is required"));
    }
    let mut codons = Vec::new();
    for part in trimmed.split(',') {
        let part = part.trim();
        let v: u32 =
            part.parse().map_err(|_| validation("codons", format!("invalid codon '{part}'")))?;
        codons.push(v);
    }
    Ok(Chromosome::new(codons))
}

fn cmd_map(args: &MapArgs) -> Result<(), CliError> {
    let chromosome = parse_codons(&args.codons)?;
    let grammar = load_grammar(args.grammar.as_deref(), BuiltinVariant::Paper)?;
    let outcome = map_genotype(&grammar, &chromosome, args.max_wraps);
    print!("{}", format_trace(outcome.trace()));
    match &outcome {
        MappingOutcome::Mapped { text, .. } => println!("expression: {text}"),
        MappingOutcome::Rejected { reason: RejectReason::WrapLimitExceeded, trace } => {
            println!(
                "REJECTED: wrap limit exceeded after {} wrapping events",
                trace.wrap_count()
            );
        }
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let expr = parse_expression(&args.expr).map_err(|e| validation("expr", e))?;
    if !(args.c > 0.0) {
        return Err(validation("c", "must be positive"));
    }
    let rbf = RbfConfig { c: args.c };

    if let Some(at) = args.at {
        if args.problem.problem.is_some() || args.problem.potential_expr.is_some() {
            return Err(validation("at", "cannot be combined with a problem selection"));
        }
        println!("expression: {expr}");
        match evaluate(&expr, &Env::x(at), &rbf) {
            Ok(v) => println!("value at x={at}: {v}"),
            Err(e) => println!("domain error at x={at}: {e}"),
        }
        return Ok(());
    }

    let problem = resolve_problem(&args.problem, &RunConfigFile::default(), true)?;
    let report = fitness(&expr, &problem, &rbf);
    println!("expression: {expr}");
    println!("energy used: {}", report.energy_used);
    println!("residual_sse: {}", report.residual_sse);
    println!("norm_penalty: {}", report.norm_penalty);
    println!("boundary_penalty: {}", report.boundary_penalty);
    println!("total: {}", report.total);
    println!("valid: {}", report.valid);
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let problem = resolve_problem(&args.problem, &RunConfigFile::default(), true)?;
    if !(args.rbf_c > 0.0) {
        return Err(validation("rbf_c", "must be positive"));
    }
    let rbf = RbfConfig { c: args.rbf_c };
    let map_err = |e: QuantumError| match e {
        QuantumError::GridTooSmall { .. } | QuantumError::InvalidDomain => validation("grid-n", e),
        other => CliError::Runtime(other.to_string()),
    };
    if args.index == 0 {
        let (e0, psi) = fd_ground_state(&problem, &rbf, args.grid_n).map_err(map_err)?;
        println!("E0 = {e0}");
        let h = (problem.b - problem.a) / (args.grid_n as f64 + 1.0);
        let norm: f64 = psi.iter().map(|v| v * v).sum::<f64>() * h;
        println!("grid norm = {norm}");
    } else {
        let e = fd_eigenvalue(&problem, &rbf, args.grid_n, args.index).map_err(map_err)?;
        println!("E{} = {e}", args.index);
    }
    Ok(())
}

fn cmd_grammar_check(args: &GrammarCheckArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.grammar).map_err(|e| {
        CliError::Runtime(format!("cannot read grammar '{}': {e}", args.grammar.display()))
    })?;
    let grammar = parse_grammar(&text).map_err(|e| validation("grammar", e))?;
    println!("grammar ok");
    println!("start: <{}>", grammar.start());
    for nt in grammar.nonterminals() {
        let rules = grammar.rules_for(nt).expect("listed nonterminal has rules");
        println!("<{}>: {} alternatives", nt, rules.len());
    }
    let terminals: Vec<&str> = grammar.terminals().collect();
    println!("terminals: {}", terminals.join(" "));
    Ok(())
}
