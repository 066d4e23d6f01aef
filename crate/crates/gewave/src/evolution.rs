//! The genetic engine.
//!
//! Each generation: every individual is decoded and scored (rejected
//! mappings and evaluation failures earn the penalty fitness), the best
//! individual is copied unchanged into the next generation, and the rest is
//! filled with offspring of size-k tournament winners. Pairs cross over
//! with probability `pc` using homologous crossover aligned on the parents'
//! mapping traces; offspring mutate with probability `1 - pc` by inversion.
//! `pc` itself takes a logit-space Gaussian step once per generation.
//!
//! Runs are deterministic for a fixed seed: one explicit RNG stream drives
//! selection and variation, and fitness results are committed in offspring
//! order even when evaluated on multiple threads.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::RbfConfig;
use crate::grammar::Grammar;
use crate::mapper::{map_genotype, Chromosome, MappingOutcome, MappingTrace};
use crate::quantum::{fitness, FitnessReport, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Codons drawn uniformly from [0, codon_max].
    Random,
    /// Each chromosome a uniformly random permutation of 1..=length.
    Permutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcForm {
    /// pc' = (1 + ((1-pc)/pc)·exp(-γz))⁻¹ — a Gaussian step in logit space.
    Standard,
    /// The complement 1 - (1 + ((1-pc)/pc)·exp(-γz))⁻¹, exactly as printed.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    MaxGenerations,
    ToleranceReached,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid configuration: {key}: {reason}")]
pub struct ConfigError {
    pub key: &'static str,
    pub reason: String,
}

fn config_error(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError { key, reason: reason.into() }
}

/// Engine parameters. The documented operating range for `population_size`
/// is [200, 1000]; anything ≥ 2 is accepted for small experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub chromosome_length: usize,
    pub codon_max: u32,
    pub init_mode: InitMode,
    pub tournament_size: usize,
    /// Initial crossover probability, in (0,1).
    pub pc0: f64,
    /// Learning rate of the pc adaptation step.
    pub gamma: f64,
    pub pc_form: PcForm,
    pub max_generations: usize,
    /// Early stop once the best total falls to or below this.
    pub fitness_tolerance: f64,
    pub max_wraps: u32,
    pub elitism_count: usize,
    pub crossover_retries: usize,
    pub rng_seed: u64,
    /// Fitness evaluation threads; 1 guarantees bitwise reproducibility
    /// (in practice any count does, since results commit in index order).
    pub threads: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 200,
            chromosome_length: 50,
            codon_max: 255,
            init_mode: InitMode::Random,
            tournament_size: 4,
            pc0: 0.9,
            gamma: 0.5,
            pc_form: PcForm::Standard,
            max_generations: 1000,
            fitness_tolerance: 1e-8,
            max_wraps: 2,
            elitism_count: 1,
            crossover_retries: 3,
            rng_seed: 0,
            threads: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size < 2 {
            return Err(config_error("population_size", "must be at least 2"));
        }
        if self.chromosome_length < 1 {
            return Err(config_error("chromosome_length", "must be at least 1"));
        }
        if self.tournament_size < 2 || self.tournament_size > self.population_size {
            return Err(config_error(
                "tournament_size",
                "must be between 2 and the population size",
            ));
        }
        if !(self.pc0 > 0.0 && self.pc0 < 1.0) {
            return Err(config_error("pc0", "must lie strictly inside (0,1)"));
        }
        if !(self.gamma > 0.0) {
            return Err(config_error("gamma", "must be positive"));
        }
        if self.elitism_count < 1 || self.elitism_count >= self.population_size {
            return Err(config_error(
                "elitism_count",
                "must be at least 1 and below the population size",
            ));
        }
        if self.fitness_tolerance < 0.0 {
            return Err(config_error("fitness_tolerance", "must be non-negative"));
        }
        if self.threads < 1 {
            return Err(config_error("threads", "must be at least 1"));
        }
        if self.init_mode == InitMode::Permutation
            && (self.chromosome_length as u64) > self.codon_max as u64
        {
            return Err(config_error(
                "init_mode",
                "permutation initialization needs codon_max >= chromosome_length",
            ));
        }
        Ok(())
    }
}

/// Cached decode-and-score result for one chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// The fitness total, or the penalty value for rejected/unevaluable
    /// chromosomes.
    pub total: f64,
    pub report: FitnessReport,
    /// Completed derivation string, when mapping succeeded.
    pub phenotype: Option<String>,
    pub trace: MappingTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub evaluation: Option<Evaluation>,
}

impl Individual {
    pub fn new(chromosome: Chromosome) -> Individual {
        Individual { chromosome, evaluation: None }
    }

    /// Cached total; unevaluated individuals compare as worst possible.
    pub fn total(&self) -> f64 {
        self.evaluation.as_ref().map_or(f64::INFINITY, |e| e.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_total: f64,
    pub mean_total: f64,
    pub worst_total: f64,
    pub best_expression: String,
    /// Crossover probability in effect for this generation.
    pub pc: f64,
    pub invalid_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestIndividual {
    pub codons: Vec<u32>,
    pub expression: Option<String>,
    pub fitness: FitnessReport,
}

/// Everything a run produced: config echo, per-generation statistics, the
/// final best individual, and why the run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemSpec,
    pub evolution: EvolutionConfig,
    pub rbf: RbfConfig,
    pub generations: Vec<GenerationStats>,
    pub best: BestIndividual,
    pub termination: TerminationReason,
    pub wall_time_secs: f64,
}

/// Decode one chromosome and score it. Rejected mappings, phenotypes
/// outside the expression language, and evaluation failures all earn the
/// problem's penalty fitness.
pub fn evaluate_genotype(
    chromosome: &Chromosome,
    grammar: &Grammar,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    max_wraps: u32,
) -> Evaluation {
    match map_genotype(grammar, chromosome, max_wraps) {
        MappingOutcome::Mapped { text, expression: Some(expr), trace } => {
            let report = fitness(&expr, problem, rbf);
            Evaluation { total: report.total, report, phenotype: Some(text), trace }
        }
        MappingOutcome::Mapped { text, expression: None, trace } => Evaluation {
            total: problem.penalty_fitness,
            report: FitnessReport::penalty(problem.penalty_fitness),
            phenotype: Some(text),
            trace,
        },
        MappingOutcome::Rejected { trace, .. } => Evaluation {
            total: problem.penalty_fitness,
            report: FitnessReport::penalty(problem.penalty_fitness),
            phenotype: None,
            trace,
        },
    }
}

/// Population of `population_size` fresh chromosomes per the init mode.
pub fn init_population(cfg: &EvolutionConfig, rng: &mut impl Rng) -> Vec<Individual> {
    (0..cfg.population_size).map(|_| Individual::new(random_chromosome(cfg, rng))).collect()
}

fn random_chromosome(cfg: &EvolutionConfig, rng: &mut impl Rng) -> Chromosome {
    match cfg.init_mode {
        InitMode::Random => Chromosome::new(
            (0..cfg.chromosome_length).map(|_| rng.random_range(0..=cfg.codon_max)).collect(),
        ),
        InitMode::Permutation => {
            let mut codons: Vec<u32> = (1..=cfg.chromosome_length as u32).collect();
            codons.shuffle(rng);
            Chromosome::new(codons)
        }
    }
}

/// Size-k tournament: draw k distinct individuals uniformly without
/// replacement and return the index of the one with the lowest total.
/// The "guard the best" part of the published selection scheme lives at
/// the generation level as elitism.
pub fn tournament_select(population: &[Individual], k: usize, rng: &mut impl Rng) -> usize {
    assert!(
        k >= 2 && k <= population.len(),
        "tournament size must be between 2 and the population size"
    );
    let candidates = rand::seq::index::sample(rng, population.len(), k);
    tournament_pick(population, candidates.iter())
}

/// Winner among explicit candidate indices: lowest fitness total, earliest
/// drawn on ties.
pub(crate) fn tournament_pick(
    population: &[Individual],
    candidates: impl IntoIterator<Item = usize>,
) -> usize {
    candidates
        .into_iter()
        .min_by(|&a, &b| population[a].total().total_cmp(&population[b].total()))
        .expect("tournament needs at least one candidate")
}

/// Length of the two traces' common prefix, matching on both the rewritten
/// nonterminal and the chosen rule index — the "region of similarity".
pub(crate) fn similarity_prefix(a: &MappingTrace, b: &MappingTrace) -> usize {
    a.steps
        .iter()
        .zip(&b.steps)
        .take_while(|(s, t)| s.nonterminal == t.nonterminal && s.choice == t.choice)
        .count()
}

/// Homologous crossover.
///
/// The first crossover point falls inside the region of similarity at the
/// same codon index in both parents. The second point is drawn in parent
/// one's dissimilarity region; parent two's dissimilarity region is then
/// scanned cyclically from a random start for a codon whose trace step
/// rewrites the same nonterminal. A standard two-point exchange swaps the
/// mid segments. If no compatible second point turns up after
/// `crossover_retries` attempts — or either dissimilarity region is empty,
/// as with identical parents — the parents return unchanged. Offspring are
/// truncated or padded with fresh random codons back to the configured
/// chromosome length.
pub fn homologous_crossover(
    parent1: &Individual,
    parent2: &Individual,
    cfg: &EvolutionConfig,
    rng: &mut impl Rng,
) -> (Chromosome, Chromosome) {
    let unchanged = || (parent1.chromosome.clone(), parent2.chromosome.clone());
    let (Some(e1), Some(e2)) = (&parent1.evaluation, &parent2.evaluation) else {
        return unchanged();
    };
    let c1 = parent1.chromosome.codons();
    let c2 = parent2.chromosome.codons();
    // Steps beyond the chromosome length reread wrapped codons; crossover
    // points stay within the first pass.
    let t1 = e1.trace.steps.len().min(c1.len());
    let t2 = e2.trace.steps.len().min(c2.len());
    let sim = similarity_prefix(&e1.trace, &e2.trace).min(t1).min(t2);
    if sim >= t1 || sim >= t2 {
        // No dissimilarity region; identical parents land here.
        return unchanged();
    }

    for _ in 0..cfg.crossover_retries.max(1) {
        let first = if sim == 0 { 0 } else { rng.random_range(0..sim) };
        let s1 = rng.random_range(sim..t1);
        let target = &e1.trace.steps[s1].nonterminal;
        let span = t2 - sim;
        let start = rng.random_range(0..span);
        let s2 = (0..span)
            .map(|k| sim + (start + k) % span)
            .find(|&idx| &e2.trace.steps[idx].nonterminal == target);
        if let Some(s2) = s2 {
            let child1 = splice(c1, c2, first, s1, s2);
            let child2 = splice(c2, c1, first, s2, s1);
            return (fit_length(child1, cfg, rng), fit_length(child2, cfg, rng));
        }
    }
    unchanged()
}

/// own[0..first] ++ other[first..other_second] ++ own[own_second..].
fn splice(
    own: &[u32],
    other: &[u32],
    first: usize,
    own_second: usize,
    other_second: usize,
) -> Vec<u32> {
    let mut out = Vec::with_capacity(own.len());
    out.extend_from_slice(&own[..first]);
    out.extend_from_slice(&other[first..other_second]);
    out.extend_from_slice(&own[own_second..]);
    out
}

fn fit_length(mut codons: Vec<u32>, cfg: &EvolutionConfig, rng: &mut impl Rng) -> Chromosome {
    codons.truncate(cfg.chromosome_length);
    while codons.len() < cfg.chromosome_length {
        codons.push(rng.random_range(0..=cfg.codon_max));
    }
    Chromosome::new(codons)
}

/// Remove a random contiguous codon slice and reinsert it, reversed, at a
/// random position. Length and codon multiset are preserved.
pub fn inversion_mutation(chromosome: &Chromosome, rng: &mut impl Rng) -> Chromosome {
    let len = chromosome.len();
    let start = rng.random_range(0..len);
    let slice_len = rng.random_range(1..=len - start);
    let insert_at = rng.random_range(0..=len - slice_len);
    Chromosome::new(invert_slice(chromosome.codons(), start, slice_len, insert_at))
}

pub(crate) fn invert_slice(
    codons: &[u32],
    start: usize,
    slice_len: usize,
    insert_at: usize,
) -> Vec<u32> {
    let mut remainder: Vec<u32> = Vec::with_capacity(codons.len() - slice_len);
    remainder.extend_from_slice(&codons[..start]);
    remainder.extend_from_slice(&codons[start + slice_len..]);
    let mut out = Vec::with_capacity(codons.len());
    out.extend_from_slice(&remainder[..insert_at]);
    out.extend(codons[start..start + slice_len].iter().rev());
    out.extend_from_slice(&remainder[insert_at..]);
    out
}

/// One adaptation step of the crossover probability. The mutation
/// probability is always `1 - pc`.
pub fn update_pc(pc: f64, gamma: f64, rng: &mut impl Rng, form: PcForm) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    update_pc_with_z(pc, gamma, z, form)
}

pub(crate) fn update_pc_with_z(pc: f64, gamma: f64, z: f64, form: PcForm) -> f64 {
    // (1 + ((1-pc)/pc)·exp(-γz))⁻¹ is a step of γz in logit space. The
    // clamp keeps iterated values representable strictly inside (0,1).
    const LOGIT_CAP: f64 = 34.0;
    let logit = (pc / (1.0 - pc)).ln();
    let stepped = (logit + gamma * z).clamp(-LOGIT_CAP, LOGIT_CAP);
    let standard = 1.0 / (1.0 + (-stepped).exp());
    match form {
        PcForm::Standard => standard,
        PcForm::PaperLiteral => 1.0 - standard,
    }
}

/// Run the engine with a freshly initialized population.
pub fn evolve(
    problem: &ProblemSpec,
    grammar: &Grammar,
    rbf: &RbfConfig,
    cfg: &EvolutionConfig,
) -> Result<RunReport, ConfigError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let initial = init_population(cfg, &mut rng);
    Ok(run_evolution(problem, grammar, rbf, cfg, initial, rng))
}

/// Run the engine from a caller-supplied initial population (for seeding
/// known genotypes). The population must match `cfg.population_size`.
pub fn evolve_seeded(
    problem: &ProblemSpec,
    grammar: &Grammar,
    rbf: &RbfConfig,
    cfg: &EvolutionConfig,
    initial: Vec<Individual>,
) -> Result<RunReport, ConfigError> {
    cfg.validate()?;
    if initial.len() != cfg.population_size {
        return Err(config_error(
            "population_size",
            "initial population does not match the configured size",
        ));
    }
    let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    Ok(run_evolution(problem, grammar, rbf, cfg, initial, rng))
}

fn run_evolution(
    problem: &ProblemSpec,
    grammar: &Grammar,
    rbf: &RbfConfig,
    cfg: &EvolutionConfig,
    mut population: Vec<Individual>,
    mut rng: ChaCha8Rng,
) -> RunReport {
    let started = Instant::now();
    let pool = (cfg.threads > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .expect("failed to build evaluation thread pool")
    });

    let mut pc = cfg.pc0;
    let mut stats: Vec<GenerationStats> = Vec::with_capacity(cfg.max_generations + 1);
    let mut termination = TerminationReason::MaxGenerations;

    evaluate_all(&mut population, grammar, problem, rbf, cfg, pool.as_ref());
    stats.push(collect_stats(0, &population, pc));

    if stats[0].best_total <= cfg.fitness_tolerance {
        termination = TerminationReason::ToleranceReached;
    } else {
        for t in 1..=cfg.max_generations {
            population = next_generation(&population, pc, cfg, &mut rng);
            evaluate_all(&mut population, grammar, problem, rbf, cfg, pool.as_ref());
            stats.push(collect_stats(t, &population, pc));
            if stats.last().expect("just pushed").best_total <= cfg.fitness_tolerance {
                termination = TerminationReason::ToleranceReached;
                break;
            }
            pc = update_pc(pc, cfg.gamma, &mut rng, cfg.pc_form);
        }
    }

    let best_idx = tournament_pick(&population, 0..population.len());
    let best = &population[best_idx];
    let evaluation = best.evaluation.as_ref().expect("population fully evaluated");
    RunReport {
        problem: problem.clone(),
        evolution: cfg.clone(),
        rbf: *rbf,
        generations: stats,
        best: BestIndividual {
            codons: best.chromosome.codons().to_vec(),
            expression: evaluation.phenotype.clone(),
            fitness: evaluation.report,
        },
        termination,
        wall_time_secs: started.elapsed().as_secs_f64(),
    }
}

fn evaluate_all(
    population: &mut [Individual],
    grammar: &Grammar,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    cfg: &EvolutionConfig,
    pool: Option<&rayon::ThreadPool>,
) {
    let pending: Vec<usize> = population
        .iter()
        .enumerate()
        .filter(|(_, ind)| ind.evaluation.is_none())
        .map(|(i, _)| i)
        .collect();
    match pool {
        Some(pool) => {
            // Pure evaluations collected in index order keep multi-threaded
            // runs deterministic.
            let results: Vec<(usize, Evaluation)> = pool.install(|| {
                pending
                    .par_iter()
                    .map(|&i| {
                        let ev = evaluate_genotype(
                            &population[i].chromosome,
                            grammar,
                            problem,
                            rbf,
                            cfg.max_wraps,
                        );
                        (i, ev)
                    })
                    .collect()
            });
            for (i, ev) in results {
                population[i].evaluation = Some(ev);
            }
        }
        None => {
            for i in pending {
                population[i].evaluation = Some(evaluate_genotype(
                    &population[i].chromosome,
                    grammar,
                    problem,
                    rbf,
                    cfg.max_wraps,
                ));
            }
        }
    }
}

fn next_generation(
    population: &[Individual],
    pc: f64,
    cfg: &EvolutionConfig,
    rng: &mut impl Rng,
) -> Vec<Individual> {
    let mut next = Vec::with_capacity(population.len());

    // Elitism: the best individuals survive unchanged, cache included.
    let mut by_total: Vec<usize> = (0..population.len()).collect();
    by_total.sort_by(|&a, &b| population[a].total().total_cmp(&population[b].total()));
    for &i in by_total.iter().take(cfg.elitism_count) {
        next.push(population[i].clone());
    }

    let pm = 1.0 - pc;
    while next.len() < population.len() {
        let i = tournament_select(population, cfg.tournament_size, rng);
        let j = tournament_select(population, cfg.tournament_size, rng);
        let (a, b) = if rng.random_bool(pc) {
            homologous_crossover(&population[i], &population[j], cfg, rng)
        } else {
            (population[i].chromosome.clone(), population[j].chromosome.clone())
        };
        for child in [a, b] {
            if next.len() >= population.len() {
                break;
            }
            let child = if rng.random_bool(pm) { inversion_mutation(&child, rng) } else { child };
            next.push(Individual::new(child));
        }
    }
    next
}

fn collect_stats(generation: usize, population: &[Individual], pc: f64) -> GenerationStats {
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut valid = 0usize;
    let mut invalid_count = 0usize;
    for ind in population {
        let ev = ind.evaluation.as_ref().expect("stats need an evaluated population");
        if ev.report.valid {
            best = best.min(ev.total);
            worst = worst.max(ev.total);
            sum += ev.total;
            valid += 1;
        } else {
            invalid_count += 1;
        }
    }
    let (best_total, mean_total, worst_total) = if valid > 0 {
        (best, sum / valid as f64, worst)
    } else {
        // Everyone sits at the penalty fitness.
        let penalty = population[0].total();
        (penalty, penalty, penalty)
    };
    let best_idx = tournament_pick(population, 0..population.len());
    let best_expression = population[best_idx]
        .evaluation
        .as_ref()
        .and_then(|e| e.phenotype.clone())
        .unwrap_or_default();
    GenerationStats {
        generation,
        best_total,
        mean_total,
        worst_total,
        best_expression,
        pc,
        invalid_count,
    }
}
