//! Genotype to phenotype mapping.
//!
//! A chromosome is a fixed-length vector of non-negative integer codons.
//! Starting from the grammar's start symbol, the leftmost nonterminal is
//! repeatedly replaced by the alternative `codon mod R`, where `R` is that
//! nonterminal's alternative count, consuming codons left to right. When
//! the codons run out, reading wraps back to the first codon; a mapping
//! that would need more than `max_wraps` wrapping events is rejected.
//! Rejection is a value, not an error — rejected chromosomes simply earn a
//! penalty fitness.
//!
//! Every step is recorded in a [`MappingTrace`] so the derivation can be
//! printed as a table and so homologous crossover can align parents by
//! their rule choices.

use serde::{Deserialize, Serialize};

use crate::expr::{parse_expression, Expression};
use crate::grammar::{Grammar, Symbol};

/// Threshold on wrapping events before a chromosome is rejected.
pub const DEFAULT_MAX_WRAPS: u32 = 2;

/// A fixed-length vector of non-negative integer codons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    codons: Vec<u32>,
}

impl Chromosome {
    /// Panics on an empty codon list; every construction path in the
    /// library guarantees at least one codon.
    pub fn new(codons: Vec<u32>) -> Chromosome {
        assert!(!codons.is_empty(), "chromosome must hold at least one codon");
        Chromosome { codons }
    }

    pub fn codons(&self) -> &[u32] {
        &self.codons
    }

    pub fn len(&self) -> usize {
        self.codons.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.codons
    }
}

impl From<Vec<u32>> for Chromosome {
    fn from(codons: Vec<u32>) -> Self {
        Chromosome::new(codons)
    }
}

/// One derivation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingStep {
    /// Derivation string before this step, nonterminals in angle brackets.
    pub partial: String,
    /// Name of the leftmost nonterminal rewritten here.
    pub nonterminal: String,
    /// Total codons consumed before this step; the chromosome index is
    /// `codon_position % len`.
    pub codon_position: usize,
    pub codon: u32,
    /// Alternative count R for the nonterminal.
    pub rule_count: usize,
    /// `codon mod rule_count`.
    pub choice: usize,
    /// Wrapping events that had occurred when this codon was read.
    pub wraps: u32,
}

impl MappingStep {
    /// The operations-column rendering, e.g. `10 mod 4=2`.
    pub fn operation(&self) -> String {
        format!("{} mod {}={}", self.codon, self.rule_count, self.choice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingTrace {
    /// The chromosome the trace was produced from.
    pub codons: Vec<u32>,
    pub steps: Vec<MappingStep>,
    /// Completed derivation string; `None` when mapping was rejected.
    pub final_text: Option<String>,
}

impl MappingTrace {
    pub fn wrap_count(&self) -> u32 {
        self.steps.last().map_or(0, |s| s.wraps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    WrapLimitExceeded,
}

/// Result of mapping a chromosome through a grammar.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingOutcome {
    Mapped {
        /// The completed derivation string.
        text: String,
        /// The derivation parsed as an expression; `None` when a custom
        /// grammar generates strings outside the expression language.
        expression: Option<Expression>,
        trace: MappingTrace,
    },
    Rejected {
        reason: RejectReason,
        trace: MappingTrace,
    },
}

impl MappingOutcome {
    pub fn trace(&self) -> &MappingTrace {
        match self {
            MappingOutcome::Mapped { trace, .. } | MappingOutcome::Rejected { trace, .. } => trace,
        }
    }

    pub fn is_mapped(&self) -> bool {
        matches!(self, MappingOutcome::Mapped { .. })
    }
}

fn render(sentence: &[Symbol]) -> String {
    let mut out = String::new();
    for sym in sentence {
        out.push_str(&sym.to_string());
    }
    out
}

/// Map `chromosome` through `grammar` with at most `max_wraps` wrapping
/// events. Deterministic: identical inputs always yield identical outcomes.
pub fn map_genotype(grammar: &Grammar, chromosome: &Chromosome, max_wraps: u32) -> MappingOutcome {
    let codons = chromosome.codons();
    let len = codons.len();
    let mut sentence: Vec<Symbol> = vec![Symbol::Nonterminal(grammar.start().to_string())];
    let mut steps: Vec<MappingStep> = Vec::new();
    let mut consumed = 0usize;

    loop {
        let Some(leftmost) = sentence.iter().position(Symbol::is_nonterminal) else {
            let text = render(&sentence);
            let expression = parse_expression(&text).ok();
            let trace =
                MappingTrace { codons: codons.to_vec(), steps, final_text: Some(text.clone()) };
            return MappingOutcome::Mapped { text, expression, trace };
        };

        let wraps = (consumed / len) as u32;
        if wraps > max_wraps {
            let trace = MappingTrace { codons: codons.to_vec(), steps, final_text: None };
            return MappingOutcome::Rejected { reason: RejectReason::WrapLimitExceeded, trace };
        }

        let nt = sentence[leftmost].name().to_string();
        let rules = grammar
            .rules_for(&nt)
            .expect("validated grammar has rules for every reachable nonterminal");
        let codon = codons[consumed % len];
        let choice = (codon as usize) % rules.len();

        steps.push(MappingStep {
            partial: render(&sentence),
            nonterminal: nt,
            codon_position: consumed,
            codon,
            rule_count: rules.len(),
            choice,
            wraps,
        });

        sentence.splice(leftmost..=leftmost, rules[choice].rhs.iter().cloned());
        consumed += 1;
    }
}

/// Render a trace as a three-column table: derivation string, codons still
/// to be read, and the `V mod R=i` operation.
pub fn format_trace(trace: &MappingTrace) -> String {
    const HEADERS: [&str; 3] = ["String_BNF", "Chromosome", "Operation"];
    let len = trace.codons.len().max(1);
    let mut rows: Vec<[String; 3]> = Vec::with_capacity(trace.steps.len() + 1);
    for step in &trace.steps {
        let remaining: Vec<String> = trace.codons[step.codon_position % len..]
            .iter()
            .map(u32::to_string)
            .collect();
        rows.push([step.partial.clone(), remaining.join(","), step.operation()]);
    }
    if let Some(text) = &trace.final_text {
        rows.push([text.clone(), String::new(), String::new()]);
    }

    let mut widths = [HEADERS[0].len(), HEADERS[1].len(), HEADERS[2].len()];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }

    let mut out = String::new();
    let emit = |out: &mut String, cells: [&str; 3]| {
        out.push_str(&format!(
            "{:<w0$}  {:<w1$}  {}\n",
            cells[0],
            cells[1],
            cells[2],
            w0 = widths[0],
            w1 = widths[1]
        ));
    };
    emit(&mut out, HEADERS);
    for row in &rows {
        emit(&mut out, [&row[0], &row[1], &row[2]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, Env, RbfConfig};
    use crate::grammar::{parse_grammar, BuiltinVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn paper() -> Grammar {
        Grammar::builtin(BuiltinVariant::Paper)
    }

    const TABLE_CODONS: [u32; 9] = [10, 4, 8, 15, 3, 7, 19, 21, 9];

    #[test]
    fn reproduces_published_mapping_table() {
        let outcome = map_genotype(&paper(), &Chromosome::new(TABLE_CODONS.to_vec()), 2);
        let MappingOutcome::Mapped { text, trace, expression } = outcome else {
            panic!("expected mapped outcome");
        };
        assert_eq!(text, "sqrt(3/x)");
        assert!(expression.is_some());

        let expected: [(&str, &str); 9] = [
            ("<expr>", "10 mod 4=2"),
            ("<func>(<expr>)", "4 mod 9=4"),
            ("sqrt(<expr>)", "8 mod 4=0"),
            ("sqrt(<expr><op><expr>)", "15 mod 4=3"),
            ("sqrt(<operand><op><expr>)", "3 mod 11=3"),
            ("sqrt(3<op><expr>)", "7 mod 4=3"),
            ("sqrt(3/<expr>)", "19 mod 4=3"),
            ("sqrt(3/<operand>)", "21 mod 11=10"),
            ("sqrt(3/<var>)", "9 mod 3=0"),
        ];
        assert_eq!(trace.steps.len(), 9);
        for (step, (partial, operation)) in trace.steps.iter().zip(expected) {
            assert_eq!(step.partial, partial);
            assert_eq!(step.operation(), operation);
        }
        assert_eq!(trace.wrap_count(), 0);
        assert_eq!(trace.final_text.as_deref(), Some("sqrt(3/x)"));
    }

    #[test]
    fn maps_two_codon_chromosome_to_a_digit() {
        // 3 mod 4 = 3 selects <operand>; 5 mod 11 = 5 selects the digit 5.
        let outcome = map_genotype(&paper(), &Chromosome::new(vec![3, 5]), 2);
        let MappingOutcome::Mapped { text, trace, .. } = outcome else {
            panic!("expected mapped outcome");
        };
        assert_eq!(text, "5");
        assert_eq!(trace.steps.len(), 2);
    }

    #[test]
    fn rejects_non_terminating_chromosome() {
        // Codon 0 always selects <expr><op><expr>; with one codon the third
        // reuse would be wrap 3, past the threshold of 2.
        let outcome = map_genotype(&paper(), &Chromosome::new(vec![0]), 2);
        let MappingOutcome::Rejected { reason, trace } = outcome else {
            panic!("expected rejection");
        };
        assert_eq!(reason, RejectReason::WrapLimitExceeded);
        assert_eq!(trace.steps.len(), 3);
        assert_eq!(trace.steps.last().unwrap().wraps, 2);
        assert_eq!(trace.final_text, None);
    }

    #[test]
    fn single_alternative_nonterminals_still_consume_codons() {
        let g = parse_grammar("<s> ::= <a>\n<a> ::= 1 | 2\n").unwrap();
        let outcome = map_genotype(&g, &Chromosome::new(vec![7, 9]), 2);
        let MappingOutcome::Mapped { text, trace, .. } = outcome else {
            panic!("expected mapped outcome");
        };
        assert_eq!(text, "2");
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(trace.steps[0].operation(), "7 mod 1=0");
        assert_eq!(trace.steps[1].operation(), "9 mod 2=1");
    }

    #[test]
    fn mapping_is_deterministic() {
        let chrom = Chromosome::new(TABLE_CODONS.to_vec());
        let a = map_genotype(&paper(), &chrom, 2);
        let b = map_genotype(&paper(), &chrom, 2);
        assert_eq!(a, b);
    }

    #[test]
    fn mapped_text_has_no_nonterminals_and_bounded_consumption() {
        let g = paper();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let codons: Vec<u32> = (0..20).map(|_| rng.random_range(0..=255)).collect();
            let chrom = Chromosome::new(codons);
            let outcome = map_genotype(&g, &chrom, 2);
            let trace = outcome.trace();
            assert!(trace.steps.len() <= 3 * chrom.len());
            if let MappingOutcome::Mapped { text, .. } = &outcome {
                assert!(!text.contains('<'), "nonterminal left in '{text}'");
            }
        }
    }

    #[test]
    fn derivation_text_reparses_to_equivalent_expression() {
        let g = Grammar::builtin(BuiltinVariant::XOnly);
        let rbf = RbfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 60 {
            let codons: Vec<u32> = (0..50).map(|_| rng.random_range(0..=255)).collect();
            let outcome = map_genotype(&g, &Chromosome::new(codons), 2);
            let MappingOutcome::Mapped { text, expression: Some(expr), .. } = outcome else {
                continue;
            };
            let reparsed = parse_expression(&text).unwrap();
            for i in 0..100 {
                let at = -5.0 + 0.1 * i as f64;
                let env = Env::x(at);
                match (evaluate(&expr, &env, &rbf), evaluate(&reparsed, &env, &rbf)) {
                    (Ok(a), Ok(b)) => assert_eq!(a.to_bits(), b.to_bits()),
                    (Err(ea), Err(eb)) => assert_eq!(ea, eb),
                    (a, b) => panic!("divergent evaluation of '{text}': {a:?} vs {b:?}"),
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn format_trace_matches_table_layout() {
        let outcome = map_genotype(&paper(), &Chromosome::new(TABLE_CODONS.to_vec()), 2);
        let table = format_trace(outcome.trace());
        let lines: Vec<&str> = table.lines().collect();
        // Header, nine steps, final string.
        assert_eq!(lines.len(), 11);
        assert!(lines[0].starts_with("String_BNF"));
        assert!(lines[1].ends_with("10 mod 4=2"));
        assert!(lines[1].contains("10,4,8,15,3,7,19,21,9"));
        assert!(lines[10].starts_with("sqrt(3/x)"));
    }

    #[test]
    fn format_trace_of_empty_trace_is_header_only() {
        let trace = MappingTrace { codons: vec![1], steps: vec![], final_text: None };
        let table = format_trace(&trace);
        assert_eq!(table.lines().count(), 1);
    }

    #[test]
    fn format_trace_two_codon_case() {
        let outcome = map_genotype(&paper(), &Chromosome::new(vec![3, 5]), 2);
        let table = format_trace(outcome.trace());
        // Header + two steps + final string.
        assert_eq!(table.lines().count(), 4);
    }
}
