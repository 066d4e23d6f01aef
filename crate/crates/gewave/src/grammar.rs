//! BNF grammars with indexed production rules.
//!
//! A grammar is the usual `(N, T, P, S)` tuple: nonterminals, terminals,
//! productions, and a start symbol. Alternatives of a nonterminal are
//! numbered densely from 0 in source order; those indices are what the
//! genotype-phenotype mapper reduces codons against.
//!
//! The concrete file syntax accepted by [`parse_grammar`]:
//!
//! ```text
//! # comment lines start with '#'
//! S ::= <expr>                       # optional start-symbol declaration
//! <expr> ::= <expr> <op> <expr> (0)
//!     | ( <expr> ) (1)
//!     | <operand> (2)
//! <op> ::= + | -
//! <operand> ::= 1 | 2
//! ```
//!
//! Nonterminals are written `<name>`; anything else is a terminal. A line
//! beginning with `|` continues the previous definition, and repeated
//! definitions of the same nonterminal append further alternatives. A
//! trailing parenthesized integer on an alternative is a sequence-number
//! annotation: it is not part of the right-hand side, and when present it
//! must match the alternative's computed index. Without an `S` declaration
//! the first defined nonterminal is the start symbol.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// One symbol in a production right-hand side.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Literal token emitted into the derived string.
    Terminal(String),
    /// Angle-bracket-stripped nonterminal name.
    Nonterminal(String),
}

impl Symbol {
    pub fn name(&self) -> &str {
        match self {
            Symbol::Terminal(s) | Symbol::Nonterminal(s) => s,
        }
    }

    pub fn is_nonterminal(&self) -> bool {
        matches!(self, Symbol::Nonterminal(_))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(s) => write!(f, "{s}"),
            Symbol::Nonterminal(s) => write!(f, "<{s}>"),
        }
    }
}

/// A single alternative of a nonterminal, carrying its sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionRule {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
    /// Position among the alternatives of `lhs`: 0, 1, ..., R-1.
    pub index: usize,
}

/// Which built-in grammar to construct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinVariant {
    /// The full expression grammar: `<var>` derives x, y, or z.
    Paper,
    /// Identical except `<var>` derives only x, so every phenotype is
    /// evaluable against a 1-D Hamiltonian. Default for solving.
    XOnly,
}

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("line {line}: malformed rule: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("nonterminal <{0}> is referenced but never defined")]
    UndefinedNonterminal(String),
    #[error("line {line}: empty right-hand side in a rule for <{lhs}>")]
    EmptyRhs { line: usize, lhs: String },
    #[error(
        "line {line}: sequence number ({found}) on alternative {expected} of <{lhs}> conflicts with its position"
    )]
    SequenceMismatch {
        line: usize,
        lhs: String,
        found: usize,
        expected: usize,
    },
    #[error("unknown nonterminal <{0}>")]
    UnknownNonterminal(String),
    #[error("grammar defines no rules")]
    Empty,
}

/// An immutable BNF grammar. Construct with [`parse_grammar`] or
/// [`Grammar::builtin`]; safe to share across threads once built.
#[derive(Debug, Clone)]
pub struct Grammar {
    start: String,
    /// Nonterminals in definition order.
    order: Vec<String>,
    rules: HashMap<String, Vec<ProductionRule>>,
    terminals: BTreeSet<String>,
}

impl Grammar {
    pub fn builtin(variant: BuiltinVariant) -> Grammar {
        let var_line = match variant {
            BuiltinVariant::Paper => "<var> ::= x (0) | y (1) | z (2)",
            BuiltinVariant::XOnly => "<var> ::= x (0)",
        };
        let text = format!(
            "S ::= <expr>\n\
             {var_line}\n\
             <operand> ::= 0 (0) | 1 (1) | 2 (2) | 3 (3) | 4 (4) | 5 (5) | 6 (6) | 7 (7) | 8 (8) | 9 (9) | <var> (10)\n\
             <op> ::= + (0) | - (1) | * (2) | / (3)\n\
             <func> ::= sin (0) | cos (1) | exp (2) | log (3) | sqrt (4) | BRF1 (5) | BRF2 (6) | BRF3 (7) | BRF4 (8)\n\
             <expr> ::= <expr> <op> <expr> (0) | ( <expr> ) (1) | <func> ( <expr> ) (2) | <operand> (3)\n"
        );
        parse_grammar(&text).expect("builtin grammar is well formed")
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    /// Nonterminal names in definition order.
    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.terminals.iter().map(String::as_str)
    }

    /// All alternatives of `nt` in index order. The returned length is the
    /// `R` the mapper reduces codons modulo.
    pub fn rules_for(&self, nt: &str) -> Result<&[ProductionRule], GrammarError> {
        self.rules
            .get(nt)
            .map(Vec::as_slice)
            .ok_or_else(|| GrammarError::UnknownNonterminal(nt.to_string()))
    }

    /// Serialize back to the file syntax, start symbol first. Reparsing the
    /// result yields a structurally identical grammar.
    pub fn to_bnf(&self) -> String {
        let mut out = String::new();
        let mut names: Vec<&String> = Vec::with_capacity(self.order.len());
        names.push(&self.start);
        names.extend(self.order.iter().filter(|n| **n != self.start));
        for name in names {
            for rule in &self.rules[name] {
                if rule.index == 0 {
                    out.push_str(&format!("<{name}> ::="));
                } else {
                    out.push_str("    |");
                }
                for sym in &rule.rhs {
                    out.push(' ');
                    out.push_str(&sym.to_string());
                }
                out.push_str(&format!(" ({})\n", rule.index));
            }
        }
        out
    }

    fn validate(&self) -> Result<(), GrammarError> {
        if self.rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        if !self.rules.contains_key(&self.start) {
            return Err(GrammarError::UndefinedNonterminal(self.start.clone()));
        }
        for name in &self.order {
            for (i, rule) in self.rules[name].iter().enumerate() {
                debug_assert_eq!(rule.index, i);
                for sym in &rule.rhs {
                    if let Symbol::Nonterminal(nt) = sym {
                        if !self.rules.contains_key(nt) {
                            return Err(GrammarError::UndefinedNonterminal(nt.clone()));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Structural identity: same start symbol, same alternatives per
/// nonterminal, same terminal set. Definition order is presentation only.
impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start
            && self.rules == other.rules
            && self.terminals == other.terminals
    }
}

/// Parse BNF source text. See the module docs for the accepted syntax.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut order: Vec<String> = Vec::new();
    let mut rules: HashMap<String, Vec<ProductionRule>> = HashMap::new();
    let mut terminals: BTreeSet<String> = BTreeSet::new();
    let mut start_decl: Option<String> = None;
    let mut current_lhs: Option<String> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }

        let (lhs, rhs_text) = if let Some(rest) = trimmed.strip_prefix('|') {
            let lhs = current_lhs.clone().ok_or_else(|| GrammarError::Syntax {
                line,
                reason: "continuation line with no preceding rule".into(),
            })?;
            (lhs, rest.to_string())
        } else {
            let (head, tail) = trimmed.split_once("::=").ok_or_else(|| GrammarError::Syntax {
                line,
                reason: "expected '::=' in rule definition".into(),
            })?;
            let head = head.trim();
            if head == "S" {
                // Start-symbol declaration, as in `S ::= <expr>`. Adds no rule.
                let syms = tokenize(tail, line)?;
                let syms = strip_annotation(syms).0;
                match syms.as_slice() {
                    [Symbol::Nonterminal(nt)] => {
                        if start_decl.is_some() {
                            return Err(GrammarError::Syntax {
                                line,
                                reason: "duplicate start-symbol declaration".into(),
                            });
                        }
                        start_decl = Some(nt.clone());
                        continue;
                    }
                    _ => {
                        return Err(GrammarError::Syntax {
                            line,
                            reason: "start declaration must name a single nonterminal".into(),
                        })
                    }
                }
            }
            let name = head
                .strip_prefix('<')
                .and_then(|s| s.strip_suffix('>'))
                .filter(|s| !s.is_empty())
                .ok_or_else(|| GrammarError::Syntax {
                    line,
                    reason: format!("left-hand side '{head}' is not a <nonterminal>"),
                })?;
            current_lhs = Some(name.to_string());
            (name.to_string(), tail.to_string())
        };

        if !rules.contains_key(&lhs) {
            order.push(lhs.clone());
            rules.insert(lhs.clone(), Vec::new());
        }

        for alt in rhs_text.split('|') {
            let syms = tokenize(alt, line)?;
            let (rhs, annotation) = strip_annotation(syms);
            if rhs.is_empty() {
                return Err(GrammarError::EmptyRhs { line, lhs: lhs.clone() });
            }
            let alternatives = rules.get_mut(&lhs).expect("lhs registered above");
            let index = alternatives.len();
            if let Some(found) = annotation {
                if found != index {
                    return Err(GrammarError::SequenceMismatch {
                        line,
                        lhs: lhs.clone(),
                        found,
                        expected: index,
                    });
                }
            }
            for sym in &rhs {
                if let Symbol::Terminal(t) = sym {
                    terminals.insert(t.clone());
                }
            }
            alternatives.push(ProductionRule { lhs: lhs.clone(), rhs, index });
        }
    }

    let start = match start_decl {
        Some(s) => s,
        None => order.first().cloned().ok_or(GrammarError::Empty)?,
    };
    let grammar = Grammar { start, order, rules, terminals };
    grammar.validate()?;
    Ok(grammar)
}

/// Split one alternative into symbols. `<name>` is a nonterminal; `(` and
/// `)` are single-character terminals; every other whitespace-delimited run
/// is a terminal.
fn tokenize(alt: &str, line: usize) -> Result<Vec<Symbol>, GrammarError> {
    let mut out = Vec::new();
    let mut chars = alt.chars().peekable();
    while let Some(&ch) = chars.peek() {
        if ch.is_whitespace() {
            chars.next();
        } else if ch == '<' {
            chars.next();
            let mut name = String::new();
            loop {
                match chars.next() {
                    Some('>') => break,
                    Some(c) => name.push(c),
                    None => {
                        return Err(GrammarError::Syntax {
                            line,
                            reason: "unterminated '<' in right-hand side".into(),
                        })
                    }
                }
            }
            if name.is_empty() {
                return Err(GrammarError::Syntax {
                    line,
                    reason: "empty nonterminal name '<>'".into(),
                });
            }
            out.push(Symbol::Nonterminal(name));
        } else if ch == '(' || ch == ')' {
            chars.next();
            out.push(Symbol::Terminal(ch.to_string()));
        } else {
            let mut tok = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '<' || c == '(' || c == ')' {
                    break;
                }
                tok.push(c);
                chars.next();
            }
            out.push(Symbol::Terminal(tok));
        }
    }
    Ok(out)
}

/// Remove a trailing `( INT )` sequence-number annotation, if one is present
/// and removing it leaves the right-hand side non-empty.
fn strip_annotation(mut syms: Vec<Symbol>) -> (Vec<Symbol>, Option<usize>) {
    if syms.len() >= 4 {
        let n = syms.len();
        let is_open = syms[n - 3] == Symbol::Terminal("(".into());
        let is_close = syms[n - 1] == Symbol::Terminal(")".into());
        let number = match &syms[n - 2] {
            Symbol::Terminal(t) => t.parse::<usize>().ok(),
            _ => None,
        };
        if is_open && is_close {
            if let Some(v) = number {
                syms.truncate(n - 3);
                return (syms, Some(v));
            }
        }
    }
    (syms, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_rule_grammar() {
        let g = parse_grammar("<e> ::= <o> | ( <e> )\n<o> ::= 1\n").unwrap();
        assert_eq!(g.start(), "e");
        let e_rules = g.rules_for("e").unwrap();
        assert_eq!(e_rules.len(), 2);
        assert_eq!(e_rules[0].rhs, vec![Symbol::Nonterminal("o".into())]);
        assert_eq!(
            e_rules[1].rhs,
            vec![
                Symbol::Terminal("(".into()),
                Symbol::Nonterminal("e".into()),
                Symbol::Terminal(")".into()),
            ]
        );
        assert_eq!(e_rules[0].index, 0);
        assert_eq!(e_rules[1].index, 1);
        let o_rules = g.rules_for("o").unwrap();
        assert_eq!(o_rules.len(), 1);
        assert_eq!(o_rules[0].rhs, vec![Symbol::Terminal("1".into())]);
    }

    #[test]
    fn undefined_nonterminal_is_an_error() {
        let err = parse_grammar("<e> ::= <missing>\n").unwrap_err();
        assert_eq!(err, GrammarError::UndefinedNonterminal("missing".into()));
    }

    #[test]
    fn empty_rhs_is_an_error() {
        let err = parse_grammar("<e> ::= | x\n").unwrap_err();
        assert!(matches!(err, GrammarError::EmptyRhs { .. }));
    }

    #[test]
    fn conflicting_sequence_number_is_an_error() {
        let err = parse_grammar("<e> ::= x (0) | y (0)\n").unwrap_err();
        assert_eq!(
            err,
            GrammarError::SequenceMismatch { line: 1, lhs: "e".into(), found: 0, expected: 1 }
        );
    }

    #[test]
    fn matching_sequence_numbers_are_accepted() {
        let g = parse_grammar("<e> ::= x (0) | y (1)\n").unwrap();
        assert_eq!(g.rules_for("e").unwrap().len(), 2);
    }

    #[test]
    fn malformed_line_is_a_syntax_error() {
        assert!(matches!(
            parse_grammar("<e> x y\n"),
            Err(GrammarError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn continuation_lines_extend_the_previous_definition() {
        let g = parse_grammar("<e> ::= x\n    | y\n    | z\n").unwrap();
        assert_eq!(g.rules_for("e").unwrap().len(), 3);
    }

    #[test]
    fn repeated_definitions_append_alternatives() {
        let g = parse_grammar("<e> ::= x\n<f> ::= <e>\n<e> ::= y\n").unwrap();
        assert_eq!(g.rules_for("e").unwrap().len(), 2);
        assert_eq!(g.rules_for("e").unwrap()[1].rhs, vec![Symbol::Terminal("y".into())]);
        assert_eq!(g.start(), "e");
    }

    #[test]
    fn builtin_paper_matches_published_rule_counts() {
        let g = Grammar::builtin(BuiltinVariant::Paper);
        assert_eq!(g.start(), "expr");
        assert_eq!(g.rules_for("expr").unwrap().len(), 4);
        assert_eq!(g.rules_for("func").unwrap().len(), 9);
        assert_eq!(g.rules_for("op").unwrap().len(), 4);
        assert_eq!(g.rules_for("operand").unwrap().len(), 11);
        assert_eq!(g.rules_for("var").unwrap().len(), 3);

        // func's final alternative is the fourth radial basis function.
        let func = g.rules_for("func").unwrap();
        assert_eq!(func[8].rhs, vec![Symbol::Terminal("BRF4".into())]);
        assert_eq!(func[4].rhs, vec![Symbol::Terminal("sqrt".into())]);

        // expr's alternative 2 is <func> ( <expr> ).
        let expr = g.rules_for("expr").unwrap();
        assert_eq!(
            expr[2].rhs,
            vec![
                Symbol::Nonterminal("func".into()),
                Symbol::Terminal("(".into()),
                Symbol::Nonterminal("expr".into()),
                Symbol::Terminal(")".into()),
            ]
        );

        let op: Vec<_> = g.rules_for("op").unwrap().iter().map(|r| r.rhs[0].name()).collect();
        assert_eq!(op, ["+", "-", "*", "/"]);
        let var: Vec<_> = g.rules_for("var").unwrap().iter().map(|r| r.rhs[0].name()).collect();
        assert_eq!(var, ["x", "y", "z"]);
        let operand: Vec<_> =
            g.rules_for("operand").unwrap().iter().map(|r| r.rhs[0].name()).collect();
        assert_eq!(operand, ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "var"]);
    }

    #[test]
    fn builtin_x_only_restricts_var() {
        let g = Grammar::builtin(BuiltinVariant::XOnly);
        let var = g.rules_for("var").unwrap();
        assert_eq!(var.len(), 1);
        assert_eq!(var[0].rhs, vec![Symbol::Terminal("x".into())]);
        assert_eq!(g.rules_for("func").unwrap().len(), 9);
    }

    #[test]
    fn rules_for_unknown_nonterminal_errors() {
        let g = Grammar::builtin(BuiltinVariant::Paper);
        assert_eq!(
            g.rules_for("nope").unwrap_err(),
            GrammarError::UnknownNonterminal("nope".into())
        );
    }

    #[test]
    fn indices_are_dense_for_every_nonterminal() {
        let g = Grammar::builtin(BuiltinVariant::Paper);
        for nt in g.nonterminals() {
            for (i, rule) in g.rules_for(nt).unwrap().iter().enumerate() {
                assert_eq!(rule.index, i);
            }
        }
    }

    #[test]
    fn bnf_round_trip_is_structurally_identical() {
        for variant in [BuiltinVariant::Paper, BuiltinVariant::XOnly] {
            let g = Grammar::builtin(variant);
            let reparsed = parse_grammar(&g.to_bnf()).unwrap();
            assert_eq!(g, reparsed);
        }
        let g = parse_grammar("<e> ::= <o> <o> | ( <e> )\n<o> ::= 1 | 2\n").unwrap();
        let reparsed = parse_grammar(&g.to_bnf()).unwrap();
        assert_eq!(g, reparsed);
    }

    #[test]
    fn parenthesized_digit_rhs_is_not_an_annotation() {
        // The whole alternative is "( 3 )"; stripping it would leave nothing,
        // so it must be kept as three terminals.
        let g = parse_grammar("<e> ::= ( 3 )\n").unwrap();
        let rhs = &g.rules_for("e").unwrap()[0].rhs;
        assert_eq!(rhs.len(), 3);
    }

    #[test]
    fn start_declaration_overrides_first_definition() {
        let g = parse_grammar("S ::= <b>\n<a> ::= 1\n<b> ::= <a>\n").unwrap();
        assert_eq!(g.start(), "b");
    }
}
