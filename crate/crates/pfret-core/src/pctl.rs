//! PCTL* syntax trees, well-formedness checking, and PRISM property syntax.
//!
//! State formulas are boolean combinations of atoms and probability operators;
//! path formulas add the temporal operators. Derived operators (`F`, `G`, `R`,
//! `|`, `=>`, bounded `F<=n` / `G<=n`) are first-class nodes so that printed
//! output keeps the shape in which formulas are constructed.
//!
//! Printing is canonical: every non-atomic operand is parenthesized, a `P`
//! operator's body is bracketed and parenthesized unless it is itself a `P`
//! node, and bounded operators print as `F<=n` / `G<=n`. The parser accepts
//! that canonical form plus harmless variations found in the wild: arbitrary
//! whitespace, redundant parentheses, and the bracketed bound style `G[<=10]`.
//!
//! Templates are ordinary formulas whose atoms and bounds may be `$name$`
//! placeholders; instantiation substitutes concrete subformulas and numbers.

use std::collections::BTreeMap;
use std::fmt;

/// Comparison operators usable both in atoms (`x < 3`) and probability bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Probability comparison operators: the subset of [`CmpOp`] valid after `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl BoundOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundOp::Lt => "<",
            BoundOp::Le => "<=",
            BoundOp::Gt => ">",
            BoundOp::Ge => ">=",
        }
    }

    /// Applies the comparison to a computed probability.
    pub fn compare(self, value: f64, bound: f64) -> bool {
        match self {
            BoundOp::Lt => value < bound,
            BoundOp::Le => value <= bound,
            BoundOp::Gt => value > bound,
            BoundOp::Ge => value >= bound,
        }
    }
}

/// One side of an atomic comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Ident(String),
    /// Numeric literal, kept as its source lexeme so printing round-trips.
    Num(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Ident(s) => write!(f, "{s}"),
            Term::Num(s) => write!(f, "{s}"),
        }
    }
}

/// Atomic proposition: a bare identifier (possibly a `$placeholder$`) or a
/// comparison between identifiers and numeric literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Ident(String),
    Cmp { lhs: Term, op: CmpOp, rhs: Term },
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Ident(s) => write!(f, "{s}"),
            Atom::Cmp { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.as_str()),
        }
    }
}

/// A probability bound: either a concrete comparison or the placeholder pair
/// `$bound_op$$bound_val$` awaiting instantiation.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbBound {
    Lit { op: BoundOp, value: f64 },
    Placeholder,
}

impl ProbBound {
    pub fn ge_one() -> Self {
        ProbBound::Lit { op: BoundOp::Ge, value: 1.0 }
    }
}

impl fmt::Display for ProbBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbBound::Lit { op, value } => write!(f, "{}{}", op.as_str(), value),
            ProbBound::Placeholder => write!(f, "$bound_op$$bound_val$"),
        }
    }
}

/// A step bound for `F<=n` / `G<=n` / `U<=n`: concrete, or the placeholder
/// `$n$` (printed `$n+k$` when carrying a constant offset).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Steps {
    Lit(u64),
    Placeholder { offset: u64 },
}

impl Steps {
    /// The bound shifted by a constant (`n` ↦ `n + k`).
    pub fn offset_by(&self, k: u64) -> Steps {
        match self {
            Steps::Lit(n) => Steps::Lit(n + k),
            Steps::Placeholder { offset } => Steps::Placeholder { offset: offset + k },
        }
    }
}

impl fmt::Display for Steps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Steps::Lit(n) => write!(f, "{n}"),
            Steps::Placeholder { offset: 0 } => write!(f, "$n$"),
            Steps::Placeholder { offset } => write!(f, "$n+{offset}$"),
        }
    }
}

/// State formulas: boolean structure over atoms and probability operators.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    Atom(Atom),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
    Prob { bound: ProbBound, body: Box<PathFormula> },
}

/// Path formulas: LTL structure whose leaves are state formulas.
#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    State(StateFormula),
    Not(Box<PathFormula>),
    And(Box<PathFormula>, Box<PathFormula>),
    Or(Box<PathFormula>, Box<PathFormula>),
    Implies(Box<PathFormula>, Box<PathFormula>),
    Next(Box<PathFormula>),
    Finally(Box<PathFormula>),
    Globally(Box<PathFormula>),
    Until(Box<PathFormula>, Box<PathFormula>),
    Release(Box<PathFormula>, Box<PathFormula>),
    BoundedFinally(Box<PathFormula>, Steps),
    BoundedGlobally(Box<PathFormula>, Steps),
    BoundedUntil(Box<PathFormula>, Box<PathFormula>, Steps),
}

impl PathFormula {
    pub fn atom(name: &str) -> Self {
        PathFormula::State(StateFormula::Atom(Atom::Ident(name.to_string())))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        PathFormula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Self) -> Self {
        PathFormula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Self) -> Self {
        PathFormula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Self) -> Self {
        PathFormula::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn next(self) -> Self {
        PathFormula::Next(Box::new(self))
    }

    pub fn finally(self) -> Self {
        PathFormula::Finally(Box::new(self))
    }

    pub fn globally(self) -> Self {
        PathFormula::Globally(Box::new(self))
    }

    pub fn until(self, rhs: Self) -> Self {
        PathFormula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Self) -> Self {
        PathFormula::Release(Box::new(self), Box::new(rhs))
    }

    /// True for nodes printed without surrounding parentheses in operand
    /// position: bare identifier atoms and `true`.
    fn is_bare(&self) -> bool {
        matches!(
            self,
            PathFormula::State(StateFormula::Atom(Atom::Ident(_)))
                | PathFormula::State(StateFormula::True)
        )
    }

    /// Substitutes placeholder atoms (by identifier name) with path formulas,
    /// recursing into probability-operator bodies.
    pub fn substitute_atoms(&self, map: &BTreeMap<String, PathFormula>) -> PathFormula {
        use PathFormula::*;
        match self {
            State(sf) => match sf {
                StateFormula::Atom(Atom::Ident(name)) => match map.get(name) {
                    Some(replacement) => replacement.clone(),
                    None => self.clone(),
                },
                StateFormula::Prob { bound, body } => State(StateFormula::Prob {
                    bound: bound.clone(),
                    body: Box::new(body.substitute_atoms(map)),
                }),
                _ => self.clone(),
            },
            Not(a) => Not(Box::new(a.substitute_atoms(map))),
            And(a, b) => And(Box::new(a.substitute_atoms(map)), Box::new(b.substitute_atoms(map))),
            Or(a, b) => Or(Box::new(a.substitute_atoms(map)), Box::new(b.substitute_atoms(map))),
            Implies(a, b) => {
                Implies(Box::new(a.substitute_atoms(map)), Box::new(b.substitute_atoms(map)))
            }
            Next(a) => Next(Box::new(a.substitute_atoms(map))),
            Finally(a) => Finally(Box::new(a.substitute_atoms(map))),
            Globally(a) => Globally(Box::new(a.substitute_atoms(map))),
            Until(a, b) => {
                Until(Box::new(a.substitute_atoms(map)), Box::new(b.substitute_atoms(map)))
            }
            Release(a, b) => {
                Release(Box::new(a.substitute_atoms(map)), Box::new(b.substitute_atoms(map)))
            }
            BoundedFinally(a, n) => Box::new(a.substitute_atoms(map)).pipe_bf(n.clone()),
            BoundedGlobally(a, n) => Box::new(a.substitute_atoms(map)).pipe_bg(n.clone()),
            BoundedUntil(a, b, n) => BoundedUntil(
                Box::new(a.substitute_atoms(map)),
                Box::new(b.substitute_atoms(map)),
                n.clone(),
            ),
        }
    }

    /// Replaces placeholder probability bounds and placeholder step bounds
    /// with concrete values throughout the formula.
    pub fn instantiate_bounds(&self, bound: Option<(BoundOp, f64)>, n: Option<u64>) -> PathFormula {
        use PathFormula::*;
        let steps = |s: &Steps| match s {
            Steps::Lit(k) => Steps::Lit(*k),
            Steps::Placeholder { offset } => match n {
                Some(base) => Steps::Lit(base + offset),
                None => s.clone(),
            },
        };
        match self {
            State(StateFormula::Prob { bound: b, body }) => {
                let b = match b {
                    ProbBound::Placeholder => match bound {
                        Some((op, value)) => ProbBound::Lit { op, value },
                        None => b.clone(),
                    },
                    lit => lit.clone(),
                };
                State(StateFormula::Prob {
                    bound: b,
                    body: Box::new(body.instantiate_bounds(bound, n)),
                })
            }
            State(sf) => State(sf.clone()),
            Not(a) => Not(Box::new(a.instantiate_bounds(bound, n))),
            And(a, b) => And(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            Or(a, b) => Or(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            Implies(a, b) => Implies(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            Next(a) => Next(Box::new(a.instantiate_bounds(bound, n))),
            Finally(a) => Finally(Box::new(a.instantiate_bounds(bound, n))),
            Globally(a) => Globally(Box::new(a.instantiate_bounds(bound, n))),
            Until(a, b) => Until(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            Release(a, b) => Release(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            BoundedFinally(a, s) => {
                BoundedFinally(Box::new(a.instantiate_bounds(bound, n)), steps(s))
            }
            BoundedGlobally(a, s) => {
                BoundedGlobally(Box::new(a.instantiate_bounds(bound, n)), steps(s))
            }
            BoundedUntil(a, b, s) => BoundedUntil(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
                steps(s),
            ),
        }
    }
}

// Small helpers so substitute_atoms stays readable above.
trait PipeBounded {
    fn pipe_bf(self, n: Steps) -> PathFormula;
    fn pipe_bg(self, n: Steps) -> PathFormula;
}

impl PipeBounded for Box<PathFormula> {
    fn pipe_bf(self, n: Steps) -> PathFormula {
        PathFormula::BoundedFinally(self, n)
    }
    fn pipe_bg(self, n: Steps) -> PathFormula {
        PathFormula::BoundedGlobally(self, n)
    }
}

impl StateFormula {
    pub fn atom(name: &str) -> Self {
        StateFormula::Atom(Atom::Ident(name.to_string()))
    }

    pub fn prob(bound: ProbBound, body: PathFormula) -> Self {
        StateFormula::Prob { bound, body: Box::new(body) }
    }

    /// Substitutes placeholder atoms throughout (see
    /// [`PathFormula::substitute_atoms`]); substitutions at state positions
    /// must themselves be state formulas.
    pub fn substitute_atoms(&self, map: &BTreeMap<String, PathFormula>) -> StateFormula {
        match self {
            StateFormula::Prob { bound, body } => StateFormula::Prob {
                bound: bound.clone(),
                body: Box::new(body.substitute_atoms(map)),
            },
            StateFormula::Not(a) => StateFormula::Not(Box::new(a.substitute_atoms(map))),
            StateFormula::And(a, b) => StateFormula::And(
                Box::new(a.substitute_atoms(map)),
                Box::new(b.substitute_atoms(map)),
            ),
            StateFormula::Or(a, b) => StateFormula::Or(
                Box::new(a.substitute_atoms(map)),
                Box::new(b.substitute_atoms(map)),
            ),
            StateFormula::Implies(a, b) => StateFormula::Implies(
                Box::new(a.substitute_atoms(map)),
                Box::new(b.substitute_atoms(map)),
            ),
            StateFormula::Atom(Atom::Ident(name)) => match map.get(name) {
                Some(PathFormula::State(sf)) => sf.clone(),
                Some(_) => panic!("path formula substituted at state position for {name}"),
                None => self.clone(),
            },
            _ => self.clone(),
        }
    }

    /// See [`PathFormula::instantiate_bounds`].
    pub fn instantiate_bounds(
        &self,
        bound: Option<(BoundOp, f64)>,
        n: Option<u64>,
    ) -> StateFormula {
        match self {
            StateFormula::Prob { bound: b, body } => {
                let b = match b {
                    ProbBound::Placeholder => match bound {
                        Some((op, value)) => ProbBound::Lit { op, value },
                        None => b.clone(),
                    },
                    lit => lit.clone(),
                };
                StateFormula::Prob { bound: b, body: Box::new(body.instantiate_bounds(bound, n)) }
            }
            StateFormula::Not(a) => StateFormula::Not(Box::new(a.instantiate_bounds(bound, n))),
            StateFormula::And(a, b) => StateFormula::And(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            StateFormula::Or(a, b) => StateFormula::Or(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            StateFormula::Implies(a, b) => StateFormula::Implies(
                Box::new(a.instantiate_bounds(bound, n)),
                Box::new(b.instantiate_bounds(bound, n)),
            ),
            other => other.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn fmt_bound_value(value: f64) -> String {
    format!("{value}")
}

fn print_path(f: &PathFormula) -> String {
    use PathFormula::*;
    match f {
        State(sf) => print_state(sf),
        Not(a) => format!("! {}", operand(a)),
        And(a, b) => format!("{} & {}", operand(a), operand(b)),
        Or(a, b) => format!("{} | {}", operand(a), operand(b)),
        Implies(a, b) => format!("{} => {}", operand(a), operand(b)),
        Next(a) => format!("X {}", operand(a)),
        Finally(a) => format!("F {}", operand(a)),
        Globally(a) => format!("G {}", operand(a)),
        Until(a, b) => format!("{} U {}", operand(a), operand(b)),
        Release(a, b) => format!("{} R {}", operand(a), operand(b)),
        BoundedFinally(a, n) => format!("F<={n} {}", operand(a)),
        BoundedGlobally(a, n) => format!("G<={n} {}", operand(a)),
        BoundedUntil(a, b, n) => format!("{} U<={n} {}", operand(a), operand(b)),
    }
}

fn operand(f: &PathFormula) -> String {
    if f.is_bare() {
        print_path(f)
    } else {
        format!("({})", print_path(f))
    }
}

fn print_state(f: &StateFormula) -> String {
    match f {
        StateFormula::True => "true".to_string(),
        StateFormula::Atom(a) => a.to_string(),
        StateFormula::Not(a) => format!("! {}", state_operand(a)),
        StateFormula::And(a, b) => format!("{} & {}", state_operand(a), state_operand(b)),
        StateFormula::Or(a, b) => format!("{} | {}", state_operand(a), state_operand(b)),
        StateFormula::Implies(a, b) => format!("{} => {}", state_operand(a), state_operand(b)),
        StateFormula::Prob { bound, body } => {
            let bound_text = match bound {
                ProbBound::Lit { op, value } => format!("{}{}", op.as_str(), fmt_bound_value(*value)),
                ProbBound::Placeholder => "$bound_op$$bound_val$".to_string(),
            };
            // A nested probability operator prints bare inside the brackets;
            // anything else is parenthesized.
            let body_text = match body.as_ref() {
                PathFormula::State(inner @ StateFormula::Prob { .. }) => print_state(inner),
                other => format!("({})", print_path(other)),
            };
            format!("P{bound_text}[{body_text}]")
        }
    }
}

fn state_operand(f: &StateFormula) -> String {
    match f {
        StateFormula::True | StateFormula::Atom(Atom::Ident(_)) => print_state(f),
        _ => format!("({})", print_state(f)),
    }
}

/// Prints a state formula in PRISM property syntax.
pub fn print_prism(f: &StateFormula) -> String {
    print_state(f)
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_state(self))
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_path(self))
    }
}

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

/// Checks the restricted shape produced by the requirement compiler: the
/// outermost node is `P>=1[...]`, every nested probability operator wraps a
/// probability-free LTL body, and every concrete bound lies in `[0, 1]`.
/// Placeholder bounds are accepted (they instantiate to concrete ones).
pub fn well_formed(f: &StateFormula) -> bool {
    well_formed_explain(f).is_ok()
}

/// Like [`well_formed`], but reports the path to the first offending node,
/// as a dotted trail of constructor names from the root.
pub fn well_formed_explain(f: &StateFormula) -> Result<(), String> {
    match f {
        StateFormula::Prob { bound: ProbBound::Lit { op: BoundOp::Ge, value }, body }
            if *value == 1.0 =>
        {
            check_outer_body(body, "P>=1")
        }
        StateFormula::Prob { .. } => Err("root: outermost operator must be P>=1".to_string()),
        _ => Err("root: formula must be wrapped in a probability operator".to_string()),
    }
}

fn check_bound(bound: &ProbBound, path: &str) -> Result<(), String> {
    match bound {
        ProbBound::Lit { value, .. } if !(0.0..=1.0).contains(value) => {
            Err(format!("{path}: probability bound {value} outside [0, 1]"))
        }
        _ => Ok(()),
    }
}

/// The outer body may mix temporal structure with nested probability
/// operators; each nested operator's own body must be probability-free.
fn check_outer_body(f: &PathFormula, path: &str) -> Result<(), String> {
    use PathFormula::*;
    match f {
        State(StateFormula::Prob { bound, body }) => {
            let path = format!("{path}.P");
            check_bound(bound, &path)?;
            check_ltl_only(body, &path)
        }
        State(sf) => check_state_plain(sf, path),
        Not(a) | Next(a) | Finally(a) | Globally(a) | BoundedFinally(a, _)
        | BoundedGlobally(a, _) => check_outer_body(a, &format!("{path}.{}", tag(f))),
        And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b)
        | BoundedUntil(a, b, _) => {
            let tag = tag(f);
            check_outer_body(a, &format!("{path}.{tag}.lhs"))?;
            check_outer_body(b, &format!("{path}.{tag}.rhs"))
        }
    }
}

/// State formulas other than probability operators may not hide a nested
/// probability operator below boolean structure in the outer body; the
/// compiler never produces that shape, and rejecting it keeps the grammar
/// unambiguous.
fn check_state_plain(f: &StateFormula, path: &str) -> Result<(), String> {
    match f {
        StateFormula::True | StateFormula::Atom(_) => Ok(()),
        StateFormula::Not(a) => check_state_plain(a, path),
        StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
            check_state_plain(a, path)?;
            check_state_plain(b, path)
        }
        StateFormula::Prob { .. } => {
            Err(format!("{path}: probability operator nested under state-level boolean structure"))
        }
    }
}

/// Bodies of nested probability operators: pure LTL, no probability operators.
fn check_ltl_only(f: &PathFormula, path: &str) -> Result<(), String> {
    use PathFormula::*;
    match f {
        State(sf) => check_state_ltl(sf, path),
        Not(a) | Next(a) | Finally(a) | Globally(a) | BoundedFinally(a, _)
        | BoundedGlobally(a, _) => check_ltl_only(a, &format!("{path}.{}", tag(f))),
        And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b)
        | BoundedUntil(a, b, _) => {
            let tag = tag(f);
            check_ltl_only(a, &format!("{path}.{tag}.lhs"))?;
            check_ltl_only(b, &format!("{path}.{tag}.rhs"))
        }
    }
}

fn check_state_ltl(f: &StateFormula, path: &str) -> Result<(), String> {
    match f {
        StateFormula::True | StateFormula::Atom(_) => Ok(()),
        StateFormula::Not(a) => check_state_ltl(a, path),
        StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
            check_state_ltl(a, path)?;
            check_state_ltl(b, path)
        }
        StateFormula::Prob { .. } => {
            Err(format!("{path}: probability operator inside a probability operator body"))
        }
    }
}

fn tag(f: &PathFormula) -> &'static str {
    use PathFormula::*;
    match f {
        State(_) => "state",
        Not(_) => "not",
        And(..) => "and",
        Or(..) => "or",
        Implies(..) => "implies",
        Next(_) => "next",
        Finally(_) => "finally",
        Globally(_) => "globally",
        Until(..) => "until",
        Release(..) => "release",
        BoundedFinally(..) => "bounded-finally",
        BoundedGlobally(..) => "bounded-globally",
        BoundedUntil(..) => "bounded-until",
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Placeholder(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Cmp(CmpOp),
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("formula syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBracket, i));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBracket, i));
                i += 1;
            }
            '&' => {
                toks.push((Tok::Amp, i));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, i));
                i += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Cmp(CmpOp::Neq), i));
                    i += 2;
                } else {
                    toks.push((Tok::Bang, i));
                    i += 1;
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Arrow, i));
                    i += 2;
                } else {
                    toks.push((Tok::Cmp(CmpOp::Eq), i));
                    i += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Cmp(CmpOp::Le), i));
                    i += 2;
                } else {
                    toks.push((Tok::Cmp(CmpOp::Lt), i));
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Cmp(CmpOp::Ge), i));
                    i += 2;
                } else {
                    toks.push((Tok::Cmp(CmpOp::Gt), i));
                    i += 1;
                }
            }
            '$' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] as char != '$' {
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(ParseError {
                        offset: start,
                        message: "unterminated placeholder".to_string(),
                    });
                }
                let name = text[start + 1..i].to_string();
                i += 1; // closing '$'
                toks.push((Tok::Placeholder(name), start));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_digit() || bytes[i] as char == '.')
                {
                    i += 1;
                }
                toks.push((Tok::Num(text[start..i].to_string()), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            other => {
                return Err(ParseError {
                    offset: i,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn err(&self, message: &str) -> ParseError {
        ParseError { offset: self.offset(), message: message.to_string() }
    }

    // implication is the loosest binder and associates to the left
    fn path_formula(&mut self) -> Result<PathFormula, ParseError> {
        let mut lhs = self.path_or()?;
        while self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.path_or()?;
            lhs = lhs.implies(rhs);
        }
        Ok(lhs)
    }

    fn path_or(&mut self) -> Result<PathFormula, ParseError> {
        let mut lhs = self.path_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.path_and()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn path_and(&mut self) -> Result<PathFormula, ParseError> {
        let mut lhs = self.path_until()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.path_until()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    // U and R bind tighter than the boolean connectives and associate right
    fn path_until(&mut self) -> Result<PathFormula, ParseError> {
        let lhs = self.path_unary()?;
        match self.peek() {
            Some(Tok::Ident(id)) if id == "U" => {
                self.pos += 1;
                let steps = self.opt_step_bound()?;
                let rhs = self.path_until()?;
                Ok(match steps {
                    Some(n) => PathFormula::BoundedUntil(Box::new(lhs), Box::new(rhs), n),
                    None => lhs.until(rhs),
                })
            }
            Some(Tok::Ident(id)) if id == "R" => {
                self.pos += 1;
                let rhs = self.path_until()?;
                Ok(lhs.release(rhs))
            }
            _ => Ok(lhs),
        }
    }

    /// Parses `<=n` or `[<=n]` after a temporal operator, if present.
    fn opt_step_bound(&mut self) -> Result<Option<Steps>, ParseError> {
        match self.peek() {
            Some(Tok::Cmp(CmpOp::Le)) => {
                self.pos += 1;
                Ok(Some(self.step_value()?))
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                self.expect(&Tok::Cmp(CmpOp::Le), "<= inside step bound")?;
                let n = self.step_value()?;
                self.expect(&Tok::RBracket, "] closing step bound")?;
                Ok(Some(n))
            }
            _ => Ok(None),
        }
    }

    fn step_value(&mut self) -> Result<Steps, ParseError> {
        match self.bump() {
            Some(Tok::Num(text)) => text
                .parse::<u64>()
                .map(Steps::Lit)
                .map_err(|_| self.err("step bound must be a non-negative integer")),
            Some(Tok::Placeholder(name)) => placeholder_steps(&name)
                .ok_or_else(|| self.err(&format!("unknown step placeholder ${name}$"))),
            _ => Err(self.err("expected step bound")),
        }
    }

    fn path_unary(&mut self) -> Result<PathFormula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(self.path_unary()?.not())
            }
            Some(Tok::Ident(id)) if id == "X" && self.starts_formula(1) => {
                self.pos += 1;
                Ok(self.path_unary()?.next())
            }
            Some(Tok::Ident(id))
                if (id == "F" || id == "G") && (self.starts_formula(1) || self.has_bound(1)) =>
            {
                let is_f = id == "F";
                self.pos += 1;
                let steps = self.opt_step_bound()?;
                let arg = self.path_unary()?;
                Ok(match (is_f, steps) {
                    (true, Some(n)) => PathFormula::BoundedFinally(Box::new(arg), n),
                    (true, None) => arg.finally(),
                    (false, Some(n)) => PathFormula::BoundedGlobally(Box::new(arg), n),
                    (false, None) => arg.globally(),
                })
            }
            _ => self.path_primary(),
        }
    }

    /// Does the token at `self.pos + ahead` start a formula?
    fn starts_formula(&self, ahead: usize) -> bool {
        matches!(
            self.toks.get(self.pos + ahead).map(|(t, _)| t),
            Some(Tok::Ident(_))
                | Some(Tok::Num(_))
                | Some(Tok::Placeholder(_))
                | Some(Tok::LParen)
                | Some(Tok::Bang)
        )
    }

    /// Does the token at `self.pos + ahead` start a `<=n` / `[<=n]` bound?
    fn has_bound(&self, ahead: usize) -> bool {
        matches!(
            self.toks.get(self.pos + ahead).map(|(t, _)| t),
            Some(Tok::Cmp(CmpOp::Le)) | Some(Tok::LBracket)
        )
    }

    fn path_primary(&mut self) -> Result<PathFormula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.path_formula()?;
                self.expect(&Tok::RParen, ") closing group")?;
                Ok(inner)
            }
            Some(Tok::Ident(id)) if id == "P" && matches!(self.peek2(), Some(Tok::Cmp(_)) | Some(Tok::Placeholder(_))) => {
                let prob = self.prob_node()?;
                Ok(PathFormula::State(prob))
            }
            Some(Tok::Ident(id)) if id == "true" => {
                self.pos += 1;
                Ok(PathFormula::State(StateFormula::True))
            }
            Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::Placeholder(_)) => {
                let atom = self.atom()?;
                Ok(PathFormula::State(StateFormula::Atom(atom)))
            }
            _ => Err(self.err("expected a formula")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Some(Tok::Ident(id)) => Ok(Term::Ident(id)),
            Some(Tok::Num(text)) => Ok(Term::Num(text)),
            Some(Tok::Placeholder(name)) => Ok(Term::Ident(format!("${name}$"))),
            _ => Err(self.err("expected identifier or number")),
        }
    }

    /// An atom: identifier, placeholder, or comparison. Called where a
    /// primary formula is expected, so a following comparison operator that
    /// is itself followed by a term extends the identifier into a comparison.
    fn atom(&mut self) -> Result<Atom, ParseError> {
        let lhs = self.term()?;
        let cmp_follows = matches!(self.peek(), Some(Tok::Cmp(_)))
            && matches!(
                self.peek2(),
                Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::Placeholder(_))
            );
        if cmp_follows {
            let op = match self.bump() {
                Some(Tok::Cmp(op)) => op,
                _ => unreachable!(),
            };
            let rhs = self.term()?;
            Ok(Atom::Cmp { lhs, op, rhs })
        } else {
            match lhs {
                Term::Ident(id) => Ok(Atom::Ident(id)),
                Term::Num(_) => Err(self.err("bare number is not an atom")),
            }
        }
    }

    fn prob_node(&mut self) -> Result<StateFormula, ParseError> {
        // caller verified: Ident("P") then comparison or placeholder
        self.pos += 1;
        let bound = match self.bump() {
            Some(Tok::Cmp(op)) => {
                let op = match op {
                    CmpOp::Lt => BoundOp::Lt,
                    CmpOp::Le => BoundOp::Le,
                    CmpOp::Gt => BoundOp::Gt,
                    CmpOp::Ge => BoundOp::Ge,
                    _ => return Err(self.err("probability bound needs <, <=, > or >=")),
                };
                let value = match self.bump() {
                    Some(Tok::Num(text)) => text
                        .parse::<f64>()
                        .map_err(|_| self.err("invalid probability bound"))?,
                    _ => return Err(self.err("expected probability bound value")),
                };
                ProbBound::Lit { op, value }
            }
            Some(Tok::Placeholder(name)) if name == "bound_op" => {
                match self.bump() {
                    Some(Tok::Placeholder(name)) if name == "bound_val" => {}
                    _ => return Err(self.err("expected $bound_val$ after $bound_op$")),
                }
                ProbBound::Placeholder
            }
            _ => return Err(self.err("expected probability bound")),
        };
        self.expect(&Tok::LBracket, "[ opening probability body")?;
        let body = self.path_formula()?;
        self.expect(&Tok::RBracket, "] closing probability body")?;
        Ok(StateFormula::Prob { bound, body: Box::new(body) })
    }

    /// State-level grammar: boolean structure over atoms, `true`, and
    /// probability operators. Temporal operators here are an error.
    fn state_formula(&mut self) -> Result<StateFormula, ParseError> {
        let mut lhs = self.state_or()?;
        while self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.state_or()?;
            lhs = StateFormula::Implies(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn state_or(&mut self) -> Result<StateFormula, ParseError> {
        let mut lhs = self.state_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.state_and()?;
            lhs = StateFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn state_and(&mut self) -> Result<StateFormula, ParseError> {
        let mut lhs = self.state_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.state_unary()?;
            lhs = StateFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn state_unary(&mut self) -> Result<StateFormula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(StateFormula::Not(Box::new(self.state_unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.state_formula()?;
                self.expect(&Tok::RParen, ") closing group")?;
                Ok(inner)
            }
            Some(Tok::Ident(id)) if id == "P" && matches!(self.peek2(), Some(Tok::Cmp(_)) | Some(Tok::Placeholder(_))) => {
                self.prob_node()
            }
            Some(Tok::Ident(id)) if id == "true" => {
                self.pos += 1;
                Ok(StateFormula::True)
            }
            Some(Tok::Ident(id)) if matches!(id.as_str(), "X" | "F" | "G") && self.starts_formula(1) => {
                Err(self.err("temporal operator outside a probability operator"))
            }
            Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::Placeholder(_)) => {
                Ok(StateFormula::Atom(self.atom()?))
            }
            _ => Err(self.err("expected a state formula")),
        }
    }
}

fn placeholder_steps(name: &str) -> Option<Steps> {
    if name == "n" {
        return Some(Steps::Placeholder { offset: 0 });
    }
    let rest = name.strip_prefix("n+")?;
    rest.parse::<u64>().ok().map(|offset| Steps::Placeholder { offset })
}

/// Parses a state formula from PRISM property syntax. Accepts the canonical
/// form emitted by [`print_prism`], plus extra whitespace, redundant
/// parentheses, bracketed step bounds (`G[<=10]`), and `$...$` placeholders.
pub fn parse_prism(text: &str) -> Result<StateFormula, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0, len: text.len() };
    let formula = parser.state_formula()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.err("unexpected trailing input"));
    }
    Ok(formula)
}

/// Parses a PRISM property file: one property per non-empty line, `//`
/// comments (whole-line or trailing) ignored.
pub fn parse_prism_file(text: &str) -> Result<Vec<StateFormula>, ParseError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = match line.find("//") {
            Some(idx) => &line[..idx],
            None => line,
        };
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_prism(line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(bound: ProbBound, body: PathFormula) -> StateFormula {
        StateFormula::prob(bound, body)
    }

    fn gt(value: f64) -> ProbBound {
        ProbBound::Lit { op: BoundOp::Gt, value }
    }

    fn cmp_atom(lhs: &str, op: CmpOp, rhs: &str) -> PathFormula {
        PathFormula::State(StateFormula::Atom(Atom::Cmp {
            lhs: Term::Ident(lhs.to_string()),
            op,
            rhs: Term::Ident(rhs.to_string()),
        }))
    }

    #[test]
    fn prints_always_implication_with_nested_probability() {
        // Built by hand to pin the exact canonical rendering.
        let inner = p(ProbBound::ge_one(), cmp_atom("q_hat", CmpOp::Eq, "q"));
        let body = PathFormula::atom("idealConditions")
            .implies(PathFormula::State(inner))
            .globally();
        let formula = p(ProbBound::ge_one(), body);
        assert_eq!(
            print_prism(&formula),
            "P>=1[(G (idealConditions => (P>=1[(q_hat = q)])))]"
        );
    }

    #[test]
    fn prints_bounded_finally_under_holding_condition() {
        let inner = p(gt(0.9999), PathFormula::BoundedFinally(
            Box::new(PathFormula::atom("incursionDetected")),
            Steps::Lit(10),
        ));
        let body = PathFormula::atom("q_k").implies(PathFormula::State(inner)).globally();
        let formula = p(ProbBound::ge_one(), body);
        assert_eq!(
            print_prism(&formula),
            "P>=1[(G (q_k => (P>0.9999[(F<=10 incursionDetected)])))]"
        );
    }

    #[test]
    fn nested_probability_body_prints_bare() {
        let inner = p(ProbBound::ge_one(), PathFormula::atom("r").finally());
        let formula = p(ProbBound::ge_one(), PathFormula::State(inner));
        assert_eq!(print_prism(&formula), "P>=1[P>=1[(F r)]]");
    }

    #[test]
    fn atom_body_is_parenthesized() {
        let formula = p(ProbBound::ge_one(), PathFormula::atom("r"));
        assert_eq!(print_prism(&formula), "P>=1[(r)]");
    }

    #[test]
    fn bound_values_print_shortest() {
        assert_eq!(fmt_bound_value(1.0), "1");
        assert_eq!(fmt_bound_value(0.99), "0.99");
        assert_eq!(fmt_bound_value(0.9999), "0.9999");
        assert_eq!(fmt_bound_value(0.5), "0.5");
    }

    #[test]
    fn parses_canonical_print_back_to_same_tree() {
        let inner = p(gt(0.99), PathFormula::atom("r").next().and(PathFormula::atom("m").not()));
        let formula = p(
            ProbBound::ge_one(),
            PathFormula::atom("a")
                .until(PathFormula::atom("b").release(PathFormula::State(inner)))
                .or(PathFormula::atom("c").globally()),
        );
        let text = print_prism(&formula);
        assert_eq!(parse_prism(&text).unwrap(), formula);
    }

    #[test]
    fn parses_bracketed_step_bound_style() {
        let a = parse_prism("P>=1[(G<=10 (q_hat = q))]").unwrap();
        let b = parse_prism("P>=1[(G[<=10] (q_hat = q))]").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tolerates_extra_whitespace_and_parentheses() {
        let a = parse_prism("P>=1[( incursionDetected R (! unsafe_sep_distance))]").unwrap();
        let b = parse_prism("P>=1[(incursionDetected R (! unsafe_sep_distance))]").unwrap();
        let c = parse_prism("P>=1[((incursionDetected) R (!(unsafe_sep_distance)))]").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn parses_placeholder_atoms_and_bounds() {
        let text = "P>=1[(G ($cond$ => (P$bound_op$$bound_val$[(F<=$n$ $res$)])))]";
        let formula = parse_prism(text).unwrap();
        assert_eq!(print_prism(&formula), text);
        let after = "P>=1[(F<=$n+1$ ($res$ | $mode$))]";
        let formula = parse_prism(after).unwrap();
        assert_eq!(print_prism(&formula), after);
    }

    #[test]
    fn instantiates_placeholders() {
        let template = parse_prism(
            "P>=1[(G ($cond$ => (P$bound_op$$bound_val$[(F<=$n$ $res$)])))]",
        )
        .unwrap();
        let mut map = BTreeMap::new();
        map.insert("$cond$".to_string(), PathFormula::atom("q_k"));
        map.insert("$res$".to_string(), PathFormula::atom("incursionDetected"));
        let evaluated = template
            .substitute_atoms(&map)
            .instantiate_bounds(Some((BoundOp::Gt, 0.9999)), Some(10));
        assert_eq!(
            print_prism(&evaluated),
            "P>=1[(G (q_k => (P>0.9999[(F<=10 incursionDetected)])))]"
        );
    }

    #[test]
    fn well_formed_accepts_restricted_shape() {
        let ok = parse_prism("P>=1[(G (q_k => (P>0.99[(F<=10 r)])))]").unwrap();
        assert!(well_formed(&ok));
        let nested_bare = parse_prism("P>=1[P>0.99[(F<=10 r)]]").unwrap();
        assert!(well_formed(&nested_bare));
    }

    #[test]
    fn well_formed_rejects_wrong_outer_bound() {
        let f = parse_prism("P>0.99[(F r)]").unwrap();
        assert!(!well_formed(&f));
        let msg = well_formed_explain(&f).unwrap_err();
        assert!(msg.contains("P>=1"), "{msg}");
    }

    #[test]
    fn well_formed_rejects_probability_inside_probability() {
        let f = parse_prism("P>=1[(G (P>0.5[(F (P>0.5[(r)]))]))]").unwrap();
        assert!(!well_formed(&f));
        let msg = well_formed_explain(&f).unwrap_err();
        assert!(msg.contains("inside a probability operator"), "{msg}");
    }

    #[test]
    fn well_formed_rejects_out_of_range_bound() {
        let f = StateFormula::prob(
            ProbBound::ge_one(),
            PathFormula::State(StateFormula::prob(
                ProbBound::Lit { op: BoundOp::Gt, value: 1.5 },
                PathFormula::atom("r").finally(),
            )),
        );
        assert!(!well_formed(&f));
    }

    #[test]
    fn bare_temporal_formula_is_rejected_at_parse_time() {
        assert!(parse_prism("F r").is_err());
    }

    #[test]
    fn property_file_skips_comments_and_blanks() {
        let text = "// header\nP>=1[(r)]\n\nP>=1[(F r)] // trailing\n";
        let props = parse_prism_file(text).unwrap();
        assert_eq!(props.len(), 2);
    }
}
