//! The structured natural-language requirement grammar.
//!
//! A requirement has up to six fields, in a fixed order:
//!
//! ```text
//! [scope] [condition] <component> shall [probability] [timing] satisfy <response>
//! ```
//!
//! * **scope** — mode intervals the requirement is tied to: `in M`,
//!   `except in M`, `only in M`, `before M`, `after M`, `only before M`,
//!   `only after M`, plus synonyms (`during`, `when/if [not] in`, `unless in`,
//!   `while <expr>`, `only while <expr>`, `except while <expr>`).
//! * **condition** — a triggering condition, introduced by a qualifier word.
//!   `whenever` asks for the response while the condition holds; `upon`,
//!   `when`, `where`, and `if` trigger on the condition becoming true;
//!   `unless` triggers on its negation. Several qualified conditions may be
//!   joined with `and` / `or` (an omitted connective joins with `and`);
//!   mixing `whenever` with the edge-triggered qualifiers is rejected.
//! * **component** — the subject, optionally preceded by `the`; the grammar
//!   also accepts the order `shall <component>`.
//! * **probability** — `with probability <op> <bound>` where `<op>` is one of
//!   `<`, `<=`, `>`, `>=` and the bound lies in `[0, 1]`.
//! * **timing** — `immediately`, `initially`, `at the first/same/next
//!   timepoint`, `always`, `never`, `eventually`, `until <expr>`,
//!   `before <expr>`, or a duration form (`within/for/after <n> <unit>`).
//!   An omitted timing means `eventually`.
//! * **response** — `satisfy <boolean expression>`.
//!
//! Keywords are case-insensitive; identifiers are case-sensitive. Boolean
//! expressions use `!`, `&`, `|`, `=>` (precedence in that order, binary
//! operators left-associative) over identifiers and comparisons
//! (`= != < <= > >=`) of identifiers and decimal literals.

use std::fmt;

use serde::Serialize;

pub use crate::pctl::{BoundOp, CmpOp, Term};

// ---------------------------------------------------------------------------
// Boolean expressions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Ident(String),
    Cmp { lhs: Term, op: CmpOp, rhs: Term },
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn ident(name: &str) -> Self {
        BoolExpr::Ident(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        BoolExpr::Not(Box::new(self))
    }

    pub fn and(self, rhs: Self) -> Self {
        BoolExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Self) -> Self {
        BoolExpr::Or(Box::new(self), Box::new(rhs))
    }

    fn precedence(&self) -> u8 {
        match self {
            BoolExpr::Implies(..) => 0,
            BoolExpr::Or(..) => 1,
            BoolExpr::And(..) => 2,
            BoolExpr::Not(..) => 3,
            BoolExpr::Ident(_) | BoolExpr::Cmp { .. } => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            BoolExpr::Ident(name) => write!(f, "{name}")?,
            BoolExpr::Cmp { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.as_str())?,
            BoolExpr::Not(inner) => {
                write!(f, "! ")?;
                inner.fmt_prec(f, 4)?;
            }
            BoolExpr::And(lhs, rhs) => {
                lhs.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                rhs.fmt_prec(f, 3)?;
            }
            BoolExpr::Or(lhs, rhs) => {
                lhs.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                rhs.fmt_prec(f, 2)?;
            }
            BoolExpr::Implies(lhs, rhs) => {
                lhs.fmt_prec(f, 0)?;
                write!(f, " => ")?;
                rhs.fmt_prec(f, 1)?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// ---------------------------------------------------------------------------
// Template keys
// ---------------------------------------------------------------------------

/// Scope component of a template key (and the kind of a parsed scope).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScopeKey {
    Null,
    In,
    NotIn,
    OnlyIn,
    Before,
    After,
    OnlyBefore,
    OnlyAfter,
}

impl ScopeKey {
    pub const ALL: [ScopeKey; 8] = [
        ScopeKey::Null,
        ScopeKey::In,
        ScopeKey::NotIn,
        ScopeKey::OnlyIn,
        ScopeKey::Before,
        ScopeKey::After,
        ScopeKey::OnlyBefore,
        ScopeKey::OnlyAfter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScopeKey::Null => "null",
            ScopeKey::In => "in",
            ScopeKey::NotIn => "notIn",
            ScopeKey::OnlyIn => "onlyIn",
            ScopeKey::Before => "before",
            ScopeKey::After => "after",
            ScopeKey::OnlyBefore => "onlyBefore",
            ScopeKey::OnlyAfter => "onlyAfter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionKey {
    Null,
    Regular,
    Holding,
}

impl ConditionKey {
    pub const ALL: [ConditionKey; 3] =
        [ConditionKey::Null, ConditionKey::Regular, ConditionKey::Holding];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKey::Null => "null",
            ConditionKey::Regular => "regular",
            ConditionKey::Holding => "holding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProbabilityKey {
    Null,
    Bound,
}

impl ProbabilityKey {
    pub const ALL: [ProbabilityKey; 2] = [ProbabilityKey::Null, ProbabilityKey::Bound];

    pub fn as_str(self) -> &'static str {
        match self {
            ProbabilityKey::Null => "null",
            ProbabilityKey::Bound => "bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimingKey {
    Immediately,
    Next,
    Always,
    Eventually,
    Never,
    Until,
    Before,
    For,
    Within,
    After,
}

impl TimingKey {
    pub const ALL: [TimingKey; 10] = [
        TimingKey::Immediately,
        TimingKey::Next,
        TimingKey::Always,
        TimingKey::Eventually,
        TimingKey::Never,
        TimingKey::Until,
        TimingKey::Before,
        TimingKey::For,
        TimingKey::Within,
        TimingKey::After,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TimingKey::Immediately => "immediately",
            TimingKey::Next => "next",
            TimingKey::Always => "always",
            TimingKey::Eventually => "eventually",
            TimingKey::Never => "never",
            TimingKey::Until => "until",
            TimingKey::Before => "before",
            TimingKey::For => "for",
            TimingKey::Within => "within",
            TimingKey::After => "after",
        }
    }

    /// Does this timing carry a stop-condition expression?
    pub fn has_stop(self) -> bool {
        matches!(self, TimingKey::Until | TimingKey::Before)
    }

    /// Does this timing carry a step-count bound?
    pub fn has_steps(self) -> bool {
        matches!(self, TimingKey::For | TimingKey::Within | TimingKey::After)
    }
}

/// Identifies one of the 480 template slots: which scope, condition,
/// probability, and timing field combination a requirement uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemplateKey {
    pub scope: ScopeKey,
    pub condition: ConditionKey,
    pub probability: ProbabilityKey,
    pub timing: TimingKey,
}

impl TemplateKey {
    pub fn new(
        scope: ScopeKey,
        condition: ConditionKey,
        probability: ProbabilityKey,
        timing: TimingKey,
    ) -> Self {
        TemplateKey { scope, condition, probability, timing }
    }

    /// All 480 keys in their canonical (lexicographic by field) order.
    pub fn enumerate_all() -> Vec<TemplateKey> {
        let mut keys = Vec::with_capacity(480);
        for scope in ScopeKey::ALL {
            for condition in ConditionKey::ALL {
                for probability in ProbabilityKey::ALL {
                    for timing in TimingKey::ALL {
                        keys.push(TemplateKey::new(scope, condition, probability, timing));
                    }
                }
            }
        }
        keys
    }
}

impl fmt::Display for TemplateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.scope.as_str(),
            self.condition.as_str(),
            self.probability.as_str(),
            self.timing.as_str()
        )
    }
}

impl std::str::FromStr for TemplateKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(format!("template key needs 4 comma-separated fields, got {s:?}"));
        }
        let scope = ScopeKey::ALL
            .into_iter()
            .find(|k| k.as_str() == parts[0])
            .ok_or_else(|| format!("unknown scope field {:?}", parts[0]))?;
        let condition = ConditionKey::ALL
            .into_iter()
            .find(|k| k.as_str() == parts[1])
            .ok_or_else(|| format!("unknown condition field {:?}", parts[1]))?;
        let probability = ProbabilityKey::ALL
            .into_iter()
            .find(|k| k.as_str() == parts[2])
            .ok_or_else(|| format!("unknown probability field {:?}", parts[2]))?;
        let timing = TimingKey::ALL
            .into_iter()
            .find(|k| k.as_str() == parts[3])
            .ok_or_else(|| format!("unknown timing field {:?}", parts[3]))?;
        Ok(TemplateKey::new(scope, condition, probability, timing))
    }
}

// ---------------------------------------------------------------------------
// Requirement AST
// ---------------------------------------------------------------------------

/// Scope subject: a mode name, or (for the `while` forms) a condition
/// expression standing in for one.
#[derive(Debug, Clone, PartialEq)]
pub enum ScopeSubject {
    Mode(String),
    Expr(BoolExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopeSpec {
    /// Never `ScopeKey::Null` on a parsed scope.
    pub kind: ScopeKey,
    pub subject: ScopeSubject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    /// Edge-triggered: obligations attach where the condition becomes true.
    Regular,
    /// Level-triggered: obligations attach wherever the condition holds.
    Holding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSpec {
    pub kind: ConditionKind,
    pub expr: BoolExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySpec {
    pub op: BoundOp,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeUnit {
    Ticks,
    Microseconds,
    Milliseconds,
    Seconds,
    Minutes,
    Hours,
}

impl TimeUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Ticks => "ticks",
            TimeUnit::Microseconds => "microseconds",
            TimeUnit::Milliseconds => "milliseconds",
            TimeUnit::Seconds => "seconds",
            TimeUnit::Minutes => "minutes",
            TimeUnit::Hours => "hours",
        }
    }

    /// Duration of one unit in microseconds; `None` for ticks, which have no
    /// wall-clock meaning of their own.
    pub fn micros(self) -> Option<f64> {
        match self {
            TimeUnit::Ticks => None,
            TimeUnit::Microseconds => Some(1.0),
            TimeUnit::Milliseconds => Some(1e3),
            TimeUnit::Seconds => Some(1e6),
            TimeUnit::Minutes => Some(60e6),
            TimeUnit::Hours => Some(3600e6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Duration {
    pub value: f64,
    pub unit: TimeUnit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimingSpec {
    Immediately,
    Next,
    Always,
    Eventually,
    Never,
    Until(BoolExpr),
    Before(BoolExpr),
    For(Duration),
    Within(Duration),
    After(Duration),
}

impl TimingSpec {
    pub fn key(&self) -> TimingKey {
        match self {
            TimingSpec::Immediately => TimingKey::Immediately,
            TimingSpec::Next => TimingKey::Next,
            TimingSpec::Always => TimingKey::Always,
            TimingSpec::Eventually => TimingKey::Eventually,
            TimingSpec::Never => TimingKey::Never,
            TimingSpec::Until(_) => TimingKey::Until,
            TimingSpec::Before(_) => TimingKey::Before,
            TimingSpec::For(_) => TimingKey::For,
            TimingSpec::Within(_) => TimingKey::Within,
            TimingSpec::After(_) => TimingKey::After,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Scope,
    Condition,
    Component,
    Probability,
    Timing,
    Response,
}

/// Byte range of one requirement field in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FieldSpan {
    pub field: Field,
    pub offset: usize,
    pub length: usize,
}

#[derive(Debug, Clone)]
pub struct Requirement {
    pub scope: Option<ScopeSpec>,
    pub condition: Option<ConditionSpec>,
    pub component: String,
    pub probability: Option<ProbabilitySpec>,
    /// Defaults to `Eventually` when the source omits the timing field.
    pub timing: TimingSpec,
    pub response: BoolExpr,
    /// Source locations of the fields present in the input, disjoint and in
    /// field order. Empty on requirements constructed programmatically.
    pub spans: Vec<FieldSpan>,
}

// Spans are source metadata; two requirements are the same requirement if
// their fields agree.
impl PartialEq for Requirement {
    fn eq(&self, other: &Self) -> bool {
        self.scope == other.scope
            && self.condition == other.condition
            && self.component == other.component
            && self.probability == other.probability
            && self.timing == other.timing
            && self.response == other.response
    }
}

impl Requirement {
    pub fn span(&self, field: Field) -> Option<FieldSpan> {
        self.spans.iter().copied().find(|s| s.field == field)
    }
}

/// Extracts the template slot a requirement instantiates.
pub fn template_key(req: &Requirement) -> TemplateKey {
    TemplateKey {
        scope: req.scope.as_ref().map_or(ScopeKey::Null, |s| s.kind),
        condition: match &req.condition {
            None => ConditionKey::Null,
            Some(c) => match c.kind {
                ConditionKind::Regular => ConditionKey::Regular,
                ConditionKind::Holding => ConditionKey::Holding,
            },
        },
        probability: match req.probability {
            None => ProbabilityKey::Null,
            Some(_) => ProbabilityKey::Bound,
        },
        timing: req.timing.key(),
    }
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    /// A duration given as an interval (`within 0.5 to 2 seconds`): the target
    /// logic only supports `[0, n]` step windows.
    BoundedInterval,
    /// A second probability phrase nesting one probabilistic obligation
    /// inside another.
    NestedProbability,
    /// A second probability phrase demanding certainty (`>= 1`) inside an
    /// outer probabilistic bound: the supported form is the outer operator
    /// being the certain one.
    InvertedProbability,
    /// `whenever` mixed with edge-triggered qualifiers in one condition.
    MixedConditionKinds,
    /// Probability bound outside `[0, 1]`.
    ProbabilityBoundRange,
    /// Expression subjects are only supported in `while` scope forms.
    ScopeExpressionUnsupported,
    /// A wall-clock duration that does not convert to a whole, positive
    /// number of ticks.
    TickConversion,
    /// Any other syntax error.
    Parse,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::BoundedInterval => "bounded-interval",
            DiagnosticCode::NestedProbability => "nested-probability",
            DiagnosticCode::InvertedProbability => "inverted-probability",
            DiagnosticCode::MixedConditionKinds => "mixed-condition-kinds",
            DiagnosticCode::ProbabilityBoundRange => "probability-bound-range",
            DiagnosticCode::ScopeExpressionUnsupported => "scope-expression-unsupported",
            DiagnosticCode::TickConversion => "tick-conversion",
            DiagnosticCode::Parse => "parse-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub offset: usize,
    pub length: usize,
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}..{}: {}", self.code.as_str(), self.offset, self.offset + self.length, self.message)
    }
}

impl std::error::Error for Diagnostic {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Word(String),
    Num(String),
    LParen,
    RParen,
    Amp,
    Pipe,
    Bang,
    Arrow,
    Cmp(CmpOp),
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokKind,
    start: usize,
    len: usize,
}

impl Token {
    fn end(&self) -> usize {
        self.start + self.len
    }
}

fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let push = |toks: &mut Vec<Token>, kind: TokKind, start: usize, len: usize| {
        toks.push(Token { kind, start, len });
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '(' => {
                push(&mut toks, TokKind::LParen, i, 1);
                i += 1;
            }
            ')' => {
                push(&mut toks, TokKind::RParen, i, 1);
                i += 1;
            }
            '&' => {
                push(&mut toks, TokKind::Amp, i, 1);
                i += 1;
            }
            '|' => {
                push(&mut toks, TokKind::Pipe, i, 1);
                i += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(&mut toks, TokKind::Cmp(CmpOp::Neq), i, 2);
                    i += 2;
                } else {
                    push(&mut toks, TokKind::Bang, i, 1);
                    i += 1;
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    push(&mut toks, TokKind::Arrow, i, 2);
                    i += 2;
                } else {
                    push(&mut toks, TokKind::Cmp(CmpOp::Eq), i, 1);
                    i += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(&mut toks, TokKind::Cmp(CmpOp::Le), i, 2);
                    i += 2;
                } else {
                    push(&mut toks, TokKind::Cmp(CmpOp::Lt), i, 1);
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(&mut toks, TokKind::Cmp(CmpOp::Ge), i, 2);
                    i += 2;
                } else {
                    push(&mut toks, TokKind::Cmp(CmpOp::Gt), i, 1);
                    i += 1;
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_digit() || bytes[i] as char == '.')
                {
                    i += 1;
                }
                push(&mut toks, TokKind::Num(text[start..i].to_string()), start, i - start);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                {
                    i += 1;
                }
                push(&mut toks, TokKind::Word(text[start..i].to_string()), start, i - start);
            }
            other => {
                return Err(Diagnostic {
                    offset: i,
                    length: 1,
                    code: DiagnosticCode::Parse,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(toks)
}

/// Words with grammatical meaning; they cannot be used as identifiers.
const RESERVED: &[&str] = &[
    "only", "except", "in", "during", "while", "unless", "when", "if", "not", "mode", "upon",
    "whenever", "where", "and", "or", "is", "true", "false", "the", "shall", "with",
    "probability", "within", "for", "after", "before", "until", "at", "next", "same", "first",
    "timepoint", "immediately", "initially", "eventually", "always", "never", "satisfy", "to",
    "tick", "ticks", "microsecond", "microseconds", "millisecond", "milliseconds", "second",
    "seconds", "minute", "minutes", "hour", "hours",
];

fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|kw| word.eq_ignore_ascii_case(kw))
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    text_len: usize,
    spans: Vec<FieldSpan>,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn tok(&self, offset: usize) -> Option<&Token> {
        self.toks.get(self.pos + offset)
    }

    /// Is the token at lookahead `offset` the (case-insensitive) keyword?
    fn kw_at(&self, offset: usize, word: &str) -> bool {
        matches!(self.tok(offset).map(|t| &t.kind), Some(TokKind::Word(w)) if w.eq_ignore_ascii_case(word))
    }

    fn kw(&self, word: &str) -> bool {
        self.kw_at(0, word)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_kw(&mut self, word: &str) -> bool {
        if self.kw(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, word: &str) -> Result<Token, Diagnostic> {
        if self.kw(word) {
            Ok(self.bump().unwrap())
        } else {
            Err(self.error_here(&format!("expected {word:?}")))
        }
    }

    fn cur_offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.start).unwrap_or(self.text_len)
    }

    fn last_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end()
        }
    }

    fn error_here(&self, message: &str) -> Diagnostic {
        let (offset, length) = match self.toks.get(self.pos) {
            Some(t) => (t.start, t.len),
            None => (self.text_len, 0),
        };
        Diagnostic { offset, length, code: DiagnosticCode::Parse, message: message.to_string() }
    }

    fn record_span(&mut self, field: Field, start: usize) {
        let end = self.last_end();
        if end > start {
            self.spans.push(FieldSpan { field, offset: start, length: end - start });
        }
    }

    // -- boolean expressions ------------------------------------------------

    fn expr(&mut self) -> Result<BoolExpr, Diagnostic> {
        let mut lhs = self.expr_or()?;
        while self.peek() == Some(&TokKind::Arrow) {
            self.pos += 1;
            let rhs = self.expr_or()?;
            lhs = BoolExpr::Implies(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr_or(&mut self) -> Result<BoolExpr, Diagnostic> {
        let mut lhs = self.expr_and()?;
        while self.peek() == Some(&TokKind::Pipe) {
            self.pos += 1;
            let rhs = self.expr_and()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn expr_and(&mut self) -> Result<BoolExpr, Diagnostic> {
        let mut lhs = self.expr_unary()?;
        while self.peek() == Some(&TokKind::Amp) {
            self.pos += 1;
            let rhs = self.expr_unary()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn expr_unary(&mut self) -> Result<BoolExpr, Diagnostic> {
        if self.peek() == Some(&TokKind::Bang) {
            self.pos += 1;
            return Ok(self.expr_unary()?.not());
        }
        self.expr_primary()
    }

    fn expr_primary(&mut self) -> Result<BoolExpr, Diagnostic> {
        match self.peek().cloned() {
            Some(TokKind::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&TokKind::RParen) {
                    return Err(self.error_here("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(TokKind::Word(_)) | Some(TokKind::Num(_)) => {
                let lhs = self.term()?;
                let cmp_next = matches!(self.peek(), Some(TokKind::Cmp(_)))
                    && matches!(
                        self.tok(1).map(|t| &t.kind),
                        Some(TokKind::Word(_)) | Some(TokKind::Num(_))
                    );
                if cmp_next {
                    let op = match self.bump().map(|t| t.kind) {
                        Some(TokKind::Cmp(op)) => op,
                        _ => unreachable!(),
                    };
                    let rhs = self.term()?;
                    Ok(BoolExpr::Cmp { lhs, op, rhs })
                } else {
                    match lhs {
                        Term::Ident(name) => Ok(BoolExpr::Ident(name)),
                        Term::Num(_) => Err(self.error_here("a number is not a condition")),
                    }
                }
            }
            _ => Err(self.error_here("expected an expression")),
        }
    }

    fn term(&mut self) -> Result<Term, Diagnostic> {
        match self.peek().cloned() {
            Some(TokKind::Word(w)) if !is_reserved(&w) => {
                self.pos += 1;
                Ok(Term::Ident(w))
            }
            Some(TokKind::Num(text)) => {
                self.pos += 1;
                Ok(Term::Num(text))
            }
            Some(TokKind::Word(w)) => {
                Err(self.error_here(&format!("keyword {w:?} cannot be used as an identifier")))
            }
            _ => Err(self.error_here("expected identifier or number")),
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, Diagnostic> {
        match self.peek().cloned() {
            Some(TokKind::Word(w)) if !is_reserved(&w) => {
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error_here(&format!("expected {what}"))),
        }
    }

    // -- scope ----------------------------------------------------------------

    /// Parses the optional scope field. Returns `None` (without consuming
    /// anything) when the requirement has no scope.
    fn scope(&mut self) -> Result<Option<ScopeSpec>, Diagnostic> {
        let start = self.cur_offset();
        let parsed = self.scope_inner()?;
        if parsed.is_some() {
            self.record_span(Field::Scope, start);
        }
        Ok(parsed)
    }

    fn scope_inner(&mut self) -> Result<Option<ScopeSpec>, Diagnostic> {
        if self.eat_kw("only") {
            if self.eat_kw("while") {
                let expr = self.expr()?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::OnlyIn, subject: ScopeSubject::Expr(expr) }));
            }
            if self.eat_kw("after") {
                let subject = self.mode_subject("after")?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::OnlyAfter, subject }));
            }
            if self.eat_kw("before") {
                let subject = self.mode_subject("before")?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::OnlyBefore, subject }));
            }
            // only during M | only [when|if] in M | only in M
            if !self.eat_kw("during") {
                let _ = self.eat_kw("when") || self.eat_kw("if");
                self.expect_kw("in")?;
            }
            let subject = self.mode_subject("only in")?;
            return Ok(Some(ScopeSpec { kind: ScopeKey::OnlyIn, subject }));
        }
        if self.eat_kw("except") {
            if self.eat_kw("while") {
                let expr = self.expr()?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::NotIn, subject: ScopeSubject::Expr(expr) }));
            }
            if !self.eat_kw("during") {
                let _ = self.eat_kw("when") || self.eat_kw("if");
                self.expect_kw("in")?;
            }
            let subject = self.mode_subject("except in")?;
            return Ok(Some(ScopeSpec { kind: ScopeKey::NotIn, subject }));
        }
        // `when`/`if` open a scope only when followed by `[not] in`; otherwise
        // they introduce a condition and are left for the condition parser.
        if self.kw("when") || self.kw("if") {
            if self.kw_at(1, "in") {
                self.pos += 2;
                let subject = self.mode_subject("in")?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::In, subject }));
            }
            if self.kw_at(1, "not") && self.kw_at(2, "in") {
                self.pos += 3;
                let subject = self.mode_subject("not in")?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::NotIn, subject }));
            }
            return Ok(None);
        }
        // `unless` opens a scope only as `unless in`; bare `unless` is a
        // condition qualifier.
        if self.kw("unless") {
            if self.kw_at(1, "in") {
                self.pos += 2;
                let subject = self.mode_subject("unless in")?;
                return Ok(Some(ScopeSpec { kind: ScopeKey::NotIn, subject }));
            }
            return Ok(None);
        }
        if self.eat_kw("in") || self.eat_kw("during") {
            let subject = self.mode_subject("in")?;
            return Ok(Some(ScopeSpec { kind: ScopeKey::In, subject }));
        }
        if self.eat_kw("while") {
            let expr = self.expr()?;
            return Ok(Some(ScopeSpec { kind: ScopeKey::In, subject: ScopeSubject::Expr(expr) }));
        }
        if self.eat_kw("after") {
            let subject = self.mode_subject("after")?;
            return Ok(Some(ScopeSpec { kind: ScopeKey::After, subject }));
        }
        if self.eat_kw("before") {
            let subject = self.mode_subject("before")?;
            return Ok(Some(ScopeSpec { kind: ScopeKey::Before, subject }));
        }
        Ok(None)
    }

    /// A mode reference: `mode M`, `M mode`, or bare `M`. Expression subjects
    /// are reserved for the `while` forms.
    fn mode_subject(&mut self, context: &str) -> Result<ScopeSubject, Diagnostic> {
        if self.eat_kw("mode") {
            let name = self.identifier("mode name")?;
            return Ok(ScopeSubject::Mode(name));
        }
        // A parenthesis or negation here would start an expression subject.
        if matches!(self.peek(), Some(TokKind::LParen) | Some(TokKind::Bang)) {
            let tok = self.toks[self.pos].clone();
            return Err(Diagnostic {
                offset: tok.start,
                length: tok.len,
                code: DiagnosticCode::ScopeExpressionUnsupported,
                message: format!(
                    "expression subjects are not supported after {context:?}; use a `while` scope"
                ),
            });
        }
        let name = self.identifier("mode name")?;
        // `M mode` order, and `M cmp term` would be an expression subject.
        if matches!(self.peek(), Some(TokKind::Cmp(_)))
            && matches!(self.tok(1).map(|t| &t.kind), Some(TokKind::Word(_)) | Some(TokKind::Num(_)))
        {
            let tok = self.toks[self.pos].clone();
            return Err(Diagnostic {
                offset: tok.start,
                length: tok.len,
                code: DiagnosticCode::ScopeExpressionUnsupported,
                message: format!(
                    "expression subjects are not supported after {context:?}; use a `while` scope"
                ),
            });
        }
        let _ = self.eat_kw("mode");
        Ok(ScopeSubject::Mode(name))
    }

    // -- condition --------------------------------------------------------

    fn qualifier_kind(word: &str) -> Option<(ConditionKind, bool)> {
        // (kind, negate expression)
        if word.eq_ignore_ascii_case("whenever") {
            Some((ConditionKind::Holding, false))
        } else if word.eq_ignore_ascii_case("unless") {
            Some((ConditionKind::Regular, true))
        } else if ["upon", "when", "where", "if"].iter().any(|k| word.eq_ignore_ascii_case(k)) {
            Some((ConditionKind::Regular, false))
        } else {
            None
        }
    }

    fn peek_qualifier(&self, offset: usize) -> Option<(ConditionKind, bool)> {
        match self.tok(offset).map(|t| &t.kind) {
            Some(TokKind::Word(w)) => Self::qualifier_kind(w),
            _ => None,
        }
    }

    fn condition(&mut self) -> Result<Option<ConditionSpec>, Diagnostic> {
        let start = self.cur_offset();
        // A leading connective is allowed before the first qualified condition.
        let leading_and = (self.kw("and") || self.kw("or")) && self.peek_qualifier(1).is_some();
        if leading_and {
            self.pos += 1;
        }
        let Some((kind, negate)) = self.peek_qualifier(0) else {
            if leading_and {
                self.pos -= 1;
            }
            return Ok(None);
        };
        self.pos += 1;
        let mut expr = self.qualified_condition(negate)?;
        // Further qualified conditions, optionally preceded by and/or.
        loop {
            let (connective_or, skip) = if self.kw("and") && self.peek_qualifier(1).is_some() {
                (false, 1)
            } else if self.kw("or") && self.peek_qualifier(1).is_some() {
                (true, 1)
            } else if self.peek_qualifier(0).is_some() {
                (false, 0)
            } else {
                break;
            };
            let qual_tok = self.toks[self.pos + skip].clone();
            let (next_kind, negate) = self.peek_qualifier(skip).unwrap();
            if next_kind != kind {
                return Err(Diagnostic {
                    offset: qual_tok.start,
                    length: qual_tok.len,
                    code: DiagnosticCode::MixedConditionKinds,
                    message: "cannot mix `whenever` with edge-triggered condition qualifiers"
                        .to_string(),
                });
            }
            self.pos += skip + 1;
            let rhs = self.qualified_condition(negate)?;
            expr = if connective_or { expr.or(rhs) } else { expr.and(rhs) };
        }
        self.record_span(Field::Condition, start);
        Ok(Some(ConditionSpec { kind, expr }))
    }

    fn qualified_condition(&mut self, negate: bool) -> Result<BoolExpr, Diagnostic> {
        let mut expr = self.expr()?;
        // Optional `is true` / `is false` suffix.
        if self.kw("is") {
            if self.kw_at(1, "true") {
                self.pos += 2;
            } else if self.kw_at(1, "false") {
                self.pos += 2;
                expr = expr.not();
            } else {
                return Err(self.error_here("expected `true` or `false` after `is`"));
            }
        }
        Ok(if negate { expr.not() } else { expr })
    }

    // -- component ----------------------------------------------------------

    fn component(&mut self) -> Result<String, Diagnostic> {
        let start = self.cur_offset();
        let name = if self.eat_kw("shall") {
            let _ = self.eat_kw("the");
            self.identifier("component name")?
        } else {
            let _ = self.eat_kw("the");
            let name = self.identifier("component name")?;
            self.expect_kw("shall")?;
            name
        };
        self.record_span(Field::Component, start);
        Ok(name)
    }

    // -- probability ---------------------------------------------------------

    /// Parses `with probability <op> <bound>` if present at the cursor.
    fn probability_phrase(&mut self) -> Result<Option<(ProbabilitySpec, usize, usize)>, Diagnostic> {
        if !(self.kw("with") && self.kw_at(1, "probability")) {
            return Ok(None);
        }
        let start = self.toks[self.pos].start;
        self.pos += 2;
        let op = match self.peek() {
            Some(TokKind::Cmp(CmpOp::Lt)) => BoundOp::Lt,
            Some(TokKind::Cmp(CmpOp::Le)) => BoundOp::Le,
            Some(TokKind::Cmp(CmpOp::Gt)) => BoundOp::Gt,
            Some(TokKind::Cmp(CmpOp::Ge)) => BoundOp::Ge,
            _ => return Err(self.error_here("expected <, <=, > or >= after `with probability`")),
        };
        self.pos += 1;
        let bound_tok = match self.bump() {
            Some(t @ Token { kind: TokKind::Num(_), .. }) => t,
            _ => return Err(self.error_here("expected a probability bound")),
        };
        let text = match &bound_tok.kind {
            TokKind::Num(text) => text.clone(),
            _ => unreachable!(),
        };
        let bound: f64 = text.parse().map_err(|_| Diagnostic {
            offset: bound_tok.start,
            length: bound_tok.len,
            code: DiagnosticCode::Parse,
            message: format!("invalid probability bound {text:?}"),
        })?;
        if !(0.0..=1.0).contains(&bound) {
            return Err(Diagnostic {
                offset: bound_tok.start,
                length: bound_tok.len,
                code: DiagnosticCode::ProbabilityBoundRange,
                message: format!("probability bound {bound} is outside [0, 1]"),
            });
        }
        Ok(Some((ProbabilitySpec { op, bound }, start, bound_tok.end())))
    }

    fn probability(&mut self) -> Result<Option<ProbabilitySpec>, Diagnostic> {
        match self.probability_phrase()? {
            Some((spec, start, end)) => {
                self.spans.push(FieldSpan {
                    field: Field::Probability,
                    offset: start,
                    length: end - start,
                });
                Ok(Some(spec))
            }
            None => Ok(None),
        }
    }

    /// After the first probability field has been parsed, any further
    /// probability phrase is an unsupported nesting.
    fn reject_second_probability(&mut self, outer: Option<&ProbabilitySpec>) -> Result<(), Diagnostic> {
        if let Some((spec, start, end)) = self.probability_phrase()? {
            let certain = spec.op == BoundOp::Ge && spec.bound == 1.0;
            let (code, message) = if certain && outer.is_some() {
                (
                    DiagnosticCode::InvertedProbability,
                    "a certainty requirement inside a probabilistic bound is not supported; \
                     the certain operator must be outermost",
                )
            } else {
                (
                    DiagnosticCode::NestedProbability,
                    "only one probability field is supported per requirement",
                )
            };
            return Err(Diagnostic {
                offset: start,
                length: end - start,
                code,
                message: message.to_string(),
            });
        }
        Ok(())
    }

    // -- timing ---------------------------------------------------------------

    fn duration(&mut self, keyword_start: usize) -> Result<Duration, Diagnostic> {
        let value_tok = match self.bump() {
            Some(t @ Token { kind: TokKind::Num(_), .. }) => t,
            _ => return Err(self.error_here("expected a duration value")),
        };
        let text = match &value_tok.kind {
            TokKind::Num(text) => text.clone(),
            _ => unreachable!(),
        };
        let value: f64 = text.parse().map_err(|_| Diagnostic {
            offset: value_tok.start,
            length: value_tok.len,
            code: DiagnosticCode::Parse,
            message: format!("invalid duration {text:?}"),
        })?;
        // `within 0.5 to 2 seconds`: an interval, not a duration.
        if self.kw("to") {
            self.pos += 1;
            let _ = matches!(self.peek(), Some(TokKind::Num(_))).then(|| self.bump());
            let _ = self.time_unit();
            let end = self.last_end();
            return Err(Diagnostic {
                offset: keyword_start,
                length: end - keyword_start,
                code: DiagnosticCode::BoundedInterval,
                message: "interval time bounds are not supported; only windows measured from \
                          the trigger (`within n <unit>`) are"
                    .to_string(),
            });
        }
        let unit = self
            .time_unit()
            .ok_or_else(|| self.error_here("expected a time unit (e.g. ticks, seconds)"))?;
        Ok(Duration { value, unit })
    }

    fn time_unit(&mut self) -> Option<TimeUnit> {
        let unit = match self.peek() {
            Some(TokKind::Word(w)) => {
                let w = w.to_ascii_lowercase();
                match w.as_str() {
                    "tick" | "ticks" => Some(TimeUnit::Ticks),
                    "microsecond" | "microseconds" => Some(TimeUnit::Microseconds),
                    "millisecond" | "milliseconds" => Some(TimeUnit::Milliseconds),
                    "second" | "seconds" => Some(TimeUnit::Seconds),
                    "minute" | "minutes" => Some(TimeUnit::Minutes),
                    "hour" | "hours" => Some(TimeUnit::Hours),
                    _ => None,
                }
            }
            _ => None,
        };
        if unit.is_some() {
            self.pos += 1;
        }
        unit
    }

    fn timing(&mut self) -> Result<Option<TimingSpec>, Diagnostic> {
        let start = self.cur_offset();
        let spec = self.timing_inner()?;
        if spec.is_some() {
            self.record_span(Field::Timing, start);
        }
        Ok(spec)
    }

    fn timing_inner(&mut self) -> Result<Option<TimingSpec>, Diagnostic> {
        let start = self.cur_offset();
        if self.eat_kw("immediately") || self.eat_kw("initially") {
            return Ok(Some(TimingSpec::Immediately));
        }
        if self.kw("at") && self.kw_at(1, "the") {
            // at the first|same|next timepoint
            let which = self.tok(2).cloned();
            let spec = match which.as_ref().map(|t| &t.kind) {
                Some(TokKind::Word(w)) if w.eq_ignore_ascii_case("first") => TimingSpec::Immediately,
                Some(TokKind::Word(w)) if w.eq_ignore_ascii_case("same") => TimingSpec::Immediately,
                Some(TokKind::Word(w)) if w.eq_ignore_ascii_case("next") => TimingSpec::Next,
                _ => return Err(self.error_here("expected `at the first/same/next timepoint`")),
            };
            self.pos += 3;
            self.expect_kw("timepoint")?;
            return Ok(Some(spec));
        }
        if self.eat_kw("always") {
            return Ok(Some(TimingSpec::Always));
        }
        if self.eat_kw("eventually") {
            return Ok(Some(TimingSpec::Eventually));
        }
        if self.eat_kw("never") {
            return Ok(Some(TimingSpec::Never));
        }
        if self.eat_kw("until") {
            return Ok(Some(TimingSpec::Until(self.expr()?)));
        }
        if self.eat_kw("before") {
            return Ok(Some(TimingSpec::Before(self.expr()?)));
        }
        if self.eat_kw("within") {
            return Ok(Some(TimingSpec::Within(self.duration(start)?)));
        }
        if self.eat_kw("for") {
            return Ok(Some(TimingSpec::For(self.duration(start)?)));
        }
        if self.eat_kw("after") {
            return Ok(Some(TimingSpec::After(self.duration(start)?)));
        }
        Ok(None)
    }

    // -- requirement ---------------------------------------------------------

    fn requirement(&mut self) -> Result<Requirement, Diagnostic> {
        let scope = self.scope()?;
        let condition = self.condition()?;
        let component = self.component()?;
        let probability = self.probability()?;
        self.reject_second_probability(probability.as_ref())?;
        let timing = self.timing()?;
        self.reject_second_probability(probability.as_ref())?;
        let response_start = self.cur_offset();
        self.expect_kw("satisfy")?;
        let response = self.expr()?;
        self.record_span(Field::Response, response_start);
        if self.pos != self.toks.len() {
            self.reject_second_probability(probability.as_ref())?;
            return Err(self.error_here("unexpected input after the response"));
        }
        Ok(Requirement {
            scope,
            condition,
            component,
            probability,
            timing: timing.unwrap_or(TimingSpec::Eventually),
            response,
            spans: std::mem::take(&mut self.spans),
        })
    }
}

/// Parses one requirement.
pub fn parse(text: &str) -> Result<Requirement, Diagnostic> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0, text_len: text.len(), spans: Vec::new() };
    parser.requirement()
}

/// Reports the diagnostics a requirement text produces (empty when the text
/// parses cleanly). Unsupported-construct rejections carry their dedicated
/// codes; anything else is a plain parse error.
pub fn reject_unsupported(text: &str) -> Vec<Diagnostic> {
    match parse(text) {
        Ok(_) => Vec::new(),
        Err(d) => vec![d],
    }
}

/// Parses a standalone duration like `10 ticks` or `0.5 seconds`.
pub fn parse_duration(text: &str) -> Result<Duration, Diagnostic> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0, text_len: text.len(), spans: Vec::new() };
    let duration = parser.duration(0)?;
    if parser.pos != parser.toks.len() {
        return Err(parser.error_here("unexpected input after the duration"));
    }
    Ok(duration)
}

// ---------------------------------------------------------------------------
// Canonical printing
// ---------------------------------------------------------------------------

impl fmt::Display for ScopeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, &self.subject) {
            (ScopeKey::In, ScopeSubject::Mode(m)) => write!(f, "in {m}"),
            (ScopeKey::In, ScopeSubject::Expr(e)) => write!(f, "while {e}"),
            (ScopeKey::NotIn, ScopeSubject::Mode(m)) => write!(f, "except in {m}"),
            (ScopeKey::NotIn, ScopeSubject::Expr(e)) => write!(f, "except while {e}"),
            (ScopeKey::OnlyIn, ScopeSubject::Mode(m)) => write!(f, "only in {m}"),
            (ScopeKey::OnlyIn, ScopeSubject::Expr(e)) => write!(f, "only while {e}"),
            (ScopeKey::Before, ScopeSubject::Mode(m)) => write!(f, "before {m}"),
            (ScopeKey::After, ScopeSubject::Mode(m)) => write!(f, "after {m}"),
            (ScopeKey::OnlyBefore, ScopeSubject::Mode(m)) => write!(f, "only before {m}"),
            (ScopeKey::OnlyAfter, ScopeSubject::Mode(m)) => write!(f, "only after {m}"),
            (kind, subject) => {
                // Unreachable on parsed requirements; print something sane.
                let s = match subject {
                    ScopeSubject::Mode(m) => m.clone(),
                    ScopeSubject::Expr(e) => e.to_string(),
                };
                write!(f, "{} {s}", kind.as_str())
            }
        }
    }
}

impl fmt::Display for TimingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimingSpec::Immediately => write!(f, "immediately"),
            TimingSpec::Next => write!(f, "at the next timepoint"),
            TimingSpec::Always => write!(f, "always"),
            TimingSpec::Eventually => write!(f, "eventually"),
            TimingSpec::Never => write!(f, "never"),
            TimingSpec::Until(e) => write!(f, "until {e}"),
            TimingSpec::Before(e) => write!(f, "before {e}"),
            TimingSpec::For(d) => write!(f, "for {} {}", d.value, d.unit.as_str()),
            TimingSpec::Within(d) => write!(f, "within {} {}", d.value, d.unit.as_str()),
            TimingSpec::After(d) => write!(f, "after {} {}", d.value, d.unit.as_str()),
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(scope) = &self.scope {
            write!(f, "{scope} ")?;
        }
        if let Some(cond) = &self.condition {
            let qualifier = match cond.kind {
                ConditionKind::Holding => "whenever",
                ConditionKind::Regular => "upon",
            };
            write!(f, "{qualifier} {} ", cond.expr)?;
        }
        write!(f, "{} shall", self.component)?;
        if let Some(p) = &self.probability {
            write!(f, " with probability {} {}", p.op.as_str(), p.bound)?;
        }
        write!(f, " {}", self.timing)?;
        write!(f, " satisfy {}", self.response)
    }
}
