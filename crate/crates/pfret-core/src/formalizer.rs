//! Translation from parsed requirements to PCTL* formulas.
//!
//! The pipeline runs in four stages, all on the [`Ltl`] representation:
//!
//! 1. **Timing** — the timing field becomes a temporal obligation over the
//!    response (and stop condition), e.g. `within n` ↦ `F<=n res`.
//! 2. **Scope, inner** — for scoped requirements the obligation is truncated
//!    at the end of the surrounding scope interval; for the `only` scopes it
//!    is also negated. The result is wrapped in a probability operator with
//!    the requirement's bound (or `>= 1` when no probability is given).
//! 3. **Condition** — the probability operator is attached at the points the
//!    condition designates: everywhere it holds (`whenever`), or where it
//!    becomes true (the edge-triggered qualifiers).
//! 4. **Scope, outer** — the conditioned obligation is replayed over every
//!    scope interval of the trace, again truncated per interval, and the
//!    whole formula is wrapped in an outermost `P>=1`.
//!
//! The same pipeline instantiated with placeholder symbols produces the 480
//! cacheable templates; [`TemplateCache`] serializes them deterministically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fretish::{
    self, BoolExpr, ConditionKey, Diagnostic, DiagnosticCode, Duration, Field, ProbabilityKey,
    Requirement, ScopeKey, ScopeSubject, TemplateKey, TimeUnit, TimingKey, TimingSpec,
};
use crate::pctl::{self, Atom, PathFormula, ProbBound, StateFormula, Steps};
use crate::salt_ir::Ltl;

/// Converts a requirement-level boolean expression into a state formula.
pub fn expr_to_state(expr: &BoolExpr) -> StateFormula {
    match expr {
        BoolExpr::Ident(name) => StateFormula::Atom(Atom::Ident(name.clone())),
        BoolExpr::Cmp { lhs, op, rhs } => {
            StateFormula::Atom(Atom::Cmp { lhs: lhs.clone(), op: *op, rhs: rhs.clone() })
        }
        BoolExpr::Not(a) => StateFormula::Not(Box::new(expr_to_state(a))),
        BoolExpr::And(a, b) => {
            StateFormula::And(Box::new(expr_to_state(a)), Box::new(expr_to_state(b)))
        }
        BoolExpr::Or(a, b) => {
            StateFormula::Or(Box::new(expr_to_state(a)), Box::new(expr_to_state(b)))
        }
        BoolExpr::Implies(a, b) => {
            StateFormula::Implies(Box::new(expr_to_state(a)), Box::new(expr_to_state(b)))
        }
    }
}

// ---------------------------------------------------------------------------
// Pipeline symbols
// ---------------------------------------------------------------------------

/// The concrete (or placeholder) material a template is instantiated with.
#[derive(Debug, Clone)]
pub struct Symbols {
    pub mode: StateFormula,
    pub cond: StateFormula,
    pub stop: StateFormula,
    pub res: StateFormula,
    pub bound: ProbBound,
    pub steps: Steps,
}

impl Symbols {
    /// Placeholder symbols used to build the template cache.
    pub fn placeholders() -> Symbols {
        Symbols {
            mode: StateFormula::Atom(Atom::Ident("$mode$".to_string())),
            cond: StateFormula::Atom(Atom::Ident("$cond$".to_string())),
            stop: StateFormula::Atom(Atom::Ident("$stop$".to_string())),
            res: StateFormula::Atom(Atom::Ident("$res$".to_string())),
            bound: ProbBound::Placeholder,
            steps: Steps::Placeholder { offset: 0 },
        }
    }
}

fn timing_span(req: &Requirement) -> (usize, usize) {
    req.span(Field::Timing).map(|s| (s.offset, s.length)).unwrap_or((0, 0))
}

/// The number of ticks a duration denotes, given the configured tick length.
pub fn ticks_for(
    duration: &Duration,
    tick: Option<&Duration>,
    span: (usize, usize),
) -> Result<u64, Diagnostic> {
    let (offset, length) = span;
    let fail = |message: String| Diagnostic {
        offset,
        length,
        code: DiagnosticCode::TickConversion,
        message,
    };
    let ticks = match duration.unit {
        TimeUnit::Ticks => duration.value,
        unit => {
            let tick = tick.ok_or_else(|| {
                fail(format!(
                    "a duration in {} needs a configured tick duration",
                    unit.as_str()
                ))
            })?;
            let tick_micros = tick.unit.micros().ok_or_else(|| {
                fail("the tick duration must be a wall-clock time, not ticks".to_string())
            })?;
            duration.value * duration.unit.micros().expect("wall-clock unit") / (tick.value * tick_micros)
        }
    };
    let rounded = ticks.round();
    if (ticks - rounded).abs() > 1e-9 * ticks.max(1.0) {
        return Err(fail(format!(
            "{} {} is not a whole number of ticks ({ticks})",
            duration.value,
            duration.unit.as_str()
        )));
    }
    if rounded < 1.0 {
        return Err(fail(format!(
            "{} {} is less than one tick",
            duration.value,
            duration.unit.as_str()
        )));
    }
    Ok(rounded as u64)
}

/// Builds the concrete symbols for one requirement.
fn symbols_for(req: &Requirement, tick: Option<&Duration>) -> Result<Symbols, Diagnostic> {
    let placeholder = Symbols::placeholders();
    let mode = match &req.scope {
        Some(scope) => match &scope.subject {
            ScopeSubject::Mode(name) => StateFormula::Atom(Atom::Ident(name.clone())),
            ScopeSubject::Expr(expr) => expr_to_state(expr),
        },
        None => placeholder.mode,
    };
    let cond = match &req.condition {
        Some(c) => expr_to_state(&c.expr),
        None => placeholder.cond,
    };
    let (stop, steps) = match &req.timing {
        TimingSpec::Until(e) | TimingSpec::Before(e) => (expr_to_state(e), placeholder.steps),
        TimingSpec::For(d) | TimingSpec::Within(d) | TimingSpec::After(d) => (
            placeholder.stop,
            Steps::Lit(ticks_for(d, tick, timing_span(req))?),
        ),
        _ => (placeholder.stop, placeholder.steps),
    };
    let bound = match &req.probability {
        Some(p) => ProbBound::Lit { op: p.op, value: p.bound },
        None => ProbBound::ge_one(),
    };
    Ok(Symbols { mode, cond, stop, res: expr_to_state(&req.response), bound, steps })
}

// ---------------------------------------------------------------------------
// Stage 1: timing
// ---------------------------------------------------------------------------

/// The temporal obligation a timing field denotes, over the response (and,
/// for `until`/`before`, the stop condition).
pub fn tform(timing: TimingKey, syms: &Symbols) -> Ltl {
    let res = || Ltl::State(syms.res.clone());
    let stop = || Ltl::State(syms.stop.clone());
    match timing {
        TimingKey::Immediately => res(),
        TimingKey::Next => res().next(),
        TimingKey::Always => res().globally(),
        TimingKey::Eventually => res().finally(),
        TimingKey::Never => res().not().globally(),
        TimingKey::Until => res().weak_until(stop()),
        TimingKey::Before => res().release(stop().not()),
        TimingKey::For => res().bounded_globally(syms.steps.clone()),
        TimingKey::Within => res().bounded_finally(syms.steps.clone()),
        TimingKey::After => res()
            .not()
            .bounded_globally(syms.steps.clone())
            .and(res().bounded_finally(syms.steps.offset_by(1))),
    }
}

// ---------------------------------------------------------------------------
// Scope events
// ---------------------------------------------------------------------------

/// The step at which a mode interval is entered: `!m & X m` fires at the last
/// position before the interval.
fn mode_entry(mode: &StateFormula) -> Ltl {
    Ltl::State(mode.clone()).not().and(Ltl::State(mode.clone()).next())
}

/// The step at which a mode interval is left: `m & X !m` fires at the last
/// position of the interval.
fn mode_exit(mode: &StateFormula) -> Ltl {
    Ltl::State(mode.clone()).and(Ltl::State(mode.clone()).not().next())
}

/// The event that ends the scope interval a truncated obligation lives in.
/// `None` for the scopes whose obligations run to the end of the trace.
fn right_event(scope: ScopeKey, mode: &StateFormula) -> Option<Ltl> {
    match scope {
        ScopeKey::Null | ScopeKey::After | ScopeKey::OnlyBefore => None,
        // A mode interval ends where the mode is left.
        ScopeKey::In => Some(mode_exit(mode)),
        // Intervals outside the mode end where the mode is entered.
        ScopeKey::NotIn | ScopeKey::OnlyIn => Some(mode_entry(mode)),
        // The leading interval before the mode ends at the first entry.
        ScopeKey::Before => Some(mode_entry(mode)),
        // The complement interval checked by `only after` ends at the exit.
        ScopeKey::OnlyAfter => Some(mode_exit(mode)),
    }
}

// ---------------------------------------------------------------------------
// Stage 2: scope, inner (the probability operator's body)
// ---------------------------------------------------------------------------

/// Deliberate weakenings of the compiled formulas, used to demonstrate that
/// the validation campaign detects genuine compilation bugs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Waives the truncated obligation outright on futures where the scope
    /// interval never closes, instead of requiring it over the whole future.
    WeakToOptional,
}

/// Shapes the timing obligation for the scope it will be checked in: truncate
/// it at the end of the scope interval, and negate it for the `only` scopes
/// (which forbid the response pattern outside their intervals).
fn ltlform(scope: ScopeKey, t: Ltl, mode: &StateFormula) -> Ltl {
    ltlform_variant(scope, t, mode, None)
}

fn ltlform_variant(scope: ScopeKey, t: Ltl, mode: &StateFormula, mutation: Option<Mutation>) -> Ltl {
    match scope {
        ScopeKey::Null | ScopeKey::After => t,
        ScopeKey::In | ScopeKey::Before | ScopeKey::NotIn => {
            let right = right_event(scope, mode).expect("truncating scope");
            let truncated = t.trunc_before(right.clone());
            match mutation {
                None => truncated,
                Some(Mutation::WeakToOptional) => right.not().globally().or(truncated),
            }
        }
        ScopeKey::OnlyIn | ScopeKey::OnlyAfter => t
            .trunc_before(right_event(scope, mode).expect("truncating scope"))
            .not(),
        ScopeKey::OnlyBefore => t.not(),
    }
}

// ---------------------------------------------------------------------------
// Stage 3: condition
// ---------------------------------------------------------------------------

/// Attaches the probabilistic obligation (the [`Ltl::ProbHole`] marker) at
/// the points the condition designates.
fn condition_form(condition: ConditionKey, cond: &StateFormula) -> Ltl {
    let c = || Ltl::State(cond.clone());
    match condition {
        ConditionKey::Null => Ltl::ProbHole,
        ConditionKey::Holding => c().implies(Ltl::ProbHole).globally(),
        ConditionKey::Regular => {
            // Obligations attach where the condition becomes true: after any
            // false-to-true step, and at the start of the trace if it holds
            // there already.
            let becomes_true = c().not().and(c().next());
            let f1 = becomes_true.implies(Ltl::ProbHole.next()).globally();
            let f2 = c().implies(Ltl::ProbHole);
            f1.and(f2)
        }
    }
}

// ---------------------------------------------------------------------------
// Stage 4: scope, outer
// ---------------------------------------------------------------------------

/// Replays the conditioned obligation over every interval the scope selects.
fn sform(scope: ScopeKey, base: Ltl, mode: &StateFormula) -> Ltl {
    let m = || Ltl::State(mode.clone());
    match scope {
        ScopeKey::Null => base,
        // Repeated intervals: one branch fires the obligation right after
        // each interval entry; the other covers an interval already open at
        // the start of the trace. In the latter case a single-point interval
        // (the end event firing immediately) carries no obligation.
        ScopeKey::In | ScopeKey::NotIn | ScopeKey::OnlyIn => {
            let right = right_event(scope, mode).expect("interval scope");
            let entry = match scope {
                ScopeKey::In => mode_entry(mode),
                // Entering the complement of the mode is leaving the mode.
                _ => mode_exit(mode),
            };
            let gate = match scope {
                ScopeKey::In => m(),
                _ => m().not(),
            };
            let truncated = base.trunc_before(right.clone());
            let between = entry.not().or(truncated.clone().next()).globally();
            let initial = gate.implies(right.or(truncated));
            between.and(initial)
        }
        // One leading interval from the start of the trace to the first mode
        // entry; vacuous if the trace starts inside the mode.
        ScopeKey::Before => {
            let right = right_event(scope, mode).expect("before scope");
            m().or(right.clone().or(base.trunc_before(right)))
        }
        // One trailing interval opened by the first mode exit.
        ScopeKey::After => {
            let exit = mode_exit(mode);
            let reach = exit
                .clone()
                .not()
                .until(exit.clone().and(base.next()));
            reach.or(exit.not().globally())
        }
        // The complement of a `before` interval is an `after`-style trailing
        // interval opened by the first mode entry — or the whole trace, if it
        // starts inside the mode.
        ScopeKey::OnlyBefore => {
            let entry = mode_entry(mode);
            let reach = entry
                .clone()
                .not()
                .until(entry.clone().and(base.clone().next()));
            let tail = reach.or(entry.not().globally());
            m().not().implies(tail).and(m().implies(base))
        }
        // The complement of an `after` interval is the leading piece up to
        // the first mode exit; an exit at the very start leaves nothing to
        // check.
        ScopeKey::OnlyAfter => {
            let right = right_event(scope, mode).expect("only-after scope");
            right.clone().or(base.trunc_before(right))
        }
    }
}

// ---------------------------------------------------------------------------
// The full pipeline
// ---------------------------------------------------------------------------

/// Compiles one template slot with the given symbols.
pub fn gen_prob_formula_with(key: &TemplateKey, syms: &Symbols) -> StateFormula {
    gen_prob_formula_variant(key, syms, None)
}

/// Compiles one template slot, optionally applying a deliberate weakening.
pub fn gen_prob_formula_variant(
    key: &TemplateKey,
    syms: &Symbols,
    mutation: Option<Mutation>,
) -> StateFormula {
    let t = tform(key.timing, syms);
    let inner = ltlform_variant(key.scope, t, &syms.mode, mutation).lower();
    let bound = match key.probability {
        ProbabilityKey::Bound => syms.bound.clone(),
        ProbabilityKey::Null => ProbBound::ge_one(),
    };
    let p_formula = StateFormula::prob(bound, inner.to_path());
    let base = condition_form(key.condition, &syms.cond);
    let outer = sform(key.scope, base, &syms.mode).lower();
    let substituted = outer.substitute_hole(&Ltl::State(p_formula));
    StateFormula::prob(ProbBound::ge_one(), substituted.to_path())
}

/// Compiles one template slot with placeholder symbols (the cacheable form).
pub fn gen_prob_formula(key: &TemplateKey) -> StateFormula {
    gen_prob_formula_with(key, &Symbols::placeholders())
}

/// Compiles a parsed requirement directly to its formula.
pub fn compile(req: &Requirement, tick: Option<&Duration>) -> Result<StateFormula, Diagnostic> {
    let syms = symbols_for(req, tick)?;
    Ok(gen_prob_formula_with(&fretish::template_key(req), &syms))
}

/// The intermediate stages of one compilation, for inspection.
#[derive(Debug, Clone, Serialize)]
pub struct Explain {
    pub key: String,
    pub spans: Vec<fretish::FieldSpan>,
    /// The timing obligation (stage 1).
    pub tform: String,
    /// The scoped, possibly negated probability-operator body (stage 2),
    /// before lowering.
    pub ltlform: String,
    /// The outer structure (stages 3–4), lowered, with `PROBFORM` marking
    /// where the probability operator is substituted.
    pub sform: String,
    /// The final formula.
    pub formula: String,
}

/// Compiles a requirement and reports every pipeline stage.
pub fn explain(req: &Requirement, tick: Option<&Duration>) -> Result<Explain, Diagnostic> {
    let syms = symbols_for(req, tick)?;
    let key = fretish::template_key(req);
    let t = tform(key.timing, &syms);
    let inner = ltlform(key.scope, t.clone(), &syms.mode);
    let base = condition_form(key.condition, &syms.cond);
    let outer = sform(key.scope, base, &syms.mode).lower();
    Ok(Explain {
        key: key.to_string(),
        spans: req.spans.clone(),
        tform: t.to_string(),
        ltlform: inner.to_string(),
        sform: outer.to_string(),
        formula: pctl::print_prism(&gen_prob_formula_with(&key, &syms)),
    })
}

// ---------------------------------------------------------------------------
// Template cache
// ---------------------------------------------------------------------------

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateEntry {
    pub key: String,
    pub formula: String,
    pub placeholders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCache {
    pub version: u32,
    pub templates: BTreeMap<String, TemplateEntry>,
}

/// The placeholder tokens a template slot's formula uses.
pub fn placeholders_for(key: &TemplateKey) -> Vec<String> {
    let mut names = Vec::new();
    if key.scope != ScopeKey::Null {
        names.push("$mode$".to_string());
    }
    if key.condition != ConditionKey::Null {
        names.push("$cond$".to_string());
    }
    if key.probability == ProbabilityKey::Bound {
        names.push("$bound_op$".to_string());
        names.push("$bound_val$".to_string());
    }
    if key.timing.has_steps() {
        names.push("$n$".to_string());
    }
    if key.timing.has_stop() {
        names.push("$stop$".to_string());
    }
    names.push("$res$".to_string());
    names
}

/// Builds all 480 templates.
pub fn build_cache() -> TemplateCache {
    let mut templates = BTreeMap::new();
    for key in TemplateKey::enumerate_all() {
        let formula = pctl::print_prism(&gen_prob_formula(&key));
        let entry = TemplateEntry {
            key: key.to_string(),
            formula,
            placeholders: placeholders_for(&key),
        };
        templates.insert(key.to_string(), entry);
    }
    TemplateCache { version: CACHE_VERSION, templates }
}

impl TemplateCache {
    /// Deterministic serialized form: the same templates always produce the
    /// same bytes.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("cache serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<TemplateCache, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn lookup(&self, key: &TemplateKey) -> Option<&TemplateEntry> {
        self.templates.get(&key.to_string())
    }
}

/// Why instantiating from a cached template failed.
#[derive(Debug, thiserror::Error)]
pub enum InstantiateError {
    /// The cached formula text does not parse: the cache is corrupt.
    #[error("cached template is corrupt: {0}")]
    Cache(#[from] pctl::ParseError),
    /// The requirement cannot be instantiated (e.g. tick conversion).
    #[error("{0}")]
    Input(#[from] Diagnostic),
}

/// Instantiates a cached template's formula text for a concrete requirement.
/// Produces exactly the formula [`compile`] builds in memory.
pub fn instantiate(
    template: &str,
    req: &Requirement,
    tick: Option<&Duration>,
) -> Result<StateFormula, InstantiateError> {
    let parsed = pctl::parse_prism(template)?;
    let syms = symbols_for(req, tick)?;
    let mut atom_map: BTreeMap<String, PathFormula> = BTreeMap::new();
    atom_map.insert("$mode$".to_string(), PathFormula::State(syms.mode.clone()));
    atom_map.insert("$cond$".to_string(), PathFormula::State(syms.cond.clone()));
    atom_map.insert("$stop$".to_string(), PathFormula::State(syms.stop.clone()));
    atom_map.insert("$res$".to_string(), PathFormula::State(syms.res.clone()));
    let substituted = parsed.substitute_atoms(&atom_map);
    let bound = match &syms.bound {
        ProbBound::Lit { op, value } => Some((*op, *value)),
        ProbBound::Placeholder => None,
    };
    let steps = match &syms.steps {
        Steps::Lit(n) => Some(*n),
        Steps::Placeholder { .. } => None,
    };
    Ok(substituted.instantiate_bounds(bound, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pctl::{parse_prism, print_prism, well_formed};

    const SOURCES: [(&str, &str); 6] = [
        (
            "P-001",
            "whenever idealConditions SensorSelection shall immediately satisfy q_hat = q",
        ),
        (
            "P-006",
            "in auto_takeoff_mode whenever q_k SensorSelection shall with probability > 0.99 \
             at the next timepoint satisfy incursionDetected",
        ),
        (
            "P-007",
            "after auto_land_mode SensorSelection shall with probability > 0.99 eventually \
             satisfy detect_correct_exit",
        ),
        (
            "P-012",
            "upon q_k RunwayIntrusionDetector shall with probability > 0.9999 before \
             unsafe_sep_distance satisfy incursionDetected",
        ),
        (
            "P-017",
            "whenever q_k RunwayIntrusionDetector shall with probability > 0.9999 within \
             10 ticks satisfy incursionDetected",
        ),
        (
            "P-019",
            "upon accurate RunwayDetector shall with probability > 0.99 for 10 ticks \
             satisfy q_hat =q",
        ),
    ];

    const GOLDEN: [(&str, &str); 6] = [
        ("P-001", "P>=1[(G (idealConditions => (P>=1[(q_hat = q)])))]"),
        (
            "P-006",
            "P>=1[((G ((! (((! auto_takeoff_mode) & (X auto_takeoff_mode)))) | (X ((auto_takeoff_mode & (X (! auto_takeoff_mode))) R (q_k => (P>0.99[((auto_takeoff_mode & (X (! auto_takeoff_mode))) | ((X incursionDetected) & (! (auto_takeoff_mode & (X (! auto_takeoff_mode))))))])))))) & (auto_takeoff_mode => ((auto_takeoff_mode & (X (! auto_takeoff_mode))) | ((auto_takeoff_mode & (X (! auto_takeoff_mode))) R (q_k => (P>0.99[((auto_takeoff_mode & (X (! auto_takeoff_mode))) | ((X incursionDetected) & (! (auto_takeoff_mode & (X (! auto_takeoff_mode))))))]))))))]",
        ),
        (
            "P-007",
            "P>=1[(((! (auto_land_mode & (X (! auto_land_mode)))) U ((auto_land_mode & (X (! auto_land_mode))) & (X (P>0.99[(F detect_correct_exit)])))) | (G (! (auto_land_mode & (X (! auto_land_mode))))))]",
        ),
        (
            "P-012",
            "P>=1[((G (((! q_k) & (X q_k)) => (X (P>0.9999[(incursionDetected R (! unsafe_sep_distance))])))) & (q_k => (P>0.9999[( incursionDetected R (! unsafe_sep_distance))])))]",
        ),
        (
            "P-017",
            "P>=1[(G (q_k => (P>0.9999[(F<=10 incursionDetected)])))]",
        ),
        (
            "P-019",
            "P>=1[((G (((! accurate) & (X accurate)) => (X (P>0.99[(G<=10 (q_hat = q))])))) & (accurate => (P>0.99[(G[<=10] (q_hat = q))])))]",
        ),
    ];

    fn compiled(name: &str) -> StateFormula {
        let source = SOURCES.iter().find(|(n, _)| *n == name).unwrap().1;
        let req = fretish::parse(source).unwrap();
        compile(&req, None).unwrap()
    }

    fn golden(name: &str) -> StateFormula {
        let text = GOLDEN.iter().find(|(n, _)| *n == name).unwrap().1;
        parse_prism(text).unwrap()
    }

    #[test]
    fn simple_requirements_print_exactly() {
        assert_eq!(
            print_prism(&compiled("P-001")),
            "P>=1[(G (idealConditions => (P>=1[(q_hat = q)])))]"
        );
        assert_eq!(
            print_prism(&compiled("P-017")),
            "P>=1[(G (q_k => (P>0.9999[(F<=10 incursionDetected)])))]"
        );
    }

    #[test]
    fn reference_formulas_match_structurally() {
        // The reference texts vary in redundant parentheses, spacing, and
        // step-bound style; after parsing, the structures must be identical.
        for (name, _) in SOURCES {
            assert_eq!(compiled(name), golden(name), "for {name}");
        }
    }

    #[test]
    fn instantiating_the_for_template_matches_reference_text() {
        let key: TemplateKey = "null,regular,bound,for".parse().unwrap();
        let template = print_prism(&gen_prob_formula(&key));
        let req = fretish::parse(
            "upon accurate RunwayDetector shall with probability > 0.99 for 10 ticks \
             satisfy q_hat = q",
        )
        .unwrap();
        let formula = instantiate(&template, &req, None).unwrap();
        assert_eq!(
            print_prism(&formula),
            "P>=1[((G (((! accurate) & (X accurate)) => (X (P>0.99[(G<=10 (q_hat = q))])))) \
             & (accurate => (P>0.99[(G<=10 (q_hat = q))])))]"
        );
    }

    #[test]
    fn cache_and_direct_compilation_agree() {
        let cache = build_cache();
        for (_, source) in SOURCES {
            let req = fretish::parse(source).unwrap();
            let key = fretish::template_key(&req);
            let entry = cache.lookup(&key).unwrap();
            let via_cache = instantiate(&entry.formula, &req, None).unwrap();
            let direct = compile(&req, None).unwrap();
            assert_eq!(print_prism(&via_cache), print_prism(&direct), "for {source:?}");
        }
    }

    #[test]
    fn all_templates_are_well_formed() {
        let cache = build_cache();
        assert_eq!(cache.templates.len(), 480);
        for (key, entry) in &cache.templates {
            let parsed = parse_prism(&entry.formula)
                .unwrap_or_else(|e| panic!("template {key} reparses: {e}"));
            assert!(well_formed(&parsed), "template {key} is well-formed");
        }
    }

    #[test]
    fn cache_serialization_is_deterministic() {
        let a = build_cache().to_json();
        let b = build_cache().to_json();
        assert_eq!(a, b);
        let reparsed = TemplateCache::from_json(&a).unwrap();
        assert_eq!(reparsed.to_json(), a);
    }

    #[test]
    fn placeholder_lists_match_formula_contents() {
        let cache = build_cache();
        for (key, entry) in &cache.templates {
            for name in ["$mode$", "$cond$", "$stop$", "$res$", "$bound_op$", "$n$"] {
                let listed = entry.placeholders.iter().any(|p| p == name);
                let present = entry.formula.contains(name);
                assert_eq!(listed, present, "{name} in template {key}");
            }
        }
    }

    #[test]
    fn probability_bound_erases_to_certainty() {
        // A slot without a probability field is the bound slot instantiated
        // with `>= 1`.
        for key in TemplateKey::enumerate_all() {
            if key.probability != ProbabilityKey::Bound {
                continue;
            }
            let null_key = TemplateKey { probability: ProbabilityKey::Null, ..key };
            let bound_formula = print_prism(&gen_prob_formula(&key));
            let null_formula = print_prism(&gen_prob_formula(&null_key));
            assert_eq!(bound_formula.replace("$bound_op$$bound_val$", ">=1"), null_formula);
        }
    }

    #[test]
    fn probability_hole_is_present_then_fully_substituted() {
        for key in TemplateKey::enumerate_all() {
            let syms = Symbols::placeholders();
            let base = condition_form(key.condition, &syms.cond);
            let outer = sform(key.scope, base, &syms.mode).lower();
            assert!(outer.to_string().contains("PROBFORM"), "marker present for {key}");
            let formula = print_prism(&gen_prob_formula(&key));
            assert!(!formula.contains("PROBFORM"), "marker substituted for {key}");
        }
    }

    #[test]
    fn explain_reports_each_stage() {
        let req = fretish::parse(SOURCES[1].1).unwrap();
        let stages = explain(&req, None).unwrap();
        assert_eq!(stages.key, "in,holding,bound,next");
        assert_eq!(stages.tform, "X incursionDetected");
        assert!(stages.ltlform.starts_with("trunc(X incursionDetected,"));
        assert!(stages.sform.contains("PROBFORM"));
        assert!(stages.formula.contains("(X incursionDetected)"));
        assert_eq!(stages.spans.len(), 6);
    }

    #[test]
    fn wall_clock_durations_convert_to_ticks() {
        let tick = fretish::parse_duration("100 milliseconds").unwrap();
        let req = fretish::parse("Comp shall within 2 seconds satisfy r").unwrap();
        let formula = compile(&req, Some(&tick)).unwrap();
        assert!(print_prism(&formula).contains("F<=20"));

        // Not a whole number of ticks.
        let req = fretish::parse("Comp shall within 0.25 seconds satisfy r").unwrap();
        let err = compile(&req, Some(&tick)).unwrap_err();
        assert_eq!(err.code, DiagnosticCode::TickConversion);
        let span = req.span(Field::Timing).unwrap();
        assert_eq!(err.offset, span.offset);

        // Wall-clock units without a configured tick.
        let err = compile(&req, None).unwrap_err();
        assert_eq!(err.code, DiagnosticCode::TickConversion);

        // Fractional tick counts are rejected even in ticks.
        let req = fretish::parse("Comp shall within 2.5 ticks satisfy r").unwrap();
        assert!(compile(&req, None).is_err());
    }

    #[test]
    fn scope_end_events_coincide_across_rows() {
        // Rows that truncate at a mode entry all use the same event formula,
        // and likewise for mode exits.
        let m = Symbols::placeholders().mode;
        let entry = mode_entry(&m).to_string();
        let exit = mode_exit(&m).to_string();
        assert_eq!(entry, "(! $mode$) & (X $mode$)");
        assert_eq!(exit, "$mode$ & (X (! $mode$))");
        for scope in [ScopeKey::NotIn, ScopeKey::OnlyIn, ScopeKey::Before] {
            assert_eq!(right_event(scope, &m).unwrap().to_string(), entry);
        }
        for scope in [ScopeKey::In, ScopeKey::OnlyAfter] {
            assert_eq!(right_event(scope, &m).unwrap().to_string(), exit);
        }
    }

    #[test]
    fn expression_scope_subjects_compile() {
        let req = fretish::parse("while x > 0 upon c Comp shall satisfy r").unwrap();
        let formula = print_prism(&compile(&req, None).unwrap());
        assert!(formula.contains("(x > 0) & (X (! (x > 0)))"), "{formula}");
        assert!(well_formed(&compile(&req, None).unwrap()));
    }
}
