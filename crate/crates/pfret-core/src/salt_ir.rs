//! Linear temporal logic intermediate representation.
//!
//! The compiler's middle stage works on [`Ltl`] formulas: LTL structure over
//! embedded state formulas, extended with two derived operators that the
//! timing and scope templates use directly:
//!
//! * [`Ltl::UntilExclWeak`] — `a W b`: `a` holds strictly until the first
//!   occurrence of `b`, or forever if `b` never occurs (weak until).
//! * [`Ltl::TruncBefore`] — `trunc(body, r)`: `body` evaluated on the trace
//!   truncated at the first occurrence of the event `r`, inclusively; weak at
//!   the truncation point (pending obligations that the shortened trace can no
//!   longer refute are discharged).
//!
//! [`Ltl::lower`] eliminates both extended operators, producing plain LTL
//! ready to be embedded into a probability operator. [`Ltl::ProbHole`] marks
//! the slot where the probabilistic subformula is substituted at the end of
//! compilation.

use crate::pctl::{Atom, PathFormula, StateFormula, Steps};

/// LTL over embedded state formulas, plus the extended operators described in
/// the module docs.
#[derive(Debug, Clone, PartialEq)]
pub enum Ltl {
    /// An atomic (state-level) formula: no temporal structure inside.
    State(StateFormula),
    /// Placeholder for the probabilistic subformula, substituted last.
    ProbHole,
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Finally(Box<Ltl>),
    Globally(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
    BoundedFinally(Box<Ltl>, Steps),
    BoundedGlobally(Box<Ltl>, Steps),
    /// Weak until: `lhs` holds strictly before the first `rhs`, or forever.
    UntilExclWeak(Box<Ltl>, Box<Ltl>),
    /// `body` on the trace truncated (inclusively, weakly) at the first
    /// occurrence of the event `right`.
    TruncBefore { body: Box<Ltl>, right: Box<Ltl> },
}

impl Ltl {
    pub fn atom(name: &str) -> Self {
        Ltl::State(StateFormula::Atom(Atom::Ident(name.to_string())))
    }

    pub fn truth() -> Self {
        Ltl::State(StateFormula::True)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Ltl::Not(Box::new(self))
    }

    pub fn and(self, rhs: Self) -> Self {
        Ltl::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Self) -> Self {
        Ltl::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Self) -> Self {
        Ltl::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn next(self) -> Self {
        Ltl::Next(Box::new(self))
    }

    pub fn finally(self) -> Self {
        Ltl::Finally(Box::new(self))
    }

    pub fn globally(self) -> Self {
        Ltl::Globally(Box::new(self))
    }

    pub fn until(self, rhs: Self) -> Self {
        Ltl::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Self) -> Self {
        Ltl::Release(Box::new(self), Box::new(rhs))
    }

    pub fn weak_until(self, rhs: Self) -> Self {
        Ltl::UntilExclWeak(Box::new(self), Box::new(rhs))
    }

    pub fn trunc_before(self, right: Self) -> Self {
        Ltl::TruncBefore { body: Box::new(self), right: Box::new(right) }
    }

    pub fn bounded_finally(self, n: Steps) -> Self {
        Ltl::BoundedFinally(Box::new(self), n)
    }

    pub fn bounded_globally(self, n: Steps) -> Self {
        Ltl::BoundedGlobally(Box::new(self), n)
    }

    /// No extended operators anywhere in the formula.
    pub fn is_core(&self) -> bool {
        match self {
            Ltl::State(_) | Ltl::ProbHole => true,
            Ltl::Not(a)
            | Ltl::Next(a)
            | Ltl::Finally(a)
            | Ltl::Globally(a)
            | Ltl::BoundedFinally(a, _)
            | Ltl::BoundedGlobally(a, _) => a.is_core(),
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Until(a, b)
            | Ltl::Release(a, b) => a.is_core() && b.is_core(),
            Ltl::UntilExclWeak(..) | Ltl::TruncBefore { .. } => false,
        }
    }

    /// Replaces every [`Ltl::ProbHole`] with `replacement`.
    pub fn substitute_hole(&self, replacement: &Ltl) -> Ltl {
        match self {
            Ltl::ProbHole => replacement.clone(),
            Ltl::State(_) => self.clone(),
            Ltl::Not(a) => a.substitute_hole(replacement).not(),
            Ltl::And(a, b) => {
                a.substitute_hole(replacement).and(b.substitute_hole(replacement))
            }
            Ltl::Or(a, b) => a.substitute_hole(replacement).or(b.substitute_hole(replacement)),
            Ltl::Implies(a, b) => {
                a.substitute_hole(replacement).implies(b.substitute_hole(replacement))
            }
            Ltl::Next(a) => a.substitute_hole(replacement).next(),
            Ltl::Finally(a) => a.substitute_hole(replacement).finally(),
            Ltl::Globally(a) => a.substitute_hole(replacement).globally(),
            Ltl::Until(a, b) => {
                a.substitute_hole(replacement).until(b.substitute_hole(replacement))
            }
            Ltl::Release(a, b) => {
                a.substitute_hole(replacement).release(b.substitute_hole(replacement))
            }
            Ltl::BoundedFinally(a, n) => {
                a.substitute_hole(replacement).bounded_finally(n.clone())
            }
            Ltl::BoundedGlobally(a, n) => {
                a.substitute_hole(replacement).bounded_globally(n.clone())
            }
            Ltl::UntilExclWeak(a, b) => {
                a.substitute_hole(replacement).weak_until(b.substitute_hole(replacement))
            }
            Ltl::TruncBefore { body, right } => body
                .substitute_hole(replacement)
                .trunc_before(right.substitute_hole(replacement)),
        }
    }

    /// Eliminates the extended operators, leaving plain LTL.
    pub fn lower(&self) -> Ltl {
        match self {
            Ltl::State(_) | Ltl::ProbHole => self.clone(),
            Ltl::Not(a) => a.lower().not(),
            Ltl::And(a, b) => a.lower().and(b.lower()),
            Ltl::Or(a, b) => a.lower().or(b.lower()),
            Ltl::Implies(a, b) => a.lower().implies(b.lower()),
            Ltl::Next(a) => a.lower().next(),
            Ltl::Finally(a) => a.lower().finally(),
            Ltl::Globally(a) => a.lower().globally(),
            Ltl::Until(a, b) => a.lower().until(b.lower()),
            Ltl::Release(a, b) => a.lower().release(b.lower()),
            Ltl::BoundedFinally(a, n) => a.lower().bounded_finally(n.clone()),
            Ltl::BoundedGlobally(a, n) => a.lower().bounded_globally(n.clone()),
            // Without a truncation point, weak until is just its two-branch
            // definition: discharge by the stop event, or hold forever.
            Ltl::UntilExclWeak(a, b) => {
                let (a, b) = (a.lower(), b.lower());
                a.clone().until(b).or(a.globally())
            }
            Ltl::TruncBefore { body, right } => truncate(body, &right.lower()),
        }
    }

    /// Conservative cleanup: double negation, conjunction with `true`,
    /// disjunction with `false` (written `! true`). Idempotent.
    pub fn simplify(&self) -> Ltl {
        fn is_true(f: &Ltl) -> bool {
            matches!(f, Ltl::State(StateFormula::True))
        }
        fn is_false(f: &Ltl) -> bool {
            matches!(f, Ltl::Not(inner) if is_true(inner))
        }
        match self {
            Ltl::State(_) | Ltl::ProbHole => self.clone(),
            Ltl::Not(a) => match a.simplify() {
                Ltl::Not(inner) => *inner,
                other => other.not(),
            },
            Ltl::And(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                if is_true(&a) {
                    b
                } else if is_true(&b) {
                    a
                } else {
                    a.and(b)
                }
            }
            Ltl::Or(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                if is_false(&a) {
                    b
                } else if is_false(&b) {
                    a
                } else {
                    a.or(b)
                }
            }
            Ltl::Implies(a, b) => a.simplify().implies(b.simplify()),
            Ltl::Next(a) => a.simplify().next(),
            Ltl::Finally(a) => a.simplify().finally(),
            Ltl::Globally(a) => a.simplify().globally(),
            Ltl::Until(a, b) => a.simplify().until(b.simplify()),
            Ltl::Release(a, b) => a.simplify().release(b.simplify()),
            Ltl::BoundedFinally(a, n) => a.simplify().bounded_finally(n.clone()),
            Ltl::BoundedGlobally(a, n) => a.simplify().bounded_globally(n.clone()),
            Ltl::UntilExclWeak(a, b) => a.simplify().weak_until(b.simplify()),
            Ltl::TruncBefore { body, right } => {
                body.simplify().trunc_before(right.simplify())
            }
        }
    }

    /// Converts lowered LTL into a PCTL* path formula. Panics on extended
    /// operators (call [`Ltl::lower`] first) and on an unsubstituted
    /// [`Ltl::ProbHole`].
    pub fn to_path(&self) -> PathFormula {
        match self {
            Ltl::State(sf) => PathFormula::State(sf.clone()),
            Ltl::ProbHole => panic!("probability hole was never substituted"),
            Ltl::Not(a) => a.to_path().not(),
            Ltl::And(a, b) => a.to_path().and(b.to_path()),
            Ltl::Or(a, b) => a.to_path().or(b.to_path()),
            Ltl::Implies(a, b) => a.to_path().implies(b.to_path()),
            Ltl::Next(a) => a.to_path().next(),
            Ltl::Finally(a) => a.to_path().finally(),
            Ltl::Globally(a) => a.to_path().globally(),
            Ltl::Until(a, b) => a.to_path().until(b.to_path()),
            Ltl::Release(a, b) => a.to_path().release(b.to_path()),
            Ltl::BoundedFinally(a, n) => {
                PathFormula::BoundedFinally(Box::new(a.to_path()), n.clone())
            }
            Ltl::BoundedGlobally(a, n) => {
                PathFormula::BoundedGlobally(Box::new(a.to_path()), n.clone())
            }
            Ltl::UntilExclWeak(..) | Ltl::TruncBefore { .. } => {
                panic!("extended operator survived lowering: {self}")
            }
        }
    }
}

/// The truncation transform: rewrites `body` so that, evaluated on the full
/// trace, it means "`body` holds on the trace cut (inclusively) at the first
/// occurrence of `right`". Universal obligations are discharged at the cut;
/// existential ones may still be witnessed at the cut point itself.
fn truncate(body: &Ltl, right: &Ltl) -> Ltl {
    let r = || right.clone();
    match body {
        Ltl::State(_) | Ltl::ProbHole => body.clone(),
        Ltl::Not(a) => truncate(a, right).not(),
        Ltl::And(a, b) => truncate(a, right).and(truncate(b, right)),
        Ltl::Or(a, b) => truncate(a, right).or(truncate(b, right)),
        Ltl::Implies(a, b) => truncate(a, right).implies(truncate(b, right)),
        // The step obligation is waived exactly when the cut happens here.
        Ltl::Next(a) => r().or(truncate(a, right).next().and(r().not())),
        Ltl::Finally(a) => r().not().until(truncate(a, right)),
        Ltl::Globally(a) => r().release(truncate(a, right)),
        Ltl::BoundedFinally(a, n) => r().or(truncate(a, right)).bounded_finally(n.clone()),
        // Hold for n steps, or hold up to (and including) an earlier cut.
        Ltl::BoundedGlobally(a, n) => {
            let ta = truncate(a, right);
            ta.clone()
                .bounded_globally(n.clone())
                .or(ta.clone().until(ta.and(r())))
        }
        Ltl::Until(a, b) => truncate(a, right).and(r().not()).until(truncate(b, right)),
        Ltl::Release(a, b) => {
            let (ta, tb) = (truncate(a, right), truncate(b, right));
            tb.clone()
                .until(tb.clone().and(ta.or(r())))
                .or(tb.globally())
        }
        // The stop may be witnessed up to the cut; with no stop by the cut,
        // the body must hold through it.
        Ltl::UntilExclWeak(a, b) => {
            let (ta, tb) = (truncate(a, right), truncate(b, right));
            ta.clone().and(r().not()).until(tb).or(r().release(ta))
        }
        Ltl::TruncBefore { .. } => truncate(&body.lower(), right),
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn is_bare(f: &Ltl) -> bool {
    matches!(
        f,
        Ltl::ProbHole | Ltl::State(StateFormula::True) | Ltl::State(StateFormula::Atom(Atom::Ident(_)))
    )
}

fn operand(f: &Ltl) -> String {
    if is_bare(f) {
        print_ltl(f)
    } else {
        format!("({})", print_ltl(f))
    }
}

fn print_ltl(f: &Ltl) -> String {
    match f {
        Ltl::State(sf) => sf.to_string(),
        Ltl::ProbHole => "PROBFORM".to_string(),
        Ltl::Not(a) => format!("! {}", operand(a)),
        Ltl::And(a, b) => format!("{} & {}", operand(a), operand(b)),
        Ltl::Or(a, b) => format!("{} | {}", operand(a), operand(b)),
        Ltl::Implies(a, b) => format!("{} => {}", operand(a), operand(b)),
        Ltl::Next(a) => format!("X {}", operand(a)),
        Ltl::Finally(a) => format!("F {}", operand(a)),
        Ltl::Globally(a) => format!("G {}", operand(a)),
        Ltl::Until(a, b) => format!("{} U {}", operand(a), operand(b)),
        Ltl::Release(a, b) => format!("{} R {}", operand(a), operand(b)),
        Ltl::BoundedFinally(a, n) => format!("F<={n} {}", operand(a)),
        Ltl::BoundedGlobally(a, n) => format!("G<={n} {}", operand(a)),
        Ltl::UntilExclWeak(a, b) => format!("{} W {}", operand(a), operand(b)),
        Ltl::TruncBefore { body, right } => {
            format!("trunc({}, {})", print_ltl(body), print_ltl(right))
        }
    }
}

impl std::fmt::Display for Ltl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", print_ltl(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    type Trace = Vec<BTreeSet<String>>;

    fn holds(sf: &StateFormula, state: &BTreeSet<String>) -> bool {
        match sf {
            StateFormula::True => true,
            StateFormula::Atom(Atom::Ident(name)) => state.contains(name),
            StateFormula::Not(a) => !holds(a, state),
            StateFormula::And(a, b) => holds(a, state) && holds(b, state),
            StateFormula::Or(a, b) => holds(a, state) || holds(b, state),
            StateFormula::Implies(a, b) => !holds(a, state) || holds(b, state),
            other => panic!("unsupported atom in trace evaluation: {other:?}"),
        }
    }

    /// LTL over a finite trace extended by stuttering its last state forever.
    fn eval(f: &Ltl, tr: &Trace, j: usize) -> bool {
        let last = tr.len() - 1;
        let j = j.min(last);
        match f {
            Ltl::State(sf) => holds(sf, &tr[j]),
            Ltl::Not(a) => !eval(a, tr, j),
            Ltl::And(a, b) => eval(a, tr, j) && eval(b, tr, j),
            Ltl::Or(a, b) => eval(a, tr, j) || eval(b, tr, j),
            Ltl::Implies(a, b) => !eval(a, tr, j) || eval(b, tr, j),
            Ltl::Next(a) => eval(a, tr, j + 1),
            Ltl::Finally(a) => (j..=last).any(|k| eval(a, tr, k)),
            Ltl::Globally(a) => (j..=last).all(|k| eval(a, tr, k)),
            Ltl::Until(a, b) => {
                (j..=last).any(|k| eval(b, tr, k) && (j..k).all(|i| eval(a, tr, i)))
            }
            Ltl::Release(a, b) => {
                !(j..=last).any(|k| !eval(b, tr, k) && (j..k).all(|i| !eval(a, tr, i)))
            }
            Ltl::BoundedFinally(a, Steps::Lit(n)) => {
                (j..=j + *n as usize).any(|k| eval(a, tr, k))
            }
            Ltl::BoundedGlobally(a, Steps::Lit(n)) => {
                (j..=j + *n as usize).all(|k| eval(a, tr, k))
            }
            other => panic!("unsupported formula in trace evaluation: {other}"),
        }
    }

    /// First position `>= j` where the event fires, on the stuttered trace.
    fn first_fire(event: &Ltl, tr: &Trace, j: usize) -> Option<usize> {
        (j..tr.len()).find(|&k| eval(event, tr, k))
    }

    fn res() -> Ltl {
        Ltl::atom("res")
    }

    fn stop() -> Ltl {
        Ltl::atom("stop")
    }

    fn rr() -> Ltl {
        Ltl::atom("r")
    }

    fn lowered(body: Ltl, right: Ltl) -> Ltl {
        body.trunc_before(right).lower()
    }

    // -- frozen shapes -------------------------------------------------------

    #[test]
    fn truncated_timing_shapes_are_stable() {
        let n = Steps::Lit(10);
        let cases: Vec<(Ltl, &str)> = vec![
            (res(), "res"),
            (res().next(), "r | ((X res) & (! r))"),
            (res().globally(), "r R res"),
            (res().finally(), "(! r) U res"),
            (res().not().globally(), "r R (! res)"),
            (res().bounded_finally(n.clone()), "F<=10 (r | res)"),
            (
                res().bounded_globally(Steps::Lit(5)),
                "(G<=5 res) | (res U (res & r))",
            ),
            (
                res().weak_until(stop()),
                "((res & (! r)) U stop) | (r R res)",
            ),
            (
                res().release(stop().not()),
                "((! stop) U ((! stop) & (res | r))) | (G (! stop))",
            ),
            (
                res()
                    .not()
                    .bounded_globally(Steps::Lit(3))
                    .and(res().bounded_finally(Steps::Lit(4))),
                "((G<=3 (! res)) | ((! res) U ((! res) & r))) & (F<=4 (r | res))",
            ),
        ];
        for (body, expected) in cases {
            assert_eq!(lowered(body, rr()).to_string(), expected);
        }
    }

    #[test]
    fn unscoped_lowering_shapes_are_stable() {
        assert_eq!(
            res().weak_until(stop()).lower().to_string(),
            "(res U stop) | (G res)"
        );
        assert_eq!(res().release(stop().not()).lower().to_string(), "res R (! stop)");
        assert_eq!(res().finally().lower().to_string(), "F res");
    }

    #[test]
    fn lowering_produces_core_formulas() {
        let bodies = [
            res().next(),
            res().weak_until(stop()),
            res().release(stop().not()),
            res().bounded_globally(Steps::Lit(2)),
        ];
        for body in bodies {
            assert!(body.clone().trunc_before(rr()).lower().is_core());
            assert!(body.lower().is_core());
        }
    }

    #[test]
    fn hole_substitution_reaches_all_positions() {
        let f = Ltl::ProbHole.globally().and(Ltl::ProbHole.or(res()));
        let sub = f.substitute_hole(&stop());
        assert_eq!(sub.to_string(), "(G stop) & (stop | res)");
    }

    #[test]
    fn simplify_rules_and_idempotence() {
        let t = Ltl::truth;
        assert_eq!(res().not().not().simplify(), res());
        assert_eq!(t().and(res()).simplify(), res());
        assert_eq!(res().and(t()).simplify(), res());
        assert_eq!(t().not().or(res()).simplify(), res());
        let nested = t().and(res().not().not()).globally();
        let once = nested.simplify();
        assert_eq!(once, once.simplify());
        assert_eq!(once.to_string(), "G res");
    }

    #[test]
    fn weak_until_differs_from_optional_variant() {
        // With no truncation event in the trace, the weak form still demands
        // the body; a variant that treats "no cut" as discharging everything
        // would accept any trace.
        let weak = lowered(res().globally(), rr());
        let optional = rr().not().globally().or(weak.clone());
        let no_res: Trace = vec![BTreeSet::new(), BTreeSet::new()];
        assert!(!eval(&weak, &no_res, 0));
        assert!(eval(&optional, &no_res, 0));
    }

    #[test]
    fn release_form_equals_until_form_for_global_truncation() {
        // r R body  ==  (G body) | (body U (body & r)) on stuttered traces.
        for bits in 0u16..(1 << 8) {
            let tr: Trace = (0..4)
                .map(|i| {
                    let mut s = BTreeSet::new();
                    if bits & (1 << (2 * i)) != 0 {
                        s.insert("res".to_string());
                    }
                    if bits & (1 << (2 * i + 1)) != 0 {
                        s.insert("r".to_string());
                    }
                    s
                })
                .collect();
            let release = rr().release(res());
            let until_form = res().globally().or(res().until(res().and(rr())));
            for j in 0..tr.len() {
                assert_eq!(eval(&release, &tr, j), eval(&until_form, &tr, j), "bits {bits} at {j}");
            }
        }
    }

    // -- windowed reference semantics ---------------------------------------

    /// What each timing obligation means on the window starting at `j` and
    /// cut (inclusively) at the first event position `b`, on a trace whose
    /// last state stutters forever.
    fn direct_window(timing: &Timing, tr: &Trace, j: usize, b: Option<usize>) -> bool {
        let last = tr.len() - 1;
        let res = |k: usize| tr[k.min(last)].contains("res");
        let stp = |k: usize| tr[k.min(last)].contains("stop");
        // Highest position the window reaches on the visible trace.
        let cap = |hi: Option<usize>| match hi {
            Some(h) => h.min(last),
            None => last,
        };
        match timing {
            Timing::Immediately => res(j),
            Timing::Next => match b {
                Some(b) if b == j => true,
                _ => res(j + 1),
            },
            Timing::Always => (j..=cap(b)).all(res),
            Timing::Eventually => (j..=cap(b)).any(res),
            Timing::Never => !(j..=cap(b)).any(res),
            Timing::Within(n) => {
                (j..=j + n).any(res) || b.is_some_and(|b| b <= j + n)
            }
            Timing::For(n) => {
                let hi = match b {
                    Some(b) => b.min(j + n),
                    None => j + n,
                };
                (j..=hi).all(res)
            }
            Timing::After(n) => {
                direct_window(&Timing::For(*n), &negate_res(tr), j, b)
                    && direct_window(&Timing::Within(*n + 1), tr, j, b)
            }
            Timing::Until => {
                let s = (j..tr.len()).find(|&k| stp(k));
                match (s, b) {
                    (Some(s), Some(b)) if s <= b => (j..s).all(res),
                    (Some(s), None) => (j..s).all(res),
                    (_, Some(b)) => (j..=b).all(res),
                    (None, None) => (j..=last).all(res),
                }
            }
            Timing::Before => {
                if stp(j) {
                    return false;
                }
                let witness = (j..=cap(b)).any(|k| {
                    (res(k) || b == Some(k)) && (j..=k).all(|i| !stp(i))
                });
                witness || (j..=last).all(|i| !stp(i))
            }
        }
    }

    fn negate_res(tr: &Trace) -> Trace {
        tr.iter()
            .map(|s| {
                let mut out = s.clone();
                if !out.remove("res") {
                    out.insert("res".to_string());
                }
                out
            })
            .collect()
    }

    #[derive(Debug, Clone)]
    enum Timing {
        Immediately,
        Next,
        Always,
        Eventually,
        Never,
        Within(usize),
        For(usize),
        After(usize),
        Until,
        Before,
    }

    fn timing_body(timing: &Timing) -> Ltl {
        match timing {
            Timing::Immediately => res(),
            Timing::Next => res().next(),
            Timing::Always => res().globally(),
            Timing::Eventually => res().finally(),
            Timing::Never => res().not().globally(),
            Timing::Within(n) => res().bounded_finally(Steps::Lit(*n as u64)),
            Timing::For(n) => res().bounded_globally(Steps::Lit(*n as u64)),
            Timing::After(n) => res()
                .not()
                .bounded_globally(Steps::Lit(*n as u64))
                .and(res().bounded_finally(Steps::Lit(*n as u64 + 1))),
            Timing::Until => res().weak_until(stop()),
            Timing::Before => res().release(stop().not()),
        }
    }

    fn all_timings() -> Vec<Timing> {
        vec![
            Timing::Immediately,
            Timing::Next,
            Timing::Always,
            Timing::Eventually,
            Timing::Never,
            Timing::Within(0),
            Timing::Within(2),
            Timing::For(0),
            Timing::For(2),
            Timing::After(1),
            Timing::Until,
            Timing::Before,
        ]
    }

    fn trace_strategy() -> impl Strategy<Value = Trace> {
        proptest::collection::vec(0u8..16, 1..9).prop_map(|cells| {
            cells
                .into_iter()
                .map(|bits| {
                    let mut s = BTreeSet::new();
                    if bits & 1 != 0 {
                        s.insert("res".to_string());
                    }
                    if bits & 2 != 0 {
                        s.insert("stop".to_string());
                    }
                    if bits & 4 != 0 {
                        s.insert("r".to_string());
                    }
                    if bits & 8 != 0 {
                        s.insert("a".to_string());
                    }
                    s
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn truncated_formulas_match_window_semantics(tr in trace_strategy(), j in 0usize..8) {
            let j = j % tr.len();
            for timing in all_timings() {
                let formula = lowered(timing_body(&timing), rr());
                let b = first_fire(&rr(), &tr, j);
                prop_assert_eq!(
                    eval(&formula, &tr, j),
                    direct_window(&timing, &tr, j, b),
                    "timing {:?}, trace {:?}, start {}", timing, &tr, j
                );
            }
        }

        #[test]
        fn truncation_by_event_matches_window_semantics(tr in trace_strategy(), j in 0usize..8) {
            // The cut event is a step pattern (a & X !a), not a plain atom.
            let j = j % tr.len();
            let event = Ltl::atom("a").and(Ltl::atom("a").not().next());
            for timing in [Timing::Next, Timing::Always, Timing::Eventually, Timing::Until] {
                let formula = lowered(timing_body(&timing), event.clone());
                let b = first_fire(&event, &tr, j);
                prop_assert_eq!(
                    eval(&formula, &tr, j),
                    direct_window(&timing, &tr, j, b),
                    "timing {:?}, trace {:?}, start {}", timing, &tr, j
                );
            }
        }

        #[test]
        fn vacuous_truncation_is_identity(tr in trace_strategy(), j in 0usize..8) {
            let j = j % tr.len();
            let never = Ltl::atom("zz");
            for timing in all_timings() {
                let body = timing_body(&timing);
                prop_assert_eq!(
                    eval(&lowered(body.clone(), never.clone()), &tr, j),
                    eval(&body.lower(), &tr, j),
                    "timing {:?}", timing
                );
            }
        }
    }
}
