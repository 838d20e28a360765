//! Exact evaluation of probabilistic formulas over the generated chains.
//!
//! The chains produced by [`crate::dtmc`] are finite trees of branching
//! decisions whose leaves are absorbing, so every probability query can be
//! answered exactly by enumerating the maximal paths from a state and summing
//! the mass of those whose trace satisfies the path body.  Traces are read
//! with terminal stutter: positions past the final state repeat it forever.

use std::collections::BTreeMap;

use crate::dtmc::Dtmc;
use crate::pctl::{Atom, PathFormula, ProbBound, StateFormula, Steps};

/// Per-state truth assignment for the atoms a formula may mention.
#[derive(Debug, Clone, Default)]
pub struct Valuation {
    atoms: BTreeMap<String, Vec<bool>>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds the chain's own label names (`m`, `c`, `sc`, `r`) as atoms.
    pub fn standard(model: &Dtmc) -> Self {
        let mut v = Self::new();
        for name in crate::dtmc::LABEL_NAMES {
            v.bind_label(model, name, name);
        }
        v
    }

    /// Binds an atom spelling to one of the chain's label names.
    pub fn bind_label(&mut self, model: &Dtmc, atom: &str, label: &str) {
        let column = model
            .states
            .iter()
            .map(|s| s.labels.get(label).expect("known label name"))
            .collect();
        self.atoms.insert(atom.to_string(), column);
    }

    /// Binds an atom spelling to an explicit per-state truth column.
    pub fn bind_column(&mut self, atom: &str, column: Vec<bool>) {
        self.atoms.insert(atom.to_string(), column);
    }

    fn truth(&self, atom: &Atom, state: usize) -> bool {
        let key = atom.to_string();
        let column = self
            .atoms
            .get(&key)
            .unwrap_or_else(|| panic!("no valuation for atom `{key}`"));
        column[state]
    }
}

/// Sums are rounded here before any comparison against a bound, so that
/// accumulated floating-point noise cannot flip a verdict at the boundary.
pub fn round12(p: f64) -> f64 {
    (p * 1e12).round() / 1e12
}

fn steps_value(steps: &Steps) -> u64 {
    match steps {
        Steps::Lit(n) => *n,
        Steps::Placeholder { .. } => panic!("cannot evaluate a step placeholder"),
    }
}

/// Probability mass of the maximal paths from `state` whose trace satisfies
/// `body`, rounded to 12 decimals.
pub fn prob_from(model: &Dtmc, val: &Valuation, body: &PathFormula, state: usize) -> f64 {
    let total: f64 = model
        .enumerate_paths_from(state)
        .iter()
        .filter(|p| eval_path(model, val, body, &p.states, 0))
        .map(|p| p.prob)
        .sum();
    round12(total)
}

/// Evaluates a state formula at one state of the chain.
pub fn eval_state(model: &Dtmc, val: &Valuation, f: &StateFormula, state: usize) -> bool {
    match f {
        StateFormula::True => true,
        StateFormula::Atom(a) => val.truth(a, state),
        StateFormula::Not(inner) => !eval_state(model, val, inner, state),
        StateFormula::And(a, b) => {
            eval_state(model, val, a, state) && eval_state(model, val, b, state)
        }
        StateFormula::Or(a, b) => {
            eval_state(model, val, a, state) || eval_state(model, val, b, state)
        }
        StateFormula::Implies(a, b) => {
            !eval_state(model, val, a, state) || eval_state(model, val, b, state)
        }
        StateFormula::Prob { bound, body } => {
            let (op, value) = match bound {
                ProbBound::Lit { op, value } => (*op, *value),
                ProbBound::Placeholder => panic!("cannot evaluate a probability placeholder"),
            };
            op.compare(prob_from(model, val, body, state), value)
        }
    }
}

/// Evaluates a state formula at the chain's initial state.
pub fn eval_model(model: &Dtmc, val: &Valuation, f: &StateFormula) -> bool {
    eval_state(model, val, f, 0)
}

/// Evaluates a path formula at position `j` of a maximal path's trace.
/// Reads past the end of the path see its final (absorbing) state.
fn eval_path(model: &Dtmc, val: &Valuation, f: &PathFormula, trace: &[usize], j: usize) -> bool {
    let last = trace.len() - 1;
    let at = |k: usize| trace[k.min(last)];
    match f {
        PathFormula::State(sf) => eval_state(model, val, sf, at(j)),
        PathFormula::Not(a) => !eval_path(model, val, a, trace, j),
        PathFormula::And(a, b) => {
            eval_path(model, val, a, trace, j) && eval_path(model, val, b, trace, j)
        }
        PathFormula::Or(a, b) => {
            eval_path(model, val, a, trace, j) || eval_path(model, val, b, trace, j)
        }
        PathFormula::Implies(a, b) => {
            !eval_path(model, val, a, trace, j) || eval_path(model, val, b, trace, j)
        }
        PathFormula::Next(a) => eval_path(model, val, a, trace, j + 1),
        // Positions at or past `last` all see the same absorbing state, so
        // unbounded runs over the stuttering tail settle by `last`.
        PathFormula::Finally(a) => (j..=j.max(last)).any(|k| eval_path(model, val, a, trace, k)),
        PathFormula::Globally(a) => (j..=j.max(last)).all(|k| eval_path(model, val, a, trace, k)),
        PathFormula::Until(a, b) => (j..=j.max(last)).any(|k| {
            eval_path(model, val, b, trace, k)
                && (j..k).all(|i| eval_path(model, val, a, trace, i))
        }),
        PathFormula::Release(a, b) => !eval_path(
            model,
            val,
            &PathFormula::Until(
                Box::new(PathFormula::Not(a.clone())),
                Box::new(PathFormula::Not(b.clone())),
            ),
            trace,
            j,
        ),
        PathFormula::BoundedFinally(a, n) => {
            let n = steps_value(n) as usize;
            (j..=j + n).any(|k| eval_path(model, val, a, trace, k))
        }
        PathFormula::BoundedGlobally(a, n) => {
            let n = steps_value(n) as usize;
            (j..=j + n).all(|k| eval_path(model, val, a, trace, k))
        }
        PathFormula::BoundedUntil(a, b, n) => {
            let n = steps_value(n) as usize;
            (j..=j + n).any(|k| {
                eval_path(model, val, b, trace, k)
                    && (j..k).all(|i| eval_path(model, val, a, trace, i))
            })
        }
    }
}
