//! Independent verdict computation for generated chains.
//!
//! Everything here works directly on label traces and interval bookkeeping —
//! deliberately sharing no code with the formula compiler or the formula
//! evaluator — so that agreement between the two routes is meaningful
//! evidence.  Two verdict styles are provided:
//!
//! * [`check_probability`] follows the classic two-stage recipe: a
//!   qualitative per-trace filter ([`classic_eval`]) discards paths that the
//!   probability-erased requirement already rejects, then each retained path
//!   is classified by the probability of the sub-path between a trigger and
//!   its witness position ([`right_index`]).
//! * [`expected_verdict`] resolves each triggered obligation as a measure
//!   over the branching futures of the trigger state, mirroring what a
//!   nested probability operator denotes.  This is the reference the
//!   validation campaign compares the evaluator against; divergences between
//!   the two styles are themselves data and are reported, never patched over.

use crate::dtmc::{Dtmc, Path};
use crate::fretish::{ConditionKey, ScopeKey, TemplateKey, TimingKey};
use crate::pctl::BoundOp;
use std::collections::BTreeMap;

/// The four label columns of one maximal path, read positionally.  The final
/// position repeats forever (the underlying state is absorbing).
#[derive(Debug, Clone)]
pub struct TraceLabels {
    pub m: Vec<bool>,
    pub c: Vec<bool>,
    pub sc: Vec<bool>,
    pub r: Vec<bool>,
}

impl TraceLabels {
    pub fn from_path(model: &Dtmc, path: &Path) -> Self {
        let mut t = TraceLabels { m: vec![], c: vec![], sc: vec![], r: vec![] };
        for labels in model.trace(path) {
            t.m.push(labels.mode);
            t.c.push(labels.cond);
            t.sc.push(labels.stop);
            t.r.push(labels.res);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    fn last(&self) -> usize {
        self.len() - 1
    }
}

/// A contiguous run of positions inside which a scope imposes obligations.
/// `end` is the position where the scope's cut event fires (obligations are
/// truncated there); `None` means the scope stays open forever.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub end: Option<usize>,
}

/// The event that truncates obligations for a given scope: leaving the mode
/// (`m` now, not next) or entering it (not `m` now, `m` next).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CutEvent {
    None,
    ModeExit,
    ModeEntry,
}

fn cut_event(scope: ScopeKey) -> CutEvent {
    match scope {
        ScopeKey::Null | ScopeKey::After | ScopeKey::OnlyBefore => CutEvent::None,
        ScopeKey::In | ScopeKey::OnlyAfter => CutEvent::ModeExit,
        ScopeKey::NotIn | ScopeKey::OnlyIn | ScopeKey::Before => CutEvent::ModeEntry,
    }
}

/// Whether the scope checks the negated obligation over the complementary
/// region ("only …" scopes).
fn negates_obligation(scope: ScopeKey) -> bool {
    matches!(
        scope,
        ScopeKey::OnlyIn | ScopeKey::OnlyBefore | ScopeKey::OnlyAfter
    )
}

/// First position `k >= from` where the event fires.  Events compare a
/// position with its successor, so nothing fires at or past the final
/// position (the trace stutters there).
fn first_fire(event: CutEvent, m: &[bool], from: usize) -> Option<usize> {
    let last = m.len() - 1;
    (from..last).find(|&k| match event {
        CutEvent::None => false,
        CutEvent::ModeExit => m[k] && !m[k + 1],
        CutEvent::ModeEntry => !m[k] && m[k + 1],
    })
}

/// Maximal runs of `true` in `sel`.  A run that reaches the final position
/// never sees its closing event (the trace stutters), so its window stays
/// open; a run `[a..=b]` with `b` before the end closes at `b`.
fn runs(sel: &[bool]) -> Vec<Window> {
    let last = sel.len() - 1;
    let mut windows = Vec::new();
    let mut k = 0;
    while k <= last {
        if sel[k] {
            let start = k;
            while k < last && sel[k + 1] {
                k += 1;
            }
            let end = if k == last { None } else { Some(k) };
            windows.push(Window { start, end });
        }
        k += 1;
    }
    windows
}

/// The obligation windows a scope carves out of one trace.  Windows whose
/// cut event fires at position 0 of the trace are waived (the formula's
/// initial-state branch discharges on the event itself) and not returned.
pub fn scope_windows(scope: ScopeKey, tr: &TraceLabels) -> Vec<Window> {
    let not_m: Vec<bool> = tr.m.iter().map(|&b| !b).collect();
    match scope {
        ScopeKey::Null => vec![Window { start: 0, end: None }],
        ScopeKey::In => drop_initial_point(runs(&tr.m)),
        ScopeKey::NotIn | ScopeKey::OnlyIn => drop_initial_point(runs(&not_m)),
        ScopeKey::Before => {
            if tr.m[0] {
                return vec![];
            }
            match first_fire(CutEvent::ModeEntry, &tr.m, 0) {
                Some(0) => vec![],
                end => vec![Window { start: 0, end }],
            }
        }
        ScopeKey::After => match first_fire(CutEvent::ModeExit, &tr.m, 0) {
            Some(f) => vec![Window { start: f + 1, end: None }],
            None => vec![],
        },
        ScopeKey::OnlyBefore => {
            if tr.m[0] {
                vec![Window { start: 0, end: None }]
            } else {
                match first_fire(CutEvent::ModeEntry, &tr.m, 0) {
                    Some(f) => vec![Window { start: f + 1, end: None }],
                    None => vec![],
                }
            }
        }
        ScopeKey::OnlyAfter => match first_fire(CutEvent::ModeExit, &tr.m, 0) {
            Some(0) => vec![],
            end => vec![Window { start: 0, end }],
        },
    }
}

fn drop_initial_point(windows: Vec<Window>) -> Vec<Window> {
    windows
        .into_iter()
        .filter(|w| !(w.start == 0 && w.end == Some(0)))
        .collect()
}

/// Trigger positions inside a window: where the condition starts an
/// obligation.  With no condition only the window start triggers; a holding
/// condition triggers at every position where it is true; a regular
/// condition triggers where it becomes true (including a window start where
/// it already holds).
pub fn trigger_indices(condition: ConditionKey, c: &[bool], window: &Window) -> Vec<usize> {
    let last = c.len() - 1;
    let hi = window.end.unwrap_or(last).min(last);
    match condition {
        ConditionKey::Null => vec![window.start],
        ConditionKey::Holding => (window.start..=hi).filter(|&l| c[l]).collect(),
        ConditionKey::Regular => (window.start..=hi)
            .filter(|&l| c[l] && (l == window.start || !c[l - 1]))
            .collect(),
    }
}

/// Does the timing obligation triggered at `l` hold along this trace, given
/// that a cut event fires at `cut` (if anywhere)?  Obligations run from the
/// trigger to the cut; at the cut position itself the weak forms discharge.
/// Reads past the final position see the final state.
fn sat_timing(
    timing: TimingKey,
    r: &[bool],
    sc: &[bool],
    l: usize,
    cut: Option<usize>,
    n: u64,
) -> bool {
    let last = r.len() - 1;
    let n = n as usize;
    let res = |k: usize| r[k.min(last)];
    let stop = |k: usize| sc[k.min(last)];
    // Upper position for obligations bounded by the cut alone.
    let cut_hi = cut.unwrap_or(last).min(last);
    match timing {
        TimingKey::Immediately => res(l),
        TimingKey::Next => cut == Some(l) || res(l + 1),
        TimingKey::Always => (l..=cut_hi).all(res),
        TimingKey::Never => (l..=cut_hi).all(|k| !res(k)),
        TimingKey::Eventually => (l..=cut_hi).any(res),
        TimingKey::Within => {
            let deadline_cut = matches!(cut, Some(b) if b <= l + n);
            deadline_cut || (l..=(l + n).min(last)).any(res)
        }
        TimingKey::For => {
            let hi = cut.unwrap_or(usize::MAX).min(l + n).min(last);
            (l..=hi).all(res)
        }
        TimingKey::After => {
            let quiet_hi = cut.unwrap_or(usize::MAX).min(l + n).min(last);
            let quiet = (l..=quiet_hi).all(|k| !res(k));
            let deadline_cut = matches!(cut, Some(b) if b <= l + n + 1);
            let arrives = deadline_cut || (l..=(l + n + 1).min(last)).any(res);
            quiet && arrives
        }
        TimingKey::Until => {
            let s = (l..=last).find(|&k| stop(k));
            match (s, cut) {
                (Some(s), Some(b)) if b < s => (l..=b).all(res),
                (Some(s), _) => (l..s).all(res),
                (None, Some(b)) => (l..=b).all(res),
                (None, None) => (l..=last).all(res),
            }
        }
        TimingKey::Before => {
            let witnessed = (l..=cut_hi).any(|k| {
                (res(k) || cut == Some(k)) && (l..=k).all(|i| !stop(i))
            });
            witnessed || (l..=last).all(|k| !stop(k))
        }
    }
}

/// Qualitative per-trace check of a requirement with its probability erased:
/// every triggered obligation in every scope window must hold on the trace
/// itself ("only …" scopes require the negated obligation over the
/// complementary region).
pub fn classic_eval(tr: &TraceLabels, key: &TemplateKey, n: u64) -> bool {
    let event = cut_event(key.scope);
    let negate = negates_obligation(key.scope);
    for window in scope_windows(key.scope, tr) {
        for l in trigger_indices(key.condition, &tr.c, &window) {
            let cut = first_fire(event, &tr.m, l);
            let sat = sat_timing(key.timing, &tr.r, &tr.sc, l, cut, n);
            if sat == negate {
                return false;
            }
        }
    }
    true
}

/// All trigger positions of a requirement on one trace, in increasing order.
pub fn start_indices(key: &TemplateKey, tr: &TraceLabels) -> Vec<usize> {
    scope_windows(key.scope, tr)
        .iter()
        .flat_map(|w| trigger_indices(key.condition, &tr.c, w))
        .collect()
}

/// Returned when a timing form has no witness position on the trace: the
/// qualitative filter is expected to have discarded such paths already.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoWitness;

/// The position where the obligation triggered at `l` is settled on this
/// trace: the witness for reachability-style timings, the deadline for
/// bounded ones, the end of the trace for invariants.
pub fn right_index(
    tr: &TraceLabels,
    l: usize,
    timing: TimingKey,
    n: u64,
) -> Result<usize, NoWitness> {
    let last = tr.last();
    let n = n as usize;
    match timing {
        TimingKey::Immediately => Ok(l),
        TimingKey::Next => Ok((l + 1).min(last)),
        TimingKey::Always | TimingKey::Never => Ok(last),
        TimingKey::Eventually | TimingKey::Before => {
            (l..=last).find(|&k| tr.r[k]).ok_or(NoWitness)
        }
        TimingKey::Until => match (l..=last).find(|&k| tr.sc[k]) {
            Some(s) if s == l => Err(NoWitness),
            Some(s) => Ok(s - 1),
            None => Ok(last),
        },
        TimingKey::For => Ok((l + n).min(last)),
        TimingKey::Within => (l..=(l + n).min(last)).find(|&k| tr.r[k]).ok_or(NoWitness),
        TimingKey::After => Ok((l + n + 1).min(last)),
    }
}

/// Probability of the sub-path of `path` from position `l` to position `e`:
/// the product of the transition probabilities taken at positions
/// `l+1..=e`.  An empty range has probability 1.
pub fn subpath_probability(model: &Dtmc, path: &Path, l: usize, e: usize) -> f64 {
    (l + 1..=e)
        .map(|i| {
            let from = path.states[i - 1];
            let to = path.states[i];
            model.states[from]
                .transitions
                .iter()
                .find(|(t, _)| *t == to)
                .expect("path follows transitions")
                .1
        })
        .product()
}

/// Path-level classification of one probability check.  The three index
/// sets partition the model's maximal paths (indices into
/// [`Dtmc::enumerate_paths`] order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub expected: bool,
    pub good_paths: Vec<usize>,
    pub bad_paths: Vec<usize>,
    pub discarded: Vec<usize>,
}

fn effective_bound(key: &TemplateKey, bound: Option<(BoundOp, f64)>) -> (BoundOp, f64) {
    match key.probability {
        crate::fretish::ProbabilityKey::Null => (BoundOp::Ge, 1.0),
        crate::fretish::ProbabilityKey::Bound => {
            bound.expect("a bounded key needs an explicit bound")
        }
    }
}

/// Two-stage verdict: paths failing the qualitative filter are discarded;
/// each retained path is good only if the sub-path probability from every
/// trigger to its settling position meets the bound.  The overall
/// expectation is that no retained path is bad.
pub fn check_probability(
    model: &Dtmc,
    key: &TemplateKey,
    bound: Option<(BoundOp, f64)>,
    n: u64,
) -> OracleVerdict {
    let (op, value) = effective_bound(key, bound);
    let mut verdict = OracleVerdict {
        expected: true,
        good_paths: vec![],
        bad_paths: vec![],
        discarded: vec![],
    };
    for (idx, path) in model.enumerate_paths().iter().enumerate() {
        let tr = TraceLabels::from_path(model, path);
        if !classic_eval(&tr, key, n) {
            verdict.discarded.push(idx);
            continue;
        }
        let mut all_good = true;
        for l in start_indices(key, &tr) {
            match right_index(&tr, l, key.timing, n) {
                // The qualitative filter accepted this path, so a missing
                // witness means the obligation discharged without one; such
                // a start imposes no probability demand.
                Err(NoWitness) => {}
                Ok(e) => {
                    if !op.compare(subpath_probability(model, path, l, e), value) {
                        all_good = false;
                    }
                }
            }
        }
        if all_good {
            verdict.good_paths.push(idx);
        } else {
            verdict.bad_paths.push(idx);
        }
    }
    verdict.expected = verdict.bad_paths.is_empty();
    verdict
}

/// Measure-style verdict: every triggered obligation, on every maximal
/// path, must hold with sufficient probability over the branching futures
/// of its trigger state.  Obligations on a future are truncated at the
/// first firing of the scope's cut event along that future.
pub fn expected_verdict(
    model: &Dtmc,
    key: &TemplateKey,
    bound: Option<(BoundOp, f64)>,
    n: u64,
) -> bool {
    let (op, value) = effective_bound(key, bound);
    let event = cut_event(key.scope);
    let negate = negates_obligation(key.scope);
    let mut per_state: BTreeMap<usize, bool> = BTreeMap::new();
    for path in model.enumerate_paths() {
        let tr = TraceLabels::from_path(model, &path);
        for window in scope_windows(key.scope, &tr) {
            for l in trigger_indices(key.condition, &tr.c, &window) {
                let state = path.states[l];
                let ok = *per_state.entry(state).or_insert_with(|| {
                    let mut mass = 0.0;
                    for suffix in model.enumerate_paths_from(state) {
                        let st = TraceLabels::from_path(model, &suffix);
                        let cut = first_fire(event, &st.m, 0);
                        let sat = sat_timing(key.timing, &st.r, &st.sc, 0, cut, n);
                        if sat != negate {
                            mass += suffix.prob;
                        }
                    }
                    // Quantize the sum the same way verdict comparisons are
                    // quantized everywhere, so float noise in the addition
                    // order cannot flip a boundary comparison.
                    op.compare((mass * 1e12).round() / 1e12, value)
                });
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtmc::{generate, GenConfig, LabelIntervals};
    use crate::fretish::TemplateKey;
    use proptest::prelude::*;

    fn key(spec: &str) -> TemplateKey {
        spec.parse().expect("valid key")
    }

    fn coin(p: f64) -> Dtmc {
        let intervals = LabelIntervals {
            mode: vec![],
            cond: vec![],
            stop: vec![],
            res: vec![(1, 1)],
        };
        Dtmc::build(1, &intervals, &[p])
    }

    fn staircase() -> Dtmc {
        let intervals = LabelIntervals {
            mode: vec![(0, 1), (3, 6)],
            cond: vec![(3, 5)],
            stop: vec![],
            res: vec![(4, 6)],
        };
        Dtmc::build(6, &intervals, &[0.37, 0.61, 0.83])
    }

    fn trace(m: &[u8], c: &[u8], sc: &[u8], r: &[u8]) -> TraceLabels {
        let b = |xs: &[u8]| xs.iter().map(|&x| x != 0).collect::<Vec<bool>>();
        TraceLabels { m: b(m), c: b(c), sc: b(sc), r: b(r) }
    }

    #[test]
    fn settling_positions_follow_the_timing_form() {
        let z = [0u8; 6];
        let tr = trace(&z, &z, &[0, 0, 0, 0, 1, 0], &[0, 0, 0, 1, 0, 0]);
        assert_eq!(right_index(&tr, 2, TimingKey::Next, 0), Ok(3));
        assert_eq!(right_index(&tr, 4, TimingKey::Immediately, 0), Ok(4));
        assert_eq!(right_index(&tr, 1, TimingKey::Within, 3), Ok(3));
        assert_eq!(right_index(&tr, 0, TimingKey::Always, 0), Ok(5));
        assert_eq!(right_index(&tr, 2, TimingKey::Never, 7), Ok(5));
        assert_eq!(right_index(&tr, 0, TimingKey::Eventually, 0), Ok(3));
        assert_eq!(right_index(&tr, 4, TimingKey::Eventually, 0), Err(NoWitness));
        assert_eq!(right_index(&tr, 1, TimingKey::Until, 0), Ok(3));
        assert_eq!(right_index(&tr, 4, TimingKey::Until, 0), Err(NoWitness));
        assert_eq!(right_index(&tr, 5, TimingKey::Until, 0), Ok(5));
        assert_eq!(right_index(&tr, 1, TimingKey::For, 3), Ok(4));
        assert_eq!(right_index(&tr, 1, TimingKey::For, 30), Ok(5));
        assert_eq!(right_index(&tr, 1, TimingKey::After, 2), Ok(4));
        assert_eq!(right_index(&tr, 4, TimingKey::Within, 1), Err(NoWitness));
        assert_eq!(right_index(&tr, 3, TimingKey::Within, 0), Ok(3));
    }

    #[test]
    fn qualitative_filter_on_simple_reachability() {
        let z = [0u8; 5];
        let with_r = trace(&z, &z, &z, &[0, 0, 0, 1, 0]);
        let without_r = trace(&z, &z, &z, &z);
        let k = key("null,null,null,eventually");
        assert!(classic_eval(&with_r, &k, 0));
        assert!(!classic_eval(&without_r, &k, 0));
        let never = key("null,null,null,never");
        assert!(!classic_eval(&with_r, &never, 0));
        assert!(classic_eval(&without_r, &never, 0));
    }

    #[test]
    fn qualitative_filter_tracks_mode_windows_per_trace() {
        let m = staircase();
        let paths = m.enumerate_paths();
        assert_eq!(paths.len(), 4);
        // First path stops at the level-4 terminal: the mode re-opens at
        // position 3 and the holding condition is frozen true there, but r
        // stays false, so `next` obligations fail.
        let early = TraceLabels::from_path(&m, &paths[0]);
        // Last path runs the full spine: every next-step obligation lands on
        // an r position.
        let spine = TraceLabels::from_path(&m, &paths[3]);
        let k = key("in,holding,null,next");
        assert!(!classic_eval(&early, &k, 0));
        assert!(classic_eval(&spine, &k, 0));
    }

    #[test]
    fn two_stage_verdict_classifies_paths_by_subpath_mass() {
        let m = coin(0.95);
        let k = key("null,null,bound,eventually");
        let v = check_probability(&m, &k, Some((BoundOp::Ge, 0.9)), 0);
        assert!(v.expected);
        assert_eq!(v.discarded, vec![0]);
        assert_eq!(v.good_paths, vec![1]);
        assert!(v.bad_paths.is_empty());

        let v = check_probability(&m, &k, Some((BoundOp::Ge, 0.99)), 0);
        assert!(!v.expected);
        assert_eq!(v.bad_paths, vec![1]);
        assert_eq!(v.discarded, vec![0]);

        // A vacuous bound holds whenever some path survives the filter.
        let v = check_probability(&m, &k, Some((BoundOp::Ge, 0.0)), 0);
        assert!(v.expected);
    }

    #[test]
    fn subpath_mass_is_a_prefix_ratio() {
        let m = staircase();
        for path in m.enumerate_paths() {
            let prefix = |k: usize| subpath_probability(&m, &path, 0, k);
            let last = path.states.len() - 1;
            for l in 0..=last {
                for e in l..=last {
                    let direct = subpath_probability(&m, &path, l, e);
                    let ratio = prefix(e) / prefix(l);
                    assert!((direct - ratio).abs() < 1e-12);
                }
            }
            assert!((prefix(last) - path.prob).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_verdict_on_hand_checked_chains() {
        let m = staircase();
        // Triggers sit at the mode re-entry states; the branch masses toward
        // an r-successor are 0.37, 0.61 and 0.83, and the frozen level-4
        // terminal keeps a zero-mass obligation alive.
        let k = key("in,holding,bound,next");
        assert!(!expected_verdict(&m, &k, Some((BoundOp::Gt, 0.25)), 0));
        assert!(expected_verdict(&m, &k, Some((BoundOp::Ge, 0.0)), 0));

        let reach = key("null,null,bound,eventually");
        assert!(expected_verdict(&m, &reach, Some((BoundOp::Ge, 0.37)), 0));
        assert!(!expected_verdict(&m, &reach, Some((BoundOp::Gt, 0.37)), 0));

        let c = coin(0.95);
        assert!(expected_verdict(&c, &reach, Some((BoundOp::Ge, 0.9)), 0));
        assert!(!expected_verdict(&c, &reach, Some((BoundOp::Ge, 0.99)), 0));
    }

    #[test]
    fn windows_respect_scope_shapes() {
        let tr = trace(
            &[1, 1, 0, 1, 1, 1],
            &[0; 6],
            &[0; 6],
            &[0; 6],
        );
        assert_eq!(
            scope_windows(ScopeKey::In, &tr),
            vec![
                Window { start: 0, end: Some(1) },
                Window { start: 3, end: None }
            ]
        );
        assert_eq!(
            scope_windows(ScopeKey::NotIn, &tr),
            vec![Window { start: 2, end: Some(2) }]
        );
        // The scope ahead of the first mode entry is vacuous when the trace
        // starts inside the mode.
        assert_eq!(scope_windows(ScopeKey::Before, &tr), vec![]);
        assert_eq!(
            scope_windows(ScopeKey::After, &tr),
            vec![Window { start: 2, end: None }]
        );
        let out = trace(&[0, 0, 1, 1, 0, 0], &[0; 6], &[0; 6], &[0; 6]);
        assert_eq!(
            scope_windows(ScopeKey::Before, &out),
            vec![Window { start: 0, end: Some(1) }]
        );
        assert_eq!(
            scope_windows(ScopeKey::OnlyAfter, &out),
            vec![Window { start: 0, end: Some(3) }]
        );
        // A window whose cut fires immediately at the start of the trace is
        // waived.
        let instant = trace(&[1, 0, 0], &[0; 3], &[0; 3], &[0; 3]);
        assert_eq!(scope_windows(ScopeKey::In, &instant), vec![]);
        assert_eq!(
            scope_windows(ScopeKey::OnlyAfter, &instant),
            vec![]
        );
    }

    #[test]
    fn trigger_positions_follow_the_condition_kind() {
        let c = [false, true, true, false, true, false];
        let w = Window { start: 0, end: None };
        assert_eq!(trigger_indices(ConditionKey::Null, &c, &w), vec![0]);
        assert_eq!(trigger_indices(ConditionKey::Holding, &c, &w), vec![1, 2, 4]);
        assert_eq!(trigger_indices(ConditionKey::Regular, &c, &w), vec![1, 4]);
        let mid = Window { start: 1, end: Some(4) };
        assert_eq!(trigger_indices(ConditionKey::Regular, &c, &mid), vec![1, 4]);
        assert_eq!(trigger_indices(ConditionKey::Null, &c, &mid), vec![1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn verdict_partitions_the_path_set(seed in any::<u64>()) {
            let m = generate(&GenConfig::new(seed));
            let k = key("in,regular,bound,within");
            let v = check_probability(&m, &k, Some((BoundOp::Ge, 0.5)), 2);
            let total = m.enumerate_paths().len();
            let mut seen = vec![0u8; total];
            for &i in v.good_paths.iter().chain(&v.bad_paths).chain(&v.discarded) {
                seen[i] += 1;
            }
            prop_assert!(seen.iter().all(|&n| n == 1));
            prop_assert_eq!(v.expected, v.bad_paths.is_empty());
        }

        #[test]
        fn start_positions_are_genuine_triggers(seed in any::<u64>()) {
            let m = generate(&GenConfig::new(seed));
            let regular = key("null,regular,bound,eventually");
            let holding = key("in,holding,bound,always");
            for path in m.enumerate_paths() {
                let tr = TraceLabels::from_path(&m, &path);
                for l in start_indices(&regular, &tr) {
                    prop_assert!(tr.c[l] && (l == 0 || !tr.c[l - 1]));
                }
                let windows = scope_windows(ScopeKey::In, &tr);
                for l in start_indices(&holding, &tr) {
                    prop_assert!(tr.c[l] && tr.m[l]);
                    prop_assert!(windows.iter().any(
                        |w| w.start <= l && l <= w.end.unwrap_or(usize::MAX)
                    ));
                }
            }
        }
    }
}
