//! Small tree-shaped discrete-time Markov chains for self-validation.
//!
//! Each generated chain is a *spine* of states, one per time level `0..=max`,
//! with four boolean labels: `m` (mode), `c` (condition), `sc` (stop
//! condition), and `r` (response). The first three are deterministic per
//! level, drawn as disjoint, non-adjacent intervals. The response is
//! probabilistic: over each response interval, every level offers a branch —
//! with probability `p` the response keeps holding (the spine continues with
//! `r`), with `1 - p` it fails into a terminal state (`r` false, all labels
//! frozen by a self-loop). The spine's last level is also absorbing.
//!
//! The shape keeps path enumeration exact and cheap while still producing
//! varied probability masses for windowed obligations.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Boolean labels of one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Labels {
    pub mode: bool,
    pub cond: bool,
    pub stop: bool,
    pub res: bool,
}

/// The exported label/atom names, in file order.
pub const LABEL_NAMES: [&str; 4] = ["m", "c", "sc", "r"];

impl Labels {
    pub fn get(&self, name: &str) -> Option<bool> {
        match name {
            "m" => Some(self.mode),
            "c" => Some(self.cond),
            "sc" => Some(self.stop),
            "r" => Some(self.res),
            _ => None,
        }
    }

    fn set(&mut self, name: &str, value: bool) {
        match name {
            "m" => self.mode = value,
            "c" => self.cond = value,
            "sc" => self.stop = value,
            "r" => self.res = value,
            other => panic!("unknown label {other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Time level (distance from the initial state).
    pub level: u64,
    pub labels: Labels,
    /// Successors with probabilities; absorbing states self-loop.
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dtmc {
    pub states: Vec<State>,
}

/// One maximal path: every state from the initial one up to (and including)
/// the first absorbing state, with its probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub states: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    /// Inclusive range for the last time level.
    pub min_levels: u64,
    pub max_levels: u64,
    /// Per label, up to this many intervals are drawn.
    pub max_intervals: usize,
}

impl GenConfig {
    pub fn new(seed: u64) -> GenConfig {
        GenConfig { seed, min_levels: 4, max_levels: 8, max_intervals: 3 }
    }
}

/// Inclusive level intervals for each deterministic label, plus the response.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelIntervals {
    pub mode: Vec<(u64, u64)>,
    pub cond: Vec<(u64, u64)>,
    pub stop: Vec<(u64, u64)>,
    pub res: Vec<(u64, u64)>,
}

fn within(intervals: &[(u64, u64)], t: u64) -> bool {
    intervals.iter().any(|&(a, b)| a <= t && t <= b)
}

impl Dtmc {
    /// Builds the chain for explicit intervals. `branch_probs` supplies the
    /// continue-probability for each response-interval level, in level order;
    /// it must have exactly one entry per branching level.
    pub fn build(max: u64, intervals: &LabelIntervals, branch_probs: &[f64]) -> Dtmc {
        assert!(
            intervals.res.iter().all(|&(a, b)| a >= 1 && a <= b && b <= max),
            "response intervals start at level 1 or later and fit the levels"
        );
        let labels_at = |t: u64, res: bool| Labels {
            mode: within(&intervals.mode, t),
            cond: within(&intervals.cond, t),
            stop: within(&intervals.stop, t),
            res,
        };
        let mut states = vec![State {
            level: 0,
            labels: labels_at(0, false),
            transitions: Vec::new(),
        }];
        let mut spine = 0usize;
        let mut probs = branch_probs.iter().copied();
        for t in 1..=max {
            if within(&intervals.res, t) {
                let p = probs.next().expect("a probability per branching level");
                assert!((0.0..=1.0).contains(&p));
                let term = states.len();
                states.push(State {
                    level: t,
                    labels: labels_at(t, false),
                    transitions: vec![(term, 1.0)],
                });
                let cont = states.len();
                states.push(State { level: t, labels: labels_at(t, true), transitions: Vec::new() });
                states[spine].transitions = vec![(term, 1.0 - p), (cont, p)];
                spine = cont;
            } else {
                let next = states.len();
                states.push(State { level: t, labels: labels_at(t, false), transitions: Vec::new() });
                states[spine].transitions = vec![(next, 1.0)];
                spine = next;
            }
        }
        states[spine].transitions = vec![(spine, 1.0)];
        assert!(probs.next().is_none(), "no leftover branch probabilities");
        Dtmc { states }
    }

    pub fn is_absorbing(&self, idx: usize) -> bool {
        matches!(self.states[idx].transitions.as_slice(), [(target, _)] if *target == idx)
    }

    /// All maximal paths from the initial state, in depth-first order.
    pub fn enumerate_paths(&self) -> Vec<Path> {
        self.enumerate_paths_from(0)
    }

    /// All maximal paths from a given state, in depth-first order.
    pub fn enumerate_paths_from(&self, start: usize) -> Vec<Path> {
        let mut paths = Vec::new();
        let mut stack = vec![(vec![start], 1.0f64)];
        while let Some((states, prob)) = stack.pop() {
            let here = *states.last().expect("non-empty path");
            if self.is_absorbing(here) {
                paths.push(Path { states, prob });
                continue;
            }
            // Reverse so the stack pops successors in transition order.
            for &(next, p) in self.states[here].transitions.iter().rev() {
                let mut extended = states.clone();
                extended.push(next);
                stack.push((extended, prob * p));
            }
        }
        paths
    }

    /// The labels along a path (the last entry repeats forever).
    pub fn trace<'a>(&'a self, path: &'a Path) -> impl Iterator<Item = &'a Labels> + 'a {
        path.states.iter().map(|&idx| &self.states[idx].labels)
    }

    /// Serializes the chain as a PRISM model. Labels are exposed both as
    /// `formula` macros (so property files can use the bare names) and as
    /// `label` definitions.
    pub fn export_prism_model(&self) -> String {
        let mut out = String::new();
        out.push_str("dtmc\n\nmodule chain\n");
        let _ = writeln!(out, "  s : [0..{}] init 0;", self.states.len() - 1);
        for (idx, state) in self.states.iter().enumerate() {
            let updates = state
                .transitions
                .iter()
                .map(|(target, p)| format!("{p:?}:(s'={target})"))
                .collect::<Vec<_>>()
                .join(" + ");
            let _ = writeln!(out, "  [] s={idx} -> {updates};");
        }
        out.push_str("endmodule\n\n");
        for name in LABEL_NAMES {
            let members: Vec<String> = self
                .states
                .iter()
                .enumerate()
                .filter(|(_, st)| st.labels.get(name).unwrap())
                .map(|(idx, _)| format!("s={idx}"))
                .collect();
            let set = if members.is_empty() { "false".to_string() } else { members.join("|") };
            let _ = writeln!(out, "formula {name} = {set};");
        }
        for name in LABEL_NAMES {
            let _ = writeln!(out, "label \"{name}\" = {name};");
        }
        out
    }

    /// Reads a chain back from [`Dtmc::export_prism_model`] output.
    pub fn parse_prism_model(text: &str) -> Result<Dtmc, String> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("dtmc") {
            return Err("expected a `dtmc` header".to_string());
        }
        if lines.next().map(|l| l.starts_with("module")) != Some(true) {
            return Err("expected a module".to_string());
        }
        let var = lines.next().ok_or("missing state variable")?;
        let count: usize = var
            .strip_prefix("s : [0..")
            .and_then(|rest| rest.strip_suffix("] init 0;"))
            .ok_or_else(|| format!("bad state variable line {var:?}"))?
            .parse()
            .map_err(|e| format!("bad state count: {e}"))?;
        let mut states: Vec<State> =
            (0..=count).map(|_| State { level: 0, labels: Labels::default(), transitions: vec![] }).collect();
        for line in lines.by_ref() {
            if line == "endmodule" {
                break;
            }
            let rest = line.strip_prefix("[] s=").ok_or_else(|| format!("bad command {line:?}"))?;
            let (src, updates) =
                rest.split_once(" -> ").ok_or_else(|| format!("bad command {line:?}"))?;
            let src: usize = src.parse().map_err(|e| format!("bad source state: {e}"))?;
            let updates = updates.strip_suffix(';').ok_or("missing semicolon")?;
            let mut transitions = Vec::new();
            for update in updates.split(" + ") {
                let (p, target) =
                    update.split_once(":(s'=").ok_or_else(|| format!("bad update {update:?}"))?;
                let target = target.strip_suffix(')').ok_or("missing close paren")?;
                transitions.push((
                    target.parse::<usize>().map_err(|e| format!("bad target: {e}"))?,
                    p.parse::<f64>().map_err(|e| format!("bad probability: {e}"))?,
                ));
            }
            states[src].transitions = transitions;
        }
        for line in lines {
            let Some(rest) = line.strip_prefix("formula ") else { continue };
            let (name, set) =
                rest.split_once(" = ").ok_or_else(|| format!("bad formula line {line:?}"))?;
            let set = set.strip_suffix(';').ok_or("missing semicolon")?;
            if set == "false" {
                continue;
            }
            for member in set.split('|') {
                let idx: usize = member
                    .strip_prefix("s=")
                    .ok_or_else(|| format!("bad member {member:?}"))?
                    .parse()
                    .map_err(|e| format!("bad member: {e}"))?;
                states[idx].labels.set(name, true);
            }
        }
        // Levels are structural: distance from the initial state.
        let mut dtmc = Dtmc { states };
        let mut level = vec![u64::MAX; dtmc.states.len()];
        level[0] = 0;
        let mut frontier = vec![0usize];
        while let Some(here) = frontier.pop() {
            for &(next, _) in &dtmc.states[here].transitions {
                if next != here && level[next] == u64::MAX {
                    level[next] = level[here] + 1;
                    frontier.push(next);
                }
            }
        }
        for (state, lvl) in dtmc.states.iter_mut().zip(level) {
            if lvl == u64::MAX {
                return Err("unreachable state".to_string());
            }
            state.level = lvl;
        }
        Ok(dtmc)
    }
}

/// Draws up to `max_count` disjoint intervals in `[min_start, max]`, with at
/// least one clear level between consecutive intervals.
fn gen_intervals(
    rng: &mut ChaCha8Rng,
    max: u64,
    min_start: u64,
    max_count: usize,
) -> Vec<(u64, u64)> {
    let count = rng.gen_range(0..=max_count);
    let mut intervals = Vec::new();
    let mut cursor = min_start;
    for _ in 0..count {
        if cursor > max {
            break;
        }
        let a = rng.gen_range(cursor..=max);
        let b = rng.gen_range(a..=max);
        intervals.push((a, b));
        cursor = b + 2;
    }
    intervals
}

/// A branch probability in `(0.05, 0.95)` with four decimals, rejecting
/// two-decimal-exact values so that path masses almost never land exactly on
/// the comparison bounds used by the validation campaign.
fn branch_prob(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let raw: f64 = rng.gen_range(0.05..0.95);
        let p = (raw * 1e4).round() / 1e4;
        if (p * 100.0 - (p * 100.0).round()).abs() > 1e-9 {
            return p;
        }
    }
}

/// Generates a chain; the same config always yields the same chain.
pub fn generate(config: &GenConfig) -> Dtmc {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let max = rng.gen_range(config.min_levels..=config.max_levels);
    let intervals = LabelIntervals {
        mode: gen_intervals(&mut rng, max, 0, config.max_intervals),
        cond: gen_intervals(&mut rng, max, 0, config.max_intervals),
        stop: gen_intervals(&mut rng, max, 0, config.max_intervals),
        res: gen_intervals(&mut rng, max, 1, config.max_intervals),
    };
    let branch_levels: u64 = intervals.res.iter().map(|&(a, b)| b - a + 1).sum();
    let probs: Vec<f64> = (0..branch_levels).map(|_| branch_prob(&mut rng)).collect();
    Dtmc::build(max, &intervals, &probs)
}
