//! The self-validation campaign.
//!
//! Every template slot is compiled to a formula, instantiated with the
//! generated chains' own label atoms, and evaluated exactly by the
//! [`crate::checker`].  Independently, the [`crate::oracle`] derives the
//! expected verdict from the chain's traces without touching the compiled
//! formula.  A campaign runs this comparison for every requested key over a
//! deterministic family of seeded chains and reports every disagreement with
//! enough material to replay it.

use rayon::prelude::*;
use serde::Serialize;

use crate::checker::{self, Valuation};
use crate::dtmc::{self, GenConfig};
use crate::formalizer::{self, Mutation, Symbols};
use crate::fretish::{ProbabilityKey, ScopeKey, TemplateKey};
use crate::oracle;
use crate::pctl::{BoundOp, ProbBound, StateFormula, Steps};

/// Master seed of the shipped campaign configuration.
pub const DEFAULT_MASTER_SEED: u64 = 24301;

/// Models generated per key in the shipped campaign configuration.
pub const DEFAULT_MODELS_PER_KEY: usize = 20;

/// Probability bounds cycled across a key's model indices.
pub const BOUND_PALETTE: [(BoundOp, f64); 4] = [
    (BoundOp::Gt, 0.25),
    (BoundOp::Ge, 0.5),
    (BoundOp::Gt, 0.75),
    (BoundOp::Ge, 0.9),
];

/// Step counts cycled across a key's model indices (for bounded timings).
pub const STEP_CHOICES: [u64; 3] = [1, 2, 3];

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub master_seed: u64,
    pub models_per_key: usize,
    pub keys: Vec<TemplateKey>,
    pub mutation: Option<Mutation>,
}

impl CampaignConfig {
    pub fn new(master_seed: u64, models_per_key: usize) -> Self {
        CampaignConfig {
            master_seed,
            models_per_key,
            keys: TemplateKey::enumerate_all(),
            mutation: None,
        }
    }
}

/// One check where the two routes returned different verdicts, with the
/// material needed to replay it offline.
#[derive(Debug, Clone, Serialize)]
pub struct Disagreement {
    pub seed: u64,
    pub model_dump: String,
    pub expected: bool,
    pub got: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyReport {
    pub key: String,
    pub models: usize,
    pub agreements: usize,
    pub disagreements: Vec<Disagreement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub master_seed: u64,
    pub comparisons: usize,
    pub agreements: usize,
    pub keys: Vec<KeyReport>,
    /// Checks where the path-product verdict parted ways with the
    /// branching-measure verdict.  These are recorded as data about the two
    /// interpretations, not failures.
    pub literal_divergences: usize,
}

impl CampaignReport {
    pub fn disagreements(&self) -> usize {
        self.comparisons - self.agreements
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One-paragraph human summary for standard output.
    pub fn summary(&self) -> String {
        format!(
            "campaign seed {}: {} keys, {} comparisons, {} agreements, {} disagreements, \
             {} path-product/measure divergences",
            self.master_seed,
            self.keys.len(),
            self.comparisons,
            self.agreements,
            self.disagreements(),
            self.literal_divergences,
        )
    }
}

/// Deterministic per-check seed: a small byte hash folding the master seed,
/// the key's canonical spelling, and the model index.
pub fn derive_seed(master: u64, key: &TemplateKey, index: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ master;
    for b in key.to_string().bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    (h ^ index as u64).wrapping_mul(0x0000_0100_0000_01b3)
}

/// The bound and step count a check at this model index uses.
pub fn check_setup(key: &TemplateKey, index: usize) -> (Option<(BoundOp, f64)>, u64) {
    let bound = match key.probability {
        ProbabilityKey::Bound => Some(BOUND_PALETTE[index % BOUND_PALETTE.len()]),
        ProbabilityKey::Null => None,
    };
    (bound, STEP_CHOICES[index % STEP_CHOICES.len()])
}

fn literal_symbols(bound: Option<(BoundOp, f64)>, steps: u64) -> Symbols {
    Symbols {
        mode: StateFormula::atom("m"),
        cond: StateFormula::atom("c"),
        stop: StateFormula::atom("sc"),
        res: StateFormula::atom("r"),
        bound: match bound {
            Some((op, value)) => ProbBound::Lit { op, value },
            None => ProbBound::ge_one(),
        },
        steps: Steps::Lit(steps),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOutcome {
    pub seed: u64,
    /// Verdict the trace oracle expects (branching-measure style).
    pub expected: bool,
    /// Verdict the checker computed from the compiled formula.
    pub got: bool,
    /// Verdict of the path-product recipe, kept for divergence bookkeeping.
    pub literal: bool,
}

/// Runs a single comparison for `key` at the given model index.
pub fn run_check(
    key: &TemplateKey,
    master_seed: u64,
    index: usize,
    mutation: Option<Mutation>,
) -> CheckOutcome {
    let seed = derive_seed(master_seed, key, index);
    let model = dtmc::generate(&GenConfig::new(seed));
    let (bound, steps) = check_setup(key, index);
    let formula = formalizer::gen_prob_formula_variant(key, &literal_symbols(bound, steps), mutation);
    let valuation = Valuation::standard(&model);
    let got = checker::eval_model(&model, &valuation, &formula);
    let expected = oracle::expected_verdict(&model, key, bound, steps);
    let literal = oracle::check_probability(&model, key, bound, steps).expected;
    CheckOutcome { seed, expected, got, literal }
}

/// Runs the full campaign.  Keys are processed in parallel; the report lists
/// them in the order the configuration gave them.
pub fn run_campaign(config: &CampaignConfig) -> CampaignReport {
    let per_key: Vec<(KeyReport, usize)> = config
        .keys
        .par_iter()
        .map(|key| {
            let mut agreements = 0;
            let mut disagreements = Vec::new();
            let mut divergences = 0;
            for index in 0..config.models_per_key {
                let outcome = run_check(key, config.master_seed, index, config.mutation);
                if outcome.expected == outcome.got {
                    agreements += 1;
                } else {
                    let model = dtmc::generate(&GenConfig::new(outcome.seed));
                    disagreements.push(Disagreement {
                        seed: outcome.seed,
                        model_dump: model.export_prism_model(),
                        expected: outcome.expected,
                        got: outcome.got,
                    });
                }
                if outcome.literal != outcome.expected {
                    divergences += 1;
                }
            }
            (
                KeyReport {
                    key: key.to_string(),
                    models: config.models_per_key,
                    agreements,
                    disagreements,
                },
                divergences,
            )
        })
        .collect();

    let mut report = CampaignReport {
        master_seed: config.master_seed,
        comparisons: config.keys.len() * config.models_per_key,
        agreements: 0,
        keys: Vec::with_capacity(per_key.len()),
        literal_divergences: 0,
    };
    for (key_report, divergences) in per_key {
        report.agreements += key_report.agreements;
        report.literal_divergences += divergences;
        report.keys.push(key_report);
    }
    report
}

/// The chain and property texts of one check, in the PRISM-compatible file
/// formats, for offline replay with an external model checker.
pub fn check_artifacts(
    key: &TemplateKey,
    master_seed: u64,
    index: usize,
    mutation: Option<Mutation>,
) -> (String, String) {
    let seed = derive_seed(master_seed, key, index);
    let model = dtmc::generate(&GenConfig::new(seed));
    let (bound, steps) = check_setup(key, index);
    let formula = formalizer::gen_prob_formula_variant(key, &literal_symbols(bound, steps), mutation);
    (model.export_prism_model(), format!("{formula}\n"))
}

/// The scopes whose compiled formulas the [`Mutation::WeakToOptional`]
/// weakening actually changes.
pub fn mutation_targets() -> Vec<TemplateKey> {
    TemplateKey::enumerate_all()
        .into_iter()
        .filter(|k| matches!(k.scope, ScopeKey::In | ScopeKey::Before | ScopeKey::NotIn))
        .collect()
}

/// Searches for a model on which the weakened compiler is caught out,
/// examining at most `budget` checks across the affected keys.  Returns the
/// first offending key and seed.
pub fn mutation_caught_within(master_seed: u64, budget: usize) -> Option<(TemplateKey, u64)> {
    let keys = mutation_targets();
    let mut examined = 0;
    for index in 0.. {
        for key in &keys {
            if examined == budget {
                return None;
            }
            examined += 1;
            let outcome = run_check(key, master_seed, index, Some(Mutation::WeakToOptional));
            if outcome.expected != outcome.got {
                return Some((*key, outcome.seed));
            }
        }
    }
    unreachable!()
}
