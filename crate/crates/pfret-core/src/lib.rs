//! Compiler and self-validation harness for probabilistic structured
//! natural-language requirements.
//!
//! The pipeline turns a restricted English requirement (scope, condition,
//! component, probability, timing, response) into a PCTL* formula printed in
//! PRISM property syntax. Because the output formulas are too intricate to
//! review by eye, the crate also ships the machinery to check them against an
//! independent implementation of the intended semantics:
//!
//! * [`fretish`] — grammar, parser, template-key extraction, diagnostics;
//! * [`salt_ir`] — temporal intermediate representation and its lowering to
//!   plain LTL, including truncated-evaluation scopes;
//! * [`pctl`] — PCTL* syntax tree, well-formedness, PRISM-syntax printer and
//!   parser;
//! * [`formalizer`] — the requirement-to-formula translation and the template
//!   cache over the full key space;
//! * [`dtmc`] — small seeded discrete-time Markov chains shaped for scope /
//!   condition / stop / response interval patterns;
//! * [`checker`] — exact PCTL* evaluation on those models;
//! * [`oracle`] — the independent expected-verdict computation (plus the
//!   literal path-filtering procedure it refines);
//! * [`validator`] — the randomized cross-checking campaign and its report.

pub mod checker;
pub mod dtmc;
pub mod formalizer;
pub mod fretish;
pub mod oracle;
pub mod pctl;
pub mod salt_ir;
pub mod validator;
