//! `pfret` — compiles structured natural-language requirements into
//! probability-bounded temporal formulas, manages the precompiled template
//! cache, and runs the self-validation campaign.
//!
//! Exit codes are a stable contract: 0 success, 1 input error, 2 cache
//! error, 3 validation disagreement.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pfret_core::formalizer::{self, Mutation, TemplateCache};
use pfret_core::fretish::{self, Duration};
use pfret_core::pctl;
use pfret_core::validator::{self, CampaignConfig};

/// Environment variable naming the default template-cache path.
const CACHE_ENV: &str = "FRET_CACHE";
const CACHE_DEFAULT: &str = "fret-cache.json";

const EXIT_INPUT: u8 = 1;
const EXIT_CACHE: u8 = 2;
const EXIT_DISAGREEMENT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pfret",
    version,
    about = "Compile probabilistic structured requirements to PRISM-syntax formulas and validate the translation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile requirement text (or a file of requirements) to formulas.
    Compile(CompileArgs),
    /// Build, write, or verify the precompiled template cache.
    Cache(CacheArgs),
    /// Cross-validate compiled formulas against the trace oracle.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// Requirement text. Omit when --file is given.
    requirement: Option<String>,
    /// File with one requirement per non-empty line; `#` starts a comment.
    #[arg(long, conflicts_with = "requirement", value_name = "PATH")]
    file: Option<PathBuf>,
    /// Compile through a prebuilt template cache instead of directly.
    /// Pass the path as --cache=PATH; bare --cache reads $FRET_CACHE.
    #[arg(long, value_name = "PATH", require_equals = true)]
    cache: Option<Option<PathBuf>>,
    /// Wall-clock length of one tick (e.g. "100 milliseconds"), used to
    /// convert wall-clock timing durations into tick counts.
    #[arg(long, value_name = "DURATION")]
    tick_duration: Option<String>,
    /// Print the template key, per-field spans, and the intermediate
    /// compilation stages as JSON instead of just the formula.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct CacheArgs {
    /// Where to write the cache (default: $FRET_CACHE, else fret-cache.json).
    #[arg(long, value_name = "PATH", conflicts_with = "verify")]
    out: Option<PathBuf>,
    /// Verify that an existing cache file matches a fresh derivation.
    #[arg(long, value_name = "PATH")]
    verify: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// "all", or template keys to check. Separate multiple keys with ';'
    /// (each key is itself comma-separated, e.g. "in,holding,bound,next").
    #[arg(long, default_value = "all")]
    keys: Vec<String>,
    /// Seeded chains generated per key.
    #[arg(long, default_value_t = validator::DEFAULT_MODELS_PER_KEY)]
    models_per_key: usize,
    /// Master seed for the campaign.
    #[arg(long, default_value_t = validator::DEFAULT_MASTER_SEED)]
    seed: u64,
    /// Write the full campaign report (JSON) here.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Apply a deliberate compiler weakening (to demonstrate detection).
    #[arg(long, value_enum, value_name = "MUTATION")]
    mutate: Option<MutationArg>,
    /// Write a PRISM model/property file pair per check into this directory
    /// for offline replay with an external model checker.
    #[arg(long, value_name = "DIR")]
    emit_prism_pair: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    /// Waive obligations on futures where the scope never closes.
    WeakToOptional,
}

impl From<MutationArg> for Mutation {
    fn from(arg: MutationArg) -> Mutation {
        match arg {
            MutationArg::WeakToOptional => Mutation::WeakToOptional,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Compile(args) => cmd_compile(&args),
        Command::Cache(args) => cmd_cache(&args),
        Command::Validate(args) => cmd_validate(&args),
    }
}

fn default_cache_path() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(CACHE_DEFAULT))
}

/// Writes one line to standard output; if the consumer closed the pipe,
/// exits quietly instead of panicking.
fn print_line(line: &str) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{line}").is_err() {
        std::process::exit(0);
    }
}

fn parse_tick(arg: &Option<String>) -> Result<Option<Duration>, ExitCode> {
    match arg {
        None => Ok(None),
        Some(text) => match fretish::parse_duration(text) {
            Ok(d) => Ok(Some(d)),
            Err(diag) => {
                eprintln!("error: invalid --tick-duration: {diag}");
                Err(ExitCode::from(EXIT_INPUT))
            }
        },
    }
}

/// Reads a requirement file: one requirement per non-empty line, `#` starts
/// a comment (whole-line or trailing).
fn read_requirement_lines(path: &Path) -> Result<Vec<String>, ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_INPUT));
        }
    };
    Ok(text
        .lines()
        .map(|line| line.split('#').next().unwrap_or("").trim().to_string())
        .filter(|line| !line.is_empty())
        .collect())
}

fn load_cache(path: &Path) -> Result<TemplateCache, ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read cache {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_CACHE));
        }
    };
    match TemplateCache::from_json(&text) {
        Ok(cache) => Ok(cache),
        Err(e) => {
            eprintln!("error: malformed cache {}: {e}", path.display());
            Err(ExitCode::from(EXIT_CACHE))
        }
    }
}

fn cmd_compile(args: &CompileArgs) -> ExitCode {
    let tick = match parse_tick(&args.tick_duration) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let sources = if let Some(path) = &args.file {
        match read_requirement_lines(path) {
            Ok(lines) => lines,
            Err(code) => return code,
        }
    } else if let Some(req) = &args.requirement {
        vec![req.clone()]
    } else {
        eprintln!("error: provide requirement text or --file");
        return ExitCode::from(EXIT_INPUT);
    };

    let cache = match &args.cache {
        None => None,
        Some(path) => {
            let path = path.clone().unwrap_or_else(default_cache_path);
            match load_cache(&path) {
                Ok(c) => Some(c),
                Err(code) => return code,
            }
        }
    };

    for source in &sources {
        let req = match fretish::parse(source) {
            Ok(r) => r,
            Err(diag) => {
                eprintln!("error: {diag}");
                return ExitCode::from(EXIT_INPUT);
            }
        };
        if args.explain {
            match formalizer::explain(&req, tick.as_ref()) {
                Ok(explain) => {
                    print_line(&serde_json::to_string_pretty(&explain).expect("explain serializes"));
                }
                Err(diag) => {
                    eprintln!("error: {diag}");
                    return ExitCode::from(EXIT_INPUT);
                }
            }
            continue;
        }
        let formula = match &cache {
            None => match formalizer::compile(&req, tick.as_ref()) {
                Ok(f) => f,
                Err(diag) => {
                    eprintln!("error: {diag}");
                    return ExitCode::from(EXIT_INPUT);
                }
            },
            Some(cache) => {
                let key = fretish::template_key(&req);
                let entry = match cache.lookup(&key) {
                    Some(e) => e,
                    None => {
                        eprintln!("error: cache has no entry for key [{key}]");
                        return ExitCode::from(EXIT_CACHE);
                    }
                };
                match formalizer::instantiate(&entry.formula, &req, tick.as_ref()) {
                    Ok(f) => f,
                    Err(formalizer::InstantiateError::Cache(e)) => {
                        eprintln!("error: cache template for [{key}] is malformed: {e}");
                        return ExitCode::from(EXIT_CACHE);
                    }
                    Err(formalizer::InstantiateError::Input(diag)) => {
                        eprintln!("error: {diag}");
                        return ExitCode::from(EXIT_INPUT);
                    }
                }
            }
        };
        print_line(&formula.to_string());
    }
    ExitCode::SUCCESS
}

fn cmd_cache(args: &CacheArgs) -> ExitCode {
    if let Some(path) = &args.verify {
        let existing = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read cache {}: {e}", path.display());
                return ExitCode::from(EXIT_INPUT);
            }
        };
        let fresh = formalizer::build_cache();
        if existing == fresh.to_json() {
            print_line(&format!("cache {} verified: {} templates", path.display(), fresh.templates.len()));
            return ExitCode::SUCCESS;
        }
        // Name the first key whose stored template differs.
        match TemplateCache::from_json(&existing) {
            Ok(stored) => {
                for (key, entry) in &fresh.templates {
                    match stored.templates.get(key) {
                        Some(old) if old == entry => {}
                        _ => {
                            eprintln!("error: cache {} diverges at key [{key}]", path.display());
                            return ExitCode::from(EXIT_INPUT);
                        }
                    }
                }
                eprintln!("error: cache {} has extra or reordered entries", path.display());
            }
            Err(e) => eprintln!("error: cache {} is not valid JSON: {e}", path.display()),
        }
        return ExitCode::from(EXIT_INPUT);
    }

    let out = args.out.clone().unwrap_or_else(default_cache_path);
    let cache = formalizer::build_cache();
    for (key, entry) in &cache.templates {
        if let Err(reason) = pctl::parse_prism(&entry.formula)
            .map_err(|e| e.to_string())
            .and_then(|f| pctl::well_formed_explain(&f))
        {
            eprintln!("error: template for [{key}] is not well-formed: {reason}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    if let Err(e) = fs::write(&out, cache.to_json()) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return ExitCode::from(EXIT_INPUT);
    }
    print_line(&format!("wrote {} templates to {}", cache.templates.len(), out.display()));
    ExitCode::SUCCESS
}

fn parse_key_list(values: &[String]) -> Result<Vec<fretish::TemplateKey>, ExitCode> {
    if values.iter().any(|v| v.trim() == "all") {
        return Ok(fretish::TemplateKey::enumerate_all());
    }
    let mut keys = Vec::new();
    for value in values {
        for item in value.split(';') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            match item.parse() {
                Ok(key) => keys.push(key),
                Err(e) => {
                    eprintln!("error: bad key {item:?}: {e}");
                    return Err(ExitCode::from(EXIT_INPUT));
                }
            }
        }
    }
    if keys.is_empty() {
        eprintln!("error: --keys selected nothing");
        return Err(ExitCode::from(EXIT_INPUT));
    }
    Ok(keys)
}

fn cmd_validate(args: &ValidateArgs) -> ExitCode {
    let keys = match parse_key_list(&args.keys) {
        Ok(k) => k,
        Err(code) => return code,
    };
    let config = CampaignConfig {
        master_seed: args.seed,
        models_per_key: args.models_per_key,
        keys,
        mutation: args.mutate.map(Mutation::from),
    };

    if let Some(dir) = &args.emit_prism_pair {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(EXIT_INPUT);
        }
        for key in &config.keys {
            let slug = key.to_string().replace(',', "-");
            for index in 0..config.models_per_key {
                let (model_text, property_text) =
                    validator::check_artifacts(key, config.master_seed, index, config.mutation);
                let model_path = dir.join(format!("{slug}-{index}.pm"));
                let property_path = dir.join(format!("{slug}-{index}.pctl"));
                if let Err(e) = fs::write(&model_path, model_text)
                    .and_then(|()| fs::write(&property_path, property_text))
                {
                    eprintln!("error: cannot write under {}: {e}", dir.display());
                    return ExitCode::from(EXIT_INPUT);
                }
            }
        }
    }

    let report = validator::run_campaign(&config);

    if let Some(path) = &args.report {
        if let Err(e) = fs::write(path, report.to_json()) {
            eprintln!("error: cannot write report {}: {e}", path.display());
            return ExitCode::from(EXIT_INPUT);
        }
    }

    // Summary table: totals always; per-key rows for any disagreements.
    print_line(&report.summary());
    let offenders: Vec<_> = report
        .keys
        .iter()
        .filter(|k| !k.disagreements.is_empty())
        .collect();
    if !offenders.is_empty() {
        print_line(&format!("{:<40} {:>7} {:>10} {:>13}", "key", "models", "agreements", "disagreements"));
        for kr in &offenders {
            print_line(&format!(
                "{:<40} {:>7} {:>10} {:>13}",
                kr.key,
                kr.models,
                kr.agreements,
                kr.disagreements.len()
            ));
            for d in &kr.disagreements {
                print_line(&format!("    seed {}: expected {}, got {}", d.seed, d.expected, d.got));
            }
        }
        return ExitCode::from(EXIT_DISAGREEMENT);
    }
    ExitCode::SUCCESS
}
