//! `recon`: reproducible reconciliation experiments with CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use recon_core::deopt::{history_csv, optimize_with, registry_text};
use recon_core::ldpc::{sample_code, BpConfig, LdpcCode};
use recon_core::metrics::{self, cascade_trials, curve_csv, ldpc_curve, ldpc_trials, CurvePoint, Scheme, TrialSummary};
use recon_core::{
    binary_entropy, key_rate_randomized, key_rate_real, shannon_gap, CodeRegistry, DeConfig, DegreeShape,
    DensityEvolution, DensityEvolutionConfig, Error, RegistryEntry, Seed,
};

#[derive(Parser, Debug)]
#[command(name = "recon", version, about = "Cascade and LDPC reconciliation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recompute the threshold of every code in a registry.
    Thresholds(ThresholdsArgs),
    /// Run seeded reconciliation sessions over a grid of error rates.
    Simulate(SimulateArgs),
    /// Search for a degree distribution with differential evolution.
    Design(DesignArgs),
    /// Evaluate LDPC key rates (with and without local randomization) on a grid.
    Keyrate(KeyrateArgs),
}

#[derive(Args, Debug)]
struct ThresholdsArgs {
    /// Registry file; the bundled table is used when absent.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Use the coarse search evaluator instead of the certifying one.
    #[arg(long)]
    fast: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Cascade,
    Ldpc,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// `start:stop:step`, or a single error rate.
    #[arg(long)]
    p_grid: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Block length. 1000000 works but is slow.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fix the LDPC code rate instead of picking the best code per p.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Certifier {
    Fast,
    Default,
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    /// Largest variable degree L.
    #[arg(long)]
    l_max: usize,
    /// Largest check degree R.
    #[arg(long)]
    r_max: usize,
    /// Population size NP; defaults to ten times the number of free coefficients.
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    weight: f64,
    #[arg(long, default_value_t = 0.8)]
    crossover: f64,
    #[arg(long, default_value_t = 50)]
    generations: usize,
    #[arg(long, default_value_t = 1000)]
    init_attempts: usize,
    /// Stop once the certified threshold reaches this value.
    #[arg(long)]
    target: Option<f64>,
    /// Evaluator used to certify the champion.
    #[arg(long, value_enum, default_value_t = Certifier::Default)]
    certify: Certifier,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Registry file receiving the best distribution.
    #[arg(long)]
    out: PathBuf,
    /// Per-generation history CSV; stdout when absent.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KeyrateArgs {
    #[arg(long)]
    p_grid: String,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Charge the 64-bit verification hash on blocks of this length.
    #[arg(long)]
    hash_block: Option<usize>,
    /// Also emit Cascade rows at this constant efficiency.
    #[arg(long)]
    cascade_f: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Comment line opening every output: version, command, and all settings.
fn header(command: &str, spec: &[(&str, String)]) -> String {
    let fields: Vec<String> = spec.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# recon {} {command} {}\n", env!("CARGO_PKG_VERSION"), fields.join(" "))
}

fn show<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".into(), |v| v.to_string())
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or("bundled".into(), |p| p.display().to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_registry(path: &Option<PathBuf>) -> Result<CodeRegistry> {
    match path {
        Some(p) => CodeRegistry::load(p).with_context(|| format!("loading registry {}", p.display())),
        None => Ok(CodeRegistry::bundled()),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| -> Result<f64> { s.trim().parse().with_context(|| format!("bad number {s:?} in p-grid")) };
    match parts.as_slice() {
        [p] => Ok(vec![num(p)?]),
        [a, b, step] => Ok(metrics::grid(num(a)?, num(b)?, num(step)?)?),
        _ => bail!("p-grid must be start:stop:step or a single value, got {text:?}"),
    }
}

/// A key rate when the operating point admits one.
fn rate_or_blank(r: recon_core::Result<f64>) -> Result<String> {
    match r {
        Ok(v) => Ok(format!("{v:.6}")),
        Err(Error::Domain { .. }) => Ok(String::new()),
        Err(e) => Err(e.into()),
    }
}

fn thresholds(args: &ThresholdsArgs) -> Result<String> {
    let registry = load_registry(&args.registry)?;
    let cfg = if args.fast {
        DensityEvolutionConfig::fast()
    } else {
        DensityEvolutionConfig::default()
    };
    let de = DensityEvolution::new(cfg)?;
    let rows: Vec<String> = registry
        .entries()
        .par_iter()
        .map(|e| -> Result<String> {
            let t = de.find_threshold(&e.dd)?.threshold;
            Ok(format!(
                "{:.2},{:.4},{:.6},{:.6},{:.6}",
                e.rate,
                e.threshold,
                t,
                t - e.threshold,
                shannon_gap(e.rate, t)?
            ))
        })
        .collect::<Result<_>>()?;
    let mut text = header(
        "thresholds",
        &[("registry", show_path(&args.registry)), ("fast", args.fast.to_string())],
    );
    text.push_str("rate,printed_threshold,threshold,delta,gap_to_shannon\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    Ok(text)
}

const SIMULATE_COLUMNS: &str = "p,scheme,rate,n,trials,success_rate,undetected,mean_f,K_real,K_tr,mean_rounds,mean_leaked";

fn simulate(args: &SimulateArgs) -> Result<String> {
    let grid = parse_grid(&args.p_grid)?;
    if args.n == 0 {
        bail!("n must be positive");
    }
    let seed = Seed(args.seed);
    let mut text = header(
        "simulate",
        &[
            ("scheme", format!("{:?}", args.scheme).to_lowercase()),
            ("p_grid", args.p_grid.clone()),
            ("n", args.n.to_string()),
            ("trials", args.trials.to_string()),
            ("seed", args.seed.to_string()),
            ("rate", show(&args.rate)),
            ("registry", show_path(&args.registry)),
            ("max_iterations", args.max_iterations.to_string()),
        ],
    );
    text.push_str(SIMULATE_COLUMNS);
    text.push('\n');
    if args.trials == 0 {
        return Ok(text);
    }
    let registry = load_registry(&args.registry)?;
    let bp = BpConfig {
        max_iterations: args.max_iterations,
        ..BpConfig::default()
    };
    // Codes are sampled once per rate and reused across the grid.
    let mut codes: Vec<(f64, LdpcCode)> = Vec::new();
    for (k, &p) in grid.iter().enumerate() {
        let trial_seed = seed.derive(k as u64);
        let row = match args.scheme {
            SchemeArg::Cascade => {
                let s = cascade_trials(p, args.n, args.trials, trial_seed)?;
                let k_real = rate_or_blank(key_rate_real(p, s.mean_f))?;
                summary_row(&s, "cascade", "", &k_real, "")
            }
            SchemeArg::Ldpc => {
                let entry: &RegistryEntry = match args.rate {
                    Some(r) => registry
                        .entry_for_rate(r)
                        .with_context(|| format!("no code of rate {r} in the registry"))?,
                    None => registry.select_code(p)?,
                };
                let idx = match codes.iter().position(|(r, _)| *r == entry.rate) {
                    Some(i) => i,
                    None => {
                        let code_seed = seed.derive(1 << 32 | (entry.rate * 1e4).round() as u64);
                        let code = sample_code(&entry.dd, args.n, code_seed)
                            .with_context(|| format!("sampling a rate {} code", entry.rate))?;
                        codes.push((entry.rate, code));
                        codes.len() - 1
                    }
                };
                let s = ldpc_trials(&codes[idx].1, p, args.trials, trial_seed, &bp)?;
                let b = entry.threshold;
                let k_real = rate_or_blank(key_rate_real(p, s.mean_f))?;
                let f_b = s.mean_leaked / (args.n as f64 * binary_entropy(b)?);
                let k_tr = rate_or_blank(key_rate_randomized(p, b, f_b))?;
                summary_row(&s, "ldpc", &format!("{:.2}", entry.rate), &k_real, &k_tr)
            }
        };
        text.push_str(&row);
        text.push('\n');
    }
    Ok(text)
}

fn summary_row(s: &TrialSummary, scheme: &str, rate: &str, k_real: &str, k_tr: &str) -> String {
    format!(
        "{:.6},{scheme},{rate},{},{},{:.6},{},{:.6},{k_real},{k_tr},{:.6},{:.3}",
        s.p,
        s.n,
        s.trials,
        s.success_rate(),
        s.undetected,
        s.mean_f,
        s.mean_rounds,
        s.mean_leaked
    )
}

fn design(args: &DesignArgs) -> Result<(String, String)> {
    let shape = DegreeShape {
        l_max: args.l_max,
        r_max: args.r_max,
    };
    let mut cfg = DeConfig::new(shape, args.rate, Seed(args.seed));
    if let Some(np) = args.population {
        cfg.population = np;
    }
    cfg.weight = args.weight;
    cfg.crossover = args.crossover;
    cfg.generations = args.generations;
    cfg.init_attempts = args.init_attempts;
    cfg.target = args.target;
    if args.certify == Certifier::Fast {
        cfg.certify = DensityEvolutionConfig::fast();
    }
    let head = header(
        "design",
        &[
            ("rate", args.rate.to_string()),
            ("l_max", args.l_max.to_string()),
            ("r_max", args.r_max.to_string()),
            ("population", cfg.population.to_string()),
            ("weight", args.weight.to_string()),
            ("crossover", args.crossover.to_string()),
            ("generations", args.generations.to_string()),
            ("init_attempts", args.init_attempts.to_string()),
            ("target", show(&args.target)),
            ("certify", format!("{:?}", args.certify).to_lowercase()),
            ("seed", args.seed.to_string()),
        ],
    );
    let (best, history) = optimize_with(&cfg, |rec, _| {
        eprintln!(
            "generation {}: certified {:.6}, search {:.6}",
            rec.generation, rec.best_threshold, rec.search_best
        );
        Ok(())
    })?;
    let body = registry_text(&best, args.rate).context("search ended without a feasible distribution")?;
    Ok((format!("{head}{body}"), format!("{head}{}", history_csv(&history))))
}

fn keyrate(args: &KeyrateArgs) -> Result<String> {
    let grid = parse_grid(&args.p_grid)?;
    let registry = load_registry(&args.registry)?;
    let mut points: Vec<CurvePoint> = Vec::new();
    if let Some(f) = args.cascade_f {
        let measured: Vec<(f64, f64)> = grid.iter().map(|&p| (p, f)).collect();
        points.extend(metrics::cascade_curve(&measured)?);
    }
    points.extend(ldpc_curve(&registry, &grid, args.hash_block)?);
    points.sort_by(|a, b| a.p.total_cmp(&b.p).then(scheme_order(a.scheme).cmp(&scheme_order(b.scheme))));
    let mut text = header(
        "keyrate",
        &[
            ("p_grid", args.p_grid.clone()),
            ("registry", show_path(&args.registry)),
            ("hash_block", show(&args.hash_block)),
            ("cascade_f", show(&args.cascade_f)),
        ],
    );
    text.push_str(&curve_csv(&points));
    Ok(text)
}

fn scheme_order(s: Scheme) -> u8 {
    match s {
        Scheme::Cascade => 0,
        Scheme::Ldpc => 1,
        Scheme::LdpcRandomized => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Thresholds(a) => emit(a.out.as_deref(), &thresholds(&a)?),
        Command::Simulate(a) => emit(a.out.as_deref(), &simulate(&a)?),
        Command::Keyrate(a) => emit(a.out.as_deref(), &keyrate(&a)?),
        Command::Design(a) => {
            let (registry, history) = design(&a)?;
            emit(Some(&a.out), &registry)?;
            emit(a.history.as_deref(), &history)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
