//! Differential-evolution search over degree distributions of a fixed rate.
//!
//! A candidate is a vector of free coefficients (see [`DegreeShape`]); the
//! three dependent coefficients come from [`complete_unchecked`]. Fitness is
//! the density-evolution threshold from a coarse evaluator. The incumbent
//! with the best search fitness is re-evaluated on the certifying grid, and
//! the best certified distribution is what the search returns.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{Seed, SimRng};
use crate::degree::{complete_unchecked, CodeRegistry, DegreeDistribution, DegreeShape, RegistryEntry};
use crate::densevo::{DensityEvolution, DensityEvolutionConfig};
use crate::entropy::inverse_binary_entropy;
use crate::error::{Error, Result};

/// Fitness of a candidate that violates a constraint.
pub const PENALTY: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    /// NP.
    pub population: usize,
    /// Differential weight F.
    pub weight: f64,
    /// Crossover rate CR.
    pub crossover: f64,
    /// Number of generations G.
    pub generations: usize,
    pub shape: DegreeShape,
    pub rate: f64,
    pub seed: Seed,
    /// Random draws allowed per population slot during initialization.
    pub init_attempts: usize,
    /// Stop once the certified threshold reaches this value.
    pub target: Option<f64>,
    pub search: DensityEvolutionConfig,
    pub certify: DensityEvolutionConfig,
}

impl DeConfig {
    /// F = 0.5, CR = 0.8, NP = 10 D, G = 50.
    pub fn new(shape: DegreeShape, rate: f64, seed: Seed) -> Self {
        DeConfig {
            population: (10 * shape.free_dimension()).max(4),
            weight: 0.5,
            crossover: 0.8,
            generations: 50,
            shape,
            rate,
            seed,
            init_attempts: 1000,
            target: None,
            search: DensityEvolutionConfig::fast(),
            certify: DensityEvolutionConfig::default(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.shape.free_dimension()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(what));
        if self.population < 4 {
            return bad(format!("population {} < 4", self.population));
        }
        if !(self.weight > 0.0 && self.weight <= 2.0) {
            return bad(format!("weight {} outside (0, 2]", self.weight));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return bad(format!("crossover {} outside [0, 1]", self.crossover));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return bad(format!("rate {} outside (0, 1)", self.rate));
        }
        if self.init_attempts == 0 {
            return bad("init_attempts = 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Clamped free coefficients.
    pub free: Vec<f64>,
    /// Completed distribution, absent when the completion is infeasible.
    pub dd: Option<DegreeDistribution>,
    /// Threshold, or [`PENALTY`].
    pub fitness: f64,
}

impl Candidate {
    fn penalized(free: Vec<f64>, dd: Option<DegreeDistribution>) -> Self {
        Candidate {
            free,
            dd,
            fitness: PENALTY,
        }
    }

    /// Assigns `threshold` as fitness unless the stability condition fails
    /// there or the completion was infeasible.
    pub fn judged(free: Vec<f64>, dd: Option<DegreeDistribution>, threshold: f64) -> Self {
        match dd {
            Some(d) if d.is_stable(threshold) => Candidate {
                free,
                dd: Some(d),
                fitness: threshold,
            },
            dd => Self::penalized(free, dd),
        }
    }

    pub fn is_penalized(&self) -> bool {
        self.fitness == PENALTY
    }

    /// Registry entry at the given nominal rate, or `None` if penalized.
    pub fn registry_entry(&self, rate: f64) -> Option<RegistryEntry> {
        let dd = self.dd.clone().filter(|_| !self.is_penalized())?;
        Some(RegistryEntry {
            rate,
            threshold: self.fitness,
            dd,
        })
    }
}

/// Clamps the free coefficients to `[0, 1]` and completes them. The
/// distribution is `None` when a dependent coefficient leaves `[0, 1]`.
pub fn repair(raw: &[f64], cfg: &DeConfig) -> (Vec<f64>, Option<DegreeDistribution>) {
    let free: Vec<f64> = raw.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let dd = complete_unchecked(&free, cfg.shape, cfg.rate)
        .ok()
        .filter(|c| c.is_feasible())
        .and_then(|c| {
            let lambda = c.lambda.into_iter().enumerate().skip(2).collect();
            let rho = c.rho.into_iter().enumerate().skip(2).collect();
            DegreeDistribution::new(lambda, rho).ok()
        });
    (free, dd)
}

/// The two density-evolution engines of a search, with brackets capped just
/// above the Shannon limit of the target rate.
pub struct Evaluator {
    search: DensityEvolution,
    certify: DensityEvolution,
}

impl Evaluator {
    pub fn new(cfg: &DeConfig) -> Result<Self> {
        let limit = inverse_binary_entropy(1.0 - cfg.rate, 1e-12)? + 5e-3;
        let capped = |c: &DensityEvolutionConfig| {
            let mut c = c.clone();
            c.bracket.1 = c.bracket.1.min(limit);
            DensityEvolution::new(c)
        };
        Ok(Evaluator {
            search: capped(&cfg.search)?,
            certify: capped(&cfg.certify)?,
        })
    }

    /// Full search-grid evaluation.
    pub fn evaluate(&self, free: Vec<f64>, dd: Option<DegreeDistribution>) -> Result<Candidate> {
        match dd {
            None => Ok(Candidate::penalized(free, None)),
            Some(d) => {
                let t = self.search.find_threshold(&d)?.threshold;
                Ok(Candidate::judged(free, Some(d), t))
            }
        }
    }

    /// The trial's evaluation if it strictly beats `incumbent`, else `None`.
    fn challenge(
        &self,
        free: Vec<f64>,
        dd: Option<DegreeDistribution>,
        incumbent: &Candidate,
    ) -> Result<Option<Candidate>> {
        let Some(d) = dd else {
            return Ok(None);
        };
        let trial = if incumbent.is_penalized() {
            self.evaluate(free, Some(d))?
        } else {
            match self.search.threshold_above(&d, incumbent.fitness)? {
                Some(t) => Candidate::judged(free, Some(d), t),
                None => return Ok(None),
            }
        };
        Ok((trial.fitness > incumbent.fitness).then_some(trial))
    }

    /// Certified threshold of `dd` if it is stable there and exceeds
    /// `floor` (pass a negative floor for an unconditional evaluation).
    pub fn certify(&self, dd: &DegreeDistribution, floor: f64) -> Result<Option<f64>> {
        let t = if floor < 0.0 {
            Some(self.certify.find_threshold(dd)?.threshold)
        } else {
            self.certify.threshold_above(dd, floor)?
        };
        Ok(t.filter(|&t| t > floor && dd.is_stable(t)))
    }
}

/// Mutant `a + F (b - c)` for slot `i` with binomial crossover; one gene is
/// always taken from the mutant.
pub fn trial_vector(population: &[Candidate], i: usize, cfg: &DeConfig, rng: &mut SimRng) -> Vec<f64> {
    let np = population.len();
    let mut pick = |taken: &[usize]| loop {
        let k = rng.random_range(0..np);
        if !taken.contains(&k) {
            return k;
        }
    };
    let a = pick(&[i]);
    let b = pick(&[i, a]);
    let c = pick(&[i, a, b]);
    let d = population[i].free.len();
    let forced = rng.random_range(0..d);
    (0..d)
        .map(|j| {
            let take = j == forced || rng.random::<f64>() < cfg.crossover;
            if take {
                let (xa, xb, xc) = (population[a].free[j], population[b].free[j], population[c].free[j]);
                xa + cfg.weight * (xb - xc)
            } else {
                population[i].free[j]
            }
        })
        .collect()
}

/// Outcome of one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub population: Vec<Candidate>,
    /// Fraction of trials whose completion was feasible.
    pub feasible_fraction: f64,
}

/// One generation: build all trials from the current population, evaluate
/// them in parallel, then select slot by slot.
pub fn de_step(
    population: &[Candidate],
    cfg: &DeConfig,
    eval: &Evaluator,
    rng: &mut SimRng,
) -> Result<StepReport> {
    if population.len() < 4 {
        return Err(Error::Config(format!(
            "population {} < 4",
            population.len()
        )));
    }
    let trials: Vec<(Vec<f64>, Option<DegreeDistribution>)> = (0..population.len())
        .map(|i| repair(&trial_vector(population, i, cfg, rng), cfg))
        .collect();
    let feasible = trials.iter().filter(|t| t.1.is_some()).count();
    let outcomes: Vec<Option<Candidate>> = trials
        .into_par_iter()
        .zip(population.par_iter())
        .map(|((free, dd), incumbent)| eval.challenge(free, dd, incumbent))
        .collect::<Result<_>>()?;
    let next = outcomes
        .into_iter()
        .zip(population)
        .map(|(won, old)| won.unwrap_or_else(|| old.clone()))
        .collect();
    Ok(StepReport {
        population: next,
        feasible_fraction: feasible as f64 / population.len() as f64,
    })
}

/// One row of the search history.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best certified threshold so far.
    pub best_threshold: f64,
    /// Best coarse-grid fitness in the population.
    pub search_best: f64,
    pub feasible_fraction: f64,
}

impl GenerationRecord {
    pub const CSV_HEADER: &'static str = "generation,best_threshold,search_best,feasible_fraction";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6}",
            self.generation, self.best_threshold, self.search_best, self.feasible_fraction
        )
    }
}

pub fn history_csv(history: &[GenerationRecord]) -> String {
    let mut out = String::from(GenerationRecord::CSV_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Uniformly random free vector: each block (lambda, rho) gets a random
/// direction scaled to a random total mass in `[0, 1)`.
fn random_free(cfg: &DeConfig, rng: &mut SimRng) -> Vec<f64> {
    let nl = cfg.shape.l_max.saturating_sub(3);
    let mut block = |len: usize| {
        let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let mass = rng.random::<f64>();
        w.into_iter()
            .map(|x| if total > 0.0 { x / total * mass } else { 0.0 })
            .collect::<Vec<_>>()
    };
    let mut free = block(nl);
    free.extend(block(cfg.dimension() - nl));
    free
}

fn initial_population(cfg: &DeConfig, eval: &Evaluator, rng: &mut SimRng) -> Result<(Vec<Candidate>, f64)> {
    let mut population = Vec::with_capacity(cfg.population);
    let mut draws = 0usize;
    let mut feasible = 0usize;
    let budget = cfg.init_attempts * cfg.population;
    while population.len() < cfg.population {
        // Draw a batch sequentially, evaluate it in parallel.
        let need = cfg.population - population.len();
        let batch: Vec<_> = (0..need)
            .map(|_| repair(&random_free(cfg, rng), cfg))
            .filter(|(_, dd)| dd.is_some())
            .collect();
        draws += need;
        feasible += batch.len();
        let scored: Vec<Candidate> = batch
            .into_par_iter()
            .map(|(free, dd)| eval.evaluate(free, dd))
            .collect::<Result<_>>()?;
        population.extend(scored.into_iter().filter(|c| !c.is_penalized()));
        if draws >= budget && population.len() < cfg.population {
            return Err(Error::Initialization { attempts: draws });
        }
    }
    Ok((population, feasible as f64 / draws as f64))
}

fn best_index(population: &[Candidate]) -> usize {
    (0..population.len())
        .max_by(|&a, &b| population[a].fitness.total_cmp(&population[b].fitness).then(b.cmp(&a)))
        .expect("nonempty population")
}

/// Runs the search. Returns the best certified candidate (its fitness is the
/// certified threshold) and one history row per generation, starting with
/// the initial population as generation 0.
pub fn optimize(cfg: &DeConfig) -> Result<(Candidate, Vec<GenerationRecord>)> {
    optimize_with(cfg, |_, _| Ok(()))
}

/// As [`optimize`], calling `on_generation` after every generation with the
/// history row and the current certified best (for checkpointing).
pub fn optimize_with<F>(cfg: &DeConfig, mut on_generation: F) -> Result<(Candidate, Vec<GenerationRecord>)>
where
    F: FnMut(&GenerationRecord, &Candidate) -> Result<()>,
{
    cfg.validate()?;
    let eval = Evaluator::new(cfg)?;
    let mut rng = cfg.seed.rng();
    let (mut population, init_feasible) = initial_population(cfg, &eval, &mut rng)?;

    // Certify incumbents in order of search fitness until one passes.
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| population[b].fitness.total_cmp(&population[a].fitness));
    let mut champion = None;
    for &i in &order {
        let c = &population[i];
        let dd = c.dd.as_ref().expect("unpenalized");
        if let Some(t) = eval.certify(dd, -1.0)? {
            champion = Some(Candidate {
                fitness: t,
                ..c.clone()
            });
            break;
        }
    }
    let mut champion = champion.ok_or(Error::Initialization {
        attempts: population.len(),
    })?;
    let mut last_certified = population[best_index(&population)].free.clone();

    let mut history = Vec::with_capacity(cfg.generations + 1);
    let record = GenerationRecord {
        generation: 0,
        best_threshold: champion.fitness,
        search_best: population[best_index(&population)].fitness,
        feasible_fraction: init_feasible,
    };
    on_generation(&record, &champion)?;
    history.push(record);

    for generation in 1..=cfg.generations {
        if cfg.target.is_some_and(|t| champion.fitness >= t) {
            break;
        }
        let step = de_step(&population, cfg, &eval, &mut rng)?;
        population = step.population;
        let best = &population[best_index(&population)];
        if best.free != last_certified {
            last_certified = best.free.clone();
            let dd = best.dd.as_ref().expect("unpenalized");
            if let Some(t) = eval.certify(dd, champion.fitness)? {
                champion = Candidate {
                    fitness: t,
                    ..best.clone()
                };
            }
        }
        let record = GenerationRecord {
            generation,
            best_threshold: champion.fitness,
            search_best: best.fitness,
            feasible_fraction: step.feasible_fraction,
        };
        on_generation(&record, &champion)?;
        history.push(record);
    }
    Ok((champion, history))
}

/// Registry text holding the single candidate, or `None` if penalized.
pub fn registry_text(best: &Candidate, rate: f64) -> Option<String> {
    best.registry_entry(rate)
        .map(|e| CodeRegistry::new(vec![e]).to_text())
}
