//! End-to-end seeded experiments combining the population simulator, the
//! response session, and elicitation inference. The CLI subcommands and
//! the acceptance suite both run through these functions so the numbers
//! they report come from a single code path.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::crs::{Session, SessionConfig, Strategy, VoteRequest};
use crate::error::{Error, Result};
use crate::inference::{self, Ensemble, FitConfig, Observation, ValidationReport};
use crate::population::{
    self, AgreementResponse, Behavior, LatentPopulation, Polarity, VoteRecord,
};
use crate::will::{HumanId, ItemId};

fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9e3779b97f4a7c15) ^ b.wrapping_mul(0xd1b54a32d192ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    pub n: usize,
    pub v_sampled: usize,
    pub v_possible: usize,
    pub fraction: f64,
}

/// Runs one full uniform-strategy session: N participants, N items, the
/// stated per-participant budget, honest (or noisy) responders drawn from
/// a seeded rank-2 population.
pub fn run_uniform_session(
    n: usize,
    budget: u32,
    rank: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Session> {
    let population = LatentPopulation::generate(n, n, rank, noise_sigma, mix_seed(seed, 1, 0))?;
    let mut profiles = population.make_profiles(budget);
    let config = SessionConfig {
        agreement_magnitude: 1.0,
        pair_shift: 0.5,
        strategy: Strategy::Uniform,
        per_participant_budget: budget,
    };
    let mut session = Session::new(config, "simulated prompt", n, 0, mix_seed(seed, 2, 0))?;
    for k in 0..n {
        session.submit_perspective(HumanId(k as u32), format!("perspective {k}"))?;
    }
    let mut vote_counter = 0u64;
    let mut active = true;
    while active {
        active = false;
        for h in 0..n {
            let human = HumanId(h as u32);
            if session.budget_left(human) == 0 {
                continue;
            }
            let request = match session.elicit_next(human, None) {
                Ok(r) => r,
                Err(Error::NothingToElicit { .. }) => continue,
                Err(e) => return Err(e),
            };
            active = true;
            vote_counter += 1;
            let vote_seed = mix_seed(seed, 3, vote_counter);
            match request {
                VoteRequest::Agreement { human, item } => {
                    let response = population::respond_agreement(
                        &population,
                        &mut profiles[human.0 as usize],
                        item,
                        vote_seed,
                    )?;
                    session.apply_agreement_vote(human, item, response, vote_seed)?;
                }
                VoteRequest::Pair { human, first, second } => {
                    let chosen = population::respond_pair(
                        &population,
                        &mut profiles[human.0 as usize],
                        first,
                        second,
                        vote_seed,
                    )?;
                    session.apply_pair_vote(human, first, second, chosen, vote_seed)?;
                }
            }
        }
    }
    Ok(session)
}

/// Measures observed-cell coverage across a grid of session sizes.
pub fn coverage_sweep(
    n_grid: &[usize],
    budget: u32,
    rank: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<CoveragePoint>> {
    let mut points = Vec::new();
    for &n in n_grid {
        let session = run_uniform_session(n, budget, rank, noise_sigma, mix_seed(seed, 10, n as u64))?;
        let stats = session.coverage_stats();
        points.push(CoveragePoint {
            n,
            v_sampled: stats.v_sampled,
            v_possible: stats.v_possible,
            fraction: stats.fraction,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseLawFit {
    /// Coefficient of the fitted fraction = a / N law.
    pub a: f64,
    pub r_squared: f64,
}

/// Least-squares fit of fraction = a/N through the origin.
pub fn fit_inverse_law(points: &[CoveragePoint]) -> InverseLawFit {
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.fraction).collect();
    let a = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>()
        / xs.iter().map(|x| x * x).sum::<f64>();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a * x) * (y - a * x))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    InverseLawFit {
        a,
        r_squared: if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot },
    }
}

/// Agreement-only session on a never-skipping population: with per-capita
/// budget k and M = N items the observed coverage is exactly k/N.
pub fn exact_coverage_law(n: usize, k: u32) -> Result<f64> {
    struct FlatVariance;
    impl crate::crs::VarianceSource for FlatVariance {
        fn variance(&self, _h: HumanId, _j: ItemId) -> f64 {
            1.0
        }
    }
    // all wills pinned to 1: every response is Agree
    let population = LatentPopulation::from_factors(
        vec![vec![1.0]; n],
        vec![vec![1.0]; n],
        0.0,
        0,
    )?;
    let mut profiles = population.make_profiles(k);
    let config = SessionConfig {
        agreement_magnitude: 1.0,
        pair_shift: 0.5,
        strategy: Strategy::UncertaintyWeighted,
        per_participant_budget: k,
    };
    let mut session = Session::new(config, "exact law", n, 0, 0)?;
    for j in 0..n {
        session.submit_perspective(HumanId(0), format!("item {j}"))?;
    }
    for h in 0..n {
        let human = HumanId(h as u32);
        while session.budget_left(human) > 0 {
            match session.elicit_next(human, Some(&FlatVariance)) {
                Ok(VoteRequest::Agreement { human, item }) => {
                    let response = population::respond_agreement(
                        &population,
                        &mut profiles[human.0 as usize],
                        item,
                        0,
                    )?;
                    session.apply_agreement_vote(human, item, response, 0)?;
                }
                Ok(VoteRequest::Pair { .. }) => unreachable!("uncertainty never schedules pairs"),
                Err(Error::NothingToElicit { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(session.coverage_stats().fraction)
}

/// Samples `per_human` distinct ground-truth cells for every participant.
pub fn sample_per_capita_observations(
    population: &LatentPopulation,
    per_human: usize,
    seed: u64,
) -> Vec<Observation> {
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut observations = Vec::with_capacity(population.n_humans * per_human);
    for h in 0..population.n_humans {
        let mut items: Vec<u32> = (0..population.n_items as u32).collect();
        for i in (1..items.len()).rev() {
            let k = rng.gen_range(0..=i);
            items.swap(i, k);
        }
        for &j in items.iter().take(per_human.min(items.len())) {
            let (h, j) = (HumanId(h as u32), ItemId(j));
            observations.push(Observation {
                human: h,
                item: j,
                value: population.true_will(h, j),
            });
        }
    }
    observations
}

/// Samples a fraction of all cells uniformly without replacement.
pub fn sample_fraction_observations(
    population: &LatentPopulation,
    fraction: f64,
    seed: u64,
) -> Vec<Observation> {
    let total = population.n_humans * population.n_items;
    let count = (total as f64 * fraction).round() as usize;
    let mut cells: Vec<usize> = (0..total).collect();
    let mut rng = Pcg64::seed_from_u64(seed);
    for i in (1..cells.len()).rev() {
        let k = rng.gen_range(0..=i);
        cells.swap(i, k);
    }
    cells[..count.min(total)]
        .iter()
        .map(|&c| {
            let h = HumanId((c / population.n_items) as u32);
            let j = ItemId((c % population.n_items) as u32);
            Observation {
                human: h,
                item: j,
                value: population.true_will(h, j),
            }
        })
        .collect()
}

/// The rank-2 recovery benchmark: sample, split, fit, validate.
pub fn recovery_benchmark(
    n_humans: usize,
    n_items: usize,
    observed_fraction: f64,
    holdout_fraction: f64,
    config: &FitConfig,
    seed: u64,
) -> Result<ValidationReport> {
    let population =
        LatentPopulation::generate(n_humans, n_items, 2, 0.0, mix_seed(seed, 20, 0))?;
    let observations =
        sample_fraction_observations(&population, observed_fraction, mix_seed(seed, 21, 0));
    inference::holdout_validate(
        &observations,
        n_humans,
        n_items,
        holdout_fraction,
        config,
        seed,
    )
}

/// The O(n)-votes benchmark: a fixed per-participant budget on an n x n
/// rank-2 population.
pub fn per_capita_recovery(
    n: usize,
    votes_per_human: usize,
    holdout_fraction: f64,
    config: &FitConfig,
    seed: u64,
) -> Result<ValidationReport> {
    let population = LatentPopulation::generate(n, n, 2, 0.0, mix_seed(seed, 30, 0))?;
    let observations =
        sample_per_capita_observations(&population, votes_per_human, mix_seed(seed, 31, 0));
    inference::holdout_validate(&observations, n, n, holdout_fraction, config, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingComparison {
    pub uniform_rmse: f64,
    pub uncertainty_rmse: f64,
}

/// Uncertainty-weighted vs uniform sampling at equal per-participant vote
/// budget, evaluated against ground truth on a common held-out cell set
/// neither arm may elicit.
pub fn sampling_comparison(
    n: usize,
    budget: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<SamplingComparison> {
    let population = LatentPopulation::generate(n, n, 2, 0.0, mix_seed(seed, 40, 0))?;
    let total = n * n;
    let mut cells: Vec<usize> = (0..total).collect();
    let mut rng = Pcg64::seed_from_u64(mix_seed(seed, 41, 0));
    for i in (1..cells.len()).rev() {
        let k = rng.gen_range(0..=i);
        cells.swap(i, k);
    }
    let n_holdout = total / 5;
    let holdout_cells: Vec<usize> = cells[..n_holdout].to_vec();
    let mut allowed = vec![true; total];
    for &c in &holdout_cells {
        allowed[c] = false;
    }
    let truth = |c: usize| {
        population.true_will(HumanId((c / n) as u32), ItemId((c % n) as u32))
    };
    let eval = |model: &inference::FactorModel| -> f64 {
        let sse: f64 = holdout_cells
            .iter()
            .map(|&c| {
                let h = HumanId((c / n) as u32);
                let j = ItemId((c % n) as u32);
                let p = model.predict(h, j).unwrap();
                (p - truth(c)) * (p - truth(c))
            })
            .sum();
        (sse / holdout_cells.len() as f64).sqrt()
    };
    let fit_config = FitConfig::default();

    // uniform arm: budget distinct allowed cells per human
    let mut uniform_obs = Vec::new();
    let mut rng_u = Pcg64::seed_from_u64(mix_seed(seed, 42, 0));
    for h in 0..n {
        let mut row: Vec<usize> = (0..n).filter(|j| allowed[h * n + j]).collect();
        for i in (1..row.len()).rev() {
            let k = rng_u.gen_range(0..=i);
            row.swap(i, k);
        }
        for &j in row.iter().take(budget) {
            uniform_obs.push(Observation {
                human: HumanId(h as u32),
                item: ItemId(j as u32),
                value: truth(h * n + j),
            });
        }
    }
    let uniform_model = inference::fit(&uniform_obs, n, n, &fit_config, mix_seed(seed, 43, 0))?;
    let uniform_rmse = eval(&uniform_model);

    // uncertainty arm: a small uniform bootstrap, then one
    // variance-guided vote per human per round
    let mut observed = vec![false; total];
    let mut active_obs = Vec::new();
    let mut rng_a = Pcg64::seed_from_u64(mix_seed(seed, 44, 0));
    for h in 0..n {
        let mut row: Vec<usize> = (0..n).filter(|j| allowed[h * n + j]).collect();
        for i in (1..row.len()).rev() {
            let k = rng_a.gen_range(0..=i);
            row.swap(i, k);
        }
        for &j in row.iter().take(bootstrap.min(budget)) {
            observed[h * n + j] = true;
            active_obs.push(Observation {
                human: HumanId(h as u32),
                item: ItemId(j as u32),
                value: truth(h * n + j),
            });
        }
    }
    let round_config = FitConfig {
        epochs: 160,
        ..fit_config.clone()
    };
    for round in 0..budget.saturating_sub(bootstrap) {
        let ensemble = Ensemble::fit(
            &active_obs,
            n,
            n,
            &round_config,
            8,
            mix_seed(seed, 45, round as u64),
        )?;
        for h in 0..n {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let c = h * n + j;
                if !allowed[c] || observed[c] {
                    continue;
                }
                let (_, var) = ensemble
                    .predict_with_variance(HumanId(h as u32), ItemId(j as u32))?;
                if best.map(|(_, bv)| var > bv).unwrap_or(true) {
                    best = Some((j, var));
                }
            }
            if let Some((j, _)) = best {
                observed[h * n + j] = true;
                active_obs.push(Observation {
                    human: HumanId(h as u32),
                    item: ItemId(j as u32),
                    value: truth(h * n + j),
                });
            }
        }
    }
    let uncertainty_model =
        inference::fit(&active_obs, n, n, &fit_config, mix_seed(seed, 46, 0))?;
    let uncertainty_rmse = eval(&uncertainty_model);

    Ok(SamplingComparison {
        uniform_rmse,
        uncertainty_rmse,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollusionOutcome {
    pub flagged: Vec<HumanId>,
    pub colluder_ids: Vec<HumanId>,
    pub recall: f64,
    pub false_positives: usize,
}

/// The standard collusion benchmark: `n_honest` honest participants plus
/// `n_colluders` perfect colluders on a rank-2 population with one item
/// per participant. Honest participants spend their votes on independent
/// random item subsets; colluders brigade one shared subset around their
/// target, which is what the co-voting correlation test keys on.
pub fn collusion_benchmark(
    n_honest: usize,
    n_colluders: usize,
    votes_per_participant: usize,
    correlation_threshold: f64,
    min_common_votes: usize,
    seed: u64,
) -> Result<CollusionOutcome> {
    let n_total = n_honest + n_colluders;
    let n_items = n_total;
    let population =
        LatentPopulation::generate(n_total, n_items, 2, 0.0, mix_seed(seed, 50, 0))?;
    let mut profiles = population.make_profiles(votes_per_participant as u32);
    population::inject_colluders(
        &mut profiles,
        n_colluders,
        ItemId(0),
        Polarity::Favor,
        mix_seed(seed, 51, 0),
    )?;
    let colluder_ids: Vec<HumanId> = profiles
        .iter()
        .filter(|p| matches!(p.behavior, Behavior::Colluder { .. }))
        .map(|p| p.id)
        .collect();
    let random_subset = |count: usize, subset_seed: u64| -> Vec<u32> {
        let mut items: Vec<u32> = (0..n_items as u32).collect();
        let mut rng = Pcg64::seed_from_u64(subset_seed);
        for i in (1..items.len()).rev() {
            let k = rng.gen_range(0..=i);
            items.swap(i, k);
        }
        items.truncate(count.min(n_items));
        items
    };
    // the brigade list every colluder works through, target included
    let mut brigade = random_subset(votes_per_participant, mix_seed(seed, 53, 0));
    if !brigade.contains(&0) {
        brigade[0] = 0;
    }
    let mut log: Vec<VoteRecord> = Vec::new();
    for profile in profiles.iter_mut() {
        let ballot = if matches!(profile.behavior, Behavior::Colluder { .. }) {
            brigade.clone()
        } else {
            random_subset(
                votes_per_participant,
                mix_seed(seed, 54, profile.id.0 as u64),
            )
        };
        for j in ballot {
            let vote_seed = mix_seed(seed, 52, (profile.id.0 as u64) << 20 | j as u64);
            let response =
                population::respond_agreement(&population, profile, ItemId(j), vote_seed)?;
            let choice = match response {
                AgreementResponse::Agree => population::VoteChoice::Agree,
                AgreementResponse::Disagree => population::VoteChoice::Disagree,
                AgreementResponse::Skip => population::VoteChoice::Skip,
            };
            log.push(VoteRecord {
                participant: profile.id,
                item_a: ItemId(j),
                item_b: None,
                kind: population::VoteKind::Agreement,
                choice,
                seed: vote_seed,
            });
        }
    }
    let flagged = population::detect_anomalies(&log, correlation_threshold, min_common_votes);
    let hits = flagged
        .iter()
        .filter(|id| colluder_ids.contains(id))
        .count();
    let false_positives = flagged.len() - hits;
    Ok(CollusionOutcome {
        recall: if n_colluders == 0 {
            1.0
        } else {
            hits as f64 / n_colluders as f64
        },
        flagged,
        colluder_ids,
        false_positives,
    })
}
