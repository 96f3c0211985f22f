//! Subcommand implementations. Each one parses its params block, runs
//! the seeded experiment through willsim-core, and assembles a report.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use willsim_core::engine::{self, VoteEffect};
use willsim_core::experiments;
use willsim_core::population::VoteKind;
use willsim_core::universe::{DiscountConfig, Universe};
use willsim_core::will;
use willsim_core::willpower::{self, FractionTable};

use crate::config::*;
use crate::report::Report;
use crate::CliError;

fn parse_params<T: DeserializeOwned>(params: &serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(params.clone())
        .map_err(|e| CliError::Config(format!("invalid params block: {e}")))
}

fn make_report<P: Serialize, M: Serialize>(
    subcommand: &str,
    seed: u64,
    params: &P,
    metrics: &M,
) -> Result<Report, CliError> {
    Report::new(subcommand, seed, params, metrics)
        .map_err(|e| CliError::Runtime(format!("report serialization: {e}")))
}

/// Runs `jobs` closures on up to `threads` workers, returning results in
/// job order. Every job is independently seeded by its caller, so the
/// output is identical for every thread count.
fn indexed_parallel<T, F>(jobs: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(jobs.max(1));
    if threads <= 1 || jobs <= 1 {
        return (0..jobs).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..jobs).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slot_refs: Vec<std::sync::Mutex<&mut Option<T>>> =
        slots.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= jobs {
                    break;
                }
                let result = f(i);
                **slot_refs[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("job completed")).collect()
}

pub fn dispatch(
    subcommand: &str,
    params: &serde_json::Value,
    seed: u64,
    threads: usize,
    config_dir: &Path,
) -> Result<Report, CliError> {
    match subcommand {
        "simulate-crs" => simulate_crs(params, seed, threads),
        "infer" => infer(params, seed),
        "verify-a7" => verify_a7(params, seed, threads),
        "evaluate-policy" => evaluate_policy(params, seed, config_dir),
        "estimate-willpower" => estimate_willpower(params, seed, config_dir),
        "coverage-scan" => coverage_scan(params, seed),
        other => Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    }
}

fn simulate_crs(params: &serde_json::Value, seed: u64, threads: usize) -> Result<Report, CliError> {
    let p: SimulateCrsParams = parse_params(params)?;
    if p.n_grid.is_empty() {
        return Err(CliError::Config("n_grid must be non-empty".into()));
    }
    let outcomes = indexed_parallel(p.n_grid.len(), threads, |i| {
        let n = p.n_grid[i];
        experiments::coverage_sweep(&[n], p.budget, p.rank, p.noise_sigma, seed)
    });
    let mut points = Vec::new();
    for outcome in outcomes {
        points.extend(outcome.map_err(CliError::from)?);
    }
    let fit = experiments::fit_inverse_law(&points);
    let mut csv = String::from("n,v_sampled,v_possible,fraction\n");
    for pt in &points {
        writeln!(csv, "{},{},{},{}", pt.n, pt.v_sampled, pt.v_possible, pt.fraction).unwrap();
    }
    let metrics = json!({
        "fit_a": fit.a,
        "r_squared": fit.r_squared,
        "points": points.iter().map(|pt| json!({
            "n": pt.n,
            "fraction": pt.fraction,
        })).collect::<Vec<_>>(),
    });
    let mut report = make_report("simulate-crs", seed, &p, &metrics)?;
    report.add_table("coverage.csv", csv);
    Ok(report)
}

fn infer(params: &serde_json::Value, seed: u64) -> Result<Report, CliError> {
    let p: InferParams = parse_params(params)?;
    let validation = experiments::recovery_benchmark(
        p.n_humans,
        p.n_items,
        p.observed_fraction,
        p.holdout_fraction,
        &p.model,
        seed,
    )?;
    let mut csv = String::from("train_rmse,holdout_rmse,sign_accuracy,n_train,n_holdout\n");
    writeln!(
        csv,
        "{},{},{},{},{}",
        validation.train_rmse,
        validation.holdout_rmse,
        validation.sign_accuracy,
        validation.n_train,
        validation.n_holdout
    )
    .unwrap();
    let mut report = make_report("infer", seed, &p, &validation)?;
    report.add_table("validation.csv", csv);
    Ok(report)
}

fn verify_a7(params: &serde_json::Value, seed: u64, threads: usize) -> Result<Report, CliError> {
    let p: VerifyA7Params = parse_params(params)?;
    let jobs: Vec<(VoteKind, f64)> = p
        .agreement_grid
        .iter()
        .map(|&c| (VoteKind::Agreement, c))
        .chain(p.pair_grid.iter().map(|&b| (VoteKind::Pair, b)))
        .collect();
    let effects = indexed_parallel(jobs.len(), threads, |i| {
        let (kind, magnitude) = jobs[i];
        engine::vote_effect(
            kind,
            magnitude,
            p.n_trials,
            p.n_background,
            seed.wrapping_add(i as u64),
        )
    });
    let mut csv =
        String::from("kind,magnitude,delta_prob,ci_low,ci_high,prob_before,prob_after\n");
    let mut rows = Vec::new();
    for (job, effect) in jobs.iter().zip(effects) {
        let effect: VoteEffect = effect.map_err(CliError::from)?;
        let kind = match job.0 {
            VoteKind::Agreement => "agreement",
            VoteKind::Pair => "pair",
        };
        writeln!(
            csv,
            "{kind},{},{},{},{},{},{}",
            job.1, effect.delta_prob, effect.ci_low, effect.ci_high, effect.prob_before,
            effect.prob_after
        )
        .unwrap();
        rows.push(json!({
            "kind": kind,
            "magnitude": job.1,
            "delta_prob": effect.delta_prob,
            "ci_low": effect.ci_low,
            "ci_high": effect.ci_high,
        }));
    }
    let metrics = json!({ "effects": rows });
    let mut report = make_report("verify-a7", seed, &p, &metrics)?;
    report.add_table("a7_effects.csv", csv);
    Ok(report)
}

fn evaluate_policy(
    params: &serde_json::Value,
    seed: u64,
    config_dir: &Path,
) -> Result<Report, CliError> {
    let p: EvaluatePolicyParams = parse_params(params)?;
    let universe_path = config_dir.join(&p.universe_file);
    let text = std::fs::read_to_string(&universe_path).map_err(|e| {
        CliError::Config(format!("cannot read universe {}: {e}", universe_path.display()))
    })?;
    let universe = Universe::from_json(&text).map_err(|e| {
        CliError::Config(format!("invalid universe {}: {e}", universe_path.display()))
    })?;
    if p.start_state >= universe.n_states() {
        return Err(CliError::Config(format!(
            "start_state {} out of range ({} states)",
            p.start_state,
            universe.n_states()
        )));
    }
    let discount = DiscountConfig {
        alpha_hist: p.alpha_hist,
        beta_time: p.beta_time,
        gamma_future: p.gamma_future,
        horizon: p.horizon,
    };
    discount.validate()?;
    let history_states = p
        .history_states
        .clone()
        .unwrap_or_else(|| vec![p.start_state]);
    if history_states.is_empty() {
        return Err(CliError::Config("history_states must be non-empty".into()));
    }
    for &s in &history_states {
        if s >= universe.n_states() {
            return Err(CliError::Config(format!(
                "history state {s} out of range ({} states)",
                universe.n_states()
            )));
        }
    }
    let history: Vec<_> = history_states
        .iter()
        .map(|&s| universe.woh[s].clone())
        .collect();
    let woh_now = history.last().unwrap().clone();
    let n_actions = universe.actions[p.start_state].len();
    let mut csv = String::from("action_index,action_name,simple_value,full_value\n");
    let mut rows = Vec::new();
    for a in 0..n_actions {
        let simple =
            universe.simple_value(a, p.start_state, &woh_now, p.beta_time, p.horizon)?;
        let full = universe.full_value(a, p.start_state, &history, &discount)?;
        writeln!(
            csv,
            "{a},{},{simple},{full}",
            universe.actions[p.start_state][a]
        )
        .unwrap();
        rows.push(json!({
            "action": universe.actions[p.start_state][a],
            "simple_value": simple,
            "full_value": full,
        }));
    }
    let best =
        universe.optimal_action(p.start_state, |a| {
            universe.full_value(a, p.start_state, &history, &discount)
        })?;
    let metrics = json!({
        "actions": rows,
        "optimal_action_index": best,
        "optimal_action": universe.actions[p.start_state][best],
        "truncation_tail_bound": discount.truncation_tail_bound(),
    });
    let mut report = make_report("evaluate-policy", seed, &p, &metrics)?;
    report.add_table("actions.csv", csv);
    Ok(report)
}

fn estimate_willpower(
    params: &serde_json::Value,
    seed: u64,
    config_dir: &Path,
) -> Result<Report, CliError> {
    let p: EstimateWillpowerParams = parse_params(params)?;
    let dataset = if p.dataset == "bundled" {
        willpower::bundled_dataset()
    } else {
        let path = config_dir.join(&p.dataset);
        let raw = std::fs::read(&path).map_err(|e| {
            CliError::Config(format!("cannot read dataset {}: {e}", path.display()))
        })?;
        willpower::parse_dataset_csv(raw.as_slice()).map_err(|e| {
            CliError::Config(format!("invalid dataset {}: {e}", path.display()))
        })?
    };
    let fractions = match &p.fractions {
        FractionsChoice::Named(name) => match name.as_str() {
            "baseline" => FractionTable::baseline(),
            "projected" => FractionTable::projected(),
            other => {
                return Err(CliError::Config(format!(
                    "unknown fraction table '{other}' (expected baseline or projected)"
                )));
            }
        },
        FractionsChoice::Explicit {
            liberal_democracy,
            electoral_democracy,
            electoral_autocracy,
            closed_autocracy,
            no_data,
            body_aligned_share,
        } => FractionTable {
            liberal_democracy: *liberal_democracy,
            electoral_democracy: *electoral_democracy,
            electoral_autocracy: *electoral_autocracy,
            closed_autocracy: *closed_autocracy,
            no_data: *no_data,
            body_aligned_share: *body_aligned_share,
        },
    };
    let will_tw = willpower::will_power_estimate(&dataset, &fractions, p.budget_tw, p.body_tw)?;
    let ratios = willpower::ratios(will_tw, p.body_tw, p.budget_tw)?;
    let total_population: u64 = dataset.iter().map(|c| c.population).sum();
    let mut csv = String::from("category,population,share\n");
    for category in [
        willpower::RegimeCategory::LiberalDemocracy,
        willpower::RegimeCategory::ElectoralDemocracy,
        willpower::RegimeCategory::ElectoralAutocracy,
        willpower::RegimeCategory::ClosedAutocracy,
        willpower::RegimeCategory::NoData,
    ] {
        let population: u64 = dataset
            .iter()
            .filter(|c| c.category == category)
            .map(|c| c.population)
            .sum();
        writeln!(
            csv,
            "{},{population},{}",
            category.name(),
            population as f64 / total_population as f64
        )
        .unwrap();
    }
    let metrics = json!({
        "will_power_tw": will_tw,
        "abundance": ratios.abundance,
        "alignment": ratios.alignment,
        "countries": dataset.len(),
        "total_population": total_population,
    });
    let mut report = make_report("estimate-willpower", seed, &p, &metrics)?;
    report.add_table("category_shares.csv", csv);
    Ok(report)
}

fn coverage_scan(params: &serde_json::Value, seed: u64) -> Result<Report, CliError> {
    let p: CoverageScanParams = parse_params(params)?;
    let mut csv = String::from("n,budget,fraction,k_over_n\n");
    let mut max_gap = 0.0f64;
    for &n in &p.session_n_grid {
        let fraction = experiments::exact_coverage_law(n, p.session_budget)?;
        let law = p.session_budget as f64 / n as f64;
        max_gap = max_gap.max((fraction - law).abs());
        writeln!(csv, "{n},{},{fraction},{law}", p.session_budget).unwrap();
    }
    let sensing = will::sensing_feasibility(
        p.population,
        p.seconds_per_action,
        p.time_fraction,
        p.duration_years,
        p.lifetime_years,
    )?;
    let metrics = json!({
        "max_law_gap": max_gap,
        "sensing": {
            "coverage_fraction": sensing.coverage_fraction,
            "coverage_percent": sensing.coverage_fraction * 100.0,
            "years_to_full": sensing.years_to_full,
            "lifetimes": sensing.lifetimes,
        },
    });
    let mut report = make_report("coverage-scan", seed, &p, &metrics)?;
    report.add_table("session_coverage.csv", csv);
    Ok(report)
}
