//! Elicitation inference: latent-factor matrix completion that fills the
//! unobserved Will matrix from sparse observations, with holdout
//! validation and ensemble variance for uncertainty-weighted sampling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::crs::VarianceSource;
use crate::error::{Error, Result};
use crate::will::{HumanId, ItemId, Provenance, WillMatrix};

/// One observed matrix cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub human: HumanId,
    pub item: ItemId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub rank: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            rank: 8,
            lambda: 0.05,
            epochs: 200,
            learning_rate: 0.05,
        }
    }
}

/// Default ensemble size for variance estimates.
pub const DEFAULT_ENSEMBLE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub n_humans: usize,
    pub n_items: usize,
    pub config: FitConfig,
    pub seed: u64,
    pub human_factors: Vec<Vec<f64>>,
    pub item_factors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub train_rmse: f64,
    pub holdout_rmse: f64,
    pub sign_accuracy: f64,
    pub n_train: usize,
    pub n_holdout: usize,
}

fn check_observations(
    observations: &[Observation],
    n_humans: usize,
    n_items: usize,
) -> Result<()> {
    if observations.is_empty() {
        return Err(Error::EmptyObservations);
    }
    for o in observations {
        if o.human.0 as usize >= n_humans {
            return Err(Error::IndexOutOfRange {
                what: "human",
                index: o.human.0 as usize,
                size: n_humans,
            });
        }
        if o.item.0 as usize >= n_items {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: o.item.0 as usize,
                size: n_items,
            });
        }
    }
    Ok(())
}

/// Fits factors by seeded stochastic gradient descent on squared error
/// with L2 regularization. Identical (data, config, seed) gives
/// bit-identical factors.
pub fn fit(
    observations: &[Observation],
    n_humans: usize,
    n_items: usize,
    config: &FitConfig,
    seed: u64,
) -> Result<FactorModel> {
    check_observations(observations, n_humans, n_items)?;
    if config.rank == 0 {
        return Err(Error::RankTooLarge { rank: 0, max: 0 });
    }
    let rank = config.rank;
    let mut rng = Pcg64::seed_from_u64(seed);
    let init = 0.4 / (rank as f64).sqrt();
    let mut human_factors: Vec<Vec<f64>> = (0..n_humans)
        .map(|_| (0..rank).map(|_| rng.gen_range(-init..=init)).collect())
        .collect();
    let mut item_factors: Vec<Vec<f64>> = (0..n_items)
        .map(|_| (0..rank).map(|_| rng.gen_range(-init..=init)).collect())
        .collect();

    // the objective is sum of squared errors plus lambda times the squared
    // factor norms; splitting the norm penalty across each row's and
    // column's observations keeps the per-step update equal to a gradient
    // step on that batch objective
    let mut human_counts = vec![0usize; n_humans];
    let mut item_counts = vec![0usize; n_items];
    for o in observations {
        human_counts[o.human.0 as usize] += 1;
        item_counts[o.item.0 as usize] += 1;
    }
    let mut order: Vec<usize> = (0..observations.len()).collect();
    let lr = config.learning_rate;
    for _ in 0..config.epochs {
        // fresh Fisher-Yates shuffle each epoch
        for i in (1..order.len()).rev() {
            let k = rng.gen_range(0..=i);
            order.swap(i, k);
        }
        for &idx in &order {
            let o = &observations[idx];
            let lambda_h = config.lambda / human_counts[o.human.0 as usize] as f64;
            let lambda_j = config.lambda / item_counts[o.item.0 as usize] as f64;
            let hf = &mut human_factors[o.human.0 as usize];
            let jf = &mut item_factors[o.item.0 as usize];
            let pred: f64 = hf.iter().zip(jf.iter()).map(|(a, b)| a * b).sum();
            let err = o.value - pred;
            for k in 0..rank {
                let h_k = hf[k];
                let j_k = jf[k];
                hf[k] += lr * (err * j_k - lambda_h * h_k);
                jf[k] += lr * (err * h_k - lambda_j * j_k);
            }
        }
    }
    Ok(FactorModel {
        n_humans,
        n_items,
        config: config.clone(),
        seed,
        human_factors,
        item_factors,
    })
}

impl FactorModel {
    fn predict_raw(&self, h: HumanId, j: ItemId) -> f64 {
        self.human_factors[h.0 as usize]
            .iter()
            .zip(&self.item_factors[j.0 as usize])
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Clipped factor dot product, always in [-1, 1].
    pub fn predict(&self, h: HumanId, j: ItemId) -> Result<f64> {
        if h.0 as usize >= self.n_humans {
            return Err(Error::IndexOutOfRange {
                what: "human",
                index: h.0 as usize,
                size: self.n_humans,
            });
        }
        if j.0 as usize >= self.n_items {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: j.0 as usize,
                size: self.n_items,
            });
        }
        Ok(self.predict_raw(h, j).clamp(-1.0, 1.0))
    }

    pub fn rmse(&self, observations: &[Observation]) -> f64 {
        if observations.is_empty() {
            return 0.0;
        }
        let sse: f64 = observations
            .iter()
            .map(|o| {
                let p = self.predict_raw(o.human, o.item).clamp(-1.0, 1.0);
                (p - o.value) * (p - o.value)
            })
            .sum();
        (sse / observations.len() as f64).sqrt()
    }

    /// Writes a hyperparameter header line followed by the factor tables.
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# rank={} lambda={} epochs={} learning_rate={} seed={}",
            self.config.rank,
            self.config.lambda,
            self.config.epochs,
            self.config.learning_rate,
            self.seed
        )?;
        write!(out, "kind,index")?;
        for k in 0..self.config.rank {
            write!(out, ",f{k}")?;
        }
        writeln!(out)?;
        for (kind, table) in [("human", &self.human_factors), ("item", &self.item_factors)] {
            for (idx, row) in table.iter().enumerate() {
                write!(out, "{kind},{idx}")?;
                for v in row {
                    write!(out, ",{}", crate::will::format_value(*v))?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// K independently seeded models over the same observations; the spread
/// of their predictions stands in for posterior variance.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub models: Vec<FactorModel>,
}

fn member_seed(base: u64, member: usize) -> u64 {
    // splitmix64 step keeps member streams well separated
    let mut z = base.wrapping_add((member as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Ensemble {
    pub fn fit(
        observations: &[Observation],
        n_humans: usize,
        n_items: usize,
        config: &FitConfig,
        members: usize,
        base_seed: u64,
    ) -> Result<Ensemble> {
        Self::fit_with_threads(observations, n_humans, n_items, config, members, base_seed, 1)
    }

    /// Trains members on `threads` worker threads. Members share only the
    /// read-only observations and each carries its own seed, so the result
    /// is identical for every thread count.
    pub fn fit_with_threads(
        observations: &[Observation],
        n_humans: usize,
        n_items: usize,
        config: &FitConfig,
        members: usize,
        base_seed: u64,
        threads: usize,
    ) -> Result<Ensemble> {
        if members == 0 {
            return Err(Error::EmptyObservations);
        }
        let threads = threads.max(1).min(members);
        let mut models: Vec<Option<FactorModel>> = (0..members).map(|_| None).collect();
        if threads == 1 {
            for (m, slot) in models.iter_mut().enumerate() {
                *slot = Some(fit(
                    observations,
                    n_humans,
                    n_items,
                    config,
                    member_seed(base_seed, m),
                )?);
            }
        } else {
            let results: Vec<Result<(usize, FactorModel)>> = std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for chunk_start in 0..threads {
                    let handle = scope.spawn(move || {
                        let mut out = Vec::new();
                        let mut m = chunk_start;
                        while m < members {
                            let model = fit(
                                observations,
                                n_humans,
                                n_items,
                                config,
                                member_seed(base_seed, m),
                            )?;
                            out.push((m, model));
                            m += threads;
                        }
                        Ok(out)
                    });
                    handles.push(handle);
                }
                handles
                    .into_iter()
                    .flat_map(|h| match h.join().expect("fit worker panicked") {
                        Ok(list) => list.into_iter().map(Ok).collect::<Vec<_>>(),
                        Err(e) => vec![Err(e)],
                    })
                    .collect()
            });
            for r in results {
                let (m, model) = r?;
                models[m] = Some(model);
            }
        }
        Ok(Ensemble {
            models: models.into_iter().map(|m| m.unwrap()).collect(),
        })
    }

    /// Mean and population variance of the member predictions.
    pub fn predict_with_variance(&self, h: HumanId, j: ItemId) -> Result<(f64, f64)> {
        if self.models.is_empty() {
            return Err(Error::EmptyObservations);
        }
        let preds: Vec<f64> = self
            .models
            .iter()
            .map(|m| m.predict(h, j))
            .collect::<Result<_>>()?;
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let variance = preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
        Ok((mean, variance))
    }
}

impl VarianceSource for Ensemble {
    fn variance(&self, h: HumanId, j: ItemId) -> f64 {
        self.predict_with_variance(h, j).map(|(_, v)| v).unwrap_or(0.0)
    }
}

/// Seeded split, fit on the train part only, report on the holdout.
///
/// Sign accuracy counts only holdout cells with nonzero truth; a
/// prediction of exactly 0 never matches.
pub fn holdout_validate(
    observations: &[Observation],
    n_humans: usize,
    n_items: usize,
    holdout_fraction: f64,
    config: &FitConfig,
    seed: u64,
) -> Result<ValidationReport> {
    check_observations(observations, n_humans, n_items)?;
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(Error::ValueOutOfRange {
            what: "holdout_fraction",
            value: holdout_fraction,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let mut order: Vec<usize> = (0..observations.len()).collect();
    let mut rng = Pcg64::seed_from_u64(seed ^ 0x5f5f_5f5f);
    for i in (1..order.len()).rev() {
        let k = rng.gen_range(0..=i);
        order.swap(i, k);
    }
    let n_holdout = (observations.len() as f64 * holdout_fraction).round() as usize;
    let n_train = observations.len() - n_holdout;
    if n_holdout == 0 || n_train == 0 {
        return Err(Error::DegenerateSplit { n_train, n_holdout });
    }
    let holdout: Vec<Observation> = order[..n_holdout]
        .iter()
        .map(|&i| observations[i])
        .collect();
    let train: Vec<Observation> = order[n_holdout..]
        .iter()
        .map(|&i| observations[i])
        .collect();
    let model = fit(&train, n_humans, n_items, config, seed)?;
    let signed: Vec<&Observation> = holdout.iter().filter(|o| o.value != 0.0).collect();
    let sign_hits = signed
        .iter()
        .filter(|o| {
            let p = model.predict_raw(o.human, o.item);
            (p > 0.0 && o.value > 0.0) || (p < 0.0 && o.value < 0.0)
        })
        .count();
    Ok(ValidationReport {
        train_rmse: model.rmse(&train),
        holdout_rmse: model.rmse(&holdout),
        sign_accuracy: if signed.is_empty() {
            1.0
        } else {
            sign_hits as f64 / signed.len() as f64
        },
        n_train,
        n_holdout,
    })
}

/// Densifies a Will matrix snapshot: existing entries are kept untouched,
/// every absent cell is filled with the model prediction and provenance
/// Inferred.
pub fn extrapolate(matrix: &WillMatrix, t: u64, model: &FactorModel) -> Result<WillMatrix> {
    if model.n_humans != matrix.n_humans() {
        return Err(Error::DimensionMismatch {
            what: "model humans",
            got: model.n_humans,
            expected: matrix.n_humans(),
        });
    }
    if model.n_items != matrix.n_items() {
        return Err(Error::DimensionMismatch {
            what: "model items",
            got: model.n_items,
            expected: matrix.n_items(),
        });
    }
    let mut out = matrix.clone();
    for h in 0..matrix.n_humans() {
        for j in 0..matrix.n_items() {
            let (h, j) = (HumanId(h as u32), ItemId(j as u32));
            if matrix.entry(t, h, j).is_none() {
                out.record_entry(t, h, j, model.predict(h, j)?, Provenance::Inferred)?;
            }
        }
    }
    Ok(out)
}

/// Extracts the observed cells of one snapshot as training observations.
pub fn observations_from_matrix(matrix: &WillMatrix, t: u64) -> Vec<Observation> {
    matrix
        .entries_at(t)
        .filter(|(_, _, e)| e.provenance == Provenance::Observed)
        .map(|(h, j, e)| Observation {
            human: h,
            item: j,
            value: e.value,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::LatentPopulation;

    fn sample_observations(
        pop: &LatentPopulation,
        count: usize,
        seed: u64,
    ) -> Vec<Observation> {
        // distinct cells, seeded
        let mut rng = Pcg64::seed_from_u64(seed);
        let total = pop.n_humans * pop.n_items;
        let mut cells: Vec<usize> = (0..total).collect();
        for i in (1..cells.len()).rev() {
            let k = rng.gen_range(0..=i);
            cells.swap(i, k);
        }
        cells[..count.min(total)]
            .iter()
            .map(|&c| {
                let h = HumanId((c / pop.n_items) as u32);
                let j = ItemId((c % pop.n_items) as u32);
                Observation {
                    human: h,
                    item: j,
                    value: pop.true_will(h, j),
                }
            })
            .collect()
    }

    #[test]
    fn fit_rejects_empty() {
        assert!(matches!(
            fit(&[], 2, 2, &FitConfig::default(), 0),
            Err(Error::EmptyObservations)
        ));
    }

    #[test]
    fn fit_constant_matrix() {
        let obs: Vec<Observation> = (0..5)
            .flat_map(|h| {
                (0..5).map(move |j| Observation {
                    human: HumanId(h),
                    item: ItemId(j),
                    value: 0.6,
                })
            })
            .collect();
        let config = FitConfig {
            rank: 1,
            ..FitConfig::default()
        };
        let model = fit(&obs, 5, 5, &config, 1).unwrap();
        for h in 0..5 {
            for j in 0..5 {
                let p = model.predict(HumanId(h), ItemId(j)).unwrap();
                assert!((p - 0.6).abs() < 0.05, "prediction {p}");
            }
        }
    }

    #[test]
    fn fit_recovers_rank_one_fully_observed() {
        let pop = LatentPopulation::generate(20, 20, 1, 0.0, 11).unwrap();
        let obs = sample_observations(&pop, 400, 1);
        let model = fit(&obs, 20, 20, &FitConfig::default(), 2).unwrap();
        assert!(model.rmse(&obs) < 0.05, "train rmse {}", model.rmse(&obs));
    }

    #[test]
    fn fit_never_increases_train_rmse() {
        let pop = LatentPopulation::generate(15, 15, 2, 0.0, 5).unwrap();
        let obs = sample_observations(&pop, 120, 2);
        let config = FitConfig::default();
        let zero_epochs = FitConfig {
            epochs: 0,
            ..config.clone()
        };
        let initial = fit(&obs, 15, 15, &zero_epochs, 9).unwrap().rmse(&obs);
        let trained = fit(&obs, 15, 15, &config, 9).unwrap().rmse(&obs);
        assert!(trained <= initial, "rmse went {initial} -> {trained}");
    }

    #[test]
    fn fit_is_deterministic() {
        let pop = LatentPopulation::generate(10, 10, 2, 0.0, 3).unwrap();
        let obs = sample_observations(&pop, 40, 3);
        let a = fit(&obs, 10, 10, &FitConfig::default(), 77).unwrap();
        let b = fit(&obs, 10, 10, &FitConfig::default(), 77).unwrap();
        assert_eq!(a.human_factors, b.human_factors);
        assert_eq!(a.item_factors, b.item_factors);
    }

    #[test]
    fn predict_zero_model_and_clipping() {
        let model = FactorModel {
            n_humans: 1,
            n_items: 1,
            config: FitConfig::default(),
            seed: 0,
            human_factors: vec![vec![0.0; 8]],
            item_factors: vec![vec![0.0; 8]],
        };
        assert_eq!(model.predict(HumanId(0), ItemId(0)).unwrap(), 0.0);
        let big = FactorModel {
            human_factors: vec![vec![1.7]],
            item_factors: vec![vec![1.0]],
            config: FitConfig {
                rank: 1,
                ..FitConfig::default()
            },
            ..model
        };
        assert_eq!(big.predict(HumanId(0), ItemId(0)).unwrap(), 1.0);
        assert!(big.predict(HumanId(1), ItemId(0)).is_err());
    }

    #[test]
    fn predict_matches_hand_dot_product() {
        let model = FactorModel {
            n_humans: 2,
            n_items: 2,
            config: FitConfig {
                rank: 2,
                ..FitConfig::default()
            },
            seed: 0,
            human_factors: vec![vec![0.5, -0.25], vec![0.1, 0.2]],
            item_factors: vec![vec![0.4, 0.8], vec![-0.6, 0.2]],
        };
        // 0.5*0.4 + -0.25*0.8 = 0
        assert!(model.predict(HumanId(0), ItemId(0)).unwrap().abs() < 1e-12);
        // 0.1*-0.6 + 0.2*0.2 = -0.02
        assert!((model.predict(HumanId(1), ItemId(1)).unwrap() + 0.02).abs() < 1e-12);
    }

    #[test]
    fn single_member_ensemble_has_zero_variance() {
        let pop = LatentPopulation::generate(6, 6, 2, 0.0, 4).unwrap();
        let obs = sample_observations(&pop, 18, 4);
        let ens = Ensemble::fit(&obs, 6, 6, &FitConfig::default(), 1, 5).unwrap();
        let (_, var) = ens.predict_with_variance(HumanId(0), ItemId(0)).unwrap();
        assert_eq!(var, 0.0);
    }

    #[test]
    fn identical_members_have_zero_variance() {
        let pop = LatentPopulation::generate(6, 6, 2, 0.0, 4).unwrap();
        let obs = sample_observations(&pop, 18, 4);
        let model = fit(&obs, 6, 6, &FitConfig::default(), 5).unwrap();
        let ens = Ensemble {
            models: vec![model.clone(), model],
        };
        let (_, var) = ens.predict_with_variance(HumanId(1), ItemId(2)).unwrap();
        assert_eq!(var, 0.0);
    }

    #[test]
    fn unobserved_cells_have_higher_mean_variance() {
        let pop = LatentPopulation::generate(24, 24, 2, 0.0, 21).unwrap();
        let obs = sample_observations(&pop, 120, 21);
        let ens = Ensemble::fit(&obs, 24, 24, &FitConfig::default(), 8, 6).unwrap();
        let observed: std::collections::BTreeSet<(u32, u32)> =
            obs.iter().map(|o| (o.human.0, o.item.0)).collect();
        let mut var_obs = (0.0, 0usize);
        let mut var_unobs = (0.0, 0usize);
        for h in 0..24 {
            for j in 0..24 {
                let (_, v) = ens
                    .predict_with_variance(HumanId(h), ItemId(j))
                    .unwrap();
                if observed.contains(&(h, j)) {
                    var_obs = (var_obs.0 + v, var_obs.1 + 1);
                } else {
                    var_unobs = (var_unobs.0 + v, var_unobs.1 + 1);
                }
            }
        }
        let mean_obs = var_obs.0 / var_obs.1 as f64;
        let mean_unobs = var_unobs.0 / var_unobs.1 as f64;
        assert!(
            mean_unobs >= mean_obs,
            "observed {mean_obs} vs unobserved {mean_unobs}"
        );
    }

    #[test]
    fn ensemble_is_thread_count_invariant() {
        let pop = LatentPopulation::generate(10, 10, 2, 0.0, 8).unwrap();
        let obs = sample_observations(&pop, 50, 8);
        let a =
            Ensemble::fit_with_threads(&obs, 10, 10, &FitConfig::default(), 4, 3, 1).unwrap();
        let b =
            Ensemble::fit_with_threads(&obs, 10, 10, &FitConfig::default(), 4, 3, 4).unwrap();
        for (ma, mb) in a.models.iter().zip(&b.models) {
            assert_eq!(ma.human_factors, mb.human_factors);
        }
    }

    #[test]
    fn model_export_carries_hyperparameters() {
        let pop = LatentPopulation::generate(4, 3, 2, 0.0, 2).unwrap();
        let obs = sample_observations(&pop, 12, 2);
        let config = FitConfig {
            rank: 2,
            ..FitConfig::default()
        };
        let model = fit(&obs, 4, 3, &config, 9).unwrap();
        let mut buf = Vec::new();
        model.export_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# rank=2 lambda=0.05 epochs=200 learning_rate=0.05 seed=9");
        assert_eq!(lines[1], "kind,index,f0,f1");
        assert_eq!(lines.len(), 2 + 4 + 3);
    }

    #[test]
    fn validation_report_serializes_to_json() {
        let report = ValidationReport {
            train_rmse: 0.1,
            holdout_rmse: 0.2,
            sign_accuracy: 0.95,
            n_train: 80,
            n_holdout: 20,
        };
        let json = serde_json::to_string(&report).unwrap();
        for field in [
            "train_rmse",
            "holdout_rmse",
            "sign_accuracy",
            "n_train",
            "n_holdout",
        ] {
            assert!(json.contains(field), "missing {field} in {json}");
        }
        let back: ValidationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn holdout_validation_is_deterministic() {
        let pop = LatentPopulation::generate(30, 30, 2, 0.0, 6).unwrap();
        let obs = sample_observations(&pop, 200, 6);
        let a = holdout_validate(&obs, 30, 30, 0.2, &FitConfig::default(), 13).unwrap();
        let b = holdout_validate(&obs, 30, 30, 0.2, &FitConfig::default(), 13).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_train + a.n_holdout, 200);
    }

    #[test]
    fn holdout_rejects_degenerate_split() {
        let obs = vec![Observation {
            human: HumanId(0),
            item: ItemId(0),
            value: 0.5,
        }];
        assert!(holdout_validate(&obs, 1, 1, 0.2, &FitConfig::default(), 0).is_err());
    }

    #[test]
    fn extrapolate_preserves_observed_and_fills_rest() {
        let mut matrix = WillMatrix::new(3, 3);
        matrix
            .record_entry(0, HumanId(0), ItemId(0), 0.5, Provenance::Observed)
            .unwrap();
        matrix
            .record_entry(0, HumanId(1), ItemId(2), -0.25, Provenance::Observed)
            .unwrap();
        let obs = observations_from_matrix(&matrix, 0);
        let config = FitConfig {
            rank: 2,
            ..FitConfig::default()
        };
        let model = fit(&obs, 3, 3, &config, 4).unwrap();
        let dense = extrapolate(&matrix, 0, &model).unwrap();
        // observed cells bit-exact, everything else inferred
        let e = dense.entry(0, HumanId(0), ItemId(0)).unwrap();
        assert_eq!(e.value, 0.5);
        assert_eq!(e.provenance, Provenance::Observed);
        for h in 0..3u32 {
            for j in 0..3u32 {
                let e = dense.entry(0, HumanId(h), ItemId(j)).unwrap();
                if (h, j) == (0, 0) || (h, j) == (1, 2) {
                    assert_eq!(e.provenance, Provenance::Observed);
                } else {
                    assert_eq!(e.provenance, Provenance::Inferred);
                }
            }
        }
    }

    #[test]
    fn extrapolate_fully_observed_is_identity() {
        let mut matrix = WillMatrix::new(2, 2);
        for h in 0..2 {
            for j in 0..2 {
                matrix
                    .record_entry(0, HumanId(h), ItemId(j), 0.25, Provenance::Observed)
                    .unwrap();
            }
        }
        let obs = observations_from_matrix(&matrix, 0);
        let config = FitConfig {
            rank: 1,
            ..FitConfig::default()
        };
        let model = fit(&obs, 2, 2, &config, 0).unwrap();
        let dense = extrapolate(&matrix, 0, &model).unwrap();
        assert_eq!(dense, matrix);
    }

    #[test]
    fn extrapolate_rejects_dimension_mismatch() {
        let matrix = WillMatrix::new(2, 2);
        let config = FitConfig {
            rank: 1,
            ..FitConfig::default()
        };
        let obs = vec![Observation {
            human: HumanId(0),
            item: ItemId(0),
            value: 0.5,
        }];
        let model = fit(&obs, 3, 2, &config, 0).unwrap();
        assert!(extrapolate(&matrix, 0, &model).is_err());
    }

    #[test]
    fn recovery_rank_two_sparse() {
        // smoke version of the 200x200 recovery run in the acceptance
        // suite; 120x120 sits just above the data-poor threshold, so it
        // gets extra epochs
        let pop = LatentPopulation::generate(120, 120, 2, 0.0, 17).unwrap();
        let obs = sample_observations(&pop, 1440, 17);
        let config = FitConfig {
            epochs: 400,
            ..FitConfig::default()
        };
        let report = holdout_validate(&obs, 120, 120, 0.2, &config, 17).unwrap();
        assert!(report.holdout_rmse < 0.15, "rmse {}", report.holdout_rmse);
        assert!(
            report.sign_accuracy > 0.9,
            "sign accuracy {}",
            report.sign_accuracy
        );
    }
}
