//! Collective response session: perspective registration, vote
//! elicitation scheduling, and vote application to a Will matrix.
//!
//! Agreement votes use set semantics (the entry becomes ±c) while pair
//! votes use additive semantics (±b shifts, clipped); the asymmetry
//! between the two vote kinds is deliberate.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::population::{AgreementResponse, VoteChoice, VoteKind, VoteRecord};
use crate::will::{HumanId, Item, ItemId, Provenance, WillMatrix};

/// Provider of per-cell predictive variance for uncertainty-weighted
/// elicitation.
pub trait VarianceSource {
    fn variance(&self, h: HumanId, j: ItemId) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Uncast votes sampled uniformly, agreement and pair kinds strictly
    /// alternating per participant (agreement first).
    Uniform,
    /// The uncast agreement cell with maximal model variance; ties go to
    /// the lowest item id. Pair votes are never scheduled.
    UncertaintyWeighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Agreement vote magnitude c in (0, 1].
    pub agreement_magnitude: f64,
    /// Pair vote shift b in (0, 1].
    pub pair_shift: f64,
    pub strategy: Strategy,
    pub per_participant_budget: u32,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("agreement magnitude c", self.agreement_magnitude),
            ("pair shift b", self.pair_shift),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::ValueOutOfRange {
                    what,
                    value: v,
                    lo: f64::MIN_POSITIVE,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteRequest {
    Agreement { human: HumanId, item: ItemId },
    Pair { human: HumanId, first: ItemId, second: ItemId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageStats {
    pub v_sampled: usize,
    pub v_possible: usize,
    pub fraction: f64,
}

#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    prompt: String,
    seed: u64,
    items: Vec<Item>,
    matrix: WillMatrix,
    t: u64,
    log: Vec<VoteRecord>,
    budget_left: Vec<u32>,
    asked_count: Vec<u64>,
    asked_items: Vec<BTreeSet<u32>>,
    asked_pairs: Vec<BTreeSet<(u32, u32)>>,
    observed_agreement: BTreeSet<(u32, u32)>,
    rng: Pcg64,
}

impl Session {
    pub fn new(
        config: SessionConfig,
        prompt: impl Into<String>,
        n_humans: usize,
        t: u64,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Session {
            budget_left: vec![config.per_participant_budget; n_humans],
            asked_count: vec![0; n_humans],
            asked_items: vec![BTreeSet::new(); n_humans],
            asked_pairs: vec![BTreeSet::new(); n_humans],
            config,
            prompt: prompt.into(),
            seed,
            items: Vec::new(),
            matrix: WillMatrix::new(n_humans, 0),
            t,
            log: Vec::new(),
            observed_agreement: BTreeSet::new(),
            rng: Pcg64::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn matrix(&self) -> &WillMatrix {
        &self.matrix
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn log(&self) -> &[VoteRecord] {
        &self.log
    }

    pub fn budget_left(&self, h: HumanId) -> u32 {
        self.budget_left[h.0 as usize]
    }

    /// Registers a new perspective and widens the matrix by one
    /// (unobserved) column.
    pub fn submit_perspective(&mut self, _h: HumanId, text: impl Into<String>) -> Result<ItemId> {
        let item = Item::new(ItemId(self.items.len() as u32), text)?;
        let id = self.matrix.add_item();
        debug_assert_eq!(id, item.id);
        self.items.push(item);
        Ok(id)
    }

    fn check_human(&self, h: HumanId) -> Result<()> {
        if h.0 as usize >= self.matrix.n_humans() {
            return Err(Error::IndexOutOfRange {
                what: "human",
                index: h.0 as usize,
                size: self.matrix.n_humans(),
            });
        }
        Ok(())
    }

    fn check_item(&self, j: ItemId) -> Result<()> {
        if j.0 as usize >= self.items.len() {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: j.0 as usize,
                size: self.items.len(),
            });
        }
        Ok(())
    }

    fn uncast_items(&self, h: HumanId) -> Vec<u32> {
        let asked = &self.asked_items[h.0 as usize];
        (0..self.items.len() as u32)
            .filter(|j| !asked.contains(j))
            .collect()
    }

    fn remaining_pairs(&self, h: HumanId) -> usize {
        let m = self.items.len();
        let total = m * m.saturating_sub(1) / 2;
        total - self.asked_pairs[h.0 as usize].len()
    }

    /// Chooses the next vote to request from participant `h`. The chosen
    /// cell or pair is marked as asked so it is never requested twice.
    pub fn elicit_next(
        &mut self,
        h: HumanId,
        model: Option<&dyn VarianceSource>,
    ) -> Result<VoteRequest> {
        self.check_human(h)?;
        if self.budget_left[h.0 as usize] == 0 {
            return Err(Error::BudgetExhausted { id: h.0 });
        }
        match self.config.strategy {
            Strategy::Uniform => self.elicit_uniform(h),
            Strategy::UncertaintyWeighted => {
                let model = model.ok_or(Error::MissingModel)?;
                self.elicit_uncertainty(h, model)
            }
        }
    }

    fn elicit_uniform(&mut self, h: HumanId) -> Result<VoteRequest> {
        let idx = h.0 as usize;
        let want_agreement = self.asked_count[idx].is_multiple_of(2);
        let uncast = self.uncast_items(h);
        let pairs_left = self.remaining_pairs(h);
        let pick_agreement = match (want_agreement, uncast.is_empty(), pairs_left == 0) {
            (_, true, true) => return Err(Error::NothingToElicit { id: h.0 }),
            (true, false, _) | (false, _, true) => true,
            _ => false,
        };
        self.asked_count[idx] += 1;
        if pick_agreement {
            let j = uncast[self.rng.gen_range(0..uncast.len())];
            self.asked_items[idx].insert(j);
            Ok(VoteRequest::Agreement {
                human: h,
                item: ItemId(j),
            })
        } else {
            let m = self.items.len() as u32;
            // rejection sampling is cheap while few pairs are asked; fall
            // back to enumerating the k-th remaining pair if unlucky
            let pair = 'found: {
                for _ in 0..64 {
                    let a = self.rng.gen_range(0..m);
                    let b = self.rng.gen_range(0..m);
                    if a == b {
                        continue;
                    }
                    let p = (a.min(b), a.max(b));
                    if !self.asked_pairs[idx].contains(&p) {
                        break 'found p;
                    }
                }
                let mut k = self.rng.gen_range(0..pairs_left);
                let mut hit = None;
                'scan: for a in 0..m {
                    for b in (a + 1)..m {
                        if !self.asked_pairs[idx].contains(&(a, b)) {
                            if k == 0 {
                                hit = Some((a, b));
                                break 'scan;
                            }
                            k -= 1;
                        }
                    }
                }
                hit.expect("remaining pair count was nonzero")
            };
            self.asked_pairs[idx].insert(pair);
            Ok(VoteRequest::Pair {
                human: h,
                first: ItemId(pair.0),
                second: ItemId(pair.1),
            })
        }
    }

    fn elicit_uncertainty(&mut self, h: HumanId, model: &dyn VarianceSource) -> Result<VoteRequest> {
        let idx = h.0 as usize;
        let uncast = self.uncast_items(h);
        if uncast.is_empty() {
            return Err(Error::NothingToElicit { id: h.0 });
        }
        let mut best = uncast[0];
        let mut best_var = f64::NEG_INFINITY;
        for &j in &uncast {
            let var = model.variance(h, ItemId(j));
            if var > best_var {
                best = j;
                best_var = var;
            }
        }
        self.asked_count[idx] += 1;
        self.asked_items[idx].insert(best);
        Ok(VoteRequest::Agreement {
            human: h,
            item: ItemId(best),
        })
    }

    fn spend(&mut self, h: HumanId) -> Result<()> {
        let idx = h.0 as usize;
        if self.budget_left[idx] == 0 {
            return Err(Error::BudgetExhausted { id: h.0 });
        }
        self.budget_left[idx] -= 1;
        Ok(())
    }

    /// Applies an agreement vote with set semantics: Agree stores +c,
    /// Disagree stores -c, Skip leaves the entry untouched. Skips consume
    /// budget while any remains (reading the item costs attention) but are
    /// accepted even at zero budget.
    pub fn apply_agreement_vote(
        &mut self,
        h: HumanId,
        j: ItemId,
        choice: AgreementResponse,
        seed: u64,
    ) -> Result<()> {
        self.check_human(h)?;
        self.check_item(j)?;
        let logged = match choice {
            AgreementResponse::Agree => {
                self.spend(h)?;
                self.matrix.record_entry(
                    self.t,
                    h,
                    j,
                    self.config.agreement_magnitude,
                    Provenance::Observed,
                )?;
                self.observed_agreement.insert((h.0, j.0));
                VoteChoice::Agree
            }
            AgreementResponse::Disagree => {
                self.spend(h)?;
                self.matrix.record_entry(
                    self.t,
                    h,
                    j,
                    -self.config.agreement_magnitude,
                    Provenance::Observed,
                )?;
                self.observed_agreement.insert((h.0, j.0));
                VoteChoice::Disagree
            }
            AgreementResponse::Skip => {
                let _ = self.spend(h);
                VoteChoice::Skip
            }
        };
        self.asked_items[h.0 as usize].insert(j.0);
        self.log.push(VoteRecord {
            participant: h,
            item_a: j,
            item_b: None,
            kind: VoteKind::Agreement,
            choice: logged,
            seed,
        });
        Ok(())
    }

    /// Applies a pair vote with additive semantics: the chosen item's
    /// entry gains +b, the other loses b, both clipped to [-1, 1].
    pub fn apply_pair_vote(
        &mut self,
        h: HumanId,
        j1: ItemId,
        j2: ItemId,
        chosen: ItemId,
        seed: u64,
    ) -> Result<()> {
        if j1 == j2 {
            return Err(Error::DuplicatePairItem { id: j1.0 });
        }
        if chosen != j1 && chosen != j2 {
            return Err(Error::IndexOutOfRange {
                what: "chosen item",
                index: chosen.0 as usize,
                size: self.items.len(),
            });
        }
        self.check_human(h)?;
        self.check_item(j1)?;
        self.check_item(j2)?;
        self.spend(h)?;
        let other = if chosen == j1 { j2 } else { j1 };
        let b = self.config.pair_shift;
        let up = (self.matrix.value_or_zero(self.t, h, chosen) + b).clamp(-1.0, 1.0);
        let down = (self.matrix.value_or_zero(self.t, h, other) - b).clamp(-1.0, 1.0);
        self.matrix
            .record_entry(self.t, h, chosen, up, Provenance::Observed)?;
        self.matrix
            .record_entry(self.t, h, other, down, Provenance::Observed)?;
        self.asked_pairs[h.0 as usize]
            .insert((j1.0.min(j2.0), j1.0.max(j2.0)));
        self.log.push(VoteRecord {
            participant: h,
            item_a: j1,
            item_b: Some(j2),
            kind: VoteKind::Pair,
            choice: VoteChoice::Chosen(chosen),
            seed,
        });
        Ok(())
    }

    /// Fraction of possible agreement evaluations that were actually
    /// observed: v_sampled / (n_humans * n_items).
    pub fn coverage_stats(&self) -> CoverageStats {
        let v_possible = self.matrix.n_humans() * self.items.len();
        let v_sampled = self.observed_agreement.len();
        CoverageStats {
            v_sampled,
            v_possible,
            fraction: if v_possible == 0 {
                0.0
            } else {
                v_sampled as f64 / v_possible as f64
            },
        }
    }

    /// Writes the session transcript: one header line with the session
    /// parameters, then the vote log in the common CSV format.
    pub fn write_transcript<W: Write>(&self, mut out: W) -> Result<()> {
        let strategy = match self.config.strategy {
            Strategy::Uniform => "uniform",
            Strategy::UncertaintyWeighted => "uncertainty_weighted",
        };
        writeln!(
            out,
            "# prompt={} c={} b={} strategy={} seed={}",
            self.prompt, self.config.agreement_magnitude, self.config.pair_shift, strategy,
            self.seed
        )?;
        crate::population::vote_log_to_csv(&self.log, out)
    }
}
