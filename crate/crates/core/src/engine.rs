//! Alignment-computation pipeline and action-selection policy: a
//! candidate action's impact is predicted, the impact is scored against
//! every Will-matrix item, and the scores are aggregated through the
//! human-aggregated will into a single alignment number per candidate.
//!
//! Scorers are pluggable; the bundled oracle tables stand in for language
//! models at desk scale.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::population::VoteKind;
use crate::will::{Item, WillMatrix};

/// One candidate output for a given stimulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateAction {
    pub stimulus: String,
    pub output: String,
    pub index: usize,
}

/// Predicts the impact of taking an action, as an opaque descriptor.
pub trait ImpactPredictor {
    fn predict_impact(&self, stimulus: &str, output: &str) -> Result<String>;
}

/// Scores how well an impact descriptor entails an item, in [-1, 1].
pub trait EntailmentScorer {
    fn score(&self, impact: &str, item_text: &str) -> Result<f64>;
}

/// Table-driven impact predictor: explicit (stimulus, output) -> impact
/// map, falling back to a deterministic synthesized descriptor.
#[derive(Debug, Clone, Default)]
pub struct OracleImpactTable {
    map: BTreeMap<(String, String), String>,
}

impl OracleImpactTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        stimulus: impl Into<String>,
        output: impl Into<String>,
        impact: impl Into<String>,
    ) {
        self.map
            .insert((stimulus.into(), output.into()), impact.into());
    }
}

impl ImpactPredictor for OracleImpactTable {
    fn predict_impact(&self, stimulus: &str, output: &str) -> Result<String> {
        Ok(self
            .map
            .get(&(stimulus.to_string(), output.to_string()))
            .cloned()
            .unwrap_or_else(|| format!("impact of '{output}' given '{stimulus}'")))
    }
}

/// Table-driven entailment scorer: explicit (impact, item text) -> score
/// map; unlisted pairs score 0 (unrelated).
#[derive(Debug, Clone, Default)]
pub struct OracleScorerTable {
    map: BTreeMap<(String, String), f64>,
}

impl OracleScorerTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        impact: impl Into<String>,
        item_text: impl Into<String>,
        score: f64,
    ) -> Result<()> {
        if !(-1.0..=1.0).contains(&score) {
            return Err(Error::ValueOutOfRange {
                what: "oracle score",
                value: score,
                lo: -1.0,
                hi: 1.0,
            });
        }
        self.map.insert((impact.into(), item_text.into()), score);
        Ok(())
    }
}

impl EntailmentScorer for OracleScorerTable {
    fn score(&self, impact: &str, item_text: &str) -> Result<f64> {
        Ok(self
            .map
            .get(&(impact.to_string(), item_text.to_string()))
            .copied()
            .unwrap_or(0.0))
    }
}

/// Item-aggregation strategy for collapsing per-item implied alignments
/// into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ItemAggregation {
    /// (1/M) Σ_j W^j y_a^j, which keeps the result in [-1, 1] for any
    /// item count.
    #[default]
    NormalizedMean,
    /// The unnormalized sum Σ_j W^j y_a^j.
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionAlignment {
    pub phi: f64,
    pub per_item: Vec<f64>,
}

/// Runs the full alignment computation for one candidate: predict the
/// impact, score it against every item, aggregate through ψ(w_t).
#[allow(clippy::too_many_arguments)]
pub fn compute_action_alignment(
    stimulus: &str,
    output: &str,
    predictor: &dyn ImpactPredictor,
    scorer: &dyn EntailmentScorer,
    items: &[Item],
    matrix: &WillMatrix,
    t: u64,
    aggregation: ItemAggregation,
) -> Result<ActionAlignment> {
    if items.len() != matrix.n_items() {
        return Err(Error::DimensionMismatch {
            what: "items",
            got: items.len(),
            expected: matrix.n_items(),
        });
    }
    let aggregated = matrix.aggregate_humans(t)?;
    let impact = predictor.predict_impact(stimulus, output)?;
    let mut per_item = Vec::with_capacity(items.len());
    for (j, item) in items.iter().enumerate() {
        let score = scorer.score(&impact, &item.text)?;
        if !(-1.0..=1.0).contains(&score) || score.is_nan() {
            return Err(Error::ScorerOutOfRange {
                value: score,
                item: j,
            });
        }
        per_item.push(score);
    }
    let weighted: f64 = aggregated
        .values
        .iter()
        .zip(&per_item)
        .map(|(w, y)| w * y)
        .sum();
    let phi = match aggregation {
        ItemAggregation::NormalizedMean => {
            if items.is_empty() {
                0.0
            } else {
                weighted / items.len() as f64
            }
        }
        ItemAggregation::Sum => weighted,
    };
    Ok(ActionAlignment { phi, per_item })
}

/// Picks the candidate with maximal alignment; ties break toward the
/// earliest candidate.
#[allow(clippy::too_many_arguments)]
pub fn select_action<'a>(
    candidates: &'a [CandidateAction],
    predictor: &dyn ImpactPredictor,
    scorer: &dyn EntailmentScorer,
    items: &[Item],
    matrix: &WillMatrix,
    t: u64,
    aggregation: ItemAggregation,
) -> Result<(&'a CandidateAction, f64)> {
    let mut best: Option<(&CandidateAction, f64)> = None;
    for c in candidates {
        let alignment = compute_action_alignment(
            &c.stimulus,
            &c.output,
            predictor,
            scorer,
            items,
            matrix,
            t,
            aggregation,
        )?;
        match &best {
            Some((_, phi)) if alignment.phi <= *phi => {}
            _ => best = Some((c, alignment.phi)),
        }
    }
    best.ok_or(Error::EmptyCandidates)
}

/// Two-sided 99% normal quantile.
const Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteEffect {
    /// Change in P(select y1) caused by the focal vote.
    pub delta_prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub prob_before: f64,
    pub prob_after: f64,
}

/// Monte Carlo estimate of how one focal vote shifts the probability that
/// the two-action Kronecker-delta policy selects the voted-for action.
///
/// Each trial draws the other voters' aggregate contribution for both
/// actions uniformly from [-n_background, n_background] and compares the
/// policy's choice before and after the vote on the same draw, so the
/// difference estimate is paired. An agreement vote sets the focal
/// human's entry for action 1 to +magnitude; a pair vote adds +magnitude
/// to action 1 and -magnitude to action 2.
pub fn vote_effect(
    kind: VoteKind,
    magnitude: f64,
    n_trials: usize,
    n_background: usize,
    seed: u64,
) -> Result<VoteEffect> {
    if magnitude < 0.0 {
        return Err(Error::NonPositive {
            what: "magnitude",
            value: magnitude,
        });
    }
    if n_trials < 1000 {
        return Err(Error::TooFewTrials {
            got: n_trials,
            min: 1000,
        });
    }
    let v_max = n_background as f64;
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut before_hits = 0usize;
    let mut after_hits = 0usize;
    let mut delta_sum = 0.0;
    let mut delta_sq = 0.0;
    for _ in 0..n_trials {
        let bg1 = rng.gen_range(-v_max..=v_max);
        let bg2 = rng.gen_range(-v_max..=v_max);
        // value of each action is the focal entry plus the background sum;
        // ties resolve toward action 1 (lowest index)
        let before = bg1 >= bg2;
        let after = match kind {
            VoteKind::Agreement => magnitude + bg1 >= bg2,
            VoteKind::Pair => magnitude + bg1 >= bg2 - magnitude,
        };
        before_hits += before as usize;
        after_hits += after as usize;
        let d = after as i32 as f64 - before as i32 as f64;
        delta_sum += d;
        delta_sq += d * d;
    }
    let n = n_trials as f64;
    let mean = delta_sum / n;
    let variance = (delta_sq / n - mean * mean).max(0.0);
    let half_width = Z_99 * (variance / n).sqrt();
    Ok(VoteEffect {
        delta_prob: mean,
        ci_low: mean - half_width,
        ci_high: mean + half_width,
        prob_before: before_hits as f64 / n,
        prob_after: after_hits as f64 / n,
    })
}

/// T = R·M: tax proportional to revenue times misalignment.
pub fn pigouvian_tax(revenue: f64, misalignment: f64) -> Result<f64> {
    if revenue < 0.0 || !revenue.is_finite() {
        return Err(Error::NonPositive {
            what: "revenue",
            value: revenue,
        });
    }
    if !(0.0..=1.0).contains(&misalignment) {
        return Err(Error::ValueOutOfRange {
            what: "misalignment",
            value: misalignment,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(revenue * misalignment)
}

/// Maps a mean alignment in [-1, 1] onto misalignment in [0, 1]:
/// M = (1 - φ) / 2.
pub fn misalignment_score(mean_phi: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&mean_phi) {
        return Err(Error::ValueOutOfRange {
            what: "mean_phi",
            value: mean_phi,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok((1.0 - mean_phi) / 2.0)
}

/// Builds the two-action, two-item oracle scenario: the impacts of
/// output k align perfectly with item k and not at all with the other
/// (a Kronecker-delta scoring pattern).
pub fn kronecker_scenario() -> (Vec<CandidateAction>, OracleImpactTable, OracleScorerTable, Vec<Item>) {
    use crate::will::ItemId;
    let stimulus = "prompt";
    let candidates = vec![
        CandidateAction {
            stimulus: stimulus.into(),
            output: "y1".into(),
            index: 0,
        },
        CandidateAction {
            stimulus: stimulus.into(),
            output: "y2".into(),
            index: 1,
        },
    ];
    let mut impacts = OracleImpactTable::new();
    impacts.insert(stimulus, "y1", "realizes s1");
    impacts.insert(stimulus, "y2", "realizes s2");
    let items = vec![
        Item::new(ItemId(0), "s1").unwrap(),
        Item::new(ItemId(1), "s2").unwrap(),
    ];
    let mut scorer = OracleScorerTable::new();
    scorer.insert("realizes s1", "s1", 1.0).unwrap();
    scorer.insert("realizes s2", "s2", 1.0).unwrap();
    (candidates, impacts, scorer, items)
}
