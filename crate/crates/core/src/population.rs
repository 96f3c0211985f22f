//! Synthetic populations with low-rank ground-truth wills, and the
//! simulated voting behavior (honest, noisy, colluding) driven by them.
//!
//! Every operation is a pure function of its inputs and an explicit seed,
//! so simulation replicas can run in parallel without coordination.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::will::{HumanId, ItemId};

/// Dead-zone half width: honest participants skip items whose true will
/// sits within [-θ, θ], modeling the activation energy of a deliberate
/// action.
pub const DEAD_ZONE: f64 = 0.1;

fn clip(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Ground-truth wills generated from seeded low-rank factors:
/// will(h, j) = clip(<human_factors[h], item_factors[j]>).
#[derive(Debug, Clone)]
pub struct LatentPopulation {
    pub n_humans: usize,
    pub n_items: usize,
    pub rank: usize,
    pub human_factors: Vec<Vec<f64>>,
    pub item_factors: Vec<Vec<f64>>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl LatentPopulation {
    /// Draws factor entries uniformly from [-1/√rank, 1/√rank], so raw
    /// dot products stay inside [-1, 1] and spread around 0.
    pub fn generate(
        n_humans: usize,
        n_items: usize,
        rank: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_humans == 0 || n_items == 0 {
            return Err(Error::NonPositive {
                what: "population counts",
                value: 0.0,
            });
        }
        if rank == 0 || rank > n_humans.min(n_items) {
            return Err(Error::RankTooLarge {
                rank,
                max: n_humans.min(n_items),
            });
        }
        if noise_sigma < 0.0 {
            return Err(Error::NonPositive {
                what: "noise_sigma",
                value: noise_sigma,
            });
        }
        let scale = 1.0 / (rank as f64).sqrt();
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..rank).map(|_| rng.gen_range(-scale..=scale)).collect())
                .collect()
        };
        let human_factors = draw(n_humans);
        let item_factors = draw(n_items);
        Ok(LatentPopulation {
            n_humans,
            n_items,
            rank,
            human_factors,
            item_factors,
            noise_sigma,
            seed,
        })
    }

    /// Builds a population from explicit factors (test hook).
    pub fn from_factors(
        human_factors: Vec<Vec<f64>>,
        item_factors: Vec<Vec<f64>>,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let rank = human_factors.first().map(|f| f.len()).unwrap_or(0);
        if rank == 0 || human_factors.is_empty() || item_factors.is_empty() {
            return Err(Error::EmptyObservations);
        }
        if let Some(bad) = human_factors
            .iter()
            .chain(&item_factors)
            .find(|f| f.len() != rank)
        {
            return Err(Error::LengthMismatch {
                what: "factor row",
                got: bad.len(),
                expected: rank,
            });
        }
        Ok(LatentPopulation {
            n_humans: human_factors.len(),
            n_items: item_factors.len(),
            rank,
            human_factors,
            item_factors,
            noise_sigma,
            seed,
        })
    }

    pub fn true_will(&self, h: HumanId, j: ItemId) -> f64 {
        let hf = &self.human_factors[h.0 as usize];
        let jf = &self.item_factors[j.0 as usize];
        clip(hf.iter().zip(jf).map(|(a, b)| a * b).sum())
    }

    /// Default profiles: honest when the population is noiseless, noisy
    /// with the population's sigma otherwise.
    pub fn make_profiles(&self, attention_budget: u32) -> Vec<ParticipantProfile> {
        let behavior = if self.noise_sigma == 0.0 {
            Behavior::Honest
        } else {
            Behavior::Noisy(self.noise_sigma)
        };
        (0..self.n_humans)
            .map(|h| ParticipantProfile {
                id: HumanId(h as u32),
                behavior: behavior.clone(),
                attention_budget,
            })
            .collect()
    }

    /// Writes both factor tables as one CSV: `kind,index,f0,...,f{r-1}`.
    pub fn export_factors_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "kind,index")?;
        for k in 0..self.rank {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Favor,
    Oppose,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    Honest,
    Noisy(f64),
    Colluder { target: ItemId, polarity: Polarity },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantProfile {
    pub id: HumanId,
    pub behavior: Behavior,
    pub attention_budget: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgreementResponse {
    Agree,
    Disagree,
    Skip,
}

fn spend_budget(profile: &mut ParticipantProfile) -> Result<()> {
    if profile.attention_budget == 0 {
        return Err(Error::BudgetExhausted { id: profile.id.0 });
    }
    profile.attention_budget -= 1;
    Ok(())
}

/// Elicits an absolute agreement vote on item `j`.
///
/// Honest participants agree above the dead zone, disagree below it, and
/// skip inside it. Noisy participants threshold the true will plus
/// zero-mean Gaussian noise. Colluders vote their polarity on the target
/// item and the opposite on everything else, regardless of true will.
pub fn respond_agreement(
    population: &LatentPopulation,
    profile: &mut ParticipantProfile,
    j: ItemId,
    seed: u64,
) -> Result<AgreementResponse> {
    if j.0 as usize >= population.n_items {
        return Err(Error::IndexOutOfRange {
            what: "item",
            index: j.0 as usize,
            size: population.n_items,
        });
    }
    spend_budget(profile)?;
    let response = match &profile.behavior {
        Behavior::Honest => threshold(population.true_will(profile.id, j)),
        Behavior::Noisy(sigma) => {
            let mut rng = Pcg64::seed_from_u64(seed);
            let noise = Normal::new(0.0, *sigma)
                .map(|n| n.sample(&mut rng))
                .unwrap_or(0.0);
            threshold(population.true_will(profile.id, j) + noise)
        }
        Behavior::Colluder { target, polarity } => {
            let on_target = *target == j;
            match (polarity, on_target) {
                (Polarity::Favor, true) | (Polarity::Oppose, false) => AgreementResponse::Agree,
                _ => AgreementResponse::Disagree,
            }
        }
    };
    Ok(response)
}

fn threshold(v: f64) -> AgreementResponse {
    if v > DEAD_ZONE {
        AgreementResponse::Agree
    } else if v < -DEAD_ZONE {
        AgreementResponse::Disagree
    } else {
        AgreementResponse::Skip
    }
}

/// Elicits a pair-choice vote between two distinct items and returns the
/// chosen one. Honest participants pick the larger true will (exact ties
/// broken by a seeded coin flip); colluders always pick their target when
/// it is present.
pub fn respond_pair(
    population: &LatentPopulation,
    profile: &mut ParticipantProfile,
    j1: ItemId,
    j2: ItemId,
    seed: u64,
) -> Result<ItemId> {
    if j1 == j2 {
        return Err(Error::DuplicatePairItem { id: j1.0 });
    }
    for j in [j1, j2] {
        if j.0 as usize >= population.n_items {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: j.0 as usize,
                size: population.n_items,
            });
        }
    }
    spend_budget(profile)?;
    if let Behavior::Colluder { target, .. } = &profile.behavior {
        if *target == j1 || *target == j2 {
            return Ok(*target);
        }
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut value = |j: ItemId| -> f64 {
        let v = population.true_will(profile.id, j);
        match &profile.behavior {
            Behavior::Noisy(sigma) => {
                let noise = Normal::new(0.0, *sigma)
                    .map(|n| n.sample(&mut rng))
                    .unwrap_or(0.0);
                v + noise
            }
            _ => v,
        }
    };
    let v1 = value(j1);
    let v2 = value(j2);
    if v1 > v2 {
        Ok(j1)
    } else if v2 > v1 {
        Ok(j2)
    } else if rng.gen::<bool>() {
        Ok(j1)
    } else {
        Ok(j2)
    }
}

/// Converts exactly `k` seeded-randomly chosen profiles into colluders.
pub fn inject_colluders(
    profiles: &mut [ParticipantProfile],
    k: usize,
    target: ItemId,
    polarity: Polarity,
    seed: u64,
) -> Result<()> {
    if k > profiles.len() {
        return Err(Error::TooManyColluders {
            requested: k,
            available: profiles.len(),
        });
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..profiles.len()).collect();
    // partial Fisher-Yates: the first k entries are a uniform sample
    for i in 0..k {
        let pick = rng.gen_range(i..indices.len());
        indices.swap(i, pick);
    }
    for &i in &indices[..k] {
        profiles[i].behavior = Behavior::Colluder { target, polarity };
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteKind {
    Agreement,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteChoice {
    Agree,
    Disagree,
    Skip,
    Chosen(ItemId),
}

/// One elicited vote, as written to vote-log CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub participant: HumanId,
    pub item_a: ItemId,
    pub item_b: Option<ItemId>,
    pub kind: VoteKind,
    pub choice: VoteChoice,
    pub seed: u64,
}

pub fn vote_log_to_csv<W: Write>(log: &[VoteRecord], mut out: W) -> Result<()> {
    writeln!(out, "participant,item_a,item_b_or_blank,kind,choice,seed")?;
    for r in log {
        let item_b = r.item_b.map(|j| j.0.to_string()).unwrap_or_default();
        let kind = match r.kind {
            VoteKind::Agreement => "agreement",
            VoteKind::Pair => "pair",
        };
        let choice = match r.choice {
            VoteChoice::Agree => "agree".to_string(),
            VoteChoice::Disagree => "disagree".to_string(),
            VoteChoice::Skip => "skip".to_string(),
            VoteChoice::Chosen(j) => j.0.to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.participant.0, r.item_a.0, item_b, kind, choice, r.seed
        )?;
    }
    Ok(())
}

pub fn vote_log_from_csv<R: BufRead>(reader: R) -> Result<Vec<VoteRecord>> {
    let mut log = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != "participant,item_a,item_b_or_blank,kind,choice,seed" {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unexpected vote-log header '{line}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let participant = HumanId(
            fields[0]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad participant: {e}")))?,
        );
        let item_a = ItemId(
            fields[1]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad item_a: {e}")))?,
        );
        let item_b = if fields[2].trim().is_empty() {
            None
        } else {
            Some(ItemId(fields[2].trim().parse().map_err(|e| {
                parse_err(format!("bad item_b: {e}"))
            })?))
        };
        let kind = match fields[3].trim() {
            "agreement" => VoteKind::Agreement,
            "pair" => VoteKind::Pair,
            other => return Err(parse_err(format!("unknown vote kind '{other}'"))),
        };
        let choice = match (kind, fields[4].trim()) {
            (VoteKind::Agreement, "agree") => VoteChoice::Agree,
            (VoteKind::Agreement, "disagree") => VoteChoice::Disagree,
            (VoteKind::Agreement, "skip") => VoteChoice::Skip,
            (VoteKind::Pair, raw) => VoteChoice::Chosen(ItemId(
                raw.parse()
                    .map_err(|e| parse_err(format!("bad pair choice: {e}")))?,
            )),
            (_, other) => return Err(parse_err(format!("unknown choice '{other}'"))),
        };
        let seed: u64 = fields[5]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad seed: {e}")))?;
        log.push(VoteRecord {
            participant,
            item_a,
            item_b,
            kind,
            choice,
            seed,
        });
    }
    Ok(log)
}

/// Flags participants whose agreement-vote patterns are suspiciously
/// correlated.
///
/// Signed votes (+1 agree, -1 disagree, skips excluded) are compared for
/// every participant pair sharing at least `min_common_votes` items; pairs
/// whose Pearson correlation exceeds `correlation_threshold` form edges,
/// and every connected component of two or more participants is flagged.
/// Pairs where either common-vote vector is constant carry no linear
/// evidence and are ignored.
pub fn detect_anomalies(
    vote_log: &[VoteRecord],
    correlation_threshold: f64,
    min_common_votes: usize,
) -> Vec<HumanId> {
    // participant -> item -> signed vote (last vote wins)
    let mut votes: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
    for r in vote_log {
        if r.kind != VoteKind::Agreement {
            continue;
        }
        let sign = match r.choice {
            VoteChoice::Agree => 1.0,
            VoteChoice::Disagree => -1.0,
            _ => continue,
        };
        votes.entry(r.participant.0).or_default().insert(r.item_a.0, sign);
    }
    let ids: Vec<u32> = votes.keys().copied().collect();
    let mut adjacency: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (ai, &a) in ids.iter().enumerate() {
        for &b in &ids[ai + 1..] {
            let va = &votes[&a];
            let vb = &votes[&b];
            let common: Vec<(f64, f64)> = va
                .iter()
                .filter_map(|(item, &sa)| vb.get(item).map(|&sb| (sa, sb)))
                .collect();
            if common.len() < min_common_votes {
                continue;
            }
            if let Some(corr) = pearson(&common) {
                if corr > correlation_threshold {
                    adjacency.entry(a).or_default().push(b);
                    adjacency.entry(b).or_default().push(a);
                }
            }
        }
    }
    // connected components of size >= 2 are exactly the nodes with edges
    let flagged: BTreeSet<u32> = adjacency.keys().copied().collect();
    flagged.into_iter().map(HumanId).collect()
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mean_a = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_b = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for &(a, b) in pairs {
        cov += (a - mean_a) * (b - mean_b);
        var_a += (a - mean_a) * (a - mean_a);
        var_b += (b - mean_b) * (b - mean_b);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some(cov / (var_a.sqrt() * var_b.sqrt()))
}
