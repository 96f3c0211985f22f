//! Fermi calculators for will power: how many of humanity's terawatts
//! are spent in accordance with human will, the abundance and alignment
//! ratios, and the align-vs-grow trade-off rule.

use std::io::BufRead;

use crate::error::{Error, Result};

/// Default global power budget in terawatts.
pub const DEFAULT_BUDGET_TW: f64 = 20.0;
/// Default total body power in terawatts.
pub const DEFAULT_BODY_TW: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegimeCategory {
    LiberalDemocracy,
    ElectoralDemocracy,
    ElectoralAutocracy,
    ClosedAutocracy,
    NoData,
}

impl RegimeCategory {
    pub fn parse(raw: &str) -> Option<Self> {
        match raw {
            "LiberalDemocracy" => Some(Self::LiberalDemocracy),
            "ElectoralDemocracy" => Some(Self::ElectoralDemocracy),
            "ElectoralAutocracy" => Some(Self::ElectoralAutocracy),
            "ClosedAutocracy" => Some(Self::ClosedAutocracy),
            "NoData" => Some(Self::NoData),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LiberalDemocracy => "LiberalDemocracy",
            Self::ElectoralDemocracy => "ElectoralDemocracy",
            Self::ElectoralAutocracy => "ElectoralAutocracy",
            Self::ClosedAutocracy => "ClosedAutocracy",
            Self::NoData => "NoData",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryRecord {
    pub name: String,
    pub population: u64,
    pub category: RegimeCategory,
}

/// Fraction of each regime category's (non-body) power budget aligned
/// with human will, plus the aligned share of body power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionTable {
    pub liberal_democracy: f64,
    pub electoral_democracy: f64,
    pub electoral_autocracy: f64,
    pub closed_autocracy: f64,
    pub no_data: f64,
    pub body_aligned_share: f64,
}

impl FractionTable {
    /// Present-day baseline fractions.
    pub fn baseline() -> Self {
        FractionTable {
            liberal_democracy: 0.60,
            electoral_democracy: 0.30,
            electoral_autocracy: 0.15,
            closed_autocracy: 0.10,
            no_data: 0.23,
            body_aligned_share: 0.50,
        }
    }

    /// Fractions projected for a world where the most powerful systems
    /// actively align their impact with human will.
    pub fn projected() -> Self {
        FractionTable {
            liberal_democracy: 0.85,
            electoral_democracy: 0.65,
            electoral_autocracy: 0.35,
            closed_autocracy: 0.25,
            no_data: 0.53,
            body_aligned_share: 0.50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("liberal_democracy fraction", self.liberal_democracy),
            ("electoral_democracy fraction", self.electoral_democracy),
            ("electoral_autocracy fraction", self.electoral_autocracy),
            ("closed_autocracy fraction", self.closed_autocracy),
            ("no_data fraction", self.no_data),
            ("body_aligned_share", self.body_aligned_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ValueOutOfRange {
                    what,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }

    pub fn fraction(&self, category: RegimeCategory) -> f64 {
        match category {
            RegimeCategory::LiberalDemocracy => self.liberal_democracy,
            RegimeCategory::ElectoralDemocracy => self.electoral_democracy,
            RegimeCategory::ElectoralAutocracy => self.electoral_autocracy,
            RegimeCategory::ClosedAutocracy => self.closed_autocracy,
            RegimeCategory::NoData => self.no_data,
        }
    }
}

/// Estimates humanity's will power in terawatts.
///
/// The non-body budget is split across countries in proportion to
/// population and weighted by each regime category's aligned fraction;
/// body power contributes its aligned share separately, so the two parts
/// never double count.
pub fn will_power_estimate(
    dataset: &[CountryRecord],
    fractions: &FractionTable,
    budget_tw: f64,
    body_tw: f64,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    fractions.validate()?;
    if budget_tw <= 0.0 {
        return Err(Error::NonPositive {
            what: "budget_tw",
            value: budget_tw,
        });
    }
    if body_tw < 0.0 || body_tw > budget_tw {
        return Err(Error::ValueOutOfRange {
            what: "body_tw",
            value: body_tw,
            lo: 0.0,
            hi: budget_tw,
        });
    }
    let total_population: u64 = dataset.iter().map(|c| c.population).sum();
    if total_population == 0 {
        return Err(Error::EmptyDataset);
    }
    let weighted: f64 = dataset
        .iter()
        .map(|c| c.population as f64 / total_population as f64 * fractions.fraction(c.category))
        .sum();
    Ok((budget_tw - body_tw) * weighted + body_tw * fractions.body_aligned_share)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRatios {
    /// will power / body power.
    pub abundance: f64,
    /// will power / power budget, in (0, 1].
    pub alignment: f64,
}

pub fn ratios(will_tw: f64, body_tw: f64, budget_tw: f64) -> Result<PowerRatios> {
    for (what, v) in [("will_tw", will_tw), ("body_tw", body_tw), ("budget_tw", budget_tw)] {
        if v <= 0.0 {
            return Err(Error::NonPositive { what, value: v });
        }
    }
    if will_tw > budget_tw {
        return Err(Error::ValueOutOfRange {
            what: "will_tw",
            value: will_tw,
            lo: 0.0,
            hi: budget_tw,
        });
    }
    Ok(PowerRatios {
        abundance: will_tw / body_tw,
        alignment: will_tw / budget_tw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tradeoff {
    /// Align X% of the existing budget.
    ChooseA,
    /// Grow the budget by Y% and align the new power.
    ChooseB,
}

/// Which raises will-power alignment more: aligning existing power (a)
/// or adding new aligned power (b)? Choose (a) iff Y < X / (1 - X - α),
/// where α is the alignment prior to any change; if the denominator is
/// not positive, aligning existing power always wins.
pub fn tradeoff_decision(x: f64, y: f64, alpha: f64) -> Result<Tradeoff> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::ValueOutOfRange {
            what: "x",
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if y <= 0.0 {
        return Err(Error::NonPositive { what: "y", value: y });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ValueOutOfRange {
            what: "alpha",
            value: alpha,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let denominator = 1.0 - x - alpha;
    if denominator <= 0.0 {
        return Ok(Tradeoff::ChooseA);
    }
    if y < x / denominator {
        Ok(Tradeoff::ChooseA)
    } else {
        Ok(Tradeoff::ChooseB)
    }
}

/// Parses `name,population,category` records; `#` lines are comments.
pub fn parse_dataset_csv<R: BufRead>(reader: R) -> Result<Vec<CountryRecord>> {
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "name,population,category" {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header 'name,population,category', got '{trimmed}'"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let population: u64 = fields[1].trim().parse().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("bad population: {e}"),
        })?;
        if population == 0 {
            return Err(Error::Parse {
                line: lineno,
                message: "population must be positive".into(),
            });
        }
        let category = RegimeCategory::parse(fields[2].trim()).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("unknown category '{}'", fields[2].trim()),
        })?;
        records.push(CountryRecord {
            name: fields[0].trim().to_string(),
            population,
            category,
        });
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    Ok(records)
}

/// The regime/population dataset shipped with the toolkit.
pub fn bundled_dataset() -> Vec<CountryRecord> {
    parse_dataset_csv(include_str!("../data/regimes.csv").as_bytes())
        .expect("bundled dataset parses")
}
