//! Finite-state universe with one-step transition kernels, the
//! state-alignment function φ, and the discounted value functions built
//! on it, plus brute-force policy evaluation.
//!
//! Multi-step transitions decompose into one action-kernel step followed
//! by autonomous default-kernel drift ("act once, world drifts"). All
//! value sums start at τ = t+1 with discount exponent τ-t-1, and 0⁰ = 1
//! wherever a zero discount meets exponent 0.

use serde::Deserialize;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};

/// Dense WoH snapshot: humans x items alignment values.
pub type WohSignal = Vec<Vec<f64>>;

const KERNEL_TOLERANCE: f64 = 1e-9;

/// Discount configuration for the flexible value function.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct DiscountConfig {
    /// Discount on historical WoH signals (α).
    pub alpha_hist: f64,
    /// Impatience discount on future alignment (β).
    pub beta_time: f64,
    /// Discount on expected future WoH signals (γ).
    pub gamma_future: f64,
    /// Truncation horizon for the infinite sums.
    pub horizon: usize,
}

impl Default for DiscountConfig {
    fn default() -> Self {
        DiscountConfig {
            alpha_hist: 0.0,
            beta_time: 1.0,
            gamma_future: 0.0,
            horizon: 16,
        }
    }
}

impl DiscountConfig {
    /// Upper bound on the value mass discarded by truncating the
    /// β-discounted sum at the horizon, per unit of per-step alignment.
    /// Infinite (and meaningless) at β = 1.
    pub fn truncation_tail_bound(&self) -> f64 {
        if self.beta_time >= 1.0 {
            f64::INFINITY
        } else {
            self.beta_time.powi(self.horizon as i32) / (1.0 - self.beta_time)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("alpha_hist", self.alpha_hist),
            ("beta_time", self.beta_time),
            ("gamma_future", self.gamma_future),
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
        if self.horizon == 0 {
            return Err(Error::NonPositive {
                what: "horizon",
                value: 0.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Universe {
    pub states: Vec<String>,
    /// Action names per state, Γ(x).
    pub actions: Vec<Vec<String>>,
    /// action_kernel[state][action][next]: transition row for taking the
    /// action in the state.
    pub action_kernel: Vec<Vec<Vec<f64>>>,
    /// default_kernel[state][next]: autonomous drift after the action.
    pub default_kernel: Vec<Vec<f64>>,
    /// item_state_alignment[item][state]: the m matrix, entries in [-1,1].
    pub item_state_alignment: Vec<Vec<f64>>,
    /// Per-state WoH sensor output W[x].
    pub woh: Vec<WohSignal>,
}

/// Raw JSON shape of a universe definition file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UniverseFile {
    states: Vec<String>,
    actions: Vec<Vec<String>>,
    action_kernel: Vec<Vec<Vec<f64>>>,
    default_kernel: Vec<Vec<f64>>,
    item_state_alignment: Vec<Vec<f64>>,
    woh: Vec<WohSignal>,
}

fn check_row(what: &'static str, index: usize, row: &[f64], n_states: usize) -> Result<()> {
    if row.len() != n_states {
        return Err(Error::LengthMismatch {
            what: "kernel row",
            got: row.len(),
            expected: n_states,
        });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > KERNEL_TOLERANCE || row.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidKernel { what, index, sum });
    }
    Ok(())
}

impl Universe {
    pub fn new(
        states: Vec<String>,
        actions: Vec<Vec<String>>,
        action_kernel: Vec<Vec<Vec<f64>>>,
        default_kernel: Vec<Vec<f64>>,
        item_state_alignment: Vec<Vec<f64>>,
        woh: Vec<WohSignal>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        for (what, len) in [
            ("actions", actions.len()),
            ("action_kernel", action_kernel.len()),
            ("default_kernel", default_kernel.len()),
            ("woh", woh.len()),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    what,
                    got: len,
                    expected: n,
                });
            }
        }
        for (x, rows) in action_kernel.iter().enumerate() {
            if rows.len() != actions[x].len() {
                return Err(Error::DimensionMismatch {
                    what: "action kernel rows",
                    got: rows.len(),
                    expected: actions[x].len(),
                });
            }
            for row in rows {
                check_row("action kernel", x, row, n)?;
            }
        }
        for (x, row) in default_kernel.iter().enumerate() {
            check_row("default kernel", x, row, n)?;
        }
        for row in &item_state_alignment {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    what: "m row",
                    got: row.len(),
                    expected: n,
                });
            }
            for &v in row {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::ValueOutOfRange {
                        what: "m entry",
                        value: v,
                        lo: -1.0,
                        hi: 1.0,
                    });
                }
            }
        }
        let n_items = item_state_alignment.len();
        for signal in &woh {
            for row in signal {
                if row.len() != n_items {
                    return Err(Error::LengthMismatch {
                        what: "woh row",
                        got: row.len(),
                        expected: n_items,
                    });
                }
            }
        }
        Ok(Universe {
            states,
            actions,
            action_kernel,
            default_kernel,
            item_state_alignment,
            woh,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: UniverseFile = serde_json::from_str(text)?;
        Universe::new(
            file.states,
            file.actions,
            file.action_kernel,
            file.default_kernel,
            file.item_state_alignment,
            file.woh,
        )
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_state_alignment.len()
    }

    fn check_state(&self, x: usize) -> Result<()> {
        if x >= self.n_states() {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: x,
                size: self.n_states(),
            });
        }
        Ok(())
    }

    fn check_action(&self, x: usize, a: usize) -> Result<()> {
        self.check_state(x)?;
        if a >= self.actions[x].len() {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                size: self.actions[x].len(),
            });
        }
        Ok(())
    }

    /// φ(x, w): mean over humans of the per-human state alignment
    /// Σ_j w^{ij} m^{jk}, normalized by the item count; equivalently the
    /// item-aggregation of ψ(w) against the state's m column.
    pub fn state_phi(&self, state: usize, woh: &WohSignal) -> Result<f64> {
        self.check_state(state)?;
        let n_items = self.n_items();
        let n_humans = woh.len();
        if n_humans == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for row in woh {
            if row.len() != n_items {
                return Err(Error::LengthMismatch {
                    what: "woh row",
                    got: row.len(),
                    expected: n_items,
                });
            }
            for (j, &w) in row.iter().enumerate() {
                total += w * self.item_state_alignment[j][state];
            }
        }
        Ok(total / (n_humans * n_items) as f64)
    }

    /// Distribution over states after taking the action and drifting for
    /// `drift_steps` further steps.
    fn distribution_after(&self, x: usize, a: usize, drift_steps: usize) -> Vec<f64> {
        let mut dist = self.action_kernel[x][a].clone();
        let n = self.n_states();
        for _ in 0..drift_steps {
            let mut next = vec![0.0; n];
            for (from, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (to, &q) in self.default_kernel[from].iter().enumerate() {
                    next[to] += p * q;
                }
            }
            dist = next;
        }
        dist
    }

    /// E[φ](τ, a, x): expected alignment at time τ (relative to the action
    /// time t = 0) against the WoH signal frozen at t.
    pub fn expected_alignment(
        &self,
        tau: usize,
        action: usize,
        state: usize,
        woh: &WohSignal,
    ) -> Result<f64> {
        self.check_action(state, action)?;
        if tau == 0 {
            return Err(Error::NonPositive {
                what: "tau",
                value: 0.0,
            });
        }
        let dist = self.distribution_after(state, action, tau - 1);
        let mut total = 0.0;
        for (i, &p) in dist.iter().enumerate() {
            if p != 0.0 {
                total += p * self.state_phi(i, woh)?;
            }
        }
        Ok(total)
    }

    /// Σ_{τ=t+1}^{t+H} β^{τ-t-1} E[φ](τ): the impatience-discounted value
    /// of an action against a fixed WoH signal. β = 1 recovers the plain
    /// truncated alignment sum.
    pub fn simple_value(
        &self,
        action: usize,
        state: usize,
        woh: &WohSignal,
        beta: f64,
        horizon: usize,
    ) -> Result<f64> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::ValueOutOfRange {
                what: "beta",
                value: beta,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if horizon == 0 {
            return Err(Error::NonPositive {
                what: "horizon",
                value: 0.0,
            });
        }
        self.check_action(state, action)?;
        let mut total = 0.0;
        for step in 1..=horizon {
            let weight = pow0(beta, step - 1);
            if weight == 0.0 {
                break;
            }
            total += weight * self.expected_alignment(step, action, state, woh)?;
        }
        Ok(total)
    }

    /// The flexible value function: the β-discounted expectation over
    /// future states of the α-discounted historical WoH alignments plus
    /// the γ-discounted expected future WoH alignments.
    ///
    /// `woh_history` covers times 0..=t (the last element is the current
    /// signal); future WoH signals come from the per-state sensor.
    pub fn full_value(
        &self,
        action: usize,
        state: usize,
        woh_history: &[WohSignal],
        config: &DiscountConfig,
    ) -> Result<f64> {
        config.validate()?;
        self.check_action(state, action)?;
        if woh_history.is_empty() {
            return Err(Error::EmptyObservations);
        }
        let t = woh_history.len() - 1;
        let n = self.n_states();
        let horizon = config.horizon;

        // historical term per candidate state i: sum_{T=0..t} α^{t-T} φ(i, W[x_T])
        let mut hist = vec![0.0; n];
        for (time, signal) in woh_history.iter().enumerate() {
            let weight = pow0(config.alpha_hist, t - time);
            if weight == 0.0 {
                continue;
            }
            for (i, h) in hist.iter_mut().enumerate() {
                *h += weight * self.state_phi(i, signal)?;
            }
        }

        // future term per candidate state i:
        // sum_{T=t+1..t+H} γ^{T-t} sum_j P(x_T = j) φ(i, W[x_j])
        let mut fut = vec![0.0; n];
        if config.gamma_future > 0.0 {
            let mut phi_sensor = vec![vec![0.0; n]; n]; // [i][j] = φ(i, W[x_j])
            for (i, row) in phi_sensor.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = self.state_phi(i, &self.woh[j])?;
                }
            }
            for step in 1..=horizon {
                let weight = config.gamma_future.powi(step as i32);
                if weight == 0.0 {
                    break;
                }
                let dist = self.distribution_after(state, action, step - 1);
                for (i, f) in fut.iter_mut().enumerate() {
                    let mut expected = 0.0;
                    for (j, &p) in dist.iter().enumerate() {
                        if p != 0.0 {
                            expected += p * phi_sensor[i][j];
                        }
                    }
                    *f += weight * expected;
                }
            }
        }

        let mut total = 0.0;
        for step in 1..=horizon {
            let weight = pow0(config.beta_time, step - 1);
            if weight == 0.0 {
                break;
            }
            let dist = self.distribution_after(state, action, step - 1);
            let mut inner = 0.0;
            for (i, &p) in dist.iter().enumerate() {
                if p != 0.0 {
                    inner += p * (hist[i] + fut[i]);
                }
            }
            total += weight * inner;
        }
        Ok(total)
    }

    /// Γ(x) argmax under an arbitrary per-action value function; ties go
    /// to the lowest action index.
    pub fn optimal_action<F>(&self, state: usize, mut value_fn: F) -> Result<usize>
    where
        F: FnMut(usize) -> Result<f64>,
    {
        self.check_state(state)?;
        let n_actions = self.actions[state].len();
        if n_actions == 0 {
            return Err(Error::EmptyActionSet { state });
        }
        let mut best = 0;
        let mut best_value = value_fn(0)?;
        for a in 1..n_actions {
            let v = value_fn(a)?;
            if v > best_value {
                best = a;
                best_value = v;
            }
        }
        Ok(best)
    }
}

/// x^k with the 0^0 = 1 convention.
fn pow0(x: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// Seeded random universe generator used by tests, property suites, and
/// benchmark configs.
pub fn random_universe(
    n_states: usize,
    n_actions: usize,
    n_items: usize,
    n_humans: usize,
    seed: u64,
) -> Universe {
    let mut rng = Pcg64::seed_from_u64(seed);
    let random_row = |rng: &mut Pcg64| -> Vec<f64> {
        let raw: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.01..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / sum).collect()
    };
    let states = (0..n_states).map(|k| format!("s{k}")).collect();
    let actions = (0..n_states)
        .map(|_| (0..n_actions).map(|a| format!("a{a}")).collect())
        .collect();
    let action_kernel = (0..n_states)
        .map(|_| (0..n_actions).map(|_| random_row(&mut rng)).collect())
        .collect();
    let default_kernel = (0..n_states).map(|_| random_row(&mut rng)).collect();
    let item_state_alignment = (0..n_items)
        .map(|_| (0..n_states).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let woh = (0..n_states)
        .map(|_| {
            (0..n_humans)
                .map(|_| (0..n_items).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect()
        })
        .collect();
    Universe::new(
        states,
        actions,
        action_kernel,
        default_kernel,
        item_state_alignment,
        woh,
    )
    .expect("generated universe is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_mass(n: usize, at: usize) -> Vec<f64> {
        let mut row = vec![0.0; n];
        row[at] = 1.0;
        row
    }

    /// Two states, two actions from each state: action 0 jumps to state 0,
    /// action 1 jumps to state 1; both states then stay put.
    fn two_state_universe(m: Vec<Vec<f64>>, woh: Vec<WohSignal>) -> Universe {
        Universe::new(
            vec!["a".into(), "b".into()],
            vec![vec!["go0".into(), "go1".into()]; 2],
            vec![vec![point_mass(2, 0), point_mass(2, 1)]; 2],
            vec![point_mass(2, 0), point_mass(2, 1)],
            m,
            woh,
        )
        .unwrap()
    }

    fn constant_woh(n_humans: usize, n_items: usize, v: f64) -> WohSignal {
        vec![vec![v; n_items]; n_humans]
    }

    #[test]
    fn construction_rejects_bad_kernel() {
        let err = Universe::new(
            vec!["a".into()],
            vec![vec!["x".into()]],
            vec![vec![vec![0.5]]],
            vec![vec![1.0]],
            vec![],
            vec![vec![]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidKernel { .. }));
    }

    #[test]
    fn construction_rejects_out_of_range_m() {
        let err = Universe::new(
            vec!["a".into()],
            vec![vec!["x".into()]],
            vec![vec![vec![1.0]]],
            vec![vec![1.0]],
            vec![vec![1.5]],
            vec![vec![]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange { .. }));
    }

    #[test]
    fn phi_zero_will_is_zero() {
        let u = two_state_universe(
            vec![vec![0.7, -0.2]],
            vec![constant_woh(1, 1, 0.0); 2],
        );
        assert_eq!(u.state_phi(0, &constant_woh(2, 1, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn phi_single_human_single_item() {
        let u = two_state_universe(vec![vec![0.7, -0.2]], vec![constant_woh(1, 1, 0.0); 2]);
        let w = constant_woh(1, 1, 1.0);
        assert!((u.state_phi(0, &w).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn phi_perfect_alignment() {
        let u = two_state_universe(
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![constant_woh(2, 3, 0.0); 2],
        );
        let w = constant_woh(4, 3, 1.0);
        assert!((u.state_phi(0, &w).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_alignment_point_mass() {
        let u = two_state_universe(
            vec![vec![0.6, -0.4]],
            vec![constant_woh(1, 1, 0.0); 2],
        );
        let w = constant_woh(1, 1, 1.0);
        // action 1 jumps deterministically to state 1 with phi = -0.4
        let e = u.expected_alignment(1, 1, 0, &w).unwrap();
        assert!((e + 0.4).abs() < 1e-12);
    }

    #[test]
    fn expected_alignment_uniform_cancellation() {
        let u = Universe::new(
            vec!["a".into(), "b".into()],
            vec![vec!["x".into()], vec!["x".into()]],
            vec![vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]],
            vec![point_mass(2, 0), point_mass(2, 1)],
            vec![vec![1.0, -1.0]],
            vec![constant_woh(1, 1, 0.0); 2],
        )
        .unwrap();
        let w = constant_woh(1, 1, 1.0);
        assert!(u.expected_alignment(1, 0, 0, &w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn expected_alignment_matches_hand_matrix_powers() {
        // 3-state chain: action moves 0 -> 1, drift moves 1 -> 2, 2 -> 2.
        let u = Universe::new(
            vec!["s0".into(), "s1".into(), "s2".into()],
            vec![vec!["step".into()]; 3],
            vec![
                vec![point_mass(3, 1)],
                vec![point_mass(3, 2)],
                vec![point_mass(3, 2)],
            ],
            vec![point_mass(3, 1), point_mass(3, 2), point_mass(3, 2)],
            vec![vec![0.1, 0.5, -0.3]],
            vec![constant_woh(1, 1, 0.0); 3],
        )
        .unwrap();
        let w = constant_woh(1, 1, 1.0);
        // tau = 2: action to s1, one drift step to s2, phi = -0.3
        let e = u.expected_alignment(2, 0, 0, &w).unwrap();
        assert!((e + 0.3).abs() < 1e-12);
    }

    #[test]
    fn simple_value_single_step() {
        let u = two_state_universe(vec![vec![0.6, -0.4]], vec![constant_woh(1, 1, 0.0); 2]);
        let w = constant_woh(1, 1, 1.0);
        let v = u.simple_value(0, 0, &w, 0.5, 1).unwrap();
        let e = u.expected_alignment(1, 0, 0, &w).unwrap();
        assert!((v - e).abs() < 1e-12);
    }

    #[test]
    fn simple_value_geometric_series_in_absorbing_world() {
        // phi = 1 everywhere: value = (1 - beta^H) / (1 - beta)
        let u = two_state_universe(
            vec![vec![1.0, 1.0]],
            vec![constant_woh(1, 1, 0.0); 2],
        );
        let w = constant_woh(1, 1, 1.0);
        let beta = 0.5;
        let horizon = 6;
        let v = u.simple_value(0, 0, &w, beta, horizon).unwrap();
        let expected = (1.0 - beta.powi(horizon as i32)) / (1.0 - beta);
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn simple_value_beta_one_sums_expectations() {
        let u = two_state_universe(vec![vec![0.6, -0.4]], vec![constant_woh(1, 1, 0.0); 2]);
        let w = constant_woh(1, 1, 1.0);
        let v = u.simple_value(1, 0, &w, 1.0, 2).unwrap();
        let by_hand = u.expected_alignment(1, 1, 0, &w).unwrap()
            + u.expected_alignment(2, 1, 0, &w).unwrap();
        assert!((v - by_hand).abs() < 1e-12);
    }

    #[test]
    fn simple_value_beta_zero_is_first_expectation() {
        let u = random_universe(4, 2, 3, 2, 50);
        let w = constant_woh(2, 3, 0.5);
        let v = u.simple_value(1, 0, &w, 0.0, 8).unwrap();
        let e = u.expected_alignment(1, 1, 0, &w).unwrap();
        assert!((v - e).abs() < 1e-12);
    }

    #[test]
    fn full_value_alpha_gamma_zero_matches_simple_value() {
        let u = random_universe(5, 3, 4, 3, 99);
        let history = vec![
            constant_woh(3, 4, -0.2),
            constant_woh(3, 4, 0.4),
            constant_woh(3, 4, 0.7),
        ];
        let config = DiscountConfig {
            alpha_hist: 0.0,
            beta_time: 0.6,
            gamma_future: 0.0,
            horizon: 10,
        };
        let full = u.full_value(1, 2, &history, &config).unwrap();
        let simple = u
            .simple_value(1, 2, history.last().unwrap(), 0.6, 10)
            .unwrap();
        assert!((full - simple).abs() < 1e-9, "{full} vs {simple}");
    }

    #[test]
    fn full_value_constant_woh_factorizes() {
        // constant WoH across history and every sensed state: the value is
        // (1 + sum alpha^k + sum gamma^k) times the simple value
        let woh = constant_woh(2, 2, 0.3);
        let u = Universe::new(
            vec!["a".into(), "b".into()],
            vec![vec!["x".into(), "y".into()]; 2],
            vec![
                vec![vec![0.3, 0.7], vec![0.9, 0.1]],
                vec![vec![0.5, 0.5], vec![0.2, 0.8]],
            ],
            vec![vec![0.6, 0.4], vec![0.25, 0.75]],
            vec![vec![0.8, -0.5], vec![-0.1, 0.9]],
            vec![woh.clone(), woh.clone()],
        )
        .unwrap();
        let history = vec![woh.clone(); 3]; // t = 2
        let config = DiscountConfig {
            alpha_hist: 0.5,
            beta_time: 0.7,
            gamma_future: 0.25,
            horizon: 8,
        };
        let full = u.full_value(0, 1, &history, &config).unwrap();
        let simple = u.simple_value(0, 1, &woh, 0.7, 8).unwrap();
        let alpha_sum: f64 = (1..=2).map(|k| 0.5f64.powi(k)).sum();
        let gamma_sum: f64 = (1..=8).map(|k| 0.25f64.powi(k)).sum();
        let expected = (1.0 + alpha_sum + gamma_sum) * simple;
        assert!((full - expected).abs() < 1e-12, "{full} vs {expected}");
    }

    #[test]
    fn full_value_monotone_in_discounts_when_phi_nonnegative() {
        // all m and woh entries nonnegative, so every phi >= 0
        let mut rng = Pcg64::seed_from_u64(123);
        for trial in 0..10 {
            let mut u = random_universe(4, 2, 3, 2, 1000 + trial);
            for row in &mut u.item_state_alignment {
                for v in row {
                    *v = v.abs();
                }
            }
            for signal in &mut u.woh {
                for row in signal {
                    for v in row {
                        *v = v.abs();
                    }
                }
            }
            let history = vec![
                vec![vec![rng.gen_range(0.0..1.0); 3]; 2],
                vec![vec![rng.gen_range(0.0..1.0); 3]; 2],
            ];
            let base = DiscountConfig {
                alpha_hist: 0.3,
                beta_time: 0.5,
                gamma_future: 0.4,
                horizon: 6,
            };
            let v0 = u.full_value(0, 0, &history, &base).unwrap();
            for (da, db, dg) in [(0.4, 0.0, 0.0), (0.0, 0.3, 0.0), (0.0, 0.0, 0.35)] {
                let bumped = DiscountConfig {
                    alpha_hist: base.alpha_hist + da,
                    beta_time: base.beta_time + db,
                    gamma_future: base.gamma_future + dg,
                    horizon: base.horizon,
                };
                let v1 = u.full_value(0, 0, &history, &bumped).unwrap();
                assert!(
                    v1 >= v0 - 1e-12,
                    "trial {trial}: bumping ({da},{db},{dg}) lowered {v0} to {v1}"
                );
            }
        }
    }

    #[test]
    fn optimal_action_forced_and_tie_break() {
        let u = two_state_universe(vec![vec![0.5, 0.5]], vec![constant_woh(1, 1, 0.0); 2]);
        assert_eq!(u.optimal_action(0, |_| Ok(0.7)).unwrap(), 0);
        let single = Universe::new(
            vec!["a".into()],
            vec![vec!["only".into()]],
            vec![vec![vec![1.0]]],
            vec![vec![1.0]],
            vec![vec![0.5]],
            vec![constant_woh(1, 1, 0.0)],
        )
        .unwrap();
        assert_eq!(single.optimal_action(0, |_| Ok(0.0)).unwrap(), 0);
    }

    #[test]
    fn optimal_action_picks_larger_value() {
        let u = two_state_universe(vec![vec![0.3, 0.7]], vec![constant_woh(1, 1, 0.0); 2]);
        let w = constant_woh(1, 1, 1.0);
        let a = u
            .optimal_action(0, |a| u.simple_value(a, 0, &w, 1.0, 1))
            .unwrap();
        assert_eq!(a, 1);
    }

    #[test]
    fn phi_and_values_stay_bounded_on_random_universes() {
        for seed in 0..20 {
            let u = random_universe(5, 2, 4, 3, 400 + seed);
            let woh = u.woh[0].clone();
            for state in 0..u.n_states() {
                let phi = u.state_phi(state, &woh).unwrap();
                assert!((-1.0..=1.0).contains(&phi), "phi {phi}");
            }
            // any value is bounded by the discounted sum of ones
            let beta = 0.8f64;
            let horizon = 10;
            let bound: f64 = (0..horizon).map(|k| beta.powi(k as i32)).sum();
            for action in 0..2 {
                let v = u.simple_value(action, 0, &woh, beta, horizon).unwrap();
                assert!(v.abs() <= bound + 1e-12, "value {v} exceeds bound {bound}");
            }
        }
    }

    #[test]
    fn optimal_action_invariant_under_will_scaling() {
        for seed in 0..20 {
            let u = random_universe(4, 3, 3, 2, 7000 + seed);
            let woh: WohSignal = u.woh[0].clone();
            let scaled: WohSignal = woh
                .iter()
                .map(|row| row.iter().map(|v| v * 0.35).collect())
                .collect();
            let pick = |w: &WohSignal| {
                u.optimal_action(0, |a| u.simple_value(a, 0, w, 0.8, 6))
                    .unwrap()
            };
            assert_eq!(pick(&woh), pick(&scaled), "seed {seed}");
        }
    }

    #[test]
    fn tail_bound_tracks_truncation_error() {
        let config = DiscountConfig {
            beta_time: 0.5,
            horizon: 8,
            ..DiscountConfig::default()
        };
        // phi = 1 everywhere: truncated value is the geometric partial sum,
        // so the discarded tail equals the reported bound exactly
        let u = two_state_universe(vec![vec![1.0, 1.0]], vec![constant_woh(1, 1, 0.0); 2]);
        let w = constant_woh(1, 1, 1.0);
        let truncated = u.simple_value(0, 0, &w, 0.5, 8).unwrap();
        let infinite = 1.0 / (1.0 - 0.5);
        assert!((infinite - truncated - config.truncation_tail_bound()).abs() < 1e-12);
        assert_eq!(DiscountConfig::default().horizon, 16);
        assert!(DiscountConfig {
            beta_time: 1.0,
            ..DiscountConfig::default()
        }
        .truncation_tail_bound()
        .is_infinite());
    }

    #[test]
    fn universe_json_round_trip() {
        let json = r#"{
            "states": ["calm", "storm"],
            "actions": [["wait", "act"], ["wait"]],
            "action_kernel": [[[1.0, 0.0], [0.2, 0.8]], [[0.5, 0.5]]],
            "default_kernel": [[0.9, 0.1], [0.3, 0.7]],
            "item_state_alignment": [[0.5, -0.5]],
            "woh": [[[0.4]], [[-0.2]]]
        }"#;
        let u = Universe::from_json(json).unwrap();
        assert_eq!(u.n_states(), 2);
        assert_eq!(u.actions[0].len(), 2);
        let bad = json.replace("0.9, 0.1", "0.9, 0.3");
        assert!(Universe::from_json(&bad).is_err());
    }
}
