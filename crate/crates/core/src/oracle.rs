//! Brute-force ground truth for small systems.
//!
//! Enumerates every legitimate state, writes down the generator from the
//! transition catalogue, and solves the global balance equations directly.
//! Nothing here uses the product form, which is what makes it a check.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixed;
use crate::model::{ActivityState, PersistentUser, Scenario};

/// Largest state space [`enumerate_states`] will build.
pub const STATE_LIMIT: usize = 200_000;
/// Largest state space stored as a dense generator and solved.
pub const DENSE_LIMIT: usize = 5_000;
/// Largest population for [`enumerate_c`].
pub const ENUMERATION_USER_LIMIT: usize = 14;
/// Detailed-balance tolerance used by [`audit_detailed_balance`].
pub const DETAILED_BALANCE_TOL: f64 = 1e-10;

/// One state `(x; a)` of the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    /// Non-persistent transmissions per class.
    pub occupancy: Vec<usize>,
    /// Persistent activity per user.
    pub activity: Vec<ActivityState>,
}

impl State {
    pub fn busy(&self) -> usize {
        self.occupancy.iter().sum::<usize>() + self.busy_persistent()
    }

    pub fn busy_persistent(&self) -> usize {
        self.activity.iter().filter(|a| a.is_transmitting()).count()
    }
}

/// Deterministically ordered list of states with a reverse index.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<State>,
    index: HashMap<State, usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn index_of(&self, state: &State) -> Option<usize> {
        self.index.get(state).copied()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact state count (as a float so huge systems do not overflow).
pub fn estimate_state_count(scenario: &Scenario) -> f64 {
    let m = scenario.channels();
    let k = scenario.classes().len();
    let n = scenario.users().len();
    (0..=n.min(m))
        .map(|b| {
            // b transmitters, the rest Idle or Waiting, and x with sum <= m - b
            binomial(n, b) * 2f64.powi((n - b) as i32) * binomial(m - b + k, k)
        })
        .sum()
}

/// All occupancy vectors of length `k` with sum at most `cap`, in
/// lexicographic order.
fn occupancies(k: usize, cap: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=cap {
        for mut rest in occupancies(k - 1, cap - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn activities(n: usize) -> impl Iterator<Item = Vec<ActivityState>> {
    (0..3usize.pow(n as u32)).map(move |mut code| {
        let mut a = vec![ActivityState::Idle; n];
        for slot in a.iter_mut().rev() {
            *slot = ActivityState::ALL[code % 3];
            code /= 3;
        }
        a
    })
}

pub fn enumerate_states(scenario: &Scenario) -> Result<StateSpace> {
    enumerate_states_with_limit(scenario, STATE_LIMIT)
}

/// Lexicographic on `(x, a)` with `Idle < Waiting < Transmitting`.
pub fn enumerate_states_with_limit(scenario: &Scenario, limit: usize) -> Result<StateSpace> {
    let estimate = estimate_state_count(scenario);
    if estimate > limit as f64 {
        return Err(Error::OracleScope {
            what: "state count",
            estimate,
            limit,
        });
    }
    let m = scenario.channels();
    let n = scenario.users().len();
    let mut states = Vec::with_capacity(estimate as usize);
    for occupancy in occupancies(scenario.classes().len(), m) {
        let used: usize = occupancy.iter().sum();
        for activity in activities(n) {
            let state = State {
                occupancy: occupancy.clone(),
                activity,
            };
            if used + state.busy_persistent() <= m {
                states.push(state);
            }
        }
    }
    let index = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    Ok(StateSpace { states, index })
}

/// Dense rate matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    size: usize,
    rates: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            rates: vec![0.0; size * size],
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from * self.size + to]
    }

    /// Sets `q(from, to)`. Self-loops are dropped.
    pub fn set_rate(&mut self, from: usize, to: usize, rate: f64) {
        assert!(rate >= 0.0, "negative rate {rate}");
        if from != to {
            self.rates[from * self.size + to] = rate;
        }
    }

    fn add_rate(&mut self, from: usize, to: usize, rate: f64) {
        let current = self.rate(from, to);
        self.set_rate(from, to, current + rate);
    }

    /// Total rate of leaving `state`.
    pub fn out_rate(&self, state: usize) -> f64 {
        self.rates[state * self.size..(state + 1) * self.size]
            .iter()
            .sum()
    }
}

/// Writes the generator of the scenario's chain over `space`.
///
/// Failed attempts leave the state unchanged and so contribute no entry.
pub fn build_generator(scenario: &Scenario, space: &StateSpace) -> Result<GeneratorMatrix> {
    if space.len() > DENSE_LIMIT {
        return Err(Error::OracleScope {
            what: "dense generator size",
            estimate: space.len() as f64,
            limit: DENSE_LIMIT,
        });
    }
    let profile = scenario.profile();
    let mut q = GeneratorMatrix::zeros(space.len());
    for (from, state) in space.states().iter().enumerate() {
        let busy = state.busy();
        let success = profile.theta(busy);
        let mut go = |next: State, rate: f64| {
            let to = space
                .index_of(&next)
                .expect("transition leaves the state space");
            q.add_rate(from, to, rate);
        };
        for (i, class) in scenario.classes().iter().enumerate() {
            if busy < scenario.channels() && success > 0.0 {
                let mut next = state.clone();
                next.occupancy[i] += 1;
                go(next, class.lambda * success);
            }
            if state.occupancy[i] > 0 {
                let mut next = state.clone();
                next.occupancy[i] -= 1;
                go(next, state.occupancy[i] as f64 * class.mu);
            }
        }
        for (j, user) in scenario.users().iter().enumerate() {
            let PersistentUser { alpha, beta, u, v } = *user;
            let mut to = |a: ActivityState, rate: f64| {
                let mut next = state.clone();
                next.activity[j] = a;
                go(next, rate);
            };
            match state.activity[j] {
                ActivityState::Idle => to(ActivityState::Waiting, alpha),
                ActivityState::Waiting => {
                    to(ActivityState::Idle, beta);
                    if busy < scenario.channels() && success > 0.0 {
                        to(ActivityState::Transmitting, u * success);
                    }
                }
                ActivityState::Transmitting => to(ActivityState::Waiting, v),
            }
        }
    }
    Ok(q)
}

/// Stationary distribution from the global balance equations, with the first
/// balance row replaced by the normalization.
pub fn solve_global_balance(generator: &GeneratorMatrix) -> Result<Vec<f64>> {
    let size = generator.len();
    if size == 0 {
        return Err(Error::Solver("empty state space".into()));
    }
    // row w: sum_z pi(z) q(z, w) - pi(w) out(w) = 0
    let mut system = DMatrix::<f64>::zeros(size, size);
    for w in 0..size {
        for z in 0..size {
            system[(w, z)] = if w == z {
                -generator.out_rate(w)
            } else {
                generator.rate(z, w)
            };
        }
    }
    for z in 0..size {
        system[(0, z)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(size);
    rhs[0] = 1.0;
    let pi = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("balance system is singular".into()))?;
    if pi.iter().any(|p| !p.is_finite()) {
        return Err(Error::Solver("non-finite stationary vector".into()));
    }
    Ok(pi.iter().copied().collect())
}

/// Largest `|pi(w) out(w) - sum_z pi(z) q(z, w)|` over states.
pub fn global_balance_residual(generator: &GeneratorMatrix, pi: &[f64]) -> f64 {
    (0..generator.len())
        .map(|w| {
            let inflow: f64 = (0..generator.len())
                .map(|z| pi[z] * generator.rate(z, w))
                .sum();
            (pi[w] * generator.out_rate(w) - inflow).abs()
        })
        .fold(0.0, f64::max)
}

/// A state pair whose probability flows disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceViolation {
    pub from: usize,
    pub to: usize,
    pub forward: f64,
    pub backward: f64,
    /// `|forward - backward|` over the largest pairwise flow in the chain.
    pub residual: f64,
}

/// Every connected pair with its flow mismatch, scaled by the largest flow.
fn pair_residuals(generator: &GeneratorMatrix, pi: &[f64]) -> Vec<BalanceViolation> {
    let size = generator.len();
    let mut out = Vec::new();
    let mut peak: f64 = 0.0;
    for w in 0..size {
        for z in (w + 1)..size {
            let forward = pi[w] * generator.rate(w, z);
            let backward = pi[z] * generator.rate(z, w);
            if forward == 0.0 && backward == 0.0 {
                continue;
            }
            peak = peak.max(forward.abs()).max(backward.abs());
            out.push(BalanceViolation {
                from: w,
                to: z,
                forward,
                backward,
                residual: (forward - backward).abs(),
            });
        }
    }
    for v in &mut out {
        v.residual /= peak;
    }
    out
}

/// Largest flow mismatch over connected pairs, relative to the largest flow
/// (zero if no pair is connected).
pub fn detailed_balance_residual(generator: &GeneratorMatrix, pi: &[f64]) -> f64 {
    pair_residuals(generator, pi)
        .iter()
        .map(|v| v.residual)
        .fold(0.0, f64::max)
}

/// Pairs `(w, z)` where `pi(w) q(w, z)` and `pi(z) q(z, w)` differ by more
/// than [`DETAILED_BALANCE_TOL`] of the largest flow.
pub fn audit_detailed_balance(generator: &GeneratorMatrix, pi: &[f64]) -> Vec<BalanceViolation> {
    pair_residuals(generator, pi)
        .into_iter()
        .filter(|v| v.residual > DETAILED_BALANCE_TOL)
        .collect()
}

/// `c_b` by summing over all `3^n` activity vectors with `b` transmitters.
pub fn enumerate_c(users: &[PersistentUser], transmitters: usize) -> Result<f64> {
    let n = users.len();
    if n > ENUMERATION_USER_LIMIT {
        return Err(Error::OracleScope {
            what: "persistent users for enumeration",
            estimate: n as f64,
            limit: ENUMERATION_USER_LIMIT,
        });
    }
    Ok(activities(n)
        .filter(|a| a.iter().filter(|s| s.is_transmitting()).count() == transmitters)
        .map(|a| {
            users
                .iter()
                .zip(&a)
                .map(|(u, s)| match s {
                    ActivityState::Idle => 1.0,
                    ActivityState::Waiting => u.wait_weight(),
                    ActivityState::Transmitting => u.transmit_weight(),
                })
                .product::<f64>()
        })
        .sum())
}

/// Outcome of checking the product form against the brute-force solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub states: usize,
    pub global_balance_residual: f64,
    pub detailed_balance_residual: f64,
    /// Largest `|product form - linear solve|` over states.
    pub product_form_discrepancy: f64,
    pub violations: usize,
}

pub fn verify(scenario: &Scenario) -> Result<Verification> {
    let space = enumerate_states(scenario)?;
    let generator = build_generator(scenario, &space)?;
    let pi = solve_global_balance(&generator)?;
    let mut discrepancy: f64 = 0.0;
    for (state, &p) in space.states().iter().zip(&pi) {
        let exact = mixed::joint_mass(scenario, &state.occupancy, &state.activity)?;
        discrepancy = discrepancy.max((exact - p).abs());
    }
    Ok(Verification {
        states: space.len(),
        global_balance_residual: global_balance_residual(&generator, &pi),
        detailed_balance_residual: detailed_balance_residual(&generator, &pi),
        product_form_discrepancy: discrepancy,
        violations: audit_detailed_balance(&generator, &pi).len(),
    })
}
