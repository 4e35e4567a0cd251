//! Exact steady state with persistent and non-persistent users together.
//!
//! The stationary mass of a state with `x` non-persistent transmissions and
//! persistent activity vector `a` is
//!
//! ```text
//! q(x; a) = B * theta(0)...theta(x + T(a) - 1) * rho^x / x!
//!             * prod_j (alpha_j/beta_j)^[a_j = W] (alpha_j u_j / (beta_j v_j))^[a_j = T]
//! ```
//!
//! where `T(a)` counts transmitting persistent users. Grouping activity
//! vectors by `T(a) = b` leaves the coefficient `c_b` of `z^b` in
//! `prod_j (1 + alpha_j/beta_j + z alpha_j u_j / (beta_j v_j))`, extracted in
//! [`crate::dft`]. Every marginal then reduces to a convolution of `c` with
//! the loading terms `rho^x / x!`, weighted by the prefix products of theta.
//! The user marginals use the same construction with user `j` left out.

use std::collections::HashMap;

use serde::Serialize;

use crate::dft::{polynomial_coefficients, AffineFactor, ScaledReal};
use crate::error::{Error, Result};
use crate::model::{ActivityState, PersistentUser, Scenario};
use crate::nonpersistent::{loading_terms, theta_prefix_products, BusyDistribution};

/// Below this waiting probability the success ratio is numerically unreliable.
const NEGLIGIBLE_WAIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PersistentMetrics {
    pub p_idle: f64,
    pub p_wait: f64,
    pub p_transmit: f64,
    /// Files served per unit time, `p_transmit * v`.
    pub throughput: f64,
    /// Successful attempts over attempts, `throughput / (p_wait * u)`.
    pub success_ratio: f64,
    /// Set when `p_wait` is too small for `success_ratio` to be trusted.
    pub wait_negligible: bool,
}

impl PersistentMetrics {
    fn from_idle(user: &PersistentUser, p_idle: f64) -> Self {
        let ratio = user.wait_weight();
        let p_wait = p_idle * ratio;
        // clamp rounding residue; the exact value is nonnegative
        let p_transmit = (1.0 - p_idle * (1.0 + ratio)).max(0.0);
        let throughput = p_transmit * user.v;
        let wait_negligible = p_wait < NEGLIGIBLE_WAIT;
        let success_ratio = if p_wait > 0.0 {
            (throughput / (p_wait * user.u)).clamp(0.0, 1.0)
        } else {
            f64::NAN
        };
        Self {
            p_idle,
            p_wait,
            p_transmit,
            throughput,
            success_ratio,
            wait_negligible,
        }
    }
}

/// Everything the exact analysis produces for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    #[serde(skip)]
    pub scenario: Scenario,
    /// Probability of the empty, all-idle state.
    pub normalizer: ScaledReal,
    /// `P[y busy channels]` for `y` in `0..=m`.
    pub busy: Vec<f64>,
    /// Success probability seen by non-persistent arrivals; `None` without
    /// non-persistent classes.
    pub phi_0: Option<f64>,
    pub users: Vec<PersistentMetrics>,
    /// `c_0..=c_g` with `g = min(n, m)`.
    pub coefficients: Vec<ScaledReal>,
    /// Per user, the coefficients of the product over the other users.
    pub leave_one_out: Vec<Vec<ScaledReal>>,
}

/// Products of theta and, when non-persistent classes exist, the loading terms.
struct Weights {
    prefix: Vec<ScaledReal>,
    loading: Option<Vec<ScaledReal>>,
}

impl Weights {
    fn new(scenario: &Scenario) -> Self {
        let m = scenario.channels();
        let loading = if scenario.classes().is_empty() {
            None
        } else {
            Some(loading_terms(scenario.loading(), m))
        };
        Self {
            prefix: theta_prefix_products(scenario.profile()),
            loading,
        }
    }

    /// Unnormalized mass of `y` busy channels, for `y` in `0..=m`, given the
    /// transmitter-count coefficients `c`.
    fn busy_masses(&self, c: &[ScaledReal]) -> Vec<ScaledReal> {
        match &self.loading {
            Some(loading) => busy_masses_general(c, &self.prefix, loading),
            None => busy_masses_persistent_only(c, &self.prefix),
        }
    }
}

/// `w(y) sum_{b <= min(y, g)} c_b rho^(y-b) / (y-b)!`.
pub(crate) fn busy_masses_general(
    c: &[ScaledReal],
    prefix: &[ScaledReal],
    loading: &[ScaledReal],
) -> Vec<ScaledReal> {
    prefix
        .iter()
        .enumerate()
        .map(|(y, &w)| {
            let inner: ScaledReal = c
                .iter()
                .take(y + 1)
                .enumerate()
                .map(|(b, &cb)| cb * loading[y - b])
                .sum();
            w * inner
        })
        .collect()
}

/// Only persistent users: `w(y) c_y`.
fn busy_masses_persistent_only(c: &[ScaledReal], prefix: &[ScaledReal]) -> Vec<ScaledReal> {
    prefix
        .iter()
        .enumerate()
        .map(|(y, &w)| c.get(y).map_or(ScaledReal::ZERO, |&cb| w * cb))
        .collect()
}

fn factors(users: &[PersistentUser]) -> Vec<AffineFactor> {
    users.iter().map(AffineFactor::for_user).collect()
}

/// `c_0..=c_limit` for the whole persistent population (entries past `n` are zero).
pub fn coefficients_c(users: &[PersistentUser], limit: usize) -> Result<Vec<ScaledReal>> {
    let n = users.len();
    let mut c = polynomial_coefficients(&factors(users), limit.min(n) + 1)?;
    c.resize(limit + 1, ScaledReal::ZERO);
    Ok(c)
}

/// `c_{j,0}..=c_{j,limit}`: coefficients with user `j` left out.
pub fn leave_one_out_coefficients(
    users: &[PersistentUser],
    j: usize,
    limit: usize,
) -> Result<Vec<ScaledReal>> {
    check_index(users, j)?;
    let others: Vec<PersistentUser> = users
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != j)
        .map(|(_, u)| *u)
        .collect();
    coefficients_c(&others, limit)
}

fn check_index(users: &[PersistentUser], j: usize) -> Result<()> {
    if j < users.len() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: j,
            len: users.len(),
        })
    }
}

/// Shared state of one exact solve.
struct Analysis<'a> {
    scenario: &'a Scenario,
    weights: Weights,
    coefficients: Vec<ScaledReal>,
    masses: Vec<ScaledReal>,
    total: ScaledReal,
}

impl<'a> Analysis<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        let g = scenario.users().len().min(scenario.channels());
        let coefficients = coefficients_c(scenario.users(), g)?;
        let weights = Weights::new(scenario);
        let masses = weights.busy_masses(&coefficients);
        let total = masses.iter().copied().sum();
        Ok(Self {
            scenario,
            weights,
            coefficients,
            masses,
            total,
        })
    }

    fn normalizer(&self) -> ScaledReal {
        self.total.recip()
    }

    fn leave_one_out_limit(&self) -> usize {
        (self.scenario.users().len() - 1).min(self.scenario.channels())
    }

    fn idle_probability_from(&self, c_j: &[ScaledReal]) -> f64 {
        let idle: ScaledReal = self.weights.busy_masses(c_j).into_iter().sum();
        idle.ratio(self.total)
    }

    fn busy_distribution(&self) -> BusyDistribution {
        BusyDistribution {
            probabilities: self.masses.iter().map(|m| m.ratio(self.total)).collect(),
            normalizer: self.normalizer(),
        }
    }

    fn nonpersistent_success(&self) -> Result<f64> {
        if self.scenario.classes().is_empty() {
            return Err(Error::UndefinedMetric(
                "no non-persistent classes, so phi_0 is undefined".into(),
            ));
        }
        let hits: ScaledReal = self
            .masses
            .iter()
            .zip(self.scenario.profile().as_slice())
            .map(|(&m, &theta)| m * theta)
            .sum();
        Ok(hits.ratio(self.total))
    }

    /// Unnormalized mass of `(x; a)` where the non-persistent part contributes
    /// `occupancy_weight` and `x` transmissions.
    fn state_weight(
        &self,
        busy_np: usize,
        activity: &[ActivityState],
        occupancy_weight: ScaledReal,
    ) -> Result<ScaledReal> {
        let users = self.scenario.users();
        if activity.len() != users.len() {
            return Err(Error::InvalidState(format!(
                "activity vector has {} entries for {} users",
                activity.len(),
                users.len()
            )));
        }
        let busy = busy_np + activity.iter().filter(|a| a.is_transmitting()).count();
        if busy > self.scenario.channels() {
            return Err(Error::InvalidState(format!(
                "{busy} busy channels exceed {}",
                self.scenario.channels()
            )));
        }
        let persistent = users
            .iter()
            .zip(activity)
            .fold(ScaledReal::ONE, |acc, (u, a)| match a {
                ActivityState::Idle => acc,
                ActivityState::Waiting => acc * u.wait_weight(),
                ActivityState::Transmitting => acc * u.transmit_weight(),
            });
        Ok(self.weights.prefix[busy] * persistent * occupancy_weight)
    }
}

/// Normalizing constant: the probability of the empty, all-idle state.
pub fn normalizer_b(scenario: &Scenario) -> Result<ScaledReal> {
    Ok(Analysis::new(scenario)?.normalizer())
}

/// Stationary probability of the full state `(occupancy; activity)`.
pub fn joint_mass(
    scenario: &Scenario,
    occupancy: &[usize],
    activity: &[ActivityState],
) -> Result<f64> {
    let classes = scenario.classes();
    if occupancy.len() != classes.len() {
        return Err(Error::InvalidState(format!(
            "occupancy has {} entries for {} classes",
            occupancy.len(),
            classes.len()
        )));
    }
    let analysis = Analysis::new(scenario)?;
    let occupancy_weight = classes
        .iter()
        .zip(occupancy)
        .fold(ScaledReal::ONE, |acc, (c, &x)| {
            acc * loading_terms(c.load(), x)[x]
        });
    let weight = analysis.state_weight(occupancy.iter().sum(), activity, occupancy_weight)?;
    Ok(weight.ratio(analysis.total))
}

/// Stationary probability that `transmissions` non-persistent users are
/// transmitting (any class mix) and the persistent users are in `activity`.
pub fn aggregated_mass(
    scenario: &Scenario,
    transmissions: usize,
    activity: &[ActivityState],
) -> Result<f64> {
    let analysis = Analysis::new(scenario)?;
    let occupancy_weight = match &analysis.weights.loading {
        Some(loading) if transmissions < loading.len() => loading[transmissions],
        Some(_) => ScaledReal::ZERO, // rejected by the capacity check below
        None if transmissions == 0 => ScaledReal::ONE,
        None => ScaledReal::ZERO,
    };
    let weight = analysis.state_weight(transmissions, activity, occupancy_weight)?;
    Ok(weight.ratio(analysis.total))
}

/// `P[user j idle]` (zero-based `j`).
pub fn idle_probability(scenario: &Scenario, j: usize) -> Result<f64> {
    check_index(scenario.users(), j)?;
    let analysis = Analysis::new(scenario)?;
    let c_j = leave_one_out_coefficients(scenario.users(), j, analysis.leave_one_out_limit())?;
    Ok(analysis.idle_probability_from(&c_j))
}

pub fn persistent_metrics(scenario: &Scenario, j: usize) -> Result<PersistentMetrics> {
    let p_idle = idle_probability(scenario, j)?;
    Ok(PersistentMetrics::from_idle(&scenario.users()[j], p_idle))
}

pub fn busy_channel_distribution(scenario: &Scenario) -> Result<BusyDistribution> {
    Ok(Analysis::new(scenario)?.busy_distribution())
}

/// Success probability of non-persistent arrivals, `sum_y P[y busy] theta(y)`.
pub fn nonpersistent_success(scenario: &Scenario) -> Result<f64> {
    Analysis::new(scenario)?.nonpersistent_success()
}

fn user_key(u: &PersistentUser) -> [u64; 4] {
    [
        u.alpha.to_bits(),
        u.beta.to_bits(),
        u.u.to_bits(),
        u.v.to_bits(),
    ]
}

/// All exact outputs in one pass. Users with bit-identical parameters share
/// one leave-one-out extraction.
pub fn full_report(scenario: &Scenario) -> Result<ExactReport> {
    let analysis = Analysis::new(scenario)?;
    let users = scenario.users();
    let mut cache: HashMap<[u64; 4], Vec<ScaledReal>> = HashMap::new();
    let mut leave_one_out = Vec::with_capacity(users.len());
    let mut metrics = Vec::with_capacity(users.len());
    for (j, user) in users.iter().enumerate() {
        let c_j = match cache.get(&user_key(user)) {
            Some(c) => c.clone(),
            None => {
                let c = leave_one_out_coefficients(users, j, analysis.leave_one_out_limit())?;
                cache.insert(user_key(user), c.clone());
                c
            }
        };
        metrics.push(PersistentMetrics::from_idle(
            user,
            analysis.idle_probability_from(&c_j),
        ));
        leave_one_out.push(c_j);
    }
    let busy = analysis.busy_distribution();
    Ok(ExactReport {
        scenario: scenario.clone(),
        normalizer: busy.normalizer,
        busy: busy.probabilities,
        phi_0: analysis.nonpersistent_success().ok(),
        users: metrics,
        coefficients: analysis.coefficients.clone(),
        leave_one_out,
    })
}
