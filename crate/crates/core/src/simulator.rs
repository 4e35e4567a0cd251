//! Event-driven simulation of the access chain.
//!
//! Only the embedded jump chain is sampled. Each event credits the state it
//! leaves with the mean holding time `1/R(w)`, where `R(w)` sums every rate
//! on the menu, attempt rates included. A failed attempt is still an event:
//! it consumes one transition from the budget and earns its time credit, but
//! the state does not move.
//!
//! The chain starts from the empty state: no transmissions, every persistent
//! user Idle.

use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixed::ExactReport;
use crate::model::{ActivityState, Scenario};

#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig<'a> {
    pub scenario: &'a Scenario,
    /// Number of events to draw, failures included.
    pub transitions: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedUser {
    pub p_idle: f64,
    pub p_wait: f64,
    pub p_transmit: f64,
    pub attempts: u64,
    pub successes: u64,
    /// `successes / attempts`, NaN before the first attempt.
    pub success_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    #[serde(skip)]
    pub scenario: Scenario,
    pub seed: u64,
    pub transitions: u64,
    /// Sum of the mean holding times credited.
    pub total_time: f64,
    /// Time fraction with `y` busy channels, `y` in `0..=m`.
    pub busy: Vec<f64>,
    pub class_attempts: Vec<u64>,
    pub class_successes: Vec<u64>,
    pub attempts: u64,
    pub successes: u64,
    /// Pooled non-persistent success ratio; `None` without classes or
    /// before the first arrival.
    pub phi_0: Option<f64>,
    pub users: Vec<SimulatedUser>,
}

impl SimulationReport {
    /// Per-class success ratio. PASTA makes these all estimate the same value.
    pub fn class_success_ratio(&self, i: usize) -> f64 {
        ratio(self.class_successes[i], self.class_attempts[i])
    }
}

fn ratio(hits: u64, tries: u64) -> f64 {
    if tries == 0 {
        f64::NAN
    } else {
        hits as f64 / tries as f64
    }
}

fn slot(a: ActivityState) -> usize {
    match a {
        ActivityState::Idle => 0,
        ActivityState::Waiting => 1,
        ActivityState::Transmitting => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival(usize),
    Departure(usize),
    Activate(usize),
    GiveUp(usize),
    Attempt(usize),
    Finish(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Event {
    kind: EventKind,
    /// False only for failed attempts.
    moved: bool,
}

/// Chain state plus the running tallies.
///
/// Time in each user state and in each busy count is flushed lazily when the
/// value changes, so a step costs O(k + n) for the menu scan and O(1) for the
/// accounting.
struct Chain<'a> {
    scenario: &'a Scenario,
    occupancy: Vec<usize>,
    activity: Vec<ActivityState>,
    busy: usize,
    clock: f64,
    user_since: Vec<f64>,
    user_time: Vec<[f64; 3]>,
    busy_since: f64,
    busy_time: Vec<f64>,
    class_attempts: Vec<u64>,
    class_successes: Vec<u64>,
    user_attempts: Vec<u64>,
    user_successes: Vec<u64>,
    arrival_rate: f64,
}

impl<'a> Chain<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let k = scenario.classes().len();
        let n = scenario.users().len();
        Self {
            scenario,
            occupancy: vec![0; k],
            activity: vec![ActivityState::Idle; n],
            busy: 0,
            clock: 0.0,
            user_since: vec![0.0; n],
            user_time: vec![[0.0; 3]; n],
            busy_since: 0.0,
            busy_time: vec![0.0; scenario.channels() + 1],
            class_attempts: vec![0; k],
            class_successes: vec![0; k],
            user_attempts: vec![0; n],
            user_successes: vec![0; n],
            arrival_rate: scenario.classes().iter().map(|c| c.lambda).sum(),
        }
    }

    fn user_rate(&self, j: usize) -> f64 {
        let u = &self.scenario.users()[j];
        match self.activity[j] {
            ActivityState::Idle => u.alpha,
            ActivityState::Waiting => u.beta + u.u,
            ActivityState::Transmitting => u.v,
        }
    }

    fn total_rate(&self) -> f64 {
        let departures: f64 = self
            .scenario
            .classes()
            .iter()
            .zip(&self.occupancy)
            .map(|(c, &x)| x as f64 * c.mu)
            .sum();
        let users: f64 = (0..self.activity.len()).map(|j| self.user_rate(j)).sum();
        self.arrival_rate + departures + users
    }

    /// Walks the menu with `target` in `[0, R)`.
    fn pick(&self, mut target: f64) -> EventKind {
        let classes = self.scenario.classes();
        for (i, c) in classes.iter().enumerate() {
            if target < c.lambda {
                return EventKind::Arrival(i);
            }
            target -= c.lambda;
        }
        for (i, c) in classes.iter().enumerate() {
            let rate = self.occupancy[i] as f64 * c.mu;
            if target < rate {
                return EventKind::Departure(i);
            }
            target -= rate;
        }
        let mut last = None;
        for (j, u) in self.scenario.users().iter().enumerate() {
            match self.activity[j] {
                ActivityState::Idle => {
                    if target < u.alpha {
                        return EventKind::Activate(j);
                    }
                    target -= u.alpha;
                    last = Some(EventKind::Activate(j));
                }
                ActivityState::Waiting => {
                    if target < u.beta {
                        return EventKind::GiveUp(j);
                    }
                    target -= u.beta;
                    if target < u.u {
                        return EventKind::Attempt(j);
                    }
                    target -= u.u;
                    last = Some(EventKind::Attempt(j));
                }
                ActivityState::Transmitting => {
                    if target < u.v {
                        return EventKind::Finish(j);
                    }
                    target -= u.v;
                    last = Some(EventKind::Finish(j));
                }
            }
        }
        // rounding pushed the draw past the end of the menu
        last.or_else(|| {
            (0..classes.len())
                .rev()
                .find(|&i| self.occupancy[i] > 0)
                .map(EventKind::Departure)
        })
        .unwrap_or(EventKind::Arrival(classes.len().saturating_sub(1)))
    }

    fn set_busy(&mut self, busy: usize) {
        self.busy_time[self.busy] += self.clock - self.busy_since;
        self.busy_since = self.clock;
        self.busy = busy;
    }

    fn set_activity(&mut self, j: usize, a: ActivityState) {
        self.user_time[j][slot(self.activity[j])] += self.clock - self.user_since[j];
        self.user_since[j] = self.clock;
        self.activity[j] = a;
    }

    fn step(&mut self, rng: &mut Xoshiro256PlusPlus) -> Event {
        let total = self.total_rate();
        let kind = self.pick(rng.random::<f64>() * total);
        // the credit belongs to the state being left
        self.clock += 1.0 / total;
        let moved = match kind {
            EventKind::Arrival(i) => {
                self.class_attempts[i] += 1;
                let won = rng.random::<f64>() < self.scenario.profile().theta(self.busy);
                if won {
                    self.class_successes[i] += 1;
                    self.occupancy[i] += 1;
                    self.set_busy(self.busy + 1);
                }
                won
            }
            EventKind::Departure(i) => {
                self.occupancy[i] -= 1;
                self.set_busy(self.busy - 1);
                true
            }
            EventKind::Activate(j) => {
                self.set_activity(j, ActivityState::Waiting);
                true
            }
            EventKind::GiveUp(j) => {
                self.set_activity(j, ActivityState::Idle);
                true
            }
            EventKind::Attempt(j) => {
                self.user_attempts[j] += 1;
                let won = rng.random::<f64>() < self.scenario.profile().theta(self.busy);
                if won {
                    self.user_successes[j] += 1;
                    self.set_activity(j, ActivityState::Transmitting);
                    self.set_busy(self.busy + 1);
                }
                won
            }
            EventKind::Finish(j) => {
                self.set_activity(j, ActivityState::Waiting);
                self.set_busy(self.busy - 1);
                true
            }
        };
        Event { kind, moved }
    }

    fn finish(mut self, seed: u64, transitions: u64) -> SimulationReport {
        self.set_busy(self.busy);
        for j in 0..self.activity.len() {
            self.set_activity(j, self.activity[j]);
        }
        let busy_total: f64 = self.busy_time.iter().sum();
        let users = self
            .user_time
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let sum: f64 = t.iter().sum();
                SimulatedUser {
                    p_idle: t[0] / sum,
                    p_wait: t[1] / sum,
                    p_transmit: t[2] / sum,
                    attempts: self.user_attempts[j],
                    successes: self.user_successes[j],
                    success_ratio: ratio(self.user_successes[j], self.user_attempts[j]),
                }
            })
            .collect();
        let attempts = self.class_attempts.iter().sum();
        let successes = self.class_successes.iter().sum();
        SimulationReport {
            scenario: self.scenario.clone(),
            seed,
            transitions,
            total_time: self.clock,
            busy: self.busy_time.iter().map(|t| t / busy_total).collect(),
            phi_0: (attempts > 0).then(|| ratio(successes, attempts)),
            class_attempts: self.class_attempts,
            class_successes: self.class_successes,
            attempts,
            successes,
            users,
        }
    }
}

pub fn run(config: &SimulationConfig<'_>) -> Result<SimulationReport> {
    if config.transitions == 0 {
        return Err(Error::InvalidParameter(
            "transitions must be at least 1".into(),
        ));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let mut chain = Chain::new(config.scenario);
    for _ in 0..config.transitions {
        chain.step(&mut rng);
    }
    Ok(chain.finish(config.seed, config.transitions))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub simulated: f64,
    pub exact: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// Largest absolute difference, ignoring rows where either side is NaN.
    pub fn max_abs_diff(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.abs_diff)
            .filter(|d| !d.is_nan())
            .fold(0.0, f64::max)
    }
}

/// Side-by-side rows: `phi_0`, then per user `P[I]`, `P[W]`, `P[T]`, `phi`,
/// then the busy histogram.
pub fn compare(exact: &ExactReport, sim: &SimulationReport) -> Result<Comparison> {
    if exact.scenario != sim.scenario {
        return Err(Error::ScenarioMismatch(
            "exact and simulated reports describe different scenarios".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut push = |metric: String, simulated: f64, exact: f64| {
        rows.push(ComparisonRow {
            metric,
            simulated,
            exact,
            abs_diff: (simulated - exact).abs(),
        });
    };
    if let Some(phi) = exact.phi_0 {
        push("phi_0".into(), sim.phi_0.unwrap_or(f64::NAN), phi);
    }
    for (j, (e, s)) in exact.users.iter().zip(&sim.users).enumerate() {
        let id = j + 1;
        push(format!("P[I_{id}]"), s.p_idle, e.p_idle);
        push(format!("P[W_{id}]"), s.p_wait, e.p_wait);
        push(format!("P[T_{id}]"), s.p_transmit, e.p_transmit);
        push(format!("phi_{id}"), s.success_ratio, e.success_ratio);
    }
    for (y, (e, s)) in exact.busy.iter().zip(&sim.busy).enumerate() {
        push(format!("P[busy={y}]"), *s, *e);
    }
    Ok(Comparison { rows })
}
