//! Closed-form steady state when every user is non-persistent.
//!
//! With loading `rho`, the number of busy channels has law
//! `P[b] = A * theta(0) ... theta(b-1) * rho^b / b!`, independent of how the
//! load splits across classes. Terms are generated by the recurrence
//! `t_{b+1} = t_b * theta(b) * rho / (b + 1)` in scaled arithmetic.

use serde::Serialize;

use crate::dft::ScaledReal;
use crate::error::{Error, Result};
use crate::model::{NonPersistentClass, SuccessProfile};

/// Stationary law of the busy-channel count together with its normalizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusyDistribution {
    /// `P[b busy]` for `b` in `0..=m`.
    pub probabilities: Vec<f64>,
    /// The normalizing constant, i.e. the probability of the empty system.
    pub normalizer: ScaledReal,
}

impl BusyDistribution {
    /// Builds the distribution from unnormalized masses.
    pub(crate) fn from_masses(masses: &[ScaledReal]) -> Self {
        let total: ScaledReal = masses.iter().copied().sum();
        Self {
            probabilities: masses.iter().map(|m| m.ratio(total)).collect(),
            normalizer: total.recip(),
        }
    }

    /// `sum_b P[b] theta(b)`: what a Poisson arrival sees.
    pub fn success_probability(&self, profile: &SuccessProfile) -> f64 {
        self.probabilities
            .iter()
            .zip(profile.as_slice())
            .map(|(p, t)| p * t)
            .sum()
    }
}

/// `theta(0) ... theta(y-1)` for `y` in `0..=m`.
pub(crate) fn theta_prefix_products(profile: &SuccessProfile) -> Vec<ScaledReal> {
    let mut out = Vec::with_capacity(profile.channels() + 1);
    let mut acc = ScaledReal::ONE;
    out.push(acc);
    for &theta in &profile.as_slice()[..profile.channels()] {
        acc = acc * theta;
        out.push(acc);
    }
    out
}

/// `rho^x / x!` for `x` in `0..=max`.
pub(crate) fn loading_terms(rho: f64, max: usize) -> Vec<ScaledReal> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = ScaledReal::ONE;
    out.push(acc);
    for x in 1..=max {
        acc = acc * (rho / x as f64);
        out.push(acc);
    }
    out
}

/// Unnormalized `theta(0)...theta(b-1) rho^b / b!` via the running recurrence.
fn busy_masses(profile: &SuccessProfile, rho: f64) -> Vec<ScaledReal> {
    let mut out = Vec::with_capacity(profile.channels() + 1);
    let mut term = ScaledReal::ONE;
    out.push(term);
    for b in 0..profile.channels() {
        term = term * (profile.theta(b) * rho / (b + 1) as f64);
        out.push(term);
    }
    out
}

fn check_rho(rho: f64) {
    assert!(
        rho.is_finite() && rho >= 0.0,
        "loading must be finite and nonnegative, got {rho}"
    );
}

/// Probability of the empty system.
pub fn normalizer_a(profile: &SuccessProfile, rho: f64) -> ScaledReal {
    check_rho(rho);
    busy_masses(profile, rho)
        .into_iter()
        .sum::<ScaledReal>()
        .recip()
}

/// Stationary probability of the occupancy vector `occupancy` (one count per
/// class).
pub fn state_mass(
    profile: &SuccessProfile,
    classes: &[NonPersistentClass],
    occupancy: &[usize],
) -> Result<f64> {
    if occupancy.len() != classes.len() {
        return Err(Error::InvalidState(format!(
            "occupancy has {} entries for {} classes",
            occupancy.len(),
            classes.len()
        )));
    }
    let busy: usize = occupancy.iter().sum();
    if busy > profile.channels() {
        return Err(Error::InvalidState(format!(
            "{busy} transmissions exceed {} channels",
            profile.channels()
        )));
    }
    let rho: f64 = classes.iter().map(NonPersistentClass::load).sum();
    let mut mass = normalizer_a(profile, rho) * theta_prefix_products(profile)[busy];
    for (class, &x) in classes.iter().zip(occupancy) {
        mass *= loading_terms(class.load(), x)[x];
    }
    Ok(mass.to_f64())
}

pub fn busy_distribution(profile: &SuccessProfile, rho: f64) -> BusyDistribution {
    check_rho(rho);
    BusyDistribution::from_masses(&busy_masses(profile, rho))
}

/// Long-run fraction of arrivals that find an idle channel.
pub fn success_probability(profile: &SuccessProfile, rho: f64) -> f64 {
    check_rho(rho);
    let masses = busy_masses(profile, rho);
    let total: ScaledReal = masses.iter().copied().sum();
    let hits: ScaledReal = masses
        .iter()
        .zip(profile.as_slice())
        .map(|(&m, &theta)| m * theta)
        .sum();
    hits.ratio(total)
}
