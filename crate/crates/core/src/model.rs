//! Scenario description and the channel-scan success profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ProfileAxiom, Result};

/// Conditional success probabilities `theta(0..=m)` indexed by the number of
/// busy channels.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SuccessProfile(Vec<f64>);

impl SuccessProfile {
    /// Number of channels `m`.
    pub fn channels(&self) -> usize {
        self.0.len() - 1
    }

    /// `theta(b)`; panics if `b > m`.
    pub fn theta(&self, busy: usize) -> f64 {
        self.0[busy]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Builds the profile for a user that scans `scan` of `channels` channels
/// uniformly at random.
///
/// The attempt fails only when every scanned channel is busy, which happens
/// with probability `prod_{r<s} (b - r) / (m - r)`.
pub fn scan_success_profile(channels: usize, scan: usize) -> Result<SuccessProfile> {
    if channels == 0 {
        return Err(Error::InvalidParameter(
            "channel count must be positive".into(),
        ));
    }
    if scan == 0 || scan > channels {
        return Err(Error::InvalidParameter(format!(
            "scan width {scan} outside 1..={channels}"
        )));
    }
    let theta = (0..=channels)
        .map(|busy| {
            if busy < scan {
                return 1.0;
            }
            let miss = (0..scan).fold(1.0, |acc, r| {
                acc * (busy - r) as f64 / (channels - r) as f64
            });
            1.0 - miss
        })
        .collect();
    Ok(SuccessProfile(theta))
}

/// Checks `theta` against the three profile requirements and wraps it.
pub fn validate_profile(theta: Vec<f64>) -> Result<SuccessProfile> {
    if theta.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "profile needs m + 1 >= 2 entries, got {}",
            theta.len()
        )));
    }
    let m = theta.len() - 1;
    for (index, &value) in theta.iter().enumerate() {
        let fail = |axiom| {
            Err(Error::ProfileAxiom {
                axiom,
                index,
                value,
            })
        };
        if !(0.0..=1.0).contains(&value) {
            return fail(ProfileAxiom::UnitInterval);
        }
        if index < m && value <= 0.0 {
            return fail(ProfileAxiom::PositiveBelowCapacity);
        }
        if index == m && value != 0.0 {
            return fail(ProfileAxiom::ZeroAtCapacity);
        }
    }
    Ok(SuccessProfile(theta))
}

/// A Poisson class of one-shot users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonPersistentClass {
    /// Arrival rate.
    pub lambda: f64,
    /// File service rate.
    pub mu: f64,
}

impl NonPersistentClass {
    pub fn load(&self) -> f64 {
        self.lambda / self.mu
    }
}

/// A persistent user cycling through Idle, Waiting and Transmitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistentUser {
    /// Idle -> Waiting rate.
    pub alpha: f64,
    /// Waiting -> Idle rate.
    pub beta: f64,
    /// Attempt rate while Waiting.
    pub u: f64,
    /// Transmission completion rate.
    pub v: f64,
}

impl PersistentUser {
    /// Stationary weight of Waiting relative to Idle, `alpha / beta`.
    pub fn wait_weight(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Stationary weight of Transmitting relative to Idle (ignoring the
    /// channel factor), `alpha u / (beta v)`.
    pub fn transmit_weight(&self) -> f64 {
        self.alpha * self.u / (self.beta * self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityState {
    Idle,
    Waiting,
    Transmitting,
}

impl ActivityState {
    pub const ALL: [ActivityState; 3] = [
        ActivityState::Idle,
        ActivityState::Waiting,
        ActivityState::Transmitting,
    ];

    pub fn is_transmitting(self) -> bool {
        self == ActivityState::Transmitting
    }
}

/// How access attempts translate busy-channel counts into success odds.
#[derive(Debug, Clone, PartialEq)]
pub enum Scan {
    /// Random subset of this many channels.
    Width(usize),
    /// Arbitrary validated profile.
    Profile(SuccessProfile),
}

/// A complete, validated system description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    scan: Scan,
    profile: SuccessProfile,
    classes: Vec<NonPersistentClass>,
    users: Vec<PersistentUser>,
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

impl Scenario {
    pub fn new(
        channels: usize,
        scan: Scan,
        classes: Vec<NonPersistentClass>,
        users: Vec<PersistentUser>,
    ) -> Result<Self> {
        let profile = match &scan {
            Scan::Width(s) => scan_success_profile(channels, *s)?,
            Scan::Profile(p) => {
                if p.channels() != channels {
                    return Err(Error::InvalidParameter(format!(
                        "profile covers {} channels, scenario has {channels}",
                        p.channels()
                    )));
                }
                p.clone()
            }
        };
        if classes.is_empty() && users.is_empty() {
            return Err(Error::InvalidParameter(
                "scenario needs at least one non-persistent class or persistent user".into(),
            ));
        }
        for (i, c) in classes.iter().enumerate() {
            check_rate(&format!("class {i} lambda"), c.lambda)?;
            check_rate(&format!("class {i} mu"), c.mu)?;
        }
        for (j, u) in users.iter().enumerate() {
            check_rate(&format!("user {j} alpha"), u.alpha)?;
            check_rate(&format!("user {j} beta"), u.beta)?;
            check_rate(&format!("user {j} u"), u.u)?;
            check_rate(&format!("user {j} v"), u.v)?;
        }
        Ok(Self {
            scan,
            profile,
            classes,
            users,
        })
    }

    /// Convenience constructor for the common scan-width model.
    pub fn with_scan(
        channels: usize,
        scan: usize,
        classes: Vec<NonPersistentClass>,
        users: Vec<PersistentUser>,
    ) -> Result<Self> {
        Self::new(channels, Scan::Width(scan), classes, users)
    }

    pub fn channels(&self) -> usize {
        self.profile.channels()
    }

    pub fn scan(&self) -> &Scan {
        &self.scan
    }

    pub fn profile(&self) -> &SuccessProfile {
        &self.profile
    }

    pub fn classes(&self) -> &[NonPersistentClass] {
        &self.classes
    }

    pub fn users(&self) -> &[PersistentUser] {
        &self.users
    }

    /// Total loading `rho`.
    pub fn loading(&self) -> f64 {
        loading(&self.classes)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.try_into()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(ScenarioFile::from(self)).expect("scenario serializes")
    }
}

/// `sum_i lambda_i / mu_i`.
pub fn loading(classes: &[NonPersistentClass]) -> f64 {
    classes.iter().map(NonPersistentClass::load).sum()
}

/// On-disk scenario layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub channels: usize,
    #[serde(default)]
    pub scan: Option<usize>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub non_persistent_classes: Vec<NonPersistentClass>,
    #[serde(default)]
    pub persistent_users: Vec<PersistentUser>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Self> {
        let scan = match (file.scan, file.theta) {
            (Some(s), None) => Scan::Width(s),
            (None, Some(theta)) => Scan::Profile(validate_profile(theta)?),
            (Some(_), Some(_)) => {
                return Err(Error::Schema(
                    "give exactly one of \"scan\" and \"theta\", not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Schema(
                    "one of \"scan\" or \"theta\" is required".into(),
                ))
            }
        };
        Scenario::new(
            file.channels,
            scan,
            file.non_persistent_classes,
            file.persistent_users,
        )
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let (scan, theta) = match &s.scan {
            Scan::Width(w) => (Some(*w), None),
            Scan::Profile(p) => (None, Some(p.as_slice().to_vec())),
        };
        ScenarioFile {
            channels: s.channels(),
            scan,
            theta,
            non_persistent_classes: s.classes.clone(),
            persistent_users: s.users.clone(),
        }
    }
}
