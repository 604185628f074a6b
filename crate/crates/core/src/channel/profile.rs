use serde::{Deserialize, Serialize};

use super::ChannelError;

/// Tapped-delay-line power delay profile.
///
/// Delays are kept in nanoseconds and converted to real-valued sample
/// delays on demand; they are never rounded to the sampling grid. Linear
/// powers are renormalized to unit total power on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    name: String,
    delays_ns: Vec<f64>,
    powers_db: Vec<f64>,
    powers: Vec<f64>,
}

/// Serialized form of a profile as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDef {
    pub name: String,
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

const EVA_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];
const EVA_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];
const ETU_DELAYS_NS: [f64; 9] = [0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0];
const ETU_POWERS_DB: [f64; 9] = [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0];

impl ChannelProfile {
    pub fn new(name: impl Into<String>, delays_ns: Vec<f64>, powers_db: Vec<f64>) -> Result<Self, ChannelError> {
        let name = name.into();
        if delays_ns.is_empty() {
            return Err(ChannelError::InvalidProfile(format!("{name}: profile has no paths")));
        }
        if delays_ns.len() != powers_db.len() {
            return Err(ChannelError::InvalidProfile(format!(
                "{name}: {} delays but {} powers",
                delays_ns.len(),
                powers_db.len()
            )));
        }
        if delays_ns.iter().chain(&powers_db).any(|v| !v.is_finite()) {
            return Err(ChannelError::InvalidProfile(format!("{name}: non-finite delay or power")));
        }
        if delays_ns[0] < 0.0 {
            return Err(ChannelError::InvalidProfile(format!("{name}: negative delay")));
        }
        if delays_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ChannelError::InvalidProfile(format!("{name}: delays must be strictly increasing")));
        }
        let linear: Vec<f64> = powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = linear.iter().sum();
        let powers = linear.into_iter().map(|p| p / total).collect();
        Ok(Self { name, delays_ns, powers_db, powers })
    }

    /// Extended Vehicular A.
    pub fn eva() -> Self {
        Self::new("eva", EVA_DELAYS_NS.to_vec(), EVA_POWERS_DB.to_vec()).expect("EVA preset is valid")
    }

    /// Extended Typical Urban.
    pub fn etu() -> Self {
        Self::new("etu", ETU_DELAYS_NS.to_vec(), ETU_POWERS_DB.to_vec()).expect("ETU preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "eva" => Some(Self::eva()),
            "etu" => Some(Self::etu()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn path_count(&self) -> usize {
        self.delays_ns.len()
    }

    pub fn delays_ns(&self) -> &[f64] {
        &self.delays_ns
    }

    pub fn powers_db(&self) -> &[f64] {
        &self.powers_db
    }

    /// Linear path powers, summing to one.
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Path delays in units of the sample period.
    pub fn normalized_delays(&self, sample_period: f64) -> Vec<f64> {
        self.delays_ns.iter().map(|d| d * 1e-9 / sample_period).collect()
    }

    pub fn to_def(&self) -> ProfileDef {
        ProfileDef { name: self.name.clone(), delays_ns: self.delays_ns.clone(), powers_db: self.powers_db.clone() }
    }
}

impl TryFrom<ProfileDef> for ChannelProfile {
    type Error = ChannelError;

    fn try_from(def: ProfileDef) -> Result<Self, Self::Error> {
        Self::new(def.name, def.delays_ns, def.powers_db)
    }
}
