//! Run configuration files and built-in presets.
//!
//! A run config is TOML. Every section is optional and falls back to the
//! reference setup (12 MHz, N = 1024, L_cp = 128, P = 128, alpha = 0.995,
//! beta = 1, L_m = 10, K = 8):
//!
//! ```toml
//! master_seed = 1
//! trials = 20
//!
//! [sweep]
//! profiles = ["eva", "etu"]      # presets or names of [[profile]] entries
//! fd_hz = [200.0, 400.0, 600.0]
//! snr_db = [5.0, 15.0, 25.0]     # `inf` for a noiseless run
//! duration_ms = [40.0]
//!
//! [geometry]
//! tones = 1024
//! cp_len = 128
//! bandwidth_hz = 12e6
//! pilots = 128
//!
//! [simulation]
//! oscillators = 64
//! avg_samples = 64
//! delay_drift_ns_per_s = 0.0
//!
//! [tracker]
//! alpha = 0.995
//! beta = 1
//! max_rank = 10
//! series_order = 8
//! newton_tolerance = 1e-4
//! newton_max_iters = 4
//! eta_form = "projected"         # or "diag-ratio"
//!
//! [[profile]]
//! name = "two-ray"
//! delays_ns = [0.0, 800.0]
//! powers_db = [0.0, -6.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Scenario};
use crate::channel::{ChannelProfile, OfdmGeometry, ProfileDef, DEFAULT_AVG_SAMPLES, DEFAULT_OSCILLATORS};
use crate::numerics::NewtonConfig;
use crate::tracker::{EtaForm, TrackerConfig};

pub const PRESETS: [(&str, &str); 4] = [
    ("eva", include_str!("../../presets/eva.toml")),
    ("etu", include_str!("../../presets/etu.toml")),
    ("snr-grid", include_str!("../../presets/snr-grid.toml")),
    ("convergence", include_str!("../../presets/convergence.toml")),
];

/// SNR points used when a config does not list any.
pub const DEFAULT_SNR_DB: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub sweep: SweepConfig,
    pub geometry: GeometryConfig,
    pub simulation: SimulationConfig,
    pub tracker: TrackerParams,
    #[serde(rename = "profile")]
    pub profiles: Vec<ProfileDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub profiles: Vec<String>,
    pub fd_hz: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub duration_ms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub tones: usize,
    pub cp_len: usize,
    pub bandwidth_hz: f64,
    pub pilots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub oscillators: usize,
    pub avg_samples: usize,
    pub delay_drift_ns_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerParams {
    pub alpha: f64,
    pub beta: u32,
    pub max_rank: usize,
    pub series_order: usize,
    pub newton_tolerance: f64,
    pub newton_max_iters: usize,
    pub newton_init: Option<f64>,
    /// `projected` or `diag-ratio`.
    pub eta_form: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            trials: 20,
            sweep: SweepConfig::default(),
            geometry: GeometryConfig::default(),
            simulation: SimulationConfig::default(),
            tracker: TrackerParams::default(),
            profiles: Vec::new(),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            profiles: vec!["eva".into()],
            fd_hz: vec![200.0, 400.0, 600.0],
            snr_db: DEFAULT_SNR_DB.to_vec(),
            duration_ms: vec![40.0],
        }
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { tones: 1024, cp_len: 128, bandwidth_hz: 12e6, pilots: 128 }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { oscillators: DEFAULT_OSCILLATORS, avg_samples: DEFAULT_AVG_SAMPLES, delay_drift_ns_per_s: 0.0 }
    }
}

impl Default for TrackerParams {
    fn default() -> Self {
        let n = NewtonConfig::default();
        Self {
            alpha: 0.995,
            beta: 1,
            max_rank: 10,
            series_order: 8,
            newton_tolerance: n.tolerance,
            newton_max_iters: n.max_iters,
            newton_init: n.init,
            eta_form: EtaForm::default().name().to_string(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read(path)?;
        Self::from_toml_str(&text)
    }

    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        Self::from_toml_str(preset_text(name)?)
    }

    /// Config file laid over a preset: tables merge key by key, anything
    /// else in the file replaces the preset value.
    pub fn layered(preset: Option<&str>, file: Option<&Path>) -> Result<Self, HarnessError> {
        let mut base = match preset {
            Some(name) => parse_table(preset_text(name)?)?,
            None => toml::Table::new(),
        };
        if let Some(path) = file {
            merge(&mut base, parse_table(&read(path)?)?);
        }
        base.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))
    }

    pub fn geometry(&self) -> Result<OfdmGeometry, HarnessError> {
        let g = &self.geometry;
        if !(g.bandwidth_hz.is_finite() && g.bandwidth_hz > 0.0) {
            return Err(HarnessError::Config(format!("bandwidth must be positive, got {}", g.bandwidth_hz)));
        }
        Ok(OfdmGeometry::new(g.tones, g.cp_len, 1.0 / g.bandwidth_hz, g.pilots)?)
    }

    pub fn tracker_config(&self, geometry: OfdmGeometry) -> Result<TrackerConfig, HarnessError> {
        let t = &self.tracker;
        let eta_form = EtaForm::parse(&t.eta_form).ok_or_else(|| {
            HarnessError::Config(format!("unknown eta_form `{}` (projected or diag-ratio)", t.eta_form))
        })?;
        Ok(TrackerConfig {
            alpha: t.alpha,
            lag: t.beta,
            max_rank: t.max_rank,
            series_order: t.series_order,
            newton: NewtonConfig { tolerance: t.newton_tolerance, max_iters: t.newton_max_iters, init: t.newton_init },
            eta_form,
            geometry,
        })
    }

    fn resolve_profile(&self, name: &str) -> Result<ChannelProfile, HarnessError> {
        if let Some(def) = self.profiles.iter().find(|p| p.name == name) {
            return Ok(ChannelProfile::try_from(def.clone())?);
        }
        ChannelProfile::preset(name).ok_or_else(|| HarnessError::Config(format!("unknown channel profile `{name}`")))
    }

    /// Expands the sweep into validated scenarios, in sweep order.
    pub fn scenarios(&self) -> Result<Vec<Scenario>, HarnessError> {
        let s = &self.sweep;
        for (what, empty) in [
            ("profiles", s.profiles.is_empty()),
            ("fd_hz", s.fd_hz.is_empty()),
            ("snr_db", s.snr_db.is_empty()),
            ("duration_ms", s.duration_ms.is_empty()),
        ] {
            if empty {
                return Err(HarnessError::Config(format!("sweep.{what} is empty")));
            }
        }
        let geometry = self.geometry()?;
        let tracker = self.tracker_config(geometry)?;
        let mut out = Vec::new();
        for name in &s.profiles {
            let profile = self.resolve_profile(name)?;
            for &fd_hz in &s.fd_hz {
                for &snr_db in &s.snr_db {
                    for &duration_ms in &s.duration_ms {
                        let scenario = Scenario {
                            id: Scenario::make_id(profile.name(), fd_hz, snr_db, duration_ms),
                            profile: profile.clone(),
                            fd_hz,
                            snr_db,
                            duration_ms,
                            geometry,
                            tracker,
                            trials: self.trials,
                            master_seed: self.master_seed,
                            oscillators: self.simulation.oscillators,
                            avg_samples: self.simulation.avg_samples,
                            delay_drift_ns_per_s: self.simulation.delay_drift_ns_per_s,
                        };
                        scenario.validate()?;
                        out.push(scenario);
                    }
                }
            }
        }
        let mut ids: Vec<&str> = out.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(HarnessError::Config(format!("duplicate scenario `{}` in sweep", w[0])));
        }
        Ok(out)
    }
}

fn preset_text(name: &str) -> Result<&'static str, HarnessError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            HarnessError::Config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
        })
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse_table(text: &str) -> Result<toml::Table, HarnessError> {
    text.parse::<toml::Table>().map_err(|e| HarnessError::Config(e.to_string()))
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
