use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::daq::{Annotation, SessionConfig};
use crate::device::{AfeParams, BathSchedule, BathSegment, ElectrodeParams, TempSensorParams};
use crate::firmware::FirmwareConfig;
use crate::protocol::LinkParams;

/// A bath pH held from `start_s` until the next segment. A labelled segment
/// is also annotated as a window with the segment's pH as expected value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSegment {
    pub start_s: f64,
    pub ph: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioAnnotation {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_ph: Option<f64>,
}

/// Everything needed to reproduce a recording. Parsed from TOML; every
/// parameter table is optional and defaults to the reference device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// When set, overrides `electrode.rng_seed` and `link.seed` (the link
    /// gets `seed + 1` so the two streams differ).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub duration_s: f64,
    #[serde(default = "default_start")]
    pub start_utc: DateTime<Utc>,
    #[serde(default = "default_temp")]
    pub temp_c: f64,
    #[serde(default = "default_true")]
    pub hydrated: bool,
    #[serde(default = "default_device")]
    pub device: String,
    #[serde(default)]
    pub electrode: ElectrodeParams,
    #[serde(default)]
    pub afe: AfeParams,
    #[serde(default)]
    pub temp_sensor: TempSensorParams,
    #[serde(default)]
    pub firmware: FirmwareConfig,
    #[serde(default)]
    pub link: LinkParams,
    #[serde(rename = "segment")]
    pub segments: Vec<ScenarioSegment>,
    #[serde(default, rename = "annotation", skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<ScenarioAnnotation>,
}

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 1, 1, 9, 0, 0).unwrap()
}

fn default_temp() -> f64 {
    25.0
}

fn default_true() -> bool {
    true
}

fn default_device() -> String {
    "sim0".into()
}

impl Scenario {
    /// Five hours in buffers 7 → 10 → 4 → 7 with the reference electrode.
    pub fn fig2() -> Self {
        let seg = |start_min: f64, ph: f64, label: &str| ScenarioSegment {
            start_s: start_min * 60.0,
            ph,
            label: Some(label.into()),
        };
        Self {
            name: "fig2".into(),
            seed: Some(1),
            duration_s: 300.0 * 60.0,
            start_utc: default_start(),
            temp_c: 25.0,
            hydrated: true,
            device: default_device(),
            electrode: ElectrodeParams::default(),
            afe: AfeParams::default(),
            temp_sensor: TempSensorParams::default(),
            firmware: FirmwareConfig::default(),
            link: LinkParams::default(),
            segments: vec![
                seg(0.0, 7.0, "cal-ph7-a"),
                seg(90.0, 10.0, "cal-ph10"),
                seg(150.0, 4.0, "cal-ph4"),
                seg(210.0, 7.0, "cal-ph7-b"),
            ],
            annotations: vec![],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Same scenario with a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Scenario(m));
        if !(self.duration_s > 0.0) || self.duration_s * 1000.0 > f64::from(u32::MAX) {
            return bad(format!(
                "duration_s {} outside (0, 49 days]",
                self.duration_s
            ));
        }
        if self.segments.first().is_some_and(|s| s.start_s != 0.0) {
            return bad("first segment must start at 0".into());
        }
        if self.segments.iter().any(|s| s.start_s >= self.duration_s) {
            return bad("segment starts after the end of the run".into());
        }
        for a in &self.annotations {
            if !(a.start_s >= 0.0 && a.end_s <= self.duration_s) {
                return bad(format!("annotation {:?} outside the run", a.label));
            }
        }
        for a in self.windows() {
            a.validate()
                .map_err(|e| SimError::Scenario(e.to_string()))?;
        }
        self.bath().validate()?;
        self.electrode().validate()?;
        self.afe.validate()?;
        self.link().validate()?;
        self.session_config().validate()?;
        Ok(())
    }

    pub fn bath(&self) -> BathSchedule {
        BathSchedule::new(
            self.segments
                .iter()
                .map(|s| BathSegment {
                    start_s: s.start_s,
                    ph: s.ph,
                })
                .collect(),
            self.temp_c,
        )
    }

    pub fn electrode(&self) -> ElectrodeParams {
        let mut e = self.electrode.clone();
        if let Some(seed) = self.seed {
            e.rng_seed = seed;
        }
        e
    }

    pub fn link(&self) -> LinkParams {
        let mut l = self.link.clone();
        if let Some(seed) = self.seed {
            l.seed = seed.wrapping_add(1);
        }
        l
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            firmware: self.firmware.clone(),
            afe: self.afe.clone(),
            temp_sensor: self.temp_sensor.clone(),
        }
    }

    pub fn duration_ms(&self) -> u32 {
        (self.duration_s * 1000.0).round() as u32
    }

    /// Labelled segments and explicit annotations as device-time windows,
    /// ordered by end time (the order an operator would close them in).
    pub fn windows(&self) -> Vec<Annotation> {
        let ms = |s: f64| (s * 1000.0).round() as u32;
        let mut out: Vec<Annotation> = self
            .segments
            .iter()
            .enumerate()
            .filter_map(|(i, seg)| {
                let label = seg.label.as_ref()?;
                let end = self
                    .segments
                    .get(i + 1)
                    .map_or(self.duration_s, |n| n.start_s);
                Some(Annotation::new(label.clone(), ms(seg.start_s), ms(end)).with_ph(seg.ph))
            })
            .chain(self.annotations.iter().map(|a| {
                let ann = Annotation::new(a.label.clone(), ms(a.start_s), ms(a.end_s));
                match a.expected_ph {
                    Some(ph) => ann.with_ph(ph),
                    None => ann,
                }
            }))
            .collect();
        out.sort_by_key(|a| (a.t_end_ms, a.t_start_ms));
        out
    }
}
