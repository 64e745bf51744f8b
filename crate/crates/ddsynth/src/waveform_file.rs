//! TOML waveform files.
//!
//! ```toml
//! kind = "fourier"
//! period = 1.0
//! problem = "dephasing"
//!
//! [[harmonic]]
//! n = 1
//! x = -1.35
//! y = 0.42
//! ```
//!
//! Fourier coefficients are in π/T units. A `kind = "pulses"` file lists
//! `[[pulse]]` tables with `start`, `duration`, `phase` and physical
//! `amplitude`.

use std::path::Path;

use ddsynth_core::waveform::{Drive, FourierWaveform, Pulse, PulseTrain};
use serde::{Deserialize, Serialize};

use crate::config::Problem;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicRow {
    pub n: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseRow {
    pub start: f64,
    pub duration: f64,
    pub phase: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WaveformFile {
    Fourier {
        period: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        problem: Option<Problem>,
        #[serde(default)]
        harmonic: Vec<HarmonicRow>,
    },
    Pulses {
        period: f64,
        #[serde(default)]
        pulse: Vec<PulseRow>,
    },
}

/// A parsed waveform ready for simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedWaveform {
    Fourier { waveform: FourierWaveform, problem: Option<Problem> },
    Pulses(PulseTrain),
}

impl LoadedWaveform {
    pub fn drive(&self) -> &dyn Drive {
        match self {
            LoadedWaveform::Fourier { waveform, .. } => waveform,
            LoadedWaveform::Pulses(train) => train,
        }
    }

    pub fn problem(&self) -> Option<Problem> {
        match self {
            LoadedWaveform::Fourier { problem, .. } => *problem,
            LoadedWaveform::Pulses(_) => None,
        }
    }

    pub fn period(&self) -> f64 {
        self.drive().period()
    }
}

impl WaveformFile {
    pub fn from_fourier(w: &FourierWaveform, problem: Option<Problem>) -> Self {
        let harmonic = w.x.iter().zip(&w.y).enumerate().map(|(k, (&x, &y))| HarmonicRow { n: k + 1, x, y }).collect();
        WaveformFile::Fourier { period: w.period, problem, harmonic }
    }

    pub fn from_train(t: &PulseTrain) -> Self {
        let pulse = t
            .pulses
            .iter()
            .map(|p| PulseRow { start: p.start, duration: p.duration, phase: p.phase, amplitude: p.amplitude })
            .collect();
        WaveformFile::Pulses { period: t.period, pulse }
    }

    /// Missing harmonics are zero; repeated ones are rejected.
    pub fn into_waveform(self) -> Result<LoadedWaveform> {
        match self {
            WaveformFile::Fourier { period, problem, harmonic } => {
                let p = harmonic.iter().map(|h| h.n).max().unwrap_or(0);
                if harmonic.iter().any(|h| h.n == 0) {
                    return Err(CliError::config("harmonic index n starts at 1"));
                }
                let (mut x, mut y) = (vec![0.0; p], vec![0.0; p]);
                let mut seen = vec![false; p];
                for h in &harmonic {
                    if std::mem::replace(&mut seen[h.n - 1], true) {
                        return Err(CliError::config(format!("harmonic {} listed twice", h.n)));
                    }
                    x[h.n - 1] = h.x;
                    y[h.n - 1] = h.y;
                }
                let waveform = FourierWaveform::new(period, x, y).map_err(|e| CliError::config(e.to_string()))?;
                Ok(LoadedWaveform::Fourier { waveform, problem })
            }
            WaveformFile::Pulses { period, pulse } => {
                let pulses = pulse
                    .into_iter()
                    .map(|p| Pulse { start: p.start, duration: p.duration, phase: p.phase, amplitude: p.amplitude })
                    .collect();
                PulseTrain::new(period, pulses).map(LoadedWaveform::Pulses).map_err(|e| CliError::config(e.to_string()))
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("waveform tables always serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("waveform file: {e}")))
    }
}

pub fn load(path: &Path) -> Result<LoadedWaveform> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    WaveformFile::parse(&text)?.into_waveform()
}
