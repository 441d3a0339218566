//! Run configuration: a JSON document with `device`, `noise`, `sweep` and
//! `output` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::{DeviceParams, FluxPoint};
use crate::coupled::{Subsystem, DEFAULT_FB_OFFSET};
use crate::error::{Error, Result};
use crate::noise::{Backgrounds, CoherenceOptions, NoiseModel, DEFAULT_T1_BACKGROUND};

/// Inclusive evenly spaced range; point `i` is `start + i·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Range { start, stop, step }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "{name}: range bounds must be finite"
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config(format!(
                "{name}: step must be positive, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Err(Error::Config(format!(
                "{name}: empty range [{}, {}]",
                self.start, self.stop
            )));
        }
        if self.len() > 1_000_000 {
            return Err(Error::Config(format!("{name}: more than 10^6 points")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

/// Exponent grid with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for GammaGrid {
    fn default() -> Self {
        GammaGrid {
            start: 0.8,
            stop: 1.0,
            points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSource {
    Inline(DeviceParams),
    /// Path to a JSON file holding [`DeviceParams`], relative to the config.
    Path(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub model: NoiseModel,
    /// Coupler-independent T₁, s.
    pub t1_background: f64,
    /// Defaults to `1/(2 T₁)` when absent.
    pub ramsey_background: Option<f64>,
    pub echo_background: Option<f64>,
    /// Flux noise in the qubit's own loop; off when absent.
    pub qubit_loop: Option<NoiseModel>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            model: NoiseModel::reference(),
            t1_background: DEFAULT_T1_BACKGROUND,
            ramsey_background: None,
            echo_background: None,
            qubit_loop: None,
        }
    }
}

impl NoiseSection {
    pub fn options(&self) -> Result<CoherenceOptions> {
        let base = Backgrounds::from_t1(self.t1_background)?;
        let backgrounds = Backgrounds {
            t1_qubit: self.t1_background,
            ramsey: self.ramsey_background.unwrap_or(base.ramsey),
            echo: self.echo_background.unwrap_or(base.echo),
        };
        backgrounds.validate()?;
        self.model.validate()?;
        Ok(CoherenceOptions {
            noise: self.model,
            backgrounds,
            qubit_noise: self.qubit_loop,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    QubitA,
    QubitB,
    Coupler,
}

impl From<Axis> for Subsystem {
    fn from(a: Axis) -> Self {
        match a {
            Axis::QubitA => Subsystem::QubitA,
            Axis::QubitB => Subsystem::QubitB,
            Axis::Coupler => Subsystem::Coupler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSweep {
    pub axis: Axis,
    pub range: Range,
    pub fixed: FluxPoint,
    pub branches: usize,
}

impl Default for SpectrumSweep {
    fn default() -> Self {
        SpectrumSweep {
            axis: Axis::QubitA,
            range: Range::new(0.505, 0.52, 5e-4),
            fixed: FluxPoint {
                f_a: 0.5,
                f_b: 0.5 + DEFAULT_FB_OFFSET,
                f_c: 0.5,
            },
            branches: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub coupler: Range,
    pub coupling: Range,
    /// Qubit B bias offset from ½ during crossing sweeps, Φ₀.
    pub fb_offset: f64,
    pub coherence: Range,
    /// Coupler biases (members of `coherence`) that get decay envelopes.
    pub envelope_points: Vec<f64>,
    /// Delays for the envelopes, s.
    pub envelope_delays: Range,
    pub gamma: GammaGrid,
    pub spectrum: SpectrumSweep,
    /// Rate table for `noise-fit`, relative to the config.
    pub rates: Option<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            coupler: Range::new(-0.6, 0.6, 2e-3),
            coupling: Range::new(0.40, 0.50, 0.01),
            fb_offset: DEFAULT_FB_OFFSET,
            coherence: Range::new(0.44, 0.56, 0.01),
            envelope_points: Vec::new(),
            envelope_delays: Range::new(0.0, 10e-6, 50e-9),
            gamma: GammaGrid::default(),
            spectrum: SpectrumSweep::default(),
            rates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceSource,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    /// Parses and validates a config. A device given by path stays
    /// unresolved; see [`RunConfig::resolve`].
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and inlines a device given by path.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_json_str(&text)?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(mut self, base: &Path) -> Result<Self> {
        if let DeviceSource::Path(p) = &self.device {
            let full: PathBuf = base.join(p);
            let text = std::fs::read_to_string(&full).map_err(|e| {
                Error::Config(format!("cannot read device {}: {e}", full.display()))
            })?;
            let params = parse_device(&text)?;
            self.device = DeviceSource::Inline(params);
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let DeviceSource::Inline(p) = &self.device {
            p.validate().map_err(as_config)?;
        }
        self.noise.options().map_err(as_config)?;
        if let Some(q) = &self.noise.qubit_loop {
            q.validate().map_err(as_config)?;
        }
        let s = &self.sweep;
        s.coupler.validate("sweep.coupler")?;
        s.coupling.validate("sweep.coupling")?;
        s.coherence.validate("sweep.coherence")?;
        s.envelope_delays.validate("sweep.envelope_delays")?;
        s.spectrum.range.validate("sweep.spectrum.range")?;
        if s.envelope_delays.start < 0.0 {
            return Err(Error::Config(
                "sweep.envelope_delays must be non-negative".into(),
            ));
        }
        if !(s.fb_offset.is_finite() && s.fb_offset.abs() < 0.25) {
            return Err(Error::Config(format!(
                "sweep.fb_offset {} out of range",
                s.fb_offset
            )));
        }
        let g = &s.gamma;
        if g.points < 2 || !(g.start > 0.0 && g.stop < 2.0 && g.stop > g.start) {
            return Err(Error::Config(
                "sweep.gamma must span an increasing range inside (0, 2) with at least 2 points"
                    .into(),
            ));
        }
        if s.spectrum.branches == 0 {
            return Err(Error::Config(
                "sweep.spectrum.branches must be positive".into(),
            ));
        }
        FluxPoint::new(
            s.spectrum.fixed.f_a,
            s.spectrum.fixed.f_b,
            s.spectrum.fixed.f_c,
        )
        .map_err(as_config)?;
        let grid = s.coherence.points();
        for &p in &s.envelope_points {
            if !grid.iter().any(|g| (g - p).abs() < 1e-12) {
                return Err(Error::Config(format!(
                    "envelope point {p} is not on the coherence grid"
                )));
            }
        }
        if self.output.dir.is_empty() {
            return Err(Error::Config("output.dir must not be empty".into()));
        }
        Ok(())
    }

    /// Device parameters; errors if the device is still a path.
    pub fn device(&self) -> Result<DeviceParams> {
        match &self.device {
            DeviceSource::Inline(p) => Ok(*p),
            DeviceSource::Path(p) => Err(Error::Config(format!("device `{p}` not resolved"))),
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Parses and validates a standalone device description.
pub fn parse_device(text: &str) -> Result<DeviceParams> {
    let p: DeviceParams =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("device: {e}")))?;
    p.validate().map_err(as_config)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        let dev = serde_json::to_string(&DeviceParams::table1_semiclassical()).unwrap();
        format!("{{\"device\": {dev}}}")
    }

    #[test]
    fn defaults_fill_sections() {
        let cfg = RunConfig::from_json_str(&minimal()).unwrap();
        assert_eq!(cfg.sweep.coupler.len(), 601);
        assert_eq!(cfg.output.dir, "out");
        assert_eq!(cfg.device().unwrap(), DeviceParams::table1_semiclassical());
    }

    #[test]
    fn range_arithmetic() {
        let r = Range::new(0.0, 1.0, 0.1);
        assert_eq!(r.len(), 11);
        assert_eq!(r.points()[10], 1.0);
        assert!(Range::new(0.0, 1.0, 0.0).validate("r").is_err());
        assert!(Range::new(1.0, 0.0, 0.1).validate("r").is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = minimal().replace("{\"device\"", "{\"devise\": 1, \"device\"");
        assert!(matches!(
            RunConfig::from_json_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_noise_is_config_error() {
        let mut cfg = RunConfig::from_json_str(&minimal()).unwrap();
        cfg.noise.model.gamma = 2.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn digest_is_stable() {
        let a = RunConfig::from_json_str(&minimal()).unwrap();
        let b = RunConfig::from_json_str(&minimal().replace(' ', "")).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn device_path_resolves_relative_to_config() {
        let dir = std::env::temp_dir().join(format!("qcoupler-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("dev.json"),
            serde_json::to_string(&DeviceParams::table1_full()).unwrap(),
        )
        .unwrap();
        std::fs::write(dir.join("run.json"), "{\"device\": \"dev.json\"}").unwrap();
        let cfg = RunConfig::load(&dir.join("run.json")).unwrap();
        assert_eq!(cfg.device().unwrap(), DeviceParams::table1_full());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
