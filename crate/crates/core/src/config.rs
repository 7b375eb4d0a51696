//! JSON run configuration.
//!
//! Keys carry their unit in the name (`track_length_nm`, `dt_ps`, ...). Every
//! key is optional and falls back to the reference value; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::CalibrationMode;
use crate::device::DeviceParams;
use crate::network::{BranchCountRule, ConvergenceRule, SimConfig};
use crate::tasks::Hardware;
use crate::{Error, Result};

const NM: f64 = 1e-9;
const NS: f64 = 1e-9;
const PS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub lande_g: f64,
    pub polarization: f64,
    pub bohr_magneton_j_per_t: f64,
    pub cross_section_nm2: f64,
    pub track_length_nm: f64,
    pub mtj_width_nm: f64,
    pub mtj_placement: f64,
    pub electron_charge_c: f64,
    pub msat_a_per_m: f64,
    pub soma_leak_m_per_s: f64,
    pub axon_leak_m_per_s: f64,
    pub r_parallel_ohm: f64,
    pub r_antiparallel_ohm: f64,
    pub r_metal_ohm: f64,
}

/// Drops the last few bits of a unit conversion so `50e-18 / 1e-18` reads
/// back as `50` rather than `49.99999999999999`.
fn tidy(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection::from(&DeviceParams::default())
    }
}

impl From<&DeviceParams> for DeviceSection {
    fn from(p: &DeviceParams) -> Self {
        DeviceSection {
            lande_g: p.lande_g,
            polarization: p.polarization,
            bohr_magneton_j_per_t: p.bohr_magneton,
            cross_section_nm2: tidy(p.cross_section / (NM * NM)),
            track_length_nm: tidy(p.track_length / NM),
            mtj_width_nm: tidy(p.mtj_width / NM),
            mtj_placement: p.mtj_placement,
            electron_charge_c: p.electron_charge,
            msat_a_per_m: p.msat,
            soma_leak_m_per_s: p.soma_leak,
            axon_leak_m_per_s: p.axon_leak,
            r_parallel_ohm: p.r_parallel,
            r_antiparallel_ohm: p.r_antiparallel,
            r_metal_ohm: p.r_metal,
        }
    }
}

impl DeviceSection {
    pub fn to_params(&self) -> DeviceParams {
        DeviceParams {
            lande_g: self.lande_g,
            polarization: self.polarization,
            bohr_magneton: self.bohr_magneton_j_per_t,
            cross_section: self.cross_section_nm2 * NM * NM,
            track_length: self.track_length_nm * NM,
            mtj_width: self.mtj_width_nm * NM,
            mtj_placement: self.mtj_placement,
            electron_charge: self.electron_charge_c,
            msat: self.msat_a_per_m,
            soma_leak: self.soma_leak_m_per_s,
            axon_leak: self.axon_leak_m_per_s,
            r_parallel: self.r_parallel_ohm,
            r_antiparallel: self.r_antiparallel_ohm,
            r_metal: self.r_metal_ohm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_ps: f64,
    pub t_max_ns: f64,
    pub convergence: ConvergenceRule,
    pub hold_window_ns: f64,
    pub pin_tolerance_nm: f64,
    pub chargeup_t_cap_ns: f64,
    pub chargeup_hold_ns: f64,
    pub chargeup_settle_axons: bool,
    pub zero_weights_during_chargeup: bool,
    pub drive_branches: BranchCountRule,
    /// Record soma positions every this many steps.
    pub trace_every: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        SimSection {
            dt_ps: tidy(s.dt / PS),
            t_max_ns: tidy(s.t_max / NS),
            convergence: s.convergence,
            hold_window_ns: tidy(s.hold_window / NS),
            pin_tolerance_nm: tidy(s.pin_tolerance / NM),
            chargeup_t_cap_ns: tidy(s.chargeup_t_cap / NS),
            chargeup_hold_ns: tidy(s.chargeup_hold / NS),
            chargeup_settle_axons: s.chargeup_settle_axons,
            zero_weights_during_chargeup: s.zero_weights_during_chargeup,
            drive_branches: s.drive_branches,
            trace_every: s.trace_every,
        }
    }
}

impl SimSection {
    pub fn to_sim(&self) -> SimConfig {
        SimConfig {
            dt: self.dt_ps * PS,
            t_max: self.t_max_ns * NS,
            convergence: self.convergence,
            hold_window: self.hold_window_ns * NS,
            pin_tolerance: self.pin_tolerance_nm * NM,
            chargeup_t_cap: self.chargeup_t_cap_ns * NS,
            chargeup_hold: self.chargeup_hold_ns * NS,
            chargeup_settle_axons: self.chargeup_settle_axons,
            zero_weights_during_chargeup: self.zero_weights_during_chargeup,
            drive_branches: self.drive_branches,
            trace_every: self.trace_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareSection {
    /// `balanced`, `eq6`, `eq7`, `eq8` or `explicit:<volts>`.
    pub calibration: String,
    pub w_mag_v: f64,
    pub v_c_v: f64,
}

impl Default for HardwareSection {
    fn default() -> Self {
        let hw = Hardware::default();
        HardwareSection { calibration: hw.calibration.to_string(), w_mag_v: hw.w_mag, v_c_v: hw.v_c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecallSection {
    pub n: usize,
    /// Number of random stored patterns per trial, ignored when `stored` is set.
    pub patterns: usize,
    /// Fixed stored patterns as bit strings.
    pub stored: Option<Vec<String>>,
    pub exhaustive: bool,
    pub trials: usize,
    pub distortion: Option<f64>,
    pub normalize: bool,
}

impl Default for RecallSection {
    fn default() -> Self {
        RecallSection { n: 3, patterns: 1, stored: None, exhaustive: false, trials: 100, distortion: None, normalize: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageSection {
    /// Image grid files; the bundled glyphs when empty.
    pub images: Vec<PathBuf>,
    pub levels: Vec<f64>,
    pub trials_per_level: usize,
    pub normalize: bool,
}

impl Default for ImageSection {
    fn default() -> Self {
        ImageSection {
            images: Vec::new(),
            levels: (0..=10).map(|i| i as f64 * 0.05).collect(),
            trials_per_level: 50,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxCutSection {
    pub graphs: Vec<PathBuf>,
    /// Sidecar of best-known optima, `instance optimum` per line.
    pub best_known: Option<PathBuf>,
    pub penalty: f64,
}

impl Default for MaxCutSection {
    fn default() -> Self {
        MaxCutSection { graphs: Vec::new(), best_known: None, penalty: crate::tasks::maxcut::DEFAULT_PENALTY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub sizes: Vec<usize>,
    pub patterns: usize,
    pub trials: usize,
    pub distortion: Option<f64>,
    pub normalize: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { sizes: vec![3, 5, 11, 21, 29], patterns: 1, trials: 100, distortion: None, normalize: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub device: DeviceSection,
    pub sim: SimSection,
    pub hardware: HardwareSection,
    pub recall: RecallSection,
    pub image: ImageSection,
    pub maxcut: MaxCutSection,
    pub sweep: SweepSection,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            device: DeviceSection::default(),
            sim: SimSection::default(),
            hardware: HardwareSection::default(),
            recall: RecallSection::default(),
            image: ImageSection::default(),
            maxcut: MaxCutSection::default(),
            sweep: SweepSection::default(),
            out_dir: PathBuf::from("spinhop-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a file, or the built-in defaults for the name `default`.
    pub fn load(path: &Path) -> Result<Self> {
        if path.as_os_str() == "default" {
            return Ok(RunConfig::default());
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn calibration(&self) -> Result<CalibrationMode> {
        self.hardware.calibration.parse()
    }

    /// Switches to the literal variants: midpoint calibration without the
    /// track term and `N + 1` drive branches.
    pub fn apply_parity(&mut self) {
        self.hardware.calibration = CalibrationMode::MidpointNoTrack.to_string();
        self.sim.drive_branches = BranchCountRule::Printed;
    }

    pub fn hardware(&self) -> Result<Hardware> {
        let hw = Hardware {
            params: self.device.to_params(),
            sim: self.sim.to_sim(),
            calibration: self.calibration()?,
            w_mag: self.hardware.w_mag_v,
            v_c: self.hardware.v_c_v,
        };
        hw.params.validate()?;
        hw.sim.validate()?;
        if !(hw.w_mag > 0.0 && hw.w_mag.is_finite()) {
            return Err(Error::Config(format!("hardware.w_mag_v must be positive, got {}", hw.w_mag)));
        }
        if !(hw.v_c >= 0.0 && hw.v_c.is_finite()) {
            return Err(Error::Config(format!("hardware.v_c_v must be non-negative, got {}", hw.v_c)));
        }
        Ok(hw)
    }
}
