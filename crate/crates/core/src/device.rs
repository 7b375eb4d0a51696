//! Physics of a single four-terminal DW-MTJ.
//!
//! Each device has its own one-dimensional axis running from the low end
//! (`position = 0`) to the high end (`position = track_length`). The high
//! end is the parallel, low-resistance ON side of the MTJ. Positive current
//! through the write track and positive leak both move the wall toward the
//! high end. The soma leak is therefore positive (relaxes toward ON) and the
//! axon leak negative (relaxes toward OFF).
//!
//! The read path (MTJ) is insulated from the write path, so the read current
//! never moves the wall.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical constants and geometry shared by every device in a network.
///
/// All fields are SI. Defaults are the reference device values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub lande_g: f64,
    pub polarization: f64,
    /// J/T
    pub bohr_magneton: f64,
    /// Cross-section of the heavy-metal track normal to current flow, m².
    pub cross_section: f64,
    /// m
    pub track_length: f64,
    /// m
    pub mtj_width: f64,
    /// Centre of the MTJ window as a fraction of `track_length`.
    pub mtj_placement: f64,
    /// C
    pub electron_charge: f64,
    /// A/m
    pub msat: f64,
    /// Soma leak velocity, m/s (positive: toward ON).
    pub soma_leak: f64,
    /// Axon leak velocity, m/s (negative: toward OFF).
    pub axon_leak: f64,
    pub r_parallel: f64,
    pub r_antiparallel: f64,
    /// Resistance of one heavy-metal write track.
    pub r_metal: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            lande_g: 2.1,
            polarization: 0.7,
            bohr_magneton: 9.274e-24,
            cross_section: 50e-18,
            track_length: 100e-9,
            mtj_width: 20e-9,
            mtj_placement: 0.5,
            electron_charge: 1.602e-19,
            msat: 8e5,
            soma_leak: 0.2,
            axon_leak: -5.0,
            r_parallel: 500.0,
            r_antiparallel: 2000.0,
            r_metal: 2000.0,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cross_section", self.cross_section),
            ("msat", self.msat),
            ("electron_charge", self.electron_charge),
            ("track_length", self.track_length),
            ("mtj_width", self.mtj_width),
            ("r_parallel", self.r_parallel),
            ("r_antiparallel", self.r_antiparallel),
            ("r_metal", self.r_metal),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::param(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if self.r_antiparallel <= self.r_parallel {
            return Err(Error::param(format!(
                "r_antiparallel ({}) must exceed r_parallel ({})",
                self.r_antiparallel, self.r_parallel
            )));
        }
        let (lo, hi) = self.mtj_window();
        if !(lo > 0.0 && hi < self.track_length) {
            return Err(Error::param(format!(
                "MTJ window [{lo:e}, {hi:e}] m must lie strictly inside the track (0, {:e})",
                self.track_length
            )));
        }
        for (name, value) in [
            ("lande_g", self.lande_g),
            ("polarization", self.polarization),
            ("bohr_magneton", self.bohr_magneton),
            ("soma_leak", self.soma_leak),
            ("axon_leak", self.axon_leak),
        ] {
            if !value.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {value}")));
            }
        }
        Ok(())
    }

    /// `[low edge, high edge]` of the MTJ window along the track, m.
    pub fn mtj_window(&self) -> (f64, f64) {
        let centre = self.mtj_placement * self.track_length;
        (centre - self.mtj_width / 2.0, centre + self.mtj_width / 2.0)
    }

    pub fn mtj_centre(&self) -> f64 {
        self.mtj_placement * self.track_length
    }

    /// Precomputed constants for the integration hot loop.
    pub(crate) fn track(&self) -> Track {
        let (lo, hi) = self.mtj_window();
        Track {
            len: self.track_length,
            lo,
            width: hi - lo,
            hi,
            g_p: 1.0 / self.r_parallel,
            g_ap: 1.0 / self.r_antiparallel,
        }
    }
}

/// Geometry and conductance endpoints of one track, shared by all devices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Track {
    pub len: f64,
    pub lo: f64,
    pub width: f64,
    pub hi: f64,
    pub g_p: f64,
    pub g_ap: f64,
}

impl Track {
    #[inline]
    pub fn conductance(&self, x: f64) -> f64 {
        let f = (x - self.lo) / self.width;
        if f <= 0.0 {
            self.g_ap
        } else if f >= 1.0 {
            self.g_p
        } else {
            (self.g_ap + f * (self.g_p - self.g_ap)).min(self.g_p)
        }
    }

    #[inline]
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(0.0, self.len)
    }

    #[inline]
    pub fn binary(&self, x: f64) -> BinaryState {
        if x > self.hi {
            BinaryState::On
        } else if x < self.lo {
            BinaryState::Off
        } else {
            BinaryState::Transit
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceRole {
    Soma,
    Axon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryState {
    On,
    Off,
    Transit,
}

/// State of one device: wall position along its own axis plus its leak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwMtjState {
    /// m, in `[0, track_length]`.
    pub position: f64,
    pub role: DeviceRole,
    /// m/s, signed.
    pub leak: f64,
}

impl DwMtjState {
    /// A device of the given role with its wall at the low (antiparallel) end.
    pub fn at_low_end(role: DeviceRole, params: &DeviceParams) -> Self {
        let leak = match role {
            DeviceRole::Soma => params.soma_leak,
            DeviceRole::Axon => params.axon_leak,
        };
        DwMtjState { position: 0.0, role, leak }
    }

    pub fn with_position(mut self, position: f64) -> Self {
        self.position = position;
        self
    }
}

/// Current-to-velocity mobility `k = g P mu_B / (2 A Msat e)`, m s⁻¹ A⁻¹.
pub fn mobility_k(params: &DeviceParams) -> Result<f64> {
    for (name, value) in [
        ("cross_section", params.cross_section),
        ("msat", params.msat),
        ("electron_charge", params.electron_charge),
    ] {
        if !(value > 0.0) {
            return Err(Error::param(format!("{name} must be positive, got {value}")));
        }
    }
    Ok(params.lande_g * params.polarization * params.bohr_magneton
        / (2.0 * params.cross_section * params.msat * params.electron_charge))
}

/// Wall velocity under a signed write current plus the device leak.
#[inline]
pub fn dw_velocity(current: f64, k: f64, leak: f64) -> f64 {
    k * current + leak
}

/// Advances the wall by `v * dt` and pins it at the track ends.
pub fn step_position(state: DwMtjState, v: f64, dt: f64, params: &DeviceParams) -> Result<DwMtjState> {
    if !(dt > 0.0) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    let position = (state.position + v * dt).clamp(0.0, params.track_length);
    Ok(state.with_position(position))
}

/// MTJ read conductance: the part of the window on the parallel side of the
/// wall and the part on the antiparallel side act as two junctions in
/// parallel.
pub fn mtj_conductance(state: &DwMtjState, params: &DeviceParams) -> f64 {
    params.track().conductance(state.position)
}

pub fn binary_state(state: &DwMtjState, params: &DeviceParams) -> BinaryState {
    params.track().binary(state.position)
}
