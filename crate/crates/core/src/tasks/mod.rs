//! Experiments run on the simulated hardware: associative recall, binary
//! image denoising and max-cut.

pub mod graph;
pub mod image;
pub mod maxcut;
pub mod metrics;
pub mod recall;

use serde::{Deserialize, Serialize};

use crate::circuit::{calibrate_vdw, CalibrationMode};
use crate::device::DeviceParams;
use crate::network::{init_all_antiparallel, NetworkState, SimConfig, TrialReport, WeightMatrix};
use crate::Result;

pub use graph::{parse_biqmac, Graph};
pub use image::{image_experiment, ImageOutcome};
pub use maxcut::{maxcut_experiment, MaxCutOutcome};
pub use metrics::{bitwise_accuracy, cut_value, distort, exhaustive_max_cut};
pub use recall::{recall_experiment, RecallOutcome, RecallSpec, RecallStats};

/// Everything a trial needs besides the weights and the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub params: DeviceParams,
    pub sim: SimConfig,
    pub calibration: CalibrationMode,
    /// Synaptic weight magnitude `W`, V.
    pub w_mag: f64,
    /// Charge-up clamp magnitude `V_C`, V.
    pub v_c: f64,
}

impl Default for Hardware {
    fn default() -> Self {
        Hardware {
            params: DeviceParams::default(),
            sim: SimConfig::default(),
            calibration: CalibrationMode::Balanced,
            w_mag: 0.1,
            v_c: 0.25,
        }
    }
}

impl Hardware {
    pub fn build(&self, weights: WeightMatrix) -> Result<NetworkState> {
        let n = weights.n();
        let v_dw = calibrate_vdw(&self.params, n, self.calibration)?;
        Ok(init_all_antiparallel(n, self.params, weights, v_dw)?.with_branch_rule(self.sim.drive_branches))
    }

    /// Builds a fresh network, writes `input` (if any) through charge-up and
    /// runs it to convergence.
    pub fn run_trial(&self, weights: WeightMatrix, input: Option<&[bool]>) -> Result<TrialReport> {
        self.sim.validate()?;
        let mut net = self.build(weights)?;
        if let Some(bits) = input {
            net.charge_up(bits, self.v_c, self.sim.chargeup_t_cap, &self.sim)?;
        }
        net.release_and_converge(&self.sim)
    }
}

/// Per-trial seed independent of scheduling order.
pub(crate) fn trial_seed(seed: u64, trial: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
