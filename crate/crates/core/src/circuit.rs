//! The two resistive sub-circuits of a neuron.
//!
//! Dendrite: every pre-synaptic axon contributes one branch, a weight
//! voltage source in series with that axon's MTJ. All branches meet at the
//! dendrite node, which returns to ground through the soma's write track
//! (`r_metal`). During charge-up an ideal `±V_C` source is tied to the node.
//!
//! Drive: `V_DW` feeds the soma MTJ, which splits into the `B` axon write
//! tracks in parallel.
//!
//! The sub-circuits of different neurons share no node, so each is solved
//! on its own.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::{mobility_k, DeviceParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynapseBranch {
    /// Trained weight voltage, V (signed).
    pub source_voltage: f64,
    /// MTJ resistance of the pre-synaptic axon, Ω.
    pub branch_resistance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendriteSolution {
    pub node_voltage: f64,
    /// Current into the soma write track; positive drives the soma toward ON.
    pub track_current: f64,
    /// Current delivered by each weight source into the node.
    pub branch_currents: Vec<f64>,
    /// Current delivered by the charge-up clamp, when attached.
    pub clamp_current: Option<f64>,
}

impl DendriteSolution {
    /// `Σ I_branch + I_clamp - I_track`, zero up to rounding.
    pub fn kcl_residual(&self) -> f64 {
        self.branch_currents.iter().sum::<f64>() + self.clamp_current.unwrap_or(0.0) - self.track_current
    }

    /// Net power delivered by all sources (weights and clamp), W.
    pub fn delivered_power(&self, branches: &[SynapseBranch]) -> f64 {
        let weights: f64 = branches
            .iter()
            .zip(&self.branch_currents)
            .map(|(b, i)| b.source_voltage * i)
            .sum();
        weights + self.clamp_current.map_or(0.0, |i| i * self.node_voltage)
    }

    /// Joule heating in the branch MTJs and the soma track, W.
    pub fn dissipated_power(&self, branches: &[SynapseBranch], r_metal: f64) -> f64 {
        let branches: f64 = branches
            .iter()
            .zip(&self.branch_currents)
            .map(|(b, i)| i * i * b.branch_resistance)
            .sum();
        branches + self.track_current * self.track_current * r_metal
    }
}

/// Solves one dendrite star node.
pub fn dendrite_solve(branches: &[SynapseBranch], r_metal: f64, clamp: Option<f64>) -> Result<DendriteSolution> {
    if branches.is_empty() && clamp.is_none() {
        return Err(Error::Topology("dendrite has neither branches nor a clamp".into()));
    }
    if !(r_metal > 0.0) {
        return Err(Error::param(format!("r_metal must be positive, got {r_metal}")));
    }
    if let Some(b) = branches.iter().find(|b| !(b.branch_resistance > 0.0)) {
        return Err(Error::param(format!("branch resistance must be positive, got {}", b.branch_resistance)));
    }

    let node_voltage = match clamp {
        Some(v_c) => v_c,
        None => {
            let (num, den) = branches.iter().fold((0.0, 1.0 / r_metal), |(num, den), b| {
                (num + b.source_voltage / b.branch_resistance, den + 1.0 / b.branch_resistance)
            });
            num / den
        }
    };
    let track_current = node_voltage / r_metal;
    let branch_currents: Vec<f64> = branches
        .iter()
        .map(|b| (b.source_voltage - node_voltage) / b.branch_resistance)
        .collect();
    let clamp_current = clamp.map(|_| track_current - branch_currents.iter().sum::<f64>());
    Ok(DendriteSolution { node_voltage, track_current, branch_currents, clamp_current })
}

/// Current through each of `branch_count` identical axon tracks fed by
/// `v_dw` through the soma MTJ.
///
/// Panics if `branch_count` is zero.
#[inline]
pub fn axon_drive_current(v_dw: f64, soma_mtj_resistance: f64, r_metal: f64, branch_count: usize) -> f64 {
    assert!(branch_count >= 1, "drive divider needs at least one axon track");
    let b = branch_count as f64;
    v_dw / (b * (soma_mtj_resistance + r_metal / b))
}

/// Power drawn from one `V_DW` source.
#[inline]
pub fn drive_power(v_dw: f64, soma_mtj_resistance: f64, r_metal: f64, branch_count: usize) -> f64 {
    v_dw * branch_count as f64 * axon_drive_current(v_dw, soma_mtj_resistance, r_metal, branch_count)
}

/// How the soma-to-axon voltage `V_DW` is chosen for an `N`-neuron network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Zero axon velocity at the mid resistance `(R_AP + R_P) / 2` with the
    /// physical branch count `N - 1`, track term kept.
    #[default]
    Balanced,
    /// As `Balanced` but with `N + 1` branches.
    PrintedBranches,
    /// `(|L_axon| / k) (N - 1) (R_AP + R_P) / 2`: track term dropped.
    MidpointNoTrack,
    /// `(|L_axon| R_P / k) (N - 1) (1 + TMR / 2)`, algebraically equal to
    /// `MidpointNoTrack`.
    TmrForm,
    /// A fixed voltage.
    Explicit(f64),
}


impl FromStr for CalibrationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "balanced" => CalibrationMode::Balanced,
            "eq6" | "eq6_literal" | "printed_branches" => CalibrationMode::PrintedBranches,
            "eq7" | "eq7_literal" | "midpoint_no_track" => CalibrationMode::MidpointNoTrack,
            "eq8" | "eq8_literal" | "tmr_form" => CalibrationMode::TmrForm,
            other => match other.strip_prefix("explicit:").map(str::parse::<f64>) {
                Some(Ok(v)) => CalibrationMode::Explicit(v),
                _ => return Err(Error::Config(format!("unknown calibration mode '{s}'"))),
            },
        })
    }
}

impl fmt::Display for CalibrationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationMode::Balanced => f.write_str("balanced"),
            CalibrationMode::PrintedBranches => f.write_str("eq6"),
            CalibrationMode::MidpointNoTrack => f.write_str("eq7"),
            CalibrationMode::TmrForm => f.write_str("eq8"),
            CalibrationMode::Explicit(v) => write!(f, "explicit:{v}"),
        }
    }
}

/// Soma-to-axon voltage for an `n_neurons` network. Always positive: the
/// leak sign is carried by the axon leak itself.
pub fn calibrate_vdw(params: &DeviceParams, n_neurons: usize, mode: CalibrationMode) -> Result<f64> {
    if n_neurons < 2 {
        return Err(Error::param(format!("calibration needs at least 2 neurons, got {n_neurons}")));
    }
    let k = mobility_k(params)?;
    let leak = params.axon_leak.abs();
    let r_mid = (params.r_antiparallel + params.r_parallel) / 2.0;
    let n = n_neurons as f64;
    let with_track = |b: f64| (leak / k) * b * (r_mid + params.r_metal / b);
    let v = match mode {
        CalibrationMode::Balanced => with_track(n - 1.0),
        CalibrationMode::PrintedBranches => with_track(n + 1.0),
        CalibrationMode::MidpointNoTrack => (leak / k) * (n - 1.0) * r_mid,
        CalibrationMode::TmrForm => {
            let tmr = (params.r_antiparallel - params.r_parallel) / params.r_parallel;
            (leak * params.r_parallel / k) * (n - 1.0) * (1.0 + tmr / 2.0)
        }
        CalibrationMode::Explicit(v) => {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("explicit V_DW must be positive, got {v}")));
            }
            v
        }
    };
    if !v.is_finite() {
        return Err(Error::param("calibration produced a non-finite V_DW (k = 0?)"));
    }
    Ok(v)
}

/// `Σ V_s I_s` with `I_s` the current delivered by source `s`.
pub fn instantaneous_power(source_voltages: &[f64], source_currents: &[f64]) -> Result<f64> {
    if source_voltages.len() != source_currents.len() {
        return Err(Error::param(format!(
            "{} source voltages but {} currents",
            source_voltages.len(),
            source_currents.len()
        )));
    }
    Ok(source_voltages.iter().zip(source_currents).map(|(v, i)| v * i).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::dw_velocity;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn br(v: f64, r: f64) -> SynapseBranch {
        SynapseBranch { source_voltage: v, branch_resistance: r }
    }

    #[test]
    fn single_branch_divider() {
        let s = dendrite_solve(&[br(0.1, 500.0)], 2000.0, None).unwrap();
        // Series oracle: 0.1 / (500 + 2000) through the track.
        let series = 0.1 / (500.0 + 2000.0);
        assert_relative_eq!(s.track_current, series, max_relative = 1e-14);
        assert_relative_eq!(s.node_voltage, series * 2000.0, max_relative = 1e-14);
        assert_relative_eq!(s.node_voltage, 0.08, max_relative = 1e-14);
        assert_relative_eq!(s.track_current, 40e-6, max_relative = 1e-14);
        assert!(s.clamp_current.is_none());
    }

    #[test]
    fn symmetric_branches_cancel() {
        let s = dendrite_solve(&[br(0.1, 500.0), br(-0.1, 500.0)], 2000.0, None).unwrap();
        assert_eq!(s.node_voltage, 0.0);
        assert_eq!(s.track_current, 0.0);
    }

    #[test]
    fn clamped_node() {
        let branches = [br(0.1, 500.0), br(-0.1, 2000.0), br(0.1, 1200.0)];
        let s = dendrite_solve(&branches, 2000.0, Some(0.25)).unwrap();
        assert_eq!(s.node_voltage, 0.25);
        assert_relative_eq!(s.track_current, 125e-6, max_relative = 1e-14);
        assert!(s.kcl_residual().abs() < 1e-18);
        let s = dendrite_solve(&[], 2000.0, Some(-0.25)).unwrap();
        assert_relative_eq!(s.track_current, -125e-6, max_relative = 1e-14);
        assert_eq!(s.clamp_current, Some(s.track_current));
    }

    #[test]
    fn topology_and_parameter_errors() {
        assert!(matches!(dendrite_solve(&[], 2000.0, None), Err(Error::Topology(_))));
        assert!(dendrite_solve(&[br(0.1, 0.0)], 2000.0, None).is_err());
        assert!(dendrite_solve(&[br(0.1, 500.0)], -1.0, None).is_err());
    }

    #[test]
    fn drive_current_examples() {
        let p = DeviceParams::default();
        let k = mobility_k(&p).unwrap();
        let v_dw = 0.021152;
        let on = axon_drive_current(v_dw, 500.0, 2000.0, 2);
        assert_relative_eq!(on, 7.0506e-6, max_relative = 2e-5);
        assert_relative_eq!(dw_velocity(on, k, p.axon_leak), 2.5, epsilon = 1e-3);
        let off = axon_drive_current(v_dw, 2000.0, 2000.0, 2);
        assert_relative_eq!(off, 3.525333e-6, max_relative = 2e-5);
        assert_relative_eq!(dw_velocity(off, k, p.axon_leak), -1.25, epsilon = 1e-3);
        assert_eq!(axon_drive_current(0.0, 500.0, 2000.0, 2), 0.0);
    }

    #[test]
    fn calibration_examples() {
        let p = DeviceParams::default();
        // Independent evaluation with k = 1.06373127e6 (see device tests).
        assert_relative_eq!(calibrate_vdw(&p, 3, CalibrationMode::Balanced).unwrap(), 0.021152, max_relative = 5e-5);
        assert_relative_eq!(calibrate_vdw(&p, 60, CalibrationMode::MidpointNoTrack).unwrap(), 0.34665, max_relative = 1e-4);
        assert_relative_eq!(calibrate_vdw(&p, 60, CalibrationMode::TmrForm).unwrap(), 0.34665, max_relative = 1e-4);
        assert_relative_eq!(calibrate_vdw(&p, 60, CalibrationMode::Balanced).unwrap(), 0.35606, max_relative = 1e-4);
        assert_relative_eq!(calibrate_vdw(&p, 60, CalibrationMode::PrintedBranches).unwrap(), 0.36781, max_relative = 1e-4);
        assert_eq!(calibrate_vdw(&p, 60, CalibrationMode::Explicit(0.3)).unwrap(), 0.3);
        assert!(calibrate_vdw(&p, 1, CalibrationMode::Balanced).is_err());
        assert!(calibrate_vdw(&p, 5, CalibrationMode::Explicit(0.0)).is_err());
    }

    #[test]
    fn small_network_needs_track_term() {
        // Without the track term an ON soma cannot beat the axon leak at N = 3.
        let p = DeviceParams::default();
        let k = mobility_k(&p).unwrap();
        let v = calibrate_vdw(&p, 3, CalibrationMode::MidpointNoTrack).unwrap();
        let on = axon_drive_current(v, p.r_parallel, p.r_metal, 2);
        assert!(k * on < p.axon_leak.abs());
        let v = calibrate_vdw(&p, 3, CalibrationMode::Balanced).unwrap();
        let on = axon_drive_current(v, p.r_parallel, p.r_metal, 2);
        assert!(k * on > p.axon_leak.abs());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("eq7".parse::<CalibrationMode>().unwrap(), CalibrationMode::MidpointNoTrack);
        assert_eq!("balanced".parse::<CalibrationMode>().unwrap(), CalibrationMode::Balanced);
        assert_eq!("explicit:0.3".parse::<CalibrationMode>().unwrap(), CalibrationMode::Explicit(0.3));
        assert!("eq9".parse::<CalibrationMode>().is_err());
        for m in [CalibrationMode::Balanced, CalibrationMode::TmrForm, CalibrationMode::Explicit(0.25)] {
            assert_eq!(m.to_string().parse::<CalibrationMode>().unwrap(), m);
        }
    }

    #[test]
    fn power_examples() {
        assert_relative_eq!(instantaneous_power(&[0.1], &[40e-6]).unwrap(), 4e-6, max_relative = 1e-14);
        assert_eq!(instantaneous_power(&[0.1, -0.2], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(instantaneous_power(&[0.1], &[]).is_err());
    }

    fn branch_set() -> impl Strategy<Value = Vec<SynapseBranch>> {
        prop::collection::vec((-0.4f64..0.4, 500.0f64..2000.0), 1..40)
            .prop_map(|v| v.into_iter().map(|(v, r)| br(v, r)).collect())
    }

    proptest! {
        #[test]
        fn kcl_and_energy_balance(branches in branch_set(), clamp in prop::option::of(-0.3f64..0.3)) {
            let s = dendrite_solve(&branches, 2000.0, clamp).unwrap();
            let scale = branches.iter().map(|b| (b.source_voltage.abs() + 0.3) / b.branch_resistance).sum::<f64>();
            prop_assert!(s.kcl_residual().abs() < 1e-15 * scale.max(1.0));
            let delivered = s.delivered_power(&branches);
            let dissipated = s.dissipated_power(&branches, 2000.0);
            prop_assert!(dissipated >= 0.0);
            prop_assert!((delivered - dissipated).abs() <= 1e-6 * dissipated.max(1e-18));
        }

        #[test]
        fn superposition(branches in branch_set(), scale in -3.0f64..3.0, other in -0.4f64..0.4) {
            let node = |bs: &[SynapseBranch]| dendrite_solve(bs, 2000.0, None).unwrap().node_voltage;
            let scaled: Vec<_> = branches.iter().map(|b| br(b.source_voltage * scale, b.branch_resistance)).collect();
            let base = node(&branches);
            prop_assert!((node(&scaled) - scale * base).abs() < 1e-12);
            let shifted: Vec<_> = branches.iter().map(|b| br(b.source_voltage + other, b.branch_resistance)).collect();
            let uniform: Vec<_> = branches.iter().map(|b| br(other, b.branch_resistance)).collect();
            prop_assert!((node(&shifted) - base - node(&uniform)).abs() < 1e-12);
        }

        #[test]
        fn sign_follows_sources(rs in prop::collection::vec(500.0f64..2000.0, 1..40), v in 0.001f64..0.4) {
            let pos: Vec<_> = rs.iter().map(|&r| br(v, r)).collect();
            let neg: Vec<_> = rs.iter().map(|&r| br(-v, r)).collect();
            prop_assert!(dendrite_solve(&pos, 2000.0, None).unwrap().track_current > 0.0);
            prop_assert!(dendrite_solve(&neg, 2000.0, None).unwrap().track_current < 0.0);
        }

        #[test]
        fn balanced_calibration_zeroes_midpoint_velocity(
            n in 2usize..200,
            r_p in 100.0f64..5000.0,
            tmr in 0.1f64..5.0,
            r_m in 100.0f64..5000.0,
            leak in -50.0f64..-0.1,
        ) {
            let p = DeviceParams { r_parallel: r_p, r_antiparallel: r_p * (1.0 + tmr), r_metal: r_m, axon_leak: leak, ..DeviceParams::default() };
            let k = mobility_k(&p).unwrap();
            let v = calibrate_vdw(&p, n, CalibrationMode::Balanced).unwrap();
            let i = axon_drive_current(v, (p.r_parallel + p.r_antiparallel) / 2.0, p.r_metal, n - 1);
            let vel = dw_velocity(i, k, p.axon_leak);
            prop_assert!(vel.abs() <= 8.0 * f64::EPSILON * leak.abs());
        }

        #[test]
        fn midpoint_forms_agree(
            n in 2usize..1000,
            r_p in 10.0f64..1e5,
            tmr in 0.01f64..10.0,
            leak in -100.0f64..-0.01,
            area in 1e-18f64..1e-15,
        ) {
            let p = DeviceParams { r_parallel: r_p, r_antiparallel: r_p * (1.0 + tmr), axon_leak: leak, cross_section: area, ..DeviceParams::default() };
            let a = calibrate_vdw(&p, n, CalibrationMode::MidpointNoTrack).unwrap();
            let b = calibrate_vdw(&p, n, CalibrationMode::TmrForm).unwrap();
            prop_assert!((a - b).abs() <= 8.0 * f64::EPSILON * a);
        }
    }
}
