//! Device-level simulator of an all-spintronic asynchronous Hopfield network.
//!
//! Every neuron is built from four-terminal domain-wall magnetic tunnel
//! junctions (DW-MTJs): one soma that integrates dendritic current and
//! `N - 1` axon branches that mirror the soma and gate the synaptic weight
//! voltages toward the other neurons. The simulator integrates every
//! domain wall with a fixed time step, solves the resistive sub-circuits
//! that couple them, and accounts for the energy drawn from each class of
//! supply.
//!
//! Module map:
//!
//! * [`device`]: domain-wall kinematics and MTJ conductance of one device.
//! * [`circuit`]: dendrite star node, soma-to-axon drive divider, `V_DW`
//!   calibration and power accounting.
//! * [`network`]: the all-to-all machine, Hebbian/max-cut weights and the
//!   charge-up / release / converge lifecycle.
//! * [`oracle`]: the ideal discrete Hopfield reference.
//! * [`tasks`]: associative recall, image denoising and max-cut experiments.
//! * [`config`] and [`cli`]: JSON configuration and the command line front end.

pub mod bits;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod device;
mod error;
pub mod network;
pub mod oracle;
pub mod tasks;

pub use circuit::{CalibrationMode, DendriteSolution, SynapseBranch};
pub use device::{BinaryState, DeviceParams, DeviceRole, DwMtjState};
pub use error::{Error, Result};
pub use network::{
    BranchCountRule, ConvergenceRule, EnergyByClass, NetworkState, Phase, SimConfig, TrialReport, WeightMatrix,
};
pub use oracle::OracleNet;
pub use tasks::graph::Graph;
