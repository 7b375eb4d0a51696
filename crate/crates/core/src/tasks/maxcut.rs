//! Max-cut by letting the network settle from the all-antiparallel state.

use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::metrics::{cut_value, exhaustive_max_cut};
use super::Hardware;
use crate::network::{set_weights_maxcut, TrialReport};
use crate::{Error, Result};

pub const DEFAULT_PENALTY: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutOutcome {
    pub partition: Vec<bool>,
    pub cut: i64,
    pub best_known: Option<i64>,
    /// `cut / best_known`; 1 when the best cut is 0.
    pub ratio: Option<f64>,
    pub report: TrialReport,
}

pub fn cut_ratio(cut: i64, best: i64) -> f64 {
    if best == 0 {
        1.0
    } else {
        cut as f64 / best as f64
    }
}

/// Runs the network on `graph` with no input written: every device starts
/// antiparallel and the network is released immediately.
pub fn maxcut_experiment(graph: &Graph, best_known: Option<i64>, penalty: f64, hw: &Hardware) -> Result<MaxCutOutcome> {
    if graph.n_nodes() < 2 {
        return Err(Error::Input(format!("max-cut needs at least 2 nodes, got {}", graph.n_nodes())));
    }
    if !(penalty > 0.0 && penalty.is_finite()) {
        return Err(Error::param(format!("penalty must be positive, got {penalty}")));
    }
    let weights = set_weights_maxcut(graph, hw.w_mag, penalty)?;
    let report = hw.run_trial(weights, None)?;
    let partition = report.final_bits.clone();
    let cut = cut_value(graph, &partition)?;
    Ok(MaxCutOutcome { partition, cut, best_known, ratio: best_known.map(|b| cut_ratio(cut, b)), report })
}

/// Same as [`maxcut_experiment`] with the optimum found by exhaustive search.
pub fn maxcut_vs_exhaustive(graph: &Graph, penalty: f64, hw: &Hardware) -> Result<MaxCutOutcome> {
    let (_, best) = exhaustive_max_cut(graph)?;
    maxcut_experiment(graph, Some(best), penalty, hw)
}
