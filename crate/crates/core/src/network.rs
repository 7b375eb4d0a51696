//! The all-to-all spintronic Hopfield machine.
//!
//! An `N`-neuron network holds `N` somata and `N (N - 1)` axons. Axon
//! `(i, j)` belongs to neuron `i` and gates the weight voltage `w[i][j]` into
//! the dendrite of neuron `j`. One integration step is a synchronous sweep:
//!
//! 1. soma MTJ resistances from the current soma positions,
//! 2. drive current into every axon track of each neuron,
//! 3. axon wall updates,
//! 4. axon MTJ conductances,
//! 5. dendrite node of every neuron over its `N - 1` incoming branches,
//! 6. soma wall updates,
//! 7. energy accrual per supply class.
//!
//! Dendrite sums are kept per neuron and updated only when an axon
//! conductance changes, which is rare once the axons sit at their track
//! ends.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::circuit::{axon_drive_current, dendrite_solve, drive_power, DendriteSolution, SynapseBranch};
use crate::device::{mobility_k, BinaryState, DeviceParams, DeviceRole, DwMtjState, Track};
use crate::tasks::graph::Graph;
use crate::{Error, Result};

/// Signed synaptic weight voltages with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        WeightMatrix { n, w: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut m = WeightMatrix::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::param(format!("weight row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, v) in row.into_iter().enumerate() {
                if i == j {
                    if v != 0.0 {
                        return Err(Error::param(format!("self-synapse w[{i}][{i}] = {v} must be zero")));
                    }
                } else {
                    m.set(i, j, v)?;
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i == j {
            return Err(Error::param("the diagonal of a weight matrix is fixed at zero"));
        }
        if !v.is_finite() {
            return Err(Error::param(format!("weight w[{i}][{j}] = {v} is not finite")));
        }
        self.w[i * self.n + j] = v;
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.w.chunks(self.n.max(1)).map(<[f64]>::to_vec).take(self.n).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for WeightMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        WeightMatrix::from_rows(rows)
    }
}

impl From<WeightMatrix> for Vec<Vec<f64>> {
    fn from(m: WeightMatrix) -> Self {
        m.to_rows()
    }
}

/// Hebbian weights: `w[i][j] = w_mag Σ_p (2 s_i - 1)(2 s_j - 1)`, optionally
/// divided by the number of patterns.
pub fn train_hebbian(patterns: &[Vec<bool>], w_mag: f64, normalize: bool) -> Result<WeightMatrix> {
    let first = patterns.first().ok_or_else(|| Error::param("at least one pattern is required"))?;
    let n = first.len();
    if let Some((p, bad)) = patterns.iter().enumerate().find(|(_, p)| p.len() != n) {
        return Err(Error::param(format!("pattern {p} has length {}, expected {n}", bad.len())));
    }
    let spin = |b: bool| if b { 1.0 } else { -1.0 };
    let scale = if normalize { w_mag / patterns.len() as f64 } else { w_mag };
    let mut m = WeightMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let sum: f64 = patterns.iter().map(|p| spin(p[i]) * spin(p[j])).sum();
                m.w[i * n + j] = scale * sum;
            }
        }
    }
    Ok(m)
}

/// Max-cut weights: `+w_mag` between unconnected nodes, `-penalty w_mag`
/// across every edge.
pub fn set_weights_maxcut(graph: &Graph, w_mag: f64, penalty: f64) -> Result<WeightMatrix> {
    let n = graph.n_nodes();
    let mut m = WeightMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m.w[i * n + j] = w_mag;
            }
        }
    }
    for e in graph.edges() {
        if e.i == e.j {
            return Err(Error::Input(format!("self-loop on node {}", e.i)));
        }
        m.w[e.i * n + e.j] = -penalty * w_mag;
        m.w[e.j * n + e.i] = -penalty * w_mag;
    }
    Ok(m)
}

/// How many axon tracks the drive divider formula assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchCountRule {
    /// `N - 1`, the number of axons a neuron actually has.
    #[default]
    Physical,
    /// `N + 1`.
    Printed,
}

impl BranchCountRule {
    pub fn branches(self, n: usize) -> usize {
        match self {
            BranchCountRule::Physical => n - 1,
            BranchCountRule::Printed => n + 1,
        }
    }
}

/// When a free-running network counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceRule {
    /// Every soma pinned and no wall anywhere moved during a step. Nothing
    /// can change after that, so the outputs are final.
    #[default]
    Settled,
    /// Every soma pinned for `hold_window`; axons may still be moving.
    SomaHold,
}

/// Integration and lifecycle settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// Free-run budget after release, s.
    pub t_max: f64,
    pub convergence: ConvergenceRule,
    /// Under [`ConvergenceRule::SomaHold`], somata must stay pinned this
    /// long, s.
    pub hold_window: f64,
    /// A wall within this distance of a track end counts as pinned, m.
    pub pin_tolerance: f64,
    /// Charge-up budget, s.
    pub chargeup_t_cap: f64,
    /// Charge-up ends once every soma has been at its target this long, s.
    pub chargeup_hold: f64,
    /// Keep the clamps on until every axon also rests at the end matching
    /// its soma.
    pub chargeup_settle_axons: bool,
    /// Hold the weight sources at 0 V while the clamps are attached.
    pub zero_weights_during_chargeup: bool,
    pub drive_branches: BranchCountRule,
    /// Record soma positions every this many steps.
    pub trace_every: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-12,
            t_max: 2e-6,
            convergence: ConvergenceRule::Settled,
            hold_window: 5e-9,
            pin_tolerance: 0.1e-9,
            chargeup_t_cap: 200e-9,
            chargeup_hold: 0.0,
            chargeup_settle_axons: true,
            zero_weights_during_chargeup: false,
            drive_branches: BranchCountRule::Physical,
            trace_every: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > self.dt) {
            return Err(Error::param(format!("t_max ({}) must exceed dt ({})", self.t_max, self.dt)));
        }
        if !(self.hold_window >= 0.0) || !(self.chargeup_hold >= 0.0) || !(self.pin_tolerance >= 0.0) {
            return Err(Error::param("hold windows and pin tolerance must be non-negative"));
        }
        if !(self.chargeup_t_cap > 0.0) {
            return Err(Error::param("chargeup_t_cap must be positive"));
        }
        if self.trace_every == Some(0) {
            return Err(Error::param("trace_every must be at least 1"));
        }
        Ok(())
    }
}

/// Energy drawn from each class of supply, J (or W when used for power).
///
/// Each class accrues its net delivered power; a class whose sources sink
/// more than they deliver over a step is charged nothing for it, so every
/// class only grows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyByClass {
    pub weight_sources: f64,
    pub vdw_sources: f64,
    pub vc_sources: f64,
}

impl EnergyByClass {
    pub fn total(&self) -> f64 {
        self.weight_sources + self.vdw_sources + self.vc_sources
    }

    fn add_scaled(&mut self, p: &EnergyByClass, dt: f64) {
        self.weight_sources += p.weight_sources * dt;
        self.vdw_sources += p.vdw_sources * dt;
        self.vc_sources += p.vc_sources * dt;
    }

    pub fn minus(&self, o: &EnergyByClass) -> EnergyByClass {
        EnergyByClass {
            weight_sources: self.weight_sources - o.weight_sources,
            vdw_sources: self.vdw_sources - o.vdw_sources,
            vc_sources: self.vc_sources - o.vc_sources,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ChargeUp { pattern: Vec<bool>, v_c: f64 },
    FreeRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeUpSummary {
    pub complete: bool,
    /// s
    pub duration: f64,
    /// When every soma first sat at its target, s after the clamps went on.
    pub somata_pinned_after: Option<f64>,
    pub energy: EnergyByClass,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    /// Time since the start of the trial, s.
    pub t: Vec<f64>,
    /// Soma wall positions at each sample, m.
    pub soma_positions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub converged: bool,
    /// Time from release to the start of the final pinned window, s. Equal
    /// to the free-run budget when the trial did not converge.
    pub t_converge: f64,
    /// s
    pub t_chargeup: f64,
    pub chargeup_complete: bool,
    pub final_bits: Vec<bool>,
    /// Energy from the start of charge-up to convergence, J.
    pub energy_total: f64,
    pub energy_by_class: EnergyByClass,
    pub chargeup_energy: EnergyByClass,
    /// `energy_total / (t_chargeup + t_converge)`, W.
    pub avg_power: f64,
    pub trace: Option<Trace>,
}

impl TrialReport {
    pub fn chargeup_energy_share(&self) -> f64 {
        if self.energy_total > 0.0 {
            self.chargeup_energy.total() / self.energy_total
        } else {
            0.0
        }
    }
}

/// Where all axons of one neuron currently rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowRest {
    Low,
    High,
    Moving,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    /// Whether any wall moved during the step.
    pub moved: bool,
    /// Power drawn per class during the step, W.
    pub power: EnergyByClass,
    /// Signed power of all sources together, before any class is clipped, W.
    pub net_power: f64,
}

/// Incremental column updates allowed before the sums are rebuilt exactly.
const RESUM_EVERY: u32 = 256;

/// Complete simulation state of one network.
///
/// All `N - 1` axons of a neuron carry the same drive current and start from
/// the same end, so they move in lockstep; one wall position per neuron
/// stands for the whole row.
#[derive(Debug, Clone)]
pub struct NetworkState {
    params: DeviceParams,
    track: Track,
    k: f64,
    n: usize,
    weights: WeightMatrix,
    /// Squared weights, row-major.
    w2: Vec<f64>,
    v_dw: f64,
    branch_rule: BranchCountRule,
    soma_pos: Vec<f64>,
    /// Wall position shared by the axons of each neuron.
    axon_pos: Vec<f64>,
    axon_g: Vec<f64>,
    row_rest: Vec<RowRest>,
    g_total: f64,
    /// `sum_i w[i][j] g_i` over the branches into dendrite `j`.
    col_sum_wg: Vec<f64>,
    /// `sum_i w[i][j]^2 g_i` over the same branches.
    col_sum_w2g: Vec<f64>,
    pending_updates: u32,
    clamp: Option<Vec<f64>>,
    weights_live: bool,
    phase: Phase,
    t: f64,
    energy: EnergyByClass,
    last_power: EnergyByClass,
    chargeup: Option<ChargeUpSummary>,
}

/// A network with every soma and axon wall at its low (antiparallel) end.
pub fn init_all_antiparallel(n: usize, params: DeviceParams, weights: WeightMatrix, v_dw: f64) -> Result<NetworkState> {
    NetworkState::new(n, params, weights, v_dw)
}

impl NetworkState {
    pub fn new(n: usize, params: DeviceParams, weights: WeightMatrix, v_dw: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("a network needs at least 2 neurons, got {n}")));
        }
        if weights.n() != n {
            return Err(Error::param(format!("weight matrix is {}x{0}, network has {n} neurons", weights.n())));
        }
        if !(v_dw >= 0.0 && v_dw.is_finite()) {
            return Err(Error::param(format!("V_DW must be non-negative, got {v_dw}")));
        }
        params.validate()?;
        let k = mobility_k(&params)?;
        let track = params.track();
        let w2 = weights.w.iter().map(|w| w * w).collect();
        let mut s = NetworkState {
            params,
            track,
            k,
            n,
            weights,
            w2,
            v_dw,
            branch_rule: BranchCountRule::Physical,
            soma_pos: vec![0.0; n],
            axon_pos: vec![0.0; n],
            axon_g: vec![track.g_ap; n],
            row_rest: vec![RowRest::Low; n],
            g_total: 0.0,
            col_sum_wg: vec![0.0; n],
            col_sum_w2g: vec![0.0; n],
            pending_updates: 0,
            clamp: None,
            weights_live: true,
            phase: Phase::FreeRun,
            t: 0.0,
            energy: EnergyByClass::default(),
            last_power: EnergyByClass::default(),
            chargeup: None,
        };
        s.resum();
        Ok(s)
    }

    pub fn with_branch_rule(mut self, rule: BranchCountRule) -> Self {
        self.branch_rule = rule;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn v_dw(&self) -> f64 {
        self.v_dw
    }

    pub fn mobility(&self) -> f64 {
        self.k
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn energy(&self) -> EnergyByClass {
        self.energy
    }

    pub fn chargeup_summary(&self) -> Option<ChargeUpSummary> {
        self.chargeup
    }

    /// `N` somata plus `N (N - 1)` axons.
    pub fn device_count(&self) -> usize {
        self.n + self.n * (self.n - 1)
    }

    pub fn drive_branch_count(&self) -> usize {
        self.branch_rule.branches(self.n)
    }

    pub fn soma(&self, i: usize) -> DwMtjState {
        DwMtjState { position: self.soma_pos[i], role: DeviceRole::Soma, leak: self.params.soma_leak }
    }

    /// Axon of neuron `i` feeding neuron `j`.
    pub fn axon(&self, i: usize, j: usize) -> DwMtjState {
        assert!(i != j, "neuron {i} has no axon to itself");
        DwMtjState { position: self.axon_pos[i], role: DeviceRole::Axon, leak: self.params.axon_leak }
    }

    pub fn soma_positions(&self) -> &[f64] {
        &self.soma_pos
    }

    pub fn set_soma_position(&mut self, i: usize, position: f64) {
        self.soma_pos[i] = self.track.clamp(position);
    }

    /// Moves every axon wall of neuron `i`.
    pub fn set_axon_positions(&mut self, i: usize, position: f64) {
        let x = self.track.clamp(position);
        self.axon_pos[i] = x;
        self.axon_g[i] = self.track.conductance(x);
        self.row_rest[i] = self.rest_of(x);
        self.resum();
    }

    fn rest_of(&self, x: f64) -> RowRest {
        if x == 0.0 {
            RowRest::Low
        } else if x == self.track.len {
            RowRest::High
        } else {
            RowRest::Moving
        }
    }

    /// Neuron outputs; a soma inside the MTJ window resolves by the side of
    /// the window centre it is on, and exactly at the centre reads off.
    pub fn read_states(&self) -> Vec<bool> {
        let centre = self.params.mtj_centre();
        self.soma_pos
            .iter()
            .map(|&x| match self.track.binary(x) {
                BinaryState::On => true,
                BinaryState::Off => false,
                BinaryState::Transit => x > centre,
            })
            .collect()
    }

    pub fn somata_pinned(&self, tol: f64) -> bool {
        self.soma_pos.iter().all(|&x| x <= tol || x >= self.track.len - tol)
    }

    /// Branches feeding neuron `j` as seen by the explicit circuit solver.
    pub fn dendrite_branches(&self, j: usize) -> Vec<SynapseBranch> {
        (0..self.n)
            .filter(|&i| i != j)
            .map(|i| SynapseBranch {
                source_voltage: if self.weights_live { self.weights.get(i, j) } else { 0.0 },
                branch_resistance: 1.0 / self.track.conductance(self.axon_pos[i]),
            })
            .collect()
    }

    pub fn clamp_voltage(&self, j: usize) -> Option<f64> {
        self.clamp.as_ref().map(|c| c[j])
    }

    /// Explicit solve of neuron `j`'s dendrite from the device states.
    pub fn dendrite_solution(&self, j: usize) -> Result<DendriteSolution> {
        dendrite_solve(&self.dendrite_branches(j), self.params.r_metal, self.clamp_voltage(j))
    }

    /// Node voltage of neuron `j` from the running sums used by the integrator.
    pub fn cached_node_voltage(&self, j: usize) -> f64 {
        match &self.clamp {
            Some(c) => c[j],
            None => self.col_sum_wg[j] / (self.g_total - self.axon_g[j] + 1.0 / self.params.r_metal),
        }
    }

    /// Power drawn per class in the most recent step.
    pub fn last_power(&self) -> EnergyByClass {
        self.last_power
    }

    /// Rebuilds every dendrite sum from scratch.
    fn resum(&mut self) {
        let n = self.n;
        self.g_total = self.axon_g.iter().sum();
        self.pending_updates = 0;
        self.col_sum_wg.iter_mut().for_each(|v| *v = 0.0);
        self.col_sum_w2g.iter_mut().for_each(|v| *v = 0.0);
        if !self.weights_live {
            return;
        }
        for i in 0..n {
            let g = self.axon_g[i];
            let w = &self.weights.w[i * n..(i + 1) * n];
            let w2 = &self.w2[i * n..(i + 1) * n];
            for j in 0..n {
                self.col_sum_wg[j] += w[j] * g;
                self.col_sum_w2g[j] += w2[j] * g;
            }
        }
    }

    /// Folds a conductance change of neuron `i`'s axons into the column sums.
    fn shift_row(&mut self, i: usize, dg: f64) {
        if !self.weights_live {
            return;
        }
        let n = self.n;
        let w = &self.weights.w[i * n..(i + 1) * n];
        let w2 = &self.w2[i * n..(i + 1) * n];
        // the diagonal weight is zero, so column i is untouched
        for j in 0..n {
            self.col_sum_wg[j] += w[j] * dg;
            self.col_sum_w2g[j] += w2[j] * dg;
        }
        self.pending_updates += 1;
    }

    /// Advances every device by one time step.
    pub fn step(&mut self, dt: f64) -> Result<StepInfo> {
        if !(dt > 0.0) {
            return Err(Error::param(format!("dt must be positive, got {dt}")));
        }
        let n = self.n;
        let tr = self.track;
        let r_m = self.params.r_metal;
        let g_m = 1.0 / r_m;
        let b = self.branch_rule.branches(n);
        let mut moved = false;
        let mut g_changed = false;
        let mut came_to_rest = false;
        let mut p_vdw = 0.0;

        for i in 0..n {
            let r_soma = 1.0 / tr.conductance(self.soma_pos[i]);
            let i_branch = axon_drive_current(self.v_dw, r_soma, r_m, b);
            let v = self.k * i_branch + self.params.axon_leak;
            match self.row_rest[i] {
                RowRest::Low if v <= 0.0 => continue,
                RowRest::High if v >= 0.0 => continue,
                _ => {}
            }
            let old = self.axon_pos[i];
            let x = tr.clamp(old + v * dt);
            if x == old {
                continue;
            }
            moved = true;
            self.axon_pos[i] = x;
            let rest = self.rest_of(x);
            came_to_rest |= rest != RowRest::Moving;
            self.row_rest[i] = rest;
            let g = tr.conductance(x);
            if g != self.axon_g[i] {
                let dg = g - self.axon_g[i];
                self.axon_g[i] = g;
                g_changed = true;
                self.shift_row(i, dg);
            }
        }
        if came_to_rest || self.pending_updates >= RESUM_EVERY {
            self.resum();
        } else if g_changed {
            self.g_total = self.axon_g.iter().sum();
        }

        // Power is taken from the circuit as it stands at the end of the step.
        // Weight sources deliver sum_i w_i (w_i - node) g_i = S_w2g - node S_wg
        // into each dendrite.
        let (mut p_w, mut p_vc) = (0.0, 0.0);
        for j in 0..n {
            let sum_g = self.g_total - self.axon_g[j];
            let (swg, sw2g) = (self.col_sum_wg[j], self.col_sum_w2g[j]);
            let node = match &self.clamp {
                Some(c) => {
                    let v_c = c[j];
                    p_vc += v_c * (v_c * g_m - (swg - v_c * sum_g));
                    v_c
                }
                None => swg / (sum_g + g_m),
            };
            p_w += sw2g - node * swg;
            let v = self.k * node / r_m + self.params.soma_leak;
            if !v.is_finite() {
                return Err(Error::NumericFault { t: self.t, msg: format!("soma {j} velocity is {v}") });
            }
            let x = tr.clamp(self.soma_pos[j] + v * dt);
            if x != self.soma_pos[j] {
                moved = true;
                self.soma_pos[j] = x;
            }
            p_vdw += drive_power(self.v_dw, 1.0 / tr.conductance(x), r_m, b);
        }

        let power = EnergyByClass { weight_sources: p_w.max(0.0), vdw_sources: p_vdw, vc_sources: p_vc.max(0.0) };
        if !power.total().is_finite() {
            return Err(Error::NumericFault { t: self.t, msg: "non-finite power".into() });
        }
        self.energy.add_scaled(&power, dt);
        self.last_power = power;
        self.t += dt;
        Ok(StepInfo { moved, power, net_power: p_w + p_vdw + p_vc })
    }

    /// Clamps dendrite `j` to `+v_c` where `pattern[j]` is set and `-v_c`
    /// elsewhere, entering the charge-up phase. With `zero_weights` the
    /// weight sources are held at 0 V meanwhile.
    pub fn attach_clamps(&mut self, pattern: &[bool], v_c: f64, zero_weights: bool) -> Result<()> {
        if pattern.len() != self.n {
            return Err(Error::param(format!("pattern has {} bits, network has {} neurons", pattern.len(), self.n)));
        }
        self.clamp = Some(pattern.iter().map(|&b| if b { v_c } else { -v_c }).collect());
        self.weights_live = !zero_weights;
        self.phase = Phase::ChargeUp { pattern: pattern.to_vec(), v_c };
        self.resum();
        Ok(())
    }

    /// Removes the clamps and restores the weights: the free-run phase.
    pub fn detach_clamps(&mut self) {
        self.clamp = None;
        self.weights_live = true;
        self.phase = Phase::FreeRun;
        self.resum();
    }

    /// Writes `pattern` into the somata by clamping every dendrite node to
    /// `±v_c` until each soma is pinned at its target end (and, with
    /// `cfg.chargeup_settle_axons`, each axon rests at the matching end) or
    /// `t_cap` runs out. The clamps are removed before returning.
    pub fn charge_up(&mut self, pattern: &[bool], v_c: f64, t_cap: f64, cfg: &SimConfig) -> Result<ChargeUpSummary> {
        if pattern.len() != self.n {
            return Err(Error::param(format!("pattern has {} bits, network has {} neurons", pattern.len(), self.n)));
        }
        if !(t_cap > 0.0) {
            return Err(Error::param(format!("charge-up time cap must be positive, got {t_cap}")));
        }
        if !(v_c >= 0.0 && v_c.is_finite()) {
            return Err(Error::param(format!("V_C must be non-negative, got {v_c}")));
        }
        if !cfg.zero_weights_during_chargeup && v_c < self.weights.max_abs() {
            warn!(
                "V_C = {v_c} V is below the largest weight voltage {} V; somata may not charge up",
                self.weights.max_abs()
            );
        }
        let start_t = self.t;
        let start_e = self.energy;
        self.attach_clamps(pattern, v_c, cfg.zero_weights_during_chargeup)?;

        let len = self.track.len;
        let tol = cfg.pin_tolerance;
        let somata_done =
            |s: &NetworkState| s.soma_pos.iter().zip(pattern).all(|(&x, &b)| if b { x >= len - tol } else { x <= tol });
        let axons_done = |s: &NetworkState| {
            !cfg.chargeup_settle_axons
                || s.row_rest.iter().zip(pattern).all(|(&r, &b)| r == if b { RowRest::High } else { RowRest::Low })
        };
        let max_steps = (t_cap / cfg.dt).ceil() as u64;
        let mut held_since: Option<f64> = None;
        let mut somata_pinned_after = None;
        let mut complete = false;
        let mut result = Ok(());
        for _ in 0..max_steps {
            if let Err(e) = self.step(cfg.dt) {
                result = Err(e);
                break;
            }
            let somata = somata_done(self);
            if somata && somata_pinned_after.is_none() {
                somata_pinned_after = Some(self.t - start_t);
            }
            if somata && axons_done(self) {
                let since = *held_since.get_or_insert(self.t);
                if self.t - since >= cfg.chargeup_hold {
                    complete = true;
                    break;
                }
            } else {
                held_since = None;
            }
        }

        self.detach_clamps();
        result?;

        let summary = ChargeUpSummary {
            complete,
            duration: self.t - start_t,
            somata_pinned_after,
            energy: self.energy.minus(&start_e),
        };
        if !complete {
            warn!("charge-up did not complete within {t_cap:e} s");
        }
        self.chargeup = Some(summary);
        Ok(summary)
    }

    /// Lets the network evolve freely until it converges under
    /// `cfg.convergence`, or `cfg.t_max` elapses.
    pub fn release_and_converge(&mut self, cfg: &SimConfig) -> Result<TrialReport> {
        cfg.validate()?;
        if self.phase != Phase::FreeRun {
            return Err(Error::param("release requires the free-run phase"));
        }
        let dt = cfg.dt;
        let t0 = self.t;
        let max_steps = (cfg.t_max / dt).ceil() as u64;
        let mut trace = cfg.trace_every.map(|_| Trace::default());
        let record = |s: &NetworkState, trace: &mut Option<Trace>| {
            if let Some(tr) = trace.as_mut() {
                tr.t.push(s.t);
                tr.soma_positions.push(s.soma_pos.clone());
            }
        };
        record(self, &mut trace);

        let hold = cfg.convergence == ConvergenceRule::SomaHold;
        // (time, cumulative energy) when the current all-pinned stretch began
        let mut pinned_since = self.somata_pinned(cfg.pin_tolerance).then_some((self.t, self.energy));
        let mut converged_at = None;
        let mut step = 0u64;
        while step < max_steps {
            if let (true, Some((since, e))) = (hold, pinned_since) {
                if self.t - since >= cfg.hold_window {
                    converged_at = Some((since, e));
                    break;
                }
            }
            let before = (self.t, self.energy);
            let info = self.step(dt)?;
            step += 1;
            if let Some(every) = cfg.trace_every {
                if step.is_multiple_of(every as u64) {
                    record(self, &mut trace);
                }
            }
            let pinned = self.somata_pinned(cfg.pin_tolerance);
            if pinned {
                pinned_since.get_or_insert((self.t, self.energy));
            } else {
                pinned_since = None;
            }
            if !info.moved {
                // Nothing moved, so every later step is identical.
                if pinned {
                    converged_at = Some(if hold { pinned_since.unwrap_or(before) } else { before });
                } else {
                    let remaining = (max_steps - step) as f64 * dt;
                    self.energy.add_scaled(&info.power, remaining);
                    self.t += remaining;
                }
                break;
            }
        }
        if converged_at.is_none() && hold {
            if let Some((since, e)) = pinned_since {
                if self.t - since >= cfg.hold_window {
                    converged_at = Some((since, e));
                }
            }
        }

        let chargeup = self.chargeup.unwrap_or(ChargeUpSummary {
            complete: true,
            duration: 0.0,
            somata_pinned_after: Some(0.0),
            energy: EnergyByClass::default(),
        });
        let (converged, t_converge, energy) = match converged_at {
            Some((since, e)) => (true, since - t0, e),
            None => (false, self.t - t0, self.energy),
        };
        let elapsed = chargeup.duration + t_converge;
        let energy_total = energy.total();
        Ok(TrialReport {
            converged,
            t_converge,
            t_chargeup: chargeup.duration,
            chargeup_complete: chargeup.complete,
            final_bits: self.read_states(),
            energy_total,
            energy_by_class: energy,
            chargeup_energy: chargeup.energy,
            avg_power: if elapsed > 0.0 { energy_total / elapsed } else { 0.0 },
            trace,
        })
    }

    /// Explicit per-device power audit: net power delivered by all sources,
    /// Joule dissipation, and the worst dendrite KCL residual.
    pub fn power_audit(&self) -> Result<PowerAudit> {
        let r_m = self.params.r_metal;
        let b = self.branch_rule.branches(self.n);
        let mut audit = PowerAudit::default();
        for j in 0..self.n {
            let branches = self.dendrite_branches(j);
            let sol = dendrite_solve(&branches, r_m, self.clamp_voltage(j))?;
            audit.net_delivered += sol.delivered_power(&branches);
            audit.dissipated += sol.dissipated_power(&branches, r_m);
            audit.max_kcl_residual = audit.max_kcl_residual.max(sol.kcl_residual().abs());

            let r_soma = 1.0 / self.track.conductance(self.soma_pos[j]);
            let i_branch = axon_drive_current(self.v_dw, r_soma, r_m, b);
            let i_total = b as f64 * i_branch;
            audit.net_delivered += self.v_dw * i_total;
            audit.dissipated += i_total * i_total * r_soma + b as f64 * i_branch * i_branch * r_m;
        }
        Ok(audit)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PowerAudit {
    pub net_delivered: f64,
    pub dissipated: f64,
    pub max_kcl_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{invert, parse_bits};
    use crate::circuit::{calibrate_vdw, CalibrationMode};
    use approx::assert_relative_eq;

    fn net(weights: WeightMatrix) -> NetworkState {
        let n = weights.n();
        let p = DeviceParams::default();
        let v = calibrate_vdw(&p, n, CalibrationMode::Balanced).unwrap();
        init_all_antiparallel(n, p, weights, v).unwrap()
    }

    #[test]
    fn hebbian_single_pattern() {
        let w = train_hebbian(&[parse_bits("110").unwrap()], 0.1, false).unwrap();
        assert_relative_eq!(w.get(0, 1), 0.1);
        assert_relative_eq!(w.get(0, 2), -0.1);
        assert_relative_eq!(w.get(1, 2), -0.1);
        assert!(w.is_symmetric());
        assert!((0..3).all(|i| w.get(i, i) == 0.0));
    }

    #[test]
    fn hebbian_inverse_and_duplicates() {
        let p = parse_bits("1011001").unwrap();
        assert_eq!(
            train_hebbian(std::slice::from_ref(&p), 0.1, false).unwrap(),
            train_hebbian(&[invert(&p)], 0.1, false).unwrap()
        );
        assert_eq!(
            train_hebbian(&[p.clone(), p.clone()], 0.1, true).unwrap(),
            train_hebbian(std::slice::from_ref(&p), 0.1, false).unwrap()
        );
        assert!(train_hebbian(&[p, vec![true; 3]], 0.1, false).is_err());
        assert!(train_hebbian(&[], 0.1, false).is_err());
    }

    #[test]
    fn maxcut_weights() {
        let g = Graph::new(2, vec![(0, 1, 1)]).unwrap();
        let w = set_weights_maxcut(&g, 0.1, 1.05).unwrap();
        assert_relative_eq!(w.get(0, 1), -0.105, max_relative = 1e-12);
        let empty = set_weights_maxcut(&Graph::new(3, vec![]).unwrap(), 0.1, 1.05).unwrap();
        let k3 = set_weights_maxcut(&Graph::new(3, vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)]).unwrap(), 0.1, 1.05).unwrap();
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                assert_eq!(empty.get(i, j), 0.1);
                assert_relative_eq!(k3.get(i, j), -0.105, max_relative = 1e-12);
            }
        }
        assert!(k3.is_symmetric());
    }

    #[test]
    fn weight_matrix_rejects_self_synapse() {
        assert!(WeightMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        let mut w = WeightMatrix::zeros(3);
        assert!(w.set(1, 1, 0.5).is_err());
        let json = serde_json::to_string(&train_hebbian(&[vec![true, false]], 0.1, false).unwrap()).unwrap();
        let back: WeightMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get(0, 1), -0.1);
    }

    #[test]
    fn fresh_network_is_all_off() {
        let s = net(WeightMatrix::zeros(4));
        assert_eq!(s.read_states(), vec![false; 4]);
        assert_eq!(s.device_count(), 16);
        let p = DeviceParams::default();
        for i in 0..4 {
            assert_eq!(crate::device::mtj_conductance(&s.soma(i), &p), 1.0 / 2000.0);
            for j in (0..4).filter(|&j| j != i) {
                assert_eq!(crate::device::mtj_conductance(&s.axon(i, j), &p), 1.0 / 2000.0);
            }
        }
        assert_eq!(s.time(), 0.0);
        assert_eq!(s.energy().total(), 0.0);
    }

    #[test]
    fn read_states_tie_break() {
        let mut s = net(WeightMatrix::zeros(3));
        s.set_soma_position(0, 100e-9);
        s.set_soma_position(1, 50e-9);
        s.set_soma_position(2, 55e-9);
        assert_eq!(s.read_states(), vec![true, false, true]);
    }

    #[test]
    fn zero_weights_drift_on() {
        let mut s = net(WeightMatrix::zeros(3));
        let report = s.release_and_converge(&SimConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.final_bits, vec![true; 3]);
        // Len / 0.2 m/s
        assert_relative_eq!(report.t_converge, 500e-9, max_relative = 1e-3);
    }

    #[test]
    fn charge_up_pins_somata_quickly() {
        let w = train_hebbian(&[parse_bits("110").unwrap()], 0.1, false).unwrap();
        let mut s = net(w);
        let cfg = SimConfig::default();
        let sum = s.charge_up(&parse_bits("101").unwrap(), 0.25, cfg.chargeup_t_cap, &cfg).unwrap();
        assert!(sum.complete);
        let pinned = sum.somata_pinned_after.unwrap();
        assert!(pinned < 1e-9, "{pinned}");
        // the axons of the ON somata then need Len / 2.5 m/s
        assert!(sum.duration > 30e-9 && sum.duration < 50e-9, "{}", sum.duration);
        assert_eq!(s.read_states(), parse_bits("101").unwrap());
        assert_eq!(s.phase(), &Phase::FreeRun);
        assert!(sum.energy.vc_sources > 0.0);
    }

    #[test]
    fn charge_up_without_clamp_voltage_is_incomplete() {
        let mut s = net(WeightMatrix::zeros(3));
        let cfg = SimConfig::default();
        let sum = s.charge_up(&parse_bits("010").unwrap(), 0.0, 2e-9, &cfg).unwrap();
        assert!(!sum.complete);
    }

    #[test]
    fn charge_up_of_already_on_somata_is_immediate() {
        let mut s = net(WeightMatrix::zeros(3));
        for i in 0..3 {
            s.set_soma_position(i, 100e-9);
        }
        let cfg = SimConfig { chargeup_settle_axons: false, ..SimConfig::default() };
        let sum = s.charge_up(&[true; 3], 0.25, 1e-9, &cfg).unwrap();
        assert!(sum.complete);
        assert!(sum.duration <= cfg.dt * 1.5);
        assert!(sum.somata_pinned_after.unwrap() <= cfg.dt * 1.5);
    }

    #[test]
    fn stored_pattern_recalled() {
        let p = parse_bits("110").unwrap();
        let w = train_hebbian(std::slice::from_ref(&p), 0.1, false).unwrap();
        let mut s = net(w);
        let cfg = SimConfig::default();
        s.charge_up(&p, 0.25, cfg.chargeup_t_cap, &cfg).unwrap();
        let r = s.release_and_converge(&cfg).unwrap();
        assert!(r.converged);
        assert!(r.final_bits == p || r.final_bits == invert(&p));
        assert_relative_eq!(r.energy_total, r.energy_by_class.total());
        assert!(r.energy_total >= r.chargeup_energy.total());
    }

    #[test]
    fn step_rejects_bad_dt() {
        let mut s = net(WeightMatrix::zeros(2));
        assert!(s.step(0.0).is_err());
        let cfg = SimConfig { dt: 1e-9, t_max: 1e-9, ..SimConfig::default() };
        assert!(s.release_and_converge(&cfg).is_err());
    }

    #[test]
    fn explicit_and_cached_dendrites_agree() {
        let w = train_hebbian(&[parse_bits("10110").unwrap(), parse_bits("01100").unwrap()], 0.1, false).unwrap();
        let mut s = net(w);
        s.set_soma_position(0, 100e-9);
        s.set_soma_position(3, 70e-9);
        for _ in 0..5000 {
            s.step(1e-12).unwrap();
            for j in 0..5 {
                let explicit = s.dendrite_solution(j).unwrap().node_voltage;
                assert_relative_eq!(s.cached_node_voltage(j), explicit, epsilon = 1e-15, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn class_power_matches_dissipation() {
        let w = train_hebbian(&[parse_bits("110100").unwrap()], 0.1, false).unwrap();
        let mut s = net(w);
        s.set_soma_position(2, 80e-9);
        s.set_axon_positions(4, 50e-9);
        for _ in 0..3000 {
            let p = s.step(1e-12).unwrap().power;
            let audit = s.power_audit().unwrap();
            assert_relative_eq!(audit.net_delivered, audit.dissipated, max_relative = 1e-9);
            assert_relative_eq!(p.weight_sources + p.vdw_sources, audit.dissipated, max_relative = 1e-9);
        }
    }
}
