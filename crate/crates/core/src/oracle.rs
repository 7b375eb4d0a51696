//! Ideal discrete Hopfield network with `{0, 1}` states.
//!
//! Neuron `j` sends `O_ji = S_j W_ji` to neuron `i`, which switches on when
//! the summed input exceeds the threshold, keeps its state on equality and
//! switches off otherwise. Used as an independent reference for the device
//! simulation and for brute-force ground truth on small networks.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleNet {
    pub n: usize,
    /// Row-major `n x n`, symmetric with a zero diagonal.
    pub weights: Vec<i64>,
    pub threshold: f64,
    pub states: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub states: Vec<bool>,
    pub sweeps_used: usize,
    pub converged: bool,
}

impl OracleNet {
    /// Sum of `±1` outer products of the patterns, initial state all zeros.
    pub fn hebbian(patterns: &[Vec<bool>], threshold: f64) -> Result<Self> {
        let n = patterns.first().ok_or_else(|| Error::param("at least one pattern is required"))?.len();
        if patterns.iter().any(|p| p.len() != n) {
            return Err(Error::param("patterns differ in length"));
        }
        let spin = |b: bool| if b { 1 } else { -1 };
        let mut weights = vec![0i64; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                weights[i * n + j] = patterns.iter().map(|p| spin(p[i]) * spin(p[j])).sum();
            }
        }
        Ok(OracleNet { n, weights, threshold, states: vec![false; n] })
    }

    pub fn from_weights(n: usize, weights: Vec<i64>, threshold: f64) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::param(format!("expected {} weights, got {}", n * n, weights.len())));
        }
        for i in 0..n {
            if weights[i * n + i] != 0 {
                return Err(Error::param(format!("w[{i}][{i}] must be zero")));
            }
            for j in 0..i {
                if weights[i * n + j] != weights[j * n + i] {
                    return Err(Error::param(format!("weights not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(OracleNet { n, weights, threshold, states: vec![false; n] })
    }

    pub fn with_states(mut self, states: Vec<bool>) -> Self {
        assert_eq!(states.len(), self.n, "state length must match the network");
        self.states = states;
        self
    }

    /// `Σ_j S_j W_ji`
    pub fn input(&self, i: usize) -> i64 {
        (0..self.n).filter(|&j| self.states[j]).map(|j| self.weights[j * self.n + i]).sum()
    }

    /// Applies the threshold rule to neuron `i`; returns whether it flipped.
    pub fn update_neuron(&mut self, i: usize) -> bool {
        let h = self.input(i) as f64;
        let next = if h > self.threshold {
            true
        } else if h == self.threshold {
            self.states[i]
        } else {
            false
        };
        let flipped = next != self.states[i];
        self.states[i] = next;
        flipped
    }

    pub fn is_fixed_point(&self) -> bool {
        (0..self.n).all(|i| !self.clone().update_neuron(i))
    }

    pub fn energy(&self) -> f64 {
        hopfield_energy(&self.states, &self.weights, self.threshold)
    }
}

/// One asynchronous sweep in the given order, which must be a permutation
/// of `0..n`.
pub fn oracle_update(net: &OracleNet, order: &[usize]) -> Result<OracleNet> {
    let mut seen = vec![false; net.n];
    if order.len() != net.n || !order.iter().all(|&i| i < net.n && !std::mem::replace(&mut seen[i], true)) {
        return Err(Error::param(format!("update order {order:?} is not a permutation of 0..{}", net.n)));
    }
    let mut next = net.clone();
    for &i in order {
        next.update_neuron(i);
    }
    Ok(next)
}

/// One sweep in a seeded random order.
pub fn oracle_update_seeded(net: &OracleNet, seed: u64) -> OracleNet {
    let mut order: Vec<usize> = (0..net.n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    oracle_update(net, &order).expect("shuffled range is a permutation")
}

/// Sweeps in fresh random orders until a whole sweep changes nothing.
pub fn oracle_converge(net: &OracleNet, max_sweeps: usize, seed: u64) -> Result<OracleOutcome> {
    if max_sweeps == 0 {
        return Err(Error::param("max_sweeps must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = net.clone();
    let mut order: Vec<usize> = (0..net.n).collect();
    for sweep in 1..=max_sweeps {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &i in &order {
            changed |= cur.update_neuron(i);
        }
        if !changed {
            return Ok(OracleOutcome { states: cur.states, sweeps_used: sweep, converged: true });
        }
    }
    Ok(OracleOutcome { states: cur.states, sweeps_used: max_sweeps, converged: false })
}

/// `E = -1/2 Σ_{i≠j} W_ij S_i S_j + T Σ_i S_i` for a row-major `n x n` matrix.
pub fn hopfield_energy(states: &[bool], weights: &[i64], threshold: f64) -> f64 {
    let n = states.len();
    let mut pair = 0i64;
    for i in (0..n).filter(|&i| states[i]) {
        for j in (0..n).filter(|&j| j != i && states[j]) {
            pair += weights[i * n + j];
        }
    }
    -0.5 * pair as f64 + threshold * states.iter().filter(|&&s| s).count() as f64
}

fn encode(states: &[bool]) -> u64 {
    states.iter().enumerate().fold(0, |acc, (i, &b)| acc | (b as u64) << i)
}

/// Every fixed point reachable from `start` by any sequence of single-neuron
/// updates, as state codes (bit `i` = neuron `i`). Exhaustive; use for small
/// `n` only.
pub fn reachable_fixed_points(net: &OracleNet, start: &[bool]) -> BTreeSet<u64> {
    assert!(net.n <= 20, "exhaustive reachability is limited to 20 neurons");
    let mut seen = BTreeSet::new();
    let mut fixed = BTreeSet::new();
    let mut queue = VecDeque::from([start.to_vec()]);
    seen.insert(encode(start));
    while let Some(states) = queue.pop_front() {
        let mut is_fixed = true;
        for i in 0..net.n {
            let mut next = OracleNet { states: states.clone(), ..net.clone() };
            if next.update_neuron(i) {
                is_fixed = false;
                if seen.insert(encode(&next.states)) {
                    queue.push_back(next.states);
                }
            }
        }
        if is_fixed {
            fixed.insert(encode(&states));
        }
    }
    fixed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{bits_to_string, from_code, invert, parse_bits};
    use proptest::prelude::*;
    use rand::Rng;

    fn trained(p: &str) -> OracleNet {
        OracleNet::hebbian(&[parse_bits(p).unwrap()], 0.0).unwrap()
    }

    #[test]
    fn stored_pattern_is_fixed() {
        let net = trained("110").with_states(parse_bits("110").unwrap());
        let next = oracle_update(&net, &[2, 0, 1]).unwrap();
        assert_eq!(next.states, net.states);
    }

    #[test]
    fn near_input_converges_in_two_sweeps() {
        // Hand evaluation: from 100, neuron 1 sees +1 and switches on in any
        // order, neuron 2 sees -1 or -2 and stays off.
        let net = trained("110").with_states(parse_bits("100").unwrap());
        for seed in 0..20 {
            let out = oracle_converge(&net, 10, seed).unwrap();
            assert!(out.converged);
            assert!(out.sweeps_used <= 2);
            let s = bits_to_string(&out.states);
            assert!(s == "110" || s == "001", "{s}");
        }
    }

    #[test]
    fn zero_weights_keep_state() {
        let net = OracleNet::from_weights(3, vec![0; 9], 0.0).unwrap().with_states(parse_bits("101").unwrap());
        assert_eq!(oracle_update(&net, &[0, 1, 2]).unwrap().states, net.states);
        let out = oracle_converge(&net, 5, 1).unwrap();
        assert_eq!(out.sweeps_used, 1);
        assert_eq!(out.states, net.states);
    }

    #[test]
    fn stored_patterns_are_fixed_points() {
        for n in 2..=8 {
            for code in 0..1u64 << n {
                let p = from_code(code, n);
                let net = OracleNet::hebbian(std::slice::from_ref(&p), 0.0).unwrap().with_states(p.clone());
                let out = oracle_converge(&net, 3, code).unwrap();
                assert_eq!(out.states, p);
                assert_eq!(out.sweeps_used, 1);
            }
        }
    }

    #[test]
    fn split_state_is_not_an_ideal_fixed_point() {
        // Freezing in an equal split is a property of the hardware; the
        // ideal network leaves 1010 for the stored pattern.
        let net = trained("1100").with_states(parse_bits("1010").unwrap());
        assert!(!net.is_fixed_point());
        let out = oracle_converge(&net, 10, 0).unwrap();
        assert!(out.converged);
        let p = parse_bits("1100").unwrap();
        assert!(out.states == p || out.states == invert(&p));
    }

    #[test]
    fn bad_orders_rejected() {
        let net = trained("110");
        assert!(oracle_update(&net, &[0, 0, 1]).is_err());
        assert!(oracle_update(&net, &[0, 1]).is_err());
        assert!(oracle_update(&net, &[0, 1, 3]).is_err());
        assert!(oracle_converge(&net, 0, 0).is_err());
        assert!(OracleNet::from_weights(2, vec![0, 1, 2, 0], 0.0).is_err());
    }

    #[test]
    fn energy_examples() {
        let net = trained("110");
        assert_eq!(hopfield_energy(&[false; 3], &net.weights, 0.7), 0.0);
        // Brute-force check: the stored pattern or its inverse (whichever
        // has more ones) is a global minimum.
        for n in 2..=12usize {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let p: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let net = OracleNet::hebbian(std::slice::from_ref(&p), 0.0).unwrap();
            let stored = hopfield_energy(&p, &net.weights, 0.0).min(hopfield_energy(&invert(&p), &net.weights, 0.0));
            let min = (0..1u64 << n)
                .map(|c| hopfield_energy(&from_code(c, n), &net.weights, 0.0))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(stored, min, "n = {n}");
        }
    }

    #[test]
    fn converge_matches_exhaustive_basins() {
        for n in 2..=5usize {
            for pcode in 0..1u64 << n {
                let net = OracleNet::hebbian(&[from_code(pcode, n)], 0.0).unwrap();
                for icode in 0..1u64 << n {
                    let input = from_code(icode, n);
                    let reachable = reachable_fixed_points(&net, &input);
                    for seed in 0..4 {
                        let out = oracle_converge(&net.clone().with_states(input.clone()), 50, seed).unwrap();
                        assert!(out.converged);
                        assert!(reachable.contains(&encode(&out.states)));
                        assert!(net.clone().with_states(out.states).is_fixed_point());
                    }
                }
            }
        }
    }

    fn random_symmetric() -> impl Strategy<Value = (OracleNet, u64)> {
        (2usize..=16, any::<u64>(), -2i64..=2).prop_map(|(n, seed, t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = vec![0i64; n * n];
            for i in 0..n {
                for j in 0..i {
                    let v = rng.random_range(-4..=4);
                    w[i * n + j] = v;
                    w[j * n + i] = v;
                }
            }
            let states = (0..n).map(|_| rng.random()).collect();
            (OracleNet::from_weights(n, w, t as f64).unwrap().with_states(states), seed)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn energy_never_increases((net, seed) in random_symmetric()) {
            let mut cur = net;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            for _ in 0..4 * cur.n {
                let before = cur.energy();
                cur.update_neuron(rng.random_range(0..cur.n));
                prop_assert!(cur.energy() <= before);
            }
            let out = oracle_converge(&cur, 100, seed).unwrap();
            prop_assert!(out.converged);
            prop_assert!(cur.with_states(out.states).is_fixed_point());
        }
    }
}
