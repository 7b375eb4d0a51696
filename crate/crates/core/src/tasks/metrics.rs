use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::Graph;
use crate::bits::hamming;
use crate::{Error, Result};

/// Total weight of edges whose endpoints fall on different sides.
pub fn cut_value(graph: &Graph, partition: &[bool]) -> Result<i64> {
    if partition.len() != graph.n_nodes() {
        return Err(Error::param(format!(
            "partition has {} entries, graph has {} nodes",
            partition.len(),
            graph.n_nodes()
        )));
    }
    Ok(graph.edges().iter().filter(|e| partition[e.i] != partition[e.j]).map(|e| e.weight).sum())
}

/// Optimal cut by enumerating every partition with node 0 fixed on one side.
pub fn exhaustive_max_cut(graph: &Graph) -> Result<(Vec<bool>, i64)> {
    let n = graph.n_nodes();
    if n > 26 {
        return Err(Error::param(format!("exhaustive max-cut is limited to 26 nodes, got {n}")));
    }
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    let mut best = (0u64, i64::MIN);
    for code in 0..1u64 << (n - 1) {
        let side = |v: usize| v > 0 && code >> (v - 1) & 1 == 1;
        let cut: i64 = graph.edges().iter().filter(|e| side(e.i) != side(e.j)).map(|e| e.weight).sum();
        if cut > best.1 {
            best = (code, cut);
        }
    }
    let partition = (0..n).map(|v| v > 0 && best.0 >> (v - 1) & 1 == 1).collect();
    Ok((partition, best.1))
}

/// Flips exactly `round(fraction * len)` distinct positions.
pub fn distort(pattern: &[bool], fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..=0.5).contains(&fraction) {
        return Err(Error::param(format!("distortion {fraction} outside [0, 0.5]")));
    }
    let flips = (fraction * pattern.len() as f64).round() as usize;
    let mut out = pattern.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in sample(&mut rng, pattern.len(), flips) {
        out[idx] = !out[idx];
    }
    Ok(out)
}

/// Best fraction of matching bits against any stored pattern or its inverse.
pub fn bitwise_accuracy(output: &[bool], stored: &[Vec<bool>]) -> f64 {
    let n = output.len();
    if n == 0 {
        return 1.0;
    }
    stored
        .iter()
        .map(|p| {
            let d = hamming(output, p);
            d.min(n - d)
        })
        .min()
        .map_or(0.0, |d| (n - d) as f64 / n as f64)
}

/// Whether `output` equals a stored pattern or the inverse of one.
pub fn full_recall(output: &[bool], stored: &[Vec<bool>]) -> bool {
    stored.iter().any(|p| {
        let d = hamming(output, p);
        d == 0 || d == output.len()
    })
}

/// Pixels differing from `target` or its inverse, whichever is closer.
pub fn pixel_error(output: &[bool], target: &[bool]) -> usize {
    let d = hamming(output, target);
    d.min(output.len() - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{from_code, invert, parse_bits};
    use proptest::prelude::*;

    #[test]
    fn cut_examples() {
        let k2 = Graph::new(2, [(0, 1, 1)]).unwrap();
        assert_eq!(cut_value(&k2, &[false, true]).unwrap(), 1);
        let g = Graph::random(9, 0.5, 11);
        assert_eq!(cut_value(&g, &[true; 9]).unwrap(), 0);
        assert_eq!(cut_value(&g, &[false; 9]).unwrap(), 0);
        assert!(cut_value(&g, &[true; 3]).is_err());
    }

    #[test]
    fn exhaustive_cut_matches_independent_search() {
        // Independent oracle: all 2^n partitions, cut counted from an
        // adjacency matrix.
        for seed in 0..10 {
            let g = Graph::random(6, 0.5, seed);
            let mut adj = [[0i64; 6]; 6];
            for e in g.edges() {
                adj[e.i][e.j] = e.weight;
                adj[e.j][e.i] = e.weight;
            }
            let best = (0..64u64)
                .map(|c| {
                    let p = from_code(c, 6);
                    let mut cut = 0;
                    for a in 0..6 {
                        for b in a + 1..6 {
                            if p[a] != p[b] {
                                cut += adj[a][b];
                            }
                        }
                    }
                    cut
                })
                .max()
                .unwrap();
            let (part, value) = exhaustive_max_cut(&g).unwrap();
            assert_eq!(value, best);
            assert_eq!(cut_value(&g, &part).unwrap(), best);
        }
    }

    #[test]
    fn distort_examples() {
        let p = parse_bits("1011001110").unwrap();
        assert_eq!(distort(&p, 0.0, 1).unwrap(), p);
        let long: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
        let d = distort(&long, 0.5, 9).unwrap();
        assert_eq!(hamming(&d, &long), 50);
        assert_eq!(distort(&long, 0.5, 9).unwrap(), d);
        assert!(distort(&long, 0.6, 9).is_err());
        assert!(distort(&long, -0.1, 9).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let p = parse_bits("1100").unwrap();
        assert_eq!(bitwise_accuracy(&p, std::slice::from_ref(&p)), 1.0);
        assert_eq!(bitwise_accuracy(&invert(&p), std::slice::from_ref(&p)), 1.0);
        assert_eq!(bitwise_accuracy(&parse_bits("1101").unwrap(), std::slice::from_ref(&p)), 0.75);
        assert!(full_recall(&invert(&p), std::slice::from_ref(&p)));
        assert!(!full_recall(&parse_bits("1010").unwrap(), &[p]));
    }

    proptest! {
        #[test]
        fn cut_symmetric_under_inversion(seed in any::<u64>(), n in 2usize..20, code in any::<u64>()) {
            let g = Graph::random(n, 0.5, seed);
            let p = from_code(code, n);
            prop_assert_eq!(cut_value(&g, &p).unwrap(), cut_value(&g, &invert(&p)).unwrap());
        }

        #[test]
        fn distort_flips_exact_count(len in 1usize..200, frac in 0.0f64..=0.5, seed in any::<u64>()) {
            let p: Vec<bool> = (0..len).map(|i| i % 2 == 0).collect();
            let d = distort(&p, frac, seed).unwrap();
            prop_assert_eq!(hamming(&p, &d), (frac * len as f64).round() as usize);
        }
    }
}
