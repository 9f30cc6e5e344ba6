use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mixture::MixtureModel;
use crate::{Error, Result};

/// Largest `k` matched by exhaustive search; larger problems use the greedy
/// heuristic.
pub const EXACT_MATCHING_MAX_K: usize = 8;

/// Bijection between estimated centers and true components.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `assignment[e]` is the true component matched to estimate `e`.
    pub assignment: Vec<usize>,
    /// Sum of Euclidean distances over matched pairs.
    pub total_cost: f64,
    /// Whether the optimum was found by exhaustive search.
    pub exact: bool,
}

impl Matching {
    /// Estimate index matched to `component`.
    pub fn estimate_for(&self, component: usize) -> usize {
        self.assignment
            .iter()
            .position(|&c| c == component)
            .expect("matching is a bijection")
    }
}

pub fn match_centers(estimates: &[Vec<f64>], model: &MixtureModel) -> Result<Matching> {
    let means: Vec<&[f64]> = (0..model.k()).map(|i| model.mean(i)).collect();
    match_to_means(estimates, &means)
}

/// Minimum-total-distance bijection: exhaustive for `k ≤ 8` (first optimum
/// in lexicographic order), greedy nearest-pair-first with index tie-break
/// otherwise.
pub fn match_to_means(estimates: &[Vec<f64>], means: &[&[f64]]) -> Result<Matching> {
    let k = means.len();
    if estimates.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: estimates.len(),
        });
    }
    if k == 0 {
        return Ok(Matching {
            assignment: Vec::new(),
            total_cost: 0.0,
            exact: true,
        });
    }
    for e in estimates {
        if e.len() != means[0].len() {
            return Err(Error::DimensionMismatch {
                expected: means[0].len(),
                found: e.len(),
            });
        }
    }
    let cost: Vec<f64> = estimates
        .iter()
        .flat_map(|e| means.iter().map(move |m| math::dist(e, m)))
        .collect();
    if k <= EXACT_MATCHING_MAX_K {
        Ok(exhaustive(&cost, k))
    } else {
        Ok(greedy(&cost, k))
    }
}

fn exhaustive(cost: &[f64], k: usize) -> Matching {
    struct Search<'a> {
        cost: &'a [f64],
        k: usize,
        used: Vec<bool>,
        current: Vec<usize>,
        best: Vec<usize>,
        best_cost: f64,
    }
    impl Search<'_> {
        fn go(&mut self, e: usize, acc: f64) {
            if acc >= self.best_cost {
                return;
            }
            if e == self.k {
                self.best_cost = acc;
                self.best.clone_from(&self.current);
                return;
            }
            for c in 0..self.k {
                if !self.used[c] {
                    self.used[c] = true;
                    self.current.push(c);
                    self.go(e + 1, acc + self.cost[e * self.k + c]);
                    self.current.pop();
                    self.used[c] = false;
                }
            }
        }
    }
    let mut s = Search {
        cost,
        k,
        used: vec![false; k],
        current: Vec::with_capacity(k),
        best: (0..k).collect(),
        best_cost: f64::INFINITY,
    };
    s.go(0, 0.0);
    Matching {
        assignment: s.best,
        total_cost: s.best_cost,
        exact: true,
    }
}

fn greedy(cost: &[f64], k: usize) -> Matching {
    let mut pairs: Vec<(usize, usize)> = (0..k).flat_map(|e| (0..k).map(move |c| (e, c))).collect();
    pairs.sort_by(|a, b| {
        cost[a.0 * k + a.1]
            .total_cmp(&cost[b.0 * k + b.1])
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut assignment = vec![usize::MAX; k];
    let mut taken = vec![false; k];
    let mut total = 0.0;
    for (e, c) in pairs {
        if assignment[e] == usize::MAX && !taken[c] {
            assignment[e] = c;
            taken[c] = true;
            total += cost[e * k + c];
        }
    }
    Matching {
        assignment,
        total_cost: total,
        exact: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn brute_force(est: &[Vec<f64>], means: &[&[f64]]) -> f64 {
        // All 3! assignments written out.
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        perms
            .iter()
            .map(|p| (0..3).map(|e| math::dist(&est[e], means[p[e]])).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identity_and_permutation() {
        let means: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![0.0, 9.0]];
        let refs: Vec<&[f64]> = means.iter().map(|m| m.as_slice()).collect();
        let m = match_to_means(&means, &refs).unwrap();
        assert_eq!(m.assignment, vec![0, 1, 2]);
        assert_eq!(m.total_cost, 0.0);
        let permuted = vec![means[2].clone(), means[0].clone(), means[1].clone()];
        let m = match_to_means(&permuted, &refs).unwrap();
        assert_eq!(m.assignment, vec![2, 0, 1]);
        assert_eq!(m.estimate_for(0), 1);
    }

    #[test]
    fn k3_random_matches_brute_force() {
        let mut rng = Rng::new(17);
        for _ in 0..200 {
            let draw = |rng: &mut Rng| -> Vec<Vec<f64>> {
                (0..3)
                    .map(|_| (0..2).map(|_| rng.standard_normal()).collect())
                    .collect()
            };
            let est = draw(&mut rng);
            let means = draw(&mut rng);
            let refs: Vec<&[f64]> = means.iter().map(|m| m.as_slice()).collect();
            let m = match_to_means(&est, &refs).unwrap();
            assert!((m.total_cost - brute_force(&est, &refs)).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_for_large_k_recovers_permutation() {
        let k = 12;
        let means: Vec<Vec<f64>> = (0..k).map(|i| vec![(i * i) as f64, i as f64]).collect();
        let refs: Vec<&[f64]> = means.iter().map(|m| m.as_slice()).collect();
        let est: Vec<Vec<f64>> = (0..k).rev().map(|i| means[i].clone()).collect();
        let m = match_to_means(&est, &refs).unwrap();
        assert!(!m.exact);
        assert_eq!(m.assignment, (0..k).rev().collect::<Vec<_>>());
    }

    #[test]
    fn size_mismatch() {
        let means = [vec![0.0]];
        let refs: Vec<&[f64]> = means.iter().map(|m| m.as_slice()).collect();
        assert!(match_to_means(&[vec![0.0], vec![1.0]], &refs).is_err());
    }
}
