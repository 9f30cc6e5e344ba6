use proptest::prelude::*;
use twoem_core::diagnostics::{match_to_means, round_labels, weight_window};
use twoem_core::em::{e_step, m_step, EmState, Responsibilities, VarianceMode, Variances};
use twoem_core::mixture::{log_density, separation};
use twoem_core::two_round::{farthest_first, prune};
use twoem_core::{math, Component, MixtureModel, Points};

fn coords(n: usize, len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, n), len)
}

/// `(points, centers, weights, common variance)` in a shared dimension.
type EmInput = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>, f64);

fn em_input() -> impl Strategy<Value = EmInput> {
    (1usize..5, 1usize..12, 1usize..5).prop_flat_map(|(n, m, l)| {
        (
            coords(n, m),
            coords(n, l),
            prop::collection::vec(0.05..1.0f64, l),
            0.05..20.0f64,
        )
    })
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn common_state(centers: &[Vec<f64>], weights: &[f64], var: f64) -> EmState {
    EmState::new(centers.to_vec(), normalized(weights), Variances::Common(var)).unwrap()
}

/// An orthogonal matrix from Gram–Schmidt on a random square matrix.
fn orthogonal(raw: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for v in raw {
        let mut u = v.clone();
        for b in &q {
            let p = math::dot(&u, b);
            for (x, y) in u.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let norm = math::norm(&u);
        if norm < 1e-3 {
            return None;
        }
        q.push(u.iter().map(|x| x / norm).collect());
    }
    Some(q)
}

fn model_from(means: &[Vec<f64>], sigmas: &[f64], weights: &[f64]) -> MixtureModel {
    let w = normalized(weights);
    MixtureModel::new(
        means[0].len(),
        means
            .iter()
            .zip(sigmas)
            .zip(&w)
            .map(|((m, s), w)| Component {
                weight: *w,
                mean: m.clone(),
                variance: s * s,
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn responsibility_rows_are_distributions((rows, centers, weights, var) in em_input()) {
        let points = Points::from_rows(&rows).unwrap();
        let r = e_step(&points, &common_state(&centers, &weights, var)).unwrap();
        for x in 0..r.rows() {
            let row = r.row(x);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn e_step_ignores_weight_scale((rows, centers, weights, var) in em_input(), scale in 0.01..100.0f64) {
        let points = Points::from_rows(&rows).unwrap();
        let a = e_step(&points, &common_state(&centers, &weights, var)).unwrap();
        let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let b = e_step(&points, &common_state(&centers, &scaled, var)).unwrap();
        for x in 0..a.rows() {
            for i in 0..a.cols() {
                prop_assert!((a.get(x, i) - b.get(x, i)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn permuting_centers_permutes_everything((rows, centers, weights, var) in em_input(), rot in 0usize..5) {
        let points = Points::from_rows(&rows).unwrap();
        let l = centers.len();
        let perm: Vec<usize> = (0..l).map(|i| (i + rot) % l).collect();
        let state = common_state(&centers, &weights, var);
        let pc: Vec<Vec<f64>> = perm.iter().map(|&p| centers[p].clone()).collect();
        let pw: Vec<f64> = perm.iter().map(|&p| weights[p]).collect();
        let permuted = common_state(&pc, &pw, var);
        let (ra, rb) = (e_step(&points, &state).unwrap(), e_step(&points, &permuted).unwrap());
        for x in 0..ra.rows() {
            for (i, &p) in perm.iter().enumerate() {
                prop_assert!((rb.get(x, i) - ra.get(x, p)).abs() <= 1e-12);
            }
        }
        let a = m_step(&points, &ra, VarianceMode::Common, &state).unwrap();
        let b = m_step(&points, &rb, VarianceMode::Common, &permuted).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            for (u, v) in b.centers()[i].iter().zip(&a.centers()[p]) {
                prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
            }
            prop_assert!((b.weights()[i] - a.weights()[p]).abs() <= 1e-12);
        }
    }

    #[test]
    fn m_step_weights_sum_to_one((rows, centers, weights, var) in em_input(), per_center in any::<bool>()) {
        let points = Points::from_rows(&rows).unwrap();
        let state = common_state(&centers, &weights, var);
        let r = e_step(&points, &state).unwrap();
        let mode = if per_center { VarianceMode::PerCenter } else { VarianceMode::Common };
        let prev = if per_center {
            EmState::new(centers.clone(), normalized(&weights), Variances::PerCenter(vec![var; centers.len()])).unwrap()
        } else {
            state
        };
        let next = m_step(&points, &r, mode, &prev).unwrap();
        prop_assert!((next.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn single_gaussian_log_density_matches_closed_form(
        (mean, x) in (1usize..40).prop_flat_map(|n| (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n))),
        sigma in 0.1..10.0f64,
    ) {
        let n = mean.len() as f64;
        let model = MixtureModel::new(mean.len(), vec![Component { weight: 1.0, mean: mean.clone(), variance: sigma * sigma }]).unwrap();
        let d2: f64 = x.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
        let expected = -0.5 * n * (2.0 * std::f64::consts::PI).ln() - n * sigma.ln() - d2 / (2.0 * sigma * sigma);
        let got = log_density(&model, &x).unwrap();
        prop_assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0), "{got} vs {expected}");
    }

    #[test]
    fn separation_is_invariant_under_similarity(
        (means, raw_rotation) in (2usize..5, 2usize..5).prop_flat_map(|(n, k)| (coords(n, k), coords(n, n))),
        sigmas in prop::collection::vec(0.2..3.0f64, 4),
        shift in prop::collection::vec(-100.0..100.0f64, 4),
        scale in 0.01..100.0f64,
    ) {
        let k = means.len();
        let n = means[0].len();
        prop_assume!((0..k).all(|i| (i + 1..k).all(|j| math::dist(&means[i], &means[j]) > 1e-3)));
        let Some(q) = orthogonal(&raw_rotation) else { return Ok(()) };
        let base = model_from(&means, &sigmas[..k], &vec![1.0; k]);
        let moved: Vec<Vec<f64>> = means
            .iter()
            .map(|m| (0..n).map(|r| scale * (math::dot(&q[r], m) + shift[r])).collect())
            .collect();
        let scaled_sigmas: Vec<f64> = sigmas[..k].iter().map(|s| s * scale).collect();
        let other = model_from(&moved, &scaled_sigmas, &vec![1.0; k]);
        let (a, b) = (separation(&base).unwrap(), separation(&other).unwrap());
        for (x, y) in a.matrix().iter().zip(b.matrix()) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn matching_recovers_permutations(
        means in (1usize..4, 2usize..8).prop_flat_map(|(n, k)| coords(n, k)),
        shuffle in prop::collection::vec(any::<u32>(), 8),
        noise in 0.0..1e-3f64,
    ) {
        let k = means.len();
        prop_assume!((0..k).all(|i| (i + 1..k).all(|j| math::dist(&means[i], &means[j]) > 0.1)));
        let mut perm: Vec<usize> = (0..k).collect();
        perm.sort_by_key(|&i| (shuffle[i], i));
        let estimates: Vec<Vec<f64>> = perm.iter().map(|&p| means[p].iter().map(|v| v + noise).collect()).collect();
        let refs: Vec<&[f64]> = means.iter().map(Vec::as_slice).collect();
        let matching = match_to_means(&estimates, &refs).unwrap();
        prop_assert_eq!(matching.assignment, perm);
    }

    #[test]
    fn weight_window_contains_the_cluster_fraction(
        fraction in 0.0..=1.0f64,
        k in 1usize..20,
        c in 0.01..5.0f64,
        n in 1usize..1000,
    ) {
        let (lo, hi) = weight_window(fraction, k, c, n);
        prop_assert!(lo <= fraction && fraction <= hi);
    }

    #[test]
    fn prune_returns_k_distinct_survivors(
        (centers, weights) in (1usize..4, 2usize..10).prop_flat_map(|(n, l)| (coords(n, l), prop::collection::vec(0.0..1.0f64, l))),
        k in 1usize..5,
        per_center in any::<bool>(),
    ) {
        let l = centers.len();
        prop_assume!(weights.iter().sum::<f64>() > 0.0);
        let w = normalized(&weights);
        let w_t = 0.5 / l as f64;
        let variances = if per_center {
            Variances::PerCenter((0..l).map(|i| 1.0 + i as f64).collect())
        } else {
            Variances::Common(1.0)
        };
        let mode = variances.mode();
        let state = EmState::new(centers, w.clone(), variances).unwrap();
        match prune(&state, &state, k, w_t, mode) {
            Ok(p) => {
                prop_assert_eq!(p.state.len(), k);
                let mut sel = p.selected.clone();
                sel.sort_unstable();
                sel.dedup();
                prop_assert_eq!(sel.len(), k);
                prop_assert!(p.selected.iter().all(|s| p.survivors.contains(s) && w[*s] >= w_t));
                prop_assert!(p.state.weights().iter().all(|&x| x == 1.0 / k as f64));
            }
            Err(_) => prop_assert!(w.iter().filter(|&&x| x >= w_t).count() < k),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rounding_keeps_count_and_norm(
        (points, f) in (1usize..6, 1usize..21).prop_flat_map(|(d, len)| (coords(d, len), prop::collection::vec(0.0..=1.0f64, len))),
    ) {
        let r = round_labels(&points, &f).unwrap();
        prop_assert!(r.count_ok(), "{r:?}");
        if f.iter().sum::<f64>() > 0.0 && r.fractional_norm > 0.0 {
            prop_assert_eq!(r.norm_ok(1e-9), Some(true), "{:?}", r);
        }
    }
}

/// Groups of centers with diameter at most `Δ` and gaps greater than `Δ`:
/// members sit within `Δ/2` of anchors spaced `2Δ(1+ε)` apart on one axis.
fn grouped_centers() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, usize, f64)> {
    (1usize..4, 1usize..7, 0.1..5.0f64, 0.001..1.0f64)
        .prop_flat_map(|(n, k, delta, eps)| {
            let members = prop::collection::vec((0usize..k, prop::collection::vec(-1.0..1.0f64, n)), 0..4 * k);
            (Just(n), Just(k), Just(delta), Just(eps), members)
        })
        .prop_map(|(n, k, delta, eps, members)| {
            let pitch = 2.0 * delta * (1.0 + eps);
            let anchor =
                |g: usize| -> Vec<f64> { (0..n).map(|d| if d == 0 { pitch * g as f64 } else { 0.0 }).collect() };
            let mut centers: Vec<Vec<f64>> = (0..k).map(anchor).collect();
            let mut groups: Vec<usize> = (0..k).collect();
            for (g, offset) in members {
                let norm = math::norm(&offset);
                if norm == 0.0 {
                    continue;
                }
                let r = 0.5 * delta * (norm / (n as f64).sqrt()).min(1.0);
                centers.push(anchor(g).iter().zip(&offset).map(|(a, o)| a + r * o / norm).collect());
                groups.push(g);
            }
            (centers, groups, k, delta)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn farthest_first_picks_one_per_group((centers, groups, k, delta) in grouped_centers(), start in any::<prop::sample::Index>()) {
        let candidates: Vec<usize> = (0..centers.len()).collect();
        let diameter = (0..centers.len())
            .flat_map(|a| (0..centers.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| groups[a] == groups[b])
            .map(|(a, b)| math::dist(&centers[a], &centers[b]))
            .fold(0.0, f64::max);
        let gap = (0..centers.len())
            .flat_map(|a| (0..centers.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| groups[a] != groups[b])
            .map(|(a, b)| math::dist(&centers[a], &centers[b]))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(diameter <= delta && gap > delta);
        let first = start.index(centers.len());
        let picked = farthest_first(&candidates, k, first, |a, b| math::dist(&centers[a], &centers[b]));
        let mut g: Vec<usize> = picked.iter().map(|&p| groups[p]).collect();
        g.sort_unstable();
        prop_assert_eq!(g, (0..k).collect::<Vec<_>>());
    }
}

#[test]
fn responsibilities_reject_bad_rows() {
    assert!(Responsibilities::from_rows(&[vec![0.5, 0.6]]).is_err());
    assert!(Responsibilities::from_rows(&[vec![1.0, 0.0], vec![0.3, 0.7]]).is_ok());
}
