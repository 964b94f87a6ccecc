//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::VecDeque;

/// Node count of a shortest path from the first to the last of `positions`
/// (sorted) in the unit-disk graph of radius `radius`, by breadth-first
/// search over the explicit adjacency. `None` if they are disconnected.
pub fn bfs_path_nodes(positions: &[f64], radius: f64) -> Option<usize> {
    let n = positions.len();
    if n == 0 {
        return None;
    }
    let mut dist = vec![usize::MAX; n];
    dist[0] = 1;
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if dist[j] == usize::MAX && (positions[j] - positions[i]).abs() <= radius {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    (dist[n - 1] != usize::MAX).then_some(dist[n - 1])
}

/// Closed-form Poisson pmf of `N_b` for `k = 1, 2`.
pub fn poisson_anchors(lambda_prime: f64) -> [f64; 2] {
    let e = (-lambda_prime).exp();
    [e, lambda_prime * e]
}

/// Sup distance between two CDFs on a uniform grid of `[lo, hi]`.
pub fn sup_distance(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .map(|x| (f(x) - g(x)).abs())
        .fold(0.0, f64::max)
}
