#![allow(dead_code)]

use kwgraph::{Edge, Graph64, VertexFunction64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph: random spanning tree plus extra edges with probability
/// `p`. Measure and weights uniform in `[0.1, 10]`, h uniform in `h_range`.
pub fn random_graph(seed: u64, n_range: (usize, usize), h_range: (f64, f64)) -> Graph64 {
    let mut r = rng(seed);
    let n = r.gen_range(n_range.0..=n_range.1);
    let mut edges = Vec::new();
    let mut present = std::collections::HashSet::new();
    for j in 1..n {
        let i = r.gen_range(0..j);
        edges.push(Edge { i, j, w: r.gen_range(0.1..10.0) });
        present.insert((i, j));
    }
    let p = r.gen_range(0.0..0.3);
    for i in 0..n {
        for j in (i + 1)..n {
            if !present.contains(&(i, j)) && r.gen_bool(p) {
                edges.push(Edge { i, j, w: r.gen_range(0.1..10.0) });
            }
        }
    }
    let mu = (0..n).map(|_| r.gen_range(0.1..10.0)).collect();
    let h = (0..n).map(|_| r.gen_range(h_range.0..h_range.1)).collect();
    Graph64::new((0..n).map(|i| format!("x{i}")).collect(), mu, h, edges).expect("generator yields valid graphs")
}

pub fn random_function(r: &mut ChaCha8Rng, n: usize, scale: f64) -> VertexFunction64 {
    VertexFunction64::new((0..n).map(|_| r.gen_range(-scale..scale)).collect())
}

pub fn unit_graph(n: usize, edges: &[(usize, usize)], h: &[f64]) -> Graph64 {
    Graph64::new(
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect(),
        vec![1.0; n],
        h.to_vec(),
        edges.iter().map(|&(i, j)| Edge { i, j, w: 1.0 }).collect(),
    )
    .unwrap()
}

pub fn k2() -> Graph64 {
    unit_graph(2, &[(0, 1)], &[1.0, 1.0])
}

pub fn p3() -> Graph64 {
    unit_graph(3, &[(0, 1), (1, 2)], &[1.0; 3])
}

pub fn k3() -> Graph64 {
    unit_graph(3, &[(0, 1), (1, 2), (0, 2)], &[1.0; 3])
}

/// `J(t(1,−1))` on unit K2 with h ≡ 1, written out by hand:
/// `2t² − β log(2 cosh t)`.
pub fn k2_ray_objective(t: f64, beta: f64) -> f64 {
    let log_two_cosh = t.abs() + (-2.0 * t.abs()).exp().ln_1p();
    2.0 * t * t - beta * log_two_cosh
}

/// `d/dt` of [`k2_ray_objective`]: `4t − β tanh t`.
pub fn k2_ray_derivative(t: f64, beta: f64) -> f64 {
    4.0 * t - beta * t.tanh()
}

/// Global minimizer of the K2 ray objective on `[-50, 50]`: grid scan,
/// then bisection of the derivative around the best grid point.
pub fn k2_oracle_minimizer(beta: f64) -> (f64, f64) {
    let step = 1e-3;
    let n = (100.0 / step) as i64;
    let (mut best_t, mut best_j) = (0.0, f64::INFINITY);
    for i in 0..=n {
        let t = -50.0 + i as f64 * step;
        let j = k2_ray_objective(t, beta);
        if j < best_j {
            best_j = j;
            best_t = t;
        }
    }
    let (mut a, mut b) = (best_t - step, best_t + step);
    if k2_ray_derivative(a, beta) > 0.0 || k2_ray_derivative(b, beta) < 0.0 {
        return (best_t, best_j);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if k2_ray_derivative(m, beta) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let t = 0.5 * (a + b);
    (t, k2_ray_objective(t, beta))
}
