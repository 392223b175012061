//! Brute-force oracles shared by the integration and acceptance tests.
//! Nothing here calls into the lift, slice or quotient code.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use equimetric::gspace::SampledGSpace;

/// Orbits by closing each point under every defined map and its inverse.
pub fn brute_orbits(gs: &SampledGSpace) -> Vec<usize> {
    let n = gs.len();
    let mut label = vec![usize::MAX; n];
    for x in 0..n {
        if label[x] != usize::MAX {
            continue;
        }
        let mut seen = vec![x];
        let mut changed = true;
        while changed {
            changed = false;
            for a in 0..n {
                for b in 0..n {
                    let linked = gs.group().elements().any(|g| gs.act(g, a) == Some(b));
                    if linked && (seen.contains(&a) ^ seen.contains(&b)) {
                        seen.push(if seen.contains(&a) { b } else { a });
                        changed = true;
                    }
                }
            }
        }
        for &y in &seen {
            label[y] = x;
        }
    }
    label
}

/// `min { d0(a, b) : a ~ x, b ~ y }` over orbit members.
pub fn brute_isometric_quotient(gs: &SampledGSpace, x: usize, y: usize) -> f64 {
    let orb = brute_orbits(gs);
    let mut best = f64::INFINITY;
    for a in 0..gs.len() {
        for b in 0..gs.len() {
            if orb[a] == orb[x] && orb[b] == orb[y] {
                best = best.min(gs.space().dist(a, b));
            }
        }
    }
    best
}

/// Quotient distance on `circle(n, k)`: the orbit space is a circle of
/// `n / k` points with step `2π / n`.
pub fn circle_quotient(n: usize, k: usize, i: usize, j: usize) -> f64 {
    let m = n / k;
    let r = (i + n - j) % n % m;
    (2.0 * PI / n as f64) * r.min(m - r) as f64
}

pub fn cyclic_gap(n: usize, i: usize, j: usize) -> usize {
    let r = (i + n - j) % n;
    r.min(n - r)
}

/// Cheapest simple chain `from -> to`, each step allowed by `step`.
/// Enumerates every simple chain; branches already costlier than the best
/// complete chain are cut, which cannot change the minimum.
pub fn cheapest_simple_chain(n: usize, from: usize, to: usize, step: &dyn Fn(usize, usize) -> Option<f64>) -> f64 {
    fn go(
        n: usize,
        at: usize,
        to: usize,
        cost: f64,
        used: &mut Vec<bool>,
        best: &mut f64,
        step: &dyn Fn(usize, usize) -> Option<f64>,
    ) {
        if cost >= *best {
            return;
        }
        if at == to {
            *best = cost;
            return;
        }
        for next in 0..n {
            if used[next] {
                continue;
            }
            if let Some(c) = step(at, next) {
                used[next] = true;
                go(n, next, to, cost + c, used, best, step);
                used[next] = false;
            }
        }
    }
    if from == to {
        return 0.0;
    }
    let mut used = vec![false; n];
    used[from] = true;
    let mut best = f64::INFINITY;
    go(n, from, to, 0.0, &mut used, &mut best, step);
    best
}

/// Covering lift on `circle(n, k)`: steps inside arcs of at most half the
/// orbit circle, costed by the quotient distance.
pub fn circle_cover_oracle(n: usize, k: usize, from: usize, to: usize) -> f64 {
    let half = n / k / 2;
    cheapest_simple_chain(n, from, to, &|a, b| {
        (cyclic_gap(n, a, b) <= half).then(|| circle_quotient(n, k, a, b))
    })
}

/// Naive lift on `circle(n, k)`: any two points of an arc meeting each
/// orbit at most once.
pub fn circle_naive_oracle(n: usize, k: usize, from: usize, to: usize) -> f64 {
    let m = n / k;
    cheapest_simple_chain(n, from, to, &|a, b| {
        (cyclic_gap(n, a, b) < m).then(|| circle_quotient(n, k, a, b))
    })
}

/// Floyd–Warshall, written out again so lift tables can be checked
/// against their own edge lists.
pub fn all_pairs(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        if w < d[u][v] {
            d[u][v] = w;
            d[v][u] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Word length in `C_n` with generators `±1`.
pub fn cyclic_word(n: usize, a: usize, b: usize) -> f64 {
    cyclic_gap(n, a, b) as f64
}
