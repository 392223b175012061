//! Small graph kernels over dense point indices: component extraction and
//! weighted shortest paths.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

/// Component of `start` in the subgraph induced by `inside`.
///
/// Returns the sorted vertex list; empty when `start` itself is outside.
pub fn component_within(neighbors: &[Vec<usize>], start: usize, inside: impl Fn(usize) -> bool) -> Vec<usize> {
    if !inside(start) {
        return Vec::new();
    }
    let mut seen = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        out.push(u);
        for &v in &neighbors[u] {
            if !seen[v] && inside(v) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    out
}

/// All components of the subgraph induced by `inside`, each sorted, ordered
/// by smallest member.
pub fn components_within(neighbors: &[Vec<usize>], inside: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let n = neighbors.len();
    let mut label = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX || !inside(s) {
            continue;
        }
        let id = comps.len();
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([s]);
        label[s] = id;
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &v in &neighbors[u] {
                if label[v] == usize::MAX && inside(v) {
                    label[v] = id;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Whether the sorted vertex set `set` induces a connected subgraph.
pub fn is_connected_set(neighbors: &[Vec<usize>], set: &[usize]) -> bool {
    match set.first() {
        None => true,
        Some(&s) => component_within(neighbors, s, |v| set.binary_search(&v).is_ok()).len() == set.len(),
    }
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest distances over nonnegative weights; unreachable
/// vertices get `+inf`.
pub fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State { cost: 0.0, node: source });
    while let Some(State { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    dist
}

/// Dense all-pairs shortest paths over a weight matrix (`+inf` = no edge).
pub fn floyd_warshall(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = weights.len();
    let mut d = weights.to_vec();
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let c = dik + d[k][j];
                if c < d[i][j] {
                    d[i][j] = c;
                }
            }
        }
    }
    // FW relaxes each ordered pair independently; mirror the upper triangle
    // so that symmetric inputs give bitwise symmetric outputs.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = d[i][j].min(d[j][i]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect()
    }

    #[test]
    fn component_respects_mask() {
        let g = path(5);
        assert_eq!(component_within(&g, 1, |v| v != 3), vec![0, 1, 2]);
        assert_eq!(component_within(&g, 3, |v| v != 3), Vec::<usize>::new());
        assert_eq!(components_within(&g, |v| v != 2), vec![vec![0, 1], vec![3, 4]]);
    }

    #[test]
    fn connected_set() {
        let g = path(5);
        assert!(is_connected_set(&g, &[1, 2, 3]));
        assert!(!is_connected_set(&g, &[1, 3]));
    }

    #[test]
    fn dijkstra_on_weighted_path() {
        let adj = vec![vec![(1, 1.0)], vec![(0, 1.0), (2, 2.5)], vec![(1, 2.5)], vec![]];
        let d = dijkstra(&adj, 0);
        assert_eq!(&d[..3], &[0.0, 1.0, 3.5]);
        assert!(d[3].is_infinite());
    }

    #[test]
    fn floyd_matches_dijkstra_on_cycle() {
        let inf = f64::INFINITY;
        let w = vec![
            vec![0.0, 1.0, inf, 1.0],
            vec![1.0, 0.0, 1.0, inf],
            vec![inf, 1.0, 0.0, 1.0],
            vec![1.0, inf, 1.0, 0.0],
        ];
        let d = floyd_warshall(&w);
        assert_eq!(d[0][2], 2.0);
        assert_eq!(d[1][3], 2.0);
    }
}
