//! The lifted metric `ρ`: shortest allowable chains over the allowability
//! graph.
//!
//! * `general`: a step `u -> v` is allowed when one point lies in the
//!   other's slice (cost `d(pu, pv)`) or `v = g u` (cost `d_O(u, gu)`).
//! * `cover`: steps stay inside one small set (cost `d(pu, pv)`), the
//!   covering-space construction.
//! * `naive`: steps stay inside any connected set on which `p` is
//!   injective. This collapses the metric and serves as a negative control.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{components_within, dijkstra};
use crate::gspace::{Point, SampledGSpace};
use crate::metric::distinct_sorted;
use crate::orbital::OrbitalMetric;
use crate::quotient::Quotient;
use crate::slices::SliceFamily;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("general mode needs an orbital metric")]
    NoOrbitalMetric,
    #[error("enlargement factor must be at least 1, got {0}")]
    InvalidEnlargement(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LiftMode {
    #[default]
    General,
    Cover,
    Naive,
}

impl fmt::Display for LiftMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiftMode::General => "general",
            LiftMode::Cover => "cover",
            LiftMode::Naive => "naive",
        })
    }
}

impl std::str::FromStr for LiftMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(LiftMode::General),
            "cover" => Ok(LiftMode::Cover),
            "naive" => Ok(LiftMode::Naive),
            other => Err(format!("unknown mode '{other}' (expected general, cover or naive)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Slice,
    Orbit,
    Elementary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub u: Point,
    pub v: Point,
    pub weight: f64,
    pub kind: EdgeKind,
}

/// Options for cover-mode small sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoverOptions {
    /// Components of the ball preimage at this multiple of the radius must
    /// also be elementary.
    pub enlargement_factor: Option<f64>,
    /// Use single points as small sets.
    pub singleton: bool,
}

/// Allowed single steps of a chain, with their costs.
#[derive(Debug, Clone, PartialEq)]
pub struct AllowabilityGraph {
    n: usize,
    mode: LiftMode,
    /// Sorted by `(u, v)`, `u < v`, one edge per pair.
    edges: Vec<Edge>,
    small_sets: Vec<Vec<Point>>,
}

impl AllowabilityGraph {
    fn from_edges(n: usize, mode: LiftMode, mut edges: Vec<Edge>, small_sets: Vec<Vec<Point>>) -> Self {
        for e in edges.iter_mut() {
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
        }
        edges.retain(|e| e.u != e.v);
        edges.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)).then(a.weight.total_cmp(&b.weight)).then(a.kind.cmp(&b.kind)));
        edges.dedup_by(|later, first| later.u == first.u && later.v == first.v);
        AllowabilityGraph {
            n,
            mode,
            edges,
            small_sets,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn mode(&self) -> LiftMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cover mode: the small sets; naive mode: empty (the sets are implicit).
    pub fn small_sets(&self) -> &[Vec<Point>] {
        &self.small_sets
    }

    pub fn edge(&self, u: Point, v: Point) -> Option<&Edge> {
        let key = (u.min(v), u.max(v));
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&key))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn adjacency(&self) -> Vec<Vec<(Point, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for row in adj.iter_mut() {
            row.sort_by_key(|&(v, _)| v);
        }
        adj
    }
}

/// Small sets of the covering construction.
///
/// For each orbit `q`, take the largest candidate radius `r` such that every
/// component `C` of `p⁻¹(K(q, r))` is elementary (`p` injective on `C`) and
/// intrinsically isometric (`d(pu, pv)` equals the shortest path from `u`
/// to `v` inside `C`, steps costing `d(pa, pb)`). With an enlargement
/// factor `E`, the components at radius `E r` must be elementary as well.
pub fn small_sets(gs: &SampledGSpace, q: &Quotient, opts: CoverOptions) -> Vec<Vec<Point>> {
    let n = gs.len();
    if opts.singleton {
        return (0..n).map(|x| vec![x]).collect();
    }
    let nb = gs.space().neighbors();
    let elementary = |c: &[Point]| {
        let mut seen = vec![false; q.n_orbits()];
        c.iter().all(|&z| !std::mem::replace(&mut seen[q.orbit_of(z)], true))
    };
    let isometric = |c: &[Point]| {
        let local: Vec<Vec<(usize, f64)>> = c
            .iter()
            .map(|&a| {
                nb[a]
                    .iter()
                    .filter_map(|b| c.binary_search(b).ok().map(|j| (j, q.dp(a, *b))))
                    .collect()
            })
            .collect();
        (0..c.len()).all(|i| {
            let dist = dijkstra(&local, i);
            (0..c.len()).all(|j| (dist[j] - q.dp(c[i], c[j])).abs() <= crate::metric::DEFAULT_TOLERANCE)
        })
    };
    let mut sets = Vec::new();
    for orbit in 0..q.n_orbits() {
        let values = distinct_sorted(q.table()[orbit].iter().copied().chain([0.0]), crate::metric::EXACT_TOLERANCE);
        let top = values.last().copied().unwrap_or(0.0);
        let mut radii = vec![if top > 0.0 { 2.0 * top } else { 1.0 }];
        radii.extend(values.windows(2).rev().map(|w| 0.5 * (w[0] + w[1])));
        let comps_at = |r: f64| {
            let inside = q.ball(orbit, r);
            components_within(nb, |z| inside[q.orbit_of(z)])
        };
        let chosen = radii.iter().find_map(|&r| {
            let comps = comps_at(r);
            if !comps.iter().all(|c| elementary(c) && isometric(c)) {
                return None;
            }
            if let Some(e) = opts.enlargement_factor {
                if !comps_at(e * r).iter().all(|c| elementary(c)) {
                    return None;
                }
            }
            Some(comps)
        });
        match chosen {
            Some(comps) => sets.extend(comps),
            None => sets.extend(q.members(orbit).iter().map(|&x| vec![x])),
        }
    }
    sets.sort();
    sets.dedup();
    sets
}

/// Pairs joined by a simple path through pairwise distinct orbits, i.e.
/// pairs lying in a common connected set on which `p` is injective.
pub fn naive_pairs(gs: &SampledGSpace, q: &Quotient) -> Vec<(Point, Point)> {
    let n = gs.len();
    let nb = gs.space().neighbors();
    let per_source: Vec<Vec<Point>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut reach = vec![false; n];
            let mut used = vec![false; q.n_orbits()];
            let mut on_path = vec![false; n];
            fn dfs(u: Point, nb: &[Vec<Point>], q: &Quotient, used: &mut [bool], on_path: &mut [bool], reach: &mut [bool]) {
                reach[u] = true;
                for &v in &nb[u] {
                    let o = q.orbit_of(v);
                    if !on_path[v] && !used[o] {
                        used[o] = true;
                        on_path[v] = true;
                        dfs(v, nb, q, used, on_path, reach);
                        used[o] = false;
                        on_path[v] = false;
                    }
                }
            }
            used[q.orbit_of(s)] = true;
            on_path[s] = true;
            dfs(s, nb, q, &mut used, &mut on_path, &mut reach);
            (s + 1..n).filter(|&t| reach[t]).collect()
        })
        .collect();
    per_source
        .into_iter()
        .enumerate()
        .flat_map(|(s, ts)| ts.into_iter().map(move |t| (s, t)))
        .collect()
}

/// Build the allowability graph for `mode`.
pub fn build_allowability_graph(
    gs: &SampledGSpace,
    q: &Quotient,
    family: &SliceFamily,
    d_o: Option<&OrbitalMetric>,
    mode: LiftMode,
    cover: CoverOptions,
) -> Result<AllowabilityGraph, LiftError> {
    let n = gs.len();
    if let Some(e) = cover.enlargement_factor {
        if !(e >= 1.0 && e.is_finite()) {
            return Err(LiftError::InvalidEnlargement(e));
        }
    }
    let mut edges = Vec::new();
    let sets = match mode {
        LiftMode::General => {
            let d_o = d_o.ok_or(LiftError::NoOrbitalMetric)?;
            for v in 0..n {
                for &u in family.slice(v) {
                    edges.push(Edge {
                        u,
                        v,
                        weight: q.dp(u, v) + d_o.d(u, v),
                        kind: EdgeKind::Slice,
                    });
                }
            }
            for g in gs.group().elements() {
                for u in 0..n {
                    if let Some(v) = gs.act(g, u) {
                        edges.push(Edge {
                            u,
                            v,
                            weight: q.dp(u, v) + d_o.d(u, v),
                            kind: EdgeKind::Orbit,
                        });
                    }
                }
            }
            Vec::new()
        }
        LiftMode::Cover => {
            let sets = small_sets(gs, q, cover);
            for s in &sets {
                for (i, &u) in s.iter().enumerate() {
                    for &v in &s[i + 1..] {
                        edges.push(Edge {
                            u,
                            v,
                            weight: q.dp(u, v),
                            kind: EdgeKind::Elementary,
                        });
                    }
                }
            }
            sets
        }
        LiftMode::Naive => {
            for (u, v) in naive_pairs(gs, q) {
                edges.push(Edge {
                    u,
                    v,
                    weight: q.dp(u, v),
                    kind: EdgeKind::Elementary,
                });
            }
            Vec::new()
        }
    };
    Ok(AllowabilityGraph::from_edges(n, mode, edges, sets))
}

/// `ρ` with the graph it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMetric {
    rho: Vec<Vec<f64>>,
    mode: LiftMode,
    adjacency: Vec<Vec<(Point, f64)>>,
}

impl LiftedMetric {
    /// Wrap a table without a graph (witnesses are unavailable).
    pub fn from_table(rho: Vec<Vec<f64>>, mode: LiftMode) -> Self {
        let n = rho.len();
        LiftedMetric {
            rho,
            mode,
            adjacency: vec![Vec::new(); n],
        }
    }

    #[inline]
    pub fn rho(&self, x: Point, y: Point) -> f64 {
        self.rho[x][y]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.rho
    }

    pub fn mode(&self) -> LiftMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Points grouped by finite `ρ`, ordered by least member.
    pub fn components(&self) -> Vec<Vec<Point>> {
        let n = self.rho.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for x in 0..n {
            if seen[x] {
                continue;
            }
            let c: Vec<Point> = (0..n).filter(|&y| self.rho[x][y].is_finite()).collect();
            for &y in &c {
                seen[y] = true;
            }
            out.push(c);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.rho.iter().flatten().all(|v| v.is_finite())
    }

    /// One optimal chain from `x` to `y`: at each step the smallest
    /// neighbour that stays on a shortest path. `None` when unreachable.
    pub fn witness(&self, x: Point, y: Point) -> Option<Vec<Point>> {
        let total = self.rho[x][y];
        if !total.is_finite() {
            return None;
        }
        let tol = 1e-12 * total.max(1.0);
        let mut path = vec![x];
        let mut u = x;
        let mut seen = vec![false; self.rho.len()];
        seen[x] = true;
        while u != y {
            let next = self.adjacency[u].iter().find(|&&(w, c)| {
                !seen[w] && (self.rho[x][u] + c + self.rho[w][y] - total).abs() <= tol
            })?;
            u = next.0;
            seen[u] = true;
            path.push(u);
        }
        Some(path)
    }
}

/// All-pairs shortest paths over the allowability graph (parallel over
/// sources; each row is computed independently, then the table is
/// symmetrised by taking the smaller of the two directions).
pub fn lift_metric(graph: &AllowabilityGraph) -> LiftedMetric {
    let adjacency = graph.adjacency();
    let n = graph.len();
    let mut rho: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adjacency, s)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rho[i][j].min(rho[j][i]);
            rho[i][j] = v;
            rho[j][i] = v;
        }
    }
    LiftedMetric {
        rho,
        mode: graph.mode(),
        adjacency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbital::{build_orbital_metric, GroupMetric};
    use crate::quotient::{compute_orbits, quotient_metric, QuotientMetricMode};
    use crate::scenario;
    use crate::slices::{build_slice_family, SliceOptions};
    use std::f64::consts::PI;

    fn lift(gs: &SampledGSpace, mode: LiftMode) -> (AllowabilityGraph, LiftedMetric) {
        let q = quotient_metric(gs, compute_orbits(gs), &QuotientMetricMode::Graph).unwrap();
        let fam = build_slice_family(gs, &q, SliceOptions::default());
        let dg = GroupMetric::discrete(gs.group(), 1.0).unwrap();
        let d_o = build_orbital_metric(gs, &q, &fam, &dg).unwrap();
        let g = build_allowability_graph(gs, &q, &fam, Some(&d_o), mode, CoverOptions::default()).unwrap();
        let l = lift_metric(&g);
        (g, l)
    }

    #[test]
    fn circle_cover_values() {
        let gs = scenario::circle(12, 3).unwrap();
        let (g, l) = lift(&gs, LiftMode::Cover);
        assert_eq!(g.small_sets().len(), 12);
        assert!(g.small_sets().iter().all(|s| s.len() == 3));
        assert!((l.rho(0, 1) - PI / 6.0).abs() < 1e-12);
        assert!((l.rho(0, 4) - 2.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(l.witness(0, 4).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn circle_naive_collapses() {
        let gs = scenario::circle(12, 3).unwrap();
        let (g, l) = lift(&gs, LiftMode::Naive);
        assert!(g.edge(0, 3).is_some());
        assert!((l.rho(0, 4) - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_general_edges() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let (g, l) = lift(&gs, LiftMode::General);
        // indices 1, 2, 3 are t = -1, 0, 1
        let e = g.edge(1, 3).unwrap();
        assert_eq!((e.kind, e.weight), (EdgeKind::Orbit, 1.0));
        let e = g.edge(2, 3).unwrap();
        assert_eq!((e.kind, e.weight), (EdgeKind::Slice, 1.0));
        assert_eq!(l.rho(1, 3), 1.0);
        assert!(l.is_connected());
    }

    #[test]
    fn trivial_group_has_no_orbit_edges() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let gs = SampledGSpace::trivial(gs.space().clone());
        let (g, _) = lift(&gs, LiftMode::General);
        assert!(g.edges().iter().all(|e| e.kind == EdgeKind::Slice));
    }

    #[test]
    fn singleton_small_sets_disconnect() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let fam = SliceFamily::singletons(&q);
        let opts = CoverOptions {
            singleton: true,
            ..CoverOptions::default()
        };
        let g = build_allowability_graph(&gs, &q, &fam, None, LiftMode::Cover, opts).unwrap();
        assert!(g.edges().is_empty());
        let l = lift_metric(&g);
        assert!(!l.is_connected());
        assert_eq!(l.components().len(), 5);
    }

    #[test]
    fn general_mode_needs_orbital_metric() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let fam = SliceFamily::singletons(&q);
        let err = build_allowability_graph(&gs, &q, &fam, None, LiftMode::General, CoverOptions::default()).unwrap_err();
        assert_eq!(err, LiftError::NoOrbitalMetric);
    }

    #[test]
    fn enlargement_factor_shrinks_small_sets() {
        let gs = scenario::circle(48, 3).unwrap();
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let direct = small_sets(&gs, &q, CoverOptions::default());
        let enlarged = small_sets(
            &gs,
            &q,
            CoverOptions {
                enlargement_factor: Some(4.0),
                singleton: false,
            },
        );
        assert!(direct.iter().all(|s| s.len() == 9));
        assert!(enlarged.iter().all(|s| s.len() < 9));
    }

    #[test]
    fn witnesses_are_simple_and_tight() {
        let gs = scenario::disk(3).unwrap();
        let (g, l) = lift(&gs, LiftMode::General);
        for x in 0..9 {
            for y in 0..9 {
                let w = l.witness(x, y).unwrap();
                let mut sorted = w.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), w.len());
                let cost: f64 = w.windows(2).map(|p| g.edge(p[0], p[1]).unwrap().weight).sum();
                assert!((cost - l.rho(x, y)).abs() < 1e-12);
            }
        }
    }
}
