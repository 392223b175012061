//! Orbits, the projection `p : X -> X/G`, and metrics on the orbit space.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::floyd_warshall;
use crate::gspace::{Elem, Point, SampledGSpace};
use crate::metric::{check_metric, MetricCheck, MetricViolation, DEFAULT_TOLERANCE};

/// Index of an orbit (a point of the quotient).
pub type Orbit = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuotientError {
    #[error("element {g} is not an isometry of the base metric at ({x},{y})")]
    NotIsometricAction { g: Elem, x: Point, y: Point },
    #[error("quotient adjacency graph is disconnected (orbit {orbit} unreachable from orbit 0)")]
    DisconnectedQuotient { orbit: Orbit },
    #[error("quotient distance table is not a metric: {0}")]
    NotAMetric(MetricViolation),
    #[error("explicit table has {got} rows, expected {expected} orbits")]
    WrongSize { expected: usize, got: usize },
}

/// How to put a metric on the orbit space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum QuotientMetricMode {
    /// Shortest paths on the quotient adjacency, each edge weighted by the
    /// closest adjacent lifts.
    #[default]
    Graph,
    /// `d(px, py) = min { rho0(a, b) : a in Gx, b in Gy }`; requires every
    /// total element to be an isometry.
    Isometric,
    /// A caller-supplied table indexed by orbit.
    Explicit { table: Vec<Vec<f64>> },
}

/// Orbit partition of a G-space, without a metric yet.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbits {
    orbit_of: Vec<Orbit>,
    members: Vec<Vec<Point>>,
    stabilizer_of: Vec<Vec<Elem>>,
    adjacency: Vec<BTreeSet<Orbit>>,
}

impl Orbits {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Partition points into orbits.
///
/// Two points share an orbit when some chain of defined partial maps joins
/// them; for total actions this is the usual `Gx`. Orbits are numbered by
/// their least point, which is also the representative.
pub fn compute_orbits(gs: &SampledGSpace) -> Orbits {
    let n = gs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in gs.group().elements() {
        for x in 0..n {
            if let Some(y) = gs.act(g, x) {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    // keep the smaller index as root
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut orbit_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<Point>> = Vec::new();
    let mut root_to_orbit = vec![usize::MAX; n];
    for x in 0..n {
        let r = find(&mut parent, x);
        if root_to_orbit[r] == usize::MAX {
            root_to_orbit[r] = members.len();
            members.push(Vec::new());
        }
        orbit_of[x] = root_to_orbit[r];
        members[orbit_of[x]].push(x);
    }
    let mut adjacency = vec![BTreeSet::new(); members.len()];
    for (u, v) in gs.space().edges() {
        let (a, b) = (orbit_of[u], orbit_of[v]);
        if a != b {
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
    }
    Orbits {
        orbit_of,
        members,
        stabilizer_of: gs.stabilizers().to_vec(),
        adjacency,
    }
}

/// The orbit space with its projection and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Quotient {
    orbits: Orbits,
    d: Vec<Vec<f64>>,
}

impl Quotient {
    pub fn n_orbits(&self) -> usize {
        self.orbits.len()
    }

    /// The projection `p`.
    #[inline]
    pub fn orbit_of(&self, x: Point) -> Orbit {
        self.orbits.orbit_of[x]
    }

    pub fn projection(&self) -> &[Orbit] {
        &self.orbits.orbit_of
    }

    /// Least point of the orbit.
    pub fn representative(&self, q: Orbit) -> Point {
        self.orbits.members[q][0]
    }

    pub fn members(&self, q: Orbit) -> &[Point] {
        &self.orbits.members[q]
    }

    pub fn stabilizer_of(&self, x: Point) -> &[Elem] {
        &self.orbits.stabilizer_of[x]
    }

    /// Quotient distance between orbits.
    #[inline]
    pub fn d(&self, a: Orbit, b: Orbit) -> f64 {
        self.d[a][b]
    }

    /// Quotient distance between the images of two points, `d(px, py)`.
    #[inline]
    pub fn dp(&self, x: Point, y: Point) -> f64 {
        self.d[self.orbit_of(x)][self.orbit_of(y)]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn adjacency(&self) -> &[BTreeSet<Orbit>] {
        &self.orbits.adjacency
    }

    /// Orbits in the open ball `K_d(center, radius)`.
    pub fn ball(&self, center: Orbit, radius: f64) -> Vec<bool> {
        self.d[center].iter().map(|&v| v < radius).collect()
    }

    /// Diameter of a set of orbits.
    pub fn diameter(&self, orbits: impl IntoIterator<Item = Orbit> + Clone) -> f64 {
        let mut worst = 0.0f64;
        for a in orbits.clone() {
            for b in orbits.clone() {
                worst = worst.max(self.d[a][b]);
            }
        }
        worst
    }
}

/// Attach a metric to the orbit space.
pub fn quotient_metric(gs: &SampledGSpace, orbits: Orbits, mode: &QuotientMetricMode) -> Result<Quotient, QuotientError> {
    let k = orbits.len();
    let d = match mode {
        QuotientMetricMode::Isometric => {
            let n = gs.len();
            for g in gs.total_elements() {
                for x in 0..n {
                    for y in 0..n {
                        let (gx, gy) = (gs.act(g, x).unwrap(), gs.act(g, y).unwrap());
                        if (gs.space().dist(gx, gy) - gs.space().dist(x, y)).abs() > DEFAULT_TOLERANCE {
                            return Err(QuotientError::NotIsometricAction { g, x, y });
                        }
                    }
                }
            }
            let mut d = vec![vec![0.0; k]; k];
            for a in 0..k {
                for b in 0..k {
                    if a == b {
                        continue;
                    }
                    let mut best = f64::INFINITY;
                    for &x in &orbits.members[a] {
                        for &y in &orbits.members[b] {
                            best = best.min(gs.space().dist(x, y));
                        }
                    }
                    d[a][b] = best;
                }
            }
            d
        }
        QuotientMetricMode::Graph => {
            let mut w = vec![vec![f64::INFINITY; k]; k];
            for (u, v) in gs.space().edges() {
                let (a, b) = (orbits.orbit_of[u], orbits.orbit_of[v]);
                if a != b {
                    let c = gs.space().dist(u, v);
                    if c < w[a][b] {
                        w[a][b] = c;
                        w[b][a] = c;
                    }
                }
            }
            let d = floyd_warshall(&w);
            if let Some(orbit) = (0..k).find(|&q| d[0][q].is_infinite()) {
                return Err(QuotientError::DisconnectedQuotient { orbit });
            }
            d
        }
        QuotientMetricMode::Explicit { table } => {
            if table.len() != k {
                return Err(QuotientError::WrongSize {
                    expected: k,
                    got: table.len(),
                });
            }
            table.clone()
        }
    };
    check_metric(&d, MetricCheck::default()).map_err(QuotientError::NotAMetric)?;
    Ok(Quotient { orbits, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;
    use std::f64::consts::PI;

    #[test]
    fn trivial_group_gives_singleton_orbits() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let trivial = SampledGSpace::trivial(gs.space().clone());
        let o = compute_orbits(&trivial);
        assert_eq!(o.len(), 5);
    }

    #[test]
    fn reflection_orbits_and_stabilizers() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let o = compute_orbits(&gs);
        // indices 0..4 are t = -2..2
        assert_eq!(o.members, vec![vec![0, 4], vec![1, 3], vec![2]]);
        assert_eq!(o.stabilizer_of[2], vec![0, 1]);
        assert_eq!(o.stabilizer_of[3], vec![0]);
    }

    #[test]
    fn circle_isometric_quotient() {
        let gs = scenario::circle(12, 3).unwrap();
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Isometric).unwrap();
        assert_eq!(q.n_orbits(), 4);
        assert!((q.dp(0, 1) - PI / 6.0).abs() < 1e-12);
        assert!((q.dp(0, 2) - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn graph_mode_matches_isometric_on_circle() {
        let gs = scenario::circle(12, 3).unwrap();
        let iso = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Isometric).unwrap();
        let graph = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((iso.d(a, b) - graph.d(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_table_must_be_metric() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let err = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Explicit { table: bad }).unwrap_err();
        assert!(matches!(err, QuotientError::NotAMetric(MetricViolation::Triangle { .. })));
    }

    #[test]
    fn isometric_mode_rejects_non_isometries() {
        // reflection on an unevenly spaced line
        let pts = [-2.0, -1.0, 0.0, 1.5, 2.0];
        let metric = pts.iter().map(|a| pts.iter().map(|b| f64::abs(a - b)).collect()).collect();
        let sp = crate::gspace::SampledSpace::new(metric, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let act = vec![(0..5).map(Some).collect(), (0..5).map(|x| Some(4 - x)).collect()];
        let gs = SampledGSpace::bind(sp, crate::gspace::FiniteGroup::cyclic(2), act).unwrap();
        let err = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Isometric).unwrap_err();
        assert!(matches!(err, QuotientError::NotIsometricAction { g: 1, .. }));
    }

    #[test]
    fn disconnected_quotient_in_graph_mode() {
        let metric = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let sp = crate::gspace::SampledSpace::new(metric, &[]).unwrap();
        let gs = SampledGSpace::trivial(sp);
        let err = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap_err();
        assert_eq!(err, QuotientError::DisconnectedQuotient { orbit: 1 });
    }
}
