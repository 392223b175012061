//! Group metrics, coset pseudometrics, and the orbital metric `d_O` glued
//! from per-chart coset metrics by a partition of unity on the quotient.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gspace::{Elem, FiniteGroup, Point, SampledGSpace};
use crate::metric::{check_metric, realized_grid, MetricCheck, MetricViolation, EXACT_TOLERANCE};
use crate::quotient::{Orbit, Quotient};
use crate::slices::{subslice_ball, SliceFamily};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitalError {
    #[error("discrete metric scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("word metric needs a generating set")]
    NoGenerators,
    #[error("generating set is not closed under inverses (inverse of {g} missing)")]
    GeneratorsNotInverseClosed { g: Elem },
    #[error("group metric table is not a metric: {0}")]
    NotAMetric(MetricViolation),
    #[error("group metric is not left invariant: d({k}*{g}, {k}*{h}) != d({g}, {h})")]
    NotLeftInvariant { k: Elem, g: Elem, h: Elem },
    #[error("group metric table has {got} rows, group has order {expected}")]
    WrongSize { expected: usize, got: usize },
    #[error("element list {0:?} is not a subgroup")]
    NotASubgroup(Vec<Elem>),
    #[error("stabilizer of point {x} is not normal and the group metric is not right invariant under it")]
    IncompatibleGroupMetric { x: Point },
    #[error("orbit {orbit} meets no chart")]
    UncoveredOrbit { orbit: Orbit },
}

/// How a group metric was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GroupMetricKind {
    Discrete { scale: f64 },
    Word,
    Explicit,
}

/// A left-invariant metric on a finite group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMetric {
    group: FiniteGroup,
    table: Vec<Vec<f64>>,
    kind: GroupMetricKind,
    right_invariant: BTreeMap<Vec<Elem>, bool>,
}

impl GroupMetric {
    /// `d(g, h) = scale` for `g != h`; bi-invariant.
    pub fn discrete(group: &FiniteGroup, scale: f64) -> Result<Self, OrbitalError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(OrbitalError::InvalidScale(scale));
        }
        let n = group.order();
        let table = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { scale }).collect()).collect();
        Ok(Self::unchecked(group, table, GroupMetricKind::Discrete { scale }))
    }

    /// Path metric of the Cayley graph on the group's generating set.
    pub fn word(group: &FiniteGroup) -> Result<Self, OrbitalError> {
        let gens = group.generators().ok_or(OrbitalError::NoGenerators)?;
        if let Some(&g) = gens.iter().find(|&&g| !gens.contains(&group.inv(g))) {
            return Err(OrbitalError::GeneratorsNotInverseClosed { g });
        }
        let n = group.order();
        // left invariant, so one BFS from the identity suffices
        let mut len = vec![usize::MAX; n];
        len[group.identity()] = 0;
        let mut queue = VecDeque::from([group.identity()]);
        while let Some(g) = queue.pop_front() {
            for &s in gens {
                let h = group.mul(g, s);
                if len[h] == usize::MAX {
                    len[h] = len[g] + 1;
                    queue.push_back(h);
                }
            }
        }
        let table = (0..n)
            .map(|g| (0..n).map(|h| len[group.mul(group.inv(g), h)] as f64).collect())
            .collect();
        Ok(Self::unchecked(group, table, GroupMetricKind::Word))
    }

    /// Validate a caller-supplied table: metric axioms and left invariance.
    pub fn explicit(group: &FiniteGroup, table: Vec<Vec<f64>>) -> Result<Self, OrbitalError> {
        let n = group.order();
        if table.len() != n {
            return Err(OrbitalError::WrongSize {
                expected: n,
                got: table.len(),
            });
        }
        check_metric(&table, MetricCheck::default()).map_err(OrbitalError::NotAMetric)?;
        for k in 0..n {
            for g in 0..n {
                for h in 0..n {
                    let lhs = table[group.mul(k, g)][group.mul(k, h)];
                    if (lhs - table[g][h]).abs() > EXACT_TOLERANCE {
                        return Err(OrbitalError::NotLeftInvariant { k, g, h });
                    }
                }
            }
        }
        Ok(Self::unchecked(group, table, GroupMetricKind::Explicit))
    }

    fn unchecked(group: &FiniteGroup, table: Vec<Vec<f64>>, kind: GroupMetricKind) -> Self {
        GroupMetric {
            group: group.clone(),
            table,
            kind,
            right_invariant: BTreeMap::new(),
        }
    }

    /// Compute and remember right-invariance flags for the given subgroups.
    pub fn flag_subgroups<'a>(mut self, subgroups: impl IntoIterator<Item = &'a [Elem]>) -> Self {
        for k in subgroups {
            let flag = self.is_right_invariant(k);
            self.right_invariant.insert(k.to_vec(), flag);
        }
        self
    }

    /// `d(gu, hu) = d(g, h)` for all `g, h` and `u ∈ k` (exhaustive).
    pub fn is_right_invariant(&self, k: &[Elem]) -> bool {
        let n = self.group.order();
        k.iter().all(|&u| {
            (0..n).all(|g| {
                (0..n).all(|h| {
                    (self.table[self.group.mul(g, u)][self.group.mul(h, u)] - self.table[g][h]).abs() <= EXACT_TOLERANCE
                })
            })
        })
    }

    /// Stored right-invariance flag, if computed.
    pub fn right_invariant_flag(&self, k: &[Elem]) -> Option<bool> {
        self.right_invariant.get(k).copied()
    }

    pub fn right_invariance_flags(&self) -> &BTreeMap<Vec<Elem>, bool> {
        &self.right_invariant
    }

    #[inline]
    pub fn d(&self, g: Elem, h: Elem) -> f64 {
        self.table[g][h]
    }

    /// `d_G(g, e)`.
    pub fn norm(&self, g: Elem) -> f64 {
        self.table[g][self.group.identity()]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn kind(&self) -> &GroupMetricKind {
        &self.kind
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// `min { d(g1 u, g2 v) : u, v ∈ k }`.
    pub fn coset_distance_full(&self, k: &[Elem], g1: Elem, g2: Elem) -> f64 {
        let mut best = f64::INFINITY;
        for &u in k {
            let a = self.group.mul(g1, u);
            for &v in k {
                best = best.min(self.table[a][self.group.mul(g2, v)]);
            }
        }
        best
    }

    /// `min { d(g1, g2 u) : u ∈ k }`; equals the full form when `d` is
    /// right `k`-invariant.
    pub fn coset_distance_fast(&self, k: &[Elem], g1: Elem, g2: Elem) -> f64 {
        k.iter().map(|&u| self.table[g1][self.group.mul(g2, u)]).fold(f64::INFINITY, f64::min)
    }

    /// Distance between the cosets `g1 K` and `g2 K`.
    pub fn coset_distance(&self, k: &[Elem], g1: Elem, g2: Elem) -> Result<f64, OrbitalError> {
        if !self.group.is_subgroup(k) {
            return Err(OrbitalError::NotASubgroup(k.to_vec()));
        }
        Ok(self.coset_distance_unchecked(k, g1, g2))
    }

    fn coset_distance_unchecked(&self, k: &[Elem], g1: Elem, g2: Elem) -> f64 {
        if self.right_invariant_flag(k) == Some(true) {
            let fast = self.coset_distance_fast(k, g1, g2);
            debug_assert_eq!(fast, self.coset_distance_full(k, g1, g2));
            fast
        } else {
            self.coset_distance_full(k, g1, g2)
        }
    }
}

/// How one orbit is identified with `G/G_{y0}` inside one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartOrbit {
    pub base: Point,
    /// `(z, t)` with `t · base = z`, sorted by `z`.
    pub transporter: Vec<(Point, Elem)>,
}

impl ChartOrbit {
    fn element(&self, z: Point) -> Elem {
        let i = self.transporter.binary_search_by_key(&z, |&(p, _)| p).expect("point in orbit");
        self.transporter[i].1
    }
}

/// `d_O` with its charts and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalMetric {
    values: Vec<Vec<f64>>,
    /// `weights[q][alpha]`, summing to 1 over `alpha`.
    weights: Vec<Vec<f64>>,
    centres: Vec<Point>,
    /// `charts[alpha][q]`, present when orbit `q` meets chart `alpha`.
    charts: Vec<Vec<Option<ChartOrbit>>>,
    stabilizers: Vec<Vec<Elem>>,
}

impl OrbitalMetric {
    #[inline]
    pub fn d(&self, x: Point, y: Point) -> f64 {
        self.values[x][y]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Partition-of-unity weight `chi_alpha(q)`.
    pub fn weight(&self, alpha: usize, q: Orbit) -> f64 {
        self.weights[q][alpha]
    }

    pub fn n_charts(&self) -> usize {
        self.centres.len()
    }

    pub fn centre(&self, alpha: usize) -> Point {
        self.centres[alpha]
    }

    pub fn chart_orbit(&self, alpha: usize, q: Orbit) -> Option<&ChartOrbit> {
        self.charts[alpha][q].as_ref()
    }
}

/// Chart metric `d_alpha(a, b)` for points of an orbit meeting the chart,
/// using `chart`'s base point.
pub fn chart_distance(dg: &GroupMetric, stabilizers: &[Vec<Elem>], chart: &ChartOrbit, a: Point, b: Point) -> f64 {
    dg.coset_distance_unchecked(&stabilizers[chart.base], chart.element(a), chart.element(b))
}

/// Identify the orbit through `base` with `G/G_base` by transporting
/// `base` along defined maps; elements are tried in ascending order.
pub fn transporter(gs: &SampledGSpace, base: Point) -> ChartOrbit {
    let group = gs.group();
    let mut t: BTreeMap<Point, Elem> = BTreeMap::from([(base, group.identity())]);
    let mut queue = VecDeque::from([base]);
    while let Some(z) = queue.pop_front() {
        let tz = t[&z];
        for g in group.elements() {
            if let Some(w) = gs.act(g, z) {
                if let std::collections::btree_map::Entry::Vacant(e) = t.entry(w) {
                    e.insert(group.mul(g, tz));
                    queue.push_back(w);
                }
            }
        }
    }
    ChartOrbit {
        base,
        transporter: t.into_iter().collect(),
    }
}

/// Glue the orbital metric.
///
/// Charts are the slices at orbit representatives; chart `alpha` has tent
/// weight `max(0, r_alpha - d(q, alpha))` on the orbits it meets and zero
/// elsewhere, normalised over charts.
pub fn build_orbital_metric(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, dg: &GroupMetric) -> Result<OrbitalMetric, OrbitalError> {
    let n = gs.len();
    let k = q.n_orbits();
    let group = gs.group();
    for x in 0..n {
        let stab = gs.stabilizer(x);
        let ok = match dg.right_invariant_flag(stab) {
            Some(f) => f,
            None => dg.is_right_invariant(stab),
        };
        if !ok && !group.is_normal(stab) {
            return Err(OrbitalError::IncompatibleGroupMetric { x });
        }
    }
    let centres: Vec<Point> = (0..k).map(|o| q.representative(o)).collect();
    let mut charts = vec![vec![None; k]; k];
    let mut raw = vec![vec![0.0; k]; k];
    for (alpha, &c) in centres.iter().enumerate() {
        let slice = family.slice(c);
        for orbit in 0..k {
            if let Some(&base) = slice.iter().find(|&&z| q.orbit_of(z) == orbit) {
                charts[alpha][orbit] = Some(transporter(gs, base));
                raw[orbit][alpha] = (family.radius(alpha) - q.d(orbit, alpha)).max(0.0);
            }
        }
    }
    let mut weights = raw;
    for (orbit, row) in weights.iter_mut().enumerate() {
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(OrbitalError::UncoveredOrbit { orbit });
        }
        for w in row.iter_mut() {
            *w /= total;
        }
    }
    let stabilizers = gs.stabilizers().to_vec();
    let values: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let orbit = q.orbit_of(x);
            (0..n)
                .map(|y| {
                    if q.orbit_of(y) != orbit || x == y {
                        return 0.0;
                    }
                    let mut sum = 0.0;
                    for alpha in 0..k {
                        let w = weights[orbit][alpha];
                        if w > 0.0 {
                            let chart = charts[alpha][orbit].as_ref().expect("weighted chart meets orbit");
                            sum += w * chart_distance(dg, &stabilizers, chart, x, y);
                        }
                    }
                    sum
                })
                .collect()
        })
        .collect();
    Ok(OrbitalMetric {
        values,
        weights,
        centres,
        charts,
        stabilizers,
    })
}

/// Outcome of one property over all its quantifier instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub instances: usize,
    pub failures: Vec<String>,
    pub max_residual: f64,
    /// First recorded witness, for the report.
    pub witness: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub results: Vec<PropertyResult>,
}

impl PropertyReport {
    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(PropertyResult::passed)
    }
}

/// Smallest `delta` on the grid witnessing Property A at `(x, eps)`:
/// `d_O(y, gy) < eps` for `y ∈ S_x(delta)` and `d_G(g, e) < delta`.
#[allow(clippy::too_many_arguments)]
pub fn property_a_witness(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, d_o: &OrbitalMetric, dg: &GroupMetric, x: Point, eps: f64, deltas: &[f64]) -> Option<f64> {
    deltas.iter().copied().find(|&delta| {
        let ys = subslice_ball(family, q, x, delta).expect("delta > 0");
        gs.group().elements().filter(|&g| dg.norm(g) < delta).all(|g| {
            ys.iter().all(|&y| match gs.act(g, y) {
                Some(gy) => d_o.d(y, gy) < eps,
                None => true,
            })
        })
    })
}

/// Smallest `delta` on the grid witnessing Property B at `x`.
pub fn property_b_witness(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, d_o: &OrbitalMetric, x: Point, deltas: &[f64], tol: f64) -> Option<f64> {
    let group = gs.group();
    deltas.iter().copied().find(|&delta| {
        let ys = subslice_ball(family, q, x, delta).expect("delta > 0");
        ys.iter().all(|&y| {
            group.elements().all(|g1| {
                group.elements().all(|g2| {
                    match (gs.act(g1, x), gs.act(g2, x), gs.act(g1, y), gs.act(g2, y)) {
                        (Some(a), Some(b), Some(c), Some(d)) => d_o.d(a, b) <= d_o.d(c, d) + tol,
                        _ => true,
                    }
                })
            })
        })
    })
}

/// Smallest `eps` on the grid witnessing Property C at `(x, delta)`.
pub fn property_c_witness(gs: &SampledGSpace, d_o: &OrbitalMetric, dg: &GroupMetric, x: Point, delta: f64, epss: &[f64]) -> Option<f64> {
    let group = gs.group();
    let stab = gs.stabilizer(x);
    let close = |g: Elem| stab.iter().any(|&u| dg.norm(group.mul(g, u)) < delta);
    epss.iter().copied().find(|&eps| {
        group.elements().all(|g| match gs.act(g, x) {
            Some(gx) if d_o.d(x, gx) < eps => close(g),
            _ => true,
        })
    })
}

/// Property A, B, C existence searches on realized-value grids, the chart
/// inequalities `d(g1 x, g2 x) <= d(g1 y, g2 y) <= d_G(g1, g2)` and
/// `d(y, g y) <= d_G(g0, g g0)` for `y ∈ g0 S`, the weight normalisation,
/// and metric axioms of `d_O` on each orbit.
///
/// `region` restricts the points `x` that are checked.
pub fn verify_orbital_properties(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, d_o: &OrbitalMetric, dg: &GroupMetric, region: Option<&[bool]>, tol: f64) -> PropertyReport {
    let n = gs.len();
    let group = gs.group();
    let points: Vec<Point> = (0..n).filter(|&x| region.is_none_or(|r| r[x])).collect();
    let eps_grid = realized_grid(d_o.table().iter().flatten().copied(), EXACT_TOLERANCE);
    let delta_grid = realized_grid(
        q.table().iter().flatten().copied().chain(group.elements().map(|g| dg.norm(g))),
        EXACT_TOLERANCE,
    );

    let mut results = Vec::new();

    let per_x: Vec<(Vec<String>, Option<String>)> = points
        .par_iter()
        .map(|&x| {
            let mut fails = Vec::new();
            let mut witness = None;
            for &eps in &eps_grid {
                match property_a_witness(gs, q, family, d_o, dg, x, eps, &delta_grid) {
                    Some(delta) => {
                        witness.get_or_insert_with(|| format!("x={x} eps={eps:.9} delta={delta:.9}"));
                    }
                    None => fails.push(format!("x={x} eps={eps:.9}: no delta")),
                }
            }
            (fails, witness)
        })
        .collect();
    results.push(collect("property-a", points.len() * eps_grid.len(), per_x, 0.0));

    let per_x: Vec<(Vec<String>, Option<String>)> = points
        .par_iter()
        .map(|&x| match property_b_witness(gs, q, family, d_o, x, &delta_grid, tol) {
            Some(delta) => (vec![], Some(format!("x={x} delta={delta:.9}"))),
            None => (vec![format!("x={x}: no delta")], None),
        })
        .collect();
    results.push(collect("property-b", points.len(), per_x, 0.0));

    let per_x: Vec<(Vec<String>, Option<String>)> = points
        .par_iter()
        .map(|&x| {
            let mut fails = Vec::new();
            let mut witness = None;
            for &delta in &delta_grid {
                match property_c_witness(gs, d_o, dg, x, delta, &eps_grid) {
                    Some(eps) => {
                        witness.get_or_insert_with(|| format!("x={x} delta={delta:.9} eps={eps:.9}"));
                    }
                    None => fails.push(format!("x={x} delta={delta:.9}: no eps")),
                }
            }
            (fails, witness)
        })
        .collect();
    results.push(collect("property-c", points.len() * delta_grid.len(), per_x, 0.0));

    // chart inequalities
    let stabs = gs.stabilizers();
    let mut left = (0usize, Vec::new(), 0.0f64);
    let mut right = (0usize, Vec::new(), 0.0f64);
    let mut translate = (0usize, Vec::new(), 0.0f64);
    for alpha in 0..d_o.n_charts() {
        let c = d_o.centre(alpha);
        let in_region = region.is_none_or(|r| r[c]);
        if !in_region {
            continue;
        }
        let co = q.orbit_of(c);
        let centre_chart = d_o.chart_orbit(alpha, co).expect("chart meets its own orbit");
        for &y in family.slice(c) {
            let ychart = d_o.chart_orbit(alpha, q.orbit_of(y)).expect("slice points lie in charted orbits");
            for g1 in group.elements() {
                for g2 in group.elements() {
                    let (Some(a), Some(b), Some(u), Some(v)) = (gs.act(g1, c), gs.act(g2, c), gs.act(g1, y), gs.act(g2, y)) else {
                        continue;
                    };
                    let lhs = chart_distance(dg, stabs, centre_chart, a, b);
                    let mid = chart_distance(dg, stabs, ychart, u, v);
                    let rhs = dg.d(g1, g2);
                    left.0 += 1;
                    right.0 += 1;
                    if lhs - mid > tol {
                        left.1.push(format!("chart={alpha} y={y} g1={g1} g2={g2}"));
                    }
                    if mid - rhs > tol {
                        right.1.push(format!("chart={alpha} y={y} g1={g1} g2={g2}"));
                    }
                    left.2 = left.2.max(lhs - mid);
                    right.2 = right.2.max(mid - rhs);
                }
            }
            for g0 in group.elements() {
                let Some(z) = gs.act(g0, y) else { continue };
                let zchart = d_o.chart_orbit(alpha, q.orbit_of(z)).expect("same orbit as y");
                for g in group.elements() {
                    let Some(gz) = gs.act(g, z) else { continue };
                    translate.0 += 1;
                    let lhs = chart_distance(dg, stabs, zchart, z, gz);
                    let rhs = dg.d(g0, group.mul(g, g0));
                    translate.2 = translate.2.max(lhs - rhs);
                    if lhs - rhs > tol {
                        translate.1.push(format!("chart={alpha} y={z} g0={g0} g={g}"));
                    }
                }
            }
        }
    }
    for (name, (count, fails, resid)) in [
        ("chart-orbit-monotone", left),
        ("chart-below-group-metric", right),
        ("chart-translate-bound", translate),
    ] {
        results.push(PropertyResult {
            name,
            instances: count,
            failures: fails,
            max_residual: resid.max(0.0),
            witness: None,
        });
    }

    // weights
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for orbit in 0..q.n_orbits() {
        let s: f64 = (0..d_o.n_charts()).map(|a| d_o.weight(a, orbit)).sum();
        worst = worst.max((s - 1.0).abs());
        if (s - 1.0).abs() > EXACT_TOLERANCE {
            fails.push(format!("orbit={orbit} sum={s}"));
        }
    }
    results.push(PropertyResult {
        name: "weights-normalised",
        instances: q.n_orbits(),
        failures: fails,
        max_residual: worst,
        witness: None,
    });

    // metric on each orbit, positivity included
    let mut fails = Vec::new();
    let mut worst = 0.0f64;
    for orbit in 0..q.n_orbits() {
        let members: Vec<Point> = q.members(orbit).iter().copied().filter(|&z| region.is_none_or(|r| r[z])).collect();
        let sub: Vec<Vec<f64>> = members.iter().map(|&a| members.iter().map(|&b| d_o.d(a, b)).collect()).collect();
        if let Err(v) = check_metric(&sub, MetricCheck { tolerance: tol, ..MetricCheck::default() }) {
            worst = worst.max(v.residual());
            fails.push(format!("orbit={orbit}: {v}"));
        }
    }
    results.push(PropertyResult {
        name: "orbit-metric",
        instances: q.n_orbits(),
        failures: fails,
        max_residual: worst,
        witness: None,
    });

    // invariance under total elements
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    let total: Vec<Elem> = gs.total_elements().collect();
    for x in 0..n {
        for y in 0..n {
            for &g in &total {
                let (gx, gy) = (gs.act(g, x).unwrap(), gs.act(g, y).unwrap());
                let r = (d_o.d(gx, gy) - d_o.d(x, y)).abs();
                worst = worst.max(r);
                if r > EXACT_TOLERANCE && fails.len() < 16 {
                    fails.push(format!("x={x} y={y} g={g}"));
                }
            }
        }
    }
    results.push(PropertyResult {
        name: "invariant",
        instances: n * n * total.len(),
        failures: fails,
        max_residual: worst,
        witness: None,
    });

    PropertyReport { results }
}

fn collect(name: &'static str, instances: usize, per_x: Vec<(Vec<String>, Option<String>)>, resid: f64) -> PropertyResult {
    let mut failures = Vec::new();
    let mut witness = None;
    for (f, w) in per_x {
        failures.extend(f);
        if witness.is_none() {
            witness = w;
        }
    }
    PropertyResult {
        name,
        instances,
        failures,
        max_residual: resid,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{compute_orbits, quotient_metric, QuotientMetricMode};
    use crate::scenario;
    use crate::slices::{build_slice_family, SliceOptions};

    fn pipeline(gs: &SampledGSpace, dg: &GroupMetric) -> (Quotient, SliceFamily, OrbitalMetric) {
        let q = quotient_metric(gs, compute_orbits(gs), &QuotientMetricMode::Graph).unwrap();
        let fam = build_slice_family(gs, &q, SliceOptions::default());
        let d_o = build_orbital_metric(gs, &q, &fam, dg).unwrap();
        (q, fam, d_o)
    }

    #[test]
    fn word_metric_on_c4() {
        let c4 = FiniteGroup::cyclic(4);
        let dg = GroupMetric::word(&c4).unwrap();
        assert_eq!(dg.d(0, 2), 2.0);
        assert_eq!(dg.d(1, 3), 2.0);
        assert_eq!(dg.coset_distance(&[0, 2], 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn discrete_metric_and_extreme_subgroups() {
        let g = FiniteGroup::dihedral(3);
        let dg = GroupMetric::discrete(&g, 1.0).unwrap();
        let all: Vec<Elem> = g.elements().collect();
        for a in g.elements() {
            for b in g.elements() {
                assert_eq!(dg.coset_distance(&[0], a, b).unwrap(), dg.d(a, b));
                assert_eq!(dg.coset_distance(&all, a, b).unwrap(), 0.0);
            }
        }
        assert!(g.subgroups().iter().all(|k| dg.is_right_invariant(k)));
        assert_eq!(GroupMetric::discrete(&g, 0.0).unwrap_err(), OrbitalError::InvalidScale(0.0));
    }

    #[test]
    fn explicit_z2_table() {
        let z2 = FiniteGroup::cyclic(2);
        let dg = GroupMetric::explicit(&z2, vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!(dg.is_right_invariant(&[0, 1]));
    }

    #[test]
    fn explicit_table_must_be_left_invariant() {
        let c3 = FiniteGroup::cyclic(3);
        let t = vec![vec![0.0, 1.0, 1.5], vec![1.0, 0.0, 1.0], vec![1.5, 1.0, 0.0]];
        assert!(matches!(GroupMetric::explicit(&c3, t), Err(OrbitalError::NotLeftInvariant { .. })));
    }

    #[test]
    fn word_metric_needs_inverse_closed_generators() {
        let g = FiniteGroup::from_table(FiniteGroup::cyclic(4).table().to_vec(), Some(vec![1])).unwrap();
        assert_eq!(GroupMetric::word(&g).unwrap_err(), OrbitalError::GeneratorsNotInverseClosed { g: 1 });
    }

    #[test]
    fn not_a_subgroup() {
        let c4 = FiniteGroup::cyclic(4);
        let dg = GroupMetric::discrete(&c4, 1.0).unwrap();
        assert!(matches!(dg.coset_distance(&[0, 1], 0, 1), Err(OrbitalError::NotASubgroup(_))));
    }

    #[test]
    fn reflection_orbital_values() {
        let gs = scenario::reflection(2, 1.0).unwrap();
        let dg = GroupMetric::discrete(gs.group(), 1.0).unwrap();
        let (_, _, d_o) = pipeline(&gs, &dg);
        // indices 1, 3 are t = -1, 1
        assert_eq!(d_o.d(3, 1), 1.0);
        assert_eq!(d_o.d(2, 2), 0.0);
        assert_eq!(d_o.d(0, 2), 0.0);
    }

    #[test]
    fn circle_orbital_values() {
        let gs = scenario::circle(12, 3).unwrap();
        let dg = GroupMetric::discrete(gs.group(), 1.0).unwrap();
        let (_, _, d_o) = pipeline(&gs, &dg);
        assert!((d_o.d(0, 4) - 1.0).abs() < 1e-15);
        assert_eq!(d_o.d(0, 1), 0.0);
    }

    #[test]
    fn properties_hold_on_disk() {
        let gs = scenario::disk(3).unwrap();
        let dg = GroupMetric::discrete(gs.group(), 1.0).unwrap();
        let (q, fam, d_o) = pipeline(&gs, &dg);
        let rep = verify_orbital_properties(&gs, &q, &fam, &d_o, &dg, None, 1e-9);
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn property_a_example_witness_on_circle() {
        let gs = scenario::circle(12, 3).unwrap();
        let dg = GroupMetric::discrete(gs.group(), 1.0).unwrap();
        let (q, fam, d_o) = pipeline(&gs, &dg);
        let deltas = realized_grid(q.table().iter().flatten().copied().chain([1.0]), EXACT_TOLERANCE);
        let expect = (std::f64::consts::PI / 6.0).min(1.0) / 2.0;
        for x in 0..12 {
            let w = property_a_witness(&gs, &q, &fam, &d_o, &dg, x, 0.5, &deltas).unwrap();
            assert!((w - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn incompatible_group_metric_rejected() {
        // D3 acting on the 3 reflection axes' endpoints has non-normal
        // stabilizers; a metric that is not right invariant must be refused
        let gs = scenario::dihedral(3).unwrap();
        let g = gs.group();
        let stab = gs.stabilizer(0).to_vec();
        assert!(!g.is_normal(&stab));
        // word metric on {r, r^-1, s}: not right invariant under <s>
        let dg = GroupMetric::word(g).unwrap();
        if !dg.is_right_invariant(&stab) {
            let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
            let fam = build_slice_family(&gs, &q, SliceOptions::default());
            assert!(matches!(build_orbital_metric(&gs, &q, &fam, &dg), Err(OrbitalError::IncompatibleGroupMetric { .. })));
        }
    }
}
