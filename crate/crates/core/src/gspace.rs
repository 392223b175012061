//! Finite groups, sampled spaces and validated group actions.
//!
//! A [`SampledSpace`] is a finite point set carrying a base metric and a
//! neighborhood graph. The graph stands in for the topology: "connected open
//! set" means "connected vertex set", and components of preimages are graph
//! components. A [`SampledGSpace`] binds a [`FiniteGroup`] to a space through
//! per-element injective maps, which may be partial so that truncated actions
//! of infinite groups (shifts of a line) can be sampled.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{check_metric, MetricCheck, MetricViolation};

/// Index of a point of a sampled space.
pub type Point = usize;
/// Index of a group element.
pub type Elem = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("multiplication table is empty")]
    Empty,
    #[error("row {row} of the multiplication table has length {len}, expected {order}")]
    NotSquare { row: usize, len: usize, order: usize },
    #[error("mul({a},{b}) = {value} is out of range")]
    IndexOutOfRange { a: Elem, b: Elem, value: Elem },
    #[error("no element acts as a two-sided identity")]
    NoIdentity,
    #[error("(({a}*{b})*{c}) != ({a}*({b}*{c}))")]
    NonAssociative { a: Elem, b: Elem, c: Elem },
    #[error("element {g} has no inverse")]
    NoInverse { g: Elem },
    #[error("generator {g} is out of range")]
    GeneratorOutOfRange { g: Elem },
    #[error("generators reach only {reached} of {order} elements")]
    GeneratorsDontGenerate { reached: usize, order: usize },
}

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteGroup {
    mul: Vec<Vec<Elem>>,
    identity: Elem,
    inv: Vec<Elem>,
    generators: Option<Vec<Elem>>,
}

impl FiniteGroup {
    /// Validate a multiplication table and optional generating set.
    ///
    /// Axioms are scanned in a fixed order (shape, range, identity,
    /// associativity row-major over `(a, b, c)`, inverses, generation) and
    /// the first failure is reported.
    pub fn from_table(mul: Vec<Vec<Elem>>, generators: Option<Vec<Elem>>) -> Result<Self, GroupError> {
        let order = mul.len();
        if order == 0 {
            return Err(GroupError::Empty);
        }
        for (row, r) in mul.iter().enumerate() {
            if r.len() != order {
                return Err(GroupError::NotSquare { row, len: r.len(), order });
            }
        }
        for a in 0..order {
            for b in 0..order {
                if mul[a][b] >= order {
                    return Err(GroupError::IndexOutOfRange { a, b, value: mul[a][b] });
                }
            }
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| mul[e][g] == g && mul[g][e] == g))
            .ok_or(GroupError::NoIdentity)?;
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(GroupError::NonAssociative { a, b, c });
                    }
                }
            }
        }
        let mut inv = Vec::with_capacity(order);
        for g in 0..order {
            let h = (0..order)
                .find(|&h| mul[h][g] == identity && mul[g][h] == identity)
                .ok_or(GroupError::NoInverse { g })?;
            inv.push(h);
        }
        let group = FiniteGroup {
            mul,
            identity,
            inv,
            generators: None,
        };
        match generators {
            None => Ok(group),
            Some(gens) => {
                if let Some(&g) = gens.iter().find(|&&g| g >= order) {
                    return Err(GroupError::GeneratorOutOfRange { g });
                }
                let reached = group.closure(&gens).len();
                if reached != order {
                    return Err(GroupError::GeneratorsDontGenerate { reached, order });
                }
                Ok(FiniteGroup {
                    generators: Some(gens),
                    ..group
                })
            }
        }
    }

    /// Cyclic group of order `n` (addition mod `n`), generated by `{1, n-1}`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0, "cyclic group needs positive order");
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let gens = if n == 1 {
            vec![]
        } else {
            let mut g = vec![1, n - 1];
            g.dedup();
            g
        };
        FiniteGroup::from_table(mul, Some(gens)).expect("cyclic table is a group")
    }

    /// Dihedral group of order `2n`: element `i + n*j` is `r^i s^j`, with
    /// `s r s = r^-1`. Generated by `{r, r^-1, s}`.
    pub fn dihedral(n: usize) -> Self {
        assert!(n > 0, "dihedral group needs n > 0");
        let order = 2 * n;
        let mul = (0..order)
            .map(|x| {
                (0..order)
                    .map(|y| {
                        let (a, b) = (x % n, x / n);
                        let (c, d) = (y % n, y / n);
                        let rot = if b == 0 { (a + c) % n } else { (a + n - c) % n };
                        rot + n * ((b + d) % 2)
                    })
                    .collect()
            })
            .collect();
        let mut gens = vec![1 % n, (n - 1) % n, n];
        gens.sort_unstable();
        gens.dedup();
        gens.retain(|&g| g != 0);
        FiniteGroup::from_table(mul, Some(gens)).expect("dihedral table is a group")
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn identity(&self) -> Elem {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a][b]
    }

    #[inline]
    pub fn inv(&self, g: Elem) -> Elem {
        self.inv[g]
    }

    pub fn generators(&self) -> Option<&[Elem]> {
        self.generators.as_deref()
    }

    pub fn table(&self) -> &[Vec<Elem>] {
        &self.mul
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.order()
    }

    /// Subgroup generated by `gens`, sorted.
    pub fn closure(&self, gens: &[Elem]) -> Vec<Elem> {
        let mut member = vec![false; self.order()];
        member[self.identity] = true;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !member[y] {
                    member[y] = true;
                    queue.push_back(y);
                }
            }
        }
        (0..self.order()).filter(|&g| member[g]).collect()
    }

    /// Whether `set` (any order, no duplicates required) is closed under
    /// multiplication and inverses and contains the identity.
    pub fn is_subgroup(&self, set: &[Elem]) -> bool {
        let mut member = vec![false; self.order()];
        for &g in set {
            if g >= self.order() {
                return false;
            }
            member[g] = true;
        }
        member[self.identity]
            && set.iter().all(|&a| member[self.inv(a)] && set.iter().all(|&b| member[self.mul(a, b)]))
    }

    /// Whether the subgroup `k` is normal.
    pub fn is_normal(&self, k: &[Elem]) -> bool {
        let mut member = vec![false; self.order()];
        for &g in k {
            member[g] = true;
        }
        self.elements()
            .all(|g| k.iter().all(|&u| member[self.mul(self.mul(g, u), self.inv(g))]))
    }

    /// `g K g^-1`, sorted.
    pub fn conjugate(&self, g: Elem, k: &[Elem]) -> Vec<Elem> {
        let mut out: Vec<Elem> = k.iter().map(|&u| self.mul(self.mul(g, u), self.inv(g))).collect();
        out.sort_unstable();
        out
    }

    /// All subgroups, each sorted, ordered by size then lexicographically.
    ///
    /// Every subgroup is a join of cyclic subgroups, so joining pairs until
    /// nothing new appears enumerates them all.
    pub fn subgroups(&self) -> Vec<Vec<Elem>> {
        let mut found: Vec<Vec<Elem>> = Vec::new();
        for g in self.elements() {
            let c = self.closure(&[g]);
            if !found.contains(&c) {
                found.push(c);
            }
        }
        let mut i = 0;
        while i < found.len() {
            for j in 0..i {
                let mut gens = found[i].clone();
                gens.extend_from_slice(&found[j]);
                let c = self.closure(&gens);
                if !found.contains(&c) {
                    found.push(c);
                }
            }
            i += 1;
        }
        found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        found
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("space has no points")]
    Empty,
    #[error("base metric is not a metric: {0}")]
    NotAMetric(MetricViolation),
    #[error("edge ({u},{v}) refers to a point out of range")]
    EdgeOutOfRange { u: Point, v: Point },
    #[error("self-loop at point {0}")]
    SelfLoop(Point),
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
}

/// A finite point sample: base metric plus neighborhood graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpace {
    base_metric: Vec<Vec<f64>>,
    neighbors: Vec<Vec<Point>>,
    labels: Vec<String>,
}

impl SampledSpace {
    /// Validate the base metric exhaustively and build the (symmetric)
    /// adjacency from an undirected edge list. Duplicate edges are merged.
    pub fn new(base_metric: Vec<Vec<f64>>, edges: &[(Point, Point)]) -> Result<Self, SpaceError> {
        let n = base_metric.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        check_metric(&base_metric, MetricCheck::default()).map_err(SpaceError::NotAMetric)?;
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(SpaceError::EdgeOutOfRange { u, v });
            }
            if u == v {
                return Err(SpaceError::SelfLoop(u));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        let labels = (0..n).map(|i| format!("x{i}")).collect();
        Ok(SampledSpace {
            base_metric,
            neighbors,
            labels,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, SpaceError> {
        if labels.len() != self.len() {
            return Err(SpaceError::LabelCount {
                expected: self.len(),
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.base_metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_metric.is_empty()
    }

    #[inline]
    pub fn dist(&self, a: Point, b: Point) -> f64 {
        self.base_metric[a][b]
    }

    pub fn base_metric(&self) -> &[Vec<f64>] {
        &self.base_metric
    }

    pub fn neighbors(&self) -> &[Vec<Point>] {
        &self.neighbors
    }

    pub fn adjacent(&self, a: Point, b: Point) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for (u, nb) in self.neighbors.iter().enumerate() {
            for &v in nb {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("expected one map per group element ({expected}), got {got}")]
    WrongMapCount { expected: usize, got: usize },
    #[error("map of element {g} has length {len}, expected {expected}")]
    WrongMapLength { g: Elem, len: usize, expected: usize },
    #[error("element {g} sends point {x} out of range")]
    PointOutOfRange { g: Elem, x: Point },
    #[error("element {g} is not injective: points {x} and {y} share an image")]
    NotInjective { g: Elem, x: Point, y: Point },
    #[error("identity element does not fix point {x}")]
    IdentityNotIdentity { x: Point },
    #[error("action is not a homomorphism: ({g}*{h})·{x} != {g}·({h}·{x})")]
    NotHomomorphism { g: Elem, h: Elem, x: Point },
    #[error("element {g} does not preserve edge ({u},{v})")]
    NotGraphAutomorphism { g: Elem, u: Point, v: Point },
    #[error("stabilizer of point {x} is not a subgroup")]
    StabilizerNotSubgroup { x: Point },
}

/// A sampled space with a validated (possibly partial) group action.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGSpace {
    space: SampledSpace,
    group: FiniteGroup,
    act: Vec<Vec<Option<Point>>>,
    total: Vec<bool>,
    stabilizers: Vec<Vec<Elem>>,
}

impl SampledGSpace {
    /// Bind `group` to `space` through `act[g][x] = g·x` (`None` where the
    /// element is undefined).
    ///
    /// Checks run in a fixed order: shapes and injectivity, identity,
    /// homomorphism row-major over `(g, h, x)`, adjacency preservation over
    /// `(g, edge)`, then stabilizers.
    pub fn bind(space: SampledSpace, group: FiniteGroup, act: Vec<Vec<Option<Point>>>) -> Result<Self, ActionError> {
        let n = space.len();
        let order = group.order();
        if act.len() != order {
            return Err(ActionError::WrongMapCount {
                expected: order,
                got: act.len(),
            });
        }
        for (g, map) in act.iter().enumerate() {
            if map.len() != n {
                return Err(ActionError::WrongMapLength {
                    g,
                    len: map.len(),
                    expected: n,
                });
            }
            let mut preimage = vec![None; n];
            for (x, &img) in map.iter().enumerate() {
                if let Some(y) = img {
                    if y >= n {
                        return Err(ActionError::PointOutOfRange { g, x });
                    }
                    if let Some(prev) = preimage[y] {
                        return Err(ActionError::NotInjective { g, x: prev, y: x });
                    }
                    preimage[y] = Some(x);
                }
            }
        }
        let e = group.identity();
        if let Some(x) = (0..n).find(|&x| act[e][x] != Some(x)) {
            return Err(ActionError::IdentityNotIdentity { x });
        }
        for g in 0..order {
            for h in 0..order {
                let gh = group.mul(g, h);
                for x in 0..n {
                    let rhs = act[h][x].and_then(|y| act[g][y]);
                    if let (Some(r), Some(l)) = (rhs, act[gh][x]) {
                        if r != l {
                            return Err(ActionError::NotHomomorphism { g, h, x });
                        }
                    }
                }
            }
        }
        let edges = space.edges();
        for (g, map) in act.iter().enumerate() {
            for &(u, v) in &edges {
                if let (Some(a), Some(b)) = (map[u], map[v]) {
                    if !space.adjacent(a, b) {
                        return Err(ActionError::NotGraphAutomorphism { g, u, v });
                    }
                }
            }
        }
        let total: Vec<bool> = act.iter().map(|m| m.iter().all(Option::is_some)).collect();
        let mut stabilizers = Vec::with_capacity(n);
        for x in 0..n {
            let stab: Vec<Elem> = (0..order).filter(|&g| act[g][x] == Some(x)).collect();
            if !group.is_subgroup(&stab) {
                return Err(ActionError::StabilizerNotSubgroup { x });
            }
            stabilizers.push(stab);
        }
        Ok(SampledGSpace {
            space,
            group,
            act,
            total,
            stabilizers,
        })
    }

    /// The trivial action of the one-element group.
    pub fn trivial(space: SampledSpace) -> Self {
        let n = space.len();
        let act = vec![(0..n).map(Some).collect()];
        SampledGSpace::bind(space, FiniteGroup::cyclic(1), act).expect("trivial action is valid")
    }

    pub fn space(&self) -> &SampledSpace {
        &self.space
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// `g·x`, or `None` where `g` is undefined at `x`.
    #[inline]
    pub fn act(&self, g: Elem, x: Point) -> Option<Point> {
        self.act[g][x]
    }

    pub fn maps(&self) -> &[Vec<Option<Point>>] {
        &self.act
    }

    pub fn is_total(&self, g: Elem) -> bool {
        self.total[g]
    }

    pub fn is_total_action(&self) -> bool {
        self.total.iter().all(|&t| t)
    }

    /// Elements acting on every point.
    pub fn total_elements(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.group.order()).filter(move |&g| self.total[g])
    }

    /// `G_x`, sorted.
    pub fn stabilizer(&self, x: Point) -> &[Elem] {
        &self.stabilizers[x]
    }

    pub fn stabilizers(&self) -> &[Vec<Elem>] {
        &self.stabilizers
    }

    /// Image of a point set under `g` (points outside the domain of `g` are
    /// dropped), sorted.
    pub fn image(&self, g: Elem, set: &[Point]) -> Vec<Point> {
        let mut out: Vec<Point> = set.iter().filter_map(|&x| self.act(g, x)).collect();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_space(n: usize) -> SampledSpace {
        let step = std::f64::consts::TAU / n as f64;
        let metric = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = i.abs_diff(j);
                        k.min(n - k) as f64 * step
                    })
                    .collect()
            })
            .collect();
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        SampledSpace::new(metric, &edges).unwrap()
    }

    fn line_space(points: &[f64], edges: &[(usize, usize)]) -> SampledSpace {
        let metric = points
            .iter()
            .map(|a| points.iter().map(|b| (a - b).abs()).collect())
            .collect();
        SampledSpace::new(metric, edges).unwrap()
    }

    #[test]
    fn order_one_table_is_trivial_group() {
        let g = FiniteGroup::from_table(vec![vec![0]], None).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.identity(), 0);
    }

    #[test]
    fn addition_mod_three_with_generator() {
        let mul = (0..3).map(|a| (0..3).map(|b| (a + b) % 3).collect()).collect();
        let g = FiniteGroup::from_table(mul, Some(vec![1])).unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.inv(1), 2);
    }

    #[test]
    fn idempotent_non_identity_is_rejected() {
        let mut mul: Vec<Vec<usize>> = (0..3).map(|a| (0..3).map(|b| (a + b) % 3).collect()).collect();
        mul[1][1] = 1;
        let err = FiniteGroup::from_table(mul, None).unwrap_err();
        assert!(
            matches!(err, GroupError::NonAssociative { .. } | GroupError::NoInverse { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn table_without_identity() {
        let mul = vec![vec![1, 0], vec![0, 0]];
        assert_eq!(FiniteGroup::from_table(mul, None), Err(GroupError::NoIdentity));
    }

    #[test]
    fn generators_must_generate() {
        let mul = (0..4).map(|a| (0..4).map(|b| (a + b) % 4).collect()).collect();
        assert_eq!(
            FiniteGroup::from_table(mul, Some(vec![2])),
            Err(GroupError::GeneratorsDontGenerate { reached: 2, order: 4 })
        );
    }

    #[test]
    fn dihedral_relations() {
        let d = FiniteGroup::dihedral(4);
        assert_eq!(d.order(), 8);
        let (r, s) = (1, 4);
        assert_eq!(d.mul(d.mul(s, r), s), d.inv(r));
        assert_eq!(d.mul(s, s), d.identity());
        assert_eq!(d.subgroups().len(), 10);
        assert_eq!(FiniteGroup::cyclic(6).subgroups().len(), 4);
    }

    #[test]
    fn normality() {
        let d = FiniteGroup::dihedral(4);
        assert!(d.is_normal(&[0, 2]));
        assert!(!d.is_normal(&[0, 4]));
    }

    #[test]
    fn trivial_group_stabilizes_everything() {
        let gs = SampledGSpace::trivial(circle_space(5));
        for x in 0..5 {
            assert_eq!(gs.stabilizer(x), &[0]);
        }
    }

    #[test]
    fn rotation_of_twelve_gon_is_free() {
        let act = (0..3).map(|g| (0..12).map(|x| Some((x + 4 * g) % 12)).collect()).collect();
        let gs = SampledGSpace::bind(circle_space(12), FiniteGroup::cyclic(3), act).unwrap();
        for x in 0..12 {
            for g in 1..3 {
                assert_ne!(gs.act(g, x), Some(x));
            }
            assert_eq!(gs.stabilizer(x), &[0]);
        }
    }

    #[test]
    fn reflection_with_missing_edge_is_not_an_automorphism() {
        // points -2..2 at indices 0..4; edge (-1,0) missing, (0,1) kept
        let sp = line_space(&[-2.0, -1.0, 0.0, 1.0, 2.0], &[(0, 1), (2, 3), (3, 4)]);
        let act = vec![(0..5).map(Some).collect(), (0..5).map(|x| Some(4 - x)).collect()];
        let err = SampledGSpace::bind(sp, FiniteGroup::cyclic(2), act).unwrap_err();
        assert!(matches!(err, ActionError::NotGraphAutomorphism { g: 1, .. }), "{err:?}");
    }

    #[test]
    fn non_homomorphism_is_reported_first_in_scan_order() {
        let act = vec![
            (0..12).map(Some).collect(),
            (0..12).map(|x| Some((x + 4) % 12)).collect(),
            (0..12).map(|x| Some((x + 4) % 12)).collect(),
        ];
        let err = SampledGSpace::bind(circle_space(12), FiniteGroup::cyclic(3), act).unwrap_err();
        assert_eq!(err, ActionError::NotHomomorphism { g: 1, h: 1, x: 0 });
    }

    #[test]
    fn identity_must_fix_points() {
        let act = vec![(0..12).map(|x| Some((x + 1) % 12)).collect()];
        let err = SampledGSpace::bind(circle_space(12), FiniteGroup::cyclic(1), act).unwrap_err();
        assert_eq!(err, ActionError::IdentityNotIdentity { x: 0 });
    }

    #[test]
    fn non_injective_map_rejected() {
        let sp = line_space(&[0.0, 1.0], &[(0, 1)]);
        let act = vec![vec![Some(0), Some(1)], vec![Some(0), Some(0)]];
        let err = SampledGSpace::bind(sp, FiniteGroup::cyclic(2), act).unwrap_err();
        assert!(matches!(err, ActionError::NotInjective { g: 1, .. }));
    }
}
