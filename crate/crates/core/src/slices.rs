//! Slice families: construction by shrinking quotient balls, exhaustive
//! verification, and subslices `S_x(U) = S_x ∩ p⁻¹(U)`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{component_within, components_within, is_connected_set};
use crate::gspace::{Elem, Point, SampledGSpace};
use crate::quotient::{Orbit, Quotient};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SliceError {
    #[error("p({x}) is not in the given quotient set, subslice would be empty")]
    EmptyResult { x: Point },
    #[error("family has {got} slices, expected {expected}")]
    WrongSize { expected: usize, got: usize },
    #[error("slice of {x} names point {y}, out of range")]
    PointOutOfRange { x: Point, y: Point },
}

/// Size of the quotient ball whose preimage cuts out the slices of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "radius", rename_all = "lowercase")]
pub enum Level {
    /// Component of `x` in `p⁻¹(K_d(px, r))`.
    Ball(f64),
    /// `S_x = {x}`.
    Singleton,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Ball(r) => write!(f, "ball({r:.9})"),
            Level::Singleton => write!(f, "singleton"),
        }
    }
}

/// Conditions a slice family is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SliceCondition {
    /// `x ∈ S_x`.
    ContainsPoint,
    /// `S_x ∩ Gx = {x}`.
    MeetsOrbitOnce,
    /// `g S_x ∩ S_x ≠ ∅ ⇒ g ∈ G_x`.
    TranslateDisjoint,
    /// `h S_x ⊆ S_x` for `h ∈ G_x`.
    StabilizerInvariant,
    /// `G S_x` is a union of components of `p⁻¹(p S_x)`.
    SaturationOpen,
    /// `g S_x = S_{gx}` for total `g`.
    Equivariant,
    /// `y ∈ S_x`, `x' ∈ Gx`, `x' ≠ x` ⇒ `S_y ∩ S_{x'} = ∅`.
    NoCrossing,
    /// `S_x ∩ S_y` is a union of components of `S_y ∩ U_x`, where `U_x` is the
    /// ball preimage that cuts out `S_x`.
    IntersectionOpen,
    /// `y ∈ S_x`, `S_y ∩ S_{gx} ≠ ∅` ⇒ `g ∈ G_x`.
    ConditionC,
    /// `S_x` induces a connected subgraph.
    Connected,
}

impl SliceCondition {
    pub const ALL: [SliceCondition; 10] = [
        SliceCondition::ContainsPoint,
        SliceCondition::MeetsOrbitOnce,
        SliceCondition::TranslateDisjoint,
        SliceCondition::StabilizerInvariant,
        SliceCondition::SaturationOpen,
        SliceCondition::Equivariant,
        SliceCondition::NoCrossing,
        SliceCondition::IntersectionOpen,
        SliceCondition::ConditionC,
        SliceCondition::Connected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SliceCondition::ContainsPoint => "contains-point",
            SliceCondition::MeetsOrbitOnce => "meets-orbit-once",
            SliceCondition::TranslateDisjoint => "translate-disjoint",
            SliceCondition::StabilizerInvariant => "stabilizer-invariant",
            SliceCondition::SaturationOpen => "saturation-open",
            SliceCondition::Equivariant => "equivariant",
            SliceCondition::NoCrossing => "no-crossing",
            SliceCondition::IntersectionOpen => "intersection-open",
            SliceCondition::ConditionC => "condition-c",
            SliceCondition::Connected => "connected",
        }
    }
}

/// One failing instance of a condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceViolation {
    pub condition: SliceCondition,
    pub x: Point,
    pub y: Option<Point>,
    pub g: Option<Elem>,
    /// Second orbit point or offending point, depending on the condition.
    pub other: Option<Point>,
}

impl fmt::Display for SliceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at x={}", self.condition.name(), self.x)?;
        if let Some(y) = self.y {
            write!(f, " y={y}")?;
        }
        if let Some(g) = self.g {
            write!(f, " g={g}")?;
        }
        if let Some(o) = self.other {
            write!(f, " z={o}")?;
        }
        Ok(())
    }
}

/// One step of the radius search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub orbit: Orbit,
    pub level: Level,
    /// `None` when the level was accepted.
    pub violation: Option<SliceViolation>,
}

/// Per-point slices with the orbit levels that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFamily {
    slice_of: Vec<Vec<Point>>,
    level_of_orbit: Vec<Level>,
    tent_radius: Vec<f64>,
    log: Vec<LogEntry>,
}

impl SliceFamily {
    /// `S_x`, sorted.
    pub fn slice(&self, x: Point) -> &[Point] {
        &self.slice_of[x]
    }

    pub fn slices(&self) -> &[Vec<Point>] {
        &self.slice_of
    }

    pub fn contains(&self, x: Point, y: Point) -> bool {
        self.slice_of[x].binary_search(&y).is_ok()
    }

    pub fn level(&self, orbit: Orbit) -> Level {
        self.level_of_orbit[orbit]
    }

    pub fn levels(&self) -> &[Level] {
        &self.level_of_orbit
    }

    /// Positive radius used for partition-of-unity weights on this orbit's
    /// chart. Equals the ball radius, or half the smallest positive quotient
    /// distance from the orbit for singleton levels.
    pub fn radius(&self, orbit: Orbit) -> f64 {
        self.tent_radius[orbit]
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.slice_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slice_of.is_empty()
    }

    /// Every slice is a single point.
    pub fn is_degenerate(&self) -> bool {
        self.slice_of.iter().all(|s| s.len() == 1)
    }

    /// Family `S_x = {x}`.
    pub fn singletons(q: &Quotient) -> Self {
        let n = q.projection().len();
        let k = q.n_orbits();
        SliceFamily {
            slice_of: (0..n).map(|x| vec![x]).collect(),
            level_of_orbit: vec![Level::Singleton; k],
            tent_radius: (0..k).map(|o| singleton_radius(q, o)).collect(),
            log: Vec::new(),
        }
    }

    /// Adopt caller-supplied slices (sorted and deduplicated on the way in).
    /// Levels are reported as singleton; tent radii as for singleton levels.
    pub fn from_sets(q: &Quotient, mut sets: Vec<Vec<Point>>) -> Result<Self, SliceError> {
        let n = q.projection().len();
        if sets.len() != n {
            return Err(SliceError::WrongSize {
                expected: n,
                got: sets.len(),
            });
        }
        for (x, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if let Some(&y) = s.iter().find(|&&y| y >= n) {
                return Err(SliceError::PointOutOfRange { x, y });
            }
        }
        let mut fam = SliceFamily::singletons(q);
        fam.slice_of = sets;
        Ok(fam)
    }

    /// Fraction data for the stronger nesting variant `y ∈ S_x ⇒ S_y ⊆ S_x`:
    /// `(pairs satisfying it, pairs checked)`.
    pub fn nesting_statistic(&self) -> (usize, usize) {
        let mut ok = 0;
        let mut total = 0;
        for s in &self.slice_of {
            for &y in s {
                total += 1;
                if self.slice_of[y].iter().all(|z| s.binary_search(z).is_ok()) {
                    ok += 1;
                }
            }
        }
        (ok, total)
    }
}

fn singleton_radius(q: &Quotient, orbit: Orbit) -> f64 {
    let m = q.table()[orbit].iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        0.5 * m
    } else {
        1.0
    }
}

fn intersects(a: &[Point], b: &[Point]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Options for [`build_slice_family`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SliceOptions {
    /// After the direct search converges, divide every ball radius by this
    /// factor and re-check.
    pub shrink_factor: Option<f64>,
}

/// Candidate levels for an orbit, largest first: a radius past the largest
/// quotient distance from the orbit, the midpoints between consecutive
/// distinct distances (including 0), then the singleton level.
pub fn candidate_levels(q: &Quotient, orbit: Orbit) -> Vec<Level> {
    let values = crate::metric::distinct_sorted(
        q.table()[orbit].iter().copied().chain(std::iter::once(0.0)),
        crate::metric::EXACT_TOLERANCE,
    );
    let top = values.last().copied().unwrap_or(0.0);
    let mut levels = vec![Level::Ball(if top > 0.0 { 2.0 * top } else { 1.0 })];
    for w in values.windows(2).rev() {
        levels.push(Level::Ball(0.5 * (w[0] + w[1])));
    }
    levels.push(Level::Singleton);
    levels
}

fn in_ball(q: &Quotient, orbit: Orbit, r: f64) -> Vec<bool> {
    q.projection().iter().map(|&o| q.d(orbit, o) < r).collect()
}

fn orbit_slices(gs: &SampledGSpace, q: &Quotient, orbit: Orbit, level: Level) -> Vec<(Point, Vec<Point>)> {
    match level {
        Level::Singleton => q.members(orbit).iter().map(|&x| (x, vec![x])).collect(),
        Level::Ball(r) => {
            let inside = in_ball(q, orbit, r);
            q.members(orbit)
                .iter()
                .map(|&x| (x, component_within(gs.space().neighbors(), x, |v| inside[v])))
                .collect()
        }
    }
}

/// Local conditions for one orbit: meets-orbit-once, then translate-disjoint.
fn local_violation(gs: &SampledGSpace, q: &Quotient, orbit: Orbit, slices: &[(Point, Vec<Point>)]) -> Option<SliceViolation> {
    let members = q.members(orbit);
    for (x, s) in slices {
        if let Some(&other) = s.iter().find(|&&z| z != *x && members.binary_search(&z).is_ok()) {
            return Some(SliceViolation {
                condition: SliceCondition::MeetsOrbitOnce,
                x: *x,
                y: None,
                g: None,
                other: Some(other),
            });
        }
    }
    for (x, s) in slices {
        for g in gs.group().elements() {
            if gs.stabilizer(*x).binary_search(&g).is_ok() {
                continue;
            }
            if intersects(&gs.image(g, s), s) {
                return Some(SliceViolation {
                    condition: SliceCondition::TranslateDisjoint,
                    x: *x,
                    y: None,
                    g: Some(g),
                    other: None,
                });
            }
        }
    }
    None
}

/// Preimage set `U_x` whose component is `S_x`.
fn cutting_set(q: &Quotient, level: Level, x: Point) -> Vec<bool> {
    let orbit = q.orbit_of(x);
    match level {
        Level::Ball(r) => in_ball(q, orbit, r),
        Level::Singleton => q.projection().iter().map(|&o| o == orbit).collect(),
    }
}

/// `S_x ∩ S_y` is a union of components of `S_y ∩ U`.
fn intersection_is_open(gs: &SampledGSpace, sx: &[Point], sy: &[Point], u: &[bool]) -> Option<Point> {
    let nb = gs.space().neighbors();
    for comp in components_within(nb, |v| u[v] && sy.binary_search(&v).is_ok()) {
        let inside = comp.iter().filter(|v| sx.binary_search(v).is_ok()).count();
        if inside != 0 && inside != comp.len() {
            return comp.iter().copied().find(|v| sx.binary_search(v).is_err());
        }
    }
    None
}

fn joint_violation(gs: &SampledGSpace, q: &Quotient, slices: &[Vec<Point>], levels: &[Level]) -> Option<SliceViolation> {
    let n = slices.len();
    for x in 0..n {
        let members = q.members(q.orbit_of(x));
        for &y in &slices[x] {
            for &x2 in members {
                if x2 != x && intersects(&slices[y], &slices[x2]) {
                    return Some(SliceViolation {
                        condition: SliceCondition::NoCrossing,
                        x,
                        y: Some(y),
                        g: None,
                        other: Some(x2),
                    });
                }
            }
        }
    }
    for x in 0..n {
        let u = cutting_set(q, levels[q.orbit_of(x)], x);
        for y in 0..n {
            if !intersects(&slices[x], &slices[y]) {
                continue;
            }
            if let Some(z) = intersection_is_open(gs, &slices[x], &slices[y], &u) {
                return Some(SliceViolation {
                    condition: SliceCondition::IntersectionOpen,
                    x,
                    y: Some(y),
                    g: None,
                    other: Some(z),
                });
            }
        }
    }
    None
}

fn assemble(gs: &SampledGSpace, q: &Quotient, levels: &[Level]) -> Vec<Vec<Point>> {
    let mut slices = vec![Vec::new(); gs.len()];
    for (orbit, &level) in levels.iter().enumerate() {
        for (x, s) in orbit_slices(gs, q, orbit, level) {
            slices[x] = s;
        }
    }
    slices
}

/// Build a slice family by descending through candidate quotient-ball radii.
///
/// Each orbit (ascending representative) first takes the largest level
/// whose slices meet their orbit only at the centre and are disjoint from
/// their non-stabilizer translates. Then, while some pair of slices crosses
/// (`y ∈ S_x` with `S_y` meeting another slice centred on `Gx`) or some
/// intersection fails to be open, the orbit whose representative slice has
/// the larger quotient diameter is shrunk one level (ties go to the smaller
/// representative; an orbit already at the singleton level is never
/// chosen).
pub fn build_slice_family(gs: &SampledGSpace, q: &Quotient, opts: SliceOptions) -> SliceFamily {
    let k = q.n_orbits();
    let mut candidates: Vec<Vec<Level>> = (0..k).map(|o| candidate_levels(q, o)).collect();
    let mut idx = vec![0usize; k];
    let mut log = Vec::new();

    for orbit in 0..k {
        loop {
            let level = candidates[orbit][idx[orbit]];
            let slices = orbit_slices(gs, q, orbit, level);
            let violation = local_violation(gs, q, orbit, &slices);
            let accepted = violation.is_none();
            log.push(LogEntry { orbit, level, violation });
            if accepted {
                break;
            }
            idx[orbit] += 1;
        }
    }

    let joint = |candidates: &[Vec<Level>], idx: &mut [usize], log: &mut Vec<LogEntry>| loop {
        let levels: Vec<Level> = (0..k).map(|o| candidates[o][idx[o]]).collect();
        let slices = assemble(gs, q, &levels);
        let Some(v) = joint_violation(gs, q, &slices, &levels) else {
            return;
        };
        let a = q.orbit_of(v.x);
        let b = q.orbit_of(v.y.expect("joint violations carry y"));
        let diam = |o: Orbit| q.diameter(slices[q.representative(o)].iter().map(|&z| q.orbit_of(z)));
        let mut chosen = if a == b {
            a
        } else {
            let (da, db) = (diam(a), diam(b));
            if da > db || (da == db && a < b) {
                a
            } else {
                b
            }
        };
        if levels[chosen] == Level::Singleton {
            chosen = if chosen == a { b } else { a };
        }
        idx[chosen] += 1;
        let level = candidates[chosen][idx[chosen]];
        log.push(LogEntry {
            orbit: chosen,
            level,
            violation: Some(v),
        });
    };
    joint(&candidates, &mut idx, &mut log);

    if let Some(f) = opts.shrink_factor {
        for orbit in 0..k {
            if let Level::Ball(r) = candidates[orbit][idx[orbit]] {
                let r = r / f;
                let mut next = vec![Level::Ball(r)];
                next.extend(candidates[orbit][idx[orbit]..].iter().copied().filter(|l| match l {
                    Level::Ball(s) => *s < r,
                    Level::Singleton => true,
                }));
                candidates[orbit] = next;
                idx[orbit] = 0;
                log.push(LogEntry {
                    orbit,
                    level: Level::Ball(r),
                    violation: None,
                });
            }
        }
        joint(&candidates, &mut idx, &mut log);
    }

    let levels: Vec<Level> = (0..k).map(|o| candidates[o][idx[o]]).collect();
    let slice_of = assemble(gs, q, &levels);
    let tent_radius = levels
        .iter()
        .enumerate()
        .map(|(o, l)| match *l {
            Level::Ball(r) => r,
            Level::Singleton => singleton_radius(q, o),
        })
        .collect();
    SliceFamily {
        slice_of,
        level_of_orbit: levels,
        tent_radius,
        log,
    }
}

/// Outcome of [`verify_slice_family`] for one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: SliceCondition,
    pub checked: usize,
    pub violations: Vec<SliceViolation>,
}

/// All slice conditions, in [`SliceCondition::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub results: Vec<ConditionResult>,
    pub degenerate: bool,
    /// `(pairs with S_y ⊆ S_x, pairs y ∈ S_x)`.
    pub nesting: (usize, usize),
}

impl ConditionReport {
    pub fn violation_count(&self) -> usize {
        self.results.iter().map(|r| r.violations.len()).sum()
    }

    pub fn get(&self, c: SliceCondition) -> &ConditionResult {
        self.results.iter().find(|r| r.condition == c).expect("every condition is reported")
    }
}

/// Exhaustively check a family. `region` restricts the centres `x` that are
/// checked (all points when `None`).
pub fn verify_slice_family(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, region: Option<&[bool]>) -> ConditionReport {
    let n = gs.len();
    let s = family.slices();
    let nb = gs.space().neighbors();
    let centres: Vec<Point> = (0..n).filter(|&x| region.is_none_or(|r| r[x])).collect();

    let per_point: Vec<Vec<(SliceCondition, usize, Vec<SliceViolation>)>> = centres
        .par_iter()
        .map(|&x| {
            let sx = &s[x];
            let members = q.members(q.orbit_of(x));
            let stab = gs.stabilizer(x);
            let viol = |condition, y, g, other| SliceViolation {
                condition,
                x,
                y,
                g,
                other,
            };
            let mut out = Vec::new();

            let v = if sx.binary_search(&x).is_ok() {
                vec![]
            } else {
                vec![viol(SliceCondition::ContainsPoint, None, None, None)]
            };
            out.push((SliceCondition::ContainsPoint, 1, v));

            let v = sx
                .iter()
                .filter(|&&z| z != x && members.binary_search(&z).is_ok())
                .map(|&z| viol(SliceCondition::MeetsOrbitOnce, None, None, Some(z)))
                .collect();
            out.push((SliceCondition::MeetsOrbitOnce, 1, v));

            let mut v = Vec::new();
            let mut inv = Vec::new();
            let mut eqv = Vec::new();
            let mut eq_checked = 0;
            for g in gs.group().elements() {
                let img = gs.image(g, sx);
                if stab.binary_search(&g).is_ok() {
                    if let Some(&z) = img.iter().find(|z| sx.binary_search(z).is_err()) {
                        inv.push(viol(SliceCondition::StabilizerInvariant, None, Some(g), Some(z)));
                    }
                } else if intersects(&img, sx) {
                    v.push(viol(SliceCondition::TranslateDisjoint, None, Some(g), None));
                }
                if gs.is_total(g) {
                    eq_checked += 1;
                    let gx = gs.act(g, x).expect("total");
                    if img != s[gx] {
                        eqv.push(viol(SliceCondition::Equivariant, None, Some(g), Some(gx)));
                    }
                }
            }
            let order = gs.group().order();
            out.push((SliceCondition::TranslateDisjoint, order, v));
            out.push((SliceCondition::StabilizerInvariant, stab.len(), inv));

            // saturation G·S_x against components of p⁻¹(p S_x)
            let mut sat = vec![false; n];
            for g in gs.group().elements() {
                for z in gs.image(g, sx) {
                    sat[z] = true;
                }
            }
            let mut in_p = vec![false; q.n_orbits()];
            for &z in sx {
                in_p[q.orbit_of(z)] = true;
            }
            let mut v = Vec::new();
            for comp in components_within(nb, |z| in_p[q.orbit_of(z)]) {
                let hit = comp.iter().filter(|&&z| sat[z]).count();
                if hit != 0 && hit != comp.len() {
                    let z = comp.iter().copied().find(|&z| !sat[z]).expect("partial component");
                    v.push(viol(SliceCondition::SaturationOpen, None, None, Some(z)));
                    break;
                }
            }
            out.push((SliceCondition::SaturationOpen, 1, v));
            out.push((SliceCondition::Equivariant, eq_checked, eqv));

            let mut v = Vec::new();
            let mut checked = 0;
            for &y in sx {
                for &x2 in members {
                    if x2 == x {
                        continue;
                    }
                    checked += 1;
                    if intersects(&s[y], &s[x2]) {
                        v.push(viol(SliceCondition::NoCrossing, Some(y), None, Some(x2)));
                    }
                }
            }
            out.push((SliceCondition::NoCrossing, checked, v));

            let u = cutting_set(q, family.level(q.orbit_of(x)), x);
            let mut v = Vec::new();
            let mut checked = 0;
            for y in 0..n {
                if intersects(sx, &s[y]) {
                    checked += 1;
                    if let Some(z) = intersection_is_open(gs, sx, &s[y], &u) {
                        v.push(viol(SliceCondition::IntersectionOpen, Some(y), None, Some(z)));
                    }
                }
            }
            out.push((SliceCondition::IntersectionOpen, checked, v));

            let mut v = Vec::new();
            let mut checked = 0;
            for &y in sx {
                for g in gs.group().elements() {
                    let Some(gx) = gs.act(g, x) else { continue };
                    checked += 1;
                    if stab.binary_search(&g).is_err() && intersects(&s[y], &s[gx]) {
                        v.push(viol(SliceCondition::ConditionC, Some(y), Some(g), Some(gx)));
                    }
                }
            }
            out.push((SliceCondition::ConditionC, checked, v));

            let v = if is_connected_set(nb, sx) {
                vec![]
            } else {
                vec![viol(SliceCondition::Connected, None, None, None)]
            };
            out.push((SliceCondition::Connected, 1, v));
            out
        })
        .collect();

    let results = SliceCondition::ALL
        .iter()
        .map(|&c| {
            let mut checked = 0;
            let mut violations = Vec::new();
            for entries in &per_point {
                for (cond, k, v) in entries {
                    if *cond == c {
                        checked += k;
                        violations.extend(v.iter().cloned());
                    }
                }
            }
            ConditionResult {
                condition: c,
                checked,
                violations,
            }
        })
        .collect();
    ConditionReport {
        results,
        degenerate: family.is_degenerate(),
        nesting: family.nesting_statistic(),
    }
}

/// `S_x ∩ p⁻¹(U)` for a set `U` of orbits given as a mask.
pub fn subslice(family: &SliceFamily, q: &Quotient, x: Point, u: &[bool]) -> Result<Vec<Point>, SliceError> {
    if !u[q.orbit_of(x)] {
        return Err(SliceError::EmptyResult { x });
    }
    Ok(family.slice(x).iter().copied().filter(|&z| u[q.orbit_of(z)]).collect())
}

/// `S_x(ε) = S_x ∩ p⁻¹(K_d(px, ε))`.
pub fn subslice_ball(family: &SliceFamily, q: &Quotient, x: Point, eps: f64) -> Result<Vec<Point>, SliceError> {
    subslice(family, q, x, &q.ball(q.orbit_of(x), eps))
}
