//! Verification of the lifted metric: axioms, invariance, the lower bound
//! `ρ >= d∘p`, local isometry for covering lifts, ball inclusions between
//! `ρ`-balls and translated subslices, and consistency with the quotient.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::gspace::{Elem, Point, SampledGSpace};
use crate::lift::{AllowabilityGraph, EdgeKind, LiftMode, LiftedMetric};
use crate::metric::{check_metric, realized_grid, MetricCheck, EXACT_TOLERANCE};
use crate::orbital::{GroupMetric, OrbitalMetric, PropertyReport};
use crate::quotient::Quotient;
use crate::slices::{subslice_ball, ConditionReport, SliceFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Advisory,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Advisory => "ADVISORY",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub max_residual: f64,
    pub witness: String,
}

/// Ordered list of named checks.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, name: impl Into<String>, status: Status, max_residual: f64, witness: impl Into<String>) {
        let name = name.into();
        debug_assert!(self.get(&name).is_none(), "duplicate check {name}");
        self.checks.push(Check {
            name,
            status,
            max_residual: max_residual.max(0.0),
            witness: witness.into(),
        });
    }

    /// Pass when `ok`, fail otherwise.
    pub fn verdict(&mut self, name: impl Into<String>, ok: bool, max_residual: f64, witness: impl Into<String>) {
        self.push(name, if ok { Status::Pass } else { Status::Fail }, max_residual, witness);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for c in other.checks {
            self.push(c.name, c.status, c.max_residual, c.witness);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    /// Keep checks whose name equals `filter` or starts with `filter.`.
    pub fn only(&self, filter: &str) -> VerificationReport {
        VerificationReport {
            checks: self
                .checks
                .iter()
                .filter(|c| c.name == filter || c.name.starts_with(&format!("{filter}.")))
                .cloned()
                .collect(),
        }
    }

    /// 3 when the lift is disconnected, 2 on any failure, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.get("lift.connectivity").is_some_and(|c| c.status == Status::Advisory) {
            3
        } else if self.count(Status::Fail) > 0 {
            2
        } else {
            0
        }
    }

    /// Tab-separated lines plus a summary line.
    pub fn render(&self) -> String {
        let mut out = String::from("# NAME\tSTATUS\tRESIDUAL\tWITNESS\n");
        for c in &self.checks {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", c.name, c.status, format_sig(c.max_residual), c.witness));
        }
        out.push_str(&format!(
            "# summary\tpass={}\tfail={}\tadvisory={}\texit={}\n",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Advisory),
            self.exit_code()
        ));
        out
    }
}

/// Nine significant digits, trailing zeros trimmed, `inf` for infinity.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

fn in_region(region: Option<&[bool]>, x: Point) -> bool {
    region.is_none_or(|r| r[x])
}

fn diff(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs()
    }
}

/// Axioms, connectivity, invariance, lower bound, positivity, local
/// isometry (cover and naive modes) and the nearest-neighbour
/// compatibility advisory.
pub fn verify_lifted_metric(
    gs: &SampledGSpace,
    q: &Quotient,
    lifted: &LiftedMetric,
    graph: Option<&AllowabilityGraph>,
    region: Option<&[bool]>,
    tol: f64,
) -> VerificationReport {
    let n = gs.len();
    let mut rep = VerificationReport::default();
    let pts: Vec<Point> = (0..n).filter(|&x| in_region(region, x)).collect();
    let sub: Vec<Vec<f64>> = pts.iter().map(|&a| pts.iter().map(|&b| lifted.rho(a, b)).collect()).collect();

    let axioms = check_metric(
        &sub,
        MetricCheck {
            tolerance: tol,
            allow_infinite: true,
            pseudo: false,
        },
    );
    match axioms {
        Ok(()) => rep.verdict("lift.metric-axioms", true, 0.0, ""),
        Err(v) => rep.verdict("lift.metric-axioms", false, v.residual(), v.to_string()),
    }

    let comps = lifted.components();
    if comps.len() == 1 {
        rep.push("lift.connectivity", Status::Pass, 0.0, "");
    } else {
        let listed: Vec<String> = comps.iter().take(8).map(|c| format!("{c:?}")).collect();
        rep.push(
            "lift.connectivity",
            Status::Advisory,
            f64::INFINITY,
            format!("{} components: {}", comps.len(), listed.join(" ")),
        );
    }

    let total: Vec<Elem> = gs.total_elements().collect();
    let (worst, wit) = pts
        .par_iter()
        .map(|&x| {
            let mut worst = (0.0f64, String::new());
            for &y in &pts {
                for &g in &total {
                    let (gx, gy) = (gs.act(g, x).unwrap(), gs.act(g, y).unwrap());
                    let r = diff(lifted.rho(gx, gy), lifted.rho(x, y));
                    if r > worst.0 {
                        worst = (r, format!("x={x} y={y} g={g}"));
                    }
                }
            }
            worst
        })
        .reduce(|| (0.0, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    rep.verdict("lift.invariance", worst <= EXACT_TOLERANCE, worst, wit);

    let partial: Vec<Elem> = gs.group().elements().filter(|&g| !gs.is_total(g)).collect();
    if !partial.is_empty() {
        let mut worst = (0.0f64, String::new());
        for &x in &pts {
            for &y in &pts {
                for &g in &partial {
                    let (Some(gx), Some(gy)) = (gs.act(g, x), gs.act(g, y)) else { continue };
                    if !in_region(region, gx) || !in_region(region, gy) {
                        continue;
                    }
                    let r = diff(lifted.rho(gx, gy), lifted.rho(x, y));
                    if r > worst.0 {
                        worst = (r, format!("x={x} y={y} g={g}"));
                    }
                }
            }
        }
        let status = if worst.0 <= EXACT_TOLERANCE { Status::Pass } else { Status::Advisory };
        rep.push("lift.invariance-partial", status, worst.0, worst.1);
    }

    let mut worst = (0.0f64, String::new());
    for &x in &pts {
        for &y in &pts {
            let r = q.dp(x, y) - lifted.rho(x, y);
            if r > worst.0 {
                worst = (r, format!("x={x} y={y}"));
            }
        }
    }
    rep.verdict("lift.lower-bound", worst.0 <= tol, worst.0, worst.1);

    let mut bad = None;
    let mut min_pos = f64::INFINITY;
    for &x in &pts {
        for &y in &pts {
            if x != y && q.orbit_of(x) == q.orbit_of(y) {
                let r = lifted.rho(x, y);
                min_pos = min_pos.min(r);
                if r <= tol && bad.is_none() {
                    bad = Some(format!("x={x} y={y}"));
                }
            }
        }
    }
    let wit = bad.clone().unwrap_or_else(|| {
        if min_pos.is_finite() {
            format!("min={}", format_sig(min_pos))
        } else {
            String::new()
        }
    });
    rep.verdict("lift.orbit-positivity", bad.is_none(), 0.0, wit);

    if matches!(lifted.mode(), LiftMode::Cover | LiftMode::Naive) {
        let (ok, resid, wit) = local_isometry(q, lifted, graph, &pts);
        rep.verdict("lift.local-isometry", ok, resid, wit);
    }

    let mut misses = Vec::new();
    for &x in &pts {
        let min = pts
            .iter()
            .filter(|&&y| y != x)
            .map(|&y| lifted.rho(x, y))
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            continue;
        }
        let nearest: Vec<Point> = pts
            .iter()
            .copied()
            .filter(|&y| y != x && lifted.rho(x, y) <= min + tol)
            .collect();
        if !nearest.iter().any(|&y| gs.space().adjacent(x, y) || q.orbit_of(x) == q.orbit_of(y)) {
            misses.push(x);
        }
    }
    if misses.is_empty() {
        rep.push("lift.compatibility", Status::Pass, 0.0, "");
    } else {
        rep.push(
            "lift.compatibility",
            Status::Advisory,
            misses.len() as f64,
            format!("nearest neighbours neither adjacent nor in orbit at {misses:?}"),
        );
    }
    rep
}

/// `ρ = d∘p` on every elementary step, and on the closed `ρ`-ball of each
/// point at its smallest positive distance `p` is injective and isometric.
fn local_isometry(q: &Quotient, lifted: &LiftedMetric, graph: Option<&AllowabilityGraph>, pts: &[Point]) -> (bool, f64, String) {
    let mut worst = 0.0f64;
    let mut first: Option<String> = None;
    if let Some(g) = graph {
        for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Elementary) {
            let r = diff(lifted.rho(e.u, e.v), q.dp(e.u, e.v));
            worst = worst.max(r);
            if r > EXACT_TOLERANCE && first.is_none() {
                first = Some(format!("edge u={} v={}", e.u, e.v));
            }
        }
    }
    for &x in pts {
        let r = pts
            .iter()
            .map(|&y| lifted.rho(x, y))
            .filter(|&v| v > 0.0 && v.is_finite())
            .fold(f64::INFINITY, f64::min);
        if !r.is_finite() {
            continue;
        }
        let ball: Vec<Point> = pts.iter().copied().filter(|&y| lifted.rho(x, y) <= r + EXACT_TOLERANCE).collect();
        for (i, &a) in ball.iter().enumerate() {
            for &b in &ball[i + 1..] {
                if q.orbit_of(a) == q.orbit_of(b) {
                    worst = f64::INFINITY;
                    if first.is_none() {
                        first = Some(format!("x={x} ball radius {} holds {a} and {b} over one orbit", format_sig(r)));
                    }
                    continue;
                }
                let d = diff(lifted.rho(a, b), q.dp(a, b));
                worst = worst.max(d);
                if d > EXACT_TOLERANCE && first.is_none() {
                    first = Some(format!("x={x} a={a} b={b}"));
                }
            }
        }
    }
    (first.is_none(), worst, first.unwrap_or_default())
}

/// `B(δ) = {g : d_G(g, e) < δ}`.
pub fn group_ball(dg: &GroupMetric, delta: f64) -> Vec<Elem> {
    dg.group().elements().filter(|&g| dg.norm(g) < delta).collect()
}

/// `B(δ) · S_x(s)`, sorted.
pub fn translated_subslice(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, dg: &GroupMetric, x: Point, delta: f64, s: f64) -> Vec<Point> {
    let ys = subslice_ball(family, q, x, s).expect("positive radius");
    let mut out: Vec<Point> = group_ball(dg, delta)
        .into_iter()
        .flat_map(|g| ys.iter().filter_map(move |&y| gs.act(g, y)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Open `ρ`-ball `K_ρ(x, ε)`, sorted.
pub fn rho_ball(lifted: &LiftedMetric, x: Point, eps: f64) -> Vec<Point> {
    (0..lifted.len()).filter(|&y| lifted.rho(x, y) < eps).collect()
}

fn subset(a: &[Point], b: &[Point]) -> bool {
    a.iter().all(|z| b.binary_search(z).is_ok())
}

/// `B(δ) S_x(δ) ⊆ K_ρ(x, ε)`.
#[allow(clippy::too_many_arguments)]
pub fn inner_inclusion(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, dg: &GroupMetric, lifted: &LiftedMetric, x: Point, eps: f64, delta: f64) -> bool {
    subset(&translated_subslice(gs, q, family, dg, x, delta, delta), &rho_ball(lifted, x, eps))
}

/// `K_ρ(x, ε) ⊆ B(δ) S_x(ε)`.
#[allow(clippy::too_many_arguments)]
pub fn outer_inclusion(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, dg: &GroupMetric, lifted: &LiftedMetric, x: Point, eps: f64, delta: f64) -> bool {
    subset(&rho_ball(lifted, x, eps), &translated_subslice(gs, q, family, dg, x, delta, eps))
}

/// Grid of realized values of `ρ`, `d`, `d_G` and `d_O`, with midpoints and
/// one value past the maximum.
pub fn inclusion_grid(q: &Quotient, dg: &GroupMetric, d_o: &OrbitalMetric, lifted: &LiftedMetric) -> Vec<f64> {
    realized_grid(
        lifted
            .table()
            .iter()
            .flatten()
            .chain(q.table().iter().flatten())
            .chain(dg.table().iter().flatten())
            .chain(d_o.table().iter().flatten())
            .copied(),
        EXACT_TOLERANCE,
    )
}

/// For every `(x, ε)` find the largest grid `δ` with
/// `B(δ) S_x(δ) ⊆ K_ρ(x, ε)`, and for every `(x, δ)` the smallest grid `ε`
/// with `K_ρ(x, ε) ⊆ B(δ) S_x(ε)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_ball_inclusions(
    gs: &SampledGSpace,
    q: &Quotient,
    family: &SliceFamily,
    dg: &GroupMetric,
    d_o: &OrbitalMetric,
    lifted: &LiftedMetric,
    region: Option<&[bool]>,
) -> VerificationReport {
    let grid = inclusion_grid(q, dg, d_o, lifted);
    let pts: Vec<Point> = (0..gs.len()).filter(|&x| in_region(region, x)).collect();
    let mut rep = VerificationReport::default();

    // the inner inclusion is monotone in δ, so bisect for the largest witness
    #[allow(clippy::type_complexity)]
    let inner: Vec<(Point, Vec<(f64, Option<f64>)>)> = pts
        .par_iter()
        .map(|&x| {
            let rows = grid
                .iter()
                .map(|&eps| {
                    let holds = |i: usize| inner_inclusion(gs, q, family, dg, lifted, x, eps, grid[i]);
                    if !holds(0) {
                        return (eps, None);
                    }
                    let (mut lo, mut hi) = (0usize, grid.len());
                    while hi - lo > 1 {
                        let mid = (lo + hi) / 2;
                        if holds(mid) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    (eps, Some(grid[lo]))
                })
                .collect();
            (x, rows)
        })
        .collect();
    let mut missing = Vec::new();
    let mut instances = 0;
    for (x, rows) in &inner {
        for (eps, w) in rows {
            instances += 1;
            if w.is_none() {
                missing.push(format!("x={x} eps={}", format_sig(*eps)));
            }
        }
    }
    let wit = if missing.is_empty() {
        format!("{instances} instances witnessed")
    } else {
        missing.iter().take(4).cloned().collect::<Vec<_>>().join("; ")
    };
    rep.verdict("balls.inner-inclusion", missing.is_empty(), missing.len() as f64, wit);

    let outer: Vec<Vec<(Point, f64, Option<f64>)>> = pts
        .par_iter()
        .map(|&x| {
            grid.iter()
                .map(|&delta| {
                    let w = grid.iter().copied().find(|&eps| outer_inclusion(gs, q, family, dg, lifted, x, eps, delta));
                    (x, delta, w)
                })
                .collect()
        })
        .collect();
    let missing: Vec<String> = outer
        .iter()
        .flatten()
        .filter(|r| r.2.is_none())
        .map(|(x, d, _)| format!("x={x} delta={}", format_sig(*d)))
        .collect();
    let instances = outer.iter().map(Vec::len).sum::<usize>();
    let wit = if missing.is_empty() {
        format!("{instances} instances witnessed")
    } else {
        missing.iter().take(4).cloned().collect::<Vec<_>>().join("; ")
    };
    rep.verdict("balls.outer-inclusion", missing.is_empty(), missing.len() as f64, wit);
    rep
}

/// Witness tables from [`verify_ball_inclusions`]'s searches, for callers
/// that want them per instance: `(x, ε, largest δ)`.
#[allow(clippy::too_many_arguments)]
pub fn inner_witnesses(gs: &SampledGSpace, q: &Quotient, family: &SliceFamily, dg: &GroupMetric, lifted: &LiftedMetric, x: Point, grid: &[f64]) -> Vec<(f64, Option<f64>)> {
    grid.iter()
        .map(|&eps| {
            let w = grid.iter().rev().copied().find(|&delta| inner_inclusion(gs, q, family, dg, lifted, x, eps, delta));
            (eps, w)
        })
        .collect()
}

/// `d'(P, Q) = min ρ(a, b)` over `a ∈ P`, `b ∈ Q`.
pub fn induced_quotient(q: &Quotient, lifted: &LiftedMetric) -> Vec<Vec<f64>> {
    let k = q.n_orbits();
    let mut d = vec![vec![f64::INFINITY; k]; k];
    for a in 0..lifted.len() {
        for b in 0..lifted.len() {
            let (p, r) = (q.orbit_of(a), q.orbit_of(b));
            d[p][r] = d[p][r].min(lifted.rho(a, b));
        }
    }
    d
}

/// Compare `d'` with `d` (advisory) and check `d'` is a metric.
pub fn quotient_consistency(q: &Quotient, lifted: &LiftedMetric, tol: f64) -> VerificationReport {
    let mut rep = VerificationReport::default();
    if !lifted.is_connected() {
        rep.push("quotient.consistency", Status::Advisory, f64::INFINITY, "lift is disconnected, skipped");
        rep.push("quotient.induced-metric", Status::Advisory, f64::INFINITY, "lift is disconnected, skipped");
        return rep;
    }
    let dp = induced_quotient(q, lifted);
    let mut worst = (0.0f64, String::new());
    for (a, row) in dp.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            let r = (v - q.d(a, b)).abs();
            if r > worst.0 {
                worst = (r, format!("P={a} Q={b}"));
            }
        }
    }
    let status = if worst.0 <= tol { Status::Pass } else { Status::Advisory };
    rep.push("quotient.consistency", status, worst.0, worst.1);
    match check_metric(&dp, MetricCheck { tolerance: tol, ..MetricCheck::default() }) {
        Ok(()) => rep.verdict("quotient.induced-metric", true, 0.0, ""),
        Err(v) => rep.verdict("quotient.induced-metric", false, v.residual(), v.to_string()),
    }
    rep
}

/// Slice conditions as report lines.
pub fn slice_report(rep: &ConditionReport) -> VerificationReport {
    let mut out = VerificationReport::default();
    for r in &rep.results {
        let wit = match r.violations.first() {
            Some(v) => format!("{} violations, first {v}", r.violations.len()),
            None => format!("{} instances", r.checked),
        };
        out.verdict(format!("slices.{}", r.condition.name()), r.violations.is_empty(), r.violations.len() as f64, wit);
    }
    if rep.degenerate {
        out.push("slices.degenerate", Status::Advisory, 0.0, "every slice is a single point");
    } else {
        out.push("slices.degenerate", Status::Pass, 0.0, "");
    }
    let (ok, total) = rep.nesting;
    let status = if ok == total { Status::Pass } else { Status::Advisory };
    out.push("slices.nesting", status, (total - ok) as f64, format!("{ok}/{total} pairs nested"));
    out
}

/// Orbital properties as report lines.
pub fn property_report(rep: &PropertyReport) -> VerificationReport {
    let mut out = VerificationReport::default();
    for r in &rep.results {
        let wit = match r.failures.first() {
            Some(f) => format!("{} failures, first {f}", r.failures.len()),
            None => match &r.witness {
                Some(w) => format!("{} instances, e.g. {w}", r.instances),
                None => format!("{} instances", r.instances),
            },
        };
        out.verdict(format!("orbital.{}", r.name), r.passed(), r.max_residual, wit);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(2.0 * std::f64::consts::PI / 3.0), "2.0943951");
        assert_eq!(format_sig(std::f64::consts::PI / 6.0), "0.523598776");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(f64::INFINITY), "inf");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.5e-7), "1.50000000e-7");
    }

    #[test]
    fn planted_zero_distance_fails_axioms() {
        let gs = crate::scenario::reflection(1, 1.0).unwrap();
        let q = crate::quotient::quotient_metric(&gs, crate::quotient::compute_orbits(&gs), &Default::default()).unwrap();
        let rho = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]];
        let l = LiftedMetric::from_table(rho, LiftMode::General);
        let rep = verify_lifted_metric(&gs, &q, &l, None, None, 1e-9);
        let c = rep.get("lift.metric-axioms").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert!(c.witness.contains("d(0,2)"));
        assert_eq!(rep.exit_code(), 2);
    }

    #[test]
    fn only_filters_by_prefix() {
        let mut rep = VerificationReport::default();
        rep.verdict("lift.invariance", true, 0.0, "");
        rep.verdict("lift.lower-bound", true, 0.0, "");
        rep.verdict("slices.connected", true, 0.0, "");
        assert_eq!(rep.only("lift").checks.len(), 2);
        assert_eq!(rep.only("slices.connected").checks.len(), 1);
        assert_eq!(rep.only("lif").checks.len(), 0);
    }
}
