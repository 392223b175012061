//! Built-in G-space presets and a random generator for small G-spaces.
//!
//! The presets sample the classical actions on the line and the plane:
//! rotations of a circle (a covering of a smaller circle), the reflection
//! `t -> -t`, integer shifts `t -> t + n` (truncated, as a partial action),
//! the dihedral group of a polygon, and quarter turns of a square grid
//! (which have a fixed point).

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::path::{Path, PathBuf};

use crate::gspace::{ActionError, FiniteGroup, GroupError, Point, SampledGSpace, SampledSpace, SpaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("cannot read G-space file {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed G-space file: {0}")]
    Parse(String),
}

/// Scenario selector with parameters, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// `n` equally spaced points on the unit circle, cyclic group of order
    /// `k` rotating by `n/k` steps.
    Circle { n: usize, k: usize },
    /// `2m+1` points at spacing `h`, negation.
    Reflection { m: usize, h: f64 },
    /// `n` polygon vertices with the dihedral group of order `2n`.
    Dihedral { n: usize },
    /// `grid x grid` square lattice with quarter-turn rotations; `3` or
    /// `"3x3"`.
    Disk {
        #[serde(deserialize_with = "grid_size")]
        grid: usize,
    },
    /// `2m+1` points at spacing `h`, shifts by at most `shifts` unit periods.
    Shift { m: usize, h: f64, shifts: usize },
    /// Random small G-space drawn from a seed.
    Random { seed: u64 },
    /// G-space stored in the JSON format of [`GSpaceFile`].
    File { path: PathBuf },
}

fn grid_size<'de, D: serde::Deserializer<'de>>(de: D) -> Result<usize, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Grid {
        Side(usize),
        Text(String),
    }
    match Grid::deserialize(de)? {
        Grid::Side(n) => Ok(n),
        Grid::Text(s) => parse_grid(&s).map_err(serde::de::Error::custom),
    }
}

/// Multiplication table with optional generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub mul: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<usize>>,
}

/// On-disk form of a G-space: `act[g][x]` is the image of point `x` under
/// element `g`, or `null` where undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GSpaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub metric: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    pub group: GroupFile,
    pub act: Vec<Vec<Option<usize>>>,
}

impl GSpaceFile {
    pub fn from_gspace(gs: &SampledGSpace) -> Self {
        GSpaceFile {
            labels: Some(gs.space().labels().to_vec()),
            metric: gs.space().base_metric().to_vec(),
            edges: gs.space().edges(),
            group: GroupFile {
                mul: gs.group().table().to_vec(),
                generators: gs.group().generators().map(<[usize]>::to_vec),
            },
            act: gs.maps().to_vec(),
        }
    }

    /// Validate and bind.
    pub fn into_gspace(self) -> Result<SampledGSpace, ScenarioError> {
        let group = FiniteGroup::from_table(self.group.mul, self.group.generators)?;
        let mut space = SampledSpace::new(self.metric, &self.edges)?;
        if let Some(labels) = self.labels {
            space = space.with_labels(labels)?;
        }
        Ok(SampledGSpace::bind(space, group, self.act)?)
    }
}

/// Read a G-space from a JSON file.
pub fn load_gspace(path: &Path) -> Result<SampledGSpace, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let file: GSpaceFile = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    file.into_gspace()
}

/// A generated G-space together with the points on which checks are
/// meaningful.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub gspace: SampledGSpace,
    /// `Some(mask)` when truncation distorts the action near the sample
    /// boundary; checks are restricted to points with `mask[x]`.
    pub region: Option<Vec<bool>>,
    pub notes: Vec<String>,
}

/// Build the G-space named by `spec`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    let plain = |name: String, gspace| Scenario {
        name,
        gspace,
        region: None,
        notes: Vec::new(),
    };
    Ok(match spec {
        ScenarioSpec::File { path } => plain(format!("file({})", path.display()), load_gspace(path)?),
        &ScenarioSpec::Circle { n, k } => plain(format!("circle({n},{k})"), circle(n, k)?),
        &ScenarioSpec::Reflection { m, h } => plain(format!("reflection({m},{h})"), reflection(m, h)?),
        &ScenarioSpec::Dihedral { n } => plain(format!("dihedral({n})"), dihedral(n)?),
        &ScenarioSpec::Disk { grid } => plain(format!("disk({grid}x{grid})"), disk(grid)?),
        &ScenarioSpec::Random { seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            plain(format!("random({seed})"), random_small(&mut rng))
        }
        &ScenarioSpec::Shift { m, h, shifts } => {
            let gspace = shift(m, h, shifts)?;
            let margin = shifts as f64 * h * 0.5;
            let lo = -(m as f64) * h;
            let hi = m as f64 * h;
            let region = (0..2 * m + 1)
                .map(|i| {
                    let t = lo + i as f64 * h;
                    (t - lo) > margin && (hi - t) > margin
                })
                .collect();
            Scenario {
                name: format!("shift({m},{h},{shifts})"),
                gspace,
                region: Some(region),
                notes: vec![
                    format!(
                        "shift: checks restricted to points farther than {margin} from the sample boundary"
                    ),
                    "shift: orbits are chains of defined translations inside the sample, a subset of the full integer orbit".into(),
                ],
            }
        }
    })
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn cyclic_arc_space(n: usize) -> Result<SampledSpace, ScenarioError> {
    let step = TAU / n as f64;
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
    let edges: Vec<(Point, Point)> = if n < 2 {
        vec![]
    } else {
        (0..n).map(|i| (i, (i + 1) % n)).filter(|(a, b)| a != b).collect()
    };
    let labels = (0..n).map(|i| format!("{}deg", trim_float(360.0 * i as f64 / n as f64))).collect();
    Ok(SampledSpace::new(metric, &edges)?.with_labels(labels)?)
}

fn line_space(m: usize, h: f64) -> Result<SampledSpace, ScenarioError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(ScenarioError::InvalidParams(format!("spacing h = {h} must be positive")));
    }
    let n = 2 * m + 1;
    let t: Vec<f64> = (0..n).map(|i| (i as f64 - m as f64) * h).collect();
    let metric = t.iter().map(|a| t.iter().map(|b| (a - b).abs()).collect()).collect();
    let edges: Vec<(Point, Point)> = (1..n).map(|i| (i - 1, i)).collect();
    let labels = t.iter().map(|&v| trim_float(v)).collect();
    Ok(SampledSpace::new(metric, &edges)?.with_labels(labels)?)
}

/// `n` points on the unit circle with arc-length metric, rotated by the
/// cyclic group of order `k` (requires `k | n`).
pub fn circle(n: usize, k: usize) -> Result<SampledGSpace, ScenarioError> {
    if n == 0 || k == 0 || !n.is_multiple_of(k) {
        return Err(ScenarioError::InvalidParams(format!(
            "circle needs n > 0 and k dividing n (n = {n}, k = {k})"
        )));
    }
    let step = n / k;
    let act = (0..k).map(|g| (0..n).map(|x| Some((x + g * step) % n)).collect()).collect();
    Ok(SampledGSpace::bind(cyclic_arc_space(n)?, FiniteGroup::cyclic(k), act)?)
}

/// `2m+1` points `{-m h, ..., m h}` with the involution `t -> -t`.
pub fn reflection(m: usize, h: f64) -> Result<SampledGSpace, ScenarioError> {
    let space = line_space(m, h)?;
    let n = space.len();
    let act = vec![(0..n).map(Some).collect(), (0..n).map(|x| Some(n - 1 - x)).collect()];
    Ok(SampledGSpace::bind(space, FiniteGroup::cyclic(2), act)?)
}

/// Vertices of a regular `n`-gon with the dihedral group of order `2n`
/// (`r: x -> x+1`, `s: x -> -x`).
pub fn dihedral(n: usize) -> Result<SampledGSpace, ScenarioError> {
    if n < 3 {
        return Err(ScenarioError::InvalidParams(format!("dihedral needs n >= 3 (n = {n})")));
    }
    let group = FiniteGroup::dihedral(n);
    let act = group
        .elements()
        .map(|g| {
            let (a, b) = (g % n, g / n);
            (0..n)
                .map(|x| Some(if b == 0 { (a + x) % n } else { (a + n - x) % n }))
                .collect()
        })
        .collect();
    Ok(SampledGSpace::bind(cyclic_arc_space(n)?, group, act)?)
}

/// `size x size` lattice centred at the origin, Euclidean metric,
/// 4-neighbour adjacency, quarter turns about the centre.
pub fn disk(size: usize) -> Result<SampledGSpace, ScenarioError> {
    if size == 0 {
        return Err(ScenarioError::InvalidParams("disk grid must be non-empty".into()));
    }
    let idx = |i: usize, j: usize| i * size + j;
    let c = (size as f64 - 1.0) / 2.0;
    let coords: Vec<(f64, f64)> = (0..size * size)
        .map(|p| ((p / size) as f64 - c, (p % size) as f64 - c))
        .collect();
    let metric = coords
        .iter()
        .map(|&(x0, y0)| coords.iter().map(|&(x1, y1)| (x0 - x1).hypot(y0 - y1)).collect())
        .collect();
    let mut edges = Vec::new();
    for i in 0..size {
        for j in 0..size {
            if i + 1 < size {
                edges.push((idx(i, j), idx(i + 1, j)));
            }
            if j + 1 < size {
                edges.push((idx(i, j), idx(i, j + 1)));
            }
        }
    }
    let labels = (0..size * size).map(|p| format!("r{}c{}", p / size, p % size)).collect();
    let space = SampledSpace::new(metric, &edges)?.with_labels(labels)?;
    // (i, j) -> (size-1-j, i) is a quarter turn
    let quarter = |p: usize| idx(size - 1 - p % size, p / size);
    let act = (0..4)
        .map(|k| {
            (0..size * size)
                .map(|p| {
                    let mut q = p;
                    for _ in 0..k {
                        q = quarter(q);
                    }
                    Some(q)
                })
                .collect()
        })
        .collect();
    Ok(SampledGSpace::bind(space, FiniteGroup::cyclic(4), act)?)
}

/// Parse a `RxC` grid size; only square grids are rotation symmetric.
pub fn parse_grid(s: &str) -> Result<usize, ScenarioError> {
    let bad = || ScenarioError::InvalidParams(format!("grid '{s}' is not of the form NxN"));
    let (r, c) = match s.split_once(['x', 'X']) {
        Some((r, c)) => (r.trim().parse::<usize>().map_err(|_| bad())?, c.trim().parse::<usize>().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse::<usize>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if r != c {
        return Err(ScenarioError::InvalidParams(format!(
            "grid {r}x{c} is not rotation symmetric"
        )));
    }
    Ok(r)
}

/// Line sample with integer shifts `t -> t + j`, `|j| <= shifts`, acting
/// partially (undefined where the image leaves the sample).
///
/// The shifts are realised in a cyclic group of order
/// `max(4*shifts + 1, 2*P + 1)`, `P` the number of whole periods spanned by
/// the sample: element `j` with balanced representative `|j~| <= shifts`
/// translates by `j~` periods, the remaining elements act nowhere. The first
/// bound keeps products of two acting shifts from wrapping onto a different
/// acting shift (so the partial action is a homomorphism wherever both
/// sides are defined); the second keeps chains of shifts inside the sample
/// from wrapping, so distinct points of an orbit get distinct cosets.
pub fn shift(m: usize, h: f64, shifts: usize) -> Result<SampledGSpace, ScenarioError> {
    if shifts == 0 {
        return Err(ScenarioError::InvalidParams("shift needs at least one shift".into()));
    }
    let space = line_space(m, h)?;
    let per_period = (1.0 / h).round();
    if per_period < 1.0 || ((1.0 / h) - per_period).abs() > 1e-9 {
        return Err(ScenarioError::InvalidParams(format!(
            "spacing h = {h} must divide the unit period"
        )));
    }
    let per_period = per_period as i64;
    let n = space.len() as i64;
    let periods = ((n - 1) / per_period) as usize;
    let order = (4 * shifts + 1).max(2 * periods + 1);
    let act = (0..order)
        .map(|g| {
            let rep = if g <= 2 * shifts { g as i64 } else { g as i64 - order as i64 };
            (0..n)
                .map(|x| {
                    if rep.unsigned_abs() as usize > shifts {
                        return None;
                    }
                    let y = x + rep * per_period;
                    (0..n).contains(&y).then_some(y as usize)
                })
                .collect()
        })
        .collect();
    Ok(SampledGSpace::bind(space, FiniteGroup::cyclic(order), act)?)
}

/// A random G-space with at most 16 points and a cyclic (order <= 8) or
/// dihedral (order <= 8) group, acting on disjoint unions of coset spaces
/// `G/H` and preserving a random connected graph.
pub fn random_small<R: Rng>(rng: &mut R) -> SampledGSpace {
    let group = if rng.gen_bool(0.5) {
        FiniteGroup::cyclic(rng.gen_range(1..=8))
    } else {
        FiniteGroup::dihedral(rng.gen_range(1..=4))
    };
    let subgroups = group.subgroups();
    let order = group.order();

    // point = (orbit, coset index); coset spaces are enumerated by first
    // element in ascending order
    let mut cosets_per_orbit: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut total = 0;
    let want = rng.gen_range(1..=4);
    for _ in 0..16 {
        if cosets_per_orbit.len() >= want {
            break;
        }
        let h = subgroups.choose(rng).expect("a group has subgroups");
        let size = order / h.len();
        if total + size > 16 {
            continue;
        }
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        for g in group.elements() {
            let mut c: Vec<usize> = h.iter().map(|&u| group.mul(g, u)).collect();
            c.sort_unstable();
            if !cosets.contains(&c) {
                cosets.push(c);
            }
        }
        total += size;
        cosets_per_orbit.push(cosets);
    }
    if cosets_per_orbit.is_empty() {
        // the whole group as a subgroup always fits
        cosets_per_orbit.push(vec![group.elements().collect()]);
        total = 1;
    }
    let mut offset = Vec::new();
    let mut acc = 0;
    for c in &cosets_per_orbit {
        offset.push(acc);
        acc += c.len();
    }
    let n = total;
    let mut act = vec![vec![None; n]; order];
    for (o, cosets) in cosets_per_orbit.iter().enumerate() {
        for (i, c) in cosets.iter().enumerate() {
            for (k, row) in act.iter_mut().enumerate() {
                let rep = group.mul(k, c[0]);
                let j = cosets.iter().position(|d| d.binary_search(&rep).is_ok()).expect("cosets partition G");
                row[offset[o] + i] = Some(offset[o] + j);
            }
        }
    }
    let mut edge_set = std::collections::BTreeSet::new();
    let add_orbit_of_edge = |u: usize, v: usize, edge_set: &mut std::collections::BTreeSet<(usize, usize)>| {
        for row in &act {
            let (a, b) = (row[u].unwrap(), row[v].unwrap());
            if a != b {
                edge_set.insert((a.min(b), a.max(b)));
            }
        }
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        add_orbit_of_edge(j, i, &mut edge_set);
    }
    for _ in 0..rng.gen_range(0..3) {
        if n >= 2 {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v {
                add_orbit_of_edge(u, v, &mut edge_set);
            }
        }
    }
    let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
    let mut neighbors = vec![Vec::new(); n];
    for &(u, v) in &edges {
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    let metric = (0..n)
        .map(|s| {
            let mut dist = vec![f64::INFINITY; n];
            dist[s] = 0.0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &neighbors[u] {
                    if dist[v].is_infinite() {
                        dist[v] = dist[u] + 1.0;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect();
    let space = SampledSpace::new(metric, &edges).expect("hop metric of a connected graph");
    SampledGSpace::bind(space, group, act).expect("coset action preserves the orbit-closed edge set")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let gs = shift(4, 0.5, 1).unwrap();
        let json = serde_json::to_string(&GSpaceFile::from_gspace(&gs)).unwrap();
        let back: GSpaceFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_gspace().unwrap(), gs);
    }

    #[test]
    fn grid_accepts_text() {
        let spec: ScenarioSpec = serde_json::from_str(r#"{"name":"disk","grid":"3x3"}"#).unwrap();
        assert_eq!(spec, ScenarioSpec::Disk { grid: 3 });
        assert!(serde_json::from_str::<ScenarioSpec>(r#"{"name":"disk","grid":"3x4"}"#).is_err());
        assert!(serde_json::from_str::<ScenarioSpec>(r#"{"name":"circle","n":12,"k":3,"x":1}"#).is_err());
    }

    #[test]
    fn circle_12_3() {
        let gs = circle(12, 3).unwrap();
        assert_eq!(gs.len(), 12);
        assert_eq!(gs.group().order(), 3);
        assert!((0..12).all(|x| gs.stabilizer(x).len() == 1));
        assert_eq!(gs.space().labels()[3], "90deg");
    }

    #[test]
    fn circle_requires_divisibility() {
        assert!(matches!(circle(10, 3), Err(ScenarioError::InvalidParams(_))));
    }

    #[test]
    fn reflection_2_1() {
        let gs = reflection(2, 1.0).unwrap();
        assert_eq!(gs.len(), 5);
        assert_eq!(gs.stabilizer(2).len(), 2);
        assert_eq!(gs.space().labels(), &["-2", "-1", "0", "1", "2"]);
    }

    #[test]
    fn disk_3x3() {
        let gs = disk(3).unwrap();
        assert_eq!(gs.len(), 9);
        assert_eq!(gs.stabilizer(4).len(), 4);
        let q = crate::quotient::compute_orbits(&gs);
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn grid_must_be_square() {
        assert_eq!(parse_grid("3x3").unwrap(), 3);
        assert!(matches!(parse_grid("3x4"), Err(ScenarioError::InvalidParams(_))));
    }

    #[test]
    fn dihedral_is_transitive() {
        let gs = dihedral(8).unwrap();
        assert_eq!(gs.group().order(), 16);
        assert_eq!(crate::quotient::compute_orbits(&gs).len(), 1);
        assert!((0..8).all(|x| gs.stabilizer(x).len() == 2));
    }

    #[test]
    fn shift_is_partial_and_periodic() {
        let gs = shift(40, 0.25, 3).unwrap();
        assert_eq!(gs.len(), 81);
        assert_eq!(gs.group().order(), 41);
        assert_eq!(gs.act(1, 0), Some(4));
        assert_eq!(gs.act(40, 4), Some(0));
        assert_eq!(gs.act(1, 80), None);
        assert_eq!(gs.act(4, 0), None);
        assert_eq!(shift(2, 0.5, 3).unwrap().group().order(), 13);
        assert_eq!(crate::quotient::compute_orbits(&gs).len(), 4);
    }

    #[test]
    fn shift_spacing_must_divide_period() {
        assert!(matches!(shift(4, 0.3, 1), Err(ScenarioError::InvalidParams(_))));
    }

    #[test]
    fn random_spaces_are_valid_and_small() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let gs = random_small(&mut rng);
            assert!(gs.len() <= 16 && gs.group().order() <= 8);
            assert!(gs.is_total_action());
        }
    }
}
