//! Exhaustive metric-axiom checks on finite distance tables.

use std::fmt;

/// Default comparison tolerance for distances.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Tolerance for quantities that are equal by construction (invariance
/// residuals, local isometry).
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// First violated axiom found by [`check_metric`], in scan order.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    NotSquare { row: usize, len: usize },
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize, residual: f64 },
    /// `d(i, j) = 0` for `i != j`.
    NotPositive { i: usize, j: usize },
    /// `d(i, k) > d(i, j) + d(j, k)` by `excess`.
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

impl MetricViolation {
    /// Size of the violation, zero-free for structural failures.
    pub fn residual(&self) -> f64 {
        match *self {
            MetricViolation::Negative { value, .. } => -value,
            MetricViolation::NonzeroDiagonal { value, .. } => value.abs(),
            MetricViolation::Asymmetric { residual, .. } => residual,
            MetricViolation::Triangle { excess, .. } => excess,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::NotSquare { row, len } => {
                write!(f, "row {row} has length {len}, table is not square")
            }
            MetricViolation::NonFinite { i, j } => write!(f, "d({i},{j}) is not finite"),
            MetricViolation::Negative { i, j, value } => write!(f, "d({i},{j}) = {value} < 0"),
            MetricViolation::NonzeroDiagonal { i, value } => write!(f, "d({i},{i}) = {value} != 0"),
            MetricViolation::Asymmetric { i, j, residual } => {
                write!(f, "d({i},{j}) != d({j},{i}) (residual {residual:e})")
            }
            MetricViolation::NotPositive { i, j } => write!(f, "d({i},{j}) = 0 for distinct points"),
            MetricViolation::Triangle { i, j, k, excess } => {
                write!(f, "d({i},{k}) > d({i},{j}) + d({j},{k}) by {excess:e}")
            }
        }
    }
}

/// Options for [`check_metric`].
#[derive(Debug, Clone, Copy)]
pub struct MetricCheck {
    pub tolerance: f64,
    /// Accept `+inf` off the diagonal (disconnected lifts).
    pub allow_infinite: bool,
    /// Accept zero distances between distinct points.
    pub pseudo: bool,
}

impl Default for MetricCheck {
    fn default() -> Self {
        MetricCheck {
            tolerance: DEFAULT_TOLERANCE,
            allow_infinite: false,
            pseudo: false,
        }
    }
}

/// Scan a square table for the first metric-axiom violation.
///
/// Scan order is fixed: shape, then entries row-major (finiteness, sign,
/// diagonal, symmetry, positivity), then triangles over `(i, j, k)`
/// row-major.
pub fn check_metric(table: &[Vec<f64>], opts: MetricCheck) -> Result<(), MetricViolation> {
    let n = table.len();
    for (row, r) in table.iter().enumerate() {
        if r.len() != n {
            return Err(MetricViolation::NotSquare { row, len: r.len() });
        }
    }
    let tol = opts.tolerance;
    for i in 0..n {
        for j in 0..n {
            let v = table[i][j];
            if v.is_nan() || (v.is_infinite() && !(opts.allow_infinite && i != j && v > 0.0)) {
                return Err(MetricViolation::NonFinite { i, j });
            }
            if v < -tol {
                return Err(MetricViolation::Negative { i, j, value: v });
            }
            if i == j && v.abs() > tol {
                return Err(MetricViolation::NonzeroDiagonal { i, value: v });
            }
            let w = table[j][i];
            let residual = if v.is_infinite() || w.is_infinite() {
                if v == w {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (v - w).abs()
            };
            if residual > tol {
                return Err(MetricViolation::Asymmetric { i, j, residual });
            }
            if i != j && !opts.pseudo && v <= tol {
                return Err(MetricViolation::NotPositive { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let dij = table[i][j];
            if dij.is_infinite() {
                continue;
            }
            for k in 0..n {
                let bound = dij + table[j][k];
                let dik = table[i][k];
                if bound.is_finite() && dik > bound + tol {
                    return Err(MetricViolation::Triangle {
                        i,
                        j,
                        k,
                        excess: dik - bound,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Largest triangle-inequality excess over the table (0 when it holds).
pub fn max_triangle_excess(table: &[Vec<f64>]) -> f64 {
    let n = table.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let bound = table[i][j] + table[j][k];
                if bound.is_finite() {
                    worst = worst.max(table[i][k] - bound);
                }
            }
        }
    }
    worst
}

/// Sorted distinct values of `values` (merged within `tol`).
pub fn distinct_sorted(values: impl IntoIterator<Item = f64>, tol: f64) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

/// Realized-value grid: the positive distinct values, the midpoints between
/// consecutive values of `{0} ∪ values`, and one value past the maximum.
///
/// Open-ball contents only change at realized values, so quantifiers over
/// positive reals reduce to this grid.
pub fn realized_grid(values: impl IntoIterator<Item = f64>, tol: f64) -> Vec<f64> {
    let mut base = distinct_sorted(values.into_iter().chain(std::iter::once(0.0)), tol);
    base.retain(|&x| x >= -tol);
    let mut grid = Vec::with_capacity(base.len() * 2 + 1);
    for w in base.windows(2) {
        grid.push(0.5 * (w[0] + w[1]));
        grid.push(w[1]);
    }
    let top = base.last().copied().unwrap_or(0.0);
    grid.push(if top > 0.0 { 2.0 * top } else { 1.0 });
    grid.sort_by(f64::total_cmp);
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_path_metric() {
        let t = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ];
        assert_eq!(check_metric(&t, MetricCheck::default()), Ok(()));
    }

    #[test]
    fn reports_triangle_violation() {
        let t = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        match check_metric(&t, MetricCheck::default()) {
            Err(MetricViolation::Triangle { i: 0, j: 1, k: 2, excess }) => {
                assert!((excess - 3.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_off_diagonal_only_allowed_for_pseudometrics() {
        let t = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(check_metric(&t, MetricCheck::default()).is_err());
        let pseudo = MetricCheck {
            pseudo: true,
            ..MetricCheck::default()
        };
        assert!(check_metric(&t, pseudo).is_ok());
    }

    #[test]
    fn infinite_entries_need_opt_in() {
        let t = vec![vec![0.0, f64::INFINITY], vec![f64::INFINITY, 0.0]];
        assert!(check_metric(&t, MetricCheck::default()).is_err());
        let inf = MetricCheck {
            allow_infinite: true,
            ..MetricCheck::default()
        };
        assert!(check_metric(&t, inf).is_ok());
    }

    #[test]
    fn grid_has_midpoints_and_top() {
        let g = realized_grid([1.0, 3.0, 1.0], 1e-12);
        assert_eq!(g, vec![0.5, 1.0, 2.0, 3.0, 6.0]);
    }
}
