//! Error metrics between gridded densities: L1, L2, Jensen-Shannon
//! divergence and the one-dimensional Wasserstein distance.
//!
//! L1/L2/W1 work in density space via trapezoid quadrature. JS first turns
//! each density into a cell-mass histogram (value times trapezoid weight)
//! so it is a true discrete divergence; natural log by default, base 2 on
//! request.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::continuous::{trapezoid, GriddedDensity, GridSpec};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("grid mismatch: [{0:?}] vs [{1:?}]")]
    GridMismatch(GridSpec, GridSpec),
    #[error("density mass is zero")]
    ZeroMass,
}

/// Logarithm convention for the Jensen-Shannon divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    Natural,
    Two,
}

/// The four error metrics of one comparison, plus the context needed to
/// interpret them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l1: f64,
    pub l2: f64,
    pub js: f64,
    pub wasserstein: f64,
    pub grid: GridSpec,
    pub n: usize,
    pub seed_count: usize,
}

impl ErrorReport {
    pub fn between(
        a: &GriddedDensity,
        b: &GriddedDensity,
        n: usize,
        seed_count: usize,
    ) -> Result<Self, MetricsError> {
        Ok(ErrorReport {
            l1: l1_distance(a, b)?,
            l2: l2_distance(a, b)?,
            js: js_divergence(a, b)?,
            wasserstein: wasserstein_1d(a, b)?,
            grid: a.grid(),
            n,
            seed_count,
        })
    }
}

fn require_same_grid(a: &GriddedDensity, b: &GriddedDensity) -> Result<GridSpec, MetricsError> {
    if a.grid() != b.grid() {
        return Err(MetricsError::GridMismatch(a.grid(), b.grid()));
    }
    Ok(a.grid())
}

/// Trapezoid integral of |a - b|.
pub fn l1_distance(a: &GriddedDensity, b: &GriddedDensity) -> Result<f64, MetricsError> {
    let grid = require_same_grid(a, b)?;
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .collect();
    Ok(trapezoid(&diff, grid.step()))
}

/// Square root of the trapezoid integral of (a - b)^2.
pub fn l2_distance(a: &GriddedDensity, b: &GriddedDensity) -> Result<f64, MetricsError> {
    let grid = require_same_grid(a, b)?;
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok(trapezoid(&diff, grid.step()).sqrt())
}

/// Cell masses under trapezoid weights, normalized to sum one.
fn cell_masses(d: &GriddedDensity) -> Result<Vec<f64>, MetricsError> {
    let step = d.grid().step();
    let n = d.values().len();
    let mut masses: Vec<f64> = d
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == n - 1 { step / 2.0 } else { step };
            v * w
        })
        .collect();
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroMass);
    }
    for m in &mut masses {
        *m /= total;
        // Subnormal cell masses underflow inside the KL terms; treat them
        // as empty cells.
        if *m < f64::MIN_POSITIVE {
            *m = 0.0;
        }
    }
    Ok(masses)
}

/// Jensen-Shannon divergence with the natural-log convention (at most ln 2).
pub fn js_divergence(a: &GriddedDensity, b: &GriddedDensity) -> Result<f64, MetricsError> {
    js_divergence_base(a, b, LogBase::Natural)
}

pub fn js_divergence_base(
    a: &GriddedDensity,
    b: &GriddedDensity,
    base: LogBase,
) -> Result<f64, MetricsError> {
    require_same_grid(a, b)?;
    let pa = cell_masses(a)?;
    let pb = cell_masses(b)?;
    let mut js = 0.0;
    for (x, y) in pa.iter().zip(&pb) {
        let m = 0.5 * (x + y);
        // 0 * log(0/m) is zero by convention
        if *x > 0.0 {
            js += 0.5 * x * (x / m).ln();
        }
        if *y > 0.0 {
            js += 0.5 * y * (y / m).ln();
        }
    }
    debug_assert!(js.is_finite(), "JS accumulation produced {js}");
    let js = js.max(0.0); // clamp -1e-17-style rounding residue
    Ok(match base {
        LogBase::Natural => js,
        LogBase::Two => js / std::f64::consts::LN_2,
    })
}

/// One-dimensional Wasserstein distance: the integral of |CDF_a - CDF_b|.
/// Both inputs are normalized to unit mass before comparison.
pub fn wasserstein_1d(a: &GriddedDensity, b: &GriddedDensity) -> Result<f64, MetricsError> {
    let grid = require_same_grid(a, b)?;
    let fa = cdf(a)?;
    let fb = cdf(b)?;
    let diff: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).collect();
    Ok(trapezoid(&diff, grid.step()))
}

fn cdf(d: &GriddedDensity) -> Result<Vec<f64>, MetricsError> {
    let mass = d.mass();
    if mass <= 0.0 {
        return Err(MetricsError::ZeroMass);
    }
    let step = d.grid().step();
    let v = d.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..v.len() {
        acc += step * (v[i - 1] + v[i]) / 2.0;
        out.push(acc / mass);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::continuous::{density_of_gaussian, GaussianSpec};

    fn normal(mean: f64, var: f64, grid: GridSpec) -> GriddedDensity {
        density_of_gaussian(&GaussianSpec { mean, variance: var }, grid).unwrap()
    }

    fn wide_grid() -> GridSpec {
        GridSpec::new(-30.0, 30.0, 2048).unwrap()
    }

    #[test]
    fn identity_is_exactly_zero() {
        let g = wide_grid();
        let d = normal(0.0, 1.0, g);
        assert_eq!(l1_distance(&d, &d).unwrap(), 0.0);
        assert_eq!(l2_distance(&d, &d).unwrap(), 0.0);
        assert_eq!(js_divergence(&d, &d).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_hit_the_extremes() {
        let g = wide_grid();
        let a = normal(-20.0, 0.25, g);
        let b = normal(20.0, 0.25, g);
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 0.01);
        assert!((js_divergence(&a, &b).unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
        assert!((js_divergence_base(&a, &b, LogBase::Two).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn boxcar_l2_closed_form() {
        // two unit-mass boxcars of width 1 offset by 1: integral of
        // (a-b)^2 is 1 + 1 = 2, so the L2 distance is sqrt(2)
        let grid = GridSpec::new(0.0, 3.0, 3001).unwrap();
        let step = grid.step();
        let a = GriddedDensity::from_fn(grid, |x| if x >= 0.0 && x <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let b = GriddedDensity::from_fn(grid, |x| if x >= 1.0 + step && x <= 2.0 + step { 1.0 } else { 0.0 })
            .unwrap();
        let l2 = l2_distance(&a, &b).unwrap();
        assert!((l2 - 2.0_f64.sqrt()).abs() < 0.05, "l2 = {l2}");
    }

    #[test]
    fn wasserstein_translation() {
        let g = wide_grid();
        for shift in [0.5, 1.0, 2.5] {
            let a = normal(0.0, 1.0, g);
            let b = normal(shift, 1.0, g);
            let w = wasserstein_1d(&a, &b).unwrap();
            assert!((w - shift).abs() <= 2.0 * g.step(), "shift {shift}: w = {w}");
        }
    }

    #[test]
    fn symmetry() {
        let g = wide_grid();
        let a = normal(0.0, 1.0, g);
        let b = normal(1.5, 2.0, g);
        assert!((l1_distance(&a, &b).unwrap() - l1_distance(&b, &a).unwrap()).abs() < 1e-12);
        assert!((l2_distance(&a, &b).unwrap() - l2_distance(&b, &a).unwrap()).abs() < 1e-12);
        assert!((js_divergence(&a, &b).unwrap() - js_divergence(&b, &a).unwrap()).abs() < 1e-12);
        assert!(
            (wasserstein_1d(&a, &b).unwrap() - wasserstein_1d(&b, &a).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = normal(0.0, 1.0, GridSpec::new(-8.0, 8.0, 128).unwrap());
        let b = normal(0.0, 1.0, GridSpec::new(-8.0, 8.0, 256).unwrap());
        assert!(matches!(
            l1_distance(&a, &b),
            Err(MetricsError::GridMismatch(_, _))
        ));
    }

    #[test]
    fn js_never_nan_on_zero_cells() {
        let g = GridSpec::new(0.0, 10.0, 101).unwrap();
        let a = GriddedDensity::from_fn(g, |x| if x < 3.0 { 1.0 } else { 0.0 }).unwrap();
        let b = GriddedDensity::from_fn(g, |x| if x > 6.0 { 1.0 } else { 0.0 }).unwrap();
        let js = js_divergence(&a, &b).unwrap();
        assert!(js.is_finite());
        assert!(js <= std::f64::consts::LN_2 + 1e-12);
    }
}
