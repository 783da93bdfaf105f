//! Continuous recovery: the outcome density under treatment is rebuilt as a
//! quantile-binned mixture of per-stratum kernel density estimates, weighted
//! by the external (unbiased) covariate distribution. Ground truth for the
//! linear-Gaussian trial comes in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("grid needs at least 2 points and max > min (got [{min}, {max}] x {points})")]
    BadGrid { min: f64, max: f64, points: usize },
    #[error("value count {got} does not match grid points {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("density has negative values")]
    NegativeDensity,
    #[error("density mass is zero")]
    ZeroMass,
    #[error("sigma must be positive (got {value})")]
    NonpositiveSigma { value: f64 },
    #[error("grid [{min}, {max}] does not cover six standard deviations around {mean}")]
    GridTooNarrow { min: f64, max: f64, mean: f64 },
    #[error("need at least {need} biased samples at treatment {x} (got {got})")]
    TooFewSamples { x: f64, got: usize, need: usize },
    #[error("external covariate sample is empty")]
    EmptyExternal,
    #[error("bins must be at least 1")]
    ZeroBins,
    #[error("every covariate cell is below the minimum occupancy {min_cell}")]
    AllCellsUnderPopulated { min_cell: usize },
}

/// Uniform one-dimensional evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, DensityError> {
        if points < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(DensityError::BadGrid { min, max, points });
        }
        Ok(GridSpec { min, max, points })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + self.step() * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

/// Nonnegative density samples on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedDensity {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GriddedDensity {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, DensityError> {
        if values.len() != grid.points {
            return Err(DensityError::LengthMismatch {
                got: values.len(),
                expected: grid.points,
            });
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(DensityError::NegativeDensity);
        }
        Ok(GriddedDensity { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self, DensityError> {
        let values = grid.values().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoid integral over the grid.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.grid.step())
    }

    /// Rescale to unit trapezoid mass.
    pub fn normalize(&self) -> Result<Self, DensityError> {
        let mass = self.mass();
        if mass <= 0.0 {
            return Err(DensityError::ZeroMass);
        }
        Ok(GriddedDensity {
            grid: self.grid,
            values: self.values.iter().map(|v| v / mass).collect(),
        })
    }
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + (values[0] + values[values.len() - 1]) / 2.0)
}

/// A univariate normal given by mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianSpec {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Grid spanning six standard deviations either side of the mean.
    pub fn default_grid(&self, points: usize) -> GridSpec {
        let sd = self.sd();
        GridSpec::new(self.mean - 6.0 * sd, self.mean + 6.0 * sd, points)
            .expect("six-sigma grid is valid for positive variance")
    }
}

/// Closed-form interventional outcome for the linear-Gaussian trial:
/// outcome = alpha*x + beta*Z + gamma*W + noise with independent zero-mean
/// Gaussian covariates, so the intervened outcome is
/// N(alpha x, beta^2 sigma_z^2 + gamma^2 sigma_w^2 + sigma_y^2).
pub fn theoretical_gaussian(
    alpha: f64,
    beta: f64,
    gamma: f64,
    sigma_w: f64,
    sigma_z: f64,
    sigma_y: f64,
    x: f64,
) -> Result<GaussianSpec, DensityError> {
    for sigma in [sigma_w, sigma_z, sigma_y] {
        if !(sigma > 0.0) {
            return Err(DensityError::NonpositiveSigma { value: sigma });
        }
    }
    Ok(GaussianSpec {
        mean: alpha * x,
        variance: beta * beta * sigma_z * sigma_z + gamma * gamma * sigma_w * sigma_w + sigma_y * sigma_y,
    })
}

/// Normal pdf sampled on a grid. The grid must cover at least six standard
/// deviations around the mean so the trapezoid mass stays within tolerance.
pub fn density_of_gaussian(spec: &GaussianSpec, grid: GridSpec) -> Result<GriddedDensity, DensityError> {
    if !(spec.variance > 0.0) {
        return Err(DensityError::NonpositiveSigma {
            value: spec.variance,
        });
    }
    let sd = spec.sd();
    if grid.min > spec.mean - 6.0 * sd || grid.max < spec.mean + 6.0 * sd {
        return Err(DensityError::GridTooNarrow {
            min: grid.min,
            max: grid.max,
            mean: spec.mean,
        });
    }
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    GriddedDensity::from_fn(grid, |y| {
        let u = (y - spec.mean) / sd;
        norm * (-0.5 * u * u).exp()
    })
}

/// Silverman's rule-of-thumb bandwidth: 0.9 min(sd, iqr/1.34) n^(-1/5).
/// Degenerate spreads fall back so the kernel stays proper.
pub fn silverman_bandwidth(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    if data.len() < 2 {
        return 1.0;
    }
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let iqr = quantile_sorted(&sorted(data), 0.75) - quantile_sorted(&sorted(data), 0.25);
    let mut a = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if a <= 0.0 {
        a = 1e-6_f64.max(mean.abs() * 1e-6);
    }
    0.9 * a * n.powf(-0.2)
}

/// Gaussian-kernel density estimate of `data` evaluated on `grid`.
pub fn gaussian_kde(data: &[f64], bandwidth: f64, grid: GridSpec) -> GriddedDensity {
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth * data.len() as f64);
    let values = grid
        .values()
        .into_iter()
        .map(|y| {
            let sum: f64 = data
                .iter()
                .map(|x| {
                    let u = (y - x) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum();
            norm * sum
        })
        .collect();
    GriddedDensity { grid, values }
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Linear-interpolation quantile of pre-sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Interior edges of `bins` equal-probability cells of `data`.
fn quantile_edges(data: &[f64], bins: usize) -> Vec<f64> {
    let s = sorted(data);
    (1..bins)
        .map(|j| quantile_sorted(&s, j as f64 / bins as f64))
        .collect()
}

/// Cell index for a value given interior edges (cells are left-open).
fn cell_of(edges: &[f64], v: f64) -> usize {
    edges.iter().take_while(|e| v > **e).count()
}

/// Where the kernel bandwidth comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// Silverman's rule on each cell's own points.
    PerCell,
    /// Silverman's rule on the whole treatment arm, shared by every cell.
    /// Avoids the heavy over-smoothing of small joint-covariate cells.
    Pooled,
}

/// Tuning for the binned mixture estimator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecoverOptions {
    /// Cells below this occupancy borrow the nearest populated cell.
    pub min_cell: usize,
    pub bandwidth: BandwidthPolicy,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions {
            min_cell: 5,
            bandwidth: BandwidthPolicy::PerCell,
        }
    }
}

/// What the estimator actually did, for auditability and run metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoverDiagnostics {
    pub bins: Vec<usize>,
    pub min_cell: usize,
    /// biased rows landing in each cell (row-major for two covariates)
    pub cell_counts: Vec<usize>,
    /// external probability mass of each cell
    pub cell_weights: Vec<f64>,
    /// per-cell Silverman bandwidth; None when the cell borrowed another
    pub bandwidths: Vec<Option<f64>>,
    /// (under-populated cell, populated cell it borrowed)
    pub borrowed: Vec<(usize, usize)>,
    /// trapezoid mass of the mixture before renormalization
    pub mass_before: f64,
}

/// A recovered density plus the diagnostics of the run.
#[derive(Debug, Clone)]
pub struct ContinuousRecovery {
    pub density: GriddedDensity,
    pub diagnostics: RecoverDiagnostics,
}

/// Recover the outcome density at treatment `x` from biased `(x, z, y)` rows
/// and an unbiased sample of the covariate z.
///
/// The external sample is cut into `bins` equal-probability cells; within
/// each sufficiently-populated cell the conditional outcome density is a
/// Gaussian KDE with Silverman bandwidth; cells below the occupancy floor
/// contribute through the nearest populated cell. The mixture
/// sum over cells of KDE_cell * P(cell) is evaluated on `grid` and
/// renormalized.
pub fn recover_continuous(
    biased: &[(f64, f64, f64)],
    external_z: &[f64],
    x: f64,
    grid: GridSpec,
    bins: usize,
) -> Result<ContinuousRecovery, DensityError> {
    recover_continuous_opts(biased, external_z, x, grid, bins, &RecoverOptions::default())
}

pub fn recover_continuous_opts(
    biased: &[(f64, f64, f64)],
    external_z: &[f64],
    x: f64,
    grid: GridSpec,
    bins: usize,
    opts: &RecoverOptions,
) -> Result<ContinuousRecovery, DensityError> {
    if bins == 0 {
        return Err(DensityError::ZeroBins);
    }
    if external_z.is_empty() {
        return Err(DensityError::EmptyExternal);
    }
    let arm: Vec<(f64, f64)> = biased
        .iter()
        .filter(|(xi, _, _)| *xi == x)
        .map(|(_, z, y)| (*z, *y))
        .collect();
    if arm.len() < 2 {
        return Err(DensityError::TooFewSamples {
            x,
            got: arm.len(),
            need: 2,
        });
    }

    let edges = quantile_edges(external_z, bins);
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); bins];
    let arm_ys: Vec<f64> = arm.iter().map(|(_, y)| *y).collect();
    for (z, y) in &arm {
        cells[cell_of(&edges, *z)].push(*y);
    }
    let weights = vec![1.0 / bins as f64; bins];
    mix_cells(cells, weights, vec![bins], &arm_ys, grid, opts)
}

/// Two-covariate variant over biased `(x, w, z, y)` rows and an unbiased
/// joint sample of (w, z). Cells are the product of per-covariate quantile
/// bins; cell weights come from the external joint so dependence between
/// the covariates is respected.
pub fn recover_continuous_two_covariates(
    biased: &[(f64, f64, f64, f64)],
    external: &[(f64, f64)],
    x: f64,
    grid: GridSpec,
    bins_per_dim: usize,
    opts: &RecoverOptions,
) -> Result<ContinuousRecovery, DensityError> {
    if bins_per_dim == 0 {
        return Err(DensityError::ZeroBins);
    }
    if external.is_empty() {
        return Err(DensityError::EmptyExternal);
    }
    let arm: Vec<(f64, f64, f64)> = biased
        .iter()
        .filter(|(xi, _, _, _)| *xi == x)
        .map(|(_, w, z, y)| (*w, *z, *y))
        .collect();
    if arm.len() < 2 {
        return Err(DensityError::TooFewSamples {
            x,
            got: arm.len(),
            need: 2,
        });
    }

    let ws: Vec<f64> = external.iter().map(|(w, _)| *w).collect();
    let zs: Vec<f64> = external.iter().map(|(_, z)| *z).collect();
    let w_edges = quantile_edges(&ws, bins_per_dim);
    let z_edges = quantile_edges(&zs, bins_per_dim);
    let idx = |w: f64, z: f64| cell_of(&w_edges, w) * bins_per_dim + cell_of(&z_edges, z);

    let n_cells = bins_per_dim * bins_per_dim;
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    let arm_ys: Vec<f64> = arm.iter().map(|(_, _, y)| *y).collect();
    for (w, z, y) in &arm {
        cells[idx(*w, *z)].push(*y);
    }
    let mut weights = vec![0.0; n_cells];
    for (w, z) in external {
        weights[idx(*w, *z)] += 1.0 / external.len() as f64;
    }
    mix_cells(cells, weights, vec![bins_per_dim, bins_per_dim], &arm_ys, grid, opts)
}

fn mix_cells(
    cells: Vec<Vec<f64>>,
    weights: Vec<f64>,
    bins: Vec<usize>,
    arm_ys: &[f64],
    grid: GridSpec,
    opts: &RecoverOptions,
) -> Result<ContinuousRecovery, DensityError> {
    let min_cell = opts.min_cell.max(2);
    let populated: Vec<usize> = (0..cells.len())
        .filter(|&i| cells[i].len() >= min_cell)
        .collect();
    if populated.is_empty() {
        return Err(DensityError::AllCellsUnderPopulated { min_cell });
    }
    let pooled_h = match opts.bandwidth {
        BandwidthPolicy::Pooled => Some(silverman_bandwidth(arm_ys)),
        BandwidthPolicy::PerCell => None,
    };

    // Manhattan distance between cells in the (possibly 2-D) bin grid.
    let coords = |i: usize| -> (usize, usize) {
        if bins.len() == 2 {
            (i / bins[1], i % bins[1])
        } else {
            (0, i)
        }
    };
    let distance = |a: usize, b: usize| -> usize {
        let (ar, ac) = coords(a);
        let (br, bc) = coords(b);
        ar.abs_diff(br) + ac.abs_diff(bc)
    };

    let mut kde_cache: Vec<Option<(f64, GriddedDensity)>> = vec![None; cells.len()];
    for &i in &populated {
        let h = pooled_h.unwrap_or_else(|| silverman_bandwidth(&cells[i]));
        kde_cache[i] = Some((h, gaussian_kde(&cells[i], h, grid)));
    }

    let mut mixture = vec![0.0; grid.points];
    let mut diagnostics = RecoverDiagnostics {
        bins: bins.clone(),
        min_cell,
        cell_counts: cells.iter().map(Vec::len).collect(),
        cell_weights: weights.clone(),
        bandwidths: vec![None; cells.len()],
        borrowed: Vec::new(),
        mass_before: 0.0,
    };

    for i in 0..cells.len() {
        if weights[i] == 0.0 {
            continue;
        }
        let source = if kde_cache[i].is_some() {
            i
        } else {
            let &nearest = populated
                .iter()
                .min_by_key(|&&p| (distance(i, p), p))
                .expect("populated is nonempty");
            diagnostics.borrowed.push((i, nearest));
            nearest
        };
        let (h, dens) = kde_cache[source].as_ref().unwrap();
        if source == i {
            diagnostics.bandwidths[i] = Some(*h);
        }
        for (acc, v) in mixture.iter_mut().zip(dens.values()) {
            *acc += weights[i] * v;
        }
    }

    let raw = GriddedDensity::new(grid, mixture)?;
    diagnostics.mass_before = raw.mass();
    Ok(ContinuousRecovery {
        density: raw.normalize()?,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn theoretical_spec_matches_trial_parameters() {
        let spec = theoretical_gaussian(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(spec.mean, 2.0);
        assert_eq!(spec.variance, 3.0);
        let at_zero = theoretical_gaussian(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(at_zero.mean, 0.0);
        let bare = theoretical_gaussian(1.5, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(bare.mean, 1.5);
        assert_eq!(bare.variance, 1.0);
        assert!(theoretical_gaussian(2.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_density_mass_and_peak() {
        let spec = GaussianSpec { mean: 0.0, variance: 1.0 };
        let grid = GridSpec::new(-6.0, 6.0, 512).unwrap();
        let d = density_of_gaussian(&spec, grid).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-3);

        let spec2 = GaussianSpec { mean: 2.0, variance: 3.0 };
        let d2 = density_of_gaussian(&spec2, spec2.default_grid(512)).unwrap();
        let peak = d2
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((d2.grid().value(peak) - 2.0).abs() <= d2.grid().step());

        // symmetric grid gives values symmetric about the mean
        let vals = d2.values();
        for i in 0..vals.len() {
            let j = vals.len() - 1 - i;
            assert!((vals[i] - vals[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let spec = GaussianSpec { mean: 0.0, variance: 1.0 };
        let grid = GridSpec::new(-2.0, 2.0, 64).unwrap();
        assert!(matches!(
            density_of_gaussian(&spec, grid),
            Err(DensityError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn kde_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let data: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng)).collect();
        let h = silverman_bandwidth(&data);
        assert!(h > 0.05 && h < 1.0);
        let grid = GridSpec::new(-8.0, 8.0, 512).unwrap();
        let kde = gaussian_kde(&data, h, grid);
        assert!((kde.mass() - 1.0).abs() < 0.01);
    }

    #[test]
    fn quantile_cells_have_equal_membership() {
        let data: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let edges = quantile_edges(&data, 4);
        assert_eq!(edges.len(), 3);
        let mut counts = [0usize; 4];
        for v in &data {
            counts[cell_of(&edges, *v)] += 1;
        }
        for c in counts {
            assert!((c as i64 - 250).abs() <= 1, "uneven cells: {counts:?}");
        }
    }

    #[test]
    fn uniform_selection_recovery_matches_plain_kde() {
        // With selection switched off the mixture must coincide with an
        // ordinary KDE of the arm up to binning noise.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 4000;
        let mut rows = Vec::with_capacity(n);
        let mut external = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = normal.sample(&mut rng);
            let w: f64 = normal.sample(&mut rng);
            let noise: f64 = normal.sample(&mut rng);
            let x = 1.0;
            let y = 2.0 * x + z + w + noise;
            rows.push((x, z, y));
            external.push(normal.sample(&mut rng));
        }
        let spec = GaussianSpec { mean: 2.0, variance: 3.0 };
        let grid = spec.default_grid(512);
        let rec = recover_continuous(&rows, &external, 1.0, grid, 10).unwrap();

        let ys: Vec<f64> = rows.iter().map(|(_, _, y)| *y).collect();
        let plain = gaussian_kde(&ys, silverman_bandwidth(&ys), grid)
            .normalize()
            .unwrap();
        let l1 = crate::metrics::l1_distance(&rec.density, &plain).unwrap();
        assert!(l1 <= 0.02, "L1 from plain KDE = {l1}");
    }

    #[test]
    fn stratified_mixture_oracle_two_cells() {
        // With a two-level covariate and two bins, the recovery must equal
        // the analytic mixture of per-cell KDEs computed independently.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut external = Vec::new();
        for i in 0..2000 {
            let z = if i % 2 == 0 { -1.0 } else { 1.0 };
            let y = z * 1.5 + normal.sample(&mut rng);
            rows.push((1.0, z, y));
            external.push(if i % 4 < 2 { -1.0 } else { 1.0 });
        }
        let grid = GridSpec::new(-8.0, 8.0, 256).unwrap();
        let rec = recover_continuous(&rows, &external, 1.0, grid, 2).unwrap();

        let lo: Vec<f64> = rows.iter().filter(|(_, z, _)| *z < 0.0).map(|r| r.2).collect();
        let hi: Vec<f64> = rows.iter().filter(|(_, z, _)| *z > 0.0).map(|r| r.2).collect();
        let k_lo = gaussian_kde(&lo, silverman_bandwidth(&lo), grid);
        let k_hi = gaussian_kde(&hi, silverman_bandwidth(&hi), grid);
        let mix: Vec<f64> = k_lo
            .values()
            .iter()
            .zip(k_hi.values())
            .map(|(a, b)| 0.5 * a + 0.5 * b)
            .collect();
        let mix = GriddedDensity::new(grid, mix).unwrap().normalize().unwrap();
        for (a, b) in rec.density.values().iter().zip(mix.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn under_populated_cells_borrow_and_mass_stays_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(0.0, 1.0).unwrap();
        // biased arm concentrated on high z: low-z cells will borrow
        let mut rows = Vec::new();
        for _ in 0..200 {
            let z = f64::abs(normal.sample(&mut rng));
            let y = z + normal.sample(&mut rng);
            rows.push((1.0, z, y));
        }
        let external: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
        let grid = GridSpec::new(-8.0, 8.0, 256).unwrap();
        let rec = recover_continuous(&rows, &external, 1.0, grid, 10).unwrap();
        assert!(!rec.diagnostics.borrowed.is_empty());
        assert!((rec.density.mass() - 1.0).abs() < 1e-9);
        assert!(rec.diagnostics.mass_before > 0.9 && rec.diagnostics.mass_before < 1.1);
    }

    #[test]
    fn error_paths() {
        let grid = GridSpec::new(-1.0, 1.0, 16).unwrap();
        assert!(matches!(
            recover_continuous(&[(1.0, 0.0, 0.0)], &[0.0], 1.0, grid, 4),
            Err(DensityError::TooFewSamples { .. })
        ));
        assert!(matches!(
            recover_continuous(&[(1.0, 0.0, 0.0), (1.0, 0.1, 0.2)], &[], 1.0, grid, 4),
            Err(DensityError::EmptyExternal)
        ));
        assert!(matches!(
            recover_continuous(&[(0.0, 0.0, 0.0), (0.0, 0.1, 0.2)], &[0.0], 1.0, grid, 4),
            Err(DensityError::TooFewSamples { .. })
        ));
    }
}
