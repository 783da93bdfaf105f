//! Seeded synthetic trials with explicit selection mechanisms, and the
//! sample-size sweep harness that drives the error-metric tables.
//!
//! `n` always means the size of the *selected* cohort: units are drawn
//! until `n` of them pass selection, so the biased dataset the analyst sees
//! has exactly the requested size. The full recruitment pool is kept in the
//! dataset for tests that need population quantities.
//!
//! Randomness comes from a counter-based ChaCha8 stream seeded per run;
//! stream 0 draws the cohort, stream 1 the external unbiased sample. The
//! generator name is recorded in provenance so runs can be reproduced.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::continuous::{
    density_of_gaussian, gaussian_kde, recover_continuous_opts,
    recover_continuous_two_covariates, silverman_bandwidth, theoretical_gaussian,
    BandwidthPolicy, DensityError, GaussianSpec, GridSpec, RecoverOptions,
};
use crate::metrics::{ErrorReport, MetricsError};
use crate::util::sha256_hex;

const RNG_NAME: &str = "chacha8";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("probability out of range: {name} = {value}")]
    BadProbability { name: &'static str, value: f64 },
    #[error("{name} must be positive (got {value})")]
    NonpositiveParameter { name: &'static str, value: f64 },
    #[error("sample size must be positive")]
    ZeroSamples,
    #[error("selection too rare: {selected} of {drawn} units selected before the pool cap")]
    SelectionTooRare { drawn: usize, selected: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Parameters of the discrete trial: binary comorbidity and severity,
/// severity-driven recruitment, randomized treatment, and a bernoulli
/// outcome per (x, w, z) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScmConfig {
    pub p_w: f64,
    pub p_z: f64,
    pub p_x: f64,
    /// P(S=1 | z), indexed by z.
    pub selection: [f64; 2],
    /// P(Y=1 | x, w, z), indexed [x][w][z].
    pub outcome: [[[f64; 2]; 2]; 2],
}

impl DiscreteScmConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let mut probs = vec![
            ("p_w", self.p_w),
            ("p_z", self.p_z),
            ("p_x", self.p_x),
            ("selection", self.selection[0]),
            ("selection", self.selection[1]),
        ];
        for x in 0..2 {
            for w in 0..2 {
                for z in 0..2 {
                    probs.push(("outcome", self.outcome[x][w][z]));
                }
            }
        }
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(SimError::BadProbability { name, value });
            }
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())[..12]
            .to_string()
    }
}

/// Parameters of the linear-Gaussian trial. The outcome is
/// alpha*x + beta*z + gamma_wy*w + noise; recruitment passes when
/// gamma_w*w + gamma_z*z + noise exceeds the threshold c. With gamma_wx = 0
/// the treatment is a fair-coin draw with probability p_x; a nonzero
/// gamma_wx switches to the literal threshold mechanism
/// 1{gamma_wx*w + U > 0} with uniform noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousScmConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_wy: f64,
    pub sigma_y: f64,
    pub gamma_z: f64,
    pub gamma_w: f64,
    pub sigma_s: f64,
    pub c: f64,
    pub p_x: f64,
    pub gamma_wx: f64,
}

impl ContinuousScmConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [("sigma_y", self.sigma_y), ("sigma_s", self.sigma_s)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SimError::NonpositiveParameter { name, value });
            }
        }
        if !(self.p_x > 0.0 && self.p_x < 1.0) {
            return Err(SimError::BadProbability {
                name: "p_x",
                value: self.p_x,
            });
        }
        Ok(())
    }

    /// Closed-form interventional outcome distribution at treatment `x`.
    pub fn theoretical(&self, x: f64) -> Result<GaussianSpec, SimError> {
        Ok(theoretical_gaussian(
            self.alpha,
            self.beta,
            self.gamma_wy,
            1.0,
            1.0,
            self.sigma_y,
            x,
        )?)
    }

    /// Does recruitment read the latent-health covariate too?
    pub fn selection_uses_w(&self) -> bool {
        self.gamma_w != 0.0
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())[..12]
            .to_string()
    }
}

/// Where a dataset came from and how big it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub n_requested: usize,
    pub n_selected: usize,
    pub rng: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRow {
    pub x: u8,
    pub w: u8,
    pub z: u8,
    pub y: u8,
    pub s: bool,
}

/// Full recruitment pool of a discrete trial; the biased view is the
/// selected subset. Treatment and outcome are drawn for every unit (the
/// trial run on the whole pool); selection is independent of them given
/// the covariates, so the selected subset has the same law either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDataset {
    pub rows: Vec<DiscreteRow>,
    pub provenance: Provenance,
}

impl DiscreteDataset {
    pub fn biased_view(&self) -> impl Iterator<Item = &DiscreteRow> {
        self.rows.iter().filter(|r| r.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousRow {
    pub x: f64,
    pub w: f64,
    pub z: f64,
    pub y: f64,
    pub s: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousDataset {
    pub rows: Vec<ContinuousRow>,
    pub provenance: Provenance,
}

impl ContinuousDataset {
    pub fn biased_view(&self) -> impl Iterator<Item = &ContinuousRow> {
        self.rows.iter().filter(|r| r.s)
    }
}

fn pool_cap(n: usize) -> usize {
    n.saturating_mul(10_000).max(1_000_000)
}

/// Draw units until `n` are selected. Deterministic given (config, n, seed).
pub fn simulate_discrete(
    cfg: &DiscreteScmConfig,
    n: usize,
    seed: u64,
) -> Result<DiscreteDataset, SimError> {
    cfg.validate()?;
    if n == 0 {
        return Err(SimError::ZeroSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = pool_cap(n);
    let mut rows = Vec::new();
    let mut selected = 0usize;
    while selected < n {
        if rows.len() >= cap {
            return Err(SimError::SelectionTooRare {
                drawn: rows.len(),
                selected,
            });
        }
        let w = u8::from(rng.random_bool(cfg.p_w));
        let z = u8::from(rng.random_bool(cfg.p_z));
        let s = rng.random_bool(cfg.selection[z as usize]);
        let x = u8::from(rng.random_bool(cfg.p_x));
        let y = u8::from(rng.random_bool(cfg.outcome[x as usize][w as usize][z as usize]));
        selected += usize::from(s);
        rows.push(DiscreteRow { x, w, z, y, s });
    }
    Ok(DiscreteDataset {
        rows,
        provenance: Provenance {
            config_hash: cfg.config_hash(),
            seed,
            n_requested: n,
            n_selected: selected,
            rng: RNG_NAME.into(),
        },
    })
}

/// Draw units until `n` are selected. Deterministic given (config, n, seed).
pub fn simulate_continuous(
    cfg: &ContinuousScmConfig,
    n: usize,
    seed: u64,
) -> Result<ContinuousDataset, SimError> {
    cfg.validate()?;
    if n == 0 {
        return Err(SimError::ZeroSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let outcome_noise = Normal::new(0.0, cfg.sigma_y).expect("validated");
    let selection_noise = Normal::new(0.0, cfg.sigma_s).expect("validated");
    let cap = pool_cap(n);
    let mut rows = Vec::new();
    let mut selected = 0usize;
    while selected < n {
        if rows.len() >= cap {
            return Err(SimError::SelectionTooRare {
                drawn: rows.len(),
                selected,
            });
        }
        let w: f64 = standard.sample(&mut rng);
        let z: f64 = standard.sample(&mut rng);
        let s = cfg.gamma_w * w + cfg.gamma_z * z + selection_noise.sample(&mut rng) > cfg.c;
        let x = if cfg.gamma_wx == 0.0 {
            f64::from(u8::from(rng.random_bool(cfg.p_x)))
        } else {
            f64::from(u8::from(cfg.gamma_wx * w + rng.random::<f64>() > 0.0))
        };
        let y = cfg.alpha * x + cfg.beta * z + cfg.gamma_wy * w + outcome_noise.sample(&mut rng);
        selected += usize::from(s);
        rows.push(ContinuousRow { x, w, z, y, s });
    }
    Ok(ContinuousDataset {
        rows,
        provenance: Provenance {
            config_hash: cfg.config_hash(),
            seed,
            n_requested: n,
            n_selected: selected,
            rng: RNG_NAME.into(),
        },
    })
}

/// Fresh unbiased draws of the covariates (w, z), independent of any
/// cohort drawn with the same seed (separate stream).
pub fn draw_external_covariates(m: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    (0..m)
        .map(|_| (standard.sample(&mut rng), standard.sample(&mut rng)))
        .collect()
}

/// How many covariate cells the sweep estimator uses at a given arm size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BinsRule {
    /// Always this many bins (per covariate dimension).
    Fixed { bins: usize },
    /// Scale with the treatment arm so cells keep roughly this many rows.
    PerArm { rows_per_cell: usize },
}

impl BinsRule {
    fn bins_for(&self, arm: usize, joint: bool) -> usize {
        match *self {
            BinsRule::Fixed { bins } => bins.max(1),
            BinsRule::PerArm { rows_per_cell } => {
                let budget = (arm / rows_per_cell.max(1)).max(1);
                if joint {
                    (budget as f64).sqrt().floor().clamp(2.0, 8.0) as usize
                } else {
                    budget.clamp(2, 10)
                }
            }
        }
    }
}

/// Settings of one sweep run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Treatment arm evaluated (the trials randomize 0/1).
    pub treatment: f64,
    /// Size of the external unbiased covariate sample drawn per seed.
    pub external_size: usize,
    /// Evaluation grid; None derives a six-sigma grid from the theoretical
    /// outcome with 512 points.
    pub grid: Option<GridSpec>,
    pub bins: BinsRule,
    pub min_cell: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            treatment: 1.0,
            external_size: 20_000,
            grid: None,
            bins: BinsRule::PerArm { rows_per_cell: 12 },
            // Lower than the standalone estimator default: sparse corner
            // cells of the joint covariate grid borrow neighbours less
            // often, which costs noise but removes a systematic shift.
            min_cell: 3,
        }
    }
}

/// Mean metric values over the successful seeds at one sample size.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub l1: f64,
    pub l2: f64,
    pub js: f64,
    pub wasserstein: f64,
}

impl MeanMetrics {
    fn accumulate(&mut self, other: &MeanMetrics) {
        self.l1 += other.l1;
        self.l2 += other.l2;
        self.js += other.js;
        self.wasserstein += other.wasserstein;
    }

    fn scale(&mut self, k: f64) {
        self.l1 *= k;
        self.l2 *= k;
        self.js *= k;
        self.wasserstein *= k;
    }
}

/// Per-(n, seed) raw metric values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRecord {
    pub n: usize,
    pub seed: u64,
    pub recovered: MeanMetrics,
    pub biased: MeanMetrics,
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub seeds_used: usize,
    pub failures: usize,
    pub recovered: MeanMetrics,
    pub biased: MeanMetrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutput {
    pub config_hash: String,
    pub settings: SweepSettings,
    pub rows: Vec<SweepRow>,
    pub per_seed: Vec<SeedRecord>,
    /// estimator errors recorded per (n, seed), excluded from the means
    pub errors: Vec<(usize, u64, String)>,
}

/// Simulate, recover, and compare to the theoretical distribution for every
/// (size, seed) pair; report per-size means for recovered-vs-truth and
/// biased-vs-truth. Cells run in parallel; each owns its generator.
pub fn sweep(
    cfg: &ContinuousScmConfig,
    sizes: &[usize],
    seeds: &[u64],
    settings: &SweepSettings,
) -> Result<SweepOutput, SimError> {
    cfg.validate()?;
    if sizes.is_empty() || seeds.is_empty() {
        return Err(SimError::ZeroSamples);
    }
    let theory = cfg.theoretical(settings.treatment)?;
    let grid = settings.grid.unwrap_or_else(|| theory.default_grid(512));
    let truth = density_of_gaussian(&theory, grid)?;

    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();

    let results: Vec<Result<SeedRecord, (usize, u64, String)>> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            run_cell(cfg, n, seed, settings, grid, &truth)
                .map_err(|e| (n, seed, e.to_string()))
        })
        .collect();

    let mut per_seed = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(rec) => per_seed.push(rec),
            Err(e) => errors.push(e),
        }
    }

    let mut rows = Vec::new();
    for &n in sizes {
        let mut rec = MeanMetrics::default();
        let mut bias = MeanMetrics::default();
        let mut used = 0usize;
        for s in per_seed.iter().filter(|s| s.n == n) {
            rec.accumulate(&s.recovered);
            bias.accumulate(&s.biased);
            used += 1;
        }
        if used > 0 {
            rec.scale(1.0 / used as f64);
            bias.scale(1.0 / used as f64);
        }
        rows.push(SweepRow {
            n,
            seeds_used: used,
            failures: errors.iter().filter(|(en, _, _)| *en == n).count(),
            recovered: rec,
            biased: bias,
        });
    }

    Ok(SweepOutput {
        config_hash: cfg.config_hash(),
        settings: settings.clone(),
        rows,
        per_seed,
        errors,
    })
}

fn run_cell(
    cfg: &ContinuousScmConfig,
    n: usize,
    seed: u64,
    settings: &SweepSettings,
    grid: GridSpec,
    truth: &crate::estimate::continuous::GriddedDensity,
) -> Result<SeedRecord, SimError> {
    let dataset = simulate_continuous(cfg, n, seed)?;
    let external = draw_external_covariates(settings.external_size, seed);
    let x = settings.treatment;

    let biased_rows: Vec<&ContinuousRow> = dataset.biased_view().collect();
    let arm = biased_rows.iter().filter(|r| r.x == x).count();
    let joint = cfg.selection_uses_w();
    let bins = settings.bins.bins_for(arm, joint);

    let recovered = if joint {
        let rows: Vec<(f64, f64, f64, f64)> =
            biased_rows.iter().map(|r| (r.x, r.w, r.z, r.y)).collect();
        let opts = RecoverOptions {
            min_cell: settings.min_cell,
            bandwidth: BandwidthPolicy::Pooled,
        };
        recover_continuous_two_covariates(&rows, &external, x, grid, bins, &opts)?
    } else {
        let rows: Vec<(f64, f64, f64)> =
            biased_rows.iter().map(|r| (r.x, r.z, r.y)).collect();
        let external_z: Vec<f64> = external.iter().map(|(_, z)| *z).collect();
        // Pooled bandwidth here too: per-cell Silverman over-smooths the
        // small cells badly enough that the recovered density loses to the
        // raw biased one at small cohort sizes.
        let opts = RecoverOptions {
            min_cell: settings.min_cell,
            bandwidth: BandwidthPolicy::Pooled,
        };
        recover_continuous_opts(&rows, &external_z, x, grid, bins, &opts)?
    };

    let arm_ys: Vec<f64> = biased_rows.iter().filter(|r| r.x == x).map(|r| r.y).collect();
    if arm_ys.len() < 2 {
        return Err(DensityError::TooFewSamples {
            x,
            got: arm_ys.len(),
            need: 2,
        }
        .into());
    }
    let biased_density = gaussian_kde(&arm_ys, silverman_bandwidth(&arm_ys), grid).normalize()?;

    let rec_report = ErrorReport::between(&recovered.density, truth, n, 1)?;
    let bias_report = ErrorReport::between(&biased_density, truth, n, 1)?;
    Ok(SeedRecord {
        n,
        seed,
        recovered: MeanMetrics {
            l1: rec_report.l1,
            l2: rec_report.l2,
            js: rec_report.js,
            wasserstein: rec_report.wasserstein,
        },
        biased: MeanMetrics {
            l1: bias_report.l1,
            l2: bias_report.l2,
            js: bias_report.js,
            wasserstein: bias_report.wasserstein,
        },
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn discrete_is_reproducible_and_seed_sensitive() {
        let cfg = fixtures::discrete_trial_config();
        let a = simulate_discrete(&cfg, 500, 42).unwrap();
        let b = simulate_discrete(&cfg, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_discrete(&cfg, 500, 43).unwrap();
        assert_ne!(a.rows, c.rows);
        assert_eq!(a.provenance.n_selected, 500);
        assert!(a.rows.len() >= 500);
    }

    #[test]
    fn continuous_is_reproducible_and_seed_sensitive() {
        let cfg = fixtures::continuous_trial_basic_config();
        let a = simulate_continuous(&cfg, 300, 7).unwrap();
        let b = simulate_continuous(&cfg, 300, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_continuous(&cfg, 300, 8).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn certain_selection_keeps_the_whole_pool() {
        let mut cfg = fixtures::discrete_trial_config();
        cfg.selection = [1.0, 1.0];
        let d = simulate_discrete(&cfg, 200, 1).unwrap();
        assert_eq!(d.rows.len(), 200);
        assert!(d.rows.iter().all(|r| r.s));
    }

    #[test]
    fn impossible_selection_errors_out() {
        let mut cfg = fixtures::discrete_trial_config();
        cfg.selection = [0.0, 0.0];
        assert!(matches!(
            simulate_discrete(&cfg, 10, 1),
            Err(SimError::SelectionTooRare { .. })
        ));
    }

    #[test]
    fn severity_drives_selection_at_the_configured_rates() {
        let cfg = fixtures::discrete_trial_config();
        let d = simulate_discrete(&cfg, 40_000, 3).unwrap();
        for z in [0u8, 1] {
            let total = d.rows.iter().filter(|r| r.z == z).count() as f64;
            let selected = d.rows.iter().filter(|r| r.z == z && r.s).count() as f64;
            let p = selected / total;
            let expect = cfg.selection[z as usize];
            let se = (expect * (1.0 - expect) / total).sqrt();
            assert!(
                (p - expect).abs() <= 3.0 * se,
                "z={z}: got {p}, want {expect} +- {}",
                3.0 * se
            );
        }
    }

    #[test]
    fn outcome_rates_in_selected_strata_match_the_table() {
        let cfg = fixtures::discrete_trial_config();
        let d = simulate_discrete(&cfg, 60_000, 5).unwrap();
        let cell: Vec<&DiscreteRow> = d
            .biased_view()
            .filter(|r| r.x == 1 && r.w == 0 && r.z == 0)
            .collect();
        let p = cell.iter().filter(|r| r.y == 1).count() as f64 / cell.len() as f64;
        let se = (0.95 * 0.05 / cell.len() as f64).sqrt();
        assert!((p - 0.95).abs() <= 3.0 * se, "got {p}");
    }

    #[test]
    fn selected_biomarker_mean_is_shifted_up() {
        let cfg = fixtures::continuous_trial_basic_config();
        let d = simulate_continuous(&cfg, 20_000, 11).unwrap();
        let selected_mean: f64 =
            d.biased_view().map(|r| r.z).sum::<f64>() / d.provenance.n_selected as f64;
        assert!(selected_mean > 0.2, "selected mean z = {selected_mean}");
        let pool_mean: f64 = d.rows.iter().map(|r| r.z).sum::<f64>() / d.rows.len() as f64;
        assert!(pool_mean.abs() < 0.05, "pool mean z = {pool_mean}");
    }

    #[test]
    fn null_effect_gives_identical_arms() {
        // two-sample KS test at alpha = 0.01
        let mut cfg = fixtures::continuous_trial_basic_config();
        cfg.alpha = 0.0;
        let d = simulate_continuous(&cfg, 10_000, 23).unwrap();
        let mut a: Vec<f64> = d.biased_view().filter(|r| r.x == 1.0).map(|r| r.y).collect();
        let mut b: Vec<f64> = d.biased_view().filter(|r| r.x == 0.0).map(|r| r.y).collect();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let ks = ks_statistic(&a, &b);
        let n_eff = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
        let lambda = ks * n_eff.sqrt();
        let p_value = kolmogorov_q(lambda);
        assert!(p_value > 0.01, "KS p = {p_value}");
    }

    fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j) = (0usize, 0usize);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / a.len() as f64;
            let fb = j as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    fn kolmogorov_q(lambda: f64) -> f64 {
        // asymptotic Kolmogorov tail probability
        let mut q = 0.0;
        for k in 1..=100 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            q += sign * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        }
        (2.0 * q).clamp(0.0, 1.0)
    }

    #[test]
    fn empirical_selection_rate_matches_quadrature() {
        // P(S=1) = integral over z of (1 - Phi((c - gamma_z z)/sigma_s)) phi(z) dz,
        // computed by midpoint quadrature as an independent reference.
        let cfg = fixtures::continuous_trial_basic_config();
        let quad: f64 = {
            let steps = 20_000;
            let (lo, hi) = (-8.0f64, 8.0f64);
            let h = (hi - lo) / steps as f64;
            (0..steps)
                .map(|i| {
                    let z = lo + (i as f64 + 0.5) * h;
                    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                    let arg = (cfg.c - cfg.gamma_z * z) / cfg.sigma_s;
                    let tail = 0.5 * erfc_approx(arg / std::f64::consts::SQRT_2);
                    phi * tail * h
                })
                .sum()
        };
        let d = simulate_continuous(&cfg, 30_000, 31).unwrap();
        let rate = d.provenance.n_selected as f64 / d.rows.len() as f64;
        let se = (quad * (1.0 - quad) / d.rows.len() as f64).sqrt();
        assert!((rate - quad).abs() <= 3.0 * se, "rate {rate} vs quadrature {quad}");
    }

    // Abramowitz-Stegun 7.1.26-style complement, good to ~1e-7 here.
    fn erfc_approx(x: f64) -> f64 {
        let sign_neg = x < 0.0;
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erfc = poly * (-x * x).exp();
        if sign_neg {
            2.0 - erfc
        } else {
            erfc
        }
    }

    #[test]
    fn recovered_mass_before_renormalization_is_near_unit() {
        use crate::estimate::continuous::{
            recover_continuous_opts, recover_continuous_two_covariates,
        };
        for n in [300usize, 1500] {
            let basic = fixtures::continuous_trial_basic_config();
            let d = simulate_continuous(&basic, n, 5).unwrap();
            let external = draw_external_covariates(10_000, 5);
            let rows: Vec<(f64, f64, f64)> =
                d.biased_view().map(|r| (r.x, r.z, r.y)).collect();
            let ext_z: Vec<f64> = external.iter().map(|(_, z)| *z).collect();
            let grid = basic.theoretical(1.0).unwrap().default_grid(512);
            let rec = recover_continuous_opts(
                &rows,
                &ext_z,
                1.0,
                grid,
                8,
                &RecoverOptions::default(),
            )
            .unwrap();
            assert!(
                (0.98..=1.02).contains(&rec.diagnostics.mass_before),
                "basic n={n}: mass {}",
                rec.diagnostics.mass_before
            );

            let advanced = fixtures::continuous_trial_advanced_config();
            let d = simulate_continuous(&advanced, n, 5).unwrap();
            let rows: Vec<(f64, f64, f64, f64)> =
                d.biased_view().map(|r| (r.x, r.w, r.z, r.y)).collect();
            let grid = advanced.theoretical(1.0).unwrap().default_grid(512);
            let rec = recover_continuous_two_covariates(
                &rows,
                &external,
                1.0,
                grid,
                4,
                &RecoverOptions {
                    min_cell: 3,
                    bandwidth: BandwidthPolicy::Pooled,
                },
            )
            .unwrap();
            assert!(
                (0.98..=1.02).contains(&rec.diagnostics.mass_before),
                "advanced n={n}: mass {}",
                rec.diagnostics.mass_before
            );
        }
    }

    #[test]
    fn biased_outcome_mean_exceeds_theoretical_at_both_treatments() {
        // upward selection on the biomarker plus a positive biomarker
        // coefficient shift the selected outcome mean above alpha * x
        let cfg = fixtures::continuous_trial_basic_config();
        let d = simulate_continuous(&cfg, 30_000, 19).unwrap();
        for x in [0.0, 1.0] {
            let arm: Vec<f64> = d
                .biased_view()
                .filter(|r| r.x == x)
                .map(|r| r.y)
                .collect();
            let mean = arm.iter().sum::<f64>() / arm.len() as f64;
            let theoretical = cfg.theoretical(x).unwrap().mean;
            assert!(
                mean > theoretical + 0.1,
                "x={x}: biased mean {mean} vs theoretical {theoretical}"
            );
        }
    }

    #[test]
    fn single_size_sweep_runs() {
        let cfg = fixtures::continuous_trial_basic_config();
        let out = sweep(&cfg, &[400], &[1], &SweepSettings::default()).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.per_seed.len(), 1);
        assert!(out.errors.is_empty());
        assert!(out.rows[0].recovered.l1 > 0.0 && out.rows[0].recovered.l1 < 1.0);

        // a one-seed comparison is too noisy; compare small-sample means
        let out = sweep(&cfg, &[400], &[1, 2, 3, 4, 5, 6], &SweepSettings::default()).unwrap();
        let row = &out.rows[0];
        assert!(
            row.biased.l1 > row.recovered.l1,
            "rec {} vs bias {}",
            row.recovered.l1,
            row.biased.l1
        );
    }

    #[test]
    fn sweep_under_certain_selection_has_matching_columns() {
        // selection always on: biased and recovered estimates draw from the
        // same unbiased arm, so their error columns agree up to the noise
        // of the estimators themselves
        let mut cfg = fixtures::continuous_trial_basic_config();
        cfg.gamma_z = 0.0;
        cfg.gamma_w = 0.0;
        cfg.c = -30.0;
        let out = sweep(
            &cfg,
            &[2000],
            &[1, 2, 3, 4],
            &SweepSettings::default(),
        )
        .unwrap();
        let row = &out.rows[0];
        assert!(
            (row.recovered.l1 - row.biased.l1).abs() <= row.biased.l1,
            "rec {} vs bias {}",
            row.recovered.l1,
            row.biased.l1
        );
    }
}
