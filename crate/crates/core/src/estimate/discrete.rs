//! Exact discrete recovery: weighted sums of stratified conditionals over
//! count (or probability) tables, in rational arithmetic so the results are
//! deterministic and exactly reproducible.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("table has no variables")]
    NoVariables,
    #[error("assignment arity {got} does not match {expected} variables")]
    ArityMismatch { got: usize, expected: usize },
    #[error("unknown variable `{name}`")]
    UnknownVariable { name: String },
    #[error("table over {table:?} does not contain adjustment variables {missing:?}")]
    MissingAdjustmentVariables { table: Vec<String>, missing: Vec<String> },
    #[error("adjustment table must be normalized")]
    ExternalNotNormalized,
    #[error("negative probability in table")]
    NegativeProbability,
    #[error("unsupported stratum: no biased data at {cell} but external weight is positive")]
    UnsupportedStratum { cell: String },
    #[error("no biased data at treatment level {x}")]
    EmptyTreatmentArm { x: u8 },
    #[error("relative error undefined for truth {truth}")]
    NonpositiveTruth { truth: f64 },
}

/// Probability (or count) table over a tuple of named discrete variables.
/// Cells are keyed by the joint assignment in variable order; values are
/// exact rationals. Counts are stored as integer-valued rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTable {
    variables: Vec<String>,
    cells: BTreeMap<Vec<u8>, BigRational>,
    normalized: bool,
}

impl DiscreteTable {
    pub fn from_counts(variables: Vec<String>, rows: &[(Vec<u8>, u64)]) -> Result<Self, EstimateError> {
        let rational_rows: Vec<(Vec<u8>, BigRational)> = rows
            .iter()
            .map(|(k, c)| (k.clone(), BigRational::from_integer((*c).into())))
            .collect();
        Self::from_cells(variables, rational_rows)
    }

    pub fn from_probabilities(
        variables: Vec<String>,
        rows: &[(Vec<u8>, BigRational)],
    ) -> Result<Self, EstimateError> {
        Self::from_cells(variables, rows.to_vec())
    }

    fn from_cells(
        variables: Vec<String>,
        rows: Vec<(Vec<u8>, BigRational)>,
    ) -> Result<Self, EstimateError> {
        if variables.is_empty() {
            return Err(EstimateError::NoVariables);
        }
        let mut cells: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        for (key, value) in rows {
            if key.len() != variables.len() {
                return Err(EstimateError::ArityMismatch {
                    got: key.len(),
                    expected: variables.len(),
                });
            }
            if value < BigRational::zero() {
                return Err(EstimateError::NegativeProbability);
            }
            *cells.entry(key).or_insert_with(BigRational::zero) += value;
        }
        let total: BigRational = cells.values().sum();
        let normalized = total.is_one();
        Ok(DiscreteTable {
            variables,
            cells,
            normalized,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn cells(&self) -> impl Iterator<Item = (&[u8], &BigRational)> {
        self.cells.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn total(&self) -> BigRational {
        self.cells.values().sum()
    }

    /// Rescale so cells sum to one.
    pub fn normalize(&self) -> Self {
        let total = self.total();
        if total.is_zero() {
            return self.clone();
        }
        let cells = self
            .cells
            .iter()
            .map(|(k, v)| (k.clone(), v / &total))
            .collect();
        DiscreteTable {
            variables: self.variables.clone(),
            cells,
            normalized: true,
        }
    }

    fn var_position(&self, name: &str) -> Result<usize, EstimateError> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| EstimateError::UnknownVariable {
                name: name.to_string(),
            })
    }

    /// Sum out all variables not in `keep`, preserving `keep` order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Self, EstimateError> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|name| self.var_position(name))
            .collect::<Result<_, _>>()?;
        let mut cells: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        for (key, value) in &self.cells {
            let reduced: Vec<u8> = positions.iter().map(|&p| key[p]).collect();
            *cells.entry(reduced).or_insert_with(BigRational::zero) += value;
        }
        Ok(DiscreteTable {
            variables: keep.iter().map(|s| s.to_string()).collect(),
            cells,
            normalized: self.normalized,
        })
    }

    /// Restrict to cells matching `fixed` and drop those variables.
    pub fn slice(&self, fixed: &[(&str, u8)]) -> Result<Self, EstimateError> {
        let positions: Vec<(usize, u8)> = fixed
            .iter()
            .map(|(name, level)| self.var_position(name).map(|p| (p, *level)))
            .collect::<Result<_, _>>()?;
        let keep: Vec<usize> = (0..self.variables.len())
            .filter(|i| !positions.iter().any(|(p, _)| p == i))
            .collect();
        let mut cells: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        for (key, value) in &self.cells {
            if positions.iter().all(|&(p, level)| key[p] == level) {
                let reduced: Vec<u8> = keep.iter().map(|&p| key[p]).collect();
                *cells.entry(reduced).or_insert_with(BigRational::zero) += value;
            }
        }
        Ok(DiscreteTable {
            variables: keep.iter().map(|&i| self.variables[i].clone()).collect(),
            cells,
            normalized: false,
        })
    }

    /// Cell value (zero when absent).
    pub fn value(&self, key: &[u8]) -> BigRational {
        self.cells.get(key).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Cell value as f64 for display.
    pub fn value_f64(&self, key: &[u8]) -> f64 {
        self.value(key).to_f64().unwrap_or(f64::NAN)
    }

    /// Distinct levels of one variable present in the table, ascending.
    pub fn levels(&self, name: &str) -> Result<Vec<u8>, EstimateError> {
        let p = self.var_position(name)?;
        let mut levels: Vec<u8> = self.cells.keys().map(|k| k[p]).collect();
        levels.sort_unstable();
        levels.dedup();
        Ok(levels)
    }
}

/// Recover the outcome distribution under treatment `x` by adjusting the
/// biased table with an external (unbiased, normalized) marginal.
///
/// Conventions: the first variable of `biased` is the treatment, the last is
/// the outcome, and `external`'s variables are the adjustment set; any other
/// variables of `biased` are summed out within each stratum. Returns
/// sum over z of P(outcome | x, z, selected) * P(z), exactly normalized.
pub fn recover_discrete(
    biased: &DiscreteTable,
    external: &DiscreteTable,
    x: u8,
) -> Result<DiscreteTable, EstimateError> {
    if biased.variables.len() < 2 {
        return Err(EstimateError::NoVariables);
    }
    if !external.is_normalized() {
        return Err(EstimateError::ExternalNotNormalized);
    }
    let treatment = biased.variables[0].clone();
    let outcome = biased.variables[biased.variables.len() - 1].clone();
    let middle: Vec<&String> = biased.variables[1..biased.variables.len() - 1].iter().collect();
    let missing: Vec<String> = external
        .variables
        .iter()
        .filter(|zv| !middle.iter().any(|m| m == zv))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(EstimateError::MissingAdjustmentVariables {
            table: biased.variables.clone(),
            missing,
        });
    }

    let mut acc: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
    for (z_key, weight) in external.cells() {
        if weight.is_zero() {
            continue;
        }
        let mut fixed: Vec<(&str, u8)> = vec![(treatment.as_str(), x)];
        for (zv, level) in external.variables.iter().zip(z_key) {
            fixed.push((zv.as_str(), *level));
        }
        let stratum = biased.slice(&fixed)?.marginalize(&[outcome.as_str()])?;
        let total = stratum.total();
        if total.is_zero() {
            let cell = fixed
                .iter()
                .map(|(n, l)| format!("{n}={l}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(EstimateError::UnsupportedStratum { cell });
        }
        for (y_key, count) in stratum.cells() {
            let contribution = count / &total * weight;
            *acc.entry(y_key.to_vec()).or_insert_with(BigRational::zero) += contribution;
        }
    }

    let table = DiscreteTable {
        variables: vec![outcome],
        cells: acc,
        normalized: false,
    };
    // Each stratum conditional sums to one and the external weights sum to
    // one, so the result is already normalized; mark it via normalize() to
    // keep the flag consistent under any future arithmetic changes.
    Ok(table.normalize())
}

/// Marginal outcome distribution under treatment `x`, ignoring strata.
pub fn biased_discrete(biased: &DiscreteTable, x: u8) -> Result<DiscreteTable, EstimateError> {
    if biased.variables.len() < 2 {
        return Err(EstimateError::NoVariables);
    }
    let treatment = biased.variables[0].clone();
    let outcome = biased.variables[biased.variables.len() - 1].clone();
    let arm = biased
        .slice(&[(treatment.as_str(), x)])?
        .marginalize(&[outcome.as_str()])?;
    if arm.total().is_zero() {
        return Err(EstimateError::EmptyTreatmentArm { x });
    }
    Ok(arm.normalize())
}

/// Signed relative error (estimate - truth) / truth.
pub fn relative_error(estimate: f64, truth: f64) -> Result<f64, EstimateError> {
    if truth <= 0.0 {
        return Err(EstimateError::NonpositiveTruth { truth });
    }
    Ok((estimate - truth) / truth)
}
