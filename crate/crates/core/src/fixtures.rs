//! Reference graphs and trial data used across tests, the CLI demos, and
//! the reproduction reports.
//!
//! Each graph captures one selection mechanism worth naming:
//!
//! - [`selection_on_treatment`]: recruitment depends on the treatment only;
//!   the experimental distribution is untouched by the bias.
//! - [`selection_on_both`]: recruitment depends on treatment and outcome.
//! - [`confounded_selection_on_treatment`]: a treatment-outcome confounder
//!   plus treatment-driven recruitment; bias leaks into the counterfactual
//!   outcome through the shared noise of the confounder.
//! - [`confounder_drives_selection`]: the confounder feeds recruitment
//!   directly, yet the intervened outcome stays clean.
//! - [`selection_on_outcome`]: recruitment reads the outcome; unbiased
//!   estimation is impossible without external data.
//! - [`selection_on_independent_cause`]: recruitment driven by a cause of a
//!   post-treatment variable; no correction needed.
//! - [`two_admissible_sets`]: needs external data; both {W1, W3} and
//!   {W1, W4} license the adjustment.
//! - [`no_admissible_set`]: no covariate set blocks the bias; the search
//!   must report failure.

use num_rational::BigRational;

use crate::estimate::discrete::DiscreteTable;
use crate::graph::{parse_graph, CausalGraph};
use crate::sim::{ContinuousScmConfig, DiscreteScmConfig};

pub const SELECTION_ON_TREATMENT: &str = "\
node X endo; node Y endo; node S sel
node U_X exo; node U_Y exo; node U_S exo
edge X -> Y; edge X -> S
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
target X -> Y
";

pub const SELECTION_ON_BOTH: &str = "\
node X endo; node Y endo; node S sel
edge X -> Y; edge X -> S; edge Y -> S
target X -> Y
";

pub const CONFOUNDED_SELECTION_ON_TREATMENT: &str = "\
node X endo; node Y endo; node W endo; node S sel
node U_X exo; node U_Y exo; node U_W exo; node U_S exo
edge W -> X; edge W -> Y; edge X -> Y; edge X -> S
edge U_X -> X; edge U_Y -> Y; edge U_W -> W; edge U_S -> S
target X -> Y
";

pub const CONFOUNDER_DRIVES_SELECTION: &str = "\
node X endo; node Y endo; node W endo; node S sel
node U_X exo; node U_Y exo; node U_W exo; node U_S exo
edge W -> X; edge W -> S; edge X -> Y
edge U_X -> X; edge U_Y -> Y; edge U_W -> W; edge U_S -> S
target X -> Y
";

pub const SELECTION_ON_OUTCOME: &str = "\
node X endo; node Y endo; node S sel
node U_X exo; node U_Y exo; node U_S exo
edge X -> Y; edge Y -> S
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
target X -> Y
";

pub const SELECTION_ON_INDEPENDENT_CAUSE: &str = "\
node X endo; node Y endo; node W1 endo; node W2 endo; node W3 endo; node S sel
node U_X exo; node U_Y exo; node U_W1 exo; node U_W2 exo; node U_W3 exo; node U_S exo
edge W1 -> X; edge W1 -> Y; edge X -> Y; edge X -> W2; edge W3 -> W2; edge W3 -> S
edge U_X -> X; edge U_Y -> Y; edge U_W1 -> W1; edge U_W2 -> W2; edge U_W3 -> W3; edge U_S -> S
target X -> Y
";

pub const TWO_ADMISSIBLE_SETS: &str = "\
node X endo; node Y endo
node W1 endo; node W2 endo; node W3 endo; node W4 endo
node S sel
node U_X exo; node U_Y exo
node U_W1 exo; node U_W2 exo; node U_W3 exo; node U_W4 exo
node U_S exo
edge X -> Y; edge W1 -> X; edge W1 -> W2; edge W2 -> Y
edge X -> S; edge W3 -> S; edge W4 -> W3; edge W4 -> Y
edge U_X -> X; edge U_Y -> Y; edge U_W1 -> W1; edge U_W2 -> W2
edge U_W3 -> W3; edge U_W4 -> W4; edge U_S -> S
target X -> Y
";

pub const NO_ADMISSIBLE_SET: &str = "\
node X endo; node Y endo
node W1 endo; node W2 endo; node W3 endo; node W4 endo
node S sel
node U_X exo; node U_Y exo
node U_W1 exo; node U_W2 exo; node U_W3 exo; node U_W4 exo
node U_S exo
edge X -> Y; edge X -> W1; edge W1 -> W2; edge W2 -> Y
edge X -> S; edge W2 -> S; edge W3 -> S; edge W4 -> W3; edge W4 -> Y
edge U_X -> X; edge U_Y -> Y; edge U_W1 -> W1; edge U_W2 -> W2
edge U_W3 -> W3; edge U_W4 -> W4; edge U_S -> S
target X -> Y
";

/// Graph of the discrete trial: outcome driven by treatment, comorbidity
/// and severity; recruitment driven by severity alone.
pub const DISCRETE_TRIAL: &str = "\
node X endo; node Y endo; node W endo; node Z endo; node S sel
edge X -> Y; edge W -> Y; edge Z -> Y; edge Z -> S
target X -> Y
";

/// Graph of the continuous trial with selection on the biomarker only.
pub const CONTINUOUS_TRIAL_BASIC: &str = "\
node X endo; node Y endo; node W endo; node Z endo; node S sel
edge X -> Y; edge W -> Y; edge Z -> Y; edge Z -> S
target X -> Y
";

/// Continuous trial variant whose recruitment reads both covariates.
pub const CONTINUOUS_TRIAL_ADVANCED: &str = "\
node X endo; node Y endo; node W endo; node Z endo; node S sel
edge X -> Y; edge W -> Y; edge Z -> Y; edge Z -> S; edge W -> S
target X -> Y
";

fn must_parse(text: &str) -> CausalGraph {
    parse_graph(text).expect("fixture graphs are valid")
}

pub fn selection_on_treatment() -> CausalGraph {
    must_parse(SELECTION_ON_TREATMENT)
}

pub fn selection_on_both() -> CausalGraph {
    must_parse(SELECTION_ON_BOTH)
}

pub fn confounded_selection_on_treatment() -> CausalGraph {
    must_parse(CONFOUNDED_SELECTION_ON_TREATMENT)
}

pub fn confounder_drives_selection() -> CausalGraph {
    must_parse(CONFOUNDER_DRIVES_SELECTION)
}

pub fn selection_on_outcome() -> CausalGraph {
    must_parse(SELECTION_ON_OUTCOME)
}

pub fn selection_on_independent_cause() -> CausalGraph {
    must_parse(SELECTION_ON_INDEPENDENT_CAUSE)
}

pub fn two_admissible_sets() -> CausalGraph {
    must_parse(TWO_ADMISSIBLE_SETS)
}

pub fn no_admissible_set() -> CausalGraph {
    must_parse(NO_ADMISSIBLE_SET)
}

pub fn discrete_trial_graph() -> CausalGraph {
    must_parse(DISCRETE_TRIAL)
}

pub fn continuous_trial_basic_graph() -> CausalGraph {
    must_parse(CONTINUOUS_TRIAL_BASIC)
}

pub fn continuous_trial_advanced_graph() -> CausalGraph {
    must_parse(CONTINUOUS_TRIAL_ADVANCED)
}

/// Every named fixture graph, for suites that sweep all of them.
pub fn all_graphs() -> Vec<(&'static str, CausalGraph)> {
    vec![
        ("selection_on_treatment", selection_on_treatment()),
        ("selection_on_both", selection_on_both()),
        (
            "confounded_selection_on_treatment",
            confounded_selection_on_treatment(),
        ),
        ("confounder_drives_selection", confounder_drives_selection()),
        ("selection_on_outcome", selection_on_outcome()),
        (
            "selection_on_independent_cause",
            selection_on_independent_cause(),
        ),
        ("two_admissible_sets", two_admissible_sets()),
        ("no_admissible_set", no_admissible_set()),
        ("discrete_trial", discrete_trial_graph()),
        ("continuous_trial_advanced", continuous_trial_advanced_graph()),
    ]
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Biased trial counts by (treatment, comorbidity, severity): the recorded
/// (not-recovered, recovered) cells of the selection-biased cohort.
pub const TRIAL_COUNTS: [(u8, u8, u8, u64, u64); 8] = [
    (0, 0, 0, 12, 141),
    (0, 0, 1, 174, 180),
    (0, 1, 0, 42, 100),
    (0, 1, 1, 245, 110),
    (1, 0, 0, 8, 158),
    (1, 0, 1, 73, 266),
    (1, 1, 0, 10, 146),
    (1, 1, 1, 146, 218),
];

/// Biased trial counts as a table over (x, w, z, y).
pub fn trial_biased_counts() -> DiscreteTable {
    let mut rows = Vec::new();
    for &(x, w, z, not_recovered, recovered) in &TRIAL_COUNTS {
        rows.push((vec![x, w, z, 0], not_recovered));
        rows.push((vec![x, w, z, 1], recovered));
    }
    DiscreteTable::from_counts(
        vec!["x".into(), "w".into(), "z".into(), "y".into()],
        &rows,
    )
    .expect("trial counts are a valid table")
}

/// Ideal recovery probabilities P(Y=1 | x, w, z) of the trial, exact.
pub fn trial_outcome_probabilities() -> [((u8, u8, u8), BigRational); 8] {
    [
        ((0, 0, 0), ratio(90, 100)),
        ((0, 0, 1), ratio(50, 100)),
        ((0, 1, 0), ratio(70, 100)),
        ((0, 1, 1), ratio(30, 100)),
        ((1, 0, 0), ratio(95, 100)),
        ((1, 0, 1), ratio(80, 100)),
        ((1, 1, 0), ratio(90, 100)),
        ((1, 1, 1), ratio(60, 100)),
    ]
}

/// The ideal joint distribution of the trial as an exact table over
/// (x, w, z, y), with uniform treatment assignment and fair covariates.
pub fn trial_ideal_joint() -> DiscreteTable {
    let half = ratio(1, 2);
    let mut rows = Vec::new();
    for ((x, w, z), p_y1) in trial_outcome_probabilities() {
        let cell = &half * &half * &half;
        rows.push((vec![x, w, z, 1], &cell * &p_y1));
        rows.push((
            vec![x, w, z, 0],
            &cell * (BigRational::from_integer(1.into()) - &p_y1),
        ));
    }
    DiscreteTable::from_probabilities(
        vec!["x".into(), "w".into(), "z".into(), "y".into()],
        &rows,
    )
    .expect("ideal joint is a valid table")
}

/// A fair Bernoulli marginal as an exact single-variable table.
pub fn bernoulli_half(var: &str) -> DiscreteTable {
    DiscreteTable::from_probabilities(
        vec![var.to_string()],
        &[(vec![0], ratio(1, 2)), (vec![1], ratio(1, 2))],
    )
    .expect("valid marginal")
}

/// Configuration of the discrete trial simulator.
pub fn discrete_trial_config() -> DiscreteScmConfig {
    DiscreteScmConfig {
        p_w: 0.5,
        p_z: 0.5,
        p_x: 0.5,
        // P(S=1 | z) per severity level
        selection: [0.3, 0.7],
        // P(Y=1 | x, w, z), indexed [x][w][z]
        outcome: [[[0.90, 0.50], [0.70, 0.30]], [[0.95, 0.80], [0.90, 0.60]]],
    }
}

/// Continuous-trial parameters with selection on the biomarker only.
pub fn continuous_trial_basic_config() -> ContinuousScmConfig {
    ContinuousScmConfig {
        alpha: 2.0,
        beta: 1.0,
        gamma_wy: 1.0,
        sigma_y: 1.0,
        gamma_z: 0.5,
        gamma_w: 0.0,
        sigma_s: 1.0,
        c: 0.2,
        p_x: 0.5,
        gamma_wx: 0.0,
    }
}

/// Continuous-trial parameters whose recruitment reads both covariates.
pub fn continuous_trial_advanced_config() -> ContinuousScmConfig {
    ContinuousScmConfig {
        gamma_w: 0.5,
        ..continuous_trial_basic_config()
    }
}
