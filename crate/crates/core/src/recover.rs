//! Recoverability decisions for the counterfactual experimental
//! distribution under selection bias.
//!
//! Three procedures, layered:
//!
//! - [`check_natural`]: is the biased experimental distribution already
//!   unbiased? True exactly when the selection node is d-separated from the
//!   counterfactual outcome in the twin network given nothing.
//! - [`find_admissible_sets`]: which covariate sets z license the
//!   adjustment sum over z of P(outcome | x, z, selected) * P(z)? Those
//!   with the selection node d-separated from the counterfactual outcome
//!   given the factual z in the twin network.
//! - [`rc`]: when P(z) is not directly available externally, a recursive
//!   routine that recovers conditionals from biased data plus external
//!   marginals, or certifies failure.
//!
//! [`decide`] glues them into one verdict with a replayable derivation
//! trace.

use serde::Serialize;
use thiserror::Error;

use crate::dsep::{d_separated, DsepError, DsepQuery};
use crate::graph::{CausalGraph, GraphError, NodeKind, NodeSet};
use crate::twin::{build_twin, TwinError, TwinNetwork};
use crate::util::subsets_by_size;

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Twin(#[from] TwinError),
    #[error(transparent)]
    Dsep(#[from] DsepError),
    #[error("`{name}` is not an endogenous node")]
    NotEndogenous { name: String },
    #[error("candidate set may not contain the intervention or outcome (`{name}`)")]
    CandidateIsTarget { name: String },
    #[error("data regime may not contain the selection node `{name}`")]
    RegimeContainsSelection { name: String },
}

/// Distinct failure modes of the recursive conditional-recovery routine.
#[derive(Debug, Error)]
pub enum RcError {
    #[error("recovery of P({w} | {given}) failed: {reason}")]
    Fail {
        w: NodeSet,
        given: NodeSet,
        reason: String,
    },
    #[error("recursion depth budget exhausted (budget {budget})")]
    DepthExhausted { budget: usize },
    #[error(transparent)]
    Input(#[from] RecoverError),
}

/// What data the analyst actually has: variables recorded in the biased
/// experiment, and variables with population-level unbiased distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataRegime {
    pub biased_measured: NodeSet,
    pub external_unbiased: NodeSet,
}

impl DataRegime {
    pub fn new(
        g: &CausalGraph,
        biased_measured: NodeSet,
        external_unbiased: NodeSet,
    ) -> Result<Self, RecoverError> {
        for set in [&biased_measured, &external_unbiased] {
            for name in set.iter() {
                match g.kind_of(name) {
                    None => {
                        return Err(GraphError::UnknownNode {
                            name: name.to_string(),
                        }
                        .into())
                    }
                    Some(NodeKind::Selection) => {
                        return Err(RecoverError::RegimeContainsSelection {
                            name: name.to_string(),
                        })
                    }
                    Some(NodeKind::Exogenous) => {
                        return Err(RecoverError::NotEndogenous {
                            name: name.to_string(),
                        })
                    }
                    Some(NodeKind::Endogenous) => {}
                }
            }
        }
        Ok(DataRegime {
            biased_measured,
            external_unbiased,
        })
    }

    /// A regime with no external data at all.
    pub fn biased_only(g: &CausalGraph, measured: NodeSet) -> Result<Self, RecoverError> {
        Self::new(g, measured, NodeSet::new())
    }
}

/// Which graph a recorded d-separation query ran against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSide {
    Factual,
    Twin,
}

/// One replayable d-separation query with its recorded answer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsepCitation {
    pub side: GraphSide,
    pub x: NodeSet,
    pub y: NodeSet,
    pub given: NodeSet,
    pub separated: bool,
}

/// One derivation step: which rule fired, justified by which query.
#[derive(Debug, Clone, Serialize)]
pub struct DerivationStep {
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub citation: Option<DsepCitation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    /// No correction needed: the biased experimental distribution is
    /// already the unbiased one.
    Natural,
    /// Adjust over the named covariate set.
    Adjusted,
}

/// How the marginal P(adjustment set) is obtained.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MarginalSource {
    /// Directly available in the external unbiased data.
    External,
    /// Reconstructed from biased data plus external marginals.
    Recovered { plan: RcPlan },
}

/// Tree-shaped record of the recursive recovery of a conditional
/// P(w | given): which step fired at each node.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum RcPlan {
    /// All variables externally available: read P(w | given) off P(T).
    External { w: NodeSet, given: NodeSet },
    /// Selection independent of w given `given`: biased conditional is
    /// already unbiased.
    BiasedConditional {
        w: NodeSet,
        given: NodeSet,
        citation: DsepCitation,
    },
    /// Adjust with a minimal cover c: P(w|given) = sum over c of
    /// P(w | given, c, selected) * P(c | given).
    Adjust {
        w: NodeSet,
        given: NodeSet,
        cover: NodeSet,
        citation: DsepCitation,
        cover_source: Box<RcPlan>,
    },
    /// Chain-rule split: P(w|given) = P(head | tail, given) * P(tail | given).
    Chain {
        head: NodeSet,
        tail: NodeSet,
        given: NodeSet,
        head_plan: Box<RcPlan>,
        tail_plan: Box<RcPlan>,
    },
}

impl RcPlan {
    /// Flatten into human-readable derivation steps.
    pub fn describe(&self, out: &mut Vec<DerivationStep>) {
        match self {
            RcPlan::External { w, given } => out.push(DerivationStep {
                rule: if given.is_empty() {
                    format!("P({w}) read from external data")
                } else {
                    format!("P({w} | {given}) read from external data")
                },
                citation: None,
            }),
            RcPlan::BiasedConditional { w, given, citation } => out.push(DerivationStep {
                rule: format!(
                    "P({w} | {given}) equals the biased conditional: selection independent of {w} given {given}"
                ),
                citation: Some(citation.clone()),
            }),
            RcPlan::Adjust {
                w,
                given,
                cover,
                citation,
                cover_source,
            } => {
                out.push(DerivationStep {
                    rule: format!(
                        "P({w} | {given}) = sum over {cover} of P({w} | {given}, {cover}, selected) P({cover} | {given})"
                    ),
                    citation: Some(citation.clone()),
                });
                cover_source.describe(out);
            }
            RcPlan::Chain {
                head,
                tail,
                given,
                head_plan,
                tail_plan,
            } => {
                out.push(DerivationStep {
                    rule: format!(
                        "chain rule: P({} | {given}) = P({head} | {tail}, {given}) P({tail} | {given})",
                        head.union(tail)
                    ),
                    citation: None,
                });
                head_plan.describe(out);
                tail_plan.describe(out);
            }
        }
    }

    fn citations(&self, out: &mut Vec<DsepCitation>) {
        match self {
            RcPlan::External { .. } => {}
            RcPlan::BiasedConditional { citation, .. } => out.push(citation.clone()),
            RcPlan::Adjust {
                citation,
                cover_source,
                ..
            } => {
                out.push(citation.clone());
                cover_source.citations(out);
            }
            RcPlan::Chain {
                head_plan,
                tail_plan,
                ..
            } => {
                head_plan.citations(out);
                tail_plan.citations(out);
            }
        }
    }
}

/// An executable recovery recipe with its justification.
#[derive(Debug, Clone, Serialize)]
pub struct FormulaPlan {
    pub kind: PlanKind,
    pub adjustment_set: NodeSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_source: Option<MarginalSource>,
    pub derivation: Vec<DerivationStep>,
}

impl FormulaPlan {
    /// Re-run every cited d-separation query against the graph; true when
    /// each reproduces its recorded answer.
    pub fn replays(&self, g: &CausalGraph, x: &str, y: &str) -> Result<bool, RecoverError> {
        let twin = build_twin(g, x, y)?;
        let mut citations: Vec<DsepCitation> = self
            .derivation
            .iter()
            .filter_map(|s| s.citation.clone())
            .collect();
        if let Some(MarginalSource::Recovered { plan }) = &self.marginal_source {
            plan.citations(&mut citations);
        }
        for c in citations {
            let query = DsepQuery::new(c.x.clone(), c.y.clone(), c.given.clone())?;
            let graph = match c.side {
                GraphSide::Factual => g,
                GraphSide::Twin => twin.graph(),
            };
            if d_separated(graph, &query)? != c.separated {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The outcome of [`decide`].
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecoverabilityVerdict {
    /// The biased experimental distribution equals the unbiased one.
    Natural { plan: FormulaPlan },
    /// Recoverable with external data; plans sorted by adjustment-set
    /// cardinality, ties lexicographic.
    RecoverableWith { plans: Vec<FormulaPlan> },
    /// Not recoverable from the given data regime.
    Failure { reason: String },
}

impl RecoverabilityVerdict {
    pub fn is_failure(&self) -> bool {
        matches!(self, RecoverabilityVerdict::Failure { .. })
    }

    pub fn is_natural(&self) -> bool {
        matches!(self, RecoverabilityVerdict::Natural { .. })
    }

    pub fn plans(&self) -> &[FormulaPlan] {
        match self {
            RecoverabilityVerdict::Natural { plan } => std::slice::from_ref(plan),
            RecoverabilityVerdict::RecoverableWith { plans } => plans,
            RecoverabilityVerdict::Failure { .. } => &[],
        }
    }
}

/// Search limits, exposed on the command line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecideOptions {
    /// Largest adjustment set tried.
    pub max_size: usize,
    /// Recursion budget of the conditional-recovery routine. Its chain-rule
    /// step can branch combinatorially, so the budget is explicit.
    pub rc_depth: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            max_size: 4,
            rc_depth: 8,
        }
    }
}

fn require_endogenous(g: &CausalGraph, name: &str) -> Result<(), RecoverError> {
    match g.kind_of(name) {
        None => Err(GraphError::UnknownNode {
            name: name.to_string(),
        }
        .into()),
        Some(NodeKind::Endogenous) => Ok(()),
        Some(_) => Err(RecoverError::NotEndogenous {
            name: name.to_string(),
        }),
    }
}

fn twin_query(twin: &TwinNetwork, given: &NodeSet) -> Result<(bool, DsepCitation), RecoverError> {
    let s = NodeSet::singleton(twin.selection_node());
    let y_star = NodeSet::singleton(twin.outcome());
    let query = DsepQuery::new(s.clone(), y_star.clone(), given.clone())?;
    let separated = d_separated(twin.graph(), &query)?;
    Ok((
        separated,
        DsepCitation {
            side: GraphSide::Twin,
            x: s,
            y: y_star,
            given: given.clone(),
            separated,
        },
    ))
}

fn factual_query(
    g: &CausalGraph,
    w: &NodeSet,
    given: &NodeSet,
) -> Result<(bool, DsepCitation), RecoverError> {
    let s_name = g
        .selection_node()
        .ok_or(TwinError::MissingSelection)?
        .to_string();
    let s = NodeSet::singleton(s_name);
    let query = DsepQuery::new(s.clone(), w.clone(), given.clone())?;
    let separated = d_separated(g, &query)?;
    Ok((
        separated,
        DsepCitation {
            side: GraphSide::Factual,
            x: s,
            y: w.clone(),
            given: given.clone(),
            separated,
        },
    ))
}

/// True when the experimental distribution is untouched by the selection
/// mechanism: selection d-separated from the counterfactual outcome given
/// nothing, in the twin network.
pub fn check_natural(g: &CausalGraph, x: &str, y: &str) -> Result<bool, RecoverError> {
    let twin = build_twin(g, x, y)?;
    Ok(twin_query(&twin, &NodeSet::new())?.0)
}

/// All subsets z of `candidates` with |z| <= max_size such that
/// conditioning on the factual z d-separates selection from the
/// counterfactual outcome in the twin network. Smallest sets first, ties
/// lexicographic. Conditioning sets contain factual names only; the
/// factual treatment and outcome are not eligible because the experiment
/// never observes them.
pub fn find_admissible_sets(
    g: &CausalGraph,
    x: &str,
    y: &str,
    candidates: &NodeSet,
    max_size: usize,
) -> Result<Vec<NodeSet>, RecoverError> {
    require_endogenous(g, x)?;
    require_endogenous(g, y)?;
    for name in candidates.iter() {
        require_endogenous(g, name)?;
        if name == x || name == y {
            return Err(RecoverError::CandidateIsTarget {
                name: name.to_string(),
            });
        }
    }
    let twin = build_twin(g, x, y)?;
    let names: Vec<String> = candidates.iter().map(String::from).collect();
    let mut out = Vec::new();
    for subset in subsets_by_size(&names, max_size) {
        let z = NodeSet::from_names(subset);
        if twin_query(&twin, &z)?.0 {
            out.push(z);
        }
    }
    Ok(out)
}

/// Recursive conditional recovery: can P(w | z) be expressed from biased
/// conditionals P(. | ., selected) and the external distribution P(T)?
///
/// The five steps, in order, at each recursion node:
/// 1. w and z all external: done.
/// 2. selection independent of w given z (factual graph): the biased
///    conditional is already unbiased.
/// 3. a minimal cover c with selection independent of w given z and c:
///    adjust over c; P(c | z) comes from the external data when c and z are
///    all external, else by recursion. The smallest cover in
///    (cardinality, lexicographic) order wins; no backtracking over covers.
/// 4. chain-rule split over a proper subset of w, recursing on both
///    factors.
/// 5. fail when w is a singleton and nothing above applies (or all splits
///    fail).
pub fn rc(
    g: &CausalGraph,
    w: &NodeSet,
    z: &NodeSet,
    regime: &DataRegime,
    depth_budget: usize,
) -> Result<RcPlan, RcError> {
    for name in w.iter().chain(z.iter()) {
        require_endogenous(g, name)?;
    }
    if w.is_empty() {
        return Err(RcError::Fail {
            w: w.clone(),
            given: z.clone(),
            reason: "nothing to recover".into(),
        });
    }
    rc_inner(g, w, z, regime, depth_budget, depth_budget)
}

fn rc_inner(
    g: &CausalGraph,
    w: &NodeSet,
    z: &NodeSet,
    regime: &DataRegime,
    depth: usize,
    budget: usize,
) -> Result<RcPlan, RcError> {
    if depth == 0 {
        return Err(RcError::DepthExhausted { budget });
    }
    let external = &regime.external_unbiased;

    // Step 1: everything external.
    if w.union(z).is_subset(external) {
        return Ok(RcPlan::External {
            w: w.clone(),
            given: z.clone(),
        });
    }

    // Step 2: biased conditional already unbiased.
    let (separated, citation) = factual_query(g, w, z)?;
    if separated {
        return Ok(RcPlan::BiasedConditional {
            w: w.clone(),
            given: z.clone(),
            citation,
        });
    }

    // Step 3: minimal cover, first hit wins.
    let used = w.union(z);
    let pool: Vec<String> = regime
        .biased_measured
        .difference(&used)
        .iter()
        .map(String::from)
        .collect();
    let mut cover_hit: Option<(NodeSet, DsepCitation)> = None;
    for cand in subsets_by_size(&pool, pool.len()) {
        if cand.is_empty() {
            continue; // the empty cover is step 2
        }
        let cover = NodeSet::from_names(cand);
        let (sep, cite) = factual_query(g, w, &z.union(&cover))?;
        if sep {
            cover_hit = Some((cover, cite));
            break;
        }
    }
    if let Some((cover, citation)) = cover_hit {
        let cover_source = if cover.union(z).is_subset(external) {
            RcPlan::External {
                w: cover.clone(),
                given: z.clone(),
            }
        } else {
            rc_inner(g, &cover, z, regime, depth - 1, budget)?
        };
        return Ok(RcPlan::Adjust {
            w: w.clone(),
            given: z.clone(),
            cover,
            citation,
            cover_source: Box::new(cover_source),
        });
    }

    // Step 4: chain-rule splits, smallest head first.
    if w.len() >= 2 {
        let members: Vec<String> = w.iter().map(String::from).collect();
        for head_names in subsets_by_size(&members, w.len() - 1) {
            if head_names.is_empty() {
                continue;
            }
            let head = NodeSet::from_names(head_names);
            let tail = w.difference(&head);
            let head_plan = rc_inner(g, &head, &tail.union(z), regime, depth - 1, budget);
            let tail_plan = rc_inner(g, &tail, z, regime, depth - 1, budget);
            match (head_plan, tail_plan) {
                (Ok(hp), Ok(tp)) => {
                    return Ok(RcPlan::Chain {
                        head,
                        tail,
                        given: z.clone(),
                        head_plan: Box::new(hp),
                        tail_plan: Box::new(tp),
                    })
                }
                (Err(RcError::DepthExhausted { budget }), _)
                | (_, Err(RcError::DepthExhausted { budget })) => {
                    return Err(RcError::DepthExhausted { budget })
                }
                _ => continue,
            }
        }
    }

    // Step 5.
    Err(RcError::Fail {
        w: w.clone(),
        given: z.clone(),
        reason: if w.len() == 1 {
            "no recovery step applies to the singleton".into()
        } else {
            "every chain-rule split failed".into()
        },
    })
}

/// Full decision: natural when possible, otherwise every admissible
/// adjustment set whose marginal is obtainable from the data regime,
/// otherwise failure with the reason.
pub fn decide(
    g: &CausalGraph,
    x: &str,
    y: &str,
    regime: &DataRegime,
) -> Result<RecoverabilityVerdict, RecoverError> {
    decide_with(g, x, y, regime, &DecideOptions::default())
}

pub fn decide_with(
    g: &CausalGraph,
    x: &str,
    y: &str,
    regime: &DataRegime,
    opts: &DecideOptions,
) -> Result<RecoverabilityVerdict, RecoverError> {
    require_endogenous(g, x)?;
    require_endogenous(g, y)?;
    let twin = build_twin(g, x, y)?;

    let (natural, citation) = twin_query(&twin, &NodeSet::new())?;
    if natural {
        return Ok(RecoverabilityVerdict::Natural {
            plan: FormulaPlan {
                kind: PlanKind::Natural,
                adjustment_set: NodeSet::new(),
                marginal_source: None,
                derivation: vec![DerivationStep {
                    rule: "selection independent of the counterfactual outcome given nothing; \
                           the biased experimental distribution is already unbiased"
                        .into(),
                    citation: Some(citation),
                }],
            },
        });
    }

    let mut candidates = regime.biased_measured.clone();
    candidates = candidates.difference(&NodeSet::from_names([x, y]));
    let admissible = find_admissible_sets(g, x, y, &candidates, opts.max_size)?;

    let mut plans = Vec::new();
    let mut rc_failures = Vec::new();
    for set in &admissible {
        if set.is_empty() {
            continue; // covered by the natural check above
        }
        let (_, cite) = twin_query(&twin, set)?;
        let mut derivation = vec![DerivationStep {
            rule: format!(
                "adjustment licensed: selection independent of the counterfactual outcome given {set}; \
                 recover as the sum over {set} of P(outcome | x, {set}, selected) P({set})"
            ),
            citation: Some(cite),
        }];
        let marginal_source = if set.is_subset(&regime.external_unbiased) {
            derivation.push(DerivationStep {
                rule: format!("P({set}) available in the external unbiased data"),
                citation: None,
            });
            MarginalSource::External
        } else {
            match rc(g, set, &NodeSet::new(), regime, opts.rc_depth) {
                Ok(plan) => {
                    plan.describe(&mut derivation);
                    MarginalSource::Recovered { plan }
                }
                Err(err) => {
                    rc_failures.push(format!("{set}: {err}"));
                    continue;
                }
            }
        };
        plans.push(FormulaPlan {
            kind: PlanKind::Adjusted,
            adjustment_set: set.clone(),
            marginal_source: Some(marginal_source),
            derivation,
        });
    }

    if plans.is_empty() {
        let reason = if admissible.iter().all(NodeSet::is_empty) && admissible.len() <= 1 {
            "no admissible set: no candidate subset d-separates selection from the \
             counterfactual outcome in the twin network"
                .to_string()
        } else {
            format!(
                "admissible sets exist but none is recoverable from the available data ({})",
                rc_failures.join("; ")
            )
        };
        return Ok(RecoverabilityVerdict::Failure { reason });
    }

    plans.sort_by(|a, b| {
        (a.adjustment_set.len(), a.adjustment_set.names())
            .cmp(&(b.adjustment_set.len(), b.adjustment_set.names()))
    });
    Ok(RecoverabilityVerdict::RecoverableWith { plans })
}
