//! Twin-network construction: a counterfactual copy of every endogenous and
//! selection node, sharing the factual exogenous parents, with all edges
//! into the intervention copy removed.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{CausalGraph, GraphError, NodeKind};

/// Name suffix marking counterfactual copies.
pub const COPY_SUFFIX: char = '*';

#[derive(Debug, Error)]
pub enum TwinError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("`{name}` is not an endogenous node")]
    NotEndogenous { name: String },
    #[error("intervention and outcome must be distinct (both `{name}`)")]
    SameNode { name: String },
    #[error("graph has no selection node")]
    MissingSelection,
}

/// A causal graph expanded with counterfactual copies. The factual half
/// equals the input graph; the copies share its exogenous parents; the
/// intervention copy has in-degree zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinNetwork {
    graph: CausalGraph,
    /// counterfactual name -> factual name
    factual_of: BTreeMap<String, String>,
    /// the mutilated intervention copy, e.g. `X*`
    intervention: String,
    /// the counterfactual outcome, e.g. `Y*`
    outcome: String,
}

impl TwinNetwork {
    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn factual_of(&self) -> &BTreeMap<String, String> {
        &self.factual_of
    }

    /// Counterfactual copy name for a factual node, if it was copied.
    pub fn counterfactual_of(&self, factual: &str) -> Option<&str> {
        // Copies are formed by appending the suffix, so this is a lookup.
        let candidate = format!("{factual}{COPY_SUFFIX}");
        self.factual_of
            .get_key_value(&candidate)
            .filter(|(_, f)| f.as_str() == factual)
            .map(|(c, _)| c.as_str())
    }

    pub fn is_counterfactual(&self, name: &str) -> bool {
        self.factual_of.contains_key(name)
    }

    pub fn intervention(&self) -> &str {
        &self.intervention
    }

    pub fn outcome(&self) -> &str {
        &self.outcome
    }

    pub fn selection_node(&self) -> &str {
        self.graph.selection_node().expect("twin keeps the selection node")
    }

    /// The factual side: every non-copied node and the edges among them.
    /// For an explicit-exogenous input this equals the input graph; for an
    /// implicit one it additionally carries the synthesized noise nodes.
    pub fn factual_half(&self) -> CausalGraph {
        let keep: Vec<(String, NodeKind)> = self
            .graph
            .node_names()
            .filter(|n| !self.is_counterfactual(n))
            .map(|n| (n.to_string(), self.graph.kind_of(n).unwrap()))
            .collect();
        let edges: Vec<(String, String)> = self
            .graph
            .edges()
            .into_iter()
            .filter(|(a, b)| !self.is_counterfactual(a) && !self.is_counterfactual(b))
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        CausalGraph::new(keep, edges, None).expect("factual half of a valid twin is valid")
    }
}

/// Construct the twin network of `g` for intervention `x` and outcome `y`.
///
/// Every endogenous node and the selection node gets a copy named with a
/// trailing `*`; exogenous nodes are shared, not copied. Edges among copies
/// mirror the factual edges except that nothing enters `x*`. Exogenous
/// parents attach to non-mutilated copies only. When `g` declares no
/// exogenous nodes, a noise parent `U_<name>` is synthesized for every
/// copied node except the intervention (whose copy is mutilated anyway, so
/// a shared noise parent could never matter).
pub fn build_twin(g: &CausalGraph, x: &str, y: &str) -> Result<TwinNetwork, TwinError> {
    for name in [x, y] {
        match g.kind_of(name) {
            None => {
                return Err(GraphError::UnknownNode {
                    name: name.to_string(),
                }
                .into())
            }
            Some(NodeKind::Endogenous) => {}
            Some(_) => {
                return Err(TwinError::NotEndogenous {
                    name: name.to_string(),
                })
            }
        }
    }
    if x == y {
        return Err(TwinError::SameNode { name: x.to_string() });
    }
    g.selection_node().ok_or(TwinError::MissingSelection)?;

    let copy_name = |n: &str| format!("{n}{COPY_SUFFIX}");
    let copied: Vec<String> = g
        .node_names()
        .filter(|n| g.kind_of(n) != Some(NodeKind::Exogenous))
        .map(String::from)
        .collect();

    let mut nodes: Vec<(String, NodeKind)> = g
        .node_names()
        .map(|n| (n.to_string(), g.kind_of(n).unwrap()))
        .collect();
    let mut factual_of = BTreeMap::new();
    for n in &copied {
        let c = copy_name(n);
        factual_of.insert(c.clone(), n.clone());
        // The copy of the selection node is stored as endogenous so the
        // expanded graph still has a single selection node.
        nodes.push((c, NodeKind::Endogenous));
    }

    let mut edges: Vec<(String, String)> = g
        .edges()
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    for (a, b) in g.edges() {
        if b == x {
            continue; // nothing enters the intervention copy
        }
        match (g.kind_of(a).unwrap(), g.kind_of(b).unwrap()) {
            (NodeKind::Exogenous, _) => edges.push((a.to_string(), copy_name(b))),
            (_, NodeKind::Exogenous) => unreachable!("exogenous nodes have no parents"),
            _ => edges.push((copy_name(a), copy_name(b))),
        }
    }

    if g.is_implicit_exogenous() {
        let taken: std::collections::HashSet<String> = nodes.iter().map(|(n, _)| n.clone()).collect();
        for v in &copied {
            if v == x {
                continue;
            }
            let mut noise = format!("U_{v}");
            while taken.contains(&noise) {
                noise.push('_');
            }
            nodes.push((noise.clone(), NodeKind::Exogenous));
            edges.push((noise.clone(), v.clone()));
            edges.push((noise, copy_name(v)));
        }
    }

    let intervention = copy_name(x);
    let outcome = copy_name(y);
    let graph = CausalGraph::new(nodes, edges, Some((intervention.clone(), outcome.clone())))?;

    Ok(TwinNetwork {
        graph,
        factual_of,
        intervention,
        outcome,
    })
}
