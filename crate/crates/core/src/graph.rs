//! Selection-augmented causal DAGs and the line-oriented text format that
//! encodes them.
//!
//! A graph file contains `node`, `edge` and `target` statements separated by
//! newlines or `;`, with `#` starting a comment:
//!
//! ```text
//! # a three-node trial with selection on the treatment
//! node X endo; node Y endo; node S sel
//! edge X -> Y
//! edge X -> S
//! target X -> Y
//! ```
//!
//! Node kinds are `endo` (endogenous), `exo` (exogenous noise, no parents)
//! and `sel` (the selection indicator, a pure sink; at most one per graph).
//! `*` is reserved for counterfactual copies generated internally, so user
//! files may not use it in names.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::NodeMask;

/// Role of a node in the selection-augmented model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Endogenous,
    Exogenous,
    Selection,
}

impl NodeKind {
    fn keyword(self) -> &'static str {
        match self {
            NodeKind::Endogenous => "endo",
            NodeKind::Exogenous => "exo",
            NodeKind::Selection => "sel",
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("no nodes declared")]
    NoNodes,
    #[error("duplicate node `{name}`")]
    DuplicateNode { name: String },
    #[error("unknown node `{name}`")]
    UnknownNode { name: String },
    #[error("self edge on `{name}`")]
    SelfEdge { name: String },
    #[error("cycle detected through node `{name}`")]
    Cycle { name: String },
    #[error("multiple selection nodes (`{first}`, `{second}`)")]
    MultipleSelection { first: String, second: String },
    #[error("exogenous node `{name}` has a parent")]
    ExogenousWithParent { name: String },
    #[error("selection node `{name}` has a child")]
    SelectionWithChild { name: String },
    #[error("node name `{name}` uses the reserved character `*`")]
    ReservedName { name: String },
    #[error(
        "endogenous node `{name}` has no exogenous parent \
         (declare one, or omit all exogenous nodes to use implicit mode)"
    )]
    MissingExogenousParent { name: String },
    #[error("line {line}: `target` declared more than once")]
    DuplicateTarget { line: usize },
}

/// Sorted, deduplicated collection of node names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<String>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(Vec::new())
    }

    pub fn singleton(name: impl Into<String>) -> Self {
        NodeSet(vec![name.into()])
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = names.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        NodeSet(v)
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        let name = name.into();
        if let Err(pos) = self.0.binary_search(&name) {
            self.0.insert(pos, name);
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.binary_search_by(|n| n.as_str().cmp(name)).is_ok()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.iter().all(|n| other.contains(n))
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet::from_names(self.0.iter().chain(other.0.iter()).cloned())
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.iter().filter(|n| !other.contains(n)).cloned().collect())
    }

    pub fn intersects(&self, other: &NodeSet) -> bool {
        self.0.iter().any(|n| other.contains(n))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

impl FromIterator<String> for NodeSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        NodeSet::from_names(iter)
    }
}

/// Immutable DAG over kinded nodes. Construction validates acyclicity and
/// the selection/exogenous constraints; descendant closures are built
/// eagerly so d-separation queries do no writes.
#[derive(Debug, Clone)]
pub struct CausalGraph {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    index: HashMap<String, u32>,
    parents: Vec<Vec<u32>>,
    children: Vec<Vec<u32>>,
    topo: Vec<u32>,
    /// descendants[v] includes v itself.
    descendants: Vec<NodeMask>,
    target: Option<(u32, u32)>,
}

impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        self.node_map() == other.node_map()
            && self.edge_set() == other.edge_set()
            && self.target_names() == other.target_names()
    }
}

impl Eq for CausalGraph {}

impl CausalGraph {
    /// Build a graph from parts. Node order is irrelevant to semantics but
    /// is preserved for indexing. Duplicate edges are collapsed.
    pub fn new(
        nodes: Vec<(String, NodeKind)>,
        edges: Vec<(String, String)>,
        target: Option<(String, String)>,
    ) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::NoNodes);
        }
        let mut names: Vec<String> = Vec::with_capacity(nodes.len());
        let mut kinds = Vec::with_capacity(nodes.len());
        let mut index = HashMap::new();
        let mut selection: Option<u32> = None;
        for (name, kind) in nodes {
            if index.contains_key(&name) {
                return Err(GraphError::DuplicateNode { name });
            }
            let id = names.len() as u32;
            if kind == NodeKind::Selection {
                if let Some(first) = selection {
                    return Err(GraphError::MultipleSelection {
                        first: names[first as usize].clone(),
                        second: name,
                    });
                }
                selection = Some(id);
            }
            index.insert(name.clone(), id);
            names.push(name);
            kinds.push(kind);
        }

        let n = names.len();
        let lookup = |name: &str| -> Result<u32, GraphError> {
            index.get(name).copied().ok_or_else(|| GraphError::UnknownNode {
                name: name.to_string(),
            })
        };

        let mut edge_set = BTreeSet::new();
        for (a, b) in &edges {
            let (ai, bi) = (lookup(a)?, lookup(b)?);
            if ai == bi {
                return Err(GraphError::SelfEdge { name: a.clone() });
            }
            edge_set.insert((ai, bi));
        }

        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &edge_set {
            children[a as usize].push(b);
            parents[b as usize].push(a);
        }
        for v in 0..n {
            parents[v].sort_unstable();
            children[v].sort_unstable();
        }

        for v in 0..n {
            match kinds[v] {
                NodeKind::Exogenous if !parents[v].is_empty() => {
                    return Err(GraphError::ExogenousWithParent {
                        name: names[v].clone(),
                    })
                }
                NodeKind::Selection if !children[v].is_empty() => {
                    return Err(GraphError::SelectionWithChild {
                        name: names[v].clone(),
                    })
                }
                _ => {}
            }
        }

        let topo = toposort(&parents, &children).map_err(|v| GraphError::Cycle {
            name: names[v as usize].clone(),
        })?;

        // Inclusive descendant closure, children before parents.
        let mut descendants = vec![NodeMask::new(n); n];
        for &v in topo.iter().rev() {
            let mut mask = NodeMask::new(n);
            mask.set(v);
            for &c in &children[v as usize] {
                let child_mask = descendants[c as usize].clone();
                mask.union_with(&child_mask);
            }
            descendants[v as usize] = mask;
        }

        let target = match target {
            Some((x, y)) => Some((lookup(&x)?, lookup(&y)?)),
            None => None,
        };

        Ok(CausalGraph {
            names,
            kinds,
            index,
            parents,
            children,
            topo,
            descendants,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn kind_of(&self, name: &str) -> Option<NodeKind> {
        self.index.get(name).map(|&i| self.kinds[i as usize])
    }

    pub(crate) fn node_id(&self, name: &str) -> Result<u32, GraphError> {
        self.index.get(name).copied().ok_or_else(|| GraphError::UnknownNode {
            name: name.to_string(),
        })
    }

    pub(crate) fn name_of(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub(crate) fn parents_ids(&self, id: u32) -> &[u32] {
        &self.parents[id as usize]
    }

    pub(crate) fn children_ids(&self, id: u32) -> &[u32] {
        &self.children[id as usize]
    }

    pub(crate) fn descendants_mask(&self, id: u32) -> &NodeMask {
        &self.descendants[id as usize]
    }

    pub fn parents_of(&self, name: &str) -> Result<NodeSet, GraphError> {
        let id = self.node_id(name)?;
        Ok(NodeSet::from_names(
            self.parents[id as usize].iter().map(|&p| self.names[p as usize].clone()),
        ))
    }

    pub fn children_of(&self, name: &str) -> Result<NodeSet, GraphError> {
        let id = self.node_id(name)?;
        Ok(NodeSet::from_names(
            self.children[id as usize].iter().map(|&c| self.names[c as usize].clone()),
        ))
    }

    /// Node names in one valid topological order (parents before children).
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo.iter().map(|&v| self.names[v as usize].as_str()).collect()
    }

    pub fn selection_node(&self) -> Option<&str> {
        self.kinds
            .iter()
            .position(|&k| k == NodeKind::Selection)
            .map(|i| self.names[i].as_str())
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> NodeSet {
        NodeSet::from_names(
            self.names
                .iter()
                .zip(&self.kinds)
                .filter(|(_, &k)| k == kind)
                .map(|(n, _)| n.clone()),
        )
    }

    pub fn endogenous_nodes(&self) -> NodeSet {
        self.nodes_of_kind(NodeKind::Endogenous)
    }

    pub fn exogenous_nodes(&self) -> NodeSet {
        self.nodes_of_kind(NodeKind::Exogenous)
    }

    /// True when the file declared no exogenous nodes at all; the twin
    /// builder then synthesizes one noise parent per copied node.
    pub fn is_implicit_exogenous(&self) -> bool {
        !self.kinds.contains(&NodeKind::Exogenous)
    }

    /// Declared intervention/outcome pair, if any.
    pub fn target_names(&self) -> Option<(&str, &str)> {
        self.target
            .map(|(x, y)| (self.names[x as usize].as_str(), self.names[y as usize].as_str()))
    }

    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (v, ch) in self.children.iter().enumerate() {
            for &c in ch {
                out.push((self.names[v].as_str(), self.names[c as usize].as_str()));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        match (self.index.get(parent), self.index.get(child)) {
            (Some(&p), Some(&c)) => self.children[p as usize].binary_search(&c).is_ok(),
            _ => false,
        }
    }

    fn node_map(&self) -> BTreeMap<&str, NodeKind> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.kinds.iter().copied())
            .collect()
    }

    fn edge_set(&self) -> BTreeSet<(&str, &str)> {
        self.edges().into_iter().collect()
    }

    /// Validate that every member of `set` names a node of this graph.
    pub fn validate_set(&self, set: &NodeSet) -> Result<(), GraphError> {
        for name in set.iter() {
            self.node_id(name)?;
        }
        Ok(())
    }

    pub(crate) fn ids_of(&self, set: &NodeSet) -> Result<Vec<u32>, GraphError> {
        set.iter().map(|n| self.node_id(n)).collect()
    }

    pub(crate) fn mask_of(&self, set: &NodeSet) -> Result<NodeMask, GraphError> {
        let mut mask = NodeMask::new(self.len());
        for id in self.ids_of(set)? {
            mask.set(id);
        }
        Ok(mask)
    }

    /// Canonical text rendering: nodes sorted by name, then edges, then the
    /// target line. `parse_graph(render(g))` reproduces `g`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut node_lines: Vec<String> = self
            .names
            .iter()
            .zip(&self.kinds)
            .map(|(n, k)| format!("node {} {}", n, k.keyword()))
            .collect();
        node_lines.sort();
        let mut edge_lines: Vec<String> = self
            .edges()
            .into_iter()
            .map(|(a, b)| format!("edge {a} -> {b}"))
            .collect();
        edge_lines.sort();
        for line in node_lines.into_iter().chain(edge_lines) {
            out.push_str(&line);
            out.push('\n');
        }
        if let Some((x, y)) = self.target_names() {
            out.push_str(&format!("target {x} -> {y}\n"));
        }
        out
    }
}

fn toposort(parents: &[Vec<u32>], children: &[Vec<u32>]) -> Result<Vec<u32>, u32> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<u32> = (0..n as u32).filter(|&v| indeg[v as usize] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in &children[v as usize] {
            indeg[c as usize] -= 1;
            if indeg[c as usize] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        // Some node still has positive in-degree; it lies on a cycle or
        // downstream of one. Report one with positive in-degree.
        let v = (0..n as u32).find(|&v| indeg[v as usize] > 0).unwrap();
        Err(v)
    }
}

/// Returns `v` plus every node with a directed path into a member of `v`.
pub fn ancestors(g: &CausalGraph, v: &NodeSet) -> Result<NodeSet, GraphError> {
    let mut seen = NodeMask::new(g.len());
    let mut stack: Vec<u32> = Vec::new();
    for name in v.iter() {
        let id = g.node_id(name)?;
        if !seen.contains(id) {
            seen.set(id);
            stack.push(id);
        }
    }
    let mut out: Vec<String> = v.iter().map(String::from).collect();
    while let Some(id) = stack.pop() {
        for &p in g.parents_ids(id) {
            if !seen.contains(p) {
                seen.set(p);
                out.push(g.name_of(p).to_string());
                stack.push(p);
            }
        }
    }
    Ok(NodeSet::from_names(out))
}

/// Node-name grammar: ASCII identifiers. `*` is reserved for counterfactual
/// copies, so the parser rejects it even though internal graphs may use it.
fn valid_user_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse the line-oriented graph format. Statements are separated by
/// newlines or `;`; `#` comments run to end of line. When the file declares
/// no exogenous nodes the graph is left in implicit-exogenous mode and noise
/// parents are synthesized by the twin builder.
pub fn parse_graph(text: &str) -> Result<CausalGraph, GraphError> {
    let mut nodes: Vec<(String, NodeKind)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut target: Option<(String, String)> = None;
    let mut target_line = 0usize;

    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut cursor = 0usize;
        for stmt in line.split(';') {
            let stmt_start = cursor;
            cursor += stmt.len() + 1;
            let trimmed = stmt.trim();
            if trimmed.is_empty() {
                continue;
            }
            let col = stmt_start + stmt.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
            let syntax = |msg: String| GraphError::Syntax {
                line: line_no,
                col,
                msg,
            };

            let mut words = trimmed.split_whitespace();
            let keyword = words.next().unwrap();
            match keyword {
                "node" => {
                    let name = words
                        .next()
                        .ok_or_else(|| syntax("expected `node <name> <kind>`".into()))?;
                    let kind_word = words
                        .next()
                        .ok_or_else(|| syntax(format!("missing kind for node `{name}`")))?;
                    if words.next().is_some() {
                        return Err(syntax(format!("trailing tokens after node `{name}`")));
                    }
                    if name.contains('*') {
                        return Err(GraphError::ReservedName {
                            name: name.to_string(),
                        });
                    }
                    if !valid_user_name(name) {
                        return Err(syntax(format!("invalid node name `{name}`")));
                    }
                    let kind = match kind_word {
                        "endo" => NodeKind::Endogenous,
                        "exo" => NodeKind::Exogenous,
                        "sel" => NodeKind::Selection,
                        other => {
                            return Err(syntax(format!(
                                "unknown node kind `{other}` (expected endo, exo or sel)"
                            )))
                        }
                    };
                    nodes.push((name.to_string(), kind));
                }
                "edge" | "target" => {
                    let rest = trimmed[keyword.len()..].trim();
                    let (lhs, rhs) = rest
                        .split_once("->")
                        .ok_or_else(|| syntax(format!("expected `{keyword} <a> -> <b>`")))?;
                    let (a, b) = (lhs.trim(), rhs.trim());
                    if a.contains('*') || b.contains('*') {
                        let name = if a.contains('*') { a } else { b };
                        return Err(GraphError::ReservedName {
                            name: name.to_string(),
                        });
                    }
                    if !valid_user_name(a) || !valid_user_name(b) {
                        let bad = if valid_user_name(a) { b } else { a };
                        return Err(syntax(format!("invalid node name `{bad}`")));
                    }
                    if keyword == "edge" {
                        edges.push((a.to_string(), b.to_string()));
                    } else {
                        if target.is_some() {
                            return Err(GraphError::DuplicateTarget { line: line_no });
                        }
                        target = Some((a.to_string(), b.to_string()));
                        target_line = line_no;
                    }
                }
                other => {
                    return Err(syntax(format!(
                        "unknown statement `{other}` (expected node, edge or target)"
                    )))
                }
            }
        }
    }

    let _ = target_line;
    let g = CausalGraph::new(nodes, edges, target)?;

    // Explicit-exogenous files must give every endogenous node a noise
    // parent; twin construction is only correct when copies can share one.
    if !g.is_implicit_exogenous() {
        for name in g.endogenous_nodes().iter() {
            let has_exo_parent = g
                .parents_of(name)
                .unwrap()
                .iter()
                .any(|p| g.kind_of(p) == Some(NodeKind::Exogenous));
            if !has_exo_parent {
                return Err(GraphError::MissingExogenousParent {
                    name: name.to_string(),
                });
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CausalGraph {
        parse_graph("node A endo; node B endo; node C endo; edge A->B; edge B->C").unwrap()
    }

    #[test]
    fn parses_three_node_selection_graph() {
        let g = parse_graph("node X endo; node Y endo; node S sel; edge X->Y; edge X->S; edge Y->S")
            .unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.selection_node(), Some("S"));
        assert!(g.is_implicit_exogenous());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_graph(""), Err(GraphError::NoNodes)));
        assert!(matches!(parse_graph("# only a comment\n"), Err(GraphError::NoNodes)));
    }

    #[test]
    fn unknown_edge_endpoint() {
        let err = parse_graph("node A endo; edge A -> B").unwrap_err();
        assert!(matches!(err, GraphError::UnknownNode { name } if name == "B"));
    }

    #[test]
    fn cycle_is_rejected() {
        let err =
            parse_graph("node A endo; node B endo; edge A->B; edge B->A").unwrap_err();
        assert!(matches!(err, GraphError::Cycle { .. }));
    }

    #[test]
    fn multiple_selection_nodes_rejected() {
        let err = parse_graph("node S1 sel; node S2 sel").unwrap_err();
        assert!(matches!(err, GraphError::MultipleSelection { .. }));
    }

    #[test]
    fn exogenous_with_parent_rejected() {
        let err = parse_graph("node A endo; node U exo; edge A -> U").unwrap_err();
        assert!(matches!(err, GraphError::ExogenousWithParent { name } if name == "U"));
    }

    #[test]
    fn selection_sink_enforced() {
        let err = parse_graph("node S sel; node Y endo; edge S -> Y").unwrap_err();
        assert!(matches!(err, GraphError::SelectionWithChild { name } if name == "S"));
    }

    #[test]
    fn star_names_rejected() {
        let err = parse_graph("node X* endo").unwrap_err();
        assert!(matches!(err, GraphError::ReservedName { .. }));
        let err = parse_graph("node X endo; node Y endo; edge X -> Y*").unwrap_err();
        assert!(matches!(err, GraphError::ReservedName { .. }));
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let err = parse_graph("node A endo\n  frob A -> B").unwrap_err();
        match err {
            GraphError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 3);
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn partial_exogenous_declaration_rejected() {
        let err = parse_graph(
            "node X endo; node Y endo; node U_Y exo; edge X->Y; edge U_Y->Y",
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::MissingExogenousParent { name } if name == "X"));
    }

    #[test]
    fn ancestors_on_chain() {
        let g = chain();
        let anc = ancestors(&g, &NodeSet::singleton("C")).unwrap();
        assert_eq!(anc, NodeSet::from_names(["A", "B", "C"]));
        assert_eq!(ancestors(&g, &NodeSet::new()).unwrap(), NodeSet::new());
    }

    #[test]
    fn ancestors_of_selection_in_three_node_graph() {
        let g = parse_graph("node X endo; node Y endo; node S sel; edge X->Y; edge X->S; edge Y->S")
            .unwrap();
        let anc = ancestors(&g, &NodeSet::singleton("S")).unwrap();
        assert_eq!(anc, NodeSet::from_names(["S", "X", "Y"]));
    }

    #[test]
    fn ancestors_unknown_node() {
        let g = chain();
        assert!(ancestors(&g, &NodeSet::singleton("Q")).is_err());
    }

    #[test]
    fn render_round_trips() {
        let g = parse_graph(
            "node X endo; node Y endo; node S sel\nedge X->Y; edge X->S\ntarget X -> Y",
        )
        .unwrap();
        let again = parse_graph(&g.render()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn node_order_is_irrelevant() {
        let a = parse_graph("node X endo; node Y endo; edge X->Y").unwrap();
        let b = parse_graph("node Y endo; node X endo; edge X->Y").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = parse_graph("node A endo; node B endo; edge A->B; edge A->B").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn topological_order_is_valid() {
        let g = chain();
        let order = g.topological_order();
        let pos = |n: &str| order.iter().position(|&m| m == n).unwrap();
        assert!(pos("A") < pos("B"));
        assert!(pos("B") < pos("C"));
    }
}
