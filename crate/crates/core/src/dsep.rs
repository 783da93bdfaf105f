//! D-separation queries over a [`CausalGraph`].
//!
//! Two implementations with one contract: a path from x to y is active
//! given z when every collider on it is in z or has a descendant in z, and
//! every other node on it is outside z.
//!
//! [`d_separated`] runs a linear-time reachability traversal over
//! (node, direction) states; [`d_separated_oracle`] enumerates all simple
//! undirected paths and applies the blocking rule per path. The oracle is
//! exponential and only accepts small graphs; it exists to cross-validate
//! the fast engine.

use thiserror::Error;

use crate::graph::{CausalGraph, GraphError, NodeSet};
use crate::util::NodeMask;

/// Largest graph the path-enumeration oracle accepts. Covers the twin
/// networks of all reference graphs while keeping enumeration tractable.
pub const ORACLE_MAX_NODES: usize = 25;

#[derive(Debug, Error)]
pub enum DsepError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("query sets overlap on `{name}`")]
    Overlap { name: String },
    #[error("graph has {nodes} nodes; the path-enumeration oracle accepts at most {max}")]
    TooLarge { nodes: usize, max: usize },
}

/// A d-separation question: are x and y separated given z?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DsepQuery {
    pub x: NodeSet,
    pub y: NodeSet,
    pub z: NodeSet,
}

impl DsepQuery {
    /// Build a query, enforcing pairwise disjointness.
    pub fn new(x: NodeSet, y: NodeSet, z: NodeSet) -> Result<Self, DsepError> {
        for (a, b) in [(&x, &y), (&x, &z), (&y, &z)] {
            if let Some(shared) = a.iter().find(|n| b.contains(n)) {
                return Err(DsepError::Overlap {
                    name: shared.to_string(),
                });
            }
        }
        Ok(DsepQuery { x, y, z })
    }

    fn validate_on(&self, g: &CausalGraph) -> Result<(), DsepError> {
        for set in [&self.x, &self.y, &self.z] {
            g.validate_set(set)?;
        }
        Ok(())
    }
}

/// Nodes that are in z or have a descendant in z.
fn collider_openers(g: &CausalGraph, z: &NodeMask) -> NodeMask {
    let mut open = NodeMask::new(g.len());
    for v in 0..g.len() as u32 {
        if g.descendants_mask(v).intersects(z) {
            open.set(v);
        }
    }
    open
}

/// True iff every path from `q.x` to `q.y` is blocked by `q.z`.
pub fn d_separated(g: &CausalGraph, q: &DsepQuery) -> Result<bool, DsepError> {
    q.validate_on(g)?;
    let z = g.mask_of(&q.z)?;
    let y = g.mask_of(&q.y)?;
    let openers = collider_openers(g, &z);

    // Reachability over (node, direction) states. `Up` means the trail
    // arrived from a child (or started here), `Down` from a parent.
    let n = g.len();
    let mut seen_up = NodeMask::new(n);
    let mut seen_down = NodeMask::new(n);
    let mut stack: Vec<(u32, bool)> = Vec::new(); // (node, arrived_up)
    for id in g.ids_of(&q.x)? {
        stack.push((id, true));
    }
    while let Some((v, up)) = stack.pop() {
        let seen = if up { &mut seen_up } else { &mut seen_down };
        if seen.contains(v) {
            continue;
        }
        seen.set(v);
        if y.contains(v) {
            return Ok(false);
        }
        let in_z = z.contains(v);
        if up {
            if !in_z {
                for &p in g.parents_ids(v) {
                    stack.push((p, true));
                }
                for &c in g.children_ids(v) {
                    stack.push((c, false));
                }
            }
        } else {
            if !in_z {
                for &c in g.children_ids(v) {
                    stack.push((c, false));
                }
            }
            if openers.contains(v) {
                // v is an active collider: the trail may turn upward.
                for &p in g.parents_ids(v) {
                    stack.push((p, true));
                }
            }
        }
    }
    Ok(true)
}

/// Same contract as [`d_separated`], by exhaustive enumeration of simple
/// undirected paths. Rejects graphs larger than [`ORACLE_MAX_NODES`].
pub fn d_separated_oracle(g: &CausalGraph, q: &DsepQuery) -> Result<bool, DsepError> {
    Ok(find_active_path(g, q, true)?.is_none())
}

/// One active path witnessing d-connection, as node names from a member of
/// x to a member of y, or `None` when separated. Same size limit as the
/// oracle.
pub fn active_path(g: &CausalGraph, q: &DsepQuery) -> Result<Option<Vec<String>>, DsepError> {
    let path = find_active_path(g, q, true)?;
    Ok(path.map(|ids| ids.into_iter().map(|v| g.name_of(v).to_string()).collect()))
}

fn find_active_path(
    g: &CausalGraph,
    q: &DsepQuery,
    enforce_limit: bool,
) -> Result<Option<Vec<u32>>, DsepError> {
    q.validate_on(g)?;
    if enforce_limit && g.len() > ORACLE_MAX_NODES {
        return Err(DsepError::TooLarge {
            nodes: g.len(),
            max: ORACLE_MAX_NODES,
        });
    }
    let z = g.mask_of(&q.z)?;
    let y = g.mask_of(&q.y)?;
    let openers = collider_openers(g, &z);

    // DFS over simple paths; prune as soon as an interior node is blocked.
    // An interior node u between prior p and next w is a collider iff both
    // edges point into u.
    fn has_edge(g: &CausalGraph, a: u32, b: u32) -> bool {
        g.children_ids(a).binary_search(&b).is_ok()
    }

    fn dfs(
        g: &CausalGraph,
        path: &mut Vec<u32>,
        on_path: &mut NodeMask,
        z: &NodeMask,
        openers: &NodeMask,
        y: &NodeMask,
    ) -> Option<Vec<u32>> {
        let u = *path.last().unwrap();
        let mut neighbors: Vec<u32> = g
            .parents_ids(u)
            .iter()
            .chain(g.children_ids(u))
            .copied()
            .collect();
        neighbors.sort_unstable();
        neighbors.dedup();
        for w in neighbors {
            if on_path.contains(w) {
                continue;
            }
            // With w chosen, u's role on the path is fixed; check u now
            // unless it is the starting endpoint.
            if path.len() >= 2 {
                let p = path[path.len() - 2];
                let collider = has_edge(g, p, u) && has_edge(g, w, u);
                let u_active = if collider {
                    openers.contains(u)
                } else {
                    !z.contains(u)
                };
                if !u_active {
                    continue;
                }
            }
            if y.contains(w) {
                let mut found = path.clone();
                found.push(w);
                return Some(found);
            }
            path.push(w);
            on_path.set(w);
            if let Some(found) = dfs(g, path, on_path, z, openers, y) {
                return Some(found);
            }
            path.pop();
            on_path.unset(w);
        }
        None
    }

    for start in g.ids_of(&q.x)? {
        let mut path = vec![start];
        let mut on_path = NodeMask::new(g.len());
        on_path.set(start);
        if let Some(found) = dfs(g, &mut path, &mut on_path, &z, &openers, &y) {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Render a path with edge orientations, e.g. `S <- X -> Y`.
pub fn render_path(g: &CausalGraph, path: &[String]) -> String {
    let mut out = String::new();
    for (i, name) in path.iter().enumerate() {
        if i > 0 {
            let prev = &path[i - 1];
            let arrow = if g.has_edge(prev, name) { " -> " } else { " <- " };
            out.push_str(arrow);
        }
        out.push_str(name);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_twin;
    use crate::fixtures;
    use crate::graph::parse_graph;

    fn q(x: &str, y: &str, z: &[&str]) -> DsepQuery {
        DsepQuery::new(
            NodeSet::singleton(x),
            NodeSet::singleton(y),
            NodeSet::from_names(z.iter().copied()),
        )
        .unwrap()
    }

    #[test]
    fn chain_blocking() {
        let g = parse_graph("node A endo; node B endo; node C endo; edge A->B; edge B->C").unwrap();
        assert!(d_separated(&g, &q("A", "C", &["B"])).unwrap());
        assert!(!d_separated(&g, &q("A", "C", &[])).unwrap());
    }

    #[test]
    fn collider_rule() {
        let g = parse_graph("node A endo; node B endo; node C endo; edge A->B; edge C->B").unwrap();
        assert!(d_separated(&g, &q("A", "C", &[])).unwrap());
        assert!(!d_separated(&g, &q("A", "C", &["B"])).unwrap());
        // conditioning on a descendant of the collider also opens it
        let g2 = parse_graph(
            "node A endo; node B endo; node C endo; node D endo; edge A->B; edge C->B; edge B->D",
        )
        .unwrap();
        assert!(!d_separated(&g2, &q("A", "C", &["D"])).unwrap());
    }

    #[test]
    fn oracle_agrees_on_collider() {
        let g = parse_graph("node A endo; node B endo; node C endo; edge A->B; edge C->B").unwrap();
        for z in [vec![], vec!["B"]] {
            let query = q("A", "C", &z);
            assert_eq!(
                d_separated(&g, &query).unwrap(),
                d_separated_oracle(&g, &query).unwrap()
            );
        }
    }

    #[test]
    fn twin_with_selection_on_treatment_is_clean() {
        let t = build_twin(&fixtures::selection_on_treatment(), "X", "Y").unwrap();
        assert!(d_separated(t.graph(), &q("S", "Y*", &[])).unwrap());
        assert!(d_separated_oracle(t.graph(), &q("S", "Y*", &[])).unwrap());
    }

    #[test]
    fn twin_with_confounded_selection_is_biased() {
        let t = build_twin(&fixtures::confounded_selection_on_treatment(), "X", "Y").unwrap();
        assert!(!d_separated(t.graph(), &q("S", "Y*", &[])).unwrap());
        // the witnessing trail runs through the confounder's shared noise
        let path = active_path(t.graph(), &q("S", "Y*", &[])).unwrap().unwrap();
        assert!(path.contains(&"U_W".to_string()));
    }

    #[test]
    fn two_admissible_sets_twin_queries() {
        let t = build_twin(&fixtures::two_admissible_sets(), "X", "Y").unwrap();
        assert!(!d_separated(t.graph(), &q("S", "Y*", &[])).unwrap());
        assert!(d_separated(t.graph(), &q("S", "Y*", &["W1", "W3"])).unwrap());
        assert!(d_separated(t.graph(), &q("S", "Y*", &["W1", "W4"])).unwrap());
        assert!(!d_separated(t.graph(), &q("S", "Y*", &["W1"])).unwrap());
        assert!(!d_separated(t.graph(), &q("S", "Y*", &["W3"])).unwrap());
    }

    #[test]
    fn query_validation() {
        let g = parse_graph("node A endo; node B endo; edge A->B").unwrap();
        assert!(matches!(
            DsepQuery::new(
                NodeSet::singleton("A"),
                NodeSet::singleton("A"),
                NodeSet::new()
            ),
            Err(DsepError::Overlap { .. })
        ));
        assert!(d_separated(&g, &q("A", "Q", &[])).is_err());
    }

    #[test]
    fn oracle_size_limit() {
        let mut text = String::new();
        for i in 0..26 {
            text.push_str(&format!("node N{i} endo\n"));
        }
        let g = parse_graph(&text).unwrap();
        let query = q("N0", "N1", &[]);
        assert!(matches!(
            d_separated_oracle(&g, &query),
            Err(DsepError::TooLarge { .. })
        ));
        assert!(d_separated(&g, &query).unwrap());
    }

    #[test]
    fn symmetry_on_fixtures() {
        for (_, g) in fixtures::all_graphs() {
            let names: Vec<&str> = g.node_names().collect();
            let (a, b) = (names[0], names[names.len() - 1]);
            if a == b {
                continue;
            }
            let fwd = d_separated(&g, &q(a, b, &[])).unwrap();
            let bwd = d_separated(&g, &q(b, a, &[])).unwrap();
            assert_eq!(fwd, bwd);
        }
    }
}
