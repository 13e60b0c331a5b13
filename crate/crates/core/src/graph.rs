//! Causal graph representation: a DAG for the proposed search, a pattern
//! (possibly containing unoriented edges) for the baseline.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    /// Every edge oriented, no directed cycles.
    Dag,
    /// Unoriented edges permitted (baseline output).
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
    pub oriented: bool,
}

/// Graph over condition ids. Node indices are positions in the node list;
/// cycle checks consider oriented edges only.
#[derive(Debug, Clone)]
pub struct CausalGraph {
    mode: GraphMode,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
}

impl CausalGraph {
    pub fn new(mode: GraphMode, nodes: Vec<String>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate node `{n}`")));
            }
        }
        Ok(CausalGraph {
            mode,
            nodes,
            index,
            edges: Vec::new(),
        })
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownCondition(id.to_string()))
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Oriented edge lookup.
    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.edges
            .iter()
            .any(|e| e.oriented && e.parent == parent && e.child == child)
    }

    pub fn has_unoriented(&self, a: usize, b: usize) -> bool {
        self.edges.iter().any(|e| {
            !e.oriented && ((e.parent, e.child) == (a, b) || (e.parent, e.child) == (b, a))
        })
    }

    /// Any edge (either orientation or unoriented) between the two nodes.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.parent, e.child) == (a, b) || (e.parent, e.child) == (b, a))
    }

    /// Parents through oriented edges, sorted by node index.
    pub fn parents_of(&self, v: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.oriented && e.child == v)
            .map(|e| e.parent)
            .collect();
        p.sort_unstable();
        p
    }

    pub fn children_of(&self, v: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.oriented && e.parent == v)
            .map(|e| e.child)
            .collect();
        c.sort_unstable();
        c
    }

    /// True when a directed path (length >= 1) of oriented edges leads from
    /// `from` to `to`.
    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                if e.oriented && e.parent == v {
                    if e.child == to {
                        return true;
                    }
                    if !seen[e.child] {
                        seen[e.child] = true;
                        stack.push(e.child);
                    }
                }
            }
        }
        false
    }

    /// Would adding parent -> child close a directed cycle?
    pub fn would_cycle(&self, parent: usize, child: usize) -> bool {
        parent == child || self.has_directed_path(child, parent)
    }

    /// Adds an oriented edge. In DAG mode (and for oriented edges generally)
    /// cycle creation is rejected; duplicate edges are rejected in any mode.
    pub fn add_edge(&mut self, parent: usize, child: usize) -> Result<()> {
        self.check_bounds(parent)?;
        self.check_bounds(child)?;
        if self.adjacent(parent, child) {
            return Err(Error::InvalidArgument(format!(
                "edge between `{}` and `{}` already present",
                self.nodes[parent], self.nodes[child]
            )));
        }
        if self.would_cycle(parent, child) {
            return Err(Error::Cycle(
                self.nodes[parent].clone(),
                self.nodes[child].clone(),
            ));
        }
        self.edges.push(Edge {
            parent,
            child,
            oriented: true,
        });
        Ok(())
    }

    pub fn add_edge_ids(&mut self, parent: &str, child: &str) -> Result<()> {
        let p = self.node_index(parent)?;
        let c = self.node_index(child)?;
        self.add_edge(p, c)
    }

    /// Adds an unoriented edge (pattern mode only). Stored with lexicographic
    /// endpoint order so reports do not depend on node numbering.
    pub fn add_unoriented(&mut self, a: usize, b: usize) -> Result<()> {
        if self.mode != GraphMode::Pattern {
            return Err(Error::InvalidArgument(
                "unoriented edges require pattern mode".into(),
            ));
        }
        self.check_bounds(a)?;
        self.check_bounds(b)?;
        if a == b || self.adjacent(a, b) {
            return Err(Error::InvalidArgument("edge already present".into()));
        }
        let (p, c) = if self.nodes[a] <= self.nodes[b] {
            (a, b)
        } else {
            (b, a)
        };
        self.edges.push(Edge {
            parent: p,
            child: c,
            oriented: false,
        });
        Ok(())
    }

    /// Removes the oriented edge parent -> child.
    pub fn remove_edge(&mut self, parent: usize, child: usize) -> Result<()> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.oriented && e.parent == parent && e.child == child)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "edge `{}` -> `{}` not in graph",
                    self.nodes[parent], self.nodes[child]
                ))
            })?;
        self.edges.remove(pos);
        Ok(())
    }

    /// Marks an existing oriented edge as unoriented and switches the graph
    /// to pattern mode. Endpoints are canonicalized lexicographically.
    pub fn unorient_edge(&mut self, parent: usize, child: usize) -> Result<()> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.oriented && e.parent == parent && e.child == child)
            .ok_or_else(|| Error::InvalidArgument("edge not in graph".into()))?;
        self.mode = GraphMode::Pattern;
        let (a, b) = (self.edges[pos].parent, self.edges[pos].child);
        let (p, c) = if self.nodes[a] <= self.nodes[b] {
            (a, b)
        } else {
            (b, a)
        };
        self.edges[pos] = Edge {
            parent: p,
            child: c,
            oriented: false,
        };
        Ok(())
    }

    pub fn set_mode(&mut self, mode: GraphMode) {
        self.mode = mode;
    }

    /// Edges as (parent id, child id, oriented), in insertion order.
    pub fn edge_ids(&self) -> Vec<(String, String, bool)> {
        self.edges
            .iter()
            .map(|e| {
                (
                    self.nodes[e.parent].clone(),
                    self.nodes[e.child].clone(),
                    e.oriented,
                )
            })
            .collect()
    }

    fn check_bounds(&self, v: usize) -> Result<()> {
        if v >= self.nodes.len() {
            return Err(Error::InvalidArgument(format!("node index {v} out of range")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn cycle_rejected() {
        let mut g = CausalGraph::new(GraphMode::Dag, nodes(3)).unwrap();
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        assert!(matches!(g.add_edge(2, 0), Err(Error::Cycle(_, _))));
        assert!(g.would_cycle(2, 0));
        assert!(!g.would_cycle(0, 2));
        assert!(matches!(g.add_edge(1, 1), Err(Error::Cycle(_, _))));
    }

    #[test]
    fn duplicate_and_reverse_rejected() {
        let mut g = CausalGraph::new(GraphMode::Dag, nodes(2)).unwrap();
        g.add_edge(0, 1).unwrap();
        assert!(g.add_edge(0, 1).is_err());
        assert!(g.add_edge(1, 0).is_err()); // 2-cycle
    }

    #[test]
    fn parents_sorted() {
        let mut g = CausalGraph::new(GraphMode::Dag, nodes(4)).unwrap();
        g.add_edge(2, 3).unwrap();
        g.add_edge(0, 3).unwrap();
        g.add_edge(1, 3).unwrap();
        assert_eq!(g.parents_of(3), vec![0, 1, 2]);
    }

    #[test]
    fn directed_paths() {
        let mut g = CausalGraph::new(GraphMode::Dag, nodes(4)).unwrap();
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        assert!(g.has_directed_path(0, 2));
        assert!(g.has_directed_path(0, 1));
        assert!(!g.has_directed_path(2, 0));
        assert!(!g.has_directed_path(0, 3));
    }

    #[test]
    fn unoriented_canonical() {
        let mut g = CausalGraph::new(GraphMode::Pattern, vec!["b".into(), "a".into()]).unwrap();
        g.add_unoriented(0, 1).unwrap(); // b -- a, canonicalized to (a, b)
        let ids = g.edge_ids();
        assert_eq!(ids[0], ("a".to_string(), "b".to_string(), false));
        assert!(g.has_unoriented(0, 1));
        assert!(g.has_unoriented(1, 0));
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn unorient_existing() {
        let mut g = CausalGraph::new(GraphMode::Dag, nodes(2)).unwrap();
        g.add_edge(1, 0).unwrap();
        g.unorient_edge(1, 0).unwrap();
        assert_eq!(g.mode(), GraphMode::Pattern);
        assert_eq!(g.edge_ids()[0], ("v0".to_string(), "v1".to_string(), false));
    }
}
