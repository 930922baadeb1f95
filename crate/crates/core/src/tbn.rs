//! Class-rooted tree over feature nodes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A tree node: the class root or a feature (by dataset column index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Class,
    Feature(usize),
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Node::Class => s.serialize_str("Y"),
            Node::Feature(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Id(usize),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Id(i) => Ok(Node::Feature(i)),
            Repr::Name(s) if s == "Y" => Ok(Node::Class),
            Repr::Name(s) => Err(serde::de::Error::custom(format!("unknown node {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node {0:?} already has {1} children (cap)")]
    CapacityExceeded(Node, usize),
    #[error("attaching below {0:?} would exceed the depth cap {1}")]
    DepthExceeded(Node, usize),
    #[error("feature {0} is already in the tree")]
    Duplicate(usize),
    #[error("unknown node {0:?}")]
    UnknownNode(Node),
    #[error("feature {child} is not a child of {parent:?}")]
    NotChildOf { child: usize, parent: Node },
    #[error("feature {0} has children")]
    NotLeaf(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tbn {
    max_depth: usize,
    nch: usize,
    parent: BTreeMap<usize, Node>,
    children: BTreeMap<Node, Vec<usize>>,
    depth: BTreeMap<usize, usize>,
}

impl Tbn {
    pub fn new(max_depth: usize, nch: usize) -> Self {
        let mut children = BTreeMap::new();
        children.insert(Node::Class, Vec::new());
        Self {
            max_depth,
            nch,
            parent: BTreeMap::new(),
            children,
            depth: BTreeMap::new(),
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn nch(&self) -> usize {
        self.nch
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn contains(&self, f: usize) -> bool {
        self.parent.contains_key(&f)
    }

    /// Feature ids in ascending order.
    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.parent.keys().copied()
    }

    pub fn parent(&self, f: usize) -> Option<Node> {
        self.parent.get(&f).copied()
    }

    /// Children in insertion order; empty for unknown nodes.
    pub fn children(&self, n: Node) -> &[usize] {
        self.children.get(&n).map_or(&[], Vec::as_slice)
    }

    pub fn depth(&self, n: Node) -> Option<usize> {
        match n {
            Node::Class => Some(0),
            Node::Feature(f) => self.depth.get(&f).copied(),
        }
    }

    pub fn has_node(&self, n: Node) -> bool {
        match n {
            Node::Class => true,
            Node::Feature(f) => self.contains(f),
        }
    }

    pub fn is_full(&self, n: Node) -> bool {
        self.children(n).len() >= self.nch
    }

    /// Feature ancestors of `f` from its parent upwards (class excluded).
    pub fn ancestors(&self, f: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.parent(f);
        while let Some(Node::Feature(p)) = cur {
            out.push(p);
            cur = self.parent(p);
        }
        out
    }

    /// Nodes along the path from `n` up to (not including) the class root.
    pub fn path_to_root(&self, n: Node) -> Vec<usize> {
        match n {
            Node::Class => Vec::new(),
            Node::Feature(f) => {
                let mut v = vec![f];
                v.extend(self.ancestors(f));
                v
            }
        }
    }

    /// Parent→child edges, parents in breadth-first order and children in
    /// list order.
    pub fn edges(&self) -> Vec<(Node, usize)> {
        let mut out = Vec::with_capacity(self.len());
        let mut queue = std::collections::VecDeque::from([Node::Class]);
        while let Some(n) = queue.pop_front() {
            for &c in self.children(n) {
                out.push((n, c));
                queue.push_back(Node::Feature(c));
            }
        }
        out
    }

    pub fn add_edge(&mut self, parent: Node, child: usize) -> Result<(), TreeError> {
        if self.contains(child) {
            return Err(TreeError::Duplicate(child));
        }
        let pd = self.depth(parent).ok_or(TreeError::UnknownNode(parent))?;
        if self.is_full(parent) {
            return Err(TreeError::CapacityExceeded(parent, self.nch));
        }
        if pd + 1 > self.max_depth {
            return Err(TreeError::DepthExceeded(parent, self.max_depth));
        }
        self.children.entry(parent).or_default().push(child);
        self.children.insert(Node::Feature(child), Vec::new());
        self.parent.insert(child, parent);
        self.depth.insert(child, pd + 1);
        Ok(())
    }

    /// Exchanges `fi` with its parent `fj`: `fi` takes `fj`'s slot under the
    /// grandparent, `fj` becomes a child of `fi`, and `fj`'s other children
    /// move to `fi` (keeping their order, with `fj` where `fi` used to be).
    pub fn swap(&mut self, fi: usize, fj: usize) -> Result<(), TreeError> {
        let pj = Node::Feature(fj);
        if self.parent(fi) != Some(pj) {
            return Err(TreeError::NotChildOf {
                child: fi,
                parent: pj,
            });
        }
        if !self.children(Node::Feature(fi)).is_empty() {
            return Err(TreeError::NotLeaf(fi));
        }
        let grand = self.parent(fj).ok_or(TreeError::UnknownNode(pj))?;
        let dj = self.depth[&fj];

        let slot = self
            .children
            .get_mut(&grand)
            .and_then(|v| v.iter_mut().find(|c| **c == fj))
            .ok_or(TreeError::UnknownNode(pj))?;
        *slot = fi;

        let mut moved = self.children.insert(pj, Vec::new()).unwrap_or_default();
        for c in moved.iter_mut() {
            if *c == fi {
                *c = fj;
            }
        }
        for &c in &moved {
            self.parent.insert(c, Node::Feature(fi));
        }
        if moved.len() > self.nch {
            log::warn!(
                "swap gives feature {fi} {} children, above the cap of {}",
                moved.len(),
                self.nch
            );
        }
        self.children.insert(Node::Feature(fi), moved);
        self.parent.insert(fi, grand);
        self.depth.insert(fi, dj);
        self.depth.insert(fj, dj + 1);
        Ok(())
    }

    /// Removes a leaf.
    pub fn remove(&mut self, f: usize) -> Result<(), TreeError> {
        let p = self
            .parent(f)
            .ok_or(TreeError::UnknownNode(Node::Feature(f)))?;
        if !self.children(Node::Feature(f)).is_empty() {
            return Err(TreeError::NotLeaf(f));
        }
        if let Some(v) = self.children.get_mut(&p) {
            v.retain(|&c| c != f);
        }
        self.children.remove(&Node::Feature(f));
        self.parent.remove(&f);
        self.depth.remove(&f);
        Ok(())
    }

    /// Checks every structural invariant; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        for (&f, &p) in &self.parent {
            if !self.has_node(p) {
                return Err(format!("parent {p:?} of {f} not in tree"));
            }
            if !self.children(p).contains(&f) {
                return Err(format!("{f} missing from child list of {p:?}"));
            }
            let d = self.depth(Node::Feature(f)).ok_or(format!("{f} has no depth"))?;
            if d != self.depth(p).unwrap_or(usize::MAX).wrapping_add(1) {
                return Err(format!("depth of {f} is {d}, parent {p:?} inconsistent"));
            }
            if d > self.max_depth {
                return Err(format!("{f} at depth {d} exceeds cap {}", self.max_depth));
            }
            if self.ancestors(f).len() + 1 != d {
                return Err(format!("{f} not reachable from the root at its depth"));
            }
        }
        let mut seen = 0;
        for (&n, ch) in &self.children {
            if !self.has_node(n) {
                return Err(format!("child list for absent node {n:?}"));
            }
            if ch.len() > self.nch {
                return Err(format!("{n:?} has {} children, cap {}", ch.len(), self.nch));
            }
            for &c in ch {
                if self.parent(c) != Some(n) {
                    return Err(format!("{c} listed under {n:?} but parent differs"));
                }
            }
            seen += ch.len();
        }
        if seen != self.parent.len() || self.edges().len() != self.parent.len() {
            return Err("child lists do not cover every node exactly once".into());
        }
        Ok(())
    }

    pub fn to_dot(&self) -> String {
        self.to_dot_named(|f| format!("f{f}"))
    }

    /// DOT digraph with the class as a filled double circle, feature nodes in
    /// ascending id order and edges sorted by (parent, child).
    pub fn to_dot_named(&self, label: impl Fn(usize) -> String) -> String {
        let mut out = String::from("digraph tbn {\n  rankdir=TB;\n");
        out.push_str("  Y [label=\"Y\", shape=doublecircle, style=filled, fillcolor=lightgrey];\n");
        for f in self.features() {
            let _ = writeln!(out, "  f{f} [label=\"{}\", shape=ellipse];", escape(&label(f)));
        }
        let mut edges: Vec<(Node, usize)> = self.parent.iter().map(|(&c, &p)| (p, c)).collect();
        edges.sort();
        for (p, c) in edges {
            let src = match p {
                Node::Class => "Y".to_string(),
                Node::Feature(i) => format!("f{i}"),
            };
            let _ = writeln!(out, "  {src} -> f{c};");
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    parent: Node,
    child: usize,
}

#[derive(Serialize, Deserialize)]
struct TbnRepr {
    max_depth: usize,
    nch: usize,
    edges: Vec<EdgeRepr>,
}

impl Serialize for Tbn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TbnRepr {
            max_depth: self.max_depth,
            nch: self.nch,
            edges: self
                .edges()
                .into_iter()
                .map(|(parent, child)| EdgeRepr { parent, child })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tbn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = TbnRepr::deserialize(d)?;
        let mut t = Tbn::new(repr.max_depth, repr.nch);
        for e in repr.edges {
            t.add_edge(e.parent, e.child).map_err(serde::de::Error::custom)?;
        }
        Ok(t)
    }
}
