//! Computational graphs and partial execution.
//!
//! A [`Graph`] is an arena of nodes where children always precede their
//! parents. Graphs are built through [`GraphBuilder`], which interns nodes so
//! that structurally equal subtrees share one node. Finished graphs are in a
//! canonical layout (post-order from the root, unreachable nodes dropped), so
//! two structurally equal graphs compare equal with `==`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{to_answer, AlgebraError, Operator, OperatorKind, Value};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {node}: {source}")]
    Execution {
        node: NodeId,
        #[source]
        source: AlgebraError,
    },
    #[error("graph did not reduce to a value")]
    NotFullyReduced,
    #[error("{op} takes {expected} children, got {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    InvalidOperator(AlgebraError),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::Execution { .. } => "ExecutionError",
            GraphError::NotFullyReduced => "NotFullyReduced",
            GraphError::Arity { .. } => "ArityError",
            GraphError::InvalidOperator(_) => "InvalidOperator",
            GraphError::UnknownNode(_) => "UnknownNode",
        }
    }

    /// Node id of an execution failure, if any.
    pub fn node(&self) -> Option<NodeId> {
        match self {
            GraphError::Execution { node, .. } => Some(*node),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Payload {
    Value(Value),
    Op(Operator),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub payload: Payload,
    pub children: Vec<NodeId>,
}

impl Node {
    pub fn value(&self) -> Option<&Value> {
        match &self.payload {
            Payload::Value(v) => Some(v),
            Payload::Op(_) => None,
        }
    }

    pub fn operator(&self) -> Option<&Operator> {
        match &self.payload {
            Payload::Op(op) => Some(op),
            Payload::Value(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    nodes: Vec<Node>,
    root: NodeId,
}

/// Interning graph builder.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl GraphBuilder {
    pub fn new() -> GraphBuilder {
        GraphBuilder::default()
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(id) = self.index.get(&node) {
            return *id;
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    pub fn value(&mut self, v: impl Into<Value>) -> NodeId {
        self.intern(Node {
            payload: Payload::Value(v.into()),
            children: Vec::new(),
        })
    }

    /// Adds an operator node after checking its parameters and arity.
    pub fn op(&mut self, op: Operator, children: Vec<NodeId>) -> Result<NodeId, GraphError> {
        op.validate().map_err(GraphError::InvalidOperator)?;
        if children.len() != op.arity() {
            return Err(GraphError::Arity {
                op: op.kind().name().to_string(),
                expected: op.arity(),
                found: children.len(),
            });
        }
        if let Some(bad) = children.iter().find(|c| **c >= self.nodes.len()) {
            return Err(GraphError::UnknownNode(*bad));
        }
        Ok(self.intern(Node {
            payload: Payload::Op(op),
            children,
        }))
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Finishes the graph rooted at `root` in canonical layout.
    pub fn finish(self, root: NodeId) -> Result<Graph, GraphError> {
        if root >= self.nodes.len() {
            return Err(GraphError::UnknownNode(root));
        }
        let mut remap: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        let mut out: Vec<Node> = Vec::new();
        // iterative post-order: (node, next child index)
        let mut stack = vec![(root, 0usize)];
        while let Some((id, next)) = stack.pop() {
            if remap[id].is_some() {
                continue;
            }
            let children = &self.nodes[id].children;
            if next < children.len() {
                stack.push((id, next + 1));
                let child = children[next];
                if remap[child].is_none() {
                    stack.push((child, 0));
                }
                continue;
            }
            let node = &self.nodes[id];
            remap[id] = Some(out.len());
            out.push(Node {
                payload: node.payload.clone(),
                children: node
                    .children
                    .iter()
                    .map(|c| remap[*c].expect("child placed before parent"))
                    .collect(),
            });
        }
        let root = remap[root].expect("root placed");
        Ok(Graph { nodes: out, root })
    }
}

impl Graph {
    /// A graph consisting of a single value node.
    pub fn leaf(v: impl Into<Value>) -> Graph {
        Graph {
            nodes: vec![Node {
                payload: Payload::Value(v.into()),
                children: Vec::new(),
            }],
            root: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The root's value when the graph is fully reduced.
    pub fn root_value(&self) -> Option<&Value> {
        self.nodes[self.root].value()
    }

    /// Copies the nodes into a builder, returning it with the id map.
    pub fn to_builder(&self) -> (GraphBuilder, Vec<NodeId>) {
        let mut b = GraphBuilder::new();
        let mut map = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let id = match &node.payload {
                Payload::Value(v) => b.value(v.clone()),
                Payload::Op(op) => b
                    .op(op.clone(), node.children.iter().map(|c| map[*c]).collect())
                    .expect("graph nodes are valid"),
            };
            map.push(id);
        }
        (b, map)
    }

    /// JSON debug form: root id plus one record per node.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| match &n.payload {
                Payload::Value(v) => serde_json::json!({
                    "id": id,
                    "payload": "value",
                    "type": v.tag(),
                    "value": crate::linearize::linearize_value(v),
                    "children": n.children,
                }),
                Payload::Op(op) => serde_json::json!({
                    "id": id,
                    "payload": "operator",
                    "kind": op.kind().name(),
                    "operator": crate::linearize::operator_token(op),
                    "children": n.children,
                }),
            })
            .collect();
        serde_json::json!({ "root": self.root, "nodes": nodes })
    }
}

/// A set of operator kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct KindSet(u16);

impl KindSet {
    pub const EMPTY: KindSet = KindSet(0);
    pub const ALL: KindSet = KindSet((1 << OperatorKind::ALL.len()) - 1);

    fn bit(kind: OperatorKind) -> u16 {
        1 << (kind as u16)
    }

    pub fn with(self, kind: OperatorKind) -> KindSet {
        KindSet(self.0 | KindSet::bit(kind))
    }

    pub fn contains(self, kind: OperatorKind) -> bool {
        self.0 & KindSet::bit(kind) != 0
    }

    pub fn is_subset(self, other: KindSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn kinds(self) -> Vec<OperatorKind> {
        OperatorKind::ALL
            .into_iter()
            .filter(|k| self.contains(*k))
            .collect()
    }
}

impl FromIterator<OperatorKind> for KindSet {
    fn from_iter<I: IntoIterator<Item = OperatorKind>>(iter: I) -> Self {
        iter.into_iter().fold(KindSet::EMPTY, KindSet::with)
    }
}

/// Cumulative operator levels, from projections only to everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OperatorLevel {
    #[serde(rename = "P")]
    P,
    #[serde(rename = "+C")]
    C,
    #[serde(rename = "+S")]
    S,
    #[serde(rename = "+GB+H")]
    GbH,
    #[serde(rename = "+OB")]
    Ob,
    #[serde(rename = "+A")]
    A,
    #[serde(rename = "+OP")]
    Op,
    #[serde(rename = "Full")]
    Full,
}

impl OperatorLevel {
    pub const ALL: [OperatorLevel; 8] = [
        OperatorLevel::P,
        OperatorLevel::C,
        OperatorLevel::S,
        OperatorLevel::GbH,
        OperatorLevel::Ob,
        OperatorLevel::A,
        OperatorLevel::Op,
        OperatorLevel::Full,
    ];

    /// The seven levels of the default experiment grid.
    pub const GRID: [OperatorLevel; 7] = [
        OperatorLevel::P,
        OperatorLevel::C,
        OperatorLevel::S,
        OperatorLevel::GbH,
        OperatorLevel::A,
        OperatorLevel::Op,
        OperatorLevel::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorLevel::P => "P",
            OperatorLevel::C => "+C",
            OperatorLevel::S => "+S",
            OperatorLevel::GbH => "+GB+H",
            OperatorLevel::Ob => "+OB",
            OperatorLevel::A => "+A",
            OperatorLevel::Op => "+OP",
            OperatorLevel::Full => "Full",
        }
    }

    /// Kinds this level adds on top of the previous one.
    fn added(self) -> &'static [OperatorKind] {
        use OperatorKind::*;
        match self {
            OperatorLevel::P => &[Projection],
            OperatorLevel::C => &[Comparison],
            OperatorLevel::S => &[Selection],
            OperatorLevel::GbH => &[GroupBy, Having],
            OperatorLevel::Ob => &[OrderBy],
            OperatorLevel::A => &[Aggregation],
            OperatorLevel::Op => &[TermwiseOp],
            OperatorLevel::Full => &[Limit],
        }
    }

    pub fn allowed(self) -> KindSet {
        OperatorLevel::ALL
            .iter()
            .take_while(|l| **l <= self)
            .flat_map(|l| l.added().iter().copied())
            .collect()
    }
}

impl fmt::Display for OperatorLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().trim_start_matches('+').to_ascii_lowercase();
        OperatorLevel::ALL
            .into_iter()
            .find(|l| l.name().trim_start_matches('+').to_ascii_lowercase() == wanted)
            .ok_or_else(|| {
                format!(
                    "unknown level `{s}` (expected one of {})",
                    OperatorLevel::ALL.map(OperatorLevel::name).join(", ")
                )
            })
    }
}

/// Reduces every node whose kind is allowed and whose children are all values.
///
/// Produced values carry no header. Data errors under an allowed operator
/// propagate and name the failing node of the input graph.
pub fn partial_execute(g: &Graph, allowed: KindSet) -> Result<Graph, GraphError> {
    let mut b = GraphBuilder::new();
    let mut map: Vec<NodeId> = Vec::with_capacity(g.len());
    for (id, node) in g.nodes.iter().enumerate() {
        let new_id = match &node.payload {
            Payload::Value(v) => b.value(v.clone()),
            Payload::Op(op) => {
                let children: Vec<NodeId> = node.children.iter().map(|c| map[*c]).collect();
                let reducible = allowed.contains(op.kind())
                    && children.iter().all(|c| b.node(*c).value().is_some());
                if reducible {
                    let args: Vec<&Value> = children
                        .iter()
                        .map(|c| b.node(*c).value().expect("checked above"))
                        .collect();
                    let result = op
                        .apply(&args)
                        .map_err(|source| GraphError::Execution { node: id, source })?;
                    b.value(result.without_header())
                } else {
                    b.op(op.clone(), children)?
                }
            }
        };
        map.push(new_id);
    }
    b.finish(map[g.root])
}

/// Executes everything and renders the root as an answer list.
pub fn full_execute(g: &Graph) -> Result<Vec<String>, GraphError> {
    let reduced = partial_execute(g, OperatorLevel::Full.allowed())?;
    reduced
        .root_value()
        .map(to_answer)
        .ok_or(GraphError::NotFullyReduced)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub operator_count: usize,
    pub kinds_present: BTreeSet<OperatorKind>,
}

impl GraphStats {
    /// Complexity bin by operator count: "1-4", "4-8" (5 to 8) or "8+" (9 and up).
    pub fn complexity_bin(&self) -> &'static str {
        match self.operator_count {
            0..=4 => "1-4",
            5..=8 => "4-8",
            _ => "8+",
        }
    }
}

/// Operator count (shared nodes once) and the kinds that occur.
pub fn graph_stats(g: &Graph) -> GraphStats {
    let ops: Vec<&Operator> = g.nodes.iter().filter_map(Node::operator).collect();
    GraphStats {
        operator_count: ops.len(),
        kinds_present: ops.iter().map(|o| o.kind()).collect(),
    }
}
