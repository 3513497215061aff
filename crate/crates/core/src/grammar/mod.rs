//! The attributed spatial and-or grammar.
//!
//! A grammar is read from a single JSON document (see `docs/grammar.md`).
//! The same schema holds a hand-written skeleton (structure only) and a
//! fully learned bundle (structure plus probabilities, size models,
//! relation statistics and potential weights).

mod cliques;
mod derive;
mod parse;
mod parse_graph;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{PotentialWeights, RelationStats};
use crate::error::{Error, Result};
use crate::learning::SizeKde;

pub use cliques::{collect_cliques, CliqueSet, GroupClique, SupportClique, WallClique};
pub(crate) use derive::inverse_cdf;
pub use derive::{derive_parse_tree, sample_or, sample_set, DEFAULT_MAX_OBJECTS};
pub use parse::{parse_categories, CategoryParse};
pub use parse_graph::{ObjectInstance, ParseGraph, ParseTree, RoomDims, SurfacePose, TreeChoice};

/// Key of the nil (floor) entry in an address prior.
pub const NIL: &str = "nil";

/// Sums within this distance of 1 are kept verbatim.
const PROB_EXACT_TOL: f64 = 1e-12;
/// Sums within this distance of 1 are renormalised; anything further is rejected.
const PROB_RENORM_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    And,
    Or,
    Set,
    #[serde(rename = "terminal")]
    RegularTerminal,
    #[serde(rename = "address")]
    AddressTerminal,
}

/// Distribution over how many times a Set child appears.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDist {
    /// Allowed multiplicities, ascending.
    pub support: Vec<u32>,
    pub probs: Vec<f64>,
}

impl CountDist {
    pub fn prob_of(&self, count: u32) -> Option<f64> {
        self.support
            .iter()
            .position(|c| *c == count)
            .map(|i| self.probs[i])
    }

    fn from_doc(node: &str, child: &str, doc: &BTreeMap<String, f64>) -> Result<Self> {
        let mut pairs = Vec::with_capacity(doc.len());
        for (k, p) in doc {
            let count: u32 = k.parse().map_err(|_| {
                Error::Grammar(format!("set `{node}` child `{child}`: bad count key `{k}`"))
            })?;
            pairs.push((count, *p));
        }
        pairs.sort_by_key(|(c, _)| *c);
        if pairs.is_empty() {
            return Err(Error::Grammar(format!(
                "set `{node}` child `{child}` has an empty count distribution"
            )));
        }
        let (support, probs): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
        let probs = checked_distribution(&format!("{node}/{child}"), probs)?;
        Ok(CountDist { support, probs })
    }

    fn to_doc(&self) -> BTreeMap<String, f64> {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(c, p)| (c.to_string(), *p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub children: Vec<String>,
    pub category: Option<String>,
    /// Or-nodes: branch probabilities aligned with `children`.
    pub probs: Vec<f64>,
    /// Set-nodes: count distribution per child, aligned with `children`.
    pub counts: Vec<CountDist>,
}

/// A functional group: furniture of these categories interact pairwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDecl {
    pub id: String,
    pub members: Vec<String>,
}

/// Multinomial over target categories plus [`NIL`], keyed by category.
pub type AddressPrior = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, BTreeMap<String, f64>>,
}

/// On-disk grammar document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarDoc {
    pub root: String,
    pub nodes: BTreeMap<String, NodeDoc>,
    #[serde(default)]
    pub groups: Vec<GroupDecl>,
    #[serde(default)]
    pub address_slots: BTreeMap<String, AddressPrior>,
    #[serde(default)]
    pub stages: BTreeMap<String, u8>,
    #[serde(default)]
    pub size_models: BTreeMap<String, SizeKde>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_model: Option<SizeKde>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_stats: Option<RelationStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<PotentialWeights>,
}

impl GrammarDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Room size used when a document carries no room model (meters).
pub const DEFAULT_ROOM: [f64; 3] = [4.0, 4.0, 2.8];

/// A validated grammar. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Saog {
    pub root: String,
    pub nodes: BTreeMap<String, Node>,
    pub groups: Vec<GroupDecl>,
    pub address_priors: BTreeMap<String, AddressPrior>,
    pub stage_tags: BTreeMap<String, u8>,
    pub size_models: BTreeMap<String, SizeKde>,
    pub room_model: SizeKde,
    pub relation_stats: RelationStats,
    pub weights: PotentialWeights,
    /// Regular terminal bound to each address slot's enclosing And-node,
    /// keyed by the address node id.
    bound_terminal: BTreeMap<String, String>,
}

impl Saog {
    /// Builds and validates a complete grammar: every regular terminal
    /// category must have a size model.
    pub fn build(doc: &GrammarDoc) -> Result<Self> {
        Self::build_inner(doc, true)
    }

    /// Builds the structure only; size models may be missing. Used to drive
    /// learning from a skeleton.
    pub fn build_skeleton(doc: &GrammarDoc) -> Result<Self> {
        Self::build_inner(doc, false)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::build(&GrammarDoc::from_json(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::build(&GrammarDoc::load(path)?)
    }

    fn build_inner(doc: &GrammarDoc, require_sizes: bool) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        for (id, nd) in &doc.nodes {
            nodes.insert(id.clone(), node_from_doc(id, nd)?);
        }
        if !nodes.contains_key(&doc.root) {
            return Err(Error::Grammar(format!("root `{}` is not defined", doc.root)));
        }
        for (id, node) in &nodes {
            for c in &node.children {
                if !nodes.contains_key(c) {
                    return Err(Error::Grammar(format!(
                        "node `{id}` references undefined child `{c}`"
                    )));
                }
            }
        }
        check_acyclic(&doc.root, &nodes)?;

        let mut bound_terminal = BTreeMap::new();
        for (id, node) in &nodes {
            let addrs: Vec<&String> = node
                .children
                .iter()
                .filter(|c| nodes[*c].kind == NodeKind::AddressTerminal)
                .collect();
            if addrs.is_empty() {
                continue;
            }
            if node.kind != NodeKind::And {
                return Err(Error::Grammar(format!(
                    "address terminals must be children of an And-node (found under `{id}`)"
                )));
            }
            let terms: Vec<&String> = node
                .children
                .iter()
                .filter(|c| nodes[*c].kind == NodeKind::RegularTerminal)
                .collect();
            if terms.len() != 1 {
                return Err(Error::Grammar(format!(
                    "And-node `{id}` holds an address terminal and needs exactly one regular terminal"
                )));
            }
            for a in addrs {
                if let Some(prev) = bound_terminal.insert(a.clone(), terms[0].clone()) {
                    if prev != *terms[0] {
                        return Err(Error::Grammar(format!(
                            "address terminal `{a}` is bound to both `{prev}` and `{}`",
                            terms[0]
                        )));
                    }
                }
            }
        }

        let reachable = reachable_nodes(&doc.root, &nodes);
        let mut furniture_cats = BTreeSet::new();
        let mut all_cats = BTreeSet::new();
        let bound: BTreeSet<&String> = bound_terminal.values().collect();
        for id in &reachable {
            let node = &nodes[id];
            if node.kind == NodeKind::RegularTerminal {
                let cat = node.category.clone().expect("checked in node_from_doc");
                if !bound.contains(id) {
                    furniture_cats.insert(cat.clone());
                }
                all_cats.insert(cat);
            }
        }

        let mut address_priors = BTreeMap::new();
        for (id, node) in &nodes {
            if node.kind != NodeKind::AddressTerminal {
                continue;
            }
            let prior = doc
                .address_slots
                .get(id)
                .ok_or_else(|| Error::Grammar(format!("address slot `{id}` has no prior")))?;
            if !bound_terminal.contains_key(id) {
                return Err(Error::Grammar(format!(
                    "address terminal `{id}` is not paired with a regular terminal"
                )));
            }
            for target in prior.keys() {
                if target != NIL && !furniture_cats.contains(target) {
                    return Err(Error::Grammar(format!(
                        "address slot `{id}` targets `{target}`, which is not a reachable furniture category"
                    )));
                }
            }
            let keys: Vec<String> = prior.keys().cloned().collect();
            let probs = checked_distribution(id, prior.values().copied().collect())?;
            address_priors.insert(id.clone(), keys.into_iter().zip(probs).collect());
        }
        for slot in doc.address_slots.keys() {
            if !address_priors.contains_key(slot) {
                return Err(Error::Grammar(format!(
                    "address_slots names `{slot}`, which is not an address terminal"
                )));
            }
        }

        for g in &doc.groups {
            if g.members.len() < 2 {
                return Err(Error::Grammar(format!("group `{}` needs two members", g.id)));
            }
            let distinct: BTreeSet<&String> = g.members.iter().collect();
            if distinct.len() != g.members.len() {
                return Err(Error::Grammar(format!(
                    "group `{}` repeats a member category",
                    g.id
                )));
            }
            for m in &g.members {
                if !furniture_cats.contains(m) {
                    return Err(Error::Grammar(format!(
                        "group `{}` member `{m}` is not a reachable furniture category",
                        g.id
                    )));
                }
            }
        }

        for (id, stage) in &doc.stages {
            if !nodes.contains_key(id) {
                return Err(Error::Grammar(format!("stage tag for undefined node `{id}`")));
            }
            if !(1..=5).contains(stage) {
                return Err(Error::Grammar(format!("stage of `{id}` must be in 1..=5")));
            }
        }

        for kde in doc.size_models.values() {
            kde.validate()?;
        }
        if require_sizes {
            for cat in &all_cats {
                if !doc.size_models.contains_key(cat) {
                    return Err(Error::MissingSizeModel(cat.clone()));
                }
            }
        }
        let room_model = match &doc.room_model {
            Some(k) => {
                k.validate()?;
                k.clone()
            }
            None => SizeKde::point(DEFAULT_ROOM),
        };
        let relation_stats = doc.relation_stats.clone().unwrap_or_default();
        relation_stats.validate()?;
        let weights = doc.weights.unwrap_or_default();
        weights.validate()?;

        Ok(Saog {
            root: doc.root.clone(),
            nodes,
            groups: doc.groups.clone(),
            address_priors,
            stage_tags: doc.stages.clone(),
            size_models: doc.size_models.clone(),
            room_model,
            relation_stats,
            weights,
            bound_terminal,
        })
    }

    pub fn to_doc(&self) -> GrammarDoc {
        let nodes = self
            .nodes
            .iter()
            .map(|(id, n)| {
                let counts = if n.kind == NodeKind::Set {
                    n.children
                        .iter()
                        .zip(&n.counts)
                        .map(|(c, d)| (c.clone(), d.to_doc()))
                        .collect()
                } else {
                    BTreeMap::new()
                };
                let nd = NodeDoc {
                    kind: n.kind,
                    children: n.children.clone(),
                    category: n.category.clone(),
                    probs: (n.kind == NodeKind::Or).then(|| n.probs.clone()),
                    counts,
                };
                (id.clone(), nd)
            })
            .collect();
        GrammarDoc {
            root: self.root.clone(),
            nodes,
            groups: self.groups.clone(),
            address_slots: self.address_priors.clone(),
            stages: self.stage_tags.clone(),
            size_models: self.size_models.clone(),
            room_model: Some(self.room_model.clone()),
            relation_stats: Some(self.relation_stats.clone()),
            weights: Some(self.weights),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn node(&self, id: &str) -> &Node {
        &self.nodes[id]
    }

    /// The regular terminal that an address slot's object is derived from.
    pub fn bound_terminal(&self, slot: &str) -> Option<&str> {
        self.bound_terminal.get(slot).map(String::as_str)
    }

    /// Address slot whose object has category `category`, if any.
    pub fn slot_for_category(&self, category: &str) -> Option<&str> {
        self.bound_terminal
            .iter()
            .find(|(_, term)| self.nodes[*term].category.as_deref() == Some(category))
            .map(|(slot, _)| slot.as_str())
    }

    /// First regular terminal (by node id) producing `category`.
    pub fn terminal_for_category(&self, category: &str) -> Option<&str> {
        self.nodes
            .iter()
            .find(|(_, n)| n.kind == NodeKind::RegularTerminal && n.category.as_deref() == Some(category))
            .map(|(id, _)| id.as_str())
    }

    /// Categories of all reachable regular terminals.
    pub fn categories(&self) -> BTreeSet<String> {
        reachable_nodes(&self.root, &self.nodes)
            .into_iter()
            .filter_map(|id| self.nodes[&id].category.clone())
            .collect()
    }

    /// Stage of a terminal: its own tag, else the nearest tagged ancestor on
    /// the derivation path (`inherited`), else 5 for supported objects and 2
    /// for furniture.
    pub(crate) fn stage_of(&self, node: &str, inherited: Option<u8>, supported: bool) -> u8 {
        self.stage_tags
            .get(node)
            .copied()
            .or(inherited)
            .unwrap_or(if supported { 5 } else { 2 })
    }

    /// Size model of a category.
    pub fn size_model(&self, category: &str) -> Result<&SizeKde> {
        self.size_models
            .get(category)
            .ok_or_else(|| Error::MissingSizeModel(category.to_string()))
    }
}

fn node_from_doc(id: &str, nd: &NodeDoc) -> Result<Node> {
    let terminal = matches!(
        nd.kind,
        NodeKind::RegularTerminal | NodeKind::AddressTerminal
    );
    if terminal && !nd.children.is_empty() {
        return Err(Error::Grammar(format!("terminal `{id}` cannot have children")));
    }
    if !terminal && nd.children.is_empty() {
        return Err(Error::Grammar(format!("node `{id}` needs at least one child")));
    }
    if nd.kind == NodeKind::RegularTerminal && nd.category.is_none() {
        return Err(Error::Grammar(format!("terminal `{id}` has no category")));
    }
    if nd.kind != NodeKind::RegularTerminal && nd.category.is_some() {
        return Err(Error::Grammar(format!("only regular terminals carry a category (`{id}`)")));
    }
    if nd.kind != NodeKind::Or && nd.probs.is_some() {
        return Err(Error::Grammar(format!("only Or-nodes carry probs (`{id}`)")));
    }
    if nd.kind != NodeKind::Set && !nd.counts.is_empty() {
        return Err(Error::Grammar(format!("only Set-nodes carry counts (`{id}`)")));
    }
    let probs = if nd.kind == NodeKind::Or {
        match &nd.probs {
            Some(p) if p.len() != nd.children.len() => {
                return Err(Error::Grammar(format!(
                    "Or-node `{id}` has {} children but {} probs",
                    nd.children.len(),
                    p.len()
                )))
            }
            Some(p) => checked_distribution(id, p.clone())?,
            None => vec![1.0 / nd.children.len() as f64; nd.children.len()],
        }
    } else {
        Vec::new()
    };
    let counts = if nd.kind == NodeKind::Set {
        let mut v = Vec::with_capacity(nd.children.len());
        for c in &nd.children {
            let d = nd.counts.get(c).ok_or_else(|| {
                Error::Grammar(format!("Set-node `{id}` child `{c}` has no count distribution"))
            })?;
            v.push(CountDist::from_doc(id, c, d)?);
        }
        for k in nd.counts.keys() {
            if !nd.children.contains(k) {
                return Err(Error::Grammar(format!(
                    "Set-node `{id}` has counts for non-child `{k}`"
                )));
            }
        }
        v
    } else {
        Vec::new()
    };
    Ok(Node {
        kind: nd.kind,
        children: nd.children.clone(),
        category: nd.category.clone(),
        probs,
        counts,
    })
}

/// Validates a probability vector: exact sums are kept, sums within 1e-3 of 1
/// are renormalised, anything else is rejected.
pub(crate) fn checked_distribution(node: &str, probs: Vec<f64>) -> Result<Vec<f64>> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Grammar(format!("`{node}` has a negative or non-finite probability")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() <= PROB_EXACT_TOL {
        Ok(probs)
    } else if (sum - 1.0).abs() <= PROB_RENORM_TOL {
        Ok(probs.into_iter().map(|p| p / sum).collect())
    } else {
        Err(Error::BadProbabilities {
            node: node.to_string(),
            sum,
        })
    }
}

fn check_acyclic(root: &str, nodes: &BTreeMap<String, Node>) -> Result<()> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit<'a>(
        id: &'a str,
        nodes: &'a BTreeMap<String, Node>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Result<()> {
        match marks.get(id) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Open) => return Err(Error::GrammarCycle(id.to_string())),
            None => {}
        }
        marks.insert(id, Mark::Open);
        for c in &nodes[id].children {
            visit(c, nodes, marks)?;
        }
        marks.insert(id, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    visit(root, nodes, &mut marks)?;
    // unreachable nodes may still form cycles
    for id in nodes.keys() {
        visit(id, nodes, &mut marks)?;
    }
    Ok(())
}

fn reachable_nodes(root: &str, nodes: &BTreeMap<String, Node>) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![root.to_string()];
    while let Some(id) = stack.pop() {
        if seen.insert(id.clone()) {
            stack.extend(nodes[&id].children.iter().cloned());
        }
    }
    seen
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! Small grammars shared by unit tests across modules.

    pub const BED_ONLY: &str = r#"{
        "root": "room",
        "nodes": {
            "room": {"kind": "and", "children": ["bed", "nightstand"]},
            "bed": {"kind": "terminal", "category": "bed"},
            "nightstand": {"kind": "terminal", "category": "nightstand"}
        },
        "size_models": {
            "bed": {"samples": [[2.0, 1.6, 0.5]], "bandwidth": [0.0, 0.0, 0.0]},
            "nightstand": {"samples": [[0.5, 0.4, 0.6]], "bandwidth": [0.0, 0.0, 0.0]}
        }
    }"#;

    /// Office: desk + chair group, a monitor addressed to the desk, an
    /// optional shelf and a room-type Or at the root.
    pub const OFFICE: &str = r#"{
        "root": "scene",
        "nodes": {
            "scene": {"kind": "or", "children": ["office", "empty"], "probs": [0.75, 0.25]},
            "empty": {"kind": "and", "children": ["shelf"]},
            "office": {"kind": "and", "children": ["desk", "chair", "extras", "monitor_unit"]},
            "extras": {"kind": "set", "children": ["shelf"],
                       "counts": {"shelf": {"0": 0.5, "1": 0.5}}},
            "monitor_unit": {"kind": "and", "children": ["monitor_addr", "monitor"]},
            "monitor_addr": {"kind": "address"},
            "desk": {"kind": "terminal", "category": "desk"},
            "chair": {"kind": "terminal", "category": "chair"},
            "shelf": {"kind": "terminal", "category": "shelf"},
            "monitor": {"kind": "terminal", "category": "monitor"}
        },
        "groups": [{"id": "work", "members": ["desk", "chair"]}],
        "address_slots": {"monitor_addr": {"desk": 0.5, "shelf": 0.25, "nil": 0.25}},
        "stages": {"monitor": 5},
        "size_models": {
            "desk": {"samples": [[1.4, 0.7, 0.75]], "bandwidth": [0.0, 0.0, 0.0]},
            "chair": {"samples": [[0.5, 0.5, 0.9]], "bandwidth": [0.0, 0.0, 0.0]},
            "shelf": {"samples": [[0.8, 0.35, 1.8]], "bandwidth": [0.0, 0.0, 0.0]},
            "monitor": {"samples": [[0.6, 0.2, 0.4]], "bandwidth": [0.0, 0.0, 0.0]}
        }
    }"#;
}
