//! Top-down derivation of parse trees.

use rand::Rng;

use crate::error::{Error, Result};

use super::{
    CountDist, Node, NodeKind, ObjectInstance, ParseGraph, ParseTree, RoomDims, Saog, TreeChoice,
};

pub const DEFAULT_MAX_OBJECTS: usize = 256;

/// Inverse-CDF pick of an Or branch in declared child order.
pub fn sample_or(node: &Node, u: f64) -> usize {
    inverse_cdf(&node.probs, u)
}

/// Samples a count for every child of a Set-node, independently and in
/// child order. Returns `(child index, count)` pairs.
pub fn sample_set<R: Rng + ?Sized>(node: &Node, rng: &mut R) -> Vec<(usize, u32)> {
    node.counts
        .iter()
        .enumerate()
        .map(|(i, d)| (i, sample_count(d, rng.random())))
        .collect()
}

pub(crate) fn sample_count(dist: &CountDist, u: f64) -> u32 {
    dist.support[inverse_cdf(&dist.probs, u)]
}

pub(crate) fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u within rounding of 1: take the last branch with nonzero mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

struct Derivation<'g, R: ?Sized> {
    grammar: &'g Saog,
    rng: &'g mut R,
    tree: ParseTree,
    objects: Vec<ObjectInstance>,
    max_objects: usize,
}

impl<R: Rng + ?Sized> Derivation<'_, R> {
    /// Expands `id`; returns the object index when `id` is a regular terminal.
    fn expand(&mut self, id: &str, stage: Option<u8>) -> Result<Option<usize>> {
        let grammar = self.grammar;
        let node = grammar.node(id);
        let stage = grammar.stage_tags.get(id).copied().or(stage);
        match node.kind {
            NodeKind::RegularTerminal => {
                if self.objects.len() >= self.max_objects {
                    return Err(Error::RunawayDerivation(self.max_objects));
                }
                let cat = node.category.clone().expect("validated");
                let size = grammar.size_model(&cat)?.sample(self.rng);
                let idx = self.objects.len();
                self.objects.push(ObjectInstance {
                    id: idx as u32 + 1,
                    category: cat,
                    node: id.to_string(),
                    size,
                    position: [0.0; 3],
                    yaw: 0.0,
                    slot: None,
                    address: None,
                    surface: None,
                    stage: grammar.stage_of(id, stage, false),
                });
                Ok(Some(idx))
            }
            NodeKind::AddressTerminal => Ok(None),
            NodeKind::And => {
                let mut bound = None;
                for c in &node.children {
                    let idx = self.expand(c, stage)?;
                    if grammar.node(c).kind == NodeKind::RegularTerminal {
                        bound = idx;
                    }
                }
                for c in &node.children {
                    if grammar.node(c).kind == NodeKind::AddressTerminal {
                        let idx = bound.expect("validated: address has a sibling terminal");
                        let obj = &mut self.objects[idx];
                        obj.slot = Some(c.clone());
                        obj.stage = grammar.stage_of(&obj.node, stage, true);
                    }
                }
                Ok(None)
            }
            NodeKind::Or => {
                let branch = sample_or(node, self.rng.random());
                self.tree.choices.push(TreeChoice::Or {
                    node: id.to_string(),
                    branch,
                });
                self.expand(&node.children[branch], stage)?;
                Ok(None)
            }
            NodeKind::Set => {
                for (ci, count) in sample_set(node, self.rng) {
                    let child = &node.children[ci];
                    self.tree.choices.push(TreeChoice::Set {
                        node: id.to_string(),
                        child: child.clone(),
                        count,
                    });
                    for _ in 0..count {
                        self.expand(child, stage)?;
                    }
                }
                Ok(None)
            }
        }
    }
}

/// Samples the room size, the tree structure and every object's size.
/// External attributes are left at zero and address slots unassigned.
pub fn derive_parse_tree<R: Rng + ?Sized>(
    grammar: &Saog,
    rng: &mut R,
    max_objects: usize,
) -> Result<ParseGraph> {
    let [width, depth, height] = grammar.room_model.sample(rng);
    let room = RoomDims {
        width,
        depth,
        height,
    };
    let mut d = Derivation {
        grammar,
        rng,
        tree: ParseTree::default(),
        objects: Vec::new(),
        max_objects,
    };
    d.expand(&grammar.root, None)?;
    let mut pg = ParseGraph::new(d.tree, room, d.objects);
    pg.refresh_cliques(grammar);
    Ok(pg)
}
