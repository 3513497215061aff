//! Greedy re-parse of a bag of object categories against the grammar.
//!
//! Used to attribute training scenes to Or branches and Set counts, and to
//! check that a derived scene is producible by the grammar.

use std::collections::BTreeMap;

use super::{NodeKind, Saog, TreeChoice};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryParse {
    pub choices: Vec<TreeChoice>,
    /// Instances no terminal consumed.
    pub leftover: BTreeMap<String, usize>,
    /// Terminals that found no instance to consume.
    pub missing: usize,
    /// Set counts that fell outside the declared support and were snapped.
    pub clamped: usize,
}

impl CategoryParse {
    /// True when the bag is exactly producible by the recorded choices.
    pub fn is_exact(&self) -> bool {
        self.leftover.values().all(|n| *n == 0) && self.missing == 0 && self.clamped == 0
    }

    fn cost(&self) -> (usize, usize) {
        (self.missing, self.leftover.values().sum())
    }
}

/// Parses `categories` top-down. At an Or-node, a child whose id equals
/// `room_type` wins outright; otherwise each branch is tried and the one with
/// the fewest missing terminals, then the most consumed instances,
/// is kept (ties: declaration order).
pub fn parse_categories(grammar: &Saog, room_type: Option<&str>, categories: &[&str]) -> CategoryParse {
    let mut state = CategoryParse::default();
    for c in categories {
        *state.leftover.entry(c.to_string()).or_insert(0) += 1;
    }
    walk(grammar, &grammar.root, room_type, &mut state);
    state.leftover.retain(|_, n| *n > 0);
    state
}

fn walk(grammar: &Saog, id: &str, room_type: Option<&str>, st: &mut CategoryParse) {
    let node = grammar.node(id);
    match node.kind {
        NodeKind::RegularTerminal => {
            let cat = node.category.as_ref().expect("validated");
            match st.leftover.get_mut(cat) {
                Some(n) if *n > 0 => *n -= 1,
                _ => st.missing += 1,
            }
        }
        NodeKind::AddressTerminal => {}
        NodeKind::And => {
            for c in &node.children {
                walk(grammar, c, room_type, st);
            }
        }
        NodeKind::Or => {
            let named = room_type.and_then(|rt| node.children.iter().position(|c| c == rt));
            let branch = named.unwrap_or_else(|| {
                let mut best: Option<(usize, (usize, usize))> = None;
                for (i, c) in node.children.iter().enumerate() {
                    let mut trial = st.clone();
                    walk(grammar, c, room_type, &mut trial);
                    let cost = trial.cost();
                    if best.is_none_or(|(_, b)| cost < b) {
                        best = Some((i, cost));
                    }
                }
                best.expect("Or-node has children").0
            });
            st.choices.push(TreeChoice::Or {
                node: id.to_string(),
                branch,
            });
            walk(grammar, &node.children[branch], room_type, st);
        }
        NodeKind::Set => {
            for (child, dist) in node.children.iter().zip(&node.counts) {
                let available = head_category(grammar, child)
                    .and_then(|h| st.leftover.get(h).copied())
                    .unwrap_or(0) as u32;
                let count = snap_to_support(&dist.support, available);
                if count != available {
                    st.clamped += 1;
                }
                st.choices.push(TreeChoice::Set {
                    node: id.to_string(),
                    child: child.clone(),
                    count,
                });
                for _ in 0..count {
                    walk(grammar, child, room_type, st);
                }
            }
        }
    }
}

/// Largest supported count not above `n`, else the smallest supported count.
fn snap_to_support(support: &[u32], n: u32) -> u32 {
    support
        .iter()
        .rev()
        .find(|c| **c <= n)
        .copied()
        .unwrap_or(support[0])
}

/// Category of the first regular terminal under `id` (depth first).
pub(crate) fn head_category<'g>(grammar: &'g Saog, id: &str) -> Option<&'g str> {
    let node = grammar.node(id);
    if node.kind == NodeKind::RegularTerminal {
        return node.category.as_deref();
    }
    node.children.iter().find_map(|c| head_category(grammar, c))
}
