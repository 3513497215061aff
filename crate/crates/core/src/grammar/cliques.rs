use serde::{Deserialize, Serialize};

use super::{ParseGraph, Saog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallClique {
    pub furniture: u32,
    pub walls: [usize; 4],
}

/// A supported object, its address slot and the furniture the slot resolves
/// to (`None` = floor).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportClique {
    pub object: u32,
    pub slot: String,
    pub furniture: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupClique {
    pub group: String,
    /// Ordered by the group's member order: `.0` has the earlier member category.
    pub pairs: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueSet {
    pub wall: Vec<WallClique>,
    pub furniture: Vec<(u32, u32)>,
    pub support: Vec<SupportClique>,
    pub group: Vec<GroupClique>,
}

impl CliqueSet {
    pub fn len(&self) -> usize {
        self.wall.len() + self.furniture.len() + self.support.len() + self.group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Collapses the grammar's relations onto the terminals of `pg`.
pub fn collect_cliques(pg: &ParseGraph, grammar: &Saog) -> CliqueSet {
    let furniture: Vec<&super::ObjectInstance> = pg.furniture().collect();
    let wall = furniture
        .iter()
        .map(|f| WallClique {
            furniture: f.id,
            walls: [0, 1, 2, 3],
        })
        .collect();

    let mut pairs = Vec::new();
    for (i, a) in furniture.iter().enumerate() {
        for b in &furniture[i + 1..] {
            pairs.push((a.id, b.id));
        }
    }

    let support = pg
        .objects
        .iter()
        .filter_map(|o| {
            o.slot.as_ref().map(|slot| SupportClique {
                object: o.id,
                slot: slot.clone(),
                furniture: o.address,
            })
        })
        .collect();

    let mut group = Vec::new();
    for g in &grammar.groups {
        let mut gp = Vec::new();
        for (mi, ma) in g.members.iter().enumerate() {
            for mb in &g.members[mi + 1..] {
                for a in furniture.iter().filter(|f| &f.category == ma) {
                    for b in furniture.iter().filter(|f| &f.category == mb) {
                        gp.push((a.id, b.id));
                    }
                }
            }
        }
        if !gp.is_empty() {
            group.push(GroupClique {
                group: g.id.clone(),
                pairs: gp,
            });
        }
    }

    CliqueSet {
        wall,
        furniture: pairs,
        support,
        group,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::fixtures::OFFICE;
    use crate::grammar::{ObjectInstance, ParseTree, RoomDims, SurfacePose};

    fn obj(id: u32, cat: &str, slot: Option<&str>, address: Option<u32>) -> ObjectInstance {
        ObjectInstance {
            id,
            category: cat.into(),
            node: cat.into(),
            size: [1.0, 1.0, 1.0],
            position: [1.0, 1.0, 0.0],
            yaw: 0.0,
            slot: slot.map(Into::into),
            address,
            surface: address.map(|_| SurfacePose {
                u: 0.0,
                v: 0.0,
                yaw: 0.0,
            }),
            stage: 2,
        }
    }

    fn room() -> RoomDims {
        RoomDims {
            width: 4.0,
            depth: 4.0,
            height: 2.8,
        }
    }

    #[test]
    fn single_furniture() {
        let g = Saog::from_json(OFFICE).unwrap();
        let pg = ParseGraph::new(ParseTree::default(), room(), vec![obj(1, "shelf", None, None)]);
        let c = collect_cliques(&pg, &g);
        assert_eq!(
            (c.wall.len(), c.furniture.len(), c.support.len(), c.group.len()),
            (1, 0, 0, 0)
        );
        assert_eq!(c.wall[0].walls, [0, 1, 2, 3]);
    }

    #[test]
    fn three_furniture_three_pairs() {
        let g = Saog::from_json(OFFICE).unwrap();
        let objs = vec![
            obj(1, "shelf", None, None),
            obj(2, "shelf", None, None),
            obj(3, "shelf", None, None),
        ];
        let pg = ParseGraph::new(ParseTree::default(), room(), objs);
        let c = collect_cliques(&pg, &g);
        assert_eq!(c.furniture, vec![(1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn group_and_support() {
        let g = Saog::from_json(OFFICE).unwrap();
        let objs = vec![
            obj(1, "desk", None, None),
            obj(2, "chair", None, None),
            obj(3, "monitor", Some("monitor_addr"), Some(1)),
        ];
        let pg = ParseGraph::new(ParseTree::default(), room(), objs);
        let c = collect_cliques(&pg, &g);
        assert_eq!(c.group.len(), 1);
        assert_eq!(c.group[0].pairs, vec![(1, 2)]);
        assert_eq!(c.support.len(), 1);
        assert_eq!(c.support[0].furniture, Some(1));
        // furniture cliques ignore the supported monitor
        assert_eq!(c.wall.len(), 2);
        assert_eq!(c.furniture.len(), 1);
        // idempotent
        assert_eq!(collect_cliques(&pg, &g), c);
    }

    #[test]
    fn group_needs_both_members() {
        let g = Saog::from_json(OFFICE).unwrap();
        let pg = ParseGraph::new(ParseTree::default(), room(), vec![obj(1, "desk", None, None)]);
        assert!(collect_cliques(&pg, &g).group.is_empty());
    }
}
