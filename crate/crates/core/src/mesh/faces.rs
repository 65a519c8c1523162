//! Face list of a graded tree for the finite-volume update.
//!
//! Every face between two leaves, or between a leaf and the domain wall, is one task.
//! Faces between equal-level leaves belong to the level of both; a face where a leaf
//! meets a coarser leaf is split into four fine faces evaluated at the fine level,
//! and the coarse side receives their mean.

use super::{pack, AdaptiveMesh, Boundary, CellIndex};
use crate::error::{Error, Result};
use crate::state::Direction;

/// One flux evaluation: the face on the `+d` side of the cell `minus` at `level`.
/// `minus` may lie outside the domain for faces on the lower wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceTask {
    pub level: u8,
    pub direction: Direction,
    pub minus: [i64; 3],
}

impl FaceTask {
    /// Positions of the four cells `minus - 1 .. minus + 2` along the face normal.
    pub fn stencil(&self, boundary: Boundary) -> [[u32; 3]; 4] {
        let a = self.direction.axis();
        std::array::from_fn(|n| {
            let mut p = self.minus;
            p[a] += n as i64 - 1;
            boundary.resolve(self.level, p)
        })
    }
}

/// The flux task or tasks seen by one side of a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideRef {
    Single(u32),
    /// Four fine faces covering the side of a coarse leaf.
    Split([u32; 4]),
}

/// Face tasks of a tree and, per leaf, the tasks on its six sides ordered
/// `-x, +x, -y, +y, -z, +z`.
#[derive(Debug, Clone)]
pub struct FaceTopology {
    pub tasks: Vec<FaceTask>,
    pub sides: Vec<[SideRef; 6]>,
    /// Wall faces as `(task, sign)`, sign +1 on lower walls (inflow is `+flux`) and
    /// -1 on upper walls.
    pub walls: Vec<(u32, f64)>,
}

const UNSET: u32 = u32::MAX;

impl FaceTopology {
    pub fn build(mesh: &AdaptiveMesh) -> Result<Self> {
        let b = mesh.boundary();
        let n_leaves = mesh.leaf_count();
        let mut tasks: Vec<FaceTask> = Vec::with_capacity(3 * n_leaves + n_leaves / 4);
        let mut sides = vec![[SideRef::Single(UNSET); 6]; n_leaves];
        let mut walls = Vec::new();
        let push = |tasks: &mut Vec<FaceTask>, t: FaceTask| {
            tasks.push(t);
            (tasks.len() - 1) as u32
        };

        for (slot, c) in mesh.leaves().iter().enumerate() {
            let p = [c.i[0] as i64, c.i[1] as i64, c.i[2] as i64];
            for d in Direction::ALL {
                let a = d.axis();
                for (side, step) in [(0usize, -1i64), (1, 1)] {
                    let own = 2 * a + side;
                    let mut n = p;
                    n[a] += step;
                    let minus = if step < 0 { n } else { p };
                    let task = FaceTask {
                        level: c.level,
                        direction: d,
                        minus,
                    };
                    let Some(q) = b.neighbor(c.level, n) else {
                        let t = push(&mut tasks, task);
                        sides[slot][own] = SideRef::Single(t);
                        walls.push((t, if step < 0 { 1.0 } else { -1.0 }));
                        continue;
                    };
                    if let Some(node) = mesh.node(c.level, pack(q)) {
                        if !node.internal && step > 0 {
                            let t = push(&mut tasks, task);
                            sides[slot][own] = SideRef::Single(t);
                            sides[node.slot as usize][2 * a] = SideRef::Single(t);
                        }
                        // equal-level neighbour on the minus side created the task;
                        // refined neighbours are handled by their children
                        continue;
                    }
                    let parent = CellIndex::new(c.level - 1, [q[0] >> 1, q[1] >> 1, q[2] >> 1]);
                    let coarse = match mesh.get(&parent) {
                        Some(n) if !n.internal => n.slot as usize,
                        _ => {
                            return Err(Error::Structure(format!(
                                "grading violated between {c:?} and level {} cell {:?}",
                                parent.level, parent.i
                            )))
                        }
                    };
                    let t = push(&mut tasks, task);
                    sides[slot][own] = SideRef::Single(t);
                    let (t1, t2) = d.tangents();
                    let sub = (c.i[t1] & 1) as usize + 2 * (c.i[t2] & 1) as usize;
                    let opposite = 2 * a + (1 - side);
                    match &mut sides[coarse][opposite] {
                        SideRef::Split(ts) => ts[sub] = t,
                        s => {
                            let mut ts = [UNSET; 4];
                            ts[sub] = t;
                            *s = SideRef::Split(ts);
                        }
                    }
                }
            }
        }
        for (slot, s) in sides.iter().enumerate() {
            for r in s {
                let complete = match r {
                    SideRef::Single(t) => *t != UNSET,
                    SideRef::Split(ts) => ts.iter().all(|&t| t != UNSET),
                };
                if !complete {
                    return Err(Error::Structure(format!(
                        "incomplete faces around leaf {:?}",
                        mesh.leaves()[slot]
                    )));
                }
            }
        }
        Ok(FaceTopology { tasks, sides, walls })
    }
}
