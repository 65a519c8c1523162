//! Values at positions the tree does not store: boundary images and predicted
//! averages below coarse leaves.

use rustc_hash::FxHashMap;

use super::multires::predict;
use super::{neighborhood_offsets, pack, AdaptiveMesh, CellIndex, Key};
use crate::error::{Error, Result};
use crate::state::{ConservedState, Direction};

/// Memo of predicted averages for positions missing from a tree.
///
/// The cache does not borrow the tree; it must only be used with the tree it was
/// filled from.
#[derive(Debug, Default, Clone)]
pub struct ValueCache {
    levels: Vec<FxHashMap<Key, ConservedState>>,
}

impl ValueCache {
    /// Average at an in-domain position, stored or predicted.
    pub fn value(&mut self, mesh: &AdaptiveMesh, level: u8, pos: [u32; 3]) -> ConservedState {
        let key = pack(pos);
        if let Some(n) = mesh.node(level, key) {
            return n.state;
        }
        if let Some(v) = self.levels.get(level as usize).and_then(|m| m.get(&key)) {
            return *v;
        }
        assert!(level > 0, "tree without root");
        let parent = CellIndex::new(level - 1, [pos[0] >> 1, pos[1] >> 1, pos[2] >> 1]);
        let nb = self.neighborhood(mesh, &parent);
        let kids = predict(&nb);
        if self.levels.len() <= level as usize {
            self.levels.resize_with(level as usize + 1, FxHashMap::default);
        }
        let map = &mut self.levels[level as usize];
        for (c, kid) in kids.iter().enumerate() {
            map.insert(parent.child(c).key(), *kid);
        }
        kids[CellIndex::new(level, pos).child_number()]
    }

    /// Stored or cached value without computing anything.
    #[inline]
    pub fn lookup(&self, mesh: &AdaptiveMesh, level: u8, pos: [u32; 3]) -> Option<ConservedState> {
        let key = pack(pos);
        mesh.node(level, key)
            .map(|n| n.state)
            .or_else(|| self.levels.get(level as usize)?.get(&key).copied())
    }

    /// The 3x3x3 neighbourhood of `c` at its own level, boundary-completed.
    pub fn neighborhood(&mut self, mesh: &AdaptiveMesh, c: &CellIndex) -> [ConservedState; 27] {
        let mut nb = [ConservedState::ZERO; 27];
        let b = mesh.boundary();
        for (n, o) in neighborhood_offsets().enumerate() {
            let q = b.resolve(c.level, [c.i[0] as i64 + o[0], c.i[1] as i64 + o[1], c.i[2] as i64 + o[2]]);
            nb[n] = self.value(mesh, c.level, q);
        }
        nb
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Averages at `cell.level` along `d` from `-width` to `+width` around `cell`.
///
/// Same-level neighbours are returned verbatim; positions below a coarser leaf are
/// predicted, positions covered by refined nodes use their projection and positions
/// outside the domain follow the mesh boundary condition.
pub fn ghost_values(mesh: &AdaptiveMesh, cell: &CellIndex, d: Direction, width: usize) -> Result<Vec<ConservedState>> {
    if mesh.get(cell).is_none() {
        return Err(Error::Structure(format!("{cell:?} is not in the tree")));
    }
    let mut cache = ValueCache::default();
    let a = d.axis();
    let b = mesh.boundary();
    let w = width as i64;
    let mut out = Vec::with_capacity(2 * width + 1);
    for off in -w..=w {
        let mut p = [cell.i[0] as i64, cell.i[1] as i64, cell.i[2] as i64];
        p[a] += off;
        let q = b.resolve(cell.level, p);
        if mesh.node(cell.level, pack(q)).is_none() {
            // grading guarantees the parent is stored
            let parent = [q[0] >> 1, q[1] >> 1, q[2] >> 1];
            if cell.level == 0 || mesh.node(cell.level - 1, pack(parent)).is_none() {
                return Err(Error::Structure(format!(
                    "grading violated: no level {} ancestor for {q:?}",
                    cell.level.saturating_sub(1)
                )));
            }
        }
        out.push(cache.value(mesh, cell.level, q));
    }
    Ok(out)
}

/// Dense array of averages over one level, x fastest.
#[derive(Debug, Clone)]
pub struct UniformLevel {
    pub level: u8,
    pub n: usize,
    pub data: Vec<ConservedState>,
}

impl UniformLevel {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + j) * self.n + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> &ConservedState {
        &self.data[self.index(i, j, k)]
    }
}

/// Prolongs the tree to a full uniform grid at `level`: stored averages where the tree
/// reaches that deep, predicted values elsewhere, finer data projected.
pub fn prolong_to_level(mesh: &AdaptiveMesh, level: u8) -> UniformLevel {
    let b = mesh.boundary();
    let mut cur = UniformLevel {
        level: 0,
        n: 1,
        data: vec![mesh.node(0, 0).expect("tree without root").state],
    };
    for l in 1..=level {
        let n = 1usize << l;
        let mut data = vec![ConservedState::ZERO; n * n * n];
        let nc = cur.n;
        for kc in 0..nc {
            for jc in 0..nc {
                for ic in 0..nc {
                    let parent = CellIndex::new(l - 1, [ic as u32, jc as u32, kc as u32]);
                    let stored = mesh.get(&parent).map(|p| p.internal).unwrap_or(false);
                    let kids = if stored {
                        std::array::from_fn(|c| mesh.get(&parent.child(c)).unwrap().state)
                    } else {
                        let mut nb = [ConservedState::ZERO; 27];
                        for (m, o) in neighborhood_offsets().enumerate() {
                            let q = b.resolve(l - 1, [ic as i64 + o[0], jc as i64 + o[1], kc as i64 + o[2]]);
                            nb[m] = *cur.at(q[0] as usize, q[1] as usize, q[2] as usize);
                        }
                        predict(&nb)
                    };
                    for (c, kid) in kids.iter().enumerate() {
                        let ch = parent.child(c);
                        data[(ch.i[2] as usize * n + ch.i[1] as usize) * n + ch.i[0] as usize] = *kid;
                    }
                }
            }
        }
        cur = UniformLevel { level: l, n, data };
    }
    cur
}
