//! Graded octree of cell averages.
//!
//! Every node stores a conserved average; internal nodes hold the exact projection of
//! their eight children. Nodes are kept per level in hash maps keyed by packed integer
//! coordinates. Leaves are numbered in (level, key) order; that numbering is the slot
//! used by the time integrator.

mod adapt;
mod dump;
mod faces;
mod ghost;
mod multires;

pub use adapt::{adapt, threshold, threshold_value, ThresholdPolicy, VariableScaling};
pub use dump::{read_mesh_dump, write_mesh_dump};
pub use faces::{FaceTask, FaceTopology, SideRef};
pub use ghost::{ghost_values, prolong_to_level, UniformLevel, ValueCache};
pub use multires::{
    compute_details, inverse_mr_transform, mr_transform, predict, project, reconstruct_children, DetailSet,
    MrDecomposition,
};

use rustc_hash::FxHashMap;

use crate::error::{Error, Location, Result};
use crate::state::ConservedState;

/// Deepest level representable by the packed keys.
pub const MAX_SUPPORTED_LEVEL: u8 = 20;

pub type Key = u64;

#[inline]
pub fn pack(i: [u32; 3]) -> Key {
    ((i[0] as u64) << 42) | ((i[1] as u64) << 21) | (i[2] as u64)
}

#[inline]
pub fn unpack(k: Key) -> [u32; 3] {
    const MASK: u64 = (1 << 21) - 1;
    [(k >> 42) as u32, ((k >> 21) & MASK) as u32, (k & MASK) as u32]
}

/// Level and integer coordinates of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub level: u8,
    pub i: [u32; 3],
}

impl CellIndex {
    pub fn new(level: u8, i: [u32; 3]) -> Self {
        CellIndex { level, i }
    }

    pub fn key(&self) -> Key {
        pack(self.i)
    }

    pub fn is_valid(&self) -> bool {
        let n = 1u64 << self.level;
        self.i.iter().all(|&c| (c as u64) < n)
    }

    pub fn parent(&self) -> Option<CellIndex> {
        (self.level > 0).then(|| CellIndex::new(self.level - 1, [self.i[0] >> 1, self.i[1] >> 1, self.i[2] >> 1]))
    }

    /// Child `c`, with bit 0 selecting the x half, bit 1 y and bit 2 z.
    pub fn child(&self, c: usize) -> CellIndex {
        CellIndex::new(
            self.level + 1,
            [
                2 * self.i[0] + (c & 1) as u32,
                2 * self.i[1] + ((c >> 1) & 1) as u32,
                2 * self.i[2] + ((c >> 2) & 1) as u32,
            ],
        )
    }

    /// Which child of its parent this cell is.
    pub fn child_number(&self) -> usize {
        (self.i[0] & 1) as usize | (((self.i[1] & 1) as usize) << 1) | (((self.i[2] & 1) as usize) << 2)
    }
}

/// Treatment of cells outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Ghost cells copy the nearest interior average.
    #[default]
    ZeroGradient,
    Periodic,
}

impl Boundary {
    /// Maps a possibly out-of-range coordinate at `level` into the domain.
    #[inline]
    pub fn resolve(self, level: u8, p: [i64; 3]) -> [u32; 3] {
        let n = 1i64 << level;
        let f = |c: i64| -> u32 {
            match self {
                Boundary::ZeroGradient => c.clamp(0, n - 1) as u32,
                Boundary::Periodic => c.rem_euclid(n) as u32,
            }
        };
        [f(p[0]), f(p[1]), f(p[2])]
    }

    /// In-domain image of `p`, or `None` for a cell beyond a non-periodic wall.
    #[inline]
    pub fn neighbor(self, level: u8, p: [i64; 3]) -> Option<[u32; 3]> {
        let n = 1i64 << level;
        match self {
            Boundary::Periodic => Some(self.resolve(level, p)),
            Boundary::ZeroGradient => {
                p.iter().all(|&c| (0..n).contains(&c)).then(|| [p[0] as u32, p[1] as u32, p[2] as u32])
            }
        }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Domain {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        if (0..3).all(|a| lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]) {
            Ok(Domain { lo, hi })
        } else {
            Err(Error::Domain(format!("empty or non-finite domain {lo:?} .. {hi:?}")))
        }
    }

    pub fn cube(lo: f64, hi: f64) -> Result<Self> {
        Domain::new([lo; 3], [hi; 3])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        (0..3).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }
}

/// Corners, centre and spacing of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub center: [f64; 3],
    pub spacing: [f64; 3],
}

impl CellGeometry {
    pub fn volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub state: ConservedState,
    pub internal: bool,
    /// Leaf number, `u32::MAX` for internal nodes.
    pub slot: u32,
}

impl Node {
    fn leaf(state: ConservedState) -> Self {
        Node {
            state,
            internal: false,
            slot: u32::MAX,
        }
    }
}

/// Graded octree of conserved cell averages over a box, levels `0..=max_level`.
#[derive(Debug, Clone)]
pub struct AdaptiveMesh {
    domain: Domain,
    max_level: u8,
    boundary: Boundary,
    levels: Vec<FxHashMap<Key, Node>>,
    leaves: Vec<CellIndex>,
}

impl AdaptiveMesh {
    /// A single root cell with the given average.
    pub fn root(domain: Domain, max_level: u8, boundary: Boundary, state: ConservedState) -> Result<Self> {
        if max_level > MAX_SUPPORTED_LEVEL {
            return Err(Error::Domain(format!(
                "maximum level {max_level} exceeds the supported {MAX_SUPPORTED_LEVEL}"
            )));
        }
        let mut levels = vec![FxHashMap::default(); max_level as usize + 1];
        levels[0].insert(pack([0, 0, 0]), Node::leaf(state));
        let mut mesh = AdaptiveMesh {
            domain,
            max_level,
            boundary,
            levels,
            leaves: Vec::new(),
        };
        mesh.reindex();
        Ok(mesh)
    }

    /// Full tree refined uniformly to `level`, leaves initialised from `f` and internal
    /// nodes by projection.
    pub fn uniform<F>(domain: Domain, max_level: u8, boundary: Boundary, level: u8, f: F) -> Result<Self>
    where
        F: Fn(&CellGeometry) -> ConservedState,
    {
        if level > max_level {
            return Err(Error::Domain(format!("level {level} exceeds maximum level {max_level}")));
        }
        let mut mesh = AdaptiveMesh::root(domain, max_level, boundary, ConservedState::ZERO)?;
        for l in 0..level {
            let keys: Vec<Key> = mesh.levels[l as usize].keys().copied().collect();
            for k in keys {
                mesh.split(CellIndex::new(l, unpack(k)), [ConservedState::ZERO; 8]);
            }
        }
        for node in mesh.levels[level as usize].values_mut() {
            node.state = ConservedState::ZERO;
        }
        let keys: Vec<Key> = mesh.levels[level as usize].keys().copied().collect();
        for k in keys {
            let g = mesh.geometry(&CellIndex::new(level, unpack(k)));
            mesh.levels[level as usize].get_mut(&k).unwrap().state = f(&g);
        }
        mesh.restrict_all();
        mesh.reindex();
        Ok(mesh)
    }

    pub(crate) fn from_levels(
        domain: Domain,
        max_level: u8,
        boundary: Boundary,
        levels: Vec<FxHashMap<Key, Node>>,
    ) -> Self {
        let mut mesh = AdaptiveMesh {
            domain,
            max_level,
            boundary,
            levels,
            leaves: Vec::new(),
        };
        mesh.reindex();
        mesh
    }

    /// Builds the tree holding exactly the given leaves; missing ancestors are created
    /// and set by projection.
    pub fn from_leaves(
        domain: Domain,
        max_level: u8,
        boundary: Boundary,
        leaves: impl IntoIterator<Item = (CellIndex, ConservedState)>,
    ) -> Result<Self> {
        let mut levels: Vec<FxHashMap<Key, Node>> = vec![FxHashMap::default(); max_level as usize + 1];
        for (c, s) in leaves {
            if c.level > max_level || !c.is_valid() {
                return Err(Error::Structure(format!("leaf {c:?} outside the tree")));
            }
            levels[c.level as usize].insert(c.key(), Node::leaf(s));
            let mut cur = c;
            while let Some(p) = cur.parent() {
                let node = levels[p.level as usize].entry(p.key()).or_insert(Node::leaf(ConservedState::ZERO));
                node.internal = true;
                cur = p;
            }
        }
        if levels[0].is_empty() {
            return Err(Error::Structure("no leaves given".into()));
        }
        // every internal node must have all eight children
        for l in 0..max_level as usize {
            for (&k, node) in &levels[l] {
                if node.internal {
                    let c = CellIndex::new(l as u8, unpack(k));
                    for ch in 0..8 {
                        if !levels[l + 1].contains_key(&c.child(ch).key()) {
                            return Err(Error::Structure(format!("leaves do not tile the domain below {c:?}")));
                        }
                    }
                }
            }
        }
        let mut mesh = AdaptiveMesh::from_levels(domain, max_level, boundary, levels);
        mesh.restrict_all();
        Ok(mesh)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn set_boundary(&mut self, boundary: Boundary) {
        self.boundary = boundary;
    }

    #[inline]
    pub fn node(&self, level: u8, key: Key) -> Option<&Node> {
        self.levels.get(level as usize)?.get(&key)
    }

    pub fn get(&self, c: &CellIndex) -> Option<&Node> {
        self.node(c.level, c.key())
    }

    pub fn level_nodes(&self, level: u8) -> impl Iterator<Item = (CellIndex, &Node)> {
        self.levels[level as usize]
            .iter()
            .map(move |(&k, n)| (CellIndex::new(level, unpack(k)), n))
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    /// Leaves in slot order.
    pub fn leaves(&self) -> &[CellIndex] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    #[inline]
    pub fn leaf_state(&self, slot: usize) -> &ConservedState {
        let c = &self.leaves[slot];
        &self.levels[c.level as usize][&c.key()].state
    }

    /// Leaf states in slot order.
    pub fn leaf_states(&self) -> Vec<ConservedState> {
        self.leaves
            .iter()
            .map(|c| self.levels[c.level as usize][&c.key()].state)
            .collect()
    }

    /// Overwrites all leaf states (slot order) and re-projects the internal nodes.
    pub fn set_leaf_states(&mut self, states: &[ConservedState]) {
        assert_eq!(states.len(), self.leaves.len());
        for (c, s) in self.leaves.iter().zip(states) {
            self.levels[c.level as usize].get_mut(&c.key()).unwrap().state = *s;
        }
        self.restrict_all();
    }

    /// Applies `f` to every leaf state and re-projects.
    pub fn map_leaves<F: FnMut(&CellIndex, &CellGeometry, &ConservedState) -> ConservedState>(&mut self, mut f: F) {
        let leaves = self.leaves.clone();
        for c in &leaves {
            let g = self.geometry(c);
            let node = self.levels[c.level as usize].get_mut(&c.key()).unwrap();
            node.state = f(c, &g, &node.state);
        }
        self.restrict_all();
    }

    /// Deepest level holding a leaf.
    pub fn finest_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn spacing(&self, level: u8) -> [f64; 3] {
        let n = (1u64 << level) as f64;
        [
            self.domain.extent(0) / n,
            self.domain.extent(1) / n,
            self.domain.extent(2) / n,
        ]
    }

    /// Smallest spacing at the finest occupied level.
    pub fn min_spacing(&self) -> f64 {
        let h = self.spacing(self.finest_level());
        h[0].min(h[1]).min(h[2])
    }

    pub fn geometry(&self, c: &CellIndex) -> CellGeometry {
        let h = self.spacing(c.level);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        let mut center = [0.0; 3];
        for a in 0..3 {
            lo[a] = self.domain.lo[a] + c.i[a] as f64 * h[a];
            hi[a] = self.domain.lo[a] + (c.i[a] + 1) as f64 * h[a];
            center[a] = self.domain.lo[a] + (c.i[a] as f64 + 0.5) * h[a];
        }
        CellGeometry { lo, hi, center, spacing: h }
    }

    pub fn location(&self, c: &CellIndex) -> Location {
        Location {
            level: c.level,
            index: c.i,
            center: self.geometry(c).center,
        }
    }

    /// Number of leaves as a percentage of the uniform finest-level cell count.
    pub fn leaf_fraction(&self) -> f64 {
        100.0 * self.leaves.len() as f64 / (1u64 << (3 * self.max_level as u32)) as f64
    }

    /// Replaces a leaf by eight child leaves with the given averages.
    pub(crate) fn split(&mut self, c: CellIndex, children: [ConservedState; 8]) {
        for (k, s) in children.iter().enumerate() {
            self.levels[c.level as usize + 1].insert(c.child(k).key(), Node::leaf(*s));
        }
        let node = self.levels[c.level as usize].get_mut(&c.key()).unwrap();
        node.internal = true;
        node.slot = u32::MAX;
    }

    /// Recomputes every internal average as the mean of its children, finest first.
    pub fn restrict_all(&mut self) {
        for l in (0..self.max_level as usize).rev() {
            let (coarse, fine) = self.levels.split_at_mut(l + 1);
            let fine = &fine[0];
            for (&k, node) in coarse[l].iter_mut() {
                if node.internal {
                    let c = CellIndex::new(l as u8, unpack(k));
                    let mut kids = [ConservedState::ZERO; 8];
                    for (ch, kid) in kids.iter_mut().enumerate() {
                        *kid = fine[&c.child(ch).key()].state;
                    }
                    node.state = project(&kids);
                }
            }
        }
    }

    /// Renumbers leaves in (level, key) order.
    pub(crate) fn reindex(&mut self) {
        let mut leaves: Vec<CellIndex> = Vec::new();
        for (l, map) in self.levels.iter().enumerate() {
            let mut keys: Vec<Key> = map.iter().filter(|(_, n)| !n.internal).map(|(&k, _)| k).collect();
            keys.sort_unstable();
            leaves.extend(keys.into_iter().map(|k| CellIndex::new(l as u8, unpack(k))));
        }
        for (slot, c) in leaves.iter().enumerate() {
            self.levels[c.level as usize].get_mut(&c.key()).unwrap().slot = slot as u32;
        }
        self.leaves = leaves;
    }

    /// Sum of leaf volumes relative to the domain volume, minus one.
    pub fn tiling_defect(&self) -> f64 {
        let v: f64 = self.leaves.iter().map(|c| self.geometry(c).volume()).sum();
        v / self.domain.volume() - 1.0
    }

    /// Checks that leaves sharing a face, edge or corner differ by at most one level.
    pub fn check_grading(&self) -> Result<()> {
        for l in 1..self.max_level as usize {
            for (&k, node) in &self.levels[l] {
                if !node.internal {
                    continue;
                }
                // an internal node needs all neighbours present at its own level
                let p = unpack(k);
                for off in neighbor_offsets() {
                    let q = [p[0] as i64 + off[0], p[1] as i64 + off[1], p[2] as i64 + off[2]];
                    if let Some(q) = self.boundary.neighbor(l as u8, q) {
                        if !self.levels[l].contains_key(&pack(q)) {
                            return Err(Error::Structure(format!(
                                "grading violated next to level {l} cell {p:?}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Volume integral of each conserved variable over the leaves, summed in slot order.
    pub fn totals(&self) -> ConservedState {
        let mut sum = ConservedState::ZERO;
        for c in &self.leaves {
            let v = self.geometry(c).volume();
            sum += self.levels[c.level as usize][&c.key()].state * v;
        }
        sum
    }
}

/// The 26 offsets of a 3x3x3 neighbourhood without the centre.
pub(crate) fn neighbor_offsets() -> impl Iterator<Item = [i64; 3]> {
    neighborhood_offsets().filter(|o| *o != [0, 0, 0])
}

/// The 27 offsets of a 3x3x3 neighbourhood, x fastest.
pub(crate) fn neighborhood_offsets() -> impl Iterator<Item = [i64; 3]> {
    (0..27).map(|n| [(n % 3) as i64 - 1, ((n / 3) % 3) as i64 - 1, (n / 9) as i64 - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::cube(-0.5, 0.5).unwrap()
    }

    #[test]
    fn pack_round_trip() {
        for i in [[0, 0, 0], [1, 2, 3], [(1 << 20) - 1, 7, (1 << 20) - 1]] {
            assert_eq!(unpack(pack(i)), i);
        }
    }

    #[test]
    fn parent_child_relations() {
        let c = CellIndex::new(3, [5, 2, 7]);
        assert_eq!(c.parent().unwrap(), CellIndex::new(2, [2, 1, 3]));
        for k in 0..8 {
            assert_eq!(c.child(k).parent().unwrap(), c);
            assert_eq!(c.child(k).child_number(), k);
        }
        assert!(CellIndex::new(0, [0, 0, 0]).parent().is_none());
        assert!(!CellIndex::new(2, [4, 0, 0]).is_valid());
    }

    #[test]
    fn boundary_resolution() {
        assert_eq!(Boundary::ZeroGradient.resolve(2, [-2, 4, 1]), [0, 3, 1]);
        assert_eq!(Boundary::Periodic.resolve(2, [-1, 4, 5]), [3, 0, 1]);
        assert!(Boundary::ZeroGradient.neighbor(2, [-1, 0, 0]).is_none());
        assert_eq!(Boundary::Periodic.neighbor(2, [-1, 0, 0]), Some([3, 0, 0]));
    }

    #[test]
    fn uniform_mesh_tiles_and_projects() {
        let m = AdaptiveMesh::uniform(unit(), 3, Boundary::ZeroGradient, 2, |g| {
            let mut s = ConservedState::ZERO;
            s[0] = 1.0 + g.center[0];
            s
        })
        .unwrap();
        assert_eq!(m.leaf_count(), 64);
        assert!(m.tiling_defect().abs() < 1e-13);
        assert!((m.get(&CellIndex::new(0, [0, 0, 0])).unwrap().state[0] - 1.0).abs() < 1e-15);
        assert!(m.check_grading().is_ok());
        assert!((m.leaf_fraction() - 100.0 * 64.0 / 512.0).abs() < 1e-12);
    }

    #[test]
    fn from_leaves_detects_holes() {
        let leaves = (0..7).map(|c| (CellIndex::new(0, [0, 0, 0]).child(c), ConservedState::ZERO));
        assert!(AdaptiveMesh::from_leaves(unit(), 2, Boundary::ZeroGradient, leaves).is_err());
    }

    #[test]
    fn grading_violation_is_detected() {
        let mut m = AdaptiveMesh::uniform(unit(), 3, Boundary::ZeroGradient, 1, |_| ConservedState::ZERO).unwrap();
        let c = CellIndex::new(1, [0, 0, 0]);
        m.split(c, [ConservedState::ZERO; 8]);
        m.split(c.child(7), [ConservedState::ZERO; 8]);
        m.reindex();
        assert!(m.check_grading().is_err());
    }
}
