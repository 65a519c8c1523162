//! Cell-average multiresolution: projection, prediction, details and the
//! level-by-level transform between a tree of averages and its detail sequence.

use rustc_hash::FxHashMap;

use super::ghost::ValueCache;
use super::{unpack, AdaptiveMesh, Boundary, CellIndex, Domain, Key};
use crate::error::{Error, Result};
use crate::state::ConservedState;

/// Mean of eight equal-volume children.
pub fn project(children: &[ConservedState; 8]) -> ConservedState {
    let mut sum = children[0];
    for c in &children[1..] {
        sum += *c;
    }
    sum * 0.125
}

/// Predicts the eight child averages of the centre cell of a 3x3x3 coarse
/// neighbourhood (index `(dz+1)*9 + (dy+1)*3 + (dx+1)`), one axis at a time with
/// the second-order cell-average interpolant `u0 ± (u+ - u-)/8`.
pub fn predict(nb: &[ConservedState; 27]) -> [ConservedState; 8] {
    // x pass: 9 lines of three values -> two halves each
    let mut px = [[ConservedState::ZERO; 2]; 9];
    for (line, out) in px.iter_mut().enumerate() {
        let m = nb[3 * line];
        let c = nb[3 * line + 1];
        let p = nb[3 * line + 2];
        let s = (p - m) * 0.125;
        out[0] = c - s;
        out[1] = c + s;
    }
    // y pass: for each z layer and x half
    let mut pxy = [[[ConservedState::ZERO; 2]; 2]; 3];
    for z in 0..3 {
        for a in 0..2 {
            let m = px[3 * z][a];
            let c = px[3 * z + 1][a];
            let p = px[3 * z + 2][a];
            let s = (p - m) * 0.125;
            pxy[z][0][a] = c - s;
            pxy[z][1][a] = c + s;
        }
    }
    let mut out = [ConservedState::ZERO; 8];
    for b in 0..2 {
        for a in 0..2 {
            let m = pxy[0][b][a];
            let c = pxy[1][b][a];
            let p = pxy[2][b][a];
            let s = (p - m) * 0.125;
            out[a | (b << 1)] = c - s;
            out[a | (b << 1) | 4] = c + s;
        }
    }
    out
}

/// Prediction errors of the first seven children; the eighth follows from the
/// projection constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailSet(pub [ConservedState; 7]);

impl DetailSet {
    pub const ZERO: DetailSet = DetailSet([ConservedState::ZERO; 7]);

    /// Largest magnitude of variable `v` over the seven coefficients.
    pub fn max_abs(&self, v: usize) -> f64 {
        self.0.iter().fold(0.0, |m, d| m.max(d[v].abs()))
    }
}

pub fn compute_details(nb: &[ConservedState; 27], children: &[ConservedState; 8]) -> DetailSet {
    let pred = predict(nb);
    let mut d = [ConservedState::ZERO; 7];
    for c in 0..7 {
        d[c] = children[c] - pred[c];
    }
    DetailSet(d)
}

pub fn reconstruct_children(nb: &[ConservedState; 27], details: &DetailSet) -> [ConservedState; 8] {
    let mut out = predict(nb);
    let mut sum = ConservedState::ZERO;
    for c in 0..7 {
        out[c] += details.0[c];
        sum += details.0[c];
    }
    out[7] = out[7] - sum;
    out
}

/// Root average plus, for each level `l < L`, the details of every internal node at `l`.
#[derive(Debug, Clone)]
pub struct MrDecomposition {
    pub domain: Domain,
    pub max_level: u8,
    pub boundary: Boundary,
    pub root: ConservedState,
    pub details: Vec<FxHashMap<Key, DetailSet>>,
}

impl MrDecomposition {
    pub fn detail_count(&self) -> usize {
        self.details.iter().map(|d| d.len()).sum()
    }

    /// True when node `key` at `level` has no refined children.
    pub(crate) fn children_are_leaves(&self, level: u8, key: Key) -> bool {
        let l = level as usize + 1;
        if l >= self.details.len() {
            return true;
        }
        let c = CellIndex::new(level, unpack(key));
        (0..8).all(|k| !self.details[l].contains_key(&c.child(k).key()))
    }
}

/// Decomposes a consistent tree into its root average and details.
pub fn mr_transform(mesh: &AdaptiveMesh) -> MrDecomposition {
    let mut details = vec![FxHashMap::default(); mesh.max_level() as usize];
    let mut cache = ValueCache::default();
    for l in 0..mesh.max_level() {
        let mut keys: Vec<Key> = mesh.level_nodes(l).filter(|(_, n)| n.internal).map(|(c, _)| c.key()).collect();
        keys.sort_unstable();
        for k in keys {
            let c = CellIndex::new(l, unpack(k));
            let nb = cache.neighborhood(mesh, &c);
            let mut kids = [ConservedState::ZERO; 8];
            for (ch, kid) in kids.iter_mut().enumerate() {
                *kid = mesh.get(&c.child(ch)).expect("internal node without children").state;
            }
            details[l as usize].insert(k, compute_details(&nb, &kids));
        }
    }
    MrDecomposition {
        domain: *mesh.domain(),
        max_level: mesh.max_level(),
        boundary: mesh.boundary(),
        root: mesh.node(0, 0).expect("mesh without root").state,
        details,
    }
}

/// Rebuilds the tree top-down: every node with details is split and its children set
/// to prediction plus detail.
pub fn inverse_mr_transform(dec: &MrDecomposition) -> Result<AdaptiveMesh> {
    let mut mesh = AdaptiveMesh::root(dec.domain, dec.max_level, dec.boundary, dec.root)?;
    for l in 0..dec.max_level {
        let mut keys: Vec<Key> = dec.details[l as usize].keys().copied().collect();
        keys.sort_unstable();
        let mut cache = ValueCache::default();
        let mut new_children = Vec::with_capacity(keys.len());
        for k in keys {
            let c = CellIndex::new(l, unpack(k));
            match mesh.get(&c) {
                Some(n) if !n.internal => {}
                _ => return Err(Error::Structure(format!("details for {c:?} without a leaf to refine"))),
            }
            let nb = cache.neighborhood(&mesh, &c);
            new_children.push((c, reconstruct_children(&nb, &dec.details[l as usize][&k])));
        }
        for (c, kids) in new_children {
            mesh.split(c, kids);
        }
    }
    mesh.reindex();
    Ok(mesh)
}
