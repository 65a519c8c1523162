//! Level-dependent thresholding of details and the resulting mesh adaptation.

use rustc_hash::{FxHashMap, FxHashSet};

use super::multires::{inverse_mr_transform, mr_transform, DetailSet, MrDecomposition};
use super::{neighbor_offsets, neighborhood_offsets, pack, unpack, AdaptiveMesh, CellIndex, Key};
use crate::error::{Error, Result};
use crate::state::{ConservedState, MAG, MOM, NVARS, PSI};

/// How details of different variables are made commensurate before comparison
/// with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariableScaling {
    /// Each variable divided by its own largest magnitude.
    #[default]
    PerVariable,
    /// Like `PerVariable`, but momentum and field components share the largest
    /// component magnitude of their vector.
    PerGroup,
    /// Raw details.
    None,
}

impl VariableScaling {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per-variable" => Some(VariableScaling::PerVariable),
            "per-group" => Some(VariableScaling::PerGroup),
            "none" => Some(VariableScaling::None),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VariableScaling::PerVariable => "per-variable",
            VariableScaling::PerGroup => "per-group",
            VariableScaling::None => "none",
        }
    }

    /// Scale per conserved variable from the largest magnitudes over `states`.
    /// Variables that vanish everywhere get scale 1.
    pub fn scales<'a>(self, states: impl IntoIterator<Item = &'a ConservedState>) -> [f64; NVARS] {
        let mut max = [0.0f64; NVARS];
        for s in states {
            for v in 0..NVARS {
                max[v] = max[v].max(s[v].abs());
            }
        }
        match self {
            VariableScaling::None => return [1.0; NVARS],
            VariableScaling::PerVariable => {}
            VariableScaling::PerGroup => {
                for base in [MOM, MAG] {
                    let m = max[base].max(max[base + 1]).max(max[base + 2]);
                    max[base..base + 3].fill(m);
                }
            }
        }
        max.map(|m| if m > 0.0 { m } else { 1.0 })
    }
}

/// Parameters of the level-dependent threshold `eps0 / |domain| * 2^(3(l - L + 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPolicy {
    pub eps0: f64,
    pub volume: f64,
    pub max_level: u8,
    /// Divisor applied to each variable's details; the cleaning scalar never
    /// takes part in the decision.
    pub scales: [f64; NVARS],
}

impl ThresholdPolicy {
    pub fn new(eps0: f64, volume: f64, max_level: u8) -> Result<Self> {
        if !(eps0 >= 0.0) || !eps0.is_finite() {
            return Err(Error::config("eps0", format!("must be a finite value >= 0, got {eps0}")));
        }
        if !(volume > 0.0) {
            return Err(Error::Domain(format!("domain volume must be positive, got {volume}")));
        }
        Ok(ThresholdPolicy {
            eps0,
            volume,
            max_level,
            scales: [1.0; NVARS],
        })
    }

    pub fn with_scales(mut self, scales: [f64; NVARS]) -> Self {
        self.scales = scales;
        self
    }

    /// Largest scaled detail of one sibling group over all variables except ψ.
    pub fn significance(&self, d: &DetailSet) -> f64 {
        let mut m = 0.0f64;
        for v in (0..NVARS).filter(|&v| v != PSI) {
            m = m.max(d.max_abs(v) / self.scales[v]);
        }
        m
    }
}

/// `eps0 / |domain| * 2^(3(level - L + 1))` for `0 <= level < L`.
pub fn threshold_value(policy: &ThresholdPolicy, level: u8) -> Result<f64> {
    if level >= policy.max_level {
        return Err(Error::Domain(format!(
            "threshold level {level} outside 0..{}",
            policy.max_level
        )));
    }
    let e = 3 * (level as i32 - policy.max_level as i32 + 1);
    Ok(policy.eps0 / policy.volume * 2f64.powi(e))
}

/// Keeps the details of significant sibling groups, a one-cell safety zone around
/// them and one extra level below significant groups at the current finest
/// refinement, then closes the set so the resulting tree is graded. Details of newly
/// created nodes are zero.
pub fn threshold(dec: &MrDecomposition, policy: &ThresholdPolicy) -> Result<MrDecomposition> {
    let levels = dec.max_level as usize;
    let b = dec.boundary;
    let mut keep: Vec<FxHashSet<Key>> = vec![FxHashSet::default(); levels];
    for l in 0..levels {
        let eps = threshold_value(policy, l as u8)?;
        let mut keys: Vec<&Key> = dec.details[l].keys().collect();
        keys.sort_unstable();
        for &k in keys {
            if policy.significance(&dec.details[l][&k]) < eps {
                continue;
            }
            keep[l].insert(k);
            let p = unpack(k);
            for o in neighbor_offsets() {
                if let Some(q) = b.neighbor(l as u8, offset(p, o)) {
                    keep[l].insert(pack(q));
                }
            }
            if l + 1 < levels && dec.children_are_leaves(l as u8, k) {
                let c = CellIndex::new(l as u8, p);
                for ch in 0..8 {
                    keep[l + 1].insert(c.child(ch).key());
                }
            }
        }
    }
    // grading closure, finest first: the parents of all neighbours of a kept node
    // must be kept one level up
    for l in (1..levels).rev() {
        let (coarse, fine) = keep.split_at_mut(l);
        let parents = &mut coarse[l - 1];
        for &k in fine[0].iter() {
            let p = unpack(k);
            for o in neighborhood_offsets() {
                if let Some(q) = b.neighbor(l as u8, offset(p, o)) {
                    parents.insert(pack([q[0] >> 1, q[1] >> 1, q[2] >> 1]));
                }
            }
        }
    }
    let details = keep
        .into_iter()
        .enumerate()
        .map(|(l, set)| {
            set.into_iter()
                .map(|k| (k, dec.details[l].get(&k).copied().unwrap_or(DetailSet::ZERO)))
                .collect::<FxHashMap<Key, DetailSet>>()
        })
        .collect();
    Ok(MrDecomposition {
        domain: dec.domain,
        max_level: dec.max_level,
        boundary: dec.boundary,
        root: dec.root,
        details,
    })
}

/// Transform, threshold, inverse transform.
pub fn adapt(mesh: &AdaptiveMesh, policy: &ThresholdPolicy) -> Result<AdaptiveMesh> {
    inverse_mr_transform(&threshold(&mr_transform(mesh), policy)?)
}

#[inline]
fn offset(p: [u32; 3], o: [i64; 3]) -> [i64; 3] {
    [p[0] as i64 + o[0], p[1] as i64 + o[1], p[2] as i64 + o[2]]
}
