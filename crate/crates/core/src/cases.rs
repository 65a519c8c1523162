//! Benchmark initial data, boundary handling, reference profiles, error norms and
//! the verification checks built on them.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::StepReport;
use crate::mesh::{
    adapt, prolong_to_level, AdaptiveMesh, Boundary, CellGeometry, CellIndex, Domain, ThresholdPolicy, ValueCache,
    VariableScaling,
};
use crate::state::{
    conserved_to_primitive_unchecked, fast_speed, primitive_to_conserved, ConservedState, Direction, GasGamma,
    PrimitiveState,
};

/// Physical variables compared against references, in this order.
pub const VARIABLE_NAMES: [&str; 8] = ["rho", "p", "ux", "uy", "uz", "Bx", "By", "Bz"];

/// Cell-averaged initial data.
pub trait InitialCondition: Sync {
    fn domain(&self) -> Domain;
    fn cell_average(&self, cell: &CellGeometry, gamma: GasGamma) -> ConservedState;
}

/// Which value of the out-of-plane field to use in the shock-tube data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BzVariant {
    /// `2/sqrt(4 pi)` on both sides, as in the standard form of this test.
    #[default]
    Literature,
    /// `2 sqrt(2 pi)` on both sides, an alternative value of the same test.
    AsPrinted,
}

impl BzVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "literature" => Some(BzVariant::Literature),
            "as-printed" => Some(BzVariant::AsPrinted),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BzVariant::Literature => "literature",
            BzVariant::AsPrinted => "as-printed",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            BzVariant::Literature => 2.0 / (4.0 * std::f64::consts::PI).sqrt(),
            BzVariant::AsPrinted => 2.0 * (2.0 * std::f64::consts::PI).sqrt(),
        }
    }
}

/// Two constant states separated by a plane normal to `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannSpec1D {
    /// States in the frame of the run axis (`u[axis]` is the normal velocity).
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub axis: Direction,
    pub interface: f64,
    pub domain: Domain,
}

impl RiemannSpec1D {
    /// The magnetized shock tube on `[-0.5, 0.5]^3` run along `axis`.
    pub fn shock_tube(variant: BzVariant, axis: Direction) -> Self {
        let s = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
        let bz = variant.value();
        let left = PrimitiveState::new(1.08, 0.95, [1.2, 0.01, 0.5], [2.0 * s, 3.6 * s, bz]);
        let right = PrimitiveState::new(1.0, 1.0, [0.0, 0.0, 0.0], [2.0 * s, 4.0 * s, bz]);
        RiemannSpec1D {
            left: left.rotate_axes(axis.axis()),
            right: right.rotate_axes(axis.axis()),
            axis,
            interface: 0.0,
            domain: Domain::cube(-0.5, 0.5).expect("unit cube"),
        }
    }

    pub fn state_at(&self, x: [f64; 3]) -> PrimitiveState {
        if x[self.axis.axis()] <= self.interface {
            self.left
        } else {
            self.right
        }
    }

    /// Largest `|u_n| + cf` of the two states along the run axis.
    pub fn max_signal_speed(&self, gamma: GasGamma) -> f64 {
        let n = self.axis.axis();
        [self.left, self.right]
            .iter()
            .map(|w| w.u[n].abs() + fast_speed(w, n, gamma.value()))
            .fold(0.0, f64::max)
    }

    /// Whether waves leaving the interface at the initial signal speeds reach a wall
    /// before `t`.
    pub fn waves_reach_walls(&self, gamma: GasGamma, t: f64) -> bool {
        let a = self.axis.axis();
        let room = (self.interface - self.domain.lo[a]).min(self.domain.hi[a] - self.interface);
        self.max_signal_speed(gamma) * t >= room
    }
}

impl InitialCondition for RiemannSpec1D {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn cell_average(&self, cell: &CellGeometry, gamma: GasGamma) -> ConservedState {
        let a = self.axis.axis();
        let f = ((self.interface - cell.lo[a]) / (cell.hi[a] - cell.lo[a])).clamp(0.0, 1.0);
        mix(&[(f, &self.left), (1.0 - f, &self.right)], gamma)
    }
}

/// Plane of the four-quadrant problem; the data are constant along the third axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    XY,
    YZ,
    ZX,
}

impl Plane {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "xy" => Some(Plane::XY),
            "yz" => Some(Plane::YZ),
            "zx" => Some(Plane::ZX),
            _ => None,
        }
    }

    /// Cyclic shift taking the xy problem to this plane.
    pub fn shift(self) -> usize {
        match self {
            Plane::XY => 0,
            Plane::YZ => 1,
            Plane::ZX => 2,
        }
    }

    pub fn axes(self) -> (usize, usize) {
        let s = self.shift();
        (s, (s + 1) % 3)
    }
}

/// Four constant quadrants in a plane, extruded along the remaining axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannSpec2D {
    /// `(a>=0, b>=0)`, `(a<0, b>0)`, `(a<=0, b<=0)`, `(a>0, b<0)`, tested in this order,
    /// with `(a, b)` the in-plane coordinates. Vector components are in the frame of
    /// the plane.
    pub quadrants: [PrimitiveState; 4],
    pub plane: Plane,
    pub domain: Domain,
}

impl RiemannSpec2D {
    /// The four-quadrant problem on `[-1, 1]^3`.
    pub fn quadrants(plane: Plane) -> Self {
        let q = [
            PrimitiveState::new(1.0304, 2.2874, [1.4127, -1.0146, -1.0691], [0.3501, 0.5078, 0.1576]),
            PrimitiveState::new(1.0000, 2.4323, [1.7500, -1.0000, 0.0000], [0.5642, 0.5078, 0.2539]),
            PrimitiveState::new(1.8887, 7.6110, [0.1236, -0.9224, 0.0388], [0.5642, 0.9830, 0.4915]),
            PrimitiveState::new(0.9308, 2.1583, [1.5639, -0.4977, 0.0618], [0.3501, 0.9830, 0.3050]),
        ];
        RiemannSpec2D {
            quadrants: q.map(|w| w.rotate_axes(plane.shift())),
            plane,
            domain: Domain::cube(-1.0, 1.0).expect("cube"),
        }
    }

    pub fn quadrant_of(a: f64, b: f64) -> usize {
        if a >= 0.0 && b >= 0.0 {
            0
        } else if a < 0.0 && b > 0.0 {
            1
        } else if a <= 0.0 && b <= 0.0 {
            2
        } else {
            3
        }
    }

    pub fn state_at(&self, x: [f64; 3]) -> PrimitiveState {
        let (ia, ib) = self.plane.axes();
        self.quadrants[Self::quadrant_of(x[ia], x[ib])]
    }
}

impl InitialCondition for RiemannSpec2D {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn cell_average(&self, cell: &CellGeometry, gamma: GasGamma) -> ConservedState {
        let (ia, ib) = self.plane.axes();
        let fa = (-cell.lo[ia] / (cell.hi[ia] - cell.lo[ia])).clamp(0.0, 1.0);
        let fb = (-cell.lo[ib] / (cell.hi[ib] - cell.lo[ib])).clamp(0.0, 1.0);
        if (fa == 0.0 || fa == 1.0) && (fb == 0.0 || fb == 1.0) {
            // not cut: the first-match rule at the centre
            let w = self.state_at(cell.center);
            return primitive_to_conserved(&w, gamma).expect("valid quadrant state");
        }
        let q = &self.quadrants;
        mix(
            &[
                ((1.0 - fa) * (1.0 - fb), &q[0]),
                (fa * (1.0 - fb), &q[1]),
                (fa * fb, &q[2]),
                ((1.0 - fa) * fb, &q[3]),
            ],
            gamma,
        )
    }
}

/// Entropy wave: `rho = 1 + amplitude * sin(2 pi k.x)` advected with constant velocity,
/// constant pressure and field, periodic unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothAdvection {
    pub amplitude: f64,
    /// Integer wave numbers per axis.
    pub wave: [f64; 3],
    pub velocity: [f64; 3],
    pub pressure: f64,
    pub field: [f64; 3],
    /// Time at which the exact averages are evaluated.
    pub time: f64,
}

impl Default for SmoothAdvection {
    fn default() -> Self {
        SmoothAdvection {
            amplitude: 0.2,
            wave: [1.0, 1.0, 0.0],
            velocity: [1.0, 0.5, 0.25],
            pressure: 1.0,
            field: [0.3, 0.2, 0.1],
            time: 0.0,
        }
    }
}

impl SmoothAdvection {
    pub fn at_time(&self, t: f64) -> Self {
        SmoothAdvection { time: t, ..self.clone() }
    }

    /// Exact average of `rho` over a box at `self.time`.
    pub fn density_average(&self, cell: &CellGeometry) -> f64 {
        // average of exp(i 2 pi k.(x - u t)) factorises over the axes
        let (mut re, mut im) = (1.0, 0.0);
        for a in 0..3 {
            let k = 2.0 * std::f64::consts::PI * self.wave[a];
            let shift = self.velocity[a] * self.time;
            let (lo, hi) = (cell.lo[a] - shift, cell.hi[a] - shift);
            let (fr, fi) = if k == 0.0 {
                (1.0, 0.0)
            } else {
                // (e^{ik hi} - e^{ik lo}) / (i k (hi - lo))
                let w = k * (hi - lo);
                (((k * hi).sin() - (k * lo).sin()) / w, ((k * lo).cos() - (k * hi).cos()) / w)
            };
            let r = re * fr - im * fi;
            im = re * fi + im * fr;
            re = r;
        }
        1.0 + self.amplitude * im
    }
}

impl InitialCondition for SmoothAdvection {
    fn domain(&self) -> Domain {
        Domain::cube(0.0, 1.0).expect("unit cube")
    }

    fn cell_average(&self, cell: &CellGeometry, gamma: GasGamma) -> ConservedState {
        let rho = self.density_average(cell);
        // momentum average is u * rho average; kinetic energy likewise since u is constant
        let w = PrimitiveState::new(rho, self.pressure, self.velocity, self.field);
        primitive_to_conserved(&w, gamma).expect("valid smooth state")
    }
}

fn mix(parts: &[(f64, &PrimitiveState)], gamma: GasGamma) -> ConservedState {
    let mut out = ConservedState::ZERO;
    for (f, w) in parts {
        if *f > 0.0 {
            out += primitive_to_conserved(w, gamma).expect("valid initial state") * *f;
        }
    }
    out
}

/// Sets every leaf to the exact cell average of `ic`.
pub fn initialize<I: InitialCondition + ?Sized>(mesh: &mut AdaptiveMesh, ic: &I, gamma: GasGamma) {
    mesh.map_leaves(|_, g, _| ic.cell_average(g, gamma));
}

pub fn init_riemann_1d(spec: &RiemannSpec1D, mesh: &mut AdaptiveMesh, gamma: GasGamma) {
    initialize(mesh, spec, gamma)
}

pub fn init_riemann_2d(spec: &RiemannSpec2D, mesh: &mut AdaptiveMesh, gamma: GasGamma) {
    initialize(mesh, spec, gamma)
}

/// Builds the initial adaptive mesh: starts from a uniform mesh at `start_level`,
/// then alternates adaptation and exact re-initialisation until the leaf set no longer
/// changes. With `eps0 = None` the mesh is uniform at the maximum level. Returns the
/// mesh and the threshold policy with its variable scales fixed from the initial data.
pub fn build_initial_mesh<I: InitialCondition + ?Sized>(
    ic: &I,
    gamma: GasGamma,
    max_level: u8,
    boundary: Boundary,
    eps0: Option<f64>,
    scaling: VariableScaling,
    start_level: u8,
) -> Result<(AdaptiveMesh, Option<ThresholdPolicy>)> {
    let domain = ic.domain();
    let f = |g: &CellGeometry| ic.cell_average(g, gamma);
    let Some(eps0) = eps0 else {
        return Ok((AdaptiveMesh::uniform(domain, max_level, boundary, max_level, f)?, None));
    };
    let start = start_level.min(max_level);
    let mut mesh = AdaptiveMesh::uniform(domain, max_level, boundary, start, f)?;
    let states = mesh.leaf_states();
    let policy = ThresholdPolicy::new(eps0, domain.volume(), max_level)?.with_scales(scaling.scales(&states));
    for _ in 0..(max_level as usize + 4) {
        let mut next = adapt(&mesh, &policy)?;
        initialize(&mut next, ic, gamma);
        let done = next.leaves() == mesh.leaves();
        mesh = next;
        if done {
            break;
        }
    }
    Ok((mesh, Some(policy)))
}

/// Norms of one variable's error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableError {
    pub name: &'static str,
    /// Volume-weighted mean absolute error.
    pub l1: f64,
    /// Volume-weighted mean squared error (not square-rooted).
    pub l2: f64,
    pub linf: f64,
    /// Square root of `l2`.
    pub l2_rms: f64,
    /// `sqrt(sum e^2) / N` over the samples.
    pub l2_count_root: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<VariableError>,
    pub samples: usize,
}

impl ErrorReport {
    pub fn get(&self, name: &str) -> Option<&VariableError> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Table rows `variable,L1,L2,Linf` with the default L2 normalisation.
    pub fn to_csv(&self) -> String {
        self.table_csv(L2Norm::default())
    }

    pub fn table_csv(&self, l2: L2Norm) -> String {
        let mut s = String::from("variable,L1,L2,Linf\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.4e},{:.4e},{:.4e}\n", r.name, r.l1, l2.of(r), r.linf));
        }
        s
    }

    /// All normalisations side by side.
    pub fn variants_csv(&self) -> String {
        let mut s = String::from("variable,L1_volume_mean,L2_mean_square,L2_rms,L2_root_sum_over_n,Linf\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.4e},{:.4e},{:.4e},{:.4e},{:.4e}\n",
                r.name, r.l1, r.l2, r.l2_rms, r.l2_count_root, r.linf
            ));
        }
        s
    }
}

/// Which normalisation of the L2 error goes into the error table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L2Norm {
    /// Volume-weighted mean of squares.
    MeanSquare,
    /// Square root of the mean of squares.
    Rms,
    /// `sqrt(sum e^2) / N`.
    #[default]
    CountRoot,
}

impl L2Norm {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean-square" => Some(L2Norm::MeanSquare),
            "rms" => Some(L2Norm::Rms),
            "count-root" => Some(L2Norm::CountRoot),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            L2Norm::MeanSquare => "mean-square",
            L2Norm::Rms => "rms",
            L2Norm::CountRoot => "count-root",
        }
    }

    pub fn of(self, e: &VariableError) -> f64 {
        match self {
            L2Norm::MeanSquare => e.l2,
            L2Norm::Rms => e.l2_rms,
            L2Norm::CountRoot => e.l2_count_root,
        }
    }
}

/// Norms from per-sample differences and weights.
pub fn norms_from_differences(diffs: &[[f64; 8]], weights: &[f64]) -> ErrorReport {
    assert_eq!(diffs.len(), weights.len());
    let wsum: f64 = weights.iter().sum();
    let n = diffs.len() as f64;
    let rows = (0..8)
        .map(|v| {
            let (mut l1, mut l2, mut sq, mut linf) = (0.0, 0.0, 0.0, 0.0f64);
            for (d, w) in diffs.iter().zip(weights) {
                let e = d[v].abs();
                l1 += w * e;
                l2 += w * e * e;
                sq += e * e;
                linf = linf.max(e);
            }
            let l2 = l2 / wsum;
            VariableError {
                name: VARIABLE_NAMES[v],
                l1: l1 / wsum,
                l2,
                linf,
                l2_rms: l2.sqrt(),
                l2_count_root: sq.sqrt() / n,
            }
        })
        .collect();
    ErrorReport {
        rows,
        samples: diffs.len(),
    }
}

/// Where the solution is sampled for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every cell of the uniform grid at the given level.
    FullGrid(u8),
    /// The row of cells at the given level along `axis` through the domain centre.
    Centerline(u8, Direction),
}

/// A sampled cell: centre, volume and `[rho, p, ux, uy, uz, Bx, By, Bz]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub center: [f64; 3],
    pub volume: f64,
    pub values: [f64; 8],
}

fn physical(u: &ConservedState, gamma: GasGamma) -> [f64; 8] {
    let w = conserved_to_primitive_unchecked(u, gamma);
    [w.rho, w.p, w.u[0], w.u[1], w.u[2], w.b[0], w.b[1], w.b[2]]
}

/// Prolongs the tree to the sampling level and converts to physical variables.
pub fn sample_mesh(mesh: &AdaptiveMesh, gamma: GasGamma, sampling: Sampling) -> Vec<Sample> {
    match sampling {
        Sampling::FullGrid(level) => {
            let grid = prolong_to_level(mesh, level);
            let n = grid.n;
            grid.data
                .par_iter()
                .enumerate()
                .map(|(idx, u)| {
                    let c = CellIndex::new(level, [(idx % n) as u32, ((idx / n) % n) as u32, (idx / (n * n)) as u32]);
                    let g = mesh.geometry(&c);
                    Sample {
                        center: g.center,
                        volume: g.volume(),
                        values: physical(u, gamma),
                    }
                })
                .collect()
        }
        Sampling::Centerline(level, axis) => {
            let a = axis.axis();
            let n = 1u32 << level;
            let mut cache = ValueCache::default();
            (0..n)
                .map(|i| {
                    let mut p = [n / 2; 3];
                    p[a] = i;
                    let c = CellIndex::new(level, p);
                    let g = mesh.geometry(&c);
                    Sample {
                        center: g.center,
                        volume: g.volume(),
                        values: physical(&cache.value(mesh, level, p), gamma),
                    }
                })
                .collect()
        }
    }
}

/// Where a reference came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceSource {
    Exact1D,
    ExternalCode,
    /// High-resolution run of this code.
    Numerical,
}

impl ReferenceSource {
    fn parse(s: &str) -> Self {
        match s {
            "exact-1D" | "exact-1d" => ReferenceSource::Exact1D,
            "numerical" | "numerical-1D" | "numerical-1d" => ReferenceSource::Numerical,
            _ => ReferenceSource::ExternalCode,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ReferenceSource::Exact1D => "exact-1D",
            ReferenceSource::ExternalCode => "external-code",
            ReferenceSource::Numerical => "numerical-1D",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ReferenceData {
    /// Profile along the run axis; vector components in the frame of that axis.
    Profile { xs: Vec<f64>, values: Vec<[f64; 8]> },
    /// Tensor grid of cell centres, x fastest.
    Grid { axes: [Vec<f64>; 3], values: Vec<[f64; 8]> },
}

/// Reference data to compare against.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub source: ReferenceSource,
    data: ReferenceData,
}

impl ReferenceSolution {
    pub fn profile(source: ReferenceSource, xs: Vec<f64>, values: Vec<[f64; 8]>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(Error::Parse {
                line: 0,
                message: "profile needs at least two points with matching values".into(),
            });
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse {
                line: 0,
                message: "profile coordinates are not strictly increasing".into(),
            });
        }
        Ok(ReferenceSolution {
            source,
            data: ReferenceData::Profile { xs, values },
        })
    }

    pub fn is_profile(&self) -> bool {
        matches!(self.data, ReferenceData::Profile { .. })
    }

    /// Reference values at a point. Profiles are read along `axis` with the vector
    /// components rotated from the profile frame into the frame of `axis`.
    pub fn sample(&self, x: [f64; 3], axis: Direction) -> Result<[f64; 8]> {
        match &self.data {
            ReferenceData::Profile { xs, values } => {
                let s = x[axis.axis()];
                let v = interpolate(xs, values, s)?;
                let shift = axis.axis();
                let mut out = v;
                for a in 0..3 {
                    out[2 + (a + shift) % 3] = v[2 + a];
                    out[5 + (a + shift) % 3] = v[5 + a];
                }
                Ok(out)
            }
            ReferenceData::Grid { axes, values } => {
                let mut idx = [0usize; 3];
                for a in 0..3 {
                    idx[a] = nearest(&axes[a], x[a])
                        .ok_or_else(|| Error::Coverage(format!("point {x:?} (axis {a})")))?;
                }
                let nx = axes[0].len();
                let ny = axes[1].len();
                Ok(values[(idx[2] * ny + idx[1]) * nx + idx[0]])
            }
        }
    }

    /// Writes a profile in the reference file format.
    pub fn write_profile(&self, path: &Path, header: &[String]) -> Result<()> {
        let ReferenceData::Profile { xs, values } = &self.data else {
            return Err(Error::Domain("only profiles can be written".into()));
        };
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut text = String::new();
        for h in header {
            text.push_str(&format!("# {h}\n"));
        }
        text.push_str(&format!("# source: {}\nx,{}\n", self.source.name(), VARIABLE_NAMES.join(",")));
        for (x, v) in xs.iter().zip(values) {
            text.push_str(&x.to_string());
            for c in v {
                text.push(',');
                text.push_str(&c.to_string());
            }
            text.push('\n');
        }
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn interpolate(xs: &[f64], values: &[[f64; 8]], s: f64) -> Result<[f64; 8]> {
    let n = xs.len();
    let tol_lo = 0.5 * (xs[1] - xs[0]) * (1.0 + 1e-9);
    let tol_hi = 0.5 * (xs[n - 1] - xs[n - 2]) * (1.0 + 1e-9);
    if s < xs[0] - tol_lo || s > xs[n - 1] + tol_hi {
        return Err(Error::Coverage(format!(
            "coordinate {s} (profile spans {} .. {})",
            xs[0],
            xs[n - 1]
        )));
    }
    if s <= xs[0] {
        return Ok(values[0]);
    }
    if s >= xs[n - 1] {
        return Ok(values[n - 1]);
    }
    let i = xs.partition_point(|&x| x <= s).max(1) - 1;
    let t = (s - xs[i]) / (xs[i + 1] - xs[i]);
    Ok(std::array::from_fn(|v| values[i][v] + t * (values[i + 1][v] - values[i][v])))
}

fn nearest(axis: &[f64], x: f64) -> Option<usize> {
    let n = axis.len();
    if n == 1 {
        return Some(0);
    }
    let i = axis.partition_point(|&a| a < x);
    let candidates = [i.saturating_sub(1), i.min(n - 1)];
    let best = *candidates
        .iter()
        .min_by(|&&a, &&b| (axis[a] - x).abs().total_cmp(&(axis[b] - x).abs()))?;
    let half = 0.5 * (axis[1] - axis[0]).abs() * (1.0 + 1e-9);
    ((axis[best] - x).abs() <= half).then_some(best)
}

/// Reads a reference file: `#` comments (`# source: <tag>` names the origin), a header
/// row naming the columns `x[,y[,z]],rho,p,ux,uy,uz,Bx,By,Bz` in any order, then one
/// comma-separated record per point. With only `x` the file is a profile along the
/// run axis; with `x,y,z` it is a full tensor grid.
pub fn load_reference(path: &Path) -> Result<ReferenceSolution> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut source = ReferenceSource::ExternalCode;
    let mut columns: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if let Some(tag) = c.trim().strip_prefix("source:") {
                source = ReferenceSource::parse(tag.trim());
            }
            continue;
        }
        if columns.is_none() {
            columns = Some(t.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let vals = t
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: n + 1,
                message: format!("bad number: {e}"),
            })?;
        rows.push((n + 1, vals));
    }
    let columns = columns.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing header row".into(),
    })?;
    let find = |name: &str| -> Result<usize> {
        columns.iter().position(|c| c == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let xi = find("x")?;
    let var_idx: Vec<usize> = VARIABLE_NAMES.iter().map(|v| find(v)).collect::<Result<_>>()?;
    let yi = columns.iter().position(|c| c == "y");
    let zi = columns.iter().position(|c| c == "z");
    for (line, r) in &rows {
        if r.len() != columns.len() {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {} fields, found {}", columns.len(), r.len()),
            });
        }
    }
    let vars = |r: &Vec<f64>| -> [f64; 8] { std::array::from_fn(|v| r[var_idx[v]]) };
    match (yi, zi) {
        (None, None) => {
            let xs = rows.iter().map(|(_, r)| r[xi]).collect();
            let values = rows.iter().map(|(_, r)| vars(r)).collect();
            ReferenceSolution::profile(source, xs, values)
        }
        (Some(yi), Some(zi)) => {
            let mut axes: [Vec<f64>; 3] = Default::default();
            for (a, ci) in [xi, yi, zi].into_iter().enumerate() {
                let mut v: Vec<f64> = rows.iter().map(|(_, r)| r[ci]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                axes[a] = v;
            }
            let (nx, ny, nz) = (axes[0].len(), axes[1].len(), axes[2].len());
            if nx * ny * nz != rows.len() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("{} records do not form a {nx}x{ny}x{nz} grid", rows.len()),
                });
            }
            let mut values = vec![[f64::NAN; 8]; rows.len()];
            for (_, r) in &rows {
                let i = axes[0].partition_point(|&a| a < r[xi]);
                let j = axes[1].partition_point(|&a| a < r[yi]);
                let k = axes[2].partition_point(|&a| a < r[zi]);
                values[(k * ny + j) * nx + i] = vars(r);
            }
            Ok(ReferenceSolution {
                source,
                data: ReferenceData::Grid { axes, values },
            })
        }
        _ => Err(Error::Parse {
            line: 1,
            message: "grid references need both `y` and `z` columns".into(),
        }),
    }
}

/// Norms of `samples - reference`, the reference read along `axis`.
pub fn error_norms(samples: &[Sample], reference: &ReferenceSolution, axis: Direction) -> Result<ErrorReport> {
    let diffs: Vec<[f64; 8]> = samples
        .iter()
        .map(|s| {
            let r = reference.sample(s.center, axis)?;
            Ok(std::array::from_fn(|v| s.values[v] - r[v]))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = samples.iter().map(|s| s.volume).collect();
    Ok(norms_from_differences(&diffs, &weights))
}

/// Norms of the difference of two samplings of the same grid.
pub fn error_norms_between(a: &[Sample], b: &[Sample]) -> Result<ErrorReport> {
    if a.len() != b.len() {
        return Err(Error::Structure(format!("sample counts differ: {} vs {}", a.len(), b.len())));
    }
    let diffs: Vec<[f64; 8]> = a
        .iter()
        .zip(b)
        .map(|(x, y)| std::array::from_fn(|v| x.values[v] - y.values[v]))
        .collect();
    let weights: Vec<f64> = a.iter().map(|s| s.volume).collect();
    Ok(norms_from_differences(&diffs, &weights))
}

/// Largest difference between run `a` and run `b`, where `b` is `a` with axes and vector
/// components rotated cyclically by `shift`. Both meshes must have the same shape
/// after the rotation.
pub fn permutation_check(a: &AdaptiveMesh, b: &AdaptiveMesh, shift: usize) -> Result<f64> {
    if a.leaf_count() != b.leaf_count() {
        return Err(Error::Structure(format!(
            "leaf counts differ: {} vs {}",
            a.leaf_count(),
            b.leaf_count()
        )));
    }
    let mut worst = 0.0f64;
    for (slot, c) in a.leaves().iter().enumerate() {
        let mut j = [0u32; 3];
        for ax in 0..3 {
            j[(ax + shift) % 3] = c.i[ax];
        }
        let cb = CellIndex::new(c.level, j);
        let nb = b
            .get(&cb)
            .filter(|n| !n.internal)
            .ok_or_else(|| Error::Structure(format!("no leaf {cb:?} in the permuted run")))?;
        let expected = a.leaf_state(slot).rotate_axes(shift);
        worst = worst.max((nb.state - expected).max_abs());
    }
    Ok(worst)
}

/// Mean and final leaf percentage over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionStats {
    pub mean: f64,
    pub last: f64,
    pub min: f64,
    pub max: f64,
}

pub fn compression_stats(reports: &[StepReport]) -> Result<CompressionStats> {
    if reports.is_empty() {
        return Err(Error::Domain("no step reports".into()));
    }
    let n = reports.len() as f64;
    let fr = reports.iter().map(|r| r.leaf_fraction);
    Ok(CompressionStats {
        mean: fr.clone().sum::<f64>() / n,
        last: reports.last().unwrap().leaf_fraction,
        min: fr.clone().fold(f64::INFINITY, f64::min),
        max: fr.fold(0.0, f64::max),
    })
}

/// High-resolution 1D run of the shock tube on a uniform grid of `n` cells, returned as
/// a profile of cell-centre values in the frame of the x axis.
pub fn numerical_reference(
    variant: BzVariant,
    gamma: GasGamma,
    nu: f64,
    alpha: f64,
    t_end: f64,
    n: usize,
) -> Result<ReferenceSolution> {
    let spec = RiemannSpec1D::shock_tube(variant, Direction::X);
    let mut grid = crate::uniform::UniformGrid::new([n, 1, 1], spec.domain, Boundary::ZeroGradient, |g| {
        spec.cell_average(g, gamma)
    })?;
    grid.run(t_end, nu, alpha, gamma, &crate::flux::SchemeOptions::default(), 10_000_000)?;
    let xs = (0..n).map(|i| grid.geometry([i, 0, 0]).center[0]).collect();
    let values = grid.cells.iter().map(|u| physical(u, gamma)).collect();
    ReferenceSolution::profile(ReferenceSource::Numerical, xs, values)
}
