//! Time stepping: CFL step, GLM constants, two-stage Runge–Kutta update with
//! operator-split ψ damping, and the adaptive step `M⁻¹ ∘ T ∘ M ∘ E`.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Location, Result};
use crate::flux::{face_flux, reconcile_coarse_flux, RiemannFlux, SchemeOptions};
use crate::mesh::{
    inverse_mr_transform, mr_transform, threshold, AdaptiveMesh, FaceTopology, SideRef, ThresholdPolicy, ValueCache,
};
use crate::state::{
    conserved_to_primitive_unchecked, fast_speed, ConservedState, FluxVector, GasGamma, MAG, NVARS, PSI,
};

/// Constants of the mixed hyperbolic/parabolic cleaning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmParams {
    pub nu: f64,
    pub alpha: f64,
    /// Hyperbolic cleaning speed, fixed for one step.
    pub ch: f64,
    /// Parabolic constant with `cp^2 = dh * ch / alpha`.
    pub cp: f64,
    /// Smallest spacing of the finest occupied level.
    pub dh: f64,
}

impl GlmParams {
    pub fn new(nu: f64, alpha: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::config("nu", format!("must lie in (0, 1), got {nu}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::config("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        Ok(GlmParams {
            nu,
            alpha,
            ch: 0.0,
            cp: f64::INFINITY,
            dh: 0.0,
        })
    }

    /// Fixes `ch` and the spacing for a step and derives `cp`.
    pub fn with_speed(mut self, ch: f64, dh: f64) -> Self {
        self.ch = ch;
        self.dh = dh;
        self.cp = if self.alpha > 0.0 { (dh * ch / self.alpha).sqrt() } else { f64::INFINITY };
        self
    }

    /// Decay rate `ch^2 / cp^2 = alpha * ch / dh` of the cleaning scalar.
    pub fn damping_rate(&self) -> f64 {
        if self.alpha == 0.0 || self.dh == 0.0 {
            0.0
        } else {
            self.alpha * self.ch / self.dh
        }
    }
}

/// Exact solution of `dψ/dt = -(ch²/cp²) ψ` after `dt`.
pub fn psi_damp(psi: f64, dt: f64, params: &GlmParams) -> f64 {
    psi * (-dt * params.damping_rate()).exp()
}

/// Largest `|u_d| + cf` and the CFL-limited time scale over all cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSummary {
    pub max_speed: f64,
    /// `min over cells and directions of spacing_d / (|u_d| + cf)`.
    pub time_scale: f64,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub ch: f64,
    pub max_speed: f64,
    /// Leaves advanced by the time integrator.
    pub cells_advanced: usize,
    /// Leaves after adaptation.
    pub leaves: usize,
    /// Leaves as a percentage of the uniform finest-level count.
    pub leaf_fraction: f64,
    /// Volume integrals of the conserved variables after the step.
    pub totals: ConservedState,
    pub momentum_norm: f64,
    pub max_psi: f64,
    pub max_div_b: f64,
    pub hll_fallbacks: usize,
    /// Conserved quantities that entered through the walls during the step.
    pub wall_inflow: ConservedState,
    pub wall_ms: f64,
}

/// Parameters of a time-dependent run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub gamma: GasGamma,
    pub nu: f64,
    pub alpha: f64,
    pub scheme: SchemeOptions,
    pub t_end: f64,
    pub max_steps: usize,
    /// Mesh adaptation after every step; `None` keeps the mesh fixed.
    pub policy: Option<ThresholdPolicy>,
}

impl EvolutionParams {
    pub fn new(gamma: GasGamma, nu: f64, alpha: f64, t_end: f64) -> Result<Self> {
        GlmParams::new(nu, alpha)?;
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::config("t_end", format!("must be positive, got {t_end}")));
        }
        Ok(EvolutionParams {
            gamma,
            nu,
            alpha,
            scheme: SchemeOptions::default(),
            t_end,
            max_steps: 1_000_000,
            policy: None,
        })
    }

    pub fn with_policy(mut self, policy: ThresholdPolicy) -> Self {
        self.policy = Some(policy);
        self
    }

    fn glm(&self) -> GlmParams {
        GlmParams {
            nu: self.nu,
            alpha: self.alpha,
            ch: 0.0,
            cp: f64::INFINITY,
            dh: 0.0,
        }
    }
}

/// Rates of change of all cell averages.
#[derive(Debug, Clone)]
pub(crate) struct Residual {
    pub rates: Vec<ConservedState>,
    /// Rate at which the wall fluxes change the volume integrals.
    pub wall_rate: ConservedState,
    pub fallbacks: usize,
}

/// A set of cells advanced together by the Runge–Kutta integrator.
pub(crate) trait CellField: Sync {
    fn states(&self) -> Vec<ConservedState>;
    fn set_states(&mut self, states: &[ConservedState]);
    fn residual(&self, gamma: GasGamma, ch: f64, scheme: &SchemeOptions) -> Result<Residual>;
    fn location(&self, cell: usize) -> Location;
    /// Spacing of a cell per axis.
    fn spacing(&self, cell: usize) -> [f64; 3];
    fn min_spacing(&self) -> f64;
}

pub(crate) fn as_state(f: &FluxVector) -> ConservedState {
    ConservedState(f.0)
}

pub(crate) fn positivity_error(e: Error, location: Location) -> Error {
    match e {
        Error::InvalidState { rho, p } => Error::PositivityLoss { rho, p, location },
        other => other,
    }
}

fn check_states<F: CellField>(field: &F, states: &[ConservedState], gamma: GasGamma) -> Result<()> {
    let bad = states.par_iter().position_first(|u| !conserved_to_primitive_unchecked(u, gamma).is_valid());
    match bad {
        None => Ok(()),
        Some(i) => {
            let w = conserved_to_primitive_unchecked(&states[i], gamma);
            Err(Error::PositivityLoss {
                rho: w.rho,
                p: w.p,
                location: field.location(i),
            })
        }
    }
}

pub(crate) fn signal_summary<F: CellField>(field: &F, gamma: GasGamma) -> Result<SignalSummary> {
    let states = field.states();
    let g = gamma.value();
    let per_cell: Vec<(f64, f64)> = states
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let w = conserved_to_primitive_unchecked(u, gamma);
            if !w.is_valid() {
                return Err(Error::PositivityLoss {
                    rho: w.rho,
                    p: w.p,
                    location: field.location(i),
                });
            }
            let h = field.spacing(i);
            let mut smax = 0.0f64;
            let mut scale = f64::INFINITY;
            for (n, hn) in h.iter().enumerate() {
                let s = w.u[n].abs() + fast_speed(&w, n, g);
                if !s.is_finite() {
                    return Err(Error::NonFiniteSpeed(field.location(i)));
                }
                smax = smax.max(s);
                scale = scale.min(hn / s);
            }
            Ok((smax, scale))
        })
        .collect::<Result<_>>()?;
    let mut out = SignalSummary {
        max_speed: 0.0,
        time_scale: f64::INFINITY,
    };
    for (s, t) in per_cell {
        out.max_speed = out.max_speed.max(s);
        out.time_scale = out.time_scale.min(t);
    }
    if !(out.time_scale > 0.0 && out.time_scale.is_finite()) {
        return Err(Error::Domain(format!(
            "no finite CFL time scale (max signal speed {})",
            out.max_speed
        )));
    }
    Ok(out)
}

/// `(states after the step, wall inflow, fallbacks)`.
pub(crate) fn rk2_field<F: CellField>(
    field: &mut F,
    dt: f64,
    glm: &GlmParams,
    gamma: GasGamma,
    scheme: &SchemeOptions,
) -> Result<(ConservedState, usize)> {
    // ψ damping is split symmetrically around the two hyperbolic stages
    let half = (-0.5 * dt * glm.damping_rate()).exp();
    let mut u0 = field.states();
    if half != 1.0 {
        u0.par_iter_mut().for_each(|u| u[PSI] *= half);
        field.set_states(&u0);
    }
    let r0 = field.residual(gamma, glm.ch, scheme)?;
    let u1: Vec<ConservedState> = u0.par_iter().zip(&r0.rates).map(|(u, r)| *u + *r * dt).collect();
    check_states(field, &u1, gamma)?;
    field.set_states(&u1);
    let r1 = field.residual(gamma, glm.ch, scheme)?;
    let mut un: Vec<ConservedState> = u0
        .par_iter()
        .zip(u1.par_iter().zip(&r1.rates))
        .map(|(u, (v, r))| (*u + (*v + *r * dt)) * 0.5)
        .collect();
    if half != 1.0 {
        un.par_iter_mut().for_each(|u| u[PSI] *= half);
    }
    check_states(field, &un, gamma)?;
    field.set_states(&un);
    let inflow = (r0.wall_rate + r1.wall_rate) * (0.5 * dt);
    Ok((inflow, r0.fallbacks + r1.fallbacks))
}

/// A tree together with its face list.
pub(crate) struct TreeField {
    pub mesh: AdaptiveMesh,
    pub topo: FaceTopology,
}

impl TreeField {
    pub fn new(mesh: AdaptiveMesh) -> Result<Self> {
        let topo = FaceTopology::build(&mesh)?;
        Ok(TreeField { mesh, topo })
    }
}

impl CellField for TreeField {
    fn states(&self) -> Vec<ConservedState> {
        self.mesh.leaf_states()
    }

    fn set_states(&mut self, states: &[ConservedState]) {
        self.mesh.set_leaf_states(states);
    }

    fn residual(&self, gamma: GasGamma, ch: f64, scheme: &SchemeOptions) -> Result<Residual> {
        tree_residual(&self.mesh, &self.topo, gamma, ch, scheme)
    }

    fn location(&self, cell: usize) -> Location {
        self.mesh.location(&self.mesh.leaves()[cell])
    }

    fn spacing(&self, cell: usize) -> [f64; 3] {
        self.mesh.spacing(self.mesh.leaves()[cell].level)
    }

    fn min_spacing(&self) -> f64 {
        self.mesh.min_spacing()
    }
}

fn tree_residual(
    mesh: &AdaptiveMesh,
    topo: &FaceTopology,
    gamma: GasGamma,
    ch: f64,
    scheme: &SchemeOptions,
) -> Result<Residual> {
    let b = mesh.boundary();
    // predicted values are filled serially, the flux sweep only reads
    let mut cache = ValueCache::default();
    for t in &topo.tasks {
        for q in t.stencil(b) {
            cache.value(mesh, t.level, q);
        }
    }
    let fluxes: Vec<RiemannFlux> = topo
        .tasks
        .par_iter()
        .map(|t| {
            let pos = t.stencil(b);
            let st = pos.map(|q| cache.lookup(mesh, t.level, q).expect("stencil value filled"));
            face_flux(&st, t.direction, gamma, ch, scheme).map_err(|e| {
                let c = crate::mesh::CellIndex::new(t.level, pos[1]);
                positivity_error(e, mesh.location(&c))
            })
        })
        .collect::<Result<_>>()?;
    let side_flux = |s: &SideRef| -> FluxVector {
        match s {
            SideRef::Single(t) => fluxes[*t as usize].flux,
            SideRef::Split(ts) => reconcile_coarse_flux(&ts.map(|t| fluxes[t as usize].flux)),
        }
    };
    let rates: Vec<ConservedState> = mesh
        .leaves()
        .par_iter()
        .zip(&topo.sides)
        .map(|(c, sides)| {
            let h = mesh.spacing(c.level);
            let mut r = FluxVector::ZERO;
            for a in 0..3 {
                r += (side_flux(&sides[2 * a]) - side_flux(&sides[2 * a + 1])) * (1.0 / h[a]);
            }
            as_state(&r)
        })
        .collect();
    let mut wall_rate = ConservedState::ZERO;
    for &(t, sign) in &topo.walls {
        let task = &topo.tasks[t as usize];
        let h = mesh.spacing(task.level);
        let (t1, t2) = task.direction.tangents();
        wall_rate += as_state(&fluxes[t as usize].flux) * (sign * h[t1] * h[t2]);
    }
    let fallbacks = fluxes.iter().filter(|f| f.hll_fallback).count();
    Ok(Residual {
        rates,
        wall_rate,
        fallbacks,
    })
}

/// `Δt = ν · min over leaves and directions of Δx_d / (|u_d| + cf)`.
pub fn compute_dt(mesh: &AdaptiveMesh, gamma: GasGamma, nu: f64) -> Result<f64> {
    let f = TreeField::new(mesh.clone())?;
    Ok(nu * signal_summary(&f, gamma)?.time_scale)
}

/// `ch = max(ν Δh / Δt, max over leaves and directions of |u_d| + cf)`.
pub fn compute_ch(mesh: &AdaptiveMesh, dt: f64, nu: f64, gamma: GasGamma) -> Result<f64> {
    let f = TreeField::new(mesh.clone())?;
    let s = signal_summary(&f, gamma)?;
    Ok((nu * mesh.min_spacing() / dt).max(s.max_speed))
}

/// One forward-Euler update of all leaves with frozen `ch`.
pub fn euler_stage(
    mesh: &AdaptiveMesh,
    dt: f64,
    gamma: GasGamma,
    ch: f64,
    scheme: &SchemeOptions,
) -> Result<AdaptiveMesh> {
    let mut field = TreeField::new(mesh.clone())?;
    let u = field.states();
    let r = field.residual(gamma, ch, scheme)?;
    let next: Vec<ConservedState> = u.iter().zip(&r.rates).map(|(u, r)| *u + *r * dt).collect();
    check_states(&field, &next, gamma)?;
    field.set_states(&next);
    Ok(field.mesh)
}

struct StepCore {
    mesh: AdaptiveMesh,
    dt: f64,
    ch: f64,
    max_speed: f64,
    advanced: usize,
    inflow: ConservedState,
    fallbacks: usize,
}

fn advance(mesh: AdaptiveMesh, params: &EvolutionParams, max_dt: f64) -> Result<StepCore> {
    let mut field = TreeField::new(mesh)?;
    let sig = signal_summary(&field, params.gamma)?;
    let dt = (params.nu * sig.time_scale).min(max_dt);
    let dh = field.min_spacing();
    let ch = (params.nu * dh / dt).max(sig.max_speed);
    let glm = params.glm().with_speed(ch, dh);
    let advanced = field.mesh.leaf_count();
    let (inflow, fallbacks) = rk2_field(&mut field, dt, &glm, params.gamma, &params.scheme)?;
    Ok(StepCore {
        mesh: field.mesh,
        dt,
        ch,
        max_speed: sig.max_speed,
        advanced,
        inflow,
        fallbacks,
    })
}

/// One Runge–Kutta step on a fixed mesh; `dt` is the CFL step capped by `max_dt`.
pub fn rk2_step(mesh: AdaptiveMesh, params: &EvolutionParams, max_dt: f64) -> Result<(AdaptiveMesh, StepReport)> {
    let start = Instant::now();
    let core = advance(mesh, params, max_dt)?;
    let report = report_for(&core, 0, 0.0, start);
    Ok((core.mesh, report))
}

/// `M⁻¹ ∘ T ∘ M ∘ E`: a Runge–Kutta step followed, when a policy is set, by the
/// multiresolution transform, thresholding and the inverse transform.
pub fn evolve_step(mesh: AdaptiveMesh, params: &EvolutionParams, max_dt: f64) -> Result<(AdaptiveMesh, StepReport)> {
    let start = Instant::now();
    let mut core = advance(mesh, params, max_dt)?;
    if let Some(policy) = &params.policy {
        let dec = mr_transform(&core.mesh);
        let kept = threshold(&dec, policy)?;
        core.mesh = inverse_mr_transform(&kept)?;
    }
    let report = report_for(&core, 0, 0.0, start);
    Ok((core.mesh, report))
}

fn report_for(core: &StepCore, step: usize, t: f64, start: Instant) -> StepReport {
    let mesh = &core.mesh;
    let totals = mesh.totals();
    let m = totals.momentum();
    let max_psi = mesh.leaf_states().iter().fold(0.0f64, |a, s| a.max(s[PSI].abs()));
    StepReport {
        step,
        t,
        dt: core.dt,
        ch: core.ch,
        max_speed: core.max_speed,
        cells_advanced: core.advanced,
        leaves: mesh.leaf_count(),
        leaf_fraction: mesh.leaf_fraction(),
        totals,
        momentum_norm: (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt(),
        max_psi,
        max_div_b: max_div_b(mesh),
        hll_fallbacks: core.fallbacks,
        wall_inflow: core.inflow,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Largest central-difference divergence of B over the leaves, each evaluated with
/// neighbours at the leaf's own level.
pub fn max_div_b(mesh: &AdaptiveMesh) -> f64 {
    let b = mesh.boundary();
    let mut cache = ValueCache::default();
    let mut out = 0.0f64;
    for c in mesh.leaves() {
        let h = mesh.spacing(c.level);
        let mut div = 0.0;
        for a in 0..3 {
            let mut lo = [c.i[0] as i64, c.i[1] as i64, c.i[2] as i64];
            let mut hi = lo;
            lo[a] -= 1;
            hi[a] += 1;
            let vl = cache.value(mesh, c.level, b.resolve(c.level, lo));
            let vh = cache.value(mesh, c.level, b.resolve(c.level, hi));
            div += (vh[MAG + a] - vl[MAG + a]) / (2.0 * h[a]);
        }
        out = out.max(div.abs());
    }
    out
}

/// Final state of a run and its per-step reports.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mesh: AdaptiveMesh,
    pub reports: Vec<StepReport>,
}

/// Steps until `t_end`, the last step clipped to land on it exactly.
pub fn run(mesh: AdaptiveMesh, params: &EvolutionParams) -> Result<RunOutcome> {
    run_with(mesh, params, |_, _| Ok(()))
}

/// As [`run`], calling `observe` after every step.
pub fn run_with<F>(mut mesh: AdaptiveMesh, params: &EvolutionParams, mut observe: F) -> Result<RunOutcome>
where
    F: FnMut(&StepReport, &AdaptiveMesh) -> Result<()>,
{
    let mut t = 0.0;
    let mut reports = Vec::new();
    while t < params.t_end {
        if reports.len() >= params.max_steps {
            return Err(Error::MaxSteps(params.max_steps));
        }
        let remaining = params.t_end - t;
        let (next, mut report) = evolve_step(mesh, params, remaining)?;
        mesh = next;
        t = if report.dt >= remaining { params.t_end } else { t + report.dt };
        report.step = reports.len() + 1;
        report.t = t;
        log::debug!(
            "step {} t={:.6} dt={:.3e} leaves={} ({:.2}%)",
            report.step,
            t,
            report.dt,
            report.leaves,
            report.leaf_fraction
        );
        observe(&report, &mesh)?;
        reports.push(report);
    }
    Ok(RunOutcome { mesh, reports })
}

/// Total volume integrals minus everything that entered through the walls, relative
/// to the initial totals, per conserved variable.
pub fn conservation_drift(initial: &ConservedState, reports: &[StepReport]) -> [f64; NVARS] {
    let Some(last) = reports.last() else {
        return [0.0; NVARS];
    };
    let mut inflow = ConservedState::ZERO;
    for r in reports {
        inflow += r.wall_inflow;
    }
    std::array::from_fn(|v| {
        let scale = initial[v].abs().max(1e-300);
        (last.totals[v] - inflow[v] - initial[v]) / scale
    })
}
