//! Run orchestration and the text artifacts of a run: step reports, mesh dumps,
//! slices, mesh projections and error tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::cases::{
    build_initial_mesh, compression_stats, error_norms, load_reference, sample_mesh, CompressionStats, ErrorReport,
    InitialCondition, Plane, RiemannSpec1D, RiemannSpec2D, Sampling, SmoothAdvection,
};
use crate::config::{NormSampling, Problem, SimConfig};
use crate::error::{Error, Result};
use crate::evolution::{run_with, EvolutionParams, StepReport};
use crate::mesh::{read_mesh_dump, write_mesh_dump, AdaptiveMesh, Boundary, ThresholdPolicy, ValueCache};
use crate::state::{conserved_to_primitive_unchecked, ConservedState, Direction, GasGamma, ENERGY, RHO};

/// Marker file present in the output directory while a run is in progress.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Variables accepted by [`emit_slice`].
pub const SLICE_VARIABLES: [&str; 9] = ["rho", "p", "ux", "uy", "uz", "Bx", "By", "Bz", "psi"];

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// Provenance lines: code version and the hash of the effective configuration.
pub fn provenance(config: &SimConfig) -> Vec<String> {
    let digest = Sha256::digest(config.canonical().as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    vec![
        format!("mrmhd {}", env!("CARGO_PKG_VERSION")),
        format!("config sha256 {hex}"),
    ]
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_text(path: &Path, header: &[String], body: &str) -> Result<()> {
    let mut w = create(path)?;
    let mut text = String::new();
    for h in header {
        text.push_str(&format!("# {h}\n"));
    }
    text.push_str(body);
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn slice_value(u: &ConservedState, gamma: GasGamma, var: usize) -> f64 {
    let w = conserved_to_primitive_unchecked(u, gamma);
    [w.rho, w.p, w.u[0], w.u[1], w.u[2], w.b[0], w.b[1], w.b[2], w.psi][var]
}

/// Writes the requested variables on the plane through `coordinate`, sampled on the
/// uniform grid at the maximum level. Columns are the two in-plane coordinates
/// followed by the variables.
pub fn emit_slice(
    mesh: &AdaptiveMesh,
    gamma: GasGamma,
    plane: Plane,
    coordinate: f64,
    variables: &[String],
    path: &Path,
    header: &[String],
) -> Result<()> {
    let vars = variables
        .iter()
        .map(|v| {
            SLICE_VARIABLES.iter().position(|s| s == v).ok_or_else(|| {
                Error::config("slice_vars", format!("unknown variable `{v}`, valid names are {}", SLICE_VARIABLES.join(", ")))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = plane.axes();
    let normal = 3 - a - b;
    let d = mesh.domain();
    if !(d.lo[normal] <= coordinate && coordinate <= d.hi[normal]) {
        return Err(Error::Domain(format!(
            "slice {} = {coordinate} lies outside [{}, {}]",
            AXIS_NAMES[normal], d.lo[normal], d.hi[normal]
        )));
    }
    let level = mesh.max_level();
    let n = 1u32 << level;
    let h = mesh.spacing(level);
    let k = (((coordinate - d.lo[normal]) / h[normal]).floor() as i64).clamp(0, n as i64 - 1) as u32;
    let mut body = format!("{},{}", AXIS_NAMES[a], AXIS_NAMES[b]);
    for &v in &vars {
        body.push(',');
        body.push_str(SLICE_VARIABLES[v]);
    }
    body.push('\n');
    let mut cache = ValueCache::default();
    for jb in 0..n {
        for ia in 0..n {
            let mut p = [0u32; 3];
            p[a] = ia;
            p[b] = jb;
            p[normal] = k;
            let u = cache.value(mesh, level, p);
            let xa = d.lo[a] + (ia as f64 + 0.5) * h[a];
            let xb = d.lo[b] + (jb as f64 + 0.5) * h[b];
            body.push_str(&format!("{xa},{xb}"));
            for &v in &vars {
                body.push_str(&format!(",{}", slice_value(&u, gamma, v)));
            }
            body.push('\n');
        }
    }
    let mut head = header.to_vec();
    head.push(format!("slice {} = {coordinate}, level {level}", AXIS_NAMES[normal]));
    write_text(path, &head, &body)
}

/// What a mesh projection collapses onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Maximum leaf level per finest-level bin along one axis.
    Axis(Direction),
    /// Maximum leaf level per finest-level cell of a plane.
    Plane(Plane),
}

/// Maximum leaf level per bin of the projection, bins in row-major order with the
/// first in-plane axis fastest.
pub fn mesh_projection(mesh: &AdaptiveMesh, projection: Projection) -> Vec<u8> {
    let level = mesh.max_level();
    let n = 1usize << level;
    let (axes, bins): (Vec<usize>, usize) = match projection {
        Projection::Axis(d) => (vec![d.axis()], n),
        Projection::Plane(p) => {
            let (a, b) = p.axes();
            (vec![a, b], n * n)
        }
    };
    let mut out: Vec<Option<u8>> = vec![None; bins];
    for c in mesh.leaves() {
        let s = level - c.level;
        let lo: Vec<usize> = axes.iter().map(|&a| (c.i[a] as usize) << s).collect();
        let w = 1usize << s;
        let rows = if axes.len() == 2 { w } else { 1 };
        for r in 0..rows {
            for q in 0..w {
                let idx = if axes.len() == 2 { (lo[1] + r) * n + lo[0] + q } else { lo[0] + q };
                let e = &mut out[idx];
                *e = Some(e.map_or(c.level, |v| v.max(c.level)));
            }
        }
    }
    out.into_iter()
        .map(|v| v.expect("leaves tile the domain, so every bin is covered"))
        .collect()
}

pub fn emit_mesh_projection(mesh: &AdaptiveMesh, projection: Projection, path: &Path, header: &[String]) -> Result<()> {
    let levels = mesh_projection(mesh, projection);
    let level = mesh.max_level();
    let n = 1usize << level;
    let h = mesh.spacing(level);
    let d = mesh.domain();
    let center = |a: usize, i: usize| d.lo[a] + (i as f64 + 0.5) * h[a];
    let body = match projection {
        Projection::Axis(dir) => {
            let a = dir.axis();
            let mut s = format!("{},max_level\n", AXIS_NAMES[a]);
            for (i, l) in levels.iter().enumerate() {
                s.push_str(&format!("{},{l}\n", center(a, i)));
            }
            s
        }
        Projection::Plane(p) => {
            let (a, b) = p.axes();
            let mut s = format!("{},{},max_level\n", AXIS_NAMES[a], AXIS_NAMES[b]);
            for (idx, l) in levels.iter().enumerate() {
                s.push_str(&format!("{},{},{l}\n", center(a, idx % n), center(b, idx / n)));
            }
            s
        }
    };
    write_text(path, header, &body)
}

pub const STEP_COLUMNS: &str = "step,t,dt,c_h,leaves,leaf_percent,mass,energy,momentum,max_psi,wall_ms";

pub fn step_row(r: &StepReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{:.3}\n",
        r.step,
        r.t,
        r.dt,
        r.ch,
        r.leaves,
        r.leaf_fraction,
        r.totals[RHO],
        r.totals[ENERGY],
        r.momentum_norm,
        r.max_psi,
        r.wall_ms
    )
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub steps: usize,
    pub compression: CompressionStats,
    pub errors: Option<ErrorReport>,
    pub mesh: AdaptiveMesh,
}

/// Initial mesh and threshold policy for a configuration.
pub fn initial_mesh(config: &SimConfig) -> Result<(AdaptiveMesh, Option<ThresholdPolicy>)> {
    let gamma = config.gas_gamma();
    let eps0 = config.threshold.then_some(config.eps0);
    let build = |ic: &dyn InitialCondition, boundary: Boundary| {
        build_initial_mesh(
            ic,
            gamma,
            config.max_level,
            config.boundary.unwrap_or(boundary),
            eps0,
            config.scaling,
            config.start_level,
        )
    };
    match config.problem {
        Problem::Riemann1D => {
            let mut spec = RiemannSpec1D::shock_tube(config.bz, config.axis);
            if let Some(d) = config.domain {
                spec.domain = d;
            }
            if spec.waves_reach_walls(gamma, config.t_end) {
                log::warn!("waves reach the domain walls before t = {}", config.t_end);
            }
            build(&spec, Boundary::ZeroGradient)
        }
        Problem::Riemann2D => {
            let mut spec = RiemannSpec2D::quadrants(config.plane);
            if let Some(d) = config.domain {
                spec.domain = d;
            }
            build(&spec, Boundary::ZeroGradient)
        }
        Problem::Smooth => build(&SmoothAdvection::default(), Boundary::Periodic),
        Problem::Custom => {
            let path = config.initial.as_ref().expect("validated");
            let mut mesh = read_mesh_dump(path)?;
            if mesh.max_level() != config.max_level {
                log::warn!(
                    "using max_level {} from {} instead of {}",
                    mesh.max_level(),
                    path.display(),
                    config.max_level
                );
            }
            if let Some(b) = config.boundary {
                mesh.set_boundary(b);
            }
            let policy = match eps0 {
                Some(e) => Some(
                    ThresholdPolicy::new(e, mesh.domain().volume(), mesh.max_level())?
                        .with_scales(config.scaling.scales(&mesh.leaf_states())),
                ),
                None => None,
            };
            Ok((mesh, policy))
        }
    }
}

/// Error norms of `mesh` against the reference file.
pub fn norms_against(
    mesh: &AdaptiveMesh,
    gamma: GasGamma,
    reference: &Path,
    axis: Direction,
    sampling: NormSampling,
) -> Result<ErrorReport> {
    let r = load_reference(reference)?;
    let level = mesh.max_level();
    let sampling = match sampling {
        NormSampling::FullGrid => Sampling::FullGrid(level),
        NormSampling::Centerline => Sampling::Centerline(level, axis),
    };
    error_norms(&sample_mesh(mesh, gamma, sampling), &r, axis)
}

/// Initialises, runs and writes every artifact into `config.output`. The directory
/// holds an `INCOMPLETE` marker until the run has finished.
pub fn run_config(config: &SimConfig) -> Result<RunSummary> {
    let dir = &config.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, "run in progress or interrupted\n").map_err(|e| Error::io(&marker, e))?;
    let header = provenance(config);
    std::fs::write(dir.join("config.txt"), config.canonical()).map_err(|e| Error::io(dir.join("config.txt"), e))?;

    let gamma = config.gas_gamma();
    let (mesh, policy) = initial_mesh(config)?;
    log::info!(
        "{}: {} initial leaves ({:.2}%), max level {}",
        config.problem.name(),
        mesh.leaf_count(),
        mesh.leaf_fraction(),
        mesh.max_level()
    );
    let mut params = EvolutionParams::new(gamma, config.nu, config.alpha, config.t_end)?;
    params.scheme = config.scheme();
    params.max_steps = config.max_steps;
    params.policy = policy;

    let steps_path = dir.join("steps.csv");
    let mut steps = create(&steps_path)?;
    let mut head = String::new();
    for h in &header {
        head.push_str(&format!("# {h}\n"));
    }
    head.push_str(STEP_COLUMNS);
    head.push('\n');
    steps.write_all(head.as_bytes()).map_err(|e| Error::io(&steps_path, e))?;
    let outcome = run_with(mesh, &params, |r, m| {
        steps
            .write_all(step_row(r).as_bytes())
            .and_then(|_| steps.flush())
            .map_err(|e| Error::io(&steps_path, e))?;
        if config.cadence > 0 && r.step % config.cadence == 0 {
            let mut h = header.clone();
            h.push(format!("step {} t = {}", r.step, r.t));
            write_mesh_dump(m, &dir.join(format!("mesh_{:06}.csv", r.step)), &h)?;
        }
        Ok(())
    })?;
    drop(steps);

    let mesh = outcome.mesh;
    let mut h = header.clone();
    h.push(format!("final t = {}", config.t_end));
    write_mesh_dump(&mesh, &dir.join("mesh.csv"), &h)?;
    emit_slice(
        &mesh,
        gamma,
        config.slice_plane,
        config.slice_coord,
        &config.slice_vars,
        &dir.join("slice.csv"),
        &header,
    )?;
    let projection = match config.problem {
        Problem::Riemann1D => Projection::Axis(config.axis),
        Problem::Riemann2D => Projection::Plane(config.plane),
        Problem::Smooth | Problem::Custom => Projection::Plane(Plane::XY),
    };
    emit_mesh_projection(&mesh, projection, &dir.join("projection.csv"), &header)?;

    let compression = compression_stats(&outcome.reports)?;
    let mut summary = format!(
        "steps,{}\nmean_leaf_percent,{}\nfinal_leaf_percent,{}\nmin_leaf_percent,{}\nmax_leaf_percent,{}\n",
        outcome.reports.len(),
        compression.mean,
        compression.last,
        compression.min,
        compression.max
    );

    let errors = match &config.reference {
        Some(reference) => {
            let axis = match config.problem {
                Problem::Riemann1D => config.axis,
                _ => Direction::X,
            };
            let report = norms_against(&mesh, gamma, reference, axis, config.norm_sampling)?;
            let mut h = header.clone();
            h.push(format!("reference {}", reference.display()));
            h.push(format!("L2 normalisation {}", config.norm.name()));
            write_text(&dir.join("errors.csv"), &h, &report.table_csv(config.norm))?;
            write_text(&dir.join("errors_variants.csv"), &h, &report.variants_csv())?;
            Some(report)
        }
        None => {
            log::info!("no reference given, error norms skipped");
            summary.push_str("norms,skipped\n");
            None
        }
    };
    write_text(&dir.join("summary.csv"), &header, &summary)?;
    std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(RunSummary {
        output: dir.clone(),
        steps: outcome.reports.len(),
        compression,
        errors,
        mesh,
    })
}

/// Table and variant rows for a stored result against a reference.
pub fn norms_for_dump(
    result: &Path,
    reference: &Path,
    gamma: GasGamma,
    axis: Direction,
    sampling: NormSampling,
) -> Result<ErrorReport> {
    let mesh = read_mesh_dump(result)?;
    norms_against(&mesh, gamma, reference, axis, sampling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{CellIndex, Domain};
    use crate::state::{primitive_to_conserved, PrimitiveState};

    fn constant_mesh() -> AdaptiveMesh {
        let u = primitive_to_conserved(&PrimitiveState::new(1.5, 0.8, [0.1, 0.2, 0.3], [0.5, 0.0, 0.1]), GasGamma::default())
            .unwrap();
        AdaptiveMesh::uniform(Domain::cube(-0.5, 0.5).unwrap(), 3, Boundary::ZeroGradient, 2, |_| u).unwrap()
    }

    #[test]
    fn constant_slice_is_constant() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        emit_slice(&constant_mesh(), GasGamma::default(), Plane::XY, 0.0, &["rho".into(), "Bx".into()], &p, &[]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 64);
        for r in rows {
            let f: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
            assert!((f[2] - 1.5).abs() < 1e-14);
            assert!((f[3] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn unknown_slice_variable_lists_names() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_slice(&constant_mesh(), GasGamma::default(), Plane::XY, 0.0, &["temp".into()], &dir.path().join("s.csv"), &[])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("temp") && msg.contains("rho, p, ux"), "{msg}");
    }

    #[test]
    fn slice_outside_domain_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let r = emit_slice(&constant_mesh(), GasGamma::default(), Plane::YZ, 0.7, &["rho".into()], &dir.path().join("s.csv"), &[]);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn projection_of_uniform_mesh_is_constant() {
        let m = constant_mesh();
        assert!(mesh_projection(&m, Projection::Axis(Direction::Y)).iter().all(|&l| l == 2));
        assert!(mesh_projection(&m, Projection::Plane(Plane::ZX)).iter().all(|&l| l == 2));
    }

    #[test]
    fn projection_picks_finest_leaf() {
        let mut m = constant_mesh();
        m.split(CellIndex::new(2, [1, 3, 0]), [ConservedState::ZERO; 8]);
        m.reindex();
        let x = mesh_projection(&m, Projection::Axis(Direction::X));
        assert_eq!(x, vec![2, 2, 3, 3, 2, 2, 2, 2]);
        let xy = mesh_projection(&m, Projection::Plane(Plane::XY));
        assert_eq!(xy.iter().filter(|&&l| l == 3).count(), 4);
        assert_eq!(xy[7 * 8 + 2], 3);
    }

    #[test]
    fn provenance_depends_on_config() {
        let a = SimConfig::default();
        let b = SimConfig {
            eps0: 0.05,
            ..SimConfig::default()
        };
        assert_ne!(provenance(&a), provenance(&b));
        assert_eq!(provenance(&a), provenance(&SimConfig::default()));
    }
}
