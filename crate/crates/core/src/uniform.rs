//! Dense uniform-grid solver sharing the flux and time integration of the tree.
//!
//! Used as the non-adaptive baseline and to produce high-resolution 1D reference
//! profiles. Axes with a single cell are treated as invariant and skipped.

use rayon::prelude::*;

use crate::error::{Error, Location, Result};
use crate::evolution::{as_state, positivity_error, rk2_field, signal_summary, CellField, GlmParams, Residual};
use crate::flux::{face_flux, RiemannFlux, SchemeOptions};
use crate::mesh::{Boundary, CellGeometry, Domain};
use crate::state::{ConservedState, FluxVector, GasGamma};

#[derive(Debug, Clone)]
pub struct UniformGrid {
    pub dims: [usize; 3],
    pub domain: Domain,
    pub boundary: Boundary,
    /// Cell averages, x fastest.
    pub cells: Vec<ConservedState>,
}

impl UniformGrid {
    pub fn new<F>(dims: [usize; 3], domain: Domain, boundary: Boundary, f: F) -> Result<Self>
    where
        F: Fn(&CellGeometry) -> ConservedState + Sync,
    {
        if dims.contains(&0) {
            return Err(Error::Domain(format!("grid dimensions {dims:?} must be positive")));
        }
        let mut g = UniformGrid {
            dims,
            domain,
            boundary,
            cells: Vec::new(),
        };
        g.cells = (0..dims[0] * dims[1] * dims[2])
            .into_par_iter()
            .map(|n| f(&g.geometry(g.coords(n))))
            .collect();
        Ok(g)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn coords(&self, n: usize) -> [usize; 3] {
        [n % self.dims[0], (n / self.dims[0]) % self.dims[1], n / (self.dims[0] * self.dims[1])]
    }

    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.domain.extent(a) / self.dims[a] as f64)
    }

    pub fn geometry(&self, c: [usize; 3]) -> CellGeometry {
        let h = self.spacing();
        CellGeometry {
            lo: std::array::from_fn(|a| self.domain.lo[a] + c[a] as f64 * h[a]),
            hi: std::array::from_fn(|a| self.domain.lo[a] + (c[a] + 1) as f64 * h[a]),
            center: std::array::from_fn(|a| self.domain.lo[a] + (c[a] as f64 + 0.5) * h[a]),
            spacing: h,
        }
    }

    pub fn totals(&self) -> ConservedState {
        let h = self.spacing();
        let v = h[0] * h[1] * h[2];
        let mut sum = ConservedState::ZERO;
        for c in &self.cells {
            sum += *c * v;
        }
        sum
    }

    fn resolve(&self, axis: usize, i: i64) -> usize {
        let n = self.dims[axis] as i64;
        match self.boundary {
            Boundary::ZeroGradient => i.clamp(0, n - 1) as usize,
            Boundary::Periodic => i.rem_euclid(n) as usize,
        }
    }

    /// One Runge–Kutta step of size `dt`; returns the wall inflow.
    pub fn rk2_step(
        &mut self,
        dt: f64,
        ch: f64,
        nu: f64,
        alpha: f64,
        gamma: GasGamma,
        scheme: &SchemeOptions,
    ) -> Result<ConservedState> {
        let glm = GlmParams::new(nu, alpha)?.with_speed(ch, self.min_spacing());
        Ok(rk2_field(self, dt, &glm, gamma, scheme)?.0)
    }

    /// CFL step and cleaning speed for the current state.
    pub fn step_size(&self, nu: f64, gamma: GasGamma) -> Result<(f64, f64)> {
        let s = signal_summary(self, gamma)?;
        let dt = nu * s.time_scale;
        Ok((dt, (nu * self.min_spacing() / dt).max(s.max_speed)))
    }

    /// Advances to `t_end`, clipping the last step. Returns the number of steps.
    pub fn run(
        &mut self,
        t_end: f64,
        nu: f64,
        alpha: f64,
        gamma: GasGamma,
        scheme: &SchemeOptions,
        max_steps: usize,
    ) -> Result<usize> {
        let mut t = 0.0;
        let mut steps = 0;
        while t < t_end {
            if steps >= max_steps {
                return Err(Error::MaxSteps(max_steps));
            }
            let s = signal_summary(self, gamma)?;
            let remaining = t_end - t;
            let dt = (nu * s.time_scale).min(remaining);
            let ch = (nu * self.min_spacing() / dt).max(s.max_speed);
            self.rk2_step(dt, ch, nu, alpha, gamma, scheme)?;
            t = if dt >= remaining { t_end } else { t + dt };
            steps += 1;
        }
        Ok(steps)
    }
}

impl CellField for UniformGrid {
    fn states(&self) -> Vec<ConservedState> {
        self.cells.clone()
    }

    fn set_states(&mut self, states: &[ConservedState]) {
        self.cells.copy_from_slice(states);
    }

    fn residual(&self, gamma: GasGamma, ch: f64, scheme: &SchemeOptions) -> Result<Residual> {
        let h = self.spacing();
        let mut rates = vec![FluxVector::ZERO; self.cells.len()];
        let mut wall_rate = ConservedState::ZERO;
        let mut fallbacks = 0;
        for d in crate::state::Direction::ALL {
            let a = d.axis();
            let n = self.dims[a];
            if n == 1 {
                continue;
            }
            let faces_per_line = match self.boundary {
                Boundary::ZeroGradient => n + 1,
                Boundary::Periodic => n,
            };
            // lines of cells along `a`, enumerated by the index with axis `a` zeroed
            let lines: Vec<usize> = (0..self.cells.len()).filter(|&c| self.coords(c)[a] == 0).collect();
            let fluxes: Vec<Vec<RiemannFlux>> = lines
                .par_iter()
                .map(|&start| {
                    let base = self.coords(start);
                    let cell_at = |i: i64| {
                        let mut c = base;
                        c[a] = self.resolve(a, i);
                        self.index(c[0], c[1], c[2])
                    };
                    (0..faces_per_line)
                        .map(|f| {
                            let f = f as i64;
                            let st = [
                                self.cells[cell_at(f - 2)],
                                self.cells[cell_at(f - 1)],
                                self.cells[cell_at(f)],
                                self.cells[cell_at(f + 1)],
                            ];
                            face_flux(&st, d, gamma, ch, scheme)
                                .map_err(|e| positivity_error(e, self.location(cell_at(f - 1))))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            let (t1, t2) = d.tangents();
            let area = h[t1] * h[t2];
            for (line, &start) in fluxes.iter().zip(&lines) {
                let base = self.coords(start);
                for i in 0..n {
                    let mut c = base;
                    c[a] = i;
                    let idx = self.index(c[0], c[1], c[2]);
                    let right = if i + 1 == n && self.boundary == Boundary::Periodic { 0 } else { i + 1 };
                    rates[idx] += (line[i].flux - line[right].flux) * (1.0 / h[a]);
                }
                if self.boundary == Boundary::ZeroGradient {
                    wall_rate += as_state(&line[0].flux) * area;
                    wall_rate += as_state(&line[n].flux) * (-area);
                }
                fallbacks += line.iter().filter(|f| f.hll_fallback).count();
            }
        }
        Ok(Residual {
            rates: rates.iter().map(as_state).collect(),
            wall_rate,
            fallbacks,
        })
    }

    fn location(&self, cell: usize) -> Location {
        let c = self.coords(cell);
        Location {
            level: 0,
            index: c.map(|x| x as u32),
            center: self.geometry(c).center,
        }
    }

    fn spacing(&self, _cell: usize) -> [f64; 3] {
        self.spacing()
    }

    fn min_spacing(&self) -> f64 {
        let h = self.spacing();
        (0..3).filter(|&a| self.dims[a] > 1).map(|a| h[a]).fold(f64::INFINITY, f64::min)
    }
}
