//! GLM-MHD state vectors, conversions, the physical flux and characteristic speeds.
//!
//! Conserved layout is `[rho, E, m_x, m_y, m_z, B_x, B_y, B_z, psi]`. The cleaning
//! scalar `psi` never enters the total energy.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

pub const NVARS: usize = 9;

pub const RHO: usize = 0;
pub const ENERGY: usize = 1;
pub const MOM: usize = 2;
pub const MAG: usize = 5;
pub const PSI: usize = 8;

/// Smallest density accepted as physical.
pub const RHO_FLOOR: f64 = 1e-12;
/// Smallest thermal pressure accepted as physical.
pub const P_FLOOR: f64 = 1e-12;

/// Coordinate direction used for flux sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    X,
    Y,
    Z,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X, Direction::Y, Direction::Z];

    pub fn axis(self) -> usize {
        self as usize
    }

    pub fn from_axis(axis: usize) -> Direction {
        match axis % 3 {
            0 => Direction::X,
            1 => Direction::Y,
            _ => Direction::Z,
        }
    }

    /// The two tangential axes, in cyclic order after the normal.
    pub fn tangents(self) -> (usize, usize) {
        let n = self.axis();
        ((n + 1) % 3, (n + 2) % 3)
    }

    /// Cyclic successor: X -> Y -> Z -> X.
    pub fn next(self) -> Direction {
        Direction::from_axis(self.axis() + 1)
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::X => "x",
            Direction::Y => "y",
            Direction::Z => "z",
        })
    }
}

/// Adiabatic index of the ideal gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasGamma(f64);

impl GasGamma {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 1.0 {
            Ok(GasGamma(gamma))
        } else {
            Err(Error::Domain(format!("adiabatic index must exceed 1, got {gamma}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for GasGamma {
    fn default() -> Self {
        GasGamma(5.0 / 3.0)
    }
}

macro_rules! vector_ops {
    ($ty:ident) => {
        impl Index<usize> for $ty {
            type Output = f64;
            #[inline]
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl IndexMut<usize> for $ty {
            #[inline]
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                &mut self.0[i]
            }
        }

        impl Add for $ty {
            type Output = $ty;
            #[inline]
            fn add(self, rhs: $ty) -> $ty {
                let mut out = self;
                for k in 0..NVARS {
                    out.0[k] += rhs.0[k];
                }
                out
            }
        }

        impl AddAssign for $ty {
            #[inline]
            fn add_assign(&mut self, rhs: $ty) {
                for k in 0..NVARS {
                    self.0[k] += rhs.0[k];
                }
            }
        }

        impl Sub for $ty {
            type Output = $ty;
            #[inline]
            fn sub(self, rhs: $ty) -> $ty {
                let mut out = self;
                for k in 0..NVARS {
                    out.0[k] -= rhs.0[k];
                }
                out
            }
        }

        impl Mul<f64> for $ty {
            type Output = $ty;
            #[inline]
            fn mul(self, s: f64) -> $ty {
                let mut out = self;
                for k in 0..NVARS {
                    out.0[k] *= s;
                }
                out
            }
        }

        impl $ty {
            pub const ZERO: $ty = $ty([0.0; NVARS]);

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
        }
    };
}

/// Cell average or point value of the conserved variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState(pub [f64; NVARS]);

/// Flux of the nine conserved quantities through a face with a fixed normal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluxVector(pub [f64; NVARS]);

vector_ops!(ConservedState);
vector_ops!(FluxVector);

impl ConservedState {
    pub fn rho(&self) -> f64 {
        self.0[RHO]
    }

    pub fn energy(&self) -> f64 {
        self.0[ENERGY]
    }

    pub fn momentum(&self) -> [f64; 3] {
        [self.0[MOM], self.0[MOM + 1], self.0[MOM + 2]]
    }

    pub fn magnetic(&self) -> [f64; 3] {
        [self.0[MAG], self.0[MAG + 1], self.0[MAG + 2]]
    }

    pub fn psi(&self) -> f64 {
        self.0[PSI]
    }

    /// Cyclically rotates the vector components so that axis `a` moves to axis `a + shift`.
    pub fn rotate_axes(&self, shift: usize) -> ConservedState {
        let mut out = *self;
        for a in 0..3 {
            let to = (a + shift) % 3;
            out.0[MOM + to] = self.0[MOM + a];
            out.0[MAG + to] = self.0[MAG + a];
        }
        out
    }
}

/// Point state in primitive variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub p: f64,
    pub u: [f64; 3],
    pub b: [f64; 3],
    pub psi: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, p: f64, u: [f64; 3], b: [f64; 3]) -> Self {
        PrimitiveState { rho, p, u, b, psi: 0.0 }
    }

    pub fn is_valid(&self) -> bool {
        self.rho.is_finite() && self.p.is_finite() && self.rho >= RHO_FLOOR && self.p >= P_FLOOR
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidState { rho: self.rho, p: self.p })
        }
    }

    /// Cyclic rotation of the vector components (see [`ConservedState::rotate_axes`]).
    pub fn rotate_axes(&self, shift: usize) -> PrimitiveState {
        let mut out = *self;
        for a in 0..3 {
            out.u[(a + shift) % 3] = self.u[a];
            out.b[(a + shift) % 3] = self.b[a];
        }
        out
    }

    pub fn b_squared(&self) -> f64 {
        dot(&self.b, &self.b)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn primitive_to_conserved(w: &PrimitiveState, gamma: GasGamma) -> Result<ConservedState> {
    w.validate()?;
    Ok(primitive_to_conserved_unchecked(w, gamma))
}

#[inline]
pub(crate) fn primitive_to_conserved_unchecked(w: &PrimitiveState, gamma: GasGamma) -> ConservedState {
    let g = gamma.value();
    let kinetic = 0.5 * w.rho * dot(&w.u, &w.u);
    let magnetic = 0.5 * w.b_squared();
    ConservedState([
        w.rho,
        w.p / (g - 1.0) + kinetic + magnetic,
        w.rho * w.u[0],
        w.rho * w.u[1],
        w.rho * w.u[2],
        w.b[0],
        w.b[1],
        w.b[2],
        w.psi,
    ])
}

pub fn conserved_to_primitive(u: &ConservedState, gamma: GasGamma) -> Result<PrimitiveState> {
    let w = conserved_to_primitive_unchecked(u, gamma);
    w.validate()?;
    Ok(w)
}

/// Conversion without the positivity check; callers test [`PrimitiveState::is_valid`].
#[inline]
pub(crate) fn conserved_to_primitive_unchecked(u: &ConservedState, gamma: GasGamma) -> PrimitiveState {
    let rho = u.0[RHO];
    let inv = 1.0 / rho;
    let m = u.momentum();
    let b = u.magnetic();
    let vel = [m[0] * inv, m[1] * inv, m[2] * inv];
    let p = (gamma.value() - 1.0) * (u.0[ENERGY] - 0.5 * dot(&m, &vel) - 0.5 * dot(&b, &b));
    PrimitiveState { rho, p, u: vel, b, psi: u.0[PSI] }
}

/// Column `d` of the GLM-MHD flux tensor.
pub fn physical_flux(u: &ConservedState, d: Direction, gamma: GasGamma, ch: f64) -> Result<FluxVector> {
    let w = conserved_to_primitive(u, gamma)?;
    Ok(flux_of(u, &w, d, ch))
}

#[inline]
pub(crate) fn flux_of(u: &ConservedState, w: &PrimitiveState, d: Direction, ch: f64) -> FluxVector {
    let n = d.axis();
    let un = w.u[n];
    let bn = w.b[n];
    let b2 = w.b_squared();
    let pt = w.p + 0.5 * b2;
    let ub = dot(&w.u, &w.b);
    let mut f = [0.0; NVARS];
    f[RHO] = u.0[MOM + n];
    f[ENERGY] = (u.0[ENERGY] + pt) * un - bn * ub;
    for a in 0..3 {
        f[MOM + a] = u.0[MOM + a] * un - bn * w.b[a];
        f[MAG + a] = un * w.b[a] - w.u[a] * bn;
    }
    f[MOM + n] += pt;
    f[MAG + n] = w.psi;
    f[PSI] = ch * ch * bn;
    FluxVector(f)
}

/// Characteristic speeds along one direction. `cf`, `ca` and `cs` are relative to
/// the flow; `ce` is the advection speed `u_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpeeds {
    pub cf: f64,
    pub ca: f64,
    pub cs: f64,
    pub ce: f64,
}

pub fn wave_speeds(w: &PrimitiveState, d: Direction, gamma: GasGamma) -> Result<SignalSpeeds> {
    w.validate()?;
    Ok(wave_speeds_unchecked(w, d, gamma))
}

#[inline]
pub(crate) fn wave_speeds_unchecked(w: &PrimitiveState, d: Direction, gamma: GasGamma) -> SignalSpeeds {
    let n = d.axis();
    let inv_rho = 1.0 / w.rho;
    let a2 = gamma.value() * w.p * inv_rho;
    let ca2 = w.b[n] * w.b[n] * inv_rho;
    let sum = a2 + w.b_squared() * inv_rho;
    // analytically nonnegative; clamp round-off
    let disc = (sum * sum - 4.0 * a2 * ca2).max(0.0);
    let cf2 = (0.5 * (sum + disc.sqrt())).max(a2).max(ca2);
    let cf = cf2.sqrt();
    let ca = ca2.sqrt();
    // cf^2 cs^2 = a^2 ca^2 avoids cancellation in the slow branch
    let cs = if cf2 > 0.0 { (a2 * ca2 / cf2).sqrt().min(ca) } else { 0.0 };
    SignalSpeeds { cf, ca, cs, ce: w.u[n] }
}

/// Fast magnetosonic speed only (hot path of the CFL and HLLD estimates).
#[inline]
pub(crate) fn fast_speed(w: &PrimitiveState, n: usize, gamma: f64) -> f64 {
    let inv_rho = 1.0 / w.rho;
    let a2 = gamma * w.p * inv_rho;
    let ca2 = w.b[n] * w.b[n] * inv_rho;
    let sum = a2 + w.b_squared() * inv_rho;
    let disc = (sum * sum - 4.0 * a2 * ca2).max(0.0);
    (0.5 * (sum + disc.sqrt())).max(a2).max(ca2).sqrt()
}
