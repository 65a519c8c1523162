//! Second-order MC-limited face reconstruction and the HLLD Riemann solver with the
//! GLM (B_n, psi) subsystem, applied one coordinate direction at a time.

use crate::error::Result;
use crate::state::{
    conserved_to_primitive_unchecked, fast_speed, flux_of, primitive_to_conserved_unchecked, ConservedState,
    Direction, FluxVector, GasGamma, PrimitiveState, ENERGY, MAG, MOM, NVARS, PSI, RHO,
};

/// Variables the slopes are limited in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconstructionVars {
    #[default]
    Conservative,
    Primitive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    pub variables: ReconstructionVars,
    /// Limit and reconstruct psi like the other variables (otherwise piecewise constant).
    pub reconstruct_psi: bool,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            variables: ReconstructionVars::Conservative,
            reconstruct_psi: true,
        }
    }
}

/// Relative fan-ordering violation that triggers the HLL fallback.
pub const FAN_TOLERANCE: f64 = 1e-12;
/// Relative size below which the HLLD denominators are treated as degenerate.
const DEGENERACY: f64 = 1e-8;

#[inline]
fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Monotonized-central limited slope from three consecutive averages.
#[inline]
pub fn mc_slope(um: f64, uc: f64, up: f64) -> f64 {
    minmod3(2.0 * (uc - um), 0.5 * (up - um), 2.0 * (up - uc))
}

fn primitive_array(w: &PrimitiveState) -> [f64; NVARS] {
    [w.rho, w.p, w.u[0], w.u[1], w.u[2], w.b[0], w.b[1], w.b[2], w.psi]
}

fn primitive_from_array(a: &[f64; NVARS]) -> PrimitiveState {
    PrimitiveState {
        rho: a[0],
        p: a[1],
        u: [a[2], a[3], a[4]],
        b: [a[5], a[6], a[7]],
        psi: a[8],
    }
}

/// Minus- and plus-face primitive states of the centre cell of a 3-cell stencil.
pub(crate) fn reconstruct_primitive(
    stencil: &[ConservedState; 3],
    gamma: GasGamma,
    opts: &SchemeOptions,
) -> Result<(PrimitiveState, PrimitiveState)> {
    let nlim = if opts.reconstruct_psi { NVARS } else { NVARS - 1 };
    match opts.variables {
        ReconstructionVars::Conservative => {
            let [um, uc, up] = stencil;
            let mut lo = *uc;
            let mut hi = *uc;
            for k in 0..nlim {
                let half = 0.5 * mc_slope(um[k], uc[k], up[k]);
                lo[k] -= half;
                hi[k] += half;
            }
            let wlo = conserved_to_primitive_unchecked(&lo, gamma);
            let whi = conserved_to_primitive_unchecked(&hi, gamma);
            if wlo.is_valid() && whi.is_valid() {
                return Ok((wlo, whi));
            }
            let wc = conserved_to_primitive_unchecked(uc, gamma);
            wc.validate()?;
            Ok((wc, wc))
        }
        ReconstructionVars::Primitive => {
            let w: Vec<PrimitiveState> = stencil
                .iter()
                .map(|u| {
                    let w = conserved_to_primitive_unchecked(u, gamma);
                    w.validate().map(|_| w)
                })
                .collect::<Result<_>>()?;
            let (am, ac, ap) = (primitive_array(&w[0]), primitive_array(&w[1]), primitive_array(&w[2]));
            let mut lo = ac;
            let mut hi = ac;
            for k in 0..nlim {
                let half = 0.5 * mc_slope(am[k], ac[k], ap[k]);
                lo[k] -= half;
                hi[k] += half;
            }
            let (wlo, whi) = (primitive_from_array(&lo), primitive_from_array(&hi));
            if wlo.is_valid() && whi.is_valid() {
                Ok((wlo, whi))
            } else {
                Ok((w[1], w[1]))
            }
        }
    }
}

/// Face states (minus face, plus face) of the centre cell of a 3-cell stencil taken along
/// one direction. Falls back to first order in a cell whose reconstruction would lose
/// positivity.
pub fn reconstruct_faces(
    stencil: &[ConservedState; 3],
    gamma: GasGamma,
    opts: &SchemeOptions,
) -> Result<(ConservedState, ConservedState)> {
    let (lo, hi) = reconstruct_primitive(stencil, gamma, opts)?;
    Ok((
        primitive_to_conserved_unchecked(&lo, gamma),
        primitive_to_conserved_unchecked(&hi, gamma),
    ))
}

/// States on the two sides of one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePair {
    pub left: ConservedState,
    pub right: ConservedState,
    pub direction: Direction,
}

/// Exact solution at the face of the linear (B_n, psi) system.
pub fn glm_subsystem(faces: &FacePair, ch: f64) -> (f64, f64) {
    let n = faces.direction.axis();
    glm_star(faces.left[MAG + n], faces.right[MAG + n], faces.left[PSI], faces.right[PSI], ch)
}

#[inline]
fn glm_star(bl: f64, br: f64, psil: f64, psir: f64, ch: f64) -> (f64, f64) {
    let bn = 0.5 * (bl + br) - 0.5 * (psir - psil) / ch;
    let psi = 0.5 * (psil + psir) - 0.5 * ch * (br - bl);
    (bn, psi)
}

/// Wave speeds and intermediate states of the HLLD fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlldFan {
    pub sl: f64,
    pub sr: f64,
    pub sl_star: f64,
    pub sr_star: f64,
    pub sm: f64,
    pub ul_star: ConservedState,
    pub ur_star: ConservedState,
    pub ul_2star: ConservedState,
    pub ur_2star: ConservedState,
}

impl HlldFan {
    pub fn is_ordered(&self) -> bool {
        let tol = FAN_TOLERANCE * self.sl.abs().max(self.sr.abs()).max(1e-300);
        self.sl <= self.sl_star + tol
            && self.sl_star <= self.sm + tol
            && self.sm <= self.sr_star + tol
            && self.sr_star <= self.sr + tol
    }
}

/// Flux through one face plus whether the HLL fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannFlux {
    pub flux: FluxVector,
    pub hll_fallback: bool,
}

struct Side {
    w: PrimitiveState,
    u: ConservedState,
    f: FluxVector,
    pt: f64,
}

fn outer_speeds(wl: &PrimitiveState, wr: &PrimitiveState, n: usize, gamma: f64) -> (f64, f64) {
    let cf = fast_speed(wl, n, gamma).max(fast_speed(wr, n, gamma));
    (wl.u[n].min(wr.u[n]) - cf, wl.u[n].max(wr.u[n]) + cf)
}

/// Single-star state of one side; `None` when the star density is not positive.
fn star_state(side: &Side, s: f64, sm: f64, pts: f64, bn: f64, n: usize) -> Option<ConservedState> {
    let (t1, t2) = Direction::from_axis(n).tangents();
    let w = &side.w;
    let sd = s - w.u[n];
    let rho = w.rho * sd / (s - sm);
    if !(rho > 0.0) || !rho.is_finite() {
        return None;
    }
    let den = w.rho * sd * (s - sm) - bn * bn;
    let (mut ut, mut bt) = ([w.u[t1], w.u[t2]], [w.b[t1], w.b[t2]]);
    if den.abs() >= DEGENERACY * pts.abs() {
        let fu = bn * (sm - w.u[n]) / den;
        let fb = (w.rho * sd * sd - bn * bn) / den;
        ut = [w.u[t1] - w.b[t1] * fu, w.u[t2] - w.b[t2] * fu];
        bt = [w.b[t1] * fb, w.b[t2] * fb];
    }
    let vb = w.u[0] * w.b[0] + w.u[1] * w.b[1] + w.u[2] * w.b[2];
    let vb_star = sm * bn + ut[0] * bt[0] + ut[1] * bt[1];
    let e = (sd * side.u[ENERGY] - side.pt * w.u[n] + pts * sm + bn * (vb - vb_star)) / (s - sm);
    let mut out = ConservedState::ZERO;
    out[RHO] = rho;
    out[ENERGY] = e;
    out[MOM + n] = rho * sm;
    out[MOM + t1] = rho * ut[0];
    out[MOM + t2] = rho * ut[1];
    out[MAG + n] = bn;
    out[MAG + t1] = bt[0];
    out[MAG + t2] = bt[1];
    out[PSI] = w.psi;
    Some(out)
}

fn double_star_states(
    ul: &ConservedState,
    ur: &ConservedState,
    sm: f64,
    bn: f64,
    n: usize,
    pts: f64,
) -> (ConservedState, ConservedState) {
    if 0.5 * bn * bn < DEGENERACY * pts.abs() {
        return (*ul, *ur);
    }
    let (t1, t2) = Direction::from_axis(n).tangents();
    let (sql, sqr) = (ul[RHO].sqrt(), ur[RHO].sqrt());
    let inv = 1.0 / (sql + sqr);
    let sgn = bn.signum();
    let (vl, vr) = (
        [ul[MOM + t1] / ul[RHO], ul[MOM + t2] / ul[RHO]],
        [ur[MOM + t1] / ur[RHO], ur[MOM + t2] / ur[RHO]],
    );
    let (bl, br) = ([ul[MAG + t1], ul[MAG + t2]], [ur[MAG + t1], ur[MAG + t2]]);
    let mut ut = [0.0; 2];
    let mut bt = [0.0; 2];
    for a in 0..2 {
        ut[a] = (sql * vl[a] + sqr * vr[a] + (br[a] - bl[a]) * sgn) * inv;
        bt[a] = (sql * br[a] + sqr * bl[a] + sql * sqr * (vr[a] - vl[a]) * sgn) * inv;
    }
    let vb2 = sm * bn + ut[0] * bt[0] + ut[1] * bt[1];
    let vbl = sm * bn + vl[0] * bl[0] + vl[1] * bl[1];
    let vbr = sm * bn + vr[0] * br[0] + vr[1] * br[1];
    let mut l2 = *ul;
    let mut r2 = *ur;
    for (st, rho) in [(&mut l2, ul[RHO]), (&mut r2, ur[RHO])] {
        st[MOM + t1] = rho * ut[0];
        st[MOM + t2] = rho * ut[1];
        st[MAG + t1] = bt[0];
        st[MAG + t2] = bt[1];
    }
    l2[ENERGY] = ul[ENERGY] - sql * (vbl - vb2) * sgn;
    r2[ENERGY] = ur[ENERGY] + sqr * (vbr - vb2) * sgn;
    (l2, r2)
}

fn build_fan(l: &Side, r: &Side, n: usize, gamma: GasGamma) -> Option<HlldFan> {
    let (sl, sr) = outer_speeds(&l.w, &r.w, n, gamma.value());
    let bn = l.w.b[n];
    let sdl = sl - l.w.u[n];
    let sdr = sr - r.w.u[n];
    let den = sdr * r.w.rho - sdl * l.w.rho;
    let sm = (sdr * r.w.rho * r.w.u[n] - sdl * l.w.rho * l.w.u[n] - r.pt + l.pt) / den;
    let pts = (sdr * r.w.rho * l.pt - sdl * l.w.rho * r.pt
        + l.w.rho * r.w.rho * sdr * sdl * (r.w.u[n] - l.w.u[n]))
        / den;
    if !sm.is_finite() || !pts.is_finite() {
        return None;
    }
    let ul_star = star_state(l, sl, sm, pts, bn, n)?;
    let ur_star = star_state(r, sr, sm, pts, bn, n)?;
    let (ul_2star, ur_2star) = double_star_states(&ul_star, &ur_star, sm, bn, n, pts);
    Some(HlldFan {
        sl,
        sr,
        sl_star: sm - bn.abs() / ul_star[RHO].sqrt(),
        sr_star: sm + bn.abs() / ur_star[RHO].sqrt(),
        sm,
        ul_star,
        ur_star,
        ul_2star,
        ur_2star,
    })
}

fn side(w: PrimitiveState, d: Direction, gamma: GasGamma, ch: f64) -> Side {
    let u = primitive_to_conserved_unchecked(&w, gamma);
    let f = flux_of(&u, &w, d, ch);
    let pt = w.p + 0.5 * w.b_squared();
    Side { w, u, f, pt }
}

/// `f + s * (to - from)`
#[inline]
fn jump(f: FluxVector, to: &ConservedState, from: &ConservedState, s: f64) -> FluxVector {
    let mut out = f;
    for k in 0..NVARS {
        out[k] += s * (to[k] - from[k]);
    }
    out
}

fn hll(l: &Side, r: &Side, sl: f64, sr: f64) -> FluxVector {
    if sl >= 0.0 {
        return l.f;
    }
    if sr <= 0.0 {
        return r.f;
    }
    let inv = 1.0 / (sr - sl);
    let mut out = FluxVector::ZERO;
    for k in 0..NVARS {
        out[k] = (sr * l.f[k] - sl * r.f[k] + sl * sr * (r.u[k] - l.u[k])) * inv;
    }
    out
}

/// HLLD flux for primitive face states that already share `b[n]` and `psi`.
pub(crate) fn hlld_primitive(
    wl: PrimitiveState,
    wr: PrimitiveState,
    d: Direction,
    gamma: GasGamma,
    ch: f64,
) -> RiemannFlux {
    let n = d.axis();
    let l = side(wl, d, gamma, ch);
    let r = side(wr, d, gamma, ch);
    let (sl, sr) = outer_speeds(&l.w, &r.w, n, gamma.value());
    if sl > 0.0 {
        return RiemannFlux { flux: l.f, hll_fallback: false };
    }
    if sr < 0.0 {
        return RiemannFlux { flux: r.f, hll_fallback: false };
    }
    let fan = match build_fan(&l, &r, n, gamma) {
        Some(fan) if fan.is_ordered() => fan,
        _ => {
            return RiemannFlux {
                flux: hll(&l, &r, sl, sr),
                hll_fallback: true,
            }
        }
    };
    let flux = if fan.sl_star >= 0.0 {
        jump(l.f, &fan.ul_star, &l.u, fan.sl)
    } else if fan.sm >= 0.0 {
        let fs = jump(l.f, &fan.ul_star, &l.u, fan.sl);
        jump(fs, &fan.ul_2star, &fan.ul_star, fan.sl_star)
    } else if fan.sr_star >= 0.0 {
        let fs = jump(r.f, &fan.ur_star, &r.u, fan.sr);
        jump(fs, &fan.ur_2star, &fan.ur_star, fan.sr_star)
    } else {
        jump(r.f, &fan.ur_star, &r.u, fan.sr)
    };
    RiemannFlux { flux, hll_fallback: false }
}

fn glm_primitive_pair(faces: &FacePair, gamma: GasGamma) -> Result<(PrimitiveState, PrimitiveState)> {
    let wl = conserved_to_primitive_unchecked(&faces.left, gamma);
    let wr = conserved_to_primitive_unchecked(&faces.right, gamma);
    wl.validate()?;
    wr.validate()?;
    Ok((wl, wr))
}

/// Fan speeds and intermediate states for a face pair (normal field taken as the mean
/// of the two sides). `None` when no valid four-state fan exists.
pub fn hlld_fan(faces: &FacePair, gamma: GasGamma) -> Result<Option<HlldFan>> {
    let (mut wl, mut wr) = glm_primitive_pair(faces, gamma)?;
    let n = faces.direction.axis();
    let bn = 0.5 * (wl.b[n] + wr.b[n]);
    wl.b[n] = bn;
    wr.b[n] = bn;
    let l = side(wl, faces.direction, gamma, 0.0);
    let r = side(wr, faces.direction, gamma, 0.0);
    Ok(build_fan(&l, &r, n, gamma))
}

/// HLLD numerical flux. The pair is expected to carry a single-valued normal field and
/// cleaning scalar (the output of [`glm_subsystem`]); the means of the two sides are used.
pub fn hlld_flux(faces: &FacePair, gamma: GasGamma, ch: f64) -> Result<RiemannFlux> {
    let (mut wl, mut wr) = glm_primitive_pair(faces, gamma)?;
    let n = faces.direction.axis();
    let bn = 0.5 * (wl.b[n] + wr.b[n]);
    let psi = 0.5 * (wl.psi + wr.psi);
    wl.b[n] = bn;
    wr.b[n] = bn;
    wl.psi = psi;
    wr.psi = psi;
    Ok(hlld_primitive(wl, wr, faces.direction, gamma, ch))
}

/// Flux through the face between cells `m` and `m+1` of a 4-cell stencil
/// `[m-1, m, m+1, m+2]` taken along `d`: reconstruction, GLM subsystem, then HLLD.
pub fn face_flux(
    stencil: &[ConservedState; 4],
    d: Direction,
    gamma: GasGamma,
    ch: f64,
    opts: &SchemeOptions,
) -> Result<RiemannFlux> {
    let (_, mut wl) = reconstruct_primitive(&[stencil[0], stencil[1], stencil[2]], gamma, opts)?;
    let (mut wr, _) = reconstruct_primitive(&[stencil[1], stencil[2], stencil[3]], gamma, opts)?;
    let n = d.axis();
    let (bn, psi) = glm_star(wl.b[n], wr.b[n], wl.psi, wr.psi, ch);
    wl.b[n] = bn;
    wr.b[n] = bn;
    wl.psi = psi;
    wr.psi = psi;
    Ok(hlld_primitive(wl, wr, d, gamma, ch))
}

/// Flux a coarse cell sees through a face covered by four fine faces: the area-weighted
/// mean, so that the coarse and fine updates telescope.
pub fn reconcile_coarse_flux(fine: &[FluxVector; 4]) -> FluxVector {
    (fine[0] + fine[1] + fine[2] + fine[3]) * 0.25
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{physical_flux, primitive_to_conserved};
    use proptest::prelude::*;

    fn g() -> GasGamma {
        GasGamma::default()
    }

    #[test]
    fn mc_slope_cases() {
        assert_eq!(mc_slope(0.0, 1.0, 2.0), 1.0);
        assert_eq!(mc_slope(0.0, 1.0, 0.0), 0.0);
        assert_eq!(mc_slope(0.0, 1.0, 4.0), 2.0);
        assert_eq!(mc_slope(4.0, 1.0, 0.0), -2.0);
    }

    fn cons(rho: f64, p: f64, u: [f64; 3], b: [f64; 3]) -> ConservedState {
        primitive_to_conserved(&PrimitiveState::new(rho, p, u, b), g()).unwrap()
    }

    #[test]
    fn constant_stencil_faces() {
        let c = cons(1.0, 2.0, [0.1, 0.2, 0.3], [0.5, -0.2, 0.1]);
        let (lo, hi) = reconstruct_faces(&[c, c, c], g(), &SchemeOptions::default()).unwrap();
        assert_eq!(lo, c);
        assert_eq!(hi, c);
    }

    #[test]
    fn linear_density_faces() {
        let base = cons(1.0, 1.0, [0.0; 3], [0.0; 3]);
        let mut s = [base; 3];
        s[0][RHO] = 0.9;
        s[2][RHO] = 1.1;
        let (lo, hi) = reconstruct_faces(&s, g(), &SchemeOptions::default()).unwrap();
        assert!((lo[RHO] - 0.95).abs() < 1e-15);
        assert!((hi[RHO] - 1.05).abs() < 1e-15);
        for k in 1..NVARS {
            assert_eq!(lo[k], base[k]);
            assert_eq!(hi[k], base[k]);
        }
    }

    #[test]
    fn positivity_fallback_zeroes_slopes() {
        // steep energy drop: the limited face energy would give a negative pressure
        let c = cons(1.0, 1e-3, [0.0; 3], [0.0; 3]);
        let mut s = [c; 3];
        s[0][ENERGY] = 0.0;
        s[2][ENERGY] = 2.0 * c[ENERGY] + 1.0;
        let (lo, hi) = reconstruct_faces(&s, g(), &SchemeOptions::default()).unwrap();
        assert_eq!(lo, c);
        assert_eq!(hi, c);
    }

    #[test]
    fn invalid_centre_is_an_error() {
        let c = cons(1.0, 1.0, [0.0; 3], [0.0; 3]);
        let mut bad = c;
        bad[ENERGY] = -1.0;
        assert!(reconstruct_faces(&[c, bad, c], g(), &SchemeOptions::default()).is_err());
    }

    #[test]
    fn psi_can_stay_piecewise_constant() {
        let mut s = [cons(1.0, 1.0, [0.0; 3], [0.0; 3]); 3];
        s[0][PSI] = -1.0;
        s[2][PSI] = 1.0;
        let opts = SchemeOptions { reconstruct_psi: false, ..Default::default() };
        let (lo, hi) = reconstruct_faces(&s, g(), &opts).unwrap();
        assert_eq!(lo[PSI], 0.0);
        assert_eq!(hi[PSI], 0.0);
    }

    fn pair_with(bl: f64, br: f64, psil: f64, psir: f64) -> FacePair {
        let mut left = cons(1.0, 1.0, [0.0; 3], [bl, 0.0, 0.0]);
        let mut right = cons(1.0, 1.0, [0.0; 3], [br, 0.0, 0.0]);
        left[PSI] = psil;
        right[PSI] = psir;
        FacePair { left, right, direction: Direction::X }
    }

    #[test]
    fn glm_continuous_state() {
        let (b, q) = glm_subsystem(&pair_with(0.7, 0.7, 0.3, 0.3), 2.0);
        assert_eq!((b, q), (0.7, 0.3));
    }

    #[test]
    fn glm_psi_jump() {
        let ch = 1.7;
        let (b, q) = glm_subsystem(&pair_with(0.5, 0.5, ch, -ch), ch);
        assert!((b - 1.5).abs() < 1e-15);
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn glm_large_speed_limit() {
        let (b, _) = glm_subsystem(&pair_with(0.2, 0.6, 0.1, -0.4), 1e12);
        assert!((b - 0.4).abs() < 1e-12);
    }

    #[test]
    fn supersonic_upwinding() {
        let l = cons(1.0, 0.1, [20.0, 0.0, 0.0], [0.1, 0.2, 0.0]);
        let r = cons(0.5, 0.2, [18.0, 0.0, 0.0], [0.1, 0.1, 0.0]);
        let faces = FacePair { left: l, right: r, direction: Direction::X };
        let f = hlld_flux(&faces, g(), 1.0).unwrap();
        assert_eq!(f.flux, physical_flux(&l, Direction::X, g(), 1.0).unwrap());
    }

    #[test]
    fn reconcile_constant() {
        let f = FluxVector([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(reconcile_coarse_flux(&[f; 4]), f);
    }

    fn valid_primitive() -> impl Strategy<Value = PrimitiveState> {
        (
            0.05f64..5.0,
            0.05f64..5.0,
            prop::array::uniform3(-2.0f64..2.0),
            prop::array::uniform3(-2.0f64..2.0),
        )
            .prop_map(|(rho, p, u, b)| PrimitiveState::new(rho, p, u, b))
    }

    fn mirror(w: &PrimitiveState, n: usize) -> PrimitiveState {
        let mut m = *w;
        m.u[n] = -m.u[n];
        m.b[n] = -m.b[n];
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn consistency(w in valid_primitive(), n in 0usize..3, ch in 0.5f64..5.0) {
            let d = Direction::from_axis(n);
            let u = primitive_to_conserved(&w, g()).unwrap();
            let f = hlld_flux(&FacePair { left: u, right: u, direction: d }, g(), ch).unwrap();
            let exact = physical_flux(&u, d, g(), ch).unwrap();
            prop_assert!(!f.hll_fallback);
            prop_assert!((f.flux - exact).max_abs() <= 1e-12 * exact.max_abs().max(1.0));
        }

        #[test]
        fn mirror_negates_mass_flux(wl in valid_primitive(), wr in valid_primitive(), n in 0usize..3) {
            let d = Direction::from_axis(n);
            let bn = 0.5 * (wl.b[n] + wr.b[n]);
            let (mut wl, mut wr) = (wl, wr);
            wl.b[n] = bn;
            wr.b[n] = bn;
            let a = hlld_primitive(wl, wr, d, g(), 1.0);
            let b = hlld_primitive(mirror(&wr, n), mirror(&wl, n), d, g(), 1.0);
            let scale = a.flux[RHO].abs().max(1.0);
            prop_assert!((a.flux[RHO] + b.flux[RHO]).abs() <= 1e-12 * scale);
        }
    }
}
