//! Direct scattering for the 2x2 linear system attached to a unit-background
//! field: renormalized transmission coefficient, point spectrum on (-1, 1),
//! and the ordered-integral (Neumann) expansion of the Jost limit.
//!
//! Spectral parameters live on the two-sheeted surface `lambda^2 = z^2 + 1`,
//! uniformized by `zeta = lambda + z`, so that `1/zeta = lambda - z` and
//! `1 - zeta^2 = -2 z zeta`. The physical (upper) sheet has `Im z > 0` away
//! from the continuous spectrum; its boundary consists of the imaginary axis
//! `z = i tau / 2` (`tau >= 2`) and the two cut rays `z = xi / 2` real. On the
//! upper sheet `Im zeta > 0`; on the cut `zeta` is real with `zeta > 0` on the
//! branch `lambda > 0` and `zeta` in `(-1, 0)` on the other.
//!
//! Two complementary integration routes are used. Away from the cut the
//! renormalized first-order system for `w` (whose first component tends to
//! `e^{-phi_correction} * Tc^{-1}`) is integrated with a fourth-order Magnus
//! scheme; the diagonal growth `2 i z` is handled by exact 2x2 exponentials.
//! On the cut, where the renormalized coefficients can lose integrability
//! (their common denominator `|q|^2 - zeta^2` may vanish), the classical
//! system in the frame `e^{i z x}` is integrated instead and the classical
//! `T^{-1}` is extracted by projecting off the oscillatory companion mode;
//! the renormalized coefficient then follows from the mass/momentum phase.

use crate::error::{GpError, Result};
use crate::field::{mass_momentum, surrogate_smallness, GPField};
use crate::grid::{make_grid, C64, SampledFunction};
use rayon::prelude::*;
use serde::Serialize;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Base per-cell refinement of the sampling grid used by the integrators.
const BASE_REFINE: usize = 4;
/// Hard ceiling on per-cell refinement; beyond this the point is declared
/// numerically unreachable instead of silently degrading.
const MAX_REFINE: usize = 256;
/// Safety factor applied to coefficient sups when choosing step sizes,
/// covering inter-node peaks not seen by the sampled maximum.
const SUP_SAFETY: f64 = 1.5;
/// Step bound per unit coefficient magnitude.
const H_PER_SUP: f64 = 0.25;
/// Off-cut step bound per unit |z| (keeps the commutator remainder of the
/// Magnus step small when the diagonal rate is large).
const H_PER_Z_OFF_CUT: f64 = 0.6;
/// On-cut step bound per unit oscillation rate (resolves `e^{2izx}`).
const H_PER_Z_ON_CUT: f64 = 0.1;
/// Minimum admissible on-cut denominator before the renormalized
/// coefficients are declared unusable at that point.
const ON_CUT_MIN_DENOM: f64 = 1e-6;
/// Magnitude at which the marching solution is declared to overflow.
const OVERFLOW_NORM_SQ: f64 = 1e24;

// ---------------------------------------------------------------------------
// Spectral points
// ---------------------------------------------------------------------------

/// Where a spectral point sits relative to the continuous spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointKind {
    /// `z = i tau / 2` with `tau >= 2`; `lambda = +- i sigma`,
    /// `sigma = sqrt(tau^2/4 - 1)`.
    ImagAxis { tau: f64 },
    /// `z = xi / 2` real; `lambda = +- sqrt(xi^2/4 + 1)` with `|lambda| >= 1`.
    Cut { xi: f64, positive_lambda: bool },
    /// Any other upper-sheet point.
    Generic,
}

/// A point on the upper sheet of `lambda^2 = z^2 + 1` together with its
/// uniformizing coordinate `zeta = lambda + z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    lambda: C64,
    z: C64,
    zeta: C64,
    kind: PointKind,
}

impl SpectralPoint {
    /// Upper-sheet point over a given `lambda` away from the cut rays.
    /// Real `lambda` with `|lambda| >= 1` is rejected: such points belong to
    /// the cut and need an explicit branch choice (use [`SpectralPoint::cut`]).
    pub fn from_lambda(lambda: C64) -> Result<Self> {
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(GpError::Numerical(format!(
                "spectral point rejected: lambda = {lambda} is not finite"
            )));
        }
        if lambda.im == 0.0 && lambda.re.abs() >= 1.0 {
            return Err(GpError::Numerical(format!(
                "lambda = {} lies on the continuous spectrum; construct cut \
                 points from xi and the lambda sign instead",
                lambda.re
            )));
        }
        let mut z = (lambda * lambda - ONE).sqrt();
        if z.im < 0.0 {
            z = -z;
        }
        let kind = if lambda.re == 0.0 && lambda.im != 0.0 {
            PointKind::ImagAxis { tau: 2.0 * z.im }
        } else if lambda.re == 0.0 && lambda.im == 0.0 {
            PointKind::ImagAxis { tau: 2.0 }
        } else {
            PointKind::Generic
        };
        Ok(Self {
            lambda,
            z,
            zeta: lambda + z,
            kind,
        })
    }

    /// Point on the imaginary axis: `z = i tau / 2` with `tau >= 2`.
    /// `positive_lambda` selects `lambda = +i sigma` (then `zeta = i omega`
    /// with `omega = tau/2 + sigma >= 1`) or `lambda = -i sigma` (then
    /// `zeta = i / omega`).
    pub fn imag_axis(tau: f64, positive_lambda: bool) -> Result<Self> {
        if !(tau >= 2.0) {
            return Err(GpError::Numerical(format!(
                "imaginary-axis points require tau >= 2, got {tau}"
            )));
        }
        let sigma = (tau * tau / 4.0 - 1.0).max(0.0).sqrt();
        let lambda = C64::new(0.0, if positive_lambda { sigma } else { -sigma });
        let z = C64::new(0.0, tau / 2.0);
        Ok(Self {
            lambda,
            z,
            zeta: lambda + z,
            kind: PointKind::ImagAxis { tau },
        })
    }

    /// Point on the cut: `z = xi / 2` real, `lambda = +- sqrt(xi^2/4 + 1)`.
    /// `xi = 0` (the branch points `lambda = +-1`, `zeta = +-1`) is a valid
    /// point, though the transmission coefficient is singular there.
    pub fn cut(xi: f64, positive_lambda: bool) -> Result<Self> {
        if !xi.is_finite() {
            return Err(GpError::Numerical(format!(
                "cut points require finite xi, got {xi}"
            )));
        }
        let z = xi / 2.0;
        let l = (xi * xi / 4.0 + 1.0).sqrt();
        let lambda = if positive_lambda { l } else { -l };
        Ok(Self {
            lambda: C64::new(lambda, 0.0),
            z: C64::new(z, 0.0),
            zeta: C64::new(lambda + z, 0.0),
            kind: PointKind::Cut {
                xi,
                positive_lambda,
            },
        })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    /// `1 / zeta`, computed as `lambda - z` (exact on the surface).
    pub fn inv_zeta(&self) -> C64 {
        self.lambda - self.z
    }

    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn on_cut(&self) -> bool {
        matches!(self.kind, PointKind::Cut { .. })
    }
}

// ---------------------------------------------------------------------------
// Refined sampling
// ---------------------------------------------------------------------------

/// Field samples refined to `2 R` nodes per original cell, so that a marching
/// step over one refined cell pair has an exact midpoint node. The arrays
/// cover the full periodic window `[x0, x0 + L)` (for kink data the tail past
/// the last original node holds the reflection seam); integration uses nodes
/// `0 ..= last` with `last = 2 R (n - 1)`.
pub(crate) struct RefinedSamples {
    pub(crate) refine: usize,
    pub(crate) node_dx: f64,
    pub(crate) x0: f64,
    pub(crate) length: f64,
    pub(crate) q: Vec<C64>,
    pub(crate) qx: Vec<C64>,
    /// `|q|^2 - 1` at each node.
    pub(crate) a: Vec<f64>,
    pub(crate) last: usize,
    /// Unit-normalized edge values of the field.
    pub(crate) q_left: C64,
    pub(crate) q_right: C64,
}

impl RefinedSamples {
    pub(crate) fn new(q: &GPField, refine: usize) -> Result<Self> {
        if refine == 0 || !refine.is_power_of_two() {
            return Err(GpError::Grid(format!(
                "refinement must be a power of two, got {refine}"
            )));
        }
        let grid = q.grid();
        let n = grid.n();
        let factor = 2 * refine;
        let (qs, qxs) = match q.boundary() {
            crate::field::BoundaryKind::Flat => {
                let up = q.samples().upsample(factor)?;
                let dup = q.samples().spectral_derivative(1).upsample(factor)?;
                (up.values, dup.values)
            }
            crate::field::BoundaryKind::Kink => {
                let doubled = q.samples().reflect_double();
                let up = doubled.upsample(factor)?;
                let dup = doubled.spectral_derivative(1).upsample(factor)?;
                let keep = factor * n;
                (up.values[..keep].to_vec(), dup.values[..keep].to_vec())
            }
        };
        let a = qs.iter().map(|v| v.norm_sqr() - 1.0).collect();
        let last = factor * (n - 1);
        let (el, er) = q.edge_values();
        Ok(Self {
            refine,
            node_dx: grid.dx() / factor as f64,
            x0: grid.x0(),
            length: grid.length(),
            q: qs,
            qx: qxs,
            a,
            last,
            q_left: el / el.norm(),
            q_right: er / er.norm(),
        })
    }
}

// ---------------------------------------------------------------------------
// Renormalized coefficients
// ---------------------------------------------------------------------------

/// The four renormalized coefficients over the refined nodes, sharing the
/// denominator `|q|^2 - zeta^2`:
///
/// * `c1 = (i zeta (|q|^2 - 1) - conj(q) q') / (|q|^2 - zeta^2)`
/// * `c2 = (i zeta q' + (|q|^2 - 1) q) / (|q|^2 - zeta^2)`
/// * `c3 = (-i zeta conj(q') + (|q|^2 - 1) conj(q)) / (|q|^2 - zeta^2)`
/// * `c4 = (2 i zeta (|q|^2 - 1) + q conj(q') - conj(q) q') / (|q|^2 - zeta^2)`
pub(crate) struct RenormCoefficients {
    pub(crate) c1: Vec<C64>,
    pub(crate) c2: Vec<C64>,
    pub(crate) c3: Vec<C64>,
    pub(crate) c4: Vec<C64>,
    /// Largest norm among `c2, c3, c4` over the nodes.
    pub(crate) sup: f64,
    pub(crate) min_den: f64,
}

/// Scan the denominator `|q|^2 - zeta^2` over the refined nodes. On the cut
/// (`zeta` real) a sign change or a magnitude below [`ON_CUT_MIN_DENOM`] is an
/// error: the renormalized coefficients are not usable at that point and the
/// classical route must be taken. Off the cut the minimum is bounded below by
/// `(Im zeta)^2`, which is asserted in debug builds.
fn denominator_scan(r: &RefinedSamples, pt: &SpectralPoint) -> Result<f64> {
    let zeta2 = pt.zeta * pt.zeta;
    if pt.on_cut() {
        let z2 = zeta2.re;
        let mut min = f64::INFINITY;
        let mut prev_sign = 0i8;
        for &a in &r.a {
            let d = a + 1.0 - z2;
            min = min.min(d.abs());
            let s = if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            };
            if prev_sign != 0 && s != 0 && s != prev_sign {
                return Err(GpError::Numerical(format!(
                    "on-cut coefficient denominator |q|^2 - zeta^2 changes \
                     sign across the window (zeta^2 = {z2:.6}, smallest \
                     sampled magnitude {min:.3e}); the renormalized system is \
                     singular here"
                )));
            }
            if s != 0 {
                prev_sign = s;
            }
        }
        if min < ON_CUT_MIN_DENOM {
            return Err(GpError::Numerical(format!(
                "on-cut coefficient denominator |q|^2 - zeta^2 reaches \
                 {min:.3e} (below {ON_CUT_MIN_DENOM:.1e}); the renormalized \
                 system is too close to singular"
            )));
        }
        Ok(min)
    } else {
        let mut min = f64::INFINITY;
        for &a in &r.a {
            let d = (C64::new(a + 1.0, 0.0) - zeta2).norm();
            min = min.min(d);
        }
        debug_assert!(
            min + 1e-13 >= pt.zeta.im * pt.zeta.im,
            "off-cut denominator bound violated: min {min:.3e} < (Im zeta)^2"
        );
        Ok(min)
    }
}

fn renorm_coefficients(r: &RefinedSamples, pt: &SpectralPoint) -> Result<RenormCoefficients> {
    let min_den = denominator_scan(r, pt)?;
    let zeta = pt.zeta;
    let zeta2 = zeta * zeta;
    let izeta = I * zeta;
    let m = r.q.len();
    let mut c1 = Vec::with_capacity(m);
    let mut c2 = Vec::with_capacity(m);
    let mut c3 = Vec::with_capacity(m);
    let mut c4 = Vec::with_capacity(m);
    let mut sup: f64 = 0.0;
    for k in 0..m {
        let q = r.q[k];
        let qx = r.qx[k];
        let a = r.a[k];
        let den = C64::new(r.a[k] + 1.0, 0.0) - zeta2;
        let qbar_qx = q.conj() * qx;
        // q conj(q') - conj(q) q' = -2 i Im(conj(q) q')
        let wronsk = C64::new(0.0, -2.0 * qbar_qx.im);
        let v1 = (izeta * a - qbar_qx) / den;
        let v2 = (izeta * qx + a * q) / den;
        let v3 = (-izeta * qx.conj() + a * q.conj()) / den;
        let v4 = (2.0 * izeta * a + wronsk) / den;
        sup = sup.max(v2.norm()).max(v3.norm()).max(v4.norm());
        c1.push(v1);
        c2.push(v2);
        c3.push(v3);
        c4.push(v4);
    }
    Ok(RenormCoefficients {
        c1,
        c2,
        c3,
        c4,
        sup,
        min_den,
    })
}

// ---------------------------------------------------------------------------
// Coefficient fields and the phase integral
// ---------------------------------------------------------------------------

/// The renormalized coefficients materialized as sampled functions on the
/// refined grid, together with the phase `phi(x) = 2 i z x + int_0^x c4`.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub q1: SampledFunction,
    pub q2: SampledFunction,
    pub q3: SampledFunction,
    pub q4: SampledFunction,
    /// `phi(x) = 2 i z x + int_0^x q4(y) dy`, with the running integral
    /// evaluated by spectral antidifferentiation and anchored at the node
    /// nearest `x = 0`.
    pub phi: SampledFunction,
    pub point: SpectralPoint,
    /// Smallest sampled magnitude of the denominator `|q|^2 - zeta^2`.
    pub min_denominator: f64,
}

/// Antiderivative `F(x) = int_{x0}^x f` of a periodic-compatible sampled
/// function: the mean contributes a linear ramp, the oscillatory part is
/// divided by `i xi` mode by mode (Nyquist dropped).
fn spectral_antiderivative(f: &SampledFunction) -> SampledFunction {
    let n = f.n();
    let mut spec = f.raw_spectrum();
    let mean = spec[0] / n as f64;
    spec[0] = ZERO;
    for (k, v) in spec.iter_mut().enumerate().skip(1) {
        if 2 * k == n {
            *v = ZERO;
        } else {
            *v /= C64::new(0.0, f.grid.wavenumber(k));
        }
    }
    let osc = SampledFunction::from_raw_spectrum(&f.grid, spec).expect("same grid");
    let x0 = f.grid.x0();
    let base = osc.values[0];
    let values = (0..n)
        .map(|j| mean * (f.grid.x(j) - x0) + (osc.values[j] - base))
        .collect();
    SampledFunction {
        grid: f.grid.clone(),
        values,
    }
}

/// Materialize the renormalized coefficients of `q` at `pt` on the refined
/// grid. On the cut this fails if the common denominator `|q|^2 - zeta^2`
/// changes sign or falls below `1e-6` anywhere in the window.
pub fn coefficient_fields(q: &GPField, pt: &SpectralPoint) -> Result<CoefficientFields> {
    let r = RefinedSamples::new(q, BASE_REFINE)?;
    let co = renorm_coefficients(&r, pt)?;
    let fine = make_grid(r.length, r.q.len(), r.x0)?;
    let q4 = SampledFunction::new(fine.clone(), co.c4)?;
    let anti = spectral_antiderivative(&q4);
    // Anchor the running integral at the node nearest x = 0.
    let j0 = ((0.0 - r.x0) / fine.dx()).round().clamp(0.0, (fine.n() - 1) as f64) as usize;
    let base = anti.values[j0];
    let two_iz = 2.0 * I * pt.z;
    let phi_values = (0..fine.n())
        .map(|j| two_iz * fine.x(j) + (anti.values[j] - base))
        .collect();
    Ok(CoefficientFields {
        q1: SampledFunction::new(fine.clone(), co.c1)?,
        q2: SampledFunction::new(fine.clone(), co.c2)?,
        q3: SampledFunction::new(fine.clone(), co.c3)?,
        phi: SampledFunction::new(fine, phi_values)?,
        q4,
        point: *pt,
        min_denominator: co.min_den,
    })
}

// ---------------------------------------------------------------------------
// Phase correction
// ---------------------------------------------------------------------------

/// The renormalizing phase correction
///
/// `Phi = -(i / 2z) int (|q|^2-1)^2 / (|q|^2 - zeta^2) dx
///        + (1 / 2 z zeta) int conj(q) q' (|q|^2-1) / (|q|^2 - zeta^2) dx`,
///
/// so that `Tc^{-1} = e^Phi * w1(+inf)`. Undefined at the branch points
/// `z = 0`.
pub fn phi_correction(q: &GPField, pt: &SpectralPoint) -> Result<C64> {
    let r = RefinedSamples::new(q, BASE_REFINE)?;
    phi_correction_refined(&r, pt)
}

pub(crate) fn phi_correction_refined(r: &RefinedSamples, pt: &SpectralPoint) -> Result<C64> {
    if pt.z.norm() == 0.0 {
        return Err(GpError::Numerical(
            "the phase correction is singular at the branch points (z = 0)".into(),
        ));
    }
    denominator_scan(r, pt)?;
    let zeta2 = pt.zeta * pt.zeta;
    let ca = -I / (2.0 * pt.z);
    let cb = ONE / (2.0 * pt.z * pt.zeta);
    Ok(simpson_nodes(r.node_dx, r.last, |k| {
        let a = r.a[k];
        let den = C64::new(a + 1.0, 0.0) - zeta2;
        (ca * (a * a) + cb * (r.q[k].conj() * r.qx[k]) * a) / den
    }))
}

/// Composite Simpson rule over nodes `0 ..= last` (an even count of intervals)
/// with spacing `node_dx`.
fn simpson_nodes(node_dx: f64, last: usize, f: impl Fn(usize) -> C64) -> C64 {
    debug_assert!(last >= 2 && last % 2 == 0);
    let mut acc = f(0) + f(last);
    for k in 1..last {
        acc += f(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (node_dx / 3.0)
}

// ---------------------------------------------------------------------------
// 2x2 exponential stepping
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Mat2 {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
}

impl Mat2 {
    fn add(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
            d: self.d + o.d,
        }
    }

    fn sub(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a - o.a,
            b: self.b - o.b,
            c: self.c - o.c,
            d: self.d - o.d,
        }
    }

    fn scale(self, s: f64) -> Mat2 {
        Mat2 {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// `exp(self) v`, exactly: split off the trace, then
    /// `exp(B) = cosh(D) I + sinh(D)/D * B` for the traceless part `B` with
    /// `D^2 = det`-free invariant `((a-d)/2)^2 + bc`.
    fn exp_apply(self, v: (C64, C64)) -> (C64, C64) {
        let half_tr = (self.a + self.d) * 0.5;
        let c11 = (self.a - self.d) * 0.5;
        let delta_sq = c11 * c11 + self.b * self.c;
        let (ch, shc) = cosh_sinhc(delta_sq);
        let e = half_tr.exp();
        let bv0 = c11 * v.0 + self.b * v.1;
        let bv1 = self.c * v.0 - c11 * v.1;
        (e * (ch * v.0 + shc * bv0), e * (ch * v.1 + shc * bv1))
    }
}

/// `(cosh(D), sinh(D)/D)` from `s = D^2`, series-expanded for small `|s|`
/// where the square root and quotient lose accuracy.
fn cosh_sinhc(s: C64) -> (C64, C64) {
    if s.norm() < 1e-6 {
        let ch = ONE + s * (0.5 + s * ((1.0 / 24.0) + s * (1.0 / 720.0)));
        let shc = ONE + s * ((1.0 / 6.0) + s * ((1.0 / 120.0) + s * (1.0 / 5040.0)));
        (ch, shc)
    } else {
        let d = s.sqrt();
        (d.cosh(), d.sinh() / d)
    }
}

/// One fourth-order Magnus step over `[t, t+h]` from endpoint and midpoint
/// samples of the generator:
/// `Omega = (h/6)(A0 + 4 Am + A1) - (h^2/12) [Am, A1 - A0]`.
fn magnus_step(a0: Mat2, am: Mat2, a1: Mat2, h: f64) -> Mat2 {
    let simp = a0.add(am.scale(4.0)).add(a1).scale(h / 6.0);
    let diff = a1.sub(a0);
    let comm = am.mul(diff).sub(diff.mul(am));
    simp.sub(comm.scale(h * h / 12.0))
}

/// March `v' = A(x) v` across `steps` Magnus steps of width `h`, where
/// `mat(k)` samples `A` at refined node `k` and step `s` uses nodes
/// `2s, 2s+1, 2s+2`. Returns the final vector and the peak amplitude.
fn march(
    mat: &dyn Fn(usize) -> Mat2,
    steps: usize,
    h: f64,
    init: (C64, C64),
    x0: f64,
    node_dx: f64,
) -> Result<((C64, C64), f64)> {
    let mut v = init;
    let mut peak = v.0.norm_sqr().max(v.1.norm_sqr());
    for s in 0..steps {
        let k = 2 * s;
        let om = magnus_step(mat(k), mat(k + 1), mat(k + 2), h);
        v = om.exp_apply(v);
        let m = v.0.norm_sqr().max(v.1.norm_sqr());
        if !m.is_finite() || m > OVERFLOW_NORM_SQ {
            return Err(GpError::Numerical(format!(
                "linear-system integration overflow near x = {:.3} (solution \
                 magnitude {:.3e})",
                x0 + (k + 2) as f64 * node_dx,
                m.sqrt()
            )));
        }
        if m > peak {
            peak = m;
        }
    }
    Ok((v, peak.sqrt()))
}

// ---------------------------------------------------------------------------
// Step-size policy
// ---------------------------------------------------------------------------

/// Smallest power-of-two refinement (at least [`BASE_REFINE`]) whose step
/// `dx / R` stays below `h_max`; errors out past [`MAX_REFINE`].
fn refine_for(dx: f64, h_max: f64, context: &str) -> Result<usize> {
    let mut r = BASE_REFINE;
    while dx / r as f64 > h_max {
        r *= 2;
        if r > MAX_REFINE {
            return Err(GpError::Numerical(format!(
                "adaptive stepping would need more than {MAX_REFINE} nodes \
                 per cell ({context}); the spectral point is numerically \
                 unreachable at this grid resolution"
            )));
        }
    }
    Ok(r)
}

fn renorm_h_max(sup: f64, pt: &SpectralPoint) -> f64 {
    let mut h = f64::INFINITY;
    if sup > 0.0 {
        h = h.min(H_PER_SUP / (sup * SUP_SAFETY));
    }
    let zn = pt.z.norm();
    if zn > 0.0 {
        if pt.on_cut() {
            h = h.min(H_PER_Z_ON_CUT / zn);
        } else {
            h = h.min(H_PER_Z_OFF_CUT / zn);
        }
    }
    h
}

fn classical_h_max(sup_q: f64, pt: &SpectralPoint) -> f64 {
    let rate = pt.z.norm() + 1.0;
    (H_PER_SUP / (sup_q * SUP_SAFETY)).min(H_PER_Z_ON_CUT / rate)
}

// ---------------------------------------------------------------------------
// Jost solve (renormalized route)
// ---------------------------------------------------------------------------

/// Diagnostics of a marching solve.
#[derive(Debug, Clone)]
pub struct JostTrace {
    /// Number of Magnus steps taken.
    pub steps: usize,
    /// Per-cell refinement used.
    pub refine: usize,
    /// Largest sampled coefficient norm (excluding the constant diagonal).
    pub sup_coefficient: f64,
    /// Smallest sampled denominator `|q|^2 - zeta^2` (infinite for the
    /// classical route, which has no denominator).
    pub min_denominator: f64,
    /// Window-truncation surrogate: coefficient mass in the outer margins.
    pub truncation_bound: f64,
    /// Peak solution amplitude along the march.
    pub peak_amplitude: f64,
}

/// Integrate the renormalized system
/// `w' = [[0, q2], [q3, 2 i z + q4]] w`, `w(-inf) = (1, 0)`,
/// across the window with automatic step refinement. The first component of
/// the result tends to `e^{-Phi} Tc^{-1}`.
pub fn jost_solve(q: &GPField, pt: &SpectralPoint) -> Result<(C64, JostTrace)> {
    let r0 = RefinedSamples::new(q, BASE_REFINE)?;
    let co0 = renorm_coefficients(&r0, pt)?;
    let need = refine_for(
        q.grid().dx(),
        renorm_h_max(co0.sup, pt),
        &format!("coefficient sup {:.3e}, |z| {:.3e}", co0.sup, pt.z.norm()),
    )?;
    if need == BASE_REFINE {
        jost_march(&r0, &co0, pt)
    } else {
        let r = RefinedSamples::new(q, need)?;
        let co = renorm_coefficients(&r, pt)?;
        jost_march(&r, &co, pt)
    }
}

/// As [`jost_solve`] but at a caller-fixed refinement.
pub(crate) fn jost_solve_refined(r: &RefinedSamples, pt: &SpectralPoint) -> Result<(C64, JostTrace)> {
    let co = renorm_coefficients(r, pt)?;
    jost_march(r, &co, pt)
}

fn jost_march(
    r: &RefinedSamples,
    co: &RenormCoefficients,
    pt: &SpectralPoint,
) -> Result<(C64, JostTrace)> {
    let two_iz = 2.0 * I * pt.z;
    let mat = |k: usize| Mat2 {
        a: ZERO,
        b: co.c2[k],
        c: co.c3[k],
        d: two_iz + co.c4[k],
    };
    let steps = r.last / 2;
    let h = 2.0 * r.node_dx;
    let ((w1, _), peak) = march(&mat, steps, h, (ONE, ZERO), r.x0, r.node_dx)?;
    Ok((
        w1,
        JostTrace {
            steps,
            refine: r.refine,
            sup_coefficient: co.sup,
            min_denominator: co.min_den,
            truncation_bound: margin_mass(r, |k| co.c2[k].norm() + co.c3[k].norm()),
            peak_amplitude: peak,
        },
    ))
}

/// Coefficient mass over the outer 5% margins, as a window-truncation
/// surrogate.
fn margin_mass(r: &RefinedSamples, f: impl Fn(usize) -> f64) -> f64 {
    let m = (r.last / 20).max(1);
    let mut acc = 0.0;
    for k in 0..=m {
        acc += f(k) + f(r.last - k);
    }
    acc * r.node_dx
}

// ---------------------------------------------------------------------------
// Classical route (cut)
// ---------------------------------------------------------------------------

/// Integrate the classical system in the `e^{izx}` frame,
/// `v' = [[i(z - lambda), q], [conj(q), i(z + lambda)]] v`, from the left
/// background eigenvector, and project the result onto the non-oscillatory
/// mode at the right edge. The projection
/// `A = (i (lambda + z) conj(q_R) v1 - v2) / (2 i z conj(q_R))`
/// is exactly the classical `T^{-1}`; the oscillatory companion is
/// annihilated whatever its coefficient.
fn classical_connection(r: &RefinedSamples, pt: &SpectralPoint) -> Result<(C64, JostTrace)> {
    if pt.z.norm() == 0.0 {
        return Err(GpError::Numerical(
            "the transmission coefficient is singular at the branch points \
             (z = 0); sample the cut away from xi = 0"
                .into(),
        ));
    }
    let lambda = pt.lambda;
    let z = pt.z;
    let dm = I * (z - lambda);
    let dp = I * (z + lambda);
    let mat = |k: usize| Mat2 {
        a: dm,
        b: r.q[k],
        c: r.q[k].conj(),
        d: dp,
    };
    let init = (ONE, I * (lambda - z) * r.q_left.conj());
    let steps = r.last / 2;
    let h = 2.0 * r.node_dx;
    let ((v1, v2), peak) = march(&mat, steps, h, init, r.x0, r.node_dx)?;
    let qbr = r.q_right.conj();
    let a = (I * (lambda + z) * qbr * v1 - v2) / (2.0 * I * z * qbr);
    let sup_q = r.a.iter().fold(0.0f64, |m, &a| m.max(a + 1.0)).sqrt();
    Ok((
        a,
        JostTrace {
            steps,
            refine: r.refine,
            sup_coefficient: sup_q,
            min_denominator: f64::INFINITY,
            truncation_bound: margin_mass(r, |k| 2.0 * r.q[k].norm()),
            peak_amplitude: peak,
        },
    ))
}

fn classical_auto(q: &GPField, pt: &SpectralPoint) -> Result<(C64, JostTrace)> {
    let sup_q = q.samples().max_abs();
    let need = refine_for(
        q.grid().dx(),
        classical_h_max(sup_q, pt),
        &format!("|q| sup {:.3e}, |z| {:.3e}", sup_q, pt.z.norm()),
    )?;
    let r = RefinedSamples::new(q, need)?;
    classical_connection(&r, pt)
}

// ---------------------------------------------------------------------------
// Transmission
// ---------------------------------------------------------------------------

/// `i (M / 2z + P / (2 z zeta))`: the phase by which the classical and
/// renormalized coefficients differ, `T^{-1} = e^{reduction} Tc^{-1}`.
pub fn reduction_phase(q: &GPField, pt: &SpectralPoint) -> Result<C64> {
    if pt.z.norm() == 0.0 {
        return Err(GpError::Numerical(
            "the transmission coefficient is singular at the branch points \
             (z = 0); sample the cut away from xi = 0"
                .into(),
        ));
    }
    let (m, p) = mass_momentum(q);
    Ok(I * (m / (2.0 * pt.z) + p / (2.0 * pt.z * pt.zeta)))
}

fn renormalized_auto(q: &GPField, pt: &SpectralPoint) -> Result<(C64, C64, JostTrace)> {
    let mut r = RefinedSamples::new(q, BASE_REFINE)?;
    let mut co = renorm_coefficients(&r, pt)?;
    let need = refine_for(
        q.grid().dx(),
        renorm_h_max(co.sup, pt),
        &format!("coefficient sup {:.3e}, |z| {:.3e}", co.sup, pt.z.norm()),
    )?;
    if need != BASE_REFINE {
        r = RefinedSamples::new(q, need)?;
        co = renorm_coefficients(&r, pt)?;
    }
    let (w1, trace) = jost_march(&r, &co, pt)?;
    let phi = phi_correction_refined(&r, pt)?;
    Ok((w1, phi, trace))
}

/// Renormalized transmission coefficient `Tc^{-1}` at `pt`.
///
/// Off the cut this is `e^Phi w1(+inf)` from the renormalized system; on the
/// cut (where the renormalized coefficients may be singular) it is computed
/// from the classical `T^{-1}` and the mass/momentum phase. Points with
/// `z = 0` are rejected.
pub fn transmission(q: &GPField, pt: &SpectralPoint) -> Result<C64> {
    match pt.kind {
        PointKind::Cut { .. } => {
            let (a, _) = classical_auto(q, pt)?;
            let red = reduction_phase(q, pt)?;
            Ok(a * (-red).exp())
        }
        _ => {
            let (w1, phi, _) = renormalized_auto(q, pt)?;
            Ok(phi.exp() * w1)
        }
    }
}

/// Classical transmission coefficient `T^{-1}` at `pt`; related to the
/// renormalized one by `T^{-1} = e^{i(M/2z + P/2 z zeta)} Tc^{-1}`.
pub fn transmission_classical(q: &GPField, pt: &SpectralPoint) -> Result<C64> {
    match pt.kind {
        PointKind::Cut { .. } => {
            if pt.z.norm() == 0.0 {
                return Err(GpError::Numerical(
                    "the transmission coefficient is singular at the branch \
                     points (z = 0); sample the cut away from xi = 0"
                        .into(),
                ));
            }
            Ok(classical_auto(q, pt)?.0)
        }
        _ => {
            let red = reduction_phase(q, pt)?;
            let (w1, phi, _) = renormalized_auto(q, pt)?;
            Ok((red + phi).exp() * w1)
        }
    }
}

/// `log Tc^{-1}` assembled additively (branch-safe in the real part): off the
/// cut `Phi + Log w1`, on the cut `Log A - i(M/2z + P/2 z zeta)`.
pub fn log_transmission(q: &GPField, pt: &SpectralPoint) -> Result<C64> {
    match pt.kind {
        PointKind::Cut { .. } => {
            let (a, _) = classical_auto(q, pt)?;
            let red = reduction_phase(q, pt)?;
            Ok(a.ln() - red)
        }
        _ => {
            let (w1, phi, _) = renormalized_auto(q, pt)?;
            Ok(phi + w1.ln())
        }
    }
}

/// `log Tc^{-1}` evaluated at two step resolutions and combined by
/// fourth-order extrapolation, cancelling the leading step-size bias of the
/// marching schemes (about `1e-7` in the real part at the base resolution).
///
/// Intended for consumers that amplify small absolute errors: values on the
/// imaginary axis multiplied by `tau^2`, large-`tau` residuals after
/// subtracting expansion terms, and trace integrals. Costs about three plain
/// evaluations.
pub fn log_transmission_refined(q: &GPField, pt: &SpectralPoint) -> Result<C64> {
    let on_cut = matches!(pt.kind, PointKind::Cut { .. });
    let need = if on_cut {
        let sup_q = q.samples().max_abs();
        refine_for(
            q.grid().dx(),
            classical_h_max(sup_q, pt),
            &format!("|q| sup {:.3e}, |z| {:.3e}", sup_q, pt.z.norm()),
        )?
    } else {
        let r0 = RefinedSamples::new(q, BASE_REFINE)?;
        let co0 = renorm_coefficients(&r0, pt)?;
        refine_for(
            q.grid().dx(),
            renorm_h_max(co0.sup, pt),
            &format!("coefficient sup {:.3e}, |z| {:.3e}", co0.sup, pt.z.norm()),
        )?
    };
    if 2 * need > MAX_REFINE {
        return log_transmission(q, pt);
    }
    let red = reduction_phase(q, pt)?;
    let eval = |refine: usize| -> Result<C64> {
        let r = RefinedSamples::new(q, refine)?;
        if on_cut {
            let (a, _) = classical_connection(&r, pt)?;
            Ok(a.ln() - red)
        } else {
            let (w1, _) = jost_solve_refined(&r, pt)?;
            Ok(phi_correction_refined(&r, pt)? + w1.ln())
        }
    };
    let coarse = eval(need)?;
    let fine = eval(2 * need)?;
    // Realign a possible 2-pi branch disagreement between the two logs
    // before extrapolating.
    let turns = ((fine.im - coarse.im) / std::f64::consts::TAU).round();
    let coarse = C64::new(coarse.re, coarse.im + std::f64::consts::TAU * turns);
    Ok((16.0 * fine - coarse) / 15.0)
}

// ---------------------------------------------------------------------------
// Point spectrum
// ---------------------------------------------------------------------------

/// A zero of the transmission coefficient on `(-1, 1)`.
#[derive(Debug, Clone)]
pub struct Eigenvalue {
    pub lambda: f64,
    /// `Im z = sqrt(1 - lambda^2)` at the zero.
    pub z_im: f64,
    /// `|w1|` at the located root (filter threshold `1e-6`).
    pub residual: f64,
    /// `|d w1 / d lambda|` at the root (simplicity certificate).
    pub slope: f64,
    /// False when the root lies within twice the exclusion margin of `+-1`.
    pub resolved: bool,
}

/// Locate the zeros of the transmission coefficient on `(-1, 1)` with the
/// default edge exclusion `delta = 1e-3`.
pub fn eigenvalues(q: &GPField, grid_density: usize) -> Result<Vec<Eigenvalue>> {
    eigenvalues_with_exclusion(q, grid_density, 1e-3)
}

/// Scan `lambda` over `[-1 + delta, 1 - delta]` on `grid_density` nodes,
/// bracket sign changes of `Re w1` and `Im w1`, bisect each bracket to width
/// `1e-10`, and keep the roots where `|w1| <= 1e-6` (a sign change of one
/// component alone can be a phase rotation rather than a zero). Roots closer
/// than `2 delta` to `+-1` are flagged unresolved rather than trusted.
pub fn eigenvalues_with_exclusion(
    q: &GPField,
    grid_density: usize,
    delta: f64,
) -> Result<Vec<Eigenvalue>> {
    if grid_density < 8 {
        return Err(GpError::Numerical(format!(
            "eigenvalue scan needs at least 8 grid nodes, got {grid_density}"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(GpError::Numerical(format!(
            "eigenvalue edge exclusion must lie in (0, 0.5), got {delta}"
        )));
    }
    let lo = -1.0 + delta;
    let hi = 1.0 - delta;
    let lambdas: Vec<f64> = (0..grid_density)
        .map(|j| lo + (hi - lo) * j as f64 / (grid_density - 1) as f64)
        .collect();
    let vals: Vec<C64> = lambdas
        .par_iter()
        .map(|&l| scan_w1(q, l))
        .collect::<Result<_>>()?;

    let mut roots: Vec<f64> = Vec::new();
    for j in 0..grid_density - 1 {
        let (f0, f1) = (vals[j], vals[j + 1]);
        if f0.norm() == 0.0 {
            roots.push(lambdas[j]);
            continue;
        }
        for use_im in [false, true] {
            let (a, b) = if use_im {
                (f0.im, f1.im)
            } else {
                (f0.re, f1.re)
            };
            if a.abs().max(b.abs()) < 1e-12 {
                continue;
            }
            if a * b < 0.0 {
                roots.push(bisect_component(q, lambdas[j], lambdas[j + 1], a, use_im)?);
            }
        }
    }
    if vals[grid_density - 1].norm() == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-7);

    let mut out = Vec::new();
    for root in roots {
        let w = scan_w1(q, root)?;
        let residual = w.norm();
        if residual > 1e-6 {
            continue; // component crossing without a transmission zero
        }
        let eps = 1e-6;
        let wp = scan_w1(q, (root + eps).min(hi))?;
        let wm = scan_w1(q, (root - eps).max(lo))?;
        let slope = (wp - wm).norm() / ((root + eps).min(hi) - (root - eps).max(lo));
        if slope < 1e-6 {
            return Err(GpError::Numerical(format!(
                "transmission zero at lambda = {root:.8} is degenerate \
                 (local slope {slope:.3e}); simple zeros expected"
            )));
        }
        out.push(Eigenvalue {
            lambda: root,
            z_im: (1.0 - root * root).max(0.0).sqrt(),
            residual,
            slope,
            resolved: root.abs() < 1.0 - 2.0 * delta,
        });
    }
    Ok(out)
}

fn scan_w1(q: &GPField, lambda: f64) -> Result<C64> {
    let pt = SpectralPoint::from_lambda(C64::new(lambda, 0.0))?;
    Ok(jost_solve(q, &pt)?.0)
}

fn bisect_component(q: &GPField, mut a: f64, mut b: f64, mut fa: f64, use_im: bool) -> Result<f64> {
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        if b - a < 1e-10 {
            return Ok(m);
        }
        let w = scan_w1(q, m)?;
        let fm = if use_im { w.im } else { w.re };
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// Neumann expansion
// ---------------------------------------------------------------------------

/// Result of summing the ordered-integral expansion of `w1(+inf)`.
#[derive(Debug, Clone)]
pub struct NeumannReport {
    /// `S_j = 1 + sum_{m <= j} increment_m`, starting with the bare `S_0 = 1`.
    pub partial_sums: Vec<C64>,
    /// The ordered double integrals, one per expansion order.
    pub increments: Vec<C64>,
    /// Final partial sum.
    pub value: C64,
    /// Geometric tail estimate from the last two increments.
    pub tail_estimate: f64,
    /// True when the increments fell below `1e-13 * max(1, |S|)`.
    pub converged: bool,
    /// Energy-over-decay smallness surrogate governing convergence.
    pub smallness: f64,
    pub smallness_threshold: f64,
    /// Present when the smallness surrogate is at or above the threshold.
    pub warning: Option<String>,
}

struct SweepState {
    co: RenormCoefficients,
    /// Per-step `(e^theta, h psi_a(theta), h phi2(theta))` for the
    /// exponential-integrator update of the inner variable.
    weights: Vec<(C64, C64, C64)>,
    half_h: f64,
    last: usize,
    x0: f64,
    node_dx: f64,
    fprev: Vec<C64>,
}

impl SweepState {
    fn new(q: &GPField, pt: &SpectralPoint, refine: usize) -> Result<Self> {
        let r = RefinedSamples::new(q, refine)?;
        let co = renorm_coefficients(&r, pt)?;
        let two_iz = 2.0 * I * pt.z;
        let h = r.node_dx;
        let weights = (0..r.last)
            .map(|k| {
                let d0 = two_iz + co.c4[k];
                let d1 = two_iz + co.c4[k + 1];
                let theta = (d0 + d1) * (h / 2.0);
                let (e, psi, phi2) = etd_weights(theta);
                (e, psi * h, phi2 * h)
            })
            .collect();
        Ok(Self {
            weights,
            half_h: h / 2.0,
            last: r.last,
            x0: r.x0,
            node_dx: r.node_dx,
            fprev: vec![ONE; r.last + 1],
            co,
        })
    }

    /// Run one sweep of the pair
    /// `g' = (2iz + q4) g + q3 F_{j-1}`, `F_j' = q2 g`, both vanishing at the
    /// left edge, and return `F_j` at the window end (the next increment).
    fn next_increment(&mut self) -> Result<C64> {
        let mut g = ZERO;
        let mut f = ZERO;
        let mut fnew = vec![ZERO; self.last + 1];
        for k in 0..self.last {
            let (e, hpsi, hphi2) = self.weights[k];
            let gn = e * g
                + hpsi * self.co.c3[k] * self.fprev[k]
                + hphi2 * self.co.c3[k + 1] * self.fprev[k + 1];
            f += self.half_h * (self.co.c2[k] * g + self.co.c2[k + 1] * gn);
            g = gn;
            fnew[k + 1] = f;
            if k % 512 == 0 {
                let m = g.norm_sqr().max(f.norm_sqr());
                if !m.is_finite() || m > OVERFLOW_NORM_SQ {
                    return Err(GpError::Numerical(format!(
                        "ordered-integral sweep overflow near x = {:.3}",
                        self.x0 + k as f64 * self.node_dx
                    )));
                }
            }
        }
        self.fprev = fnew;
        Ok(f)
    }
}

/// `(e^theta, psi_a(theta), phi2(theta))` with
/// `psi_a = (theta e^theta - e^theta + 1)/theta^2` and
/// `phi2 = (e^theta - 1 - theta)/theta^2`, series-expanded for small `theta`.
fn etd_weights(theta: C64) -> (C64, C64, C64) {
    let e = theta.exp();
    if theta.norm() < 0.05 {
        let t = theta;
        let psi = C64::new(0.5, 0.0)
            + t * ((1.0 / 3.0)
                + t * (0.125 + t * ((1.0 / 30.0) + t * ((1.0 / 144.0) + t * (1.0 / 840.0)))));
        let phi2 = C64::new(0.5, 0.0)
            + t * ((1.0 / 6.0)
                + t * ((1.0 / 24.0)
                    + t * ((1.0 / 120.0) + t * ((1.0 / 720.0) + t * (1.0 / 5040.0)))));
        (e, psi, phi2)
    } else {
        let t2 = theta * theta;
        ((e), (theta * e - e + ONE) / t2, (e - ONE - theta) / t2)
    }
}

/// Sum the ordered-integral expansion of `w1(+inf)` at `pt`, at most `n_max`
/// orders. Each order is computed at two resolutions and Richardson-combined.
/// Divergence (twice-growing increments above the noise floor) is an error
/// naming the smallness surrogate; a surrogate at or above 1 only warns.
pub fn neumann_series(q: &GPField, pt: &SpectralPoint, n_max: usize) -> Result<NeumannReport> {
    if n_max == 0 {
        return Err(GpError::Numerical(
            "the ordered-integral expansion needs at least one order".into(),
        ));
    }
    let tau_eff = (2.0 * pt.z.im).max(2.0);
    let smallness = surrogate_smallness(q, 1.0, tau_eff)?;
    let threshold = 1.0;
    let warning = (smallness >= threshold).then(|| {
        format!(
            "smallness surrogate {smallness:.3} >= {threshold}; the \
             ordered-integral expansion may diverge"
        )
    });

    let mut fine = SweepState::new(q, pt, 2 * BASE_REFINE)?;
    let mut coarse = SweepState::new(q, pt, BASE_REFINE)?;

    let mut increments: Vec<C64> = Vec::new();
    let mut partial_sums = vec![ONE];
    let mut s = ONE;
    let mut converged = false;
    for _ in 1..=n_max {
        let inc_f = fine.next_increment()?;
        let inc_c = coarse.next_increment()?;
        let inc = (4.0 * inc_f - inc_c) / 3.0;
        s += inc;
        increments.push(inc);
        partial_sums.push(s);
        let m = inc.norm();
        if m < 1e-13 * s.norm().max(1.0) {
            converged = true;
            break;
        }
        let n = increments.len();
        if n >= 3 {
            let p1 = increments[n - 2].norm();
            let p2 = increments[n - 3].norm();
            if m > p1 && p1 > p2 && m > 1e-12 {
                return Err(GpError::Numerical(format!(
                    "ordered-integral expansion diverging (increments \
                     {p2:.3e}, {p1:.3e}, {m:.3e} growing); smallness \
                     surrogate {smallness:.3} against threshold {threshold}"
                )));
            }
        }
    }
    let tail_estimate = match increments.len() {
        0 => 0.0,
        1 => increments[0].norm(),
        n => {
            let b = increments[n - 1].norm();
            let a = increments[n - 2].norm();
            if a > 0.0 && b / a < 1.0 {
                b * (b / a) / (1.0 - b / a)
            } else {
                b
            }
        }
    };
    Ok(NeumannReport {
        value: s,
        partial_sums,
        increments,
        tail_estimate,
        converged,
        smallness,
        smallness_threshold: threshold,
        warning,
    })
}

// ---------------------------------------------------------------------------
// Scattering collection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CutSample {
    pub xi: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisSample {
    pub tau: f64,
    pub re_log: f64,
    pub im_log: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueOut {
    pub lambda: f64,
    pub z_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterDiagnostics {
    /// Total Magnus steps spent on the sampled sections.
    pub ode_steps: usize,
    /// Smallest `|Tc^{-1}|` over the cut samples (unit in exact arithmetic);
    /// absent when no cut samples were requested.
    pub min_cut_modulus: Option<f64>,
}

/// Scattering data of a field sampled over caller-supplied grids: `Tc^{-1}`
/// on the cut (branch `lambda > 0`), `log Tc^{-1}` on the imaginary axis
/// (branch `lambda = +i sigma`), and the point spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringData {
    pub cut: Vec<CutSample>,
    pub imag_axis: Vec<AxisSample>,
    pub eigenvalues: Vec<EigenvalueOut>,
    pub diagnostics: ScatterDiagnostics,
}

/// Sample the scattering data of `q`. `eigen_grid_density = 0` skips the
/// point-spectrum scan. Sampling is parallel with deterministic ordering.
pub fn collect_scattering(
    q: &GPField,
    tau_grid: &[f64],
    xi_grid: &[f64],
    eigen_grid_density: usize,
) -> Result<ScatteringData> {
    let cut_results: Vec<(CutSample, usize)> = xi_grid
        .par_iter()
        .map(|&xi| {
            let pt = SpectralPoint::cut(xi, true)?;
            let (a, trace) = classical_auto(q, &pt)?;
            let red = reduction_phase(q, &pt)?;
            let t = a * (-red).exp();
            Ok((
                CutSample {
                    xi,
                    re: t.re,
                    im: t.im,
                },
                trace.steps,
            ))
        })
        .collect::<Result<_>>()?;
    let axis_results: Vec<(AxisSample, usize)> = tau_grid
        .par_iter()
        .map(|&tau| {
            let pt = SpectralPoint::imag_axis(tau, true)?;
            let (w1, phi, trace) = renormalized_auto(q, &pt)?;
            let l = phi + w1.ln();
            Ok((
                AxisSample {
                    tau,
                    re_log: l.re,
                    im_log: l.im,
                },
                trace.steps,
            ))
        })
        .collect::<Result<_>>()?;
    let eigen = if eigen_grid_density == 0 {
        Vec::new()
    } else {
        eigenvalues(q, eigen_grid_density)?
            .into_iter()
            .map(|e| EigenvalueOut {
                lambda: e.lambda,
                z_im: e.z_im,
            })
            .collect()
    };
    let ode_steps = cut_results.iter().map(|(_, s)| s).sum::<usize>()
        + axis_results.iter().map(|(_, s)| s).sum::<usize>();
    let min_cut_modulus = cut_results
        .iter()
        .map(|(c, _)| (c.re * c.re + c.im * c.im).sqrt())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    Ok(ScatteringData {
        cut: cut_results.into_iter().map(|(c, _)| c).collect(),
        imag_axis: axis_results.into_iter().map(|(a, _)| a).collect(),
        eigenvalues: eigen,
        diagnostics: ScatterDiagnostics {
            ode_steps,
            min_cut_modulus,
        },
    })
}

// ---------------------------------------------------------------------------
