//! Time integration of the three flows handled by this crate and drift
//! monitoring of conserved functionals along the resulting trajectories.
//!
//! The defocusing Schrodinger flow uses Strang splitting: the nonlinear
//! substep is an exact pointwise phase rotation, the linear substep an exact
//! Fourier multiplier. The two third-order flows use an integrating factor
//! for the (exactly propagated) linear part and classical RK4 for the
//! dealiased nonlinear term. Kink-topology data are evolved on the
//! reflection-doubled window and snapshots are restricted back.

use crate::error::{GpError, Result};
use crate::field::{BoundaryKind, GPField};
use crate::grid::{C64, Grid, SampledFunction};

/// Which flow produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    /// `i q_t + q_xx = 2 q (|q|^2 - 1)`
    Gp,
    /// `psi_t + psi_xxx - 6 |psi|^2 psi_x = 0`
    Mkdv,
    /// `u_t - 6 u_x + u_xxx - 6 u u_x = 0`
    Kdv6,
}

impl Equation {
    pub fn tag(&self) -> &'static str {
        match self {
            Equation::Gp => "gp",
            Equation::Mkdv => "mkdv",
            Equation::Kdv6 => "kdv6",
        }
    }
}

/// A time-ordered sequence of field snapshots from one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub equation: Equation,
    /// Integration scheme identifier ("strang", "ifrk4", "ifrk4-background").
    pub scheme: &'static str,
    /// Stepping interval (uniform; negative for reversed runs).
    pub dt: f64,
    /// Total number of steps taken.
    pub steps: usize,
    /// Recommended |dt| ceiling for the scheme at this grid and data.
    pub stability_bound: f64,
    pub times: Vec<f64>,
    pub states: Vec<SampledFunction>,
}

impl Trajectory {
    pub fn initial(&self) -> &SampledFunction {
        &self.states[0]
    }

    pub fn final_state(&self) -> &SampledFunction {
        self.states.last().expect("trajectory has snapshots")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has snapshots")
    }

    /// Snapshot `i` revalidated as a boundary-flat field. Not meaningful for
    /// the real third-order flow.
    pub fn field(&self, i: usize) -> Result<GPField> {
        if self.equation == Equation::Kdv6 {
            return Err(GpError::Field(
                "real-flow trajectories do not carry unit-background fields".into(),
            ));
        }
        GPField::new(self.states[i].clone())
    }
}

/// Number of steps for a run, requiring `t_final` to be a whole number of
/// steps of `dt`. Negative `dt` with matching-sign `t_final` reverses time.
fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !dt.is_finite() || dt == 0.0 {
        return Err(GpError::Numerical(format!("dt must be finite and nonzero, got {dt}")));
    }
    if !t_final.is_finite() {
        return Err(GpError::Numerical("t_final must be finite".into()));
    }
    let ratio = t_final / dt;
    if ratio < -1e-9 {
        return Err(GpError::Numerical(format!(
            "t_final = {t_final} is not reachable with dt = {dt} (opposite signs)"
        )));
    }
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(GpError::Numerical(format!(
            "t_final = {t_final} is not a whole number of steps of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Blow-up criterion: sup norm beyond ten times its initial value.
pub(crate) fn blown_up(initial_max: f64, current_max: f64) -> bool {
    current_max > 10.0 * initial_max
}

/// Snapshot recorder shared by the steppers.
struct Recorder {
    every: usize,
    steps: usize,
    dt: f64,
    times: Vec<f64>,
    states: Vec<SampledFunction>,
    restrict: bool,
}

impl Recorder {
    fn new(steps: usize, dt: f64, snap_every: usize, restrict: bool) -> Self {
        let every = if snap_every == 0 {
            (steps / 200).max(1)
        } else {
            snap_every
        };
        Recorder {
            every,
            steps,
            dt,
            times: Vec::new(),
            states: Vec::new(),
            restrict,
        }
    }

    fn due(&self, step: usize) -> bool {
        step == 0 || step == self.steps || step % self.every == 0
    }

    fn record(&mut self, step: usize, grid: &Grid, values: &[C64]) -> Result<()> {
        let full = SampledFunction {
            grid: grid.clone(),
            values: values.to_vec(),
        };
        let state = if self.restrict { full.first_half()? } else { full };
        self.times.push(step as f64 * self.dt);
        self.states.push(state);
        Ok(())
    }
}

/// Working copy of the initial data, doubled when the topology requires it.
fn working_samples(q0: &GPField) -> (SampledFunction, bool) {
    match q0.boundary() {
        BoundaryKind::Flat => (q0.samples().clone(), false),
        BoundaryKind::Kink => (q0.samples().reflect_double(), true),
    }
}

// ---------------------------------------------------------------------------
// Strang splitting for the Schrodinger flow
// ---------------------------------------------------------------------------

/// Half-step of the nonlinear flow: `q <- q e^{-i dt (|q|^2 - 1)}` (the
/// half-step of the strength-2 phase rotation, so the exponent carries `dt`).
fn gp_half_phase(values: &mut [C64], dt: f64) {
    for q in values.iter_mut() {
        let a = q.norm_sqr() - 1.0;
        *q *= C64::from_polar(1.0, -dt * a);
    }
}

/// Evolve under `i q_t + q_xx = 2 q (|q|^2 - 1)` with default snapshot
/// cadence (about 200 snapshots).
pub fn evolve_gp(q0: &GPField, dt: f64, t_final: f64) -> Result<Trajectory> {
    evolve_gp_snap(q0, dt, t_final, 0)
}

/// As [`evolve_gp`] with an explicit snapshot cadence in steps
/// (`0` selects the default).
pub fn evolve_gp_snap(q0: &GPField, dt: f64, t_final: f64, snap_every: usize) -> Result<Trajectory> {
    let steps = step_count(dt, t_final)?;
    let (work, doubled) = working_samples(q0);
    let grid = work.grid.clone();
    let mut v = work.values;
    let initial_max = max_abs(&v);

    let linear: Vec<C64> = (0..grid.n())
        .map(|k| {
            let xi = grid.wavenumber(k);
            C64::from_polar(1.0, -xi * xi * dt)
        })
        .collect();

    let mut rec = Recorder::new(steps, dt, snap_every, doubled);
    rec.record(0, &grid, &v)?;
    for step in 1..=steps {
        gp_half_phase(&mut v, dt);
        SampledFunction::fft_forward_inplace(&mut v);
        for (z, m) in v.iter_mut().zip(&linear) {
            *z *= m;
        }
        SampledFunction::fft_inverse_inplace(&mut v);
        gp_half_phase(&mut v, dt);
        if blown_up(initial_max, max_abs(&v)) {
            return Err(GpError::Numerical(format!(
                "blow-up: sup norm exceeded 10x initial at t = {:.6}",
                step as f64 * dt
            )));
        }
        if rec.due(step) {
            rec.record(step, &grid, &v)?;
        }
    }

    Ok(Trajectory {
        equation: Equation::Gp,
        scheme: "strang",
        dt,
        steps,
        stability_bound: q0.grid().dx().powi(2),
        times: rec.times,
        states: rec.states,
    })
}

// ---------------------------------------------------------------------------
// Integrating-factor RK4 for the third-order flows
// ---------------------------------------------------------------------------

/// Dispersive band edge retained by the 2/3 dealiasing rule.
fn dealias_cutoff(n: usize) -> i64 {
    (n / 3) as i64
}

struct IfRk4 {
    grid: Grid,
    /// e^{L dt/2} and e^{L dt} diagonal propagators.
    e_half: Vec<C64>,
    e_full: Vec<C64>,
    /// i xi multipliers for the derivative factor.
    ixi: Vec<C64>,
    cutoff: i64,
    /// true when the nonlinear closure needs the first derivative
    needs_ux: bool,
}

impl IfRk4 {
    fn new(grid: &Grid, dt: f64, lmul: impl Fn(f64) -> C64, needs_ux: bool) -> Self {
        let n = grid.n();
        let mut e_half = Vec::with_capacity(n);
        let mut e_full = Vec::with_capacity(n);
        let mut ixi = Vec::with_capacity(n);
        for k in 0..n {
            let l = lmul(grid.wavenumber(k));
            e_half.push((l * 0.5 * dt).exp());
            e_full.push((l * dt).exp());
            ixi.push(C64::new(0.0, grid.wavenumber(k)));
        }
        IfRk4 {
            grid: grid.clone(),
            e_half,
            e_full,
            ixi,
            cutoff: dealias_cutoff(n),
            needs_ux,
        }
    }

    /// Dealiased Fourier image of the nonlinear term evaluated at spectral
    /// state `v`; also reports the sup norm of the physical field seen
    /// through `sup_map` (blow-up monitoring).
    fn nonlinear_hat(
        &self,
        v: &[C64],
        f: &dyn Fn(&[C64], &[C64]) -> Vec<C64>,
        sup_map: &dyn Fn(&[C64]) -> f64,
    ) -> (Vec<C64>, f64) {
        let n = v.len();
        let mut u = v.to_vec();
        SampledFunction::fft_inverse_inplace(&mut u);
        let ux = if self.needs_ux {
            let mut d: Vec<C64> = v.iter().zip(&self.ixi).map(|(z, m)| z * m).collect();
            if n % 2 == 0 {
                d[n / 2] = C64::new(0.0, 0.0);
            }
            SampledFunction::fft_inverse_inplace(&mut d);
            d
        } else {
            Vec::new()
        };
        let sup = sup_map(&u);
        let mut nh = f(&u, &ux);
        SampledFunction::fft_forward_inplace(&mut nh);
        for (k, z) in nh.iter_mut().enumerate() {
            if (self.grid.mode(k) as i64).abs() > self.cutoff {
                *z = C64::new(0.0, 0.0);
            }
        }
        (nh, sup)
    }

    /// One RK4 step in the integrating-factor variables. Returns the physical
    /// sup norm seen at the first stage.
    fn step(
        &self,
        v: &mut Vec<C64>,
        dt: f64,
        f: &dyn Fn(&[C64], &[C64]) -> Vec<C64>,
        sup_map: &dyn Fn(&[C64]) -> f64,
    ) -> f64 {
        let n = v.len();
        let (a, sup) = self.nonlinear_hat(v, f, sup_map);

        let mut stage: Vec<C64> = (0..n)
            .map(|k| self.e_half[k] * (v[k] + 0.5 * dt * a[k]))
            .collect();
        let (b, _) = self.nonlinear_hat(&stage, f, sup_map);

        for k in 0..n {
            stage[k] = self.e_half[k] * v[k] + 0.5 * dt * b[k];
        }
        let (c, _) = self.nonlinear_hat(&stage, f, sup_map);

        for k in 0..n {
            stage[k] = self.e_full[k] * v[k] + dt * self.e_half[k] * c[k];
        }
        let (d, _) = self.nonlinear_hat(&stage, f, sup_map);

        for k in 0..n {
            v[k] = self.e_full[k] * v[k]
                + dt / 6.0
                    * (self.e_full[k] * a[k]
                        + 2.0 * self.e_half[k] * (b[k] + c[k])
                        + d[k]);
        }
        sup
    }
}

/// Shared run loop for the integrating-factor flows.
#[allow(clippy::too_many_arguments)]
fn if_rk4_run(
    equation: Equation,
    scheme: &'static str,
    work: SampledFunction,
    doubled: bool,
    dt: f64,
    steps: usize,
    snap_every: usize,
    stability_bound: f64,
    lmul: impl Fn(f64) -> C64,
    needs_ux: bool,
    f: &dyn Fn(&[C64], &[C64]) -> Vec<C64>,
    finish: &dyn Fn(&[C64]) -> Vec<C64>,
    sup_map: &dyn Fn(&[C64]) -> f64,
) -> Result<Trajectory> {
    if dt.abs() > stability_bound {
        return Err(GpError::Numerical(format!(
            "CFL violation: |dt| = {} exceeds the advective stability bound {:.3e} for this data",
            dt.abs(),
            stability_bound
        )));
    }
    let grid = work.grid.clone();
    let engine = IfRk4::new(&grid, dt, lmul, needs_ux);
    let mut v = work.values;
    let initial_max = sup_map(&v);
    SampledFunction::fft_forward_inplace(&mut v);

    let mut rec = Recorder::new(steps, dt, snap_every, doubled);
    let physical = |v: &[C64]| -> Vec<C64> {
        let mut u = v.to_vec();
        SampledFunction::fft_inverse_inplace(&mut u);
        finish(&u)
    };
    rec.record(0, &grid, &physical(&v))?;
    for step in 1..=steps {
        let sup = engine.step(&mut v, dt, f, sup_map);
        if blown_up(initial_max, sup) {
            return Err(GpError::Numerical(format!(
                "blow-up: sup norm exceeded 10x initial at t = {:.6}",
                step as f64 * dt
            )));
        }
        if rec.due(step) {
            rec.record(step, &grid, &physical(&v))?;
        }
    }

    Ok(Trajectory {
        equation,
        scheme,
        dt,
        steps,
        stability_bound,
        times: rec.times,
        states: rec.states,
    })
}

/// Largest retained wavenumber after dealiasing.
fn band_edge(grid: &Grid) -> f64 {
    grid.dxi() * dealias_cutoff(grid.n()) as f64
}

/// RK4 imaginary-axis stability radius divided by the advective rate.
fn advective_bound(rate: f64, grid: &Grid) -> f64 {
    let edge = band_edge(grid);
    if rate * edge <= 0.0 {
        f64::INFINITY
    } else {
        2.82 / (rate * edge)
    }
}

/// Evolve under `psi_t + psi_xxx - 6 |psi|^2 psi_x = 0`.
pub fn evolve_mkdv(psi0: &GPField, dt: f64, t_final: f64) -> Result<Trajectory> {
    evolve_mkdv_snap(psi0, dt, t_final, 0)
}

/// As [`evolve_mkdv`] with explicit snapshot cadence.
pub fn evolve_mkdv_snap(
    psi0: &GPField,
    dt: f64,
    t_final: f64,
    snap_every: usize,
) -> Result<Trajectory> {
    let steps = step_count(dt, t_final)?;
    let (work, doubled) = working_samples(psi0);
    let bound = advective_bound(6.0 * max_abs(&work.values).powi(2), &work.grid);
    let f = |u: &[C64], ux: &[C64]| -> Vec<C64> {
        u.iter()
            .zip(ux)
            .map(|(q, d)| 6.0 * q.norm_sqr() * d)
            .collect()
    };
    if_rk4_run(
        Equation::Mkdv,
        "ifrk4",
        work,
        doubled,
        dt,
        steps,
        snap_every,
        bound,
        |xi| C64::new(0.0, xi.powi(3)),
        true,
        &f,
        &|u| u.to_vec(),
        &max_abs,
    )
}

/// Evolve under `u_t - 6 u_x + u_xxx - 6 u u_x = 0` (real data decaying to
/// zero; the `-6 u_x` transport is absorbed into the linear multiplier).
pub fn evolve_kdv6(u0: &SampledFunction, dt: f64, t_final: f64) -> Result<Trajectory> {
    evolve_kdv6_snap(u0, dt, t_final, 0)
}

/// As [`evolve_kdv6`] with explicit snapshot cadence.
pub fn evolve_kdv6_snap(
    u0: &SampledFunction,
    dt: f64,
    t_final: f64,
    snap_every: usize,
) -> Result<Trajectory> {
    if u0.max_imag() > 1e-10 {
        return Err(GpError::Field(format!(
            "this flow is for real data; max |Im u0| = {:.3e}",
            u0.max_imag()
        )));
    }
    let steps = step_count(dt, t_final)?;
    let bound = advective_bound(6.0 * max_abs(&u0.values), &u0.grid);
    let f = |u: &[C64], ux: &[C64]| -> Vec<C64> {
        u.iter().zip(ux).map(|(q, d)| 6.0 * q * d).collect()
    };
    // Imaginary parts are pure rounding; project them out of snapshots.
    let finish = |u: &[C64]| -> Vec<C64> { u.iter().map(|z| C64::new(z.re, 0.0)).collect() };
    if_rk4_run(
        Equation::Kdv6,
        "ifrk4",
        u0.clone(),
        false,
        dt,
        steps,
        snap_every,
        bound,
        |xi| C64::new(0.0, 6.0 * xi + xi.powi(3)),
        true,
        &f,
        &finish,
        &max_abs,
    )
}

/// Alternative stepping mode for the Schrodinger flow: freeze a mollified
/// copy of the initial data as a smooth background `q0e` and integrate the
/// decaying remainder `b = q - q0e`, which satisfies
/// `i b_t + b_xx = 2 (q0e + b)(|q0e + b|^2 - 1) - q0e''`.
pub fn evolve_gp_background(
    q0: &GPField,
    eps: f64,
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    let steps = step_count(dt, t_final)?;
    let (work, doubled) = working_samples(q0);
    let grid = work.grid.clone();
    let background = work.mollify(eps)?;
    let bg_xx = background.spectral_derivative(2);
    let b0 = SampledFunction {
        grid: grid.clone(),
        values: work
            .values
            .iter()
            .zip(&background.values)
            .map(|(q, e)| q - e)
            .collect(),
    };

    let bg = background.values.clone();
    let src = bg_xx.values.clone();
    let f = move |b: &[C64], _ux: &[C64]| -> Vec<C64> {
        b.iter()
            .zip(&bg)
            .zip(&src)
            .map(|((bv, ev), sv)| {
                let q = bv + ev;
                let a = q.norm_sqr() - 1.0;
                C64::new(0.0, -1.0) * (2.0 * a * q - sv)
            })
            .collect()
    };
    let bg2 = background.values.clone();
    let finish = move |b: &[C64]| -> Vec<C64> {
        b.iter().zip(&bg2).map(|(bv, ev)| bv + ev).collect()
    };
    // blow-up is judged on the physical field, not the small remainder
    let bg3 = background.values.clone();
    let sup_map = move |b: &[C64]| -> f64 {
        b.iter()
            .zip(&bg3)
            .fold(0.0f64, |m, (bv, ev)| m.max((bv + ev).norm()))
    };

    let mut traj = if_rk4_run(
        Equation::Gp,
        "ifrk4-background",
        b0,
        doubled,
        dt,
        steps,
        0,
        // phase-rotation rate of the potential term (no advective derivative)
        2.82 / (2.0 * (max_abs(&work.values).powi(2) + 1.0)),
        |xi| C64::new(0.0, -xi * xi),
        false,
        &f,
        &finish,
        &sup_map,
    )?;
    traj.stability_bound = q0.grid().dx().powi(2);
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Conservation monitoring
// ---------------------------------------------------------------------------

/// A named functional evaluated on trajectory snapshots. Complex-valued so
/// that scattering data can be monitored; real functionals embed canonically.
pub struct Observable {
    pub name: String,
    #[allow(clippy::type_complexity)]
    pub eval: Box<dyn Fn(&SampledFunction) -> Result<C64> + Send + Sync>,
}

impl Observable {
    pub fn new<F>(name: &str, f: F) -> Self
    where
        F: Fn(&SampledFunction) -> Result<C64> + Send + Sync + 'static,
    {
        Observable {
            name: name.to_string(),
            eval: Box::new(f),
        }
    }

    /// Wrap a real functional of a validated unit-background field.
    pub fn of_field<F>(name: &str, f: F) -> Self
    where
        F: Fn(&GPField) -> Result<f64> + Send + Sync + 'static,
    {
        Observable::new(name, move |s| {
            let q = GPField::new(s.clone())?;
            Ok(C64::new(f(&q)?, 0.0))
        })
    }
}

/// One monitored value at one snapshot time.
#[derive(Debug, Clone)]
pub struct DriftEntry {
    pub t: f64,
    pub name: String,
    pub value: C64,
    /// `|O(t) - O(0)| / max(|O(0)|, 1)`
    pub rel_drift: f64,
}

/// Per-snapshot observable values and relative drifts for one trajectory.
#[derive(Debug, Clone, Default)]
pub struct DriftTable {
    pub entries: Vec<DriftEntry>,
}

impl DriftTable {
    /// Largest relative drift recorded for `name`.
    pub fn max_drift(&self, name: &str) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.name == name)
            .fold(0.0, |m, e| m.max(e.rel_drift))
    }

    /// Long-format CSV: `t,observable,value,rel_drift`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,observable,value,rel_drift\n");
        for e in &self.entries {
            let value = if e.value.im.abs() <= 1e-14 * e.value.re.abs().max(1.0) {
                format!("{:e}", e.value.re)
            } else {
                format!("{:e}{:+e}i", e.value.re, e.value.im)
            };
            out.push_str(&format!("{:e},{},{},{:e}\n", e.t, e.name, value, e.rel_drift));
        }
        out
    }
}

/// Evaluate the observables on every snapshot and report relative drifts
/// against the initial snapshot.
pub fn conservation_monitor(traj: &Trajectory, observables: &[Observable]) -> Result<DriftTable> {
    let mut table = DriftTable::default();
    let mut base: Vec<C64> = Vec::with_capacity(observables.len());
    for (i, state) in traj.states.iter().enumerate() {
        for (j, obs) in observables.iter().enumerate() {
            let value = (obs.eval)(state)?;
            if i == 0 {
                base.push(value);
            }
            let rel_drift = (value - base[j]).norm() / base[j].norm().max(1.0);
            table.entries.push(DriftEntry {
                t: traj.times[i],
                name: obs.name.clone(),
                value,
                rel_drift,
            });
        }
    }
    Ok(table)
}

/// Linearly interpolated zero crossings of `Re f` closest to `near`
/// (soliton position tracking).
pub fn track_real_zero(f: &SampledFunction, near: f64) -> Option<f64> {
    let n = f.n();
    let mut best: Option<f64> = None;
    for j in 0..n - 1 {
        let (a, b) = (f.values[j].re, f.values[j + 1].re);
        if a == 0.0 {
            consider(&mut best, f.grid.x(j), near);
        } else if a * b < 0.0 {
            let x = f.grid.x(j) + f.grid.dx() * a / (a - b);
            consider(&mut best, x, near);
        }
    }
    best
}

fn consider(best: &mut Option<f64>, x: f64, near: f64) {
    match best {
        Some(b) if (x - near).abs() >= (*b - near).abs() => {}
        _ => *best = Some(x),
    }
}
