//! Method-of-lines integration of the τ-rotated Chern–Simons gradient flow on a 3-torus,
//! with the dissipation ledger and the divergence constraint.
//!
//! With `w = F_A − r²a∧a`, `v = r d_A a` and `c1 + i c2 = (τ + i(1−τ))²/(τ² + (1−τ)²)`:
//!
//! ```text
//! ∂_s A = −c1 ∗w + c2 ∗v
//! ∂_s a = (c2 ∗w + c1 ∗v) / r
//! ```
//!
//! which is the downward gradient flow of the weighted real part of cs for the metric
//! `‖δA‖² + ‖δ𝔞‖²`, `𝔞 = r a`, and the `I × T³` form of the four-dimensional equations.

use crate::fields::{cov_codiff, cov_d, w_and_v, Configuration};
use crate::functionals::{chern_simons, complex_connection, cs_gradient, weight, CSValue};
use crate::grid::{hodge_star, Domain, DomainKind, FormField, GridError, ValueKind};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("field sup-norm {sup:e} exceeded the ceiling at s = {s}")]
    BlowUp { s: f64, sup: f64 },
    #[error("flow runs on a 3-torus slice")]
    NotSlice,
    #[error("constraint projection did not converge (residual {0:e})")]
    Projection(f64),
}

/// `(∂_s A, ∂_s a)`.
pub fn flow_rhs(cfg: &Configuration) -> Result<(FormField, FormField), FlowError> {
    if cfg.domain().kind != DomainKind::Torus3 {
        return Err(FlowError::NotSlice);
    }
    let (c1, c2) = weight(cfg.tau);
    let (w, v) = w_and_v(cfg)?;
    let (sw, sv) = (hodge_star(&w), hodge_star(&v));
    let mut da = sw.scale(-c1);
    da.axpy(c2, &sv)?;
    let mut ds = sw.scale(c2 / cfg.r);
    ds.axpy(c1 / cfg.r, &sv)?;
    Ok((da, ds))
}

/// Gradient of half the weighted real part of cs for the metric `‖δA‖² + r²‖δa‖²`.
pub fn rotated_gradient(cfg: &Configuration) -> Result<(FormField, FormField), FlowError> {
    if cfg.domain().kind != DomainKind::Torus3 {
        return Err(FlowError::NotSlice);
    }
    let (ga, gs) = cs_gradient(cfg)?;
    Ok((ga.scale(0.5), gs.scale(0.5 / cfg.r)))
}

/// One ledger row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub s: f64,
    pub cs: CSValue,
    /// `∫(|∂_s A|² + r²|∂_s a|² + r²|d_A a|² + |F − r²a∧a|²)` at `s`.
    pub dissipation: f64,
    /// `‖d_A†a‖`.
    pub constraint_norm: f64,
    /// Step taken to reach this row (0 for the initial row).
    pub dt: f64,
    /// `∫|a|²`.
    pub a_l2_sq: f64,
}

#[derive(Clone, Debug, Default)]
pub struct FlowLedger {
    pub rows: Vec<LedgerRow>,
    /// Per step, the dissipation integrated over the step with the RK4 stage weights.
    pub step_dissipation: Vec<f64>,
    pub r: f64,
    pub snapshots: Vec<(f64, Configuration)>,
}

pub const LEDGER_HEADER: &str = "s,cs_re,cs_im,weighted_real,dissipation,constraint_norm,dt";

impl FlowLedger {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{LEDGER_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.s, r.cs.re, r.cs.im, r.cs.weighted_real, r.dissipation, r.constraint_norm, r.dt
            )?;
        }
        Ok(())
    }

    /// Largest per-step increase of the weighted real part (≤ 0 for a monotone run).
    pub fn max_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|p| p[1].cs.weighted_real - p[0].cs.weighted_real)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Dissipation density integral at a state, four-term form.
pub fn dissipation(cfg: &Configuration) -> Result<f64, FlowError> {
    let (da, ds) = flow_rhs(cfg)?;
    let (w, v) = w_and_v(cfg)?;
    let r2 = cfg.r * cfg.r;
    Ok(da.norm_l2().powi(2) + r2 * ds.norm_l2().powi(2) + v.norm_l2().powi(2) + w.norm_l2().powi(2))
}

fn row(cfg: &Configuration, s: f64, dt: f64) -> Result<LedgerRow, FlowError> {
    Ok(LedgerRow {
        s,
        cs: chern_simons(&complex_connection(cfg), cfg.tau)?,
        dissipation: dissipation(cfg)?,
        constraint_norm: cov_codiff(&cfg.conn, &cfg.a)?.norm_l2(),
        dt,
        a_l2_sq: cfg.a.norm_l2().powi(2),
    })
}

fn sup(cfg: &Configuration) -> f64 {
    cfg.conn.sup_norm().max(cfg.a.sup_norm())
}

fn shifted(cfg: &Configuration, h: f64, k: &(FormField, FormField)) -> Configuration {
    let mut c = cfg.clone();
    c.conn.axpy(h, &k.0).expect("same shape");
    c.a.axpy(h, &k.1).expect("same shape");
    c
}

fn velocity_sq(cfg: &Configuration, k: &(FormField, FormField)) -> f64 {
    k.0.norm_l2().powi(2) + cfg.r * cfg.r * k.1.norm_l2().powi(2)
}

/// One classical RK4 step; also returns the stage-weighted dissipation over the step.
pub fn rk4_step(cfg: &Configuration, dt: f64) -> Result<(Configuration, f64), FlowError> {
    let k1 = flow_rhs(cfg)?;
    let y2 = shifted(cfg, 0.5 * dt, &k1);
    let k2 = flow_rhs(&y2)?;
    let y3 = shifted(cfg, 0.5 * dt, &k2);
    let k3 = flow_rhs(&y3)?;
    let y4 = shifted(cfg, dt, &k3);
    let k4 = flow_rhs(&y4)?;
    let mut out = cfg.clone();
    for (k, wgt) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        out.conn.axpy(dt * wgt / 6.0, &k.0)?;
        out.a.axpy(dt * wgt / 6.0, &k.1)?;
    }
    // dW/ds = −2(|∂A|² + r²|∂a|²) along the flow
    let diss = 2.0
        * dt
        * (velocity_sq(cfg, &k1) + 2.0 * velocity_sq(&y2, &k2) + 2.0 * velocity_sq(&y3, &k3) + velocity_sq(&y4, &k4))
        / 6.0;
    Ok((out, diss))
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    /// Abort when `max(sup|A|, sup|a|)` exceeds this.
    pub ceiling: f64,
    /// Keep a copy of the state every this many steps (0: never).
    pub snapshot_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { ceiling: 1e3, snapshot_every: 0 }
    }
}

/// Integrate from `s = 0` to `s_end` with fixed step `dt` (the last step is shortened to
/// land on `s_end`).
pub fn integrate(
    cfg: &Configuration,
    s_end: f64,
    dt: f64,
    opts: &FlowOptions,
) -> Result<(Configuration, FlowLedger), FlowError> {
    let mut ledger = FlowLedger { r: cfg.r, ..Default::default() };
    let mut cur = cfg.clone();
    let mut s = 0.0;
    ledger.rows.push(row(&cur, s, 0.0)?);
    if opts.snapshot_every > 0 {
        ledger.snapshots.push((s, cur.clone()));
    }
    let nsteps = (s_end / dt - 1e-9).ceil().max(0.0) as usize;
    for i in 0..nsteps {
        let h = if i + 1 == nsteps { s_end - s } else { dt };
        let (next, diss) = rk4_step(&cur, h)?;
        s = if i + 1 == nsteps { s_end } else { s + h };
        cur = next;
        let m = sup(&cur);
        if !m.is_finite() || m > opts.ceiling {
            return Err(FlowError::BlowUp { s, sup: m });
        }
        ledger.step_dissipation.push(diss);
        ledger.rows.push(row(&cur, s, h)?);
        if opts.snapshot_every > 0 && (i + 1) % opts.snapshot_every == 0 {
            ledger.snapshots.push((s, cur.clone()));
        }
    }
    Ok((cur, ledger))
}

/// Largest `dt ≤ dt_max` (by halving) for which one RK4 step changes the sup-norm by
/// less than 1%.
pub fn probe_dt(cfg: &Configuration, dt_max: f64) -> Result<f64, FlowError> {
    let m0 = sup(cfg);
    if m0 == 0.0 {
        return Ok(dt_max);
    }
    let mut dt = dt_max;
    for _ in 0..40 {
        let (next, _) = rk4_step(cfg, dt)?;
        let m1 = sup(&next);
        if m1.is_finite() && ((m1 - m0) / m0).abs() < 0.01 {
            return Ok(dt);
        }
        dt *= 0.5;
    }
    Ok(dt)
}

/// `max_s |‖d_A†a‖(s) − ‖d_A†a‖(0)|`.
pub fn constraint_drift(ledger: &FlowLedger) -> f64 {
    let c0 = ledger.rows.first().map(|r| r.constraint_norm).unwrap_or(0.0);
    ledger.rows.iter().map(|r| (r.constraint_norm - c0).abs()).fold(0.0, f64::max)
}

/// Total drop of the weighted real part of cs.
pub fn instanton_energy(ledger: &FlowLedger) -> f64 {
    match (ledger.rows.first(), ledger.rows.last()) {
        (Some(a), Some(b)) => a.cs.weighted_real - b.cs.weighted_real,
        _ => 0.0,
    }
}

/// `∫ dissipation ds` by the RK4 stage quadrature.
pub fn stage_energy(ledger: &FlowLedger) -> f64 {
    ledger.step_dissipation.iter().sum()
}

/// `∫ dissipation ds` by the trapezoid rule on the ledger rows.
pub fn trapezoid_energy(ledger: &FlowLedger) -> f64 {
    ledger
        .rows
        .windows(2)
        .map(|p| 0.5 * (p[1].s - p[0].s) * (p[0].dissipation + p[1].dissipation))
        .sum()
}

/// `∫|a|²(s) ≤ (1+δ)∫|a|²(s′) + (1+δ⁻¹) r⁻² c_s |s − s′|` for rows `i, j`, where `c_s` is
/// the total drop over the run.
pub fn l2_drift_check(ledger: &FlowLedger, i: usize, j: usize, delta: f64) -> bool {
    let cs = instanton_energy(ledger).max(0.0);
    let (a, b) = (&ledger.rows[i], &ledger.rows[j]);
    let rhs = (1.0 + delta) * b.a_l2_sq + (1.0 + 1.0 / delta) * cs / (ledger.r * ledger.r) * (a.s - b.s).abs();
    a.a_l2_sq <= rhs * (1.0 + 1e-12) + 1e-300
}

/// Remove the `d_A†a` part of `a`: `a ← a − d_A φ` with `d_A†d_A φ = d_A†a`, by
/// conjugate gradients.
pub fn project_constraint(cfg: &Configuration, tol: f64, max_iter: usize) -> Result<Configuration, FlowError> {
    let b = cov_codiff(&cfg.conn, &cfg.a)?;
    let bn = b.norm_l2();
    if bn == 0.0 {
        return Ok(cfg.clone());
    }
    let op = |x: &FormField| -> Result<FormField, GridError> { cov_codiff(&cfg.conn, &cov_d(&cfg.conn, x)?) };
    let mut x = FormField::zeros(cfg.domain(), 0, ValueKind::Lie);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.inner(&r)?;
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bn {
            break;
        }
        let ap = op(&p)?;
        let alpha = rr / p.inner(&ap)?;
        x.axpy(alpha, &p)?;
        r.axpy(-alpha, &ap)?;
        let rr_new = r.inner(&r)?;
        let beta = rr_new / rr;
        rr = rr_new;
        let mut np = r.clone();
        np.axpy(beta, &p)?;
        p = np;
    }
    let mut out = cfg.clone();
    out.a.axpy(-1.0, &cov_d(&cfg.conn, &x)?)?;
    let res = cov_codiff(&out.conn, &out.a)?.norm_l2();
    if res > 1e3 * tol * bn.max(1e-300) && res > 1e-12 {
        return Err(FlowError::Projection(res));
    }
    Ok(out)
}

/// Stack slices `s_0, s_0+ds, …` into a configuration on `I × T³` with vanishing
/// `ds`-components of `A` and `a`.
pub fn stack_slices(slices: &[Configuration], ds: f64) -> Result<Configuration, FlowError> {
    let first = slices.first().ok_or(FlowError::NotSlice)?;
    let sl = *first.domain();
    let slab = Domain::slab(slices.len(), ds * slices.len() as f64, &sl)?;
    let mut conn = FormField::zeros(&slab, 1, ValueKind::Lie);
    let mut a = FormField::zeros(&slab, 1, ValueKind::Lie);
    let n3 = sl.num_sites();
    for (i, c) in slices.iter().enumerate() {
        for s in 0..n3 {
            for m in 0..3 {
                conn.set_lie(i * n3 + s, m + 1, c.conn.lie(s, m));
                a.set_lie(i * n3 + s, m + 1, c.a.lie(s, m));
            }
        }
    }
    Ok(Configuration::new(conn, a, first.r, first.tau).map_err(|_| FlowError::NotSlice)?)
}
