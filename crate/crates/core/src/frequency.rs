//! Frequency functions `h, ϑ, K, N` about a point, the derivative formula for `N`, the
//! stress tensor and the scale detectors.
//!
//! Ball radius is written `ρ` throughout; `r` is the configuration's scale parameter.

use crate::fields::{cov_grad, curvature, Configuration};
use crate::grid::quadrature::{interpolate, BallRule, BallSpec};
use crate::grid::{pair_index, partial, self_wedge, FormField, GridError, ValueKind};
use crate::liealg::{bracket, LieVec};
use crate::synth::FieldSampler;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FrequencyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid analysis parameter: {0}")]
    Params(String),
    #[error("need at least {0} radii")]
    TooFewRadii(usize),
}

/// Constants of the analysis. `κ_U` has no canonical value; it is a parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalysisParams {
    pub c: f64,
    pub e_bound: f64,
    pub kappa_u: f64,
    pub z_u: f64,
    pub mu: f64,
    /// Upper end of the admissible radii (`c_0⁻¹`).
    pub r_max: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams { c: 128.0, e_bound: 1.0, kappa_u: 1.0, z_u: 100.0, mu: 0.25, r_max: 0.4 }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<(), FrequencyError> {
        let bad = |m: &str| Err(FrequencyError::Params(m.into()));
        if !(self.c > 100.0) {
            return bad("c must exceed 100");
        }
        if !(self.e_bound >= 1.0) {
            return bad("E must be at least 1");
        }
        if (self.z_u - 100.0 * self.kappa_u).abs() > 1e-12 * self.z_u.abs().max(1.0) {
            return bad("z_U must equal 100 kappa_U");
        }
        if !(self.mu > 0.0 && self.mu <= 0.25) {
            return bad("mu must lie in (0, 1/4]");
        }
        if !(self.r_max > 0.0) {
            return bad("r_max must be positive");
        }
        Ok(())
    }
}

/// Smooth cutoff: 1 on `(−∞, ¼]`, 0 on `[¾, ∞)`, a quintic smoothstep in between.
pub fn cutoff(t: f64) -> f64 {
    let u = ((t - 0.25) / 0.5).clamp(0.0, 1.0);
    1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// Background geometry entering `ϑ`. Flat space has both terms zero.
#[derive(Clone, Copy)]
pub struct Geometry {
    /// `Ric(⟨a ⊗ a⟩)` at a point.
    pub ric: fn([f64; 4], &[LieVec; 4]) -> f64,
    /// Mean-curvature defect `M(ρ)` of `∂B_ρ`.
    pub m: fn(f64) -> f64,
    pub flat: bool,
}

impl Geometry {
    pub fn flat() -> Self {
        Geometry { ric: |_, _| 0.0, m: |_| 0.0, flat: true }
    }
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Geometry {{ flat: {} }}", self.flat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileSource {
    GridConfig,
    AnalyticSampler,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyProfile {
    pub p: [f64; 4],
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub k: Vec<f64>,
    /// `None` where `h` vanishes.
    pub n: Vec<Option<f64>>,
    pub source: ProfileSource,
}

pub const PROFILE_HEADER: &str = "r,h,vartheta,K,N";

impl FrequencyProfile {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{PROFILE_HEADER}")?;
        for i in 0..self.radii.len() {
            let n = self.n[i].map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into());
            writeln!(w, "{:e},{:e},{:e},{:e},{}", self.radii[i], self.h[i], self.vartheta[i], self.k[i], n)?;
        }
        Ok(())
    }

    /// `max |N − target|` over radii where `N` is defined.
    pub fn max_dev(&self, target: f64) -> f64 {
        self.n.iter().flatten().map(|v| (v - target).abs()).fold(0.0, f64::max)
    }
}

/// A configuration seen through multilinear interpolation of `a`, `∇_A a` and `F_A`.
pub struct GridSampler {
    dim: usize,
    a: FormField,
    grad: Vec<FormField>,
    curv: FormField,
}

impl GridSampler {
    pub fn new(cfg: &Configuration) -> Result<Self, GridError> {
        Ok(GridSampler {
            dim: cfg.domain().dim(),
            a: cfg.a.clone(),
            grad: cov_grad(&cfg.conn, &cfg.a),
            curv: curvature(cfg)?,
        })
    }

    fn lie_comps(f: &FormField, x: [f64; 4]) -> Vec<LieVec> {
        let mut buf = vec![0.0; f.stride()];
        interpolate(f, x, &mut buf);
        buf.chunks(3).map(LieVec::from_slice).collect()
    }
}

impl FieldSampler for GridSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn a(&self, x: [f64; 4]) -> [LieVec; 4] {
        let v = Self::lie_comps(&self.a, x);
        std::array::from_fn(|m| v.get(m).copied().unwrap_or(LieVec::ZERO))
    }

    fn grad(&self, x: [f64; 4]) -> [[LieVec; 4]; 4] {
        let mut g = [[LieVec::ZERO; 4]; 4];
        for (n, f) in self.grad.iter().enumerate() {
            for (m, v) in Self::lie_comps(f, x).into_iter().enumerate() {
                g[n][m] = v;
            }
        }
        g
    }

    fn curv(&self, x: [f64; 4]) -> [[LieVec; 4]; 4] {
        let v = Self::lie_comps(&self.curv, x);
        let mut out = [[LieVec::ZERO; 4]; 4];
        for m in 0..self.dim {
            for n in (m + 1)..self.dim {
                let f = v[pair_index(self.dim, m, n)];
                out[m][n] = f;
                out[n][m] = -f;
            }
        }
        out
    }
}

fn norm_sq(a: &[LieVec; 4]) -> f64 {
    a.iter().map(LieVec::norm_sq).sum()
}

fn grad_sq(g: &[[LieVec; 4]; 4]) -> f64 {
    g.iter().flat_map(|r| r.iter()).map(LieVec::norm_sq).sum()
}

/// `Σ_{μ<ν} |[a_μ, a_ν]|²`.
fn wedge_sq(a: &[LieVec; 4], dim: usize) -> f64 {
    let mut s = 0.0;
    for m in 0..dim {
        for n in (m + 1)..dim {
            s += bracket(&a[m], &a[n]).norm_sq();
        }
    }
    s
}

fn curv_sq(f: &[[LieVec; 4]; 4], dim: usize) -> f64 {
    let mut s = 0.0;
    for m in 0..dim {
        for n in (m + 1)..dim {
            s += f[m][n].norm_sq();
        }
    }
    s
}

fn unit(p: [f64; 4], x: [f64; 4], rho: f64) -> [f64; 4] {
    std::array::from_fn(|k| (x[k] - p[k]) / rho)
}

/// `(h(ρ), ∫_{B_ρ}(|∇a|² + 2 w r²|a∧a|²))` with `w` the wedge weight.
fn h_and_d(src: &dyn FieldSampler, r_cfg: f64, wedge: f64, p: [f64; 4], rho: f64, rule: &BallRule) -> (f64, f64) {
    let dim = src.dim();
    let h = rule.sphere(p, rho, |x| norm_sq(&src.a(x)));
    let d = rule.ball(p, rho, |x| {
        let mut v = grad_sq(&src.grad(x));
        if wedge != 0.0 {
            v += 2.0 * wedge * r_cfg * r_cfg * wedge_sq(&src.a(x), dim);
        }
        v
    });
    (h, d)
}

fn vartheta(src: &dyn FieldSampler, geo: &Geometry, p: [f64; 4], rho: f64, rule: &BallRule) -> f64 {
    if geo.flat {
        return 0.0;
    }
    let (gx, gw) = crate::grid::quadrature::gauss_legendre(8);
    let mut acc = 0.0;
    for (t, w) in gx.iter().zip(&gw) {
        let s = 0.5 * rho * (t + 1.0);
        let h = rule.sphere(p, s, |x| norm_sq(&src.a(x)));
        if h <= 0.0 {
            continue;
        }
        let ric = rule.ball(p, s, |x| (geo.ric)(x, &src.a(x)));
        let m = 0.5 * (geo.m)(s) * h;
        acc += 0.5 * rho * w * (ric + m) / h;
    }
    acc
}

fn profile_impl(
    src: &dyn FieldSampler,
    r_cfg: f64,
    wedge: f64,
    p: [f64; 4],
    radii: &[f64],
    geo: &Geometry,
    rule: &BallRule,
    source: ProfileSource,
) -> FrequencyProfile {
    let mut out = FrequencyProfile {
        p,
        radii: radii.to_vec(),
        h: vec![],
        vartheta: vec![],
        k: vec![],
        n: vec![],
        source,
    };
    for &rho in radii {
        let (h, d) = h_and_d(src, r_cfg, wedge, p, rho, rule);
        let th = vartheta(src, geo, p, rho, rule);
        let k2 = (-2.0 * th).exp() * h / rho.powi(3);
        out.h.push(h);
        out.vartheta.push(th);
        out.k.push(k2.sqrt());
        out.n.push(if h > 0.0 { Some(d / (rho * rho * k2)) } else { None });
    }
    out
}

/// Frequency profile of an analytic sampler with scale parameter `r_cfg`.
pub fn profile(
    src: &dyn FieldSampler,
    r_cfg: f64,
    p: [f64; 4],
    radii: &[f64],
    geo: &Geometry,
    rule: &BallRule,
) -> FrequencyProfile {
    profile_impl(src, r_cfg, 1.0, p, radii, geo, rule, ProfileSource::AnalyticSampler)
}

/// Frequency profile of a grid configuration on a 4-torus.
pub fn profile_grid(
    cfg: &Configuration,
    p: [f64; 4],
    radii: &[f64],
    geo: &Geometry,
    rule: &BallRule,
) -> Result<FrequencyProfile, FrequencyError> {
    for &rho in radii {
        BallSpec::new(p, rho).check(cfg.domain())?;
    }
    let g = GridSampler::new(cfg)?;
    Ok(profile_impl(&g, cfg.r, 1.0, p, radii, geo, rule, ProfileSource::GridConfig))
}

/// The limit-form profile: `h◇ = ∫_{∂B}|ν|²`, `N◇ = (1/(ρ²K◇²))∫_B|∇ν|²`. The sampler's
/// `a` is `ν` (up to a unit-norm Lie factor) and `grad` its covariant derivative.
pub fn limit_profile(src: &dyn FieldSampler, p: [f64; 4], radii: &[f64], rule: &BallRule) -> FrequencyProfile {
    profile_impl(src, 1.0, 0.0, p, radii, &Geometry::flat(), rule, ProfileSource::AnalyticSampler)
}

/// `max_i |dK/dρ − (N/ρ)K|` over interior radii, with three-point differences.
pub fn ode_residual(prof: &FrequencyProfile) -> Result<f64, FrequencyError> {
    let r = &prof.radii;
    if r.len() < 3 {
        return Err(FrequencyError::TooFewRadii(3));
    }
    let mut worst: f64 = 0.0;
    for i in 1..r.len() - 1 {
        let Some(n) = prof.n[i] else { continue };
        let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        let dk = -h1 / (h0 * (h0 + h1)) * prof.k[i - 1] + (h1 - h0) / (h0 * h1) * prof.k[i]
            + h0 / (h1 * (h0 + h1)) * prof.k[i + 1];
        worst = worst.max((dk - n / r[i] * prof.k[i]).abs());
    }
    Ok(worst)
}

/// `(dN_direct, dN_formula)` at radius `ρ` on flat space.
pub fn dn_formula(src: &dyn FieldSampler, r_cfg: f64, p: [f64; 4], rho: f64, rule: &BallRule) -> (f64, f64) {
    let dim = src.dim();
    let n_at = |s: f64| {
        let (h, d) = h_and_d(src, r_cfg, 1.0, p, s, rule);
        s * d / h
    };
    let dr = 1e-3 * rho;
    let direct = (n_at(rho + dr) - n_at(rho - dr)) / (2.0 * dr);
    let (h, d) = h_and_d(src, r_cfg, 1.0, p, rho, rule);
    let k2 = h / rho.powi(3);
    let n = rho * d / h;
    let [b1, b2, b3] = rule.sphere_n(p, rho, |x| {
        let u = unit(p, x, rho);
        let a = src.a(x);
        let g = src.grad(x);
        let f = src.curv(x);
        let mut t1 = 0.0;
        for m in 0..dim {
            let mut radial = LieVec::ZERO;
            for k in 0..dim {
                radial += g[k][m].scale(u[k]);
            }
            t1 += (radial - a[m].scale(n / rho)).norm_sq();
        }
        let mut e2 = 0.0;
        for nu in 0..dim {
            let mut e = LieVec::ZERO;
            for m in 0..dim {
                e += f[m][nu].scale(u[m]);
            }
            e2 += e.norm_sq();
        }
        [t1, wedge_sq(&a, dim), 2.0 * e2 - curv_sq(&f, dim)]
    });
    let pre = 1.0 / (rho * rho * k2);
    let formula = 2.0 * pre * b1 + r_cfg * r_cfg * pre * b2 + pre / (r_cfg * r_cfg) * b3;
    (direct, formula)
}

/// Components `T_{αβ}` of the stress tensor at a point of a sampler.
pub fn stress_tensor(src: &dyn FieldSampler, r_cfg: f64, x: [f64; 4]) -> [[f64; 4]; 4] {
    let dim = src.dim();
    let a = src.a(x);
    let g = src.grad(x);
    let f = src.curv(x);
    let trace_part = grad_sq(&g) + r_cfg * r_cfg * wedge_sq(&a, dim) + curv_sq(&f, dim) / (r_cfg * r_cfg);
    let mut t = [[0.0; 4]; 4];
    for al in 0..dim {
        for be in 0..dim {
            let mut v = 0.0;
            for nu in 0..dim {
                v += g[al][nu].dot(&g[be][nu]) + f[al][nu].dot(&f[be][nu]) / (r_cfg * r_cfg);
            }
            if al == be {
                v -= 0.5 * trace_part;
            }
            t[al][be] = v;
        }
    }
    t
}

/// Grid stress tensor as `dim × dim` real 0-forms.
pub fn stress_tensor_field(cfg: &Configuration) -> Result<Vec<Vec<FormField>>, GridError> {
    let d = cfg.domain();
    let dim = d.dim();
    let grads = cov_grad(&cfg.conn, &cfg.a);
    let f = curvature(cfg)?;
    let aa = self_wedge(&cfg.a)?;
    let r2 = cfg.r * cfg.r;
    let fc = |s: usize, m: usize, n: usize| -> LieVec {
        if m == n {
            LieVec::ZERO
        } else if m < n {
            f.lie(s, pair_index(dim, m, n))
        } else {
            -f.lie(s, pair_index(dim, n, m))
        }
    };
    let mut t = vec![vec![FormField::zeros(d, 0, ValueKind::Real); dim]; dim];
    for s in 0..d.num_sites() {
        let tr = (0..dim).map(|k| grads[k].site(s).iter().map(|v| v * v).sum::<f64>()).sum::<f64>()
            + r2 * aa.site(s).iter().map(|v| v * v).sum::<f64>()
            + f.site(s).iter().map(|v| v * v).sum::<f64>() / r2;
        for al in 0..dim {
            for be in al..dim {
                let mut v = 0.0;
                for nu in 0..dim {
                    v += grads[al].lie(s, nu).dot(&grads[be].lie(s, nu)) + fc(s, al, nu).dot(&fc(s, be, nu)) / r2;
                }
                if al == be {
                    v -= 0.5 * tr;
                }
                t[al][be].data[s] = v;
                t[be][al].data[s] = v;
            }
        }
    }
    Ok(t)
}

/// `sup |∇†T|` over sites within `region` (center, radius), or everywhere.
pub fn stress_divergence(cfg: &Configuration, region: Option<([f64; 4], f64)>) -> Result<f64, GridError> {
    let t = stress_tensor_field(cfg)?;
    let d = cfg.domain();
    let dim = d.dim();
    let mut div = vec![FormField::zeros(d, 0, ValueKind::Real); dim];
    for be in 0..dim {
        for al in 0..dim {
            div[be].axpy(-1.0, &partial(&t[al][be], al))?;
        }
    }
    let mut worst: f64 = 0.0;
    for s in 0..d.num_sites() {
        if let Some((c, rad)) = region {
            if d.distance(&d.position(s), &c) > rad {
                continue;
            }
        }
        let v: f64 = div.iter().map(|f| f.data[s] * f.data[s]).sum();
        worst = worst.max(v.sqrt());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Detectors {
    pub r_c_wedge: f64,
    pub r_c_f: f64,
    pub r_c_diamond: f64,
    pub r_star: f64,
    pub r_star_found: bool,
}

/// Largest `ρ ≤ r_max` with `g(ρ) ≤ thr`, for non-decreasing `g`, to relative `1e-4`.
pub fn largest_admissible(g: impl Fn(f64) -> f64, thr: f64, r_max: f64) -> f64 {
    if g(r_max) <= thr {
        return r_max;
    }
    let (mut lo, mut hi) = (0.0, r_max);
    while hi - lo > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn density_ball(f: &FormField, p: [f64; 4], rho: f64, rule: &BallRule) -> f64 {
    let mut buf = [0.0];
    rule.ball(p, rho, |x| {
        interpolate(f, x, &mut buf);
        buf[0]
    })
}

/// The four scale detectors at `p`.
pub fn scale_detectors(
    cfg: &Configuration,
    p: [f64; 4],
    params: &AnalysisParams,
    rule: &BallRule,
) -> Result<Detectors, FrequencyError> {
    params.validate()?;
    BallSpec::new(p, params.r_max).check(cfg.domain())?;
    let r4 = cfg.r.powi(4);
    let aa = self_wedge(&cfg.a)?.norm_sq_density();
    let ff = curvature(cfg)?.norm_sq_density();
    let wedge = |rho: f64| r4 * density_ball(&aa, p, rho, rule);
    let c2 = params.c.powi(-2);
    let r_c_wedge = largest_admissible(wedge, c2, params.r_max);
    let r_c_f = largest_admissible(|rho| density_ball(&ff, p, rho, rule), c2, params.r_max);
    let r_c_diamond = largest_admissible(wedge, c2 * c2, params.r_max);
    let g = GridSampler::new(cfg)?;
    let thr = 1.0 / params.z_u;
    let rk = |rho: f64| {
        let h = rule.sphere(p, rho, |x| norm_sq(&g.a(x)));
        rho * (h / rho.powi(3)).sqrt() * cfg.r
    };
    let found = rk(params.r_max) >= thr;
    let r_star = if found {
        let (mut lo, mut hi) = (0.0, params.r_max);
        while hi - lo > 1e-4 * hi {
            let mid = 0.5 * (lo + hi);
            if rk(mid) < thr {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    } else {
        params.r_max
    };
    Ok(Detectors { r_c_wedge, r_c_f, r_c_diamond, r_star, r_star_found: found })
}
