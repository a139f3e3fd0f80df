//! Chern–Simons functional, Chern–Weil integrals, integral identities for solutions and
//! the model operator on pairs of 1-forms.

use crate::fields::{
    cov_grad, curvature_of, grad_norm_sq_density, w_and_v, Configuration,
};
use crate::grid::green::green_dtd1;
use crate::grid::{
    ext_d, hodge_star, sd_project, self_wedge, wedge_table, Domain, DomainKind, FormField, GridError,
    ValueKind,
};
use crate::liealg::{bracket, cdet3, LieVec};
use serde::Serialize;
use std::f64::consts::PI;

/// Complex Chern–Simons value and its τ-weighted real part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CSValue {
    pub re: f64,
    pub im: f64,
    pub weighted_real: f64,
}

/// `(c1, c2)` with `c1 + i c2 = (τ + i(1−τ))² / (τ² + (1−τ)²)`; `c1² + c2² = 1`.
pub fn weight(tau: f64) -> (f64, f64) {
    let d = tau * tau + (1.0 - tau) * (1.0 - tau);
    ((tau * tau - (1.0 - tau) * (1.0 - tau)) / d, 2.0 * tau * (1.0 - tau) / d)
}

fn weighted(re: f64, im: f64, tau: f64) -> f64 {
    let (c1, c2) = weight(tau);
    c1 * re - c2 * im
}

fn require_slice(d: &Domain) -> Result<(), GridError> {
    if d.kind != DomainKind::Torus3 {
        return Err(GridError::Degree(1, d.dim()));
    }
    Ok(())
}

/// `cs(â) = ∫_{T³} (⟨â ∧ dâ⟩ + 4 det â)` for a complexified 1-form on a 3-torus,
/// fiducial connection the product connection.
///
/// This is `½∫ trace(â∧dâ + ⅔ â∧â∧â)` with `trace = −2⟨·,·⟩`, evaluated with the
/// orientation of the slice for which the flow equations are the downward gradient
/// flow; with `dx1∧dx2∧dx3` the trace formula gives the negative of this value.
pub fn chern_simons(ahat: &FormField, tau: f64) -> Result<CSValue, GridError> {
    require_slice(&ahat.domain)?;
    if ahat.kind != ValueKind::CLie || ahat.degree != 1 {
        return Err(GridError::Kind(ahat.kind));
    }
    let sd = hodge_star(&ext_d(ahat)?);
    let (mut re, mut im) = (0.0, 0.0);
    for s in 0..ahat.domain.num_sites() {
        let u: Vec<_> = (0..3).map(|m| ahat.clie(s, m)).collect();
        for (m, um) in u.iter().enumerate() {
            let (pr, pi) = um.pairing(&sd.clie(s, m));
            re += pr;
            im += pi;
        }
        let (dr, di) = cdet3(&u[0], &u[1], &u[2]);
        re += 4.0 * dr;
        im += 4.0 * di;
    }
    let v = ahat.domain.cell_volume();
    let (re, im) = (re * v, im * v);
    Ok(CSValue { re, im, weighted_real: weighted(re, im, tau) })
}

/// `â = A + i r a`.
pub fn complex_connection(cfg: &Configuration) -> FormField {
    FormField::complexify(&cfg.conn, &cfg.a.scale(cfg.r)).expect("same shape")
}

/// Gradient of the weighted real part of [`chern_simons`] with respect to `(A, 𝔞)`,
/// `𝔞 = r a`, under the grid pairing: `(2(c1 ∗w − c2 ∗v), −2(c2 ∗w + c1 ∗v))`.
pub fn cs_gradient(cfg: &Configuration) -> Result<(FormField, FormField), GridError> {
    require_slice(cfg.domain())?;
    let (c1, c2) = weight(cfg.tau);
    let (w, v) = w_and_v(cfg)?;
    let (sw, sv) = (hodge_star(&w), hodge_star(&v));
    let mut ga = sw.scale(2.0 * c1);
    ga.axpy(-2.0 * c2, &sv)?;
    let mut gs = sw.scale(-2.0 * c2);
    gs.axpy(-2.0 * c1, &sv)?;
    Ok((ga, gs))
}

/// Pointwise `⟨F∧F⟩` (complex bilinear for complexified input) as `(re, im)` 0-forms.
pub fn chern_weil_density(f: &FormField) -> Result<(FormField, FormField), GridError> {
    let d = f.domain;
    if d.dim() != 4 || f.degree != 2 {
        return Err(GridError::Degree(f.degree, d.dim()));
    }
    let table = wedge_table(4, 2, 2);
    let mut re = FormField::zeros(&d, 0, ValueKind::Real);
    let mut im = FormField::zeros(&d, 0, ValueKind::Real);
    for s in 0..d.num_sites() {
        for t in &table {
            let (pr, pi) = match f.kind {
                ValueKind::Lie => (f.lie(s, t.left).dot(&f.lie(s, t.right)), 0.0),
                ValueKind::CLie => f.clie(s, t.left).pairing(&f.clie(s, t.right)),
                k => return Err(GridError::Kind(k)),
            };
            re.data[s] += t.sign * pr;
            im.data[s] += t.sign * pi;
        }
    }
    Ok((re, im))
}

/// `(1/32π²) ∫ ⟨F∧F⟩` for a real or complexified connection on a 4-torus.
pub fn pontrjagin_integral(conn: &FormField) -> Result<(f64, f64), GridError> {
    if !conn.domain.is_torus() || conn.domain.dim() != 4 {
        return Err(GridError::NotTorus);
    }
    let f = curvature_of(conn)?;
    let (re, im) = chern_weil_density(&f)?;
    let k = 1.0 / (32.0 * PI * PI);
    Ok((k * re.integrate(), k * im.integrate()))
}

/// Energy identity for solutions: `∫|F − r²a∧a|² + r²∫|d_A a|²` against
/// `((1−2τ)/(τ² + (1−τ)²)) 32π² p1`.
pub fn energy_identity(cfg: &Configuration) -> Result<(f64, f64), GridError> {
    let (w, v) = w_and_v(cfg)?;
    let lhs = w.norm_l2().powi(2) + v.norm_l2().powi(2);
    let t = cfg.tau;
    let d = t * t + (1.0 - t) * (1.0 - t);
    let p1 = pontrjagin_integral(&cfg.conn)?.0;
    Ok((lhs, (1.0 - 2.0 * t) / d * 32.0 * PI * PI * p1))
}

/// The two squared combinations `∫|τw − (1−τ)v|²`, `∫|((1−τ)w + τv)⁺|²` and the value
/// `(1−2τ) 32π² p1` they sum to on solutions.
pub fn squares_identity(cfg: &Configuration) -> Result<(f64, f64, f64), GridError> {
    let t = cfg.tau;
    let (w, v) = w_and_v(cfg)?;
    let mut p = w.scale(t);
    p.axpy(-(1.0 - t), &v)?;
    let mut q = w.scale(1.0 - t);
    q.axpy(t, &v)?;
    let qp = sd_project(&q, true)?;
    let p1 = pontrjagin_integral(&cfg.conn)?.0;
    Ok((p.norm_l2().powi(2), qp.norm_l2().powi(2), (1.0 - 2.0 * t) * 32.0 * PI * PI * p1))
}

/// Both sides of the pointwise identity
/// `re((τ + i(1−τ))² ⟨F_𝔸∧F_𝔸⟩) = 2|R1|² + |R2|² − |P|² − |Q⁺|²`
/// with `𝔸 = A + i r a`, `P = τw − (1−τ)v`, `Q = (1−τ)w + τv`, `R1 = P⁺`, `R2 = Q⁻`.
/// The left side is assembled from the curvature of the complexified connection.
pub fn pointwise_identity(cfg: &Configuration) -> Result<(FormField, FormField), GridError> {
    let t = cfg.tau;
    let fc = curvature_of(&complex_connection(cfg))?;
    let (re, im) = chern_weil_density(&fc)?;
    let (cr, ci) = (t * t - (1.0 - t) * (1.0 - t), 2.0 * t * (1.0 - t));
    let mut lhs = re.scale(cr);
    lhs.axpy(-ci, &im)?;

    let (w, v) = w_and_v(cfg)?;
    let mut p = w.scale(t);
    p.axpy(-(1.0 - t), &v)?;
    let mut q = w.scale(1.0 - t);
    q.axpy(t, &v)?;
    let mut rhs = sd_project(&p, true)?.norm_sq_density().scale(2.0);
    rhs.axpy(1.0, &sd_project(&q, false)?.norm_sq_density())?;
    rhs.axpy(-1.0, &p.norm_sq_density())?;
    rhs.axpy(-1.0, &sd_project(&q, true)?.norm_sq_density())?;
    Ok((lhs, rhs))
}

/// `|∇_A a|² + 2r²|a∧a|²` pointwise.
pub fn energy_density(cfg: &Configuration) -> Result<FormField, GridError> {
    let mut e = grad_norm_sq_density(&cov_grad(&cfg.conn, &cfg.a));
    e.axpy(2.0 * cfg.r * cfg.r, &self_wedge(&cfg.a)?.norm_sq_density())?;
    Ok(e)
}

/// `∫(|∇_A a|² + 2r²|a∧a|²)`; flat metric, so no curvature term.
pub fn integral_identity(cfg: &Configuration) -> Result<f64, GridError> {
    Ok(energy_density(cfg)?.integrate())
}

/// Green identity at site `p` with `G` the Green's function of `d†d + 1`:
/// lhs `½|a|²(p) + ∫G(|∇_A a|² + 2r²|a∧a|²)`, rhs `∫G ½|a|²`.
pub fn green_identity(cfg: &Configuration, p: usize) -> Result<(f64, f64), GridError> {
    let g = green_dtd1(cfg.domain(), p)?;
    let a2 = cfg.a.norm_sq_density();
    let e = energy_density(cfg)?;
    let vol = cfg.domain().cell_volume();
    let mut lhs = 0.5 * a2.data[p];
    let mut rhs = 0.0;
    for s in 0..cfg.domain().num_sites() {
        lhs += vol * g.data[s] * e.data[s];
        rhs += vol * g.data[s] * 0.5 * a2.data[s];
    }
    Ok((lhs, rhs))
}

/// JSON record for an identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub grid: Vec<usize>,
    pub runtime_ms: u64,
}

impl IdentityReport {
    pub fn new(id: &str, lhs: f64, rhs: f64, domain: &Domain) -> Self {
        let abs_gap = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        IdentityReport {
            identity_id: id.to_string(),
            lhs,
            rhs,
            abs_gap,
            rel_gap: if scale > 0.0 { abs_gap / scale } else { 0.0 },
            grid: domain.sites[..domain.dim()].to_vec(),
            runtime_ms: 0,
        }
    }
}

/// Constant data of the model operator: unit `σ◇`, unit covector `e`, mass `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelOperatorSpec {
    pub sigma0: LieVec,
    pub e: [f64; 4],
    pub m: f64,
}

/// The four blocks of `ℒ(p, q)`:
/// `((dq − m e∧[σ◇,p])⁺, div q + m⟨e,[σ◇,p]⟩, (dp + m e∧[σ◇,q])⁻, div p − m⟨e,[σ◇,q]⟩)`.
#[derive(Clone, Debug)]
pub struct ModelImage {
    pub top2: FormField,
    pub top0: FormField,
    pub bottom2: FormField,
    pub bottom0: FormField,
    /// True when the inputs had components along `σ◇` that were projected away.
    pub projected: bool,
}

fn project_perp(x: &FormField, s0: &LieVec) -> (FormField, bool) {
    let mut out = x.clone();
    let mut changed = false;
    for s in 0..x.domain.num_sites() {
        for c in 0..x.ncomp() {
            let v = x.lie(s, c);
            let along = v.dot(s0);
            if along.abs() > 1e-14 * (1.0 + v.norm()) {
                changed = true;
            }
            out.set_lie(s, c, v - s0.scale(along));
        }
    }
    (out, changed)
}

/// `J x = [σ◇, x]` componentwise.
fn model_j(x: &FormField, s0: &LieVec) -> FormField {
    let mut out = x.clone();
    for s in 0..x.domain.num_sites() {
        for c in 0..x.ncomp() {
            out.set_lie(s, c, bracket(s0, &x.lie(s, c)));
        }
    }
    out
}

/// `(e ∧ y, ⟨e, y⟩)` for a constant covector `e` and a Lie-valued 1-form `y`.
fn e_wedge_and_contract(e: &[f64; 4], y: &FormField) -> (FormField, FormField) {
    let d = y.domain;
    let mut w = FormField::zeros(&d, 2, ValueKind::Lie);
    let mut c = FormField::zeros(&d, 0, ValueKind::Lie);
    let pairs = crate::grid::multi_indices(4, 2);
    for s in 0..d.num_sites() {
        for (k, pr) in pairs.iter().enumerate() {
            let (a, b) = (pr[0], pr[1]);
            w.set_lie(s, k, y.lie(s, b).scale(e[a]) - y.lie(s, a).scale(e[b]));
        }
        let mut acc = LieVec::ZERO;
        for a in 0..4 {
            acc += y.lie(s, a).scale(e[a]);
        }
        c.set_lie(s, 0, acc);
    }
    (w, c)
}

pub fn model_l_apply(spec: &ModelOperatorSpec, p: &FormField, q: &FormField) -> Result<ModelImage, GridError> {
    if p.domain.dim() != 4 || p.degree != 1 || q.degree != 1 {
        return Err(GridError::Degree(p.degree, p.domain.dim()));
    }
    let (p, cp) = project_perp(p, &spec.sigma0);
    let (q, cq) = project_perp(q, &spec.sigma0);
    let (ewp, ecp) = e_wedge_and_contract(&spec.e, &model_j(&p, &spec.sigma0));
    let (ewq, ecq) = e_wedge_and_contract(&spec.e, &model_j(&q, &spec.sigma0));
    let div = |x: &FormField| -> Result<FormField, GridError> { Ok(crate::grid::codiff(x)?.scale(-1.0)) };
    let mut t2 = ext_d(&q)?;
    t2.axpy(-spec.m, &ewp)?;
    let mut t0 = div(&q)?;
    t0.axpy(spec.m, &ecp)?;
    let mut b2 = ext_d(&p)?;
    b2.axpy(spec.m, &ewq)?;
    let mut b0 = div(&p)?;
    b0.axpy(-spec.m, &ecq)?;
    Ok(ModelImage {
        top2: sd_project(&t2, true)?,
        top0: t0,
        bottom2: sd_project(&b2, false)?,
        bottom0: b0,
        projected: cp || cq,
    })
}

/// Squared `L²` norm of `ℒx` with the full-tensor norm on the 2-form blocks
/// (twice the `μ<ν` sum).
pub fn model_l_norm_sq(img: &ModelImage) -> f64 {
    2.0 * img.top2.norm_l2().powi(2)
        + img.top0.norm_l2().powi(2)
        + 2.0 * img.bottom2.norm_l2().powi(2)
        + img.bottom0.norm_l2().powi(2)
}

/// `(∫|ℒx|², ∫(|∇x|² + 4m²|x|²))` with the discrete derivative on both sides.
pub fn model_weitzenbock(spec: &ModelOperatorSpec, p: &FormField, q: &FormField) -> Result<(f64, f64), GridError> {
    let img = model_l_apply(spec, p, q)?;
    let lhs = model_l_norm_sq(&img);
    let (p, _) = project_perp(p, &spec.sigma0);
    let (q, _) = project_perp(q, &spec.sigma0);
    let mut rhs = 4.0 * spec.m * spec.m * (p.norm_l2().powi(2) + q.norm_l2().powi(2));
    for mu in 0..4 {
        rhs += crate::grid::partial(&p, mu).norm_l2().powi(2) + crate::grid::partial(&q, mu).norm_l2().powi(2);
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::BandLimited;

    fn slice_cfg(n: usize, seed: u64, amp: f64, r: f64, tau: f64) -> Configuration {
        let d = Domain::cube3(n, 1.0).unwrap();
        let conn = BandLimited::new(&d, 1, ValueKind::Lie, 2, 5, amp, seed).field(&d, 1, ValueKind::Lie);
        let a = BandLimited::new(&d, 1, ValueKind::Lie, 2, 5, amp, seed + 1).field(&d, 1, ValueKind::Lie);
        Configuration::new(conn, a, r, tau).unwrap()
    }

    #[test]
    fn zero_connection_has_zero_cs() {
        let d = Domain::cube3(4, 1.0).unwrap();
        let z = FormField::zeros(&d, 1, ValueKind::CLie);
        let v = chern_simons(&z, 0.3).unwrap();
        assert_eq!((v.re, v.im), (0.0, 0.0));
    }

    #[test]
    fn single_direction_closed_field_has_zero_cs() {
        let d = Domain::cube3(8, 1.0).unwrap();
        // â = d f ⊗ σ2, f = sin(2πx) cos(2πy): closed discretely, â∧â∧â = 0
        let f = FormField::from_fn(&d, 0, ValueKind::Real, |x, o| {
            o[0] = (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()
        });
        let df = ext_d(&f).unwrap();
        let mut ahat = FormField::zeros(&d, 1, ValueKind::CLie);
        for s in 0..d.num_sites() {
            for m in 0..3 {
                ahat.data[s * 18 + m * 6 + 1] = df.real(s, m);
            }
        }
        let v = chern_simons(&ahat, 0.5).unwrap();
        assert!(v.re.abs() < 1e-13 && v.im.abs() < 1e-13);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = slice_cfg(6, 4, 0.5, 1.5, 0.3);
        let (ga, gs) = cs_gradient(&cfg).unwrap();
        let d = *cfg.domain();
        let dir_a = BandLimited::new(&d, 1, ValueKind::Lie, 2, 3, 1.0, 77).field(&d, 1, ValueKind::Lie);
        let dir_s = BandLimited::new(&d, 1, ValueKind::Lie, 2, 3, 1.0, 78).field(&d, 1, ValueKind::Lie);
        let eval = |eps: f64| {
            let mut c = cfg.clone();
            c.conn.axpy(eps, &dir_a).unwrap();
            c.a.axpy(eps / c.r, &dir_s).unwrap();
            chern_simons(&complex_connection(&c), c.tau).unwrap().weighted_real
        };
        let h = 1e-5;
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let an = ga.inner(&dir_a).unwrap() + gs.inner(&dir_s).unwrap();
        assert!((fd - an).abs() <= 1e-7 * an.abs().max(1e-3), "{fd} {an}");
    }

    #[test]
    fn flat_slice_is_critical() {
        let d = Domain::cube3(6, 1.0).unwrap();
        let cfg = Configuration::flat(&d, [0.4, -0.2, 0.9, 0.0], LieVec::basis(1), 1.3, 0.6).unwrap();
        let (ga, gs) = cs_gradient(&cfg).unwrap();
        assert!(ga.sup_norm() < 1e-12 && gs.sup_norm() < 1e-12);
    }

    #[test]
    fn constant_model_fields_are_exact() {
        let d = Domain::cube4(4, 1.0).unwrap();
        let spec = ModelOperatorSpec { sigma0: LieVec::basis(2), e: [0.6, 0.0, 0.8, 0.0], m: 0.7 };
        let p = FormField::from_fn(&d, 1, ValueKind::Lie, |_, o| {
            for c in 0..4 {
                o[3 * c] = 0.3 + c as f64;
                o[3 * c + 1] = -0.2 * c as f64;
            }
        });
        let q = FormField::from_fn(&d, 1, ValueKind::Lie, |_, o| {
            for c in 0..4 {
                o[3 * c] = 1.0 - 0.1 * c as f64;
                o[3 * c + 1] = 0.5;
            }
        });
        let (l, r) = model_weitzenbock(&spec, &p, &q).unwrap();
        let want = 4.0 * 0.49 * (p.norm_l2().powi(2) + q.norm_l2().powi(2));
        assert!((l - want).abs() < 1e-12 * want && (r - want).abs() < 1e-12 * want);
    }

    #[test]
    fn pointwise_identity_is_algebraic() {
        let d = Domain::cube4(4, 1.0).unwrap();
        for tau in [0.0, 0.4, 1.0] {
            let conn = BandLimited::new(&d, 1, ValueKind::Lie, 1, 3, 1.0, 3).field(&d, 1, ValueKind::Lie);
            let a = BandLimited::new(&d, 1, ValueKind::Lie, 1, 3, 1.0, 4).field(&d, 1, ValueKind::Lie);
            let cfg = Configuration::new(conn, a, 1.4, tau).unwrap();
            let (l, r) = pointwise_identity(&cfg).unwrap();
            assert!(l.sub(&r).unwrap().sup_norm() < 1e-11);
        }
    }
}
