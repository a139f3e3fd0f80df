//! Configurations `(A, a)` in a fixed trivialization, covariant calculus, residuals of
//! the equation families, gauge transformations and Coulomb gauge fixing.

use crate::grid::{
    codiff, ext_d, hodge_star, lie_wedge, partial, partial_t, sd_project, self_wedge,
    wedge_table, Domain, FormField, GridError, ValueKind,
};
use crate::liealg::{bracket, double_ad, LieVec, Quat};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("scale r = {0} must be at least 1")]
    Scale(f64),
    #[error("tau = {0} must lie in [0, 1]")]
    Tau(f64),
    #[error("connection and section must be su(2)-valued 1-forms on one domain")]
    Shape,
    #[error("Coulomb fixing stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// The pair `(A, a)`: connection 1-form `A` (relative to the product connection) and the
/// rescaled section `a`, with physical section `r·a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub conn: FormField,
    pub a: FormField,
    pub r: f64,
    pub tau: f64,
}

impl Configuration {
    pub fn new(conn: FormField, a: FormField, r: f64, tau: f64) -> Result<Self, FieldError> {
        let ok = |f: &FormField| f.degree == 1 && f.kind == ValueKind::Lie;
        if !ok(&conn) || !ok(&a) || conn.domain != a.domain {
            return Err(FieldError::Shape);
        }
        if !(r >= 1.0) {
            return Err(FieldError::Scale(r));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(FieldError::Tau(tau));
        }
        Ok(Configuration { conn, a, r, tau })
    }

    pub fn zero(domain: &Domain, r: f64, tau: f64) -> Result<Self, FieldError> {
        let z = FormField::zeros(domain, 1, ValueKind::Lie);
        Self::new(z.clone(), z, r, tau)
    }

    /// `A = 0`, `a = Σ c_μ dx^μ ⊗ σ`: a flat SL(2;C) configuration.
    pub fn flat(domain: &Domain, c: [f64; 4], sigma: LieVec, r: f64, tau: f64) -> Result<Self, FieldError> {
        let a = FormField::from_fn(domain, 1, ValueKind::Lie, |_, o| {
            for m in 0..domain.dim() {
                sigma.scale(c[m]).write(&mut o[3 * m..3 * m + 3]);
            }
        });
        Self::new(FormField::zeros(domain, 1, ValueKind::Lie), a, r, tau)
    }

    pub fn domain(&self) -> &Domain {
        &self.a.domain
    }

    /// `𝔞 = r·a`.
    pub fn physical_section(&self) -> FormField {
        self.a.scale(self.r)
    }
}

/// `F_A = dA + A∧A`.
pub fn curvature_of(conn: &FormField) -> Result<FormField, GridError> {
    ext_d(conn)?.add(&self_wedge(conn)?)
}

pub fn curvature(cfg: &Configuration) -> Result<FormField, GridError> {
    curvature_of(&cfg.conn)
}

/// Transpose of `q ↦ A∧q` under the pointwise pairing, mapping (k+1)-forms to k-forms.
fn ad_wedge_t(conn: &FormField, beta: &FormField) -> Result<FormField, GridError> {
    let dim = beta.domain.dim();
    if beta.degree == 0 {
        return Err(GridError::Degree(0, dim));
    }
    let k = beta.degree - 1;
    let table = wedge_table(dim, 1, k);
    let mut out = FormField::zeros(&beta.domain, k, ValueKind::Lie);
    for s in 0..beta.domain.num_sites() {
        for t in &table {
            let v = bracket(&conn.lie(s, t.left), &beta.lie(s, t.out)).scale(-t.sign);
            let cur = out.lie(s, t.right);
            out.set_lie(s, t.right, cur + v);
        }
    }
    Ok(out)
}

/// `d_A q = dq + A∧q`.
pub fn cov_d(conn: &FormField, q: &FormField) -> Result<FormField, GridError> {
    ext_d(q)?.add(&lie_wedge(conn, q)?)
}

/// Exact adjoint of [`cov_d`].
pub fn cov_codiff(conn: &FormField, q: &FormField) -> Result<FormField, GridError> {
    codiff(q)?.add(&ad_wedge_t(conn, q)?)
}

fn ad_component(conn: &FormField, mu: usize, q: &FormField, sign: f64) -> FormField {
    let mut out = q.clone();
    let nc = q.ncomp();
    for s in 0..q.domain.num_sites() {
        let am = conn.lie(s, mu);
        for c in 0..nc {
            out.set_lie(s, c, bracket(&am, &q.lie(s, c)).scale(sign));
        }
    }
    out
}

/// `∇_μ q = D_μ q + [A_μ, q]` for every direction μ.
pub fn cov_grad(conn: &FormField, q: &FormField) -> Vec<FormField> {
    (0..q.domain.dim())
        .map(|mu| {
            let mut d = partial(q, mu);
            d.axpy(1.0, &ad_component(conn, mu, q, 1.0)).expect("same shape");
            d
        })
        .collect()
}

/// `∇_A† (g_μ)_μ = Σ_μ (D_μᵀ g_μ − [A_μ, g_μ])`, the exact adjoint of [`cov_grad`].
pub fn cov_grad_t(conn: &FormField, g: &[FormField]) -> FormField {
    let mut out = FormField::zeros(&g[0].domain, g[0].degree, ValueKind::Lie);
    for (mu, gm) in g.iter().enumerate() {
        out.axpy(1.0, &partial_t(gm, mu)).expect("same shape");
        out.axpy(-1.0, &ad_component(conn, mu, gm, 1.0)).expect("same shape");
    }
    out
}

/// Pointwise `Σ_μ |∇_μ q|²`.
pub fn grad_norm_sq_density(grads: &[FormField]) -> FormField {
    let mut out = FormField::zeros(&grads[0].domain, 0, ValueKind::Real);
    for g in grads {
        out.axpy(1.0, &g.norm_sq_density()).expect("same shape");
    }
    out
}

/// Three residual fields of an equation system.
#[derive(Clone, Debug)]
pub struct Residuals {
    pub first: FormField,
    pub second: FormField,
    pub third: FormField,
}

impl Residuals {
    pub fn norms(&self) -> [f64; 3] {
        [self.first.norm_l2(), self.second.norm_l2(), self.third.norm_l2()]
    }
}

/// `w = F_A − r² a∧a` and `v = r d_A a`.
pub fn w_and_v(cfg: &Configuration) -> Result<(FormField, FormField), GridError> {
    let r2 = cfg.r * cfg.r;
    let w = curvature(cfg)?.sub(&self_wedge(&cfg.a)?.scale(r2))?;
    let v = cov_d(&cfg.conn, &cfg.a)?.scale(cfg.r);
    Ok((w, v))
}

/// `((F − r²a∧a)⁺, (d_A a)⁻, d_A†a)`.
pub fn residuals_asd(cfg: &Configuration) -> Result<Residuals, GridError> {
    let r2 = cfg.r * cfg.r;
    let w = curvature(cfg)?.sub(&self_wedge(&cfg.a)?.scale(r2))?;
    let da = cov_d(&cfg.conn, &cfg.a)?;
    Ok(Residuals {
        first: sd_project(&w, true)?,
        second: sd_project(&da, false)?,
        third: cov_codiff(&cfg.conn, &cfg.a)?,
    })
}

/// `(τw⁺ − (1−τ)v⁺, (1−τ)w⁻ + τv⁻, d_A†a)` with `w, v` as in [`w_and_v`].
pub fn residuals_kw(cfg: &Configuration) -> Result<Residuals, GridError> {
    let t = cfg.tau;
    let (w, v) = w_and_v(cfg)?;
    let mut first = sd_project(&w, true)?.scale(t);
    first.axpy(-(1.0 - t), &sd_project(&v, true)?)?;
    let mut second = sd_project(&w, false)?.scale(1.0 - t);
    second.axpy(t, &sd_project(&v, false)?)?;
    Ok(Residuals { first, second, third: cov_codiff(&cfg.conn, &cfg.a)? })
}

/// `F − r²a∧a − sinh θ r d_A a − cosh θ r ∗d_A a` with `e^θ = (1−τ)/τ`, for `τ ∈ (0,1)`.
pub fn single_equation_residual(cfg: &Configuration) -> Result<FormField, FieldError> {
    let t = cfg.tau;
    if !(t > 0.0 && t < 1.0) {
        return Err(FieldError::Tau(t));
    }
    let th = ((1.0 - t) / t).ln();
    let (w, v) = w_and_v(cfg)?;
    let mut out = w;
    out.axpy(-th.sinh(), &v)?;
    out.axpy(-th.cosh(), &hodge_star(&v))?;
    Ok(out)
}

/// `Σ_α [a_α, [a_ν, a_α]]` as a 1-form.
pub fn quartic_term(a: &FormField) -> FormField {
    let dim = a.domain.dim();
    let mut out = FormField::zeros(&a.domain, 1, ValueKind::Lie);
    for s in 0..a.domain.num_sites() {
        for n in 0..dim {
            let an = a.lie(s, n);
            let mut acc = LieVec::ZERO;
            for al in 0..dim {
                acc += double_ad(&a.lie(s, al), &an);
            }
            out.set_lie(s, n, acc);
        }
    }
    out
}

/// `∇_A†∇_A a + r² Σ_α [a_α, [a, a_α]]` (flat metric: no Ricci term).
pub fn bochner_residual(cfg: &Configuration) -> FormField {
    let g = cov_grad(&cfg.conn, &cfg.a);
    let mut out = cov_grad_t(&cfg.conn, &g);
    out.axpy(cfg.r * cfg.r, &quartic_term(&cfg.a)).expect("same shape");
    out
}

/// Both sides of the scalar identity `½d†d|a|² + |∇_A a|² + 2r²|a∧a|² = ⟨a, bochner⟩`,
/// as pointwise densities `(lhs, rhs)`.
pub fn bochner_scalar(cfg: &Configuration) -> Result<(FormField, FormField), GridError> {
    let a2 = cfg.a.norm_sq_density();
    let mut lhs = codiff(&ext_d(&a2)?)?.scale(0.5);
    lhs.axpy(1.0, &grad_norm_sq_density(&cov_grad(&cfg.conn, &cfg.a)))?;
    lhs.axpy(2.0 * cfg.r * cfg.r, &self_wedge(&cfg.a)?.norm_sq_density())?;
    let b = bochner_residual(cfg);
    let mut rhs = FormField::zeros(cfg.domain(), 0, ValueKind::Real);
    for s in 0..cfg.domain().num_sites() {
        rhs.data[s] = (0..cfg.domain().dim()).map(|m| cfg.a.lie(s, m).dot(&b.lie(s, m))).sum();
    }
    Ok((lhs, rhs))
}

/// `(∗d_A∗F_A, r² Σ_α [a_α, (∇_A a)_α])`. In four dimensions `∗d_A∗ = −d_A†` on
/// 2-forms, which is how the left side is assembled.
pub fn cov_div_of_f(cfg: &Configuration) -> Result<(FormField, FormField), GridError> {
    let f = curvature(cfg)?;
    let lhs = cov_codiff(&cfg.conn, &f)?.scale(-1.0);
    let g = cov_grad(&cfg.conn, &cfg.a);
    let mut rhs = FormField::zeros(cfg.domain(), 1, ValueKind::Lie);
    // (∇_A a)_α in the identity is the α-th derivative of the 1-form, contracted in α:
    // the ν-component is Σ_α [a_α, ∇_α a_ν].
    for s in 0..cfg.domain().num_sites() {
        for n in 0..cfg.domain().dim() {
            let mut acc = LieVec::ZERO;
            for al in 0..cfg.domain().dim() {
                acc += bracket(&cfg.a.lie(s, al), &g[al].lie(s, n));
            }
            rhs.set_lie(s, n, acc.scale(cfg.r * cfg.r));
        }
    }
    Ok((lhs, rhs))
}

/// Per-site unit quaternion acting on su(2) by conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeField {
    pub domain: Domain,
    pub q: Vec<Quat>,
}

impl GaugeField {
    pub fn identity(domain: &Domain) -> Self {
        GaugeField { domain: *domain, q: vec![Quat::ONE; domain.num_sites()] }
    }

    pub fn constant(domain: &Domain, g: Quat) -> Self {
        GaugeField { domain: *domain, q: vec![g.normalized(); domain.num_sites()] }
    }

    /// `g(x) = exp(X(x))` for an algebra-valued function `X`.
    pub fn exp_of(domain: &Domain, mut x: impl FnMut([f64; 4]) -> LieVec) -> Self {
        let q = (0..domain.num_sites()).map(|s| Quat::exp(&x(domain.position(s)))).collect();
        GaugeField { domain: *domain, q }
    }

    /// `g = exp(X)` for a Lie-valued 0-form `X`.
    pub fn exp_field(x: &FormField) -> Self {
        let q = (0..x.domain.num_sites()).map(|s| Quat::exp(&x.lie(s, 0))).collect();
        GaugeField { domain: x.domain, q }
    }

    /// Pointwise product `self · o`.
    pub fn compose(&self, o: &GaugeField) -> GaugeField {
        let q = self.q.iter().zip(&o.q).map(|(a, b)| a.mul(b).normalized()).collect();
        GaugeField { domain: self.domain, q }
    }

    /// `max |‖g‖ − 1|` over sites.
    pub fn unit_defect(&self) -> f64 {
        self.q.iter().map(|g| (g.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `(D_μ g) g⁻¹` projected onto su(2), as a 1-form.
    pub fn maurer_cartan(&self) -> FormField {
        let d = &self.domain;
        let comps: Vec<FormField> = (0..4)
            .map(|c| {
                let mut f = FormField::zeros(d, 0, ValueKind::Real);
                for (s, g) in self.q.iter().enumerate() {
                    f.data[s] = g.0[c];
                }
                f
            })
            .collect();
        let mut out = FormField::zeros(d, 1, ValueKind::Lie);
        for mu in 0..d.dim() {
            let dq: Vec<FormField> = comps.iter().map(|f| partial(f, mu)).collect();
            for s in 0..d.num_sites() {
                let dg = Quat([dq[0].data[s], dq[1].data[s], dq[2].data[s], dq[3].data[s]]);
                out.set_lie(s, mu, dg.mul(&self.q[s].conj()).vec());
            }
        }
        out
    }
}

/// `(d e^ξ) e^{−ξ} = ((e^{ad ξ} − 1)/ad ξ)(dξ)` in closed form, with `dξ` the discrete
/// derivative of the generator. Agrees with [`GaugeField::maurer_cartan`] of `exp(ξ)` to
/// `O(h²)` and is exactly `dξ` when `ξ` has a fixed direction.
pub fn exp_maurer_cartan(xi: &FormField) -> FormField {
    let d = xi.domain;
    let mut out = FormField::zeros(&d, 1, ValueKind::Lie);
    for mu in 0..d.dim() {
        let dx = partial(xi, mu);
        for s in 0..d.num_sites() {
            let v = dx.lie(s, 0);
            let x = xi.lie(s, 0);
            let t = x.norm();
            if t < 1e-300 {
                out.set_lie(s, mu, v);
                continue;
            }
            let u = x.scale(1.0 / t);
            let par = u.scale(u.dot(&v));
            let perp = v - par;
            let (c, k) = ((2.0 * t).sin() / (2.0 * t), (1.0 - (2.0 * t).cos()) / (2.0 * t));
            out.set_lie(s, mu, par + perp.scale(c) + u.cross(&perp).scale(k));
        }
    }
    out
}

fn conjugate(g: &GaugeField, f: &FormField) -> FormField {
    let mut out = f.clone();
    let nc = f.ncomp();
    for s in 0..f.domain.num_sites() {
        for c in 0..nc {
            out.set_lie(s, c, g.q[s].adjoint(&f.lie(s, c)));
        }
    }
    out
}

/// `A ↦ gAg⁻¹ − (dg)g⁻¹`.
pub fn gauge_conn(conn: &FormField, g: &GaugeField) -> FormField {
    let mut out = conjugate(g, conn);
    out.axpy(-1.0, &g.maurer_cartan()).expect("same shape");
    out
}

/// `A ↦ gAg⁻¹ − (dg)g⁻¹`, `a ↦ gag⁻¹`.
pub fn gauge_apply(cfg: &Configuration, g: &GaugeField) -> Result<Configuration, FieldError> {
    if g.domain != *cfg.domain() {
        return Err(GridError::DomainMismatch.into());
    }
    Ok(Configuration {
        conn: gauge_conn(&cfg.conn, g),
        a: conjugate(g, &cfg.a),
        r: cfg.r,
        tau: cfg.tau,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct CoulombOptions {
    /// Target for `‖d†A‖ / ‖A‖`, and for `‖A‖` relative to its input.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoulombOptions {
    fn default() -> Self {
        CoulombOptions { tol: 1e-6, max_iter: 20000 }
    }
}

#[derive(Clone, Debug)]
pub struct CoulombReport {
    pub cfg: Configuration,
    pub gauge: GaugeField,
    pub iterations: usize,
    /// `‖d†A‖ / ‖A‖` at exit (0 when `A = 0`).
    pub residual: f64,
    /// `‖A‖_{L²}` after each accepted step, starting with the input. Accumulated from the
    /// per-step changes `½⟨A' − A, A' + A⟩`, which resolve decreases below the rounding of a
    /// direct recomputation.
    pub norms: Vec<f64>,
}

/// Descent on `½‖A^g‖²` over the gauge group. Stops when `‖d†A‖ / ‖A‖ ≤ tol` or when
/// `‖A‖` itself has fallen below `tol` times its initial value (pure-gauge input).
///
/// Each accepted step applies `e = exp(α d†A)` to the current field, so the functional's
/// gradient with respect to the step is exactly `−d†A`; the inhomogeneous term uses
/// [`exp_maurer_cartan`], so abelian gradients are removed exactly. Step sizes are Barzilai–Borwein
/// with Armijo backtracking, which makes `‖A‖` non-increasing. The returned gauge is the
/// accumulated product; re-applying it to the input with [`gauge_apply`] reproduces the
/// output up to the `O(h²)` failure of the discrete Leibniz rule.
pub fn coulomb_fix(cfg: &Configuration, opts: &CoulombOptions) -> Result<CoulombReport, FieldError> {
    let d = *cfg.domain();
    if !d.is_torus() {
        return Err(GridError::NotTorus.into());
    }
    let mut conn = cfg.conn.clone();
    let mut a = cfg.a.clone();
    let mut gauge = GaugeField::identity(&d);
    let mut norms = vec![conn.norm_l2()];
    let mut norm_sq = norms[0] * norms[0];
    let hmin = (0..d.dim()).map(|x| d.spacing(x)).fold(f64::INFINITY, f64::min);
    let mut alpha = hmin * hmin / d.dim() as f64;
    let mut div = codiff(&conn)?;
    let mut prev: Option<(FormField, FormField)> = None;
    for it in 0..opts.max_iter {
        let an = conn.norm_l2();
        let res = if an == 0.0 { 0.0 } else { div.norm_l2() / an };
        if res <= opts.tol || an <= opts.tol * norms[0] {
            return Ok(CoulombReport {
                cfg: Configuration { conn, a, r: cfg.r, tau: cfg.tau },
                gauge,
                iterations: it,
                residual: res,
                norms,
            });
        }
        if let Some((s_prev, div_prev)) = &prev {
            // y = grad_new − grad_old with grad = −d†A
            let y = div_prev.sub(&div)?;
            let sy = s_prev.inner(&y)?;
            if sy > 0.0 {
                alpha = s_prev.inner(s_prev)? / sy;
            }
        }
        let g2 = div.inner(&div)?;
        let mut accepted = None;
        for _ in 0..60 {
            let step = div.scale(alpha);
            let e = GaugeField::exp_field(&step);
            let mut trial = conjugate(&e, &conn);
            trial.axpy(-1.0, &exp_maurer_cartan(&step))?;
            // ½(‖A'‖² − ‖A‖²) as ½⟨A' − A, A' + A⟩, accurate near the minimum
            let change = 0.5 * trial.sub(&conn)?.inner(&trial.add(&conn)?)?;
            if change <= -1e-4 * alpha * g2 {
                accepted = Some((step, e, trial, change));
                break;
            }
            alpha *= 0.5;
        }
        let Some((step, e, trial, change)) = accepted else {
            return Err(FieldError::NoConvergence { iterations: it, residual: res });
        };
        a = conjugate(&e, &a);
        gauge = e.compose(&gauge);
        conn = trial;
        norm_sq += 2.0 * change;
        norms.push(norm_sq.max(0.0).sqrt());
        let new_div = codiff(&conn)?;
        prev = Some((step, div));
        div = new_div;
    }
    let an = conn.norm_l2();
    Err(FieldError::NoConvergence {
        iterations: opts.max_iter,
        residual: if an == 0.0 { 0.0 } else { div.norm_l2() / an },
    })
}

/// Sobolev norm `(‖A‖² + Σ_μ‖D_μ A‖²)^{1/2}`.
pub fn l21_norm(f: &FormField) -> f64 {
    let mut s = f.norm_l2().powi(2);
    for mu in 0..f.domain.dim() {
        s += partial(f, mu).norm_l2().powi(2);
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::BandLimited;

    fn random_cfg(n: usize, seed: u64, amp: f64, r: f64, tau: f64) -> Configuration {
        let d = Domain::cube4(n, 1.0).unwrap();
        let conn = BandLimited::new(&d, 1, ValueKind::Lie, 2, 6, amp, seed).field(&d, 1, ValueKind::Lie);
        let a = BandLimited::new(&d, 1, ValueKind::Lie, 2, 6, amp, seed + 1).field(&d, 1, ValueKind::Lie);
        Configuration::new(conn, a, r, tau).unwrap()
    }

    #[test]
    fn constant_curvature_example() {
        let d = Domain::cube4(4, 1.0).unwrap();
        let (c1, c2) = (0.7, -1.3);
        let conn = FormField::from_fn(&d, 1, ValueKind::Lie, |_, o| {
            o[0] = c1;
            o[4] = c2;
        });
        let f = curvature_of(&conn).unwrap();
        for s in 0..d.num_sites() {
            for c in 0..6 {
                let want = if c == 0 { LieVec::new(0.0, 0.0, 2.0 * c1 * c2) } else { LieVec::ZERO };
                assert!((f.lie(s, c) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn covariant_codiff_is_adjoint() {
        let cfg = random_cfg(6, 3, 1.0, 1.0, 0.5);
        let d = *cfg.domain();
        for k in 0..4 {
            let al = BandLimited::new(&d, k, ValueKind::Lie, 2, 4, 1.0, 10 + k as u64).field(&d, k, ValueKind::Lie);
            let be = BandLimited::new(&d, k + 1, ValueKind::Lie, 2, 4, 1.0, 20 + k as u64)
                .field(&d, k + 1, ValueKind::Lie);
            let l = cov_d(&cfg.conn, &al).unwrap().inner(&be).unwrap();
            let r = al.inner(&cov_codiff(&cfg.conn, &be).unwrap()).unwrap();
            assert!((l - r).abs() < 1e-12 * (1.0 + l.abs()), "degree {k}: {l} {r}");
        }
        let g = cov_grad(&cfg.conn, &cfg.a);
        let h: Vec<FormField> = (0..4)
            .map(|m| BandLimited::new(&d, 1, ValueKind::Lie, 2, 4, 1.0, 40 + m).field(&d, 1, ValueKind::Lie))
            .collect();
        let l: f64 = g.iter().zip(&h).map(|(x, y)| x.inner(y).unwrap()).sum();
        let r = cfg.a.inner(&cov_grad_t(&cfg.conn, &h)).unwrap();
        assert!((l - r).abs() < 1e-12 * (1.0 + l.abs()));
    }

    #[test]
    fn kato_inequality_holds_pointwise() {
        let cfg = random_cfg(8, 5, 1.0, 1.0, 0.5);
        let d = *cfg.domain();
        let g = cov_grad(&cfg.conn, &cfg.a);
        // d|q| = ⟨q, ∇_A q⟩/|q| since the bracket term is orthogonal to q
        let q = &cfg.a;
        for s in (0..d.num_sites()).step_by(97) {
            let nq = q.site(s).iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut dn2 = 0.0;
            let mut gn2 = 0.0;
            for mu in 0..4 {
                let dot: f64 = q.site(s).iter().zip(g[mu].site(s)).map(|(a, b)| a * b).sum();
                dn2 += (dot / nq).powi(2);
                gn2 += g[mu].site(s).iter().map(|v| v * v).sum::<f64>();
            }
            assert!(dn2 <= gn2 + 1e-12);
        }
    }

    #[test]
    fn flat_configuration_has_zero_residuals() {
        let d = Domain::cube4(6, 1.0).unwrap();
        for tau in [0.0, 0.3, 1.0] {
            let cfg = Configuration::flat(&d, [0.3, -1.0, 0.5, 2.0], LieVec::basis(0), 2.0, tau).unwrap();
            for n in residuals_kw(&cfg).unwrap().norms() {
                assert!(n < 1e-14);
            }
            for n in residuals_asd(&cfg).unwrap().norms() {
                assert!(n < 1e-14);
            }
            assert!(bochner_residual(&cfg).sup_norm() < 1e-14);
        }
    }

    #[test]
    fn kw_at_tau_one_is_asd() {
        let cfg = random_cfg(4, 8, 1.0, 1.0, 1.0);
        let kw = residuals_kw(&cfg).unwrap();
        let asd = residuals_asd(&cfg).unwrap();
        assert!(kw.first.sub(&asd.first).unwrap().sup_norm() < 1e-13);
        assert!(kw.second.sub(&asd.second).unwrap().sup_norm() < 1e-13);
        assert!(kw.third.sub(&asd.third).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn kw_at_tau_zero_is_reversed_asd() {
        let cfg = random_cfg(4, 9, 1.0, 1.0, 0.0);
        let kw = residuals_kw(&cfg).unwrap();
        let (w, v) = w_and_v(&cfg).unwrap();
        let want1 = sd_project(&v, true).unwrap().scale(-1.0);
        let want2 = sd_project(&w, false).unwrap();
        assert!(kw.first.sub(&want1).unwrap().sup_norm() < 1e-13);
        assert!(kw.second.sub(&want2).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn single_equation_projects_to_kw() {
        for tau in [0.2, 0.5, 0.8] {
            let cfg = random_cfg(4, 12, 1.0, 1.7, tau);
            let s = single_equation_residual(&cfg).unwrap();
            let kw = residuals_kw(&cfg).unwrap();
            let p = sd_project(&s, true).unwrap().scale(tau);
            let m = sd_project(&s, false).unwrap().scale(1.0 - tau);
            assert!(p.sub(&kw.first).unwrap().sup_norm() < 1e-12);
            assert!(m.sub(&kw.second).unwrap().sup_norm() < 1e-12);
        }
    }

    #[test]
    fn constant_gauge_preserves_curvature_norm() {
        let cfg = random_cfg(6, 21, 1.0, 1.0, 0.5);
        let g = GaugeField::constant(cfg.domain(), Quat([0.3, -0.5, 0.2, 0.7]));
        let t = gauge_apply(&cfg, &g).unwrap();
        let f0 = curvature(&cfg).unwrap().norm_sq_density();
        let f1 = curvature(&t).unwrap().norm_sq_density();
        assert!(f0.sub(&f1).unwrap().sup_norm() < 1e-12);
        let id = gauge_apply(&cfg, &GaugeField::identity(cfg.domain())).unwrap();
        assert_eq!(id, cfg);
    }

    #[test]
    fn coulomb_fix_leaves_coclosed_field() {
        let d = Domain::cube4(6, 1.0).unwrap();
        let conn = FormField::from_fn(&d, 1, ValueKind::Lie, |x, o| {
            o[3] = (2.0 * std::f64::consts::PI * x[0]).sin() * 0.1;
        });
        assert!(codiff(&conn).unwrap().sup_norm() < 1e-14);
        let cfg = Configuration::new(conn.clone(), conn.scale(0.0), 1.0, 0.5).unwrap();
        let rep = coulomb_fix(&cfg, &CoulombOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.cfg, cfg);
    }

    #[test]
    fn coulomb_norm_record_tracks_the_field() {
        let d = Domain::cube4(6, 1.0).unwrap();
        let conn = crate::synth::BandLimited::new(&d, 1, ValueKind::Lie, 1, 4, 0.2, 5).field(&d, 1, ValueKind::Lie);
        let cfg = Configuration::new(conn.clone(), conn.scale(0.0), 1.0, 0.5).unwrap();
        let rep = coulomb_fix(&cfg, &CoulombOptions::default()).unwrap();
        assert!(rep.residual <= 1e-6);
        assert!(rep.norms.windows(2).all(|w| w[1] <= w[0]));
        let last = *rep.norms.last().unwrap();
        assert!((last - rep.cfg.conn.norm_l2()).abs() < 1e-12 * last);
    }

    #[test]
    fn exp_maurer_cartan_matches_group_difference() {
        let d = Domain::cube4(8, 1.0).unwrap();
        let phi = |x: [f64; 4]| 0.4 * (2.0 * std::f64::consts::PI * x[1]).sin();
        let ab = FormField::from_fn(&d, 0, ValueKind::Lie, |x, o| LieVec::basis(0).scale(phi(x)).write(o));
        let mc = exp_maurer_cartan(&ab);
        let dphi = crate::grid::partial(&ab, 1);
        for s in 0..d.num_sites() {
            assert!((mc.lie(s, 1) - dphi.lie(s, 0)).norm() < 1e-15);
        }
        let gap = |n| {
            let d = Domain::cube4(n, 1.0).unwrap();
            let xi = crate::synth::BandLimited::new(&d, 0, ValueKind::Lie, 1, 3, 0.5, 2).field(&d, 0, ValueKind::Lie);
            exp_maurer_cartan(&xi).sub(&GaugeField::exp_field(&xi).maurer_cartan()).unwrap().sup_norm()
        };
        let r = gap(16) / gap(32);
        assert!(r > 3.0 && r < 5.0, "ratio {r} {} {}", gap(8), gap(16));
    }
}
