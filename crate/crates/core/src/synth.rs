//! Seeded band-limited fields and closed-form model configurations.

use crate::grid::{binomial, Domain, FormField, ValueKind};
use crate::liealg::{bracket, LieVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A finite sum of Fourier modes `c cos(2π k·x/L) + s sin(2π k·x/L)` per real slot.
#[derive(Clone, Debug)]
pub struct BandLimited {
    dim: usize,
    extents: [f64; 4],
    slots: usize,
    modes: Vec<([i32; 4], Vec<f64>, Vec<f64>)>,
}

impl BandLimited {
    /// `n_modes` random wave vectors with `|k_a| ≤ kmax`, Gaussian coefficients of
    /// variance `amplitude² / n_modes`.
    pub fn new(
        domain: &Domain,
        degree: usize,
        kind: ValueKind,
        kmax: i32,
        n_modes: usize,
        amplitude: f64,
        seed: u64,
    ) -> Self {
        let dim = domain.dim();
        let slots = binomial(dim, degree) * kind.width();
        let mut g = rng(seed);
        let scale = amplitude / (n_modes.max(1) as f64).sqrt();
        let mut modes = Vec::with_capacity(n_modes);
        while modes.len() < n_modes {
            let mut k = [0i32; 4];
            for ka in k.iter_mut().take(dim) {
                *ka = g.gen_range(-kmax..=kmax);
            }
            if k.iter().all(|&v| v == 0) {
                continue;
            }
            let c: Vec<f64> = (0..slots).map(|_| scale * g.sample::<f64, _>(StandardNormal)).collect();
            let s: Vec<f64> = (0..slots).map(|_| scale * g.sample::<f64, _>(StandardNormal)).collect();
            modes.push((k, c, s));
        }
        BandLimited { dim, extents: domain.extents, slots, modes }
    }

    fn phase(&self, k: &[i32; 4], x: &[f64; 4]) -> f64 {
        (0..self.dim).map(|a| 2.0 * PI * k[a] as f64 * x[a] / self.extents[a]).sum()
    }

    pub fn eval(&self, x: [f64; 4], out: &mut [f64]) {
        out[..self.slots].iter_mut().for_each(|v| *v = 0.0);
        for (k, c, s) in &self.modes {
            let (sn, cs) = self.phase(k, &x).sin_cos();
            for i in 0..self.slots {
                out[i] += c[i] * cs + s[i] * sn;
            }
        }
    }

    /// Exact `∂_axis` of [`eval`](Self::eval).
    pub fn deriv(&self, x: [f64; 4], axis: usize, out: &mut [f64]) {
        out[..self.slots].iter_mut().for_each(|v| *v = 0.0);
        for (k, c, s) in &self.modes {
            let w = 2.0 * PI * k[axis] as f64 / self.extents[axis];
            let (sn, cs) = self.phase(k, &x).sin_cos();
            for i in 0..self.slots {
                out[i] += w * (-c[i] * sn + s[i] * cs);
            }
        }
    }

    /// Sample on a grid as a form of the given degree and kind.
    pub fn field(&self, domain: &Domain, degree: usize, kind: ValueKind) -> FormField {
        FormField::from_fn(domain, degree, kind, |x, o| self.eval(x, o))
    }

    /// Exact `∂_axis` sampled on a grid.
    pub fn deriv_field(&self, domain: &Domain, degree: usize, kind: ValueKind, axis: usize) -> FormField {
        FormField::from_fn(domain, degree, kind, |x, o| self.deriv(x, axis, o))
    }
}

/// Lie-valued 1-form data given in closed form: `a`, `∇_A a` and `F_A` at a point.
///
/// Index conventions: `a[μ]`, `grad[ν][μ] = (∇_A a)_{νμ}` (derivative direction first),
/// `curv[μ][ν] = F_{μν}`.
pub trait FieldSampler {
    fn dim(&self) -> usize {
        4
    }
    fn a(&self, x: [f64; 4]) -> [LieVec; 4];
    fn grad(&self, x: [f64; 4]) -> [[LieVec; 4]; 4];
    fn curv(&self, _x: [f64; 4]) -> [[LieVec; 4]; 4] {
        [[LieVec::ZERO; 4]; 4]
    }
}

/// Real polynomial as a list of `(coefficient, exponents)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<(f64, [u32; 4])>);

impl Poly {
    pub fn eval(&self, x: [f64; 4]) -> f64 {
        self.0
            .iter()
            .map(|(c, e)| c * (0..4).map(|a| x[a].powi(e[a] as i32)).product::<f64>())
            .sum()
    }

    pub fn diff(&self, axis: usize) -> Poly {
        let mut out = Vec::new();
        for &(c, e) in &self.0 {
            if e[axis] > 0 {
                let mut f = e;
                f[axis] -= 1;
                out.push((c * e[axis] as f64, f));
            }
        }
        Poly(out)
    }

    pub fn scaled(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|&(c, e)| (c * s, e)).collect())
    }

    pub fn plus(&self, o: &Poly) -> Poly {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        Poly(v)
    }

    pub fn laplacian(&self) -> Poly {
        (0..4).fold(Poly(vec![]), |acc, a| acc.plus(&self.diff(a).diff(a)))
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }
}

fn mono(c: f64, e: [u32; 4]) -> (f64, [u32; 4]) {
    (c, e)
}

/// Harmonic polynomials in four variables of degree 1, 2 and 3.
pub fn harmonic_basis() -> Vec<Poly> {
    let mut v = Vec::new();
    for a in 0..4 {
        let mut e = [0; 4];
        e[a] = 1;
        v.push(Poly(vec![mono(1.0, e)]));
    }
    for a in 0..4 {
        for b in a + 1..4 {
            let mut e = [0; 4];
            e[a] = 1;
            e[b] = 1;
            v.push(Poly(vec![mono(1.0, e)]));
        }
    }
    for a in 1..4 {
        let (mut e0, mut ea) = ([0; 4], [0; 4]);
        e0[0] = 2;
        ea[a] = 2;
        v.push(Poly(vec![mono(1.0, e0), mono(-1.0, ea)]));
    }
    v.push(Poly(vec![mono(1.0, [1, 1, 1, 0])]));
    v.push(Poly(vec![mono(1.0, [0, 1, 1, 1])]));
    v.push(Poly(vec![mono(1.0, [3, 0, 0, 0]), mono(-3.0, [1, 2, 0, 0])]));
    v.push(Poly(vec![mono(1.0, [0, 0, 3, 0]), mono(-3.0, [0, 0, 1, 2])]));
    v
}

/// `a = du ⊗ σ` for a polynomial `u` (abelian, `A = 0`), centered at `center`.
#[derive(Clone, Debug)]
pub struct PolyGradient {
    pub u: Poly,
    pub sigma: LieVec,
    pub center: [f64; 4],
    grad_u: Vec<Poly>,
    hess_u: Vec<Vec<Poly>>,
}

impl PolyGradient {
    pub fn new(u: Poly, sigma: LieVec, center: [f64; 4]) -> Self {
        let grad_u: Vec<Poly> = (0..4).map(|a| u.diff(a)).collect();
        let hess_u = grad_u.iter().map(|g| (0..4).map(|b| g.diff(b)).collect()).collect();
        PolyGradient { u, sigma, center, grad_u, hess_u }
    }

    /// `d(x1 x2) ⊗ σ1`, homogeneous of degree one.
    pub fn degree_one(center: [f64; 4]) -> Self {
        Self::new(Poly(vec![mono(1.0, [1, 1, 0, 0])]), LieVec::basis(0), center)
    }

    /// `d(x1³ − 3x1x2²) ⊗ σ1`, homogeneous of degree two.
    pub fn degree_two(center: [f64; 4]) -> Self {
        Self::new(
            Poly(vec![mono(1.0, [3, 0, 0, 0]), mono(-3.0, [1, 2, 0, 0])]),
            LieVec::basis(0),
            center,
        )
    }

    /// Seeded random combination of [`harmonic_basis`] elements.
    pub fn random_harmonic(seed: u64, center: [f64; 4]) -> Self {
        let mut g = rng(seed);
        let mut u = Poly(vec![]);
        for p in harmonic_basis() {
            let c: f64 = g.sample(StandardNormal);
            u = u.plus(&p.scaled(c));
        }
        Self::new(u, LieVec::basis(0), center)
    }

    fn local(&self, x: [f64; 4]) -> [f64; 4] {
        [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2], x[3] - self.center[3]]
    }
}

impl FieldSampler for PolyGradient {
    fn a(&self, x: [f64; 4]) -> [LieVec; 4] {
        let y = self.local(x);
        std::array::from_fn(|m| self.sigma.scale(self.grad_u[m].eval(y)))
    }

    fn grad(&self, x: [f64; 4]) -> [[LieVec; 4]; 4] {
        let y = self.local(x);
        std::array::from_fn(|n| std::array::from_fn(|m| self.sigma.scale(self.hess_u[m][n].eval(y))))
    }
}

/// Constant `a`, `A = 0`.
#[derive(Clone, Debug)]
pub struct ConstantModel(pub [LieVec; 4]);

impl FieldSampler for ConstantModel {
    fn a(&self, _x: [f64; 4]) -> [LieVec; 4] {
        self.0
    }
    fn grad(&self, _x: [f64; 4]) -> [[LieVec; 4]; 4] {
        [[LieVec::ZERO; 4]; 4]
    }
}

/// The two-valued model `ν = Re(z^{1/2} dz)`, `z = x1 + i x2` about `center`, made
/// single valued by `a = ν ⊗ σ(θ/2)` with `σ(φ) = cos φ σ1 + sin φ σ2` and the
/// connection `A = −¼ dθ σ3`, for which `∇_A σ(θ/2) = 0` and `F_A = 0` off `Z`.
#[derive(Clone, Debug)]
pub struct Z2Model {
    pub center: [f64; 4],
}

impl Z2Model {
    /// `(ρ, θ)` of the `(x1, x2)` displacement.
    pub fn polar(&self, x: [f64; 4]) -> (f64, f64) {
        let (u, v) = (x[0] - self.center[0], x[1] - self.center[1]);
        (u.hypot(v), v.atan2(u))
    }

    /// The real 1-form `ν` for the branch `θ ∈ (−π, π]`.
    pub fn nu(&self, x: [f64; 4]) -> [f64; 4] {
        let (rho, th) = self.polar(x);
        let s = rho.sqrt();
        [s * (0.5 * th).cos(), -s * (0.5 * th).sin(), 0.0, 0.0]
    }

    pub fn sigma(&self, x: [f64; 4]) -> LieVec {
        let (_, th) = self.polar(x);
        LieVec::new((0.5 * th).cos(), (0.5 * th).sin(), 0.0)
    }

    /// `A = −¼ dθ σ3`, `dθ = (−x2 dx1 + x1 dx2)/ρ²`.
    pub fn connection(&self, x: [f64; 4]) -> [LieVec; 4] {
        let (u, v) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r2 = u * u + v * v;
        if r2 == 0.0 {
            return [LieVec::ZERO; 4];
        }
        let s3 = LieVec::basis(2);
        [s3.scale(0.25 * v / r2), s3.scale(-0.25 * u / r2), LieVec::ZERO, LieVec::ZERO]
    }

    /// `∂_n ν_m` for the branch of [`nu`](Self::nu).
    pub fn dnu(&self, x: [f64; 4]) -> [[f64; 4]; 4] {
        // ν1 − i ν2 = f(z) = z^{1/2}; f' = ½ z^{-1/2}
        let (rho, th) = self.polar(x);
        let mut g = [[0.0; 4]; 4];
        if rho == 0.0 {
            return g;
        }
        let m = 0.5 / rho.sqrt();
        let (fr, fi) = (m * (0.5 * th).cos(), -m * (0.5 * th).sin());
        g[0][0] = fr;
        g[1][0] = -fi;
        g[0][1] = -fi;
        g[1][1] = -fr;
        g
    }
}

impl FieldSampler for Z2Model {
    fn a(&self, x: [f64; 4]) -> [LieVec; 4] {
        let nu = self.nu(x);
        let s = self.sigma(x);
        std::array::from_fn(|m| s.scale(nu[m]))
    }

    fn grad(&self, x: [f64; 4]) -> [[LieVec; 4]; 4] {
        let d = self.dnu(x);
        let s = self.sigma(x);
        std::array::from_fn(|n| std::array::from_fn(|m| s.scale(d[n][m])))
    }
}

/// Covariant derivative of a sampler by finite differencing the closed form, for oracles.
pub fn fd_grad(
    a: &dyn Fn([f64; 4]) -> [LieVec; 4],
    conn: &dyn Fn([f64; 4]) -> [LieVec; 4],
    x: [f64; 4],
    eps: f64,
) -> [[LieVec; 4]; 4] {
    let a0 = a(x);
    let c = conn(x);
    std::array::from_fn(|n| {
        let (mut xp, mut xm) = (x, x);
        xp[n] += eps;
        xm[n] -= eps;
        let (ap, am) = (a(xp), a(xm));
        std::array::from_fn(|m| (ap[m] - am[m]).scale(0.5 / eps) + bracket(&c[n], &a0[m]))
    })
}
