//! Ball and sphere quadrature in three and four dimensions.
//!
//! Radius: Gauss–Legendre. Unit S³: Hopf coordinates
//! `x = (cos η cos ξ1, cos η sin ξ1, sin η cos ξ2, sin η sin ξ2)` with measure
//! `sin η cos η dη dξ1 dξ2`, Gauss–Legendre in η and the trapezoid rule in ξ1, ξ2.
//! Unit S²: Gauss–Legendre in `cos θ`, trapezoid in φ.

use super::{Domain, FormField, GridError};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BallSpec {
    pub center: [f64; 4],
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: [f64; 4], radius: f64) -> Self {
        BallSpec { center, radius }
    }

    /// The closed ball must not wrap onto itself.
    pub fn check(&self, domain: &Domain) -> Result<(), GridError> {
        if !(self.radius > 0.0) || self.radius >= 0.5 * domain.min_extent() {
            return Err(GridError::BallTooLarge(self.radius));
        }
        Ok(())
    }
}

/// Product rule: radial nodes on [0,1] and unit-sphere directions with weights.
#[derive(Clone, Debug)]
pub struct BallRule {
    pub dim: usize,
    pub radial: Vec<(f64, f64)>,
    pub sphere: Vec<([f64; 4], f64)>,
}

impl BallRule {
    pub fn new(dim: usize, n_radial: usize, n_polar: usize, n_azimuth: usize) -> Self {
        let (gx, gw) = gauss_legendre(n_radial);
        let radial = gx.iter().zip(&gw).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        let (px, pw) = gauss_legendre(n_polar);
        let dxi = 2.0 * PI / n_azimuth as f64;
        let mut sphere = Vec::new();
        if dim == 4 {
            for (x, w) in px.iter().zip(&pw) {
                let eta = 0.25 * PI * (x + 1.0);
                let weta = 0.25 * PI * w * eta.sin() * eta.cos();
                for i in 0..n_azimuth {
                    let x1 = i as f64 * dxi;
                    for j in 0..n_azimuth {
                        let x2 = j as f64 * dxi;
                        let u = [
                            eta.cos() * x1.cos(),
                            eta.cos() * x1.sin(),
                            eta.sin() * x2.cos(),
                            eta.sin() * x2.sin(),
                        ];
                        sphere.push((u, weta * dxi * dxi));
                    }
                }
            }
        } else {
            for (ct, w) in px.iter().zip(&pw) {
                let st = (1.0 - ct * ct).sqrt();
                for i in 0..n_azimuth {
                    let ph = i as f64 * dxi;
                    sphere.push(([st * ph.cos(), st * ph.sin(), *ct, 0.0], w * dxi));
                }
            }
        }
        BallRule { dim, radial, sphere }
    }

    /// 16 radial nodes, 16 polar nodes, 32 azimuthal nodes.
    pub fn default_for(dim: usize) -> Self {
        Self::new(dim, 16, 16, 32)
    }

    /// `∫_{∂B_r(c)} f` for a vector of integrands.
    pub fn sphere_n<const N: usize>(&self, c: [f64; 4], r: f64, mut f: impl FnMut([f64; 4]) -> [f64; N]) -> [f64; N] {
        let mut acc = [0.0; N];
        let jac = r.powi(self.dim as i32 - 1);
        for (u, w) in &self.sphere {
            let mut x = c;
            for a in 0..self.dim {
                x[a] += r * u[a];
            }
            let v = f(x);
            for k in 0..N {
                acc[k] += w * jac * v[k];
            }
        }
        acc
    }

    /// `∫_{B_r(c)} f` for a vector of integrands.
    pub fn ball_n<const N: usize>(&self, c: [f64; 4], r: f64, mut f: impl FnMut([f64; 4]) -> [f64; N]) -> [f64; N] {
        let mut acc = [0.0; N];
        for &(t, wt) in &self.radial {
            let s = self.sphere_n(c, r * t, &mut f);
            for k in 0..N {
                acc[k] += r * wt * s[k];
            }
        }
        acc
    }

    pub fn sphere(&self, c: [f64; 4], r: f64, mut f: impl FnMut([f64; 4]) -> f64) -> f64 {
        self.sphere_n(c, r, |x| [f(x)])[0]
    }

    pub fn ball(&self, c: [f64; 4], r: f64, mut f: impl FnMut([f64; 4]) -> f64) -> f64 {
        self.ball_n(c, r, |x| [f(x)])[0]
    }
}

/// Multilinear periodic interpolation of every component of a field at `x`.
pub fn interpolate(field: &FormField, x: [f64; 4], out: &mut [f64]) {
    let d = &field.domain;
    let dim = d.dim();
    let st = field.stride();
    out[..st].iter_mut().for_each(|v| *v = 0.0);
    let mut base = [0usize; 4];
    let mut frac = [0.0; 4];
    for a in 0..dim {
        let n = d.sites[a];
        let t = x[a] / d.spacing(a);
        let fl = t.floor();
        frac[a] = t - fl;
        base[a] = (fl as i64).rem_euclid(n as i64) as usize;
        if !d.periodic(a) && base[a] >= n - 1 {
            base[a] = n - 2;
            frac[a] = (t - base[a] as f64).clamp(0.0, 1.0);
        }
    }
    for corner in 0..(1usize << dim) {
        let mut c = [0usize; 4];
        let mut w = 1.0;
        for a in 0..dim {
            let bit = (corner >> a) & 1;
            c[a] = (base[a] + bit) % d.sites[a];
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if w == 0.0 {
            continue;
        }
        let s = d.index(c);
        for (o, v) in out[..st].iter_mut().zip(field.site(s)) {
            *o += w * v;
        }
    }
}

/// `∫_{B}` of a real 0-form sampled by multilinear interpolation.
pub fn ball_integrate(f: &FormField, ball: &BallSpec, rule: &BallRule) -> Result<f64, GridError> {
    ball.check(&f.domain)?;
    let mut buf = vec![0.0; f.stride()];
    Ok(rule.ball(ball.center, ball.radius, |x| {
        interpolate(f, x, &mut buf);
        buf[0]
    }))
}

/// `∫_{∂B}` of a real 0-form sampled by multilinear interpolation.
pub fn sphere_integrate(f: &FormField, ball: &BallSpec, rule: &BallRule) -> Result<f64, GridError> {
    ball.check(&f.domain)?;
    let mut buf = vec![0.0; f.stride()];
    Ok(rule.sphere(ball.center, ball.radius, |x| {
        interpolate(f, x, &mut buf);
        buf[0]
    }))
}
