//! Arithmetic in su(2) and its complexification.
//!
//! Coordinates are taken in the basis `σj = -i·τj` (τj the Pauli matrices), so the
//! invariant pairing `-½ trace(uv)` is the Euclidean dot product and the commutator
//! is twice the cross product.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Element of su(2) in the orthonormal basis (σ1, σ2, σ3).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LieVec(pub [f64; 3]);

/// Element of the complexified algebra, `re + i·im`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CLieVec {
    pub re: LieVec,
    pub im: LieVec,
}

impl LieVec {
    pub const ZERO: LieVec = LieVec([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        LieVec([x, y, z])
    }

    /// The basis element σ_{j+1}.
    pub fn basis(j: usize) -> Self {
        let mut c = [0.0; 3];
        c[j] = 1.0;
        LieVec(c)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        LieVec([s[0], s[1], s[2]])
    }

    pub fn write(&self, s: &mut [f64]) {
        s[..3].copy_from_slice(&self.0);
    }

    pub fn dot(&self, o: &LieVec) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &LieVec) -> LieVec {
        let (a, b) = (self.0, o.0);
        LieVec([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> LieVec {
        LieVec([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// The commutator `[u, v]`, equal to `2·(u × v)` in these coordinates.
pub fn bracket(u: &LieVec, v: &LieVec) -> LieVec {
    u.cross(v).scale(2.0)
}

/// The invariant inner product `-½ trace(uv)`.
pub fn inner(u: &LieVec, v: &LieVec) -> f64 {
    u.dot(v)
}

/// `[u, [q, u]]`.
pub fn double_ad(u: &LieVec, q: &LieVec) -> LieVec {
    bracket(u, &bracket(q, u))
}

/// Matrix trace of the product `uvw` of three algebra elements.
pub fn trace3(u: &LieVec, v: &LieVec, w: &LieVec) -> f64 {
    -2.0 * u.cross(v).dot(w)
}

/// Determinant of the 3×3 matrix with rows u, v, w.
pub fn det3(u: &LieVec, v: &LieVec, w: &LieVec) -> f64 {
    u.cross(v).dot(w)
}

impl Add for LieVec {
    type Output = LieVec;
    fn add(self, o: LieVec) -> LieVec {
        LieVec([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for LieVec {
    type Output = LieVec;
    fn sub(self, o: LieVec) -> LieVec {
        LieVec([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for LieVec {
    type Output = LieVec;
    fn neg(self) -> LieVec {
        self.scale(-1.0)
    }
}

impl Mul<LieVec> for f64 {
    type Output = LieVec;
    fn mul(self, v: LieVec) -> LieVec {
        v.scale(self)
    }
}

impl AddAssign for LieVec {
    fn add_assign(&mut self, o: LieVec) {
        *self = *self + o;
    }
}

impl SubAssign for LieVec {
    fn sub_assign(&mut self, o: LieVec) {
        *self = *self - o;
    }
}

impl CLieVec {
    pub const ZERO: CLieVec = CLieVec { re: LieVec::ZERO, im: LieVec::ZERO };

    pub fn new(re: LieVec, im: LieVec) -> Self {
        CLieVec { re, im }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        CLieVec { re: LieVec::from_slice(&s[..3]), im: LieVec::from_slice(&s[3..6]) }
    }

    pub fn write(&self, s: &mut [f64]) {
        self.re.write(&mut s[..3]);
        self.im.write(&mut s[3..6]);
    }

    /// Complex-bilinear extension of the invariant pairing, as (re, im).
    pub fn pairing(&self, o: &CLieVec) -> (f64, f64) {
        (
            self.re.dot(&o.re) - self.im.dot(&o.im),
            self.re.dot(&o.im) + self.im.dot(&o.re),
        )
    }

    /// Hermitian squared norm `|re|² + |im|²`.
    pub fn norm_sq(&self) -> f64 {
        self.re.norm_sq() + self.im.norm_sq()
    }
}

/// Complex-bilinear commutator.
pub fn cbracket(u: &CLieVec, v: &CLieVec) -> CLieVec {
    CLieVec {
        re: bracket(&u.re, &v.re) - bracket(&u.im, &v.im),
        im: bracket(&u.re, &v.im) + bracket(&u.im, &v.re),
    }
}

/// Complex-bilinear determinant of the matrix with rows u, v, w, as (re, im).
pub fn cdet3(u: &CLieVec, v: &CLieVec, w: &CLieVec) -> (f64, f64) {
    let uv = cbracket(u, v);
    let (re, im) = uv.pairing(w);
    (0.5 * re, 0.5 * im)
}

/// Unit quaternion `w + x·σ1 + y·σ2 + z·σ3`, acting on su(2) by conjugation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat(pub [f64; 4]);

impl Quat {
    pub const ONE: Quat = Quat([1.0, 0.0, 0.0, 0.0]);

    pub fn mul(&self, o: &Quat) -> Quat {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = o.0;
        Quat([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }

    pub fn conj(&self) -> Quat {
        Quat([self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat([self.0[0] / n, self.0[1] / n, self.0[2] / n, self.0[3] / n])
    }

    /// `exp(u)` for u in su(2).
    pub fn exp(u: &LieVec) -> Quat {
        let t = u.norm();
        if t < 1e-300 {
            return Quat::ONE;
        }
        let s = t.sin() / t;
        Quat([t.cos(), u.0[0] * s, u.0[1] * s, u.0[2] * s])
    }

    /// Imaginary part as an algebra element.
    pub fn vec(&self) -> LieVec {
        LieVec([self.0[1], self.0[2], self.0[3]])
    }

    /// `g u g⁻¹`.
    pub fn adjoint(&self, u: &LieVec) -> LieVec {
        let p = Quat([0.0, u.0[0], u.0[1], u.0[2]]);
        self.mul(&p).mul(&self.conj()).vec()
    }
}
