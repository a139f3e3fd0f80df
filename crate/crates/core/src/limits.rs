//! Analysis of families of configurations: the 𝕋‡ eigen-splitting, the sign cocycle of
//! the top eigenvector, concentration sets, pointwise limsup fields and Hölder fits.

use crate::fields::Configuration;
use crate::grid::fft::{fft_nd, mode, C64};
use crate::grid::quadrature::BallSpec;
use crate::grid::{codiff, ext_d, Domain, FormField, GridError, ValueKind};
use crate::liealg::{bracket, LieVec};
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LimitsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("overlap of balls {0} and {1} is ambiguous (mean pairing {2:.3})")]
    Ambiguous(usize, usize, f64),
    #[error("balls {0} and {1} do not overlap on unmasked sites")]
    NoOverlap(usize, usize),
    #[error("ball {0} has a masked center")]
    MaskedCenter(usize),
    #[error("no zero set inside the ball")]
    NoZeroSet,
    #[error("distance range too short for a fit ({0} shells)")]
    ShortRange(usize),
    #[error("need at least {0} members")]
    TooFewMembers(usize),
}

/// Symmetric 3×3 matrix, row major.
pub type Sym3 = [[f64; 3]; 3];

/// Gram matrix `Σ_α a_α a_αᵀ` of the four Lie components at each site.
pub fn t_endomorphism(a: &FormField) -> Vec<Sym3> {
    let dim = a.domain.dim();
    (0..a.domain.num_sites())
        .map(|s| {
            let mut m = [[0.0; 3]; 3];
            for al in 0..dim {
                let v = a.lie(s, al).0;
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += v[i] * v[j];
                    }
                }
            }
            m
        })
        .collect()
}

fn mat_vec(m: &Sym3, v: &LieVec) -> LieVec {
    LieVec(std::array::from_fn(|i| (0..3).map(|j| m[i][j] * v.0[j]).sum()))
}

/// Eigenvalues in descending order, by the trigonometric closed form.
pub fn sym3_eigenvalues(m: &Sym3) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q; 3];
    }
    let b: Sym3 = std::array::from_fn(|i| std::array::from_fn(|j| (m[i][j] - if i == j { q } else { 0.0 }) / p));
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (0.5 * det).clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

fn orthonormal_complement(s: &LieVec) -> (LieVec, LieVec) {
    let k = (0..3).min_by(|&i, &j| s.0[i].abs().total_cmp(&s.0[j].abs())).unwrap_or(0);
    let u = s.cross(&LieVec::basis(k));
    let u = u.scale(1.0 / u.norm());
    (u, s.cross(&u))
}

/// Unit top eigenvector, from the cross products of `M − λ₁I` then two Newton steps on the
/// orthogonal complement. The sign makes the largest component positive.
pub fn sym3_top_vector(m: &Sym3, lambda: f64) -> LieVec {
    let rows: [LieVec; 3] =
        std::array::from_fn(|i| LieVec(std::array::from_fn(|j| m[i][j] - if i == j { lambda } else { 0.0 })));
    let mut s = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])]
        .into_iter()
        .max_by(|x, y| x.norm_sq().total_cmp(&y.norm_sq()))
        .unwrap_or(LieVec::basis(0));
    if s.norm_sq() == 0.0 {
        s = LieVec::basis(0);
    }
    s = s.scale(1.0 / s.norm());
    for _ in 0..2 {
        let l = s.dot(&mat_vec(m, &s));
        let res = mat_vec(m, &s) - s.scale(l);
        let (u, v) = orthonormal_complement(&s);
        let (mu, mv) = (mat_vec(m, &u), mat_vec(m, &v));
        let (a11, a12, a22) = (u.dot(&mu) - l, u.dot(&mv), v.dot(&mv) - l);
        let det = a11 * a22 - a12 * a12;
        if det == 0.0 {
            break;
        }
        let (b1, b2) = (-u.dot(&res), -v.dot(&res));
        let c1 = (a22 * b1 - a12 * b2) / det;
        let c2 = (a11 * b2 - a12 * b1) / det;
        s = s + u.scale(c1) + v.scale(c2);
        s = s.scale(1.0 / s.norm());
    }
    let k = (0..3).max_by(|&i, &j| s.0[i].abs().total_cmp(&s.0[j].abs())).unwrap_or(0);
    if s.0[k] < 0.0 {
        -s
    } else {
        s
    }
}

/// Per-site splitting `a = ν ⊗ σ‡ + 𝔞`.
#[derive(Clone, Debug)]
pub struct DecompositionField {
    pub domain: Domain,
    /// `|ν|²`, the top eigenvalue of 𝕋‡ evaluated as a Rayleigh quotient.
    pub lambda: Vec<f64>,
    pub gap: Vec<f64>,
    pub sigma: Vec<LieVec>,
    pub nu: Vec<[f64; 4]>,
    pub rem: Vec<[LieVec; 4]>,
    /// `true` where the gap clears the threshold.
    pub valid: Vec<bool>,
}

pub fn decompose(a: &FormField, gap_threshold: f64) -> DecompositionField {
    let d = a.domain;
    let dim = d.dim();
    let t = t_endomorphism(a);
    let n = d.num_sites();
    let mut out = DecompositionField {
        domain: d,
        lambda: Vec::with_capacity(n),
        gap: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
        rem: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
    };
    for s in 0..n {
        let ev = sym3_eigenvalues(&t[s]);
        let sig = sym3_top_vector(&t[s], ev[0]);
        let mut nu = [0.0; 4];
        let mut rem = [LieVec::ZERO; 4];
        for al in 0..dim {
            let v = a.lie(s, al);
            nu[al] = sig.dot(&v);
            rem[al] = v - sig.scale(nu[al]);
        }
        let gap = ev[0] - ev[1];
        out.lambda.push(nu.iter().map(|x| x * x).sum());
        out.gap.push(gap);
        out.sigma.push(sig);
        out.nu.push(nu);
        out.rem.push(rem);
        out.valid.push(gap >= gap_threshold);
    }
    out
}

/// Worst site values of the four splitting invariants over valid sites:
/// `(|λ‡ − |ν|²|, max_α |⟨σ‡, 𝔞_α⟩|, |Σ_α ν_α 𝔞_α|, ||a∧a|² − 4|ν|²|𝔞|² − |𝔞∧𝔞|²|)`.
pub fn decomposition_defects(a: &FormField, dec: &DecompositionField) -> [f64; 4] {
    let dim = a.domain.dim();
    let mut w = [0.0f64; 4];
    for s in 0..dec.lambda.len() {
        if !dec.valid[s] {
            continue;
        }
        let nu = &dec.nu[s];
        let rem = &dec.rem[s];
        let nu2: f64 = nu.iter().map(|x| x * x).sum();
        w[0] = w[0].max((dec.lambda[s] - nu2).abs());
        let mut mix = LieVec::ZERO;
        let (mut aa, mut rr, mut rem2) = (0.0, 0.0, 0.0);
        for al in 0..dim {
            w[1] = w[1].max(dec.sigma[s].dot(&rem[al]).abs());
            mix += rem[al].scale(nu[al]);
            rem2 += rem[al].norm_sq();
            for be in (al + 1)..dim {
                aa += bracket(&a.lie(s, al), &a.lie(s, be)).norm_sq();
                rr += bracket(&rem[al], &rem[be]).norm_sq();
            }
        }
        w[2] = w[2].max(mix.norm());
        w[3] = w[3].max((aa - 4.0 * nu2 * rem2 - rr).abs());
    }
    w
}

impl DecompositionField {
    /// `(σ‡ as a Lie 0-form, ν as a real 1-form, validity mask as a real 0-form)`.
    pub fn to_fields(&self) -> (FormField, FormField, FormField) {
        let d = &self.domain;
        let dim = d.dim();
        let mut sig = FormField::zeros(d, 0, ValueKind::Lie);
        let mut nu = FormField::zeros(d, 1, ValueKind::Real);
        let mut mask = FormField::zeros(d, 0, ValueKind::Real);
        for s in 0..d.num_sites() {
            sig.set_lie(s, 0, self.sigma[s]);
            nu.site_mut(s).copy_from_slice(&self.nu[s][..dim]);
            mask.data[s] = if self.valid[s] { 1.0 } else { 0.0 };
        }
        (sig, nu, mask)
    }
}

/// Sites of the grid inside a ball.
pub fn ball_sites(d: &Domain, b: &BallSpec) -> Vec<usize> {
    (0..d.num_sites()).filter(|&s| d.distance(&d.position(s), &b.center) <= b.radius).collect()
}

fn nearest_site(d: &Domain, x: [f64; 4]) -> usize {
    let mut c = [0usize; 4];
    for a in 0..d.dim() {
        let n = d.sites[a] as i64;
        c[a] = ((x[a] / d.spacing(a)).round() as i64).rem_euclid(n) as usize;
    }
    d.index(c)
}

fn neighbours(d: &Domain, s: usize) -> Vec<usize> {
    let c = d.coords(s);
    let mut out = Vec::new();
    for a in 0..d.dim() {
        for delta in [-1isize, 1] {
            if let Some(t) = d.shifted(c, a, delta) {
                out.push(d.index(t));
            }
        }
    }
    out
}

/// Local signs `ε(s) ∈ {±1}` on a ball so that `ε σ‡` varies continuously, by breadth-first
/// propagation from the center over valid sites.
pub fn local_signs(dec: &DecompositionField, ball: &BallSpec) -> BTreeMap<usize, f64> {
    let d = &dec.domain;
    let inside: std::collections::BTreeSet<usize> =
        ball_sites(d, ball).into_iter().filter(|&s| dec.valid[s]).collect();
    let mut signs = BTreeMap::new();
    let start = nearest_site(d, ball.center);
    let start = if inside.contains(&start) {
        start
    } else {
        match inside.iter().min_by(|&&x, &&y| {
            d.distance(&d.position(x), &ball.center).total_cmp(&d.distance(&d.position(y), &ball.center))
        }) {
            Some(&s) => s,
            None => return signs,
        }
    };
    signs.insert(start, 1.0);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let e = signs[&s];
        for t in neighbours(d, s) {
            if inside.contains(&t) && !signs.contains_key(&t) {
                let pair = dec.sigma[s].dot(&dec.sigma[t]) * e;
                signs.insert(t, if pair >= 0.0 { 1.0 } else { -1.0 });
                queue.push_back(t);
            }
        }
    }
    signs
}

#[derive(Clone, Debug, Serialize)]
pub struct SignCocycle {
    pub cover: Vec<BallSpec>,
    /// `ι` on overlapping pairs `(i, j)`, `i < j`.
    pub iota: BTreeMap<(usize, usize), f64>,
}

impl SignCocycle {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.iota.get(&(i.min(j), i.max(j))).copied()
    }

    /// Product of `ι` around a closed chain of ball indices.
    pub fn holonomy(&self, chain: &[usize]) -> Option<f64> {
        let mut h = 1.0;
        for k in 0..chain.len() {
            h *= self.get(chain[k], chain[(k + 1) % chain.len()])?;
        }
        Some(h)
    }

    /// Worst triple product deviation from 1 over all triple overlaps.
    pub fn triple_defect(&self) -> f64 {
        let n = self.cover.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if let (Some(a), Some(b), Some(c)) = (self.get(i, j), self.get(j, k), self.get(k, i)) {
                        worst = worst.max((a * b * c - 1.0).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `ι_{BB′}` = sign of the mean of `⟨ε_B σ‡, ε_{B′} σ‡⟩` over the overlap. Pairs that do not
/// overlap are left out.
pub fn sign_cocycle(dec: &DecompositionField, cover: &[BallSpec]) -> Result<SignCocycle, LimitsError> {
    let signs: Vec<BTreeMap<usize, f64>> = cover.iter().map(|b| local_signs(dec, b)).collect();
    for (i, s) in signs.iter().enumerate() {
        if s.is_empty() {
            return Err(LimitsError::MaskedCenter(i));
        }
    }
    let mut iota = BTreeMap::new();
    for i in 0..cover.len() {
        for j in (i + 1)..cover.len() {
            let (mut acc, mut cnt) = (0.0, 0usize);
            for (s, ei) in &signs[i] {
                if let Some(ej) = signs[j].get(s) {
                    acc += ei * ej;
                    cnt += 1;
                }
            }
            if cnt == 0 {
                continue;
            }
            let mean = acc / cnt as f64;
            if mean.abs() < 0.5 {
                return Err(LimitsError::Ambiguous(i, j, mean));
            }
            iota.insert((i, j), mean.signum());
        }
    }
    Ok(SignCocycle { cover: cover.to_vec(), iota })
}

/// Balls of radius `radius` centered at `n` equally spaced points of the circle of radius
/// `big` about `center` in the `(x1, x2)` plane.
pub fn circle_cover(center: [f64; 4], big: f64, radius: f64, n: usize) -> Vec<BallSpec> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let mut c = center;
            c[0] += big * t.cos();
            c[1] += big * t.sin();
            BallSpec::new(c, radius)
        })
        .collect()
}

/// `(‖dν‖, ‖d†ν‖)` over the sites of `region` at least two cells from its edge, using the
/// local signs of the region.
pub fn harmonicity_check(dec: &DecompositionField, region: &BallSpec) -> Result<(f64, f64), LimitsError> {
    let d = &dec.domain;
    let dim = d.dim();
    let signs = local_signs(dec, region);
    let mut nu = FormField::zeros(d, 1, ValueKind::Real);
    for (&s, e) in &signs {
        for al in 0..dim {
            nu.site_mut(s)[al] = e * dec.nu[s][al];
        }
    }
    let dn = ext_d(&nu)?;
    let cn = codiff(&nu)?;
    let hmax = (0..dim).map(|a| d.spacing(a)).fold(0.0, f64::max);
    let inner = BallSpec::new(region.center, region.radius - 2.0 * hmax);
    let (mut a, mut b) = (0.0, 0.0);
    for s in ball_sites(d, &inner) {
        if !signs.contains_key(&s) {
            continue;
        }
        a += dn.site(s).iter().map(|x| x * x).sum::<f64>();
        b += cn.site(s).iter().map(|x| x * x).sum::<f64>();
    }
    let v = d.cell_volume();
    Ok(((a * v).sqrt(), (b * v).sqrt()))
}

/// Masses `∫_{B_ρ(p)} f` of a real 0-form over lattice balls centered at every site.
pub fn ball_masses(f: &FormField, rho: f64) -> Vec<f64> {
    let d = &f.domain;
    let ns = d.num_sites();
    let mut fh: Vec<C64> = f.data.iter().map(|&x| C64::new(x, 0.0)).collect();
    fft_nd(d, &mut fh, false);
    let mut kh: Vec<C64> = (0..ns)
        .map(|s| {
            let c = d.coords(s);
            let r2: f64 = (0..d.dim()).map(|a| (mode(c[a], d.sites[a]) as f64 * d.spacing(a)).powi(2)).sum();
            C64::new(if r2 <= rho * rho * (1.0 + 1e-12) { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    fft_nd(d, &mut kh, false);
    for (x, k) in fh.iter_mut().zip(&kh) {
        *x *= k;
    }
    fft_nd(d, &mut fh, true);
    let scale = d.cell_volume() / ns as f64;
    fh.iter().map(|z| z.re * scale).collect()
}

/// Direct-summation oracle for [`ball_masses`] at one center site.
pub fn ball_mass_direct(f: &FormField, center: usize, rho: f64) -> f64 {
    let d = &f.domain;
    let p = d.position(center);
    (0..d.num_sites())
        .filter(|&s| d.distance(&d.position(s), &p) <= rho * (1.0 + 1e-12))
        .map(|s| f.data[s])
        .sum::<f64>()
        * d.cell_volume()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub site: usize,
    pub x: [f64; 4],
    pub radius: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationSet {
    pub points: Vec<ThetaPoint>,
    /// Radius at which some ball first reaches the threshold mass (`r_max` if none).
    pub r0: f64,
    pub threshold: f64,
    pub cap: f64,
}

impl ConcentrationSet {
    pub fn distance_to(&self, d: &Domain, x: &[f64; 4]) -> f64 {
        self.points.iter().map(|p| d.distance(&p.x, x)).fold(f64::INFINITY, f64::min)
    }
}

/// Iterative construction of the concentration set of a density `w ≥ 0` at threshold
/// `c⁻²/8`, with radii on the lattice `j·h/2` and bounded by `r_max`.
pub fn theta_c_construct(w: &FormField, c: f64, e_bound: f64, r_max: f64) -> ConcentrationSet {
    let d = &w.domain;
    let thr = c.powi(-2) / 8.0;
    let h = d.spacing(0);
    let r_max = r_max.min(0.5 * d.min_extent() - 1e-9);
    let masses = |rho: f64| ball_masses(w, rho);
    let reached = |rho: f64| masses(rho).iter().any(|&m| m >= thr);
    let mut set = ConcentrationSet { points: vec![], r0: r_max, threshold: thr, cap: e_bound * e_bound * c * c };
    let jmax = (2.0 * r_max / h).floor() as usize;
    if jmax == 0 || !reached(jmax as f64 * 0.5 * h) {
        return set;
    }
    let (mut lo, mut hi) = (0usize, jmax);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if reached(mid as f64 * 0.5 * h) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r0 = hi as f64 * 0.5 * h;
    set.r0 = r0;
    let mut k = 0u32;
    loop {
        let rad = r0 * 2f64.powi(k as i32);
        if rad > r_max {
            break;
        }
        let sep = if k == 0 { 2.0 * r0 } else { 2.0 * rad };
        let m = masses(rad);
        let mut cand: Vec<usize> = (0..m.len()).filter(|&s| m[s] >= thr).collect();
        cand.sort_by(|&x, &y| m[y].total_cmp(&m[x]).then(x.cmp(&y)));
        let before = set.points.len();
        for s in cand {
            let x = d.position(s);
            let far_new = set.points[before..].iter().all(|p| d.distance(&p.x, &x) >= sep);
            let far_old = set.points[..before].iter().all(|p| d.distance(&p.x, &x) >= sep);
            if far_new && far_old {
                set.points.push(ThetaPoint { site: s, x, radius: rad, mass: m[s] });
            }
        }
        k += 1;
    }
    set
}

/// The inequality `∫_{B_ρ}|F|² ≤ 2 r⁴ ∫_{B_ρ}|a∧a|² + ¼c⁻²` at a site, from densities.
pub fn second_bullet_holds(f_density: &FormField, aa_density: &FormField, r_cfg: f64, site: usize, rho: f64, c: f64) -> bool {
    let lhs = ball_mass_direct(f_density, site, rho);
    let rhs = 2.0 * r_cfg.powi(4) * ball_mass_direct(aa_density, site, rho) + 0.25 * c.powi(-2);
    lhs <= rhs
}

/// `|F − r²a∧a|²` as a real 0-form.
pub fn w_density(cfg: &Configuration) -> Result<FormField, GridError> {
    let (w, _) = crate::fields::w_and_v(cfg)?;
    Ok(w.norm_sq_density())
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaCandidate {
    pub site: usize,
    pub x: [f64; 4],
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Points where the tail maximum of `∫_{B_ρ}|w_n|²` stays at or above `threshold` at the
/// smallest radius `r_min`, over dyadic radii from `r_max` down; clustered at separation
/// `2 r_min`.
pub fn theta_detect(
    seq: &[Configuration],
    threshold: f64,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<ThetaCandidate>, LimitsError> {
    if seq.len() < 2 {
        return Err(LimitsError::TooFewMembers(2));
    }
    let d = *seq[0].domain();
    let mut radii = vec![];
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        radii.push(r);
        r *= 0.5;
    }
    let tail = &seq[seq.len() / 2..];
    let dens: Vec<FormField> = tail.iter().map(w_density).collect::<Result<_, _>>()?;
    let curves: Vec<Vec<f64>> = radii
        .iter()
        .map(|&rho| {
            let mut best = vec![f64::NEG_INFINITY; d.num_sites()];
            for f in &dens {
                for (b, m) in best.iter_mut().zip(ball_masses(f, rho)) {
                    *b = b.max(m);
                }
            }
            best
        })
        .collect();
    let last = curves.last().expect("nonempty radii");
    let mut flagged: Vec<usize> = (0..d.num_sites()).filter(|&s| last[s] >= threshold).collect();
    flagged.sort_by(|&x, &y| last[y].total_cmp(&last[x]).then(x.cmp(&y)));
    let rmin = *radii.last().expect("nonempty radii");
    let mut out: Vec<ThetaCandidate> = vec![];
    for s in flagged {
        let x = d.position(s);
        if out.iter().all(|c| d.distance(&c.x, &x) >= 2.0 * rmin) {
            out.push(ThetaCandidate { site: s, x, radii: radii.clone(), masses: curves.iter().map(|c| c[s]).collect() });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceReport {
    /// `max(1, ‖r a‖)` per member.
    pub r_n: Vec<f64>,
    #[serde(skip)]
    pub limsup: FormField,
    #[serde(skip)]
    pub z_mask: Vec<bool>,
    pub z_count: usize,
    pub z_tol: f64,
    pub theta: Vec<ThetaCandidate>,
    pub selected: Vec<usize>,
}

/// Pointwise maximum of `|a_n|` over the tail (the last `tail_fraction` of members), and
/// the zero set `|â| ≤ z_rel · sup|â|`.
pub fn limsup_field(seq: &[Configuration], tail_fraction: f64, z_rel: f64) -> Result<SequenceReport, LimitsError> {
    if seq.is_empty() {
        return Err(LimitsError::TooFewMembers(1));
    }
    let d = *seq[0].domain();
    let n = seq.len();
    let keep = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let selected: Vec<usize> = (n - keep..n).collect();
    let mut lim = FormField::zeros(&d, 0, ValueKind::Real);
    for &i in &selected {
        if seq[i].domain() != &d {
            return Err(GridError::DomainMismatch.into());
        }
        let dens = seq[i].a.norm_sq_density();
        for (l, v) in lim.data.iter_mut().zip(&dens.data) {
            *l = l.max(v.sqrt());
        }
    }
    let sup = lim.data.iter().copied().fold(0.0, f64::max);
    let z_tol = z_rel * sup;
    let z_mask: Vec<bool> = lim.data.iter().map(|&v| v <= z_tol).collect();
    Ok(SequenceReport {
        r_n: seq.iter().map(|c| c.physical_section().norm_l2().max(1.0)).collect(),
        z_count: z_mask.iter().filter(|&&z| z).count(),
        limsup: lim,
        z_mask,
        z_tol,
        theta: vec![],
        selected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub residual: f64,
    pub shells: usize,
}

/// Least-squares slope of `log sup|ν|` against `log δ` over dyadic shells
/// `δ ∈ [2^j δ₀, 2^{j+1} δ₀)` of distance to the zero set, within a ball.
pub fn holder_fit(nu_abs: &FormField, z_mask: &[bool], ball: &BallSpec) -> Result<HolderFit, LimitsError> {
    let d = &nu_abs.domain;
    let hmin = (0..d.dim()).map(|a| d.spacing(a)).fold(f64::INFINITY, f64::min);
    let sites = ball_sites(d, &BallSpec::new(ball.center, ball.radius));
    let zs: Vec<[f64; 4]> = sites.iter().filter(|&&s| z_mask[s]).map(|&s| d.position(s)).collect();
    if zs.is_empty() {
        return Err(LimitsError::NoZeroSet);
    }
    let inner = BallSpec::new(ball.center, 0.5 * ball.radius);
    let mut shells: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
    for s in ball_sites(d, &inner) {
        if z_mask[s] {
            continue;
        }
        let x = d.position(s);
        let delta = zs.iter().map(|z| d.distance(z, &x)).fold(f64::INFINITY, f64::min);
        if delta < hmin * 0.999 || delta > 0.5 * ball.radius {
            continue;
        }
        let j = (delta / hmin).log2().floor() as i32;
        let e = shells.entry(j).or_insert((0.0, 0.0));
        if nu_abs.data[s] > e.0 {
            *e = (nu_abs.data[s], delta);
        }
    }
    let pts: Vec<(f64, f64)> = shells.values().filter(|v| v.0 > 0.0).map(|&(v, dl)| (dl.ln(), v.ln())).collect();
    if pts.len() < 3 {
        return Err(LimitsError::ShortRange(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(HolderFit { exponent: slope, residual, shells: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{BandLimited, FieldSampler, Z2Model};

    fn one_form(d: &Domain, f: impl Fn([f64; 4]) -> [LieVec; 4]) -> FormField {
        FormField::from_fn(d, 1, ValueKind::Lie, |x, o| {
            let v = f(x);
            for m in 0..d.dim() {
                v[m].write(&mut o[3 * m..3 * m + 3]);
            }
        })
    }

    #[test]
    fn gram_examples() {
        let d = Domain::cube4(4, 1.0).unwrap();
        let e = 0.3;
        let a = one_form(&d, |_| [LieVec::basis(0), LieVec::basis(1).scale(e), LieVec::ZERO, LieVec::ZERO]);
        let t = t_endomorphism(&a);
        assert_eq!(t[0], [[1.0, 0.0, 0.0], [0.0, e * e, 0.0], [0.0, 0.0, 0.0]]);
        let ev = sym3_eigenvalues(&t[0]);
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - e * e).abs() < 1e-15 && ev[2].abs() < 1e-15);
    }

    #[test]
    fn eigen_solver_against_random_rotations() {
        use rand::Rng;
        let mut g = crate::synth::rng(4);
        for _ in 0..200 {
            let m: Sym3 = {
                let v: Vec<LieVec> = (0..4).map(|_| LieVec::new(g.gen(), g.gen(), g.gen())).collect();
                std::array::from_fn(|i| std::array::from_fn(|j| v.iter().map(|x| x.0[i] * x.0[j]).sum()))
            };
            let ev = sym3_eigenvalues(&m);
            let tr = m[0][0] + m[1][1] + m[2][2];
            assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-12);
            let s = sym3_top_vector(&m, ev[0]);
            let r = mat_vec(&m, &s) - s.scale(s.dot(&mat_vec(&m, &s)));
            assert!(r.norm() < 1e-13 * (1.0 + tr), "{}", r.norm());
        }
    }

    #[test]
    fn wedge_example_pins_pair_convention() {
        let d = Domain::cube4(4, 1.0).unwrap();
        let a = one_form(&d, |_| [LieVec::basis(0), LieVec::basis(1).scale(0.1), LieVec::ZERO, LieVec::ZERO]);
        let dec = decompose(&a, 0.1);
        assert!((dec.lambda[0] - 1.0).abs() < 1e-15);
        let rem2: f64 = dec.rem[0].iter().map(LieVec::norm_sq).sum();
        assert!((rem2.sqrt() - 0.1).abs() < 1e-15);
        let direct = crate::grid::self_wedge(&a).unwrap().norm_sq_density().data[0];
        assert!((direct - 0.04).abs() < 1e-15);
        assert!(decomposition_defects(&a, &dec)[3] < 1e-15);
    }

    #[test]
    fn random_fields_satisfy_splitting_invariants() {
        let d = Domain::cube4(4, 1.0).unwrap();
        for seed in 0..5 {
            let a = BandLimited::new(&d, 1, ValueKind::Lie, 1, 4, 1.0, seed).field(&d, 1, ValueKind::Lie);
            let dec = decompose(&a, 0.1);
            let w = decomposition_defects(&a, &dec);
            assert!(w[0] == 0.0 && w[1] < 1e-12 && w[2] < 1e-12 && w[3] < 1e-11, "{w:?}");
            let t = t_endomorphism(&a);
            for s in 0..d.num_sites() {
                let tr = t[s][0][0] + t[s][1][1] + t[s][2][2];
                let a2: f64 = a.site(s).iter().map(|x| x * x).sum();
                assert!((tr - a2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_keeps_the_top_direction() {
        let d = Domain::cube4(4, 1.0).unwrap();
        let a = BandLimited::new(&d, 1, ValueKind::Lie, 1, 4, 1.0, 9).field(&d, 1, ValueKind::Lie);
        let (x, y) = (decompose(&a, 0.0), decompose(&a.scale(2.5), 0.0));
        for s in 0..d.num_sites() {
            assert!((x.sigma[s].dot(&y.sigma[s]).abs() - 1.0).abs() < 1e-12);
        }
    }

    fn z2_grid(n: usize) -> (Domain, FormField, [f64; 4]) {
        let d = Domain::torus4([n, n, 4, 4], [2.0, 2.0, 1.0, 1.0]).unwrap();
        let c = [1.0 + 0.5 * d.spacing(0), 1.0 + 0.5 * d.spacing(1), 0.0, 0.0];
        let m = Z2Model { center: c };
        (d, one_form(&d, |x| m.a(x)), c)
    }

    #[test]
    fn z2_model_decomposes_and_has_odd_holonomy() {
        let (d, a, c) = z2_grid(32);
        let dec = decompose(&a, 1e-8);
        let w = decomposition_defects(&a, &dec);
        assert!(w[3] < 1e-12);
        let rem: f64 = dec.rem.iter().flat_map(|r| r.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        assert!(rem < 1e-10);
        for n in [8, 12, 16] {
            let cover = circle_cover(c, 0.5, 0.25, n);
            let co = sign_cocycle(&dec, &cover).unwrap();
            assert_eq!(co.holonomy(&(0..n).collect::<Vec<_>>()), Some(-1.0));
            assert_eq!(co.triple_defect(), 0.0);
        }
        let off = [c[0] + 0.55, c[1], 0.0, 0.0];
        let cover = circle_cover(off, 0.15, 0.1, 8);
        let co = sign_cocycle(&dec, &cover).unwrap();
        assert_eq!(co.holonomy(&(0..8).collect::<Vec<_>>()), Some(1.0));
        let _ = d;
    }

    #[test]
    fn ball_masses_match_direct_sum() {
        let d = Domain::cube4(6, 1.0).unwrap();
        let f = FormField::from_fn(&d, 0, ValueKind::Real, |x, o| o[0] = (x[0] * 3.0).sin().powi(2) + x[2]);
        let m = ball_masses(&f, 0.35);
        for s in [0, 17, 301, 1000] {
            assert!((m[s] - ball_mass_direct(&f, s, 0.35)).abs() < 1e-12);
        }
    }

    #[test]
    fn holder_on_linear_zero_set() {
        let d = Domain::torus4([32, 4, 4, 4], [2.0, 1.0, 1.0, 1.0]).unwrap();
        let f = FormField::from_fn(&d, 0, ValueKind::Real, |x, o| o[0] = (x[0] - 1.0).abs());
        let mask: Vec<bool> = f.data.iter().map(|&v| v <= 1e-9).collect();
        let fit = holder_fit(&f, &mask, &BallSpec::new([1.0, 0.0, 0.0, 0.0], 0.9)).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-9);
    }

    #[test]
    fn limsup_of_alternating_family() {
        let d = Domain::cube4(4, 1.0).unwrap();
        let a = BandLimited::new(&d, 1, ValueKind::Lie, 1, 3, 1.0, 1).field(&d, 1, ValueKind::Lie);
        let z = FormField::zeros(&d, 1, ValueKind::Lie);
        let full = Configuration::new(z.clone(), a.clone(), 1.0, 0.5).unwrap();
        let half = Configuration::new(z, a.scale(0.5), 1.0, 0.5).unwrap();
        let seq = vec![full.clone(), half.clone(), full, half];
        let rep = limsup_field(&seq, 0.5, 1e-6).unwrap();
        for s in 0..d.num_sites() {
            let v: f64 = a.site(s).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((rep.limsup.data[s] - v).abs() < 1e-15);
        }
        assert!(rep.r_n.iter().all(|&r| r >= 1.0));
    }
}
