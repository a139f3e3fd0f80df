//! Flat periodic domains, discrete differential forms and the operators acting on them.
//!
//! Storage is collocated: every component of a k-form lives at the lattice sites, and
//! the exterior derivative uses second-order centered differences. The codifferential is
//! assembled as the exact transpose of `d` under the grid pairing `Σ h^dim ⟨·,·⟩`, so
//! integration by parts holds to rounding.

pub mod dump;
pub mod fft;
pub mod green;
pub mod quadrature;

use crate::liealg::{bracket, cbracket, CLieVec, LieVec};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("site count {0} on axis {1} must be at least 4 and even")]
    BadSites(usize, usize),
    #[error("extent on axis {0} must be positive")]
    BadExtent(usize),
    #[error("degree {0} is out of range for this operation in dimension {1}")]
    Degree(usize, usize),
    #[error("operand fields live on different domains")]
    DomainMismatch,
    #[error("value kind {0:?} is not supported here")]
    Kind(ValueKind),
    #[error("ball of radius {0} does not fit in the domain")]
    BallTooLarge(f64),
    #[error("operation requires a periodic domain")]
    NotTorus,
    #[error("field is not periodic on axis {0}")]
    NotPeriodic(usize),
    #[error("malformed field dump: {0}")]
    Dump(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DomainKind {
    /// Four periodic axes.
    Torus4,
    /// Flow parameter on axis 0 with one-sided stencils at its ends; axes 1..4 periodic.
    SlabT3,
    /// Three periodic axes (a time slice of the slab).
    Torus3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ValueKind {
    Real,
    Lie,
    CLie,
}

impl ValueKind {
    pub fn width(self) -> usize {
        match self {
            ValueKind::Real => 1,
            ValueKind::Lie => 3,
            ValueKind::CLie => 6,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            ValueKind::Real => 0,
            ValueKind::Lie => 1,
            ValueKind::CLie => 2,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(ValueKind::Real),
            1 => Some(ValueKind::Lie),
            2 => Some(ValueKind::CLie),
            _ => None,
        }
    }
}

/// Rectangular lattice on a flat domain. Unused trailing axes have one site.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub extents: [f64; 4],
    pub sites: [usize; 4],
}

impl Domain {
    fn checked(kind: DomainKind, sites: [usize; 4], extents: [f64; 4]) -> Result<Self, GridError> {
        let d = Domain { kind, extents, sites };
        for a in 0..d.dim() {
            if sites[a] < 4 || sites[a] % 2 != 0 {
                return Err(GridError::BadSites(sites[a], a));
            }
            if !(extents[a] > 0.0) || !extents[a].is_finite() {
                return Err(GridError::BadExtent(a));
            }
        }
        Ok(d)
    }

    pub fn torus4(sites: [usize; 4], extents: [f64; 4]) -> Result<Self, GridError> {
        Self::checked(DomainKind::Torus4, sites, extents)
    }

    /// `n⁴` sites on a cube of side `side`.
    pub fn cube4(n: usize, side: f64) -> Result<Self, GridError> {
        Self::torus4([n; 4], [side; 4])
    }

    pub fn torus3(sites: [usize; 3], extents: [f64; 3]) -> Result<Self, GridError> {
        Self::checked(
            DomainKind::Torus3,
            [sites[0], sites[1], sites[2], 1],
            [extents[0], extents[1], extents[2], 1.0],
        )
    }

    pub fn cube3(n: usize, side: f64) -> Result<Self, GridError> {
        Self::torus3([n; 3], [side; 3])
    }

    /// Interval of length `s_extent` (sampled at `s_sites` points) times a 3-torus.
    pub fn slab(s_sites: usize, s_extent: f64, slice: &Domain) -> Result<Self, GridError> {
        if slice.kind != DomainKind::Torus3 {
            return Err(GridError::NotTorus);
        }
        Self::checked(
            DomainKind::SlabT3,
            [s_sites, slice.sites[0], slice.sites[1], slice.sites[2]],
            [s_extent, slice.extents[0], slice.extents[1], slice.extents[2]],
        )
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Torus3 => 3,
            _ => 4,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.sites.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.sites[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.extents[a]).product()
    }

    pub fn periodic(&self, axis: usize) -> bool {
        !(self.kind == DomainKind::SlabT3 && axis == 0)
    }

    pub fn is_torus(&self) -> bool {
        self.kind != DomainKind::SlabT3
    }

    pub fn strides(&self) -> [usize; 4] {
        let n = self.sites;
        [n[1] * n[2] * n[3], n[2] * n[3], n[3], 1]
    }

    pub fn coords(&self, site: usize) -> [usize; 4] {
        let n = self.sites;
        let c3 = site % n[3];
        let r = site / n[3];
        let c2 = r % n[2];
        let r = r / n[2];
        let c1 = r % n[1];
        [r / n[1], c1, c2, c3]
    }

    pub fn index(&self, c: [usize; 4]) -> usize {
        let n = self.sites;
        ((c[0] * n[1] + c[1]) * n[2] + c[2]) * n[3] + c[3]
    }

    /// Physical coordinates `x_a = i_a h_a` of a site.
    pub fn position(&self, site: usize) -> [f64; 4] {
        let c = self.coords(site);
        let mut x = [0.0; 4];
        for a in 0..self.dim() {
            x[a] = c[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Site with coordinates shifted by `delta` (periodic wrap on periodic axes).
    pub fn shifted(&self, c: [usize; 4], axis: usize, delta: isize) -> Option<[usize; 4]> {
        let n = self.sites[axis] as isize;
        let mut v = c[axis] as isize + delta;
        if self.periodic(axis) {
            v = v.rem_euclid(n);
        } else if v < 0 || v >= n {
            return None;
        }
        let mut out = c;
        out[axis] = v as usize;
        Some(out)
    }

    /// Minimal-image displacement `y - x` on periodic axes.
    pub fn displacement(&self, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
        let mut d = [0.0; 4];
        for a in 0..self.dim() {
            let mut v = y[a] - x[a];
            if self.periodic(a) {
                let l = self.extents[a];
                v -= l * (v / l).round();
            }
            d[a] = v;
        }
        d
    }

    pub fn distance(&self, x: &[f64; 4], y: &[f64; 4]) -> f64 {
        self.displacement(x, y).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn min_extent(&self) -> f64 {
        (0..self.dim()).map(|a| self.extents[a]).fold(f64::INFINITY, f64::min)
    }

    /// Same kind and extents with a different site count on every active axis.
    pub fn with_sites(&self, n: usize) -> Result<Self, GridError> {
        let mut s = self.sites;
        for a in 0..self.dim() {
            s[a] = n;
        }
        Self::checked(self.kind, s, self.extents)
    }
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Strictly increasing multi-indices of length k in lexicographic order.
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    rec(0, dim, k, &mut cur, &mut out);
    out
}

/// Position of a sorted multi-index in the lexicographic list.
pub fn index_of(dim: usize, idx: &[usize]) -> usize {
    multi_indices(dim, idx.len()).iter().position(|m| m == idx).expect("sorted multi-index")
}

/// Parity (+1/-1) of the permutation that sorts `seq`.
pub fn perm_sign(seq: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Component index of the pair (μ, ν), μ < ν, among 2-form components.
pub fn pair_index(dim: usize, mu: usize, nu: usize) -> usize {
    index_of(dim, &[mu.min(nu), mu.max(nu)])
}

/// One term of a first-order operator: `out[o] += sign · D_axis(in[i])`.
#[derive(Clone, Copy, Debug)]
struct DTerm {
    out: usize,
    axis: usize,
    inp: usize,
    sign: f64,
}

fn d_table(dim: usize, k: usize) -> Vec<DTerm> {
    let outs = multi_indices(dim, k + 1);
    let mut terms = Vec::new();
    for (o, j_idx) in outs.iter().enumerate() {
        for (pos, &axis) in j_idx.iter().enumerate() {
            let rest: Vec<usize> = j_idx.iter().copied().filter(|&x| x != axis).collect();
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(DTerm { out: o, axis, inp: index_of(dim, &rest), sign });
        }
    }
    terms
}

/// Transpose of `d_table(dim, k-1)`: maps k-forms to (k-1)-forms.
fn dt_table(dim: usize, k: usize) -> Vec<DTerm> {
    d_table(dim, k - 1)
        .into_iter()
        .map(|t| DTerm { out: t.inp, axis: t.axis, inp: t.out, sign: t.sign })
        .collect()
}

/// One term of a wedge product: `out[k] += sign · (α[i] ⋆ β[j])`.
#[derive(Clone, Copy, Debug)]
pub struct WTerm {
    pub out: usize,
    pub left: usize,
    pub right: usize,
    pub sign: f64,
}

pub fn wedge_table(dim: usize, p: usize, q: usize) -> Vec<WTerm> {
    let mut terms = Vec::new();
    if p + q > dim {
        return terms;
    }
    for (o, kk) in multi_indices(dim, p + q).iter().enumerate() {
        for (li, i) in multi_indices(dim, p).iter().enumerate() {
            if !i.iter().all(|x| kk.contains(x)) {
                continue;
            }
            let j: Vec<usize> = kk.iter().copied().filter(|x| !i.contains(x)).collect();
            let mut seq = i.clone();
            seq.extend_from_slice(&j);
            terms.push(WTerm { out: o, left: li, right: index_of(dim, &j), sign: perm_sign(&seq) });
        }
    }
    terms
}

/// `(target component, sign)` for the Hodge star of each k-form component.
pub fn star_table(dim: usize, k: usize) -> Vec<(usize, f64)> {
    multi_indices(dim, k)
        .iter()
        .map(|i| {
            let j: Vec<usize> = (0..dim).filter(|x| !i.contains(x)).collect();
            let mut seq = i.clone();
            seq.extend_from_slice(&j);
            (index_of(dim, &j), perm_sign(&seq))
        })
        .collect()
}

/// Per-axis difference stencils and their transposes.
pub struct Stencil {
    taps: Vec<Vec<Vec<(usize, f64)>>>,
    taps_t: Vec<Vec<Vec<(usize, f64)>>>,
}

impl Stencil {
    pub fn new(domain: &Domain) -> Self {
        let mut taps = Vec::new();
        let mut taps_t = Vec::new();
        for a in 0..domain.dim() {
            let n = domain.sites[a];
            let h = domain.spacing(a);
            let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
            for i in 0..n {
                let row = if domain.periodic(a) {
                    vec![((i + 1) % n, 0.5 / h), ((i + n - 1) % n, -0.5 / h)]
                } else if i == 0 {
                    vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
                } else if i == n - 1 {
                    vec![(n - 1, 1.5 / h), (n - 2, -2.0 / h), (n - 3, 0.5 / h)]
                } else {
                    vec![(i + 1, 0.5 / h), (i - 1, -0.5 / h)]
                };
                rows.push(row);
            }
            let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for (i, row) in rows.iter().enumerate() {
                for &(j, w) in row {
                    cols[j].push((i, w));
                }
            }
            taps.push(rows);
            taps_t.push(cols);
        }
        Stencil { taps, taps_t }
    }

    pub fn taps(&self, axis: usize, i: usize, transpose: bool) -> &[(usize, f64)] {
        if transpose {
            &self.taps_t[axis][i]
        } else {
            &self.taps[axis][i]
        }
    }
}

fn apply_terms(
    domain: &Domain,
    input: &[f64],
    in_ncomp: usize,
    width: usize,
    terms: &[DTerm],
    out_ncomp: usize,
    transpose: bool,
) -> Vec<f64> {
    let st = Stencil::new(domain);
    let strides = domain.strides();
    let ns = domain.num_sites();
    let (is, os) = (in_ncomp * width, out_ncomp * width);
    let mut out = vec![0.0; ns * os];
    for site in 0..ns {
        let c = domain.coords(site);
        let o = &mut out[site * os..(site + 1) * os];
        for t in terms {
            let ca = c[t.axis];
            for &(j, w) in st.taps(t.axis, ca, transpose) {
                let nb = (site as isize + (j as isize - ca as isize) * strides[t.axis] as isize) as usize;
                let src = &input[nb * is + t.inp * width..nb * is + (t.inp + 1) * width];
                let dst = &mut o[t.out * width..(t.out + 1) * width];
                let f = t.sign * w;
                for l in 0..width {
                    dst[l] += f * src[l];
                }
            }
        }
    }
    out
}

/// Differential form with scalar, su(2) or complexified coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    pub domain: Domain,
    pub degree: usize,
    pub kind: ValueKind,
    pub data: Vec<f64>,
}

impl FormField {
    pub fn zeros(domain: &Domain, degree: usize, kind: ValueKind) -> Self {
        let n = binomial(domain.dim(), degree) * kind.width() * domain.num_sites();
        FormField { domain: *domain, degree, kind, data: vec![0.0; n] }
    }

    /// Build from a pointwise closure receiving site position and the site's slot.
    pub fn from_fn(
        domain: &Domain,
        degree: usize,
        kind: ValueKind,
        mut f: impl FnMut([f64; 4], &mut [f64]),
    ) -> Self {
        let mut out = Self::zeros(domain, degree, kind);
        let st = out.stride();
        for s in 0..domain.num_sites() {
            let x = domain.position(s);
            f(x, &mut out.data[s * st..(s + 1) * st]);
        }
        out
    }

    /// Number of multi-index components per site.
    pub fn ncomp(&self) -> usize {
        binomial(self.domain.dim(), self.degree)
    }

    pub fn width(&self) -> usize {
        self.kind.width()
    }

    /// Reals per site.
    pub fn stride(&self) -> usize {
        self.ncomp() * self.width()
    }

    pub fn site(&self, s: usize) -> &[f64] {
        let st = self.stride();
        &self.data[s * st..(s + 1) * st]
    }

    pub fn site_mut(&mut self, s: usize) -> &mut [f64] {
        let st = self.stride();
        &mut self.data[s * st..(s + 1) * st]
    }

    pub fn lie(&self, s: usize, comp: usize) -> LieVec {
        debug_assert_eq!(self.kind, ValueKind::Lie);
        let o = s * self.stride() + comp * 3;
        LieVec([self.data[o], self.data[o + 1], self.data[o + 2]])
    }

    pub fn set_lie(&mut self, s: usize, comp: usize, v: LieVec) {
        let o = s * self.stride() + comp * 3;
        self.data[o..o + 3].copy_from_slice(&v.0);
    }

    pub fn clie(&self, s: usize, comp: usize) -> CLieVec {
        let o = s * self.stride() + comp * 6;
        CLieVec::from_slice(&self.data[o..o + 6])
    }

    pub fn real(&self, s: usize, comp: usize) -> f64 {
        self.data[s * self.stride() + comp]
    }

    fn same_shape(&self, o: &FormField) -> Result<(), GridError> {
        if self.domain != o.domain || self.degree != o.degree || self.kind != o.kind {
            return Err(GridError::DomainMismatch);
        }
        Ok(())
    }

    pub fn add(&self, o: &FormField) -> Result<FormField, GridError> {
        self.same_shape(o)?;
        let mut r = self.clone();
        r.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a += b);
        Ok(r)
    }

    pub fn sub(&self, o: &FormField) -> Result<FormField, GridError> {
        self.same_shape(o)?;
        let mut r = self.clone();
        r.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a -= b);
        Ok(r)
    }

    pub fn scale(&self, s: f64) -> FormField {
        let mut r = self.clone();
        r.data.iter_mut().for_each(|a| *a *= s);
        r
    }

    /// `self += s·o`.
    pub fn axpy(&mut self, s: f64, o: &FormField) -> Result<(), GridError> {
        self.same_shape(o)?;
        self.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    /// Grid pairing `Σ h^dim Σ_components`, with the μ<ν convention on multi-indices.
    pub fn inner(&self, o: &FormField) -> Result<f64, GridError> {
        self.same_shape(o)?;
        let s: f64 = self.data.iter().zip(&o.data).map(|(a, b)| a * b).sum();
        Ok(s * self.domain.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|a| a * a).sum::<f64>() * self.domain.cell_volume()).sqrt()
    }

    /// Pointwise `|ω|²` as a real 0-form.
    pub fn norm_sq_density(&self) -> FormField {
        let mut out = FormField::zeros(&self.domain, 0, ValueKind::Real);
        for s in 0..self.domain.num_sites() {
            out.data[s] = self.site(s).iter().map(|a| a * a).sum();
        }
        out
    }

    /// `max_sites |ω|`.
    pub fn sup_norm(&self) -> f64 {
        (0..self.domain.num_sites())
            .map(|s| self.site(s).iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `Σ h^dim` of a real 0-form.
    pub fn integrate(&self) -> f64 {
        assert_eq!(self.stride(), 1, "integrate expects a scalar density");
        self.data.iter().sum::<f64>() * self.domain.cell_volume()
    }

    /// Real or imaginary part of a complexified field.
    pub fn part(&self, imaginary: bool) -> FormField {
        assert_eq!(self.kind, ValueKind::CLie);
        let mut out = FormField::zeros(&self.domain, self.degree, ValueKind::Lie);
        let off = if imaginary { 3 } else { 0 };
        let n = self.ncomp() * self.domain.num_sites();
        for i in 0..n {
            out.data[i * 3..i * 3 + 3].copy_from_slice(&self.data[i * 6 + off..i * 6 + off + 3]);
        }
        out
    }

    /// `re + i·im` from two Lie-valued fields.
    pub fn complexify(re: &FormField, im: &FormField) -> Result<FormField, GridError> {
        re.same_shape(im)?;
        if re.kind != ValueKind::Lie {
            return Err(GridError::Kind(re.kind));
        }
        let mut out = FormField::zeros(&re.domain, re.degree, ValueKind::CLie);
        let n = re.ncomp() * re.domain.num_sites();
        for i in 0..n {
            out.data[i * 6..i * 6 + 3].copy_from_slice(&re.data[i * 3..i * 3 + 3]);
            out.data[i * 6 + 3..i * 6 + 6].copy_from_slice(&im.data[i * 3..i * 3 + 3]);
        }
        Ok(out)
    }
}

/// Exterior derivative with second-order centered differences.
pub fn ext_d(w: &FormField) -> Result<FormField, GridError> {
    let dim = w.domain.dim();
    if w.degree >= dim {
        return Err(GridError::Degree(w.degree, dim));
    }
    let terms = d_table(dim, w.degree);
    let onc = binomial(dim, w.degree + 1);
    let data = apply_terms(&w.domain, &w.data, w.ncomp(), w.width(), &terms, onc, false);
    Ok(FormField { domain: w.domain, degree: w.degree + 1, kind: w.kind, data })
}

/// Exact adjoint of [`ext_d`] under the grid pairing.
pub fn codiff(w: &FormField) -> Result<FormField, GridError> {
    let dim = w.domain.dim();
    if w.degree == 0 || w.degree > dim {
        return Err(GridError::Degree(w.degree, dim));
    }
    let terms = dt_table(dim, w.degree);
    let onc = binomial(dim, w.degree - 1);
    let data = apply_terms(&w.domain, &w.data, w.ncomp(), w.width(), &terms, onc, true);
    Ok(FormField { domain: w.domain, degree: w.degree - 1, kind: w.kind, data })
}

/// Directional difference `D_axis` applied to every component.
pub fn partial(w: &FormField, axis: usize) -> FormField {
    let nc = w.ncomp();
    let terms: Vec<DTerm> = (0..nc).map(|c| DTerm { out: c, axis, inp: c, sign: 1.0 }).collect();
    let data = apply_terms(&w.domain, &w.data, nc, w.width(), &terms, nc, false);
    FormField { data, ..w.clone() }
}

/// Transpose of [`partial`].
pub fn partial_t(w: &FormField, axis: usize) -> FormField {
    let nc = w.ncomp();
    let terms: Vec<DTerm> = (0..nc).map(|c| DTerm { out: c, axis, inp: c, sign: 1.0 }).collect();
    let data = apply_terms(&w.domain, &w.data, nc, w.width(), &terms, nc, true);
    FormField { data, ..w.clone() }
}

/// Euclidean Hodge star for the orientation dx1∧…∧dx_dim.
pub fn hodge_star(w: &FormField) -> FormField {
    let dim = w.domain.dim();
    let table = star_table(dim, w.degree);
    let mut out = FormField::zeros(&w.domain, dim - w.degree, w.kind);
    let (wd, is, os) = (w.width(), w.stride(), out.stride());
    for s in 0..w.domain.num_sites() {
        for (c, &(t, sign)) in table.iter().enumerate() {
            for l in 0..wd {
                out.data[s * os + t * wd + l] = sign * w.data[s * is + c * wd + l];
            }
        }
    }
    out
}

/// `ω± = ½(ω ± ∗ω)` on 2-forms in dimension four.
pub fn sd_project(w: &FormField, plus: bool) -> Result<FormField, GridError> {
    if w.domain.dim() != 4 || w.degree != 2 {
        return Err(GridError::Degree(w.degree, w.domain.dim()));
    }
    let st = hodge_star(w);
    let sgn = if plus { 1.0 } else { -1.0 };
    let mut out = w.clone();
    out.data.iter_mut().zip(&st.data).for_each(|(a, b)| *a = 0.5 * (*a + sgn * b));
    Ok(out)
}

fn product(
    lk: ValueKind,
    rk: ValueKind,
) -> Result<(ValueKind, fn(&[f64], &[f64], f64, &mut [f64])), GridError> {
    use ValueKind::*;
    let f: (ValueKind, fn(&[f64], &[f64], f64, &mut [f64])) = match (lk, rk) {
        (Real, Real) => (Real, |a, b, s, o| o[0] += s * a[0] * b[0]),
        (Real, Lie) => (Lie, |a, b, s, o| {
            for l in 0..3 {
                o[l] += s * a[0] * b[l]
            }
        }),
        (Lie, Real) => (Lie, |a, b, s, o| {
            for l in 0..3 {
                o[l] += s * a[l] * b[0]
            }
        }),
        (Lie, Lie) => (Lie, |a, b, s, o| {
            let c = bracket(&LieVec::from_slice(a), &LieVec::from_slice(b));
            for l in 0..3 {
                o[l] += s * c.0[l]
            }
        }),
        (CLie, CLie) => (CLie, |a, b, s, o| {
            let c = cbracket(&CLieVec::from_slice(a), &CLieVec::from_slice(b));
            for l in 0..3 {
                o[l] += s * c.re.0[l];
                o[l + 3] += s * c.im.0[l];
            }
        }),
        (k, _) => return Err(GridError::Kind(k)),
    };
    Ok(f)
}

/// Wedge product; su(2) coefficients multiply through the bracket.
///
/// For two 1-forms this gives `(α∧β)_{μν} = [α_μ, β_ν] - [α_ν, β_μ]`; see [`self_wedge`]
/// for the convention `(a∧a)_{μν} = [a_μ, a_ν]`.
pub fn lie_wedge(al: &FormField, be: &FormField) -> Result<FormField, GridError> {
    if al.domain != be.domain {
        return Err(GridError::DomainMismatch);
    }
    let dim = al.domain.dim();
    if al.degree + be.degree > dim {
        return Err(GridError::Degree(al.degree + be.degree, dim));
    }
    let (kind, f) = product(al.kind, be.kind)?;
    let table = wedge_table(dim, al.degree, be.degree);
    let mut out = FormField::zeros(&al.domain, al.degree + be.degree, kind);
    let (lw, rw, ow) = (al.width(), be.width(), kind.width());
    let (ls, rs, os) = (al.stride(), be.stride(), out.stride());
    for s in 0..al.domain.num_sites() {
        let (a, b) = (&al.data[s * ls..(s + 1) * ls], &be.data[s * rs..(s + 1) * rs]);
        let o = &mut out.data[s * os..(s + 1) * os];
        for t in &table {
            f(
                &a[t.left * lw..(t.left + 1) * lw],
                &b[t.right * rw..(t.right + 1) * rw],
                t.sign,
                &mut o[t.out * ow..(t.out + 1) * ow],
            );
        }
    }
    Ok(out)
}

/// `a∧a` for an su(2)-valued 1-form, with components `[a_μ, a_ν]`.
pub fn self_wedge(a: &FormField) -> Result<FormField, GridError> {
    Ok(lie_wedge(a, a)?.scale(0.5))
}

/// Wedge product with the invariant pairing on coefficients, as a real form.
pub fn inner_wedge(al: &FormField, be: &FormField) -> Result<FormField, GridError> {
    if al.domain != be.domain {
        return Err(GridError::DomainMismatch);
    }
    if al.kind != ValueKind::Lie || be.kind != ValueKind::Lie {
        return Err(GridError::Kind(al.kind));
    }
    let dim = al.domain.dim();
    if al.degree + be.degree > dim {
        return Err(GridError::Degree(al.degree + be.degree, dim));
    }
    let table = wedge_table(dim, al.degree, be.degree);
    let mut out = FormField::zeros(&al.domain, al.degree + be.degree, ValueKind::Real);
    let os = out.stride();
    for s in 0..al.domain.num_sites() {
        for t in &table {
            let v = al.lie(s, t.left).dot(&be.lie(s, t.right));
            out.data[s * os + t.out] += t.sign * v;
        }
    }
    Ok(out)
}
