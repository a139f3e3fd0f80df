//! Spectral Green's function of `d†d + 1` on periodic domains.
//!
//! The centered difference has symbol `i sin(k h)/h`, so the discrete Laplacian `d†d`
//! on 0-forms has symbol `λ(k) = Σ_a sin²(2π m_a / n_a) / h_a²`.

use super::fft::{fft_nd, C64};
use super::{Domain, FormField, GridError, ValueKind};
use std::f64::consts::PI;

/// Symbol of `d†d` at the mode with integer indices `m`.
pub fn laplacian_symbol(domain: &Domain, m: [usize; 4]) -> f64 {
    (0..domain.dim())
        .map(|a| {
            let s = (2.0 * PI * m[a] as f64 / domain.sites[a] as f64).sin() / domain.spacing(a);
            s * s
        })
        .sum()
}

/// `G_p` with `(d†d + 1) G_p = δ_p / h^dim`, δ_p the Kronecker spike at site `p`.
pub fn green_dtd1(domain: &Domain, p: usize) -> Result<FormField, GridError> {
    if !domain.is_torus() {
        return Err(GridError::NotTorus);
    }
    let ns = domain.num_sites();
    let pc = domain.coords(p);
    let mut buf = vec![C64::new(0.0, 0.0); ns];
    let vol = domain.cell_volume();
    for s in 0..ns {
        let m = domain.coords(s);
        let mut phase = 0.0;
        for a in 0..domain.dim() {
            phase -= 2.0 * PI * (m[a] * pc[a]) as f64 / domain.sites[a] as f64;
        }
        let g = 1.0 / ((laplacian_symbol(domain, m) + 1.0) * vol);
        buf[s] = C64::new(phase.cos() * g, phase.sin() * g);
    }
    fft_nd(domain, &mut buf, true);
    let mut out = FormField::zeros(domain, 0, ValueKind::Real);
    for s in 0..ns {
        out.data[s] = buf[s].re / ns as f64;
    }
    Ok(out)
}

/// Apply `d†d + 1` to a real 0-form by explicit stencils.
pub fn apply_dtd1(f: &FormField) -> Result<FormField, GridError> {
    let lap = super::codiff(&super::ext_d(f)?)?;
    f.add(&lap)
}
