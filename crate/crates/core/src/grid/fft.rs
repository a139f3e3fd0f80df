//! Multi-dimensional FFT over the active axes of a domain.

use super::Domain;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub type C64 = Complex<f64>;

/// In-place unnormalized transform along every active axis.
pub fn fft_nd(domain: &Domain, data: &mut [C64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let strides = domain.strides();
    let ns = domain.num_sites();
    for axis in 0..domain.dim() {
        let n = domain.sites[axis];
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let stride = strides[axis];
        let mut line = vec![C64::new(0.0, 0.0); n];
        for start in 0..ns {
            if domain.coords(start)[axis] != 0 {
                continue;
            }
            for i in 0..n {
                line[i] = data[start + i * stride];
            }
            fft.process(&mut line);
            for i in 0..n {
                data[start + i * stride] = line[i];
            }
        }
    }
}

/// Signed mode number of index `i` on an axis with `n` sites.
pub fn mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
