//! In-place iterative radix-2 FFT.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Forward DFT `X[k] = Σ x[n] e^{-2πikn/N}` for power-of-two `N`.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(alloc::format!("FFT length {n} is not a power of two")));
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = Complex64::from_polar(1.0, ang * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}
