//! Radix-2 FFT for the power-of-two time grids used throughout.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::C64;

/// In-place forward transform `X_n = Σ_k x_k e^{-2πink/N}`.
///
/// Panics if the length is not a power of two.
pub fn fft_in_place(buf: &mut [C64]) {
    transform(buf, -1.0);
}

/// In-place inverse transform without the `1/N` factor.
pub fn ifft_in_place(buf: &mut [C64]) {
    transform(buf, 1.0);
}

fn transform(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n <= 1 {
        return;
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
        let ang = sign * 2.0 * PI / len as f64;
        let (s, c) = libm::sincos(ang);
        let w_len = C64::new(c, s);
        for start in (0..n).step_by(len) {
            let mut w = C64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[start + k];
                let v = buf[start + k + len / 2] * w;
                buf[start + k] = u + v;
                buf[start + k + len / 2] = u - v;
                // refresh the twiddle periodically to bound rounding drift
                w = if (k + 1) % 64 == 0 {
                    let (s, c) = libm::sincos(ang * (k + 1) as f64);
                    C64::new(c, s)
                } else {
                    w * w_len
                };
            }
        }
        len <<= 1;
    }
}

/// Fourier-series coefficients `c_n = (1/N) Σ_k x_k e^{-2πink/N}` of real
/// samples on a uniform periodic grid (the duplicated endpoint excluded).
/// Returns the full spectrum in FFT order.
pub fn fourier_coefficients(samples: &[f64]) -> Vec<C64> {
    let n = samples.len();
    let mut buf: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    fft_in_place(&mut buf);
    let inv = 1.0 / n as f64;
    for z in buf.iter_mut() {
        *z *= inv;
    }
    buf
}

/// Looks up harmonic `n` (possibly negative) in an FFT-ordered spectrum.
#[inline]
pub fn harmonic(spectrum: &[C64], n: i64) -> C64 {
    let len = spectrum.len() as i64;
    spectrum[n.rem_euclid(len) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                x.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (k, &v)| {
                    let a = -2.0 * PI * (m * k) as f64 / n as f64;
                    acc + v * C64::new(libm::cos(a), libm::sin(a))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<C64> =
            (0..64).map(|k| C64::new(libm::sin(0.3 * k as f64) + 0.1 * k as f64, libm::cos(1.7 * k as f64))).collect();
        let mut y = x.clone();
        fft_in_place(&mut y);
        let z = naive_dft(&x);
        for (a, b) in y.iter().zip(z.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let x: Vec<C64> = (0..256).map(|k| C64::new(k as f64 * 0.01, -libm::sqrt(k as f64))).collect();
        let mut y = x.clone();
        fft_in_place(&mut y);
        ifft_in_place(&mut y);
        for (a, b) in y.iter().zip(x.iter()) {
            assert!((a / 256.0 - b).norm() < 1e-10);
        }
    }

    #[test]
    fn single_cosine_has_two_lines() {
        let n = 128;
        let x: Vec<f64> = (0..n).map(|k| libm::cos(2.0 * PI * 3.0 * k as f64 / n as f64)).collect();
        let c = fourier_coefficients(&x);
        assert!((harmonic(&c, 3) - C64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((harmonic(&c, -3) - C64::new(0.5, 0.0)).norm() < 1e-12);
        assert!(harmonic(&c, 0).norm() < 1e-12);
    }
}
