//! Complex FFT for arbitrary lengths.
//!
//! Power-of-two sizes use an iterative radix-2 transform; every other size
//! goes through Bluestein's chirp-z algorithm on a padded power-of-two
//! transform. Accuracy is close to machine precision for the signal lengths
//! used here (a few thousand samples).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unnormalized in-place transform: the inverse does not divide by `n`.
pub fn transform(data: &mut [Complex64], dir: Direction) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(data, dir);
    } else {
        bluestein(data, dir);
    }
}

/// Forward FFT of a real signal.
pub fn forward_real(signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    transform(&mut buf, Direction::Forward);
    buf
}

/// Inverse FFT, normalized by `1/n`, keeping only the real part.
pub fn inverse_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    transform(&mut spectrum, Direction::Inverse);
    let scale = 1.0 / n as f64;
    spectrum.into_iter().map(|c| c.re * scale).collect()
}

/// Frequency in Hz of bin `k` for an `n`-point transform, folded into
/// `[0, fs/2]`.
pub fn bin_frequency(k: usize, n: usize, sample_rate_hz: f64) -> f64 {
    let folded = if k <= n / 2 { k } else { n - k };
    folded as f64 * sample_rate_hz / n as f64
}

fn twiddle(k: usize, n: usize, dir: Direction) -> Complex64 {
    let sign = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let angle = sign * 2.0 * PI * k as f64 / n as f64;
    Complex64::new(math::cos(angle), math::sin(angle))
}

fn radix2(data: &mut [Complex64], dir: Direction) {
    let n = data.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    // Twiddles for the largest stage; smaller stages stride through them.
    let table: Vec<Complex64> = (0..n / 2).map(|k| twiddle(k, n, dir)).collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = table[k * stride];
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn bluestein(data: &mut [Complex64], dir: Direction) {
    let n = data.len();
    let m = (2 * n - 1).next_power_of_two();
    let sign = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    // chirp[k] = exp(sign * i * pi * k^2 / n); k^2 reduced mod 2n keeps the
    // angle small and accurate.
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
            let angle = sign * PI * k2 / n as f64;
            Complex64::new(math::cos(angle), math::sin(angle))
        })
        .collect();

    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = data[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        let c = chirp[k].conj();
        b[k] = c;
        b[m - k] = c;
    }
    radix2(&mut a, Direction::Forward);
    radix2(&mut b, Direction::Forward);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    radix2(&mut a, Direction::Inverse);
    let scale = 1.0 / m as f64;
    for k in 0..n {
        data[k] = a[k] * scale * chirp[k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (t, &v)| {
                    let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    acc + v * Complex64::new(angle.cos(), angle.sin())
                })
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin() + 0.1 * i as f64, (i as f64 * 1.3).cos()))
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_mixed_sizes() {
        for n in [1usize, 2, 3, 5, 8, 12, 17, 64, 100, 243, 300] {
            let x = signal(n);
            let mut y = x.clone();
            transform(&mut y, Direction::Forward);
            let want = naive_dft(&x);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for n in [7usize, 16, 750, 1000] {
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.05).sin() * 3.0 + 0.5).collect();
            let back = inverse_real(forward_real(&x));
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn bin_frequencies_fold() {
        assert_eq!(bin_frequency(0, 1000, 50.0), 0.0);
        assert_eq!(bin_frequency(5, 1000, 50.0), 0.25);
        assert_eq!(bin_frequency(995, 1000, 50.0), 0.25);
    }
}
