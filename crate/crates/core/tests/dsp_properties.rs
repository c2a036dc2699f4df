use std::f64::consts::PI;

use breathscreen_core::data::{RawRecording, ScenePosition};
use breathscreen_core::dsp::{self, detect_peaks, lowpass_fft, resample_fft, window_cycles, DspConfig, FilterSpec, PeakSet};
use breathscreen_core::rng;
use proptest::prelude::*;

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// |X_k| by direct summation.
fn dft_mag(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let (re, im) = x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
        let a = -2.0 * PI * k as f64 * t as f64 / n;
        (re + v * a.cos(), im + v * a.sin())
    });
    re.hypot(im)
}

fn tone(f: f64, n: usize, fs: f64, phase: f64) -> Vec<f64> {
    (0..n).map(|i| (2.0 * PI * f * i as f64 / fs + phase).sin()).collect()
}

fn spec() -> FilterSpec {
    FilterSpec::new(0.7, 50.0).unwrap()
}

#[test]
fn five_hz_component_is_removed() {
    let slow = tone(0.25, 1000, 50.0, 0.3);
    let fast = tone(5.0, 1000, 50.0, 1.1);
    let mix: Vec<f64> = slow.iter().zip(&fast).map(|(a, b)| a + 0.8 * b).collect();
    let y = lowpass_fft(&mix, &spec()).unwrap();
    let k = 100; // 5 Hz at 1000 samples / 50 Hz
    assert!(dft_mag(&y, k) < 1e-9 * dft_mag(&mix, k));
    assert!(rms(&y, &slow) < 1e-9);
}

#[test]
fn slow_tone_passes_unchanged() {
    let x = tone(0.25, 1000, 50.0, 0.0);
    assert!(rms(&lowpass_fft(&x, &spec()).unwrap(), &x) < 1e-9);
}

fn smooth_signal(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, &[]);
    let comps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng::uniform(&mut r, 0.05, 1.5), rng::uniform(&mut r, 0.2, 1.0), rng::uniform(&mut r, 0.0, 2.0 * PI)))
        .collect();
    (0..n)
        .map(|i| comps.iter().map(|(f, a, p)| a * (2.0 * PI * f * i as f64 / 50.0 + p).sin()).sum::<f64>())
        .collect()
}

fn brute_prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let left = (0..p).rev().take_while(|&i| x[i] <= h).map(|i| x[i]).fold(h, f64::min);
    let right = (p + 1..x.len()).take_while(|&i| x[i] <= h).map(|i| x[i]).fold(h, f64::min);
    h - left.max(right)
}

/// Strict neighbor test, prominence threshold, then greedy tallest-first
/// distance suppression.
fn brute_maxima(x: &[f64], dist: usize, prom: f64) -> Vec<usize> {
    let mut c: Vec<usize> = (1..x.len() - 1).filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1] && brute_prominence(x, i) >= prom).collect();
    c.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap());
    let mut kept: Vec<usize> = Vec::new();
    for p in c {
        if kept.iter().all(|&k| k.abs_diff(p) >= dist) {
            kept.push(p);
        }
    }
    kept.sort();
    kept
}

fn brute_peaks(x: &[f64], dist: usize, prom: f64) -> PeakSet {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let mut all: Vec<(usize, bool)> = brute_maxima(x, dist, prom).into_iter().map(|i| (i, true)).collect();
    all.extend(brute_maxima(&neg, dist, prom).into_iter().map(|i| (i, false)));
    all.sort();
    let mut out: Vec<(usize, bool)> = Vec::new();
    for (i, is_max) in all {
        if let Some(last) = out.last_mut() {
            if last.1 == is_max {
                let better = if is_max { x[i] > x[last.0] } else { x[i] < x[last.0] };
                if better {
                    *last = (i, is_max);
                }
                continue;
            }
        }
        out.push((i, is_max));
    }
    PeakSet {
        maxima: out.iter().filter(|e| e.1).map(|e| e.0).collect(),
        minima: out.iter().filter(|e| !e.1).map(|e| e.0).collect(),
    }
}

#[test]
fn peaks_match_brute_force_on_1000_smooth_signals() {
    for seed in 0..1000 {
        let x = smooth_signal(seed, 400);
        let dist = 20 + (seed % 60) as usize;
        let prom = 0.05 * (seed % 7) as f64;
        let got = detect_peaks(&x, dist, prom);
        assert_eq!(got, brute_peaks(&x, dist, prom), "seed {seed}");
        assert!(got.is_well_formed());
        for &m in &got.maxima {
            assert!(x[m] > x[m - 1] && x[m] > x[m + 1]);
        }
    }
}

fn recording(x: &[f64]) -> RawRecording {
    let gyro = x.iter().map(|&v| [0.1 * v, v, -0.2 * v]).collect();
    let accel = x.iter().map(|&v| [0.01 * v, 9.81, 0.0]).collect();
    RawRecording::new(ScenePosition::M1, 50.0, gyro, accel).unwrap()
}

#[test]
fn noiseless_tone_cycles_are_6_by_300() {
    let x = tone(0.25, 1000, 50.0, PI / 2.0);
    let seg = dsp::segment_scene(&recording(&x), &DspConfig::default()).unwrap();
    // Maxima every 200 samples from 0; after dropping 250 the survivors sit
    // at 150, 350 and 550.
    assert_eq!(seg.trimmed.len(), 750);
    assert_eq!(seg.offset, 250);
    assert_eq!(seg.peaks.maxima, vec![150, 350, 550]);
    assert_eq!(seg.cycles.len(), 2);
    for c in &seg.cycles {
        assert!(c.channels.iter().all(|ch| ch.len() == 300));
        assert!(c.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lowpass_is_idempotent_linear_and_contracting(
        xs in proptest::collection::vec(-5.0f64..5.0, 16..300),
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let s = spec();
        let mut r = rng::stream(seed, &[]);
        let ys: Vec<f64> = xs.iter().map(|_| rng::normal(&mut r)).collect();
        let fx = lowpass_fft(&xs, &s).unwrap();
        prop_assert!(rms(&lowpass_fft(&fx, &s).unwrap(), &fx) < 1e-9);
        let fy = lowpass_fft(&ys, &s).unwrap();
        let mix: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
        let comb: Vec<f64> = fx.iter().zip(&fy).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(rms(&lowpass_fft(&mix, &s).unwrap(), &comb) < 1e-9);
        let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        prop_assert!(energy(&fx) <= energy(&xs) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn resampling_preserves_constants_and_fixed_length(c in -10.0f64..10.0, n in 2usize..700) {
        let out = resample_fft(&vec![c; n], 300).unwrap();
        prop_assert_eq!(out.len(), 300);
        prop_assert!(out.iter().all(|v| (v - c).abs() < 1e-9));
    }

    #[test]
    fn resampling_is_identity_at_target(xs in proptest::collection::vec(-5.0f64..5.0, 300)) {
        prop_assert!(rms(&resample_fft(&xs, 300).unwrap(), &xs) < 1e-9);
    }

    #[test]
    fn single_period_sines_survive_resampling(n in 8usize..700, phase in 0.0f64..(2.0 * PI)) {
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64 + phase).sin()).collect();
        let want: Vec<f64> = (0..300).map(|i| (2.0 * PI * i as f64 / 300.0 + phase).sin()).collect();
        prop_assert!(rms(&resample_fft(&x, 300).unwrap(), &want) < 1e-6);
    }

    #[test]
    fn windows_are_disjoint_ordered_and_fixed_size(seed in any::<u64>()) {
        let x = smooth_signal(seed, 600);
        let peaks = detect_peaks(&x, 40, 0.05);
        let cycles = window_cycles(&recording(&x), &peaks, 300).unwrap();
        prop_assert_eq!(cycles.len(), peaks.maxima.len().saturating_sub(1));
        for w in cycles.windows(2) {
            prop_assert_eq!(w[0].source_window.1, w[1].source_window.0);
        }
        for c in &cycles {
            prop_assert!(c.source_window.0 < c.source_window.1);
            prop_assert!(c.channels.iter().all(|ch| ch.len() == 300));
            prop_assert!(c.is_finite());
        }
    }
}
