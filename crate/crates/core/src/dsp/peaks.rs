use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Sample indices of gyroscope-y maxima (inhalation onsets) and minima
/// (inhale/exhale turnarounds).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakSet {
    pub maxima: Vec<usize>,
    pub minima: Vec<usize>,
}

impl PeakSet {
    /// Both lists strictly increasing and alternating once merged.
    pub fn is_well_formed(&self) -> bool {
        let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.maxima) || !increasing(&self.minima) {
            return false;
        }
        let merged = merge(&self.maxima, &self.minima);
        merged.windows(2).all(|w| w[0].1 != w[1].1 && w[0].0 < w[1].0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Max,
    Min,
}

fn merge(maxima: &[usize], minima: &[usize]) -> Vec<(usize, Kind)> {
    let mut all: Vec<(usize, Kind)> = maxima
        .iter()
        .map(|&i| (i, Kind::Max))
        .chain(minima.iter().map(|&i| (i, Kind::Min)))
        .collect();
    all.sort_by_key(|&(i, _)| i);
    all
}

/// Interior local maxima. A sample is a peak when it is strictly greater than
/// both neighbours; for a flat run of equal values the first sample is the
/// peak provided the samples flanking the run are both strictly lower.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let mut i = 1;
    while i < n - 1 {
        if x[i] > x[i - 1] {
            let mut end = i;
            while end + 1 < n && x[end + 1] == x[i] {
                end += 1;
            }
            if end + 1 < n && x[end + 1] < x[i] {
                peaks.push(i);
            }
            i = end + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Topographic prominence of the peak at `p`: its height above the higher
/// of the two lowest points reached before meeting strictly higher ground
/// (or the signal boundary) on each side.
pub fn prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let mut left_min = h;
    for &v in x[..p].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[p + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Keep the highest peaks first, discarding any peak closer than
/// `min_distance` samples to one already kept. Result sorted by index.
fn enforce_distance(x: &[f64], peaks: &[usize], min_distance: usize) -> Vec<usize> {
    if min_distance <= 1 || peaks.len() < 2 {
        return peaks.to_vec();
    }
    let mut order: Vec<usize> = peaks.to_vec();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in order {
        if kept.iter().all(|&k| k.abs_diff(p) >= min_distance) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    kept
}

fn filtered_maxima(x: &[f64], min_distance: usize, min_prominence: f64) -> Vec<usize> {
    // Round-off ripple on a flat signal must never count as a peak.
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| {
            let prom = prominence(x, p);
            prom >= min_prominence && prom > floor
        })
        .collect();
    enforce_distance(x, &candidates, min_distance)
}

/// Detect maxima and minima of a smoothed gyroscope-y trace.
///
/// Maxima pass the strict neighbour test, the prominence threshold and the
/// minimum spacing; minima are found the same way on the negated signal.
/// Finally runs of same-kind extrema are collapsed, keeping the higher
/// maximum (or lower minimum), so the merged sequence alternates.
pub fn detect_peaks(x: &[f64], min_distance: usize, min_prominence: f64) -> PeakSet {
    if x.len() < 3 {
        return PeakSet::default();
    }
    let maxima = filtered_maxima(x, min_distance, min_prominence);
    let negated: Vec<f64> = x.iter().map(|v| -v).collect();
    let minima = filtered_maxima(&negated, min_distance, min_prominence);

    let mut out: Vec<(usize, Kind)> = Vec::new();
    for (i, kind) in merge(&maxima, &minima) {
        match out.last() {
            Some(&(j, last_kind)) if last_kind == kind => {
                let better = match kind {
                    Kind::Max => x[i] > x[j],
                    Kind::Min => x[i] < x[j],
                };
                if better {
                    *out.last_mut().unwrap() = (i, kind);
                }
            }
            _ => out.push((i, kind)),
        }
    }
    PeakSet {
        maxima: out.iter().filter(|e| e.1 == Kind::Max).map(|e| e.0).collect(),
        minima: out.iter().filter(|e| e.1 == Kind::Min).map(|e| e.0).collect(),
    }
}
