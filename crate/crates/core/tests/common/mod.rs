//! Independent reference implementations shared by the test targets.

use nirpulse::ExtremaIndex;

/// Straight from the definitions: plateau-first strict maxima, prominence
/// by scanning to the nearest higher sample, greedy spacing in descending
/// height, then one survivor per same-kind run.
pub fn oracle_peaks(x: &[f64], min_distance: usize, min_prominence: f64) -> Vec<usize> {
    let n = x.len();
    let mut candidates = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if x[i - 1] == x[i] {
            continue;
        }
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 < n && x[i - 1] < x[i] && x[j + 1] < x[i] {
            let left_stop = (0..i).rev().find(|&k| x[k] > x[i]).map_or(0, |k| k + 1);
            let right_stop = (i + 1..n).find(|&k| x[k] > x[i]).map_or(n, |k| k);
            let left_min = x[left_stop..=i]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let right_min = x[i..right_stop]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if x[i] - left_min.max(right_min) >= min_prominence {
                candidates.push(i);
            }
        }
    }
    let mut order = candidates.clone();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap().then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in order {
        if kept.iter().all(|&q| p.abs_diff(q) >= min_distance) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    kept
}

pub fn oracle_extrema(x: &[f64], min_distance: usize, min_prominence: f64) -> ExtremaIndex {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let mut tagged: Vec<(usize, bool)> = oracle_peaks(x, min_distance, min_prominence)
        .into_iter()
        .map(|p| (p, true))
        .chain(
            oracle_peaks(&neg, min_distance, min_prominence)
                .into_iter()
                .map(|t| (t, false)),
        )
        .collect();
    tagged.sort_unstable();
    let mut out = ExtremaIndex::default();
    for run in tagged.chunk_by(|a, b| a.1 == b.1) {
        let is_peak = run[0].1;
        let key = |i: usize| if is_peak { x[i] } else { -x[i] };
        // first of the most extreme
        let best = run
            .iter()
            .map(|&(i, _)| i)
            .fold(run[0].0, |b, i| if key(i) > key(b) { i } else { b });
        if is_peak {
            out.peaks.push(best);
        } else {
            out.troughs.push(best);
        }
    }
    out
}
