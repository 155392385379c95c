//! Descriptive statistics used by the reports.

/// Nearest-rank percentile: the value at 1-based rank `ceil(q * k)` of the
/// sorted input. `None` for empty input.
pub fn nearest_rank_percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

pub fn population_std(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some((values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Lower median: element `(k - 1) / 2` of the sorted input.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

pub const HISTOGRAM_BINS: usize = 30;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width bins over `[0, max]`; the last bin is closed. Values below 0
/// land in the first bin. With `max <= 0` every value lands in the first bin.
pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let width = if max > 0.0 { max / bins as f64 } else { 0.0 };
    let bin_edges = (0..=bins).map(|k| if k == bins { max } else { k as f64 * width }).collect();
    let mut counts = vec![0u64; bins];
    for v in values.iter().filter(|v| v.is_finite()) {
        let k = if width > 0.0 { ((v / width).floor().max(0.0) as usize).min(bins - 1) } else { 0 };
        counts[k] += 1;
    }
    Histogram { bin_edges, counts }
}
