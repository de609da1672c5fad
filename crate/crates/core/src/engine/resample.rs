use rand::Rng;

/// Systematic resampling: `n` indices drawn with a single uniform offset.
///
/// Weights need not be normalized. Returns `None` when they sum to zero or
/// contain non-finite values.
pub fn systematic<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Option<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() || weights.is_empty() {
        return None;
    }
    let step = total / n as f64;
    let mut target = rng.gen::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut cum = 0.0;
    let last = weights.len() - 1;
    let mut i = 0;
    for _ in 0..n {
        while i < last && cum + weights[i] <= target {
            cum += weights[i];
            i += 1;
        }
        out.push(i);
        target += step;
    }
    Some(out)
}

/// Converts log-weights to linear weights scaled so the largest is one.
pub fn exp_normalized(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return vec![0.0; log_w.len()];
    }
    log_w.iter().map(|l| (l - max).exp()).collect()
}

/// `ln(mean(exp(log_w)))`, computed stably.
pub fn log_mean_exp(log_w: &[f64]) -> f64 {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
    max + (s / log_w.len() as f64).ln()
}
