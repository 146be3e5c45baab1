//! Aggregation helpers for benchmark tables.

/// Performance ratio in percent.
pub fn rho(value: f64, reference: f64) -> f64 {
    100.0 * value / reference
}

/// Geometric mean of positive values; `NaN` for an empty slice.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation over the mean, in percent. Zero for fewer
/// than two values.
pub fn relative_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt() / m * 100.0
}

/// Rounds to two decimals for report tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
