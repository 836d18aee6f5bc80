//! Numerically stable log-sum-exp.

/// `ln(sum(exp(x_i)))` with max subtraction.
///
/// Returns `-inf` for an empty input or when every term is `-inf`.
/// A `+inf` or NaN term propagates.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Same as [`log_sum_exp`] but fed from an iterator; the values are buffered
/// into `scratch` to allow the two-pass max subtraction without allocating.
pub fn log_sum_exp_with<I>(scratch: &mut Vec<f64>, values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    scratch.clear();
    scratch.extend(values);
    log_sum_exp(scratch)
}
