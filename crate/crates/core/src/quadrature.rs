//! Composite Newton–Cotes rules on uniform grids.
//!
//! An even number of intervals uses Simpson's rule throughout. An odd number
//! (at least three) uses Simpson on all but the last three intervals and the
//! 3/8 rule on those. A single interval falls back to the trapezoid rule.

/// Weights `w_j` such that `Σ w_j f(t_j)` approximates `∫_{t_0}^{t_k} f` on `k+1` uniform nodes.
pub fn weights(nodes: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![0.0; nodes];
    if nodes < 2 {
        return w;
    }
    let k = nodes - 1;
    if k == 1 {
        w[0] = 0.5 * dt;
        w[1] = 0.5 * dt;
        return w;
    }
    let simpson_end = if k % 2 == 0 { k } else { k - 3 };
    for j in (0..simpson_end).step_by(2) {
        w[j] += dt / 3.0;
        w[j + 1] += 4.0 * dt / 3.0;
        w[j + 2] += dt / 3.0;
    }
    if k % 2 == 1 {
        let s = simpson_end;
        let c = 3.0 * dt / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

/// `∫` over the whole sample range.
pub fn integrate(values: &[f64], dt: f64) -> f64 {
    weights(values.len(), dt)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Running integrals: `out[j]` approximates `∫_{t_0}^{t_j} f` with the same rule
/// [`integrate`] would apply to the first `j+1` samples. Linear in the sample count.
pub fn cumulative(values: &[f64], dt: f64) -> Vec<f64> {
    cumulative_by(values.len(), dt, |j| values[j])
}

pub(crate) fn cumulative_by<T>(len: usize, dt: f64, f: impl Fn(usize) -> T) -> Vec<T>
where
    T: Copy
        + Default
        + std::ops::Add<Output = T>
        + std::ops::Mul<f64, Output = T>,
{
    let mut out = vec![T::default(); len];
    if len < 2 {
        return out;
    }
    let v: Vec<T> = (0..len).map(f).collect();
    // even prefixes by Simpson recursion
    let mut j = 2;
    while j < len {
        out[j] = out[j - 2] + (v[j - 2] + v[j - 1] * 4.0 + v[j]) * (dt / 3.0);
        j += 2;
    }
    out[1] = (v[0] + v[1]) * (0.5 * dt);
    let mut j = 3;
    while j < len {
        let c = 3.0 * dt / 8.0;
        out[j] = out[j - 3] + (v[j - 3] + v[j - 2] * 3.0 + v[j - 1] * 3.0 + v[j]) * c;
        j += 2;
    }
    out
}
