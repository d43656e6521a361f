//! Small dense-vector helpers shared by the learners and the geometry checks.

/// `ln Σ exp(v[k])`, shifted by the max entry.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + v.iter().map(|&a| (a - m).exp()).sum::<f64>().ln()
}

/// Softmax of `scale * v`, max-shifted before exponentiation.
pub fn softmax_scaled(v: &[f64], scale: f64) -> Vec<f64> {
    let m = v.iter().map(|&a| scale * a).fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|&a| (scale * a - m).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn linf_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn max_entry(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the first maximal entry.
pub fn argmax(a: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in a.iter().enumerate() {
        if v > a[best] {
            best = k;
        }
    }
    best
}

/// Index of the first minimal entry.
pub fn argmin_entry(a: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in a.iter().enumerate() {
        if v < a[best] {
            best = k;
        }
    }
    best
}

/// Negative entropy `Σ p ln p` with `0 ln 0 = 0`.
pub fn neg_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum()
}

/// Shannon entropy `-Σ p ln p`.
pub fn entropy(p: &[f64]) -> f64 {
    -neg_entropy(p)
}

/// `KL(p‖q)`; infinite when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc.max(0.0)
}

/// Is `p` a probability vector up to `tol` on the total mass?
pub fn is_distribution(p: &[f64], tol: f64) -> bool {
    !p.is_empty() && p.iter().all(|&v| v.is_finite() && v >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}
