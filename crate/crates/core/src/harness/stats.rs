use crate::error::HarnessError;

fn log_likelihood(k: u64, n: u64, p: f64) -> f64 {
    let (k, m) = (k as f64, (n - k) as f64);
    let a = if k > 0.0 { k * p.ln() } else { 0.0 };
    let b = if m > 0.0 { m * (1.0 - p).ln() } else { 0.0 };
    a + b
}

/// Bisection for the point in `[lo, hi]` where `f` changes sign, `f(lo) >= 0`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rising = f(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Binomial rates whose likelihood is within `factor` of the maximum:
/// `{p : L(p) >= L(k/n) / factor}` with `L(p) = p^k (1-p)^(n-k)`.
pub fn likelihood_interval(k: u64, n: u64, factor: f64) -> Result<(f64, f64), HarnessError> {
    if n == 0 {
        return Err(HarnessError::ZeroShots);
    }
    if k > n {
        return Err(HarnessError::BadCount { k, n });
    }
    let phat = k as f64 / n as f64;
    let cut = log_likelihood(k, n, phat) - factor.ln();
    let g = |p: f64| log_likelihood(k, n, p) - cut;
    let lo = if k == 0 { 0.0 } else { bisect(0.0, phat, g) };
    let hi = if k == n { 1.0 } else { bisect(phat, 1.0, g) };
    Ok((lo, hi))
}

/// Binomial standard error of a rate estimate.
pub fn binomial_sigma(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// True when rate `a` is below rate `b` by more than `z` combined standard errors.
pub fn significantly_below(ka: u64, na: u64, kb: u64, nb: u64, z: f64) -> bool {
    let (pa, pb) = (ka as f64 / na as f64, kb as f64 / nb as f64);
    let s = (binomial_sigma(ka, na).powi(2) + binomial_sigma(kb, nb).powi(2)).sqrt();
    pb - pa > z * s
}

/// True when `a` does not exceed `b` by more than `z` combined standard errors.
pub fn not_above(ka: u64, na: u64, kb: u64, nb: u64, z: f64) -> bool {
    let (pa, pb) = (ka as f64 / na as f64, kb as f64 / nb as f64);
    let s = (binomial_sigma(ka, na).powi(2) + binomial_sigma(kb, nb).powi(2)).sqrt();
    pa - pb <= z * s
}
