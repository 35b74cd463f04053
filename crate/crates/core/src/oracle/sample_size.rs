use crate::util::ceil_tol;

/// Smallest `N` with `2·exp(−ε²·N·μ/3) ≤ δ`: enough Bernoulli samples of
/// mean at least `μ` for a `(1±ε)` estimate with failure probability `δ`.
pub fn av_sample_size(epsilon: f64, delta: f64, mu_lower: f64) -> u64 {
    assert!(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0,1]");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    assert!(mu_lower > 0.0, "mu_lower must be positive");
    ceil_tol(3.0 * (2.0 / delta).ln() / (epsilon * epsilon * mu_lower)) as u64
}

/// Hits of the target needed before stopping a direct estimate:
/// the sample size above evaluated at the hit expectation.
pub fn hit_target(epsilon: f64, delta: f64) -> u64 {
    av_sample_size(epsilon, delta, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let delta = 2.0 * (-3.0f64).exp();
        assert_eq!(av_sample_size(1.0, delta, 1.0), 9);
        assert_eq!(hit_target(0.1, 0.1), 899);
    }

    #[test]
    fn scaling() {
        let a = av_sample_size(0.2, 0.05, 0.01);
        let b = av_sample_size(0.2, 0.05, 0.02);
        assert!(a.abs_diff(2 * b) <= 2);
        let c = av_sample_size(0.1, 0.05, 0.01);
        assert!(c.abs_diff(4 * a) <= 4);
    }
}
