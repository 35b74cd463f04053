/// Ceiling that absorbs floating-point noise: `ceil_tol(16.000000000000004)`
/// is 16. Parameter formulas like `c·η·n₀·f/α²` are meant to be evaluated in
/// exact arithmetic.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let tol = 1e-9 * x.abs().max(1.0);
    let r = x.round();
    if (x - r).abs() <= tol {
        r
    } else {
        x.ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::ceil_tol;

    #[test]
    fn absorbs_rounding_noise() {
        assert_eq!(ceil_tol(4.0 * 100.0 * 0.01 / 0.25), 16.0);
        assert_eq!(ceil_tol(16.2), 17.0);
        assert_eq!(ceil_tol(15.9999), 16.0);
        assert_eq!(ceil_tol(0.0), 0.0);
    }
}
