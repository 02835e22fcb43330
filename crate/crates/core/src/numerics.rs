//! Small numerical helpers shared by the solvers.

/// Evaluates `prod_i base_i^exp_i` as `exp(sum_i exp_i * ln base_i)`.
///
/// Chained `powf` calls round after every factor; with exponents such as
/// `1/b3 = 5` applied to intermediate results the error compounds. Summing in
/// the log domain rounds once. All bases must be positive.
pub fn pow_prod(terms: &[(f64, f64)]) -> f64 {
    ln_pow_prod(terms).exp()
}

/// Logarithm of [`pow_prod`].
pub fn ln_pow_prod(terms: &[(f64, f64)]) -> f64 {
    terms.iter().map(|&(base, exp)| exp * base.ln()).sum()
}

/// Symmetric relative difference `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}

/// Relative difference with the underflow guard used by the discrepancy
/// reports.
pub fn rel_diff_guarded(a: f64, b: f64) -> f64 {
    rel_diff(a, b, 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_prod_matches_direct_powers() {
        let v = pow_prod(&[(2.0, 3.0), (9.0, 0.5)]);
        assert!((v - 24.0).abs() < 1e-13);
    }

    #[test]
    fn empty_product_is_one() {
        assert_eq!(pow_prod(&[]), 1.0);
    }

    #[test]
    fn rel_diff_is_symmetric_and_guarded() {
        assert_eq!(rel_diff(1.0, 2.0, 0.0), rel_diff(2.0, 1.0, 0.0));
        assert_eq!(rel_diff_guarded(0.0, 0.0), 0.0);
        assert_eq!(rel_diff(0.0, 1e-20, 1.0), 1e-20);
    }
}
