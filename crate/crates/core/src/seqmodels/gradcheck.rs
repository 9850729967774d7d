//! Central-difference gradients, kept independent of the backward passes.

use super::params::Gradients;

/// `(J(θ + eps e_k) - J(θ - eps e_k)) / (2 eps)` for every scalar `θ_k`.
///
/// `values` is restored to its original contents on return.
pub fn finite_diff_grad<F>(values: &mut [f64], eps: f64, mut objective: F) -> Gradients
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(eps > 0.0, "eps must be positive");
    let mut out = Vec::with_capacity(values.len());
    for k in 0..values.len() {
        let orig = values[k];
        values[k] = orig + eps;
        let hi = objective(values);
        values[k] = orig - eps;
        let lo = objective(values);
        values[k] = orig;
        out.push((hi - lo) / (2.0 * eps));
    }
    Gradients(out)
}

/// Floor on the denominator of [`relative_error`]. Central differences at
/// `eps = 1e-5` carry roundoff near `1e-16 / eps = 1e-11`, so entries below
/// this floor are judged on absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| relative_error(*x, *y)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_toy() {
        let mut theta = [3.0];
        let g = finite_diff_grad(&mut theta, 1e-3, |v| v[0] * v[0]);
        assert!((g.0[0] - 6.0).abs() < 1e-6);
        assert_eq!(theta[0], 3.0);
    }

    #[test]
    fn mismatch_shrinks_quadratically_with_eps() {
        // d/dx sin(x) at x = 0.7; central-difference error ~ eps^2 cos(x) / 6.
        let x0 = 0.7f64;
        let exact = x0.cos();
        let err = |eps: f64| {
            let mut v = [x0];
            (finite_diff_grad(&mut v, eps, |v| v[0].sin()).0[0] - exact).abs()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-12, -1e-12) < 1e-3);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-12);
    }
}
