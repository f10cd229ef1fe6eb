use super::NnError;

/// Compares an analytic gradient with central finite differences.
///
/// Returns `max_i |a_i - n_i| / max(1, |a_i|, |n_i|)` where `n_i` is the
/// central difference `(f(θ + h e_i) - f(θ - h e_i)) / 2h`.
pub fn grad_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    step: f64,
) -> Result<f64, NnError>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(NnError::InvalidStep(step));
    }
    if analytic.len() != params.len() {
        return Err(NnError::DimensionMismatch {
            context: "analytic gradient",
            expected: params.len(),
            actual: analytic.len(),
        });
    }
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = loss(&probe);
        probe[i] = orig - step;
        let minus = loss(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NnError::NonFiniteLoss { index: i });
        }
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[i];
        let rel = (a - numeric).abs() / 1.0f64.max(a.abs()).max(numeric.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(theta: &[f64]) -> f64 {
        theta
            .iter()
            .enumerate()
            .map(|(i, t)| (i as f64 + 1.0) * t * t + 0.5 * t)
            .sum()
    }

    fn quadratic_grad(theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(i, t)| 2.0 * (i as f64 + 1.0) * t + 0.5)
            .collect()
    }

    #[test]
    fn quadratic_is_exact() {
        let theta = [0.3, -1.2, 2.5, 0.0];
        let err = grad_check(quadratic, &theta, &quadratic_grad(&theta), 1e-4).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn corrupted_gradient_detected() {
        let theta = [0.3, -1.2, 2.5, 0.7];
        let mut g = quadratic_grad(&theta);
        g[2] *= 2.0;
        let err = grad_check(quadratic, &theta, &g, 1e-4).unwrap();
        assert!(err > 0.3, "{err}");
    }

    #[test]
    fn non_finite_probe_is_an_error() {
        let err = grad_check(|t| (t[0]).ln(), &[0.0], &[1.0], 1e-4).unwrap_err();
        assert_eq!(err, NnError::NonFiniteLoss { index: 0 });
    }

    #[test]
    fn step_must_be_positive() {
        assert!(grad_check(quadratic, &[1.0], &[2.5], 0.0).is_err());
    }
}
