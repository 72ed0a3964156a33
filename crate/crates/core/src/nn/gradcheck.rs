use super::ParamVector;
use crate::error::{Error, Result};

/// Central-difference gradient estimate of `f` at `params`.
pub fn finite_difference_grad<F>(f: F, params: &ParamVector, h: f64) -> Result<ParamVector>
where
    F: Fn(&ParamVector) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("step must be positive, got {h}")));
    }
    let mut probe = params.clone();
    let mut grad = ParamVector::zeros(params.layout().clone());
    for i in 0..params.len() {
        let orig = params.values()[i];
        probe.values_mut()[i] = orig + h;
        let plus = f(&probe);
        probe.values_mut()[i] = orig - h;
        let minus = f(&probe);
        probe.values_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite_difference_grad"));
        }
        grad.values_mut()[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest relative error between an analytic and a numeric gradient.
///
/// Entries whose analytic value is below `1e-8` in magnitude are judged by
/// absolute error instead: they contribute 0 when within `1e-8`, and their
/// plain relative error otherwise.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let diff = (a - n).abs();
            if a.abs() < 1e-8 && diff <= 1e-8 {
                0.0
            } else {
                diff / a.abs().max(n.abs())
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layout;
    use std::sync::Arc;

    fn pv(v: Vec<f64>) -> ParamVector {
        let layout = Arc::new(Layout::builder().push("p", &[v.len()]).build());
        ParamVector::new(layout, v).unwrap()
    }

    #[test]
    fn quadratic_gradient_is_identity() {
        let p = pv(vec![0.5, -1.5, 3.0]);
        let g = finite_difference_grad(|q| 0.5 * q.values().iter().map(|v| v * v).sum::<f64>(), &p, 1e-5).unwrap();
        for (a, b) in g.values().iter().zip(p.values()) {
            // Central differences are exact for quadratics up to rounding.
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_has_zero_gradient() {
        let p = pv(vec![1.0, 2.0]);
        let g = finite_difference_grad(|_| 4.2, &p, 1e-5).unwrap();
        assert_eq!(g.values(), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_step_and_non_finite() {
        let p = pv(vec![1.0]);
        assert!(finite_difference_grad(|_| 0.0, &p, 0.0).is_err());
        assert!(matches!(
            finite_difference_grad(|q| if q.values()[0] > 1.0 { f64::NAN } else { 0.0 }, &p, 1e-5),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn relative_error_small_entries_use_absolute() {
        assert_eq!(max_relative_error(&[1e-10], &[5e-9]), 0.0);
        assert!(max_relative_error(&[1e-10], &[1e-6]) > 0.9);
        assert!((max_relative_error(&[1.0], &[1.0001]) - 0.0001 / 1.0001).abs() < 1e-12);
    }
}
