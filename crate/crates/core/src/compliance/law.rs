use crate::error::{Error, Result};
use crate::geometry::{sub3, Vec3};

/// Deadband width relative to the predictor's validation mean error.
pub const LAMBDA_PER_MEAN_ERROR: f64 = 1.25;

/// Tension not explained by the robot's own motion.
pub fn external_force(measured: &Vec3, predicted_internal: &Vec3) -> Vec3 {
    sub3(measured, predicted_internal)
}

/// Cable velocity (mm/s) for one cable's external tension (N).
///
/// Zero inside `[-lambda, lambda]`, otherwise `-beta (f - lambda sign f)`
/// clamped to `±cap`.
pub fn deadband_velocity(f_ext: f64, lambda: f64, beta: f64, cap: f64) -> f64 {
    if f_ext.abs() <= lambda {
        return 0.0;
    }
    (-beta * (f_ext - lambda * f_ext.signum())).clamp(-cap, cap)
}

pub fn select_lambda(val_mean_error: f64) -> Result<f64> {
    if !(val_mean_error > 0.0 && val_mean_error.is_finite()) {
        return Err(Error::InvalidConfig(format!("validation mean error must be positive, got {val_mean_error}")));
    }
    Ok(LAMBDA_PER_MEAN_ERROR * val_mean_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn external_force_examples() {
        assert_eq!(external_force(&[2.0, 3.0, 4.0], &[2.0, 3.0, 4.0]), [0.0; 3]);
        assert_eq!(external_force(&[5.0, 5.0, 5.0], &[3.0, 4.0, 5.0]), [2.0, 1.0, 0.0]);
    }

    #[test]
    fn velocity_examples() {
        assert_eq!(deadband_velocity(0.3, 0.5, 2.0, 10.0), 0.0);
        assert!((deadband_velocity(1.5, 0.5, 2.0, 10.0) + 2.0).abs() < 1e-12);
        assert!((deadband_velocity(-1.5, 0.5, 2.0, 10.0) - 2.0).abs() < 1e-12);
        assert_eq!(deadband_velocity(100.0, 0.5, 2.0, 10.0), -10.0);
    }

    #[test]
    fn lambda_examples() {
        assert!((select_lambda(0.4).unwrap() - 0.5).abs() < 1e-12);
        assert!((select_lambda(0.258).unwrap() - 0.3225).abs() < 1e-12);
        assert!(select_lambda(0.0).is_err());
        assert!(select_lambda(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn external_force_antisymmetric(a in prop::array::uniform3(-50f64..50.0), b in prop::array::uniform3(-50f64..50.0)) {
            let x = external_force(&a, &b);
            let y = external_force(&b, &a);
            for i in 0..3 {
                prop_assert_eq!(x[i], -y[i]);
            }
        }

        #[test]
        fn lambda_monotone(a in 1e-6f64..10.0, b in 1e-6f64..10.0) {
            prop_assume!(a < b);
            prop_assert!(select_lambda(a).unwrap() < select_lambda(b).unwrap());
        }

        #[test]
        fn velocity_odd_and_continuous(f in -100f64..100.0, lambda in 1e-3f64..5.0, beta in 1e-3f64..20.0) {
            prop_assert_eq!(deadband_velocity(-f, lambda, beta, 10.0), -deadband_velocity(f, lambda, beta, 10.0));
            let h = 1e-9;
            prop_assert!(deadband_velocity(lambda + h, lambda, beta, 10.0).abs() <= beta * h * 1.0001);
            prop_assert_eq!(deadband_velocity(lambda, lambda, beta, 10.0), 0.0);
        }

        #[test]
        fn velocity_bounded_and_opposes_force(f in -100f64..100.0, lambda in 1e-3f64..5.0, beta in 1e-3f64..20.0, cap in 1e-2f64..50.0) {
            let v = deadband_velocity(f, lambda, beta, cap);
            prop_assert!(v.abs() <= cap);
            prop_assert!(v * f <= 0.0);
        }
    }
}
