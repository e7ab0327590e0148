use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Post-processing of a predicted snapshot, in order: average with the
/// transpose, zero the diagonal, zero every entry below `threshold`.
pub fn refine(a: &Matrix, threshold: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::shape(
            "refine",
            format!("expected a square matrix, got {:?}", a.shape()),
        ));
    }
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut v = (a[(i, j)] + a[(j, i)]) / 2.0;
            if v < threshold {
                v = 0.0;
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;
    use proptest::prelude::*;

    #[test]
    fn hand_cases() {
        let a = Matrix::from_rows(&[[0.5, 1.0], [3.0, 0.0]]);
        assert_eq!(
            refine(&a, 0.0).unwrap(),
            Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]])
        );

        let fixed = Matrix::from_rows(&[[0.0, 0.4, 0.2], [0.4, 0.0, 0.9], [0.2, 0.9, 0.0]]);
        assert_eq!(refine(&fixed, 0.1).unwrap(), fixed);

        let small = Matrix::from_rows(&[[0.0, 0.005], [0.005, 0.0]]);
        assert_eq!(refine(&small, 0.01).unwrap(), Matrix::zeros(2, 2));
        assert!(refine(&Matrix::zeros(2, 3), 0.0).is_err());
    }

    #[test]
    fn threshold_applies_after_averaging() {
        // 0.004 and 0.02 average to 0.012 ≥ 0.01: kept
        let a = Matrix::from_rows(&[[0.0, 0.004], [0.02, 0.0]]);
        let r = refine(&a, 0.01).unwrap();
        assert!((r[(0, 1)] - 0.012).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn refined_output_invariants(seed in any::<u64>(), n in 1usize..8, eps in 0.0f64..0.6) {
            let a = Matrix::uniform_noise(&mut Rng::new(seed), n, n);
            let r = refine(&a, eps).unwrap();
            for i in 0..n {
                prop_assert_eq!(r[(i, i)], 0.0);
                for j in 0..n {
                    prop_assert_eq!(r[(i, j)], r[(j, i)]);
                    prop_assert!(r[(i, j)] == 0.0 || r[(i, j)] >= eps);
                }
            }
            prop_assert_eq!(refine(&r, eps).unwrap(), r);
        }
    }
}
