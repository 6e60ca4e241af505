//! Geometry of the probability simplex: Euclidean projection and KL
//! divergence.

use crate::error::{Error, Result};

/// Euclidean projection of `v` onto `{a : a >= 0, sum a = 1}`.
///
/// Sort-based threshold: with `u` the entries sorted descending and running
/// prefix sums `c_j`, the support size is the largest `j` with
/// `u_j > (c_j - 1) / j`, and `a_i = max(v_i - theta, 0)` for
/// `theta = (c_rho - 1) / rho`.
///
/// The input is shifted by its maximum first. The projection is invariant to
/// uniform shifts, and the shift keeps the retained coordinates of order one
/// so the output sums to one to rounding even for inputs of size 1e9.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot project an empty vector".into(),
        ));
    }
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite entry v[{i}] = {x}"
        )));
    }
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = v.iter().map(|x| x - top).collect();

    let mut sorted = shifted.clone();
    // Stable descending sort; ties do not change theta.
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (j + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    Ok(shifted.iter().map(|x| (x - theta).max(0.0)).collect())
}

/// `sum_{i: p_i > 0} p_i ln(p_i / q_i)`, with `0 ln 0 = 0`.
///
/// Returns `+inf` when some `p_i > 0` has `q_i = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "kl divergence operands",
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pi * (pi / qi).ln();
    }
    // Rounding can leave a tiny negative total when p and q nearly coincide.
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn feasible_point_is_fixed() {
        assert_eq!(project_simplex(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        let p = project_simplex(&[0.2, 0.3, 0.5]).unwrap();
        assert!(close(&p, &[0.2, 0.3, 0.5], 1e-15));
    }

    #[test]
    fn symmetric_and_vertex_cases() {
        assert!(close(
            &project_simplex(&[0.6, 0.6]).unwrap(),
            &[0.5, 0.5],
            1e-15
        ));
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[7.0]).unwrap(), vec![1.0]);
        // Gradient step from the single-state worked example.
        assert!(close(
            &project_simplex(&[0.45, 0.35]).unwrap(),
            &[0.55, 0.45],
            1e-15
        ));
    }

    #[test]
    fn huge_entries_stay_normalized() {
        let p = project_simplex(&[-1e9, -3e9, -2e9 + 0.25]).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[1e9 + 0.3, 1e9, -5.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(project_simplex(&[]).is_err());
        assert!(project_simplex(&[1.0, f64::NAN]).is_err());
        assert!(project_simplex(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(kl_divergence(&[0.0, 1.0], &[1e-300, 1.0]).unwrap(), 0.0);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    fn simplex_point(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.001f64..1.0, k).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(v in prop::collection::vec(-50.0f64..50.0, 1..12)) {
            let p = project_simplex(&v).unwrap();
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let pp = project_simplex(&p).unwrap();
            prop_assert!(close(&p, &pp, 1e-12));
        }

        #[test]
        fn projection_is_translation_invariant(
            v in prop::collection::vec(-5.0f64..5.0, 1..8),
            c in -100.0f64..100.0,
        ) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = project_simplex(&v).unwrap();
            let b = project_simplex(&shifted).unwrap();
            prop_assert!(close(&a, &b, 1e-12));
        }

        #[test]
        fn projection_beats_feasible_points(
            v in prop::collection::vec(-3.0f64..3.0, 4),
            others in prop::collection::vec(simplex_point(4), 50),
        ) {
            let p = project_simplex(&v).unwrap();
            let dist = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let best = dist(&p);
            for a in &others {
                prop_assert!(best <= dist(a) + 1e-12);
            }
        }

        #[test]
        fn kl_is_nonnegative(p in simplex_point(5), q in simplex_point(5)) {
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }
    }
}
