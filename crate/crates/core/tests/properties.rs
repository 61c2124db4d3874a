//! Property tests for serialization and the projection/transform contracts.

use proptest::prelude::*;

use spiked::{io, project_box_sphere, sample_goe, semicircle_stieltjes, Seed};

proptest! {
    #[test]
    fn vector_binary_roundtrip(v in proptest::collection::vec(-1e12f64..1e12, 1..200)) {
        let mut buf = Vec::new();
        io::write_vector(&v, &mut buf).unwrap();
        let back = io::read_vector(buf.as_slice()).unwrap();
        prop_assert_eq!(v, back);
    }

    #[test]
    fn matrix_binary_roundtrip(n in 1usize..40, seed in 0u64..1_000_000) {
        let m = sample_goe(n, Seed::new(seed)).unwrap();
        let mut buf = Vec::new();
        io::write_matrix(&m, &mut buf).unwrap();
        let back = io::read_matrix(buf.as_slice()).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn projection_output_is_feasible_up_to_renormalization(
        v in proptest::collection::vec(-2.0f64..2.0, 2..100),
        tau in 0.1f64..1.5,
    ) {
        match project_box_sphere(&v, tau) {
            Ok(p) => {
                let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-12);
                prop_assert!(p.iter().all(|&x| x >= 0.0));
                // entries can only exceed tau through the final
                // renormalization, which is bounded by 1/||clipped||
                let max = p.iter().cloned().fold(0.0f64, f64::max);
                prop_assert!(max <= 1.0 + 1e-12);
                // feasible outputs are fixed points
                if p.iter().all(|&x| x <= tau) {
                    let again = project_box_sphere(&p, tau).unwrap();
                    for (a, b) in p.iter().zip(&again) {
                        prop_assert!((a - b).abs() < 1e-12);
                    }
                }
            }
            Err(spiked::Error::ProjectionFailure) => {
                prop_assert!(v.iter().all(|&x| x <= 0.0) || v.iter().map(|x| x * x).sum::<f64>() == 0.0);
            }
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error: {e}"))),
        }
    }

    #[test]
    fn stieltjes_forward_of_inverse_is_identity(s in 0.001f64..0.999) {
        let z = spiked::inverse_semicircle_stieltjes(s).unwrap();
        let back = semicircle_stieltjes(z).unwrap();
        prop_assert!((back - s).abs() < 1e-12, "s = {s}, z = {z}, back = {back}");
    }
}
