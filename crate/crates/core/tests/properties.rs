use privlens::ext_lemmas::efrl_construct;
use privlens::frl::frl_construct;
use privlens::perletter::evaluate_criteria;
use privlens::privcomp::{analyze, build_code};
use privlens::{induce, Alphabet, JointDistribution, Mechanism};
use proptest::prelude::*;

fn joint() -> impl Strategy<Value = JointDistribution> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(nx, ny)| (Just(nx), Just(ny), prop::collection::vec(0.0f64..1.0, nx * ny)))
        .prop_filter_map("nonzero mass", |(nx, ny, w)| {
            // sparsify: small weights become exact zeros
            let w: Vec<f64> = w.iter().map(|v| if *v < 0.2 { 0.0 } else { *v }).collect();
            let s: f64 = w.iter().sum();
            (s > 0.0).then(|| {
                JointDistribution::from_flat(Alphabet::range(nx), Alphabet::range(ny), w.iter().map(|v| v / s).collect())
                    .unwrap()
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frl_is_independent_and_decodable(j in joint()) {
        let m = frl_construct(&j).mechanism;
        let ij = induce(&j, &m).unwrap();
        prop_assert!(ij.independence_residual() <= 1e-9);
        prop_assert!(ij.h_y_given_ux() <= 1e-9);
        prop_assert!(ij.chain_rule_residual() <= 1e-9);
        prop_assert!(m.nu() <= j.nx() * (j.ny().max(2) - 1) + 1);
    }

    #[test]
    fn relabeling_preserves_information(j in joint(), rot in 0usize..4) {
        let px: Vec<usize> = (0..j.nx()).map(|i| (i + rot) % j.nx()).collect();
        let py: Vec<usize> = (0..j.ny()).rev().collect();
        let k = j.permute_x(&px).permute_y(&py);
        prop_assert!((k.mutual_information() - j.mutual_information()).abs() <= 1e-12);
        prop_assert!((k.h_y_given_x() - j.h_y_given_x()).abs() <= 1e-12);
    }

    #[test]
    fn efrl_leaks_exactly_the_budget(j in joint(), frac in 0.0f64..=1.0) {
        let eps = frac * j.h_x();
        let out = efrl_construct(&j, eps).unwrap();
        let ij = induce(&j, &out.mechanism).unwrap();
        prop_assert!((ij.i_xu() - eps).abs() <= 1e-9);
        prop_assert!(ij.i_yu() >= eps + j.h_y_given_x() - j.h_x_given_y() - 1e-9);
    }

    #[test]
    fn private_code_is_secret_and_lossless(j in joint(), seed in 0u64..1000) {
        let code = build_code(&j, seed).unwrap();
        prop_assert!(code.is_prefix_free());
        code.verify_roundtrip(&j).unwrap();
        let a = analyze(&code, &j).unwrap();
        prop_assert!(a.leakage_i_xc_bits <= 1e-9);
        prop_assert!(a.kraft_sum <= 1.0 + 1e-12);
        prop_assert!(a.expected_codeword_length >= a.h_u - 1e-9);
        prop_assert!(a.expected_codeword_length < a.h_u + 1.0);
        prop_assert!(a.bound_check);
    }

    #[test]
    fn data_processing_for_y_only_mechanisms(
        j in joint(),
        rows in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 4),
    ) {
        let rows: Vec<Vec<f64>> = rows[..j.ny()]
            .iter()
            .map(|r| { let s: f64 = r.iter().sum(); r.iter().map(|v| v / s).collect() })
            .collect();
        let m = Mechanism::given_y(Alphabet::range(3), rows).unwrap();
        let ij = induce(&j, &m).unwrap();
        prop_assert!(ij.i_xu() <= ij.i_yu() + 1e-9);
        prop_assert!(ij.i_xu() <= j.mutual_information() + 1e-9);
        prop_assert!(evaluate_criteria(&ij).weighted_identity_residual() <= 1e-12);
    }
}
