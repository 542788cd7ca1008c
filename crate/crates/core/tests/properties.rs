use approx::assert_abs_diff_eq;
use mpwegner_core::hamiltonian::{assemble, InteractionSpec, PotentialField};
use mpwegner_core::lattice::{classify_regularity, Rectangle, RectangularDomain};
use mpwegner_core::randomness::DensitySpec;
use mpwegner_core::spectral::{counting_function, eigenvalues_symmetric, windowed_trace};
use proptest::prelude::*;

fn rect_strategy(d: usize) -> impl Strategy<Value = Rectangle> {
    prop::collection::vec((-3i64..3, 0i64..3), d).prop_map(|v| {
        let lower: Vec<i64> = v.iter().map(|p| p.0).collect();
        let upper: Vec<i64> = v.iter().map(|p| p.0 + p.1).collect();
        Rectangle::new(lower, upper).unwrap()
    })
}

fn domain_strategy() -> impl Strategy<Value = RectangularDomain> {
    (1usize..=2, 1usize..=3)
        .prop_flat_map(|(d, n)| prop::collection::vec(rect_strategy(d), n))
        .prop_map(|f| RectangularDomain::new(f).unwrap())
}

// regularity by definition: every pair of factors is equal or disjoint
fn brute_regular(dom: &RectangularDomain) -> bool {
    let f = dom.factors();
    (0..f.len()).all(|i| (0..f.len()).all(|j| f[i] == f[j] || !f[i].intersects(&f[j])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn site_index_is_a_bijection(dom in domain_strategy()) {
        for idx in 0..dom.cardinality() {
            let x = dom.index_site(idx).unwrap();
            prop_assert_eq!(dom.site_index(&x).unwrap(), idx);
        }
    }

    #[test]
    fn regularity_matches_definition(dom in domain_strategy()) {
        let info = classify_regularity(&dom);
        prop_assert_eq!(info.is_regular, brute_regular(&dom));
        if info.is_regular {
            let (nf, _) = dom.normal_form().unwrap();
            prop_assert!(nf.is_normal_form());
            prop_assert_eq!(nf.cardinality(), dom.cardinality());
        }
    }

    #[test]
    fn window_count_is_counting_difference(
        mut eigs in prop::collection::vec(-5.0f64..5.0, 0..40),
        e in -6.0f64..6.0,
        kappa in 0.0f64..3.0,
    ) {
        eigs.sort_by(f64::total_cmp);
        prop_assert_eq!(
            windowed_trace(&eigs, e, kappa),
            counting_function(&eigs, e + kappa) - counting_function(&eigs, e - kappa)
        );
    }

    #[test]
    fn trace_of_hamiltonian_is_potential_sum(
        vals in prop::collection::vec(-2.0f64..2.0, 5),
        g in 0.0f64..2.0,
    ) {
        let dom = RectangularDomain::power(Rectangle::interval(0, 4).unwrap(), 2).unwrap();
        let v = PotentialField::from_fn(&dom, |s| vals[s[0] as usize]).unwrap();
        let u = InteractionSpec::contact(g, 1);
        let h = assemble(&dom, &v, &u).unwrap();
        let eigs = eigenvalues_symmetric(&h);
        let trace: f64 = h.diagonal().iter().sum();
        // Σ_x V(x) = 2·5·Σ v; contact adds 2g on the 5 coincident sites
        let expected = 10.0 * vals.iter().sum::<f64>() + 10.0 * g;
        assert_abs_diff_eq!(trace, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(eigs.iter().sum::<f64>(), expected, epsilon = 1e-9);
    }
}

#[test]
fn density_config_round_trips_through_json() {
    let specs = [
        DensitySpec::Uniform { a: 0.0, b: 1.0 },
        DensitySpec::Triangular { a: -1.0, b: 2.0 },
        DensitySpec::TruncatedNormal { mean: 0.5, sigma: 0.3, a: 0.0, b: 1.0 },
    ];
    for spec in specs {
        let json = serde_json::to_string(&spec).unwrap();
        let back: DensitySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
    assert!(serde_json::from_str::<DensitySpec>(r#"{"family":"uniform","a":0,"b":1,"c":2}"#).is_err());
}
