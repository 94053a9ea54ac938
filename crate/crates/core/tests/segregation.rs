use proptest::prelude::*;
use segfrac::segregation::{initial_bumps, j_beta_value, minimize_stage, overlap, project_spheres, PenaltySpec};
use segfrac::{assemble_form, DensityVector, Grid, Params};

fn grid() -> Grid {
    Grid::new(-1.0, 1.0, 24).unwrap()
}

fn densities(k: usize) -> impl Strategy<Value = DensityVector<f64>> {
    prop::collection::vec(prop::collection::vec(-0.2f64..1.0, 24), k)
        .prop_filter("each component needs a positive entry", |c| c.iter().all(|v| v.iter().any(|&x| x > 1e-3)))
        .prop_map(|c| DensityVector::new(grid(), c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_idempotent_and_feasible(u in densities(3)) {
        let p = project_spheres(&u).unwrap();
        prop_assert!(p.is_feasible(1e-12));
        prop_assert!(p.components().iter().flatten().all(|&v| v >= 0.0));
        let q = project_spheres(&p).unwrap();
        prop_assert!(p.sup_distance(&q).unwrap() <= 1e-14);
    }

    #[test]
    fn overlap_ignores_component_order(u in densities(3)) {
        let mut c = u.components().to_vec();
        c.rotate_left(1);
        let v = DensityVector::new(grid(), c).unwrap();
        prop_assert!((overlap(&u) - overlap(&v)).abs() <= 1e-14 * (1.0 + overlap(&u)));
    }

    #[test]
    fn penalized_energy_grows_with_beta(u in densities(2), beta in 0.1f64..100.0) {
        let form = assemble_form(&grid(), &Params::new(0.5).unwrap());
        let p = project_spheres(&u).unwrap();
        let lo = j_beta_value(&p, &PenaltySpec::new(2, beta).unwrap(), &form).unwrap();
        let hi = j_beta_value(&p, &PenaltySpec::new(2, 2.0 * beta).unwrap(), &form).unwrap();
        prop_assert!(hi >= lo);
    }
}

#[test]
fn stage_energies_never_increase() {
    let g = Grid::new(-1.0, 1.0, 48).unwrap();
    let form = assemble_form(&g, &Params::new(0.4).unwrap());
    let u0 = initial_bumps(&g, 2, 0.3, 5).unwrap();
    let (_, diag) = minimize_stage(&u0, &PenaltySpec::new(2, 50.0).unwrap(), &form, 1e-9, 2000).unwrap();
    assert!(diag.converged());
    assert!(diag.max_energy_increase() <= 1e-12);
}

#[test]
fn seeded_initial_data_is_reproducible() {
    let g = grid();
    let a = initial_bumps::<f64>(&g, 3, 0.5, 17).unwrap();
    let b = initial_bumps::<f64>(&g, 3, 0.5, 17).unwrap();
    let c = initial_bumps::<f64>(&g, 3, 0.5, 18).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
