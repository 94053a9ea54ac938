use proptest::prelude::*;
use segfrac::analysis::{extract_free_boundary, holder_fit, partition_result, AnalysisSettings, Verdict};
use segfrac::{assemble_form, smallest_eigenpair, DensityVector, Grid, Params};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holder_fit_recovers_power_laws(alpha in 0.05f64..1.5, c in 1e-3f64..1e3, r0 in 1e-4f64..1e-1) {
        let radii: Vec<f64> = (0..10).map(|k| r0 * 1.3f64.powi(k)).collect();
        let h: Vec<f64> = radii.iter().map(|r| c * r.powf(2.0 * alpha)).collect();
        let fit = holder_fit(&radii, &h).unwrap();
        prop_assert!((fit.alpha - alpha).abs() <= 1e-10);
        prop_assert!(!fit.flagged);
    }

    #[test]
    fn disjoint_blocks_have_one_interface_each(cut in 6usize..26) {
        let g = Grid::new(-1.0, 1.0, 32).unwrap();
        let a: Vec<f64> = (0..32).map(|i| if i < cut { 1.0 } else { 0.0 }).collect();
        let b: Vec<f64> = (0..32).map(|i| if i >= cut { 1.0 } else { 0.0 }).collect();
        let fb = extract_free_boundary(&DensityVector::new(g, vec![a, b]).unwrap(), 1e-3).unwrap();
        prop_assert_eq!(fb.len(), 1);
        let site = fb.sites[0];
        prop_assert!(site.lo <= g.node(cut) && site.hi >= g.node(cut - 1));
        prop_assert!(!site.same_label());
    }
}

#[test]
fn mirrored_eigenfunctions_meet_as_two_densities() {
    let n = 96;
    let g = Grid::new(-1.0, 1.0, n).unwrap();
    let form = assemble_form(&g, &Params::new(0.5).unwrap());
    let left: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    let right: Vec<bool> = (0..n).map(|i| i >= n / 2).collect();
    let el = smallest_eigenpair(&form, &left, 1e-10).unwrap();
    let er = smallest_eigenpair(&form, &right, 1e-10).unwrap();
    let u = DensityVector::new(g, vec![el.phi, er.phi]).unwrap();
    let r = partition_result(&form, &u, &[el.lambda, er.lambda], &AnalysisSettings::default()).unwrap();
    assert_eq!(r.sites.len(), 1);
    assert_eq!(r.sites[0].verdict, Verdict::TwoDensity);
    assert!(r.equivalent());
}
