use qutrit_core::sampler::{random_separable_mixture, SeedSpec};
use qutrit_core::witness::{gr_eps_oew, DEFAULT_EPSILON};

#[test]
fn separable_mixtures_are_not_declared_entangled() {
    let grs: Vec<f64> = (0..100)
        .map(|i| {
            let rho = random_separable_mixture(20, SeedSpec::new(12, i)).unwrap();
            let r = gr_eps_oew(&rho, DEFAULT_EPSILON).unwrap();
            assert!(r.gr <= 1e-3, "mixture {i}: gr {} ({:?})", r.gr, r.report.status);
            r.gr
        })
        .collect();
    let sound = grs.iter().filter(|&&g| g <= DEFAULT_EPSILON).count();
    assert!(sound >= 98, "{sound}/100 mixtures at or below epsilon");
}
