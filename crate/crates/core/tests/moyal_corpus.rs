mod common;

use common::{c, random_signal};
use ncgabor::moyal::{
    continuous_chern, continuous_energy, continuous_inner_right, continuous_trace_l, continuous_trace_r,
    default_corpus, eigen_residual, parse_corpus, screen_corpus, CHERN_EXTENT, CHERN_STEP,
};
use ncgabor::signal::{gaussian, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn continuous_charge_equals_channel_count() {
    for e in default_corpus().iter().filter(|e| e.is_generalized_gaussian() && e.q <= 2) {
        let g = e.build(16.0, 512).unwrap();
        let c1 = continuous_chern(&g, CHERN_STEP, CHERN_EXTENT).unwrap();
        assert!((c1 - c(e.q as f64, 0.0)).norm() < 1e-6, "{}: {c1}", e.name);
    }
}

#[test]
fn continuous_charge_q3() {
    let g = gaussian(GridSpec::standard(3), &[c(1.0, 0.0), c(-0.3, 0.2), c(0.7, 0.0)], c(-0.8, 0.3)).unwrap();
    let c1 = continuous_chern(&g, CHERN_STEP, CHERN_EXTENT).unwrap();
    assert!((c1 - c(3.0, 0.0)).norm() < 1e-6, "{c1}");
}

#[test]
fn energy_is_at_least_the_charge() {
    for row in screen_corpus(&default_corpus(), 16.0, 512).unwrap() {
        assert!(row.energy >= row.q as f64 - 1e-6, "{row:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for q in 1..=3 {
        let g = random_signal(GridSpec::standard(q), &mut rng);
        assert!(continuous_energy(&g).unwrap() > q as f64 + 1e-3);
    }
}

#[test]
fn eigen_relation_singles_out_gaussians() {
    for e in default_corpus() {
        let g = e.build(16.0, 512).unwrap();
        let best = eigen_residual(&g, 1.0).unwrap().residual.min(eigen_residual(&g, -1.0).unwrap().residual);
        if e.is_generalized_gaussian() {
            assert!(best < 1e-8, "{}: {best:e}", e.name);
        } else {
            assert!(best > 1e-2, "{}: {best:e}", e.name);
        }
    }
}

#[test]
fn trace_compatibility_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for q in 1..=3 {
        let spec = GridSpec::standard(q);
        let f = random_signal(spec, &mut rng);
        let g = random_signal(spec, &mut rng);
        let left = continuous_trace_l(&f, &g).unwrap();
        let right = continuous_trace_r(continuous_inner_right(&g, &f).unwrap(), q);
        assert!((left - right).norm() < 1e-8 * left.norm().max(1.0));
    }
}

#[test]
fn corpus_files_parse() {
    let text = "# custom corpus\nwide squeezed 1 width=0.5\nmix mixture 1 n=4 eps=0.1  # trailing\n";
    let entries = parse_corpus(text).unwrap();
    assert_eq!(entries.len(), 2);
    let rows = screen_corpus(&entries, 16.0, 512).unwrap();
    // e^{-pi w x^2} has energy (w + 1/w)/2
    assert!((rows[0].energy - 1.25).abs() < 1e-6);
    assert!(rows[1].excess > 0.0);
}
