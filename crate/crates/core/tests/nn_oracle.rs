#[path = "support/fixtures.rs"]
mod fixtures;
#[path = "support/oracles.rs"]
mod oracles;

use protoseg_core::classify::{concat_features, cosine_rows, nn_classify};
use protoseg_core::synth::Xorshift64Star;

#[test]
fn random_scenes_match_exhaustive_search() {
    let mut rng = Xorshift64Star::new(99);
    for scene in 0..10 {
        let n = 100 + rng.below(9_901) as usize;
        let p = 5 + rng.below(64) as usize;
        let d = 8 + rng.below(57) as usize;
        let (points, bank) = fixtures::nn_tie_scene(&mut rng, n, p, d);
        let got = nn_classify(&points, &bank).unwrap();
        let expect = oracles::nn_exhaustive(&points, &bank);
        for (i, (s, c)) in expect.iter().enumerate() {
            assert_eq!((got.subclasses[i], got.classes[i]), (*s, *c), "scene {scene}, point {i}");
        }
    }
}

#[test]
fn concatenated_cosine_is_mean_of_parts() {
    let mut rng = Xorshift64Star::new(5);
    let a1 = oracles::random_unit_rows(&mut rng, 1000, 32);
    let a2 = oracles::random_unit_rows(&mut rng, 1000, 32);
    let b1 = oracles::random_unit_rows(&mut rng, 1000, 48);
    let b2 = oracles::random_unit_rows(&mut rng, 1000, 48);
    let x = concat_features(&a1, &b1, true).unwrap();
    let y = concat_features(&a2, &b2, true).unwrap();
    for i in 0..1000 {
        let expect = 0.5 * (cosine_rows(a1.row(i), a2.row(i)) + cosine_rows(b1.row(i), b2.row(i)));
        assert!((cosine_rows(x.row(i), y.row(i)) - expect).abs() < 1e-6);
    }
}
