//! Fixtures for the criterion benchmarks.

use protoseg_core::synth::{generate, generate_sequence, SynthConfig, SynthScene, SynthSequence};

/// Scene with a 68-row bank in 1024 dims (34 subclasses, two prototypes each)
/// and `points_per_class` points for each of the 34 classes.
pub fn large_bank_scene(points_per_class: usize) -> SynthScene {
    let mut cfg = SynthConfig::new(7, 34, 1024, points_per_class);
    cfg.prototypes_per_subclass = 2;
    cfg.noise = 0.5;
    generate(&cfg).expect("benchmark scene")
}

/// Five scans of `points_per_scan` points each with 30% flipped labels.
pub fn noisy_sequence(points_per_scan: usize) -> SynthSequence {
    let mut cfg = SynthConfig::new(11, 10, 4, 1);
    cfg.points_per_scan = points_per_scan;
    cfg.scans = 5;
    cfg.flip_rate = 0.3;
    cfg.extent = 40.0;
    generate_sequence(&cfg).expect("benchmark sequence")
}
