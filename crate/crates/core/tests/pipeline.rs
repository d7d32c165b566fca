use protoseg_core::classify::{fit_lr, lr_classify, nn_classify};
use protoseg_core::eval::{confusion, iou};
use protoseg_core::prototype_bank::build_bank;
use protoseg_core::synth::{generate, Anisotropy, SynthConfig};
use protoseg_core::tensor_io::write_feature_matrix;
use protoseg_core::{FeatureMatrix, PromptManifest};

/// Writes one single-patch grid per prototype and a manifest pointing at them.
fn materialize(scene: &protoseg_core::synth::SynthScene, dir: &std::path::Path) -> std::path::PathBuf {
    let mut manifest: PromptManifest = scene.manifest.clone();
    for (r, row) in scene.bank.prototypes().iter_rows().enumerate() {
        let rel = format!("proto_{r:04}.igft");
        write_feature_matrix(&FeatureMatrix::from_rows(row.len(), [row]).unwrap(), dir.join(&rel)).unwrap();
        manifest.subclasses[scene.bank.subclass_of()[r]].features.push(rel.into());
    }
    let path = dir.join("manifest.json");
    manifest.save(&path).unwrap();
    path
}

#[test]
fn zero_noise_end_to_end_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SynthConfig::new(3, 6, 32, 200);
    cfg.subclasses_per_class = 2;
    let scene = generate(&cfg).unwrap();
    let manifest = PromptManifest::load(materialize(&scene, dir.path())).unwrap();
    let bank = build_bank(&manifest).unwrap();
    assert_eq!(bank.len(), 12);

    let nn = nn_classify(&scene.points, &bank).unwrap().class_labels(bank.ignore_id());
    let report = iou(&confusion(&scene.gt, &nn, 6).unwrap(), None).unwrap();
    assert_eq!(report.miou, 1.0);

    let model = fit_lr(&bank, 1.0).unwrap();
    let lr = lr_classify(&scene.points, &model).unwrap().class_labels(bank.ignore_id());
    let report = iou(&confusion(&scene.gt, &lr, 6).unwrap(), None).unwrap();
    assert_eq!(report.miou, 1.0);
}

fn miou_pair(cfg: &SynthConfig) -> (f64, f64) {
    let scene = generate(cfg).unwrap();
    let k = cfg.classes;
    let nn = nn_classify(&scene.points, &scene.bank).unwrap().class_labels(u32::MAX);
    let model = fit_lr(&scene.bank, 1.0).unwrap();
    let lr = lr_classify(&scene.points, &model).unwrap().class_labels(u32::MAX);
    let m_nn = iou(&confusion(&scene.gt, &nn, k).unwrap(), None).unwrap().miou;
    let m_lr = iou(&confusion(&scene.gt, &lr, k).unwrap(), None).unwrap().miou;
    (m_nn, m_lr)
}

// Frozen from exhaustive nearest-prototype search and gradient-descent
// logistic regression run on the same generated scene.
#[test]
fn anisotropic_scene_regression() {
    let mut cfg = SynthConfig::new(0, 16, 32, 1000);
    cfg.subclasses_per_class = 2;
    cfg.prototypes_per_subclass = 8;
    cfg.noise = 1.2;
    cfg.prototype_noise = Some(0.8);
    cfg.anisotropy = Anisotropy::Uniform { min: 0.5, max: 2.0 };
    let (m_nn, m_lr) = miou_pair(&cfg);
    assert_eq!(m_nn, 0.8156567781887463);
    assert_eq!(m_lr, 0.8898944905437295);
    assert!(m_lr >= m_nn);
}

// Noise level picked so that nearest-prototype accuracy on 16k points lands
// in [0.90, 0.999]; the value is the recorded regression target.
#[test]
fn calibrated_accuracy_regression() {
    let mut cfg = SynthConfig::new(16, 16, 64, 1000);
    cfg.noise = 1.2;
    let scene = generate(&cfg).unwrap();
    let pred = nn_classify(&scene.points, &scene.bank).unwrap();
    let correct = pred.classes.iter().zip(&scene.gt.labels).filter(|(p, g)| p == g).count();
    let acc = correct as f64 / 16_000.0;
    assert!((0.90..=0.999).contains(&acc));
    assert_eq!(acc, 0.956625);
}
