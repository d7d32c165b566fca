use std::path::{Path, PathBuf};

use protoseg_core::classify::{
    concat_banks, concat_features, fit_lr_with, lr_classify, nn_classify, threshold_classify, threshold_retrieve,
    LrObjective, LrOptions, ScoredLabels,
};
use protoseg_core::consistency::{export_pseudolabels, load_sequence, relabel_sequence, VotePolicy};
use protoseg_core::eval::{compare, confusion, iou};
use protoseg_core::prototype_bank::{build_bank as build, tight_crop};
use protoseg_core::tensor_io::{
    read_feature_matrix, read_image, read_labels, write_feature_matrix, write_image, write_labels,
};
use protoseg_core::{Error, FeatureMatrix, LabelArray, LinearClassifier, PromptManifest, PrototypeBank};

use crate::{
    BuildBankArgs, ClassifyArgs, CliError, ConsistArgs, CropArgs, EnsembleArgs, EvalArgs, FitArgs, Mode, Objective,
    Policy, RetrieveArgs,
};

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(Error::io(path, source))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be a positive number, got {v}")))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub(crate) fn build_bank(args: BuildBankArgs) -> Result<(), CliError> {
    let manifest = PromptManifest::load(&args.manifest)?;
    let bank = build(&manifest)?;
    log::info!("built {} prototypes for {} subclasses", bank.len(), bank.num_subclasses());
    bank.save(&args.out)?;
    Ok(())
}

pub(crate) fn fit(args: FitArgs) -> Result<(), CliError> {
    positive("C", args.c)?;
    let bank = PrototypeBank::load(&args.bank)?;
    let opts = LrOptions {
        c: args.c,
        objective: match args.objective {
            Objective::Ovr => LrObjective::OneVsRest,
            Objective::Softmax => LrObjective::Softmax,
        },
        ..LrOptions::default()
    };
    let (model, report) = fit_lr_with(&bank, &opts).map_err(Error::from)?;
    let worst = report.traces.iter().map(|t| t.iterations).max().unwrap_or(0);
    log::info!("fitted {} subclasses, at most {worst} Newton iterations", model.num_subclasses());
    model.save(&args.out)?;
    Ok(())
}

fn write_scored(pred: &ScoredLabels, ignore_id: u32, args: &ClassifyArgs) -> Result<(), CliError> {
    write_labels(&pred.class_labels(ignore_id), &args.out)?;
    if let Some(path) = &args.subclass_out {
        write_labels(&pred.subclass_labels(ignore_id), path)?;
    }
    if let Some(path) = &args.scores_out {
        let scores = FeatureMatrix::new(pred.len(), 1, pred.scores.iter().map(|&s| s as f32).collect())
            .map_err(|e| Error::format(path, e))?;
        write_feature_matrix(&scores, path)?;
    }
    Ok(())
}

pub(crate) fn classify(args: ClassifyArgs) -> Result<(), CliError> {
    let need = |opt: &Option<PathBuf>, mode: &str, flag: &str| {
        opt.clone().ok_or_else(|| usage(format!("--mode {mode} requires --{flag}")))
    };
    if let Some(tau) = args.tau {
        if !tau.is_finite() {
            return Err(usage(format!("--tau must be finite, got {tau}")));
        }
    }
    let (pred, ignore_id) = match args.mode {
        Mode::Lr => {
            let model = LinearClassifier::load(need(&args.model, "lr", "model")?)?;
            let points = read_feature_matrix(&args.points)?;
            (lr_classify(&points, &model).map_err(Error::from)?, model.ignore_id())
        }
        Mode::Nn => {
            let bank = PrototypeBank::load(need(&args.bank, "nn", "bank")?)?;
            let points = read_feature_matrix(&args.points)?;
            (nn_classify(&points, &bank).map_err(Error::from)?, bank.ignore_id())
        }
        Mode::Threshold => {
            let tau = args.tau.ok_or_else(|| usage("--mode threshold requires --tau"))?;
            let bank = PrototypeBank::load(need(&args.bank, "threshold", "bank")?)?;
            let points = read_feature_matrix(&args.points)?;
            let ignore = bank.ignore_id();
            (threshold_classify(&points, &bank, tau, ignore).map_err(Error::from)?, ignore)
        }
    };
    log::info!("labeled {} points", pred.len());
    write_scored(&pred, ignore_id, &args)
}

pub(crate) fn retrieve(args: RetrieveArgs) -> Result<(), CliError> {
    if !args.tau.is_finite() {
        return Err(usage(format!("--tau must be finite, got {}", args.tau)));
    }
    let query: Vec<f32> = match (&args.prototype, &args.bank, args.row) {
        (Some(path), _, _) => {
            let m = read_feature_matrix(path)?;
            if m.rows() != 1 {
                return Err(usage(format!("{}: expected a single prototype row, found {}", path.display(), m.rows())));
            }
            m.row(0).to_vec()
        }
        (None, Some(path), Some(row)) => {
            let bank = PrototypeBank::load(path)?;
            if row >= bank.len() {
                return Err(usage(format!("--row {row} out of range for a bank of {} rows", bank.len())));
            }
            bank.prototypes().row(row).to_vec()
        }
        _ => return Err(usage("retrieve needs --prototype or --bank with --row")),
    };
    let points = read_feature_matrix(&args.points)?;
    let mask = threshold_retrieve(&points, &query, args.tau).map_err(Error::from)?;
    log::info!("retrieved {} of {} points", mask.iter().filter(|&&m| m).count(), mask.len());
    let labels = LabelArray::new(mask.into_iter().map(u32::from).collect(), protoseg_core::DEFAULT_IGNORE_ID);
    write_labels(&labels, &args.out)?;
    Ok(())
}

pub(crate) fn ensemble(args: EnsembleArgs) -> Result<(), CliError> {
    match (is_json(&args.a), is_json(&args.b)) {
        (true, true) => {
            let a = PrototypeBank::load(&args.a)?;
            let b = PrototypeBank::load(&args.b)?;
            concat_banks(&a, &b)?.save(&args.out)?;
        }
        (false, false) => {
            let a = read_feature_matrix(&args.a)?;
            let b = read_feature_matrix(&args.b)?;
            let out = concat_features(&a, &b, args.renorm).map_err(Error::from)?;
            write_feature_matrix(&out, &args.out)?;
        }
        _ => return Err(usage("--a and --b must both be banks (.json) or both feature files")),
    }
    Ok(())
}

pub(crate) fn consist(args: ConsistArgs) -> Result<(), CliError> {
    positive("voxel", args.voxel)?;
    let (manifest, scans) = load_sequence(&args.scans)?;
    let policy = match args.policy {
        Policy::Majority => VotePolicy::Majority,
        Policy::Confidence => VotePolicy::ConfidenceWeighted,
    };
    let relabeled = relabel_sequence(&scans, args.voxel, manifest.ignore_id, policy).map_err(Error::from)?;
    let changed: usize = scans
        .iter()
        .zip(&relabeled)
        .map(|(a, b)| a.labels.labels.iter().zip(&b.labels.labels).filter(|(x, y)| x != y).count())
        .sum();
    log::info!("relabeled {changed} points across {} scans", scans.len());
    create_dir(&args.out)?;
    export_pseudolabels(&relabeled, &args.out)?;
    Ok(())
}

#[derive(serde::Deserialize)]
struct ClassList {
    classes: Vec<String>,
}

pub(crate) fn eval(args: EvalArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.classes).map_err(|e| io_error(&args.classes, e))?;
    let classes: ClassList = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: args.classes.clone(),
        source,
    })?;
    let k = classes.classes.len();
    let gt = read_labels(&args.gt)?;
    let mut reports = Vec::with_capacity(args.pred.len());
    for spec in &args.pred {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) if !n.is_empty() && !p.is_empty() => (n.to_string(), PathBuf::from(p)),
            _ => {
                let p = PathBuf::from(spec);
                let stem = p.file_stem().map_or_else(|| spec.clone(), |s| s.to_string_lossy().into_owned());
                (stem, p)
            }
        };
        let pred = read_labels(&path)?;
        let conf = confusion(&gt, &pred, k).map_err(Error::from)?;
        let report = iou(&conf, Some(&classes.classes)).map_err(Error::from)?;
        log::info!("{name}: mIoU {:.4}", report.miou);
        reports.push((name, report));
    }
    let table = compare(&reports).map_err(Error::from)?;
    print!("{}", table.to_text());
    if let Some(out) = &args.out {
        write_text(out, &table.to_csv())?;
    }
    Ok(())
}

pub(crate) fn crop(args: CropArgs) -> Result<(), CliError> {
    let image = read_image(&args.image)?;
    let cropped = tight_crop(&image, args.white);
    log::info!("{}x{} -> {}x{}", image.width(), image.height(), cropped.width(), cropped.height());
    write_image(&cropped, &args.out)?;
    Ok(())
}
