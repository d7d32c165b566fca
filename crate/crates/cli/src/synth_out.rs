//! Layout written by `protoseg synth --out DIR`:
//!
//! ```text
//! DIR/manifest.json            prompt manifest, one feature grid per prototype
//! DIR/prototypes/pNNNN.igft    1 × D grid of prototype row NNNN
//! DIR/points.igft              N × D point features
//! DIR/gt.igl                   class ground truth
//! DIR/gt_subclass.igl          subclass ground truth
//! DIR/sequence.json            scan sequence manifest (input of `consist`)
//! DIR/sequence.poses           one pose per scan
//! DIR/scans/ID.points.igft     sensor-frame positions
//! DIR/scans/ID.labels.igl      corrupted labels
//! DIR/scans/ID.clean.igl       clean labels
//! ```

use std::path::PathBuf;

use protoseg_core::consistency::{ScanEntry, SequenceManifest};
use protoseg_core::synth::{generate, generate_sequence, SynthConfig};
use protoseg_core::tensor_io::{write_feature_matrix, write_labels, write_poses};
use protoseg_core::{Error, FeatureMatrix, LabelArray, DEFAULT_IGNORE_ID};

use crate::commands::{create_dir, io_error, write_text};
use crate::{CliError, SynthArgs};

pub(crate) fn run(args: SynthArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_error(&args.config, e))?;
    let config: SynthConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: args.config.clone(),
        source,
    })?;
    let scene = generate(&config).map_err(Error::from)?;
    let sequence = generate_sequence(&config).map_err(Error::from)?;
    let out = &args.out;
    create_dir(&out.join("prototypes"))?;
    create_dir(&out.join("scans"))?;

    let mut manifest = scene.manifest.clone();
    let dims = scene.bank.dims();
    for (r, row) in scene.bank.prototypes().iter_rows().enumerate() {
        let rel = PathBuf::from(format!("prototypes/p{r:04}.igft"));
        let grid = FeatureMatrix::new(1, dims, row.to_vec()).expect("prototype rows are finite");
        write_feature_matrix(&grid, out.join(&rel))?;
        manifest.subclasses[scene.bank.subclass_of()[r]].features.push(rel);
    }
    write_text(&out.join("manifest.json"), &(manifest.to_json() + "\n"))?;
    write_feature_matrix(&scene.points, out.join("points.igft"))?;
    write_labels(&scene.gt, out.join("gt.igl"))?;
    write_labels(&LabelArray::new(scene.gt_subclass.clone(), DEFAULT_IGNORE_ID), out.join("gt_subclass.igl"))?;

    let mut entries = Vec::with_capacity(sequence.scans.len());
    for (s, scan) in sequence.scans.iter().enumerate() {
        let points = PathBuf::from(format!("scans/{}.points.igft", scan.id));
        let labels = PathBuf::from(format!("scans/{}.labels.igl", scan.id));
        let data: Vec<f32> = scan.positions.iter().flat_map(|p| p.map(|v| v as f32)).collect();
        let positions = FeatureMatrix::new(scan.len(), 3, data).expect("positions are finite");
        write_feature_matrix(&positions, out.join(&points))?;
        write_labels(&scan.labels, out.join(&labels))?;
        write_labels(&sequence.clean[s], out.join(format!("scans/{}.clean.igl", scan.id)))?;
        entries.push(ScanEntry {
            id: scan.id.clone(),
            points,
            labels,
            pose: s,
            confidence: None,
        });
    }
    let poses: Vec<_> = sequence.scans.iter().map(|s| s.pose).collect();
    write_poses(&poses, out.join("sequence.poses"))?;
    let seq_manifest = SequenceManifest {
        poses: "sequence.poses".into(),
        ignore_id: DEFAULT_IGNORE_ID,
        scans: entries,
    };
    let json = serde_json::to_string_pretty(&seq_manifest).expect("sequence manifest serializes") + "\n";
    write_text(&out.join("sequence.json"), &json)?;
    log::info!(
        "wrote {} prototypes, {} points, {} scans to {}",
        scene.bank.len(),
        scene.points.rows(),
        sequence.scans.len(),
        out.display()
    );
    Ok(())
}
