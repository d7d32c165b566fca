#[path = "support/fixtures.rs"]
mod fixtures;

use protoseg_core::synth::Xorshift64Star;
use protoseg_core::tensor_io::{
    read_feature_matrix, read_labels, read_poses, write_feature_matrix, write_labels, write_poses,
};
use protoseg_core::ErrorCategory;

#[test]
fn files_round_trip_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Xorshift64Star::new(31337);
    for round in 0..100 {
        let (a, b) = (dir.path().join(format!("a{round}.igft")), dir.path().join(format!("b{round}.igft")));
        let m = fixtures::random_matrix(&mut rng);
        write_feature_matrix(&m, &a).unwrap();
        let back = read_feature_matrix(&a).unwrap();
        assert_eq!(back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        write_feature_matrix(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "igft round {round}");

        let (a, b) = (dir.path().join(format!("a{round}.igl")), dir.path().join(format!("b{round}.igl")));
        let l = fixtures::random_labels(&mut rng);
        write_labels(&l, &a).unwrap();
        let back = read_labels(&a).unwrap();
        assert_eq!(back, l);
        write_labels(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "igl round {round}");

        let (a, b) = (dir.path().join(format!("a{round}.poses")), dir.path().join(format!("b{round}.poses")));
        let p = fixtures::random_poses(&mut rng);
        write_poses(&p, &a).unwrap();
        let back = read_poses(&a).unwrap();
        assert_eq!(back, p);
        write_poses(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "poses round {round}");
    }
}

#[test]
fn corrupt_fixtures_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, ext, bytes) in fixtures::corrupt_fixtures() {
        let path = dir.path().join(format!("{name}.{ext}"));
        std::fs::write(&path, bytes).unwrap();
        let err = match ext {
            "igft" => read_feature_matrix(&path).err(),
            "igl" => read_labels(&path).err(),
            _ => read_poses(&path).err(),
        };
        let err = err.unwrap_or_else(|| panic!("{name} was accepted"));
        assert_eq!(err.category(), ErrorCategory::Format, "{name}: {err}");
        assert!(err.to_string().contains(name), "{name}: message should name the file: {err}");
    }
}
