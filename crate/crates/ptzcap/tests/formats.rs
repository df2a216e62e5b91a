use ptzcap::config::ConfigFile;
use ptzcap::error::FormatError;
use ptzcap::formats::cameras::{read_rig, write_rig};
use ptzcap::formats::correspondences::{read_correspondences, write_correspondences};
use ptzcap::formats::deltas::{read_deltas, write_deltas};
use ptzcap::formats::observations::ObservationFile;
use ptzcap::formats::trajectory::TrajectoryFile;
use ptzcap::skeleton_file::{parse_skeleton, render_skeleton};
use ptzcap_core::skeleton::SkeletonModel;
use ptzcap_core::synth::{generate_scene_with, SynthConfig, SyntheticScene};

fn noisy_scene() -> SyntheticScene {
    generate_scene_with(&SynthConfig {
        n_cameras: 3,
        n_frames: 12,
        noise_px: 1.3,
        dropout_rate: 0.1,
        outlier_rate: 0.05,
        background_noise_px: 0.7,
        background_outlier_rate: 0.1,
        seed: 21,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn bytes(write: impl FnOnce(&mut Vec<u8>)) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf);
    buf
}

#[test]
fn observations_round_trip() {
    let s = noisy_scene();
    let file = ObservationFile::new(s.skeleton.joint_names().to_vec(), s.observations.clone());
    let buf = bytes(|b| file.write(b).unwrap());
    let back = ObservationFile::read(buf.as_slice()).unwrap();
    assert_eq!(back.set, s.observations);
    assert_eq!(back.joints, file.joints);
    assert!(back.gaps.is_empty());
}

#[test]
fn missing_observation_records_are_reported_as_gaps() {
    let s = noisy_scene();
    let file = ObservationFile::new(s.skeleton.joint_names().to_vec(), s.observations.clone());
    let text = String::from_utf8(bytes(|b| file.write(b).unwrap())).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.contains("\"camera_id\":1,\"frame\":4,")).collect();
    assert_eq!(kept.len(), text.lines().count() - 1);
    let back = ObservationFile::read(kept.join("\n").as_bytes()).unwrap();
    assert_eq!(back.gaps, vec![(1, 4)]);
}

#[test]
fn rigs_round_trip() {
    let s = noisy_scene();
    for rig in [s.rig.clone(), s.uncalibrated_rig()] {
        let buf = bytes(|b| write_rig(&rig, b).unwrap());
        assert_eq!(read_rig(buf.as_slice()).unwrap(), rig);
    }
}

#[test]
fn correspondences_and_deltas_round_trip() {
    let s = noisy_scene();
    let buf = bytes(|b| write_correspondences(&s.correspondences, b).unwrap());
    assert_eq!(read_correspondences(buf.as_slice()).unwrap(), s.correspondences);
    let buf = bytes(|b| write_deltas(&s.gt_deltas, b).unwrap());
    assert_eq!(read_deltas(buf.as_slice()).unwrap(), s.gt_deltas);
}

#[test]
fn trajectories_round_trip() {
    let s = noisy_scene();
    for rotations in [None, Some(s.gt_rotation_tracks.clone())] {
        let file = TrajectoryFile {
            joints: s.skeleton.joint_names().to_vec(),
            trajectory: s.gt_trajectory.clone(),
            rotations,
        };
        let buf = bytes(|b| file.write(b).unwrap());
        assert_eq!(TrajectoryFile::read(buf.as_slice()).unwrap(), file);
    }
}

#[test]
fn skeleton_round_trip() {
    let skel = SkeletonModel::default_skier();
    let text = render_skeleton(&skel);
    assert_eq!(parse_skeleton(&text).unwrap(), skel);
}

#[test]
fn skeleton_errors_are_reported() {
    let bad = "joints = [\"a\", \"b\"]\nlimbs = [[\"a\", \"c\"]]\n[lengths_m]\n\"a/c\" = 1.0\n[com_weights]\na = 1.0\n";
    assert!(matches!(parse_skeleton(bad), Err(FormatError::Toml(msg)) if msg.contains("`c`")));
    let no_slash = "joints = [\"a\", \"b\"]\nlimbs = [[\"a\", \"b\"]]\n[lengths_m]\nab = 1.0\n[com_weights]\na = 1.0\n";
    assert!(parse_skeleton(no_slash).is_err());
}

#[test]
fn headers_are_checked() {
    let s = noisy_scene();
    let deltas = String::from_utf8(bytes(|b| write_deltas(&s.gt_deltas, b).unwrap())).unwrap();
    assert!(matches!(read_rig(deltas.as_bytes()), Err(FormatError::WrongFormat { .. })));
    let future = deltas.replacen("\"version\":1", "\"version\":99", 1);
    assert!(matches!(read_deltas(future.as_bytes()), Err(FormatError::UnsupportedVersion(99))));
    assert!(matches!(read_deltas(&b""[..]), Err(FormatError::MissingHeader)));
}

#[test]
fn non_rotations_are_rejected() {
    let s = noisy_scene();
    let text = String::from_utf8(bytes(|b| write_deltas(&s.gt_deltas, b).unwrap())).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let start = lines[1].find("\"R\":[").unwrap() + 5;
    lines[1].insert_str(start, "2.0,0,0,0,1,0,0,0,1],\"x\":[");
    let err = read_deltas(lines.join("\n").as_bytes()).unwrap_err();
    assert!(matches!(err, FormatError::Invalid { line: 2, .. }), "{err}");
}

#[test]
fn duplicate_records_are_rejected() {
    let s = noisy_scene();
    let file = ObservationFile::new(s.skeleton.joint_names().to_vec(), s.observations.clone());
    let text = String::from_utf8(bytes(|b| file.write(b).unwrap())).unwrap();
    let second = text.lines().nth(1).unwrap();
    let doubled = format!("{text}{second}\n");
    assert!(ObservationFile::read(doubled.as_bytes()).is_err());
}

#[test]
fn config_sections_apply() {
    let cfg = ConfigFile::parse("[solver]\nouter_iters = 7\n[weights]\nlambda_rot = 2.5\n[ransac]\nseed = 3\n").unwrap();
    let mut solver = ptzcap_core::solver::SolverConfig::calibrated();
    cfg.solver.apply(&mut solver);
    assert_eq!(solver.outer_iters, 7);
    let mut w = ptzcap_core::energy::EnergyWeights::uncalibrated();
    cfg.weights.apply(&mut w);
    assert_eq!(w.lambda_rot, 2.5);
    assert_eq!(w.lambda_rep, 500.0);
    assert!(ConfigFile::parse("[solver]\nunknown = 1\n").is_err());
}
