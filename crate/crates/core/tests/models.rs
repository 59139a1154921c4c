use std::fs;

use manitail_core::dynamics::{forward_kinematics, mass_matrix, KinematicTree};
use manitail_core::models::{QuadrupedSpec, Robot, RobotVariant, TailSpec};

#[test]
fn robot_tree_survives_config_round_trip() {
    for variant in RobotVariant::ALL {
        let robot = Robot::new(variant).unwrap();
        let text = robot.tree.to_config_string().unwrap();
        let parsed = KinematicTree::from_config_str(&text).unwrap();
        assert_eq!(parsed.to_config_string().unwrap(), text);
        let s = robot.nominal_state();
        let a = mass_matrix(&robot.tree, &s).unwrap();
        let b = mass_matrix(&parsed, &s).unwrap();
        assert!((a - b).norm() < 1e-12);
        let fa = forward_kinematics(&robot.tree, &s).unwrap();
        let fb = forward_kinematics(&parsed, &s).unwrap();
        assert_eq!(fa.positions, fb.positions);
    }
}

#[test]
fn robot_files_on_disk_match_embedded_specs() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/robots");
    let quad = QuadrupedSpec::from_file(format!("{root}/minicheetah.cfg").as_ref()).unwrap();
    assert_eq!(quad, QuadrupedSpec::minicheetah());
    let widow = TailSpec::from_file(format!("{root}/widowx250s.cfg").as_ref()).unwrap();
    assert_eq!(widow, TailSpec::widowx250s());
    let viper = TailSpec::from_file(format!("{root}/viperx300s.cfg").as_ref()).unwrap();
    assert_eq!(viper, TailSpec::viperx300s());
}

#[test]
fn include_overrides_robot_fields() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.cfg");
    fs::write(&base, include_str!("../../../configs/robots/widowx250s.cfg")).unwrap();
    let over = dir.path().join("heavy.cfg");
    fs::write(&over, "include = \"base.cfg\"\nmass = 3.0\n").unwrap();
    let spec = TailSpec::from_file(&over).unwrap();
    assert_eq!(spec.mass, 3.0);
    assert_eq!(spec.length, TailSpec::widowx250s().length);
}

#[test]
fn unknown_robot_field_is_rejected() {
    let text = format!("{}\nwingspan = 2.0\n", include_str!("../../../configs/robots/viperx300s.cfg"));
    let err = text.parse::<TailSpec>().unwrap_err();
    assert!(err.to_string().contains("wingspan"), "{err}");
}
