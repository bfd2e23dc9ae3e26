use std::collections::BTreeMap;
use std::f64::consts::PI;

use gesturechat_core::data;
use gesturechat_core::laban::{
    decode, decode_with_warnings, direction_to_vector, legal_symbols, parse_score, serialize_score,
    BodyColumn, Direction, LabanCell, LabanKeyframe, LabanScore, Level, RobotModel,
};
use proptest::prelude::*;

mod common;
use common::arb_score;

/// Independent spherical-coordinate oracle: compass heading and elevation in
/// degrees, converted with sin/cos.
fn oracle_vector(direction: Direction, level: Level) -> [f64; 3] {
    let heading = match direction {
        Direction::Forward | Direction::Place => 0.0,
        Direction::RightForward => 45.0,
        Direction::Right => 90.0,
        Direction::RightBack => 135.0,
        Direction::Back => 180.0,
        Direction::LeftBack => -135.0,
        Direction::Left => -90.0,
        Direction::LeftForward => -45.0,
    };
    let elevation = match (direction, level) {
        (Direction::Place, Level::High) => 90.0,
        (Direction::Place, Level::Low) => -90.0,
        (_, Level::High) => 45.0,
        (_, Level::Middle) => 0.0,
        (_, Level::Low) => -45.0,
    };
    let (h, e) = (f64::to_radians(heading), f64::to_radians(elevation));
    [h.sin() * e.cos(), h.cos() * e.cos(), e.sin()]
}

fn generic() -> RobotModel {
    RobotModel::load(&data::generic_robot()).unwrap()
}

fn desk_bot() -> RobotModel {
    RobotModel::load(&data::data_dir().join("robots/desk_bot.json")).unwrap()
}

fn uniform_pose(direction: Direction, level: Level) -> Vec<LabanCell> {
    BodyColumn::ALL.iter().map(|&c| LabanCell::new(c, direction, level).unwrap()).collect()
}

fn wrapped_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[test]
fn vectors_match_spherical_oracle() {
    let mut count = 0;
    for (d, l) in legal_symbols() {
        let v = direction_to_vector(d, l).unwrap();
        let o = oracle_vector(d, l);
        assert!((v.x - o[0]).abs() < 1e-9 && (v.y - o[1]).abs() < 1e-9 && (v.z - o[2]).abs() < 1e-9, "{d} {l}");
        assert!((v.norm() - 1.0).abs() < 1e-9);
        count += 1;
    }
    assert_eq!(count, 26);
}

#[test]
fn reference_decodes() {
    let score = LabanScore::new(
        vec![LabanKeyframe::new(0.0, uniform_pose(Direction::Forward, Level::Middle)).unwrap()],
        1.0,
    )
    .unwrap();
    let tl = decode(&score, &generic()).unwrap();
    assert!(tl.keyframes()[0].angles.values().all(|&a| a == 0.0));
    assert_eq!(tl.duration(), 1.0);

    let mut cells = uniform_pose(Direction::Forward, Level::Middle);
    cells[0] = LabanCell::new(BodyColumn::RightUpperArm, Direction::Right, Level::Middle).unwrap();
    let score = LabanScore::new(vec![LabanKeyframe::new(0.0, cells).unwrap()], 1.0).unwrap();
    let tl = decode(&score, &generic()).unwrap();
    let angles = &tl.keyframes()[0].angles;
    assert!((angles["right_shoulder_azimuth"] - PI / 2.0).abs() < 1e-12);
    assert_eq!(angles["right_shoulder_elevation"], 0.0);
    assert!((angles["right_elbow_flexion"] - PI / 2.0).abs() < 1e-12);
}

#[test]
fn every_legal_upper_arm_cell_matches_oracle() {
    let model = generic();
    for (d, l) in legal_symbols() {
        let mut cells = uniform_pose(Direction::Forward, Level::Middle);
        cells[0] = LabanCell::new(BodyColumn::RightUpperArm, d, l).unwrap();
        let score = LabanScore::new(vec![LabanKeyframe::new(0.0, cells).unwrap()], 0.5).unwrap();
        let tl = decode(&score, &model).unwrap();
        let angles = &tl.keyframes()[0].angles;

        let o = oracle_vector(d, l);
        let azimuth = o[0].atan2(o[1]);
        let elevation = o[2].asin();
        // lower arm points forward: (0, 1, 0)
        let elbow = o[1].clamp(-1.0, 1.0).acos();
        assert!(wrapped_diff(angles["right_shoulder_azimuth"], azimuth) < 1e-9, "{d} {l}");
        assert!((angles["right_shoulder_elevation"] - elevation).abs() < 1e-9, "{d} {l}");
        assert!((angles["right_elbow_flexion"] - elbow).abs() < 1e-9, "{d} {l}");
        assert_eq!(angles["left_shoulder_azimuth"], 0.0);
        assert_eq!(angles["head_pitch"], 0.0);
    }
}

#[test]
fn held_columns_carry_forward() {
    let raise = LabanCell::new(BodyColumn::RightUpperArm, Direction::Place, Level::High).unwrap();
    let score = LabanScore::new(
        vec![
            LabanKeyframe::new(0.0, uniform_pose(Direction::Forward, Level::Middle)).unwrap(),
            LabanKeyframe::new(1.0, [raise]).unwrap(),
        ],
        2.0,
    )
    .unwrap();
    let tl = decode(&score, &generic()).unwrap();
    let second = &tl.keyframes()[1].angles;
    assert!((second["right_shoulder_elevation"] - PI / 2.0).abs() < 1e-12);
    // forward lower arm against a vertical upper arm
    assert!((second["right_elbow_flexion"] - PI / 2.0).abs() < 1e-12);
    assert_eq!(second["left_shoulder_elevation"], 0.0);
}

#[test]
fn clamping_reports_warnings() {
    let score = LabanScore::new(
        vec![LabanKeyframe::new(0.0, uniform_pose(Direction::Back, Level::High)).unwrap()],
        1.0,
    )
    .unwrap();
    let model = desk_bot();
    let (tl, warnings) = decode_with_warnings(&score, &model).unwrap();
    assert!(!warnings.is_empty());
    let angles = &tl.keyframes()[0].angles;
    assert_eq!(angles["right_shoulder_azimuth"], PI / 2.0);
    assert_eq!(angles["head_yaw"], PI / 3.0);
    // joints no column drives sit at their neutral value
    assert_eq!(angles["base_yaw"], 0.0);
}

#[test]
fn model_without_a_column_is_a_mismatch() {
    let text = std::fs::read_to_string(data::generic_robot()).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["columnJointMap"].as_object_mut().unwrap().remove("head");
    let model = RobotModel::from_json(&value.to_string()).unwrap();
    let score = LabanScore::new(
        vec![LabanKeyframe::new(0.0, uniform_pose(Direction::Forward, Level::Middle)).unwrap()],
        1.0,
    )
    .unwrap();
    let err = decode(&score, &model).unwrap_err();
    assert!(err.to_string().contains("head"), "{err}");
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(score in arb_score()) {
        prop_assert_eq!(parse_score(&serialize_score(&score)).unwrap(), score);
    }

    #[test]
    fn decoded_angles_respect_limits(score in arb_score()) {
        for model in [generic(), desk_bot()] {
            let tl = decode(&score, &model).unwrap();
            prop_assert_eq!(tl.keyframes().len(), score.keyframes().len());
            prop_assert_eq!(tl.duration(), score.duration());
            for (kf, src) in tl.keyframes().iter().zip(score.keyframes()) {
                prop_assert_eq!(kf.time, src.time());
                prop_assert_eq!(kf.angles.len(), model.joints().len());
                for joint in model.joints() {
                    let a = kf.angles[&joint.name];
                    prop_assert!(a >= joint.min && a <= joint.max, "{} = {}", joint.name, a);
                }
            }
        }
    }

    #[test]
    fn sampling_is_lipschitz(score in arb_score(), u in 0.0f64..1.0, eps in 1e-6f64..1e-2) {
        let tl = decode(&score, &generic()).unwrap();
        let kfs = tl.keyframes();
        let mut slope: BTreeMap<&str, f64> = BTreeMap::new();
        for pair in kfs.windows(2) {
            let dt = pair[1].time - pair[0].time;
            for (joint, a) in &pair[0].angles {
                let s = (pair[1].angles[joint] - a).abs() / dt;
                let e = slope.entry(joint.as_str()).or_insert(0.0);
                *e = e.max(s);
            }
        }
        let t = u * (tl.duration() - eps).max(0.0);
        let t2 = (t + eps).min(tl.duration());
        let a = tl.sample(t).unwrap();
        let b = tl.sample(t2).unwrap();
        for (joint, va) in &a {
            let bound = slope.get(joint.as_str()).copied().unwrap_or(0.0) * (t2 - t) + 1e-12;
            prop_assert!((b[joint] - va).abs() <= bound, "{}: {} vs {}", joint, (b[joint] - va).abs(), bound);
        }
    }

    #[test]
    fn samples_at_keyframes_are_exact(score in arb_score()) {
        let tl = decode(&score, &generic()).unwrap();
        for kf in tl.keyframes() {
            prop_assert_eq!(&tl.sample(kf.time).unwrap(), &kf.angles);
        }
    }

    #[test]
    fn mirrored_scores_mirror_angles(score in arb_score()) {
        let model = generic();
        let original = decode(&score, &model).unwrap();
        let mirrored = decode(&score.mirrored(), &model).unwrap();
        for (o, m) in original.keyframes().iter().zip(mirrored.keyframes()) {
            for (a, b) in [("right", "left"), ("left", "right")] {
                let az = |side: &str| format!("{side}_shoulder_azimuth");
                let el = |side: &str| format!("{side}_shoulder_elevation");
                let elbow = |side: &str| format!("{side}_elbow_flexion");
                prop_assert!(wrapped_diff(m.angles[&az(a)], -o.angles[&az(b)]) < 1e-9);
                prop_assert!((m.angles[&el(a)] - o.angles[&el(b)]).abs() < 1e-9);
                prop_assert!((m.angles[&elbow(a)] - o.angles[&elbow(b)]).abs() < 1e-9);
            }
            prop_assert!(wrapped_diff(m.angles["head_yaw"], -o.angles["head_yaw"]) < 1e-9);
            prop_assert!((m.angles["head_pitch"] - o.angles["head_pitch"]).abs() < 1e-9);
        }
    }
}
