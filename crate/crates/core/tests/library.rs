use std::collections::BTreeMap;
use std::fs;

use gesturechat_core::concept::ConceptInventory;
use gesturechat_core::data;
use gesturechat_core::laban::{parse_document, serialize_score, LabanScore};
use gesturechat_core::library::{
    retime, retime_score, select_gesture, Gesture, GestureLibrary, LibraryError, RetimeError, ScaleClamp,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::arb_score;

fn shipped() -> GestureLibrary {
    GestureLibrary::load(&data::library_manifest()).unwrap()
}

fn gesture(score: LabanScore) -> Gesture {
    Gesture::new("g", ["neutral".to_string()], score).unwrap()
}

const GESTURE_A: &str = r#"{"id": "g1", "concepts": ["greeting"], "duration": 1.0,
  "keyframes": [{"time": 0.0, "cells": {
    "rightUpperArm": {"direction": "place", "level": "low"},
    "rightLowerArm": {"direction": "place", "level": "low"},
    "leftUpperArm": {"direction": "place", "level": "low"},
    "leftLowerArm": {"direction": "place", "level": "low"},
    "head": {"direction": "forward", "level": "middle"}}}]}"#;

#[test]
fn manifest_builds_inverted_index() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("g")).unwrap();
    fs::write(dir.path().join("g/a.json"), GESTURE_A).unwrap();
    let second = GESTURE_A.replace("\"g1\"", "\"g2\"").replace("[\"greeting\"]", "[\"greeting\", \"farewell\"]");
    fs::write(dir.path().join("g/b.json"), second).unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, r#"{"gestures": ["g/b.json", "g/a.json"]}"#).unwrap();

    let library = GestureLibrary::load(&manifest).unwrap();
    let expected: BTreeMap<String, Vec<String>> = [
        ("farewell".to_string(), vec!["g2".to_string()]),
        ("greeting".to_string(), vec!["g1".to_string(), "g2".to_string()]),
    ]
    .into();
    assert_eq!(library.concept_index(), &expected);
}

#[test]
fn missing_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, r#"{"gestures": ["nowhere.json"]}"#).unwrap();
    let err = GestureLibrary::load(&manifest).unwrap_err();
    assert!(matches!(err, LibraryError::Io { .. }));
    assert!(err.to_string().contains("nowhere.json"), "{err}");
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), GESTURE_A).unwrap();
    fs::write(dir.path().join("b.json"), GESTURE_A).unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, r#"{"gestures": ["a.json", "b.json"]}"#).unwrap();
    let (_, errors) = GestureLibrary::load_collecting(&manifest);
    assert!(matches!(&errors[..], [LibraryError::DuplicateId { id, .. }] if id == "g1"));
}

#[test]
fn concept_without_gestures_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), GESTURE_A).unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, r#"{"gestures": ["a.json"]}"#).unwrap();
    let inventory = ConceptInventory::new(vec!["greeting".into(), "neutral".into()], "neutral").unwrap();
    let err = GestureLibrary::load_validated(&manifest, &inventory).unwrap_err();
    assert_eq!(err, LibraryError::EmptyConcept("neutral".into()));
}

#[test]
fn shipped_library_is_clean() {
    let inventory = ConceptInventory::load(&data::inventory()).unwrap();
    let (library, errors) = GestureLibrary::load_collecting(&data::library_manifest());
    assert!(errors.is_empty(), "{errors:?}");
    assert!(library.validate(&inventory).is_empty());
    assert!(library.concept_index().len() >= 24);
    for ids in library.concept_index().values() {
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn shipped_library_round_trips() {
    for g in shipped().gestures() {
        let doc = parse_document(&serialize_score(g.score())).unwrap();
        assert_eq!(&doc.score, g.score(), "{}", g.id());
    }
}

#[test]
fn selection_is_uniform_over_four() {
    let library = shipped();
    let ids = library.gestures_for("greeting").unwrap();
    assert_eq!(ids.len(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    const DRAWS: usize = 10_000;
    for _ in 0..DRAWS {
        *counts.entry(select_gesture(&library, "greeting", &mut rng).unwrap().id()).or_default() += 1;
    }
    assert_eq!(counts.len(), 4);
    for (id, n) in counts {
        let f = n as f64 / DRAWS as f64;
        assert!((0.23..=0.27).contains(&f), "{id}: {f}");
    }
}

#[test]
fn selection_is_deterministic_and_on_concept() {
    let library = shipped();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..50)
            .map(|_| select_gesture(&library, "neutral", &mut rng).unwrap().id().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(3), draw(3));
    for concept in library.concept_index().keys() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(select_gesture(&library, concept, &mut rng).unwrap().concepts().contains(concept));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(
        select_gesture(&library, "farewell_x", &mut rng).unwrap_err(),
        LibraryError::UnknownConcept("farewell_x".into())
    );
}

#[test]
fn singleton_concept_always_selected() {
    let library = shipped();
    let ids = library.gestures_for("apology").unwrap();
    assert_eq!(ids.len(), 1);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        assert_eq!(select_gesture(&library, "apology", &mut rng).unwrap().id(), ids[0]);
    }
}

#[test]
fn clamped_stretch_holds_final_pose() {
    let g = shipped().gesture("greeting_wave_right").unwrap().clone();
    assert_eq!(g.nominal_duration(), 2.0);
    let out = retime(&g, 10.0, Some(ScaleClamp::new(0.5, 2.0).unwrap())).unwrap();
    assert_eq!(out.duration(), 10.0);
    let times: Vec<f64> = out.keyframes().iter().map(|k| k.time()).collect();
    let expected: Vec<f64> = g.score().keyframes().iter().map(|k| k.time() * 2.0).collect();
    assert_eq!(times, expected);
    assert!(*times.last().unwrap() <= 4.0);
}

#[test]
fn invalid_arguments() {
    let g = shipped().gesture("greeting_wave_right").unwrap().clone();
    assert_eq!(retime(&g, 0.0, None), Err(RetimeError::InvalidTarget(0.0)));
    assert_eq!(retime(&g, -1.0, None), Err(RetimeError::InvalidTarget(-1.0)));
    assert!(matches!(retime(&g, 1.0, Some(ScaleClamp { lo: 0.0, hi: 1.0 })), Err(RetimeError::InvalidClamp { .. })));
    assert!(matches!(ScaleClamp::new(2.0, 1.0), Err(RetimeError::InvalidClamp { .. })));
}

proptest! {
    #[test]
    fn retimed_duration_is_target(score in arb_score(), target in 0.05f64..20.0) {
        let g = gesture(score);
        let out = retime(&g, target, None).unwrap();
        prop_assert!((out.duration() - target).abs() < 1e-9);
        let s = target / g.nominal_duration();
        prop_assert_eq!(out.keyframes().len(), g.score().keyframes().len());
        for (a, b) in out.keyframes().iter().zip(g.score().keyframes()) {
            prop_assert_eq!(a.cells(), b.cells());
            prop_assert!((a.time() - b.time() * s).abs() < 1e-9);
        }
    }

    #[test]
    fn retime_to_nominal_is_identity(score in arb_score()) {
        let g = gesture(score);
        prop_assert_eq!(&retime(&g, g.nominal_duration(), None).unwrap(), g.score());
    }

    #[test]
    fn retiming_composes(score in arb_score(), a in 0.05f64..20.0, b in 0.05f64..20.0) {
        let g = gesture(score);
        let twice = retime_score(&retime(&g, a, None).unwrap(), b, None).unwrap();
        let once = retime(&g, b, None).unwrap();
        prop_assert!((twice.duration() - once.duration()).abs() < 1e-9);
        prop_assert_eq!(twice.keyframes().len(), once.keyframes().len());
        for (x, y) in twice.keyframes().iter().zip(once.keyframes()) {
            prop_assert!((x.time() - y.time()).abs() < 1e-9);
            prop_assert_eq!(x.cells(), y.cells());
        }
    }

    #[test]
    fn clamped_retime_holds_or_truncates(
        score in arb_score(),
        target in 0.05f64..20.0,
        lo in 0.1f64..1.0,
        span in 0.0f64..3.0,
    ) {
        let clamp = ScaleClamp::new(lo, lo + span).unwrap();
        let g = gesture(score);
        let out = retime(&g, target, Some(clamp)).unwrap();
        prop_assert!((out.duration() - target).abs() < 1e-9);
        let raw = target / g.nominal_duration();
        let s = raw.max(clamp.lo).min(clamp.hi);
        let expected: Vec<_> = g
            .score()
            .keyframes()
            .iter()
            .map(|k| (k.time() * s, k.cells()))
            .filter(|(t, _)| s == raw || *t <= target)
            .collect();
        prop_assert_eq!(out.keyframes().len(), expected.len());
        for (k, (t, cells)) in out.keyframes().iter().zip(&expected) {
            prop_assert!((k.time() - t.min(target)).abs() < 1e-9);
            prop_assert_eq!(k.cells(), *cells);
        }
        prop_assert!(out.keyframes().windows(2).all(|w| w[0].time() < w[1].time()));
    }
}
