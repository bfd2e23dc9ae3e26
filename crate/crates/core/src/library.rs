//! Concept-indexed gesture library, random selection, and retiming.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::concept::ConceptInventory;
use crate::laban::{parse_document, LabanError, LabanScore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: malformed manifest: {message}")]
    Manifest { path: String, message: String },
    #[error("{path}: {source}")]
    Parse { path: String, source: LabanError },
    #[error("{path}: invalid gesture: {message}")]
    InvalidGesture { path: String, message: String },
    #[error("duplicate gesture id {id:?} ({first} and {second})")]
    DuplicateId { id: String, first: String, second: String },
    #[error("concept {0:?} has no gestures")]
    EmptyConcept(String),
    #[error("gesture {gesture:?} is tagged with concept {concept:?}, which is not in the inventory")]
    UnknownTag { gesture: String, concept: String },
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetimeError {
    #[error("target duration must be positive, got {0}")]
    InvalidTarget(f64),
    #[error("invalid scaling clamp [{lo}, {hi}]")]
    InvalidClamp { lo: f64, hi: f64 },
    #[error("retimed score is invalid: {0}")]
    Degenerate(LabanError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gesture {
    id: String,
    concepts: BTreeSet<String>,
    score: LabanScore,
}

impl Gesture {
    pub fn new(
        id: impl Into<String>,
        concepts: impl IntoIterator<Item = String>,
        score: LabanScore,
    ) -> Result<Self, String> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err("gesture id is empty".into());
        }
        let concepts: BTreeSet<String> = concepts.into_iter().collect();
        if concepts.is_empty() {
            return Err(format!("gesture {id:?} has no concepts"));
        }
        if !(score.duration() > 0.0) {
            return Err(format!("gesture {id:?} has non-positive duration"));
        }
        Ok(Self { id, concepts, score })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn concepts(&self) -> &BTreeSet<String> {
        &self.concepts
    }

    pub fn score(&self) -> &LabanScore {
        &self.score
    }

    pub fn nominal_duration(&self) -> f64 {
        self.score.duration()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    gestures: Vec<String>,
}

/// Immutable gesture collection with an index from concept to gesture ids.
/// Each index list is sorted by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GestureLibrary {
    gestures: BTreeMap<String, Gesture>,
    concept_index: BTreeMap<String, Vec<String>>,
}

impl GestureLibrary {
    pub fn from_gestures(gestures: impl IntoIterator<Item = Gesture>) -> Result<Self, LibraryError> {
        let mut map: BTreeMap<String, Gesture> = BTreeMap::new();
        for g in gestures {
            if map.contains_key(&g.id) {
                return Err(LibraryError::DuplicateId {
                    id: g.id.clone(),
                    first: "<memory>".into(),
                    second: "<memory>".into(),
                });
            }
            map.insert(g.id.clone(), g);
        }
        Ok(Self::index(map))
    }

    fn index(gestures: BTreeMap<String, Gesture>) -> Self {
        let mut concept_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        // BTreeMap iteration is already in id order
        for g in gestures.values() {
            for c in &g.concepts {
                concept_index.entry(c.clone()).or_default().push(g.id.clone());
            }
        }
        Self { gestures, concept_index }
    }

    /// Load every gesture listed in a manifest; stops at the first error.
    pub fn load(manifest_path: &Path) -> Result<Self, LibraryError> {
        let (library, mut errors) = Self::load_collecting(manifest_path);
        match errors.is_empty() {
            true => Ok(library),
            false => Err(errors.remove(0)),
        }
    }

    /// Load and check the library covers every concept in `inventory`.
    pub fn load_validated(manifest_path: &Path, inventory: &ConceptInventory) -> Result<Self, LibraryError> {
        let library = Self::load(manifest_path)?;
        library.validate(inventory).into_iter().next().map_or(Ok(library), Err)
    }

    /// Load as much as possible and report every problem found.
    pub fn load_collecting(manifest_path: &Path) -> (Self, Vec<LibraryError>) {
        let mut errors = Vec::new();
        let manifest_name = manifest_path.display().to_string();
        let text = match std::fs::read_to_string(manifest_path) {
            Ok(t) => t,
            Err(e) => {
                errors.push(LibraryError::Io { path: manifest_name, message: e.to_string() });
                return (Self::default(), errors);
            }
        };
        let manifest: Manifest = match serde_json::from_str(&text) {
            Ok(m) => m,
            Err(e) => {
                errors.push(LibraryError::Manifest { path: manifest_name, message: e.to_string() });
                return (Self::default(), errors);
            }
        };
        let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut gestures: BTreeMap<String, Gesture> = BTreeMap::new();
        let mut origins: BTreeMap<String, PathBuf> = BTreeMap::new();
        for entry in &manifest.gestures {
            let path = base.join(entry);
            let shown = path.display().to_string();
            let gesture = std::fs::read_to_string(&path)
                .map_err(|e| LibraryError::Io { path: shown.clone(), message: e.to_string() })
                .and_then(|text| {
                    parse_document(&text)
                        .map_err(|source| LibraryError::Parse { path: shown.clone(), source })
                })
                .and_then(|doc| {
                    Gesture::new(doc.id, doc.concepts, doc.score)
                        .map_err(|message| LibraryError::InvalidGesture { path: shown.clone(), message })
                });
            match gesture {
                Ok(g) => {
                    if let Some(first) = origins.get(&g.id) {
                        errors.push(LibraryError::DuplicateId {
                            id: g.id.clone(),
                            first: first.display().to_string(),
                            second: shown,
                        });
                        continue;
                    }
                    origins.insert(g.id.clone(), path);
                    gestures.insert(g.id.clone(), g);
                }
                Err(e) => errors.push(e),
            }
        }
        (Self::index(gestures), errors)
    }

    /// Problems with respect to an inventory: concepts (including the
    /// fallback) with no gesture, and gestures tagged with unknown concepts.
    pub fn validate(&self, inventory: &ConceptInventory) -> Vec<LibraryError> {
        let mut errors = Vec::new();
        for concept in inventory.concepts() {
            if !self.concept_index.contains_key(concept) {
                errors.push(LibraryError::EmptyConcept(concept.clone()));
            }
        }
        for g in self.gestures.values() {
            for c in &g.concepts {
                if !inventory.contains(c) {
                    errors.push(LibraryError::UnknownTag { gesture: g.id.clone(), concept: c.clone() });
                }
            }
        }
        errors
    }

    pub fn gestures(&self) -> impl Iterator<Item = &Gesture> {
        self.gestures.values()
    }

    pub fn gesture(&self, id: &str) -> Option<&Gesture> {
        self.gestures.get(id)
    }

    pub fn len(&self) -> usize {
        self.gestures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gestures.is_empty()
    }

    pub fn concept_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.concept_index
    }

    pub fn gestures_for(&self, concept: &str) -> Option<&[String]> {
        self.concept_index.get(concept).map(Vec::as_slice)
    }
}

/// Uniformly pick one of the gestures associated with `concept`.
pub fn select_gesture<'a, R: Rng + ?Sized>(
    library: &'a GestureLibrary,
    concept: &str,
    rng: &mut R,
) -> Result<&'a Gesture, LibraryError> {
    let ids = library
        .gestures_for(concept)
        .ok_or_else(|| LibraryError::UnknownConcept(concept.to_string()))?;
    let id = &ids[rng.random_range(0..ids.len())];
    Ok(&library.gestures[id])
}

/// Bounds on the time-scaling factor applied by [`retime`].
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, serde::Serialize)]
pub struct ScaleClamp {
    pub lo: f64,
    pub hi: f64,
}

impl ScaleClamp {
    pub fn new(lo: f64, hi: f64) -> Result<Self, RetimeError> {
        let clamp = Self { lo, hi };
        clamp.check()?;
        Ok(clamp)
    }

    fn check(&self) -> Result<(), RetimeError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi) {
            return Err(RetimeError::InvalidClamp { lo: self.lo, hi: self.hi });
        }
        Ok(())
    }
}

/// Stretch or compress a gesture so its score lasts `target` seconds.
///
/// Without a clamp every keyframe time is scaled by `target / nominal`. With
/// a clamp the factor is limited to `[lo, hi]`; a score that ends up too short
/// holds its final pose until `target`, one that ends up too long is cut at
/// `target` (later keyframes dropped). The result always lasts `target`.
pub fn retime(gesture: &Gesture, target: f64, clamp: Option<ScaleClamp>) -> Result<LabanScore, RetimeError> {
    if !(target.is_finite() && target > 0.0) {
        return Err(RetimeError::InvalidTarget(target));
    }
    if let Some(c) = &clamp {
        c.check()?;
    }
    retime_score(gesture.score(), target, clamp)
}

pub fn retime_score(score: &LabanScore, target: f64, clamp: Option<ScaleClamp>) -> Result<LabanScore, RetimeError> {
    let nominal = score.duration();
    let raw = target / nominal;
    let factor = match clamp {
        Some(c) if raw < c.lo || raw > c.hi => raw.clamp(c.lo, c.hi),
        _ => raw,
    };
    if target == nominal && factor == raw {
        return Ok(score.clone());
    }
    let keyframes = score
        .keyframes()
        .iter()
        .map(|kf| kf.with_time(kf.time() * factor))
        // uniform scaling can overshoot `target` by a rounding step; cut only
        // on a real overshoot from a clamped factor
        .filter(|kf| factor == raw || kf.time() <= target)
        .map(|kf| if kf.time() > target { kf.with_time(target) } else { kf })
        .collect();
    LabanScore::new(keyframes, target).map_err(RetimeError::Degenerate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laban::{BodyColumn, Direction, LabanCell, LabanKeyframe, Level};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn score(times: &[f64], duration: f64) -> LabanScore {
        let kfs = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let level = if i % 2 == 0 { Level::Middle } else { Level::High };
                LabanKeyframe::new(
                    t,
                    BodyColumn::ALL.map(|c| LabanCell::new(c, Direction::Forward, level).unwrap()),
                )
                .unwrap()
            })
            .collect();
        LabanScore::new(kfs, duration).unwrap()
    }

    fn gesture(id: &str, concepts: &[&str], times: &[f64], duration: f64) -> Gesture {
        Gesture::new(id, concepts.iter().map(|c| c.to_string()), score(times, duration)).unwrap()
    }

    #[test]
    fn index_is_the_inversion_of_tags() {
        let lib = GestureLibrary::from_gestures([
            gesture("g2", &["greeting", "farewell"], &[0.0], 1.0),
            gesture("g1", &["greeting"], &[0.0], 1.0),
        ])
        .unwrap();
        assert_eq!(lib.gestures_for("greeting").unwrap(), ["g1", "g2"]);
        assert_eq!(lib.gestures_for("farewell").unwrap(), ["g2"]);
        assert!(lib.gestures_for("cheer").is_none());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = GestureLibrary::from_gestures([
            gesture("g", &["a"], &[0.0], 1.0),
            gesture("g", &["b"], &[0.0], 1.0),
        ]);
        assert!(matches!(err, Err(LibraryError::DuplicateId { .. })));
    }

    #[test]
    fn gesture_invariants() {
        assert!(Gesture::new("g", Vec::<String>::new(), score(&[0.0], 1.0)).is_err());
        assert!(Gesture::new("g", ["a".to_string()], score(&[0.0], 0.0)).is_err());
        assert!(Gesture::new(" ", ["a".to_string()], score(&[0.0], 1.0)).is_err());
    }

    #[test]
    fn singleton_selection() {
        let lib = GestureLibrary::from_gestures([gesture("only", &["stop"], &[0.0], 1.0)]).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(select_gesture(&lib, "stop", &mut rng).unwrap().id(), "only");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_gesture(&lib, "go", &mut rng),
            Err(LibraryError::UnknownConcept(_))
        ));
    }

    #[test]
    fn uniform_scaling() {
        let g = gesture("g", &["a"], &[0.0, 0.5, 1.0, 2.0], 2.0);
        let out = retime(&g, 3.0, None).unwrap();
        let times: Vec<f64> = out.keyframes().iter().map(|k| k.time()).collect();
        assert_eq!(times, vec![0.0, 0.75, 1.5, 3.0]);
        assert_eq!(out.duration(), 3.0);
        assert_eq!(retime(&g, 2.0, None).unwrap(), *g.score());
    }

    #[test]
    fn clamped_hold() {
        let g = gesture("g", &["a"], &[0.0, 1.0, 2.0], 2.0);
        let clamp = ScaleClamp::new(0.5, 2.0).unwrap();
        let out = retime(&g, 10.0, Some(clamp)).unwrap();
        let times: Vec<f64> = out.keyframes().iter().map(|k| k.time()).collect();
        assert_eq!(times, vec![0.0, 2.0, 4.0]);
        assert_eq!(out.duration(), 10.0);
    }

    #[test]
    fn clamped_truncate() {
        let g = gesture("g", &["a"], &[0.0, 1.0, 2.0, 3.0], 4.0);
        let clamp = ScaleClamp::new(0.5, 2.0).unwrap();
        // raw factor 0.25 -> 0.5: times 0, 0.5, 1.0, 1.5 against target 1.0
        let out = retime(&g, 1.0, Some(clamp)).unwrap();
        let times: Vec<f64> = out.keyframes().iter().map(|k| k.time()).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0]);
        assert_eq!(out.duration(), 1.0);
    }

    #[test]
    fn clamp_within_bounds_matches_unclamped() {
        let g = gesture("g", &["a"], &[0.0, 0.7, 1.9], 2.0);
        let clamp = ScaleClamp::new(0.5, 2.0).unwrap();
        assert_eq!(retime(&g, 3.1, Some(clamp)).unwrap(), retime(&g, 3.1, None).unwrap());
    }

    #[test]
    fn retime_errors() {
        let g = gesture("g", &["a"], &[0.0], 1.0);
        assert!(matches!(retime(&g, 0.0, None), Err(RetimeError::InvalidTarget(_))));
        assert!(matches!(retime(&g, -1.0, None), Err(RetimeError::InvalidTarget(_))));
        assert!(matches!(retime(&g, f64::NAN, None), Err(RetimeError::InvalidTarget(_))));
        let bad = ScaleClamp { lo: 0.0, hi: 1.0 };
        assert!(matches!(retime(&g, 1.0, Some(bad)), Err(RetimeError::InvalidClamp { .. })));
        let bad = ScaleClamp { lo: 2.0, hi: 1.0 };
        assert!(matches!(retime(&g, 1.0, Some(bad)), Err(RetimeError::InvalidClamp { .. })));
    }
}
