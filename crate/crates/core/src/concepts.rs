//! Per-image visual concepts (objects, scenes, actions) and the rules that
//! pick a single concept out of an image for a question.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entity::EntityId;
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VisualConceptKind {
    Object,
    Scene,
    Action,
}

impl VisualConceptKind {
    pub const ALL: [VisualConceptKind; 3] = [
        VisualConceptKind::Object,
        VisualConceptKind::Scene,
        VisualConceptKind::Action,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VisualConceptKind::Object => "Object",
            VisualConceptKind::Scene => "Scene",
            VisualConceptKind::Action => "Action",
        }
    }
}

impl fmt::Display for VisualConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VisualConceptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VisualConceptKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown visual concept kind {s:?}")))
    }
}

/// Axis-aligned box in pixels; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn fits(&self, width: f64, height: f64) -> bool {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        finite
            && self.w > 0.0
            && self.h > 0.0
            && self.x >= 0.0
            && self.y >= 0.0
            && self.x + self.w <= width
            && self.y + self.h <= height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualConceptInstance {
    pub label: EntityId,
    pub kind: VisualConceptKind,
    pub confidence: f64,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub concepts: Vec<VisualConceptInstance>,
}

impl ImageAnnotation {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Annotation {
            image_id: self.image_id.clone(),
            message,
        };
        if self.image_id.is_empty() {
            return Err(fail("empty image_id".into()));
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(fail(format!("bad image size {}x{}", self.width, self.height)));
        }
        for c in &self.concepts {
            if c.label.is_empty() {
                return Err(fail("concept with empty label".into()));
            }
            if !(0.0..=1.0).contains(&c.confidence) {
                return Err(fail(format!(
                    "confidence {} of {} outside [0, 1]",
                    c.confidence, c.label
                )));
            }
            if let Some(b) = &c.bbox {
                if c.kind != VisualConceptKind::Object {
                    return Err(fail(format!("{} concept {} has a box", c.kind, c.label)));
                }
                if !b.fits(self.width, self.height) {
                    return Err(fail(format!("box of {} is empty or outside the image", c.label)));
                }
            }
        }
        Ok(())
    }

    pub fn concepts_of(&self, kind: VisualConceptKind) -> impl Iterator<Item = &VisualConceptInstance> {
        self.concepts.iter().filter(move |c| c.kind == kind)
    }
}

/// All annotations of a collection, keyed by image id.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    images: Vec<ImageAnnotation>,
    index: std::collections::HashMap<String, usize>,
}

impl AnnotationSet {
    pub fn new(images: Vec<ImageAnnotation>) -> Result<Self> {
        let mut index = std::collections::HashMap::with_capacity(images.len());
        for (i, a) in images.iter().enumerate() {
            a.validate()?;
            if index.insert(a.image_id.clone(), i).is_some() {
                return Err(Error::Annotation {
                    image_id: a.image_id.clone(),
                    message: "duplicate image_id".into(),
                });
            }
        }
        Ok(AnnotationSet { images, index })
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageAnnotation> {
        self.index.get(image_id).map(|&i| &self.images[i])
    }

    pub fn images(&self) -> &[ImageAnnotation] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Read a JSON Lines annotation file. Any invalid record aborts with its image id.
pub fn ingest_annotations(path: &Path) -> Result<AnnotationSet> {
    let records = jsonl::read_strict::<ImageAnnotation>(path)?;
    AnnotationSet::new(records.into_iter().map(|(_, a)| a).collect())
}

/// The highest-confidence scene or action; ties go to the smaller canonical label.
pub fn top_concept(
    annotation: &ImageAnnotation,
    kind: VisualConceptKind,
) -> Result<&VisualConceptInstance> {
    annotation
        .concepts_of(kind)
        .min_by(|a, b| {
            b.confidence
                .total_cmp(&a.confidence)
                .then_with(|| a.label.cmp(&b.label))
        })
        .ok_or_else(|| Error::NoConceptOfKind {
            image_id: annotation.image_id.clone(),
            kind: kind.name().to_lowercase(),
        })
}

/// Location and size keywords that pick one object out of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cue {
    Top,
    Bottom,
    Left,
    Right,
    Center,
    Small,
    Large,
}

impl Cue {
    /// Priority order when a question carries several cues.
    pub const ALL: [Cue; 7] = [
        Cue::Top,
        Cue::Bottom,
        Cue::Left,
        Cue::Right,
        Cue::Center,
        Cue::Small,
        Cue::Large,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Cue::Top => "top",
            Cue::Bottom => "bottom",
            Cue::Left => "left",
            Cue::Right => "right",
            Cue::Center => "center",
            Cue::Small => "small",
            Cue::Large => "large",
        }
    }

    /// Cues present in a tokenized question. A token carries a cue when it
    /// starts with the cue keyword, so `leftmost` and `largest` count but
    /// `laptop` does not.
    pub fn parse_tokens<S: AsRef<str>>(tokens: &[S]) -> HashSet<Cue> {
        Cue::ALL
            .into_iter()
            .filter(|cue| tokens.iter().any(|t| t.as_ref().starts_with(cue.keyword())))
            .collect()
    }
}

/// Pick the object a question refers to. The first cue in [`Cue::ALL`] order
/// that is present decides; without cues the most confident boxed object wins.
/// Ties go to the higher confidence, then the smaller label.
pub fn select_object<'a>(
    annotation: &'a ImageAnnotation,
    cues: &HashSet<Cue>,
) -> Result<&'a VisualConceptInstance> {
    let cue = Cue::ALL.into_iter().find(|c| cues.contains(c));
    let (cx, cy) = (annotation.width / 2.0, annotation.height / 2.0);
    // Smaller key is better.
    let key = |c: &VisualConceptInstance| -> f64 {
        let b = c.bbox.as_ref().expect("filtered to boxed objects");
        let (x, y) = b.center();
        match cue {
            Some(Cue::Top) => y,
            Some(Cue::Bottom) => -y,
            Some(Cue::Left) => x,
            Some(Cue::Right) => -x,
            Some(Cue::Center) => (x - cx).hypot(y - cy),
            Some(Cue::Small) => b.area(),
            Some(Cue::Large) => -b.area(),
            None => -c.confidence,
        }
    };
    annotation
        .concepts_of(VisualConceptKind::Object)
        .filter(|c| c.bbox.is_some())
        .min_by(|a, b| {
            key(a)
                .total_cmp(&key(b))
                .then_with(|| b.confidence.total_cmp(&a.confidence))
                .then_with(|| a.label.cmp(&b.label))
        })
        .ok_or_else(|| Error::NoBoxedObjects(annotation.image_id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn concept(label: &str, kind: VisualConceptKind, conf: f64) -> VisualConceptInstance {
        VisualConceptInstance {
            label: EntityId::new(label),
            kind,
            confidence: conf,
            bbox: None,
        }
    }

    fn object(label: &str, conf: f64, x: f64, y: f64, w: f64, h: f64) -> VisualConceptInstance {
        VisualConceptInstance {
            bbox: Some(BoundingBox { x, y, w, h }),
            ..concept(label, VisualConceptKind::Object, conf)
        }
    }

    fn image(concepts: Vec<VisualConceptInstance>) -> ImageAnnotation {
        ImageAnnotation {
            image_id: "img".into(),
            width: 640.0,
            height: 480.0,
            concepts,
        }
    }

    #[test]
    fn top_scene_by_confidence() {
        let a = image(vec![
            concept("kitchen", VisualConceptKind::Scene, 0.8),
            concept("bathroom", VisualConceptKind::Scene, 0.3),
        ]);
        assert_eq!(top_concept(&a, VisualConceptKind::Scene).unwrap().label.canonical(), "kitchen");
    }

    #[test]
    fn top_action_singleton() {
        let a = image(vec![concept("cooking", VisualConceptKind::Action, 0.5)]);
        assert_eq!(top_concept(&a, VisualConceptKind::Action).unwrap().label.canonical(), "cooking");
    }

    #[test]
    fn top_scene_tie_is_lexicographic() {
        let a = image(vec![
            concept("park", VisualConceptKind::Scene, 0.5),
            concept("beach", VisualConceptKind::Scene, 0.5),
        ]);
        assert_eq!(top_concept(&a, VisualConceptKind::Scene).unwrap().label.canonical(), "beach");
    }

    #[test]
    fn top_concept_requires_kind() {
        let a = image(vec![concept("park", VisualConceptKind::Scene, 0.5)]);
        assert!(matches!(
            top_concept(&a, VisualConceptKind::Action),
            Err(Error::NoConceptOfKind { .. })
        ));
    }

    #[test]
    fn left_cue() {
        // centers at x=10 and x=300
        let a = image(vec![
            object("cat", 0.5, 0.0, 0.0, 20.0, 20.0),
            object("dog", 0.9, 290.0, 0.0, 20.0, 20.0),
        ]);
        let cues = Cue::parse_tokens(&["which", "animal", "on", "the", "left"]);
        assert_eq!(select_object(&a, &cues).unwrap().label.canonical(), "cat");
    }

    #[test]
    fn large_cue() {
        let a = image(vec![
            object("cup", 0.9, 0.0, 0.0, 10.0, 10.0),
            object("table", 0.2, 100.0, 100.0, 50.0, 100.0),
        ]);
        let cues = HashSet::from([Cue::Large]);
        assert_eq!(select_object(&a, &cues).unwrap().label.canonical(), "table");
        let cues = HashSet::from([Cue::Small]);
        assert_eq!(select_object(&a, &cues).unwrap().label.canonical(), "cup");
    }

    #[test]
    fn no_cue_is_max_confidence() {
        let a = image(vec![
            object("cup", 0.2, 0.0, 0.0, 10.0, 10.0),
            object("table", 0.9, 100.0, 100.0, 50.0, 100.0),
        ]);
        assert_eq!(select_object(&a, &HashSet::new()).unwrap().label.canonical(), "table");
    }

    #[test]
    fn center_cue() {
        let a = image(vec![
            object("cup", 0.2, 300.0, 220.0, 40.0, 40.0),
            object("table", 0.9, 0.0, 0.0, 50.0, 100.0),
        ]);
        assert_eq!(
            select_object(&a, &HashSet::from([Cue::Center])).unwrap().label.canonical(),
            "cup"
        );
    }

    #[test]
    fn select_requires_boxed_objects() {
        let a = image(vec![concept("cat", VisualConceptKind::Object, 0.9)]);
        assert!(matches!(select_object(&a, &HashSet::new()), Err(Error::NoBoxedObjects(_))));
    }

    #[test]
    fn cue_parsing_uses_prefixes() {
        assert_eq!(Cue::parse_tokens(&["the", "leftmost", "thing"]), HashSet::from([Cue::Left]));
        assert_eq!(Cue::parse_tokens(&["the", "largest"]), HashSet::from([Cue::Large]));
        assert!(Cue::parse_tokens(&["laptop", "stop"]).is_empty());
    }

    #[test]
    fn validation() {
        let mut a = image(vec![concept("cat", VisualConceptKind::Object, 1.3)]);
        match a.validate() {
            Err(Error::Annotation { image_id, .. }) => assert_eq!(image_id, "img"),
            other => panic!("{other:?}"),
        }
        a.concepts = vec![object("cat", 0.9, 630.0, 0.0, 20.0, 20.0)];
        assert!(a.validate().is_err());
        a.concepts = vec![VisualConceptInstance {
            bbox: Some(BoundingBox { x: 0.0, y: 0.0, w: 1.0, h: 1.0 }),
            ..concept("kitchen", VisualConceptKind::Scene, 0.5)
        }];
        assert!(a.validate().is_err());
        a.concepts = vec![object("cat", 0.9, 0.0, 0.0, 20.0, 20.0)];
        assert!(a.validate().is_ok());
    }

    #[test]
    fn ingest_minimal_and_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ann.jsonl");
        std::fs::write(
            &path,
            r#"{"image_id":"img1","width":100,"height":100,"concepts":[{"label":"cat","kind":"Object","confidence":0.9,"box":{"x":1,"y":1,"w":10,"h":10}}]}"#,
        )
        .unwrap();
        let set = ingest_annotations(&path).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.get("img1").unwrap().concepts.len(), 1);

        std::fs::write(
            &path,
            r#"{"image_id":"img2","width":100,"height":100,"concepts":[{"label":"cat","kind":"Object","confidence":1.3}]}"#,
        )
        .unwrap();
        match ingest_annotations(&path) {
            Err(Error::Annotation { image_id, .. }) => assert_eq!(image_id, "img2"),
            other => panic!("{other:?}"),
        }
    }

    fn boxed_objects() -> impl Strategy<Value = Vec<VisualConceptInstance>> {
        prop::collection::vec(
            (0usize..6, 0.0..1.0f64, 0.0..500.0f64, 0.0..400.0f64, 1.0..100.0f64, 1.0..80.0f64),
            1..8,
        )
        .prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (l, conf, x, y, w, h))| object(&format!("obj{l}x{i}"), conf, x, y, w, h))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn mirrored_left_is_right(objects in boxed_objects()) {
            let a = image(objects);
            let mut mirrored = a.clone();
            for c in &mut mirrored.concepts {
                let b = c.bbox.as_mut().unwrap();
                b.x = a.width - b.x - b.w;
            }
            let left = select_object(&mirrored, &HashSet::from([Cue::Left])).unwrap();
            let right = select_object(&a, &HashSet::from([Cue::Right])).unwrap();
            prop_assert_eq!(&left.label, &right.label);
        }

        #[test]
        fn selection_ignores_order(objects in boxed_objects(), cue in 0usize..8, seed in any::<u64>()) {
            let a = image(objects);
            let mut shuffled = a.clone();
            let n = shuffled.concepts.len();
            shuffled.concepts.rotate_left((seed as usize) % n);
            shuffled.concepts.reverse();
            let cues: HashSet<Cue> = Cue::ALL.get(cue).copied().into_iter().collect();
            let x = select_object(&a, &cues).unwrap();
            let y = select_object(&shuffled, &cues).unwrap();
            prop_assert_eq!(x, y);
            prop_assert!(a.concepts.contains(x));
        }
    }
}
