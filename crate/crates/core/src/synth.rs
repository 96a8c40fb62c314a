//! Seeded synthetic data: a KB, image annotations, a QA dataset and a
//! taxonomy that satisfy every ingest check, with one fact per question
//! that the question's keywords single out.
//!
//! Entity names are pseudo-words built from consonant-vowel syllables. They
//! end in a vowel, so stemming and singularization leave them alone, and
//! each KB-side word is used by exactly one fact.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::answer::extract_keywords;
use crate::concepts::{
    select_object, top_concept, BoundingBox, Cue, ImageAnnotation, VisualConceptInstance,
    VisualConceptKind,
};
use crate::entity::EntityId;
use crate::error::{Error, Result};
use crate::eval::QAInstance;
use crate::jsonl;
use crate::kb::{Predicate, PredicateKind, Triple};
use crate::qq::{tokenize, AnswerSource, QueryType, REFERENCE_QUERY_TYPES};

/// Comparative relations used for generated facts. None of them starts with
/// a location or size cue word.
pub const COMPARATIVES: [&str; 8] = [
    "Faster", "Slower", "Bigger", "Heavier", "Taller", "Stronger", "Older", "Cheaper",
];

const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
const VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub images: usize,
    /// Entity pools per visual-concept kind.
    pub objects: usize,
    pub scenes: usize,
    pub actions: usize,
    /// Subjects that never appear in an image but carry facts.
    pub distractors: usize,
    pub objects_per_image: (usize, usize),
    pub scenes_per_image: (usize, usize),
    pub actions_per_image: (usize, usize),
    pub questions_per_type: usize,
    pub query_types: Vec<QueryType>,
    /// Question templates keyed by query type, e.g. `(UsedFor,Object,KB)`.
    /// `{y}` is the KB-side entity, `{obj}` a reference to one object with
    /// an optional location or size cue, `{rel}` the comparative relation.
    pub templates: BTreeMap<String, Vec<String>>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 7,
            images: 200,
            objects: 60,
            scenes: 30,
            actions: 30,
            distractors: 20,
            objects_per_image: (3, 5),
            scenes_per_image: (1, 2),
            actions_per_image: (1, 2),
            questions_per_type: 13,
            query_types: REFERENCE_QUERY_TYPES.to_vec(),
            templates: default_templates(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synth(m));
        if self.images == 0 || self.questions_per_type == 0 {
            return bad("images and questions_per_type must be positive".into());
        }
        for (name, (lo, hi), pool) in [
            ("objects_per_image", self.objects_per_image, self.objects),
            ("scenes_per_image", self.scenes_per_image, self.scenes),
            ("actions_per_image", self.actions_per_image, self.actions),
        ] {
            if lo == 0 || lo > hi || hi > pool {
                return bad(format!("{name} = ({lo}, {hi}) must satisfy 1 <= lo <= hi <= {pool}"));
            }
        }
        let missing: Vec<String> = self
            .query_types
            .iter()
            .map(QueryType::to_string)
            .filter(|k| self.templates.get(k).is_none_or(Vec::is_empty))
            .collect();
        if !missing.is_empty() {
            return bad(format!("no templates for {}", missing.join(", ")));
        }
        for qt in &self.query_types {
            if qt.answer_source == AnswerSource::Image && qt.vc != VisualConceptKind::Object {
                return bad(format!("{qt}: image-side answers must be objects"));
            }
            for t in &self.templates[&qt.to_string()] {
                let needs_y = qt.answer_source == AnswerSource::Image;
                if t.contains("{y}") != needs_y {
                    return bad(format!("{qt}: template {t:?} must {}use {{y}}", if needs_y { "" } else { "not " }));
                }
                if qt.rel == PredicateKind::Comparative && !t.contains("{rel}") {
                    return bad(format!("{qt}: template {t:?} must use {{rel}}"));
                }
            }
        }
        Ok(())
    }
}

/// Everything one generation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub kb: Vec<Triple>,
    pub annotations: Vec<ImageAnnotation>,
    pub dataset: Vec<QAInstance>,
    /// `(node, parent)` edges.
    pub taxonomy: Vec<(String, String)>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub images: usize,
    pub entities: usize,
    pub facts: usize,
    pub facts_per_kind: BTreeMap<String, usize>,
    pub questions: usize,
    pub questions_per_type: BTreeMap<String, usize>,
    pub files: BTreeMap<String, String>,
}

struct Words {
    rng: ChaCha8Rng,
    used: HashSet<String>,
    reserved: HashSet<String>,
}

impl Words {
    fn next(&mut self) -> String {
        loop {
            let syllables = self.rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*CONSONANTS.choose(&mut self.rng).unwrap() as char);
                w.push(*VOWELS.choose(&mut self.rng).unwrap() as char);
            }
            let clashes = Cue::ALL.iter().any(|c| w.starts_with(c.keyword()));
            if !clashes && !self.reserved.contains(&w) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn surface(words: &[String]) -> String {
    words
        .iter()
        .map(|w| {
            let mut c = w.chars();
            c.next()
                .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
                .unwrap_or_default()
        })
        .collect()
}

fn kinds_for(vc: VisualConceptKind, types: &[QueryType]) -> Vec<PredicateKind> {
    let mut kinds: Vec<PredicateKind> = types.iter().filter(|t| t.vc == vc).map(|t| t.rel).collect();
    kinds.sort();
    kinds.dedup();
    kinds
}

fn predicate_for(kind: PredicateKind, rng: &mut ChaCha8Rng) -> Predicate {
    if kind == PredicateKind::Comparative {
        Predicate::comparative(*COMPARATIVES.choose(rng).unwrap())
    } else {
        Predicate::new(kind)
    }
}

/// Object reference phrases for `{obj}`; the empty cue first.
const OBJECT_PHRASES: [&str; 8] = [
    "object",
    "object on the left",
    "object on the right",
    "object at the top",
    "object at the bottom",
    "object in the center",
    "smallest object",
    "largest object",
];

/// Generate a synthetic corpus. The same spec always gives the same data.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let reserved: HashSet<String> = spec
        .templates
        .values()
        .flatten()
        .flat_map(|t| tokenize(t))
        .chain(OBJECT_PHRASES.iter().flat_map(|p| tokenize(p)))
        .chain(crate::answer::stopwords().iter().map(|w| w.to_string()))
        .chain(crate::eval::irregular_plurals().keys().map(|w| w.to_string()))
        .collect();
    let mut words = Words {
        rng: ChaCha8Rng::seed_from_u64(spec.seed ^ 0x005E_ED0F_u64),
        used: HashSet::new(),
        reserved,
    };

    let pool = |n: usize, words: &mut Words| -> Vec<String> { (0..n).map(|_| words.next()).collect() };
    let objects = pool(spec.objects, &mut words);
    let scenes = pool(spec.scenes, &mut words);
    let actions = pool(spec.actions, &mut words);
    let distractors = pool(spec.distractors, &mut words);

    // One fact per (subject, kind); every KB-side word is fresh.
    let mut kb = Vec::new();
    let mut fact_of: BTreeMap<(String, PredicateKind), usize> = BTreeMap::new();
    let mut kb_words: Vec<String> = Vec::new();
    let groups: [(&[String], VisualConceptKind); 4] = [
        (&objects, VisualConceptKind::Object),
        (&scenes, VisualConceptKind::Scene),
        (&actions, VisualConceptKind::Action),
        (&distractors, VisualConceptKind::Object),
    ];
    for (subjects, vc) in groups {
        let kinds = kinds_for(vc, &spec.query_types);
        for s in subjects {
            for &kind in &kinds {
                let n_words = if rng.gen_bool(0.3) { 2 } else { 1 };
                let y: Vec<String> = (0..n_words).map(|_| words.next()).collect();
                kb_words.extend(y.iter().cloned());
                let source = kind.default_source();
                let triple = Triple::new(
                    surface(std::slice::from_ref(s)).as_str(),
                    predicate_for(kind, &mut rng),
                    surface(&y).as_str(),
                    source,
                );
                fact_of.insert((s.clone(), kind), kb.len());
                kb.push(triple);
            }
        }
    }

    let annotations = make_images(spec, &mut rng, &objects, &scenes, &actions);

    let mut dataset = Vec::new();
    let mut per_type = BTreeMap::new();
    for qt in &spec.query_types {
        let templates = &spec.templates[&qt.to_string()];
        for _ in 0..spec.questions_per_type {
            let image = annotations.choose(&mut rng).unwrap();
            let template = templates.choose(&mut rng).unwrap();
            let obj = if qt.vc == VisualConceptKind::Object && qt.answer_source == AnswerSource::KB {
                if rng.gen_bool(0.5) {
                    OBJECT_PHRASES[0]
                } else {
                    OBJECT_PHRASES[rng.gen_range(1..OBJECT_PHRASES.len())]
                }
            } else {
                OBJECT_PHRASES[0]
            };
            let with_obj = template.replace("{obj}", obj);
            let qa = match qt.answer_source {
                AnswerSource::Image => {
                    let objs: Vec<&VisualConceptInstance> =
                        image.concepts_of(VisualConceptKind::Object).collect();
                    let x = objs.choose(&mut rng).unwrap();
                    let fact = &kb[fact_of[&(x.label.canonical().to_string(), qt.rel)]];
                    QAInstance {
                        qid: 0,
                        image_id: image.image_id.clone(),
                        question: render(&with_obj, fact),
                        answer: x.label.canonical().to_string(),
                        fact: fact.clone(),
                        query_type: *qt,
                    }
                }
                AnswerSource::KB => {
                    // The concept the question is about follows the same
                    // selection rule the answerer uses.
                    let cues = Cue::parse_tokens(&tokenize(&with_obj));
                    let x = match qt.vc {
                        VisualConceptKind::Object => select_object(image, &cues)?,
                        kind => top_concept(image, kind)?,
                    };
                    let fact = &kb[fact_of[&(x.label.canonical().to_string(), qt.rel)]];
                    let question = render(&with_obj, fact);
                    if Cue::parse_tokens(&tokenize(&question)) != cues {
                        return Err(Error::Synth(format!("template {template:?} adds a cue word")));
                    }
                    QAInstance {
                        qid: 0,
                        image_id: image.image_id.clone(),
                        question,
                        answer: fact.object.canonical().to_string(),
                        fact: fact.clone(),
                        query_type: *qt,
                    }
                }
            };
            qa.validate()?;
            dataset.push(qa);
            *per_type.entry(qt.to_string()).or_insert(0) += 1;
        }
    }
    for (i, qa) in dataset.iter_mut().enumerate() {
        qa.qid = i + 1;
    }

    let taxonomy = make_taxonomy(&mut words, &objects, &distractors, &scenes, &actions, &kb_words);
    let mut facts_per_kind = BTreeMap::new();
    for t in &kb {
        *facts_per_kind.entry(t.predicate.kind().name().to_string()).or_insert(0) += 1;
    }
    let manifest = Manifest {
        seed: spec.seed,
        images: annotations.len(),
        entities: objects.len() + scenes.len() + actions.len() + distractors.len() + kb.len(),
        facts: kb.len(),
        facts_per_kind,
        questions: dataset.len(),
        questions_per_type: per_type,
        files: BTreeMap::new(),
    };
    Ok(SyntheticData {
        kb,
        annotations,
        dataset,
        taxonomy,
        manifest,
    })
}

fn render(template: &str, fact: &Triple) -> String {
    template
        .replace("{y}", fact.object.canonical())
        .replace("{rel}", &fact.predicate.raw().to_lowercase())
}

fn make_images(
    spec: &SyntheticSpec,
    rng: &mut ChaCha8Rng,
    objects: &[String],
    scenes: &[String],
    actions: &[String],
) -> Vec<ImageAnnotation> {
    let (width, height) = (640.0, 480.0);
    let conf = |rng: &mut ChaCha8Rng| (rng.gen_range(300..1000) as f64) / 1000.0;
    (0..spec.images)
        .map(|i| {
            let mut concepts = Vec::new();
            let n = rng.gen_range(spec.objects_per_image.0..=spec.objects_per_image.1);
            for label in objects.choose_multiple(rng, n) {
                let w = rng.gen_range(20..200) as f64;
                let h = rng.gen_range(20..200) as f64;
                let x = rng.gen_range(0..(width as i64 - w as i64)) as f64;
                let y = rng.gen_range(0..(height as i64 - h as i64)) as f64;
                concepts.push(VisualConceptInstance {
                    label: EntityId::new(label.as_str()),
                    kind: VisualConceptKind::Object,
                    confidence: conf(rng),
                    bbox: Some(BoundingBox { x, y, w, h }),
                });
            }
            for (pool, range, kind) in [
                (scenes, spec.scenes_per_image, VisualConceptKind::Scene),
                (actions, spec.actions_per_image, VisualConceptKind::Action),
            ] {
                let n = rng.gen_range(range.0..=range.1);
                for label in pool.choose_multiple(rng, n) {
                    concepts.push(VisualConceptInstance {
                        label: EntityId::new(label.as_str()),
                        kind,
                        confidence: conf(rng),
                        bbox: None,
                    });
                }
            }
            ImageAnnotation {
                image_id: format!("img{i:05}"),
                width,
                height,
                concepts,
            }
        })
        .collect()
}

/// Root `entity` with one branch per entity family, each split into groups
/// of five leaves.
fn make_taxonomy(
    words: &mut Words,
    objects: &[String],
    distractors: &[String],
    scenes: &[String],
    actions: &[String],
    kb_words: &[String],
) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    let object_leaves: Vec<String> = objects.iter().chain(distractors).cloned().collect();
    for (branch, leaves) in [
        ("thing", object_leaves.as_slice()),
        ("place", scenes),
        ("activity", actions),
        ("idea", kb_words),
    ] {
        edges.push((branch.to_string(), "entity".to_string()));
        for chunk in leaves.chunks(5) {
            let group = words.next();
            edges.push((group.clone(), branch.to_string()));
            edges.extend(chunk.iter().map(|leaf| (leaf.clone(), group.clone())));
        }
    }
    edges
}

/// File names inside an output directory.
pub const KB_FILE: &str = "kb.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const TAXONOMY_FILE: &str = "taxonomy.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Paths of a written corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFiles {
    pub kb: PathBuf,
    pub annotations: PathBuf,
    pub dataset: PathBuf,
    pub taxonomy: PathBuf,
    pub manifest: PathBuf,
}

impl SyntheticFiles {
    pub fn in_dir(dir: &Path) -> Self {
        SyntheticFiles {
            kb: dir.join(KB_FILE),
            annotations: dir.join(ANNOTATIONS_FILE),
            dataset: dir.join(DATASET_FILE),
            taxonomy: dir.join(TAXONOMY_FILE),
            manifest: dir.join(MANIFEST_FILE),
        }
    }
}

/// Write the corpus into `dir`, creating it if needed.
pub fn write(data: &SyntheticData, dir: &Path) -> Result<SyntheticFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SyntheticFiles::in_dir(dir);
    jsonl::write(&files.kb, data.kb.iter())?;
    jsonl::write(&files.annotations, data.annotations.iter())?;
    jsonl::write(&files.dataset, data.dataset.iter())?;
    let mut tsv = String::from("entity\n");
    for (node, parent) in &data.taxonomy {
        tsv.push_str(node);
        tsv.push('\t');
        tsv.push_str(parent);
        tsv.push('\n');
    }
    std::fs::write(&files.taxonomy, tsv).map_err(|e| Error::io(&files.taxonomy, e))?;
    let mut manifest = data.manifest.clone();
    for (k, name) in [
        ("kb", KB_FILE),
        ("annotations", ANNOTATIONS_FILE),
        ("dataset", DATASET_FILE),
        ("taxonomy", TAXONOMY_FILE),
    ] {
        manifest.files.insert(k.to_string(), name.to_string());
    }
    jsonl::write_json(&files.manifest, &manifest)?;
    Ok(files)
}

/// Keywords a generated question shares with its supporting fact.
pub fn shared_keywords(qa: &QAInstance) -> usize {
    let q = extract_keywords(&qa.question);
    crate::answer::entity_keywords(&qa.fact.object)
        .iter()
        .filter(|w| q.contains(w))
        .count()
}

/// The built-in templates, three per reference query type.
pub fn default_templates() -> BTreeMap<String, Vec<String>> {
    use AnswerSource::{Image, KB};
    use PredicateKind::*;
    use VisualConceptKind::{Action, Object, Scene};
    let table: [(QueryType, [&str; 3]); 32] = [
        (QueryType::new(Category, Object, Image), [
            "Which object in this image belongs to the category {y}?",
            "What in the picture falls under the category {y}?",
            "Which thing here is listed in the category {y}?",
        ]),
        (QueryType::new(IsA, Object, Image), [
            "Which object in this image is a {y}?",
            "What in the picture is an example of a {y}?",
            "Which of these things is a type of {y}?",
        ]),
        (QueryType::new(RelatedTo, Object, Image), [
            "Which object in this image is related to {y}?",
            "What thing here relates to {y}?",
            "Which object shown is associated with {y}?",
        ]),
        (QueryType::new(UsedFor, Object, Image), [
            "Which object in this image is used for {y}?",
            "What here can be used for {y}?",
            "Which thing in the picture would you use for {y}?",
        ]),
        (QueryType::new(CapableOf, Object, Image), [
            "Which object in this image is capable of {y}?",
            "What in the picture is able to {y}?",
            "Which thing here can {y}?",
        ]),
        (QueryType::new(HasA, Object, Image), [
            "Which object in this image has a {y}?",
            "What in the picture comes with {y}?",
            "Which thing here owns a {y}?",
        ]),
        (QueryType::new(HasProperty, Object, Image), [
            "Which object in this image has the property {y}?",
            "What in the picture is usually {y}?",
            "Which thing here can be described as {y}?",
        ]),
        (QueryType::new(Comparative, Object, Image), [
            "Which object in this image is {rel} than {y}?",
            "What in the picture is {rel} than a {y}?",
            "Which thing here would be {rel} than {y}?",
        ]),
        (QueryType::new(AtLocation, Object, Image), [
            "Which object in this image is found in {y}?",
            "What in the picture is usually located at {y}?",
            "Which thing here can you find in a {y}?",
        ]),
        (QueryType::new(AtLocation, Scene, KB), [
            "Where is this place usually located?",
            "In what larger area is this scene found?",
            "This place is typically situated where?",
        ]),
        (QueryType::new(UsedFor, Scene, KB), [
            "What is this place used for?",
            "What can people do in this place?",
            "What purpose does this scene serve?",
        ]),
        (QueryType::new(UsedFor, Object, KB), [
            "What is the {obj} in this image used for?",
            "What can the {obj} here be used for?",
            "What purpose does the {obj} serve?",
        ]),
        (QueryType::new(Desires, Object, Image), [
            "Which object in this image desires {y}?",
            "What in the picture wants {y}?",
            "Which thing here would like to have {y}?",
        ]),
        (QueryType::new(RelatedTo, Object, KB), [
            "What is the {obj} in this image related to?",
            "What concept relates to the {obj} here?",
            "What is associated with the {obj} shown?",
        ]),
        (QueryType::new(AtLocation, Object, KB), [
            "Where is the {obj} in this image usually found?",
            "Where would you normally find the {obj} here?",
            "In what place does the {obj} usually appear?",
        ]),
        (QueryType::new(HasProperty, Scene, KB), [
            "What property does this place have?",
            "How would you describe this scene?",
            "What is a typical property of this place?",
        ]),
        (QueryType::new(Comparative, Object, KB), [
            "What is the {obj} in this image {rel} than?",
            "The {obj} here is {rel} than what?",
            "Name something the {obj} is {rel} than.",
        ]),
        (QueryType::new(HasA, Object, KB), [
            "What does the {obj} in this image have?",
            "What part does the {obj} here have?",
            "The {obj} shown has what?",
        ]),
        (QueryType::new(HasA, Scene, KB), [
            "What does this place usually have?",
            "What can be found in every scene like this?",
            "What does this kind of place contain?",
        ]),
        (QueryType::new(PartOf, Object, Image), [
            "Which object in this image is part of {y}?",
            "What in the picture is a component of {y}?",
            "Which thing here forms part of a {y}?",
        ]),
        (QueryType::new(AtLocation, Action, KB), [
            "Where does the activity in this image take place?",
            "Where do people usually do this activity?",
            "At what location is this action performed?",
        ]),
        (QueryType::new(HasProperty, Object, KB), [
            "What property does the {obj} in this image have?",
            "How would you describe the {obj} here?",
            "What quality is typical of the {obj}?",
        ]),
        (QueryType::new(Comparative, Scene, KB), [
            "What is this place {rel} than?",
            "This scene is {rel} than what?",
            "Name something this place is {rel} than.",
        ]),
        (QueryType::new(Category, Object, KB), [
            "What category does the {obj} in this image belong to?",
            "Under which category falls the {obj} here?",
            "The {obj} shown belongs to what category?",
        ]),
        (QueryType::new(IsA, Object, KB), [
            "What is the {obj} in this image a type of?",
            "The {obj} here is an example of what?",
            "What kind of thing is the {obj}?",
        ]),
        (QueryType::new(ReceivesAction, Object, Image), [
            "Which object in this image receives the action {y}?",
            "What in the picture can have {y} done to it?",
            "Which thing here is something people {y}?",
        ]),
        (QueryType::new(Comparative, Action, KB), [
            "What is the activity in this image {rel} than?",
            "This action is {rel} than what?",
            "Name something this activity is {rel} than.",
        ]),
        (QueryType::new(CapableOf, Object, KB), [
            "What is the {obj} in this image capable of?",
            "What can the {obj} here do?",
            "What is the {obj} shown able to do?",
        ]),
        (QueryType::new(ReceivesAction, Object, KB), [
            "What can be done to the {obj} in this image?",
            "What action does the {obj} here receive?",
            "What do people usually do with the {obj}?",
        ]),
        (QueryType::new(CreatedBy, Object, Image), [
            "Which object in this image is created by {y}?",
            "What in the picture was made by {y}?",
            "Which thing here is produced by {y}?",
        ]),
        (QueryType::new(CapableOf, Scene, KB), [
            "What is this place capable of?",
            "What can this scene do?",
            "What is a place like this able to do?",
        ]),
        (QueryType::new(HasProperty, Action, KB), [
            "What property does the activity in this image have?",
            "How would you describe this action?",
            "What quality is typical of this activity?",
        ]),
    ];
    table
        .into_iter()
        .map(|(qt, ts)| (qt.to_string(), ts.iter().map(|s| s.to_string()).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::AnnotationSet;
    use crate::kb::TripleStore;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            images: 20,
            questions_per_type: 2,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn default_sizes() {
        let data = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(data.annotations.len(), 200);
        assert_eq!(data.dataset.len(), 32 * 13);
        assert!(data.kb.len() >= 1000, "{}", data.kb.len());
        assert_eq!(data.manifest.questions_per_type.len(), 32);
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SyntheticSpec { seed: 8, ..small() };
        assert_ne!(generate(&small()).unwrap().dataset, generate(&other).unwrap().dataset);
    }

    #[test]
    fn missing_template_is_an_error() {
        let mut spec = small();
        spec.templates.remove("(HasA,Scene,KB)");
        let err = generate(&spec).unwrap_err().to_string();
        assert!(err.contains("(HasA,Scene,KB)"), "{err}");
    }

    #[test]
    fn facts_exist_and_match_uniquely() {
        let data = generate(&small()).unwrap();
        let mut store = TripleStore::new();
        for t in &data.kb {
            assert!(store.insert(t.clone()));
        }
        AnnotationSet::new(data.annotations.clone()).unwrap();
        for qa in &data.dataset {
            assert!(store.contains(&qa.fact));
            if qa.query_type.answer_source == AnswerSource::Image {
                // Only the supporting fact shares a keyword with the question.
                let q = extract_keywords(&qa.question);
                let hits: Vec<&Triple> = data
                    .kb
                    .iter()
                    .filter(|t| crate::answer::entity_keywords(&t.object).iter().any(|w| q.contains(w)))
                    .collect();
                assert_eq!(hits, [&qa.fact], "{}", qa.question);
                assert!(shared_keywords(qa) >= 1);
            }
        }
    }

    #[test]
    fn taxonomy_is_a_tree() {
        let data = generate(&small()).unwrap();
        let t = crate::eval::TaxonomyTree::from_edges(data.taxonomy.iter().map(|(a, b)| (a.as_str(), b.as_str()))).unwrap();
        assert_eq!(t.root(), "entity");
        for qa in &data.dataset {
            for w in crate::eval::normalize_answer(&qa.answer).split(' ') {
                assert!(t.contains(w), "{w}");
            }
        }
    }

    #[test]
    fn written_files_ingest_strictly_and_repeat_byte_for_byte() {
        use crate::kb::{ingest_kb, IngestMode};
        let data = generate(&small()).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let files = write(&data, a.path()).unwrap();
        write(&generate(&small()).unwrap(), b.path()).unwrap();

        let (store, report) = ingest_kb(&files.kb, IngestMode::Strict).unwrap();
        assert_eq!((store.len(), report.skipped()), (data.kb.len(), 0));
        let ds = crate::eval::ingest_dataset(&files.dataset, IngestMode::Strict).unwrap();
        assert_eq!((ds.instances.len(), ds.rejects.len()), (data.dataset.len(), 0));
        assert_eq!(crate::concepts::ingest_annotations(&files.annotations).unwrap().len(), 20);
        crate::eval::TaxonomyTree::load(&files.taxonomy).unwrap();

        for name in [KB_FILE, ANNOTATIONS_FILE, DATASET_FILE, TAXONOMY_FILE, MANIFEST_FILE] {
            let x = std::fs::read(a.path().join(name)).unwrap();
            assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name}");
        }
    }
}
