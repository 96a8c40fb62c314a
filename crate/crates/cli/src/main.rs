use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use factqa::answer::{answer, AnswerContext, AnswerFrequencyTable, QueryTypeSource};
use factqa::concepts::ingest_annotations;
use factqa::config::{Method, RunConfig};
use factqa::eval::{
    evaluate, ingest_dataset, make_splits, Predictions, SplitSpec, TaxonomyTree,
};
use factqa::kb::{ingest_kb, IngestMode};
use factqa::pipeline::{run_pipeline, train_questions, write_outputs, REPORT_JSON, REPORT_TXT};
use factqa::qq::{QqClassifier, QueryRegistry, QueryType};
use factqa::synth::{generate, write, SyntheticSpec};
use factqa::{jsonl, Error, Result};

/// Overrides the output directory of `synth`, `evaluate` and `pipeline`.
const OUTPUT_DIR_ENV: &str = "FACTQA_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "factqa", version, about = "Fact-based visual question answering over a triple store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load input files and report what was ingested and rejected.
    Ingest(IngestArgs),
    /// Generate a synthetic KB, annotations, dataset and taxonomy.
    Synth(SynthArgs),
    /// Generate train/test image splits.
    Splits(SplitsArgs),
    /// Train a question to query-type classifier.
    Train(TrainArgs),
    /// Print the top-k query types of a question.
    Classify(ClassifyArgs),
    /// Answer one question about one image.
    Answer(AnswerArgs),
    /// Score a predictions file.
    Evaluate(EvaluateArgs),
    /// Ingest, answer every test question of every split and evaluate.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Triple file (JSON Lines)
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Image annotation file (JSON Lines)
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// QA dataset file (JSON Lines)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Taxonomy file (node TAB parent per line)
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Abort on the first malformed record instead of skipping it
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec (JSON); omitted fields take their defaults
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory [env: FACTQA_OUTPUT_DIR] [default: synth]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of images
    #[arg(long)]
    images: Option<usize>,
    /// Questions generated per query type
    #[arg(long)]
    questions_per_type: Option<usize>,
}

#[derive(Args)]
struct SplitsArgs {
    /// Take image ids from this QA dataset
    #[arg(long, conflicts_with = "ids", required_unless_present = "ids")]
    data: Option<PathBuf>,
    /// Take image ids from this file, one per line
    #[arg(long)]
    ids: Option<PathBuf>,
    /// Number of splits
    #[arg(short, long, default_value_t = 5)]
    n: usize,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (JSON); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// QA dataset supplying questions and their query types
    #[arg(long)]
    data: PathBuf,
    /// Run config (key = value) supplying training settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint to write
    #[arg(long)]
    out: PathBuf,
    /// Train on the training images of one split only (needs --split)
    #[arg(long, requires = "split")]
    splits: Option<PathBuf>,
    /// Index of the split used with --splits
    #[arg(long, requires = "splits")]
    split: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Classifier checkpoint
    #[arg(long)]
    ckpt: PathBuf,
    /// Question text
    #[arg(long)]
    question: String,
    /// Number of query types to print
    #[arg(short, default_value_t = 3)]
    k: usize,
}

#[derive(Args)]
struct AnswerArgs {
    /// Classifier checkpoint; optional with --gt-query-type
    #[arg(long, required_unless_present = "gt_query_type")]
    ckpt: Option<PathBuf>,
    /// Triple file (JSON Lines)
    #[arg(long)]
    kb: PathBuf,
    /// Image annotation file (JSON Lines)
    #[arg(long)]
    annotations: PathBuf,
    /// Image id
    #[arg(long)]
    image: String,
    /// Question text
    #[arg(long)]
    question: String,
    /// Number of predicted query types to try
    #[arg(short, default_value_t = 3)]
    k: usize,
    /// Use this query type instead of the classifier, as REL,VC,AS
    #[arg(long)]
    gt_query_type: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predictions file (JSON Lines)
    #[arg(long)]
    pred: PathBuf,
    /// QA dataset
    #[arg(long)]
    data: PathBuf,
    /// Splits file
    #[arg(long)]
    splits: PathBuf,
    /// Taxonomy for WUPS; without it WUPS falls back to exact match
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Human answers scored alongside
    #[arg(long)]
    human: Option<PathBuf>,
    /// Method name shown in the report
    #[arg(long, default_value = "predictions")]
    method: String,
    /// Also write report.json and report.txt here [env: FACTQA_OUTPUT_DIR]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Run config (key = value); flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Triple file (JSON Lines)
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Image annotation file (JSON Lines)
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// QA dataset file (JSON Lines)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Taxonomy file for WUPS
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Splits file; generated from the dataset's images when omitted
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Classifier checkpoint (method classifier); trained per split when omitted
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// Image features (JSON Lines) for the image baselines
    #[arg(long)]
    features: Option<PathBuf>,
    /// Human answers scored alongside
    #[arg(long)]
    human: Option<PathBuf>,
    /// Output directory [env: FACTQA_OUTPUT_DIR]
    #[arg(long)]
    out: Option<PathBuf>,
    /// gt-query, classifier, frequent, lstm-question, lstm-question-image or lstm-image
    #[arg(long)]
    method: Option<Method>,
    /// Number of predicted query types to try
    #[arg(short)]
    k: Option<usize>,
    /// Number of splits when generating them
    #[arg(long)]
    n_splits: Option<usize>,
    /// Abort on the first malformed record
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    overrides: Overrides,
}

/// Training settings that override the config file.
#[derive(Args)]
struct Overrides {
    /// Random seed (run and training)
    #[arg(long)]
    seed: Option<u64>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size
    #[arg(long)]
    batch_size: Option<usize>,
    /// Optimizer step size
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Embedding and hidden size
    #[arg(long)]
    dim: Option<usize>,
    /// sgd or adam
    #[arg(long)]
    optimizer: Option<String>,
    /// Any config key, as KEY=VALUE; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn apply(&self, config: &mut RunConfig) -> Result<()> {
        let cwd = Path::new(".");
        if let Some(s) = self.seed {
            config.set("seed", &s.to_string(), cwd)?;
        }
        let t = &mut config.training;
        if let Some(e) = self.epochs {
            t.epochs = e;
        }
        if let Some(b) = self.batch_size {
            t.batch_size = b;
        }
        if let Some(lr) = self.learning_rate {
            t.learning_rate = lr;
        }
        if let Some(d) = self.dim {
            t.embed_dim = d;
            t.hidden_dim = d;
        }
        if let Some(o) = &self.optimizer {
            t.optimizer = o.parse()?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set {kv:?} is not KEY=VALUE")))?;
            config.set(k.trim(), v.trim(), cwd)?;
        }
        Ok(())
    }
}

fn output_dir(flag: Option<PathBuf>, fallback: PathBuf) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or(fallback)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    emit(&format!("{text}\n"));
    Ok(())
}

/// Write to stdout, treating a closed pipe as the reader's choice.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing to stdout: {e}");
        }
    }
}

fn mode(strict: bool) -> IngestMode {
    if strict {
        IngestMode::Strict
    } else {
        IngestMode::Skip
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| e.in_stage("config")),
        None => Ok(RunConfig::default()),
    }
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    if a.kb.is_none() && a.annotations.is_none() && a.dataset.is_none() && a.taxonomy.is_none() {
        return Err(Error::Config("nothing to ingest".into()));
    }
    let mut summary = serde_json::Map::new();
    if let Some(p) = &a.kb {
        let (store, report) = ingest_kb(p, mode(a.strict)).map_err(|e| e.in_stage("kb ingest"))?;
        let errors: Vec<String> = report.errors.iter().map(ToString::to_string).collect();
        summary.insert(
            "kb".into(),
            json!({ "facts": store.len(), "duplicates": report.duplicates, "rejects": errors }),
        );
    }
    if let Some(p) = &a.annotations {
        let set = ingest_annotations(p).map_err(|e| e.in_stage("annotations ingest"))?;
        summary.insert("annotations".into(), json!({ "images": set.len() }));
    }
    if let Some(p) = &a.dataset {
        let d = ingest_dataset(p, mode(a.strict)).map_err(|e| e.in_stage("dataset ingest"))?;
        let errors: Vec<String> = d.rejects.iter().map(ToString::to_string).collect();
        summary.insert(
            "dataset".into(),
            json!({ "questions": d.instances.len(), "rejects": errors }),
        );
    }
    if let Some(p) = &a.taxonomy {
        let t = TaxonomyTree::load(p).map_err(|e| e.in_stage("taxonomy ingest"))?;
        summary.insert("taxonomy".into(), json!({ "nodes": t.len(), "root": t.root() }));
    }
    print_json(&summary)
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut spec: SyntheticSpec = match &a.spec {
        Some(p) => jsonl::read_json(p)?,
        None => SyntheticSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.images {
        spec.images = n;
    }
    if let Some(n) = a.questions_per_type {
        spec.questions_per_type = n;
    }
    let dir = output_dir(a.out, PathBuf::from("synth"));
    let data = generate(&spec)?;
    write(&data, &dir)?;
    print_json(&data.manifest)
}

fn cmd_splits(a: SplitsArgs) -> Result<()> {
    let mut ids: Vec<String> = match (&a.data, &a.ids) {
        (Some(p), _) => ingest_dataset(p, IngestMode::Skip)
            .map_err(|e| e.in_stage("dataset ingest"))?
            .instances
            .into_iter()
            .map(|q| q.image_id)
            .collect(),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        (None, None) => unreachable!("clap requires one of --data and --ids"),
    };
    ids.sort();
    ids.dedup();
    let spec = make_splits(&ids, a.n, a.seed)?;
    match &a.out {
        Some(p) => jsonl::write_json(p, &spec),
        None => print_json(&spec),
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut config = load_config(a.config.as_deref())?;
    a.overrides.apply(&mut config)?;
    config.training.validate()?;
    let dataset = ingest_dataset(&a.data, config.ingest)
        .map_err(|e| e.in_stage("dataset ingest"))?
        .instances;
    let questions: Vec<_> = match (&a.splits, a.split) {
        (Some(p), Some(i)) => {
            let spec: SplitSpec = jsonl::read_json(p).map_err(|e| e.in_stage("splits"))?;
            spec.validate()?;
            if i >= spec.len() {
                return Err(Error::Config(format!("split {i} of {}", spec.len())));
            }
            train_questions(&dataset, &spec).swap_remove(i)
        }
        _ => dataset.iter().collect(),
    };
    let data: Vec<(&str, QueryType)> = questions.iter().map(|q| (q.question.as_str(), q.query_type)).collect();
    let registry = QueryRegistry::from_types(data.iter().map(|(_, qt)| *qt));
    let model = QqClassifier::train(&data, registry, &config.training)
        .map_err(|e| e.in_stage("training"))?
        .with_answer_frequencies(AnswerFrequencyTable::from_answers(questions.iter().map(|q| &q.answer)));
    model.save(&a.out)?;
    print_json(&json!({
        "checkpoint": a.out,
        "questions": data.len(),
        "query_types": model.registry.len(),
        "seed": config.training.seed,
        "final_loss": model.loss_curve.last(),
    }))
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let model = QqClassifier::load(&a.ckpt).map_err(|e| e.in_stage("checkpoint load"))?;
    let ranked = model.predict_topk(&a.question, a.k)?;
    let out: Vec<_> = ranked
        .iter()
        .map(|(qt, p)| json!({ "query_type": qt, "probability": p }))
        .collect();
    print_json(&out)
}

fn cmd_answer(a: AnswerArgs) -> Result<()> {
    let model = match &a.ckpt {
        Some(p) => Some(QqClassifier::load(p).map_err(|e| e.in_stage("checkpoint load"))?),
        None => None,
    };
    let (store, _) = ingest_kb(&a.kb, IngestMode::Skip).map_err(|e| e.in_stage("kb ingest"))?;
    let annotations = ingest_annotations(&a.annotations).map_err(|e| e.in_stage("annotations ingest"))?;
    let empty = AnswerFrequencyTable::default();
    let ctx = AnswerContext {
        store: &store,
        annotations: &annotations,
        frequencies: model.as_ref().map_or(&empty, |m| &m.answer_frequencies),
    };
    let source = match (&a.gt_query_type, &model) {
        (Some(qt), _) => QueryTypeSource::GroundTruth(qt.parse().map_err(|e: Error| Error::Config(e.to_string()))?),
        (None, Some(m)) => QueryTypeSource::Classifier { model: m, k: a.k },
        (None, None) => unreachable!("clap requires --ckpt without --gt-query-type"),
    };
    let outcome = answer(ctx, &a.question, &a.image, source)?;
    print_json(&outcome)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let preds = Predictions::load(&a.pred).map_err(|e| e.in_stage("predictions ingest"))?;
    let dataset = ingest_dataset(&a.data, IngestMode::Skip)
        .map_err(|e| e.in_stage("dataset ingest"))?
        .instances;
    let splits: SplitSpec = jsonl::read_json(&a.splits).map_err(|e| e.in_stage("splits"))?;
    splits.validate()?;
    let taxonomy = match &a.taxonomy {
        Some(p) => Some(TaxonomyTree::load(p).map_err(|e| e.in_stage("taxonomy ingest"))?),
        None => None,
    };
    let human = match &a.human {
        Some(p) => Some(Predictions::load(p).map_err(|e| e.in_stage("human answers ingest"))?),
        None => None,
    };
    let report = evaluate(&a.method, &preds, &dataset, taxonomy.as_ref(), &splits, human.as_ref())
        .map_err(|e| e.in_stage("evaluation"))?;
    let table = report.to_table();
    if let Some(dir) = a.out.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)) {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?;
        jsonl::write_json(&dir.join(REPORT_JSON), &report)?;
        std::fs::write(dir.join(REPORT_TXT), &table)
            .map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?;
    }
    emit(&table);
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    let mut config = load_config(a.config.as_deref())?;
    let flags = [
        (&a.kb, &mut config.kb),
        (&a.annotations, &mut config.annotations),
        (&a.dataset, &mut config.dataset),
        (&a.taxonomy, &mut config.taxonomy),
        (&a.splits, &mut config.splits),
        (&a.ckpt, &mut config.checkpoint),
        (&a.features, &mut config.features),
        (&a.human, &mut config.human_answers),
    ];
    for (flag, slot) in flags {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    if let Some(m) = a.method {
        config.method = m;
    }
    if let Some(k) = a.k {
        config.k = k;
    }
    if let Some(n) = a.n_splits {
        config.n_splits = n;
    }
    if a.strict {
        config.ingest = IngestMode::Strict;
    }
    a.overrides.apply(&mut config)?;
    if a.out.is_some() || std::env::var_os(OUTPUT_DIR_ENV).is_some() {
        config.output_dir = output_dir(a.out, PathBuf::new());
    }
    let out = run_pipeline(&config)?;
    write_outputs(&config, &out, &config.output_dir)?;
    emit(&out.report.to_table());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Stage { source, .. } => exit_code(source),
        Error::Config(_) => 1,
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Splits(a) => cmd_splits(a),
        Command::Train(a) => cmd_train(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Answer(a) => cmd_answer(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
