use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::Triple;

use super::dataset::{PredictionRecord, Predictions, QAInstance};
use super::metrics::{fact_hit, topk_hit, wups_instance};
use super::splits::SplitSpec;
use super::taxonomy::TaxonomyTree;

pub const CUTOFFS: [usize; 3] = [1, 3, 10];

/// One value at each of the Top-1, Top-3 and Top-10 cutoffs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AtK<T> {
    pub top1: T,
    pub top3: T,
    pub top10: T,
}

impl<T: Copy> AtK<T> {
    fn from_fn(mut f: impl FnMut(usize) -> T) -> Self {
        AtK {
            top1: f(CUTOFFS[0]),
            top3: f(CUTOFFS[1]),
            top10: f(CUTOFFS[2]),
        }
    }

    pub fn values(&self) -> [T; 3] {
        [self.top1, self.top3, self.top10]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub accuracy: AtK<T>,
    pub wups_0_9: AtK<T>,
    pub wups_0_0: AtK<T>,
    pub fact_accuracy: AtK<T>,
}

impl<T: Copy> Metrics<T> {
    fn blocks(&self) -> [(&'static str, AtK<T>); 4] {
        [
            ("accuracy", self.accuracy),
            ("wups_0_9", self.wups_0_9),
            ("wups_0_0", self.wups_0_0),
            ("fact_accuracy", self.fact_accuracy),
        ]
    }

    fn map_blocks<U: Copy>(&self, mut f: impl FnMut(usize, AtK<T>) -> AtK<U>) -> Metrics<U> {
        Metrics {
            accuracy: f(0, self.accuracy),
            wups_0_9: f(1, self.wups_0_9),
            wups_0_0: f(2, self.wups_0_0),
            fact_accuracy: f(3, self.fact_accuracy),
        }
    }
}

/// Scores of a set of questions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Group<T> {
    pub questions: usize,
    pub metrics: Metrics<T>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over splits.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Per-category groups keyed by category name.
pub type Breakdown<T> = BTreeMap<String, Group<T>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored<T> {
    pub overall: Group<T>,
    pub by_kb_source: Breakdown<T>,
    pub by_visual_concept: Breakdown<T>,
    pub by_answer_source: Breakdown<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub split: usize,
    #[serde(flatten)]
    pub scores: Scored<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub seed: Option<u64>,
    pub splits: Vec<SplitReport>,
    pub summary: Scored<MeanStd>,
    /// Human answers scored with the same protocol, when supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<Scored<MeanStd>>,
}

#[derive(Default)]
struct Acc {
    n: usize,
    sums: [[f64; 3]; 4],
}

impl Acc {
    fn add(&mut self, row: &[[f64; 3]; 4]) {
        self.n += 1;
        for (s, r) in self.sums.iter_mut().zip(row) {
            for (a, b) in s.iter_mut().zip(r) {
                *a += b;
            }
        }
    }

    fn finish(&self) -> Group<f64> {
        let n = self.n.max(1) as f64;
        let m = |b: usize| AtK::from_fn(|k| self.sums[b][CUTOFFS.iter().position(|&c| c == k).unwrap()] / n);
        Group {
            questions: self.n,
            metrics: Metrics {
                accuracy: m(0),
                wups_0_9: m(1),
                wups_0_0: m(2),
                fact_accuracy: m(3),
            },
        }
    }
}

fn score_row(
    pred: &PredictionRecord,
    qa: &QAInstance,
    taxonomy: Option<&TaxonomyTree>,
) -> [[f64; 3]; 4] {
    let key = qa.fact.key();
    let facts: &[Triple] = &pred.facts;
    let per_k = |f: &dyn Fn(usize) -> f64| CUTOFFS.map(f);
    [
        per_k(&|k| topk_hit(&pred.answers, &qa.answer, k) as u8 as f64),
        per_k(&|k| wups_instance(taxonomy, &pred.answers, &qa.answer, 0.9, k)),
        per_k(&|k| wups_instance(taxonomy, &pred.answers, &qa.answer, 0.0, k)),
        per_k(&|k| fact_hit(facts, &key, k) as u8 as f64),
    ]
}

fn score_split(
    split: usize,
    test: &[&QAInstance],
    preds: &Predictions,
    taxonomy: Option<&TaxonomyTree>,
) -> Scored<f64> {
    let mut overall = Acc::default();
    let mut kb: BTreeMap<String, Acc> = BTreeMap::new();
    let mut vc: BTreeMap<String, Acc> = BTreeMap::new();
    let mut src: BTreeMap<String, Acc> = BTreeMap::new();
    for qa in test {
        let pred = preds.get(split, qa.qid).expect("coverage checked");
        let row = score_row(pred, qa, taxonomy);
        overall.add(&row);
        kb.entry(qa.fact.source.name().into()).or_default().add(&row);
        vc.entry(qa.query_type.vc.name().into()).or_default().add(&row);
        src.entry(qa.query_type.answer_source.name().into()).or_default().add(&row);
    }
    let fin = |m: BTreeMap<String, Acc>| m.into_iter().map(|(k, a)| (k, a.finish())).collect();
    Scored {
        overall: overall.finish(),
        by_kb_source: fin(kb),
        by_visual_concept: fin(vc),
        by_answer_source: fin(src),
    }
}

fn summarize_group(groups: &[&Group<f64>]) -> Group<MeanStd> {
    let questions = groups.iter().map(|g| g.questions).sum();
    let metrics = groups[0].metrics.map_blocks(|b, _| {
        let vals = |i: usize| -> Vec<f64> {
            groups.iter().map(|g| g.metrics.blocks()[b].1.values()[i]).collect()
        };
        AtK {
            top1: MeanStd::of(&vals(0)),
            top3: MeanStd::of(&vals(1)),
            top10: MeanStd::of(&vals(2)),
        }
    });
    Group { questions, metrics }
}

fn summarize_breakdown(per_split: &[&Breakdown<f64>]) -> Breakdown<MeanStd> {
    let mut keys: Vec<&String> = per_split.iter().flat_map(|b| b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            let groups: Vec<&Group<f64>> = per_split.iter().filter_map(|b| b.get(k)).collect();
            (k.clone(), summarize_group(&groups))
        })
        .collect()
}

fn summarize(per_split: &[&Scored<f64>]) -> Scored<MeanStd> {
    let overall: Vec<&Group<f64>> = per_split.iter().map(|s| &s.overall).collect();
    let pick = |f: fn(&Scored<f64>) -> &Breakdown<f64>| -> Vec<&Breakdown<f64>> {
        per_split.iter().map(|s| f(s)).collect()
    };
    Scored {
        overall: summarize_group(&overall),
        by_kb_source: summarize_breakdown(&pick(|s| &s.by_kb_source)),
        by_visual_concept: summarize_breakdown(&pick(|s| &s.by_visual_concept)),
        by_answer_source: summarize_breakdown(&pick(|s| &s.by_answer_source)),
    }
}

/// Test questions of every split, in dataset order.
pub fn test_questions<'a>(
    dataset: &'a [QAInstance],
    splits: &SplitSpec,
) -> Vec<Vec<&'a QAInstance>> {
    let mut by_image: HashMap<&str, Vec<&QAInstance>> = HashMap::new();
    for qa in dataset {
        by_image.entry(qa.image_id.as_str()).or_default().push(qa);
    }
    splits
        .splits
        .iter()
        .map(|s| {
            let mut qs: Vec<&QAInstance> = s
                .test
                .iter()
                .flat_map(|img| by_image.get(img.as_str()).into_iter().flatten().copied())
                .collect();
            qs.sort_by_key(|q| q.qid);
            qs
        })
        .collect()
}

fn score_all(
    preds: &Predictions,
    per_split: &[Vec<&QAInstance>],
    taxonomy: Option<&TaxonomyTree>,
) -> Result<Vec<Scored<f64>>> {
    let missing: Vec<String> = per_split
        .iter()
        .enumerate()
        .flat_map(|(s, qs)| {
            qs.iter()
                .filter(move |q| preds.get(s, q.qid).is_none())
                .map(move |q| format!("split {s} question {}", q.qid))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingOutputs(missing));
    }
    Ok(per_split
        .iter()
        .enumerate()
        .map(|(s, qs)| score_split(s, qs, preds, taxonomy))
        .collect())
}

/// Score a system's outputs on the test questions of every split.
///
/// Every test question of every split needs an output. Breakdowns partition
/// the questions by the ground-truth fact's KB, the questioned concept kind
/// and the answer source.
pub fn evaluate(
    method: &str,
    predictions: &Predictions,
    dataset: &[QAInstance],
    taxonomy: Option<&TaxonomyTree>,
    splits: &SplitSpec,
    human: Option<&Predictions>,
) -> Result<EvalReport> {
    let per_split = test_questions(dataset, splits);
    if per_split.is_empty() || per_split.iter().any(Vec::is_empty) {
        return Err(Error::EmptyEvaluation);
    }
    let scored = score_all(predictions, &per_split, taxonomy)?;
    let summary = summarize(&scored.iter().collect::<Vec<_>>());
    let human = match human {
        Some(h) => {
            let hs = score_all(h, &per_split, taxonomy)?;
            Some(summarize(&hs.iter().collect::<Vec<_>>()))
        }
        None => None,
    };
    Ok(EvalReport {
        method: method.to_string(),
        seed: Some(splits.seed),
        splits: scored
            .into_iter()
            .enumerate()
            .map(|(split, scores)| SplitReport { split, scores })
            .collect(),
        summary,
        human,
    })
}

fn pct(m: MeanStd) -> String {
    format!("{:.2}±{:.2}", 100.0 * m.mean, 100.0 * m.std)
}

fn table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(out, "{title}");
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    let _ = writeln!(out, "{}", line(&head));
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    let _ = writeln!(out, "{}", "-".repeat(total));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    out.push('\n');
}

impl EvalReport {
    /// Aligned-column text tables, values in percent as mean±std.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mut runs: Vec<(&str, &Scored<MeanStd>)> = vec![(&self.method, &self.summary)];
        if let Some(h) = &self.human {
            runs.push(("Human", h));
        }
        let header = ["Method", "Top-1", "Top-3", "Top-10"];
        for (b, title) in ["Accuracy", "WUPS@0.9", "WUPS@0.0", "Fact accuracy"].iter().enumerate() {
            let rows: Vec<Vec<String>> = runs
                .iter()
                .map(|(name, s)| {
                    let atk = s.overall.metrics.blocks()[b].1;
                    let mut r = vec![name.to_string()];
                    r.extend(atk.values().map(pct));
                    r
                })
                .collect();
            table(&mut out, &format!("{title} (%)"), &header, &rows);
        }
        type Pick = fn(&Scored<MeanStd>) -> &Breakdown<MeanStd>;
        let breakdowns: [(&str, Pick); 3] = [
            ("KB source", |s| &s.by_kb_source),
            ("Visual concept", |s| &s.by_visual_concept),
            ("Answer source", |s| &s.by_answer_source),
        ];
        for (title, pick) in breakdowns {
            let keys: Vec<&String> = pick(&self.summary).keys().collect();
            let mut header = vec!["Method"];
            header.extend(keys.iter().map(|k| k.as_str()));
            let rows: Vec<Vec<String>> = runs
                .iter()
                .map(|(name, s)| {
                    let mut r = vec![name.to_string()];
                    r.extend(keys.iter().map(|k| {
                        pick(s)
                            .get(*k)
                            .map_or_else(|| "-".to_string(), |g| pct(g.metrics.accuracy.top1))
                    }));
                    r
                })
                .collect();
            table(&mut out, &format!("Top-1 accuracy by {title} (%)"), &header, &rows);
        }
        let counts: Vec<Vec<String>> = self
            .splits
            .iter()
            .map(|s| vec![s.split.to_string(), s.scores.overall.questions.to_string()])
            .collect();
        table(&mut out, "Test questions per split", &["Split", "Questions"], &counts);
        out
    }
}
