use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    class_weights, grid_search, macro_f1, split_dataset, split_dataset_stratified, train_svm, ClassWeights, EvalReport,
    SplitAssignment, TrainParams,
};
use crate::cluster::{fit_clusters, ClusterModel};
use crate::features::{
    assemble_domain_features, utterance_points, BlockSet, CoarseTagger, DomainFeatureVector, FeatureBlock,
    FeatureConfig,
};
use crate::lexicon::Lexicons;
use crate::par::{mix_seed, Execution};
use crate::tfidf::{fit_tfidf_with_stopwords, TfidfModel};

use super::{
    ingest, load_lexicons, CorpusStats, DatasetManifest, Document, Ingested, PipelineConfig, PipelineError,
    PipelineModel, RunOptions, Stage, Standardizer, MODEL_FORMAT, MODEL_FORMAT_VERSION,
};

const SPLIT_SALT: u64 = 1;
const CLUSTER_SALT: u64 = 2;
const SVM_SALT: u64 = 3;

struct Featurizer<'a> {
    lex: &'a Lexicons,
    tagger: CoarseTagger,
    clusters: Option<&'a ClusterModel>,
    cfg: FeatureConfig,
    blocks: BlockSet,
}

impl Featurizer<'_> {
    fn domain(&self, docs: &[&Document], exec: Execution) -> Result<Vec<DomainFeatureVector>, PipelineError> {
        exec.try_map(docs, |d| {
            assemble_domain_features(
                &d.screenplay,
                &d.partition,
                self.lex,
                &self.tagger,
                self.clusters,
                &self.cfg,
                self.blocks,
            )
            .map_err(|e| PipelineError::stage(&d.id, Stage::Features, e))
        })
    }
}

fn design_row(tfidf: &TfidfModel, scaler: &Standardizer, doc: &Document, domain: &[f64]) -> Vec<f64> {
    let mut row = tfidf.transform(&doc.sp_text);
    row.extend(scaler.apply(domain));
    row
}

fn fit_scaler(cfg: &PipelineConfig, rows: &[Vec<f64>], dim: usize) -> Standardizer {
    if cfg.scale_features && !rows.is_empty() {
        Standardizer::fit(rows)
    } else {
        Standardizer::identity(dim)
    }
}

/// The split, class weights and the train-only representation shared by
/// training and ablation.
struct Fitted<'a> {
    split: SplitAssignment,
    train: Vec<&'a Document>,
    val: Vec<&'a Document>,
    test: Vec<&'a Document>,
    weights: ClassWeights,
    tfidf: TfidfModel,
    clusters: Option<ClusterModel>,
}

fn fit_representation<'a>(
    ing: &'a Ingested,
    cfg: &PipelineConfig,
    blocks: BlockSet,
    lex: &Lexicons,
) -> Result<Fitted<'a>, PipelineError> {
    let (ids, labels) = (ing.ids(), ing.labels());
    let seed = mix_seed(cfg.seed, SPLIT_SALT);
    let split =
        if cfg.stratified { split_dataset_stratified(&ids, &labels, seed)? } else { split_dataset(&ids, seed)? };
    let by_id: HashMap<&str, &Document> = ing.docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let pick = |ids: &[String]| ids.iter().map(|id| by_id[id.as_str()]).collect::<Vec<_>>();
    let (train, val, test) = (pick(&split.train), pick(&split.val), pick(&split.test));

    let y: Vec<u8> = train.iter().map(|d| d.label).collect();
    let weights = class_weights(&y)?;

    let texts: Vec<&Vec<String>> = train.iter().map(|d| &d.sp_text).collect();
    let stopwords: BTreeSet<String> = cfg.stopwords.iter().cloned().collect();
    let tfidf = fit_tfidf_with_stopwords(&texts, cfg.top_k, stopwords)?;

    let clusters = if blocks.contains(FeatureBlock::Clus) {
        let points: Vec<Vec<f64>> =
            train.iter().flat_map(|d| utterance_points(&d.screenplay, &lex.categories, cfg.category_norm)).collect();
        Some(fit_clusters(&points, cfg.k_clusters, mix_seed(cfg.seed, CLUSTER_SALT), cfg.kmeans_max_iter)?)
    } else {
        None
    };
    Ok(Fitted { split, train, val, test, weights, tfidf, clusters })
}

fn labels(docs: &[&Document]) -> Vec<u8> {
    docs.iter().map(|d| d.label).collect()
}

fn absolute_paths(cfg: &PipelineConfig) -> PipelineConfig {
    let mut cfg = cfg.clone();
    for p in [&mut cfg.vad_lexicon, &mut cfg.intensity_lexicon, &mut cfg.category_lexicon].into_iter().flatten() {
        if let Ok(abs) = std::path::absolute(&*p) {
            *p = abs;
        }
    }
    cfg
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PipelineModel,
    pub val_report: EvalReport,
}

/// Split, fit tf-idf (and clusters when `clus` is enabled) on the training
/// split, pick `c` on validation, train the final model and report on
/// validation. The test split is left untouched.
pub fn run_train(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    opts: RunOptions,
) -> Result<TrainOutcome, PipelineError> {
    let lex = load_lexicons(cfg)?;
    let ing = ingest(manifest, cfg, cfg.blocks, opts)?;
    let fitted = fit_representation(&ing, cfg, cfg.blocks, &lex)?;
    let featurizer = Featurizer {
        lex: &lex,
        tagger: CoarseTagger,
        clusters: fitted.clusters.as_ref(),
        cfg: cfg.feature_config(),
        blocks: cfg.blocks,
    };
    let dom_train: Vec<Vec<f64>> =
        featurizer.domain(&fitted.train, opts.exec)?.iter().map(DomainFeatureVector::values).collect();
    let dom_val: Vec<Vec<f64>> =
        featurizer.domain(&fitted.val, opts.exec)?.iter().map(DomainFeatureVector::values).collect();
    let domain_dim = cfg.blocks.dims(cfg.k_clusters);
    let scaler = fit_scaler(cfg, &dom_train, domain_dim);

    let rows = |docs: &[&Document], dom: &[Vec<f64>]| -> Vec<Vec<f64>> {
        docs.iter().zip(dom).map(|(d, v)| design_row(&fitted.tfidf, &scaler, d, v)).collect()
    };
    let (x_train, x_val) = (rows(&fitted.train, &dom_train), rows(&fitted.val, &dom_val));
    let (y_train, y_val) = (labels(&fitted.train), labels(&fitted.val));

    let svm_seed = mix_seed(cfg.seed, SVM_SALT);
    let grid =
        grid_search(&x_train, &y_train, &x_val, &y_val, &cfg.c_grid, fitted.weights, svm_seed, cfg.epochs, opts.exec)?;
    let params = TrainParams { c: grid.best_c, class_weights: fitted.weights, seed: svm_seed, epochs: cfg.epochs };
    let svm = train_svm(&x_train, &y_train, params)?;
    let val_report = macro_f1(&y_val, &svm.predict_all(&x_val)?)?;

    let model = PipelineModel {
        format: MODEL_FORMAT.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        config: absolute_paths(cfg),
        blocks: cfg.blocks,
        split: fitted.split,
        stats: ing.stats.clone(),
        tfidf: fitted.tfidf,
        clusters: fitted.clusters,
        scaler,
        grid,
        svm,
    };
    model.check_consistency()?;
    Ok(TrainOutcome { model, val_report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: u8,
    pub predicted: u8,
    pub decision: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub predictions: Vec<Prediction>,
    pub stats: CorpusStats,
}

/// Scores a manifest with a trained model. Ids the model was fitted or
/// tuned on are refused unless `allow_overlap` is set.
pub fn run_eval(
    model: &PipelineModel,
    manifest: &DatasetManifest,
    opts: RunOptions,
) -> Result<EvalOutcome, PipelineError> {
    if !opts.allow_overlap {
        let seen: HashSet<&str> = model.seen_ids().collect();
        let overlap: Vec<&str> = manifest.ids().filter(|id| seen.contains(id)).collect();
        if let Some(first) = overlap.first() {
            return Err(PipelineError::OverlappingSplit { count: overlap.len(), first: first.to_string() });
        }
    }
    let cfg = &model.config;
    let lex = load_lexicons(cfg)?;
    let ing = ingest(manifest, cfg, model.blocks, opts)?;
    if ing.docs.is_empty() {
        return Err(PipelineError::EmptyEvaluation);
    }
    let featurizer = Featurizer {
        lex: &lex,
        tagger: CoarseTagger,
        clusters: model.clusters.as_ref(),
        cfg: cfg.feature_config(),
        blocks: model.blocks,
    };
    let docs: Vec<&Document> = ing.docs.iter().collect();
    let domain = featurizer.domain(&docs, opts.exec)?;
    let predictions = docs
        .iter()
        .zip(&domain)
        .map(|(d, v)| {
            let x = design_row(&model.tfidf, &model.scaler, d, &v.values());
            let decision = model.svm.decision(&x)?;
            Ok(Prediction { id: d.id.clone(), label: d.label, predicted: (decision >= 0.0) as u8, decision })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let y: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    let y_hat: Vec<u8> = predictions.iter().map(|p| p.predicted).collect();
    let report = macro_f1(&y, &y_hat).map_err(|_| PipelineError::EmptyEvaluation)?;
    Ok(EvalOutcome { report, predictions, stats: ing.stats })
}

pub fn write_predictions_csv<W: Write>(predictions: &[Prediction], out: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "label", "predicted", "decision"])?;
    for p in predictions {
        w.write_record([p.id.clone(), p.label.to_string(), p.predicted.to_string(), p.decision.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub blocks: BlockSet,
    pub domain_dims: usize,
    pub best_c: f64,
    pub val_macro_f1: f64,
    pub test: EvalReport,
}

/// One train/evaluate cycle per block set on a shared split, shared
/// tf-idf and shared cluster model; each row reports the test split.
pub fn run_ablation(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    block_sets: &[BlockSet],
    opts: RunOptions,
) -> Result<Vec<AblationRow>, PipelineError> {
    let union = block_sets.iter().fold(BlockSet::EMPTY, |a, b| a.union(*b));
    let lex = load_lexicons(cfg)?;
    let ing = ingest(manifest, cfg, union, opts)?;
    let fitted = fit_representation(&ing, cfg, union, &lex)?;
    let featurizer = Featurizer {
        lex: &lex,
        tagger: CoarseTagger,
        clusters: fitted.clusters.as_ref(),
        cfg: cfg.feature_config(),
        blocks: union,
    };
    let dom_train = featurizer.domain(&fitted.train, opts.exec)?;
    let dom_val = featurizer.domain(&fitted.val, opts.exec)?;
    let dom_test = featurizer.domain(&fitted.test, opts.exec)?;
    let (y_train, y_val, y_test) = (labels(&fitted.train), labels(&fitted.val), labels(&fitted.test));
    let svm_seed = mix_seed(cfg.seed, SVM_SALT);

    let mut rows = Vec::with_capacity(block_sets.len());
    for &set in block_sets {
        let select =
            |dom: &[DomainFeatureVector]| -> Vec<Vec<f64>> { dom.iter().map(|v| v.select(set).values()).collect() };
        let (s_train, s_val, s_test) = (select(&dom_train), select(&dom_val), select(&dom_test));
        let domain_dims = set.dims(cfg.k_clusters);
        let scaler = fit_scaler(cfg, &s_train, domain_dims);
        let design = |docs: &[&Document], dom: &[Vec<f64>]| -> Vec<Vec<f64>> {
            docs.iter().zip(dom).map(|(d, v)| design_row(&fitted.tfidf, &scaler, d, v)).collect()
        };
        let (x_train, x_val, x_test) =
            (design(&fitted.train, &s_train), design(&fitted.val, &s_val), design(&fitted.test, &s_test));
        let grid = grid_search(
            &x_train,
            &y_train,
            &x_val,
            &y_val,
            &cfg.c_grid,
            fitted.weights,
            svm_seed,
            cfg.epochs,
            opts.exec,
        )?;
        let params = TrainParams { c: grid.best_c, class_weights: fitted.weights, seed: svm_seed, epochs: cfg.epochs };
        let svm = train_svm(&x_train, &y_train, params)?;
        let test = macro_f1(&y_test, &svm.predict_all(&x_test)?)?;
        log::info!("ablation {set}: c = {}, val {:.4}, test {:.4}", grid.best_c, grid.val_macro_f1, test.macro_f1);
        rows.push(AblationRow { blocks: set, domain_dims, best_c: grid.best_c, val_macro_f1: grid.val_macro_f1, test });
    }
    Ok(rows)
}

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], out: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "blocks",
        "domain_dims",
        "best_c",
        "val_macro_f1",
        "test_macro_f1",
        "f1_pos",
        "f1_neg",
        "tp",
        "fp",
        "fn",
        "tn",
    ])?;
    for r in rows {
        let t = &r.test;
        w.write_record([
            r.blocks.to_string(),
            r.domain_dims.to_string(),
            r.best_c.to_string(),
            r.val_macro_f1.to_string(),
            t.macro_f1.to_string(),
            t.f1_pos.to_string(),
            t.f1_neg.to_string(),
            t.tp.to_string(),
            t.fp.to_string(),
            t.fn_.to_string(),
            t.tn.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes one CSV row of domain features per kept document. Without a
/// fitted model the `clus` block clusters the manifest's own utterances.
/// Returns the number of rows written.
pub fn export_features<W: Write>(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    blocks: BlockSet,
    clusters: Option<&ClusterModel>,
    opts: RunOptions,
    out: W,
) -> Result<usize, PipelineError> {
    let lex = load_lexicons(cfg)?;
    let ing = ingest(manifest, cfg, blocks, opts)?;
    let fitted_here;
    let clusters = match clusters {
        Some(c) => Some(c),
        None if blocks.contains(FeatureBlock::Clus) => {
            let points: Vec<Vec<f64>> = ing
                .docs
                .iter()
                .flat_map(|d| utterance_points(&d.screenplay, &lex.categories, cfg.category_norm))
                .collect();
            fitted_here = fit_clusters(&points, cfg.k_clusters, mix_seed(cfg.seed, CLUSTER_SALT), cfg.kmeans_max_iter)?;
            Some(&fitted_here)
        }
        None => None,
    };
    let featurizer = Featurizer { lex: &lex, tagger: CoarseTagger, clusters, cfg: cfg.feature_config(), blocks };
    let docs: Vec<&Document> = ing.docs.iter().collect();
    let domain = featurizer.domain(&docs, opts.exec)?;

    let mut w = csv::Writer::from_writer(out);
    let k = clusters.map_or(0, |c| c.k);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(blocks.column_names(k));
    w.write_record(&header)?;
    for (d, v) in docs.iter().zip(&domain) {
        let mut rec = vec![d.id.clone(), d.label.to_string()];
        rec.extend(v.values().iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(docs.len())
}
