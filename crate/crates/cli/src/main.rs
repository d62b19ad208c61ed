//! `scriptnarr` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use serde_json::json;

use scriptnarr::features::{BlockSet, FeatureBlock};
use scriptnarr::par::init_threads;
use scriptnarr::parser::{parse_screenplay_bytes, ElementKind};
use scriptnarr::pipeline::{
    emit_plot_data, export_features, run_ablation, run_eval, run_train, write_ablation_csv, write_predictions_csv,
    DatasetManifest, PipelineConfig, PipelineError, PipelineModel, RunOptions,
};
use scriptnarr::segment::{partition_segments, window_half_width, DEFAULT_WINDOW_PCT};
use scriptnarr::synth::{write_corpus, SynthConfig};
use scriptnarr::Execution;

#[derive(Parser)]
#[command(
    name = "scriptnarr",
    version,
    about = "Screenplay award-nomination prediction from structural-point features"
)]
struct Cli {
    /// Worker threads for per-document stages (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus with planted signals.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        docs: usize,
        /// Approximate tokens per script.
        #[arg(long, default_value_t = 5000)]
        tokens: usize,
        /// Comma-separated: marker, arc, arousal, or none.
        #[arg(long, default_value = "marker")]
        signals: String,
        #[arg(long, default_value_t = 0.5)]
        positive_fraction: f64,
        #[arg(long, default_value_t = 3)]
        markers_per_window: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW_PCT)]
        window_pct: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse one script and print its structure as JSON.
    Parse {
        script: PathBuf,
        #[arg(long)]
        id: Option<String>,
        /// Include every element in the output.
        #[arg(long)]
        elements: bool,
        #[arg(long, default_value_t = DEFAULT_WINDOW_PCT)]
        window_pct: f64,
    },
    /// Export domain feature vectors as CSV.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Blocks to export, e.g. `ling,emo,tt` or `all`.
        #[arg(long, default_value = "all")]
        blocks: String,
        /// Take the cluster model from a trained model file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        skip_errors: bool,
    },
    /// Fit tf-idf, domain features and the SVM; report on validation.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's feature blocks.
        #[arg(long)]
        blocks: Option<String>,
        /// Write the validation report here as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write a manifest of the held-out test split here.
        #[arg(long)]
        test_manifest: Option<PathBuf>,
        #[arg(long)]
        skip_errors: bool,
    },
    /// Evaluate a trained model on a manifest.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Allow ids the model was trained or tuned on.
        #[arg(long)]
        allow_overlap: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-document predictions as CSV.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        skip_errors: bool,
    },
    /// Train and test once per feature-block set on a shared split.
    Ablate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// A block set such as `none`, `tt` or `ling+emo`; repeatable.
        /// Default: none, each block alone, and all blocks.
        #[arg(long = "blocks")]
        block_sets: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        skip_errors: bool,
    },
    /// Class means of an affect value at each structural point.
    Plot {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// vad.valence, vad.arousal, vad.dominance, int.anger, int.fear,
        /// int.joy or int.sadness.
        #[arg(long)]
        feature: String,
        /// CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Also render an SVG line chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        skip_errors: bool,
    },
    /// Summarise a model file.
    InspectModel {
        model: PathBuf,
        /// Write the tf-idf vocabulary as TSV.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Number of strongest terms to list per class.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Inconsistent(_) => Failure::Internal(e.to_string()),
            PipelineError::UnknownFeature(_) | PipelineError::UnknownBlock(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn parse_blocks(s: &str) -> Result<BlockSet, Failure> {
    if s.trim() == "all" {
        return Ok(BlockSet::all());
    }
    s.parse().map_err(|_| Failure::from(PipelineError::UnknownBlock(s.to_string())))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig, Failure> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Data(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, Failure> {
    Ok(DatasetManifest::load(path)?)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable") + "\n"
}

fn gen_corpus(out: &Path, synth: SynthConfig) -> Outcome {
    let manifest = write_corpus(out, &synth)?;
    let positives = manifest.entries.iter().filter(|e| e.label == 1).count();
    eprintln!("wrote {} scripts ({positives} nominated) to {}", manifest.entries.len(), out.display());
    Ok(())
}

fn parse_cmd(script: &Path, id: Option<String>, elements: bool, window_pct: f64) -> Outcome {
    let raw = std::fs::read(script).map_err(|e| io_failure(script, e))?;
    let id = id.unwrap_or_else(|| script.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let s = parse_screenplay_bytes(&raw, &id).map_err(|e| Failure::Data(format!("{}: {e}", script.display())))?;
    let partition = partition_segments(s.len()).map_err(|e| Failure::Data(e.to_string()))?;
    let count = |k: ElementKind| s.elements.iter().filter(|e| e.kind == k).count();
    let mut characters = s.character_profiles();
    characters.sort_by(|a, b| b.total_tokens.cmp(&a.total_tokens).then_with(|| a.name.cmp(&b.name)));
    let mut out = json!({
        "id": s.id,
        "tokens": s.len(),
        "scene_headings": count(ElementKind::SceneHeading),
        "action": count(ElementKind::Action),
        "dialogue": count(ElementKind::Dialogue),
        "structural_points": partition.sp_indices,
        "window_half_width": window_half_width(s.len(), window_pct),
        "characters": characters
            .iter()
            .map(|c| json!({ "name": c.name, "utterances": c.utterances.len(), "tokens": c.total_tokens }))
            .collect::<Vec<_>>(),
    });
    if elements {
        out["elements"] = serde_json::to_value(&s.elements).expect("serialisable");
    }
    print!("{}", to_json(&out));
    Ok(())
}

fn inspect(path: &Path, vocab: Option<&Path>, top: usize) -> Outcome {
    let model = PipelineModel::load(path)?;
    let n_terms = model.tfidf.dim();
    let mut terms: Vec<(&String, f64)> =
        model.tfidf.selected.iter().zip(&model.svm.weights[..n_terms]).map(|(t, &w)| (t, w)).collect();
    terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let pick = |it: &mut dyn Iterator<Item = &(&String, f64)>| -> Vec<serde_json::Value> {
        it.take(top).map(|(t, w)| json!({ "term": t, "weight": w })).collect()
    };
    let summary = json!({
        "format": model.format,
        "format_version": model.format_version,
        "blocks": model.blocks.to_string(),
        "feature_dim": model.feature_dim(),
        "tfidf_dim": n_terms,
        "domain_dim": model.domain_dim(),
        "vocabulary": model.tfidf.vocabulary.len(),
        "clusters": model.k_clusters(),
        "seed": model.config.seed,
        "best_c": model.grid.best_c,
        "val_macro_f1": model.grid.val_macro_f1,
        "grid": model.grid.scores,
        "split": { "train": model.split.train.len(), "val": model.split.val.len(), "test": model.split.test.len() },
        "corpus": model.stats,
        "class_weights": model.svm.class_weights,
        "bias": model.svm.bias,
        "top_nominated_terms": pick(&mut terms.iter()),
        "top_non_nominated_terms": pick(&mut terms.iter().rev()),
    });
    print!("{}", to_json(&summary));
    if let Some(p) = vocab {
        let mut w = create(p)?;
        model.tfidf.write_vocabulary_tsv(&mut w).map_err(|e| Failure::Data(e.to_string()))?;
        w.flush().map_err(|e| io_failure(p, e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        init_threads(n);
    }
    let opts = |skip_errors: bool| RunOptions { exec, skip_errors, allow_overlap: false };

    match cli.command {
        Command::GenCorpus { out, docs, tokens, signals, positive_fraction, markers_per_window, window_pct, seed } => {
            let mut synth = SynthConfig {
                n_docs: docs,
                tokens_per_doc: tokens,
                positive_fraction,
                seed,
                markers: false,
                arcs: false,
                arousal: false,
                markers_per_window,
                window_pct,
            };
            for s in signals.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match s {
                    "marker" | "markers" => synth.markers = true,
                    "arc" | "arcs" => synth.arcs = true,
                    "arousal" => synth.arousal = true,
                    "none" => {}
                    other => {
                        return Err(Failure::Usage(format!(
                            "unknown signal {other:?}; expected marker, arc, arousal or none"
                        )))
                    }
                }
            }
            if docs < 1 || tokens < 20 || !(0.0..=1.0).contains(&positive_fraction) {
                return Err(Failure::Usage(
                    "need --docs >= 1, --tokens >= 20 and --positive-fraction in [0, 1]".into(),
                ));
            }
            gen_corpus(&out, synth)
        }
        Command::Parse { script, id, elements, window_pct } => parse_cmd(&script, id, elements, window_pct),
        Command::Features { manifest, config, blocks, model, out, skip_errors } => {
            let blocks = parse_blocks(&blocks)?;
            let cfg = load_config(config.as_deref(), None)?;
            let manifest = load_manifest(&manifest)?;
            let model = model.map(|p| PipelineModel::load(&p)).transpose()?;
            let clusters = model.as_ref().and_then(|m| m.clusters.as_ref());
            if blocks.contains(FeatureBlock::Clus) && model.is_some() && clusters.is_none() {
                return Err(Failure::Data("the model has no cluster model; drop clus or the --model flag".into()));
            }
            let mut w = output(out.as_deref())?;
            let n = export_features(&manifest, &cfg, blocks, clusters, opts(skip_errors), &mut w)?;
            w.flush().map_err(|e| Failure::Data(e.to_string()))?;
            eprintln!("exported {n} rows");
            Ok(())
        }
        Command::Train { manifest, config, out, seed, blocks, report, test_manifest, skip_errors } => {
            let mut cfg = load_config(config.as_deref(), seed)?;
            if let Some(b) = blocks {
                cfg.blocks = parse_blocks(&b)?;
            }
            let m = load_manifest(&manifest)?;
            let trained = run_train(&m, &cfg, opts(skip_errors))?;
            trained.model.save(&out)?;
            let s = &trained.model.stats;
            eprintln!(
                "kept {}/{} scripts ({} filtered, {} failed); best c = {}; validation macro-F1 {:.4}",
                s.kept,
                s.manifest_entries,
                s.filtered.len(),
                s.failed.len(),
                trained.model.grid.best_c,
                trained.val_report.macro_f1
            );
            if let Some(p) = test_manifest {
                m.subset(&trained.model.split.test).save(&p)?;
            }
            let text = to_json(&trained.val_report);
            if let Some(p) = report {
                write_text(&p, &text)?;
            }
            print!("{text}");
            Ok(())
        }
        Command::Eval { model, manifest, allow_overlap, report, predictions, skip_errors } => {
            let model = PipelineModel::load(&model)?;
            let m = load_manifest(&manifest)?;
            let outcome = run_eval(&model, &m, RunOptions { allow_overlap, ..opts(skip_errors) })?;
            if let Some(p) = predictions {
                let mut w = create(&p)?;
                write_predictions_csv(&outcome.predictions, &mut w)?;
            }
            let text = to_json(&outcome.report);
            if let Some(p) = report {
                write_text(&p, &text)?;
            }
            print!("{text}");
            Ok(())
        }
        Command::Ablate { manifest, config, block_sets, seed, out, skip_errors } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let sets: Vec<BlockSet> = if block_sets.is_empty() {
                let mut v = vec![BlockSet::EMPTY];
                v.extend(FeatureBlock::ALL.iter().map(|&b| std::iter::once(b).collect::<BlockSet>()));
                v.push(BlockSet::all());
                v
            } else {
                block_sets.iter().map(|s| parse_blocks(s)).collect::<Result<_, _>>()?
            };
            let m = load_manifest(&manifest)?;
            let rows = run_ablation(&m, &cfg, &sets, opts(skip_errors))?;
            let mut w = output(out.as_deref())?;
            write_ablation_csv(&rows, &mut w)?;
            w.flush().map_err(|e| Failure::Data(e.to_string()))?;
            Ok(())
        }
        Command::Plot { manifest, config, feature, out, svg, skip_errors } => {
            let cfg = load_config(config.as_deref(), None)?;
            feature.parse::<scriptnarr::pipeline::PlotFeature>()?;
            let m = load_manifest(&manifest)?;
            let data = emit_plot_data(&m, &cfg, &feature, opts(skip_errors))?;
            let mut w = create(&out)?;
            data.write_csv(&mut w)?;
            if let Some(p) = svg {
                write_text(&p, &data.to_svg())?;
            }
            eprintln!(
                "{}: {} nominated, {} non-nominated scripts",
                data.feature, data.n_nominated, data.n_non_nominated
            );
            Ok(())
        }
        Command::InspectModel { model, vocab, top } => inspect(&model, vocab.as_deref(), top),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
