//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scriptnarr::classifier::{class_weights, svm_objective, train_svm, ClassWeights, TrainParams};
use scriptnarr::features::{pcar_change_score, total_variation};
use scriptnarr::pipeline::{
    run_ablation, run_eval, run_train, DatasetManifest, PipelineConfig, PipelineModel, RunOptions,
};
use scriptnarr::segment::partition_segments;
use scriptnarr::synth::{write_corpus, SynthConfig};
use scriptnarr::tfidf::fit_tfidf;
use scriptnarr::BlockSet;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn segmenter_exactness() -> Check {
    let start = Instant::now();
    let expected = [0, 100, 200, 300, 400, 499, 599, 699, 799];
    ensure(partition_segments(800).unwrap().sp_indices == expected, "n = 800 structural points differ")?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.random_range(1..=100_000usize);
        let p = partition_segments(n).map_err(|e| e.to_string())?;
        let mut cursor = 0;
        for (i, seg) in p.segments.iter().enumerate() {
            ensure(seg.start == cursor && seg.start == p.sp_indices[i], format!("n = {n}: segment {i} does not tile"))?;
            cursor = seg.end;
        }
        ensure(cursor == n, format!("n = {n}: segments end at {cursor}"))?;
        ensure(p.sp_indices.windows(2).all(|w| w[0] <= w[1]), format!("n = {n}: not monotone"))?;
        for (i, &sp) in p.sp_indices.iter().enumerate() {
            let oracle = ((i * (n - 1)) as f64 / 8.0 + 0.5).floor() as usize;
            ensure(sp == oracle, format!("n = {n}: sp{i} = {sp}, expected {oracle}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("1000 lengths, n = 800 exact, {:.2?}", start.elapsed()))
}

fn multinomial_unit(rng: &mut ChaCha8Rng, probs: &[f64], draws: usize) -> Vec<f64> {
    let mut hist = vec![0.0; probs.len()];
    for _ in 0..draws {
        let mut u: f64 = rng.random();
        let k = probs.iter().position(|&p| {
            u -= p;
            u < 0.0
        });
        hist[k.unwrap_or(probs.len() - 1)] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= draws as f64);
    hist
}

fn pcar_soundness() -> Check {
    let start = Instant::now();
    let probs = [0.4, 0.25, 0.15, 0.12, 0.08];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rejections = 0;
    for trial in 0..1000u64 {
        let (na, nb) = (rng.random_range(3..=12), rng.random_range(3..=12));
        let a: Vec<Vec<f64>> = (0..na).map(|_| multinomial_unit(&mut rng, &probs, 12)).collect();
        let b: Vec<Vec<f64>> = (0..nb).map(|_| multinomial_unit(&mut rng, &probs, 12)).collect();
        if pcar_change_score(&a, &b, 499, trial).map_err(|e| e.to_string())?.p_value <= 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / 1000.0;
    ensure((0.03..=0.07).contains(&rate), format!("null rejection rate {rate}"))?;

    let a = vec![vec![1.0, 0.0]; 2];
    let b = vec![vec![0.0, 1.0]; 2];
    let pooled: Vec<&Vec<f64>> = a.iter().chain(&b).collect();
    let observed = total_variation(&[1.0, 0.0], &[0.0, 1.0]);
    let mut extreme = 0;
    let mut splits = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            let mean = |idx: &[usize]| -> Vec<f64> {
                let mut m = vec![0.0; 2];
                idx.iter().for_each(|&k| m.iter_mut().zip(pooled[k]).for_each(|(s, x)| *s += x / idx.len() as f64));
                m
            };
            let rest: Vec<usize> = (0..4).filter(|k| *k != i && *k != j).collect();
            splits += 1;
            if total_variation(&mean(&[i, j]), &mean(&rest)) >= observed - 1e-12 {
                extreme += 1;
            }
        }
    }
    let oracle = extreme as f64 / splits as f64;
    let score = pcar_change_score(&a, &b, 10_000, 3).map_err(|e| e.to_string())?;
    ensure(score.distance == 1.0, format!("2+2 distance {}", score.distance))?;
    ensure((score.p_value - oracle).abs() <= 0.05, format!("2+2 p = {}, enumeration {oracle}", score.p_value))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("null P(p<=0.05) = {rate:.3}, 2+2 p = {:.4} vs {oracle:.4}, {:.2?}", score.p_value, start.elapsed()))
}

/// Straight from the definitions, no shared code with the library.
fn reference_tfidf(docs: &[Vec<String>], top_k: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let n = docs.len() as f64;
    let vocab: BTreeSet<&String> = docs.iter().flatten().collect();
    let df = |t: &str| docs.iter().filter(|d| d.iter().any(|x| x == t)).count() as f64;
    let idf = |t: &str| ((1.0 + n) / (1.0 + df(t))).ln() + 1.0;
    let tf = |t: &str, d: &[String]| d.iter().filter(|x| *x == t).count() as f64;
    let mut ranked: Vec<(f64, &String)> =
        vocab.iter().map(|t| (docs.iter().map(|d| tf(t, d) * idf(t)).sum::<f64>(), *t)).collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(b.1)));
    let selected: Vec<String> = ranked.iter().take(top_k).map(|(_, t)| (*t).clone()).collect();
    let vectors = docs
        .iter()
        .map(|d| {
            let raw: Vec<f64> = selected.iter().map(|t| tf(t, d) * idf(t)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            raw.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
        })
        .collect();
    (selected, vectors)
}

fn tfidf_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for corpus in 0..200 {
        let vocab = rng.random_range(1..=30);
        let n_docs = rng.random_range(1..=20);
        let docs: Vec<Vec<String>> = (0..n_docs)
            .map(|_| (0..rng.random_range(0..=50)).map(|_| format!("w{}", rng.random_range(0..vocab))).collect())
            .collect();
        let top_k = rng.random_range(1..=vocab + 3);
        let model = fit_tfidf(&docs, top_k).map_err(|e| e.to_string())?;
        let (selected, reference) = reference_tfidf(&docs, top_k);
        ensure(model.selected == selected, format!("corpus {corpus}: selection differs"))?;
        for (d, r) in docs.iter().zip(&reference) {
            let v = model.transform(d);
            for (x, y) in v.iter().zip(r) {
                worst = worst.max((x - y).abs());
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            ensure(norm == 0.0 || (norm - 1.0).abs() <= 1e-9, format!("corpus {corpus}: norm {norm}"))?;
        }
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("200 corpora, max deviation {worst:.1e}"))
}

/// Coarse-to-fine scan of the objective over `(w1, w2, b)`.
fn grid_minimum(x: &[Vec<f64>], y: &[u8], c: f64, cw: ClassWeights) -> f64 {
    let mut best = ([0.0; 3], f64::INFINITY);
    for (half, step) in [(32i32, 0.25), (15, 0.02), (10, 0.002)] {
        let center = best.0;
        for i in -half..=half {
            for j in -half..=half {
                for k in -half..=half {
                    let p = [center[0] + i as f64 * step, center[1] + j as f64 * step, center[2] + k as f64 * step];
                    let o = svm_objective(&p[..2], p[2], x, y, c, cw);
                    if o < best.1 {
                        best = (p, o);
                    }
                }
            }
        }
    }
    best.1
}

fn svm_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let c = 1.0;
    let mut worst: f64 = 0.0;
    for set in 0..50 {
        let n = rng.random_range(2..=8);
        let (x, y) = loop {
            let x: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            if y.contains(&0) && y.contains(&1) {
                break (x, y);
            }
        };
        let cw = class_weights(&y).map_err(|e| e.to_string())?;
        let params = TrainParams { c, class_weights: cw, seed: set, epochs: 100 };
        let a = train_svm(&x, &y, params).map_err(|e| e.to_string())?;
        let b = train_svm(&x, &y, params).map_err(|e| e.to_string())?;
        let bits =
            |m: &scriptnarr::SvmModel| (m.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(), m.bias.to_bits());
        ensure(bits(&a) == bits(&b), format!("dataset {set}: retraining changed the model"))?;
        let ratio = a.objective(&x, &y) / grid_minimum(&x, &y, c, cw);
        worst = worst.max(ratio);
    }
    ensure(worst <= 1.05, format!("worst objective / grid minimum = {worst:.4}"))?;
    Ok(format!("50 datasets at c = 1, worst ratio {worst:.4}, bit-reproducible"))
}

fn shuffled(m: &DatasetManifest, seed: u64) -> DatasetManifest {
    let mut out = m.clone();
    let mut labels: Vec<u8> = out.entries.iter().map(|e| e.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out.entries.iter_mut().zip(labels).for_each(|(e, l)| e.label = l);
    out
}

fn train_then_test(m: &DatasetManifest, cfg: &PipelineConfig) -> Result<f64, String> {
    let opts = RunOptions::default();
    let trained = run_train(m, cfg, opts).map_err(|e| e.to_string())?;
    let test = m.subset(&trained.model.split.test);
    Ok(run_eval(&trained.model, &test, opts).map_err(|e| e.to_string())?.report.macro_f1)
}

fn planted_signal() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = SynthConfig { n_docs: 200, tokens_per_doc: 5000, seed: 5, ..SynthConfig::default() };
    let manifest = write_corpus(dir.path(), &synth).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig { seed: 5, ..PipelineConfig::default() };
    let f1 = train_then_test(&manifest, &cfg)?;
    ensure(f1 >= 0.9, format!("planted-signal test macro-F1 {f1:.3}"))?;
    let runs = 20;
    let mut total = 0.0;
    for s in 0..runs {
        total += train_then_test(&shuffled(&manifest, 100 + s), &cfg)?;
    }
    let null = total / runs as f64;
    ensure((0.4..=0.6).contains(&null), format!("shuffled-label macro-F1 {null:.3}"))?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("test macro-F1 {f1:.3}, shuffled labels {null:.3} (mean of {runs}), {:.2?}", start.elapsed()))
}

fn ablation_gain() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = SynthConfig { markers: false, arcs: true, seed: 6, ..SynthConfig::default() };
    let manifest = write_corpus(dir.path(), &synth).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig { seed: 6, ..PipelineConfig::default() };
    let sets = [BlockSet::EMPTY, "ling,emo".parse().unwrap()];
    let rows = run_ablation(&manifest, &cfg, &sets, RunOptions::default()).map_err(|e| e.to_string())?;
    let (base, full) = (rows[0].test.macro_f1, rows[1].test.macro_f1);
    ensure(full - base >= 0.15, format!("none {base:.3} vs ling+emo {full:.3}"))?;
    Ok(format!("none {base:.3}, ling+emo {full:.3}, gain {:.3}", full - base))
}

fn full_run(corpus: &std::path::Path) -> Result<(Vec<u8>, Vec<u8>, PipelineModel), String> {
    let synth = SynthConfig { n_docs: 60, tokens_per_doc: 2000, arcs: true, seed: 7, ..SynthConfig::default() };
    let manifest = write_corpus(corpus, &synth).map_err(|e| e.to_string())?;
    let blocks: BlockSet = "ling,emo,tt,vad,int,clus".parse().unwrap();
    let cfg = PipelineConfig { seed: 7, blocks, n_perm: 99, ..PipelineConfig::default() };
    let opts = RunOptions::default();
    let trained = run_train(&manifest, &cfg, opts).map_err(|e| e.to_string())?;
    let model_path = corpus.join("model.json");
    trained.model.save(&model_path).map_err(|e| e.to_string())?;
    let loaded = PipelineModel::load(&model_path).map_err(|e| e.to_string())?;
    let report = run_eval(&loaded, &manifest.subset(&loaded.split.test), opts).map_err(|e| e.to_string())?.report;
    let report_json = serde_json::to_vec_pretty(&report).map_err(|e| e.to_string())?;
    let model_bytes = std::fs::read(&model_path).map_err(|e| e.to_string())?;
    ensure(loaded == trained.model, "loaded model differs from the trained one")?;
    Ok((model_bytes, report_json, trained.model))
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let (model_a, report_a, model) = full_run(a.path())?;
    let (model_b, report_b, _) = full_run(b.path())?;
    ensure(model_a == model_b, "model files differ between runs")?;
    ensure(report_a == report_b, "reports differ between runs")?;

    let loaded = PipelineModel::from_json(&model.to_json()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let x: Vec<f64> = (0..model.feature_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (p, q) = (model.svm.decision(&x).unwrap(), loaded.svm.decision(&x).unwrap());
        ensure(p.to_bits() == q.to_bits(), "round-trip changed a decision value")?;
    }
    Ok(format!("{} model bytes identical, 100 predictions preserved", model_a.len()))
}

fn class_weighting() -> Check {
    let labels: Vec<u8> = (0..868).map(|i| (i < 113) as u8).collect();
    let w = class_weights(&labels).map_err(|e| e.to_string())?;
    let (pos, neg) = (3.840_707_964_601_77, 0.574_834_437_086_092_7);
    ensure((w.pos - pos).abs() <= 1e-9 && (w.neg - neg).abs() <= 1e-9, format!("got ({}, {})", w.pos, w.neg))?;
    Ok(format!("({:.10}, {:.10})", w.pos, w.neg))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("segmenter exactness", segmenter_exactness),
        ("change-score soundness", pcar_soundness),
        ("tf-idf oracle equivalence", tfidf_oracle),
        ("svm objective oracle", svm_oracle),
        ("end-to-end planted signal", planted_signal),
        ("ablation gain from activity curves", ablation_gain),
        ("determinism and persistence", determinism),
        ("class weighting", class_weighting),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += result.is_err() as usize;
        println!("{tag} {} {name}: {detail}", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
