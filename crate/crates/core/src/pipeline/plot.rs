use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use crate::features::{intensity_profile, vad_profile, BlockSet};
use crate::lexicon::Emotion;
use crate::segment::{context_windows, NUM_SEGMENTS, NUM_STRUCTURAL_POINTS};

use super::{ingest, load_lexicons, DatasetManifest, PipelineConfig, PipelineError, RunOptions, Stage};

const VAD_DIMS: [&str; 3] = ["valence", "arousal", "dominance"];

/// A per-SP affect value that can be averaged across scripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFeature {
    /// Index into valence, arousal, dominance.
    Vad(usize),
    Int(Emotion),
}

impl FromStr for PlotFeature {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || PipelineError::UnknownFeature(s.to_string());
        let (block, dim) = s.split_once('.').ok_or_else(unknown)?;
        match block {
            "vad" => VAD_DIMS.iter().position(|d| *d == dim).map(PlotFeature::Vad).ok_or_else(unknown),
            "int" => Emotion::parse(dim).map(PlotFeature::Int).ok_or_else(unknown),
            _ => Err(unknown()),
        }
    }
}

impl std::fmt::Display for PlotFeature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotFeature::Vad(d) => write!(f, "vad.{}", VAD_DIMS[*d]),
            PlotFeature::Int(e) => write!(f, "int.{}", e.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    /// Percent of the script, `0, 12.5, …, 100`.
    pub position: f64,
    pub nominated: Option<f64>,
    pub non_nominated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub feature: PlotFeature,
    pub n_nominated: usize,
    pub n_non_nominated: usize,
    pub rows: Vec<PlotRow>,
}

/// Class means of one affect value at each structural point.
pub fn emit_plot_data(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    feature: &str,
    opts: RunOptions,
) -> Result<PlotData, PipelineError> {
    let feature: PlotFeature = feature.parse()?;
    let lex = load_lexicons(cfg)?;
    let ing = ingest(manifest, cfg, BlockSet::EMPTY, opts)?;
    let curves = opts.exec.try_map(&ing.docs, |d| {
        let windows = context_windows(&d.screenplay, &d.partition, cfg.window_pct)
            .map_err(|e| PipelineError::stage(&d.id, Stage::Features, e))?;
        let values: Vec<f64> = match feature {
            PlotFeature::Vad(dim) => vad_profile(&windows, &lex.vad).chunks(3).map(|c| c[dim]).collect(),
            PlotFeature::Int(e) => {
                intensity_profile(&windows, &lex.intensity).chunks(Emotion::ALL.len()).map(|c| c[e as usize]).collect()
            }
        };
        Ok::<_, PipelineError>((d.label, values))
    })?;

    let mean = |label: u8| -> (usize, Vec<Option<f64>>) {
        let members: Vec<&Vec<f64>> = curves.iter().filter(|(l, _)| *l == label).map(|(_, v)| v).collect();
        let n = members.len();
        let means = (0..NUM_STRUCTURAL_POINTS)
            .map(|sp| (n > 0).then(|| members.iter().map(|v| v[sp]).sum::<f64>() / n as f64))
            .collect();
        (n, means)
    };
    let (n_nominated, pos) = mean(1);
    let (n_non_nominated, neg) = mean(0);
    let rows = (0..NUM_STRUCTURAL_POINTS)
        .map(|sp| PlotRow {
            position: sp as f64 * 100.0 / NUM_SEGMENTS as f64,
            nominated: pos[sp],
            non_nominated: neg[sp],
        })
        .collect();
    Ok(PlotData { feature, n_nominated, n_non_nominated, rows })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl PlotData {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["script_percentile_position", "mean_value_nominated", "mean_value_non_nominated"])?;
        for r in &self.rows {
            w.write_record([r.position.to_string(), cell(r.nominated), cell(r.non_nominated)])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// A two-line chart of the class means along the script.
    pub fn to_svg(&self) -> String {
        let (width, height, left, right, top, bottom) = (640.0, 400.0, 60.0, 150.0, 40.0, 50.0);
        let values: Vec<f64> = self.rows.iter().flat_map(|r| [r.nominated, r.non_nominated]).flatten().collect();
        let (mut lo, mut hi) =
            values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.1).max(0.01);
        (lo, hi) = (lo - pad, hi + pad);
        let px = |pos: f64| left + pos / 100.0 * (width - left - right);
        let py = |v: f64| top + (hi - v) / (hi - lo) * (height - top - bottom);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            (left + width - right) / 2.0,
            self.feature
        );
        let (x0, x1, y0, y1) = (px(0.0), px(100.0), py(lo), py(hi));
        let _ =
            writeln!(s, r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#);
        for r in &self.rows {
            let x = px(r.position);
            let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}%</text>"#, y0 + 18.0, r.position);
        }
        for i in 0..=4 {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            let y = py(v);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, left - 6.0, y + 4.0);
            let _ = writeln!(s, r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#ddd"/>"##);
        }
        let series = [
            ("nominated", "#c0392b", "", self.rows.iter().map(|r| r.nominated).collect::<Vec<_>>()),
            (
                "non-nominated",
                "#2c7fb8",
                r#" stroke-dasharray="6 4""#,
                self.rows.iter().map(|r| r.non_nominated).collect(),
            ),
        ];
        for (i, (name, color, dash, vals)) in series.iter().enumerate() {
            let pts: Vec<String> = self
                .rows
                .iter()
                .zip(vals)
                .filter_map(|(r, v)| v.map(|v| format!("{:.1},{:.1}", px(r.position), py(v))))
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                    pts.join(" ")
                );
            }
            let ly = top + 20.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
                width - right + 15.0,
                width - right + 45.0
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{name}</text>"#, width - right + 50.0, ly + 4.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_names() {
        assert_eq!("vad.arousal".parse::<PlotFeature>().unwrap(), PlotFeature::Vad(1));
        assert_eq!("int.fear".parse::<PlotFeature>().unwrap(), PlotFeature::Int(Emotion::Fear));
        assert_eq!(PlotFeature::Vad(2).to_string(), "vad.dominance");
        for bad in ["vad", "vad.joy", "int.surprise", "tt.c1", ""] {
            assert!(matches!(bad.parse::<PlotFeature>(), Err(PipelineError::UnknownFeature(_))), "{bad}");
        }
    }

    #[test]
    fn csv_leaves_missing_class_empty() {
        let data = PlotData {
            feature: PlotFeature::Vad(1),
            n_nominated: 1,
            n_non_nominated: 0,
            rows: vec![PlotRow { position: 12.5, nominated: Some(0.25), non_nominated: None }],
        };
        let mut out = Vec::new();
        data.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "script_percentile_position,mean_value_nominated,mean_value_non_nominated\n12.5,0.25,\n"
        );
        let svg = data.to_svg();
        assert!(svg.starts_with("<svg") && svg.contains("polyline") && svg.trim_end().ends_with("</svg>"));
    }
}
