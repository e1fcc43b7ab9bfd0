//! Output rendering. Commands print exactly what these functions write, so
//! callers of the library can reproduce CLI output byte for byte.

use std::io::Write;

use commdyn_core::{
    AnalysisParams, DensityProfile, EngineError, ForestModel, PairAnalysis, PairSummary,
    ParseReport, ScoredEpisode, FEATURE_NAMES,
};
use serde::Serialize;
use serde_json::json;

type Result<T> = std::result::Result<T, EngineError>;

fn auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

/// `#` lines echoing every effective parameter.
pub fn params_header(params: &AnalysisParams) -> Vec<String> {
    let d = &params.detection;
    vec![
        format!(
            "# kde mu={} sigma={} h={} grid_n={} from={} to={} zoom_level={}",
            auto(params.mu),
            auto(params.sigma),
            auto(params.h),
            params
                .grid_n
                .map_or_else(|| "auto".to_string(), |n| n.to_string()),
            auto(params.from),
            auto(params.to),
            params.zoom.name,
        ),
        format!(
            "# detection epsilon={} epsilon_mode={} min_duration={} merge_gap={}",
            d.epsilon.value, d.epsilon.mode, d.min_duration, d.merge_gap
        ),
    ]
}

fn pair_header(params: &AnalysisParams, a: &PairAnalysis) -> String {
    let p = &a.profile;
    format!(
        "# pair={} events={} n_out={} n_in={} h={} grid_start={} grid_step={} grid_n={} epsilon_absolute={} episodes={} residual={}",
        a.sequence.pair,
        a.sequence.len(),
        p.n_out,
        p.n_in,
        p.params.h,
        p.grid.start,
        p.grid.step,
        p.grid.n,
        params.detection.epsilon.resolve(p),
        a.episodes.len(),
        a.residual.len(),
    )
}

pub fn episodes_csv<W: Write>(
    mut out: W,
    params: &AnalysisParams,
    analyses: &[PairAnalysis],
) -> Result<()> {
    writeln!(out, "# commdyn episodes")?;
    for line in params_header(params) {
        writeln!(out, "{line}")?;
    }
    for a in analyses {
        writeln!(out, "{}", pair_header(params, a))?;
    }
    let mut w = csv::Writer::from_writer(&mut out);
    let mut header = vec!["episode_id", "a", "b", "start", "end", "n_in", "n_out"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for a in analyses {
        for e in &a.episodes {
            let mut rec = vec![
                e.id.clone(),
                a.sequence.pair.a.to_string(),
                a.sequence.pair.b.to_string(),
                e.start.to_string(),
                e.end.to_string(),
                e.n_in.to_string(),
                e.n_out.to_string(),
            ];
            match &e.features {
                Some(f) => rec.extend(f.to_array().iter().map(f64::to_string)),
                None => rec.extend(std::iter::repeat_n(String::new(), FEATURE_NAMES.len())),
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn episodes_json<W: Write>(
    mut out: W,
    params: &AnalysisParams,
    analyses: &[PairAnalysis],
) -> Result<()> {
    let pairs: Vec<_> = analyses
        .iter()
        .map(|a| {
            json!({
                "pair": a.sequence.pair,
                "events": a.sequence.len(),
                "n_in": a.profile.n_in,
                "n_out": a.profile.n_out,
                "kde": a.profile.params,
                "grid": a.profile.grid,
                "epsilon_absolute": params.detection.epsilon.resolve(&a.profile),
                "residual": a.residual.len(),
                "episodes": a.episodes,
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &json!({ "params": params, "pairs": pairs }))?;
    writeln!(out)?;
    Ok(())
}

pub fn profile_csv<W: Write>(
    mut out: W,
    params: &AnalysisParams,
    profile: &DensityProfile,
) -> Result<()> {
    writeln!(out, "# commdyn profile")?;
    writeln!(out, "{}", params_header(params)[0])?;
    writeln!(
        out,
        "# pair={} n_out={} n_in={} mu={} sigma={} h={} grid_start={} grid_step={} grid_n={}",
        profile
            .pair
            .as_ref()
            .map_or_else(String::new, |p| p.to_string()),
        profile.n_out,
        profile.n_in,
        profile.params.mu,
        profile.params.sigma,
        profile.params.h,
        profile.grid.start,
        profile.grid.step,
        profile.grid.n,
    )?;
    profile.write_csv(out)
}

pub fn profile_json<W: Write>(
    mut out: W,
    params: &AnalysisParams,
    profile: &DensityProfile,
) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &json!({ "params": params, "profile": profile }))?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct PairRow<'a> {
    a: &'a str,
    b: &'a str,
    count_ab: usize,
    count_ba: usize,
    total: usize,
}

fn pair_rows(pairs: &[PairSummary]) -> Vec<PairRow<'_>> {
    pairs
        .iter()
        .map(|p| PairRow {
            a: p.pair.a.as_str(),
            b: p.pair.b.as_str(),
            count_ab: p.count_ab,
            count_ba: p.count_ba,
            total: p.total(),
        })
        .collect()
}

pub fn pairs_csv<W: Write>(mut out: W, min: usize, pairs: &[PairSummary]) -> Result<()> {
    writeln!(out, "# commdyn pairs min={min} pairs={}", pairs.len())?;
    let mut w = csv::Writer::from_writer(&mut out);
    for row in pair_rows(pairs) {
        w.serialize(row)?;
    }
    if pairs.is_empty() {
        w.write_record(["a", "b", "count_ab", "count_ba", "total"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn pairs_json<W: Write>(mut out: W, pairs: &[PairSummary]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &pair_rows(pairs))?;
    writeln!(out)?;
    Ok(())
}

pub fn report_text<W: Write>(mut out: W, report: &ParseReport) -> Result<()> {
    writeln!(out, "{report}")?;
    Ok(())
}

pub fn report_json<W: Write>(mut out: W, report: &ParseReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

/// What produced a prediction table.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionMeta {
    pub models: Vec<String>,
    pub combine: String,
    pub min_confidence: f64,
    pub polarity: String,
    pub rank: String,
    pub scored: usize,
}

impl PredictionMeta {
    pub fn describe(models: &[ForestModel]) -> Vec<String> {
        models
            .iter()
            .map(|m| {
                format!(
                    "{}:trees={}:seed={}",
                    m.class_name,
                    m.trees.len(),
                    m.config.rng_seed
                )
            })
            .collect()
    }
}

pub fn predictions_csv<W: Write>(
    mut out: W,
    meta: &PredictionMeta,
    predictions: &[ScoredEpisode],
) -> Result<()> {
    writeln!(
        out,
        "# commdyn predictions models={} combine={}",
        meta.models.join(";"),
        meta.combine
    )?;
    writeln!(
        out,
        "# min_confidence={} polarity={} rank={} scored={} kept={}",
        meta.min_confidence,
        meta.polarity,
        meta.rank,
        meta.scored,
        predictions.len()
    )?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["episode_ref", "start", "label", "confidence"])?;
    for p in predictions {
        w.write_record([
            p.episode_ref.clone(),
            p.start.to_string(),
            p.label.to_string(),
            p.confidence.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn predictions_json<W: Write>(
    mut out: W,
    meta: &PredictionMeta,
    predictions: &[ScoredEpisode],
) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut out,
        &json!({ "meta": meta, "predictions": predictions }),
    )?;
    writeln!(out)?;
    Ok(())
}
