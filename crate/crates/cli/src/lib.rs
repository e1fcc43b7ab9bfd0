//! Headless pipeline driver behind the `commdyn` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

pub mod args;
pub mod render;
pub mod tables;

use std::ffi::OsString;
use std::fmt;
use std::io::{BufWriter, Write};

use clap::Parser;
use commdyn_core::{
    analyze_pair, combine, filter_confident, rank_by_uncertainty, read_events, score_episodes,
    train, AnalysisParams, CombinedModel, DetectionParams, EngineError, EventLog, ForestConfig,
    ForestModel, InputFormat, KdeParams, Pair, PairAnalysis, ParseOptions, ParseReport, Threshold,
    ZoomLevel,
};
use rayon::prelude::*;

pub use args::{Cli, Command};
use args::{
    DetectArgs, EpisodesArgs, IngestArgs, InputArgs, InputKind, KdeArgs, OutputFormat, PairsArgs,
    PredictArgs, ProfileArgs, Ranking, ServeArgs, TrainArgs,
};
use render::PredictionMeta;
use tables::{join_labels, read_feature_tables, read_labels, FeatureRow};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameter values (exit 1).
    Usage(String),
    /// Unreadable or inconsistent data (exit 2).
    Data { code: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Data { code, message } => write!(f, "error: {code}: {message}"),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Data {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        EngineError::from(e).into()
    }
}

fn usage(e: EngineError) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => write!(out, "{e}"),
                _ => write!(err, "{e}"),
            };
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => ingest(a, out),
        Command::Pairs(a) => pairs(a, out),
        Command::Episodes(a) => episodes(a, out, err),
        Command::Profile(a) => profile(a, out),
        Command::Train(a) => train_cmd(a, out, err),
        Command::Predict(a) => predict(a, out, err),
        Command::Serve(a) => serve(a),
    }
}

fn parse_options(kind: InputKind, file: &std::path::Path, strict: bool) -> ParseOptions {
    ParseOptions {
        format: match kind {
            InputKind::Auto => InputFormat::from_path(file),
            InputKind::Whitespace => InputFormat::Whitespace,
            InputKind::Csv => InputFormat::Csv,
        },
        strict,
    }
}

fn load(input: &InputArgs) -> Result<(EventLog, ParseReport), CliError> {
    read_events(
        &input.file,
        parse_options(input.input_format, &input.file, input.strict),
    )
    .map_err(|e| match e {
        // already carries the path
        EngineError::Io(_) => e.into(),
        other => CliError::Data {
            code: other.code(),
            message: format!("{}: {other}", input.file.display()),
        },
    })
}

/// Validated analysis parameters from the shared flags.
pub fn analysis_params(
    kde: &KdeArgs,
    detect: Option<&DetectArgs>,
) -> Result<AnalysisParams, CliError> {
    let zoom = ZoomLevel::by_name(&kde.zoom_level).map_err(usage)?;
    // h is checked with the rest once known; any positive value will do here
    KdeParams::new(kde.mu, kde.sigma, kde.h.unwrap_or(1.0)).map_err(usage)?;
    if kde.grid_n < 2 {
        return Err(CliError::Usage(format!(
            "--grid-n must be at least 2, got {}",
            kde.grid_n
        )));
    }
    if let (Some(f), Some(t)) = (kde.from, kde.to) {
        if f >= t {
            return Err(CliError::Usage(format!(
                "--from {f} must be before --to {t}"
            )));
        }
    }
    let detection = match detect {
        Some(d) => {
            let epsilon = Threshold {
                mode: d.epsilon_mode,
                value: d.epsilon,
            };
            epsilon.validate().map_err(usage)?;
            for (name, v) in [
                ("--min-duration", d.min_duration),
                ("--merge-gap", d.merge_gap),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::Usage(format!(
                        "{name} must be a non-negative number, got {v}"
                    )));
                }
            }
            DetectionParams {
                epsilon,
                min_duration: d.min_duration,
                merge_gap: d.merge_gap,
            }
        }
        None => DetectionParams::default(),
    };
    Ok(AnalysisParams {
        mu: Some(kde.mu),
        sigma: Some(kde.sigma),
        h: kde.h,
        grid_n: Some(kde.grid_n),
        from: kde.from,
        to: kde.to,
        zoom,
        detection,
    })
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (log, report) = load(&a.input)?;
    let mut out = BufWriter::new(out);
    match (a.report, a.json) {
        (true, true) => render::report_json(&mut out, &report)?,
        (true, false) => render::report_text(&mut out, &report)?,
        _ => log.write_triples(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn pairs(a: PairsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (log, _) = load(&a.input)?;
    let mut list = log.list_pairs(a.min);
    if let Some(l) = a.limit {
        list.truncate(l);
    }
    let mut out = BufWriter::new(out);
    match a.format {
        OutputFormat::Csv => render::pairs_csv(&mut out, a.min, &list)?,
        OutputFormat::Json => render::pairs_json(&mut out, &list)?,
    }
    out.flush()?;
    Ok(())
}

/// Analyses `pairs` in parallel; results keep the input order.
pub fn analyze_pairs(
    log: &EventLog,
    pairs: &[Pair],
    params: &AnalysisParams,
) -> Result<Vec<PairAnalysis>, EngineError> {
    pairs
        .par_iter()
        .map(|p| analyze_pair(log, p, params))
        .collect()
}

fn episodes(a: EpisodesArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let params = analysis_params(&a.kde, Some(&a.detect))?;
    let (log, _) = load(&a.input)?;
    let pairs: Vec<Pair> = if a.all_pairs {
        log.list_pairs(a.min).into_iter().map(|p| p.pair).collect()
    } else {
        a.pairs.clone()
    };
    for p in &pairs {
        if p.a == p.b {
            return Err(CliError::Usage(format!(
                "pair {p}: an entity cannot be paired with itself"
            )));
        }
        if log.pair_counts(&p.a, &p.b).total() == 0 {
            writeln!(err, "warning: no messages between {} and {}", p.a, p.b)?;
        }
    }
    let analyses = analyze_pairs(&log, &pairs, &params)?;
    let mut out = BufWriter::new(out);
    match a.format {
        OutputFormat::Csv => render::episodes_csv(&mut out, &params, &analyses)?,
        OutputFormat::Json => render::episodes_json(&mut out, &params, &analyses)?,
    }
    out.flush()?;
    Ok(())
}

fn profile(a: ProfileArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = analysis_params(&a.kde, None)?;
    if a.pair.a == a.pair.b {
        return Err(CliError::Usage(format!(
            "pair {}: an entity cannot be paired with itself",
            a.pair
        )));
    }
    let (log, _) = load(&a.input)?;
    let seq = log.pair_sequence(&a.pair.a, &a.pair.b)?;
    let profile = commdyn_core::pipeline::profile_sequence(&seq, &params)?;
    let mut out = BufWriter::new(out);
    match a.format {
        OutputFormat::Csv => render::profile_csv(&mut out, &params, &profile)?,
        OutputFormat::Json => render::profile_json(&mut out, &params, &profile)?,
    }
    out.flush()?;
    Ok(())
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config = ForestConfig {
        n_trees: a.n_trees,
        max_depth: a.max_depth,
        min_leaf: a.min_leaf,
        features_per_split: a.features_per_split,
        bootstrap: !a.no_bootstrap,
        rng_seed: a.seed,
    };
    config.validate().map_err(usage)?;
    let rows = read_feature_tables(&a.features)?;
    let labels = read_labels(&a.labels)?;
    let (examples, missing) = join_labels(&rows, &labels);
    for r in &missing {
        writeln!(err, "warning: label for unknown episode {r} ignored")?;
    }
    let model = train(&a.class, &examples, &config)?;
    model.save(&a.out)?;
    let positives = examples
        .iter()
        .filter(|e| e.label == commdyn_core::Label::Positive)
        .count();
    writeln!(
        out,
        "# trained class={} examples={} positives={} negatives={} unresolved={} n_trees={} max_depth={} min_leaf={} features_per_split={} bootstrap={} seed={} out={}",
        model.class_name,
        examples.len(),
        positives,
        examples.len() - positives,
        missing.len(),
        config.n_trees,
        config.max_depth,
        config.min_leaf,
        config.features_per_split,
        config.bootstrap,
        config.rng_seed,
        a.out.display()
    )?;
    Ok(())
}

/// Scores `rows` and applies the confidence filter and ranking, as `predict` does.
pub fn predict_rows(
    models: Vec<ForestModel>,
    mode: commdyn_core::CombineMode,
    rows: &[FeatureRow],
    min_confidence: f64,
    polarity: commdyn_core::Label,
    rank: Ranking,
) -> Result<Vec<commdyn_core::ScoredEpisode>, EngineError> {
    let episodes: Vec<_> = rows.iter().map(FeatureRow::to_episode).collect();
    let scored = if models.len() == 1 {
        score_episodes(&models[0], &episodes)?
    } else {
        let combined: CombinedModel = combine(models, mode)?;
        score_episodes(&combined, &episodes)?
    };
    let kept = filter_confident(&scored, min_confidence, polarity)?;
    Ok(match rank {
        Ranking::Input => kept,
        Ranking::Uncertain => rank_by_uncertainty(kept),
    })
}

fn predict(a: PredictArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.min_confidence) {
        return Err(CliError::Usage(format!(
            "--min-confidence must be within [0, 1], got {}",
            a.min_confidence
        )));
    }
    let models = a
        .models
        .iter()
        .map(|p| {
            ForestModel::load(p).map_err(|e| CliError::Data {
                code: e.code(),
                message: format!("{}: {e}", p.display()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows = read_feature_tables(&a.features)?;
    if rows.is_empty() {
        writeln!(err, "warning: no scorable rows in the feature tables")?;
    }
    let meta = PredictionMeta {
        models: PredictionMeta::describe(&models),
        combine: format!("{:?}", a.combine).to_lowercase(),
        min_confidence: a.min_confidence,
        polarity: a.polarity.to_string(),
        rank: format!("{:?}", a.rank).to_lowercase(),
        scored: rows.len(),
    };
    let mut kept = predict_rows(
        models,
        a.combine,
        &rows,
        a.min_confidence,
        a.polarity,
        a.rank,
    )?;
    if let Some(l) = a.limit {
        kept.truncate(l);
    }
    let mut out = BufWriter::new(out);
    match a.format {
        OutputFormat::Csv => render::predictions_csv(&mut out, &meta, &kept)?,
        OutputFormat::Json => render::predictions_json(&mut out, &meta, &kept)?,
    }
    out.flush()?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    commdyn_server::init_tracing();
    let format = match a.input_format {
        InputKind::Auto => None,
        InputKind::Whitespace => Some(InputFormat::Whitespace),
        InputKind::Csv => Some(InputFormat::Csv),
    };
    let config = commdyn_server::ServerConfig {
        host: a.host,
        port: a.port,
        corpus: a.corpus,
        format,
        session_dir: a.session_dir,
        ui_dir: a.ui_dir,
        cors_origin: a.cors_origin,
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(commdyn_server::serve(config))
        .map_err(|e| match e {
            commdyn_server::ServerError::Config(m) => CliError::Usage(m),
            other => CliError::Data {
                code: "serve_failed",
                message: other.to_string(),
            },
        })
}
