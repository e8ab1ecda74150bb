//! The pipeline stage functions behind the CLI subcommands.

use super::{FileDigest, RunManifest, ToolConfig};
use crate::corpus::{load_corpus, AssemblyCorpus, Round, Statement};
use crate::error::Error;
use crate::eval::{self, GoldLabels, GoldTask, RunOutput};
use crate::gateway::{schema_for_template, Gateway};
use crate::space::{
    apply_overlay, emit_map, rank_gaps, tsne_embed, EmbeddingMatrix, MapFormat, PointKind,
};
use crate::stance::{
    build_profile, classify_evidence_corpus, detect_vote_changes, evidence_from_jsonl,
    evidence_to_jsonl, render_profile_report, support_rate, ClassifyOptions, StanceError,
};
use crate::suggest::{
    dedup_candidates, extract_suggestions_corpus, records_from_jsonl, records_to_jsonl,
    ExtractOptions, SuggestionRecord,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Paths written by a stage, plus its manifest.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub outputs: Vec<PathBuf>,
    pub manifest_path: Option<PathBuf>,
}

/// Which space `gaps` ranks distances in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSpace {
    /// Original embedding space (the default).
    Embedding,
    /// 2-D map coordinates from a previous `map` run.
    Planar,
}

struct StageWriter<'a> {
    config: &'a ToolConfig,
    command: String,
    template_id: Option<String>,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started_at: String,
}

impl<'a> StageWriter<'a> {
    fn new(config: &'a ToolConfig, command: &str) -> Self {
        Self {
            config,
            command: command.to_string(),
            template_id: None,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at: config.clock().timestamp_rfc3339(),
        }
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn inputs_from(&mut self, paths: &[PathBuf]) {
        self.inputs.extend(paths.iter().cloned());
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), Error> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn finish(self, gateway: Option<&Gateway>) -> Result<StageOutcome, Error> {
        let stats = gateway.map(Gateway::stats).unwrap_or_default();
        let (chat_model, embed_model) = match gateway {
            Some(g) => (
                g.chat_model_id().to_string(),
                g.embed_model_id().to_string(),
            ),
            None => (String::new(), String::new()),
        };
        let digests = |paths: &[PathBuf]| -> Result<Vec<FileDigest>, Error> {
            paths
                .iter()
                .map(|p| FileDigest::of_relative(p, &self.config.out_dir))
                .collect()
        };
        let schema_id = self
            .template_id
            .as_deref()
            .and_then(schema_for_template)
            .map(str::to_string);
        let manifest = RunManifest {
            command: self.command.clone(),
            config_digest: self.config.digest(),
            backend_kind: match self.config.backend.kind {
                crate::gateway::BackendKind::Mock => "mock".into(),
                crate::gateway::BackendKind::Live => "live".into(),
            },
            chat_model,
            embed_model,
            template_id: self.template_id.clone(),
            schema_id,
            seed: self.seed,
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            cache_hits: stats.cache_hits,
            cache_misses: stats.cache_misses,
            attempts_total: stats.attempts_total,
            started_at: self.started_at,
            finished_at: self.config.clock().timestamp_rfc3339(),
        };
        let manifest_path = self
            .config
            .out_dir
            .join("manifests")
            .join(format!("{}.json", self.command));
        manifest.write_atomic(&manifest_path)?;
        Ok(StageOutcome {
            outputs: self.outputs,
            manifest_path: Some(manifest_path),
        })
    }
}

fn fixture_input(config: &ToolConfig, stage: &mut StageWriter<'_>) {
    if let Some(mock) = &config.backend.mock {
        if let Some(fixture) = &mock.fixture {
            stage.input(fixture);
        }
    }
}

/// Load, cross-validate, and summarize the corpus into `corpus_stats.json`.
pub fn run_ingest(config: &ToolConfig) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "ingest");
    stage.inputs_from(&config.corpus_files()?);
    let corpus = load_corpus(&config.corpus_manifest)?;
    let stats = corpus.stats();
    let path = config.out_dir.join("corpus_stats.json");
    stage.write(&path, serde_json::to_string_pretty(&stats)?.as_bytes())?;
    println!("{stats}");
    stage.finish(None)
}

/// Extract suggestions from every transcript into `suggestions.jsonl`.
pub fn run_extract(
    config: &ToolConfig,
    template_override: Option<&str>,
) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "extract");
    stage.inputs_from(&config.corpus_files()?);
    fixture_input(config, &mut stage);

    let corpus = load_corpus(&config.corpus_manifest)?;
    let gateway = config.gateway()?;
    let options = ExtractOptions {
        template_id: template_override
            .unwrap_or(&config.pipeline.suggestion_template)
            .to_string(),
        batch_size: config.pipeline.batch_size,
        max_retries: config.pipeline.max_retries,
        include_nondelegate: config.pipeline.include_nondelegate_suggestions,
    };
    stage.template_id = Some(options.template_id.clone());
    let set = extract_suggestions_corpus(&corpus, &gateway, &options)?;

    let records_path = config.out_dir.join("suggestions.jsonl");
    stage.write(&records_path, records_to_jsonl(&set.records).as_bytes())?;
    let meta_path = config.out_dir.join("suggestions_meta.json");
    stage.write(&meta_path, serde_json::to_string_pretty(&set.metadata)?.as_bytes())?;
    stage.finish(Some(&gateway))
}

fn load_suggestions(config: &ToolConfig) -> Result<(PathBuf, Vec<SuggestionRecord>), Error> {
    let path = config.out_dir.join("suggestions.jsonl");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!(
            "{} not found (run `extract` first): {e}",
            path.display()
        ))
    })?;
    Ok((path, records_from_jsonl(&text)?))
}

/// Current statement texts: rows that are not superseded by a revision.
fn latest_statements(corpus: &AssemblyCorpus) -> Vec<&Statement> {
    corpus
        .statements()
        .iter()
        .filter(|s| {
            !corpus
                .statements()
                .iter()
                .any(|other| other.predecessor_id.as_deref() == Some(&s.statement_id))
        })
        .collect()
}

/// Embed extracted suggestions and recommendation statements into
/// `embeddings/suggestions.json` and `embeddings/recommendations.json`.
pub fn run_embed(config: &ToolConfig) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "embed");
    let (suggestions_path, records) = load_suggestions(config)?;
    stage.input(&suggestions_path);
    stage.inputs_from(&config.corpus_files()?);

    let corpus = load_corpus(&config.corpus_manifest)?;
    let gateway = config.gateway()?;

    let texts: Vec<String> = records.iter().map(|r| r.suggestion.clone()).collect();
    let ids: Vec<String> = records.iter().map(|r| r.suggestion_id.clone()).collect();
    let suggestion_matrix = EmbeddingMatrix::new(
        ids,
        gateway.embed_texts(&texts)?,
        gateway.embed_model_id(),
    )?;

    let recs = latest_statements(&corpus);
    if recs.is_empty() {
        return Err(Error::Config(
            "corpus manifest declares no statements to embed".into(),
        ));
    }
    let rec_texts: Vec<String> = recs.iter().map(|s| s.text.clone()).collect();
    let rec_ids: Vec<String> = recs.iter().map(|s| s.statement_id.clone()).collect();
    let rec_matrix =
        EmbeddingMatrix::new(rec_ids, gateway.embed_texts(&rec_texts)?, gateway.embed_model_id())?;

    let s_path = config.out_dir.join("embeddings/suggestions.json");
    let r_path = config.out_dir.join("embeddings/recommendations.json");
    stage.write(&s_path, suggestion_matrix.to_json().as_bytes())?;
    stage.write(&r_path, rec_matrix.to_json().as_bytes())?;
    stage.finish(Some(&gateway))
}

fn load_matrix(config: &ToolConfig, name: &str) -> Result<(PathBuf, EmbeddingMatrix), Error> {
    let path = config.out_dir.join("embeddings").join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!(
            "{} not found (run `embed` first): {e}",
            path.display()
        ))
    })?;
    Ok((path, EmbeddingMatrix::from_json(&text)?))
}

/// Project suggestions plus recommendations to 2-D and emit `map.svg` and
/// `map.csv`. Recommendation glyphs reflect the final-round supermajority.
pub fn run_map(config: &ToolConfig, seed_override: Option<u64>) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "map");
    let (s_path, suggestions) = load_matrix(config, "suggestions.json")?;
    let (r_path, recommendations) = load_matrix(config, "recommendations.json")?;
    stage.input(&s_path);
    stage.input(&r_path);
    stage.inputs_from(&config.corpus_files()?);

    let corpus = load_corpus(&config.corpus_manifest)?;
    let mut tsne_config = config.pipeline.tsne.clone();
    if let Some(seed) = seed_override {
        tsne_config.seed = seed;
    }
    stage.seed = Some(tsne_config.seed);

    let stacked = suggestions.stacked(&recommendations)?;
    let map = tsne_embed(&stacked, &tsne_config)?;

    let mut kinds = vec![PointKind::Suggestion; suggestions.len()];
    for id in recommendations.ids() {
        let kind = match support_rate(id, Round::Day3Final, corpus.votes()) {
            Ok(rate) if rate.passed => PointKind::RecPassed,
            _ => PointKind::RecFailed,
        };
        kinds.push(kind);
    }
    let map = map.with_kinds(kinds);
    let map = apply_overlay(map, corpus.labels())?;

    let svg_path = config.out_dir.join("map.svg");
    let csv_path = config.out_dir.join("map.csv");
    stage.write(&svg_path, &emit_map(&map, MapFormat::Svg))?;
    stage.write(&csv_path, &emit_map(&map, MapFormat::Csv))?;
    stage.finish(None)
}

fn planar_matrices(
    config: &ToolConfig,
) -> Result<(PathBuf, EmbeddingMatrix, EmbeddingMatrix), Error> {
    let path = config.out_dir.join("map.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!("{} not found (run `map` first): {e}", path.display()))
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut s_ids = Vec::new();
    let mut s_rows = Vec::new();
    let mut r_ids = Vec::new();
    let mut r_rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Config(format!("map.csv: {e}")))?;
        let x: f64 = row[1].parse().map_err(|_| Error::Config("map.csv: bad x".into()))?;
        let y: f64 = row[2].parse().map_err(|_| Error::Config("map.csv: bad y".into()))?;
        if &row[3] == "suggestion" {
            s_ids.push(row[0].to_string());
            s_rows.push(vec![x, y]);
        } else {
            r_ids.push(row[0].to_string());
            r_rows.push(vec![x, y]);
        }
    }
    Ok((
        path,
        EmbeddingMatrix::new(s_ids, s_rows, "planar-2d")?,
        EmbeddingMatrix::new(r_ids, r_rows, "planar-2d")?,
    ))
}

/// Rank the suggestions most distant from any recommendation into
/// `gaps.csv`.
pub fn run_gaps(
    config: &ToolConfig,
    k_override: Option<usize>,
    space: GapSpace,
) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "gaps");
    let k = k_override.unwrap_or(config.pipeline.gap_k);
    let ranking = match space {
        GapSpace::Embedding => {
            let (s_path, suggestions) = load_matrix(config, "suggestions.json")?;
            let (r_path, recommendations) = load_matrix(config, "recommendations.json")?;
            stage.input(&s_path);
            stage.input(&r_path);
            rank_gaps(&suggestions, &recommendations, k)?
        }
        GapSpace::Planar => {
            let (path, suggestions, recommendations) = planar_matrices(config)?;
            stage.input(&path);
            rank_gaps(&suggestions, &recommendations, k)?
        }
    };
    let path = config.out_dir.join("gaps.csv");
    stage.write(&path, &ranking.to_csv())?;
    stage.finish(None)
}

#[derive(Serialize)]
struct DedupReport<'a> {
    threshold: f64,
    groups: &'a [Vec<String>],
}

/// Report near-duplicate suggestion groups into `dedup_groups.json`.
/// Report-only: nothing is merged.
pub fn run_dedup(
    config: &ToolConfig,
    threshold_override: Option<f64>,
) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "dedup");
    let (suggestions_path, records) = load_suggestions(config)?;
    let (matrix_path, matrix) = load_matrix(config, "suggestions.json")?;
    stage.input(&suggestions_path);
    stage.input(&matrix_path);

    let threshold = threshold_override.unwrap_or(config.pipeline.dedup_threshold);
    let ids: Vec<String> = records.iter().map(|r| r.suggestion_id.clone()).collect();
    let groups = dedup_candidates(&ids, &matrix, threshold)?;
    let path = config.out_dir.join("dedup_groups.json");
    stage.write(
        &path,
        serde_json::to_string_pretty(&DedupReport {
            threshold,
            groups: &groups,
        })?
        .as_bytes(),
    )?;
    stage.finish(None)
}

fn profile_file_name(delegate_id: &str, statement_id: &str) -> String {
    format!("profiles/{delegate_id}_{statement_id}.md")
}

/// Classify evidence for one statement, build one delegate's profile, and
/// render its report.
pub fn run_profile(
    config: &ToolConfig,
    delegate_id: &str,
    statement_id: &str,
    min_confidence_override: Option<f64>,
) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "profile");
    stage.inputs_from(&config.corpus_files()?);
    fixture_input(config, &mut stage);
    stage.template_id = Some(config.pipeline.evidence_template.clone());

    let corpus = load_corpus(&config.corpus_manifest)?;
    let gateway = config.gateway()?;
    let options = ClassifyOptions {
        template_id: config.pipeline.evidence_template.clone(),
        batch_size: config.pipeline.batch_size,
        context_size: config.pipeline.context_size,
        max_retries: config.pipeline.max_retries,
        ..ClassifyOptions::default()
    };
    let records = classify_evidence_corpus(&corpus, statement_id, &gateway, &options)?;
    let evidence_path = config
        .out_dir
        .join(format!("evidence/{statement_id}.jsonl"));
    stage.write(&evidence_path, evidence_to_jsonl(&records).as_bytes())?;

    let min_confidence = min_confidence_override.unwrap_or(config.pipeline.min_confidence);
    let profile = build_profile(delegate_id, statement_id, &corpus, &records, min_confidence)?;
    let report = render_profile_report(&profile, &corpus);
    let report_path = config.out_dir.join(profile_file_name(delegate_id, statement_id));
    stage.write(&report_path, report.as_bytes())?;
    stage.finish(Some(&gateway))
}

/// Classify evidence for every statement and render one report per
/// (delegate, statement) pair.
pub fn run_report(
    config: &ToolConfig,
    min_confidence_override: Option<f64>,
) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "report");
    stage.inputs_from(&config.corpus_files()?);
    fixture_input(config, &mut stage);
    stage.template_id = Some(config.pipeline.evidence_template.clone());

    let corpus = load_corpus(&config.corpus_manifest)?;
    let gateway = config.gateway()?;
    let options = ClassifyOptions {
        template_id: config.pipeline.evidence_template.clone(),
        batch_size: config.pipeline.batch_size,
        context_size: config.pipeline.context_size,
        max_retries: config.pipeline.max_retries,
        ..ClassifyOptions::default()
    };
    let min_confidence = min_confidence_override.unwrap_or(config.pipeline.min_confidence);

    let statement_ids: Vec<String> = corpus
        .statements()
        .iter()
        .map(|s| s.statement_id.clone())
        .collect();
    for statement_id in &statement_ids {
        let records = classify_evidence_corpus(&corpus, statement_id, &gateway, &options)?;
        let evidence_path = config
            .out_dir
            .join(format!("evidence/{statement_id}.jsonl"));
        stage.write(&evidence_path, evidence_to_jsonl(&records).as_bytes())?;
        for delegate_id in corpus.delegates().to_vec() {
            let profile =
                build_profile(&delegate_id, statement_id, &corpus, &records, min_confidence)?;
            let report = render_profile_report(&profile, &corpus);
            let path = config.out_dir.join(profile_file_name(&delegate_id, statement_id));
            stage.write(&path, report.as_bytes())?;
        }
    }
    stage.finish(Some(&gateway))
}

#[derive(Serialize)]
struct StatementVotes {
    statement_id: String,
    rounds: Vec<RoundSupport>,
    changes: Option<crate::stance::VoteChangeReport>,
}

#[derive(Serialize)]
struct RoundSupport {
    round: String,
    rate: f64,
    passed: bool,
    agrees: usize,
    total: usize,
}

/// Per-statement support rates and vote-change analysis into
/// `votes_report.json` and a readable `votes_report.txt`.
pub fn run_votes(config: &ToolConfig) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "votes");
    stage.inputs_from(&config.corpus_files()?);
    let corpus = load_corpus(&config.corpus_manifest)?;

    let mut reports = Vec::new();
    let mut text = String::new();
    for statement in corpus.statements() {
        let mut rounds = Vec::new();
        for round in [Round::Day2Draft, Round::Day3Final] {
            match support_rate(&statement.statement_id, round, corpus.votes()) {
                Ok(rate) => rounds.push(RoundSupport {
                    round: round.as_str().to_string(),
                    rate: rate.rate,
                    passed: rate.passed,
                    agrees: rate.agrees,
                    total: rate.total,
                }),
                Err(StanceError::NoVotes { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let changes = match detect_vote_changes(&statement.statement_id, corpus.votes()) {
            Ok(report) => Some(report),
            Err(StanceError::SingleRoundOnly(_)) => None,
            Err(e) => return Err(e.into()),
        };

        text.push_str(&format!(
            "statement {}: \"{}\"\n",
            statement.statement_id, statement.text
        ));
        for r in &rounds {
            text.push_str(&format!(
                "  {}: {}/{} agree ({:.4}) -> {}\n",
                r.round,
                r.agrees,
                r.total,
                r.rate,
                if r.passed { "PASSED" } else { "not passed" }
            ));
        }
        if let Some(changes) = &changes {
            for c in &changes.changes {
                if c.from_choice != c.to_choice {
                    text.push_str(&format!(
                        "  {}: {} -> {} ({:?})\n",
                        c.delegate_id,
                        c.from_choice,
                        c.to_choice,
                        c.kind
                    ));
                }
            }
            for i in &changes.incomplete {
                text.push_str(&format!(
                    "  {}: voted only in {} ({})\n",
                    i.delegate_id,
                    i.round.as_str(),
                    i.choice
                ));
            }
        }
        text.push('\n');

        reports.push(StatementVotes {
            statement_id: statement.statement_id.clone(),
            rounds,
            changes,
        });
    }

    let json_path = config.out_dir.join("votes_report.json");
    let text_path = config.out_dir.join("votes_report.txt");
    stage.write(&json_path, serde_json::to_string_pretty(&reports)?.as_bytes())?;
    stage.write(&text_path, text.as_bytes())?;
    stage.finish(None)
}

/// Arguments for the `eval` stage.
#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub gold: PathBuf,
    pub task: GoldTask,
    pub run: PathBuf,
    pub baseline: Option<PathBuf>,
    pub judge: bool,
    pub judge_model: Option<String>,
}

enum LoadedRun {
    Suggestions(Vec<SuggestionRecord>),
    Evidence(Vec<crate::stance::EvidenceRecord>),
}

impl LoadedRun {
    fn load(path: &Path, task: GoldTask) -> Result<LoadedRun, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(match task {
            GoldTask::Suggestions => LoadedRun::Suggestions(records_from_jsonl(&text)?),
            GoldTask::Evidence => LoadedRun::Evidence(evidence_from_jsonl(&text)?),
        })
    }

    fn output(&self) -> RunOutput<'_> {
        match self {
            LoadedRun::Suggestions(r) => RunOutput::Suggestions(r),
            LoadedRun::Evidence(r) => RunOutput::Evidence(r),
        }
    }
}

/// Score a run against gold labels; optionally compare to a baseline run and
/// invoke a judge model over the pair.
pub fn run_eval(config: &ToolConfig, args: &EvalArgs) -> Result<StageOutcome, Error> {
    let mut stage = StageWriter::new(config, "eval");
    stage.input(&args.gold);
    stage.input(&args.run);
    if let Some(baseline) = &args.baseline {
        stage.input(baseline);
    }

    let gold_bytes = std::fs::read(&args.gold)?;
    let gold = GoldLabels::parse_csv(&gold_bytes, args.task, &args.gold.display().to_string())?;
    let run = LoadedRun::load(&args.run, args.task)?;

    let metrics = eval::score_run(&run.output(), &gold)?;
    let metrics_path = config.out_dir.join("eval/metrics.json");
    stage.write(&metrics_path, serde_json::to_string_pretty(&metrics)?.as_bytes())?;

    let baseline_run = match &args.baseline {
        Some(path) => Some(LoadedRun::load(path, args.task)?),
        None => None,
    };
    if let Some(baseline_run) = &baseline_run {
        let comparison = eval::compare_runs(&baseline_run.output(), &run.output(), &gold)?;
        let comparison_path = config.out_dir.join("eval/comparison.json");
        stage.write(
            &comparison_path,
            serde_json::to_string_pretty(&comparison)?.as_bytes(),
        )?;
        let text_path = config.out_dir.join("eval/comparison.txt");
        stage.write(&text_path, eval::comparison_text(&comparison).as_bytes())?;
    }

    let mut gateway_for_stats = None;
    if args.judge {
        let baseline_run = baseline_run.as_ref().ok_or_else(|| {
            Error::Config("judge requires --baseline to compare against".into())
        })?;
        let extraction_model = config.gateway()?.chat_model_id().to_string();
        let judge_gateway = judge_gateway(config, args.judge_model.as_deref())?;
        let report = eval::judge_runs(
            &baseline_run.output(),
            &run.output(),
            &judge_gateway,
            "judge-v1",
            &extraction_model,
        )?;
        if report.same_family_warning {
            eprintln!(
                "warning: judge model {:?} shares a family with extraction model {:?}; \
                 self-preference bias is possible",
                report.judge_model, report.extraction_model
            );
        }
        let judge_path = config.out_dir.join("eval/judge.json");
        stage.write(&judge_path, serde_json::to_string_pretty(&report)?.as_bytes())?;
        gateway_for_stats = Some(judge_gateway);
    }

    stage.finish(gateway_for_stats.as_ref())
}

/// Judge backend: same transport kind as the main backend, distinct model id.
fn judge_gateway(config: &ToolConfig, judge_model: Option<&str>) -> Result<Gateway, Error> {
    use crate::gateway::{BackendKind, MockChatBackend, MockEmbedBackend, ResponseCache};
    match config.backend.kind {
        BackendKind::Mock => {
            let chat = MockChatBackend::heuristic()
                .with_model_id(judge_model.unwrap_or("judge-sim"));
            Ok(Gateway::new(
                Box::new(chat),
                Box::new(MockEmbedBackend),
                ResponseCache::ephemeral(),
                config.backend.max_inflight,
                config.clock(),
            ))
        }
        BackendKind::Live => {
            let mut live = config.backend.live.clone().ok_or_else(|| {
                Error::Config("backend kind is live but no live config given".into())
            })?;
            if let Some(model) = judge_model {
                live.chat_model = model.to_string();
            }
            let mut backend = config.backend.clone();
            backend.live = Some(live);
            backend.cache_path = Some(config.cache_path());
            Ok(Gateway::from_config(&backend)?)
        }
    }
}

/// Replay the suggestion and evidence pipelines against the heuristic mock
/// and capture every response as a scripted fixture, keyed by request
/// digest. Freezing a heuristic run this way is how the bundled mock script
/// was produced.
pub fn record_heuristic_script(config: &ToolConfig) -> Result<crate::gateway::MockScript, Error> {
    use crate::gateway::{MockEmbedBackend, RecordingChatBackend, ResponseCache};

    let corpus = load_corpus(&config.corpus_manifest)?;
    let recorder = RecordingChatBackend::new();
    let log = recorder.log_handle();
    // Single worker so the script lands in submission order and the fixture
    // file is reproducible byte for byte.
    let gateway = Gateway::new(
        Box::new(recorder),
        Box::new(MockEmbedBackend),
        ResponseCache::ephemeral(),
        1,
        config.clock(),
    );

    let extract_options = ExtractOptions {
        template_id: config.pipeline.suggestion_template.clone(),
        batch_size: config.pipeline.batch_size,
        max_retries: config.pipeline.max_retries,
        include_nondelegate: config.pipeline.include_nondelegate_suggestions,
    };
    extract_suggestions_corpus(&corpus, &gateway, &extract_options)?;

    let classify_options = ClassifyOptions {
        template_id: config.pipeline.evidence_template.clone(),
        batch_size: config.pipeline.batch_size,
        context_size: config.pipeline.context_size,
        max_retries: config.pipeline.max_retries,
        ..ClassifyOptions::default()
    };
    let statement_ids: Vec<String> = corpus
        .statements()
        .iter()
        .map(|s| s.statement_id.clone())
        .collect();
    for statement_id in &statement_ids {
        classify_evidence_corpus(&corpus, statement_id, &gateway, &classify_options)?;
    }

    Ok(RecordingChatBackend::into_script(&log))
}

/// Run the full pipeline: ingest, extract, embed, map, gaps, dedup, profile
/// reports, and vote analysis, in that order.
pub fn run_end_to_end(config: &ToolConfig, seed: Option<u64>) -> Result<Vec<PathBuf>, Error> {
    let mut outputs = Vec::new();
    let mut collect = |outcome: StageOutcome| {
        outputs.extend(outcome.outputs.clone());
        if let Some(m) = outcome.manifest_path {
            outputs.push(m);
        }
    };
    collect(run_ingest(config)?);
    collect(run_extract(config, None)?);
    collect(run_embed(config)?);
    collect(run_map(config, seed)?);
    collect(run_gaps(config, None, GapSpace::Embedding)?);
    collect(run_dedup(config, None)?);
    collect(run_report(config, None)?);
    collect(run_votes(config)?);
    Ok(outputs)
}
