use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use queerbench::benchmark::{
    export_report, read_results, run_pipeline, summarize_gaps, write_results, CoverageEntry, ReportFormat,
    RunOutput, Scorers, ScoringRun, Tool, ToolSet,
};
use queerbench::lexical::{AfinnLexicon, HurtlexLevel, HurtlexLexicon};
use queerbench::perspective::{Beta, LiveAnalyzer, PerspectiveClient, RecordedStore, DEFAULT_ANALYZER_URL};
use queerbench::predictor::{PredictionCache, Predictor, RemoteSource, TopK, DEFAULT_CONCURRENCY};
use queerbench::subjects::load_subjects;
use queerbench::templates::{build_dataset, load_templates, Dataset};

use crate::config::{ensure_dir, existing, ConfigFile};
use crate::{CoverageError, GenerateArgs, PredictArgs, ReportArgs, ScoreArgs, UsageError};

const DEFAULT_TEMPLATES: &str = "data/templates.txt";
const DEFAULT_NOUNS: &str = "data/nouns.csv";
const DEFAULT_PRONOUNS: &str = "data/pronouns.csv";
const DEFAULT_AFINN: &str = "data/afinn/AFINN-en-165.txt";
const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8000";
const DEFAULT_OUT: &str = "out";
const API_KEY_VAR: &str = "PERSPECTIVE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubjectSelection {
    #[default]
    All,
    PronounsOnly,
    NounsOnly,
}

impl FromStr for SubjectSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "all" => Ok(Self::All),
            "pronouns-only" => Ok(Self::PronounsOnly),
            "nouns-only" => Ok(Self::NounsOnly),
            other => Err(format!("expected all, pronouns-only or nouns-only, got {other:?}")),
        }
    }
}

fn out_dir(cfg: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf> {
    cfg.pick_or(flag, "out", PathBuf::from(DEFAULT_OUT))
}

fn top_ks(cfg: &ConfigFile, flag: Vec<TopK>) -> Result<Vec<TopK>> {
    let mut ks = cfg.pick_list(flag, "top-k")?;
    if ks.is_empty() {
        ks = vec![TopK::ONE, TopK::FIVE];
    }
    ks.sort();
    ks.dedup();
    Ok(ks)
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    existing(path, "dataset")?;
    let ds = Dataset::load(path).with_context(|| format!("cannot load dataset {}", path.display()))?;
    if ds.is_empty() {
        return Err(UsageError(format!("dataset {} is empty", path.display())).into());
    }
    Ok(ds)
}

pub fn generate(cfg: &ConfigFile, args: GenerateArgs) -> Result<()> {
    let templates = cfg.pick_or(args.templates, "templates", PathBuf::from(DEFAULT_TEMPLATES))?;
    let nouns = cfg.pick_or(args.nouns, "nouns", PathBuf::from(DEFAULT_NOUNS))?;
    let pronouns = cfg.pick_or(args.pronouns, "pronouns", PathBuf::from(DEFAULT_PRONOUNS))?;
    let selection: SubjectSelection = cfg.pick_or(args.subjects, "subjects", SubjectSelection::All)?;
    let out = out_dir(cfg, args.out)?;
    existing(&templates, "template file")?;
    existing(&nouns, "noun file")?;
    existing(&pronouns, "pronoun file")?;

    let templates = load_templates(&templates).map_err(|e| UsageError(e.to_string()))?;
    let subjects = load_subjects(&nouns, &pronouns).map_err(|e| UsageError(e.to_string()))?;
    let subjects = match selection {
        SubjectSelection::All => subjects,
        SubjectSelection::PronounsOnly => subjects.pronouns_only(),
        SubjectSelection::NounsOnly => subjects.nouns_only(),
    };
    let dataset = build_dataset(&templates, &subjects).map_err(|e| UsageError(e.to_string()))?;
    ensure_dir(&out)?;
    let path = out.join("dataset.jsonl");
    dataset.save(&path)?;
    println!("{} sentences", dataset.len());
    tracing::info!(templates = templates.len(), subjects = subjects.len(), path = %path.display(), "dataset written");
    Ok(())
}

pub fn predict(cfg: &ConfigFile, args: PredictArgs) -> Result<()> {
    let out = out_dir(cfg, args.out)?;
    let dataset_path = cfg.pick_or(args.dataset, "dataset", out.join("dataset.jsonl"))?;
    let models: Vec<String> = cfg.pick_list(args.model, "model")?;
    if models.is_empty() {
        return Err(UsageError("at least one --model is required".into()).into());
    }
    let endpoint: String = cfg.pick_or(args.endpoint, "endpoint", DEFAULT_ENDPOINT.to_owned())?;
    let ks = top_ks(cfg, args.top_k)?;
    let cache_path = cfg.pick_or(args.cache, "cache", out.join("predictions.jsonl"))?;
    let concurrency = cfg.pick_or(args.concurrency, "concurrency", DEFAULT_CONCURRENCY)?;
    let strict = cfg.flag(args.strict, "strict")?;

    let dataset = load_dataset(&dataset_path)?;
    if let Some(parent) = cache_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let cache = Arc::new(
        PredictionCache::open(&cache_path).with_context(|| format!("cannot open cache {}", cache_path.display()))?,
    );
    let source = RemoteSource::new(&endpoint)?;
    let predictor = Predictor::new(Arc::new(source), Arc::clone(&cache)).with_concurrency(concurrency);

    let mut failures = 0;
    for model in &models {
        for &k in &ks {
            let results = predictor.predict_all(&dataset, model, k);
            let mut failed = 0;
            for (id, r) in &results {
                if let Err(e) = r {
                    failed += 1;
                    tracing::warn!(model = %model, k = k.get(), sentence_id = id, reason = e.reason_code(), "{e}");
                    if strict {
                        cache.save(&cache_path)?;
                        bail!("{model}, top-{k}, sentence {id}: {e}");
                    }
                }
            }
            println!("{model} top-{k}: {}/{} predicted", results.len() - failed, results.len());
            failures += failed;
        }
    }
    cache.save(&cache_path)?;
    if failures > 0 {
        eprintln!("warning: {failures} sentences without predictions; score will exclude them");
    }
    Ok(())
}

struct Analyzer {
    client: PerspectiveClient,
    live: bool,
}

fn perspective_client(cfg: &ConfigFile, args: &ScoreArgs, out: &Path) -> Result<Analyzer> {
    let recorded = cfg.pick_or(args.recorded.clone(), "recorded", out.join("perspective.jsonl"))?;
    let key = std::env::var(API_KEY_VAR).ok().filter(|k| !k.trim().is_empty());
    match key {
        Some(key) => {
            let url: String = cfg.pick_or(args.perspective_url.clone(), "perspective-url", DEFAULT_ANALYZER_URL.to_owned())?;
            let rate: f64 = cfg.pick_or(args.rate_limit, "rate-limit", 1.0)?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(UsageError(format!("rate limit must be positive, got {rate}")).into());
            }
            if let Some(parent) = recorded.parent().filter(|p| !p.as_os_str().is_empty()) {
                ensure_dir(parent)?;
            }
            let store = RecordedStore::open_recording(&recorded)?;
            let analyzer = LiveAnalyzer::new(&url, &key)?.with_rate_limit(rate);
            Ok(Analyzer {
                client: PerspectiveClient::live(analyzer, Arc::new(store)),
                live: true,
            })
        }
        None => {
            if !recorded.exists() {
                return Err(UsageError(format!(
                    "recorded analyzer responses not found: {} (set {API_KEY_VAR} to query the live service, \
                     or drop perspective from --tools)",
                    recorded.display()
                ))
                .into());
            }
            let store = RecordedStore::load(&recorded)?;
            Ok(Analyzer {
                client: PerspectiveClient::recorded(Arc::new(store)),
                live: false,
            })
        }
    }
}

fn write_coverage(path: &Path, entries: &[CoverageEntry]) -> Result<()> {
    let mut sorted: Vec<&CoverageEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.model_id, a.sentence_id, a.prediction_rank).cmp(&(&b.model_id, b.sentence_id, b.prediction_rank))
    });
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?);
    for e in sorted {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn score(cfg: &ConfigFile, args: ScoreArgs) -> Result<()> {
    let out = out_dir(cfg, args.out.clone())?;
    let dataset_path = cfg.pick_or(args.dataset.clone(), "dataset", out.join("dataset.jsonl"))?;
    let cache_path = cfg.pick_or(args.cache.clone(), "cache", out.join("predictions.jsonl"))?;
    let replay_path = cfg.pick_or(args.replay.clone(), "replay", cache_path)?;
    let ks = top_ks(cfg, args.top_k.clone())?;
    let tools: ToolSet = cfg.pick_or(args.tools.clone(), "tools", ToolSet::all())?;
    let beta: f64 = cfg.pick_or(args.beta, "beta", Beta::DEFAULT.get())?;
    let beta = Beta::new(beta).map_err(|e| UsageError(e.to_string()))?;
    let strict = cfg.flag(args.strict, "strict")?;
    let floor: f64 = cfg.pick_or(args.coverage_floor, "coverage-floor", 0.0)?;
    if !(0.0..=1.0).contains(&floor) {
        return Err(UsageError(format!("coverage floor must lie in [0, 1], got {floor}")).into());
    }

    let dataset = load_dataset(&dataset_path)?;
    existing(&replay_path, "prediction replay file")?;
    let cache = PredictionCache::replay_load(&replay_path)
        .with_context(|| format!("cannot load predictions {}", replay_path.display()))?;

    let afinn = if tools.contains(Tool::Afinn) {
        let path = cfg.pick_or(args.afinn.clone(), "afinn", PathBuf::from(DEFAULT_AFINN))?;
        existing(&path, "AFINN lexicon")?;
        AfinnLexicon::load(&path)?
    } else {
        AfinnLexicon::default()
    };
    let hurtlex = if tools.contains(Tool::Hurtlex) {
        let path: PathBuf = cfg.pick(args.hurtlex.clone(), "hurtlex")?.ok_or_else(|| {
            UsageError("--hurtlex is required when hurtlex is among the tools (hurtlex_EN.tsv)".into())
        })?;
        existing(&path, "HurtLex lexicon")?;
        let level: HurtlexLevel = cfg.pick_or(args.hurtlex_level, "hurtlex-level", HurtlexLevel::Conservative)?;
        HurtlexLexicon::load(&path, level)?
    } else {
        HurtlexLexicon::default()
    };
    let analyzer = if tools.contains(Tool::Perspective) {
        Some(perspective_client(cfg, &args, &out)?)
    } else {
        None
    };

    let mut models: Vec<String> = cfg.pick_list(args.model.clone(), "model")?;
    if models.is_empty() {
        let seen: BTreeSet<String> = cache.records().into_iter().map(|r| r.model).collect();
        models = seen.into_iter().collect();
    }
    if models.is_empty() {
        return Err(UsageError(format!("no models in {}", replay_path.display())).into());
    }

    let predictor = Predictor::replay(Arc::new(cache));
    let scorers = Scorers {
        afinn: &afinn,
        hurtlex: &hurtlex,
        perspective: analyzer.as_ref().map(|a| &a.client),
    };
    let timestamp = analyzer
        .as_ref()
        .filter(|a| a.live)
        .map(|_| chrono::Utc::now().format("%Y-%m-%d").to_string());

    ensure_dir(&out)?;
    let mut all = RunOutput::default();
    for &k in &ks {
        let mut per_k = RunOutput::default();
        for model in &models {
            let run = ScoringRun {
                beta,
                tools: tools.clone(),
                strict,
                timestamp: timestamp.clone(),
                ..ScoringRun::new(model, k)
            };
            let output = run_pipeline(&run, &dataset, &predictor, &scorers)
                .with_context(|| format!("scoring {model}, top-{k}"))?;
            for r in &output.results {
                println!(
                    "{model} top-{k} {:<9} QB {:>6.2}{}",
                    r.scores.subject_group.as_str(),
                    r.qb,
                    if r.canonical { "" } else { " (non-canonical)" }
                );
            }
            per_k.extend(output);
        }
        write_results(&out.join(format!("results-k{k}.jsonl")), &per_k.results)?;
        write_coverage(&out.join(format!("coverage-k{k}.jsonl")), &per_k.coverage)?;
        all.extend(per_k);
    }

    let ratio = all.coverage_ratio();
    if !all.coverage.is_empty() {
        eprintln!(
            "warning: {} exclusions, {:.1}% of scoring work completed",
            all.coverage.len(),
            ratio * 100.0
        );
    }
    if ratio < floor {
        return Err(CoverageError(format!("coverage {ratio:.4} is below the floor {floor}")).into());
    }
    Ok(())
}

pub fn report(cfg: &ConfigFile, args: ReportArgs) -> Result<()> {
    let out = out_dir(cfg, args.out)?;
    let format: ReportFormat = cfg.pick_or(args.format, "format", ReportFormat::Markdown)?;
    existing(&out, "results directory")?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&out)
        .with_context(|| format!("cannot list {}", out.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("results-k") && n.ends_with(".jsonl"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(UsageError(format!("no results-k*.jsonl in {}", out.display())).into());
    }
    let mut results = Vec::new();
    for f in &files {
        results.extend(read_results(f)?);
    }
    for file in export_report(&results, format)? {
        let path = out.join(&file.name);
        std::fs::write(&path, &file.contents).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    match summarize_gaps(&results) {
        Ok(gaps) => {
            let path = out.join("gaps.json");
            let mut text = serde_json::to_string_pretty(&gaps)?;
            text.push('\n');
            std::fs::write(&path, text)?;
            println!("{}", path.display());
        }
        Err(e) => tracing::info!("gap summary skipped: {e}"),
    }
    Ok(())
}
