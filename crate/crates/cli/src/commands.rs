use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use defsim_core::consensus::{evaluations_markdown, pairwise_markdown};
use defsim_core::corpus::parse_corpus_str;
use defsim_core::fixtures;
use defsim_core::generation::{ContextDelivery, HttpChatClient, MockChatClient};
use defsim_core::{
    evaluate_new, evolve, generate_composites, matrix, pairwise_table, rank, save_embeddings,
    Corpus, Embedder, EmbeddingSet, EvaluationSettings, GenerationConfig, PromptBundle,
    SelfExclusion,
};
use log::info;
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, Command, CompareArgs, EmbedArgs, EvaluateArgs, ExclusionArgs, GenerateArgs,
    IngestCheckArgs, ProviderArgs, ProviderChoice, ReplayArgs,
};
use crate::error::{CliError, CliResult};
use crate::run::{RunManifest, RunOutput};

pub fn execute(command: &Command) -> CliResult<PathBuf> {
    match command {
        Command::IngestCheck(a) => ingest_check(command, a),
        Command::Embed(a) => embed(command, a),
        Command::Analyze(a) => analyze(command, a),
        Command::Compare(a) => compare(command, a),
        Command::Evaluate(a) => evaluate(command, a),
        Command::Generate(a) => generate(command, a),
        Command::Replay(a) => replay(a),
    }
}

fn read_input(path: &Path, run: &mut RunOutput) -> CliResult<Corpus> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    run.input(path.display().to_string(), text.as_bytes());
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    Ok(parse_corpus_str(name, &text)?)
}

fn bundled(name: &str, text: &str, run: &mut RunOutput) -> CliResult<Corpus> {
    run.input(format!("bundled:{name}"), text.as_bytes());
    Ok(parse_corpus_str(name, text)?)
}

fn require_files(paths: &[&Path]) -> CliResult<()> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Usage(format!("no such file: {}", p.display())));
        }
    }
    Ok(())
}

fn embedder(args: &ProviderArgs, run: &mut RunOutput) -> CliResult<Embedder> {
    match args.choice() {
        ProviderChoice::File => {
            if args.embeddings.is_empty() {
                return Err(CliError::Usage("--provider file needs --embeddings".into()));
            }
            let paths: Vec<&Path> = args.embeddings.iter().map(PathBuf::as_path).collect();
            require_files(&paths)?;
            for p in paths {
                run.input(p.display().to_string(), &fs::read(p)?);
            }
        }
        ProviderChoice::Remote if args.endpoint.is_none() => {
            return Err(CliError::Usage("--provider remote needs --endpoint".into()));
        }
        _ => {}
    }
    let config = args.to_config();
    config.validate()?;
    Ok(Embedder::from_config(&config)?)
}

fn exclusion(args: &ExclusionArgs) -> CliResult<SelfExclusion> {
    let mut ex = if args.no_default_alias {
        SelfExclusion::by_id()
    } else {
        SelfExclusion::with_baseline_alias()
    };
    for spec in &args.aliases {
        let (a, b) = spec
            .split_once('=')
            .filter(|(a, b)| !a.is_empty() && !b.is_empty())
            .ok_or_else(|| CliError::Usage(format!("alias must look like a=b, got {spec:?}")))?;
        ex = ex.alias(a, b);
    }
    Ok(ex.enabled(!args.include_self))
}

fn json_line<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct CorpusSummary {
    file: String,
    definitions: usize,
    min_words: usize,
    max_words: usize,
    mean_words: f64,
    content_hash: String,
}

fn ingest_check(command: &Command, args: &IngestCheckArgs) -> CliResult<PathBuf> {
    let paths: Vec<&Path> = args.files.iter().map(PathBuf::as_path).collect();
    require_files(&paths)?;
    let mut run = RunOutput::new(command);
    let mut summaries = Vec::new();
    for p in paths {
        let corpus = read_input(p, &mut run)?;
        let words: Vec<usize> = corpus.iter().map(|d| d.word_count()).collect();
        let s = CorpusSummary {
            file: p.display().to_string(),
            definitions: corpus.len(),
            min_words: words.iter().copied().min().unwrap_or(0),
            max_words: words.iter().copied().max().unwrap_or(0),
            mean_words: words.iter().sum::<usize>() as f64 / words.len().max(1) as f64,
            content_hash: corpus.content_hash(),
        };
        println!(
            "{}: {} definitions, {}-{} words (mean {:.1})",
            s.file, s.definitions, s.min_words, s.max_words, s.mean_words
        );
        summaries.push(s);
    }
    run.file("ingest.json", json_line(&summaries)?);
    run.commit(&args.output.out_dir)
}

fn embed(command: &Command, args: &EmbedArgs) -> CliResult<PathBuf> {
    let paths: Vec<&Path> = args.corpora.iter().map(PathBuf::as_path).collect();
    require_files(&paths)?;
    let mut run = RunOutput::new(command);
    let embedder = embedder(&args.provider, &mut run)?;
    let mut set: Option<EmbeddingSet> = None;
    for p in paths {
        let corpus = read_input(p, &mut run)?;
        let part = embedder.embed_corpus(&corpus)?;
        match set.as_mut() {
            Some(s) => s.extend_from(&part)?,
            None => set = Some(part),
        }
    }
    let set = set.expect("at least one corpus");
    let mut buf = Vec::new();
    save_embeddings(&set, &mut buf)?;
    println!(
        "embedded {} definitions with {} (dim {})",
        set.len(),
        set.model_id(),
        set.dim()
    );
    run.file("embeddings.json", buf);
    run.commit(&args.output.out_dir)
}

#[derive(Serialize)]
struct Extremes {
    min: defsim_core::similarity::Cell,
    max: defsim_core::similarity::Cell,
}

fn analyze(command: &Command, args: &AnalyzeArgs) -> CliResult<PathBuf> {
    require_files(&[&args.candidates, &args.references])?;
    let ex = exclusion(&args.exclusion)?;
    let mut run = RunOutput::new(command);
    let candidates = read_input(&args.candidates, &mut run)?;
    let references = read_input(&args.references, &mut run)?;
    let embedder = embedder(&args.provider, &mut run)?;

    let cand_set = embedder.embed_corpus(&candidates)?;
    let ref_set = embedder.embed_corpus(&references)?;
    let m = matrix(&cand_set, &ref_set)?;
    let report = rank(&m, &ex, &references.name)?;
    let extremes = Extremes {
        min: m.min_cell(),
        max: m.max_cell(),
    };
    info!(
        "matrix {}x{}, min {:.3} at ({}, {}), max {:.3} at ({}, {})",
        m.n_rows(),
        m.n_cols(),
        extremes.min.score,
        extremes.min.candidate_id,
        extremes.min.reference_id,
        extremes.max.score,
        extremes.max.candidate_id,
        extremes.max.reference_id
    );

    run.file("matrix.csv", m.to_csv()?);
    run.file("matrix.json", m.to_json()?);
    run.file("extremes.json", json_line(&extremes)?);
    run.file("report.json", report.to_json()?);
    run.file("report.md", report.to_markdown());
    run.file("report.csv", report.to_csv());

    for row in report.top(args.top_k) {
        println!(
            "{:>3}. {:<16} {:.3}  (n={})",
            row.rank, row.candidate_id, row.average_score, row.n_references_used
        );
    }
    run.commit(&args.output.out_dir)
}

/// The bundled fixtures merged into one lookup corpus.
fn bundled_pool(run: &mut RunOutput) -> CliResult<Corpus> {
    let parts = [
        ("individual-60", fixtures::INDIVIDUAL_60),
        ("composite-20", fixtures::COMPOSITE_20),
        ("baseline", fixtures::BASELINE),
        ("external-candidates", fixtures::EXTERNAL_CANDIDATES),
    ];
    let mut pool: Option<Corpus> = None;
    for (name, text) in parts {
        let c = bundled(name, text, run)?;
        pool = Some(match pool {
            Some(p) => p.merged(&c, "bundled")?,
            None => c,
        });
    }
    Ok(pool.expect("non-empty"))
}

fn compare(command: &Command, args: &CompareArgs) -> CliResult<PathBuf> {
    if args.ids.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least 2 ids, got {}",
            args.ids.len()
        )));
    }
    let paths: Vec<&Path> = args.corpora.iter().map(PathBuf::as_path).collect();
    require_files(&paths)?;
    let mut run = RunOutput::new(command);
    let pool = if paths.is_empty() {
        bundled_pool(&mut run)?
    } else {
        let mut pool: Option<Corpus> = None;
        for p in paths {
            let c = read_input(p, &mut run)?;
            pool = Some(match pool {
                Some(acc) => acc.merged(&c, "pool")?,
                None => c,
            });
        }
        pool.expect("non-empty")
    };
    let embedder = embedder(&args.provider, &mut run)?;
    let selected = pool.subset(&args.ids)?;
    let set = embedder.embed_corpus(&selected)?;
    let m = pairwise_table(&args.ids, &set)?;
    let md = pairwise_markdown(&m, |id| id.to_string());
    print!("{md}");
    run.file("pairwise.md", md);
    run.file("pairwise.csv", m.to_csv()?);
    run.file("pairwise.json", m.to_json()?);
    run.commit(&args.output.out_dir)
}

fn evaluate(command: &Command, args: &EvaluateArgs) -> CliResult<PathBuf> {
    if args.threshold.is_nan() {
        return Err(CliError::Usage("threshold must be a number".into()));
    }
    let mut inputs: Vec<&Path> = vec![&args.candidates, &args.references];
    inputs.extend(args.anchor_corpora.iter().map(PathBuf::as_path));
    require_files(&inputs)?;
    let ex = exclusion(&args.exclusion)?;
    let mut run = RunOutput::new(command);
    let candidates = read_input(&args.candidates, &mut run)?;
    let references = read_input(&args.references, &mut run)?;

    let anchors: Vec<String> = if args.no_anchors {
        Vec::new()
    } else if args.anchors.is_empty() {
        fixtures::ANCHOR_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        args.anchors.clone()
    };
    let pool = if anchors.is_empty() {
        None
    } else if args.anchor_corpora.is_empty() {
        Some(bundled("composite-20", fixtures::COMPOSITE_20, &mut run)?)
    } else {
        let mut pool: Option<Corpus> = None;
        for p in &args.anchor_corpora {
            let c = read_input(p, &mut run)?;
            pool = Some(match pool {
                Some(acc) => acc.merged(&c, "anchors")?,
                None => c,
            });
        }
        pool
    };

    let embedder = embedder(&args.provider, &mut run)?;
    let settings = EvaluationSettings {
        threshold: args.threshold,
        anchors,
        exclusion: ex,
    };
    let results = if args.evolve {
        let (accumulated, results) = evolve(
            &references,
            &candidates,
            pool.as_ref(),
            &settings,
            &embedder,
        )?;
        run.file("accumulated-corpus.jsonl", accumulated.to_jsonl());
        results
    } else {
        candidates
            .iter()
            .map(|c| evaluate_new(c, &references, pool.as_ref(), &settings, &embedder))
            .collect::<defsim_core::Result<Vec<_>>>()?
    };

    let md = evaluations_markdown(&results);
    print!("{md}");
    run.file("evaluation.json", json_line(&results)?);
    run.file("evaluation.md", md);
    run.commit(&args.output.out_dir)
}

fn generate(command: &Command, args: &GenerateArgs) -> CliResult<PathBuf> {
    if args.n == 0 {
        return Err(CliError::Usage("-n must be at least 1".into()));
    }
    if !args.mock && args.endpoint.is_none() {
        return Err(CliError::Usage(
            "generate needs --endpoint or --mock".into(),
        ));
    }
    if let Some(p) = &args.corpus {
        require_files(&[p])?;
    }
    let mut run = RunOutput::new(command);
    let corpus = match &args.corpus {
        Some(p) => read_input(p, &mut run)?,
        None => bundled("individual-60", fixtures::INDIVIDUAL_60, &mut run)?,
    };
    let config = GenerationConfig {
        endpoint: args.endpoint.clone(),
        model_id: args.model_id.clone(),
        temperature: args.temperature,
        n_definitions: args.n,
        max_words_per_definition: args.max_words,
        seed: args.mock.then_some(args.seed),
        timeout: Duration::from_secs(args.timeout_secs),
        context: match args.chunk_size {
            Some(per_message) => ContextDelivery::Chunked { per_message },
            None => ContextDelivery::Single,
        },
    };
    config.validate()?;
    let prompts = PromptBundle::for_config(&corpus, &config);
    let generation = if args.mock {
        let client = MockChatClient::new(&corpus, args.seed, args.n)?;
        generate_composites(&corpus, &config, &prompts, &client)?
    } else {
        let client = HttpChatClient::from_config(&config)?;
        generate_composites(&corpus, &config, &prompts, &client)?
    };

    let mut summary = String::new();
    for d in generation.corpus.iter() {
        let _ = writeln!(summary, "{}: {}", d.id, d.text);
    }
    print!("{summary}");
    run.file("generated.jsonl", generation.corpus.to_jsonl());
    run.file("generated.provenance.jsonl", generation.provenance_jsonl()?);
    if !generation.warnings.is_empty() {
        run.file("warnings.json", json_line(&generation.warnings)?);
    }
    run.commit(&args.output.out_dir)
}

fn replay(args: &ReplayArgs) -> CliResult<PathBuf> {
    let manifest = RunManifest::load(&args.manifest)?;
    if matches!(manifest.config, Command::Replay(_)) {
        return Err(CliError::Usage(
            "a replay manifest cannot be replayed".into(),
        ));
    }
    info!(
        "replaying {} from {}",
        manifest.command,
        args.manifest.display()
    );
    execute(&manifest.config)
}
