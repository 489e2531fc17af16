use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use igt_augment::analysis::{emit_report, ingest_results, Analysis};
use igt_augment::igt::{check_alignment, serialize_corpus, serialize_json_corpus, ParseOptions, ParsedCorpus};
use igt_augment::metrics::{chrf, chrf_corpus, BoundaryMode, ChrfConfig};
use igt_augment::pipeline::{
    load_corpus, load_lexicons, run_pipeline, CorpusFormat, LexiconPaths, PipelineConfig, PipelineError,
};
use igt_augment::prep::{
    build_manifest, format_prompts, make_splits, prompts_to_jsonl, subsample, write_atomic, HyperParameters,
    LanguageNames, PrepError, Task, TrainSize,
};
use igt_augment::strategies::{apply_combination, AugmentError, AugmentationContext, Combination};
use igt_augment::{Corpus, Execution};
use serde_json::{json, Value};

use crate::{
    AnalyzeArgs, AugmentArgs, CorpusArgs, FormatArgs, LexiconArgs, PipelineArgs, ScoreArgs, SplitArgs, ValidateArgs,
};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn augment_failure(e: AugmentError) -> Failure {
    match e {
        AugmentError::UnknownStrategy(_)
        | AugmentError::InvalidForLanguage { .. }
        | AugmentError::MissingResource { .. }
        | AugmentError::DuplicateStrategy(_) => usage(e),
        other => data(other),
    }
}

fn prep_failure(e: PrepError) -> Failure {
    match e {
        PrepError::InvalidFraction(_)
        | PrepError::InvalidSize(_)
        | PrepError::UnknownTask(_)
        | PrepError::UnknownLanguage(_)
        | PrepError::UnknownLanguageName(_) => usage(e),
        other => data(other),
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    if e.is_config_error() {
        usage(e)
    } else {
        data(e)
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn read_corpus(args: &CorpusArgs) -> Result<ParsedCorpus, Failure> {
    let opts = ParseOptions::new(&args.language).strict(args.strict).provenance(&args.corpus.to_string_lossy());
    load_corpus(&args.corpus, args.format, &opts).map_err(data)
}

fn serialize(corpus: &Corpus, format: CorpusFormat) -> String {
    match format {
        CorpusFormat::Toolbox => serialize_corpus(corpus),
        CorpusFormat::Json => serialize_json_corpus(corpus),
    }
}

fn emit(output: Option<&Path>, contents: &str) -> Outcome {
    match output {
        Some(path) => write_atomic(path, contents.as_bytes()).map_err(|e| data(anyhow!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(contents.as_bytes()).context("writing to stdout").map_err(data),
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn lexicon_paths(args: &LexiconArgs) -> LexiconPaths {
    let explicit = LexiconPaths {
        conj: args.conj.clone(),
        noise: args.noise.clone(),
        intj: args.intj.clone(),
        conjugations: args.conjugations.clone(),
    };
    match &args.lexicon_dir {
        Some(dir) => explicit.or(LexiconPaths::from_dir(dir)),
        None => explicit,
    }
}

pub fn validate(args: ValidateArgs) -> Outcome {
    let parsed = read_corpus(&args.input)?;
    let reports: Vec<_> = parsed.corpus.examples.iter().map(check_alignment).collect();
    let count = |f: &dyn Fn(&igt_augment::AlignmentReport) -> bool| reports.iter().filter(|r| f(r)).count();
    let word = count(&|r| r.word_aligned);
    let four = count(&|r| r.four_line_aligned);
    let morph_checked = count(&|r| r.morpheme_aligned.is_some());
    let morph = count(&|r| r.morpheme_aligned == Some(true));
    let misaligned: Vec<&str> = parsed
        .corpus
        .examples
        .iter()
        .zip(&reports)
        .filter(|(_, r)| !r.word_aligned || r.morpheme_aligned == Some(false))
        .map(|(e, _)| e.id.as_str())
        .collect();
    let text = if args.json {
        pretty(&json!({
            "examples": reports.len(),
            "word_aligned": word,
            "four_line_aligned": four,
            "morpheme_aligned": morph,
            "morpheme_checked": morph_checked,
            "skipped_blocks": parsed.skipped.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "misaligned": misaligned,
        }))
    } else {
        let mut t = format!(
            "{} examples\nword_aligned: {word}\nfour_line_aligned: {four}\nmorpheme_aligned: {morph} of {morph_checked} checked\nskipped_blocks: {}\n",
            reports.len(),
            parsed.skipped.len()
        );
        for e in &parsed.skipped {
            t.push_str(&format!("  skipped: {e}\n"));
        }
        t
    };
    emit(None, &text)?;
    if args.input.strict && !misaligned.is_empty() {
        return Err(data(anyhow!("{} misaligned examples: {}", misaligned.len(), misaligned.join(", "))));
    }
    Ok(())
}

pub fn augment(args: AugmentArgs) -> Outcome {
    let combo = if args.strategies.trim() == "baseline" {
        Combination::baseline(&args.input.language)
    } else {
        Combination::parse(&args.input.language, &args.strategies).map_err(augment_failure)?
    };
    let lexicons = load_lexicons(&lexicon_paths(&args.lexicons), args.input.strict).map_err(pipeline_failure)?;
    for list in [&lexicons.conj, &lexicons.noise, &lexicons.intj].into_iter().flatten() {
        if !list.is_reference_size() {
            eprintln!(
                "warning: {} list has {} entries, not {}",
                list.name,
                list.len(),
                igt_augment::lexicon::REFERENCE_LIST_SIZE
            );
        }
    }
    let mut ctx = AugmentationContext::new(args.seed, lexicons).with_execution(execution(args.sequential));
    ctx.verb_tags.extend(args.verb_tags.iter().cloned());
    if args.perm_cap == 0 {
        return Err(usage(anyhow!("--perm-cap must be positive")));
    }
    ctx.perm_cap = args.perm_cap;
    igt_augment::strategies::validate_combination(&combo, &args.input.language, &ctx).map_err(augment_failure)?;

    let parsed = read_corpus(&args.input)?;
    let augmented = apply_combination(&parsed.corpus, &combo, &ctx).map_err(augment_failure)?;
    emit(args.output.as_deref(), &serialize(&augmented.corpus, args.input.format))?;
    let stats = json!({
        "combination": combo.label(),
        "language": args.input.language,
        "seed": args.seed,
        "inputs": parsed.corpus.len(),
        "outputs": augmented.corpus.len(),
        "strategies": augmented.stats,
    });
    match &args.stats {
        Some(path) => emit(Some(path), &pretty(&stats))?,
        None => {
            for s in &augmented.stats {
                eprintln!(
                    "{}: {} outputs from {} examples ({:.2} per example)",
                    s.label, s.outputs, s.inputs, s.average
                );
            }
        }
    }
    Ok(())
}

pub fn split(args: SplitArgs) -> Outcome {
    let size: TrainSize = args.size.parse().map_err(prep_failure)?;
    let parsed = read_corpus(&args.input)?;
    let (train, eval) = make_splits(&parsed.corpus, args.eval_fraction, args.seed).map_err(prep_failure)?;
    let sample = subsample(&train, size, args.seed).map_err(prep_failure)?;
    let write =
        |name: &str, corpus: &Corpus| emit(Some(&args.out_dir.join(name)), &serialize(corpus, args.input.format));
    write("train.txt", &sample)?;
    write("eval.txt", &eval)?;
    println!("train: {} of {}\neval: {}", sample.len(), train.len(), eval.len());
    Ok(())
}

fn language_names(language: &str, name: &Option<String>, hrl: &Option<String>) -> Result<LanguageNames, Failure> {
    let defaults = LanguageNames::for_language(language).ok();
    let pick = |given: &Option<String>, default: Option<String>, flag: &str| {
        given
            .clone()
            .or(default)
            .ok_or_else(|| usage(anyhow!("no default display name for {language:?}; pass --{flag}")))
    };
    Ok(LanguageNames {
        language: pick(name, defaults.as_ref().map(|d| d.language.clone()), "language-name")?,
        hrl: pick(hrl, defaults.as_ref().map(|d| d.hrl.clone()), "hrl-name")?,
    })
}

fn hyperparameters(args: &FormatArgs) -> Result<Option<HyperParameters>, Failure> {
    let overrides = [
        args.batch_size.is_some(),
        args.learning_rate.is_some(),
        args.weight_decay.is_some(),
        args.augmented_steps.is_some(),
        args.original_steps.is_some(),
    ];
    if !overrides.contains(&true) {
        return Ok(None);
    }
    let base = HyperParameters::for_language(&args.input.language).ok();
    let missing =
        || usage(anyhow!("language {:?} has no defaults; pass every hyperparameter flag", args.input.language));
    let h = match base {
        Some(b) => HyperParameters {
            batch_size: args.batch_size.unwrap_or(b.batch_size),
            learning_rate: args.learning_rate.unwrap_or(b.learning_rate),
            weight_decay: args.weight_decay.unwrap_or(b.weight_decay),
            augmented_steps: args.augmented_steps.unwrap_or(b.augmented_steps),
            original_steps: args.original_steps.unwrap_or(b.original_steps),
        },
        None => HyperParameters {
            batch_size: args.batch_size.ok_or_else(missing)?,
            learning_rate: args.learning_rate.ok_or_else(missing)?,
            weight_decay: args.weight_decay.ok_or_else(missing)?,
            augmented_steps: args.augmented_steps.ok_or_else(missing)?,
            original_steps: args.original_steps.ok_or_else(missing)?,
        },
    };
    if h.batch_size == 0 || h.augmented_steps == 0 || h.original_steps == 0 {
        return Err(usage(anyhow!("batch size and step counts must be positive")));
    }
    Ok(Some(h))
}

pub fn format(args: FormatArgs) -> Outcome {
    let task: Task = args.task.parse().map_err(prep_failure)?;
    let names = language_names(&args.input.language, &args.language_name, &args.hrl_name)?;
    let hyper = hyperparameters(&args)?;
    let original = read_corpus(&args.input)?.corpus;
    match &args.out_dir {
        Some(dir) => {
            if hyper.is_none() {
                HyperParameters::for_language(&args.input.language).map_err(prep_failure)?;
            }
            let augmented = match &args.augmented {
                Some(path) => read_corpus(&CorpusArgs { corpus: path.clone(), ..args.input.clone() })?.corpus,
                None => original.with_examples(Vec::new()),
            };
            let manifest = build_manifest(&augmented, &original, &args.input.language, task, &names, hyper, dir)
                .map_err(prep_failure)?;
            println!(
                "phase 1: {} ({} examples, {} steps)\nphase 2: {} ({} examples, {} steps)",
                manifest.phase1.file,
                manifest.phase1.examples,
                manifest.phase1.steps,
                manifest.phase2.file,
                manifest.phase2.examples,
                manifest.phase2.steps
            );
            Ok(())
        }
        None => {
            let prompts = format_prompts(&original, task, &names).map_err(prep_failure)?;
            emit(args.output.as_deref(), &prompts_to_jsonl(&prompts))
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string()).map_err(data)?;
    Ok(text.lines().map(str::to_string).collect())
}

pub fn score(args: ScoreArgs) -> Outcome {
    let mode = if args.modified { BoundaryMode::WordInternal } else { BoundaryMode::Crossing };
    let cfg = ChrfConfig::new(args.max_n, args.beta, mode).map_err(usage)?;
    let hyps = read_lines(&args.hypotheses)?;
    let refs = read_lines(&args.references)?;
    if hyps.len() != refs.len() {
        return Err(data(anyhow!("{} hypotheses but {} references", hyps.len(), refs.len())));
    }
    let pairs: Vec<(String, String)> = hyps.into_iter().zip(refs).collect();
    let corpus = chrf_corpus(&pairs, &cfg, execution(args.sequential)).map_err(data)?;
    let exec = execution(args.sequential);
    let sentences = exec.map(&pairs, |(h, r)| chrf(h, r, &cfg).score);
    let report = json!({
        "config": cfg,
        "corpus": corpus.score,
        "sentences": sentences,
    });
    emit(args.output.as_deref(), &pretty(&report))
}

pub fn analyze(args: AnalyzeArgs) -> Outcome {
    let task: Task = args.task.parse().map_err(prep_failure)?;
    let text = fs::read_to_string(&args.results).with_context(|| args.results.display().to_string()).map_err(data)?;
    let table = ingest_results(&text).map_err(data)?;
    let mut selection = Vec::new();
    if args.baseline_deltas {
        selection.push(Analysis::BaselineDeltas);
    }
    if args.marginal {
        selection.push(Analysis::MarginalEffects);
    }
    if let Some(k) = args.top {
        selection.push(Analysis::BestCombinations(k));
    }
    if selection.is_empty() {
        selection = vec![Analysis::BaselineDeltas, Analysis::MarginalEffects];
    }
    let report = emit_report(&table, task, &args.language, &selection).map_err(data)?;
    if let Some(dir) = &args.out_dir {
        for t in &report.tables {
            emit(Some(&dir.join(format!("{}.csv", t.name))), &t.to_csv())?;
        }
    }
    emit(None, &report.to_markdown())
}

fn absolute(path: &Path) -> Result<PathBuf, Failure> {
    std::path::absolute(path).with_context(|| path.display().to_string()).map_err(usage)
}

fn apply_overrides(config: &mut Value, args: &PipelineArgs) -> Result<(), Failure> {
    let obj = config.as_object_mut().ok_or_else(|| usage(anyhow!("config must be a JSON object")))?;
    if let Some(language) = &args.language {
        obj.insert("language".into(), json!(language));
    }
    if let Some(seeds) = &args.seeds {
        obj.insert("seeds".into(), json!(seeds));
    }
    if let Some(sizes) = &args.sizes {
        let sizes = sizes
            .iter()
            .map(|s| s.parse::<TrainSize>().map(|t| serde_json::to_value(t).expect("sizes serialize")))
            .collect::<Result<Vec<_>, _>>()
            .map_err(prep_failure)?;
        obj.insert("sizes".into(), Value::Array(sizes));
    }
    if let Some(combos) = &args.combinations {
        let value = if combos.trim() == "all" {
            json!("all")
        } else {
            json!(combos.split(';').map(str::trim).collect::<Vec<_>>())
        };
        obj.insert("combinations".into(), value);
    }
    if let Some(tasks) = &args.tasks {
        obj.insert("tasks".into(), json!(tasks));
    }
    if let Some(f) = args.eval_fraction {
        obj.insert("eval_fraction".into(), json!(f));
    }
    let lexicons = obj.entry("lexicons").or_insert_with(|| json!({}));
    let lexicons = lexicons.as_object_mut().ok_or_else(|| usage(anyhow!("lexicons must be a JSON object")))?;
    let explicit = [("conj", &args.lexicons.conj), ("noise", &args.lexicons.noise), ("intj", &args.lexicons.intj)];
    for (key, path) in explicit {
        if let Some(p) = path {
            lexicons.insert(key.into(), json!(absolute(p)?));
        }
    }
    if let Some(p) = &args.lexicons.conjugations {
        let value = if p.as_os_str() == igt_augment::pipeline::BUILTIN_CONJUGATIONS { p.clone() } else { absolute(p)? };
        lexicons.insert("conjugations".into(), json!(value));
    }
    // the lexicon directory only fills entries the config leaves unset
    if let Some(dir) = &args.lexicons.lexicon_dir {
        let found = LexiconPaths::from_dir(&absolute(dir)?);
        for (key, path) in
            [("conj", found.conj), ("noise", found.noise), ("intj", found.intj), ("conjugations", found.conjugations)]
        {
            if let Some(p) = path {
                lexicons.entry(key).or_insert(json!(p));
            }
        }
    }
    Ok(())
}

pub fn pipeline(args: PipelineArgs) -> Outcome {
    let text = fs::read_to_string(&args.config).with_context(|| args.config.display().to_string()).map_err(usage)?;
    let mut value: Value = serde_json::from_str(&text).context("config is not valid JSON").map_err(usage)?;
    apply_overrides(&mut value, &args)?;
    let config: PipelineConfig = serde_json::from_value(value).context("config").map_err(usage)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let summary =
        run_pipeline(&config, base, &args.out, args.force, execution(args.sequential)).map_err(pipeline_failure)?;
    let written = summary.written();
    println!("{} leaves: {written} written, {} already complete", summary.leaves.len(), summary.leaves.len() - written);
    if summary.skipped_blocks > 0 {
        eprintln!("warning: {} malformed blocks skipped", summary.skipped_blocks);
    }
    Ok(())
}
