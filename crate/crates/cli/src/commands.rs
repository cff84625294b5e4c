use std::path::Path;

use entailrank::bm25::{
    build_index, collection_passages, load_index, normalize_run, save_index, FragmentScorer,
};
use entailrank::corpus::{
    dataset_stats, load_aux_documents, load_base_paragraphs, load_canonical, load_coliee_layout,
    split_train_dev, write_canonical, write_jsonl, TokenCount,
};
use entailrank::fsio;
use entailrank::metrics::{compare_reports, micro_prf};
use entailrank::runs::{read_logits, read_run, validate_run, write_run, write_scoring_requests};
use entailrank::selection::{
    apply_selection, ensemble_pipeline, grid_search, read_selection, write_predictions,
    write_selection, TunedParams,
};
use entailrank::textproc::{balanced_sample, training_pairs};
use entailrank::{
    Analyzer, Bm25Params, Dataset, Error, EvalReport, NormalizeMode, ParamGrid, Run,
    SelectionParams, SentenceSplitter,
};
use log::info;
use rayon::prelude::*;

use crate::{CliError, Command, TextArgs};

type CliResult = Result<(), CliError>;

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Ingest { root, out } => ingest(&root, &out),
        Command::Split {
            dataset,
            ratio,
            seed,
            train_out,
            dev_out,
        } => split(&dataset, ratio, seed, &train_out, &dev_out),
        Command::Stats {
            dataset,
            analyzed,
            text,
            out,
        } => stats(&dataset, analyzed, &text, out.as_deref()),
        Command::Index {
            dataset,
            aux_docs,
            window,
            stride,
            text,
            out,
        } => index(&dataset, &aux_docs, window, stride, &text, &out),
        Command::ScoreBm25 {
            index,
            dataset,
            normalize,
            k1,
            b,
            tag,
            text,
            out,
        } => score_bm25(
            &index,
            &dataset,
            normalize,
            Bm25Params { k1, b },
            &tag,
            &text,
            &out,
        ),
        Command::Requests {
            dataset,
            limit,
            out,
        } => requests(&dataset, limit, &out),
        Command::IngestScores {
            dataset,
            logits,
            run,
            tag,
            normalize,
            out,
        } => ingest_scores(
            &dataset,
            logits.as_deref(),
            run.as_deref(),
            tag,
            normalize,
            &out,
        ),
        Command::Tune {
            run,
            gold,
            grid,
            out,
        } => tune(&run, &gold, &grid, &out),
        Command::Select {
            run,
            params,
            out,
            selection_out,
        } => select(&run, &params, &out, selection_out.as_deref()),
        Command::Ensemble {
            sel_a,
            sel_b,
            gold,
            grid,
            out,
            pred_out,
            params_out,
        } => ensemble(
            &sel_a,
            &sel_b,
            &gold,
            &grid,
            &out,
            pred_out.as_deref(),
            params_out.as_deref(),
        ),
        Command::Eval {
            pred,
            gold,
            out,
            baseline,
        } => eval(&pred, &gold, out.as_deref(), baseline.as_deref()),
        Command::Augment {
            dataset,
            base,
            n,
            seed,
            out,
        } => augment(&dataset, &base, n, seed, &out),
    }
}

impl TextArgs {
    fn analyzer(&self) -> Result<Analyzer, Error> {
        let base = match &self.stopwords {
            Some(path) => Analyzer::from_stopword_file(path)?,
            None => Analyzer::english(),
        };
        Ok(base.stemming(!self.no_stem))
    }

    fn splitter(&self) -> Result<SentenceSplitter, Error> {
        match &self.abbreviations {
            Some(path) => SentenceSplitter::from_file(path),
            None => Ok(SentenceSplitter::default()),
        }
    }
}

fn json_pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    text.into_bytes()
}

fn ingest(root: &Path, out: &Path) -> CliResult {
    let ds = load_coliee_layout(root)?;
    write_canonical(&ds, out)?;
    println!(
        "{} examples ({} labeled) -> {}",
        ds.len(),
        ds.examples().iter().filter(|e| e.is_labeled()).count(),
        out.display()
    );
    Ok(())
}

fn split(dataset: &Path, ratio: f64, seed: u64, train_out: &Path, dev_out: &Path) -> CliResult {
    let ds = load_canonical(dataset)?;
    let (train, dev) = split_train_dev(&ds, ratio, seed)?;
    write_canonical(&train, train_out)?;
    write_canonical(&dev, dev_out)?;
    println!("train {}  dev {}", train.len(), dev.len());
    Ok(())
}

fn stats(dataset: &Path, analyzed: bool, text: &TextArgs, out: Option<&Path>) -> CliResult {
    let ds = load_canonical(dataset)?;
    let analyzer = text.analyzer()?;
    let mode = if analyzed {
        TokenCount::Analyzed(&analyzer)
    } else {
        TokenCount::Whitespace
    };
    let s = dataset_stats(&ds, mode)?;
    println!("{:<22}{:>10}", "examples", s.example_count);
    println!("{:<22}{:>10}", "labeled", s.labeled_count);
    println!("{:<22}{:>10.2}", "avg candidates", s.avg_candidates);
    println!("{:<22}{:>10.2}", "avg positives", s.avg_positives);
    println!(
        "{:<22}{:>10.2}",
        "avg fragment tokens", s.avg_fragment_tokens
    );
    println!(
        "{:<22}{:>10.2}",
        "avg candidate tokens", s.avg_candidate_tokens
    );
    if let Some(path) = out {
        fsio::write_atomic(path, &json_pretty(&s))?;
    }
    Ok(())
}

fn index(
    datasets: &[std::path::PathBuf],
    aux: &[std::path::PathBuf],
    window: usize,
    stride: usize,
    text: &TextArgs,
    out: &Path,
) -> CliResult {
    let analyzer = text.analyzer()?;
    let splitter = text.splitter()?;
    let mut loaded = datasets
        .iter()
        .map(|p| load_canonical(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut docs = Vec::new();
    for path in aux {
        docs.extend(load_aux_documents(path)?);
    }
    if !docs.is_empty() {
        loaded.push(Dataset::new("aux", Vec::new())?.with_aux_documents(docs));
    }
    let refs: Vec<&Dataset> = loaded.iter().collect();
    let passages = collection_passages(&refs, &splitter, window, stride)?;
    let idx = build_index(&passages, &analyzer)?;
    save_index(&idx, out)?;
    println!(
        "{} passages, {} terms, avgdl {:.2} -> {}",
        idx.n(),
        idx.term_count(),
        idx.avgdl(),
        out.display()
    );
    Ok(())
}

fn score_bm25(
    index: &Path,
    dataset: &Path,
    normalize: NormalizeMode,
    params: Bm25Params,
    tag: &str,
    text: &TextArgs,
    out: &Path,
) -> CliResult {
    let analyzer = text.analyzer()?;
    let splitter = text.splitter()?;
    let idx = load_index(index, &analyzer)?;
    let ds = load_canonical(dataset)?;
    let scorer = FragmentScorer::new(&idx, &analyzer, &splitter, params)?;
    let scored = ds
        .examples()
        .par_iter()
        .map(|ex| {
            let mut list = scorer.score_fragment(ex)?;
            normalize_run(&mut list, normalize);
            Ok((ex.example_id.clone(), list))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut run = Run::new(tag);
    for (id, list) in scored {
        run.insert(id, list);
    }
    write_run(&run.sorted(), out)?;
    info!("scored {} examples", ds.len());
    println!("{} examples scored -> {}", ds.len(), out.display());
    Ok(())
}

fn requests(dataset: &Path, limit: usize, out: &Path) -> CliResult {
    let ds = load_canonical(dataset)?;
    let n = write_scoring_requests(&ds, limit, out)?;
    println!("{n} requests -> {}", out.display());
    Ok(())
}

fn ingest_scores(
    dataset: &Path,
    logits: Option<&Path>,
    run_path: Option<&Path>,
    tag: Option<String>,
    normalize: NormalizeMode,
    out: &Path,
) -> CliResult {
    let ds = load_canonical(dataset)?;
    let mut run = match (logits, run_path) {
        (Some(path), _) => read_logits(path, tag.as_deref().unwrap_or("neural"))?,
        (None, Some(path)) => read_run(path)?,
        (None, None) => {
            return Err(
                Error::InvalidArgument("one of --logits or --run is required".into()).into(),
            )
        }
    };
    if let Some(t) = tag {
        run.tag = t;
    }
    let findings = validate_run(&run, &ds);
    if !findings.is_empty() {
        for f in &findings {
            eprintln!("{f}");
        }
        return Err(CliError::Findings {
            what: "scores",
            count: findings.len(),
        });
    }
    for list in run.entries.values_mut() {
        normalize_run(list, normalize);
    }
    write_run(&run.sorted(), out)?;
    println!(
        "{} examples validated -> {}",
        run.entries.len(),
        out.display()
    );
    Ok(())
}

fn tune(run_path: &Path, gold: &Path, grid: &str, out: &Path) -> CliResult {
    let grid: ParamGrid = grid.parse()?;
    let run = read_run(run_path)?;
    let gold = load_canonical(gold)?;
    let result = grid_search(&run, &gold, &grid)?;
    TunedParams::new(&result, &run.tag, &grid).save(out)?;
    println!("params {}", result.params);
    println!("dev F1 {:.4}", result.report.f1);
    Ok(())
}

fn resolve_params(spec: &str) -> Result<SelectionParams, Error> {
    match spec.parse::<SelectionParams>() {
        Ok(p) => Ok(p),
        Err(parse_err) => {
            let path = Path::new(spec);
            if path.is_file() {
                TunedParams::load(path)?.params()
            } else {
                Err(parse_err)
            }
        }
    }
}

fn select(run_path: &Path, params: &str, out: &Path, selection_out: Option<&Path>) -> CliResult {
    let params = resolve_params(params)?;
    let run = read_run(run_path)?;
    let selection = apply_selection(&run, &params);
    write_predictions(&selection.predictions(), out)?;
    if let Some(path) = selection_out {
        write_selection(&selection, path)?;
    }
    let answers: usize = selection.answers.values().map(Vec::len).sum();
    println!(
        "{answers} answers over {} examples with {params}",
        selection.len()
    );
    Ok(())
}

fn ensemble(
    sel_a: &Path,
    sel_b: &Path,
    gold: &Path,
    grid: &str,
    out: &Path,
    pred_out: Option<&Path>,
    params_out: Option<&Path>,
) -> CliResult {
    let grid: ParamGrid = grid.parse()?;
    let a = read_selection(sel_a)?;
    let b = read_selection(sel_b)?;
    let gold = load_canonical(gold)?;
    let outcome = ensemble_pipeline(&a, &b, &gold, &grid)?;
    write_selection(&outcome.selection, out)?;
    if let Some(path) = pred_out {
        write_predictions(&outcome.selection.predictions(), path)?;
    }
    if let Some(path) = params_out {
        TunedParams::new(&outcome.tuned, &outcome.merged.tag, &grid).save(path)?;
    }
    println!("params {}", outcome.tuned.params);
    println!("dev F1 {:.4}", outcome.tuned.report.f1);
    Ok(())
}

fn eval(pred: &Path, gold: &Path, out: Option<&Path>, baseline: Option<&Path>) -> CliResult {
    let gold = load_canonical(gold)?;
    let predictions = entailrank::selection::read_predictions(pred)?;
    let pools = gold.by_id();
    let mut findings = 0;
    for (example_id, chosen) in &predictions {
        let Some(ex) = pools.get(example_id.as_str()) else {
            eprintln!("prediction for unknown example {example_id}");
            findings += 1;
            continue;
        };
        for c in chosen {
            if ex.candidate(c).is_none() {
                eprintln!("{example_id}: candidate {c} is outside the pool");
                findings += 1;
            }
        }
    }
    if findings > 0 {
        return Err(CliError::Findings {
            what: "predictions",
            count: findings,
        });
    }
    let report = micro_prf(&predictions, &gold)?;
    let base = match baseline {
        Some(path) => Some(read_report(path)?),
        None => None,
    };
    println!("{report}");
    if let Some(b) = base {
        println!("{}", compare_reports(&report, &b));
    }
    if let Some(path) = out {
        fsio::write_atomic(path, &json_pretty(&report))?;
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<EvalReport, Error> {
    serde_json::from_str(&fsio::read_to_string(path)?).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn augment(dataset: &Path, base: &Path, n: usize, seed: u64, out: &Path) -> CliResult {
    let ds = load_canonical(dataset)?;
    let base = load_base_paragraphs(base)?;
    let pairs = training_pairs(&ds, &base)?;
    let positives = pairs.iter().filter(|p| p.label).count();
    info!("{} pairs, {positives} positive", pairs.len());
    let sample = balanced_sample(&pairs, n, seed)?;
    write_jsonl(&sample, out)?;
    println!(
        "{} pairs ({positives} positive) -> sample of {} -> {}",
        pairs.len(),
        sample.len(),
        out.display()
    );
    Ok(())
}
