//! Subcommand bodies. Each reads its inputs, calls the library, and writes
//! the library's output unchanged.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use wikiprop_core::analytics::{self, EditionPair};
use wikiprop_core::cascade::{load_dataset, save_dataset, write_csv, CascadeDataset};
use wikiprop_core::ids::SECONDS_PER_DAY;
use wikiprop_core::ingest::{IngestConfig, RecordStream};
use wikiprop_core::predict::{self, BinaryTask, Censoring, EvalReport, Label, TemporalSplit, Vocabulary, WindowInstance};
use wikiprop_core::seqmodel::{init_model, read_checkpoint, train, write_checkpoint, HeadKind, ModelConfig};
use wikiprop_core::synth::{self, Generator, SynthConfig};
use wikiprop_core::{build_cascades, Edition, Model, PageCreationRecord};

use crate::*;

type Outputs = Vec<PathBuf>;

pub fn execute(command: &Command, globals: Globals, stdout: &mut dyn Write) -> Result<Outputs, CliError> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Build(a) => build(a),
        Command::Stats(a) => stats(a, stdout),
        Command::Jaccard(a) => jaccard(a, stdout),
        Command::Correlate(a) => correlate(a, stdout),
        Command::Split(a) => split(a, globals),
        Command::Train(a) => train_cmd(a, globals),
        Command::Evaluate(a) => evaluate(a, stdout),
        Command::Predict(a) => predict_cmd(a),
        Command::Synth(a) => synth_cmd(a, globals),
    }
}

fn data<T>(r: anyhow::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Data)
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Emit to `--out` when given, else to standard output.
fn emit(text: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<Outputs, CliError> {
    match out {
        Some(p) => {
            data(write_text(p, text))?;
            Ok(vec![p.clone()])
        }
        None => {
            data(stdout.write_all(text.as_bytes()).context("writing standard output"))?;
            Ok(Vec::new())
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("serializable");
    s.push('\n');
    s
}

fn ingest_config(f: &FilterArgs) -> Result<IngestConfig, CliError> {
    let mut cfg = IngestConfig {
        drop_bots: !f.keep_bots,
        min_timestamp: f.min_timestamp,
        max_timestamp: f.max_timestamp,
        ..IngestConfig::default()
    };
    if let Some(t) = f.topic_threshold {
        cfg.topic_threshold = t;
    }
    if let Some(r) = f.max_rejected_fraction {
        cfg.max_rejected_fraction = r;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Accepted records of a file, with the stream's rejection limit enforced.
fn read_accepted(path: &Path, cfg: &IngestConfig) -> anyhow::Result<Vec<PageCreationRecord>> {
    let mut stream = RecordStream::new(open(path)?, cfg)?;
    let records = stream.by_ref().collect::<Result<Vec<_>, _>>();
    let records = records.with_context(|| format!("reading {}", path.display()))?;
    stream.finish().with_context(|| format!("reading {}", path.display()))?;
    Ok(records)
}

fn ingest(a: &IngestArgs) -> Result<Outputs, CliError> {
    let cfg = ingest_config(&a.filter)?;
    data((|| {
        let records = read_accepted(&a.input, &cfg)?;
        let mut out = create(&a.out)?;
        for r in &records {
            out.write_all(r.to_json_line().as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(vec![a.out.clone()])
    })())
}

fn build(a: &BuildArgs) -> Result<Outputs, CliError> {
    let mut cfg = ingest_config(&a.filter)?;
    if a.truncate {
        let bound = a.cutoff + 1;
        cfg.max_timestamp = Some(cfg.max_timestamp.map_or(bound, |m| m.min(bound)));
    }
    data((|| {
        let records = read_accepted(&a.input, &cfg)?;
        let dataset = build_cascades(records, a.cutoff)?;
        save_dataset(&dataset, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
        let mut outputs = vec![a.out.clone()];
        if let Some(csv_path) = &a.csv {
            write_csv(&dataset, create(csv_path)?)?;
            outputs.push(csv_path.clone());
        }
        Ok(outputs)
    })())
}

fn load(path: &Path) -> Result<CascadeDataset, CliError> {
    data(load_dataset(path).with_context(|| format!("loading {}", path.display())))
}

fn stats(a: &StatsArgs, stdout: &mut dyn Write) -> Result<Outputs, CliError> {
    if a.stat == Stat::Intervals && a.hops.contains(&0) {
        return Err(usage("--hops: hops are 1-based"));
    }
    if a.stat == Stat::Positions && a.min_year < 2001 {
        return Err(usage("--min-year must be 2001 or later"));
    }
    let ds = load(&a.dataset)?;
    let text = data((|| -> anyhow::Result<String> {
        Ok(match (a.stat, a.format) {
            (Stat::Lengths, Format::Csv) => analytics::histogram_csv(&analytics::length_distribution(&ds)?),
            (Stat::Lengths, Format::Json) => json_line(&analytics::length_distribution(&ds)?),
            (Stat::SingleLanguage, f) => {
                let v = analytics::single_language_share(&ds)?;
                match f {
                    Format::Csv => analytics::scalar_csv("single_language_share", v),
                    Format::Json => json_line(&serde_json::json!({ "single_language_share": v })),
                }
            }
            (Stat::Continuation, Format::Csv) => analytics::continuation_csv(&analytics::continuation_probability(&ds)?),
            (Stat::Continuation, Format::Json) => json_line(&analytics::continuation_probability(&ds)?),
            (Stat::Intervals, Format::Csv) => analytics::intervals_csv(&analytics::interval_cdf_by_hop(&ds, &a.hops)?),
            (Stat::Intervals, Format::Json) => json_line(&analytics::interval_cdf_by_hop(&ds, &a.hops)?),
            (Stat::Positions, Format::Csv) => analytics::positions_csv(&analytics::relative_positions(&ds, a.min_year)?),
            (Stat::Positions, Format::Json) => json_line(&analytics::relative_positions(&ds, a.min_year)?),
        })
    })())?;
    emit(&text, &a.out, stdout)
}

fn parse_editions(codes: &[String]) -> Result<Vec<Edition>, CliError> {
    codes
        .iter()
        .map(|c| Edition::new(c.as_str()).map_err(|e| usage(format!("--editions: {e}"))))
        .collect()
}

fn jaccard(a: &JaccardArgs, stdout: &mut dyn Write) -> Result<Outputs, CliError> {
    let editions = parse_editions(&a.editions)?;
    let ds = load(&a.dataset)?;
    let subset = (!editions.is_empty()).then_some(editions.as_slice());
    let m = data(analytics::jaccard_matrix::<f64>(&ds, subset).map_err(Into::into))?;
    let text = match a.format {
        Format::Csv => analytics::similarity_csv(&m),
        Format::Json => json_line(&m),
    };
    emit(&text, &a.out, stdout)
}

#[derive(Deserialize)]
struct TranslationRow {
    source: String,
    target: String,
    count: u64,
}

/// Counts per unordered pair; both directions are summed, self-pairs skipped.
fn read_translations(path: &Path) -> anyhow::Result<BTreeMap<EditionPair, u64>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut counts = BTreeMap::new();
    for (i, row) in reader.deserialize::<TranslationRow>().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), i + 1))?;
        let a = Edition::new(row.source.as_str()).with_context(|| format!("row {}", i + 1))?;
        let b = Edition::new(row.target.as_str()).with_context(|| format!("row {}", i + 1))?;
        if let Some(pair) = EditionPair::new(a, b) {
            *counts.entry(pair).or_insert(0) += row.count;
        }
    }
    Ok(counts)
}

fn correlate(a: &CorrelateArgs, stdout: &mut dyn Write) -> Result<Outputs, CliError> {
    let ds = load(&a.dataset)?;
    let r = data((|| -> anyhow::Result<_> {
        let counts = read_translations(&a.translations)?;
        Ok(analytics::translation_correlation(&ds, &counts)?)
    })())?;
    let text = match a.format {
        Format::Json => json_line(&r),
        Format::Csv => [
            ("rho", r.rho),
            ("n", r.n as f64),
            ("excluded_pair_share", r.excluded_pair_share),
            ("total_pairs", r.total_pairs as f64),
            ("ignored_entries", r.ignored_entries as f64),
        ]
        .iter()
        .enumerate()
        .map(|(i, (k, v))| {
            let csv = analytics::scalar_csv(k, *v);
            if i == 0 { csv } else { csv.lines().skip(1).map(|l| format!("{l}\n")).collect() }
        })
        .collect(),
    };
    emit(&text, &a.out, stdout)
}

fn write_instance_file(path: &Path, instances: &[WindowInstance]) -> anyhow::Result<()> {
    predict::write_instances(instances, create(path)?).with_context(|| format!("writing {}", path.display()))
}

fn split(a: &SplitArgs, globals: Globals) -> Result<Outputs, CliError> {
    let split = TemporalSplit {
        train_start: a.train_start,
        train_end: a.train_end,
        test_start: a.test_start,
    };
    if !(split.train_start < split.train_end && split.train_end <= split.test_start) {
        return Err(usage("need --train-start < --train-end <= --test-start"));
    }
    if a.window == 0 || a.timeout_days <= 0 {
        return Err(usage("--window and --timeout-days must be positive"));
    }
    let ds = load(&a.dataset)?;
    data((|| {
        let vocab = Vocabulary::from_dataset(&ds);
        let parts = predict::split_dataset(&ds, &split)?;
        let make = |cascades: &[&wikiprop_core::Cascade]| match a.task {
            Task::Binary => predict::make_binary_instances(
                cascades,
                &vocab,
                &BinaryTask {
                    window: a.window,
                    timeout: a.timeout_days * SECONDS_PER_DAY,
                    censoring: match a.censoring {
                        CensoringArg::Exclude => Censoring::Exclude,
                        CensoringArg::LabelNegative => Censoring::LabelNegative,
                    },
                },
                ds.cutoff(),
            ),
            Task::NextLanguage => predict::make_next_language_instances(cascades, &vocab, a.window),
        };
        let mut train_set = make(&parts.train)?;
        let mut test_set = make(&parts.test)?;
        // Train and test samples use the seed and its successor.
        if let Some(n) = a.sample_train {
            train_set = predict::sample_instances(&train_set, n, globals.seed)?;
        }
        if let Some(n) = a.sample_test {
            test_set = predict::sample_instances(&test_set, n, globals.seed.wrapping_add(1))?;
        }
        write_instance_file(&a.train_out, &train_set)?;
        write_instance_file(&a.test_out, &test_set)?;
        write_text(&a.vocab_out, &json_line(&vocab))?;
        Ok(vec![a.train_out.clone(), a.test_out.clone(), a.vocab_out.clone()])
    })())
}

fn read_instance_file(path: &Path) -> anyhow::Result<Vec<WindowInstance>> {
    predict::read_instances(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn read_vocab(path: &Path) -> anyhow::Result<Vocabulary> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn train_cmd(a: &TrainArgs, globals: Globals) -> Result<Outputs, CliError> {
    let instances = data(read_instance_file(&a.instances))?;
    let vocab = data(read_vocab(&a.vocab))?;
    let Some(first) = instances.first() else {
        return Err(CliError::Data(anyhow::anyhow!("{}: no instances", a.instances.display())));
    };
    let mut cfg = match a.task {
        Task::Binary => ModelConfig::binary(vocab.size()),
        Task::NextLanguage => ModelConfig::next_language(vocab.size()),
    };
    cfg.window = first.steps.len();
    cfg.seed = globals.seed;
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = a.hidden_dim {
        cfg.hidden_dim = v;
    }
    if let Some(v) = a.layers {
        cfg.layers = v;
    }
    if let Some(v) = a.validation_fraction {
        cfg.validation_fraction = v;
    }
    cfg.stop_at_validation_metric = a.stop_at;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let label_ok = |l: &Label| matches!((a.task, l), (Task::Binary, Label::Continue(_)) | (Task::NextLanguage, Label::Next(_)));
    if let Some(bad) = instances.iter().find(|i| !label_ok(&i.label)) {
        return Err(CliError::Data(anyhow::anyhow!(
            "instance for {} does not carry a {} label",
            bad.wikidata_id,
            a.task.to_possible_value().expect("named").get_name()
        )));
    }
    data((|| {
        let model = init_model::<f64>(&cfg)?;
        let outcome = train(model, &predict::to_examples(&instances))?;
        let mut out = create(&a.out)?;
        write_checkpoint(&outcome.model, &vocab.codes(), &mut out)?;
        out.flush()?;
        let mut outputs = vec![a.out.clone()];
        if let Some(h) = &a.history {
            write_text(h, &json_line(&outcome.history))?;
            outputs.push(h.clone());
        }
        Ok(outputs)
    })())
}

fn load_model(path: &Path) -> anyhow::Result<(Model, Vocabulary)> {
    let ckpt = read_checkpoint::<f64, _>(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let vocab = Vocabulary::from_codes(&ckpt.vocabulary)?;
    Ok((ckpt.model, vocab))
}

fn evaluate(a: &EvaluateArgs, stdout: &mut dyn Write) -> Result<Outputs, CliError> {
    if a.w_max == 0 {
        return Err(usage("--w-max must be at least 1"));
    }
    let (report, table) = data((|| -> anyhow::Result<_> {
        let (model, _) = load_model(&a.model)?;
        let instances = read_instance_file(&a.instances)?;
        let report = match model.head() {
            HeadKind::Binary => EvalReport::Binary(predict::evaluate_binary(&model, &instances)?),
            HeadKind::Multiclass => {
                EvalReport::NextLanguage(predict::evaluate_window_accuracy(&model, &instances, a.w_max)?)
            }
        };
        let table = report.text_table();
        Ok((report, table))
    })())?;
    data(write_text(&a.out, &json_line(&report)))?;
    let mut outputs = vec![a.out.clone()];
    outputs.extend(emit(&table, &a.table, stdout)?);
    Ok(outputs)
}

#[derive(Serialize)]
struct ContinuationPrediction {
    wikidata_id: wikiprop_core::ItemId,
    anchor_time: i64,
    probability: f64,
    decision: bool,
}

#[derive(Serialize)]
struct NextLanguagePrediction<'a> {
    wikidata_id: wikiprop_core::ItemId,
    anchor_time: i64,
    ranking: Vec<RankedLanguage<'a>>,
}

#[derive(Serialize)]
struct RankedLanguage<'a> {
    edition: &'a Edition,
    probability: f64,
}

fn predict_cmd(a: &PredictArgs) -> Result<Outputs, CliError> {
    if a.top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    data((|| {
        let (model, vocab) = load_model(&a.model)?;
        let instances = read_instance_file(&a.instances)?;
        let mut out = create(&a.out)?;
        for inst in &instances {
            let line = match model.head() {
                HeadKind::Binary => {
                    let (probability, decision) = predict::predict_continuation(&model, inst)?;
                    json_line(&ContinuationPrediction {
                        wikidata_id: inst.wikidata_id,
                        anchor_time: inst.anchor_time,
                        probability,
                        decision,
                    })
                }
                HeadKind::Multiclass => {
                    let ranked = predict::predict_next_language(&model, inst)?;
                    let mut top = Vec::new();
                    for &(index, probability) in ranked.iter().take(a.top) {
                        let Some(edition) = vocab.edition(index) else {
                            bail!("checkpoint vocabulary lacks index {index}");
                        };
                        top.push(RankedLanguage { edition, probability });
                    }
                    json_line(&NextLanguagePrediction {
                        wikidata_id: inst.wikidata_id,
                        anchor_time: inst.anchor_time,
                        ranking: top,
                    })
                }
            };
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(vec![a.out.clone()])
    })())
}

fn synth_cmd(a: &SynthArgs, globals: Globals) -> Result<Outputs, CliError> {
    let mut generator = match a.generator {
        GeneratorArg::CyclicOrder => Generator::cyclic_order(),
        GeneratorArg::ThresholdContinuation => Generator::threshold_continuation(),
        GeneratorArg::HeavyTail => Generator::heavy_tail(),
    };
    let misplaced = |flag: &str| usage(format!("--{flag} does not apply to the {} generator", generator_name(a.generator)));
    match &mut generator {
        Generator::CyclicOrder {
            cycle,
            min_length,
            max_length,
            mean_gap_days,
        } => {
            if !a.cycle.is_empty() {
                *cycle = Some(a.cycle.clone());
            }
            if let Some(v) = a.min_length {
                *min_length = v;
            }
            if a.max_length.is_some() {
                *max_length = a.max_length;
            }
            if let Some(v) = a.mean_gap_days {
                *mean_gap_days = v;
            }
            if a.threshold_days.is_some() || a.forced_continuations.is_some() || a.continue_probability.is_some() {
                return Err(misplaced("threshold-days/forced-continuations/continue-probability"));
            }
            if a.exponent.is_some() {
                return Err(misplaced("exponent"));
            }
        }
        Generator::ThresholdContinuation {
            threshold_days,
            forced_continuations,
            continue_probability,
            ..
        } => {
            if let Some(v) = a.threshold_days {
                *threshold_days = v;
            }
            if let Some(v) = a.forced_continuations {
                *forced_continuations = v;
            }
            if let Some(v) = a.continue_probability {
                *continue_probability = v;
            }
            if !a.cycle.is_empty() || a.min_length.is_some() || a.max_length.is_some() || a.mean_gap_days.is_some() {
                return Err(misplaced("cycle/min-length/max-length/mean-gap-days"));
            }
            if a.exponent.is_some() {
                return Err(misplaced("exponent"));
            }
        }
        Generator::HeavyTail { exponent, mean_gap_days } => {
            if let Some(v) = a.exponent {
                *exponent = v;
            }
            if let Some(v) = a.mean_gap_days {
                *mean_gap_days = v;
            }
            if !a.cycle.is_empty() || a.min_length.is_some() || a.max_length.is_some() {
                return Err(misplaced("cycle/min-length/max-length"));
            }
            if a.threshold_days.is_some() || a.forced_continuations.is_some() || a.continue_probability.is_some() {
                return Err(misplaced("threshold-days/forced-continuations/continue-probability"));
            }
        }
    }
    let mut cfg = SynthConfig::new(generator, a.editions, a.items, globals.seed);
    if let Some(s) = a.start_span_days {
        cfg.start_span_days = s;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    data((|| {
        let out = synth::generate(&cfg)?;
        let mut w = create(&a.out)?;
        for r in &out.records {
            w.write_all(r.to_json_line().as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        write_text(&a.metadata, &json_line(&out.metadata))?;
        Ok(vec![a.out.clone(), a.metadata.clone()])
    })())
}

fn generator_name(g: GeneratorArg) -> &'static str {
    match g {
        GeneratorArg::CyclicOrder => "cyclic-order",
        GeneratorArg::ThresholdContinuation => "threshold-continuation",
        GeneratorArg::HeavyTail => "heavy-tail",
    }
}

