//! Command-line front end. `run` maps argv to an exit status: 0 on success,
//! 1 on usage errors, 2 on runtime failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qreason_core::answer::{AnswerContext, AnswerModel, AnswerPredictor, RandomAnswerer};
use qreason_core::check::{check_reasoner, CheckConfig};
use qreason_core::data::{corpus_vocab, generate_synthetic_corpus, Example, Instance, PropertyPair, Prepared};
use qreason_core::eval::{emit_trace, module_eval, qa_accuracy, run_pipeline, TraceRecord};
use qreason_core::model::ReasonModel;
use qreason_core::train::{answer_contexts, train_answerer, train_reasoning, ContextSource};
use qreason_core::HeadKind;
use serde_json::json;

use crate::checkpoint::{load_answer, load_reason, save_answer, save_reason, PARAMS_FILE};
use crate::config::RunConfig;
use crate::dataset::{load_dataset, resolve_split, save_dataset, Record};
use crate::error::{io, Error};
use crate::jsonl::{render_trace, write_metric_log, write_traces};
use crate::manifest::RunManifest;
use crate::report::EvalReport;

pub const METRICS_FILE: &str = "metrics.jsonl";

#[derive(Parser, Debug)]
#[command(name = "qreason", version, about = "Modular qualitative reasoning: data, training, evaluation, traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic train/dev/test corpus.
    GenData(GenData),
    /// Train the reasoning model.
    TrainReason(TrainReason),
    /// Train the answer predictor.
    TrainAnswer(TrainAnswer),
    /// Module scores and end-to-end accuracy on a split.
    Eval(Eval),
    /// Emit trace records for a split or selected ids.
    Trace(Trace),
    /// Answer a single question.
    Infer(Infer),
    /// Validate model gradients against finite differences.
    Gradcheck(Gradcheck),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct GenData {
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_dev: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// JSON array of {cause, effect, entity} property pairs.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainReason {
    /// Directory with train.jsonl and dev.jsonl.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epochs: Option<usize>,
    /// Heads whose loss terms are switched off.
    #[arg(long, value_delimiter = ',')]
    ablate: Vec<HeadKind>,
    /// Span threshold; disables tuning on dev.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ContextArg {
    Synthetic,
    Knowledge,
}

#[derive(Args, Debug)]
struct TrainAnswer {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epochs: Option<usize>,
    /// Answer from deduction sentences or from the raw knowledge.
    #[arg(long, value_enum)]
    context: Option<ContextArg>,
}

#[derive(Args, Debug)]
struct Eval {
    #[arg(long)]
    reason: PathBuf,
    /// Answer checkpoint; omit together with --random for the coin-flip baseline.
    #[arg(long, required_unless_present = "random")]
    answer: Option<PathBuf>,
    #[arg(long, conflicts_with = "answer")]
    random: bool,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Directory for report.txt, report.json and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Trace {
    #[arg(long)]
    reason: PathBuf,
    #[arg(long)]
    answer: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Restrict to these ids.
    #[arg(long)]
    id: Vec<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Directory for traces.jsonl and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Infer {
    #[arg(long)]
    reason: PathBuf,
    #[arg(long)]
    answer: PathBuf,
    /// JSON file holding one dataset record.
    #[arg(long, conflicts_with_all = ["knowledge", "question"])]
    file: Option<PathBuf>,
    #[arg(long, requires_all = ["question", "option_a", "option_b"])]
    knowledge: Option<String>,
    #[arg(long)]
    question: Option<String>,
    #[arg(long)]
    option_a: Option<String>,
    #[arg(long)]
    option_b: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Gradcheck {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<qreason_core::Error> for Failure {
    fn from(e: qreason_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => gen_data(a, out),
        Command::TrainReason(a) => train_reason(a, out),
        Command::TrainAnswer(a) => train_answer(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Trace(a) => trace(a, out),
        Command::Infer(a) => infer(a, out),
        Command::Gradcheck(a) => gradcheck(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::resolve(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("configs always serialize")
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn split_examples(path: &Path) -> Result<Vec<Example>, Failure> {
    Ok(load_dataset(&resolve_split(path))?.examples())
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Runtime(Error::Other(format!("writing output: {e}"))))
}

fn gen_data(a: GenData, out: &mut dyn Write) -> Outcome {
    let t0 = Instant::now();
    let mut cfg = config(&a.common)?;
    if let Some(n) = a.n_train {
        cfg.data.n_train = n;
    }
    if let Some(n) = a.n_dev {
        cfg.data.n_dev = n;
    }
    if let Some(n) = a.n_test {
        cfg.data.n_test = n;
    }
    if let Some(p) = &a.lexicon {
        let text = fs::read_to_string(p).map_err(io(p))?;
        let pairs: Vec<PropertyPair> =
            serde_json::from_str(&text).map_err(|e| Error::Other(format!("{}: {e}", p.display())))?;
        cfg.data.lexicon = Some(pairs);
    }
    let corpus = generate_synthetic_corpus(&cfg.data)?;
    create_dir(&a.out)?;
    let mut manifest = RunManifest::new("gen-data", config_json(&cfg), cfg.data.seed);
    if let Some(p) = &a.lexicon {
        manifest.inputs.push(path_str(p));
    }
    for (name, split) in [("train", &corpus.train), ("dev", &corpus.dev), ("test", &corpus.test)] {
        let path = a.out.join(format!("{name}.jsonl"));
        let records: Vec<Record> = split.iter().cloned().map(Record::from).collect();
        save_dataset(&path, &records)?;
        manifest.outputs.push(path_str(&path));
        emit(out, &format!("{name}: {} instances -> {}\n", split.len(), path.display()))?;
    }
    manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
    manifest.write(&a.out)?;
    Ok(())
}

fn train_reason(a: TrainReason, out: &mut dyn Write) -> Outcome {
    let t0 = Instant::now();
    let mut cfg = config(&a.common)?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if !a.ablate.is_empty() {
        cfg.train.ablate = a.ablate.clone();
    }
    if let Some(t) = a.threshold {
        cfg.reason.tau = t;
        cfg.train.tune_tau = false;
    }
    let train_path = a.data.join("train.jsonl");
    let dev_path = a.data.join("dev.jsonl");
    let train = split_examples(&train_path)?;
    let dev = split_examples(&dev_path)?;
    let vocab = corpus_vocab(&train, cfg.min_count)?;
    let model = ReasonModel::init(cfg.reason, vocab, cfg.train.seed)?;
    let t1 = Instant::now();
    let trained = train_reasoning(model, &train, &dev, &cfg.train)?;
    let train_secs = t1.elapsed().as_secs_f64();
    save_reason(&a.out, &trained.model)?;
    write_metric_log(&a.out.join(METRICS_FILE), &trained.log)?;
    cfg.reason = trained.model.config;
    let mut manifest = RunManifest::new("train-reason", config_json(&cfg), cfg.train.seed);
    manifest.inputs = vec![path_str(&train_path), path_str(&dev_path)];
    manifest.outputs = vec![path_str(&a.out.join(PARAMS_FILE)), path_str(&a.out.join(METRICS_FILE))];
    manifest.timings.insert("train".into(), train_secs);
    manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
    manifest.write(&a.out)?;
    emit(
        out,
        &format!(
            "best epoch {} of {}; threshold {:.2}; saved to {}\n",
            trained.best_epoch,
            trained.log.len(),
            trained.model.config.tau,
            a.out.display()
        ),
    )
}

fn train_answer(a: TrainAnswer, out: &mut dyn Write) -> Outcome {
    let t0 = Instant::now();
    let mut cfg = config(&a.common)?;
    if let Some(e) = a.epochs {
        cfg.answer_train.epochs = e;
    }
    match a.context {
        Some(ContextArg::Synthetic) => cfg.answer.context = AnswerContext::Synthetic,
        Some(ContextArg::Knowledge) => cfg.answer.context = AnswerContext::Knowledge,
        None => {}
    }
    let train_path = a.data.join("train.jsonl");
    let dev_path = a.data.join("dev.jsonl");
    let train = split_examples(&train_path)?;
    let dev = split_examples(&dev_path)?;
    let vocab = corpus_vocab(&train, cfg.min_count)?;
    let source = match cfg.answer.context {
        AnswerContext::Synthetic => ContextSource::Gold,
        AnswerContext::Knowledge => ContextSource::Knowledge,
    };
    let pairs = |examples: &[Example]| -> Vec<(Instance, String)> {
        let items: Vec<Prepared> = examples
            .iter()
            .map(|e| Prepared::new(e, &vocab, cfg.reason.lengths))
            .collect();
        let contexts = answer_contexts(&items, &source);
        items
            .iter()
            .zip(contexts)
            .filter_map(|(it, c)| c.map(|c| (it.example.instance.clone(), c)))
            .collect()
    };
    let (train_pairs, dev_pairs) = (pairs(&train), pairs(&dev));
    let model = AnswerModel::init(cfg.answer, vocab.clone(), cfg.answer_train.seed)?;
    let t1 = Instant::now();
    let trained = train_answerer(model, &train_pairs, &dev_pairs, &cfg.answer_train)?;
    let train_secs = t1.elapsed().as_secs_f64();
    save_answer(&a.out, &trained.model)?;
    write_metric_log(&a.out.join(METRICS_FILE), &trained.log)?;
    let mut manifest = RunManifest::new("train-answer", config_json(&cfg), cfg.answer_train.seed);
    manifest.inputs = vec![path_str(&train_path), path_str(&dev_path)];
    manifest.outputs = vec![path_str(&a.out.join(PARAMS_FILE)), path_str(&a.out.join(METRICS_FILE))];
    manifest.timings.insert("train".into(), train_secs);
    manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
    manifest.write(&a.out)?;
    emit(
        out,
        &format!(
            "best epoch {} of {}; {} training pairs; saved to {}\n",
            trained.best_epoch,
            trained.log.len(),
            train_pairs.len(),
            a.out.display()
        ),
    )
}

fn check_tau(tau: Option<f64>) -> Result<(), Failure> {
    match tau {
        Some(t) if !(t > 0.0 && t < 1.0) => Err(Failure::Usage(format!("--threshold must lie in (0, 1), got {t}"))),
        _ => Ok(()),
    }
}

fn eval(a: Eval, out: &mut dyn Write) -> Outcome {
    check_tau(a.threshold)?;
    let t0 = Instant::now();
    let reason = load_reason(&a.reason)?;
    let tau = a.threshold.unwrap_or(reason.config.tau);
    let data = resolve_split(&a.data);
    let items: Vec<Prepared> = split_examples(&data)?.iter().map(|e| reason.prepare(e)).collect();
    let modules = module_eval(&reason, &items, tau)?;
    let qa = if a.random {
        qa_accuracy(&reason, &RandomAnswerer { seed: a.seed }, &items, tau)
    } else {
        let path = a.answer.as_ref().expect("clap enforces --answer or --random");
        qa_accuracy(&reason, &load_answer(path)?, &items, tau)
    };
    let report = EvalReport {
        tau,
        modules,
        qa: Some(qa),
    };
    let text = report.to_text();
    let line = report.accuracy_line().unwrap_or_default();
    emit(out, &format!("{text}{line}\n"))?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        let (txt, js) = (dir.join("report.txt"), dir.join("report.json"));
        fs::write(&txt, format!("{text}{line}\n")).map_err(io(&txt))?;
        fs::write(&js, report.to_json() + "\n").map_err(io(&js))?;
        let cfg = json!({ "threshold": tau, "random": a.random, "seed": a.seed });
        let mut manifest = RunManifest::new("eval", cfg, a.seed);
        manifest.inputs.push(path_str(&a.reason));
        if let Some(p) = &a.answer {
            manifest.inputs.push(path_str(p));
        }
        manifest.inputs.push(path_str(&data));
        manifest.outputs = vec![path_str(&txt), path_str(&js)];
        manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
        manifest.write(dir)?;
    }
    Ok(())
}

fn trace_one(
    item: &Prepared,
    reason: &ReasonModel,
    answer: Option<&AnswerModel>,
    tau: f64,
) -> Result<TraceRecord, Failure> {
    match answer {
        Some(ans) if ans.context() == AnswerContext::Synthetic => {
            let (trace, pred) = run_pipeline(item, reason, ans, tau)?;
            let trace = trace.expect("synthetic context always yields a trace");
            Ok(emit_trace(item, &trace, Some(&pred)))
        }
        _ => {
            let trace = qreason_core::deduction::run_chain(item, reason, tau, None)?;
            Ok(emit_trace(item, &trace, None))
        }
    }
}

fn trace(a: Trace, out: &mut dyn Write) -> Outcome {
    check_tau(a.threshold)?;
    let t0 = Instant::now();
    let reason = load_reason(&a.reason)?;
    let answer = a.answer.as_deref().map(load_answer).transpose()?;
    let tau = a.threshold.unwrap_or(reason.config.tau);
    let data = resolve_split(&a.data);
    let mut examples = split_examples(&data)?;
    if !a.id.is_empty() {
        if let Some(missing) = a.id.iter().find(|id| !examples.iter().any(|e| &e.instance.id == *id)) {
            return Err(Failure::Runtime(Error::Other(format!("id `{missing}` not found in {}", data.display()))));
        }
        examples.retain(|e| a.id.contains(&e.instance.id));
    }
    let mut records = Vec::with_capacity(examples.len());
    for e in &examples {
        let item = reason.prepare(e);
        let rec = trace_one(&item, &reason, answer.as_ref(), tau)?;
        emit(out, &(render_trace(&rec) + "\n"))?;
        records.push(rec);
    }
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        let path = dir.join("traces.jsonl");
        write_traces(&path, &records)?;
        let mut manifest = RunManifest::new("trace", json!({ "threshold": tau, "ids": a.id }), 0);
        manifest.inputs.push(path_str(&a.reason));
        if let Some(p) = &a.answer {
            manifest.inputs.push(path_str(p));
        }
        manifest.inputs.push(path_str(&data));
        manifest.outputs.push(path_str(&path));
        manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
        manifest.write(dir)?;
    }
    Ok(())
}

fn infer(a: Infer, out: &mut dyn Write) -> Outcome {
    check_tau(a.threshold)?;
    let t0 = Instant::now();
    let (instance, labelled) = match (&a.file, &a.knowledge) {
        (Some(path), _) => {
            let ds = load_dataset(path)?;
            let rec = ds.records.into_iter().next();
            let rec = rec.ok_or_else(|| Failure::Runtime(Error::Other(format!("{}: no record", path.display()))))?;
            (rec.example.instance, true)
        }
        (None, Some(k)) => (
            Instance {
                id: "cli".into(),
                knowledge: k.clone(),
                question: a.question.clone().unwrap_or_default(),
                options: [a.option_a.clone().unwrap_or_default(), a.option_b.clone().unwrap_or_default()],
                answer: 0,
                annotation: None,
            },
            false,
        ),
        (None, None) => return Err(Failure::Usage("give --file or --knowledge/--question/--option-a/--option-b".into())),
    };
    let reason = load_reason(&a.reason)?;
    let answer = load_answer(&a.answer)?;
    let tau = a.threshold.unwrap_or(reason.config.tau);
    let example = Example {
        instance,
        labels: Default::default(),
    };
    let item = reason.prepare(&example);
    let mut rec = trace_one(&item, &reason, Some(&answer), tau)?;
    if !labelled {
        rec.correct = None;
    }
    let line = render_trace(&rec) + "\n";
    emit(out, &line)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        let path = dir.join("trace.jsonl");
        fs::write(&path, &line).map_err(io(&path))?;
        let mut manifest = RunManifest::new("infer", json!({ "threshold": tau, "instance": example.instance }), 0);
        manifest.inputs = vec![path_str(&a.reason), path_str(&a.answer)];
        if let Some(f) = &a.file {
            manifest.inputs.push(path_str(f));
        }
        manifest.outputs.push(path_str(&path));
        manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
        manifest.write(dir)?;
    }
    Ok(())
}

fn gradcheck(a: Gradcheck, out: &mut dyn Write) -> Outcome {
    let t0 = Instant::now();
    let cfg = CheckConfig {
        n: a.n,
        m: a.m,
        d_model: a.d,
        eps: a.eps,
        seed: a.seed,
        ..CheckConfig::default()
    };
    let report = check_reasoner(&cfg)?;
    let text = format!(
        "checked {} values; max relative error {:.3e} (worst {:?})\nscoring layers: {} values; max relative error {:.3e}\n",
        report.full.checked,
        report.full.max_rel_err,
        report.full.worst,
        report.linear.checked,
        report.linear.max_rel_err
    );
    emit(out, &text)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        let path = dir.join("gradcheck.txt");
        fs::write(&path, &text).map_err(io(&path))?;
        let mut manifest = RunManifest::new("gradcheck", serde_json::to_value(cfg).unwrap_or_default(), a.seed);
        manifest.outputs.push(path_str(&path));
        manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
        manifest.write(dir)?;
    }
    if report.full.max_rel_err < 1e-3 {
        Ok(())
    } else {
        Err(Failure::Runtime(Error::Other(format!(
            "gradient check failed: {:.3e} >= 1e-3",
            report.full.max_rel_err
        ))))
    }
}
