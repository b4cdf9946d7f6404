//! `triage` subcommands. Every file written is echoed as `wrote <path>`.

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use triage_core::app::{EmailText, PipelineConfig, Resources, TriageEngine};
use triage_core::augment::{rebalance, TokenSample};
use triage_core::corpus::{clean_all, filter_incoming, ingest, CorpusFormat};
use triage_core::eval::compare::{compare_runs, median, Comparison};
use triage_core::eval::split::split_labeled;
use triage_core::eval::synth::{generate_corpus, SynthSpec};
use triage_core::jsonl;
use triage_core::labeling::{build_labeled_corpus, LabeledEmail};
use triage_core::models::mlp::TrainConfig;
use triage_core::models::Classifier;
use triage_core::pipeline::{
    evaluate, prepare_nn_samples, token_samples, train_nn_classifier, train_tree_classifier, Evaluation,
};
use triage_core::rng::{derive_seed, stage};
use triage_core::TriageError;

use crate::server::{self, DEFAULT_BODY_LIMIT};

// stdout writes that tolerate a closed pipe (e.g. `triage eval | head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! sayln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Helpdesk email triage: label, train, evaluate, reply")]
pub struct Cli {
    /// Pipeline config (TOML). Falls back to $TRIAGE_CONFIG, then built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Top-level seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus plus its ground-truth labels.
    Synth(SynthArgs),
    /// Keyword-label a raw corpus (incoming emails only).
    Label(LabelArgs),
    /// Stratified train/test split of a labeled corpus.
    Split(SplitArgs),
    /// Preprocess a training split and rebalance it with synonym variants.
    Augment(AugmentArgs),
    /// Train the network or the keyword tree.
    Train(TrainArgs),
    /// Evaluate a model on a labeled test split.
    Eval(EvalArgs),
    /// Network vs network+augmentation vs tree on shared splits.
    Compare(CompareArgs),
    /// Classify one email file.
    Classify(EmailArgs),
    /// Compose the auto-reply for one email file.
    Reply(EmailArgs),
    /// Serve /classify, /reply and /health over HTTP.
    Serve(ServeArgs),
    /// Macro-F1 on the test split for a range of hidden-layer sizes.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "corpus.jsonl")]
    pub out: PathBuf,
    /// Labeled copy of the corpus using the generated categories.
    #[arg(long, default_value = "truth.jsonl")]
    pub truth: PathBuf,
    /// Emails per category, in rank order.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<usize>>,
    #[arg(long)]
    pub injection: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub signal: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Raw corpus (.jsonl or .csv). Defaults to the config's corpus.
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<CorpusFormat>,
    #[arg(long, default_value = "labeled.jsonl")]
    pub out: PathBuf,
    #[arg(long, default_value = "label_counts.csv")]
    pub counts: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(default_value = "labeled.jsonl")]
    pub input: PathBuf,
    #[arg(long, default_value = "train.jsonl")]
    pub train: PathBuf,
    #[arg(long, default_value = "test.jsonl")]
    pub test: PathBuf,
    /// Train fraction; overrides the config.
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(default_value = "train.jsonl")]
    pub input: PathBuf,
    #[arg(long, default_value = "augmented.jsonl")]
    pub out: PathBuf,
    /// Samples per category; overrides the config.
    #[arg(long)]
    pub target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Nn,
    Tree,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    /// Labeled training split. For `nn` it is augmented unless --no-augment.
    #[arg(default_value = "train.jsonl", conflicts_with = "samples")]
    pub input: PathBuf,
    /// Preprocessed samples from `augment`, used as-is (nn only).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Also write the vocabulary, one term per line (nn only).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[arg(default_value = "test.jsonl")]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// File name prefix for the report and matrix files.
    #[arg(long, default_value = "eval")]
    pub prefix: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Labeled corpus. Without it each run generates the default synthetic
    /// corpus and compares against its ground-truth labels.
    pub input: Option<PathBuf>,
    /// Runs with seeds seed, seed+1, ...; medians are reported.
    #[arg(long, default_value_t = 5)]
    pub runs: u64,
    #[arg(long, default_value = "compare")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmailArgs {
    /// JSON {"subject", "body"} or plain text taken as the body.
    pub file: PathBuf,
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Largest accepted request body in bytes.
    #[arg(long, default_value_t = DEFAULT_BODY_LIMIT)]
    pub max_body: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(default_value = "labeled.jsonl")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80")]
    pub hidden: Vec<usize>,
    #[arg(long)]
    pub no_augment: bool,
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    s.parse().map_err(|e: TriageError| e.to_string())
}

/// A one-line diagnostic.
#[derive(Debug)]
pub struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<TriageError> for Failure {
    fn from(e: TriageError) -> Self {
        Failure(e.to_string())
    }
}

fn in_file(path: &Path) -> impl Fn(TriageError) -> Failure + '_ {
    move |e| Failure(format!("{}: {e}", path.display()))
}

type CliResult<T = ()> = Result<T, Failure>;

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    let mut config = PipelineConfig::resolve(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let resources = config.load_resources()?;
    match cli.command {
        Command::Synth(a) => synth(&config, &resources, a),
        Command::Label(a) => label(&config, &resources, a),
        Command::Split(a) => split(&config, a),
        Command::Augment(a) => augment(&config, &resources, a),
        Command::Train(a) => train(&config, &resources, a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(&config, &resources, a),
        Command::Classify(a) => {
            let engine = engine(&config, &resources, &a.model)?;
            let email = read_email(&a.file)?;
            print_json(&engine.classify_email(&email)?)
        }
        Command::Reply(a) => {
            let engine = engine(&config, &resources, &a.model)?;
            let email = read_email(&a.file)?;
            print_json(&engine.reply_email(&email)?)
        }
        Command::Serve(a) => serve(config, resources, a),
        Command::Sweep(a) => sweep(&config, &resources, a),
    }
}

fn wrote(path: &Path) {
    sayln!("wrote {}", path.display());
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    sayln!("{}", serde_json::to_string(value).map_err(TriageError::from)?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    wrote(path);
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> CliResult {
    jsonl::write(path, items).map_err(in_file(path))?;
    wrote(path);
    Ok(())
}

fn read_labeled(path: &Path) -> CliResult<Vec<LabeledEmail>> {
    jsonl::read(path).map_err(in_file(path))
}

fn read_email(path: &Path) -> CliResult<EmailText> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok(EmailText::parse(&text))
}

fn load_model(path: &Path) -> CliResult<Classifier> {
    Classifier::load(path).map_err(in_file(path))
}

fn engine(config: &PipelineConfig, resources: &Resources, model: &Path) -> CliResult<TriageEngine> {
    Ok(TriageEngine::new(load_model(model)?, resources.templates.clone(), config.policy())?)
}

fn synth(config: &PipelineConfig, resources: &Resources, a: SynthArgs) -> CliResult {
    let seed = config.synth_seed();
    let mut spec = match &a.counts {
        Some(counts) => SynthSpec::for_categories(&resources.categories, counts, seed)?,
        None if resources.categories.len() == 5 => {
            SynthSpec::for_categories(&resources.categories, &[20, 12, 90, 48, 45], seed)?
        }
        None => SynthSpec::for_categories(&resources.categories, &vec![40; resources.categories.len()], seed)?,
    };
    if let Some(p) = a.injection {
        spec.injection_prob = p;
    }
    if let Some(p) = a.noise {
        spec.noise_prob = p;
    }
    if let Some(p) = a.signal {
        spec.signal_prob = p;
    }
    let corpus = generate_corpus(&spec)?;
    write_jsonl(&a.out, &corpus.emails)?;
    write_jsonl(&a.truth, &corpus.ground_truth()?)?;
    Ok(())
}

fn label(config: &PipelineConfig, resources: &Resources, a: LabelArgs) -> CliResult {
    let input = a
        .input
        .or_else(|| config.corpus.clone())
        .ok_or_else(|| Failure("no corpus given and none set in the config".into()))?;
    let format = a.format.unwrap_or_else(|| CorpusFormat::from_path(&input));
    let raw = ingest(&input, format).map_err(in_file(&input))?;
    let incoming = filter_incoming(&raw);
    let (clean, rejected) = clean_all(&incoming);
    let labeled = build_labeled_corpus(&clean, &resources.categories)?;
    write_jsonl(&a.out, &labeled.emails)?;
    let mut counts = String::from("category,count\n");
    for (name, n) in &labeled.counts {
        counts.push_str(&format!("{name},{n}\n"));
        sayln!("{name:<14} {n}");
    }
    sayln!("{:<14} {}", "(unmatched)", labeled.unmatched);
    if !rejected.is_empty() {
        sayln!("{:<14} {}", "(empty)", rejected.len());
    }
    write_text(&a.counts, &counts)
}

fn split(config: &PipelineConfig, a: SplitArgs) -> CliResult {
    let data = read_labeled(&a.input)?;
    let ratio = a.ratio.unwrap_or(config.train_ratio);
    let (train, test) = split_labeled(&data, ratio, config.split_seed())?;
    sayln!("train {} / test {}", train.len(), test.len());
    write_jsonl(&a.train, &train)?;
    write_jsonl(&a.test, &test)
}

fn augment(config: &PipelineConfig, resources: &Resources, a: AugmentArgs) -> CliResult {
    let train = read_labeled(&a.input)?;
    let mut aug = config.augment_config();
    if let Some(t) = a.target {
        aug.target_per_class = t;
    }
    let samples = rebalance(&token_samples(&train, &resources.text), &resources.categories, &aug, &resources.lexicon)?;
    sayln!("{} -> {} samples", train.len(), samples.len());
    write_jsonl(&a.out, &samples)
}

fn train(config: &PipelineConfig, resources: &Resources, a: TrainArgs) -> CliResult {
    let train_cfg = config.train_config();
    let model = match a.model {
        ModelChoice::Nn => {
            let samples: Vec<TokenSample> = match &a.samples {
                Some(path) => jsonl::read(path).map_err(in_file(path))?,
                None => {
                    let train = read_labeled(&a.input)?;
                    let aug = (!a.no_augment).then(|| config.augment_config());
                    prepare_nn_samples(&train, &resources.categories, &resources.text, &resources.lexicon, aug.as_ref())?
                }
            };
            let m = train_nn_classifier(&samples, &resources.categories, &resources.text, &train_cfg, config.scale)?;
            if let Some(last) = m.history.last() {
                sayln!(
                    "trained on {} samples, {} terms: epoch {} loss {:.4} accuracy {:.4}",
                    samples.len(),
                    m.vocab.len(),
                    last.epoch,
                    last.loss,
                    last.accuracy
                );
            }
            if let Some(path) = &a.vocab {
                write_text(path, &m.vocab.to_text())?;
            }
            Classifier::Mlp(m)
        }
        ModelChoice::Tree => {
            if a.samples.is_some() {
                return Err(Failure("--samples applies to --model nn only".into()));
            }
            let train = read_labeled(&a.input)?;
            let t = train_tree_classifier(&train, &resources.categories, config.tree_max_depth)?;
            sayln!(
                "trained on {} emails: depth {} leaves {}",
                train.len(),
                t.tree.depth(),
                t.tree.leaves()
            );
            Classifier::Tree(t)
        }
    };
    model.save(&a.out).map_err(in_file(&a.out))?;
    wrote(&a.out);
    Ok(())
}

fn write_evaluation(dir: &Path, prefix: &str, ev: &Evaluation) -> CliResult {
    write_text(&dir.join(format!("{prefix}-report.txt")), &ev.report.to_text())?;
    write_text(&dir.join(format!("{prefix}-report.csv")), &ev.report.to_csv())?;
    write_text(&dir.join(format!("{prefix}-confusion.csv")), &ev.confusion.to_csv())?;
    write_text(&dir.join(format!("{prefix}-confusion.txt")), &ev.confusion.to_ascii())
}

fn eval(a: EvalArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let test = read_labeled(&a.input)?;
    let ev = evaluate(&model, &test)?;
    say!("{}\n{}", ev.report.to_text(), ev.confusion.to_ascii());
    write_evaluation(&a.out_dir, &a.prefix, &ev)
}

fn compare(config: &PipelineConfig, resources: &Resources, a: CompareArgs) -> CliResult {
    if a.runs == 0 {
        return Err(Failure("--runs must be at least 1".into()));
    }
    let given = a.input.as_deref().map(read_labeled).transpose()?;
    let mut results: Vec<Comparison> = Vec::new();
    let mut text = String::new();
    for i in 0..a.runs {
        let mut run_cfg = config.clone();
        run_cfg.seed = config.seed.wrapping_add(i);
        let corpus = match &given {
            Some(c) => c.clone(),
            None => {
                let spec = SynthSpec::helpdesk(derive_seed(run_cfg.seed, stage::SYNTH));
                generate_corpus(&spec)?.ground_truth()?
            }
        };
        let cmp = compare_runs(&corpus, &resources.categories, &resources.text, &resources.lexicon, &run_cfg.compare_config())?;
        let header = format!("run {} (seed {}): train {} / test {}\n", i + 1, run_cfg.seed, cmp.train_size, cmp.test_size);
        say!("{header}{}", cmp.summary());
        text.push_str(&header);
        text.push_str(&cmp.summary());
        text.push('\n');
        for (name, ev) in cmp.runs() {
            let prefix = format!("run{}-{}", i + 1, name.replace('+', "-"));
            write_evaluation(&a.out_dir, &prefix, ev)?;
        }
        results.push(cmp);
    }
    let med = |f: &dyn Fn(&Comparison) -> f64| median(&results.iter().map(f).collect::<Vec<_>>()).unwrap();
    let medians = format!(
        "median over {} run(s)\n{:<8} {:>9} {:>9}\n{:<8} {:>9.4} {:>9.4}\n{:<8} {:>9.4} {:>9.4}\n{:<8} {:>9.4} {:>9.4}\n",
        results.len(),
        "model",
        "accuracy",
        "macro-f1",
        "nn",
        med(&|c| c.nn.report.accuracy),
        med(&|c| c.nn.report.macro_f1),
        "nn+aug",
        med(&|c| c.nn_augmented.report.accuracy),
        med(&|c| c.nn_augmented.report.macro_f1),
        "tree",
        med(&|c| c.tree.report.accuracy),
        med(&|c| c.tree.report.macro_f1),
    );
    say!("{medians}");
    text.push_str(&medians);
    write_text(&a.out_dir.join("comparison.txt"), &text)?;
    let json = serde_json::to_string_pretty(&results).map_err(TriageError::from)?;
    write_text(&a.out_dir.join("comparison.json"), &json)
}

fn serve(config: PipelineConfig, resources: Resources, a: ServeArgs) -> CliResult {
    let policy = config.policy();
    let templates = resources.templates;
    let model_path = a.model.clone();
    let load = move || Classifier::load(&model_path).and_then(|m| TriageEngine::new(m, templates, policy));
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure(format!("runtime: {e}")))?;
    rt.block_on(server::serve(a.bind, a.max_body, load))
        .map_err(|e| Failure(format!("{}: {e}", a.bind)))
}

fn sweep(config: &PipelineConfig, resources: &Resources, a: SweepArgs) -> CliResult {
    let data = read_labeled(&a.input)?;
    let (train, test) = split_labeled(&data, config.train_ratio, config.split_seed())?;
    let aug = (!a.no_augment).then(|| config.augment_config());
    let samples = prepare_nn_samples(&train, &resources.categories, &resources.text, &resources.lexicon, aug.as_ref())?;
    sayln!("{:>6} {:>9} {:>9}", "hidden", "accuracy", "macro-f1");
    for &h in &a.hidden {
        let cfg = TrainConfig {
            hidden_units: h,
            ..config.train_config()
        };
        let m = train_nn_classifier(&samples, &resources.categories, &resources.text, &cfg, config.scale)?;
        let ev = evaluate(&Classifier::Mlp(m), &test)?;
        sayln!("{:>6} {:>9.4} {:>9.4}", h, ev.report.accuracy, ev.report.macro_f1);
    }
    Ok(())
}
