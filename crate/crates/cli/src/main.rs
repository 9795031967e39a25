//! `polarity`: train, evaluate and apply two-stage opinion classifiers, and
//! summarize their output as mood statistics.

mod manifest;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polarity_core::features::{Metric, NgramMode, RuleLexicons, RuleMode};
use polarity_core::io::write_atomic;
use polarity_core::pipeline::{run_grid, GridTable, RuleScope};
use polarity_core::preprocess::StopList;
use polarity_core::stats::{self, ClassifiedRecord, Grouping, ReportFormat};
use polarity_core::synthetic::{self, SyntheticSpec};
use polarity_core::{
    cross_validate, load_corpus, train_two_stage, ClassifierKind, Corpus, Label, PipelineConfig,
    Post, Resources, TwoStageModel,
};

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "polarity",
    version,
    about = "Two-stage opinion mining for short posts"
)]
struct Cli {
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on every labeled post of a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the model JSON.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        lexicons: LexiconArgs,
    },
    /// Cross-validate one configuration or a named grid.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// table1 .. table4
        #[arg(long)]
        grid: Option<GridTable>,
        /// Report JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        lexicons: LexiconArgs,
    },
    /// Label posts with a trained model, one JSON record per line.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "text", required_unless_present = "text")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        text: Option<String>,
        /// Output JSONL; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mood per topic or month from classifier output.
    Stats {
        /// JSONL written by `classify`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "topic")]
        by: By,
        /// With `--by month`, keep years apart (`YYYY-MM`).
        #[arg(long)]
        by_year_month: bool,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus and matching word lists.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        posts_per_class: usize,
        #[arg(long, default_value_t = 2014)]
        seed: u64,
        /// Also write stopwords.txt, negatory.txt and emphasizers.txt here.
        #[arg(long)]
        lexicon_dir: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum By {
    Topic,
    Month,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// presence, count, frequency or ifrequency
    #[arg(long, default_value = "ifrequency")]
    metric: Metric,
    /// svm or nb
    #[arg(long, default_value = "svm")]
    classifier: ClassifierKind,
    /// unigrams, bigrams or both
    #[arg(long, default_value = "unigrams")]
    ngrams: NgramMode,
    /// Active rule lexicons: negation, emphasis or both
    #[arg(long, default_value = "both")]
    rules: RuleScope,
    /// off, tag or signed-count
    #[arg(long, default_value = "off")]
    rule_mode: RuleMode,
    #[arg(long)]
    stem: bool,
    #[arg(long, default_value_t = 5)]
    min_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SVM regularization strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// SVM passes over the training data.
    #[arg(long)]
    epochs: Option<usize>,
    /// Naive Bayes additive smoothing.
    #[arg(long)]
    smoothing: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct LexiconArgs {
    /// Stop-word list, one word per line; enables stop-word removal.
    #[arg(long, value_name = "FILE")]
    stop_words: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    negatory: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    emphasizers: Option<PathBuf>,
}

impl ConfigArgs {
    fn config(&self, stop_words: bool) -> PipelineConfig {
        let base = PipelineConfig::default();
        PipelineConfig {
            metric: self.metric,
            classifier: self.classifier,
            ngram: self.ngrams,
            rule_mode: self.rule_mode,
            rule_scope: self.rules,
            stop_words,
            stemming: self.stem,
            min_count: self.min_count,
            nb_smoothing: self.smoothing.unwrap_or(base.nb_smoothing),
            svm_lambda: self.lambda.unwrap_or(base.svm_lambda),
            svm_epochs: self.epochs.unwrap_or(base.svm_epochs),
            seed: self.seed,
            ..base
        }
    }
}

impl LexiconArgs {
    fn resources(&self) -> Result<Resources> {
        let stop_list = self
            .stop_words
            .as_deref()
            .map(|p| StopList::load(p).with_context(|| format!("cannot read {}", p.display())))
            .transpose()?;
        let rules = if self.negatory.is_some() || self.emphasizers.is_some() {
            Some(RuleLexicons::load(
                self.negatory.as_deref(),
                self.emphasizers.as_deref(),
            )?)
        } else {
            None
        };
        Ok(Resources { stop_list, rules })
    }

    fn record(&self, manifest: &mut RunManifest) {
        manifest
            .lexicon("stop_words", self.stop_words.as_deref())
            .lexicon("negatory", self.negatory.as_deref())
            .lexicon("emphasizers", self.emphasizers.as_deref());
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("cannot load corpus {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, |w| w.write_all(bytes))
        .with_context(|| format!("cannot write {}", path.display()))
}

fn train(
    corpus: &Path,
    model_path: &Path,
    config: &ConfigArgs,
    lexicons: &LexiconArgs,
) -> Result<()> {
    let corpus_data = read_corpus(corpus)?;
    let config = config.config(lexicons.stop_words.is_some());
    let model = train_two_stage(&corpus_data, &config, &lexicons.resources()?)?;
    let mut json = model.to_json();
    json.push('\n');
    write_file(model_path, json.as_bytes())?;
    let mut manifest = RunManifest::new("train");
    manifest.config = Some(config);
    manifest.seed = Some(config.seed);
    manifest.input("corpus", Some(corpus));
    lexicons.record(&mut manifest);
    manifest.outputs.push(model_path.to_path_buf());
    manifest.write_beside(model_path)?;
    log::info!("model written to {}", model_path.display());
    Ok(())
}

fn evaluate(
    corpus: &Path,
    folds: usize,
    grid: Option<GridTable>,
    out: Option<&Path>,
    config: &ConfigArgs,
    lexicons: &LexiconArgs,
) -> Result<()> {
    let corpus_data = read_corpus(corpus)?;
    let resources = lexicons.resources()?;
    let config = config.config(lexicons.stop_words.is_some());
    let (json, summary) = match grid {
        Some(table) => {
            let report = run_grid(&corpus_data, table, &config, &resources, folds)?;
            (serde_json::to_string_pretty(&report)?, report.render_text())
        }
        None => {
            let report = cross_validate(&corpus_data, &config, &resources, folds)?;
            let summary = format!(
                "subjectivity {:.4}\npolarity     {:.4}\nend-to-end   {:.4} (pooled {:.4})\n",
                report.mean_subjectivity_accuracy,
                report.mean_polarity_accuracy,
                report.mean_end_to_end_accuracy,
                report.pooled_end_to_end_accuracy
            );
            (serde_json::to_string_pretty(&report)?, summary)
        }
    };
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    match out {
        Some(path) => {
            write_file(path, format!("{json}\n").as_bytes())?;
            let mut manifest = RunManifest::new("evaluate");
            manifest.config = Some(config);
            manifest.seed = Some(config.seed);
            manifest.folds = Some(folds);
            manifest.grid = grid.map(|g| format!("{g:?}").to_lowercase());
            manifest.input("corpus", Some(corpus));
            lexicons.record(&mut manifest);
            manifest.outputs.push(path.to_path_buf());
            manifest.write_beside(path)?;
            stdout.write_all(summary.as_bytes())?;
        }
        None => writeln!(stdout, "{json}")?,
    }
    stdout.flush()?;
    Ok(())
}

fn classify(
    model_path: &Path,
    corpus: Option<&Path>,
    text: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let raw = fs::read_to_string(model_path)
        .with_context(|| format!("cannot read model {}", model_path.display()))?;
    let model = TwoStageModel::from_json(&raw)
        .with_context(|| format!("cannot load model {}", model_path.display()))?;
    let posts = match (corpus, text) {
        (Some(path), _) => read_corpus(path)?.into_posts(),
        (None, Some(t)) => vec![Post::new("text", t, Label::Unlabeled)],
        (None, None) => bail!("either --corpus or --text is required"),
    };
    let mut lines = Vec::with_capacity(posts.len());
    for post in &posts {
        let record = ClassifiedRecord::new(post, &model.classify(&post.text));
        lines.push(serde_json::to_string(&record)?);
    }
    match out {
        Some(path) => {
            let mut body = lines.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            write_file(path, body.as_bytes())?;
            let mut manifest = RunManifest::new("classify");
            manifest.config = Some(*model.config());
            manifest
                .input("model", Some(model_path))
                .input("corpus", corpus);
            manifest.outputs.push(path.to_path_buf());
            manifest.write_beside(path)?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            for line in &lines {
                writeln!(w, "{line}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn mood_stats(
    input: &Path,
    by: By,
    by_year_month: bool,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let file = fs::File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let pairs = stats::read_classified(io::BufReader::new(file))
        .with_context(|| format!("cannot read {}", input.display()))?;
    let grouping = match (by, by_year_month) {
        (By::Topic, false) => Grouping::Topic,
        (By::Topic, true) => bail!("--by-year-month requires --by month"),
        (By::Month, false) => Grouping::Month,
        (By::Month, true) => Grouping::YearMonth,
    };
    let table = stats::mood_by(&pairs, grouping);
    if table.is_empty() {
        let attribute = match grouping {
            Grouping::Topic => "a topic",
            _ => "a timestamp",
        };
        log::warn!(
            "no post in {} has {attribute}; the table is empty",
            input.display()
        );
    }
    match out {
        Some(path) => {
            stats::emit_report(&table, format, path)?;
            let mut manifest = RunManifest::new("stats");
            manifest.input("classified", Some(input));
            manifest.outputs.push(path.to_path_buf());
            manifest.write_beside(path)?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            stats::write_report(&table, format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn synth(out: &Path, posts_per_class: usize, seed: u64, lexicon_dir: Option<&Path>) -> Result<()> {
    let corpus = synthetic::generate(&SyntheticSpec {
        posts_per_class,
        seed,
        ..SyntheticSpec::default()
    });
    let mut body = Vec::new();
    corpus.write_jsonl(&mut body)?;
    write_file(out, &body)?;
    let mut manifest = RunManifest::new("synth");
    manifest.seed = Some(seed);
    manifest.outputs.push(out.to_path_buf());
    if let Some(dir) = lexicon_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (name, words) in [
            ("stopwords.txt", &synthetic::STOP_WORDS[..]),
            ("negatory.txt", &synthetic::NEGATORY[..]),
            ("emphasizers.txt", &synthetic::EMPHASIZERS[..]),
        ] {
            let path = dir.join(name);
            write_file(&path, format!("{}\n", words.join("\n")).as_bytes())?;
            manifest.outputs.push(path);
        }
    }
    manifest.write_beside(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train {
            corpus,
            model,
            config,
            lexicons,
        } => train(corpus, model, config, lexicons),
        Command::Evaluate {
            corpus,
            folds,
            grid,
            out,
            config,
            lexicons,
        } => evaluate(corpus, *folds, *grid, out.as_deref(), config, lexicons),
        Command::Classify {
            model,
            corpus,
            text,
            out,
        } => classify(model, corpus.as_deref(), text.as_deref(), out.as_deref()),
        Command::Stats {
            input,
            by,
            by_year_month,
            format,
            out,
        } => mood_stats(input, *by, *by_year_month, *format, out.as_deref()),
        Command::Synth {
            out,
            posts_per_class,
            seed,
            lexicon_dir,
        } => synth(out, *posts_per_class, *seed, lexicon_dir.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
