use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tabqa_cli::{
    build_providers, cmd_annotate, cmd_evaluate, cmd_generate, cmd_pipeline, cmd_retrieve, cmd_stats, stats_text,
    AnnotateArgs, CliError, EvaluateArgs, GenerateArgs, ProviderSpec, RetrieveArgs, RunConfig, StatsArgs,
};
use tabqa_core::retrieval::MergeStrategy;

#[derive(Parser)]
#[command(
    name = "tabqa",
    version,
    about = "Question answering over long documents with hierarchical tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration; TABQA_* variables override it, flags override both.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Merge {
    RoundRobin,
    MaxScore,
}

#[derive(Subcommand)]
enum Command {
    /// Match table cells to document sentences and filter by coverage.
    Annotate {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Review decisions for automatic matches.
        #[arg(long)]
        review: Option<PathBuf>,
    },
    /// Rewrite, embed and rank document sentences for each question.
    Retrieve {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// hashing, http, replay:PATH or record:PATH.
        #[arg(long)]
        embedder: Option<ProviderSpec>,
        /// identity, http, replay:PATH or record:PATH.
        #[arg(long)]
        rewriter: Option<ProviderSpec>,
        #[arg(long, value_enum)]
        merge: Option<Merge>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Generate a table per question from its retrieved sentences.
    Generate {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        retrieval: Option<PathBuf>,
        /// Whole documents, given to the one-shot baseline instead of retrieved sentences.
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// http, replay:PATH or record:PATH.
        #[arg(long)]
        llm: Option<ProviderSpec>,
        /// Cells per fill prompt.
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        baseline_oneshot: bool,
        /// Triples to draw structure examples from.
        #[arg(long)]
        exemplars: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Score generated tables against the ground truth.
    Evaluate {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        groundtruth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Retrieval records, for recall columns.
        #[arg(long)]
        retrieval: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Corpus statistics over triples.
    Stats {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        docs: Option<PathBuf>,
        /// Also write the statistics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieval, generation and evaluation from one configuration file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides out_dir from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &ConfigArg) -> Result<RunConfig, CliError> {
    RunConfig::load_or_default(config.config.as_deref())
}

fn finish(mut config: RunConfig) -> Result<RunConfig, CliError> {
    config.validate()?;
    if config.recall_ks.is_empty() {
        config.recall_ks = RunConfig::default().recall_ks;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Annotate {
            docs,
            tables,
            out,
            review,
        } => {
            let outcome = cmd_annotate(&AnnotateArgs {
                docs,
                tables,
                out,
                review,
            })?;
            println!(
                "{} triples, {} excluded, {} awaiting a question",
                outcome.triples.len(),
                outcome.excluded.len(),
                outcome.awaiting_question.len()
            );
        }
        Command::Retrieve {
            triples,
            docs,
            out,
            k,
            embedder,
            rewriter,
            merge,
            config,
        } => {
            let mut config = load(&config)?;
            if let Some(k) = k {
                config.retrieval.k = k;
            }
            if let Some(e) = embedder {
                config.providers.embedder = e;
            }
            if let Some(r) = rewriter {
                config.providers.rewriter = r;
            }
            if let Some(m) = merge {
                config.retrieval.merge = match m {
                    Merge::RoundRobin => MergeStrategy::RoundRobin,
                    Merge::MaxScore => MergeStrategy::MaxScore,
                };
            }
            let config = finish(config)?;
            let providers = build_providers(&config.providers)?;
            let outcome = cmd_retrieve(&RetrieveArgs { triples, docs, out }, &config, &providers)?;
            for (k, r) in &outcome.recall.mean {
                println!("R@{k} {:.2}", 100.0 * r);
            }
        }
        Command::Generate {
            triples,
            retrieval,
            docs,
            out,
            llm,
            batch_size,
            baseline_oneshot,
            exemplars,
            config,
        } => {
            let mut config = load(&config)?;
            if llm.is_some() {
                config.providers.llm = llm;
            }
            if batch_size.is_some() {
                config.generation.batch_size = batch_size;
            }
            if baseline_oneshot {
                config.baseline_oneshot = true;
            }
            if exemplars.is_some() {
                config.exemplars = exemplars;
            }
            let config = finish(config)?;
            let providers = build_providers(&config.providers)?;
            let outcome = cmd_generate(
                &GenerateArgs {
                    triples,
                    retrieval,
                    docs,
                    out,
                },
                &config,
                &providers,
            )?;
            println!("{} tables generated", outcome.generated.len());
        }
        Command::Evaluate {
            generated,
            groundtruth,
            out,
            retrieval,
            config,
        } => {
            let config = finish(load(&config)?)?;
            let outcome = cmd_evaluate(
                &EvaluateArgs {
                    generated,
                    groundtruth,
                    retrieval,
                    out,
                },
                &config,
            )?;
            print!("{}", outcome.summary);
        }
        Command::Stats { triples, docs, out } => {
            let stats = cmd_stats(&StatsArgs { triples, docs, out })?;
            print!("{}", stats_text(&stats));
        }
        Command::Pipeline { config, out } => {
            let mut config = RunConfig::load_or_default(Some(&config))?;
            if let Some(out) = out {
                config.out_dir = out;
            }
            let config = finish(config)?;
            let providers = build_providers(&config.providers)?;
            let outcome = cmd_pipeline(&config, &providers, &config.out_dir)?;
            print!("{}", outcome.evaluation.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.report()).expect("error report");
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
