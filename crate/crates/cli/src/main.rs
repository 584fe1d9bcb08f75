mod args;
mod cache;
mod commands;
mod config;

use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use clap::{CommandFactory, FromArgMatches};
use serde_json::json;

use args::{Cli, Command};
use cache::{Outcome, Stamps};
use commands::{Layout, StatsSpec};
use config::ConfigError;
use epic_embed::embed::{load_model, EmbedError};
use epic_embed::similarity::{get_vector, most_similar, SimilarityError};

const EXIT_INPUT: u8 = 2;
const EXIT_QUERY: u8 = 3;
const EXIT_CONFIG: u8 = 4;

fn command() -> clap::Command {
    let mut cmd = Cli::command().args_override_self(true);
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || matches!(cause.downcast_ref(), Some(EmbedError::InvalidConfig(_))) {
            return EXIT_CONFIG;
        }
        if cause.is::<SimilarityError>() {
            return EXIT_QUERY;
        }
    }
    EXIT_INPUT
}

fn main() -> ExitCode {
    let cmd = command();
    let args = match config::expand_args(&cmd, std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match epic_embed::par::with_threads(cli.threads, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn report(stage: &str, outcome: Outcome) {
    println!("{stage}: {}", outcome.label());
}

fn run(cli: &Cli) -> Result<()> {
    let layout = Layout::new(&cli.workdir);
    let pc = cli.paper_compat;
    let or = |p: &Option<std::path::PathBuf>, d: std::path::PathBuf| p.clone().unwrap_or(d);
    match &cli.command {
        Command::Ingest { input, out } => {
            let out = or(out, layout.sections());
            let n = commands::ingest(input, &out)?;
            println!("{n} sections -> {}", out.display());
        }
        Command::Clean { input, out, clean } => {
            let out = or(out, layout.clean());
            commands::clean(&or(input, layout.sections()), &out, clean.options(pc))?;
            println!("cleaned text -> {}", out.display());
        }
        Command::Tokenize { input, out, split } => {
            let out = or(out, layout.tokens());
            let abbreviations = commands::load_abbreviations(split.abbreviations.as_deref())?;
            let corpus = commands::tokenize(&or(input, layout.clean()), &out, &abbreviations)?;
            println!("{} sentences, {} tokens -> {}", corpus.len(), corpus.token_count(), out.display());
        }
        Command::Normalize { input, out, norm } => {
            let out = or(out, layout.normalized());
            let stops = commands::load_stopwords(norm.stopwords.as_deref())?;
            let lexicon = commands::load_lexicon(norm.lexicon.as_deref())?;
            let corpus = commands::normalize(&or(input, layout.tokens()), &out, norm.norm.into(), &stops, &lexicon)?;
            println!("{} sentences, {} tokens -> {}", corpus.len(), corpus.token_count(), out.display());
        }
        Command::Stats { input, raw, out_dir, stats } => {
            let out_dir = or(out_dir, layout.stats());
            let raw = raw.clone().or_else(|| Some(layout.tokens()).filter(|p| p.exists()));
            let spec = StatsSpec { top_k: stats.top_k, bin_width: stats.bin_width as usize, mode: stats.mode() };
            commands::stats(&or(input, layout.normalized()), raw.as_deref(), &out_dir, &spec)?;
            io::stdout().write_all(&std::fs::read(out_dir.join("report.tsv"))?)?;
        }
        Command::Vocab { input, out, vocab } => {
            let out = or(out, layout.vocab());
            let (min_count, punct) = vocab.resolve(pc);
            let v = commands::vocab(&or(input, layout.normalized()), &out, min_count, punct)?;
            println!("{} words -> {}", v.len(), out.display());
        }
        Command::Train { input, vocab, out, vectors, train } => {
            let out = or(out, layout.model());
            let config = train.config(cli.threads);
            let r = commands::train(
                &or(input, layout.normalized()),
                &or(vocab, layout.vocab()),
                &out,
                &or(vectors, layout.vectors()),
                &config,
            )?;
            print_train_report(&r);
            println!("model -> {}", out.display());
        }
        Command::Similar { word, model, n, json } => {
            let model = load_model(&or(model, layout.model()))?;
            let result = most_similar(&model, &word.to_lowercase(), *n)?;
            if *json {
                let rows: Vec<_> = result.neighbors.iter().map(|n| json!({"word": n.word, "score": n.score})).collect();
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                result.write_tsv(io::stdout().lock())?;
            }
        }
        Command::Vector { word, model, json } => {
            let model = load_model(&or(model, layout.model()))?;
            let word = word.to_lowercase();
            let v = get_vector(&model, &word)?;
            if *json {
                println!("{}", json!({"word": word, "vector": v}));
            } else {
                let mut out = io::stdout().lock();
                write!(out, "{word}")?;
                for x in v {
                    write!(out, " {x:.6}")?;
                }
                writeln!(out)?;
            }
        }
        Command::Pipeline { input, clean, split, norm, stats, vocab, train } => {
            pipeline(cli, &layout, input, clean, split, norm, stats, vocab, train)?;
        }
    }
    Ok(())
}

fn print_train_report(r: &epic_embed::embed::TrainReport) {
    let first = r.epoch_losses.first().copied().unwrap_or(f64::NAN);
    let last = r.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!("{} examples, mean loss {first:.4} (first epoch) -> {last:.4} (last epoch)", r.examples);
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    cli: &Cli,
    layout: &Layout,
    input: &Path,
    clean: &args::CleanArgs,
    split: &args::SplitArgs,
    norm: &args::NormArgs,
    stats: &args::StatsArgs,
    vocab: &args::VocabArgs,
    train: &args::TrainArgs,
) -> Result<()> {
    if !input.exists() {
        return Err(anyhow::Error::new(io::Error::new(io::ErrorKind::NotFound, "input file not found"))
            .context(input.display().to_string()));
    }
    let config = train.config(cli.threads);
    config.validate()?;
    std::fs::create_dir_all(layout.root())?;
    let stamps = Stamps::new(layout.root());
    let pc = cli.paper_compat;
    let (sections, clean_path, tokens, normalized) =
        (layout.sections(), layout.clean(), layout.tokens(), layout.normalized());

    let outcome = stamps.run("ingest", &[input], "", &[&sections], || {
        commands::ingest(input, &sections).map(drop)
    })?;
    report("ingest", outcome);

    let options = clean.options(pc);
    let outcome = stamps.run("clean", &[&sections], &format!("{options:?}"), &[&clean_path], || {
        commands::clean(&sections, &clean_path, options).map(drop)
    })?;
    report("clean", outcome);

    let abbr_path = split.abbreviations.as_deref();
    let mut inputs: Vec<&Path> = vec![&clean_path];
    inputs.extend(abbr_path);
    let outcome = stamps.run("tokenize", &inputs, "", &[&tokens], || {
        commands::tokenize(&clean_path, &tokens, &commands::load_abbreviations(abbr_path)?).map(drop)
    })?;
    report("tokenize", outcome);

    let mut inputs: Vec<&Path> = vec![&tokens];
    inputs.extend(norm.stopwords.as_deref());
    inputs.extend(norm.lexicon.as_deref());
    let mode: epic_embed::normalize::NormalizeMode = norm.norm.into();
    let outcome = stamps.run("normalize", &inputs, &mode.to_string(), &[&normalized], || {
        let stops = commands::load_stopwords(norm.stopwords.as_deref())?;
        let lexicon = commands::load_lexicon(norm.lexicon.as_deref())?;
        commands::normalize(&tokens, &normalized, mode, &stops, &lexicon).map(drop)
    })?;
    report("normalize", outcome);

    let stats_dir = layout.stats();
    let spec = StatsSpec { top_k: stats.top_k, bin_width: stats.bin_width as usize, mode: stats.mode() };
    let params = format!("{} {} {:?}", spec.top_k, spec.bin_width, spec.mode);
    let outcome = stamps.run("stats", &[&normalized, &tokens], &params, &[&stats_dir], || {
        commands::stats(&normalized, Some(&tokens), &stats_dir, &spec)
    })?;
    report("stats", outcome);

    let vocab_path = layout.vocab();
    let (min_count, punct) = vocab.resolve(pc);
    let outcome = stamps.run("vocab", &[&normalized], &format!("{min_count} {punct}"), &[&vocab_path], || {
        commands::vocab(&normalized, &vocab_path, min_count, punct).map(drop)
    })?;
    report("vocab", outcome);

    let (model, vectors) = (layout.model(), layout.vectors());
    let model_vocab = epic_embed::embed::vocab_path_for(&model);
    let mut trained = None;
    let outcome = stamps.run(
        "train",
        &[&normalized, &vocab_path],
        &format!("{config:?}"),
        &[&model, &model_vocab, &vectors],
        || {
            trained = Some(commands::train(&normalized, &vocab_path, &model, &vectors, &config)?);
            Ok(())
        },
    )?;
    report("train", outcome);
    if let Some(r) = trained {
        print_train_report(&r);
    }
    println!("model -> {}", model.display());
    Ok(())
}
