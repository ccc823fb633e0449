use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use psind_core::indicators::specs_json;
use psind_core::ingest::{self, IngestReport, Source, TeamCorpus};
use psind_core::reporting::{self, HeatmapOptions, SeriesFormat, DEFAULT_FLAG_QUANTILE};
use psind_core::synth::{self, SynthProfile};
use psind_core::{Error, Execution, Lexicon, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "psind",
    version,
    about = "Team psychological-safety indicators from chat logs"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest team corpora and write the daily indicator series.
    Compute(ComputeArgs),
    /// Render one SVG heatmap per indicator from a series file.
    Heatmap(HeatmapArgs),
    /// Generate deterministic synthetic team corpora.
    Synth(SynthArgs),
    /// Check a chat export against a roster without computing anything.
    Validate(ValidateArgs),
    /// Print the indicator definitions as JSON.
    Indicators,
}

#[derive(Args)]
struct ComputeArgs {
    /// Chat export directory, one per team.
    #[arg(
        long,
        required_unless_present = "messages",
        conflicts_with = "messages"
    )]
    export: Vec<PathBuf>,
    /// Normalized JSONL message file, one per team.
    #[arg(long)]
    messages: Vec<PathBuf>,
    /// Category lexicon file. Defaults to the bundled demo lexicon.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Roles CSV, one per team, in the same order as the inputs.
    #[arg(long, required = true)]
    roles: Vec<PathBuf>,
    /// User ids whose messages are dropped. May be repeated.
    #[arg(long)]
    exclude: Vec<PathBuf>,
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u32).range(1..))]
    window_days: u32,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the extension of --out.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = DEFAULT_FLAG_QUANTILE)]
    flag_quantile: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FLAG_QUANTILE)]
    flag_quantile: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON profile. Knob flags override its fields.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    teams: Option<usize>,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long)]
    members_per_team: Option<usize>,
    #[arg(long)]
    msgs_per_member_per_week: Option<f64>,
    #[arg(long)]
    participation_skew: Option<f64>,
    #[arg(long)]
    reply_latency_mean: Option<f64>,
    #[arg(long)]
    thread_probability: Option<f64>,
    #[arg(long)]
    dominant_word_factor: Option<f64>,
    #[arg(long)]
    non_consenting_members: Option<usize>,
    /// Per-token category rate as CATEGORY=RATE. May be repeated.
    #[arg(long = "rate", value_parser = parse_rate, allow_hyphen_values = true)]
    rates: Vec<(String, f64)>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    export: PathBuf,
    #[arg(long)]
    roles: PathBuf,
    #[arg(long)]
    exclude: Vec<PathBuf>,
}

fn parse_rate(s: &str) -> Result<(String, f64), String> {
    let (name, rate) = s
        .split_once('=')
        .ok_or_else(|| format!("expected CATEGORY=RATE, got {s:?}"))?;
    let rate: f64 = rate.parse().map_err(|e| format!("{rate:?}: {e}"))?;
    Ok((name.trim().to_string(), rate))
}

/// Diagnostic carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn malformed(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_malformed_input() { 2 } else { 1 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match cli.command {
        Command::Compute(args) => compute(args, execution),
        Command::Heatmap(args) => heatmap(args, execution),
        Command::Synth(args) => synthesize(args),
        Command::Validate(args) => validate(args),
        Command::Indicators => {
            println!("{}", specs_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_exclusions(paths: &[PathBuf]) -> Result<BTreeSet<String>, Failure> {
    let mut all = BTreeSet::new();
    for p in paths {
        all.extend(ingest::read_exclusions(p)?);
    }
    Ok(all)
}

/// Team id from an export directory name, or a messages file's parent directory.
fn team_id(source: &Source) -> String {
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
    match source {
        Source::Export(dir) => name(dir),
        Source::Messages(file) => file
            .parent()
            .and_then(name)
            .or_else(|| file.file_stem().map(|s| s.to_string_lossy().into_owned())),
    }
    .unwrap_or_else(|| "team".to_string())
}

fn print_report(team: &str, r: &IngestReport) {
    eprintln!(
        "{team}: {} messages before exclusion, {} after ({} system, {} excluded, {} duplicates dropped)",
        r.raw - r.system,
        r.kept,
        r.system,
        r.excluded,
        r.duplicates
    );
}

fn compute(args: ComputeArgs, execution: Execution) -> Result<(), Failure> {
    let sources: Vec<Source> = if args.export.is_empty() {
        args.messages
            .iter()
            .cloned()
            .map(Source::Messages)
            .collect()
    } else {
        args.export.iter().cloned().map(Source::Export).collect()
    };
    if sources.len() != args.roles.len() {
        return Err(Failure::usage(format!(
            "{} input(s) but {} --roles file(s); pass one roles file per team",
            sources.len(),
            args.roles.len()
        )));
    }
    let excluded = read_exclusions(&args.exclude)?;
    let lexicon = match &args.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => {
            info!("no --lexicon given, using the bundled demo lexicon");
            Lexicon::demo()
        }
    };

    let mut seen = BTreeSet::new();
    let mut corpora: Vec<TeamCorpus> = Vec::with_capacity(sources.len());
    for (source, roles) in sources.iter().zip(&args.roles) {
        let id = team_id(source);
        if !seen.insert(id.clone()) {
            return Err(Failure::usage(format!(
                "two inputs resolve to team id {id:?}"
            )));
        }
        let roster = ingest::read_roles(roles)?;
        let (corpus, report) = ingest::ingest_team(source, roster, &excluded, id.clone())?;
        print_report(&id, &report);
        corpora.push(corpus);
    }

    let config = PipelineConfig {
        window_days: args.window_days,
        flag_quantile: args.flag_quantile,
        execution,
    };
    let series = psind_core::compute_all(&corpora, &lexicon, &config)?;
    let format = match args.format {
        Some(Format::Csv) => SeriesFormat::Csv,
        Some(Format::Jsonl) => SeriesFormat::Jsonl,
        None => SeriesFormat::from_path(&args.out),
    };
    reporting::write_series(&series, &args.out, format)?;

    let tallies: BTreeMap<String, usize> = series.missing_tallies();
    for (indicator, n) in &tallies {
        eprintln!("MISSING {indicator}: {n}");
    }
    eprintln!("wrote {} rows to {}", series.len(), args.out.display());
    Ok(())
}

fn heatmap(args: HeatmapArgs, execution: Execution) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.flag_quantile) {
        return Err(Failure::usage(format!(
            "--flag-quantile {} outside [0, 1]",
            args.flag_quantile
        )));
    }
    let series = reporting::read_series(&args.series)?;
    if series.is_empty() {
        return Err(Failure::malformed(format!(
            "{}: series has no rows",
            args.series.display()
        )));
    }
    let options = HeatmapOptions {
        flag_quantile: args.flag_quantile,
        execution,
        ..HeatmapOptions::default()
    };
    let files = reporting::render_heatmaps(&series, &args.out_dir, &options)?;
    eprintln!(
        "wrote {} heatmaps to {}",
        files.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn synthesize(args: SynthArgs) -> Result<(), Failure> {
    // Any problem with the profile is a precondition failure, never exit 2.
    let as_usage = |e: Error| Failure::usage(e.to_string());
    let mut p = match &args.profile {
        Some(path) => SynthProfile::load(path).map_err(as_usage)?,
        None => SynthProfile::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { p.$field = v; })* };
    }
    set!(
        seed,
        teams,
        days,
        members_per_team,
        msgs_per_member_per_week,
        participation_skew,
        reply_latency_mean,
        thread_probability,
        dominant_word_factor,
        non_consenting_members
    );
    p.category_rates.extend(args.rates);
    p.validate().map_err(as_usage)?;

    let teams = synth::generate(&p, &Lexicon::demo()).map_err(as_usage)?;
    let dirs = synth::write_teams(&teams, &args.out_dir)?;
    let total: usize = teams.iter().map(|t| t.messages.len()).sum();
    eprintln!(
        "wrote {} teams, {total} messages, to {}",
        dirs.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), Failure> {
    let excluded = read_exclusions(&args.exclude)?;
    let roster = ingest::read_roles(&args.roles)?;
    let source = Source::Export(args.export);
    let id = team_id(&source);
    let (corpus, report) = ingest::ingest_team(&source, roster, &excluded, id.clone())?;
    print_report(&id, &report);
    match (corpus.first_day(), corpus.last_day()) {
        (Some(a), Some(b)) => eprintln!("{id}: messages span {a} to {b}"),
        _ => eprintln!("{id}: no messages remain"),
    }
    Ok(())
}
