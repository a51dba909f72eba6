use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use t2t::alignment::AlignmentConfig;
use t2t::corpus::{write_transcripts, NBestWeighting};
use t2t::eval::{relative_reduction, report_json, write_report_tsv, WerReport};
use t2t::pipeline::{
    align_stage, apply_stage, eval_stage, run_pipeline, synth_stage, train_stage, AlignInput, PipelineConfig,
    PipelineError, SynthParams,
};
use t2t::synthgen::{default_rules, generate_references, load_rules};
use t2t::transducer::DecodeConfig;

#[derive(Parser)]
#[command(name = "t2t", version, about = "Learn and apply word-level mappings that correct ASR output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt clean transcripts into a paired corpus and N-best lists
    Synth(SynthArgs),
    /// Align hypothesis/reference pairs into joint word-pair tokens
    Align(AlignArgs),
    /// Estimate the joint n-gram model and compile the mapping transducer
    Train(TrainArgs),
    /// Decode hypotheses through a mapping transducer
    Apply(ApplyArgs),
    /// Score hypotheses against references
    Eval(EvalArgs),
    /// Run synth, align, train, apply and eval from one config file
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Clean transcripts (`id<TAB>text`)
    #[arg(long, required_unless_present = "generate", conflicts_with = "generate")]
    refs: Option<PathBuf>,
    /// Generate this many synthetic references into <OUT_DIR>/refs.tsv instead
    #[arg(long)]
    generate: Option<usize>,
    /// Seed for generated references
    #[arg(long, default_value_t = 42)]
    reference_seed: u64,
    /// Share of generated slots filled with a rule pattern
    #[arg(long, default_value_t = 0.4)]
    rule_share: f64,
    /// Corruption rules (`pattern<TAB>replacement<TAB>prob`); built-in set if omitted
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Per-word deletion probability
    #[arg(long, default_value_t = 0.05)]
    deletion_prob: f64,
    /// Hypotheses per N-best list
    #[arg(long, default_value_t = 25)]
    nbest: usize,
    /// Perturbation spread for ranks 2 and up
    #[arg(long, default_value_t = 0.5)]
    temperature: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    /// Paired corpus (`id<TAB>hyp<TAB>ref`)
    #[arg(long, required_unless_present = "nbest_corpus", conflicts_with = "nbest_corpus")]
    corpus: Option<PathBuf>,
    /// N-best lists (`id<TAB>rank<TAB>score<TAB>hyp`), paired with --refs
    #[arg(long, requires = "refs")]
    nbest_corpus: Option<PathBuf>,
    /// References for --nbest-corpus
    #[arg(long)]
    refs: Option<PathBuf>,
    /// Hypotheses taken from each N-best list
    #[arg(long, default_value_t = 1)]
    nbest_train: usize,
    /// How one utterance's weight is split over its hypotheses: uniform or decay:<r>
    #[arg(long, default_value = "uniform", value_parser = parse_weighting)]
    weighting: NBestWeighting,
    /// Most hypothesis words per joint token
    #[arg(long, default_value_t = 3)]
    max_x: usize,
    /// Most reference words per joint token
    #[arg(long, default_value_t = 3)]
    max_y: usize,
    /// Forbid hypothesis words mapping to nothing
    #[arg(long)]
    no_source_deletion: bool,
    /// Forbid reference words produced from nothing
    #[arg(long)]
    no_target_insertion: bool,
    /// Maximum EM iterations
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Relative log-likelihood gain below which EM stops
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Aligned corpus output
    #[arg(long)]
    out: PathBuf,
    /// Joint-token probabilities output
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct PassthroughArgs {
    /// Cost in nats of copying one word unchanged
    #[arg(long, default_value_t = 8.0)]
    passthrough_penalty: f64,
    /// Disable the identity copy entirely
    #[arg(long)]
    no_passthrough: bool,
}

impl PassthroughArgs {
    fn penalty(&self) -> Option<f64> {
        (!self.no_passthrough).then_some(self.passthrough_penalty)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Aligned corpus from `t2t align`
    #[arg(long)]
    aligned: PathBuf,
    /// n-gram order (1 to 9)
    #[arg(long, default_value_t = 5)]
    order: usize,
    /// Model output
    #[arg(long)]
    out: PathBuf,
    /// Transducer output
    #[arg(long)]
    fst: Option<PathBuf>,
    #[command(flatten)]
    passthrough: PassthroughArgs,
}

#[derive(Args)]
struct ApplyArgs {
    /// Transducer from `t2t train`
    #[arg(long)]
    fst: PathBuf,
    /// Hypotheses (`id<TAB>text`)
    #[arg(long)]
    input: PathBuf,
    /// Distinct outputs searched per utterance
    #[arg(long, default_value_t = 500)]
    nbest: usize,
    /// Outputs written per utterance
    #[arg(long, default_value_t = 1)]
    topk: usize,
    /// Prune paths costing more than best + BEAM
    #[arg(long)]
    beam: Option<f64>,
    #[command(flatten)]
    passthrough: PassthroughArgs,
    /// Decode output (`id<TAB>rank<TAB>cost<TAB>text`)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Hypotheses: transcripts or `t2t apply` output
    #[arg(long)]
    hyp: PathBuf,
    /// Reference transcripts
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Fixed WER that normalizes this report into NWER
    #[arg(long)]
    reference_wer: Option<f64>,
    /// JSON report of a baseline system; adds the relative reduction
    #[arg(long)]
    baseline_report: Option<PathBuf>,
    /// Per-utterance TSV report
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON summary report
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Flat `key = value` config file
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set order=3 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    /// Comma-separated N-best sizes, one trained variant each
    #[arg(long)]
    nbest_train: Option<String>,
    #[arg(long)]
    reference_wer: Option<f64>,
}

fn parse_weighting(s: &str) -> Result<NBestWeighting, String> {
    let mut cfg = PipelineConfig::default();
    cfg.set("nbest_weighting", s, Path::new(""))?;
    Ok(cfg.nbest_weighting)
}

fn output_error(path: &Path, e: io::Error) -> PipelineError {
    PipelineError::Output(path.display().to_string(), e)
}

fn synth(args: SynthArgs) -> Result<(), PipelineError> {
    let refs = match (args.refs, args.generate) {
        (Some(path), _) => path,
        (None, count) => {
            let rules = match &args.rules {
                Some(path) => load_rules(path)?,
                None => default_rules(),
            };
            let refs = generate_references(count.unwrap_or(0), &rules, args.rule_share, args.reference_seed);
            fs::create_dir_all(&args.out_dir).map_err(|e| output_error(&args.out_dir, e))?;
            let path = args.out_dir.join("refs.tsv");
            let file = fs::File::create(&path).map_err(|e| output_error(&path, e))?;
            write_transcripts(io::BufWriter::new(file), &refs).map_err(|e| output_error(&path, e))?;
            path
        }
    };
    let params = SynthParams {
        seed: args.seed,
        word_deletion_prob: args.deletion_prob,
        nbest_size: args.nbest,
        alternative_temperature: args.temperature,
    };
    let (pairs, nbest) = synth_stage(&refs, args.rules.as_deref(), &params, &args.out_dir)?;
    println!("wrote {} and {}", pairs.display(), nbest.display());
    Ok(())
}

fn align(args: AlignArgs) -> Result<(), PipelineError> {
    let input = match (args.corpus, args.nbest_corpus, args.refs) {
        (Some(corpus), _, _) => AlignInput::Paired(corpus),
        (None, Some(nbest), Some(refs)) => AlignInput::NBest {
            nbest,
            refs,
            n: args.nbest_train,
            weighting: args.weighting,
        },
        _ => return Err(PipelineError::Config("need --corpus or --nbest-corpus with --refs".into())),
    };
    let cfg = AlignmentConfig {
        max_x: args.max_x,
        max_y: args.max_y,
        allow_source_deletion: !args.no_source_deletion,
        allow_target_insertion: !args.no_target_insertion,
        max_iterations: args.iters,
        convergence_epsilon: args.epsilon,
    };
    let stats = align_stage(&input, &cfg, &args.out, args.model_out.as_deref())?;
    for (i, ll) in stats.log_likelihoods.iter().enumerate() {
        println!("iteration {i}\tlog-likelihood {ll:.6}");
    }
    println!(
        "aligned {} of {} pairs ({} skipped) after {} iterations",
        stats.aligned, stats.pairs, stats.skipped, stats.iterations
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), PipelineError> {
    let decode = DecodeConfig {
        passthrough_penalty: args.passthrough.penalty(),
        ..DecodeConfig::default()
    };
    let stats = train_stage(&args.aligned, args.order, &decode, &args.out, args.fst.as_deref())?;
    println!("n-grams {}", stats.entries);
    println!("perplexity {:.6}", stats.perplexity);
    if args.fst.is_some() {
        println!("transducer {} states {} arcs", stats.states, stats.arcs);
    }
    Ok(())
}

fn apply(args: ApplyArgs) -> Result<(), PipelineError> {
    let cfg = DecodeConfig {
        nbest: args.nbest,
        beam: args.beam,
        passthrough_penalty: args.passthrough.penalty(),
        output_top_k: args.topk,
    };
    let stats = apply_stage(&args.fst, &args.input, &cfg, &args.out)?;
    println!("decoded {} utterances, {} copied through unchanged", stats.utterances, stats.fallbacks);
    Ok(())
}

/// The score a baseline JSON report is compared on: nwer when both sides
/// have one, plain wer otherwise.
fn baseline_score(path: &Path, report: &WerReport) -> Result<(f64, f64), PipelineError> {
    let bad = |msg: String| PipelineError::Config(format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let field = |name: &str| json.get(name).and_then(|v| v.as_f64());
    match (field("nwer"), report.nwer) {
        (Some(base), Some(system)) => Ok((base, system)),
        _ => field("wer")
            .map(|base| (base, report.wer))
            .ok_or_else(|| bad("no `wer` field".into())),
    }
}

fn eval(args: EvalArgs) -> Result<(), PipelineError> {
    let report = eval_stage(&args.hyp, &args.reference, args.reference_wer)?;
    let ops = report.ops;
    println!(
        "WER {:.4} ({} sub, {} del, {} ins over {} reference words)",
        report.wer, ops.substitutions, ops.deletions, ops.insertions, report.reference_words
    );
    if let Some(n) = report.nwer {
        println!("NWER {n:.2}");
    }
    if let Some(path) = &args.baseline_report {
        let (base, system) = baseline_score(path, &report)?;
        println!("relative reduction {:.1}%", relative_reduction(base, system)?);
    }
    if let Some(path) = &args.report {
        let file = fs::File::create(path).map_err(|e| output_error(path, e))?;
        write_report_tsv(io::BufWriter::new(file), &report).map_err(|e| output_error(path, e))?;
    }
    if let Some(path) = &args.json {
        fs::write(path, report_json(&report) + "\n").map_err(|e| output_error(path, e))?;
    }
    Ok(())
}

fn pipeline(args: PipelineArgs) -> Result<(), PipelineError> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    let cwd = Path::new("");
    let mut overrides: Vec<(String, String)> = Vec::new();
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        overrides.push((k.trim().to_string(), v.to_string()));
    }
    if let Some(dir) = &args.work_dir {
        overrides.push(("work_dir".into(), dir.display().to_string()));
    }
    if let Some(n) = &args.nbest_train {
        overrides.push(("nbest_train".into(), n.clone()));
    }
    if let Some(r) = args.reference_wer {
        overrides.push(("reference_wer".into(), r.to_string()));
    }
    for (k, v) in overrides {
        cfg.set(&k, &v, cwd).map_err(PipelineError::Config)?;
    }
    let summary = run_pipeline(&cfg)?;
    let stdout = io::stdout();
    summary
        .write_table(stdout.lock())
        .map_err(|e| output_error(Path::new("<stdout>"), e))?;
    info!("outputs in {}", cfg.work_dir.display());
    Ok(())
}

fn configure_threads() {
    let Ok(value) = std::env::var("T2T_THREADS") else {
        return;
    };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("cannot size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring T2T_THREADS={value:?}, expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Align(a) => align(a),
        Command::Train(a) => train(a),
        Command::Apply(a) => apply(a),
        Command::Eval(a) => eval(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
