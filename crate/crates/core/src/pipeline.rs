//! File-to-file stages and the one-shot experiment driver built on them.
//!
//! Every stage reads its inputs from disk and writes its outputs to disk, so
//! the driver and the command-line subcommands share the same code and any
//! stage can be rerun on its own.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use crate::alignment::{
    align_corpus, em_train, load_aligned_corpus, write_aligned_corpus, write_alignment_model, AlignError,
    AlignmentConfig,
};
use crate::corpus::{
    expand_nbest_to_pairs, load_nbest_corpus, load_paired_corpus, load_transcripts, read_transcripts,
    reference_map, write_corpus, write_nbest, write_transcripts, CorpusError, NBestWeighting, Utterance,
};
use crate::eval::{relative_reduction, score_transcripts, EvalError, WerReport};
use crate::ngram::{
    count_ngrams, estimate_discounts, estimate_modified_kneser_ney, perplexity, write_model, NGramError,
    DEFAULT_ORDER, MAX_ORDER,
};
use crate::synthgen::{
    default_rules, generate_corpus, generate_references, load_rules, CorruptionModel, SynthConfig, SynthError,
    DEFAULT_DELETION_PROB, DEFAULT_NBEST_SIZE, DEFAULT_TEMPERATURE,
};
use crate::transducer::{
    apply_corpus, build_transducer, load_transducer, read_decode_results, write_decode_results, write_transducer,
    DecodeConfig, TransducerError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{origin}:{line}: {message}")]
    ConfigParse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    NGram(#[from] NGramError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write {0}: {1}")]
    Output(String, #[source] io::Error),
}

impl PipelineError {
    /// Process exit status: 2 unreadable or malformed input, 3 alignment,
    /// 4 estimation, 5 transducer, 6 evaluation, 1 failure to write output.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::ConfigParse { .. } | PipelineError::Config(_) => 2,
            PipelineError::Corpus(_) | PipelineError::Synth(_) => 2,
            PipelineError::Align(AlignError::Parse { .. } | AlignError::Io(..)) => 2,
            PipelineError::Align(AlignError::Config(_)) => 2,
            PipelineError::Align(_) => 3,
            PipelineError::NGram(NGramError::Parse { .. } | NGramError::Io(..)) => 2,
            PipelineError::NGram(_) => 4,
            PipelineError::Transducer(TransducerError::Config(_)) => 2,
            PipelineError::Transducer(_) => 5,
            PipelineError::Eval(_) => 6,
            PipelineError::Output(..) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::Output(dir.display().to_string(), e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::Output(path.display().to_string(), e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut out = create(path)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| PipelineError::Output(path.display().to_string(), e))
}

// ---------------------------------------------------------------- stages

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub word_deletion_prob: f64,
    pub nbest_size: usize,
    pub alternative_temperature: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 42,
            word_deletion_prob: DEFAULT_DELETION_PROB,
            nbest_size: DEFAULT_NBEST_SIZE,
            alternative_temperature: DEFAULT_TEMPERATURE,
        }
    }
}

pub const PAIRS_FILE: &str = "pairs.tsv";
pub const NBEST_FILE: &str = "nbest.tsv";

/// Corrupts every reference, writing `pairs.tsv` (rank-1 hypotheses) and
/// `nbest.tsv` into `out_dir`. Without a rule file the built-in rules apply.
pub fn synth_stage(refs: &Path, rules: Option<&Path>, params: &SynthParams, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let references = load_transcripts(refs)?;
    let rules = match rules {
        Some(path) => load_rules(path)?,
        None => default_rules(),
    };
    let model = CorruptionModel::new(rules, params.word_deletion_prob, params.seed)?;
    let cfg = SynthConfig {
        nbest_size: params.nbest_size,
        alternative_temperature: params.alternative_temperature,
    };
    let (pairs, lists) = generate_corpus(&references, &model, &cfg)?;
    let pairs_path = out_dir.join(PAIRS_FILE);
    let nbest_path = out_dir.join(NBEST_FILE);
    write_file(&pairs_path, |w| write_corpus(w, &pairs))?;
    write_file(&nbest_path, |w| write_nbest(w, &lists))?;
    info!("synthesized {} utterances into {}", pairs.len(), out_dir.display());
    Ok((pairs_path, nbest_path))
}

/// Training pairs for the alignment stage.
#[derive(Debug, Clone)]
pub enum AlignInput {
    Paired(PathBuf),
    NBest {
        nbest: PathBuf,
        refs: PathBuf,
        n: usize,
        weighting: NBestWeighting,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignStats {
    pub pairs: usize,
    pub aligned: usize,
    pub skipped: usize,
    pub iterations: usize,
    pub log_likelihoods: Vec<f64>,
}

/// Runs EM and Viterbi alignment, writing the aligned corpus and, when asked,
/// the symbol model.
pub fn align_stage(input: &AlignInput, cfg: &AlignmentConfig, aligned_out: &Path, model_out: Option<&Path>) -> Result<AlignStats> {
    let pairs = match input {
        AlignInput::Paired(path) => load_paired_corpus(path)?,
        AlignInput::NBest { nbest, refs, n, weighting } => {
            let lists = load_nbest_corpus(nbest)?;
            let refs = reference_map(&load_transcripts(refs)?);
            expand_nbest_to_pairs(&lists, &refs, *n, *weighting)?
        }
    };
    let report = em_train(&pairs, cfg)?;
    let aligned = align_corpus(&pairs, &report.model, cfg);
    if aligned.utterances.is_empty() {
        return Err(AlignError::NothingAlignable(aligned.skipped).into());
    }
    write_file(aligned_out, |w| write_aligned_corpus(w, &aligned.utterances))?;
    if let Some(path) = model_out {
        write_file(path, |w| write_alignment_model(w, &report.model))?;
    }
    Ok(AlignStats {
        pairs: pairs.len(),
        aligned: aligned.utterances.len(),
        skipped: aligned.skipped,
        iterations: report.iterations,
        log_likelihoods: report.log_likelihoods,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub entries: usize,
    pub perplexity: f64,
    pub states: usize,
    pub arcs: usize,
}

/// Estimates the joint n-gram model and compiles it, writing the model file
/// and, when asked, the transducer file.
pub fn train_stage(
    aligned: &Path,
    order: usize,
    decode: &DecodeConfig,
    model_out: &Path,
    fst_out: Option<&Path>,
) -> Result<TrainStats> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(NGramError::Order(order).into());
    }
    let corpus = load_aligned_corpus(aligned)?;
    let counts = count_ngrams(&corpus, order);
    let model = estimate_modified_kneser_ney(&counts, &estimate_discounts(&counts))?;
    write_file(model_out, |w| write_model(w, &model))?;
    let fst = build_transducer(&model, decode)?;
    if let Some(path) = fst_out {
        write_file(path, |w| write_transducer(w, &fst))?;
    }
    Ok(TrainStats {
        entries: model.num_entries(),
        perplexity: perplexity(&model, &corpus),
        states: fst.num_states(),
        arcs: fst.num_arcs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApplyStats {
    pub utterances: usize,
    /// Utterances copied through unchanged because no path accepted them.
    pub fallbacks: usize,
}

/// Decodes a transcript file and writes `id rank cost tokens` rows.
pub fn apply_stage(fst: &Path, input: &Path, cfg: &DecodeConfig, out: &Path) -> Result<ApplyStats> {
    let fst = load_transducer(fst)?;
    let utterances = load_transcripts(input)?;
    let outcome = apply_corpus(&fst, &utterances, cfg)?;
    write_file(out, |w| write_decode_results(w, &outcome.results))?;
    Ok(ApplyStats {
        utterances: utterances.len(),
        fallbacks: outcome.failures,
    })
}

/// Hypotheses from either a transcript file (`id text`) or decode output
/// (`id rank cost tokens`, rank-1 rows kept).
pub fn load_hypotheses(path: &Path) -> Result<Vec<Utterance>> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Io(origin.clone(), e))?;
    let is_decode = text
        .lines()
        .next()
        .is_some_and(|l| l.split('\t').count() == 4);
    if !is_decode {
        return Ok(read_transcripts(text.as_bytes(), &origin)?);
    }
    let results = read_decode_results(text.as_bytes(), &origin).map_err(|e| match e {
        TransducerError::Format { origin, line, message } => CorpusError::Parse { origin, line, message },
        other => CorpusError::Parse {
            origin: origin.clone(),
            line: 0,
            message: other.to_string(),
        },
    })?;
    Ok(results
        .into_iter()
        .map(|r| Utterance {
            id: r.id,
            tokens: r.candidates.into_iter().next().map(|c| c.tokens).unwrap_or_default(),
        })
        .collect())
}

/// Scores a hypothesis file against a reference transcript file.
pub fn eval_stage(hyps: &Path, refs: &Path, reference_wer: Option<f64>) -> Result<WerReport> {
    let hyps = load_hypotheses(hyps)?;
    let refs = load_transcripts(refs)?;
    let report = score_transcripts(&hyps, &refs)?;
    Ok(match reference_wer {
        Some(r) => report.with_reference_wer(r)?,
        None => report,
    })
}

// ---------------------------------------------------------------- config

/// Everything the one-shot experiment needs. Paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub work_dir: PathBuf,
    /// Clean transcripts; generated when absent.
    pub references: Option<PathBuf>,
    /// Corruption rules; the built-in set when absent.
    pub rules: Option<PathBuf>,
    pub reference_count: usize,
    pub reference_seed: u64,
    pub rule_share: f64,
    /// Leading references used for training; the rest are held out.
    pub train_count: usize,
    pub synth: SynthParams,
    /// One trained variant per entry.
    pub nbest_train: Vec<usize>,
    pub nbest_weighting: NBestWeighting,
    pub alignment: AlignmentConfig,
    pub order: usize,
    pub decode: DecodeConfig,
    pub reference_wer: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            work_dir: PathBuf::from("t2t-work"),
            references: None,
            rules: None,
            reference_count: 5500,
            reference_seed: 42,
            rule_share: 0.4,
            train_count: 5000,
            synth: SynthParams::default(),
            nbest_train: vec![1, 25],
            nbest_weighting: NBestWeighting::Uniform,
            alignment: AlignmentConfig::default(),
            order: DEFAULT_ORDER,
            decode: DecodeConfig::default(),
            reference_wer: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value `{value}` for `{key}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("bad value `{value}` for `{key}`, expected true or false")),
    }
}

fn parse_optional(key: &str, value: &str) -> std::result::Result<Option<f64>, String> {
    match value {
        "none" | "off" => Ok(None),
        _ => parse_value(key, value).map(Some),
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "work_dir",
        "references",
        "rules",
        "reference_count",
        "reference_seed",
        "rule_share",
        "train_count",
        "seed",
        "word_deletion_prob",
        "nbest_size",
        "alternative_temperature",
        "nbest_train",
        "nbest_weighting",
        "max_x",
        "max_y",
        "allow_source_deletion",
        "allow_target_insertion",
        "em_iterations",
        "convergence_epsilon",
        "order",
        "decode_nbest",
        "beam",
        "passthrough_penalty",
        "reference_wer",
    ];

    /// Sets one key. Path values are joined onto `base` unless absolute.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "work_dir" => self.work_dir = base.join(value),
            "references" => self.references = Some(base.join(value)),
            "rules" => self.rules = Some(base.join(value)),
            "reference_count" => self.reference_count = parse_value(key, value)?,
            "reference_seed" => self.reference_seed = parse_value(key, value)?,
            "rule_share" => self.rule_share = parse_value(key, value)?,
            "train_count" => self.train_count = parse_value(key, value)?,
            "seed" => self.synth.seed = parse_value(key, value)?,
            "word_deletion_prob" => self.synth.word_deletion_prob = parse_value(key, value)?,
            "nbest_size" => self.synth.nbest_size = parse_value(key, value)?,
            "alternative_temperature" => self.synth.alternative_temperature = parse_value(key, value)?,
            "nbest_train" => {
                self.nbest_train = value
                    .split(',')
                    .map(|v| parse_value(key, v.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "nbest_weighting" => {
                self.nbest_weighting = match value.split_once(':') {
                    None if value == "uniform" => NBestWeighting::Uniform,
                    Some(("decay", d)) => NBestWeighting::RankDecay(parse_value(key, d)?),
                    _ => return Err(format!("bad value `{value}` for `{key}`, expected uniform or decay:<r>")),
                }
            }
            "max_x" => self.alignment.max_x = parse_value(key, value)?,
            "max_y" => self.alignment.max_y = parse_value(key, value)?,
            "allow_source_deletion" => self.alignment.allow_source_deletion = parse_bool(key, value)?,
            "allow_target_insertion" => self.alignment.allow_target_insertion = parse_bool(key, value)?,
            "em_iterations" => self.alignment.max_iterations = parse_value(key, value)?,
            "convergence_epsilon" => self.alignment.convergence_epsilon = parse_value(key, value)?,
            "order" => self.order = parse_value(key, value)?,
            "decode_nbest" => self.decode.nbest = parse_value(key, value)?,
            "beam" => self.decode.beam = parse_optional(key, value)?,
            "passthrough_penalty" => self.decode.passthrough_penalty = parse_optional(key, value)?,
            "reference_wer" => self.reference_wer = parse_optional(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses `key = value` (or `key: value`) lines over the defaults. Blank
    /// lines and lines starting with `#` are ignored.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| PipelineError::ConfigParse {
                origin: origin.to_string(),
                line: i + 1,
                message,
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let split = line
                .find(['=', ':'])
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (line[..split].trim(), &line[split + 1..]);
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value, base).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let origin = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| CorpusError::Io(origin.clone(), e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        PipelineConfig::parse(&text, &origin, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nbest_train.is_empty() || self.nbest_train.contains(&0) {
            return Err(PipelineError::Config("nbest_train needs positive sizes".into()));
        }
        if self.references.is_none() && self.train_count >= self.reference_count {
            return Err(PipelineError::Config(format!(
                "train_count {} leaves no held-out references out of {}",
                self.train_count, self.reference_count
            )));
        }
        if !(0.0..=1.0).contains(&self.rule_share) {
            return Err(PipelineError::Config("rule_share must lie in [0, 1]".into()));
        }
        if let NBestWeighting::RankDecay(d) = self.nbest_weighting {
            if !(d > 0.0 && d <= 1.0) {
                return Err(PipelineError::Config("rank decay must lie in (0, 1]".into()));
            }
        }
        if let Some(r) = self.reference_wer {
            if !(r > 0.0) {
                return Err(PipelineError::Config("reference_wer must be positive".into()));
            }
        }
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(NGramError::Order(self.order).into());
        }
        self.alignment.validate()?;
        self.decode.validate()?;
        Ok(())
    }
}

// ---------------------------------------------------------------- driver

/// Files of one trained variant, all under `work_dir/nbest<N>/`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantFiles {
    pub dir: PathBuf,
    pub aligned: PathBuf,
    pub alignment_model: PathBuf,
    pub model: PathBuf,
    pub fst: PathBuf,
    pub corrected: PathBuf,
}

impl VariantFiles {
    pub fn new(work_dir: &Path, nbest_train: usize) -> Self {
        let dir = work_dir.join(format!("nbest{nbest_train}"));
        VariantFiles {
            aligned: dir.join("aligned.tsv"),
            alignment_model: dir.join("alignment.model"),
            model: dir.join("model.arpa"),
            fst: dir.join("mapping.fst"),
            corrected: dir.join("corrected.tsv"),
            dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub nbest_train: usize,
    pub files: VariantFiles,
    pub align: AlignStats,
    pub train: TrainStats,
    pub apply: ApplyStats,
    pub report: WerReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub raw: WerReport,
    pub variants: Vec<VariantSummary>,
    pub train_refs: PathBuf,
    pub test_refs: PathBuf,
    pub test_hyps: PathBuf,
}

impl PipelineSummary {
    /// `system wer nwer reduction` rows: the raw hypotheses, then one row per
    /// variant with its relative reduction over raw in percent.
    pub fn write_table<W: Write>(&self, mut out: W) -> io::Result<()> {
        let nwer = |r: &WerReport| r.nwer.map_or("-".to_string(), |n| format!("{n:.4}"));
        writeln!(out, "system\twer\tnwer\treduction")?;
        writeln!(out, "raw\t{:.4}\t{}\t-", self.raw.wer, nwer(&self.raw))?;
        for v in &self.variants {
            let reduction = relative_reduction(self.raw.wer, v.report.wer)
                .map_or("-".to_string(), |r| format!("{r:.1}%"));
            writeln!(
                out,
                "{}-best\t{:.4}\t{}\t{}",
                v.nbest_train,
                v.report.wer,
                nwer(&v.report),
                reduction
            )?;
        }
        Ok(())
    }
}

/// Synthesizes, splits, then aligns, trains, applies and scores one variant
/// per `nbest_train` entry, leaving every intermediate file in `work_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    let work = &cfg.work_dir;
    let refs_path = match &cfg.references {
        Some(path) => path.clone(),
        None => {
            let rules = match &cfg.rules {
                Some(path) => load_rules(path)?,
                None => default_rules(),
            };
            let refs = generate_references(cfg.reference_count, &rules, cfg.rule_share, cfg.reference_seed);
            let path = work.join("references.tsv");
            write_file(&path, |w| write_transcripts(w, &refs))?;
            path
        }
    };
    let (pairs_path, nbest_path) = synth_stage(&refs_path, cfg.rules.as_deref(), &cfg.synth, &work.join("synth"))?;

    let refs = load_transcripts(&refs_path)?;
    if cfg.train_count == 0 || cfg.train_count >= refs.len() {
        return Err(PipelineError::Config(format!(
            "train_count {} must lie between 1 and {} references",
            cfg.train_count,
            refs.len() - 1
        )));
    }
    let (train_refs, test_refs) = refs.split_at(cfg.train_count);
    let test_ids: HashSet<&str> = test_refs.iter().map(|u| u.id.as_str()).collect();
    let pairs = load_paired_corpus(&pairs_path)?;
    let lists = load_nbest_corpus(&nbest_path)?;
    let test_hyps: Vec<Utterance> = pairs
        .into_iter()
        .filter(|p| test_ids.contains(p.id.as_str()))
        .map(|p| Utterance {
            id: p.id,
            tokens: p.hypothesis,
        })
        .collect();
    let train_lists: Vec<_> = lists
        .into_iter()
        .filter(|l| !test_ids.contains(l.id.as_str()))
        .collect();

    let train_refs_path = work.join("train.refs.tsv");
    let test_refs_path = work.join("test.refs.tsv");
    let test_hyps_path = work.join("test.hyps.tsv");
    let train_nbest_path = work.join("train.nbest.tsv");
    write_file(&train_refs_path, |w| write_transcripts(w, train_refs))?;
    write_file(&test_refs_path, |w| write_transcripts(w, test_refs))?;
    write_file(&test_hyps_path, |w| write_transcripts(w, &test_hyps))?;
    write_file(&train_nbest_path, |w| write_nbest(w, &train_lists))?;

    let raw = eval_stage(&test_hyps_path, &test_refs_path, cfg.reference_wer)?;
    info!("raw WER {:.4}", raw.wer);

    let mut variants = Vec::new();
    for &n in &cfg.nbest_train {
        let files = VariantFiles::new(work, n);
        let input = AlignInput::NBest {
            nbest: train_nbest_path.clone(),
            refs: train_refs_path.clone(),
            n,
            weighting: cfg.nbest_weighting,
        };
        let align = align_stage(&input, &cfg.alignment, &files.aligned, Some(&files.alignment_model))?;
        info!("{n}-best: aligned {} of {} pairs", align.aligned, align.pairs);
        let train = train_stage(&files.aligned, cfg.order, &cfg.decode, &files.model, Some(&files.fst))?;
        info!("{n}-best: {} n-grams, {} states, {} arcs", train.entries, train.states, train.arcs);
        let apply = apply_stage(&files.fst, &test_hyps_path, &cfg.decode, &files.corrected)?;
        let report = eval_stage(&files.corrected, &test_refs_path, cfg.reference_wer)?;
        info!("{n}-best: corrected WER {:.4}", report.wer);
        variants.push(VariantSummary {
            nbest_train: n,
            files,
            align,
            train,
            apply,
            report,
        });
    }
    let summary = PipelineSummary {
        raw,
        variants,
        train_refs: train_refs_path,
        test_refs: test_refs_path,
        test_hyps: test_hyps_path,
    };
    write_file(&work.join("summary.tsv"), |w| summary.write_table(w))?;
    Ok(summary)
}
