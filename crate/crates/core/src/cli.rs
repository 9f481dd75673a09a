//! Command-line front end. Every subcommand reads JSONL, calls one library
//! operation per record and writes JSONL, TSV or JSON in input order.
//!
//! Settings resolve in order: built-in defaults, `--config` file
//! (`key=value` lines), `EDITKIT_*` environment variables, flags.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{read_hypotheses, read_pairs, read_scores, write_pairs, Hypothesis, ParallelPair};
use crate::datasetpipe::{
    attach_slots, filter_by_informality, flag_rewrites, read_candidates, read_slot_source, worklist,
    DEFAULT_INFORMALITY_THRESHOLD,
};
use crate::editalign::{align, apply_edits, tag_distribution, to_tagger_example, TaggerRecord};
use crate::error::{Error, Result};
use crate::evalharness::{build_leaderboard, significance_by_splits, EvalRecord, SystemInput};
use crate::jsonl;
use crate::slotmetric::{chrf_with, corpus_slot_scores, ChrfConfig, SlotMetricConfig, SlotScoreRecord};
use crate::template::{
    derive_slots, fill_template, make_infill_example, parse_fillers, template_from_slots,
    template_from_tags, template_union, InfillRecord, SentinelStyle, Stopwords, Template, TemplateMode,
};
use crate::textnorm::NormTables;

pub const ENV_PREFIX: &str = "EDITKIT_";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "editkit", version, about = "Edit alignment, templates and slot-aware evaluation for style rewriting")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// key=value settings file (also EDITKIT_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// chrF recall weight
    #[arg(long, global = true)]
    pub chrf_beta: Option<f64>,
    /// Longest chrF character n-gram
    #[arg(long, global = true)]
    pub chrf_max_n: Option<usize>,
    /// Approximate slot matches below this chrF count as misses
    #[arg(long, global = true)]
    pub approx_floor: Option<f64>,
    /// Gap sentinel spelling in exported training data: gap or t5
    #[arg(long, global = true)]
    pub sentinel_style: Option<String>,
    /// Place alias table (TSV) replacing the shipped one
    #[arg(long, global = true)]
    pub places_table: Option<PathBuf>,
    /// Abbreviation table (TSV) replacing the shipped one
    #[arg(long, global = true)]
    pub abbreviations_table: Option<PathBuf>,
    /// Number word table (TSV) replacing the shipped one
    #[arg(long, global = true)]
    pub numbers_table: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align formal and informal sides and export tagger examples
    Align {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build one template per pair
    MakeTemplates {
        #[arg(long)]
        pairs: PathBuf,
        /// tag, constr or constr-tag
        #[arg(long)]
        mode: String,
        /// Predicted tags to use instead of the gold alignment
        #[arg(long)]
        tags: Option<PathBuf>,
        /// Derive slots for pairs that have none
        #[arg(long)]
        derive_slots: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export infiller training examples
    MakeTrainingData {
        #[arg(long)]
        pairs: PathBuf,
        /// tag, constr or constr-tag
        #[arg(long)]
        mode: String,
        /// Derive slots for pairs that have none
        #[arg(long)]
        derive_slots: bool,
        /// Skip pairs whose template does not fit the gold rewrite
        #[arg(long)]
        skip_unmatched: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fill templates with infiller output
    Fill {
        /// `{"id", "template"}` rows
        #[arg(long)]
        templates: PathBuf,
        /// `{"id", "fillers"}` or `{"id", "target_text"}` rows
        #[arg(long)]
        fillers: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slot preservation score of every hypothesis
    ScoreSlots {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        hyps: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// chrF between two strings
    Chrf {
        #[arg(long)]
        hyp: String,
        #[arg(long = "ref")]
        reference: String,
    },
    /// Leaderboard over one or more systems
    Evaluate {
        #[arg(long)]
        pairs: PathBuf,
        /// Hypotheses of one system; repeat per system
        #[arg(long, required = true)]
        hyps: Vec<PathBuf>,
        /// Style/content/fluency scores of one system; repeat per system
        #[arg(long, required = true)]
        scores: Vec<PathBuf>,
        /// System names, default: file stem of --hyps
        #[arg(long)]
        name: Vec<String>,
        /// Leaderboard sections, default: empty
        #[arg(long)]
        section: Vec<String>,
        /// Full-precision JSON leaderboard
        #[arg(long)]
        json: Option<PathBuf>,
        /// Directory for per-sentence records, one `<name>.jsonl` per system
        #[arg(long)]
        records_dir: Option<PathBuf>,
        /// TSV leaderboard, default: stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Signed-rank test over random splits of per-sentence products
    Significance {
        /// Per-sentence records of system A
        #[arg(long)]
        a: PathBuf,
        /// Per-sentence records of system B
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 30)]
        splits: usize,
        #[arg(long, default_value_t = 900)]
        split_size: usize,
        /// Required here or in the config file or environment
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold candidates, flag rewrites and attach slots
    FilterDataset {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value_t = DEFAULT_INFORMALITY_THRESHOLD)]
        threshold: f64,
        /// Pairs with similarity below this are flagged for rewriting
        #[arg(long)]
        sim_threshold: f64,
        /// `{"id", "slots"}` rows
        #[arg(long)]
        slots: Option<PathBuf>,
        /// Finalized pairs
        #[arg(long)]
        out: PathBuf,
        /// Flagged candidates
        #[arg(long)]
        worklist: Option<PathBuf>,
        /// JSON report of ids without slots
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tag fractions of a tagger export
    Stats {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub chrf_beta: f64,
    pub chrf_max_n: usize,
    pub approx_floor: f64,
    pub sentinel_style: SentinelStyle,
    pub seed: Option<u64>,
    pub places_table: Option<PathBuf>,
    pub abbreviations_table: Option<PathBuf>,
    pub numbers_table: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let chrf = ChrfConfig::default();
        Config {
            chrf_beta: chrf.beta,
            chrf_max_n: chrf.max_n,
            approx_floor: SlotMetricConfig::default().approx_floor,
            sentinel_style: SentinelStyle::Gap,
            seed: None,
            places_table: None,
            abbreviations_table: None,
            numbers_table: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 8] = [
    "chrf_beta",
    "chrf_max_n",
    "approx_floor",
    "sentinel_style",
    "seed",
    "places_table",
    "abbreviations_table",
    "numbers_table",
];

impl Config {
    /// Defaults, then `file`, then `EDITKIT_*` variables in `env`, then `flags`.
    pub fn resolve(file: Option<&Path>, env: &BTreeMap<String, String>, flags: &GlobalArgs) -> Result<Config> {
        let mut cfg = Config::default();
        let file = file
            .map(Path::to_path_buf)
            .or_else(|| env.get("EDITKIT_CONFIG").map(PathBuf::from));
        if let Some(path) = file {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for (line, key, value) in parse_config(&text, &path)? {
                cfg.set(&key, &value).map_err(|e| Error::Parse {
                    path: path.clone(),
                    line,
                    message: e.to_string(),
                })?;
            }
        }
        for key in CONFIG_KEYS {
            if let Some(value) = env.get(&format!("{ENV_PREFIX}{}", key.to_uppercase())) {
                cfg.set(key, value)?;
            }
        }
        if let Some(v) = flags.chrf_beta {
            cfg.chrf_beta = v;
        }
        if let Some(v) = flags.chrf_max_n {
            cfg.chrf_max_n = v;
        }
        if let Some(v) = flags.approx_floor {
            cfg.approx_floor = v;
        }
        if let Some(v) = &flags.sentinel_style {
            cfg.sentinel_style = v.parse()?;
        }
        for (slot, flag) in [
            (&mut cfg.places_table, &flags.places_table),
            (&mut cfg.abbreviations_table, &flags.abbreviations_table),
            (&mut cfg.numbers_table, &flags.numbers_table),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidArgument(format!("{key} = `{value}` is not {what}"));
        match key {
            "chrf_beta" => self.chrf_beta = value.parse().map_err(|_| bad("a number"))?,
            "chrf_max_n" => self.chrf_max_n = value.parse().map_err(|_| bad("a positive integer"))?,
            "approx_floor" => self.approx_floor = value.parse().map_err(|_| bad("a number"))?,
            "sentinel_style" => self.sentinel_style = value.parse()?,
            "seed" => self.seed = Some(value.parse().map_err(|_| bad("an unsigned integer"))?),
            "places_table" => self.places_table = Some(value.into()),
            "abbreviations_table" => self.abbreviations_table = Some(value.into()),
            "numbers_table" => self.numbers_table = Some(value.into()),
            _ => return Err(Error::InvalidArgument(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chrf_beta.is_finite() && self.chrf_beta > 0.0) {
            return Err(Error::InvalidArgument(format!("chrf_beta = {} must be positive", self.chrf_beta)));
        }
        if !(1..=32).contains(&self.chrf_max_n) {
            return Err(Error::InvalidArgument(format!("chrf_max_n = {} must be in 1..=32", self.chrf_max_n)));
        }
        if !(0.0..=1.0).contains(&self.approx_floor) {
            return Err(Error::InvalidArgument(format!("approx_floor = {} must be in [0, 1]", self.approx_floor)));
        }
        Ok(())
    }

    pub fn chrf(&self) -> ChrfConfig {
        ChrfConfig {
            beta: self.chrf_beta,
            max_n: self.chrf_max_n,
        }
    }

    pub fn slot_metric(&self) -> SlotMetricConfig {
        SlotMetricConfig {
            chrf: self.chrf(),
            approx_floor: self.approx_floor,
        }
    }

    pub fn tables(&self) -> Result<NormTables> {
        NormTables::load(
            self.places_table.as_deref(),
            self.abbreviations_table.as_deref(),
            self.numbers_table.as_deref(),
        )
    }
}

/// `key=value` lines; `#` starts a comment line.
fn parse_config(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: "expected `key=value`".into(),
        })?;
        out.push((idx + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// `make-templates` output row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub id: String,
    pub template: String,
}

/// Infiller output row: explicit fillers or a sentinel-delimited target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InfillOutput {
    Fillers { id: String, fillers: Vec<String> },
    Target { id: String, target_text: String },
}

impl InfillOutput {
    pub fn id(&self) -> &str {
        match self {
            InfillOutput::Fillers { id, .. } | InfillOutput::Target { id, .. } => id,
        }
    }

    pub fn fillers(&self, gap_count: usize) -> Result<Vec<String>> {
        match self {
            InfillOutput::Fillers { fillers, .. } => Ok(fillers.clone()),
            InfillOutput::Target { target_text, .. } => parse_fillers(target_text, gap_count),
        }
    }
}

/// Per-sentence product row read by `significance`. Extra fields are ignored,
/// so `evaluate --records-dir` output can be passed in directly.
#[derive(Debug, Clone, Deserialize)]
struct ProductRecord {
    id: String,
    product: f64,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, env: &BTreeMap<String, String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_INPUT,
            };
        }
    };
    match execute(&cli, env, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

/// Variables of the current process that start with [`ENV_PREFIX`].
pub fn process_env() -> BTreeMap<String, String> {
    std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect()
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => stdout.write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn jsonl_bytes<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    jsonl::write_records(&mut buf, records).expect("writing to memory");
    buf
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s.into_bytes()
}

fn with_slots(pairs: Vec<ParallelPair>, derive: bool) -> Vec<ParallelPair> {
    if !derive {
        return pairs;
    }
    let stopwords = Stopwords::default();
    pairs
        .into_iter()
        .map(|mut p| {
            if p.slots.is_empty() {
                p.slots = derive_slots(&p, &stopwords);
            }
            p
        })
        .collect()
}

fn read_tags(path: &Path) -> Result<BTreeMap<String, TaggerRecord>> {
    let rows: Vec<(usize, TaggerRecord)> = jsonl::read_records(path)?;
    let mut map = BTreeMap::new();
    for (line, row) in rows {
        if row.example.tokens.len() != row.example.labels.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("{} tokens but {} labels", row.example.tokens.len(), row.example.labels.len()),
            });
        }
        if map.contains_key(&row.id) {
            return Err(Error::DuplicateId { id: row.id, line });
        }
        map.insert(row.id.clone(), row);
    }
    Ok(map)
}

fn build_template(
    pair: &ParallelPair,
    mode: TemplateMode,
    tags: Option<&TaggerRecord>,
    tables: &NormTables,
) -> Result<Template> {
    let gold;
    let (labels, bos) = match tags {
        Some(t) => {
            if t.example.tokens != pair.formal.texts() {
                return Err(Error::InvalidArgument(format!("tags of `{}` do not match its source tokens", pair.id)));
            }
            (&t.example.labels, t.example.bos_label)
        }
        None => {
            gold = to_tagger_example(&align(&pair.formal, &pair.informal), &pair.formal);
            (&gold.labels, gold.bos_label)
        }
    };
    match mode {
        TemplateMode::Tag => template_from_tags(&pair.formal.texts(), labels, bos),
        TemplateMode::Constr => template_from_slots(&pair.formal, &pair.slots, tables),
        TemplateMode::ConstrTag => template_union(&pair.formal, &pair.slots, labels, bos, tables),
    }
}

fn execute(cli: &Cli, env: &BTreeMap<String, String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = Config::resolve(cli.global.config.as_deref(), env, &cli.global)?;
    match &cli.command {
        Command::Align { pairs, out } => {
            let pairs = read_pairs(pairs)?;
            let mut rows = Vec::with_capacity(pairs.len());
            for p in &pairs {
                let a = align(&p.formal, &p.informal);
                if apply_edits(&p.formal, &a)? != p.informal.texts() {
                    return Err(Error::Invariant(format!("alignment of `{}` does not reproduce the target", p.id)));
                }
                rows.push(TaggerRecord {
                    id: p.id.clone(),
                    example: to_tagger_example(&a, &p.formal),
                });
            }
            emit(out.as_deref(), stdout, &jsonl_bytes(&rows))
        }
        Command::MakeTemplates {
            pairs,
            mode,
            tags,
            derive_slots,
            out,
        } => {
            let mode: TemplateMode = mode.parse()?;
            let tables = cfg.tables()?;
            let pairs = with_slots(read_pairs(pairs)?, *derive_slots);
            let tags = tags.as_deref().map(read_tags).transpose()?;
            let mut rows = Vec::with_capacity(pairs.len());
            for p in &pairs {
                let t = match &tags {
                    Some(map) => Some(
                        map.get(&p.id)
                            .ok_or_else(|| Error::MissingIds(vec![p.id.clone()]))?,
                    ),
                    None => None,
                };
                let template = build_template(p, mode, t, &tables)?;
                rows.push(TemplateRecord {
                    id: p.id.clone(),
                    template: template.to_string(),
                });
            }
            emit(out.as_deref(), stdout, &jsonl_bytes(&rows))
        }
        Command::MakeTrainingData {
            pairs,
            mode,
            derive_slots,
            skip_unmatched,
            out,
        } => {
            let mode: TemplateMode = mode.parse()?;
            let tables = cfg.tables()?;
            let pairs = with_slots(read_pairs(pairs)?, *derive_slots);
            let mut rows = Vec::with_capacity(pairs.len());
            let mut skipped = 0usize;
            for p in &pairs {
                let alignment = align(&p.formal, &p.informal);
                let example = build_template(p, mode, None, &tables)
                    .and_then(|t| make_infill_example(p, &t, &alignment, cfg.sentinel_style));
                match example {
                    Ok(ex) => rows.push(InfillRecord {
                        id: p.id.clone(),
                        input_text: ex.input_text,
                        target_text: ex.target_text,
                    }),
                    Err(Error::Template(_) | Error::SlotNotFound(_)) if *skip_unmatched => skipped += 1,
                    Err(e) => return Err(Error::InvalidArgument(format!("pair `{}`: {e}", p.id))),
                }
            }
            if skipped > 0 {
                let _ = writeln!(stderr, "skipped {skipped} of {} pairs", pairs.len());
            }
            emit(out.as_deref(), stdout, &jsonl_bytes(&rows))
        }
        Command::Fill { templates, fillers, out } => {
            let templates: Vec<(usize, TemplateRecord)> = jsonl::read_records(templates)?;
            let outputs: Vec<(usize, InfillOutput)> = jsonl::read_records(fillers)?;
            let mut by_id: BTreeMap<&str, &InfillOutput> = BTreeMap::new();
            for (line, o) in &outputs {
                if by_id.insert(o.id(), o).is_some() {
                    return Err(Error::DuplicateId {
                        id: o.id().to_string(),
                        line: *line,
                    });
                }
            }
            let missing: Vec<String> = templates
                .iter()
                .filter(|(_, t)| !by_id.contains_key(t.id.as_str()))
                .map(|(_, t)| t.id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingIds(missing));
            }
            let mut rows = Vec::with_capacity(templates.len());
            for (_, rec) in &templates {
                let template = Template::parse(&rec.template)?;
                let fillers = by_id[rec.id.as_str()].fillers(template.gap_count())?;
                rows.push(Hypothesis {
                    id: rec.id.clone(),
                    text: fill_template(&template, &fillers)?,
                });
            }
            emit(out.as_deref(), stdout, &jsonl_bytes(&rows))
        }
        Command::ScoreSlots { pairs, hyps, out } => {
            let pairs = read_pairs(pairs)?;
            let hyps = read_hypotheses(hyps)?;
            let scores = corpus_slot_scores(&pairs, &hyps, &cfg.tables()?, cfg.slot_metric())?;
            let rows: Vec<SlotScoreRecord> = pairs.iter().map(|p| SlotScoreRecord::new(&p.id, &scores[&p.id])).collect();
            emit(out.as_deref(), stdout, &jsonl_bytes(&rows))
        }
        Command::Chrf { hyp, reference } => {
            let value = chrf_with(hyp, reference, cfg.chrf())?;
            emit(None, stdout, format!("{value}\n").as_bytes())
        }
        Command::Evaluate {
            pairs,
            hyps,
            scores,
            name,
            section,
            json,
            records_dir,
            out,
        } => {
            if hyps.len() != scores.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} --hyps files but {} --scores files",
                    hyps.len(),
                    scores.len()
                )));
            }
            if !name.is_empty() && name.len() != hyps.len() {
                return Err(Error::InvalidArgument("give one --name per system or none".into()));
            }
            if !section.is_empty() && section.len() != hyps.len() {
                return Err(Error::InvalidArgument("give one --section per system or none".into()));
            }
            let names: Vec<String> = if name.is_empty() {
                hyps.iter()
                    .map(|p| p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
                    .collect()
            } else {
                name.clone()
            };
            let sections = if section.is_empty() { vec![String::new(); hyps.len()] } else { section.clone() };
            let pairs = read_pairs(pairs)?;
            let hyp_maps = hyps.iter().map(|p| read_hypotheses(p)).collect::<Result<Vec<_>>>()?;
            let score_maps = scores.iter().map(|p| read_scores(p)).collect::<Result<Vec<_>>>()?;
            let systems: Vec<SystemInput<'_>> = (0..hyps.len())
                .map(|i| SystemInput {
                    name: &names[i],
                    section: &sections[i],
                    hypotheses: &hyp_maps[i],
                    scores: &score_maps[i],
                })
                .collect();
            let (board, records) = build_leaderboard(&pairs, &systems, &cfg.tables()?, cfg.slot_metric())?;
            if let Some(path) = json {
                let mut text = board.to_json();
                text.push('\n');
                fs::write(path, text).map_err(|e| Error::io(path, e))?;
            }
            if let Some(dir) = records_dir {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                for (system, recs) in &records {
                    jsonl::write_records_to_path::<EvalRecord>(&dir.join(format!("{system}.jsonl")), recs)?;
                }
            }
            emit(out.as_deref(), stdout, board.to_tsv().as_bytes())
        }
        Command::Significance {
            a,
            b,
            splits,
            split_size,
            seed,
            out,
        } => {
            let seed = seed.or(cfg.seed).ok_or_else(|| {
                Error::InvalidArgument("significance needs a seed (--seed, EDITKIT_SEED or `seed` in the config file)".into())
            })?;
            let read = |path: &Path| -> Result<BTreeMap<String, f64>> {
                let rows: Vec<(usize, ProductRecord)> = jsonl::read_records(path)?;
                let mut map = BTreeMap::new();
                for (line, r) in rows {
                    if map.insert(r.id.clone(), r.product).is_some() {
                        return Err(Error::DuplicateId { id: r.id, line });
                    }
                }
                Ok(map)
            };
            let result = significance_by_splits(&read(a)?, &read(b)?, *splits, *split_size, seed)?;
            emit(out.as_deref(), stdout, &json_bytes(&result))
        }
        Command::FilterDataset {
            candidates,
            threshold,
            sim_threshold,
            slots,
            out,
            worklist: worklist_path,
            report,
        } => {
            let cands = read_candidates(candidates)?;
            let kept = flag_rewrites(filter_by_informality(cands, *threshold), *sim_threshold);
            if let Some(c) = kept.iter().find(|c| c.informality_increase() <= *threshold) {
                return Err(Error::Invariant(format!("`{}` passed the informality filter", c.pair.id)));
            }
            let slot_source = slots.as_deref().map(read_slot_source).transpose()?.unwrap_or_default();
            let (pairs, attach_report) = attach_slots(&kept, &slot_source);
            write_pairs(&pairs, out)?;
            if let Some(path) = worklist_path {
                jsonl::write_records_to_path(path, &worklist(&kept))?;
            }
            if let Some(path) = report {
                fs::write(path, json_bytes(&attach_report)).map_err(|e| Error::io(path, e))?;
            }
            let _ = writeln!(
                stderr,
                "kept {} pairs, {} flagged for rewriting, {} without slots",
                pairs.len(),
                kept.iter().filter(|c| c.needs_rewrite).count(),
                attach_report.missing_slot_ids.len()
            );
            Ok(())
        }
        Command::Stats { tags, out } => {
            let rows = read_tags(tags)?;
            let dist = tag_distribution(rows.values().map(|r| r.example.labels.as_slice()))?;
            let total: f64 = dist.values().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Invariant(format!("tag fractions sum to {total}")));
            }
            let named: BTreeMap<&str, f64> = dist.iter().map(|(t, f)| (t.as_str(), *f)).collect();
            emit(out.as_deref(), stdout, &json_bytes(&named))
        }
    }
}
