//! Batch command-line front end with reproducible seeding and stable
//! JSONL file formats.
//!
//! Every structured output line is valid JSON carrying a schema version
//! field `"v"`. Line-oriented commands derive an effective per-line seed
//! as `mix_seed(seed, line_index)` (one splitmix64 step), so results are
//! byte-identical at any `--parallel` degree; draws within a line use
//! `mix_seed(line_seed, draw_index)`.
//!
//! Exit codes: 0 success, 2 input or format error, 3 infeasible request,
//! 4 scorer transport failure.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::adversarial::{
    adversarial_accuracy, load_dataset, AttackConfig, AttackInit, ProtoScorer, Scorer, ToyScorer,
};
use crate::enumerate::{count_tokenisations, enumerate_all, enumerate_all_unbounded};
use crate::metrics::{
    empirical_histogram, span_match_distance, split_count_polynomials, token_edit_distance,
    tv_distance,
};
use crate::samplers::{Sampler, SamplerSpec, Scheme};
use crate::vocab::{
    decode, encode_canonical, escape_bytes, pretoken_chunks, TokenSeq, Vocabulary,
};
use crate::{mix_seed, Error, Result};

const SCHEMA_VERSION: u64 = 1;
const SEED_ENV: &str = "STOKTOK_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "stoktok",
    about = "Stochastic tokenisation toolkit: canonical and stochastic BPE, \
             exact counting and uniform sampling of tokenisations, split \
             statistics, and greedy adversarial tokenisation search"
)]
struct Cli {
    /// Path to vocab.json (token string -> id, bytes escaped as \xNN)
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,

    /// Path to merges.txt ("LEFT RIGHT" per line, priority = line order)
    #[arg(long, global = true)]
    merges: Option<PathBuf>,

    /// Input file (default: stdin)
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output file (default: stdout)
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Base seed for stochastic commands (fallback: STOKTOK_SEED)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for line-parallel commands
    #[arg(long, global = true)]
    parallel: Option<usize>,

    /// Split input at whitespace-run boundaries before encoding
    #[arg(long, global = true)]
    pretokenise: bool,

    /// Flat key=value config file mirroring the flags; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct SamplerArgs {
    /// canonical | stochastok | stochastok-uni | uniform-k | uniform | bpe-dropout
    #[arg(long)]
    scheme: Option<String>,

    /// Expansion proportion (target splits per canonical token)
    #[arg(long)]
    alpha: Option<f64>,

    /// Edit distance for uniform-k (defaults to ceil(alpha * m))
    #[arg(long)]
    k: Option<usize>,

    /// Merge-application dropout probability for bpe-dropout
    #[arg(long = "p-drop")]
    p_drop: Option<f64>,

    /// Cap on stochastok split iterations
    #[arg(long = "k-max")]
    k_max: Option<usize>,

    /// all-segmentations | merge-reachable
    #[arg(long = "tree-mode")]
    tree_mode: Option<String>,

    /// Split-map arity: 2 | 2&3
    #[arg(long)]
    arity: Option<String>,

    /// Redraw instead of consuming an iteration on unsplittable tokens
    #[arg(long)]
    retry: bool,
}

impl SamplerArgs {
    /// Builds the spec from config-file keys overlaid with flags.
    fn resolve(&self, config: &BTreeMap<String, String>) -> Result<SamplerSpec> {
        let mut kv: BTreeMap<String, String> = config
            .iter()
            .filter(|(k, _)| {
                matches!(
                    k.as_str(),
                    "scheme" | "alpha" | "k" | "p_drop" | "k_max" | "tree_mode" | "arity" | "retry"
                )
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if let Some(s) = &self.scheme {
            kv.insert("scheme".into(), s.clone());
        }
        if let Some(a) = self.alpha {
            kv.insert("alpha".into(), a.to_string());
        }
        if let Some(k) = self.k {
            kv.insert("k".into(), k.to_string());
        }
        if let Some(p) = self.p_drop {
            kv.insert("p_drop".into(), p.to_string());
        }
        if let Some(k) = self.k_max {
            kv.insert("k_max".into(), k.to_string());
        }
        if let Some(t) = &self.tree_mode {
            kv.insert("tree_mode".into(), t.clone());
        }
        if let Some(a) = &self.arity {
            kv.insert("arity".into(), a.clone());
        }
        if self.retry {
            kv.insert("retry".into(), "true".into());
        }
        if !kv.contains_key("scheme") {
            return Err(Error::Config("missing --scheme".into()));
        }
        SamplerSpec::from_kv(&kv)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical-encode each input line to token ids
    Encode,
    /// Decode {"ids": [...]} records back to text lines
    Decode {
        /// Emit {"v", "text"} records instead of raw text
        #[arg(long)]
        json: bool,
    },
    /// Draw stochastic tokenisations of each input line
    Sample {
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Tokenisations to draw per line
        #[arg(long, default_value_t = 1)]
        draws: u64,
    },
    /// Count the valid tokenisations of each input line
    Count,
    /// Exhaustively enumerate the valid tokenisations of each line
    Enumerate {
        /// Cap on emitted tokenisations per line
        #[arg(long)]
        limit: Option<usize>,
        /// Override the input-length guard
        #[arg(long)]
        allow_large: bool,
    },
    /// Token edit distance between {"a": [ids], "b": [ids]} records
    Distance,
    /// Per-token split-count polynomials and conditionals for each line
    Splitdist {
        /// Total split count to condition on
        #[arg(long)]
        k: Option<usize>,
        /// Emit CSV (token,s,count) instead of JSON
        #[arg(long)]
        csv: bool,
    },
    /// Empirical tokenisation histogram per input line
    Histogram {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value_t = 1000)]
        draws: u64,
        /// JSON file mapping outcome key -> probability; adds a TV report
        #[arg(long = "ref-pmf")]
        ref_pmf: Option<PathBuf>,
        /// Emit CSV (outcome,count,probability) instead of JSON
        #[arg(long)]
        csv: bool,
    },
    /// Greedy adversarial tokenisation attack over an MCQ dataset
    Attack {
        /// JSONL file of {"question", "options", "label"} instances
        #[arg(long)]
        dataset: PathBuf,
        /// toy:constant | toy:length-penalty | toy:hash-ngram | proto:<cmd-or-addr>
        #[arg(long)]
        scorer: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        /// canonical | uniform-random
        #[arg(long, default_value = "canonical")]
        init: String,
    },
    /// Serve a toy scorer over the line-delimited stdio protocol
    ScorerServe {
        /// constant | length-penalty | hash-ngram
        #[arg(long)]
        kind: String,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (also for --help/--version).
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GuardExceeded { .. }
        | Error::NoPathOfLength { .. }
        | Error::EmptyDistanceLayer { .. } => 3,
        Error::Scorer(_) => 4,
        _ => 2,
    }
}

struct Ctx {
    vocab: Vocabulary,
    seed: Option<u64>,
    parallel: usize,
    pretokenise: bool,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    config: BTreeMap<String, String>,
}

impl Ctx {
    /// Seed for stochastic commands; absent seeds are an input error.
    fn seed_required(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Config("a --seed (or STOKTOK_SEED) is required for stochastic runs".into())
        })
    }

    fn read_lines(&self) -> Result<Vec<Vec<u8>>> {
        let mut raw = Vec::new();
        match &self.input {
            Some(path) => {
                std::fs::File::open(path)?.read_to_end(&mut raw)?;
            }
            None => {
                std::io::stdin().lock().read_to_end(&mut raw)?;
            }
        }
        let mut lines: Vec<Vec<u8>> = raw.split(|&b| b == b'\n').map(<[u8]>::to_vec).collect();
        if lines.last().is_some_and(Vec::is_empty) {
            lines.pop();
        }
        Ok(lines)
    }

    fn write_output(&self, bytes: &[u8]) -> Result<()> {
        match &self.output {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    /// Order-preserving line fan-out; results are identical at any
    /// parallelism degree because each line derives its own seed.
    fn for_lines<F>(&self, lines: &[Vec<u8>], f: F) -> Result<Vec<Vec<u8>>>
    where
        F: Fn(usize, &[u8]) -> Result<Vec<Vec<u8>>> + Sync,
    {
        let chunks: Vec<Vec<Vec<u8>>> = if self.parallel > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.parallel)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| {
                lines
                    .par_iter()
                    .enumerate()
                    .map(|(i, line)| f(i, line))
                    .collect::<Result<Vec<_>>>()
            })?
        } else {
            lines
                .iter()
                .enumerate()
                .map(|(i, line)| f(i, line))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(chunks.into_iter().flatten().collect())
    }
}

fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in std::fs::read_to_string(path)?.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected key=value", lineno + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn dispatch(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let from_config = |key: &str| config.get(key).cloned();

    let seed = match cli.seed {
        Some(s) => Some(s),
        None => match from_config("seed") {
            Some(v) => Some(
                v.parse()
                    .map_err(|_| Error::Config(format!("bad seed {v:?} in config")))?,
            ),
            None => match std::env::var(SEED_ENV) {
                Ok(v) => Some(
                    v.parse()
                        .map_err(|_| Error::Config(format!("bad {SEED_ENV} value {v:?}")))?,
                ),
                Err(_) => None,
            },
        },
    };
    let parallel = match cli.parallel {
        Some(p) => p.max(1),
        None => from_config("parallel")
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad parallel {v:?} in config")))
            })
            .transpose()?
            .unwrap_or(1)
            .max(1),
    };
    let pretokenise = cli.pretokenise
        || from_config("pretokenise")
            .map(|v| {
                v.parse::<bool>()
                    .map_err(|_| Error::Config(format!("bad pretokenise {v:?} in config")))
            })
            .transpose()?
            .unwrap_or(false);

    let vocab_path = cli.vocab.or_else(|| from_config("vocab").map(PathBuf::from));
    let merges_path = cli.merges.or_else(|| from_config("merges").map(PathBuf::from));

    // scorer-serve is the one command that does not need a vocabulary.
    if let Command::ScorerServe { kind } = &cli.command {
        return scorer_serve(kind, seed.unwrap_or(0));
    }

    let (vocab_path, merges_path) = match (vocab_path, merges_path) {
        (Some(v), Some(m)) => (v, m),
        _ => return Err(Error::Config("--vocab and --merges are required".into())),
    };
    let vocab = Vocabulary::load(&vocab_path, &merges_path)?;

    let ctx = Ctx {
        vocab,
        seed,
        parallel,
        pretokenise,
        input: cli.input.or_else(|| from_config("input").map(PathBuf::from)),
        output: cli.output.or_else(|| from_config("output").map(PathBuf::from)),
        config,
    };

    match cli.command {
        Command::Encode => cmd_encode(&ctx),
        Command::Decode { json } => cmd_decode(&ctx, json),
        Command::Sample { sampler, draws } => cmd_sample(&ctx, &sampler, draws),
        Command::Count => cmd_count(&ctx),
        Command::Enumerate { limit, allow_large } => cmd_enumerate(&ctx, limit, allow_large),
        Command::Distance => cmd_distance(&ctx),
        Command::Splitdist { k, csv } => cmd_splitdist(&ctx, k, csv),
        Command::Histogram { sampler, draws, ref_pmf, csv } => {
            cmd_histogram(&ctx, &sampler, draws, ref_pmf.as_deref(), csv)
        }
        Command::Attack { dataset, scorer, steps, radius, init } => {
            cmd_attack(&ctx, &dataset, &scorer, steps, radius, &init)
        }
        Command::ScorerServe { .. } => unreachable!("handled above"),
    }
}

fn json_line(value: serde_json::Value) -> Vec<u8> {
    let mut line = serde_json::to_string(&value).expect("serialisable value");
    line.push('\n');
    line.into_bytes()
}

fn cmd_encode(ctx: &Ctx) -> Result<()> {
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |_i, line| {
        let seq = encode_canonical(line, &ctx.vocab, ctx.pretokenise);
        let tokens: Vec<String> = seq
            .ids()
            .iter()
            .map(|&id| escape_bytes(ctx.vocab.bytes_of(id).expect("own encoding")))
            .collect();
        Ok(vec![json_line(json!({
            "v": SCHEMA_VERSION,
            "ids": seq.ids(),
            "tokens": tokens,
        }))])
    })?;
    ctx.write_output(&out.concat())
}

fn cmd_decode(ctx: &Ctx, as_json: bool) -> Result<()> {
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |_i, line| {
        #[derive(serde::Deserialize)]
        struct IdRecord {
            ids: Vec<crate::TokenId>,
        }
        let record: IdRecord = serde_json::from_slice(line)?;
        let seq = TokenSeq::from_ids(&record.ids, &ctx.vocab)?;
        let text = decode(&seq, &ctx.vocab)?;
        if as_json {
            Ok(vec![json_line(json!({
                "v": SCHEMA_VERSION,
                "text": escape_bytes(&text),
            }))])
        } else {
            let mut raw = text;
            raw.push(b'\n');
            Ok(vec![raw])
        }
    })?;
    ctx.write_output(&out.concat())
}

fn cmd_sample(ctx: &Ctx, args: &SamplerArgs, draws: u64) -> Result<()> {
    let spec = args.resolve(&ctx.config)?;
    let seed = if spec.scheme == Scheme::Canonical {
        ctx.seed.unwrap_or(0)
    } else {
        ctx.seed_required()?
    };
    let lines = ctx.read_lines()?;

    let sample_line = |sampler: &mut Sampler, i: usize, line: &[u8]| -> Result<Vec<Vec<u8>>> {
        let line_seed = mix_seed(seed, i as u64);
        let mut out = Vec::with_capacity(draws as usize);
        for j in 0..draws {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(line_seed, j));
            let drawn = sampler.sample(line, ctx.pretokenise, &mut rng)?;
            let mut record = json!({
                "v": SCHEMA_VERSION,
                "ids": drawn.seq.ids(),
                "splits": drawn.meta.splits,
                "alpha_realised": drawn.meta.alpha_realised,
                "scheme": drawn.meta.scheme.as_str(),
            });
            let map = record.as_object_mut().expect("object record");
            if let Some(k) = drawn.meta.realised_k {
                map.insert("k_realised".into(), json!(k));
            }
            if drawn.meta.adjusted {
                map.insert("adjusted".into(), json!(true));
            }
            out.push(json_line(record));
        }
        Ok(out)
    };

    let out = if ctx.parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.parallel)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let chunks: Vec<Vec<Vec<u8>>> = pool.install(|| {
            lines
                .par_iter()
                .enumerate()
                .map_init(
                    || Sampler::new(&ctx.vocab, spec.clone()),
                    |sampler, (i, line)| match sampler {
                        Ok(s) => sample_line(s, i, line),
                        Err(e) => Err(Error::Config(format!("sampler: {e}"))),
                    },
                )
                .collect::<Result<Vec<_>>>()
        })?;
        chunks.into_iter().flatten().collect::<Vec<_>>()
    } else {
        let mut sampler = Sampler::new(&ctx.vocab, spec)?;
        let mut out = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            out.extend(sample_line(&mut sampler, i, line)?);
        }
        out
    };
    ctx.write_output(&out.concat())
}

fn cmd_count(ctx: &Ctx) -> Result<()> {
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |_i, line| {
        let count = if ctx.pretokenise {
            // Chunks are independent, so the boundary-respecting count is
            // the product over chunks.
            pretoken_chunks(line)
                .into_iter()
                .map(|(s, e)| count_tokenisations(&line[s..e], &ctx.vocab))
                .product::<num_bigint::BigUint>()
        } else {
            count_tokenisations(line, &ctx.vocab)
        };
        Ok(vec![json_line(json!({
            "v": SCHEMA_VERSION,
            "count": count.to_string(),
        }))])
    })?;
    ctx.write_output(&out.concat())
}

fn cmd_enumerate(ctx: &Ctx, limit: Option<usize>, allow_large: bool) -> Result<()> {
    let limit = limit.unwrap_or(usize::MAX);
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |_i, line| {
        let seqs = if allow_large {
            enumerate_all_unbounded(line, &ctx.vocab, limit)
        } else {
            enumerate_all(line, &ctx.vocab, limit)?
        };
        Ok(seqs
            .iter()
            .map(|seq| {
                json_line(json!({
                    "v": SCHEMA_VERSION,
                    "ids": seq.ids(),
                }))
            })
            .collect())
    })?;
    ctx.write_output(&out.concat())
}

fn cmd_distance(ctx: &Ctx) -> Result<()> {
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |_i, line| {
        #[derive(serde::Deserialize)]
        struct Pair {
            a: Vec<crate::TokenId>,
            b: Vec<crate::TokenId>,
        }
        let pair: Pair = serde_json::from_slice(line)?;
        let a = TokenSeq::from_ids(&pair.a, &ctx.vocab)?;
        let b = TokenSeq::from_ids(&pair.b, &ctx.vocab)?;
        let dp = token_edit_distance(&a, &b, &ctx.vocab)?;
        let span = span_match_distance(&a, &b, &ctx.vocab)?;
        Ok(vec![json_line(json!({
            "v": SCHEMA_VERSION,
            "dp": dp,
            "span": span,
        }))])
    })?;
    ctx.write_output(&out.concat())
}

fn cmd_splitdist(ctx: &Ctx, k: Option<usize>, csv: bool) -> Result<()> {
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |_i, line| {
        let canonical = encode_canonical(line, &ctx.vocab, ctx.pretokenise);
        let dist = split_count_polynomials(&canonical, &ctx.vocab)?;
        if csv {
            let mut block = String::from("token,s,count\n");
            for i in 0..dist.num_tokens() {
                for (s, c) in dist.token_poly(i).iter().enumerate() {
                    block.push_str(&format!("{i},{s},{c}\n"));
                }
            }
            return Ok(vec![block.into_bytes()]);
        }
        let g: Vec<String> = dist.g().iter().map(|c| c.to_string()).collect();
        let per_token: Vec<Vec<String>> = (0..dist.num_tokens())
            .map(|i| dist.token_poly(i).iter().map(|c| c.to_string()).collect())
            .collect();
        let mut record = json!({
            "v": SCHEMA_VERSION,
            "g": g,
            "per_token": per_token,
            "total": dist.total().to_string(),
        });
        if let Some(k) = k {
            let conditionals: Option<Vec<Vec<f64>>> = (0..dist.num_tokens())
                .map(|i| {
                    dist.conditional_pmf(i, k).map(|pmf| {
                        pmf.iter()
                            .map(|r| num_traits::ToPrimitive::to_f64(r).unwrap_or(0.0))
                            .collect()
                    })
                })
                .collect();
            let map = record.as_object_mut().expect("object record");
            map.insert("k".into(), json!(k));
            match conditionals {
                Some(c) => map.insert("conditionals".into(), json!(c)),
                None => map.insert("conditionals".into(), serde_json::Value::Null),
            };
        }
        Ok(vec![json_line(record)])
    })?;
    ctx.write_output(&out.concat())
}

fn cmd_histogram(
    ctx: &Ctx,
    args: &SamplerArgs,
    draws: u64,
    ref_pmf: Option<&Path>,
    csv: bool,
) -> Result<()> {
    let spec = args.resolve(&ctx.config)?;
    let seed = if spec.scheme == Scheme::Canonical {
        ctx.seed.unwrap_or(0)
    } else {
        ctx.seed_required()?
    };
    let reference: Option<BTreeMap<String, f64>> = match ref_pmf {
        Some(path) => Some(serde_json::from_reader(std::fs::File::open(path)?)?),
        None => None,
    };
    let lines = ctx.read_lines()?;
    let out = ctx.for_lines(&lines, |i, line| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let hist = empirical_histogram(&spec, line, &ctx.vocab, draws, ctx.pretokenise, &mut rng)?;
        if csv {
            return Ok(vec![hist.to_csv().into_bytes()]);
        }
        let mut record = json!({
            "v": SCHEMA_VERSION,
            "total": hist.total(),
            "bins": hist.bins(),
        });
        if let Some(reference) = &reference {
            let map = record.as_object_mut().expect("object record");
            map.insert("tv".into(), json!(tv_distance(&hist, reference)));
        }
        Ok(vec![json_line(record)])
    })?;
    ctx.write_output(&out.concat())
}

fn parse_scorer(spec: &str, seed: u64) -> Result<Box<dyn Scorer>> {
    match spec.split_once(':') {
        Some(("toy", kind)) => Ok(Box::new(ToyScorer::from_kind(kind, seed)?)),
        Some(("proto", target)) => {
            let looks_like_addr = !target.contains(char::is_whitespace)
                && target.rsplit_once(':').is_some_and(|(_, port)| {
                    !port.is_empty() && port.bytes().all(|b| b.is_ascii_digit())
                });
            if looks_like_addr {
                Ok(Box::new(ProtoScorer::tcp(target)?))
            } else {
                Ok(Box::new(ProtoScorer::subprocess(target)?))
            }
        }
        _ => Err(Error::Config(format!(
            "scorer must be toy:<kind> or proto:<cmd-or-addr>, got {spec:?}"
        ))),
    }
}

fn cmd_attack(
    ctx: &Ctx,
    dataset_path: &Path,
    scorer_spec: &str,
    steps: usize,
    radius: usize,
    init: &str,
) -> Result<()> {
    let dataset = load_dataset(dataset_path)?;
    let seed = ctx.seed.unwrap_or(0);
    let scorer = parse_scorer(scorer_spec, seed)?;
    let cfg = AttackConfig {
        max_steps: steps,
        radius,
        init: match init {
            "canonical" => AttackInit::Canonical,
            "uniform-random" => AttackInit::UniformRandom,
            other => return Err(Error::Config(format!("unknown init {other:?}"))),
        },
        seed,
    };
    let report = adversarial_accuracy(scorer.as_ref(), &dataset, &cfg, &ctx.vocab)?;

    let mut out = Vec::new();
    for (n, result) in report.results.iter().enumerate() {
        out.push(json_line(json!({
            "v": SCHEMA_VERSION,
            "index": n,
            "final_ids": result.final_seq.ids(),
            "margins": result.margins,
            "iterations": result.iterations,
            "success": result.success,
            "distance_from_start": result.distance_from_start,
            "distance_from_canonical": result.distance_from_canonical,
            "clean_correct": report.clean_correct[n],
        })));
    }
    out.push(json_line(json!({
        "v": SCHEMA_VERSION,
        "clean_accuracy": report.clean_accuracy,
        "adversarial_accuracy": report.adversarial_accuracy,
        "instances": dataset.len(),
    })));
    ctx.write_output(&out.concat())
}

/// Serves a toy scorer over stdin/stdout using the wire protocol, for
/// plugging external processes into `--scorer proto:<cmd>`.
fn scorer_serve(kind: &str, seed: u64) -> Result<()> {
    let scorer = ToyScorer::from_kind(kind, seed)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in std::io::BufRead::lines(stdin.lock()) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        #[derive(serde::Deserialize)]
        struct Request {
            context: Vec<crate::TokenId>,
            continuation: Vec<crate::TokenId>,
        }
        let request: Request = serde_json::from_str(&line)?;
        let logprob = scorer.score(&request.context, &request.continuation)?;
        writeln!(out, "{}", json!({ "logprob": logprob }))?;
        out.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_seed_spreads_line_indices() {
        let a = mix_seed(42, 0);
        let b = mix_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, mix_seed(42, 0));
    }

    #[test]
    fn scorer_spec_parsing() {
        assert!(parse_scorer("toy:constant", 0).is_ok());
        assert!(parse_scorer("toy:length-penalty", 0).is_ok());
        assert!(parse_scorer("toy:hash-ngram", 7).is_ok());
        assert!(parse_scorer("toy:bogus", 0).is_err());
        assert!(parse_scorer("bogus", 0).is_err());
        // A TCP target that nothing listens on is a transport error.
        assert!(matches!(
            parse_scorer("proto:127.0.0.1:1", 0),
            Err(Error::Scorer(_))
        ));
    }

    #[test]
    fn config_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg");
        std::fs::write(&path, "# comment\nseed = 9\nscheme=uniform\n").unwrap();
        let map = load_config(&path).unwrap();
        assert_eq!(map["seed"], "9");
        assert_eq!(map["scheme"], "uniform");
        std::fs::write(&path, "nonsense\n").unwrap();
        assert!(load_config(&path).is_err());
    }
}
