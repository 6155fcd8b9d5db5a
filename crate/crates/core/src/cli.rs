//! Command-line front end. Every subcommand wraps one library operation;
//! results go to standard output, diagnostics to standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::aiger::{parse_aiger, validate, ParseMode, Simulator};
use crate::check::{brute_force_check, check_with, count_satisfied_subspecs_with, BruteBounds, CheckConfig, CheckError, Verdict};
use crate::corrupt::{corrupt_circuit, CorruptionParams};
use crate::encoding::Vocab;
use crate::ltl::{parse_ltl, Specification};
use crate::metrics::{bin_report, circuit_distance, levenshtein_chars, report_csv, BinKey, BinRecord, SampleStatus};
use crate::model::{load_checkpoint, save_checkpoint, train_params, ModelConfig, ModelParams, TrainConfig};
use crate::pipeline::toy::toy_corpus;
use crate::pipeline::{
    evaluate, generate_dataset, read_dataset, repair_iterative, to_train_sample, write_dataset, GenConfig, RepairSample,
    TransformerRepairer,
};
use crate::rng::seeded;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Input = 2,
    Violated = 3,
    SyntaxError = 4,
    ResourceCap = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "circrepair", version, about = "Check, corrupt and repair AIGER circuits against LTL specifications")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Product-state limit of the model checker.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    max_states: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// LTL utilities.
    #[command(subcommand)]
    Ltl(LtlCommand),
    /// AIGER utilities.
    #[command(subcommand)]
    Aiger(AigerCommand),
    /// Model-check a circuit against a specification.
    Check(CheckArgs),
    /// Count satisfied sub-specifications.
    Subspecs(SpecCircuit),
    /// Edit distance between two circuits (or strings with --chars).
    Distance(DistanceArgs),
    /// Inject random errors into a circuit.
    Corrupt(CorruptArgs),
    /// Repair dataset tools.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train a repair model.
    Train(TrainArgs),
    /// Iteratively repair one circuit.
    Repair(RepairArgs),
    /// Evaluate a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Bin per-sample evaluation records into a CSV table.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
enum LtlCommand {
    /// Parse a formula and print it fully parenthesized.
    Parse { formula: String },
}

#[derive(Debug, Subcommand)]
enum AigerCommand {
    /// Report structural defects.
    Validate {
        circuit: PathBuf,
        #[arg(long)]
        lenient: bool,
    },
    /// Run the circuit on input vectors such as `01,11,00`.
    Simulate { circuit: PathBuf, inputs: String },
}

#[derive(Debug, Args)]
struct SpecCircuit {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    circuit: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    files: SpecCircuit,
    /// Use the lasso-enumeration oracle instead of the automaton checker.
    #[arg(long)]
    brute: bool,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    a: String,
    b: String,
    /// Compare the arguments as plain strings, character by character.
    #[arg(long)]
    chars: bool,
}

#[derive(Debug, Args)]
struct CorruptArgs {
    circuit: PathBuf,
    #[arg(long, default_value_t = 7.5)]
    sigma_changes: f64,
    #[arg(long, default_value_t = 50)]
    max_changes: u32,
    #[arg(long, default_value_t = 10.0)]
    sigma_var: f64,
    #[arg(long, default_value_t = 0.2)]
    p_delete: f64,
    #[arg(long, default_value_t = 0)]
    var_lo: u32,
    #[arg(long, default_value_t = 61)]
    var_hi: u32,
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Generate repair samples from correct pairs.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of synthetic toy pairs used as the correct corpus.
    #[arg(long, default_value_t = 200)]
    toy: usize,
    /// Dataset file whose targets serve as the correct corpus instead.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Dataset file of mispredicted circuits with their targets.
    #[arg(long)]
    mispredictions: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    draws: usize,
    #[arg(long, default_value_t = 0.61)]
    mix: f64,
    #[arg(long, default_value_t = 50)]
    max_lev: usize,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Default,
    Small,
    Micro,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Shape::Small)]
    shape: Shape,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 4000)]
    warmup: usize,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args)]
struct RepairArgs {
    /// Longest decoded circuit, in tokens.
    #[arg(long, default_value_t = 128)]
    max_len: usize,
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    files: SpecCircuit,
    #[arg(long, default_value_t = 2)]
    iters: usize,
    #[arg(long, default_value_t = 4)]
    beam: usize,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Longest decoded circuit, in tokens.
    #[arg(long, default_value_t = 128)]
    max_len: usize,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    iters: usize,
    #[arg(long, default_value_t = 4)]
    beam: usize,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Write per-sample records (for `report`) to this file.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    records: PathBuf,
    #[arg(long, default_value = "lev_distance")]
    key: String,
    #[arg(long, default_value_t = 5)]
    width: usize,
}

struct Failure(ExitStatus, String);

type Outcome = Result<ExitStatus, Failure>;

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure(ExitStatus::Input, e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<Specification, Failure> {
    Specification::parse(&read(path)?).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<Vec<RepairSample>, Failure> {
    let file = std::fs::File::open(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    read_dataset(std::io::BufReader::new(file)).map_err(input_err)
}

fn check_failure(e: CheckError) -> Failure {
    let status = if e.is_cap() { ExitStatus::ResourceCap } else { ExitStatus::Input };
    Failure(status, e.to_string())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return ExitStatus::Usage;
            }
            let _ = write!(out, "{e}");
            return ExitStatus::Success;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(s) => s,
        Err(Failure(status, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            status
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure(ExitStatus::Input, e.to_string()))
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let structured = cli.format == Format::Structured;
    let config = CheckConfig { max_product_states: cli.max_states, ..Default::default() };
    match &cli.command {
        Command::Ltl(LtlCommand::Parse { formula }) => {
            let f = parse_ltl(formula, None).map_err(input_err)?;
            let st = f.stats();
            if structured {
                emit(out, &format!("{}\n", json!({"formula": f.to_string(), "size": st.size, "depth": st.depth})))?;
            } else {
                emit(out, &format!("{f}\nsize {} depth {}\n", st.size, st.depth))?;
            }
            Ok(ExitStatus::Success)
        }
        Command::Aiger(AigerCommand::Validate { circuit, lenient }) => {
            let mode = if *lenient { ParseMode::Lenient } else { ParseMode::Strict };
            let c = match parse_aiger(&read(circuit)?, mode) {
                Ok(c) => c,
                Err(e) => {
                    emit(out, &format!("INVALID\n{e}\n"))?;
                    return Ok(ExitStatus::SyntaxError);
                }
            };
            let report = validate(&c);
            if structured {
                let defects: Vec<String> = report.defects.iter().map(|d| d.to_string()).collect();
                emit(out, &format!("{}\n", json!({"valid": report.valid_strict, "defects": defects})))?;
            } else if report.valid_strict {
                emit(out, "VALID\n")?;
            } else {
                emit(out, "INVALID\n")?;
                for d in &report.defects {
                    emit(out, &format!("{d}\n"))?;
                }
            }
            Ok(if report.valid_strict { ExitStatus::Success } else { ExitStatus::SyntaxError })
        }
        Command::Aiger(AigerCommand::Simulate { circuit, inputs }) => {
            let c = parse_aiger(&read(circuit)?, ParseMode::Strict).map_err(input_err)?;
            let sim = Simulator::new(&c).map_err(|e| Failure(ExitStatus::SyntaxError, e.to_string()))?;
            let mut steps = Vec::new();
            for word in inputs.split(',').filter(|w| !w.is_empty()) {
                let bits: Vec<bool> = word.chars().map(|ch| ch == '1').collect();
                if bits.len() != sim.num_inputs() || word.chars().any(|ch| ch != '0' && ch != '1') {
                    return Err(input_err(format!("input vector {word:?} needs {} bits", sim.num_inputs())));
                }
                steps.push(bits);
            }
            let rows: Vec<String> =
                sim.run(&steps).iter().map(|o| o.iter().map(|&b| if b { '1' } else { '0' }).collect()).collect();
            if structured {
                emit(out, &format!("{}\n", json!({"outputs": rows})))?;
            } else {
                emit(out, &format!("{}\n", rows.join("\n")))?;
            }
            Ok(ExitStatus::Success)
        }
        Command::Check(args) => {
            let spec = load_spec(&args.files.spec)?;
            let text = read(&args.files.circuit)?;
            let verdict = match parse_aiger(&text, ParseMode::Lenient) {
                Err(e) => {
                    emit(out, &format!("SYNTAX_ERROR\n{e}\n"))?;
                    return Ok(ExitStatus::SyntaxError);
                }
                Ok(c) if args.brute => {
                    brute_force_check(&c, &spec, &spec.to_formula(), &BruteBounds::default()).map_err(check_failure)?
                }
                Ok(c) => check_with(&c, &spec, &config).map_err(check_failure)?,
            };
            if structured {
                let witness = match &verdict {
                    Verdict::Violated(cex) => serde_json::to_value(&cex.trace).unwrap_or_default(),
                    _ => serde_json::Value::Null,
                };
                emit(out, &format!("{}\n", json!({"verdict": format!("{:?}", verdict.kind()), "witness": witness})))?;
            } else {
                emit(out, &format!("{verdict}\n"))?;
            }
            Ok(match verdict {
                Verdict::Violated(_) => ExitStatus::Violated,
                Verdict::SyntaxError(_) => ExitStatus::SyntaxError,
                _ => ExitStatus::Success,
            })
        }
        Command::Subspecs(files) => {
            let spec = load_spec(&files.spec)?;
            let c = parse_aiger(&read(&files.circuit)?, ParseMode::Lenient).map_err(input_err)?;
            let k = count_satisfied_subspecs_with(&c, &spec, &config).map_err(check_failure)?;
            let m = spec.guarantees.len();
            if structured {
                emit(out, &format!("{}\n", json!({"satisfied": k, "total": m})))?;
            } else {
                emit(out, &format!("{k}/{m}\n"))?;
            }
            Ok(ExitStatus::Success)
        }
        Command::Distance(args) => {
            let d = if args.chars {
                levenshtein_chars(&args.a, &args.b)
            } else {
                let a = parse_aiger(&read(Path::new(&args.a))?, ParseMode::Lenient).map_err(input_err)?;
                let b = parse_aiger(&read(Path::new(&args.b))?, ParseMode::Lenient).map_err(input_err)?;
                circuit_distance(&a, &b)
            };
            if structured {
                emit(out, &format!("{}\n", json!({"distance": d})))?;
            } else {
                emit(out, &format!("{d}\n"))?;
            }
            Ok(ExitStatus::Success)
        }
        Command::Corrupt(a) => {
            let params = CorruptionParams {
                sigma_changes: a.sigma_changes,
                max_changes: a.max_changes,
                sigma_var: a.sigma_var,
                p_delete: a.p_delete,
                var_lo: a.var_lo,
                var_hi: a.var_hi,
            };
            params.validate().map_err(|e| Failure(ExitStatus::Usage, e.to_string()))?;
            let c = parse_aiger(&read(&a.circuit)?, ParseMode::Lenient).map_err(input_err)?;
            let bad = corrupt_circuit(&c, &params, &mut seeded(cli.seed)).map_err(input_err)?;
            emit(out, &bad.serialize(false))?;
            Ok(ExitStatus::Success)
        }
        Command::Dataset(DatasetCommand::Gen(a)) => {
            let corpus = match &a.corpus {
                Some(path) => load_dataset(path)?
                    .into_iter()
                    .map(|s| parse_aiger(&s.target, ParseMode::Lenient).map(|c| (s.spec, c)).map_err(input_err))
                    .collect::<Result<Vec<_>, _>>()?,
                None => toy_corpus(a.toy, cli.seed),
            };
            let mispredictions = match &a.mispredictions {
                Some(path) => load_dataset(path)?.into_iter().map(|s| (s.spec, s.faulty, s.target)).collect(),
                None => Vec::new(),
            };
            let gen = GenConfig {
                draws_per_pair: a.draws,
                mix_corrupted: if a.mispredictions.is_some() { a.mix } else { 1.0 },
                max_lev: a.max_lev,
                seed: cli.seed,
                check: config,
                jobs: a.jobs,
                ..Default::default()
            };
            let data = generate_dataset(&corpus, &mispredictions, &gen, None).map_err(input_err)?;
            let _ = writeln!(err, "{} samples", data.len());
            match &a.out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(input_err)?;
                    write_dataset(&data, std::io::BufWriter::new(file)).map_err(input_err)?;
                }
                None => write_dataset(&data, out).map_err(input_err)?,
            }
            Ok(ExitStatus::Success)
        }
        Command::Train(a) => {
            let vocab = Vocab::standard();
            let data = load_dataset(&a.data)?;
            let samples = data.iter().map(|s| to_train_sample(s, &vocab)).collect::<Result<Vec<_>, _>>().map_err(input_err)?;
            let mut config = match a.shape {
                Shape::Default => ModelConfig::default(),
                Shape::Small => ModelConfig::small(),
                Shape::Micro => ModelConfig::micro(),
            };
            if let Some(p) = a.dropout {
                config.dropout = p;
            }
            let tc = TrainConfig { steps: a.steps, batch_size: a.batch, warmup: a.warmup, seed: cli.seed, ..Default::default() };
            let mut params = ModelParams::<f32>::init(&config, cli.seed).map_err(|e| Failure(ExitStatus::Usage, e.to_string()))?;
            let report = train_params(&mut params, &tc, &samples, |step, loss, _| {
                let _ = writeln!(err, "step {step} loss {loss:.5}");
                true
            })
            .map_err(input_err)?;
            save_checkpoint(&params, &vocab, &a.out).map_err(input_err)?;
            if structured {
                emit(out, &format!("{}\n", json!({"losses": report.losses})))?;
            } else {
                for (i, l) in report.losses.iter().enumerate() {
                    emit(out, &format!("{},{l:.6}\n", i + 1))?;
                }
            }
            Ok(ExitStatus::Success)
        }
        Command::Repair(a) => {
            let (params, vocab) = load_checkpoint::<f32>(&a.checkpoint).map_err(input_err)?;
            let spec = load_spec(&a.files.spec)?;
            let circuit = read(&a.files.circuit)?;
            let model = TransformerRepairer { params: &params, vocab: &vocab, max_len: a.max_len };
            let trace = repair_iterative(&model, &spec, &circuit, None, a.iters, a.beam, &config);
            if structured {
                emit(out, &format!("{}\n", serde_json::to_string(&trace).map_err(input_err)?))?;
            } else {
                for r in &trace.iterations {
                    emit(out, &format!("iteration {} {}\n{}", r.index, r.status, r.best))?;
                }
            }
            Ok(match trace.status {
                s if s.is_correct() => ExitStatus::Success,
                SampleStatus::SyntaxError => ExitStatus::SyntaxError,
                _ => ExitStatus::Violated,
            })
        }
        Command::Evaluate(a) => {
            let (params, vocab) = load_checkpoint::<f32>(&a.checkpoint).map_err(input_err)?;
            let data = load_dataset(&a.data)?;
            let model = TransformerRepairer { params: &params, vocab: &vocab, max_len: a.max_len };
            let report = evaluate(&model, &data, a.iters, a.beam, &config, a.jobs);
            if let Some(path) = &a.records {
                let mut text = String::new();
                for r in &report.records {
                    text.push_str(&format!(
                        "{}\n",
                        json!({"status": r.status.name(), "lev_distance": r.lev_distance, "spec_ast_size": r.spec_ast_size, "target_size": r.target_size})
                    ));
                }
                std::fs::write(path, text).map_err(input_err)?;
            }
            if structured {
                emit(out, &format!("{}\n", serde_json::to_string(&report).map_err(input_err)?))?;
            } else {
                emit(out, &report.to_string())?;
            }
            Ok(ExitStatus::Success)
        }
        Command::Report(a) => {
            let key: BinKey = a.key.parse().map_err(|e: String| Failure(ExitStatus::Usage, e))?;
            let mut records = Vec::new();
            for (i, line) in read(&a.records)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: serde_json::Value = serde_json::from_str(line).map_err(|e| input_err(format!("line {}: {e}", i + 1)))?;
                let status = SampleStatus::ALL
                    .into_iter()
                    .find(|s| v["status"].as_str() == Some(s.name()))
                    .ok_or_else(|| input_err(format!("line {}: unknown status", i + 1)))?;
                let num = |k: &str| v[k].as_u64().map(|x| x as usize).ok_or_else(|| input_err(format!("line {}: missing {k}", i + 1)));
                records.push(BinRecord {
                    status,
                    lev_distance: num("lev_distance")?,
                    spec_ast_size: num("spec_ast_size")?,
                    target_size: num("target_size")?,
                });
            }
            emit(out, &report_csv(&bin_report(&records, key, a.width)))?;
            Ok(ExitStatus::Success)
        }
    }
}
