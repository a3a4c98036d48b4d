//! Command-line front end for the fault-tree diagnosis toolkit.
//!
//! Exit codes: 0 success, 1 validation or scoring failures present, 2 usage
//! or input errors, 3 transport failures while talking to an endpoint.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use jfta::graph::GraphIndex;
use jfta::harness::{
    api_key_from_env, read_transcript, run_session, write_transcript, AssistantAdapter,
    EndpointAdapter, EndpointConfig, OracleAdapter, Termination,
};
use jfta::metrics::{aggregate, length_stats, score_session, to_node_edge};
use jfta::model::{parse_fault_tree, validate, FaultTree, NodeId};
use jfta::sample::{sample_path, sample_random_path, DifficultyLevel};
use jfta::scenario::{dataset_stats, emit_dataset, read_dataset, sample_subset, write_dataset};

const EXIT_FAILURES: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;

#[derive(Parser)]
#[command(name = "jfta", version, about = "Fault-tree diagnosis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check tree documents against the structural constraints.
    Validate {
        /// Tree files to check.
        trees: Vec<PathBuf>,
        /// Emit the reports as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Sample fault paths from a tree.
    Sample {
        #[arg(long)]
        tree: PathBuf,
        /// Generation seed (mandatory for reproducibility).
        #[arg(long)]
        seed: u64,
        /// Comma-separated solution ids to start from; random when omitted.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<String>,
        /// Number of paths to sample.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output file (JSON lines); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a benchmark dataset of rollback scenarios.
    GenScenarios {
        /// Tree files or directories of *.jfta / *.json files.
        #[arg(long, required = true, num_args = 1..)]
        trees: Vec<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Difficulty levels to generate.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u8, 2, 3])]
        levels: Vec<u8>,
        /// Entries per tree and level.
        #[arg(long, default_value_t = 1)]
        quota: usize,
        /// Dataset output file (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Optional machine-readable statistics output.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Run dialogue sessions over a dataset.
    RunEval(RunEvalArgs),
    /// Score transcripts into an aggregate report.
    Score {
        /// Transcript files or directories.
        #[arg(long = "in", required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Optional text report output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional machine-readable report output.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Convert a tree to the node-edge representation.
    Convert {
        #[arg(long)]
        tree: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a dataset the way the benchmark tables do.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Tree files or directories; defaults to the dataset's directory.
        #[arg(long, num_args = 0..)]
        trees: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional stratified subset size per tree and level before
        /// summarizing.
        #[arg(long)]
        subset: Option<usize>,
    },
}

#[derive(Args)]
struct RunEvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Tree files or directories; defaults to the dataset's directory.
    #[arg(long, num_args = 0..)]
    trees: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = AdapterKind::Oracle)]
    adapter: AdapterKind,
    /// Chat-completion URL for the endpoint adapter.
    #[arg(long)]
    endpoint_url: Option<String>,
    /// Model name for the endpoint adapter.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Per-call timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Additional attempts after a failed call.
    #[arg(long, default_value_t = 2)]
    retries: u32,
    #[arg(long)]
    seed: u64,
    /// Worker threads for concurrent sessions.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Directory for the transcript files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AdapterKind {
    Oracle,
    Endpoint,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { trees, json } => cmd_validate(&trees, json),
        Command::Sample {
            tree,
            seed,
            seeds,
            count,
            out,
        } => cmd_sample(&tree, seed, &seeds, count, out.as_deref()),
        Command::GenScenarios {
            trees,
            seed,
            levels,
            quota,
            out,
            stats_out,
        } => cmd_gen_scenarios(&trees, seed, &levels, quota, &out, stats_out.as_deref()),
        Command::RunEval(args) => cmd_run_eval(args),
        Command::Score {
            input,
            out,
            json_out,
        } => cmd_score(&input, out.as_deref(), json_out.as_deref()),
        Command::Convert { tree, out } => cmd_convert(&tree, out.as_deref()),
        Command::Stats {
            dataset,
            trees,
            seed,
            subset,
        } => cmd_stats(&dataset, &trees, seed, subset),
    }
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<FaultTree, Failure> {
    let text = read_to_string(path)?;
    parse_fault_tree(&text).map_err(|e| Failure {
        code: EXIT_FAILURES,
        message: format!("{}: {e}", path.display()),
    })
}

/// Collect (id, tree) pairs from files and directories, id = file stem.
fn load_trees(paths: &[PathBuf]) -> Result<Vec<(String, FaultTree)>, Failure> {
    let mut files: Vec<PathBuf> = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| Failure::usage(format!("cannot list {}: {e}", path.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("jfta") | Some("json")
                    )
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(Failure::usage("no tree files found"));
    }
    let mut trees = Vec::with_capacity(files.len());
    for file in files {
        let tree = load_tree(&file)?;
        let report = validate(&tree);
        if !report.is_valid() {
            return Err(Failure {
                code: EXIT_FAILURES,
                message: format!("{} is not a valid tree:\n{report}", file.display()),
            });
        }
        let id = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("tree")
            .to_string();
        trees.push((id, tree));
    }
    Ok(trees)
}

fn parse_levels(levels: &[u8]) -> Result<Vec<DifficultyLevel>, Failure> {
    levels
        .iter()
        .map(|&l| DifficultyLevel::try_from(l).map_err(Failure::usage))
        .collect()
}

fn cmd_validate(trees: &[PathBuf], json: bool) -> Result<u8, Failure> {
    if trees.is_empty() {
        return Err(Failure::usage("validate needs at least one tree file"));
    }
    let mut failures = false;
    for path in trees {
        let text = read_to_string(path)?;
        match parse_fault_tree(&text) {
            Ok(tree) => {
                let report = validate(&tree);
                if json {
                    println!(
                        "{}",
                        serde_json::json!({
                            "file": path.display().to_string(),
                            "violations": report,
                        })
                    );
                } else {
                    print!("{}: {report}", path.display());
                }
                failures |= !report.is_valid();
            }
            Err(e) => {
                if json {
                    println!(
                        "{}",
                        serde_json::json!({
                            "file": path.display().to_string(),
                            "parse_error": e.to_string(),
                        })
                    );
                } else {
                    println!("{}: parse error: {e}", path.display());
                }
                failures = true;
            }
        }
    }
    Ok(if failures { EXIT_FAILURES } else { 0 })
}

fn cmd_sample(
    tree_path: &Path,
    seed: u64,
    seed_ids: &[String],
    count: usize,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let tree = load_tree(tree_path)?;
    let report = validate(&tree);
    if !report.is_valid() {
        return Err(Failure {
            code: EXIT_FAILURES,
            message: format!("tree is not valid:\n{report}"),
        });
    }
    let index = GraphIndex::build(&tree);
    let solutions = tree.solution_ids();

    let mut lines = Vec::new();
    let mut failed = 0usize;
    for i in 0..count {
        let run_seed = seed.wrapping_add(i as u64);
        let result = if seed_ids.is_empty() {
            sample_random_path(&tree, &index, 6.min(solutions.len().max(1)), run_seed)
        } else {
            let picked: Vec<NodeId> = seed_ids.iter().map(NodeId::new).collect();
            sample_path(&tree, &index, &picked, run_seed)
        };
        match result {
            Ok(path) => lines.push(serde_json::to_string(&path).expect("path serializes")),
            Err(e) => {
                eprintln!("sample {i}: {e}");
                failed += 1;
            }
        }
    }
    write_lines(out, &lines)?;
    Ok(if failed > 0 { EXIT_FAILURES } else { 0 })
}

fn write_lines(out: Option<&Path>, lines: &[String]) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut file = BufWriter::new(fs::File::create(path).map_err(|e| {
                Failure::usage(format!("cannot create {}: {e}", path.display()))
            })?);
            for line in lines {
                writeln!(file, "{line}")
                    .map_err(|e| Failure::usage(format!("write failed: {e}")))?;
            }
            Ok(())
        }
        None => {
            for line in lines {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn cmd_gen_scenarios(
    tree_paths: &[PathBuf],
    seed: u64,
    levels: &[u8],
    quota: usize,
    out: &Path,
    stats_out: Option<&Path>,
) -> Result<u8, Failure> {
    let trees = load_trees(tree_paths)?;
    let levels = parse_levels(levels)?;
    let (entries, stats, shortfalls) = emit_dataset(&trees, &levels, quota, seed);

    let file = fs::File::create(out)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", out.display())))?;
    write_dataset(BufWriter::new(file), &entries)
        .map_err(|e| Failure::usage(format!("write failed: {e}")))?;

    println!("{stats}");
    for s in &shortfalls {
        eprintln!(
            "shortfall: tree {} level {}: produced {}/{}",
            s.tree_id, s.level, s.produced, s.requested
        );
    }
    if let Some(path) = stats_out {
        fs::write(
            path,
            serde_json::to_string_pretty(&stats).expect("stats serialize"),
        )
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if entries.is_empty() && quota > 0 {
        EXIT_FAILURES
    } else {
        0
    })
}

fn trees_or_dataset_dir(trees: &[PathBuf], dataset: &Path) -> Vec<PathBuf> {
    if trees.is_empty() {
        vec![dataset.parent().unwrap_or(Path::new(".")).to_path_buf()]
    } else {
        trees.to_vec()
    }
}

fn cmd_run_eval(args: RunEvalArgs) -> Result<u8, Failure> {
    let file = fs::File::open(&args.dataset)
        .map_err(|e| Failure::usage(format!("cannot open {}: {e}", args.dataset.display())))?;
    let entries = read_dataset(BufReader::new(file))
        .map_err(|e| Failure::usage(format!("bad dataset: {e}")))?;
    if entries.is_empty() {
        return Err(Failure::usage("dataset is empty"));
    }
    let tree_paths = trees_or_dataset_dir(&args.trees, &args.dataset);
    let trees = load_trees(&tree_paths)?;
    let by_id: BTreeMap<String, (Arc<FaultTree>, Arc<GraphIndex>)> = trees
        .into_iter()
        .map(|(id, tree)| {
            let index = Arc::new(GraphIndex::build(&tree));
            (id, (Arc::new(tree), index))
        })
        .collect();
    for entry in &entries {
        if !by_id.contains_key(&entry.tree_id) {
            return Err(Failure::usage(format!(
                "dataset references tree {:?} which was not loaded",
                entry.tree_id
            )));
        }
    }

    let adapter: Arc<dyn AssistantAdapter> = match args.adapter {
        AdapterKind::Oracle => {
            // Sessions resolve their tree per entry; the oracle adapter is
            // built per session below instead.
            Arc::new(NullAdapter)
        }
        AdapterKind::Endpoint => {
            let url = args
                .endpoint_url
                .clone()
                .ok_or_else(|| Failure::usage("--endpoint-url is required for the endpoint adapter"))?;
            let model = args
                .model
                .clone()
                .ok_or_else(|| Failure::usage("--model is required for the endpoint adapter"))?;
            let mut config = EndpointConfig::new(url, model);
            config.temperature = args.temperature;
            config.timeout = std::time::Duration::from_secs(args.timeout);
            config.retries = args.retries;
            config.api_key = api_key_from_env();
            Arc::new(EndpointAdapter::new(config).map_err(|e| Failure::usage(e.to_string()))?)
        }
    };

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", args.out.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallel.max(1))
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;

    let results: Vec<Result<(usize, Termination, bool), String>> = pool.install(|| {
        entries
            .par_iter()
            .enumerate()
            .map(|(i, entry)| {
                let (tree, index) = &by_id[&entry.tree_id];
                let session_seed = args.seed.wrapping_add(i as u64);
                let transcript = match args.adapter {
                    AdapterKind::Oracle => {
                        let oracle = OracleAdapter::new(tree.clone(), index.clone());
                        run_session(entry, tree, &oracle, session_seed)
                    }
                    AdapterKind::Endpoint => {
                        run_session(entry, tree, adapter.as_ref(), session_seed)
                    }
                };
                let transport = transcript
                    .turns
                    .iter()
                    .any(|t| t.raw_assistant.starts_with("<transport error"));
                let path = args.out.join(format!("session_{i:04}.jsonl"));
                let file = fs::File::create(&path)
                    .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
                write_transcript(BufWriter::new(file), &transcript, entry, tree)
                    .map_err(|e| format!("write failed: {e}"))?;
                Ok((i, transcript.termination, transport))
            })
            .collect()
    });

    let mut solved = 0usize;
    let mut transport_failures = 0usize;
    for result in &results {
        match result {
            Ok((_, termination, transport)) => {
                if *termination == Termination::Solved {
                    solved += 1;
                }
                if *transport {
                    transport_failures += 1;
                }
            }
            Err(message) => return Err(Failure::usage(message.clone())),
        }
    }
    println!(
        "sessions: {} solved / {} total -> {}",
        solved,
        entries.len(),
        args.out.display()
    );
    if transport_failures > 0 {
        eprintln!("{transport_failures} sessions hit transport failures");
        return Ok(EXIT_TRANSPORT);
    }
    Ok(0)
}

/// Placeholder for the oracle branch, which builds its adapter per session.
struct NullAdapter;

impl AssistantAdapter for NullAdapter {
    fn next_move(
        &self,
        _system_prompt: &str,
        _history: &[jfta::harness::ChatMessage],
    ) -> Result<String, jfta::harness::AdapterError> {
        Err(jfta::harness::AdapterError::Config(
            "no adapter configured".into(),
        ))
    }
}

fn transcript_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| Failure::usage(format!("cannot list {}: {e}", path.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("jsonl"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(Failure::usage("no transcript files found"));
    }
    Ok(files)
}

fn cmd_score(
    input: &[PathBuf],
    out: Option<&Path>,
    json_out: Option<&Path>,
) -> Result<u8, Failure> {
    let files = transcript_files(input)?;
    let mut verdicts = Vec::new();
    for file in &files {
        let reader = fs::File::open(file)
            .map_err(|e| Failure::usage(format!("cannot open {}: {e}", file.display())))?;
        let loaded = read_transcript(BufReader::new(reader))
            .map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
        let index = GraphIndex::build(&loaded.tree);
        verdicts.push(score_session(
            &loaded.transcript,
            &loaded.entry,
            &loaded.tree,
            &index,
        ));
    }
    let report = aggregate(&verdicts).map_err(|e| Failure::usage(e.to_string()))?;
    println!("{report}");
    if let Some(path) = out {
        fs::write(path, format!("{report}\n"))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = json_out {
        fs::write(
            path,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if report.total_correct < report.total_sessions {
        EXIT_FAILURES
    } else {
        0
    })
}

fn cmd_convert(tree_path: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let tree = load_tree(tree_path)?;
    let report = validate(&tree);
    if !report.is_valid() {
        return Err(Failure {
            code: EXIT_FAILURES,
            message: format!("tree is not valid:\n{report}"),
        });
    }
    let doc = to_node_edge(&tree);
    let stats = length_stats(&tree);
    match out {
        Some(path) => fs::write(path, doc.serialize())
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{}", doc.serialize()),
    }
    eprintln!(
        "jfta {} chars, node-edge {} chars, ratio {:.3}",
        stats.jfta_chars, stats.node_edge_chars, stats.ratio
    );
    Ok(0)
}

fn cmd_stats(
    dataset: &Path,
    trees: &[PathBuf],
    seed: u64,
    subset: Option<usize>,
) -> Result<u8, Failure> {
    let file = fs::File::open(dataset)
        .map_err(|e| Failure::usage(format!("cannot open {}: {e}", dataset.display())))?;
    let mut entries = read_dataset(BufReader::new(file))
        .map_err(|e| Failure::usage(format!("bad dataset: {e}")))?;
    if let Some(per_stratum) = subset {
        entries = sample_subset(&entries, per_stratum, seed);
    }
    let tree_paths = trees_or_dataset_dir(trees, dataset);
    let trees = load_trees(&tree_paths)?;
    let stats = dataset_stats(&trees, &entries, seed);
    println!("{stats}");
    Ok(0)
}
