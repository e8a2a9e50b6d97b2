mod error;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ordsel::catalog::{Catalog, QuerySpec, QueryTree};
use ordsel::extsort::{self, DatasetSpec, KeyType, Record, SortMetrics, SortSpec, Value};
use ordsel::optimizer::{cost_plan, Explain, OrderSource, Optimizer, PlanNode, RefineBenefit, RefineOptions};
use ordsel::error::SortError;
use ordsel::order::SortOrder;
use ordsel::prefix::{self, InstanceFile};
use ordsel::{Cost, Params};

use error::{CliError, Kind};

#[derive(Parser)]
#[command(name = "ordsel", version, about = "Sort-order selection and partial-sort-aware external sorting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Choose a plan and its sort orders for a query.
    Optimize(OptimizeArgs),
    /// Recompute the cost of a plan produced by `optimize`.
    CostPlan(CostPlanArgs),
    /// Solve a common prefix instance.
    SolvePrefix(SolvePrefixArgs),
    /// Sort a CSV file, optionally exploiting a sorted key prefix.
    Sort(SortArgs),
    /// Compare both sort algorithms on generated data.
    Bench(BenchArgs),
    /// Write a generated dataset as CSV.
    Gen(GenArgs),
}

#[derive(Args)]
struct CostOverrides {
    #[arg(long)]
    memory_blocks: Option<f64>,
    #[arg(long)]
    block_size: Option<f64>,
    #[arg(long)]
    cpu_unit: Option<f64>,
}

impl CostOverrides {
    fn apply(&self, catalog: &mut Catalog) -> Result<(), CliError> {
        if let Some(m) = self.memory_blocks {
            catalog.memory_blocks = m;
        }
        if let Some(b) = self.block_size {
            catalog.block_size = b;
        }
        if let Some(c) = self.cpu_unit {
            catalog.cpu_unit = Some(c);
        }
        catalog.cost_params().validate().map_err(CliError::validation)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Benefit {
    Cost,
    Identity,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Run phase-2 refinement (default).
    #[arg(long, overrides_with = "no_refine")]
    refine: bool,
    #[arg(long)]
    no_refine: bool,
    /// Also refine the suffixes of group-by orders.
    #[arg(long)]
    refine_groupby: bool,
    /// Benefit function used by refinement.
    #[arg(long, value_enum, default_value = "cost")]
    benefit: Benefit,
    /// Include favorable and interesting orders per node.
    #[arg(long)]
    explain: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write the plan as Graphviz to this file.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[command(flatten)]
    costs: CostOverrides,
}

#[derive(Args)]
struct CostPlanArgs {
    /// Output of `optimize --format json`, or a bare plan.
    #[arg(long)]
    plan: PathBuf,
    /// Catalog whose cost parameters apply; defaults are used without it.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[command(flatten)]
    costs: CostOverrides,
}

#[derive(Args)]
struct SolvePrefixArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Also run the exhaustive solver and report its benefit.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SortArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Typed key columns, e.g. `a:int,b:str`.
    #[arg(long)]
    key: String,
    /// Key columns in output order; defaults to the order given in --key.
    #[arg(long, value_delimiter = ',')]
    target_order: Option<Vec<String>>,
    /// Number of leading target columns the input is already sorted on.
    #[arg(long, default_value_t = 0)]
    known_prefix: usize,
    #[arg(long, default_value_t = 4096)]
    memory_records: usize,
    #[arg(long, default_value_t = 64)]
    memory_blocks: usize,
    #[arg(long, default_value_t = 4096)]
    block_size: usize,
    /// Directory for spill files.
    #[arg(long)]
    spill_dir: Option<PathBuf>,
    /// Sorted CSV destination; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Segment counts to try.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    segments: Vec<u64>,
    #[arg(long, default_value_t = 65536)]
    rows: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4096)]
    memory_records: usize,
    #[arg(long, default_value_t = 64)]
    memory_blocks: usize,
    #[arg(long, default_value_t = 4096)]
    block_size: usize,
    #[arg(long, default_value_t = 16)]
    payload_bytes: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    rows: u64,
    #[arg(long, default_value_t = 1)]
    segments: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    payload_bytes: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ORDSEL_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError {
                kind: Kind::Usage,
                message: e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_owned(),
                path: None,
            };
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.kind.exit_code() as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.kind.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Optimize(a) => optimize(a),
        Command::CostPlan(a) => cost_plan_cmd(a),
        Command::SolvePrefix(a) => solve_prefix(a),
        Command::Sort(a) => sort(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
    }
}

/// Standard output or a created file.
fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    let stdout = Path::new("<stdout>");
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path.unwrap_or(stdout), e))
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct OptimizeOutput {
    cost: Cost,
    /// Cost before refinement.
    initial_cost: Cost,
    refined: bool,
    plan: PlanNode,
    #[serde(skip_serializing_if = "Option::is_none")]
    explain: Option<Explain>,
}

fn optimize(a: OptimizeArgs) -> Result<(), CliError> {
    let mut catalog = Catalog::load(&a.catalog)?;
    a.costs.apply(&mut catalog).map_err(|e| e.at(&a.catalog))?;
    let query = QuerySpec::load(&a.query)?;
    let tree = QueryTree::build(&query, &catalog).map_err(|e| CliError::from(e).at(&a.query))?;
    let params = catalog.cost_params();
    let mut opt = Optimizer::new(&tree, params, OrderSource::Afm);
    let initial = opt.optimize()?;
    let refine = !a.no_refine;
    let plan = if refine {
        let benefit = match a.benefit {
            Benefit::Cost => RefineBenefit::Cost,
            Benefit::Identity => RefineBenefit::Identity,
        };
        opt.refine(
            &initial,
            RefineOptions {
                benefit,
                group_by: a.refine_groupby,
            },
        )?
    } else {
        initial.clone()
    };
    log::info!("phase 1 cost {}, final cost {}", initial.cost.total, plan.cost.total);
    if let Some(dot) = &a.dot {
        fs::write(dot, plan.to_dot()).map_err(|e| CliError::io(dot, e))?;
    }
    let explain = a.explain.then(|| opt.explain());
    let text = match a.format {
        Format::Json => to_json_line(&OptimizeOutput {
            cost: plan.cost,
            initial_cost: initial.cost,
            refined: refine,
            plan,
            explain,
        }),
        Format::Text => {
            let mut s = format!("cost {:.3} (phase 1 {:.3})\n", plan.cost.total, initial.cost.total);
            s.push_str(&plan.to_text());
            if let Some(ex) = explain {
                s.push_str(&explain_text(&ex));
            }
            s
        }
    };
    write_all(None, &text)
}

fn explain_text(ex: &Explain) -> String {
    let list = |v: &[SortOrder]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
    let mut s = String::from("\nfavorable orders:\n");
    for n in &ex.nodes {
        s.push_str(&format!("  [{}] {}: afm {{{}}}\n", n.id, n.label, list(&n.afm)));
        for i in &n.interesting {
            s.push_str(&format!("      I(o = {}) = {{{}}}\n", i.required, list(&i.orders)));
        }
    }
    s
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PlanFile {
    Wrapped { plan: PlanNode },
    Bare(PlanNode),
}

#[derive(Serialize)]
struct CostPlanOutput {
    cost: Cost,
}

fn cost_plan_cmd(a: CostPlanArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.plan).map_err(|e| CliError::io(&a.plan, e))?;
    let file: PlanFile = serde_json::from_str(&text).map_err(|e| CliError::validation(e.to_string()).at(&a.plan))?;
    let plan = match file {
        PlanFile::Wrapped { plan } | PlanFile::Bare(plan) => plan,
    };
    let params = match &a.catalog {
        Some(path) => {
            let mut catalog = Catalog::load(path)?;
            a.costs.apply(&mut catalog).map_err(|e| e.at(path))?;
            catalog.cost_params()
        }
        None => {
            let mut p = Params::default();
            if let Some(m) = a.costs.memory_blocks {
                p.memory_blocks = m;
            }
            if let Some(b) = a.costs.block_size {
                p.block_size = b;
            }
            if let Some(c) = a.costs.cpu_unit {
                p.cpu_unit = c;
            }
            p.validate().map_err(CliError::validation)?;
            p
        }
    };
    write_all(None, &to_json_line(&CostPlanOutput { cost: cost_plan(&plan, &params) }))
}

#[derive(Serialize)]
struct SolveOutput {
    algorithm: &'static str,
    benefit: f64,
    permutations: Vec<SortOrder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_benefit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_permutations: Option<Vec<SortOrder>>,
}

fn solve_prefix(a: SolvePrefixArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.instance).map_err(|e| CliError::io(&a.instance, e))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| CliError::validation(e.to_string()).at(&a.instance))?;
    let path_shaped = file.is_index_path();
    let inst = file.into_instance().map_err(|e| CliError::from(e).at(&a.instance))?;
    let (algorithm, sol) = if path_shaped {
        ("path", prefix::solve_path(&inst)?)
    } else {
        ("tree_half_approx", prefix::solve_tree_half_approx(&inst)?)
    };
    let oracle = if a.oracle { Some(prefix::brute_force(&inst)?) } else { None };
    let out = SolveOutput {
        algorithm,
        benefit: sol.benefit,
        permutations: sol.perms,
        oracle_benefit: oracle.as_ref().map(|o| o.benefit),
        oracle_permutations: oracle.map(|o| o.perms),
    };
    write_all(None, &to_json_line(&out))
}

/// Column index and type for each key column, in target order.
fn key_columns(a: &SortArgs, header: &csv::StringRecord) -> Result<Vec<(usize, KeyType)>, CliError> {
    let mut declared = Vec::new();
    for part in a.key.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, ty) = part
            .split_once(':')
            .ok_or_else(|| CliError::validation(format!("key column `{part}` must be name:type")))?;
        let ty: KeyType = ty.parse().map_err(CliError::validation)?;
        declared.push((name.to_owned(), ty));
    }
    let order: Vec<String> = match &a.target_order {
        Some(t) => t.clone(),
        None => declared.iter().map(|(n, _)| n.clone()).collect(),
    };
    if order.is_empty() {
        return Err(CliError::validation("at least one key column is required"));
    }
    order
        .iter()
        .map(|name| {
            let ty = declared
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| CliError::validation(format!("target column `{name}` has no type in --key")))?;
            let idx = header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::validation(format!("column `{name}` not in CSV header")))?;
            Ok((idx, ty))
        })
        .collect()
}

fn to_record(row: &csv::StringRecord, cols: &[(usize, KeyType)], line: u64) -> Result<Record, CliError> {
    let mut key = Vec::with_capacity(cols.len());
    for &(idx, ty) in cols {
        let field = row
            .get(idx)
            .ok_or_else(|| CliError::validation(format!("row {line}: missing column {idx}")))?;
        key.push(ty.parse_value(field).map_err(|m| CliError::validation(format!("row {line}: {m}")))?);
    }
    let fields: Vec<&str> = row.iter().collect();
    let payload = serde_json::to_vec(&fields).expect("fields serialize");
    Ok(Record::new(key, payload))
}

#[derive(Serialize)]
struct SortReport<'a> {
    algorithm: &'static str,
    spec: &'a SortSpec,
    metrics: &'a SortMetrics,
}

fn sort(a: SortArgs) -> Result<(), CliError> {
    let input = File::open(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let mut reader = csv::Reader::from_reader(io::BufReader::new(input));
    let header = reader.headers().map_err(|e| CliError::from(e).at(&a.input))?.clone();
    let cols = key_columns(&a, &header)?;
    let spec = SortSpec {
        key_len: cols.len(),
        known_prefix: a.known_prefix,
        memory_records: a.memory_records,
        memory_blocks: a.memory_blocks,
        block_size: a.block_size,
        spill_dir: a.spill_dir.clone(),
    };
    let mut writer = csv::Writer::from_writer(open_output(a.output.as_deref())?);
    writer.write_record(&header)?;

    let mut failure: Option<CliError> = None;
    let records = reader.records().enumerate().map_while(|(i, row)| {
        let line = i as u64 + 2;
        let rec = row
            .map_err(|e| CliError::from(e).at(&a.input))
            .and_then(|row| to_record(&row, &cols, line).map_err(|e| e.at(&a.input)));
        match rec {
            Ok(r) => Some(r),
            Err(e) => {
                failure = Some(e);
                None
            }
        }
    });
    let sink = |rec: Record| -> Result<(), SortError> {
        let fields: Vec<String> = serde_json::from_slice(&rec.payload).expect("payload holds CSV fields");
        writer.write_record(&fields).map_err(|e| io::Error::other(e).into())
    };
    let (algorithm, result) = if a.known_prefix > 0 {
        ("mrs", extsort::sort_mrs(records, &spec, sink))
    } else {
        ("srs", extsort::sort_srs(records, &spec, sink))
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let metrics = result.map_err(|e| match e {
        SortError::InputNotSorted { .. } | SortError::KeyArity { .. } => CliError::from(e).at(&a.input),
        other => other.into(),
    })?;
    let out_path = a.output.clone().unwrap_or_else(|| "<stdout>".into());
    writer.flush().map_err(|e| CliError::io(&out_path, e))?;
    if let Some(path) = &a.metrics_out {
        let report = SortReport {
            algorithm,
            spec: &spec,
            metrics: &metrics,
        };
        fs::write(path, to_json_line(&report)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    if a.segments.contains(&0) {
        return Err(CliError::validation("segment counts must be positive"));
    }
    let spec = SortSpec {
        memory_blocks: a.memory_blocks,
        block_size: a.block_size,
        ..SortSpec::new(2, 1, a.memory_records)
    };
    let mut writer = csv::Writer::from_writer(open_output(a.output.as_deref())?);
    for &segments in &a.segments {
        let data = DatasetSpec {
            payload_bytes: a.payload_bytes,
            ..DatasetSpec::new(a.rows, segments, a.seed)
        };
        let report = extsort::compare_sorts(&data, &spec)?;
        if !report.consistent {
            return Err(CliError::validation(format!(
                "sort outputs disagree for {segments} segments"
            )));
        }
        log::info!(
            "{segments} segments: comparisons mrs/srs = {:.3}",
            report.mrs.comparisons as f64 / report.srs.comparisons.max(1) as f64
        );
        for row in &report.rows {
            writer.serialize(row)?;
        }
    }
    let out_path = a.output.clone().unwrap_or_else(|| "<stdout>".into());
    writer.flush().map_err(|e| CliError::io(&out_path, e))
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    if a.segments == 0 {
        return Err(CliError::validation("segments must be positive"));
    }
    let data = DatasetSpec {
        payload_bytes: a.payload_bytes,
        ..DatasetSpec::new(a.rows, a.segments, a.seed)
    };
    let mut writer = csv::Writer::from_writer(open_output(a.output.as_deref())?);
    writer.write_record(["c1", "c2", "c3"])?;
    for rec in extsort::generate(&data) {
        let field = |v: &Value| v.to_string();
        let payload = String::from_utf8(rec.payload).expect("generated payload is ASCII");
        writer.write_record([field(&rec.key[0]), field(&rec.key[1]), payload])?;
    }
    let out_path = a.output.clone().unwrap_or_else(|| "<stdout>".into());
    writer.flush().map_err(|e| CliError::io(&out_path, e))
}
