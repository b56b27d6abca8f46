//! `nullsql`: check, run, translate and compare queries from the shell.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 ill-formed query,
//! 3 counterexample found. Results go to stdout, diagnostics to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use nullsql::dbfile::{parse_csv_table, parse_database, parse_schemas};
use nullsql::harness::{check_equiv, Equivalence, GenConfig, Side};
use nullsql::parser::{parse_query_spanned, Parsed};
use nullsql::{render, run_query, ttquery, wf_query, Context, Database, LogicKind, Name, Schema, WfError};

#[derive(Parser)]
#[command(
    name = "nullsql",
    version,
    about = "Reference interpreter for SQL with NULLs under two- and three-valued logic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a query against a database's schemas and print its output schema.
    Wf {
        db: PathBuf,
        query: PathBuf,
        #[command(flatten)]
        csv: CsvTables,
    },
    /// Evaluate a query and print the result, sorted.
    Run {
        db: PathBuf,
        query: PathBuf,
        #[arg(long, value_enum, default_value = "3vl")]
        logic: Logic,
        #[command(flatten)]
        csv: CsvTables,
    },
    /// Print the two-valued translation of a three-valued query.
    Translate { query: PathBuf },
    /// Compare two queries on random databases over the given schemas.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        /// Table schemas, as a JSON object; a database file also works.
        schemas: PathBuf,
        #[arg(long, value_enum, default_value = "3vl")]
        logic1: Logic,
        #[arg(long, value_enum, default_value = "3vl")]
        logic2: Logic,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Random seed; a fresh one is chosen and printed when absent.
        #[arg(long, env = "NULLSQL_SEED")]
        seed: Option<u64>,
        /// Report the first witness as found instead of shrinking it.
        #[arg(long)]
        no_shrink: bool,
    },
}

#[derive(clap::Args)]
struct CsvTables {
    /// Add a table from CSV: `NAME=PATH`. The header row names the
    /// attributes; an unquoted NULL cell is null, a quoted one a string.
    #[arg(long = "csv", value_name = "NAME=PATH")]
    tables: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Logic {
    #[value(name = "2vl")]
    Two,
    #[value(name = "3vl")]
    Three,
}

impl From<Logic> for LogicKind {
    fn from(l: Logic) -> Self {
        match l {
            Logic::Two => LogicKind::TwoValued,
            Logic::Three => LogicKind::ThreeValued,
        }
    }
}

enum Failure {
    Input(anyhow::Error),
    IllFormed(String),
    Counterexample,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Wf { db, query, csv } => cmd_wf(&db, &query, &csv),
        Command::Run { db, query, logic, csv } => cmd_run(&db, &query, logic.into(), &csv),
        Command::Translate { query } => cmd_translate(&query),
        Command::Equiv {
            left,
            right,
            schemas,
            logic1,
            logic2,
            trials,
            seed,
            no_shrink,
        } => cmd_equiv(
            &left,
            &right,
            &schemas,
            (logic1.into(), logic2.into()),
            trials,
            seed,
            !no_shrink,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::IllFormed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Counterexample) => ExitCode::from(3),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        return std::io::read_to_string(std::io::stdin()).context("reading standard input");
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

struct QueryFile {
    path: PathBuf,
    text: String,
    parsed: Parsed,
}

fn load_query(path: &Path) -> anyhow::Result<QueryFile> {
    let text = read(path)?;
    let parsed = parse_query_spanned(&text, &Default::default())
        .map_err(|e| anyhow!("{}:{}", path.display(), e.describe(&text)))?;
    Ok(QueryFile {
        path: path.to_path_buf(),
        text,
        parsed,
    })
}

fn load_database(path: &Path, csv: &CsvTables) -> anyhow::Result<Database> {
    let mut db = parse_database(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    for entry in &csv.tables {
        let (table, file) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("--csv expects NAME=PATH, got `{entry}`"))?;
        let (schema, rel) = parse_csv_table(&read(Path::new(file))?).with_context(|| format!("loading {file}"))?;
        db.insert(Name::new(table)?, schema, rel)?;
    }
    Ok(db)
}

/// `file:line:col: error[Kind]: message`, located via the query's spans.
fn diagnostic(q: &QueryFile, e: &WfError) -> String {
    let (line, col) = q.parsed.spans.resolve(&e.path).line_col(&q.text);
    format!("{}:{line}:{col}: error[{}]: {}", q.path.display(), e.kind, e.message)
}

fn check<C: nullsql::wf::Catalog>(q: &QueryFile, catalog: &C) -> Result<Schema, Failure> {
    wf_query(&Context::empty(), catalog, &q.parsed.query).map_err(|e| Failure::IllFormed(diagnostic(q, &e)))
}

fn cmd_wf(db: &Path, query: &Path, csv: &CsvTables) -> Outcome {
    let db = load_database(db, csv)?;
    let q = load_query(query)?;
    let schema = check(&q, &db)?;
    println!("schema: {schema}");
    Ok(())
}

fn cmd_run(db: &Path, query: &Path, logic: LogicKind, csv: &CsvTables) -> Outcome {
    let db = load_database(db, csv)?;
    let q = load_query(query)?;
    check(&q, &db)?;
    let (schema, rel) = run_query(logic, &db, &q.parsed.query).map_err(|e| Failure::IllFormed(e.to_string()))?;
    let header: Vec<&str> = schema.attrs().iter().map(Name::as_str).collect();
    println!("{}", header.join("\t"));
    for t in rel.rows() {
        let cells: Vec<String> = t.iter().map(|v| v.to_string()).collect();
        println!("{}", cells.join("\t"));
    }
    Ok(())
}

fn cmd_translate(query: &Path) -> Outcome {
    let q = load_query(query)?;
    println!("{}", render(&ttquery(&q.parsed.query)));
    Ok(())
}

fn cmd_equiv(
    left: &Path,
    right: &Path,
    schemas: &Path,
    (logic1, logic2): (LogicKind, LogicKind),
    trials: usize,
    seed: Option<u64>,
    shrink: bool,
) -> Outcome {
    let schemas: BTreeMap<Name, Schema> =
        parse_schemas(&read(schemas)?).with_context(|| format!("loading {}", schemas.display()))?;
    if schemas.is_empty() {
        return Err(anyhow!("the schema file declares no tables").into());
    }
    let l = load_query(left)?;
    let r = load_query(right)?;
    let ls = check(&l, &schemas)?;
    let rs = check(&r, &schemas)?;
    if ls != rs {
        return Err(Failure::IllFormed(format!(
            "error[SchemaMismatch]: left query has schema {ls}, right query has {rs}"
        )));
    }
    let seed = seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    });
    let cfg = GenConfig {
        seed,
        trials,
        ..GenConfig::default()
    };
    let sides = (
        Side {
            query: &l.parsed.query,
            logic: logic1,
        },
        Side {
            query: &r.parsed.query,
            logic: logic2,
        },
    );
    let outcome =
        check_equiv(sides.0, sides.1, &cfg, &schemas, shrink).map_err(|e| Failure::IllFormed(e.to_string()))?;
    match outcome {
        Equivalence::Equivalent(n) => {
            println!("equivalent over {n} trials");
            Ok(())
        }
        Equivalence::Counterexample(cx) => {
            eprintln!("counterexample at trial {} (seed {})", cx.trial, cx.seed);
            println!(
                "{}",
                serde_json::to_string_pretty(&cx.to_json()).expect("JSON values serialize")
            );
            Err(Failure::Counterexample)
        }
    }
}
