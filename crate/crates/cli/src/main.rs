mod render;
mod repl;

use std::io::{self, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use flexq_core::dataset::{attribute_series, load_csv, CsvOptions, Dataset};
use flexq_core::query::parse_query;
use flexq_core::session::{fit_attribute, maintain, Change, Session};
use flexq_core::KnowledgeBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "flexq", version, about = "Fuzzy membership generation and cooperative fuzzy queries")]
struct Cli {
    /// Knowledge base file.
    #[arg(long, global = true, default_value = "kb.json")]
    kb: PathBuf,
    /// Data table (CSV with a header row).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Degrees must exceed this cut to count as satisfied.
    #[arg(long, global = true, default_value_t = 0.0, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster attributes of a CSV file and store their terms in the knowledge base.
    Fit {
        csv: PathBuf,
        #[arg(required = true)]
        attributes: Vec<String>,
    },
    /// Print the trapezoid parameters of an attribute's terms.
    ShowMf { attribute: String },
    /// Add one value to an attribute and update its terms.
    #[command(allow_negative_numbers = true)]
    Insert { attribute: String, value: f64 },
    /// Remove one value from an attribute and update its terms.
    #[command(allow_negative_numbers = true)]
    Delete { attribute: String, value: f64 },
    /// Evaluate a fuzzy query against the data table.
    Query { text: String },
    /// Read queries interactively.
    Repl,
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Write the term table as CSV.
    ExportFt {
        #[arg(long, default_value = "ft.csv")]
        out: PathBuf,
    },
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&a) {
        Ok(a)
    } else {
        Err(format!("{a} is outside [0, 1)"))
    }
}

fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    KnowledgeBase::load(path).with_context(|| format!("knowledge base {}", path.display()))
}

fn load_data(path: Option<&Path>) -> Result<Dataset> {
    let Some(path) = path else {
        bail!("this command needs --data <csv>");
    };
    load_csv(path, CsvOptions::default()).with_context(|| format!("data {}", path.display()))
}

fn session(cli: &Cli) -> Result<Session> {
    Ok(Session::new(load_data(cli.data.as_deref())?, load_kb(&cli.kb)?))
}

fn emit(out: &mut impl Write, format: Format, table: impl FnOnce() -> String, json: impl FnOnce() -> String) -> Result<()> {
    match format {
        Format::Table => write!(out, "{}", table())?,
        Format::Json => writeln!(out, "{}", json())?,
    }
    Ok(())
}

fn run(cli: &Cli, out: &mut impl Write) -> Result<()> {
    match &cli.command {
        Command::Fit { csv, attributes } => {
            let ds = load_data(Some(csv))?;
            let mut kb = if cli.kb.exists() { load_kb(&cli.kb)? } else { KnowledgeBase::new() };
            let mut reports = Vec::new();
            for attr in attributes {
                let series = attribute_series(&ds, attr)?;
                reports.push(fit_attribute(&mut kb, &series).with_context(|| format!("fitting {attr}"))?);
            }
            kb.save(&cli.kb).with_context(|| format!("writing {}", cli.kb.display()))?;
            emit(
                out,
                cli.format,
                || reports.iter().map(render::fit).collect(),
                || serde_json::to_string(&reports).expect("serializable"),
            )
        }
        Command::ShowMf { attribute } => {
            let kb = load_kb(&cli.kb)?;
            let v = kb.variable(attribute)?;
            emit(
                out,
                cli.format,
                || render::membership(v),
                || {
                    serde_json::json!({"attribute": v.attribute, "domain": [v.domain.0, v.domain.1], "terms": v.terms})
                        .to_string()
                },
            )
        }
        Command::Insert { attribute, value } | Command::Delete { attribute, value } => {
            let mut kb = load_kb(&cli.kb)?;
            let data = match &cli.data {
                Some(_) => Some(attribute_series(&load_data(cli.data.as_deref())?, attribute)?),
                None => None,
            };
            let change = match cli.command {
                Command::Insert { .. } => Change::Insert(*value),
                _ => Change::Delete(*value),
            };
            let update = maintain(&mut kb, attribute, data.as_ref(), change)?;
            kb.save(&cli.kb).with_context(|| format!("writing {}", cli.kb.display()))?;
            emit(
                out,
                cli.format,
                || render::update(&update),
                || serde_json::to_string(&update).expect("serializable"),
            )
        }
        Command::Query { text } => {
            let s = session(cli)?;
            let q = parse_query(text)?;
            let r = s.query(&q, cli.alpha)?;
            emit(out, cli.format, || render::result(&r), || r.to_json())
        }
        Command::Repl => {
            let s = session(cli)?;
            repl::run(&s, cli.alpha, cli.format, io::stdin().lock(), out)?;
            Ok(())
        }
        Command::Serve { port } => {
            let s = session(cli)?;
            tracing_subscriber::fmt().with_writer(io::stderr).init();
            let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, *port));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(flexq_server::serve(s, cli.alpha, addr))
                .with_context(|| format!("serving on {addr}"))?;
            Ok(())
        }
        Command::ExportFt { out: path } => {
            let kb = load_kb(&cli.kb)?;
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            kb.write_ft_csv(file)?;
            let n = kb.records().len();
            writeln!(out, "wrote {n} terms to {}", path.display())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flexq: {e:#}");
            ExitCode::FAILURE
        }
    }
}
