use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cholcomm::chol::{factor, hierarchical_report, CholVariant, RunConfig};
use cholcomm::memsim::HierSpec;
use cholcomm::parsim::{pxpotrf, ProcGrid};
use cholcomm::reduction::mm_via_cholesky;
use cholcomm::report::{
    bound_violations, parse_table1_csv, sweep, sweep_parallel, table1_csv, table1_markdown, table2_csv,
    table2_markdown, ExperimentConfig, OutputFormat, Table1Row, Table2Row,
};
use cholcomm::{reference_cholesky, CostParams, FlopCounter, LayoutKind, Matrix};

/// Exit status for a bound or oracle violation.
const VIOLATION: u8 = 2;

macro_rules! out {
    ($($t:tt)*) => { write!(io::stdout().lock(), $($t)*)? };
}

macro_rules! outln {
    ($($t:tt)*) => { writeln!(io::stdout().lock(), $($t)*)? };
}

#[derive(Parser)]
#[command(name = "chol", version, about = "Communication cost simulator for Cholesky factorization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Markdown,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
            OutputFormat::Markdown => Format::Markdown,
        }
    }
}

#[derive(clap::Args)]
struct Costs {
    /// Time per message.
    #[arg(long, default_value_t = CostParams::default().alpha)]
    alpha: f64,
    /// Time per word.
    #[arg(long, default_value_t = CostParams::default().beta)]
    beta: f64,
    /// Time per flop.
    #[arg(long, default_value_t = CostParams::default().gamma)]
    gamma: f64,
}

impl Costs {
    fn params(&self) -> Result<CostParams> {
        Ok(CostParams::new(self.alpha, self.beta, self.gamma)?)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor one matrix and report its communication costs.
    Factor {
        /// naive-left, naive-right, potrf, potrf(B), rectangular-recursive, square-recursive
        #[arg(long)]
        algo: String,
        /// column-major, blocked, blocked(B), block-recursive
        #[arg(long, default_value = "column-major")]
        layout: String,
        /// Matrix size; ignored when --input is given.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Fast memory size in words.
        #[arg(long)]
        m_fast: usize,
        /// Block size for potrf and for an unsized blocked layout.
        #[arg(long)]
        b: Option<usize>,
        /// Matrix file (first line n, then n rows; `1*` and `0*` allowed).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write every transfer as JSON lines to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        costs: Costs,
    },
    /// Run the sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's format.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Multiply two matrices by factoring the embedding matrix.
    ReduceMm {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "square-recursive")]
        algo: String,
        #[arg(long, default_value = "column-major")]
        layout: String,
        #[arg(long, default_value_t = 108)]
        m_fast: usize,
    },
    /// Simulate the distributed factorization on a square process grid.
    Parallel {
        #[arg(long)]
        n: usize,
        /// Process count, a perfect square.
        #[arg(long)]
        p: usize,
        /// Block size; defaults to n / sqrt(p).
        #[arg(long)]
        b: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        costs: Costs,
    },
    /// Re-check and pretty-print a sequential cost table.
    Report {
        csv: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
    /// Costs on a multi-level hierarchy, one run per fast level.
    Hier {
        #[arg(long)]
        algo: String,
        #[arg(long, default_value = "block-recursive")]
        layout: String,
        #[arg(long)]
        n: usize,
        /// Comma-separated capacities of the fast levels, smallest first.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        costs: Costs,
    },
}

fn parse_layout(s: &str, block: usize) -> Result<LayoutKind> {
    if s.trim().eq_ignore_ascii_case("blocked") {
        return Ok(LayoutKind::Blocked { block });
    }
    Ok(s.parse()?)
}

fn parse_variant(s: &str, block: Option<usize>, capacity: usize) -> Result<CholVariant> {
    let v: CholVariant = s.parse()?;
    Ok(match (v, block) {
        (CholVariant::BlockedPotrf { block: 0 }, Some(b)) => CholVariant::BlockedPotrf { block: b },
        (v, _) => v.with_capacity(capacity),
    })
}

fn emit(out: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display())),
        None => {
            out!("{out}");
            Ok(())
        }
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VIOLATION)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Factor { algo, layout, n, m_fast, b, input, seed, trace, format, costs } => {
            let a = match &input {
                Some(p) => Matrix::read(p).with_context(|| format!("reading {}", p.display()))?,
                None => Matrix::random_spd(n, seed),
            };
            let variant = parse_variant(&algo, b, m_fast)?;
            let block = b.or(variant.block()).unwrap_or_else(|| CholVariant::default_block(m_fast));
            let mut cfg = RunConfig::new(variant, parse_layout(&layout, block)?, m_fast);
            cfg.params = costs.params()?;
            cfg.trace = trace.is_some();
            let f = factor(&a, &cfg)?;
            if let (Some(path), Some(records)) = (&trace, &f.trace) {
                let mut lines = String::new();
                for r in records {
                    lines.push_str(&serde_json::to_string(r)?);
                    lines.push('\n');
                }
                fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
            }
            match format {
                Format::Json => outln!("{}", serde_json::to_string_pretty(&f.report)?),
                Format::Csv => out!("{}", table1_csv(&[Table1Row::from(&f.report)])?),
                Format::Markdown => out!("{}", table1_markdown(std::slice::from_ref(&f.report))),
            }
            let residual = if a.is_all_real() { a.factor_residual(&f.l) } else { 0.0 };
            let bound_ok = f.report.lb_words <= 0.0 || f.report.words as f64 >= f.report.lb_words;
            let ok = residual <= 1e-10 && bound_ok;
            eprintln!("{} residual {residual:.2e}, words {} vs bound {:.1}", if ok { "PASS" } else { "FAIL" }, f.report.words, f.report.lb_words);
            Ok(status(ok))
        }
        Cmd::Sweep { config, format, output } => {
            let cfg = ExperimentConfig::read(&config).with_context(|| format!("reading {}", config.display()))?;
            let format = format.unwrap_or(cfg.format.into());
            let output = output.or(cfg.output.clone());
            let reports = sweep(&cfg)?;
            let par = if cfg.procs.is_empty() {
                Vec::new()
            } else {
                sweep_parallel(&cfg, CostParams::default())?
            };
            let rows: Vec<Table1Row> = reports.iter().map(Table1Row::from).collect();
            let prows: Vec<Table2Row> = par.iter().map(Table2Row::from).collect();
            let mut out = String::new();
            match format {
                Format::Json => {
                    let doc = serde_json::json!({ "sequential": reports, "parallel": par });
                    out.push_str(&serde_json::to_string_pretty(&doc)?);
                    out.push('\n');
                }
                Format::Csv => {
                    if !rows.is_empty() {
                        out.push_str(&table1_csv(&rows)?);
                    }
                    if !prows.is_empty() {
                        out.push_str(&table2_csv(&prows)?);
                    }
                }
                Format::Markdown => {
                    if !reports.is_empty() {
                        out.push_str(&table1_markdown(&reports));
                    }
                    if !prows.is_empty() {
                        out.push('\n');
                        out.push_str(&table2_markdown(&prows));
                    }
                }
            }
            emit(&out, output.as_ref())?;
            let bad = bound_violations(&rows);
            for v in &bad {
                eprintln!("bound violated: {} {} n={} M={}: {} < {:.1}", v.variant, v.layout, v.n, v.m_fast, v.words, v.lb_words);
            }
            Ok(status(bad.is_empty()))
        }
        Cmd::ReduceMm { a, b, algo, layout, m_fast } => {
            let ma = Matrix::read(&a).with_context(|| format!("reading {}", a.display()))?;
            let mb = Matrix::read(&b).with_context(|| format!("reading {}", b.display()))?;
            let variant = parse_variant(&algo, None, m_fast)?;
            let layout = parse_layout(&layout, CholVariant::default_block(m_fast))?;
            let out = mm_via_cholesky(&ma, &mb, variant, layout, m_fast)?;
            out!("{}", out.product.to_text());
            let want = ma.matmul(&mb);
            let err = out.product.max_abs_diff(&want) / want.max_abs().max(f64::MIN_POSITIVE);
            let ok = err <= 1e-12 && out.product_block_is_real() && out.blocks_match(&ma, &mb);
            eprintln!(
                "{} relative error {err:.2e}, factor words {}, multiply words {}",
                if ok { "PASS" } else { "FAIL" },
                out.costs.factor.words,
                out.costs.matmul_words
            );
            Ok(status(ok))
        }
        Cmd::Parallel { n, p, b, seed, format, costs } => {
            let side = (p as f64).sqrt().round() as usize;
            if side == 0 {
                bail!("p must be positive");
            }
            let grid = ProcGrid::new(p, b.unwrap_or(n / side), n)?;
            let a = Matrix::random_spd(n, seed);
            let out = pxpotrf(&a, &grid, costs.params()?)?;
            match format {
                Format::Json => outln!("{}", serde_json::to_string_pretty(&out.report)?),
                Format::Csv => out!("{}", table2_csv(&[Table2Row::from(&out.report)])?),
                Format::Markdown => out!("{}", table2_markdown(&[Table2Row::from(&out.report)])),
            }
            let want = reference_cholesky(&a, &mut FlopCounter::new())?;
            let err = out.l.max_abs_diff(&want) / want.max_abs();
            let ok = err <= 1e-12 && out.report.total_sent() == out.report.total_received();
            eprintln!("{} relative error {err:.2e}", if ok { "PASS" } else { "FAIL" });
            Ok(status(ok))
        }
        Cmd::Report { csv, format } => {
            let text = fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let rows = parse_table1_csv(&text)?;
            match format {
                Format::Csv => out!("{}", table1_csv(&rows)?),
                Format::Json => outln!("{}", serde_json::to_string_pretty(&rows)?),
                Format::Markdown => {
                    outln!("| variant | layout | n | M | b | words | messages | words/lb | msgs/lb |");
                    outln!("|---|---|---:|---:|---:|---:|---:|---:|---:|");
                    let f = |x: Option<f64>| x.map_or_else(|| "-".into(), |v| format!("{v:.2}"));
                    for r in &rows {
                        outln!(
                            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                            r.variant,
                            r.layout,
                            r.n,
                            r.m_fast,
                            r.b.map_or_else(|| "-".into(), |b| b.to_string()),
                            r.words,
                            r.messages,
                            f(r.ratio_words),
                            f(r.ratio_msgs)
                        );
                    }
                }
            }
            let bad = bound_violations(&rows);
            for v in &bad {
                eprintln!("bound violated: {} {} n={} M={}: {} < {:.1}", v.variant, v.layout, v.n, v.m_fast, v.words, v.lb_words);
            }
            eprintln!("{} {} rows checked", if bad.is_empty() { "PASS" } else { "FAIL" }, rows.len());
            Ok(status(bad.is_empty()))
        }
        Cmd::Hier { algo, layout, n, levels, seed, costs } => {
            let spec = HierSpec::uniform(&levels, costs.params()?)?;
            let smallest = levels.first().copied().unwrap_or(1);
            // an unsized potrf picks its block per level
            let variant: CholVariant = algo.parse()?;
            let layout = parse_layout(&layout, CholVariant::default_block(smallest))?;
            let a = Matrix::random_spd(n, seed);
            let r = hierarchical_report(&a, variant, layout, &spec)?;
            outln!("{}", serde_json::to_string_pretty(&r)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
