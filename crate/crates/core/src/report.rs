//! Communication lower bounds, exponent fits, experiment sweeps and table
//! emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chol::{factor, CholVariant, CostReport, RunConfig};
use crate::error::{Error, Result};
use crate::layout::LayoutKind;
use crate::matrix::Matrix;
use crate::memsim::CostParams;
use crate::parsim::{pxpotrf, ParCostReport, ProcGrid};

const TWO_SQRT_TWO: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Words any classical Cholesky (or multiply) must move per processor,
/// clamped at zero.
pub fn lb_words(n: usize, capacity: usize, procs: usize) -> f64 {
    lb_words_rect(n, n, n, capacity, procs)
}

/// Word bound for an `n x m` by `m x r` classical product.
pub fn lb_words_rect(n: usize, m: usize, r: usize, capacity: usize, procs: usize) -> f64 {
    let work = n as f64 * m as f64 * r as f64;
    let v = work / (TWO_SQRT_TWO * procs as f64 * (capacity as f64).sqrt()) - capacity as f64;
    v.max(0.0)
}

/// Message bound, the word bound divided by the largest message size.
pub fn lb_messages(n: usize, capacity: usize, procs: usize) -> f64 {
    let n3 = (n as f64).powi(3);
    let v = n3 / (TWO_SQRT_TWO * procs as f64 * (capacity as f64).powf(1.5)) - 1.0;
    v.max(0.0)
}

/// Sequential and parallel bounds for one problem size. The parallel pair
/// assumes each processor holds `n^2 / P` words, the memory of a 2D layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub lb_words_seq: f64,
    pub lb_msgs_seq: f64,
    pub lb_words_par: f64,
    pub lb_msgs_par: f64,
}

impl BoundSet {
    pub fn new(n: usize, capacity: usize, procs: usize) -> Self {
        let local = (n * n).div_ceil(procs.max(1)).max(1);
        Self {
            lb_words_seq: lb_words(n, capacity, 1),
            lb_msgs_seq: lb_messages(n, capacity, 1),
            lb_words_par: lb_words(n, local, procs),
            lb_msgs_par: lb_messages(n, local, procs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Least-squares slope of `ln(cost)` against `ln(x)`.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<Fit> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} samples, need 3", samples.len())));
    }
    if samples.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::DegenerateFit("samples must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x values equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(Fit {
        slope,
        intercept,
        residual: (sse / k).sqrt(),
    })
}

/// One row of the sequential cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub variant: String,
    pub layout: String,
    pub n: usize,
    #[serde(rename = "M")]
    pub m_fast: usize,
    pub b: Option<usize>,
    pub words: u64,
    pub messages: u64,
    pub flops: u64,
    pub lb_words: f64,
    pub lb_msgs: f64,
    pub ratio_words: Option<f64>,
    pub ratio_msgs: Option<f64>,
}

impl From<&CostReport> for Table1Row {
    fn from(r: &CostReport) -> Self {
        Self {
            variant: r.variant.clone(),
            layout: r.layout.clone(),
            n: r.n,
            m_fast: r.m_fast,
            b: r.block,
            words: r.words,
            messages: r.messages,
            flops: r.flops,
            lb_words: r.lb_words,
            lb_msgs: r.lb_messages,
            ratio_words: r.ratio_words,
            ratio_msgs: r.ratio_messages,
        }
    }
}

pub const TABLE1_HEADER: &str =
    "variant,layout,n,M,b,words,messages,flops,lb_words,lb_msgs,ratio_words,ratio_msgs";

pub fn table1_csv(rows: &[Table1Row]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(format!("{TABLE1_HEADER}\n{body}"))
}

pub fn parse_table1_csv(text: &str) -> Result<Vec<Table1Row>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != TABLE1_HEADER {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn opt_f(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Markdown version of the sequential table, one row per report.
pub fn table1_markdown(reports: &[CostReport]) -> String {
    let mut out = String::from(
        "| variant | layout | n | M | b | words | messages | flops | lb_words | lb_msgs | words/lb | msgs/lb | cache-oblivious |\n\
         |---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---|\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {:.1} | {:.1} | {} | {} | {} |",
            r.variant,
            r.layout,
            r.n,
            r.m_fast,
            r.block.map_or_else(|| "-".to_string(), |b| b.to_string()),
            r.words,
            r.messages,
            r.flops,
            r.lb_words,
            r.lb_messages,
            opt_f(r.ratio_words),
            opt_f(r.ratio_messages),
            if r.cache_oblivious { "yes" } else { "no" },
        );
    }
    out
}

/// One row of the parallel cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub algorithm: String,
    pub n: usize,
    #[serde(rename = "P")]
    pub procs: usize,
    pub b: usize,
    pub words: u64,
    pub messages: u64,
    pub flops: u64,
    pub lb_words: f64,
    pub lb_msgs: f64,
    pub ratio_words: Option<f64>,
    pub ratio_msgs: Option<f64>,
    pub modeled_time: f64,
}

impl From<&ParCostReport> for Table2Row {
    fn from(r: &ParCostReport) -> Self {
        let bounds = BoundSet::new(r.n, 1, r.procs);
        let ratio = |x: u64, lb: f64| (lb > 0.0).then(|| x as f64 / lb);
        Self {
            algorithm: "pxpotrf".into(),
            n: r.n,
            procs: r.procs,
            b: r.block,
            words: r.critical.words,
            messages: r.critical.messages,
            flops: r.critical.flops,
            lb_words: bounds.lb_words_par,
            lb_msgs: bounds.lb_msgs_par,
            ratio_words: ratio(r.critical.words, bounds.lb_words_par),
            ratio_msgs: ratio(r.critical.messages, bounds.lb_msgs_par),
            modeled_time: r.modeled_time,
        }
    }
}

pub fn table2_csv(rows: &[Table2Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        return Ok("algorithm,n,P,b,words,messages,flops,lb_words,lb_msgs,ratio_words,ratio_msgs,modeled_time\n".into());
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn table2_markdown(rows: &[Table2Row]) -> String {
    let mut out = String::from(
        "| algorithm | n | P | b | words | messages | flops | lb_words | lb_msgs | words/lb | msgs/lb |\n\
         |---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {:.1} | {:.1} | {} | {} |",
            r.algorithm,
            r.n,
            r.procs,
            r.b,
            r.words,
            r.messages,
            r.flops,
            r.lb_words,
            r.lb_msgs,
            opt_f(r.ratio_words),
            opt_f(r.ratio_msgs),
        );
    }
    out
}

/// The (variant, layout) pairs of the sequential table.
pub fn table1_grid() -> Vec<(CholVariant, LayoutKind)> {
    let potrf = CholVariant::BlockedPotrf { block: 0 };
    vec![
        (CholVariant::NaiveLeft, LayoutKind::ColumnMajor),
        (CholVariant::NaiveRight, LayoutKind::ColumnMajor),
        (potrf, LayoutKind::ColumnMajor),
        (potrf, LayoutKind::Blocked { block: 0 }),
        (CholVariant::RectangularRecursive, LayoutKind::ColumnMajor),
        (CholVariant::RectangularRecursive, LayoutKind::BlockRecursive),
        (CholVariant::SquareRecursive, LayoutKind::ColumnMajor),
        (CholVariant::SquareRecursive, LayoutKind::BlockRecursive),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            o => Err(Error::Parse(format!("unknown format {o:?}"))),
        }
    }
}

/// Sweep description. A `blocked` layout or `potrf` variant without an
/// explicit size uses `floor(sqrt(M/3))` for each fast-memory size.
///
/// Text form, one `key = v1, v2, ...` per line, `#` starts a comment:
///
/// ```text
/// variants = naive-left, potrf, square-recursive
/// layouts = column-major, block-recursive
/// n = 32, 64
/// m = 108
/// seed = 7
/// format = markdown
/// ```
///
/// Without `variants` and `layouts` the sweep covers [`table1_grid`].
/// `p` and `b` request a parallel sweep over square processor counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pairs: Vec<(CholVariant, LayoutKind)>,
    pub sizes: Vec<usize>,
    pub capacities: Vec<usize>,
    pub procs: Vec<usize>,
    pub blocks: Vec<usize>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = values", lineno + 1)))?;
            let vals = v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            kv.insert(k.trim().to_ascii_lowercase(), vals);
        }
        fn nums<T: FromStr>(kv: &BTreeMap<String, Vec<String>>, key: &str) -> Result<Vec<T>> {
            kv.get(key)
                .map(|vs| {
                    vs.iter()
                        .map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("{key}: bad value {s:?}"))))
                        .collect()
                })
                .unwrap_or_else(|| Ok(Vec::new()))
        }
        let known = ["variants", "layouts", "n", "m", "p", "b", "seed", "output", "format"];
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key {k:?}")));
        }
        let variants = kv
            .get("variants")
            .map(|v| v.iter().map(|s| s.parse::<CholVariant>()).collect::<Result<Vec<_>>>())
            .transpose()?;
        let layouts = kv
            .get("layouts")
            .map(|v| v.iter().map(|s| parse_layout_spec(s)).collect::<Result<Vec<_>>>())
            .transpose()?;
        let pairs = match (variants, layouts) {
            (None, None) => table1_grid(),
            (v, l) => {
                let v = v.unwrap_or_else(|| vec![CholVariant::SquareRecursive]);
                let l = l.unwrap_or_else(|| vec![LayoutKind::ColumnMajor]);
                v.iter().flat_map(|&a| l.iter().map(move |&b| (a, b))).collect()
            }
        };
        let sizes: Vec<usize> = nums(&kv, "n")?;
        let capacities: Vec<usize> = nums(&kv, "m")?;
        let procs: Vec<usize> = nums(&kv, "p")?;
        let blocks: Vec<usize> = nums(&kv, "b")?;
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::Parse("n must list positive sizes".into()));
        }
        if capacities.is_empty() && procs.is_empty() {
            return Err(Error::Parse("need m (sequential) or p (parallel) values".into()));
        }
        if capacities.contains(&0) || procs.contains(&0) {
            return Err(Error::Parse("m and p values must be positive".into()));
        }
        let seed = nums::<u64>(&kv, "seed")?.first().copied().unwrap_or(1);
        let output = kv.get("output").and_then(|v| v.first()).map(PathBuf::from);
        let format = match kv.get("format").and_then(|v| v.first()) {
            Some(f) => f.parse()?,
            None => OutputFormat::Csv,
        };
        Ok(Self {
            pairs,
            sizes,
            capacities,
            procs,
            blocks,
            seed,
            output,
            format,
        })
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// `blocked` alone means "block size chosen from M".
fn parse_layout_spec(s: &str) -> Result<LayoutKind> {
    if s.trim().eq_ignore_ascii_case("blocked") {
        Ok(LayoutKind::Blocked { block: 0 })
    } else {
        s.parse()
    }
}

fn resolve_layout(kind: LayoutKind, capacity: usize) -> LayoutKind {
    match kind {
        LayoutKind::Blocked { block: 0 } => LayoutKind::Blocked {
            block: CholVariant::default_block(capacity),
        },
        k => k,
    }
}

/// Runs every (pair, n, M) combination of the config concurrently and
/// returns the reports in grid order.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<CostReport>> {
    let mut jobs = Vec::new();
    for &(variant, layout) in &cfg.pairs {
        for &n in &cfg.sizes {
            for &cap in &cfg.capacities {
                jobs.push((variant, layout, n, cap));
            }
        }
    }
    jobs.par_iter()
        .map(|&(variant, layout, n, cap)| {
            let a = Matrix::random_spd(n, cfg.seed.wrapping_add(n as u64));
            let run = RunConfig::new(variant, resolve_layout(layout, cap), cap);
            factor(&a, &run).map(|f| f.report)
        })
        .collect()
}

/// Parallel sweep over `p x n x b`; a missing `b` list means `b = n / sqrt(P)`.
pub fn sweep_parallel(cfg: &ExperimentConfig, params: CostParams) -> Result<Vec<ParCostReport>> {
    let mut jobs = Vec::new();
    for &p in &cfg.procs {
        for &n in &cfg.sizes {
            let side = (p as f64).sqrt().round() as usize;
            let bs = if cfg.blocks.is_empty() {
                vec![n / side.max(1)]
            } else {
                cfg.blocks.clone()
            };
            for b in bs {
                jobs.push((p, n, b));
            }
        }
    }
    jobs.par_iter()
        .map(|&(p, n, b)| {
            let a = Matrix::random_spd(n, cfg.seed.wrapping_add(n as u64));
            let grid = ProcGrid::new(p, b, n)?;
            pxpotrf(&a, &grid, params).map(|r| r.report)
        })
        .collect()
}

/// A report whose measured traffic falls below the lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub variant: String,
    pub layout: String,
    pub n: usize,
    pub m_fast: usize,
    pub words: u64,
    pub lb_words: f64,
}

pub fn bound_violations(rows: &[Table1Row]) -> Vec<BoundViolation> {
    rows.iter()
        .filter(|r| r.lb_words > 0.0 && (r.words as f64) < r.lb_words)
        .map(|r| BoundViolation {
            variant: r.variant.clone(),
            layout: r.layout.clone(),
            n: r.n,
            m_fast: r.m_fast,
            words: r.words,
            lb_words: r.lb_words,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        assert!((lb_words(64, 64, 1) - 11521.2).abs() < 0.05);
        assert!((lb_messages(64, 64, 1) - 180.0).abs() < 0.05);
        assert_eq!(lb_words(4, 64, 1), 0.0);
        assert_eq!(lb_messages(2, 64, 1), 0.0);
        let one = lb_messages(64, 64, 1) + 1.0;
        let four = lb_messages(64, 64, 4) + 1.0;
        assert!((one / four - 4.0).abs() < 1e-12);
        assert_eq!(lb_words_rect(64, 64, 64, 64, 1), lb_words(64, 64, 1));
    }

    #[test]
    fn bound_set_parallel_uses_local_memory() {
        let b = BoundSet::new(64, 64, 16);
        assert_eq!(b.lb_words_seq, lb_words(64, 64, 1));
        assert_eq!(b.lb_words_par, lb_words(64, 256, 16));
        assert!(b.lb_msgs_par >= 0.0);
    }

    #[test]
    fn fit_recovers_power_law() {
        let s: Vec<(f64, f64)> = [2.0, 3.0, 5.0, 11.0].iter().map(|&x| (x, x * x * x)).collect();
        let f = fit_exponent(&s).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-9);
        assert!(f.residual < 1e-9);
        assert!(fit_exponent(&s[..2]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0)]).is_err());
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(table1_csv(&[]).unwrap(), format!("{TABLE1_HEADER}\n"));
        assert!(parse_table1_csv(&table1_csv(&[]).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn config_parses() {
        let cfg = ExperimentConfig::parse(
            "# demo\nvariants = naive-left, potrf\nlayouts = column-major, blocked\nn = 16, 32\nm = 48\nseed = 3\nformat = markdown\n",
        )
        .unwrap();
        assert_eq!(cfg.pairs.len(), 4);
        assert_eq!(cfg.sizes, vec![16, 32]);
        assert_eq!(cfg.format, OutputFormat::Markdown);
        assert_eq!(cfg.seed, 3);
        assert!(ExperimentConfig::parse("n = 4\nm = 8\nbogus = 1").is_err());
        assert!(ExperimentConfig::parse("m = 8").is_err());
        let grid = ExperimentConfig::parse("n = 8\nm = 27").unwrap();
        assert_eq!(grid.pairs.len(), 8);
    }

    #[test]
    fn full_grid_has_eight_rows() {
        let cfg = ExperimentConfig::parse("n = 64\nm = 108").unwrap();
        let reports = sweep(&cfg).unwrap();
        assert_eq!(reports.len(), 8);
        let rows: Vec<Table1Row> = reports.iter().map(Table1Row::from).collect();
        assert!(bound_violations(&rows).is_empty());
        assert_eq!(parse_table1_csv(&table1_csv(&rows).unwrap()).unwrap(), rows);
        assert_eq!(table1_markdown(&reports).lines().count(), 10);
    }
}
