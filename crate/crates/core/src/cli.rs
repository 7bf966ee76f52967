//! `cbir` command-line interface.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{emit_report, run_experiment, EvalResult, QueryMode, DEFAULT_K};
use crate::features::{extract_features, ExtractionOpts};
use crate::image_io::{read_ppm, write_ppm};
use crate::index::{build_index, load_index, save_index, Index};
use crate::phong::{shade_image, shade_image_tiled, PhongParams};
use crate::search::{rank, RankedResult};
use crate::synth::generate_synthetic_corpus;

#[derive(Debug, Parser)]
#[command(
    name = "cbir",
    version,
    about = "Content-based image retrieval with optional Phong shading"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract features for every image under a corpus directory and save the index.
    Index(IndexArgs),
    /// Rank indexed images against a query image.
    Query(QueryArgs),
    /// Compare precision/recall of a shaded and an unshaded index.
    Eval(EvalArgs),
    /// Write a Phong-shaded copy of an image.
    Shade(ShadeArgs),
    /// Generate the synthetic 5x14 corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PhongFlags {
    #[arg(long, default_value_t = 0.2)]
    pub ka: f64,
    #[arg(long, default_value_t = 0.6)]
    pub kd: f64,
    #[arg(long, default_value_t = 0.3)]
    pub ks: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ia: f64,
    #[arg(long, default_value_t = 1.0)]
    pub il: f64,
    #[arg(long, default_value_t = 10.0)]
    pub ns: f64,
    #[arg(long = "height-scale", default_value_t = 10.0)]
    pub height_scale: f64,
}

impl PhongFlags {
    pub fn params(&self) -> Result<PhongParams> {
        let p = PhongParams {
            ka: self.ka,
            kd: self.kd,
            ks: self.ks,
            ia: self.ia,
            il: self.il,
            ns: self.ns,
            height_scale: self.height_scale,
            ..PhongParams::default()
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExtractFlags {
    #[arg(long, default_value_t = 8)]
    pub levels: usize,
    #[arg(long = "offset-dx", default_value_t = 1, allow_negative_numbers = true)]
    pub offset_dx: i32,
    #[arg(long = "offset-dy", default_value_t = 0, allow_negative_numbers = true)]
    pub offset_dy: i32,
    #[arg(long = "edge-threshold", default_value_t = 255.0)]
    pub edge_threshold: f64,
}

impl ExtractFlags {
    pub fn opts(&self) -> Result<ExtractionOpts> {
        let o = ExtractionOpts {
            levels: self.levels,
            offset: (self.offset_dx, self.offset_dy),
            edge_threshold: self.edge_threshold,
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    pub root: PathBuf,
    #[arg(long, default_value = "index.json")]
    pub out: PathBuf,
    /// Shade every image before extracting features.
    #[arg(long)]
    pub phong: bool,
    #[command(flatten)]
    pub phong_flags: PhongFlags,
    #[command(flatten)]
    pub extract: ExtractFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Lines,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    pub index: PathBuf,
    pub image: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub top: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryModeArg {
    /// The first image of each category is its only query.
    First,
    /// Every image is a query; ratios are averaged per category.
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub shaded: PathBuf,
    pub unshaded: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub top: usize,
    #[arg(long = "report-dir", default_value = "report")]
    pub report_dir: PathBuf,
    #[arg(long = "query-mode", value_enum, default_value_t = QueryModeArg::First)]
    pub query_mode: QueryModeArg,
}

#[derive(Debug, Args)]
pub struct ShadeArgs {
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub phong_flags: PhongFlags,
    /// Interpolate normals over tiles of this many pixels.
    #[arg(long)]
    pub tiled: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_index(args: &IndexArgs, out: &mut dyn Write) -> Result<()> {
    let phong = if args.phong {
        Some(args.phong_flags.params()?)
    } else {
        None
    };
    let ix = build_index(&args.root, phong.as_ref(), &args.extract.opts()?)?;
    save_index(&ix, &args.out)?;
    writeln!(
        out,
        "indexed {} images ({} categories, {}) -> {}",
        ix.len(),
        ix.categories().len(),
        if args.phong { "shaded" } else { "unshaded" },
        args.out.display()
    )
    .map_err(io_err)
}

fn write_results(
    results: &[RankedResult],
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<()> {
    match format {
        OutputFormat::Table => {
            let pw = results
                .iter()
                .map(|r| r.path.len())
                .max()
                .unwrap_or(0)
                .max(4);
            let cw = results
                .iter()
                .map(|r| r.category.len())
                .max()
                .unwrap_or(0)
                .max(8);
            writeln!(
                out,
                "{:>4}  {:<pw$}  {:<cw$}  {:>12}",
                "rank", "path", "category", "distance"
            )
            .map_err(io_err)?;
            for (i, r) in results.iter().enumerate() {
                writeln!(
                    out,
                    "{:>4}  {:<pw$}  {:<cw$}  {:>12.6}",
                    i + 1,
                    r.path,
                    r.category,
                    r.distance
                )
                .map_err(io_err)?;
            }
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| Error::io("<stdout>", std::io::Error::other(e));
            w.write_record(["rank", "path", "category", "distance"])
                .map_err(csv_err)?;
            for (i, r) in results.iter().enumerate() {
                w.write_record([
                    (i + 1).to_string(),
                    r.path.clone(),
                    r.category.clone(),
                    format!("{:.6}", r.distance),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        OutputFormat::Lines => {
            for (i, r) in results.iter().enumerate() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{:.6}",
                    i + 1,
                    r.path,
                    r.category,
                    r.distance
                )
                .map_err(io_err)?;
            }
        }
    }
    Ok(())
}

/// The query image is shaded iff the index was, with the index's parameters.
pub fn cmd_query(args: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let ix = load_index(&args.index)?;
    let img = read_ppm(&args.image)?;
    let features = extract_features(&img, ix.phong.as_ref(), &ix.extraction_opts)?;
    let results = rank(&features, &ix, args.top)?;
    write_results(&results, args.format, out)
}

fn check_same_corpus(a: &Index, b: &Index) -> Result<()> {
    let listing = |ix: &Index| {
        ix.entries
            .iter()
            .map(|e| (e.path.clone(), e.category.clone()))
            .collect::<Vec<_>>()
    };
    let (la, lb) = (listing(a), listing(b));
    if la != lb {
        let first_diff = la
            .iter()
            .zip(&lb)
            .find(|(x, y)| x != y)
            .map(|(x, _)| x.0.clone())
            .unwrap_or_else(|| format!("{} vs {} entries", la.len(), lb.len()));
        return Err(Error::CorpusMismatch(format!(
            "indices cover different images (first difference: {first_diff})"
        )));
    }
    Ok(())
}

fn summarize(r: &EvalResult, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{} (top {}):", r.mode.as_str(), r.k).map_err(io_err)?;
    for row in &r.rows {
        writeln!(
            out,
            "  {:<16} {:>4}/{:<4} precision {:>5.1}%  recall {:>5.1}%",
            row.category,
            row.relevant_retrieved,
            row.retrieved,
            row.precision * 100.0,
            row.recall * 100.0
        )
        .map_err(io_err)?;
    }
    writeln!(
        out,
        "  {:<16} {:>9} precision {:>5.1}%  recall {:>5.1}%",
        "mean",
        "",
        r.mean_precision() * 100.0,
        r.mean_recall() * 100.0
    )
    .map_err(io_err)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let shaded = load_index(&args.shaded)?;
    let unshaded = load_index(&args.unshaded)?;
    check_same_corpus(&shaded, &unshaded)?;
    let mode = match args.query_mode {
        QueryModeArg::First => QueryMode::PerCategoryFirst,
        QueryModeArg::All => QueryMode::AllQueriesAveraged,
    };
    let rs = run_experiment(&shaded, args.top, mode)?;
    let ru = run_experiment(&unshaded, args.top, mode)?;
    let files = emit_report(&rs, &ru, &args.report_dir)?;
    summarize(&rs, out)?;
    summarize(&ru, out)?;
    writeln!(
        out,
        "wrote {} and {}",
        files.csv.display(),
        files.html.display()
    )
    .map_err(io_err)
}

pub fn cmd_shade(args: &ShadeArgs, out: &mut dyn Write) -> Result<()> {
    let p = args.phong_flags.params()?;
    let img = read_ppm(&args.image)?;
    let shaded = match args.tiled {
        Some(tile) => shade_image_tiled(&img, &p, tile)?,
        None => shade_image(&img, &p),
    };
    write_ppm(&args.out, &shaded)?;
    writeln!(out, "wrote {}", args.out.display()).map_err(io_err)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let files = generate_synthetic_corpus(&args.out_dir, args.seed)?;
    writeln!(
        out,
        "wrote {} images to {} (seed {})",
        files.len(),
        args.out_dir.display(),
        args.seed
    )
    .map_err(io_err)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Index(a) => cmd_index(a, out),
        Command::Query(a) => cmd_query(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Shade(a) => cmd_shade(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}
