//! `sparse-rank`: predictions, sampling, exact ranks and Monte Carlo
//! campaigns for sparse random matrix ensembles.
//!
//! Exit status is 0 when every judged comparison passes, 1 when one misses
//! its tolerance and 2 on any error.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_rank::formula::potential_curve;
use sparse_rank::harness::{
    emit_report, run_all, run_pin, CheckKind, ExperimentConfig, FieldChoice, PinOptions, ReportFormat,
};
use sparse_rank::linalg::{exact_rational_rank, frozen_set, rank};
use sparse_rank::pinning::default_horizon;
use sparse_rank::sampler::{sample_ensemble_graph, sample_matrix};
use sparse_rank::{rank_prediction, two_core, EnsembleSpec, EntryMap, RankPrediction, SparseMatrix, TannerGraph};

#[derive(Parser)]
#[command(name = "sparse-rank", version, about = "Rank of sparse random matrices: formula and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the full prediction for an ensemble as one CSV row.
    Predict(EnsembleArgs),
    /// Print (alpha, Phi(alpha)) on an equispaced grid as CSV.
    Curve {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Number of grid points on [0, 1].
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Sample a matrix and write it in the SPARSE text format.
    Sample {
        #[command(flatten)]
        sample: SampleArgs,
        /// Destination file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exact rank of a matrix file or a freshly sampled matrix.
    Rank {
        #[command(flatten)]
        source: MatrixSource,
        /// Skip singleton peeling and eliminate the whole matrix.
        #[arg(long)]
        no_peel: bool,
        /// Also report the number of frozen columns.
        #[arg(long)]
        frozen: bool,
        /// Cross-check a rational-proxy rank with exact integer elimination.
        #[arg(long)]
        exact: bool,
    },
    /// 2-core sizes of a matrix file or a sampled graph, with the prediction
    /// when an ensemble is given.
    Core {
        #[command(flatten)]
        source: MatrixSource,
    },
    /// Monte Carlo verification campaign.
    Verify {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Checks to run, comma separated: verify, invariance, core.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// Pinning campaign: per-trial CSV of pins, frozen columns, proper
    /// relations and pair dependence.
    Pin {
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Relation size.
        #[arg(long, default_value_t = 2)]
        ell: usize,
        /// Pin counts are drawn from 1..=horizon; defaults to ceil(4 ell^3 / delta^4) + 1.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

#[derive(Args)]
struct EnsembleArgs {
    /// Ensemble as VAR;CHECK, e.g. "po:2;point:3".
    #[arg(long, required_unless_present = "config")]
    ensemble: Option<String>,
    /// Key-value config file; its ensemble is used.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl EnsembleArgs {
    fn resolve(&self) -> Result<EnsembleSpec> {
        match (&self.ensemble, &self.config) {
            (Some(e), _) => parse_ensemble(e),
            (None, Some(path)) => Ok(load_config(path)?.ensemble),
            (None, None) => bail!("need --ensemble or --config"),
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    ensemble: Option<String>,
    /// Number of variables (columns).
    #[arg(long)]
    n: Option<usize>,
    /// Prime q, gf(q), rational:p, or rational for a seed-derived proxy prime.
    #[arg(long, default_value = "2")]
    field: String,
    /// ones, uniform or chi:<seed>.
    #[arg(long, default_value = "ones")]
    entries: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reject multi-edges (the default).
    #[arg(long, conflicts_with = "multi")]
    simple: bool,
    /// Keep multi-edges; entries at repeated positions are summed.
    #[arg(long)]
    multi: bool,
}

impl SampleArgs {
    fn ensemble(&self) -> Result<Option<EnsembleSpec>> {
        self.ensemble.as_deref().map(parse_ensemble).transpose()
    }

    fn graph(&self) -> Result<(EnsembleSpec, TannerGraph, ChaCha8Rng)> {
        let ens = self.ensemble()?.context("--ensemble is required when sampling")?;
        let n = self.n.context("--n is required when sampling")?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let g = sample_ensemble_graph(&ens, n, &mut rng, !self.multi)?;
        Ok((ens, g, rng))
    }

    fn matrix(&self) -> Result<SparseMatrix> {
        let field = self.field.parse::<FieldChoice>()?.resolve(self.seed);
        let entries: EntryMap = self.entries.parse()?;
        let (_, g, mut rng) = self.graph()?;
        Ok(sample_matrix(&g, field, entries, &mut rng)?)
    }
}

#[derive(Args)]
struct MatrixSource {
    /// SPARSE matrix file, or - for stdin. Without it a matrix is sampled.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[command(flatten)]
    sample: SampleArgs,
}

impl MatrixSource {
    fn matrix(&self) -> Result<SparseMatrix> {
        match &self.input {
            Some(path) => read_matrix(path),
            None => self.sample.matrix(),
        }
    }
}

#[derive(Args)]
struct CampaignArgs {
    /// Key-value config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated fields.
    #[arg(long, value_delimiter = ',')]
    fields: Option<Vec<String>>,
    /// Comma-separated entry maps.
    #[arg(long, value_delimiter = ',')]
    entries: Option<Vec<String>>,
    #[arg(long)]
    rank_tolerance: Option<f64>,
    #[arg(long)]
    core_tolerance: Option<f64>,
    #[arg(long)]
    invariance_tolerance: Option<f64>,
    /// Keep multi-edges.
    #[arg(long)]
    multi: bool,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl CampaignArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.ensemble) {
            (Some(path), _) => load_config(path)?,
            (None, Some(e)) => {
                let n = self.n.context("--n is required without --config")?;
                ExperimentConfig::new(parse_ensemble(e)?, n, 20, 0)
            }
            (None, None) => bail!("need --config or --ensemble"),
        };
        if let Some(e) = &self.ensemble {
            cfg.ensemble = parse_ensemble(e)?;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(fields) = &self.fields {
            cfg.fields = fields
                .iter()
                .map(|f| Ok(f.parse::<FieldChoice>()?.resolve(cfg.seed)))
                .collect::<Result<_>>()?;
        }
        if let Some(entries) = &self.entries {
            cfg.entries = entries.iter().map(|e| e.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(t) = self.rank_tolerance {
            cfg.rank_tolerance = t;
        }
        if let Some(t) = self.core_tolerance {
            cfg.core_tolerance = t;
        }
        if let Some(t) = self.invariance_tolerance {
            cfg.invariance_tolerance = t;
        }
        if self.multi {
            cfg.simple = false;
        }
        if let Some(o) = &self.output {
            cfg.output = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pretty,
}

fn parse_ensemble(s: &str) -> Result<EnsembleSpec> {
    s.parse().with_context(|| format!("bad ensemble {s:?}"))
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path).with_context(|| format!("reading config {}", path.display()))
}

fn read_matrix(path: &Path) -> Result<SparseMatrix> {
    let m = if path == Path::new("-") {
        SparseMatrix::read_text(io::stdin().lock())
    } else {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        SparseMatrix::read_text(BufReader::new(file))
    };
    m.with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn predict(args: &EnsembleArgs) -> Result<bool> {
    let p = rank_prediction(&args.resolve()?)?;
    println!("{}\n{}", RankPrediction::CSV_HEADER, p.csv_row());
    Ok(true)
}

fn curve(args: &EnsembleArgs, points: usize) -> Result<bool> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let mut out = String::from("alpha,phi\n");
    for (a, phi) in potential_curve(&args.resolve()?, points) {
        out.push_str(&format!("{a},{phi}\n"));
    }
    write_out(None, &out)?;
    Ok(true)
}

fn rank_cmd(source: &MatrixSource, no_peel: bool, frozen: bool, exact: bool) -> Result<bool> {
    let m = source.matrix()?;
    let r = rank(&m, !no_peel);
    let mut header = String::from("rows,cols,field,rank,nullity");
    let mut row = format!("{},{},{},{r},{}", m.n_rows(), m.n_cols(), m.field(), m.n_cols() - r);
    if frozen {
        header.push_str(",frozen");
        row.push_str(&format!(",{}", frozen_set(&m).len()));
    }
    if exact {
        let e = exact_rational_rank(&m)?;
        header.push_str(",exact_rank");
        row.push_str(&format!(",{e}"));
        if e != r {
            eprintln!("proxy rank {r} differs from exact rank {e}");
            println!("{header}\n{row}");
            return Ok(false);
        }
    }
    println!("{header}\n{row}");
    Ok(true)
}

fn core_cmd(source: &MatrixSource) -> Result<bool> {
    let (g, ens) = match &source.input {
        Some(path) => (TannerGraph::from_matrix(&read_matrix(path)?), source.sample.ensemble()?),
        None => {
            let (ens, g, _) = source.sample.graph()?;
            (g, Some(ens))
        }
    };
    let c = two_core(&g);
    let n = g.n_vars.max(1);
    let mut header = String::from("n,m,core_vars,core_checks,core_var_fraction,core_check_fraction");
    let mut row = format!(
        "{},{},{},{},{},{}",
        g.n_vars,
        g.n_checks,
        c.core_vars,
        c.core_checks,
        c.var_fraction(n),
        c.check_fraction(n)
    );
    if let Some(ens) = ens {
        let p = rank_prediction(&ens)?;
        header.push_str(",predicted_var_fraction,predicted_check_fraction,core_slope,core_hypothesis");
        row.push_str(&format!(
            ",{},{},{},{}",
            p.core_var_fraction,
            p.core_check_fraction,
            p.core_slope,
            if p.core_hypothesis_holds() { "holds" } else { "violated" }
        ));
    }
    println!("{header}\n{row}");
    Ok(true)
}

fn verify(campaign: &CampaignArgs, checks: Option<&[String]>, format: Format) -> Result<bool> {
    let mut cfg = campaign.config()?;
    if let Some(checks) = checks {
        cfg.checks = checks.iter().map(|c| c.parse::<CheckKind>()).collect::<Result<_, _>>()?;
    }
    let reports = run_all(&cfg)?;
    if let Some(path) = &cfg.output {
        write_out(Some(path), &emit_report(&reports, ReportFormat::Csv)?)?;
    }
    let shown = match format {
        Format::Csv if cfg.output.is_some() => None,
        Format::Csv => Some(ReportFormat::Csv),
        Format::Pretty => Some(ReportFormat::Pretty),
    };
    if let Some(f) = shown {
        write_out(None, &emit_report(&reports, f)?)?;
    }
    Ok(reports.iter().all(|r| r.all_pass()))
}

fn pin_cmd(campaign: &CampaignArgs, delta: f64, ell: usize, horizon: Option<usize>) -> Result<bool> {
    if !(delta > 0.0 && delta < 1.0) || ell == 0 {
        bail!("need 0 < delta < 1 and ell >= 1");
    }
    let cfg = campaign.config()?;
    let opts = PinOptions { delta, ell, horizon: horizon.unwrap_or_else(|| default_horizon(delta, ell)) };
    let report = run_pin(&cfg, opts)?;
    write_out(cfg.output.as_deref(), &report.to_csv())?;
    eprintln!(
        "free fraction {:.4} +- {:.4} (threshold {} relations, floor {:.4}); horizon {}",
        report.fraction_free,
        report.std_error,
        report.threshold,
        1.0 - delta - 3.0 * report.std_error,
        opts.horizon
    );
    Ok(report.all_pass())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Predict(args) => predict(&args),
        Command::Curve { ensemble, points } => curve(&ensemble, points),
        Command::Sample { sample, output } => {
            let m = sample.matrix()?;
            write_out(output.as_deref(), &m.to_text())?;
            Ok(true)
        }
        Command::Rank { source, no_peel, frozen, exact } => rank_cmd(&source, no_peel, frozen, exact),
        Command::Core { source } => core_cmd(&source),
        Command::Verify { campaign, checks, format } => verify(&campaign, checks.as_deref(), format),
        Command::Pin { campaign, delta, ell, horizon } => pin_cmd(&campaign, delta, ell, horizon),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
