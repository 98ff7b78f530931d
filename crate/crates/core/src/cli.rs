//! `rglt counts|spectrum|compare|acs --config <file.json> --out <dir>`

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::domain::{boundary_band_count, mask, near_boundary_flat, Domain, DomainSpec};
use crate::error::{Error, Result};
use crate::export::{export_system, fmt17, write_json, write_table_csv, write_values_csv};
use crate::fd_sw::{assemble_sw, sw_scale, sw_symbol, SWProblem};
use crate::fe_p1::{assemble_p1, fe_symbol_subdomain, P1Problem};
use crate::glt::{build_matrix, derive_symbol, CoefficientFn, GltExpr, Stencil};
use crate::matrix::{MatrixView, SparseMatrix};
use crate::multiindex::GridSize;
use crate::reduction::Projector;
use crate::spectra::{self, SpectralSample, SpectrumKind};
use crate::symbols::{
    dacs_estimate, pmea, resolution_for, sample_symbol_complex, verify_lambda, verify_sigma,
    SampleRegion, SeparableSymbol, VerifyOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TREND: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rglt", version, about = "Reduced GLT matrix sequences: assembly, spectra, symbol checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid point counts inside the domain per n.
    Counts(CommonArgs),
    /// Sorted eigenvalues or singular values per n.
    Spectrum(CommonArgs),
    /// Spectrum against the derived symbol per n, with a trend verdict.
    Compare(CommonArgs),
    /// a.c.s. distance between two sequences and the measure distance of their symbols.
    Acs {
        #[command(flatten)]
        common: CommonArgs,
        /// Config of the second sequence; its sweep is ignored.
        #[arg(long)]
        config_b: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `outputs` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Toeplitz,
    GltExpr,
    ShortleyWeller,
    FeP1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    Lambda,
    Sigma,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default)]
    pub hermitian_part: bool,
    #[serde(default = "default_symbol_samples")]
    pub symbol_samples: usize,
    #[serde(default)]
    pub closure: bool,
    /// Spectrum kind for `spectrum`; picked from the matrix when absent.
    #[serde(default)]
    pub spectrum: Option<SpectrumKind>,
    /// Which distribution `compare` checks.
    #[serde(default = "default_distribution")]
    pub distribution: Distribution,
    /// Also write each matrix as triplets in `spectrum`.
    #[serde(default)]
    pub export_matrix: bool,
}

fn default_symbol_samples() -> usize {
    10_000
}

fn default_distribution() -> Distribution {
    Distribution::Lambda
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            hermitian_part: false,
            symbol_samples: default_symbol_samples(),
            closure: false,
            spectrum: None,
            distribution: default_distribution(),
            export_matrix: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepEntry {
    Cubic(i64),
    Full(Vec<i64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub method: Method,
    #[serde(default)]
    pub coefficients: Value,
    pub sweep: Vec<SweepEntry>,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub options: RunOptions,
}

/// Expression trees for `glt-expr`, e.g.
/// `{"product": [{"diag_d": "x1"}, {"toeplitz": {"0": 2, "1": -1, "-1": -1}}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprSpec {
    Toeplitz(Stencil),
    DiagD(String),
    DiagI(String),
    Zero,
    Sum(Vec<ExprSpec>),
    Product(Vec<ExprSpec>),
    Scale { factor: f64, expr: Box<ExprSpec> },
    Adjoint(Box<ExprSpec>),
}

impl ExprSpec {
    pub fn to_expr(&self) -> Result<GltExpr> {
        Ok(match self {
            ExprSpec::Toeplitz(s) => GltExpr::toeplitz(s.clone()),
            ExprSpec::DiagD(a) => GltExpr::diag_d(CoefficientFn::parse(a)?),
            ExprSpec::DiagI(a) => GltExpr::diag_i(CoefficientFn::parse(a)?),
            ExprSpec::Zero => GltExpr::Zero,
            ExprSpec::Sum(es) => GltExpr::Sum(es.iter().map(|e| e.to_expr()).collect::<Result<_>>()?),
            ExprSpec::Product(es) => GltExpr::Product(es.iter().map(|e| e.to_expr()).collect::<Result<_>>()?),
            ExprSpec::Scale { factor, expr } => GltExpr::scalar(*factor, expr.to_expr()?),
            ExprSpec::Adjoint(e) => GltExpr::adjoint(e.to_expr()?),
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToeplitzCoefficients {
    stencil: Stencil,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExprCoefficients {
    expr: ExprSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SwCoefficients {
    diffusion: Vec<String>,
    #[serde(default)]
    convection: Option<Vec<String>>,
    #[serde(default)]
    reaction: Option<String>,
    #[serde(default)]
    rhs: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeCoefficients {
    diffusion: [[String; 2]; 2],
    #[serde(default)]
    convection: Option<[String; 2]>,
    #[serde(default)]
    reaction: Option<String>,
}

fn coefficients<T: for<'de> Deserialize<'de>>(v: &Value, method: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("{method} coefficients: {e}")))
}

fn parse_or(src: &Option<String>, default: f64) -> Result<CoefficientFn> {
    match src {
        Some(s) => CoefficientFn::parse(s),
        None => Ok(CoefficientFn::constant(default)),
    }
}

enum Assembly {
    /// Full-grid GLT expression, restricted to the domain unless it is the
    /// whole hypercube.
    Glt(GltExpr),
    Sw(SWProblem),
    Fe(P1Problem),
}

/// A config turned into something that can build matrices and symbols.
pub struct Prepared {
    pub config: RunConfig,
    pub domain: Domain,
    pub sweep: Vec<GridSize>,
    assembly: Assembly,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn prepare(self) -> Result<Prepared> {
        let domain = Domain::from_spec(&self.domain)?;
        let dim = domain.dim();
        let sweep = self.sweep_sizes(dim)?;
        let c = &self.coefficients;
        let assembly = match self.method {
            Method::Toeplitz => {
                let t: ToeplitzCoefficients = coefficients(c, "toeplitz")?;
                Assembly::Glt(GltExpr::toeplitz(t.stencil))
            }
            Method::GltExpr => {
                let t: ExprCoefficients = coefficients(c, "glt-expr")?;
                Assembly::Glt(t.expr.to_expr()?)
            }
            Method::ShortleyWeller => {
                let t: SwCoefficients = coefficients(c, "shortley-weller")?;
                let parse_all = |v: &[String]| v.iter().map(|s| CoefficientFn::parse(s)).collect::<Result<Vec<_>>>();
                let diffusion = parse_all(&t.diffusion)?;
                let convection = match &t.convection {
                    Some(v) => parse_all(v)?,
                    None => vec![CoefficientFn::constant(0.0); dim],
                };
                Assembly::Sw(SWProblem {
                    domain: domain.clone(),
                    diffusion,
                    convection,
                    reaction: parse_or(&t.reaction, 0.0)?,
                    rhs: parse_or(&t.rhs, 1.0)?,
                })
            }
            Method::FeP1 => {
                if dim != 2 {
                    return Err(Error::Config(format!("fe-p1 needs a 2D domain, got dimension {dim}")));
                }
                let t: FeCoefficients = coefficients(c, "fe-p1")?;
                let p = |s: &String| CoefficientFn::parse(s);
                let d = &t.diffusion;
                let mut prob = P1Problem::new(
                    domain.clone(),
                    [[p(&d[0][0])?, p(&d[0][1])?], [p(&d[1][0])?, p(&d[1][1])?]],
                );
                if let Some([b1, b2]) = &t.convection {
                    prob.convection = [p(b1)?, p(b2)?];
                }
                prob.reaction = parse_or(&t.reaction, 0.0)?;
                for n in &sweep {
                    if n.axis(0) != n.axis(1) {
                        return Err(Error::Config(format!("fe-p1 needs equal components, got {n}")));
                    }
                }
                Assembly::Fe(prob)
            }
        };
        if let Assembly::Glt(e) = &assembly {
            // Dimension checks happen here rather than at the first n.
            derive_symbol(e, dim)?;
        }
        Ok(Prepared {
            config: self,
            domain,
            sweep,
            assembly,
        })
    }

    fn sweep_sizes(&self, dim: usize) -> Result<Vec<GridSize>> {
        if self.sweep.is_empty() {
            return Err(Error::Config("sweep is empty".into()));
        }
        let sizes = self
            .sweep
            .iter()
            .map(|e| match e {
                SweepEntry::Cubic(m) if *m > 0 => GridSize::cubic(dim, *m as usize),
                SweepEntry::Cubic(m) => Err(Error::Config(format!("sweep entry {m} is not positive"))),
                SweepEntry::Full(v) => {
                    if v.len() != dim {
                        return Err(Error::Config(format!(
                            "sweep entry {v:?} has {} components, domain has dimension {dim}",
                            v.len()
                        )));
                    }
                    GridSize::from_slice(v)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })?;
        for w in sizes.windows(2) {
            if w[1].min_component() <= w[0].min_component() {
                return Err(Error::Config(format!(
                    "sweep must be strictly increasing in min(n): {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(sizes)
    }
}

impl Prepared {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn reduced(&self) -> bool {
        !self.domain.is_full_hypercube()
    }

    /// The (unscaled) matrix at `n` and the number of kept grid points.
    pub fn matrix(&self, n: &GridSize) -> Result<(SparseMatrix, usize)> {
        match &self.assembly {
            Assembly::Glt(e) => {
                let full = build_matrix(e, n)?;
                if self.reduced() {
                    let p = Projector::from_domain(&self.domain, n, self.config.options.closure)?;
                    Ok((p.restrict(&full)?, p.len()))
                } else {
                    Ok((full, n.total()))
                }
            }
            Assembly::Sw(prob) => {
                let sys = assemble_sw(prob, n)?;
                let d = sys.projector.len();
                Ok((sys.matrix, d))
            }
            Assembly::Fe(prob) => {
                let sys = assemble_p1(prob, n.axis(0))?;
                let d = sys.nodes.len();
                Ok((sys.matrix, d))
            }
        }
    }

    /// `n^-2` for finite differences, 1 otherwise.
    pub fn scale_fn(&self) -> Option<fn(&GridSize) -> f64> {
        match self.assembly {
            Assembly::Sw(_) => Some(sw_scale),
            _ => None,
        }
    }

    pub fn scaled_matrix(&self, n: &GridSize) -> Result<(SparseMatrix, usize)> {
        let (m, d) = self.matrix(n)?;
        Ok(match self.scale_fn() {
            Some(s) => (m.scale(C64::new(s(n), 0.0)), d),
            None => (m, d),
        })
    }

    pub fn symbol(&self) -> Result<SeparableSymbol> {
        Ok(match &self.assembly {
            Assembly::Glt(e) => {
                let s = derive_symbol(e, self.dim())?;
                if self.reduced() {
                    s.restricted_to(&self.domain)
                } else {
                    s
                }
            }
            Assembly::Sw(prob) => sw_symbol(prob),
            Assembly::Fe(prob) => fe_symbol_subdomain(prob),
        })
    }

    fn out_dir(&self, cli_out: &Option<PathBuf>) -> Result<PathBuf> {
        cli_out
            .clone()
            .or_else(|| self.config.outputs.clone())
            .ok_or_else(|| Error::Config("no output directory: pass --out or set outputs".into()))
    }
}

/// Directory name for one grid size, e.g. `63x63`.
pub fn n_label(n: &GridSize) -> String {
    n.index()
        .components()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

#[derive(Clone, Debug, Serialize)]
pub struct CountRow {
    pub n: GridSize,
    pub total: usize,
    pub d_omega: usize,
    pub ratio: f64,
    /// `None` when the domain has no boundary distance.
    pub band_count_2h: Option<usize>,
    pub near_boundary_k2: usize,
}

pub fn counts(p: &Prepared) -> Result<Vec<CountRow>> {
    p.sweep
        .par_iter()
        .map(|n| {
            let d = mask(&p.domain, n, p.config.options.closure)?.count();
            let band = if p.domain.has_distance() {
                Some(boundary_band_count(&p.domain, n, 2.0 * n.max_step())?)
            } else {
                None
            };
            Ok(CountRow {
                n: n.clone(),
                total: n.total(),
                d_omega: d,
                ratio: d as f64 / n.total() as f64,
                band_count_2h: band,
                near_boundary_k2: near_boundary_flat(&p.domain, n, 2)?.len(),
            })
        })
        .collect()
}

fn cmd_counts(p: &Prepared, out: &Path) -> Result<Value> {
    let rows = counts(p)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                n_label(&r.n),
                r.total.to_string(),
                r.d_omega.to_string(),
                fmt17(r.ratio),
                r.band_count_2h.map_or("NA".to_string(), |b| b.to_string()),
                r.near_boundary_k2.to_string(),
            ]
        })
        .collect();
    write_table_csv(
        &out.join("counts.csv"),
        &["n", "N", "d_omega", "ratio", "band_count_2h", "near_boundary_k2"],
        &table,
    )?;
    Ok(json!({ "levels": rows }))
}

/// Picks the spectrum kind: the configured one, else Hermitian eigenvalues
/// when the matrix (or its requested Hermitian part) is Hermitian.
pub fn spectrum_of(m: &SparseMatrix, opts: &RunOptions) -> Result<SpectralSample> {
    let m = if opts.hermitian_part { m.hermitian_part()? } else { m.clone() };
    let kind = opts.spectrum.unwrap_or_else(|| {
        let tol = 1e-12 * m.max_abs().max(1.0);
        if m.max_asymmetry() <= tol {
            SpectrumKind::EigHermitian
        } else {
            SpectrumKind::Singular
        }
    });
    match kind {
        SpectrumKind::EigHermitian => spectra::eigvals_hermitian(&m),
        SpectrumKind::Singular => spectra::singvals(&m),
        k => Ok(spectra::general_sample(&spectra::eigvals_general(&m)?, k)),
    }
}

#[derive(Serialize)]
struct SpectrumSidecar<'a> {
    n: &'a GridSize,
    scale: f64,
    #[serde(flatten)]
    sample: &'a SpectralSample,
}

fn cmd_spectrum(p: &Prepared, out: &Path) -> Result<Value> {
    let opts = &p.config.options;
    let results = p
        .sweep
        .par_iter()
        .map(|n| {
            let (m, d) = p.matrix(n)?;
            let scale = p.scale_fn().map_or(1.0, |s| s(n));
            let scaled = if scale != 1.0 { m.scale(C64::new(scale, 0.0)) } else { m.clone() };
            let sample = spectrum_of(&scaled, opts)
                .map_err(|e| numerical_at(n, e))?
                .with_sizes(Some(d), Some(n.total()));
            Ok((n, m, d, scale, sample))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut levels = Vec::new();
    for (n, m, d, scale, sample) in &results {
        let dir = out.join(n_label(n));
        write_values_csv(&dir.join("spectrum.csv"), &sample.values)?;
        write_json(
            &dir.join("spectrum.json"),
            &SpectrumSidecar {
                n,
                scale: *scale,
                sample,
            },
        )?;
        if opts.export_matrix {
            export_system(&dir, "matrix", m, p.domain.spec(), n, *d)?;
        }
        levels.push(json!({
            "n": n,
            "kind": sample.kind,
            "meta": sample.meta,
            "scale": scale,
            "min": sample.values.first(),
            "max": sample.values.last(),
        }));
    }
    Ok(json!({ "levels": levels }))
}

/// Attaches the grid size to a numerical failure.
fn numerical_at(n: &GridSize, e: Error) -> Error {
    match e {
        Error::NoConvergence { .. } | Error::NotHermitian { .. } => {
            log::error!("spectral computation failed at n = {n}: {e}");
            e
        }
        other => other,
    }
}

fn cmd_compare(p: &Prepared, out: &Path) -> Result<(Value, bool)> {
    let o = &p.config.options;
    let sym = p.symbol()?;
    let vopts = VerifyOptions {
        min_symbol_samples: o.symbol_samples,
        region: SampleRegion::Domain,
        scale: p.scale_fn(),
    };
    let seq = |n: &GridSize| p.matrix(n).map(|(m, _)| m);
    let report = match o.distribution {
        Distribution::Lambda => verify_lambda(&seq, &sym, &p.sweep, o.hermitian_part, &vopts)?,
        Distribution::Sigma => verify_sigma(&seq, &sym, &p.sweep, &vopts)?,
    };
    for level in &report.levels {
        write_json(&out.join(n_label(&level.n)).join("report.json"), level)?;
    }
    let ok = report.trend.non_increasing;
    Ok((
        json!({ "symbol": sym.to_string(), "distribution": o.distribution, "report": report }),
        ok,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct AcsSummary {
    pub per_n_p: Vec<(GridSize, f64)>,
    pub dacs_estimate: f64,
    pub pmea_of_symbol_difference: f64,
    pub symbol_samples: usize,
}

pub fn acs(a: &Prepared, b: &Prepared) -> Result<AcsSummary> {
    if a.dim() != b.dim() {
        return Err(Error::Config(format!(
            "configs have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let seq_a = |n: &GridSize| a.scaled_matrix(n).map(|(m, _)| m);
    let seq_b = |n: &GridSize| b.scaled_matrix(n).map(|(m, _)| m);
    let dacs = dacs_estimate(&seq_a, &seq_b, &a.sweep)?;
    let diff = a.symbol()?.plus(&b.symbol()?.scaled(C64::new(-1.0, 0.0)));
    let region = SampleRegion::Domain;
    let r = resolution_for(&diff, a.config.options.symbol_samples, region)?;
    let samples = sample_symbol_complex(&diff, r, r, region)?;
    Ok(AcsSummary {
        per_n_p: dacs.per_n,
        dacs_estimate: dacs.estimate,
        pmea_of_symbol_difference: pmea(&samples)?,
        symbol_samples: samples.len(),
    })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::Io(_)
        | Error::Domain(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidGrid(_)
        | Error::Eval(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RGLT_THREADS") {
        let k: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::Config(format!("RGLT_THREADS must be a positive integer, got '{v}'")))?;
        // A second call in the same process keeps the first pool.
        if rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<(Value, Prepared)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let cfg = RunConfig::from_json(&text)?;
    Ok((raw, cfg.prepare()?))
}

/// Runs one command; `Ok(false)` means a trend verdict failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    let (name, common) = match &cli.command {
        Command::Counts(c) => ("counts", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Compare(c) => ("compare", c),
        Command::Acs { common, .. } => ("acs", common),
    };
    let (raw, p) = load(&common.config)?;
    let out = p.out_dir(&common.out)?.join(name);
    fs::create_dir_all(&out)?;
    let mut ok = true;
    let mut summary = match &cli.command {
        Command::Counts(_) => cmd_counts(&p, &out)?,
        Command::Spectrum(_) => cmd_spectrum(&p, &out)?,
        Command::Compare(_) => {
            let (v, trend_ok) = cmd_compare(&p, &out)?;
            ok = trend_ok;
            v
        }
        Command::Acs { config_b, .. } => {
            let (raw_b, b) = load(config_b)?;
            let s = acs(&p, &b)?;
            let mut v = serde_json::to_value(s)?;
            v["config_b"] = raw_b;
            v
        }
    };
    summary["command"] = json!(name);
    summary["config"] = raw;
    write_json(&out.join("summary.json"), &summary)?;
    log::info!("wrote {}", out.display());
    Ok(ok)
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("trend verdict failed: distances are not non-increasing");
            EXIT_TREND
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
