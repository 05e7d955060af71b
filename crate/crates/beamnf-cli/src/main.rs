//! Command-line front end: each subcommand runs one library pipeline and
//! prints a single JSON report to stdout (or CSV where requested).
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a numeric routine
//! fails to certify its result. Diagnostics go to stderr only, so stdout is
//! always exactly one machine-readable document.

mod report;

use std::process::ExitCode;
use std::time::Instant;

use beamnf::dispersion::{
    classify_divisor, evaluate_divisor, scan_mass, scan_melnikov, Divisor, DivisorKind,
};
use beamnf::lattice::integer_sphere;
use beamnf::normal_form::{c_star, mu, omega_vector, twist_matrix};
use beamnf::random_sets::{ball_size, envelope_exponent, estimate_probabilities, sphere_growth};
use beamnf::spectral::{analyze_spectrum, certificates, symplectic_diagonalize, SpectralError};
use beamnf::{analyze_set, DispersionContext, ExcitedSetAnalysis, LatticePoint, NormalFormParams};
use clap::{Parser, Subcommand, ValueEnum};

use report::*;

#[derive(Parser)]
#[command(name = "beamnf-cli", version, about = "Reports on excited-set resonance structure, block spectra, small divisors, and random-set statistics for the lattice frequencies sqrt(|a|^4 + m)")]
struct Cli {
    /// Worker threads; 0 means take BEAMNF_THREADS or the library default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Include wall-clock timing in the report. Off by default so repeated
    /// runs produce byte-identical output.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    D0,
    D1,
    D2plus,
    D2minus,
}

impl KindArg {
    fn to_kind(self) -> DivisorKind {
        match self {
            KindArg::D0 => DivisorKind::D0,
            KindArg::D1 => DivisorKind::D1,
            KindArg::D2plus => DivisorKind::D2Plus,
            KindArg::D2minus => DivisorKind::D2Minus,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Full report for one excited set: admissibility, resonant layer,
    /// quadratic form, block spectra, and sign certificates.
    Analyze {
        #[arg(short = 'd', long = "dim")]
        d: usize,
        /// Set literal, e.g. "(0,1);(1,-1)" (one integer tuple per point).
        #[arg(long)]
        set: String,
        /// Comma-separated amplitudes in [0,1], one per excited point.
        #[arg(long)]
        rho: String,
        #[arg(short = 'm', long = "mass", default_value_t = DEFAULT_MASS)]
        m: f64,
        #[arg(long, default_value_t = DEFAULT_NU)]
        nu: f64,
        /// Also compute a symplectic diagonalization of every block.
        #[arg(long)]
        symplectic: bool,
        /// Minimal eigenvalue gap the diagonalization accepts.
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: f64,
    },
    /// Scan a mass grid for the worst weighted divisor of one kind.
    ScanM {
        #[arg(short = 'd', long = "dim")]
        d: usize,
        #[arg(long)]
        set: String,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = DEFAULT_K_CUTOFF)]
        k_cutoff: i64,
        #[arg(long, default_value_t = DEFAULT_INDEX_CUTOFF)]
        index_cutoff: i64,
        /// Lower-bound constant a mass must clear to count as good.
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
        /// Weight exponent on the integer vector, |value| * <k>^exponent.
        #[arg(long, default_value_t = DEFAULT_EXPONENT)]
        exponent: f64,
        #[arg(long, default_value_t = DEFAULT_M_MIN)]
        m_min: f64,
        #[arg(long, default_value_t = DEFAULT_M_MAX)]
        m_max: f64,
        /// Number of evenly spaced masses, endpoints included.
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
    /// Classify and evaluate one divisor, or census all shapes in a box.
    Divisors {
        #[arg(short = 'd', long = "dim")]
        d: usize,
        #[arg(long)]
        set: String,
        #[arg(short = 'm', long = "mass", default_value_t = DEFAULT_MASS)]
        m: f64,
        /// Census mode: count trivial and nonresonant shapes per kind, one
        /// site representative per squared norm.
        #[arg(long)]
        enumerate: bool,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Comma-separated integer vector, one entry per excited point.
        #[arg(long)]
        k: Option<String>,
        /// First external site, e.g. "(0,2)".
        #[arg(long)]
        a: Option<String>,
        /// Second external site.
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value_t = DEFAULT_K_CUTOFF)]
        k_cutoff: i64,
        #[arg(long, default_value_t = DEFAULT_INDEX_CUTOFF)]
        index_cutoff: i64,
    },
    /// Minimum weighted pair margin |<k,Omega> - (L_a - L_b)| * |k|^tau over
    /// external sites outside the merged low block.
    Melnikov {
        #[arg(short = 'd', long = "dim")]
        d: usize,
        #[arg(long)]
        set: String,
        #[arg(short = 'm', long = "mass", default_value_t = DEFAULT_MASS)]
        m: f64,
        /// Comma-separated reference amplitudes in [0,1].
        #[arg(long)]
        rho_star: String,
        #[arg(long, default_value_t = DEFAULT_NU)]
        nu: f64,
        #[arg(long, default_value_t = DEFAULT_K_CUTOFF)]
        k_cutoff: i64,
        #[arg(long, default_value_t = DEFAULT_INDEX_CUTOFF)]
        index_cutoff: i64,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Monte Carlo admissibility statistics for uniform random sets.
    SampleSets {
        #[arg(short = 'd', long = "dim")]
        d: usize,
        /// Number of points per sampled set.
        #[arg(short = 'n', long = "set-size")]
        n: usize,
        #[arg(long)]
        radius: i64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// RNG seed; required so every published figure is reproducible.
        #[arg(long)]
        seed: u64,
    },
    /// Lattice sphere census up to a squared radius, with growth diagnostics.
    Spheres {
        #[arg(short = 'd', long = "dim")]
        d: usize,
        #[arg(long)]
        r2_max: i64,
    },
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Numeric(String),
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl From<beamnf::lattice::LatticeError> for CliError {
    fn from(e: beamnf::lattice::LatticeError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<beamnf::dispersion::DispersionError> for CliError {
    fn from(e: beamnf::dispersion::DispersionError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<beamnf::normal_form::NormalFormError> for CliError {
    fn from(e: beamnf::normal_form::NormalFormError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<beamnf::random_sets::RandomSetError> for CliError {
    fn from(e: beamnf::random_sets::RandomSetError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::ClusteredSpectrum { .. }
            | SpectralError::EigenFailure(_)
            | SpectralError::CrossingDetected(_) => CliError::Numeric(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn configure_threads(threads: usize) {
    let n = if threads > 0 {
        threads
    } else {
        std::env::var("BEAMNF_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0)
    };
    if n > 0 {
        // build_global fails only if a pool already exists; keep that one
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let started = Instant::now();
    let (input, payload, csv) = dispatch(cli.command)?;
    if let Some(table) = csv {
        return Ok(table);
    }
    let envelope = ReportEnvelope {
        version: env!("CARGO_PKG_VERSION").into(),
        input,
        defaults: DefaultsEcho::default(),
        payload,
        timing_ms: cli
            .timing
            .then(|| started.elapsed().as_millis() as u64),
    };
    let mut out = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CliError::Numeric(format!("report serialization: {e}")))?;
    out.push('\n');
    Ok(out)
}

fn dispatch(cmd: Command) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    match cmd {
        Command::Analyze {
            d,
            set,
            rho,
            m,
            nu,
            symplectic,
            gap_threshold,
        } => cmd_analyze(d, &set, &rho, m, nu, symplectic, gap_threshold),
        Command::ScanM {
            d,
            set,
            kind,
            k_cutoff,
            index_cutoff,
            kappa,
            exponent,
            m_min,
            m_max,
            grid,
            format,
        } => cmd_scan_m(
            d, &set, kind, k_cutoff, index_cutoff, kappa, exponent, m_min, m_max, grid, format,
        ),
        Command::Divisors {
            d,
            set,
            m,
            enumerate,
            kind,
            k,
            a,
            b,
            k_cutoff,
            index_cutoff,
        } => cmd_divisors(d, &set, m, enumerate, kind, k, a, b, k_cutoff, index_cutoff),
        Command::Melnikov {
            d,
            set,
            m,
            rho_star,
            nu,
            k_cutoff,
            index_cutoff,
            tau,
        } => cmd_melnikov(d, &set, m, &rho_star, nu, k_cutoff, index_cutoff, tau),
        Command::SampleSets {
            d,
            n,
            radius,
            trials,
            seed,
        } => cmd_sample_sets(d, n, radius, trials, seed),
        Command::Spheres { d, r2_max } => cmd_spheres(d, r2_max),
    }
}

// ---------------------------------------------------------------------------
// literal parsing

fn parse_set(d: usize, text: &str) -> Result<Vec<LatticePoint>, CliError> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let mut pts = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            return Err(invalid("empty point in set literal"));
        }
        let inner = match (part.strip_prefix('('), part.ends_with(')')) {
            (Some(rest), true) => &rest[..rest.len() - 1],
            (None, false) => part,
            _ => return Err(invalid(format!("unbalanced parentheses in {part:?}"))),
        };
        let coords = parse_ints(inner)?;
        if coords.len() != d {
            return Err(invalid(format!(
                "point {part:?} has {} coordinates, expected {d}",
                coords.len()
            )));
        }
        pts.push(LatticePoint::new(coords));
    }
    Ok(pts)
}

fn parse_ints(text: &str) -> Result<Vec<i64>, CliError> {
    text.split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<i64>()
                .map_err(|_| invalid(format!("bad integer coordinate {c:?}")))
        })
        .collect()
}

fn parse_floats(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .map_err(|_| invalid(format!("bad number {c:?}")))
        })
        .collect()
}

fn parse_point(d: usize, text: &str) -> Result<LatticePoint, CliError> {
    let pts = parse_set(d, text)?;
    if pts.len() != 1 {
        return Err(invalid(format!("expected a single point, got {text:?}")));
    }
    Ok(pts.into_iter().next().unwrap())
}

/// Canonical set literal: sorted points, each in parentheses.
fn format_set(points: &[LatticePoint]) -> String {
    points
        .iter()
        .map(|p| {
            let coords: Vec<String> = p.coords().iter().map(i64::to_string).collect();
            format!("({})", coords.join(","))
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn analyzed(d: usize, set: &str) -> Result<ExcitedSetAnalysis, CliError> {
    let pts = parse_set(d, set)?;
    Ok(analyze_set(d, &pts)?)
}

fn k_weight(k: &[i64]) -> f64 {
    let n2: i128 = k.iter().map(|&c| (c as i128) * (c as i128)).sum();
    (n2 as f64).sqrt().max(1.0)
}

// ---------------------------------------------------------------------------
// subcommands

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    d: usize,
    set: &str,
    rho_text: &str,
    m: f64,
    nu: f64,
    symplectic: bool,
    gap_threshold: f64,
) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    let analysis = analyzed(d, set)?;
    let rho = parse_floats(rho_text)?;
    let ctx = DispersionContext::new(d, m)?;

    let mut payload = AnalyzePayload {
        set: set_out(&analysis),
        normal_form: None,
        spectrum: None,
        certificates: None,
    };

    if analysis.admissible {
        let params = NormalFormParams::new(ctx, analysis.clone(), rho.clone(), nu)?;
        let mu_values: Result<Vec<f64>, _> = analysis
            .lambda_f
            .iter()
            .map(|b| mu(&params, b))
            .collect();
        let twist = twist_matrix(&params)?;
        payload.normal_form = Some(NormalFormOut {
            c_star: c_star(d),
            omega: omega_vector(&params),
            twist: (0..twist.nrows())
                .map(|i| twist.row(i).iter().cloned().collect())
                .collect(),
            mu: mu_values?,
        });

        let spectral = analyze_spectrum(&params)?;
        let mut spectrum = spectrum_out(&spectral);
        if symplectic {
            for (out, block) in spectrum.blocks.iter_mut().zip(&spectral.kdata.blocks) {
                let basis = symplectic_diagonalize(block, gap_threshold)?;
                out.symplectic = Some(symplectic_out(&basis));
            }
        }
        payload.spectrum = Some(spectrum);
        payload.certificates = Some(certificates_out(&certificates(&params)?));
    }

    let input = InputEcho::Analyze {
        d,
        set: format_set(&analysis.points),
        rho,
        m,
        nu,
        symplectic,
        gap_threshold,
    };
    Ok((input, Payload::SetReport(Box::new(payload)), None))
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan_m(
    d: usize,
    set: &str,
    kind: KindArg,
    k_cutoff: i64,
    index_cutoff: i64,
    kappa: f64,
    exponent: f64,
    m_min: f64,
    m_max: f64,
    grid: usize,
    format: FormatArg,
) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    let analysis = analyzed(d, set)?;
    if grid == 0 {
        return Err(invalid("grid must have at least one mass"));
    }
    if !(m_min <= m_max) {
        return Err(invalid(format!("empty mass range [{m_min}, {m_max}]")));
    }
    let m_grid: Vec<f64> = if grid == 1 {
        vec![m_min]
    } else {
        (0..grid)
            .map(|i| m_min + (m_max - m_min) * i as f64 / (grid - 1) as f64)
            .collect()
    };
    let report = scan_mass(
        &analysis,
        kind.to_kind(),
        k_cutoff,
        index_cutoff,
        kappa,
        exponent,
        &m_grid,
    )?;

    let csv = match format {
        FormatArg::Json => None,
        FormatArg::Csv => Some(scan_csv(&report.rows)),
    };
    let input = InputEcho::ScanM {
        d,
        set: format_set(&analysis.points),
        kind: kind.to_kind().name().into(),
        k_cutoff,
        index_cutoff,
        kappa,
        exponent,
        m_min,
        m_max,
        grid,
        format: match format {
            FormatArg::Json => "json".into(),
            FormatArg::Csv => "csv".into(),
        },
    };
    Ok((input, Payload::MassScan(mass_scan_out(&report)), csv))
}

fn scan_csv(rows: &[beamnf::dispersion::MassScanRow]) -> String {
    let tuple = |p: &LatticePoint| {
        let coords: Vec<String> = p.coords().iter().map(i64::to_string).collect();
        format!("\"({})\"", coords.join(","))
    };
    let mut out = String::from("m,min_divisor,kind,k,a,b\n");
    for r in rows {
        let k: Vec<String> = r.argmin.k.iter().map(i64::to_string).collect();
        let a = r.argmin.a.as_ref().map(&tuple).unwrap_or_default();
        let b = r.argmin.b.as_ref().map(&tuple).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},\"({})\",{a},{b}\n",
            r.m,
            r.min_weighted,
            r.argmin.kind.name(),
            k.join(",")
        ));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_divisors(
    d: usize,
    set: &str,
    m: f64,
    enumerate: bool,
    kind: Option<KindArg>,
    k: Option<String>,
    a: Option<String>,
    b: Option<String>,
    k_cutoff: i64,
    index_cutoff: i64,
) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    let analysis = analyzed(d, set)?;
    let ctx = DispersionContext::new(d, m)?;

    let payload = if enumerate {
        if kind.is_some() || k.is_some() || a.is_some() || b.is_some() {
            return Err(invalid(
                "--enumerate takes no --kind/--k/--a/--b; it scans all shapes",
            ));
        }
        Payload::DivisorCensus(census(&analysis, k_cutoff, index_cutoff)?)
    } else {
        let kind = kind.ok_or_else(|| invalid("--kind is required without --enumerate"))?;
        let k_vec =
            parse_ints(&k.clone().ok_or_else(|| invalid("--k is required without --enumerate"))?)?;
        if k_vec.len() != analysis.n() {
            return Err(invalid(format!(
                "k has {} entries, expected {}",
                k_vec.len(),
                analysis.n()
            )));
        }
        let a_pt = a.as_deref().map(|t| parse_point(d, t)).transpose()?;
        let b_pt = b.as_deref().map(|t| parse_point(d, t)).transpose()?;
        let div = match kind.to_kind() {
            DivisorKind::D0 => Divisor::d0(k_vec),
            DivisorKind::D1 => {
                let a_pt = a_pt.clone().ok_or_else(|| invalid("--a is required for kind d1"))?;
                Divisor::d1(k_vec, a_pt)
            }
            plus_minus => {
                let a_pt = a_pt.clone().ok_or_else(|| invalid("--a is required for kind d2"))?;
                let b_pt = b_pt.clone().ok_or_else(|| invalid("--b is required for kind d2"))?;
                Divisor::d2(k_vec, a_pt, b_pt, plus_minus == DivisorKind::D2Plus)
            }
        };
        let class = classify_divisor(&analysis, &div)?;
        let value = evaluate_divisor(&ctx, &analysis, &div)?;
        Payload::DivisorReport(DivisorOut {
            divisor: divisor_echo(&div),
            classification: classification_name(class).into(),
            value,
            k_weight: k_weight(&div.k),
        })
    };

    let input = InputEcho::Divisors {
        d,
        set: format_set(&analysis.points),
        m,
        enumerate,
        kind: kind.map(|kd| kd.to_kind().name().to_string()),
        k: k.as_deref().map(parse_ints).transpose()?,
        a: a.as_deref()
            .map(|t| parse_point(d, t).map(|p| p.coords().to_vec()))
            .transpose()?,
        b: b.as_deref()
            .map(|t| parse_point(d, t).map(|p| p.coords().to_vec()))
            .transpose()?,
        k_cutoff,
        index_cutoff,
    };
    Ok((input, payload, None))
}

/// Integer vectors of length n with sup norm <= cutoff, in odometer order.
fn k_vectors(n: usize, cutoff: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * (2 * cutoff as usize + 1));
        for prefix in &out {
            for c in -cutoff..=cutoff {
                let mut v = prefix.clone();
                v.push(c);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

const CENSUS_EXAMPLE_CAP: usize = 32;

fn census(
    analysis: &ExcitedSetAnalysis,
    k_cutoff: i64,
    index_cutoff: i64,
) -> Result<CensusOut, CliError> {
    if k_cutoff < 0 || index_cutoff < 0 {
        return Err(invalid("cutoffs must be nonnegative"));
    }
    let ks = k_vectors(analysis.n(), k_cutoff);
    // one representative per occupied squared norm; values and verdicts
    // depend on the site only through its norm
    let mut reps: Vec<LatticePoint> = Vec::new();
    for r2 in 0..=(index_cutoff as i128) * (index_cutoff as i128) {
        if let Some(rep) = integer_sphere(analysis.d, r2)
            .into_iter()
            .find(|x| !analysis.points.contains(x))
        {
            reps.push(rep);
        }
    }

    let mut kinds = Vec::new();
    for kind in [
        DivisorKind::D0,
        DivisorKind::D1,
        DivisorKind::D2Plus,
        DivisorKind::D2Minus,
    ] {
        let mut shapes = 0u64;
        let mut trivial = 0u64;
        let mut examples = Vec::new();
        let mut record = |div: &Divisor, shapes: &mut u64, trivial: &mut u64| -> Result<(), CliError> {
            *shapes += 1;
            if classify_divisor(analysis, div)?
                == beamnf::dispersion::Classification::TrivialResonance
            {
                *trivial += 1;
                if examples.len() < CENSUS_EXAMPLE_CAP {
                    examples.push(TrivialShapeOut {
                        k: div.k.clone(),
                        r2_a: div.a.as_ref().map(|p| p.norm2() as i64),
                        r2_b: div.b.as_ref().map(|p| p.norm2() as i64),
                    });
                }
            }
            Ok(())
        };
        match kind {
            DivisorKind::D0 => {
                for k in &ks {
                    if k.iter().all(|&c| c == 0) {
                        continue;
                    }
                    record(&Divisor::d0(k.clone()), &mut shapes, &mut trivial)?;
                }
            }
            DivisorKind::D1 => {
                for k in &ks {
                    for a in &reps {
                        record(&Divisor::d1(k.clone(), a.clone()), &mut shapes, &mut trivial)?;
                    }
                }
            }
            DivisorKind::D2Plus | DivisorKind::D2Minus => {
                let plus = kind == DivisorKind::D2Plus;
                for k in &ks {
                    for a in &reps {
                        for b in &reps {
                            record(
                                &Divisor::d2(k.clone(), a.clone(), b.clone(), plus),
                                &mut shapes,
                                &mut trivial,
                            )?;
                        }
                    }
                }
            }
        }
        kinds.push(KindCensusOut {
            kind: kind.name().into(),
            shapes,
            trivial,
            nonresonant: shapes - trivial,
            examples_truncated: trivial as usize > examples.len(),
            trivial_examples: examples,
        });
    }
    Ok(CensusOut {
        k_cutoff,
        index_cutoff,
        kinds,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_melnikov(
    d: usize,
    set: &str,
    m: f64,
    rho_star_text: &str,
    nu: f64,
    k_cutoff: i64,
    index_cutoff: i64,
    tau: f64,
) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    let analysis = analyzed(d, set)?;
    let rho_star = parse_floats(rho_star_text)?;
    let ctx = DispersionContext::new(d, m)?;
    let report = scan_melnikov(&ctx, &analysis, &rho_star, nu, k_cutoff, index_cutoff, tau)?;
    let input = InputEcho::Melnikov {
        d,
        set: format_set(&analysis.points),
        m,
        rho_star,
        nu,
        k_cutoff,
        index_cutoff,
        tau,
    };
    Ok((input, Payload::Melnikov(melnikov_out(&report)), None))
}

fn cmd_sample_sets(
    d: usize,
    n: usize,
    radius: i64,
    trials: u64,
    seed: u64,
) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    let stats = estimate_probabilities(d, n, radius, trials, seed)?;
    let input = InputEcho::SampleSets {
        d,
        n,
        radius,
        trials,
        seed,
    };
    Ok((input, Payload::SampleStats(stats_out(&stats)), None))
}

fn cmd_spheres(d: usize, r2_max: i64) -> Result<(InputEcho, Payload, Option<String>), CliError> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if r2_max < 0 {
        return Err(invalid("r2_max must be nonnegative"));
    }
    if r2_max > 10_000_000 {
        return Err(invalid("r2_max above 10^7 would allocate too large a census"));
    }
    let counts = sphere_growth(d, r2_max as i128);
    let exponent = envelope_exponent(&counts, 1);
    let mut ball_sizes = Vec::new();
    let mut radius = 0i64;
    while radius * radius <= r2_max {
        let size = ball_size(d, radius);
        let size = u64::try_from(size)
            .map_err(|_| invalid("ball size overflows a 64-bit count"))?;
        ball_sizes.push(BallRow { radius, size });
        radius += 1;
    }
    let input = InputEcho::Spheres { d, r2_max };
    let payload = Payload::SphereCensus(SpheresOut {
        d,
        r2_max,
        counts,
        envelope_exponent: exponent,
        ball_sizes,
    });
    Ok((input, payload, None))
}
