//! Serialization mirrors for the library's report types.
//!
//! The library keeps its structs serialization-free; this module defines the
//! JSON shapes the binary emits and the conversions into them. Every report
//! is wrapped in an envelope carrying the tool version, an input echo precise
//! enough to reproduce the run, and the resolved defaults, so a stored report
//! is a self-contained record.

use beamnf::dispersion::{Classification, Divisor, MassScanReport, MelnikovReport};
use beamnf::lattice::{ExcitedSetAnalysis, LatticePoint, StrongWitness};
use beamnf::random_sets::SampleStats;
use beamnf::spectral::{BlockSpectrum, Certificates, ModeType, SymplecticBasis};
use beamnf::SpectralReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub version: String,
    pub input: InputEcho,
    pub defaults: DefaultsEcho,
    pub payload: Payload,
    /// Wall-clock milliseconds; only present when requested, so that default
    /// reports are byte-stable across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

/// The exact inputs a run resolved to, sufficient to rebuild the command.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum InputEcho {
    Analyze {
        d: usize,
        set: String,
        rho: Vec<f64>,
        m: f64,
        nu: f64,
        symplectic: bool,
        gap_threshold: f64,
    },
    ScanM {
        d: usize,
        set: String,
        kind: String,
        k_cutoff: i64,
        index_cutoff: i64,
        kappa: f64,
        exponent: f64,
        m_min: f64,
        m_max: f64,
        grid: usize,
        format: String,
    },
    Divisors {
        d: usize,
        set: String,
        m: f64,
        enumerate: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        kind: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        k: Option<Vec<i64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        a: Option<Vec<i64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<Vec<i64>>,
        k_cutoff: i64,
        index_cutoff: i64,
    },
    Melnikov {
        d: usize,
        set: String,
        m: f64,
        rho_star: Vec<f64>,
        nu: f64,
        k_cutoff: i64,
        index_cutoff: i64,
        tau: f64,
    },
    SampleSets {
        d: usize,
        n: usize,
        radius: i64,
        trials: u64,
        seed: u64,
    },
    Spheres {
        d: usize,
        r2_max: i64,
    },
}

/// Central defaults block, echoed verbatim in every report.
#[derive(Debug, Serialize, Deserialize)]
pub struct DefaultsEcho {
    pub mass: f64,
    pub nu: f64,
    pub gap_threshold: f64,
    pub spectra_agreement_tol: f64,
    pub type_tol: f64,
    pub k_cutoff: i64,
    pub index_cutoff: i64,
    pub kappa: f64,
    pub exponent: f64,
    pub tau: f64,
    pub grid_points: usize,
    pub m_min: f64,
    pub m_max: f64,
}

pub const DEFAULT_MASS: f64 = 1.0;
pub const DEFAULT_NU: f64 = 1e-3;
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_K_CUTOFF: i64 = 4;
pub const DEFAULT_INDEX_CUTOFF: i64 = 6;
pub const DEFAULT_KAPPA: f64 = 1e-3;
pub const DEFAULT_EXPONENT: f64 = 3.0;
pub const DEFAULT_TAU: f64 = 3.0;
pub const DEFAULT_GRID_POINTS: usize = 101;
pub const DEFAULT_M_MIN: f64 = 1.0;
pub const DEFAULT_M_MAX: f64 = 2.0;
/// Dual-route/spectral agreement tolerance used inside the library.
pub const SPECTRA_AGREEMENT_TOL: f64 = 1e-12;
/// Eigenvalue type-decision tolerance used inside the library.
pub const TYPE_TOL: f64 = 1e-9;

impl Default for DefaultsEcho {
    fn default() -> Self {
        DefaultsEcho {
            mass: DEFAULT_MASS,
            nu: DEFAULT_NU,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            spectra_agreement_tol: SPECTRA_AGREEMENT_TOL,
            type_tol: TYPE_TOL,
            k_cutoff: DEFAULT_K_CUTOFF,
            index_cutoff: DEFAULT_INDEX_CUTOFF,
            kappa: DEFAULT_KAPPA,
            exponent: DEFAULT_EXPONENT,
            tau: DEFAULT_TAU,
            grid_points: DEFAULT_GRID_POINTS,
            m_min: DEFAULT_M_MIN,
            m_max: DEFAULT_M_MAX,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    SetReport(Box<AnalyzePayload>),
    MassScan(MassScanOut),
    DivisorReport(DivisorOut),
    DivisorCensus(CensusOut),
    Melnikov(MelnikovOut),
    SampleStats(StatsOut),
    SphereCensus(SpheresOut),
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Debug, Serialize, Deserialize)]
pub struct AnalyzePayload {
    pub set: SetOut,
    /// Absent when the set is not admissible: the single-sphere labelling the
    /// coefficients depend on is then undefined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificatesOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SetOut {
    pub d: usize,
    pub n: usize,
    pub points: Vec<Vec<i64>>,
    pub admissible: bool,
    pub strongly_admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strong_witness: Option<WitnessOut>,
    pub lambda_f: Vec<Vec<i64>>,
    /// For each `lambda_f` entry, the index into `points` of the excited
    /// point sharing its norm.
    pub ell: Vec<usize>,
    pub plus_pairs: Vec<(Vec<i64>, Vec<i64>)>,
    pub minus_pairs: Vec<(Vec<i64>, Vec<i64>)>,
    pub classes: Vec<Vec<Vec<i64>>>,
    pub class_count: usize,
    pub singleton_classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WitnessOut {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub sphere_points: Vec<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NormalFormOut {
    pub c_star: f64,
    pub omega: Vec<f64>,
    pub twist: Vec<Vec<f64>>,
    /// Diagonal coefficient per `lambda_f` site, in `lambda_f` order.
    pub mu: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpectrumOut {
    pub blocks: Vec<BlockOut>,
    pub elliptic_sites: Vec<Vec<i64>>,
    pub hyperbolic_sites: Vec<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BlockOut {
    pub class_index: usize,
    pub members: Vec<Vec<i64>>,
    pub mu: Vec<f64>,
    /// Eigenvalues of the linearized block flow as [re, im], sorted.
    pub eigenvalues: Vec<[f64; 2]>,
    pub pairs: Vec<PairOut>,
    pub hyperbolic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symplectic: Option<SymplecticOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairOut {
    pub z: [f64; 2],
    pub mode_type: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SymplecticOut {
    pub diagonal: Vec<[f64; 2]>,
    pub residual_diagonal: f64,
    pub residual_symplectic: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificatesOut {
    pub p: f64,
    pub d: f64,
    pub m: f64,
    pub strongly_admissible_recipe: bool,
}

// ---------------------------------------------------------------------------
// scans and divisors

#[derive(Debug, Serialize, Deserialize)]
pub struct MassScanOut {
    pub kind: String,
    pub kappa: f64,
    pub exponent: f64,
    pub k_cutoff: i64,
    pub index_cutoff: i64,
    pub bad_fraction: f64,
    pub rows: Vec<MassScanRowOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MassScanRowOut {
    pub m: f64,
    pub min_weighted: f64,
    pub argmin: DivisorEcho,
    pub excluded_mass: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DivisorEcho {
    pub kind: String,
    pub k: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DivisorOut {
    pub divisor: DivisorEcho,
    pub classification: String,
    pub value: f64,
    /// Euclidean weight max(1, |k|).
    pub k_weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CensusOut {
    pub k_cutoff: i64,
    pub index_cutoff: i64,
    /// Shapes are counted with one site representative per squared norm;
    /// classification and value depend on a site only through its norm.
    pub kinds: Vec<KindCensusOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KindCensusOut {
    pub kind: String,
    pub shapes: u64,
    pub trivial: u64,
    pub nonresonant: u64,
    pub trivial_examples: Vec<TrivialShapeOut>,
    pub examples_truncated: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrivialShapeOut {
    pub k: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_a: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_b: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MelnikovOut {
    pub min_weighted: f64,
    pub argmin_k: Vec<i64>,
    pub argmin_a: Vec<i64>,
    pub argmin_b: Vec<i64>,
    pub k_cutoff: i64,
    pub index_cutoff: i64,
    pub tau: f64,
    pub low_block_radius: f64,
}

// ---------------------------------------------------------------------------
// sampling and sphere census

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsOut {
    pub d: usize,
    pub n: usize,
    pub radius: i64,
    pub trials: u64,
    pub seed: u64,
    pub admissible: u64,
    pub strongly_admissible: u64,
    pub p_admissible: f64,
    pub ci_admissible: [f64; 2],
    pub p_strong_given_admissible: f64,
    pub ci_strong_given_admissible: [f64; 2],
    pub admissible_failure: f64,
    pub strong_failure: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpheresOut {
    pub d: usize,
    pub r2_max: i64,
    /// counts[r2] = number of lattice points with squared norm r2.
    pub counts: Vec<u64>,
    /// Least-squares slope of log(record counts) against log(radius).
    pub envelope_exponent: f64,
    pub ball_sizes: Vec<BallRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BallRow {
    pub radius: i64,
    pub size: u64,
}

// ---------------------------------------------------------------------------
// conversions

pub fn point_out(p: &LatticePoint) -> Vec<i64> {
    p.coords().to_vec()
}

pub fn set_out(analysis: &ExcitedSetAnalysis) -> SetOut {
    SetOut {
        d: analysis.d,
        n: analysis.n(),
        points: analysis.points.iter().map(point_out).collect(),
        admissible: analysis.admissible,
        strongly_admissible: analysis.strongly_admissible,
        strong_witness: analysis.strong_witness.as_ref().map(witness_out),
        lambda_f: analysis.lambda_f.iter().map(point_out).collect(),
        ell: analysis.lambda_f.iter().map(|b| analysis.ell[b]).collect(),
        plus_pairs: analysis
            .plus_pairs
            .iter()
            .map(|(a, b)| (point_out(a), point_out(b)))
            .collect(),
        minus_pairs: analysis
            .minus_pairs
            .iter()
            .map(|(a, b)| (point_out(a), point_out(b)))
            .collect(),
        classes: analysis
            .classes
            .iter()
            .map(|c| c.members.iter().map(point_out).collect())
            .collect(),
        class_count: analysis.m(),
        singleton_classes: analysis.m_star,
    }
}

fn witness_out(w: &StrongWitness) -> WitnessOut {
    WitnessOut {
        a: point_out(&w.a),
        b: point_out(&w.b),
        sphere_points: w.points.iter().map(point_out).collect(),
    }
}

pub fn mode_type_name(t: ModeType) -> &'static str {
    match t {
        ModeType::Elliptic => "elliptic",
        ModeType::RealHyperbolic => "real_hyperbolic",
        ModeType::ComplexQuadruple => "complex_quadruple",
        ModeType::Degenerate => "degenerate",
    }
}

pub fn block_out(spectrum: &BlockSpectrum, members: &[LatticePoint], mu: &[f64]) -> BlockOut {
    BlockOut {
        class_index: spectrum.class_index,
        members: members.iter().map(point_out).collect(),
        mu: mu.to_vec(),
        eigenvalues: spectrum.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        pairs: spectrum
            .pairs
            .iter()
            .map(|p| PairOut {
                z: [p.z.re, p.z.im],
                mode_type: mode_type_name(p.mode_type).into(),
            })
            .collect(),
        hyperbolic: spectrum.hyperbolic,
        symplectic: None,
    }
}

pub fn symplectic_out(basis: &SymplecticBasis) -> SymplecticOut {
    SymplecticOut {
        diagonal: basis.diagonal.iter().map(|z| [z.re, z.im]).collect(),
        residual_diagonal: basis.residual_diagonal,
        residual_symplectic: basis.residual_symplectic,
    }
}

pub fn spectrum_out(report: &SpectralReport) -> SpectrumOut {
    let blocks = report
        .blocks
        .iter()
        .zip(&report.kdata.blocks)
        .map(|(s, k)| block_out(s, &k.members, &k.mus))
        .collect();
    SpectrumOut {
        blocks,
        elliptic_sites: report.elliptic_sites.iter().map(point_out).collect(),
        hyperbolic_sites: report.hyperbolic_sites.iter().map(point_out).collect(),
    }
}

pub fn certificates_out(c: &Certificates) -> CertificatesOut {
    CertificatesOut {
        p: c.p,
        d: c.d,
        m: c.m,
        strongly_admissible_recipe: c.strongly_admissible_recipe,
    }
}

pub fn divisor_echo(div: &Divisor) -> DivisorEcho {
    DivisorEcho {
        kind: div.kind.name().into(),
        k: div.k.clone(),
        a: div.a.as_ref().map(point_out),
        b: div.b.as_ref().map(point_out),
    }
}

pub fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::TrivialResonance => "trivial_resonance",
        Classification::NonResonant => "nonresonant",
    }
}

pub fn mass_scan_out(report: &MassScanReport) -> MassScanOut {
    MassScanOut {
        kind: report.kind.name().into(),
        kappa: report.kappa,
        exponent: report.exponent,
        k_cutoff: report.k_cutoff,
        index_cutoff: report.index_cutoff,
        bad_fraction: report.bad_fraction,
        rows: report
            .rows
            .iter()
            .map(|r| MassScanRowOut {
                m: r.m,
                min_weighted: r.min_weighted,
                argmin: divisor_echo(&r.argmin),
                excluded_mass: r.excluded_mass,
            })
            .collect(),
    }
}

pub fn melnikov_out(report: &MelnikovReport) -> MelnikovOut {
    MelnikovOut {
        min_weighted: report.min_weighted,
        argmin_k: report.argmin_k.clone(),
        argmin_a: point_out(&report.argmin_a),
        argmin_b: point_out(&report.argmin_b),
        k_cutoff: report.k_cutoff,
        index_cutoff: report.index_cutoff,
        tau: report.tau,
        low_block_radius: report.low_block_radius,
    }
}

pub fn stats_out(s: &SampleStats) -> StatsOut {
    StatsOut {
        d: s.d,
        n: s.n,
        radius: s.radius,
        trials: s.trials,
        seed: s.seed,
        admissible: s.admissible,
        strongly_admissible: s.strongly_admissible,
        p_admissible: s.p_admissible,
        ci_admissible: [s.ci_admissible.0, s.ci_admissible.1],
        p_strong_given_admissible: s.p_strong_given_admissible,
        ci_strong_given_admissible: [
            s.ci_strong_given_admissible.0,
            s.ci_strong_given_admissible.1,
        ],
        admissible_failure: s.admissible_failure,
        strong_failure: s.strong_failure,
    }
}
