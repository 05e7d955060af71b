//! The beam dispersion relation λ_s = √(|s|⁴ + m), its mass derivatives,
//! small divisors built from it, and empirical scans over the mass interval.

use crate::lattice::{integer_sphere, ExcitedSetAnalysis, LatticePoint};
use crate::normal_form::{self, NormalFormParams};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

/// Masses excluded by the modified non-resonance construction.
pub const EXCLUDED_MASSES: [f64; 2] = [4.0 / 3.0, 5.0 / 3.0];

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("mass m={0} outside [1,2]")]
    MassOutOfRange(f64),
    #[error("points must have pairwise distinct norms")]
    NotAdmissible,
    #[error("malformed divisor: {0}")]
    MalformedDivisor(String),
    #[error("empty mass grid")]
    EmptyGrid,
}

/// Dimension and mass; the two parameters every frequency depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionContext {
    pub d: usize,
    pub m: f64,
}

impl DispersionContext {
    pub fn new(d: usize, m: f64) -> Result<Self, DispersionError> {
        if !(1.0..=2.0).contains(&m) {
            return Err(DispersionError::MassOutOfRange(m));
        }
        Ok(Self { d, m })
    }

    /// Whether m sits within `tol` of one of the excluded masses.
    pub fn near_excluded_mass(&self, tol: f64) -> bool {
        EXCLUDED_MASSES.iter().any(|c| (self.m - c).abs() < tol)
    }

    /// λ_a = √(|a|⁴ + m).
    pub fn lambda(&self, a: &LatticePoint) -> f64 {
        self.lambda_of_norm2(a.norm2())
    }

    /// λ as a function of the squared norm alone.
    pub fn lambda_of_norm2(&self, r2: i128) -> f64 {
        let r2 = r2 as f64;
        (r2 * r2 + self.m).sqrt()
    }

    /// d^j λ_a / dm^j for j ≥ 1: (−1)^j Υ_j (|a|⁴+m)^{1/2−j}.
    pub fn lambda_m_derivative(&self, a: &LatticePoint, j: u32) -> f64 {
        assert!(j >= 1, "derivative order must be at least 1");
        let r2 = a.norm2() as f64;
        let base = r2 * r2 + self.m;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * upsilon(j) * base.powf(0.5 - j as f64)
    }

    /// Linear frequencies of the excited points, in analysis order.
    pub fn omega(&self, analysis: &ExcitedSetAnalysis) -> Vec<f64> {
        analysis.points.iter().map(|a| self.lambda(a)).collect()
    }
}

/// Υ_j = Π_{l=0}^{j−1} (2l−1)/2; Υ₁ = −1/2, Υ₂ = −1/4, Υ₃ = −3/8.
pub fn upsilon(j: u32) -> f64 {
    (0..j).map(|l| (2.0 * l as f64 - 1.0) / 2.0).product()
}

/// max(1, |a|²): squared weight used in the dispersion bounds.
pub fn bracket2(a: &LatticePoint) -> i128 {
    a.norm2().max(1)
}

/// Determinant of the p×p matrix of mass derivatives (d^i λ_{a_j}/dm^i),
/// i = 1..p, computed directly.
pub fn derivative_determinant(
    ctx: &DispersionContext,
    points: &[LatticePoint],
) -> Result<f64, DispersionError> {
    check_distinct_norms(points)?;
    let p = points.len();
    let mat = nalgebra::DMatrix::from_fn(p, p, |i, j| {
        ctx.lambda_m_derivative(&points[j], (i + 1) as u32)
    });
    Ok(mat.determinant())
}

/// The same determinant in closed form: rows factor into Υ-coefficients and
/// a Vandermonde in x_a = (|a|⁴+m)^{−1},
///   det = Π_i (−1)^i Υ_i · Π_j λ_{a_j}^{−1} · Π_{l<k} (x_k − x_l).
pub fn derivative_determinant_closed_form(
    ctx: &DispersionContext,
    points: &[LatticePoint],
) -> Result<f64, DispersionError> {
    check_distinct_norms(points)?;
    let p = points.len() as u32;
    let mut value = 1.0;
    for i in 1..=p {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        value *= sign * upsilon(i);
    }
    let x: Vec<f64> = points
        .iter()
        .map(|a| {
            let r2 = a.norm2() as f64;
            1.0 / (r2 * r2 + ctx.m)
        })
        .collect();
    for a in points {
        value /= ctx.lambda(a);
    }
    for l in 0..x.len() {
        for k in (l + 1)..x.len() {
            value *= x[k] - x[l];
        }
    }
    Ok(value)
}

fn check_distinct_norms(points: &[LatticePoint]) -> Result<(), DispersionError> {
    if points.is_empty() {
        return Err(DispersionError::NotAdmissible);
    }
    let mut norms: Vec<i128> = points.iter().map(|p| p.norm2()).collect();
    norms.sort_unstable();
    if norms.windows(2).any(|w| w[0] == w[1]) {
        return Err(DispersionError::NotAdmissible);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisorKind {
    D0,
    D1,
    D2Plus,
    D2Minus,
}

impl DivisorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DivisorKind::D0 => "D0",
            DivisorKind::D1 => "D1",
            DivisorKind::D2Plus => "D2plus",
            DivisorKind::D2Minus => "D2minus",
        }
    }
}

/// A small divisor ω·k (+ λ_a ± λ_b). `k` is indexed by the excited set in
/// analysis order; `a`, `b` are non-excited sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divisor {
    pub kind: DivisorKind,
    pub k: Vec<i64>,
    pub a: Option<LatticePoint>,
    pub b: Option<LatticePoint>,
}

impl Divisor {
    pub fn d0(k: Vec<i64>) -> Self {
        Self {
            kind: DivisorKind::D0,
            k,
            a: None,
            b: None,
        }
    }

    pub fn d1(k: Vec<i64>, a: LatticePoint) -> Self {
        Self {
            kind: DivisorKind::D1,
            k,
            a: Some(a),
            b: None,
        }
    }

    pub fn d2(k: Vec<i64>, a: LatticePoint, b: LatticePoint, plus: bool) -> Self {
        Self {
            kind: if plus {
                DivisorKind::D2Plus
            } else {
                DivisorKind::D2Minus
            },
            k,
            a: Some(a),
            b: Some(b),
        }
    }

    fn validate(&self, analysis: &ExcitedSetAnalysis) -> Result<(), DispersionError> {
        if self.k.len() != analysis.n() {
            return Err(DispersionError::MalformedDivisor(format!(
                "k has {} entries for an excited set of size {}",
                self.k.len(),
                analysis.n()
            )));
        }
        let needs = |name: &str, p: &Option<LatticePoint>| -> Result<(), DispersionError> {
            match p {
                Some(x) if analysis.points.contains(x) => Err(DispersionError::MalformedDivisor(
                    format!("{name} = {x} lies in the excited set"),
                )),
                Some(_) => Ok(()),
                None => Err(DispersionError::MalformedDivisor(format!(
                    "{name} missing for kind {}",
                    self.kind.name()
                ))),
            }
        };
        match self.kind {
            DivisorKind::D0 => {
                if self.k.iter().all(|&c| c == 0) {
                    return Err(DispersionError::MalformedDivisor("D0 needs k ≠ 0".into()));
                }
            }
            DivisorKind::D1 => needs("a", &self.a)?,
            DivisorKind::D2Plus | DivisorKind::D2Minus => {
                needs("a", &self.a)?;
                needs("b", &self.b)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    TrivialResonance,
    NonResonant,
}

/// Decide whether a divisor is a trivial resonance: substitute one formal
/// symbol per squared norm for every frequency and test whether the signed
/// sum of symbols vanishes identically.
pub fn classify_divisor(
    analysis: &ExcitedSetAnalysis,
    div: &Divisor,
) -> Result<Classification, DispersionError> {
    div.validate(analysis)?;
    let mut coeff: BTreeMap<i128, i64> = BTreeMap::new();
    for (i, a) in analysis.points.iter().enumerate() {
        *coeff.entry(a.norm2()).or_insert(0) += div.k[i];
    }
    if let Some(a) = &div.a {
        *coeff.entry(a.norm2()).or_insert(0) += 1;
    }
    if let Some(b) = &div.b {
        let sign = if div.kind == DivisorKind::D2Minus {
            -1
        } else {
            1
        };
        *coeff.entry(b.norm2()).or_insert(0) += sign;
    }
    if coeff.values().all(|&c| c == 0) {
        Ok(Classification::TrivialResonance)
    } else {
        Ok(Classification::NonResonant)
    }
}

/// Numeric value of a divisor at the context's mass.
pub fn evaluate_divisor(
    ctx: &DispersionContext,
    analysis: &ExcitedSetAnalysis,
    div: &Divisor,
) -> Result<f64, DispersionError> {
    div.validate(analysis)?;
    let omega = ctx.omega(analysis);
    let mut value: f64 = omega
        .iter()
        .zip(&div.k)
        .map(|(w, &ki)| w * ki as f64)
        .sum();
    if let Some(a) = &div.a {
        value += ctx.lambda(a);
    }
    if let Some(b) = &div.b {
        let sign = if div.kind == DivisorKind::D2Minus {
            -1.0
        } else {
            1.0
        };
        value += sign * ctx.lambda(b);
    }
    Ok(value)
}

/// All integer vectors of length n with sup norm ≤ cutoff.
fn enumerate_k(n: usize, cutoff: i64) -> Vec<Vec<i64>> {
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

/// Euclidean ⟨k⟩ = max(1, |k|₂).
fn k_weight(k: &[i64]) -> f64 {
    let n2: i128 = k.iter().map(|&c| (c as i128) * (c as i128)).sum();
    (n2 as f64).sqrt().max(1.0)
}

/// Lex-smallest non-excited point of each nonempty sphere with squared
/// radius ≤ cutoff²; divisor values depend on a site only through its norm,
/// so one representative per norm is exhaustive.
fn norm_representatives(
    analysis: &ExcitedSetAnalysis,
    index_cutoff: i64,
) -> Vec<(i128, LatticePoint)> {
    let mut out = Vec::new();
    let max_r2 = (index_cutoff as i128) * (index_cutoff as i128);
    for r2 in 0..=max_r2 {
        let sphere = integer_sphere(analysis.d, r2);
        if let Some(rep) = sphere.into_iter().find(|x| !analysis.points.contains(x)) {
            out.push((r2, rep));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MassScanRow {
    pub m: f64,
    /// min over non-trivial divisors of |value|·⟨k⟩^exponent; this is also
    /// the best admissible lower-bound constant κ_*(m) at this mass.
    pub min_weighted: f64,
    pub argmin: Divisor,
    pub excluded_mass: bool,
}

#[derive(Debug, Clone)]
pub struct MassScanReport {
    pub kind: DivisorKind,
    pub kappa: f64,
    pub exponent: f64,
    pub k_cutoff: i64,
    pub index_cutoff: i64,
    pub rows: Vec<MassScanRow>,
    /// Fraction of grid masses whose weighted minimum drops below κ.
    pub bad_fraction: f64,
}

/// Scan the mass grid: at each m, minimize |divisor|·⟨k⟩^exponent over all
/// non-trivial divisors of one kind within the cutoffs.
pub fn scan_mass(
    analysis: &ExcitedSetAnalysis,
    kind: DivisorKind,
    k_cutoff: i64,
    index_cutoff: i64,
    kappa: f64,
    exponent: f64,
    m_grid: &[f64],
) -> Result<MassScanReport, DispersionError> {
    if m_grid.is_empty() {
        return Err(DispersionError::EmptyGrid);
    }
    let n = analysis.n();
    let ks = enumerate_k(n, k_cutoff);
    let reps = norm_representatives(analysis, index_cutoff);

    // non-trivial divisor shapes are mass independent: build them once
    let mut shapes: Vec<Divisor> = Vec::new();
    match kind {
        DivisorKind::D0 => {
            for k in &ks {
                if k.iter().all(|&c| c == 0) {
                    continue;
                }
                let div = Divisor::d0(k.clone());
                if classify_divisor(analysis, &div)? == Classification::NonResonant {
                    shapes.push(div);
                }
            }
        }
        DivisorKind::D1 => {
            for k in &ks {
                for (_, a) in &reps {
                    let div = Divisor::d1(k.clone(), a.clone());
                    if classify_divisor(analysis, &div)? == Classification::NonResonant {
                        shapes.push(div);
                    }
                }
            }
        }
        DivisorKind::D2Plus | DivisorKind::D2Minus => {
            let plus = kind == DivisorKind::D2Plus;
            for k in &ks {
                for (_, a) in &reps {
                    for (_, b) in &reps {
                        let div = Divisor::d2(k.clone(), a.clone(), b.clone(), plus);
                        if classify_divisor(analysis, &div)? == Classification::NonResonant {
                            shapes.push(div);
                        }
                    }
                }
            }
        }
    }
    if shapes.is_empty() {
        return Err(DispersionError::MalformedDivisor(
            "no non-trivial divisors within cutoffs".into(),
        ));
    }

    let half_step = if m_grid.len() > 1 {
        let lo = m_grid.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = m_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / (m_grid.len() - 1) as f64 / 2.0
    } else {
        1e-9
    };

    let rows: Vec<MassScanRow> = m_grid
        .par_iter()
        .map(|&m| {
            let ctx = DispersionContext { d: analysis.d, m };
            let mut best = f64::INFINITY;
            let mut arg = shapes[0].clone();
            for div in &shapes {
                let v = evaluate_divisor(&ctx, analysis, div).expect("validated shape");
                let w = v.abs() * k_weight(&div.k).powf(exponent);
                if w < best {
                    best = w;
                    arg = div.clone();
                }
            }
            MassScanRow {
                m,
                min_weighted: best,
                argmin: arg,
                excluded_mass: EXCLUDED_MASSES.iter().any(|c| (m - c).abs() < half_step),
            }
        })
        .collect();

    let bad = rows.iter().filter(|r| r.min_weighted < kappa).count();
    Ok(MassScanReport {
        kind,
        kappa,
        exponent,
        k_cutoff,
        index_cutoff,
        bad_fraction: bad as f64 / rows.len() as f64,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct MelnikovReport {
    pub min_weighted: f64,
    pub argmin_k: Vec<i64>,
    pub argmin_a: LatticePoint,
    pub argmin_b: LatticePoint,
    pub k_cutoff: i64,
    pub index_cutoff: i64,
    pub tau: f64,
    /// Euclidean norm threshold below which external sites belong to the
    /// merged low block and are excluded from the pair quantifier.
    pub low_block_radius: f64,
}

/// Finite scan of the second-Melnikov margins:
/// min over 0 < |k|∞ ≤ k_cutoff and external sites a,b (outside the merged
/// low block) of |⟨k,Ω(ρ_*)⟩ − (Λ_a − Λ_b)|·|k|^τ.
pub fn scan_melnikov(
    ctx: &DispersionContext,
    analysis: &ExcitedSetAnalysis,
    rho_star: &[f64],
    nu: f64,
    k_cutoff: i64,
    index_cutoff: i64,
    tau: f64,
) -> Result<MelnikovReport, DispersionError> {
    let params = NormalFormParams::new(ctx.clone(), analysis.clone(), rho_star.to_vec(), nu)
        .map_err(|e| DispersionError::MalformedDivisor(e.to_string()))?;
    let omega = normal_form::omega_vector(&params);

    // low block: external sites with |b| ≤ 2·max⟨a⟩³ mix with the resonant
    // layer and are excluded from the asymptotic pair condition
    let c_low = low_block_radius(analysis);
    let c_low2 = (c_low * c_low).ceil() as i128;

    let mut sites: Vec<(i128, LatticePoint, f64)> = Vec::new();
    let max_r2 = (index_cutoff as i128) * (index_cutoff as i128);
    let excited_norms: Vec<i128> = analysis.points.iter().map(|p| p.norm2()).collect();
    for r2 in 0..=max_r2 {
        if r2 <= c_low2 || excited_norms.contains(&r2) {
            continue;
        }
        let sphere = integer_sphere(analysis.d, r2);
        if let Some(rep) = sphere.into_iter().next() {
            let lam = normal_form::external_lambda(&params, &rep)
                .map_err(|e| DispersionError::MalformedDivisor(e.to_string()))?;
            sites.push((r2, rep, lam));
        }
    }
    if sites.is_empty() {
        return Err(DispersionError::MalformedDivisor(
            "no external sites beyond the low block within the cutoff".into(),
        ));
    }

    let mut best = f64::INFINITY;
    let mut arg: Option<(Vec<i64>, LatticePoint, LatticePoint)> = None;
    for k in enumerate_k(analysis.n(), k_cutoff) {
        if k.iter().all(|&c| c == 0) {
            continue;
        }
        let base: f64 = omega.iter().zip(&k).map(|(w, &ki)| w * ki as f64).sum();
        let weight = k_weight(&k).powf(tau);
        for (_, pa, la) in &sites {
            for (_, pb, lb) in &sites {
                let v = (base - (la - lb)).abs() * weight;
                if v < best {
                    best = v;
                    arg = Some((k.clone(), pa.clone(), pb.clone()));
                }
            }
        }
    }
    let (argmin_k, argmin_a, argmin_b) = arg.expect("nonempty scan");
    Ok(MelnikovReport {
        min_weighted: best,
        argmin_k,
        argmin_a,
        argmin_b,
        k_cutoff,
        index_cutoff,
        tau,
        low_block_radius: c_low,
    })
}

/// 2·max⟨a⟩³ over the excited set: the radius of the merged low block.
pub fn low_block_radius(analysis: &ExcitedSetAnalysis) -> f64 {
    analysis
        .points
        .iter()
        .map(|a| (bracket2(a) as f64).sqrt().powi(3) * 2.0)
        .fold(0.0, f64::max)
}
