//! Coefficients of the resonant Birkhoff normal form over a finite excited
//! set: the twist matrix, dressed internal and external frequencies, and the
//! quadratic block matrix K with its real symmetric counterpart.

use crate::dispersion::DispersionContext;
use crate::lattice::{ExcitedSetAnalysis, LatticePoint};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error("dimension mismatch: context d={ctx} vs set d={set}")]
    DimensionMismatch { ctx: usize, set: usize },
    #[error("rho must have one entry per excited point ({expected}), got {got}")]
    RhoLength { expected: usize, got: usize },
    #[error("rho entry {0} outside [0, 1]")]
    RhoOutOfRange(f64),
    #[error("rho entry {0} is positive but below 1e-12; use exactly 0 for a corner")]
    RhoTooSmall(f64),
    #[error("nu = {0} outside [0, 1]")]
    NuOutOfRange(f64),
    #[error("twist matrix is numerically singular")]
    DegenerateTwist,
    #[error("site {0} lies in the excited set")]
    ExcitedSite(LatticePoint),
    #[error("site {0} does not belong to the resonant layer")]
    NotResonantSite(LatticePoint),
}

/// C_* = 3(2π)^{−d}: the coupling constant of the cubic nonlinearity after
/// normalization on the d-torus.
pub fn c_star(d: usize) -> f64 {
    3.0 * TAU.powi(-(d as i32))
}

/// Everything the normal form coefficients depend on: dispersion context,
/// excited-set combinatorics, action point ρ, and the scaling parameter ν.
#[derive(Debug, Clone)]
pub struct NormalFormParams {
    pub ctx: DispersionContext,
    pub analysis: ExcitedSetAnalysis,
    pub rho: Vec<f64>,
    pub nu: f64,
}

impl NormalFormParams {
    pub fn new(
        ctx: DispersionContext,
        analysis: ExcitedSetAnalysis,
        rho: Vec<f64>,
        nu: f64,
    ) -> Result<Self, NormalFormError> {
        if ctx.d != analysis.d {
            return Err(NormalFormError::DimensionMismatch {
                ctx: ctx.d,
                set: analysis.d,
            });
        }
        if rho.len() != analysis.n() {
            return Err(NormalFormError::RhoLength {
                expected: analysis.n(),
                got: rho.len(),
            });
        }
        for &r in &rho {
            if !(0.0..=1.0).contains(&r) {
                return Err(NormalFormError::RhoOutOfRange(r));
            }
            // corners are expressed by exact zeros; tiny positive entries
            // only amplify rounding in the coupling square roots
            if r > 0.0 && r < 1e-12 {
                return Err(NormalFormError::RhoTooSmall(r));
            }
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(NormalFormError::NuOutOfRange(nu));
        }
        Ok(Self {
            ctx,
            analysis,
            rho,
            nu,
        })
    }

    /// ρ entry attached to the resonant-layer site b through ℓ(b); excited
    /// sites index their own entry.
    fn rho_at(&self, b: &LatticePoint) -> Result<f64, NormalFormError> {
        if let Some(i) = self.analysis.points.iter().position(|p| p == b) {
            return Ok(self.rho[i]);
        }
        match self.analysis.ell.get(b) {
            Some(&i) => Ok(self.rho[i]),
            None => Err(NormalFormError::NotResonantSite(b.clone())),
        }
    }
}

/// Twist matrix without the invertibility check.
fn twist_matrix_raw(params: &NormalFormParams) -> DMatrix<f64> {
    let n = params.analysis.n();
    let lam: Vec<f64> = params
        .analysis
        .points
        .iter()
        .map(|a| params.ctx.lambda(a))
        .collect();
    let scale = 3.0 * TAU.powi(-(params.ctx.d as i32));
    DMatrix::from_fn(n, n, |l, k| {
        let delta = if l == k { 3.0 } else { 0.0 };
        scale * (4.0 - delta) / (lam[l] * lam[k])
    })
}

/// The twist matrix M with entries 3(4 − 3δ_{ℓk})/((2π)^d λ_ℓ λ_k), mapping
/// actions to frequency shifts. Errors if numerically singular.
pub fn twist_matrix(params: &NormalFormParams) -> Result<DMatrix<f64>, NormalFormError> {
    let m = twist_matrix_raw(params);
    let scale = m.amax().powi(m.nrows() as i32).max(f64::MIN_POSITIVE);
    if m.determinant().abs() <= 1e-12 * scale {
        return Err(NormalFormError::DegenerateTwist);
    }
    Ok(m)
}

/// Dressed internal frequencies Ω = ω + ν M ρ.
pub fn omega_vector(params: &NormalFormParams) -> Vec<f64> {
    let m = twist_matrix_raw(params);
    let rho = nalgebra::DVector::from_column_slice(&params.rho);
    let shift = m * rho;
    params
        .analysis
        .points
        .iter()
        .zip(shift.iter())
        .map(|(a, s)| params.ctx.lambda(a) + params.nu * s)
        .collect()
}

/// Dressed external frequency Λ_b = λ_b + 6ν(2π)^{−d} Σ_ℓ ρ_ℓ/(λ_ℓ λ_b) for
/// a site outside the excited set.
pub fn external_lambda(
    params: &NormalFormParams,
    b: &LatticePoint,
) -> Result<f64, NormalFormError> {
    if params.analysis.points.contains(b) {
        return Err(NormalFormError::ExcitedSite(b.clone()));
    }
    let lam_b = params.ctx.lambda(b);
    let sum: f64 = params
        .analysis
        .points
        .iter()
        .zip(&params.rho)
        .map(|(a, r)| r / params.ctx.lambda(a))
        .sum();
    Ok(lam_b + 6.0 * params.nu * TAU.powi(-(params.ctx.d as i32)) * sum / lam_b)
}

/// μ(b,ρ) = C_*((3/2)ρ_{ℓ(b)} λ_b^{−2} − λ_b^{−1} Σ_l ρ_l λ_l^{−1}): the
/// diagonal normal-form coefficient at a resonant-layer site. Depends on b
/// only through |b|².
pub fn mu(params: &NormalFormParams, b: &LatticePoint) -> Result<f64, NormalFormError> {
    if params.analysis.ell.get(b).is_none() {
        return Err(NormalFormError::NotResonantSite(b.clone()));
    }
    let lam_b = params.ctx.lambda(b);
    let rho_b = params.rho_at(b)?;
    let sum: f64 = params
        .analysis
        .points
        .iter()
        .zip(&params.rho)
        .map(|(a, r)| r / params.ctx.lambda(a))
        .sum();
    Ok(c_star(params.ctx.d) * (1.5 * rho_b / (lam_b * lam_b) - sum / lam_b))
}

/// Off-diagonal coupling c_{ab} = C_* √(ρ_{ℓ(a)} ρ_{ℓ(b)})/(λ_a λ_b) between
/// two coupled resonant-layer sites.
pub fn coupling(
    params: &NormalFormParams,
    a: &LatticePoint,
    b: &LatticePoint,
) -> Result<f64, NormalFormError> {
    let ra = params.rho_at(a)?;
    let rb = params.rho_at(b)?;
    Ok(c_star(params.ctx.d) * (ra * rb).sqrt() / (params.ctx.lambda(a) * params.ctx.lambda(b)))
}

/// Standard symplectic matrix: block diagonal [[0,1],[−1,0]] per mode.
pub fn standard_j(modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        j[(2 * i, 2 * i + 1)] = 1.0;
        j[(2 * i + 1, 2 * i)] = -1.0;
    }
    j
}

/// Per-mode change to real coordinates: (ξ, η) = S (p, q), S = (1/√2)[[1, i],[1, −i]].
fn real_coordinate_map(modes: usize) -> DMatrix<Complex64> {
    let s = 1.0 / 2.0f64.sqrt();
    let mut m = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        m[(2 * i, 2 * i)] = Complex64::new(s, 0.0);
        m[(2 * i, 2 * i + 1)] = Complex64::new(0.0, s);
        m[(2 * i + 1, 2 * i)] = Complex64::new(s, 0.0);
        m[(2 * i + 1, 2 * i + 1)] = Complex64::new(0.0, -s);
    }
    m
}

/// One equivalence class worth of the quadratic normal form: the complex
/// matrix K over (ξ, η) pairs, its real symmetric counterpart, and the
/// diagonal coefficients. Matrices are bare; multiply by ν to scale.
#[derive(Debug, Clone)]
pub struct KBlock {
    pub class_index: usize,
    pub members: Vec<LatticePoint>,
    pub complex: DMatrix<Complex64>,
    pub real: DMatrix<f64>,
    pub mus: Vec<f64>,
}

impl KBlock {
    pub fn modes(&self) -> usize {
        self.members.len()
    }
}

/// The assembled quadratic form: per-class blocks plus block-diagonal full
/// matrices, with `modes` recording the site order of the direct sum.
#[derive(Debug, Clone)]
pub struct KData {
    pub blocks: Vec<KBlock>,
    pub complex_full: DMatrix<Complex64>,
    pub real_full: DMatrix<f64>,
    pub modes: Vec<LatticePoint>,
}

/// Build K class by class. Within a class, diagonal terms are μ(b) ξ_b η_b;
/// sum-coupled pairs contribute c(ξ_a ξ_b + η_a η_b) and difference-coupled
/// pairs c(ξ_a η_b + ξ_b η_a). The real form is the congruence ᵀS K S, whose
/// imaginary part vanishes identically.
pub fn build_k(params: &NormalFormParams) -> Result<KData, NormalFormError> {
    let analysis = &params.analysis;
    let mut blocks = Vec::with_capacity(analysis.classes.len());
    let mut modes = Vec::new();
    for (ci, class) in analysis.classes.iter().enumerate() {
        let p = class.members.len();
        let mut k = DMatrix::<f64>::zeros(2 * p, 2 * p);
        let mut mus = Vec::with_capacity(p);
        for (i, b) in class.members.iter().enumerate() {
            let mu_b = mu(params, b)?;
            mus.push(mu_b);
            k[(2 * i, 2 * i + 1)] = mu_b;
            k[(2 * i + 1, 2 * i)] = mu_b;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let (a, b) = (&class.members[i], &class.members[j]);
                let plus = analysis.is_plus_pair(a, b);
                let minus = analysis.is_minus_pair(a, b);
                debug_assert!(!(plus && minus), "couplings are mutually exclusive");
                if !(plus || minus) {
                    continue;
                }
                let c = coupling(params, a, b)?;
                if plus {
                    k[(2 * i, 2 * j)] = c;
                    k[(2 * j, 2 * i)] = c;
                    k[(2 * i + 1, 2 * j + 1)] = c;
                    k[(2 * j + 1, 2 * i + 1)] = c;
                } else {
                    k[(2 * i, 2 * j + 1)] = c;
                    k[(2 * j + 1, 2 * i)] = c;
                    k[(2 * j, 2 * i + 1)] = c;
                    k[(2 * i + 1, 2 * j)] = c;
                }
            }
        }
        let kc = k.map(|x| Complex64::new(x, 0.0));
        let s = real_coordinate_map(p);
        let tilde = s.transpose() * &kc * &s;
        let scale = tilde.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let max_im = tilde.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(
            max_im <= 1e-12 * scale,
            "real form must have vanishing imaginary part"
        );
        let real = tilde.map(|z| z.re);
        blocks.push(KBlock {
            class_index: ci,
            members: class.members.clone(),
            complex: kc,
            real,
            mus,
        });
        modes.extend(class.members.iter().cloned());
    }

    let total = modes.len();
    let mut complex_full = DMatrix::zeros(2 * total, 2 * total);
    let mut real_full = DMatrix::zeros(2 * total, 2 * total);
    let mut off = 0;
    for block in &blocks {
        let w = 2 * block.modes();
        complex_full
            .view_mut((off, off), (w, w))
            .copy_from(&block.complex);
        real_full.view_mut((off, off), (w, w)).copy_from(&block.real);
        off += w;
    }
    Ok(KData {
        blocks,
        complex_full,
        real_full,
        modes,
    })
}
