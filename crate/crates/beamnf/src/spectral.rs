//! Eigen-analysis of the quadratic normal-form blocks: spectra and their
//! elliptic/hyperbolic classification, symplectic diagonalization with norm
//! certificates, polynomial non-degeneracy certificates, the corner jet
//! expansion of eigenvalue branches, and the spectral-asymptotic verifier
//! used to qualify a configuration for the infinite-dimensional step.

use crate::dispersion;
use crate::lattice::{integer_sphere, LatticePoint};
use crate::normal_form::{self, build_k, mu, standard_j, KBlock, KData, NormalFormParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("clustered spectrum: gap {gap:.3e} below threshold {threshold:.3e}")]
    ClusteredSpectrum { gap: f64, threshold: f64 },
    #[error("eigen-solver failure: {0}")]
    EigenFailure(String),
    #[error("normal form: {0}")]
    NormalForm(#[from] normal_form::NormalFormError),
    #[error("rho is not a corner configuration (exactly one entry 1, rest 0)")]
    NotACorner,
    #[error("bad variation: {0}")]
    BadVariation(String),
    #[error("eigenvalue branches too close to track: {0}")]
    CrossingDetected(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

// ---------------------------------------------------------------------------
// linear-algebra helpers

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real 2N×2N embedding [[Re, −Im], [Im, Re]]; its singular values are those
/// of the complex matrix, doubled.
fn real_embedding(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            e[(i, j)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + n, j)] = z.im;
            e[(i + n, j + n)] = z.re;
        }
    }
    e
}

/// Singular-value extremes through the symmetric eigenproblem of the Gram
/// matrix; the symmetric solver converges on matrices with repeated singular
/// values where the general bidiagonal iteration can stall.
fn gram_singular_extremes(e: &DMatrix<f64>) -> (f64, f64) {
    let gram = e.transpose() * e;
    let eigs = gram.symmetric_eigen().eigenvalues;
    let max = eigs.iter().cloned().fold(0.0f64, f64::max).max(0.0);
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    (max.sqrt(), min.sqrt())
}

/// (largest, smallest) singular value of a complex matrix.
pub fn singular_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    gram_singular_extremes(&real_embedding(m))
}

/// Spectral norm of a complex matrix.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    singular_extremes(m).0
}

/// Spectral norm of a real matrix.
pub fn op_norm_real(m: &DMatrix<f64>) -> f64 {
    gram_singular_extremes(m).0
}

/// Eigenvalues of a real matrix by the real Schur form, computed on a
/// real-shifted copy: spectra with several eigenvalues of equal modulus
/// (± pairs and quadruples are full of them) can cycle the unshifted
/// iteration, while eig(M) = eig(M − σI) + σ holds exactly.
fn complex_eigenvalues_of_real(m: &DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let scale = m.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    for &s in &[0.0, 0.618_033_988_749_894_9, -0.381_966_011_250_105_1, 1.236_067_977_499_789_6] {
        let sigma = s * scale.max(1.0);
        let shifted = m - DMatrix::<f64>::identity(n, n) * sigma;
        if let Some(schur) = nalgebra::linalg::Schur::try_new(shifted, f64::EPSILON, 5000) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z + Complex64::new(sigma, 0.0))
                .collect();
        }
    }
    panic!("eigen-solver failed to converge for a {n}x{n} matrix under all shifts");
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

/// Greatest distance after greedily matching the two multisets; both lists
/// must have equal length.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best {
                    best = d;
                    arg = j;
                }
            }
        }
        used[arg] = true;
        worst = worst.max(best);
    }
    worst
}

// ---------------------------------------------------------------------------
// block spectra and type classification

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeType {
    /// pure imaginary ±iΛ, Λ real nonzero
    Elliptic,
    /// real pair ±κ
    RealHyperbolic,
    /// member of a complex quadruple ±x±iy
    ComplexQuadruple,
    /// below tolerance in both parts
    Degenerate,
}

/// One ± eigenvalue pair: the representative with positive imaginary part
/// (or positive real part when real), and its type tag.
#[derive(Debug, Clone, Copy)]
pub struct PairClass {
    pub z: Complex64,
    pub mode_type: ModeType,
}

#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub class_index: usize,
    /// eigenvalues of the linearized block flow, sorted by (Re, Im)
    pub eigenvalues: Vec<Complex64>,
    pub pairs: Vec<PairClass>,
    pub hyperbolic: bool,
}

/// type-decision tolerance: |Re| or |Im| below this is treated as zero
fn type_tol(z: Complex64) -> f64 {
    1e-9 * (1.0 + z.norm())
}

/// Spectrum of one block's linearized flow. Two independent routes are
/// evaluated every time: i·eig(J K) from the complex-coordinate form and
/// eig(J K̃) from the real form; they must agree as multisets.
pub fn block_spectrum(block: &KBlock) -> Result<BlockSpectrum, SpectralError> {
    let p = block.modes();
    let j = standard_j(p);
    let l_real = &j * &block.real;
    let mut evs = complex_eigenvalues_of_real(&l_real);

    let k_re = block.complex.map(|z| z.re);
    let l_complex = &j * k_re;
    let mut route2: Vec<Complex64> = complex_eigenvalues_of_real(&l_complex)
        .into_iter()
        .map(|w| Complex64::new(-w.im, w.re))
        .collect();
    sort_complex(&mut evs);
    sort_complex(&mut route2);
    let scale = 1.0 + evs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dist = multiset_distance(&evs, &route2);
    if dist > 1e-12 * scale {
        return Err(SpectralError::EigenFailure(format!(
            "complex and real routes disagree by {dist:.3e}"
        )));
    }

    let mut reps = Vec::new();
    let mut zeros = 0usize;
    for &z in &evs {
        let t = type_tol(z);
        if z.norm() <= t {
            zeros += 1;
        } else if z.im > t || (z.im.abs() <= t && z.re > 0.0) {
            reps.push(z);
        }
    }
    if zeros % 2 != 0 || reps.len() * 2 + zeros != evs.len() {
        return Err(SpectralError::EigenFailure(
            "spectrum does not split into ± pairs".into(),
        ));
    }
    let mut pairs: Vec<PairClass> = reps
        .into_iter()
        .map(|z| {
            let t = type_tol(z);
            let mode_type = match (z.re.abs() > t, z.im.abs() > t) {
                (false, true) => ModeType::Elliptic,
                (true, false) => ModeType::RealHyperbolic,
                (true, true) => ModeType::ComplexQuadruple,
                (false, false) => ModeType::Degenerate,
            };
            PairClass { z, mode_type }
        })
        .collect();
    for _ in 0..zeros / 2 {
        pairs.push(PairClass {
            z: Complex64::new(0.0, 0.0),
            mode_type: ModeType::Degenerate,
        });
    }
    let hyperbolic = pairs.iter().any(|p| {
        matches!(
            p.mode_type,
            ModeType::RealHyperbolic | ModeType::ComplexQuadruple
        )
    });
    Ok(BlockSpectrum {
        class_index: block.class_index,
        eigenvalues: evs,
        pairs,
        hyperbolic,
    })
}

/// Whole-set spectral data: per-class spectra and the induced partition of
/// the resonant layer into elliptic and hyperbolic sites.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub kdata: KData,
    pub blocks: Vec<BlockSpectrum>,
    pub elliptic_sites: Vec<LatticePoint>,
    pub hyperbolic_sites: Vec<LatticePoint>,
}

pub fn analyze_spectrum(params: &NormalFormParams) -> Result<SpectralReport, SpectralError> {
    let kdata = build_k(params)?;
    let mut blocks = Vec::with_capacity(kdata.blocks.len());
    let mut elliptic = Vec::new();
    let mut hyperbolic = Vec::new();
    for b in &kdata.blocks {
        let s = block_spectrum(b)?;
        if s.hyperbolic {
            hyperbolic.extend(b.members.iter().cloned());
        } else {
            elliptic.extend(b.members.iter().cloned());
        }
        blocks.push(s);
    }
    Ok(SpectralReport {
        kdata,
        blocks,
        elliptic_sites: elliptic,
        hyperbolic_sites: hyperbolic,
    })
}

// ---------------------------------------------------------------------------
// the 4×4 hyperbolicity discriminant

/// Δ = (β+γ)² − 4α² for the doubled coefficients of a coupled 2-mode block;
/// Δ < 0 is exactly the complex-quadruple regime.
pub fn discriminant_2d(beta: f64, gamma: f64, alpha: f64) -> f64 {
    (beta + gamma) * (beta + gamma) - 4.0 * alpha * alpha
}

/// Doubled coefficients (β, γ, α) = (2μ(a), 2μ(b), 2c) of the unique coupled
/// two-mode class of a two-point excited set.
pub fn pair_block_parameters(params: &NormalFormParams) -> Result<(f64, f64, f64), SpectralError> {
    let multi: Vec<_> = params
        .analysis
        .classes
        .iter()
        .filter(|c| c.members.len() > 1)
        .collect();
    if multi.len() != 1 || multi[0].members.len() != 2 {
        return Err(SpectralError::ShapeMismatch(format!(
            "expected exactly one coupled class of two sites, found {} classes",
            multi.len()
        )));
    }
    let a = &multi[0].members[0];
    let b = &multi[0].members[1];
    if !params.analysis.is_plus_pair(a, b) && !params.analysis.is_minus_pair(a, b) {
        return Err(SpectralError::ShapeMismatch(
            "class members are not coupled".into(),
        ));
    }
    let beta = 2.0 * mu(params, a)?;
    let gamma = 2.0 * mu(params, b)?;
    let alpha = 2.0 * normal_form::coupling(params, a, b)?;
    Ok((beta, gamma, alpha))
}

/// Roots of (λ² + (γ−β)λ − βγ + α²)(λ² − (γ−β)λ − βγ + α²), each quadratic
/// solved through its companion matrix, giving an eigenvalue oracle that is
/// independent of the closed quadratic formula.
pub fn quartet_roots(beta: f64, gamma: f64, alpha: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(4);
    for sign in [1.0f64, -1.0] {
        // λ² + sign(γ−β)λ + (α² − βγ)
        let b1 = sign * (gamma - beta);
        let c1 = alpha * alpha - beta * gamma;
        let companion = DMatrix::from_row_slice(2, 2, &[0.0, -c1, 1.0, -b1]);
        out.extend(complex_eigenvalues_of_real(&companion));
    }
    sort_complex(&mut out);
    out
}

// ---------------------------------------------------------------------------
// symplectic diagonalization

#[derive(Debug, Clone)]
pub struct SymplecticBasis {
    /// column 2l−1 carries −z_l, column 2l carries +z_l (1-based)
    pub u: DMatrix<Complex64>,
    pub diagonal: Vec<Complex64>,
    /// raw pairing values ω₂(U_{2l−1}, U_{2l}) before renormalization
    pub pairings: Vec<Complex64>,
    pub residual_diagonal: f64,
    pub residual_symplectic: f64,
}

fn deterministic_start(n: usize) -> DVector<Complex64> {
    let mut v = DVector::from_fn(n, |k, _| {
        Complex64::new(1.0 + 0.37 * ((k + 1) as f64).sin(), 0.21 * ((k + 2) as f64).cos())
    });
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

fn phase_normalize(v: &mut DVector<Complex64>) {
    let mut idx = 0;
    let mut best = 0.0;
    for (k, z) in v.iter().enumerate() {
        if z.norm() > best * (1.0 + 1e-12) {
            best = z.norm();
            idx = k;
        }
    }
    let phase = v[idx] / v[idx].norm();
    let corr = phase.conj();
    for z in v.iter_mut() {
        *z *= corr;
    }
}

/// Eigenvector by shifted inverse iteration with a complex LU solve.
fn eigenvector(
    lc: &DMatrix<Complex64>,
    z: Complex64,
    scale: f64,
) -> Result<DVector<Complex64>, SpectralError> {
    let n = lc.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    for jitter in [1e-12, 1e-10, 1e-8] {
        let shift = z + Complex64::new(jitter * scale.max(1e-12), 0.0);
        let lu = nalgebra::linalg::LU::new(lc - id.clone() * shift);
        let mut v = deterministic_start(n);
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&v) {
                Some(w) => {
                    let norm = w.norm();
                    if !norm.is_finite() || norm == 0.0 {
                        ok = false;
                        break;
                    }
                    v = w / Complex64::new(norm, 0.0);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let residual = (lc * &v - &v * z).norm();
        if residual <= 1e-10 * scale.max(1.0) {
            phase_normalize(&mut v);
            return Ok(v);
        }
    }
    Err(SpectralError::EigenFailure(format!(
        "inverse iteration did not converge at eigenvalue {z}"
    )))
}

/// Diagonalize the linear Hamiltonian flow matrix `l`, given in interleaved
/// (p₁,q₁,p₂,q₂,…) coordinates: returns Ũ with Ũ^{-1} l Ũ diagonal and
/// ᵀŨ J Ũ = J for the interleaved standard form, eigenvector pairs scaled so
/// the symplectic pairing of each pair equals one. Refuses spectra with a
/// gap below `gap_threshold`.
pub fn symplectic_diagonalize_matrix(
    l: &DMatrix<f64>,
    gap_threshold: f64,
) -> Result<SymplecticBasis, SpectralError> {
    let n = l.nrows();
    if n % 2 != 0 || l.ncols() != n {
        return Err(SpectralError::ShapeMismatch(
            "flow matrix must be square and even-dimensional".into(),
        ));
    }
    let p = n / 2;
    let j = standard_j(p);
    let scale = op_norm_real(l);
    let evs = complex_eigenvalues_of_real(l);

    let mut gap = f64::INFINITY;
    for i in 0..n {
        for k in (i + 1)..n {
            gap = gap.min((evs[i] - evs[k]).norm());
        }
    }
    if gap < gap_threshold {
        return Err(SpectralError::ClusteredSpectrum {
            gap,
            threshold: gap_threshold,
        });
    }

    // representative of each ± pair: positive imaginary part, or positive
    // real part on the real axis
    let mut reps: Vec<Complex64> = evs
        .iter()
        .cloned()
        .filter(|z| {
            let t = type_tol(*z);
            z.im > t || (z.im.abs() <= t && z.re > 0.0)
        })
        .collect();
    if reps.len() != p {
        return Err(SpectralError::EigenFailure(
            "spectrum does not split into ± pairs".into(),
        ));
    }
    sort_complex(&mut reps);

    let lc = to_complex(l);
    let jc = to_complex(&j);
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut pairings = Vec::with_capacity(p);
    let mut diagonal = Vec::with_capacity(n);
    for (lidx, &z) in reps.iter().enumerate() {
        let v_minus = eigenvector(&lc, -z, scale)?;
        let v_plus = eigenvector(&lc, z, scale)?;
        // complex-bilinear pairing ᵀv J w of the two eigenvectors
        let pi = (v_minus.transpose() * &jc * &v_plus)[(0, 0)];
        if pi.norm() < 1e-10 {
            return Err(SpectralError::EigenFailure(format!(
                "degenerate symplectic pairing at eigenvalue {z}"
            )));
        }
        pairings.push(pi);
        let col_minus = v_minus.map(|x| x / pi);
        u.set_column(2 * lidx, &col_minus);
        u.set_column(2 * lidx + 1, &v_plus);
        diagonal.push(-z);
        diagonal.push(z);
    }

    // residuals: conjugation against the diagonal, and symplecticity
    let lu = nalgebra::linalg::LU::new(u.clone());
    let lu_inv = lu
        .try_inverse()
        .ok_or_else(|| SpectralError::EigenFailure("basis matrix not invertible".into()))?;
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for (i, z) in diagonal.iter().enumerate() {
        d[(i, i)] = *z;
    }
    let residual_diagonal = op_norm(&(&lu_inv * &lc * &u - &d));
    let residual_symplectic = op_norm(&(u.transpose() * &jc * &u - &jc));
    if residual_diagonal > 1e-9 * scale.max(1.0) || residual_symplectic > 1e-9 {
        return Err(SpectralError::EigenFailure(format!(
            "residuals too large: diag {residual_diagonal:.3e}, symplectic {residual_symplectic:.3e}"
        )));
    }
    Ok(SymplecticBasis {
        u,
        diagonal,
        pairings,
        residual_diagonal,
        residual_symplectic,
    })
}

/// Symplectic diagonalization of one normal-form block (flow J K̃).
pub fn symplectic_diagonalize(
    block: &KBlock,
    gap_threshold: f64,
) -> Result<SymplecticBasis, SpectralError> {
    let j = standard_j(block.modes());
    let l = &j * &block.real;
    symplectic_diagonalize_matrix(&l, gap_threshold)
}

/// The 4×4 real Hamiltonian a(p₁q₁+p₂q₂) + b(p₁q₂−p₂q₁) in interleaved
/// coordinates (p₁,q₁,p₂,q₂); its flow J A has eigenvalues ±a±ib.
pub fn quadruple_block(a: f64, b: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, a, 0.0, b, //
            a, 0.0, -b, 0.0, //
            0.0, -b, 0.0, a, //
            b, 0.0, a, 0.0,
        ],
    )
}

/// The 2×2 real hyperbolic Hamiltonian κ p q in coordinates (p, q).
pub fn real_hyperbolic_block(kappa: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, kappa, kappa, 0.0])
}

// ---------------------------------------------------------------------------
// eigenvector-matrix inverse bound and spectra continuity

/// For a diagonalizable real matrix with eigenvalue gap ≥ δ, verify the
/// inverse bound ‖U^{-1}‖ ≤ √N (2 ‖L‖ / δ)^{N−1} for the matrix U of unit
/// eigenvectors.
pub fn inverse_bound_check(l: &DMatrix<f64>, delta: f64) -> Result<bool, SpectralError> {
    let n = l.nrows();
    let evs = complex_eigenvalues_of_real(l);
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for k in (i + 1)..n {
            gap = gap.min((evs[i] - evs[k]).norm());
        }
    }
    if gap < delta {
        return Err(SpectralError::ClusteredSpectrum {
            gap,
            threshold: delta,
        });
    }
    let scale = op_norm_real(l);
    let lc = to_complex(l);
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for (i, &z) in evs.iter().enumerate() {
        let v = eigenvector(&lc, z, scale)?;
        u.set_column(i, &v);
    }
    let (_, sigma_min) = singular_extremes(&u);
    let inv_norm = 1.0 / sigma_min;
    let bound = (n as f64).sqrt() * (2.0 * scale / delta).powi(n as i32 - 1);
    // tiny relative slack so exact-equality cases survive roundoff
    Ok(inv_norm <= bound * (1.0 + 1e-12))
}

// ---------------------------------------------------------------------------
// polynomial certificates

#[derive(Debug, Clone, Copy)]
pub struct Certificates {
    /// product over classes of the squared eigenvalue-label products,
    /// equal to det(J K̃)
    pub p: f64,
    /// product of cross-class spectral discriminants per the recipe chosen
    /// by the strong-admissibility flag
    pub d: f64,
    /// Π μ(b) · Π_{|b|≠|b'|} (μ(b) − μ(b'))
    pub m: f64,
    pub strongly_admissible_recipe: bool,
}

fn discriminant_of_union(groups: &[&[Complex64]]) -> Complex64 {
    let all: Vec<Complex64> = groups.iter().flat_map(|g| g.iter().cloned()).collect();
    let mut prod = Complex64::new(1.0, 0.0);
    for i in 0..all.len() {
        for k in 0..all.len() {
            if i != k {
                prod *= all[i] - all[k];
            }
        }
    }
    prod
}

pub fn certificates(params: &NormalFormParams) -> Result<Certificates, SpectralError> {
    let analysis = &params.analysis;
    let kdata = build_k(params)?;
    let spectra: Vec<BlockSpectrum> = kdata
        .blocks
        .iter()
        .map(block_spectrum)
        .collect::<Result<_, _>>()?;

    // P two ways: as det(J K̃) per block, and from the eigenvalue labels
    let mut p_det = 1.0f64;
    let mut p_eig = Complex64::new(1.0, 0.0);
    for (block, spectrum) in kdata.blocks.iter().zip(&spectra) {
        let j = standard_j(block.modes());
        p_det *= (&j * &block.real).determinant();
        let mut label_prod = Complex64::new(1.0, 0.0);
        for pair in &spectrum.pairs {
            // eigenvalue iΛ ↦ label Λ = −i z
            label_prod *= Complex64::new(0.0, -1.0) * pair.z;
        }
        p_eig *= label_prod * label_prod;
    }
    let scale = 1.0 + p_det.abs();
    if (p_eig.re - p_det).abs() > 1e-6 * scale || p_eig.im.abs() > 1e-6 * scale {
        return Err(SpectralError::EigenFailure(format!(
            "certificate P disagrees between routes: {p_eig} vs {p_det}"
        )));
    }

    // D per the two §-recipes over block direct sums; with no coupled class
    // every cross product is empty and D = 1 by convention
    let m_star = analysis.m_star;
    let total = analysis.classes.len();
    let d_val = if m_star == total {
        1.0
    } else {
        let eigs: Vec<&[Complex64]> = spectra.iter().map(|s| s.eigenvalues.as_slice()).collect();
        let mut d = Complex64::new(1.0, 0.0);
        if analysis.strongly_admissible {
            let tail: Vec<&[Complex64]> = eigs[m_star..].to_vec();
            for r in 0..m_star {
                let mut groups = vec![eigs[r]];
                groups.extend(tail.iter().cloned());
                d *= discriminant_of_union(&groups);
            }
        } else {
            for l in 0..m_star {
                for r in m_star..total {
                    d *= discriminant_of_union(&[eigs[l], eigs[r]]);
                }
            }
        }
        if d.im.abs() > 1e-8 * (1.0 + d.norm()) {
            return Err(SpectralError::EigenFailure(
                "discriminant product has a nonvanishing imaginary part".into(),
            ));
        }
        d.re
    };

    // M from the diagonal coefficients, over ordered pairs of distinct norms
    let sites = &analysis.lambda_f;
    let mus: Vec<f64> = sites
        .iter()
        .map(|b| mu(params, b))
        .collect::<Result<_, _>>()?;
    let mut m_val: f64 = mus.iter().product();
    for (i, b) in sites.iter().enumerate() {
        for (k, b2) in sites.iter().enumerate() {
            if i != k && b.norm2() != b2.norm2() {
                m_val *= mus[i] - mus[k];
            }
        }
    }

    Ok(Certificates {
        p: p_det,
        d: d_val,
        m: m_val,
        strongly_admissible_recipe: analysis.strongly_admissible,
    })
}

// ---------------------------------------------------------------------------
// corner jet expansion of eigenvalue branches

#[derive(Debug, Clone, Copy)]
pub struct Nondegeneracy {
    pub k1: f64,
    pub k2: f64,
    /// excited index carrying the class's first member
    pub j_sharp: usize,
    /// excited index of the corner action
    pub corner: usize,
}

fn corner_index(params: &NormalFormParams) -> Result<usize, SpectralError> {
    let mut corner = None;
    for (i, &r) in params.rho.iter().enumerate() {
        if r == 1.0 {
            if corner.is_some() {
                return Err(SpectralError::NotACorner);
            }
            corner = Some(i);
        } else if r != 0.0 {
            return Err(SpectralError::NotACorner);
        }
    }
    corner.ok_or(SpectralError::NotACorner)
}

fn check_variation(
    params: &NormalFormParams,
    corner: usize,
    x: &[f64],
) -> Result<(), SpectralError> {
    if x.len() != params.analysis.n() {
        return Err(SpectralError::BadVariation(format!(
            "variation has {} entries for {} excited points",
            x.len(),
            params.analysis.n()
        )));
    }
    for (i, &xi) in x.iter().enumerate() {
        if i == corner && xi != 0.0 {
            return Err(SpectralError::BadVariation(
                "the corner component of the variation must be zero".into(),
            ));
        }
        if i != corner && xi <= 0.0 {
            return Err(SpectralError::BadVariation(
                "off-corner variation components must be positive".into(),
            ));
        }
    }
    Ok(())
}

/// Second-order jet of the tracked eigenvalue branch Λ^r_1 along the corner
/// variation ρ_j(ε) = (ε x_j)², ρ_corner ≡ 1: returns the analytic
/// coefficients with Λ^r_1(ε) = Λ^r_1(0) + (ε²/2)(k₁ + k₂) + O(ε⁴).
pub fn nondegeneracy_expansion(
    params: &NormalFormParams,
    class_r: usize,
    x: &[f64],
) -> Result<Nondegeneracy, SpectralError> {
    let analysis = &params.analysis;
    let corner = corner_index(params)?;
    check_variation(params, corner, x)?;
    if class_r >= analysis.classes.len() {
        return Err(SpectralError::ShapeMismatch(format!(
            "class index {class_r} out of range"
        )));
    }
    let class = &analysis.classes[class_r];
    let first = &class.members[0];
    let j_sharp = analysis.ell[first];
    let c_star = normal_form::c_star(params.ctx.d);
    let lam = |a: &LatticePoint| params.ctx.lambda(a);
    let lam_sharp = lam(&analysis.points[j_sharp]);

    // k₁ = d²/dε² μ(a^r_1, ρ(ε)): the diagonal coefficient's own jet
    let mut cross: f64 = 0.0;
    for (j, a) in analysis.points.iter().enumerate() {
        if j != corner {
            cross += x[j] * x[j] / lam(a);
        }
    }
    let x_sharp = x[j_sharp];
    let k1 = c_star / lam_sharp * (3.0 * x_sharp * x_sharp / lam_sharp - 2.0 * cross);

    // k₂: first-order couplings of the first member against the rest of its
    // class, reduced by the corner values of μ
    let mu_first = mu(params, first)?;
    let mut k2 = 0.0;
    for member in class.members.iter().skip(1) {
        let phi = if j_sharp == corner {
            x[analysis.ell[member]]
        } else if analysis.ell[member] == corner {
            x[j_sharp]
        } else {
            0.0
        };
        if phi == 0.0 {
            continue;
        }
        let mu_j = mu(params, member)?;
        // second-order perturbation of the tracked branch: a direct coupling
        // shifts it by c²/(μ₁−μ_j), a conjugate coupling by −c²/(μ₁+μ_j),
        // and c is linear in ε so the ε² jet carries a factor 2
        let denom_contrib = if analysis.is_minus_pair(first, member) {
            2.0 / (mu_first - mu_j)
        } else if analysis.is_plus_pair(first, member) {
            -2.0 / (mu_first + mu_j)
        } else {
            continue;
        };
        k2 += phi * phi / (lam(member) * lam(member)) * denom_contrib;
    }
    k2 *= c_star * c_star / (lam_sharp * lam_sharp);

    Ok(Nondegeneracy {
        k1,
        k2,
        j_sharp,
        corner,
    })
}

/// Λ^r_1 at one point of the corner variation, tracked from its ε = 0 value
/// μ(a^r_1, ρ_*) by nearest-match continuation over the class spectrum.
pub fn tracked_branch(
    params: &NormalFormParams,
    class_r: usize,
    x: &[f64],
    eps: f64,
) -> Result<f64, SpectralError> {
    let corner = corner_index(params)?;
    check_variation(params, corner, x)?;
    let analysis = &params.analysis;
    let class = &analysis.classes[class_r];
    let reference = mu(params, &class.members[0])?;

    let mut rho = vec![0.0; analysis.n()];
    rho[corner] = 1.0;
    for (j, &xj) in x.iter().enumerate() {
        if j != corner {
            let r = (eps * xj) * (eps * xj);
            if r > 0.0 && r < 1e-12 {
                return Err(SpectralError::BadVariation(format!(
                    "variation step {eps} puts action {r:.3e} below the validation floor"
                )));
            }
            rho[j] = r;
        }
    }
    let moved = NormalFormParams::new(params.ctx.clone(), analysis.clone(), rho, params.nu)?;
    let kdata = build_k(&moved)?;
    let spectrum = block_spectrum(&kdata.blocks[class_r])?;

    let mut candidates = Vec::new();
    for pair in &spectrum.pairs {
        let t = type_tol(pair.z);
        if pair.z.re.abs() > t {
            return Err(SpectralError::CrossingDetected(format!(
                "branch left the elliptic regime at eps={eps}: eigenvalue {}",
                pair.z
            )));
        }
        candidates.push(pair.z.im);
        candidates.push(-pair.z.im);
    }
    let mut best = f64::INFINITY;
    let mut second = f64::INFINITY;
    let mut arg = 0.0;
    for &c in &candidates {
        let dist = (c - reference).abs();
        if dist < best {
            second = best;
            best = dist;
            arg = c;
        } else if dist < second {
            second = dist;
        }
    }
    let tol = 1e-9 * (1.0 + reference.abs());
    if second - best < 10.0 * tol {
        return Err(SpectralError::CrossingDetected(format!(
            "two branches within 10× tolerance of the tracked value at eps={eps}"
        )));
    }
    Ok(arg)
}

/// Second central finite difference of the tracked branch at ε = 0.
pub fn tracked_second_difference(
    params: &NormalFormParams,
    class_r: usize,
    x: &[f64],
    eps: f64,
) -> Result<f64, SpectralError> {
    let at0 = tracked_branch(params, class_r, x, 0.0)?;
    let plus = tracked_branch(params, class_r, x, eps)?;
    let minus = tracked_branch(params, class_r, x, -eps)?;
    Ok((plus - 2.0 * at0 + minus) / (eps * eps))
}

/// Richardson extrapolation of the second difference over steps ε and ε/2.
pub fn tracked_second_derivative(
    params: &NormalFormParams,
    class_r: usize,
    x: &[f64],
    eps: f64,
) -> Result<f64, SpectralError> {
    let coarse = tracked_second_difference(params, class_r, x, eps)?;
    let fine = tracked_second_difference(params, class_r, x, eps / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

// ---------------------------------------------------------------------------
// spectral-asymptotic hypothesis verifier

#[derive(Debug, Clone)]
pub struct ConditionMargin {
    pub margin: f64,
    pub witness: String,
}

impl ConditionMargin {
    fn vacuous() -> Self {
        ConditionMargin {
            margin: f64::MAX,
            witness: "vacuous (no hyperbolic sites)".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct A1Report {
    pub delta0: f64,
    /// asymptotic constant and low-block radius 2·max⟨a⟩³
    pub c: f64,
    pub beta: f64,
    pub nu: f64,
    pub index_cutoff: i64,
    pub elliptic_sites: Vec<LatticePoint>,
    pub hyperbolic_sites: Vec<LatticePoint>,
    /// (a) |Λ_a| ≥ δ₀
    pub lower_bound: ConditionMargin,
    /// (b) |Λ_a − |a|²| ≤ c⟨a⟩^{−β}
    pub asymptotics: ConditionMargin,
    /// (c) ‖(J𝐇)^{-1}‖ ≤ 1/δ₀
    pub hyperbolic_invertible: ConditionMargin,
    /// (c) ‖(Λ_a I − iJ𝐇)^{-1}‖ ≤ 1/δ₀
    pub hyperbolic_shifted: ConditionMargin,
    /// (d) |Λ_a + Λ_b| ≥ δ₀
    pub sums: ConditionMargin,
    /// (e) |Λ_a − Λ_b| ≥ δ₀ across distinct blocks
    pub differences: ConditionMargin,
    pub pass: bool,
}

struct Mode {
    label: String,
    lambda: f64,
    norm2: i128,
    /// None = merged low block, Some(r2) = high block keyed by the norm
    block: Option<i128>,
}

/// Check the five spectral-asymptotic conditions for the external sites and
/// the rescaled elliptic resonant frequencies, with the hyperbolic part in
/// its ν-scaled real normal form. Failures are reported as negative margins,
/// never raised.
pub fn check_hypothesis_a1(
    params: &NormalFormParams,
    index_cutoff: i64,
    delta0: f64,
) -> Result<A1Report, SpectralError> {
    let analysis = &params.analysis;
    let nu = params.nu;
    let report = analyze_spectrum(params)?;
    let c_radius = dispersion::low_block_radius(analysis);
    let c_radius2 = (c_radius * c_radius).floor() as i128;
    let beta = 2.0;

    // rescaled elliptic resonant modes: ν·Λ̃ with signs matched to μ
    let mut modes: Vec<Mode> = Vec::new();
    for (block, spectrum) in report.kdata.blocks.iter().zip(&report.blocks) {
        if spectrum.hyperbolic {
            continue;
        }
        let lam_tildes: Vec<f64> = spectrum.pairs.iter().map(|p| p.z.im).collect();
        let mut used = vec![false; lam_tildes.len()];
        for member in &block.members {
            let mu_b = mu(params, member)?;
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (i, &lt) in lam_tildes.iter().enumerate() {
                if !used[i] {
                    let d = (lt - mu_b.abs()).abs();
                    if d < best {
                        best = d;
                        arg = i;
                    }
                }
            }
            used[arg] = true;
            let signed = mu_b.signum() * lam_tildes[arg];
            modes.push(Mode {
                label: format!("{member} (resonant)"),
                lambda: nu * signed,
                norm2: member.norm2(),
                block: None,
            });
        }
    }

    // external modes, one representative per achievable norm
    let excited_norms: Vec<i128> = analysis.points.iter().map(|p| p.norm2()).collect();
    let max_r2 = (index_cutoff as i128) * (index_cutoff as i128);
    for r2 in 0..=max_r2 {
        if excited_norms.contains(&r2) {
            continue;
        }
        let sphere = integer_sphere(analysis.d, r2);
        let Some(rep) = sphere.into_iter().next() else {
            continue;
        };
        let lam = normal_form::external_lambda(params, &rep)?;
        modes.push(Mode {
            label: format!("{rep} (external)"),
            lambda: lam,
            norm2: r2,
            block: if r2 > c_radius2 { Some(r2) } else { None },
        });
    }

    // hyperbolic normal form K̂: one real block per hyperbolic pair/quadruple
    let mut hyper_blocks: Vec<DMatrix<f64>> = Vec::new();
    for spectrum in &report.blocks {
        if !spectrum.hyperbolic {
            continue;
        }
        let mut quad_reps: Vec<Complex64> = Vec::new();
        for pair in &spectrum.pairs {
            match pair.mode_type {
                ModeType::Elliptic => {
                    // an elliptic pair inside a hyperbolic class joins the
                    // block's real normal form as a rotation Λ(p²+q²)/2
                    let lam = pair.z.im;
                    hyper_blocks.push(DMatrix::from_row_slice(2, 2, &[lam, 0.0, 0.0, lam]));
                }
                ModeType::RealHyperbolic => {
                    hyper_blocks.push(real_hyperbolic_block(pair.z.re));
                }
                ModeType::ComplexQuadruple => quad_reps.push(pair.z),
                ModeType::Degenerate => {
                    hyper_blocks.push(real_hyperbolic_block(0.0));
                }
            }
        }
        // pair up quadruple representatives z = x+iy and −x+iy
        while let Some(z) = quad_reps.pop() {
            let target = Complex64::new(-z.re, z.im);
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (i, w) in quad_reps.iter().enumerate() {
                let d = (w - target).norm();
                if d < best {
                    best = d;
                    arg = i;
                }
            }
            if arg == usize::MAX || best > 1e-6 * (1.0 + z.norm()) {
                return Err(SpectralError::EigenFailure(
                    "complex eigenvalues do not close into quadruples".into(),
                ));
            }
            quad_reps.remove(arg);
            hyper_blocks.push(quadruple_block(z.re.abs(), z.im.abs()));
        }
    }

    let (hyperbolic_invertible, hyperbolic_shifted) = if hyper_blocks.is_empty() {
        (ConditionMargin::vacuous(), ConditionMargin::vacuous())
    } else {
        let total: usize = hyper_blocks.iter().map(|b| b.nrows()).sum();
        let mut k_hat = DMatrix::<f64>::zeros(total, total);
        let mut j_hat = DMatrix::<f64>::zeros(total, total);
        let mut off = 0;
        for b in &hyper_blocks {
            let w = b.nrows();
            k_hat.view_mut((off, off), (w, w)).copy_from(b);
            j_hat
                .view_mut((off, off), (w, w))
                .copy_from(&standard_j(w / 2));
            off += w;
        }
        let jh = to_complex(&(&j_hat * &k_hat * nu));
        let (_, sigma_min) = singular_extremes(&jh);
        let inv_margin = ConditionMargin {
            margin: sigma_min - delta0,
            witness: format!("σ_min(J𝐇) = {sigma_min:.6e}"),
        };
        let i_jh = jh.map(|z| Complex64::new(0.0, 1.0) * z);
        let id = DMatrix::<Complex64>::identity(total, total);
        let mut worst = f64::INFINITY;
        let mut wit = String::new();
        for m in &modes {
            let shifted = &id * Complex64::new(m.lambda, 0.0) - &i_jh;
            let (_, s) = singular_extremes(&shifted);
            if s < worst {
                worst = s;
                wit = format!("σ_min(Λ_a I − iJ𝐇) = {s:.6e} at {}", m.label);
            }
        }
        (
            inv_margin,
            ConditionMargin {
                margin: worst - delta0,
                witness: wit,
            },
        )
    };

    // (a)
    let mut lower = ConditionMargin {
        margin: f64::MAX,
        witness: String::new(),
    };
    for m in &modes {
        let v = m.lambda.abs() - delta0;
        if v < lower.margin {
            lower = ConditionMargin {
                margin: v,
                witness: format!("|Λ| = {:.6e} at {}", m.lambda.abs(), m.label),
            };
        }
    }

    // (b)
    let mut asym = ConditionMargin {
        margin: f64::MAX,
        witness: String::new(),
    };
    for m in &modes {
        let bracket2 = (m.norm2.max(1)) as f64;
        let bound = c_radius * bracket2.powf(-beta / 2.0);
        let dev = (m.lambda - m.norm2 as f64).abs();
        let v = bound - dev;
        if v < asym.margin {
            asym = ConditionMargin {
                margin: v,
                witness: format!("|Λ − |a|²| = {dev:.6e} vs bound {bound:.6e} at {}", m.label),
            };
        }
    }

    // (d), (e)
    let mut sums = ConditionMargin {
        margin: f64::MAX,
        witness: String::new(),
    };
    let mut diffs = ConditionMargin {
        margin: f64::MAX,
        witness: String::new(),
    };
    for i in 0..modes.len() {
        for k in i..modes.len() {
            let (a, b) = (&modes[i], &modes[k]);
            let s = (a.lambda + b.lambda).abs() - delta0;
            if s < sums.margin {
                sums = ConditionMargin {
                    margin: s,
                    witness: format!("{} + {}", a.label, b.label),
                };
            }
            if i != k && a.block != b.block {
                let d = (a.lambda - b.lambda).abs() - delta0;
                if d < diffs.margin {
                    diffs = ConditionMargin {
                        margin: d,
                        witness: format!("{} − {}", a.label, b.label),
                    };
                }
            }
        }
    }

    let pass = [
        &lower,
        &asym,
        &hyperbolic_invertible,
        &hyperbolic_shifted,
        &sums,
        &diffs,
    ]
    .iter()
    .all(|c| c.margin > 0.0);
    Ok(A1Report {
        delta0,
        c: c_radius,
        beta,
        nu,
        index_cutoff,
        elliptic_sites: report.elliptic_sites,
        hyperbolic_sites: report.hyperbolic_sites,
        lower_bound: lower,
        asymptotics: asym,
        hyperbolic_invertible,
        hyperbolic_shifted,
        sums,
        differences: diffs,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionContext;
    use crate::lattice::{analyze_set, pt};

    fn planar_params(m: f64, rho: Vec<f64>, nu: f64) -> NormalFormParams {
        let analysis = analyze_set(2, &[pt(&[0, 1]), pt(&[1, -1])]).unwrap();
        let ctx = DispersionContext::new(2, m).unwrap();
        NormalFormParams::new(ctx, analysis, rho, nu).unwrap()
    }

    #[test]
    fn singleton_spectra_are_pure_imaginary_mu() {
        let p = planar_params(1.0, vec![1.0, 1.0], 0.0);
        let k = build_k(&p).unwrap();
        for block in k.blocks.iter().take(4) {
            let s = block_spectrum(block).unwrap();
            assert_eq!(s.pairs.len(), 1);
            assert_eq!(s.pairs[0].mode_type, ModeType::Elliptic);
            let mu0 = block.mus[0];
            assert!((s.pairs[0].z.im - mu0.abs()).abs() <= 1e-12 * (1.0 + mu0.abs()));
            assert!(s.pairs[0].z.re.abs() <= 1e-12);
            assert!(!s.hyperbolic);
        }
    }

    #[test]
    fn planar_pair_block_is_a_complex_quadruple() {
        let p = planar_params(1.0, vec![1.0, 1.0], 0.0);
        let k = build_k(&p).unwrap();
        let s = block_spectrum(&k.blocks[4]).unwrap();
        assert!(s.hyperbolic);
        assert_eq!(s.pairs.len(), 2);
        for pair in &s.pairs {
            assert_eq!(pair.mode_type, ModeType::ComplexQuadruple);
        }
        // quadruple closure: the two representatives are negated conjugates
        let (z1, z2) = (s.pairs[0].z, s.pairs[1].z);
        assert!((z1 - Complex64::new(-z2.re, z2.im)).norm() <= 1e-10);

        // eigenvalues agree with i/2 times the factored-quartic roots
        let (beta, gamma, alpha) = pair_block_parameters(&p).unwrap();
        assert!(discriminant_2d(beta, gamma, alpha) < 0.0);
        let mut expected: Vec<Complex64> = quartet_roots(beta, gamma, alpha)
            .into_iter()
            .map(|r| Complex64::new(0.0, 0.5) * r)
            .collect();
        sort_complex(&mut expected);
        let dist = multiset_distance(&s.eigenvalues, &expected);
        let scale = expected.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dist <= 1e-10 * scale.max(1e-30), "dist={dist}");
    }

    #[test]
    fn line_example_is_elliptic() {
        let analysis = analyze_set(1, &[pt(&[1]), pt(&[2])]).unwrap();
        let ctx = DispersionContext::new(1, 1.5).unwrap();
        let p = NormalFormParams::new(ctx, analysis, vec![0.5, 0.5], 0.0).unwrap();
        let rep = analyze_spectrum(&p).unwrap();
        assert!(rep.hyperbolic_sites.is_empty());
        for s in &rep.blocks {
            for pair in &s.pairs {
                assert_eq!(pair.mode_type, ModeType::Elliptic);
            }
        }
    }

    #[test]
    fn spectra_closed_under_negation_and_conjugation() {
        let p = planar_params(1.3, vec![0.7, 0.4], 0.0);
        let k = build_k(&p).unwrap();
        for block in &k.blocks {
            let s = block_spectrum(block).unwrap();
            let negated: Vec<Complex64> = s.eigenvalues.iter().map(|z| -z).collect();
            let conjugated: Vec<Complex64> = s.eigenvalues.iter().map(|z| z.conj()).collect();
            let scale = 1.0 + s.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(multiset_distance(&s.eigenvalues, &negated) <= 1e-10 * scale);
            assert!(multiset_distance(&s.eigenvalues, &conjugated) <= 1e-10 * scale);
        }
    }

    #[test]
    fn symplectic_diagonalization_of_quadruple_blocks() {
        let (a, b) = (1.5, 0.7);
        let aa = quadruple_block(a, b);
        let j = standard_j(2);
        let l = &j * &aa;
        let basis = symplectic_diagonalize_matrix(&l, 1e-8).unwrap();
        assert!(basis.residual_diagonal <= 1e-9 * op_norm_real(&l).max(1.0));
        assert!(basis.residual_symplectic <= 1e-9);
        // eigenvalues ±a±ib
        let mut expected = vec![
            Complex64::new(a, b),
            Complex64::new(a, -b),
            Complex64::new(-a, b),
            Complex64::new(-a, -b),
        ];
        sort_complex(&mut expected);
        let mut got = basis.diagonal.clone();
        sort_complex(&mut got);
        assert!(multiset_distance(&got, &expected) <= 1e-9);

        // norm certificates
        let t = 2.0 * (op_norm_real(&aa) / a.min(b)).powi(3);
        let (umax, umin) = singular_extremes(&basis.u);
        assert!(umax <= 2.0 * t);
        assert!(1.0 / umin <= t);
    }

    #[test]
    fn symplectic_diagonalization_of_singleton() {
        let p = planar_params(1.0, vec![1.0, 1.0], 0.0);
        let k = build_k(&p).unwrap();
        let block = &k.blocks[0];
        let basis = symplectic_diagonalize(block, 1e-10).unwrap();
        let mu0 = block.mus[0];
        // spectrum ±iμ
        let mut got = basis.diagonal.clone();
        sort_complex(&mut got);
        let mut expected = vec![Complex64::new(0.0, -mu0.abs()), Complex64::new(0.0, mu0.abs())];
        sort_complex(&mut expected);
        assert!(multiset_distance(&got, &expected) <= 1e-12);
        // columns proportional to the reference rotation (1/√2)[[1,1],[i,−i]];
        // the symplectic pairing forces the two column phases to multiply to i
        let s = 1.0 / 2.0f64.sqrt();
        let upsilon = [
            [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
            [Complex64::new(0.0, s), Complex64::new(0.0, -s)],
        ];
        let mut phases = Vec::new();
        for col in 0..2 {
            // match the column to whichever reference column it's parallel to
            let v0 = basis.u[(0, col)];
            let v1 = basis.u[(1, col)];
            let mut matched = false;
            for rc in 0..2 {
                let c = v0 / upsilon[0][rc];
                if (v1 - upsilon[1][rc] * c).norm() <= 1e-9 * (1.0 + c.norm()) {
                    phases.push(c);
                    matched = true;
                    break;
                }
            }
            assert!(matched, "column {col} not proportional to a reference column");
        }
        assert!((phases[0] * phases[1] - Complex64::new(0.0, 1.0)).norm() <= 1e-9);
    }

    #[test]
    fn clustered_spectrum_is_refused() {
        // two equal κ-blocks in one matrix: eigenvalue gap zero
        let mut l = DMatrix::zeros(4, 4);
        l.view_mut((0, 0), (2, 2))
            .copy_from(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        l.view_mut((2, 2), (2, 2))
            .copy_from(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        match symplectic_diagonalize_matrix(&l, 1e-8) {
            Err(SpectralError::ClusteredSpectrum { .. }) => {}
            other => panic!("expected clustered-spectrum refusal, got {other:?}"),
        }
    }

    #[test]
    fn inverse_bound_holds() {
        // N=1: U = [1], bound = 1
        let one = DMatrix::from_row_slice(1, 1, &[3.0]);
        assert!(inverse_bound_check(&one, 0.5).unwrap());
        // a fixed diagonalizable 4×4 with a comfortable gap
        let l = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.3, 0.0, 0.1, //
                0.0, 2.0, 0.2, 0.0, //
                0.1, 0.0, 3.5, 0.3, //
                0.0, 0.2, 0.0, 5.0,
            ],
        );
        assert!(inverse_bound_check(&l, 0.5).unwrap());
        // gap violation is refused
        let tight = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0 + 1e-12]);
        assert!(matches!(
            inverse_bound_check(&tight, 1e-6),
            Err(SpectralError::ClusteredSpectrum { .. })
        ));
    }

    #[test]
    fn spectra_continuity_slope_on_perturbation_ladder() {
        // nilpotent 4×4 Jordan block plus ε in the corner has eigenvalues
        // ε^{1/4}·(4th roots of unity): log-log slope of the spectral
        // distance against ‖ΔA‖ = ε must stay near 1/4
        let n = 4usize;
        let mut base = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            base[(i, i + 1)] = 1.0;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 2..=8 {
            let eps = 10.0f64.powi(-k);
            let mut m = base.clone();
            m[(n - 1, 0)] = eps;
            let evs = complex_eigenvalues_of_real(&m);
            let dist = evs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            xs.push(eps.ln());
            ys.push(dist.ln());
        }
        let nn = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        assert!(slope <= 0.25 + 0.1, "slope={slope}");
        assert!(slope > 0.15, "slope={slope}");
    }

    #[test]
    fn certificates_planar_and_single_site() {
        let p = planar_params(1.0, vec![1.0, 1.0], 0.0);
        let c = certificates(&p).unwrap();
        assert!(c.strongly_admissible_recipe);
        assert!(c.p != 0.0);
        assert!(c.d != 0.0);
        assert!(c.m != 0.0);

        // a single excited site: all classes are singletons, D = 1, P > 0
        let analysis = analyze_set(2, &[pt(&[0, 1])]).unwrap();
        let ctx = DispersionContext::new(2, 1.0).unwrap();
        let ps = NormalFormParams::new(ctx, analysis, vec![1.0], 0.0).unwrap();
        let cs = certificates(&ps).unwrap();
        assert_eq!(cs.d, 1.0);
        assert!(cs.p > 0.0);
    }

    #[test]
    fn nondegeneracy_corner_jets() {
        // the corner over the first excited point
        let p = planar_params(1.0, vec![1.0, 0.0], 0.0);
        let x = vec![0.0, 1.0];
        // class 4 is the coupled pair; its first member sits over the corner
        let nd_pair = nondegeneracy_expansion(&p, 4, &x).unwrap();
        assert_eq!(nd_pair.corner, 0);
        assert_eq!(nd_pair.j_sharp, 0);
        assert!(nd_pair.k2 != 0.0);
        // singleton class over the corner point: same k₁, zero k₂
        let nd_single = nondegeneracy_expansion(&p, 1, &x).unwrap();
        assert_eq!(nd_single.j_sharp, 0);
        assert_eq!(nd_single.k2, 0.0);
        assert!((nd_pair.k1 - nd_single.k1).abs() <= 1e-15);

        // first derivative vanishes by symmetry of the variation
        let h = 1e-3;
        let f = |e: f64| tracked_branch(&p, 4, &x, e).unwrap();
        let d1 = (f(h) - f(-h)) / (2.0 * h);
        assert!(d1.abs() <= 1e-10);

        // second derivative against the analytic jet
        let fd = tracked_second_derivative(&p, 4, &x, 1e-3).unwrap();
        let analytic = nd_pair.k1 + nd_pair.k2;
        assert!(
            (fd - analytic).abs() <= 1e-4 * analytic.abs(),
            "fd={fd} analytic={analytic}"
        );

        // rejects non-corners and bad variations
        let pbad = planar_params(1.0, vec![0.5, 0.5], 0.0);
        assert!(matches!(
            nondegeneracy_expansion(&pbad, 4, &x),
            Err(SpectralError::NotACorner)
        ));
        assert!(nondegeneracy_expansion(&p, 4, &[1.0, 1.0]).is_err());
        assert!(nondegeneracy_expansion(&p, 4, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn a1_margins_on_elliptic_corner() {
        let p = planar_params(1.0, vec![0.05, 0.95], 1e-3);
        let delta0 = 1e-6;
        let rep = check_hypothesis_a1(&p, 8, delta0).unwrap();
        assert!(rep.hyperbolic_sites.is_empty());
        assert!(rep.pass, "margins: a={} b={} d={} e={}",
            rep.lower_bound.margin, rep.asymptotics.margin, rep.sums.margin, rep.differences.margin);
        assert_eq!(rep.hyperbolic_invertible.margin, f64::MAX);
    }

    #[test]
    fn a1_margins_with_hyperbolic_block() {
        let p = planar_params(1.0, vec![1.0, 1.0], 1e-3);
        let rep = check_hypothesis_a1(&p, 8, 1e-6).unwrap();
        assert_eq!(rep.hyperbolic_sites.len(), 2);
        assert!(rep.hyperbolic_invertible.margin > 0.0);
        assert!(rep.hyperbolic_shifted.margin > 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn a1_single_site_merged_blocks() {
        let analysis = analyze_set(2, &[pt(&[0, 1])]).unwrap();
        let ctx = DispersionContext::new(2, 1.0).unwrap();
        let p = NormalFormParams::new(ctx, analysis, vec![1.0], 1e-3).unwrap();
        let rep = check_hypothesis_a1(&p, 8, 1e-9).unwrap();
        assert!(rep.sums.margin > 0.0);
        assert!(rep.differences.margin > 0.0);
        assert!(rep.pass);
    }
}
