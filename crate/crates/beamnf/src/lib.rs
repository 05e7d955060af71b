//! Finite-dimensional normal-form data for the nonlinear beam equation on a
//! torus, attached to a finite set of excited lattice modes.
//!
//! Everything here is exact or certifiably accurate at double precision:
//!
//! - [`lattice`]: integer-lattice combinatorics of an excited set — sphere
//!   enumeration, admissibility and the angle-based strong admissibility
//!   test, the finitely many resonantly coupled external sites and their
//!   partition into interaction classes.
//! - [`dispersion`]: the frequency map `λ_a = sqrt(|a|^4 + m)` of the beam
//!   dispersion relation, its mass derivatives and their determinant
//!   identity, small-divisor classification (trivial resonances versus
//!   mass-dependent ones), and scans of the divisor floor over the mass
//!   interval and over perturbed frequencies.
//! - [`normal_form`]: the quadratic Hamiltonian that the quartic averaging
//!   step leaves on the resonant external modes — twist matrix, frequency
//!   shifts, and the block matrix `K` in complex and real coordinates.
//! - [`spectral`]: eigenvalue data of the blocks `JK` — elliptic versus
//!   hyperbolic classification, symplectic diagonalization with norm
//!   certificates, transversality certificates, second-order jets of
//!   eigenvalue branches at corner amplitudes, and the margin verifier for
//!   the lower-bound hypothesis on the full normal form.
//! - [`random_sets`]: seeded Monte-Carlo estimates of how likely random mode
//!   sets are to be admissible, and exact sphere-size censuses.
//!
//! The companion binary crate `beamnf-cli` exposes these analyses as
//! subcommands with structured JSON reports.

pub mod dispersion;
pub mod lattice;
pub mod normal_form;
pub mod random_sets;
pub mod spectral;

pub use dispersion::{DispersionContext, Divisor, DivisorKind};
pub use lattice::{analyze_set, ExcitedSetAnalysis, LatticePoint};
pub use normal_form::{build_k, NormalFormParams};
pub use spectral::{analyze_spectrum, SpectralReport};
