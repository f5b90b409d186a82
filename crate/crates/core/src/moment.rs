//! Moment map `μ = F + [Φ, Φ*]`, the Hamiltonians `H_ζ = Tr∫ μ ζ`, and
//! the identity `dH_ζ(Y) = Ω(X_ζ, Y)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::error::{LabError, Result};
use crate::hitchin::{
    check_skew_two_form, curvature, gauge_vector_field, higgs_bracket, linearized_curvature, Configuration,
    TangentVector,
};
use crate::kahler::{complex_structure, metric_g, omega, PairingValue};
use crate::lie::{conj_transpose_form, form_commutator, trace_integrate, GaugeAlgebraField};
use crate::report::IdentityReport;
use crate::surface::{wedge, wedge_one, LatticeForm};

/// Relative tolerance of the exact summation-by-parts identities.
pub const EXACT_TOL: f64 = 1e-11;
/// Relative tolerance for the analytic `dH = Ω(X_ζ, ·)` comparison.
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Relative tolerance for finite-difference comparisons.
pub const FD_TOL: f64 = 1e-5;
/// Step of the central finite differences.
pub const FD_STEP: f64 = 1e-4;

/// The moment map as a 2-form valued in skew-Hermitian matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentValue {
    pub field: LatticeForm,
}

pub fn moment(c: &Configuration) -> Result<MomentValue> {
    let field = &curvature(c)? + &higgs_bracket(c)?;
    check_skew_two_form(&field, "moment map")?;
    Ok(MomentValue { field })
}

/// `H_ζ = h_ζ + f_ζ` with its curvature and Higgs parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianParts {
    pub total: f64,
    pub curvature_part: f64,
    pub higgs_part: f64,
}

fn pair_with(w: &LatticeForm, zeta: &GaugeAlgebraField, what: &str) -> Result<f64> {
    PairingValue::new(trace_integrate(&wedge(w, zeta.form())?)?).real(what)
}

pub fn hamiltonian(c: &Configuration, zeta: &GaugeAlgebraField) -> Result<HamiltonianParts> {
    let curvature_part = pair_with(&curvature(c)?, zeta, "curvature Hamiltonian")?;
    let higgs_part = pair_with(&higgs_bracket(c)?, zeta, "Higgs Hamiltonian")?;
    let total = pair_with(&moment(c)?.field, zeta, "Hamiltonian")?;
    Ok(HamiltonianParts { total, curvature_part, higgs_part })
}

/// Left and right sides of an identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentitySides {
    fn checked(self, name: &str, tolerance: f64) -> Result<Self> {
        let scale = self.lhs.abs().max(self.rhs.abs()).max(1.0);
        if (self.lhs - self.rhs).abs() > tolerance * scale {
            return Err(LabError::IdentityViolation { name: name.into(), lhs: self.lhs, rhs: self.rhs });
        }
        Ok(self)
    }
}

fn curvature_sides(c: &Configuration, zeta: &GaugeAlgebraField, y: &TangentVector) -> Result<IdentitySides> {
    let lhs = trace_integrate(&wedge(zeta.form(), &linearized_curvature(c, y)?)?)?;
    let x1 = gauge_vector_field(c, zeta)?.alpha();
    let rhs = trace_integrate(&wedge_one(&x1, &y.alpha())?)?;
    Ok(IdentitySides {
        lhs: PairingValue::new(lhs).real("curvature derivative")?,
        rhs: PairingValue::new(rhs).real("curvature pairing")?,
    })
}

/// `Tr∫ ζ(dβ + [β, A])` against `Tr∫ X₁ ∧ β`; exact by summation by parts.
pub fn dh_curvature(c: &Configuration, zeta: &GaugeAlgebraField, y: &TangentVector) -> Result<IdentitySides> {
    curvature_sides(c, zeta, y)?.checked("curvature Hamiltonian derivative", EXACT_TOL)
}

/// `[δ, Φ*] + [Φ, δ*]`, the derivative of `[Φ, Φ*]` along `δ`.
fn higgs_bracket_derivative(c: &Configuration, delta10: &LatticeForm) -> Result<LatticeForm> {
    let a = form_commutator(delta10, &c.phi_star())?;
    let b = form_commutator(c.phi10(), &conj_transpose_form(delta10)?)?;
    Ok(&a + &b)
}

fn higgs_sides(c: &Configuration, zeta: &GaugeAlgebraField, y: &TangentVector) -> Result<IdentitySides> {
    let lhs = trace_integrate(&wedge(&higgs_bracket_derivative(c, &y.gamma10)?, zeta.form())?)?;
    let x2 = form_commutator(zeta.form(), c.phi10())?;
    let rhs = 2.0 * trace_integrate(&wedge(&x2, &conj_transpose_form(&y.gamma10)?)?)?.re;
    Ok(IdentitySides { lhs: PairingValue::new(lhs).real("Higgs derivative")?, rhs })
}

/// `Tr∫([δ, Φ*] + [Φ, δ*]) ζ` against `2 Re Tr∫ X₂ ∧ δ*`.
pub fn df_higgs(c: &Configuration, zeta: &GaugeAlgebraField, y: &TangentVector) -> Result<IdentitySides> {
    higgs_sides(c, zeta, y)?.checked("Higgs Hamiltonian derivative", EXACT_TOL)
}

/// `dμ(X) = F′(α) + [γ, Φ*] + [Φ, γ*]`
pub fn dmoment(c: &Configuration, x: &TangentVector) -> Result<LatticeForm> {
    Ok(&linearized_curvature(c, x)? + &higgs_bracket_derivative(c, &x.gamma10)?)
}

/// `Tr∫ ζ dμ(X)`
pub fn moment_pairing(c: &Configuration, zeta: &GaugeAlgebraField, x: &TangentVector) -> Result<f64> {
    pair_with(&dmoment(c, x)?, zeta, "moment derivative pairing")
}

/// Short description of a configuration for report digests.
pub fn digest(c: &Configuration, seed: u64) -> String {
    let g = c.grid();
    format!("N={} L={} n={} seed={}", g.sides(), g.length(), c.rank(), seed)
}

/// Checks `dH_ζ(Y) = Ω(X_ζ, Y)` three ways: the curvature plus Higgs-term assembly, a
/// central finite difference of `H_ζ`, and `Ω` itself.
pub fn verify_hamiltonian_identity(
    c: &Configuration,
    zeta: &GaugeAlgebraField,
    y: &TangentVector,
    digest: &str,
) -> Result<IdentityReport> {
    let eq4 = curvature_sides(c, zeta, y)?;
    let eq5 = higgs_sides(c, zeta, y)?;
    let analytic = eq4.rhs + eq5.rhs;
    let h_plus = hamiltonian(&c.displaced(FD_STEP, y), zeta)?.total;
    let h_minus = hamiltonian(&c.displaced(-FD_STEP, y), zeta)?.total;
    let finite_difference = (h_plus - h_minus) / (2.0 * FD_STEP);
    let x_zeta = gauge_vector_field(c, zeta)?;
    let om = omega(&x_zeta, y)?;
    // roundoff floor of the difference quotient
    let fd_floor = 1e3 * f64::EPSILON * h_plus.abs().max(h_minus.abs()) / FD_STEP / FD_TOL;

    let mut r = IdentityReport::new("hamiltonian_identity", digest);
    r.real("eq4_lhs", eq4.lhs)
        .real("eq4_rhs", eq4.rhs)
        .real("eq5_lhs", eq5.lhs)
        .real("eq5_rhs", eq5.rhs)
        .real("dH_analytic", analytic)
        .real("dH_finite_difference", finite_difference)
        .real("omega_X_zeta_Y", om)
        .compare_real("eq4", eq4.lhs, eq4.rhs, EXACT_TOL, 1.0)
        .compare_real("eq5", eq5.lhs, eq5.rhs, EXACT_TOL, 1.0)
        .compare_real("analytic_vs_omega", analytic, om, ANALYTIC_TOL, 1.0)
        .compare_real("finite_difference_vs_omega", finite_difference, om, FD_TOL, fd_floor.max(1e-3));
    Ok(r)
}

/// The orbit-pairing chain behind slice invariance, with signs fixed by
/// `Ω(X, Y) = g(X, 𝓘Y)` and `𝓘² = −1`:
/// `g(X_ζ, X) = −Ω(X_ζ, 𝓘X) = −Tr∫ζ dμ(𝓘X)` and
/// `g(X_ζ, 𝓘X) = Ω(X_ζ, X) = Tr∫ζ dμ(X)`.
pub fn slice_pairing_checks(
    c: &Configuration,
    x: &TangentVector,
    zeta: &GaugeAlgebraField,
    digest: &str,
) -> Result<IdentityReport> {
    let xz = gauge_vector_field(c, zeta)?;
    let ix = complex_structure(x);
    let g_x = metric_g(&xz, x)?;
    let om_ix = omega(&xz, &ix)?;
    let mu_ix = moment_pairing(c, zeta, &ix)?;
    let g_ix = metric_g(&xz, &ix)?;
    let om_x = omega(&xz, x)?;
    let mu_x = moment_pairing(c, zeta, x)?;

    let mut r = IdentityReport::new("slice_pairings", digest);
    r.real("g(Xz,X)", g_x)
        .real("omega(Xz,IX)", om_ix)
        .real("pair(z,dmu(IX))", mu_ix)
        .real("g(Xz,IX)", g_ix)
        .real("omega(Xz,X)", om_x)
        .real("pair(z,dmu(X))", mu_x)
        .compare_real("g(Xz,X) = -omega(Xz,IX)", g_x, -om_ix, ANALYTIC_TOL, 1.0)
        .compare_real("omega(Xz,IX) = pair(z,dmu(IX))", om_ix, mu_ix, ANALYTIC_TOL, 1.0)
        .compare_real("g(Xz,IX) = omega(Xz,X)", g_ix, om_x, ANALYTIC_TOL, 1.0)
        .compare_real("omega(Xz,X) = pair(z,dmu(X))", om_x, mu_x, ANALYTIC_TOL, 1.0);
    Ok(r)
}

/// Per-site form of the Higgs step: `Im Tr([ζ,φ] e*)` against
/// `Tr([φ, e*] ζ + [e, φ*] ζ) / 2i`.
pub fn im_trace_chain(zeta: &DMatrix<C>, phi: &DMatrix<C>, e: &DMatrix<C>) -> (f64, C) {
    let comm = |a: &DMatrix<C>, b: &DMatrix<C>| a * b - b * a;
    let lhs = (comm(zeta, phi) * e.adjoint()).trace().im;
    let rhs = ((comm(phi, &e.adjoint()) + comm(e, &phi.adjoint())) * zeta).trace() / C::new(0.0, 2.0);
    (lhs, rhs)
}
