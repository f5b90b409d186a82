//! Hitchin configurations `(A, Φ)`, the gauge action, curvature, the
//! self-duality residuals and their linearizations.
//!
//! A unitary connection is stored through its `dz̄` coefficient `b`; the
//! `dz` coefficient is always `−b*`. The Higgs field is stored through
//! its `dz` coefficient `φ`.

use num_complex::Complex64 as C;
use rand::Rng;

use crate::error::{LabError, Result};
use crate::lie::{
    conj_transpose_form, form_commutator, hermitian_defect, random_field, GaugeAlgebraField, GaugeElement,
    Smoothness,
};
use crate::mat::{self, ONE};
use crate::surface::{d1, dbar, del, wedge_one, Degree, LatticeForm, OneForm, SurfaceGrid};

/// Relative tolerance for derived-structure self-checks.
const SELF_CHECK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    a01: LatticeForm,
    phi10: LatticeForm,
}

impl Configuration {
    pub fn new(a01: LatticeForm, phi10: LatticeForm) -> Result<Self> {
        a01.expect_degree(Degree::ZeroOne, "connection (0,1) part")?;
        phi10.expect_degree(Degree::OneZero, "Higgs field")?;
        a01.check_compatible(&phi10)?;
        Ok(Configuration { a01, phi10 })
    }

    pub fn zero(grid: SurfaceGrid, n: usize) -> Self {
        Configuration {
            a01: LatticeForm::zeros(grid, Degree::ZeroOne, n),
            phi10: LatticeForm::zeros(grid, Degree::OneZero, n),
        }
    }

    pub fn grid(&self) -> SurfaceGrid {
        self.a01.grid()
    }

    pub fn rank(&self) -> usize {
        self.a01.rank()
    }

    pub fn a01(&self) -> &LatticeForm {
        &self.a01
    }

    pub fn phi10(&self) -> &LatticeForm {
        &self.phi10
    }

    /// `A^{(1,0)} = −(A^{(0,1)})*`
    pub fn a10(&self) -> LatticeForm {
        conj_transpose_form(&self.a01).expect("pure (0,1) form").scale(-ONE)
    }

    pub fn connection(&self) -> OneForm {
        OneForm { dz: self.a10(), dzbar: self.a01.clone() }
    }

    /// `Φ* = φ* dz̄`
    pub fn phi_star(&self) -> LatticeForm {
        conj_transpose_form(&self.phi10).expect("pure (1,0) form")
    }

    /// Largest defect of skew-Hermitian real components `A_x, A_y`.
    pub fn unitarity_defect(&self) -> f64 {
        let (ax, ay) = self.connection().real_components();
        crate::lie::skew_defect(&ax).max(crate::lie::skew_defect(&ay))
    }

    /// `c + t X` in the affine configuration space.
    pub fn displaced(&self, t: f64, x: &TangentVector) -> Configuration {
        let t = C::new(t, 0.0);
        Configuration {
            a01: self.a01.axpy(t, &x.alpha01),
            phi10: self.phi10.axpy(t, &x.gamma10),
        }
    }

    /// Tangent vector `self − other`.
    pub fn difference(&self, other: &Configuration) -> TangentVector {
        TangentVector { alpha01: &self.a01 - &other.a01, gamma10: &self.phi10 - &other.phi10 }
    }

    pub fn max_abs_diff(&self, other: &Configuration) -> f64 {
        self.a01.max_abs_diff(&other.a01).max(self.phi10.max_abs_diff(&other.phi10))
    }
}

/// An infinitesimal deformation `(α, γ)` of a configuration, stored as
/// `α^{(0,1)}` and `γ^{(1,0)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub alpha01: LatticeForm,
    pub gamma10: LatticeForm,
}

impl TangentVector {
    pub fn new(alpha01: LatticeForm, gamma10: LatticeForm) -> Result<Self> {
        alpha01.expect_degree(Degree::ZeroOne, "tangent connection part")?;
        gamma10.expect_degree(Degree::OneZero, "tangent Higgs part")?;
        alpha01.check_compatible(&gamma10)?;
        Ok(TangentVector { alpha01, gamma10 })
    }

    pub fn zeros(grid: SurfaceGrid, n: usize) -> Self {
        TangentVector {
            alpha01: LatticeForm::zeros(grid, Degree::ZeroOne, n),
            gamma10: LatticeForm::zeros(grid, Degree::OneZero, n),
        }
    }

    pub fn grid(&self) -> SurfaceGrid {
        self.alpha01.grid()
    }

    pub fn rank(&self) -> usize {
        self.alpha01.rank()
    }

    /// `α^{(1,0)} = −(α^{(0,1)})*`
    pub fn alpha10(&self) -> LatticeForm {
        conj_transpose_form(&self.alpha01).expect("pure form").scale(-ONE)
    }

    /// Full real tangent 1-form `α`.
    pub fn alpha(&self) -> OneForm {
        OneForm { dz: self.alpha10(), dzbar: self.alpha01.clone() }
    }

    /// `γ^{(0,1)} = −(γ^{(1,0)})*`
    pub fn gamma01(&self) -> LatticeForm {
        conj_transpose_form(&self.gamma10).expect("pure form").scale(-ONE)
    }

    /// Full form `γ = γ^{(1,0)} + γ^{(0,1)}`.
    pub fn gamma(&self) -> OneForm {
        OneForm { dz: self.gamma10.clone(), dzbar: self.gamma01() }
    }

    pub fn scale(&self, t: f64) -> Self {
        TangentVector { alpha01: self.alpha01.scale_real(t), gamma10: self.gamma10.scale_real(t) }
    }

    pub fn axpy(&self, t: f64, other: &TangentVector) -> Self {
        let t = C::new(t, 0.0);
        TangentVector {
            alpha01: self.alpha01.axpy(t, &other.alpha01),
            gamma10: self.gamma10.axpy(t, &other.gamma10),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha01.max_abs().max(self.gamma10.max_abs())
    }

    pub fn max_abs_diff(&self, other: &TangentVector) -> f64 {
        self.alpha01.max_abs_diff(&other.alpha01).max(self.gamma10.max_abs_diff(&other.gamma10))
    }

    /// Euclidean inner product of the stored coefficients.
    pub(crate) fn coeff_dot(&self, other: &TangentVector) -> f64 {
        self.alpha01.real_dot(&other.alpha01) + self.gamma10.real_dot(&other.gamma10)
    }
}

impl std::ops::Add for &TangentVector {
    type Output = TangentVector;
    fn add(self, rhs: &TangentVector) -> TangentVector {
        self.axpy(1.0, rhs)
    }
}

impl std::ops::Sub for &TangentVector {
    type Output = TangentVector;
    fn sub(self, rhs: &TangentVector) -> TangentVector {
        self.axpy(-1.0, rhs)
    }
}

/// Scales a field so its largest per-site Frobenius norm equals `amplitude`.
fn normalize_sites(w: &LatticeForm, amplitude: f64) -> LatticeForm {
    let peak = w.sites().map(|b| mat::frobenius_sq(b).sqrt()).fold(0.0, f64::max);
    if peak == 0.0 {
        w.clone()
    } else {
        w.scale_real(amplitude / peak)
    }
}

/// Random configuration whose per-site blocks have Frobenius norm at most `amplitude`.
pub fn random_configuration(
    grid: SurfaceGrid,
    n: usize,
    smooth: Smoothness,
    amplitude: f64,
    rng: &mut impl Rng,
) -> Configuration {
    let a01 = random_field(grid, Degree::ZeroOne, n, smooth, rng);
    let phi10 = random_field(grid, Degree::OneZero, n, smooth, rng);
    Configuration { a01: normalize_sites(&a01, amplitude), phi10: normalize_sites(&phi10, amplitude) }
}

/// Random tangent vector with unit-variance coefficients.
pub fn random_tangent(grid: SurfaceGrid, n: usize, smooth: Smoothness, rng: &mut impl Rng) -> TangentVector {
    TangentVector {
        alpha01: random_field(grid, Degree::ZeroOne, n, smooth, rng),
        gamma10: random_field(grid, Degree::OneZero, n, smooth, rng),
    }
}

fn zero_form_view(w: &LatticeForm) -> LatticeForm {
    w.clone().with_degree(Degree::Zero)
}

/// Checks that the `dz ∧ dz̄` coefficient is Hermitian, i.e. the real
/// 2-form is skew-Hermitian valued.
pub(crate) fn check_skew_two_form(w: &LatticeForm, what: &str) -> Result<()> {
    let defect = hermitian_defect(w);
    let tolerance = SELF_CHECK_TOL * w.max_abs().max(1.0);
    if defect > tolerance {
        return Err(LabError::Consistency { what: what.into(), defect, tolerance });
    }
    Ok(())
}

/// `F(A) = dA + A ∧ A`
pub fn curvature(c: &Configuration) -> Result<LatticeForm> {
    let a = c.connection();
    let f = &d1(&a) + &wedge_one(&a, &a)?;
    check_skew_two_form(&f, "curvature")?;
    Ok(f)
}

/// `∂̄Φ` for `Φ = φ dz`, as a 2-form: `(∂̄φ) dz̄ ∧ dz`.
fn dbar_higgs(phi10: &LatticeForm) -> Result<LatticeForm> {
    let dphi = dbar(&zero_form_view(phi10))?;
    let unit_dz = LatticeForm::scalar_field(phi10.grid(), Degree::OneZero, phi10.rank(), |_, _| ONE);
    crate::surface::wedge(&dphi, &unit_dz)
}

/// `d″_A Φ = ∂̄Φ + [A^{(0,1)}, Φ]`
pub fn higgs_residual(c: &Configuration) -> Result<LatticeForm> {
    Ok(&dbar_higgs(&c.phi10)? + &form_commutator(&c.a01, &c.phi10)?)
}

/// `[Φ, Φ*]` as a 2-form.
pub fn higgs_bracket(c: &Configuration) -> Result<LatticeForm> {
    form_commutator(&c.phi10, &c.phi_star())
}

/// `(F + [Φ, Φ*], d″_A Φ)`; both vanish exactly on solutions.
pub fn selfduality_residuals(c: &Configuration) -> Result<(LatticeForm, LatticeForm)> {
    let r1 = &curvature(c)? + &higgs_bracket(c)?;
    Ok((r1, higgs_residual(c)?))
}

/// `A^{(0,1)} ↦ g A^{(0,1)} g⁻¹ + g ∂̄(g⁻¹)`, `Φ ↦ g Φ g⁻¹`.
pub fn gauge_transform(c: &Configuration, g: &GaugeElement) -> Result<Configuration> {
    c.a01.check_compatible(g.form())?;
    let ginv = g.inverse();
    let dbar_ginv = dbar(ginv.form())?;
    let inhomogeneous = g.form().mul_blocks(&dbar_ginv).with_degree(Degree::ZeroOne);
    let a01 = &g.conjugate(&c.a01)? + &inhomogeneous;
    let phi10 = g.conjugate(&c.phi10)?;
    Ok(Configuration { a01, phi10 })
}

/// `X_ζ = (−(dζ − [ζ, A]), [ζ, Φ])`
pub fn gauge_vector_field(c: &Configuration, zeta: &GaugeAlgebraField) -> Result<TangentVector> {
    let z = zeta.form();
    c.a01.check_compatible(z)?;
    let alpha01 = &form_commutator(z, &c.a01)? - &dbar(z)?;
    let gamma10 = form_commutator(z, &c.phi10)?;
    let x = TangentVector { alpha01, gamma10 };

    // The derived (1,0) part must match the direct formula −∂ζ + [ζ, A^{(1,0)}].
    let direct10 = &form_commutator(z, &c.a10())? - &del(z)?;
    let defect = x.alpha10().max_abs_diff(&direct10);
    let tolerance = SELF_CHECK_TOL * direct10.max_abs().max(1.0);
    if defect > tolerance {
        return Err(LabError::Consistency { what: "gauge vector field (1,0) part".into(), defect, tolerance });
    }
    Ok(x)
}

/// `∂̄γ^{(1,0)} + [α^{(0,1)}, Φ] + [A^{(0,1)}, γ^{(1,0)}]`, the derivative of
/// [`higgs_residual`] along `X`.
pub fn linearized_eq2(c: &Configuration, x: &TangentVector) -> Result<LatticeForm> {
    let mut out = dbar_higgs(&x.gamma10)?;
    out = &out + &form_commutator(&x.alpha01, &c.phi10)?;
    out = &out + &form_commutator(&c.a01, &x.gamma10)?;
    Ok(out)
}

/// `F′(β) = dβ + [β, A]` for a real tangent 1-form `β`.
pub fn linearized_curvature_form(c: &Configuration, beta: &OneForm) -> Result<LatticeForm> {
    let a = c.connection();
    let bracket = &wedge_one(beta, &a)? + &wedge_one(&a, beta)?;
    Ok(&d1(beta) + &bracket)
}

/// [`linearized_curvature_form`] along the connection part of `X`.
pub fn linearized_curvature(c: &Configuration, x: &TangentVector) -> Result<LatticeForm> {
    linearized_curvature_form(c, &x.alpha())
}
