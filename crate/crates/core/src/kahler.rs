//! Metric, almost complex structure and symplectic form on the
//! configuration space.
//!
//! On the lattice every pairing reduces to the coefficient formula
//! `g(X, Y) = 4h² Σ Re Tr(a* b + c d*)` for `X = (a, c)`, `Y = (b, d)`;
//! [`metric_g`] and [`metric_hitchin`] evaluate the two form-level
//! expressions instead and are cross-checked against it in tests.

use num_complex::Complex64 as C;

use crate::error::{LabError, Result};
use crate::hitchin::TangentVector;
use crate::lie::trace_integrate;
use crate::mat::I;
use crate::surface::{hodge2, wedge, wedge_one};

/// Relative tolerance for asserting that a pairing is real.
pub const REALNESS_TOL: f64 = 1e-10;
/// Relative tolerance for the two evaluation paths of `Ω`.
pub const OMEGA_PATH_TOL: f64 = 1e-10;

/// A complex pairing value together with how far it is from real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingValue {
    pub value: C,
    pub realness_defect: f64,
}

impl PairingValue {
    pub fn new(value: C) -> Self {
        PairingValue { value, realness_defect: value.im.abs() }
    }

    /// Real part, after checking `|Im| ≤ tol · max(1, |value|)`.
    pub fn real(self, what: &str) -> Result<f64> {
        let tolerance = REALNESS_TOL * self.value.norm().max(1.0);
        if self.realness_defect > tolerance {
            return Err(LabError::Consistency {
                what: format!("realness of {what}"),
                defect: self.realness_defect,
                tolerance,
            });
        }
        Ok(self.value.re)
    }
}

/// `−Tr∫(α ∧ *₁β) − 2 Im Tr∫(γ^{(1,0)} ∧ *₂ δ^{(1,0)tr})`, as a complex pairing.
pub fn metric_g_pairing(x: &TangentVector, y: &TangentVector) -> Result<PairingValue> {
    let connection = trace_integrate(&wedge_one(&x.alpha(), &y.alpha().hodge1())?)?;
    let star_delta = hodge2(&y.gamma10.transpose_blocks())?;
    let higgs = trace_integrate(&wedge(&x.gamma10, &star_delta)?)?;
    Ok(PairingValue::new(-connection - 2.0 * higgs.im))
}

pub fn metric_g(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    metric_g_pairing(x, y)?.real("metric g")
}

/// The form-level metric `g₁`, symmetrically polarized:
/// `i Tr∫(α^{(0,1)*} ∧ β^{(0,1)} + β^{(0,1)*} ∧ α^{(0,1)}) + i Tr∫(γ ∧ δ* + δ ∧ γ*)`.
pub fn metric_hitchin_pairing(x: &TangentVector, y: &TangentVector) -> Result<PairingValue> {
    let star = |w: &crate::surface::LatticeForm| crate::lie::conj_transpose_form(w);
    let conn = wedge(&star(&x.alpha01)?, &y.alpha01)?;
    let conn = &conn + &wedge(&star(&y.alpha01)?, &x.alpha01)?;
    let higgs = wedge(&x.gamma10, &star(&y.gamma10)?)?;
    let higgs = &higgs + &wedge(&y.gamma10, &star(&x.gamma10)?)?;
    let total = trace_integrate(&(&conn + &higgs))?;
    Ok(PairingValue::new(I * total))
}

pub fn metric_hitchin(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    metric_hitchin_pairing(x, y)?.real("Hitchin metric")
}

/// Coefficient-level metric `4h² Σ Re Tr(a* b + c d*)`; the fast path
/// used by the solver and the slice code.
pub fn metric_coefficients(x: &TangentVector, y: &TangentVector) -> f64 {
    let h = x.grid().spacing();
    4.0 * h * h * x.coeff_dot(y)
}

/// `𝓘 = (*₁, i)`: multiplies `α^{(0,1)}` and `γ^{(1,0)}` by `i`.
pub fn complex_structure(x: &TangentVector) -> TangentVector {
    TangentVector { alpha01: x.alpha01.scale(I), gamma10: x.gamma10.scale(I) }
}

/// `Ω(X, Y) = g(X, 𝓘Y)`.
pub fn omega_from_metric(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    metric_g(x, &complex_structure(y))
}

/// `Tr∫(α ∧ β) − Tr∫(γ ∧ δ)` with `γ, δ` the full forms.
pub fn omega_from_forms(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    let conn = trace_integrate(&wedge_one(&x.alpha(), &y.alpha())?)?;
    let higgs = trace_integrate(&wedge_one(&x.gamma(), &y.gamma())?)?;
    PairingValue::new(conn - higgs).real("symplectic form")
}

/// Both evaluations of `Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaPaths {
    pub via_metric: f64,
    pub via_forms: f64,
}

impl OmegaPaths {
    pub fn defect(&self) -> f64 {
        (self.via_metric - self.via_forms).abs()
    }
}

pub fn omega_paths(x: &TangentVector, y: &TangentVector) -> Result<OmegaPaths> {
    Ok(OmegaPaths { via_metric: omega_from_metric(x, y)?, via_forms: omega_from_forms(x, y)? })
}

/// `Ω(X, Y)` computed as `g(X, 𝓘Y)` and cross-checked against the form expression.
pub fn omega(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    let p = omega_paths(x, y)?;
    let tolerance = OMEGA_PATH_TOL * (1.0 + p.via_metric.abs());
    if p.defect() > tolerance {
        return Err(LabError::Consistency { what: "two evaluations of the symplectic form".into(), defect: p.defect(), tolerance });
    }
    Ok(p.via_metric)
}

/// Coefficient-level `Ω = g(X, 𝓘Y)`.
pub fn omega_coefficients(x: &TangentVector, y: &TangentVector) -> f64 {
    metric_coefficients(x, &complex_structure(y))
}

/// `|Ω(X, Y)|` maximised over probes; positive for nondegenerate samples.
pub fn sampled_nondegeneracy(x: &TangentVector, probes: &[TangentVector]) -> Result<f64> {
    probes.iter().try_fold(0.0_f64, |m, y| Ok(m.max(omega(x, y)?.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitchin::random_tangent;
    use crate::lie::{seeded_rng, Smoothness};
    use crate::surface::{Degree, LatticeForm, SurfaceGrid};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn zero_vectors_pair_to_zero() {
        let g = SurfaceGrid::torus(4, 1.0).unwrap();
        let z = TangentVector::zeros(g, 2);
        assert_eq!(metric_g(&z, &z).unwrap(), 0.0);
        assert_eq!(metric_hitchin(&z, &z).unwrap(), 0.0);
        assert_eq!(omega(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn three_metric_paths_agree() {
        let g = SurfaceGrid::torus(6, 1.3).unwrap();
        let mut rng = seeded_rng(30);
        for n in 1..=3 {
            let x = random_tangent(g, n, Smoothness::Rough, &mut rng);
            let y = random_tangent(g, n, Smoothness::Rough, &mut rng);
            let a = metric_g(&x, &y).unwrap();
            assert!(rel(a, metric_hitchin(&x, &y).unwrap()) < 1e-12);
            assert!(rel(a, metric_coefficients(&x, &y)) < 1e-12);
            assert!(rel(a, metric_g(&y, &x).unwrap()) < 1e-12);
            assert!(metric_g(&x, &x).unwrap() > 0.0);
        }
    }

    #[test]
    fn unit_connection_direction() {
        // α = i dx on the unit torus: α^{(0,1)} = i/2, g(X,X) = 4 Σ h² |i/2|² = 1
        let g = SurfaceGrid::torus(4, 1.0).unwrap();
        let a01 = LatticeForm::scalar_field(g, Degree::ZeroOne, 1, |_, _| C::new(0.0, 0.5));
        let x = TangentVector::new(a01, LatticeForm::zeros(g, Degree::OneZero, 1)).unwrap();
        assert!((metric_g(&x, &x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_structure_is_compatible() {
        let g = SurfaceGrid::torus(5, 1.0).unwrap();
        let mut rng = seeded_rng(31);
        let x = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        let y = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        let ix = complex_structure(&x);
        assert_eq!(complex_structure(&ix), x.scale(-1.0));
        assert_eq!(ix.alpha01, x.alpha01.scale(I));
        // derived (1,0) part picks up −i, i.e. 𝓘 acts as *₁ on α
        assert!(ix.alpha().max_abs_diff(&x.alpha().hodge1()) == 0.0);
        let iy = complex_structure(&y);
        assert!(rel(metric_g(&ix, &iy).unwrap(), metric_g(&x, &y).unwrap()) < 1e-12);
    }

    #[test]
    fn omega_antisymmetric_and_invariant() {
        let g = SurfaceGrid::torus(5, 1.0).unwrap();
        let mut rng = seeded_rng(32);
        let x = random_tangent(g, 3, Smoothness::Rough, &mut rng);
        let y = random_tangent(g, 3, Smoothness::Rough, &mut rng);
        assert!(omega(&x, &x).unwrap().abs() < 1e-12);
        let w = omega(&x, &y).unwrap();
        assert!(rel(w, -omega(&y, &x).unwrap()) < 1e-12);
        assert!(rel(w, omega(&complex_structure(&x), &complex_structure(&y)).unwrap()) < 1e-12);
        assert!(rel(w, omega_coefficients(&x, &y)) < 1e-12);
        let probes: Vec<_> = (0..3).map(|_| random_tangent(g, 3, Smoothness::Rough, &mut rng)).collect();
        assert!(sampled_nondegeneracy(&x, &probes).unwrap() > 0.0);
    }
}
