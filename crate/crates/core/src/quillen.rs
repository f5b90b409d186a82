//! Curvatures of the determinant line bundles, the prequantum identity
//! `𝓕_{𝓛⁻²} + 𝓕_{𝓡²} = (i/π) Ω`, and the gauge-invariance probe for the
//! spectrum of `Δ = D̃ D`.
//!
//! The Cauchy–Riemann operator `D = ∂̄ + A₀^{(0,1)} + Φ^{(0,1)}` acts on
//! `n × n` matrix sections by left multiplication. In the link scheme the
//! connection enters through transporters `U_μ(j) = exp(h A_μ(j))`, so a
//! gauge transformation acts by `U_μ(j) ↦ g(j) U_μ(j) g(j + μ)⁻¹` and
//! `D_g = g D g⁻¹` holds exactly.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::hitchin::TangentVector;
use crate::kahler::omega;
use crate::lie::{block_matrix, conj_transpose_form, trace_integrate, unitary_log, GaugeElement};
use crate::mat::{self, I, ONE, ZERO};
use crate::report::IdentityReport;
use crate::surface::{dbar, wedge, wedge_one, Degree, Direction, LatticeForm, OneForm, SurfaceGrid};

/// Relative agreement required between the two `𝓡²` curvature formulas.
pub const VARIANT_TOL: f64 = 1e-11;
/// Relative tolerance for the prequantum identity.
pub const PREQUANTUM_TOL: f64 = 1e-10;
/// Relative tolerance for eigenvalue agreement.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// Eigenvector-map residual bound.
pub const EIGENVECTOR_TOL: f64 = 1e-8;
/// Eigenvalues below this count toward the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;
/// Largest grid side for the dense spectral probe.
pub const MAX_SPECTRUM_SIDES: usize = 8;
/// Largest rank for the dense spectral probe.
pub const MAX_SPECTRUM_RANK: usize = 2;

/// `Φ^{(0,1)} = −Φ^{(1,0)*}`
pub fn phi01_from_phi10(phi10: &LatticeForm) -> Result<LatticeForm> {
    phi10.expect_degree(Degree::OneZero, "phi01_from_phi10")?;
    Ok(conj_transpose_form(phi10)?.scale(-ONE))
}

/// Inverse of [`phi01_from_phi10`].
pub fn phi10_from_phi01(phi01: &LatticeForm) -> Result<LatticeForm> {
    phi01.expect_degree(Degree::ZeroOne, "phi10_from_phi01")?;
    Ok(conj_transpose_form(phi01)?.scale(-ONE))
}

/// Entrywise complex conjugate of a pure 1-form; swaps `dz` and `dz̄`.
fn conjugate_form(w: &LatticeForm) -> LatticeForm {
    w.map(|z| z.conj()).with_degree(w.degree().conjugate())
}

/// `(i/π) Re Tr∫(α^{(0,1)} ∧ β^{(0,1)*})`
pub fn curv_l(x: &TangentVector, y: &TangentVector) -> Result<C> {
    let v = trace_integrate(&wedge(&x.alpha01, &conj_transpose_form(&y.alpha01)?)?)?;
    Ok(I * (v.re / PI))
}

/// Curvature components `(𝓕_{𝓛⁻²}, 𝓕_{𝓡²} natural, 𝓕_{𝓡²} conjugated)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionCurvatures {
    pub l_inverse_squared: C,
    pub r_squared: C,
    pub r_squared_conjugated: C,
}

/// Raw evaluation of all three curvature components, without cross-checks.
pub fn section_curvatures(x: &TangentVector, y: &TangentVector) -> Result<SectionCurvatures> {
    let l_inverse_squared = curv_l(x, y)? * -2.0;

    let g01 = phi01_from_phi10(&x.gamma10)?;
    let d01 = phi01_from_phi10(&y.gamma10)?;
    let natural = trace_integrate(&wedge(&g01, &conj_transpose_form(&d01)?)?)?;

    let conj_gamma = conjugate_form(&x.gamma10);
    let conj_delta_star = conjugate_form(&conj_transpose_form(&y.gamma10)?);
    let conjugated = trace_integrate(&wedge(&conj_gamma, &conj_delta_star)?)?;

    Ok(SectionCurvatures {
        l_inverse_squared,
        r_squared: I * (2.0 * natural.re / PI),
        r_squared_conjugated: I * (2.0 * conjugated.re / PI),
    })
}

/// [`section_curvatures`] with the two `𝓡²` variants asserted equal.
pub fn curv_p_sections(x: &TangentVector, y: &TangentVector) -> Result<SectionCurvatures> {
    let s = section_curvatures(x, y)?;
    let defect = (s.r_squared - s.r_squared_conjugated).norm();
    let tolerance = VARIANT_TOL * s.r_squared.norm().max(s.r_squared_conjugated.norm()).max(1.0);
    if defect > tolerance {
        return Err(LabError::Consistency { what: "two R-squared curvature formulas".into(), defect, tolerance });
    }
    Ok(s)
}

/// `𝓕_{𝓛⁻²} + 𝓕_{𝓡²}` against `(i/π) Ω`, plus the closed forms of each part.
pub fn prequantum_check(x: &TangentVector, y: &TangentVector, digest: &str) -> Result<IdentityReport> {
    let s = section_curvatures(x, y)?;
    let om = omega(x, y)?;
    let target = I * (om / PI);
    let total = s.l_inverse_squared + s.r_squared;
    let alpha_beta = trace_integrate(&wedge_one(&x.alpha(), &y.alpha())?)?;
    let gamma_delta = trace_integrate(&wedge_one(&x.gamma(), &y.gamma())?)?;
    let l_closed = I * alpha_beta / PI;
    let r_closed = -I * gamma_delta / PI;

    let mut r = IdentityReport::new("prequantum_curvature", digest);
    r.value("F_L^-2", s.l_inverse_squared)
        .value("F_R^2", s.r_squared)
        .value("F_R^2_conjugated", s.r_squared_conjugated)
        .value("sum", total)
        .value("(i/pi)Omega", target)
        .compare("sum = (i/pi)Omega", total, target, PREQUANTUM_TOL, 1.0)
        .compare("R^2 variants agree", s.r_squared, s.r_squared_conjugated, VARIANT_TOL, 1.0)
        .compare("F_L^-2 = (i/pi)Tr int alpha^beta", s.l_inverse_squared, l_closed, VARIANT_TOL, 1.0)
        .compare("F_R^2 = -(i/pi)Tr int gamma^delta", s.r_squared, r_closed, VARIANT_TOL, 1.0);
    Ok(r)
}

/// Fixed reference connection `A₀`: its `(0,1)` coefficient together with
/// the link transporters the covariant scheme uses.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceConnection {
    a01: LatticeForm,
    links: (LatticeForm, LatticeForm),
}

fn links_of(a01: &LatticeForm) -> (LatticeForm, LatticeForm) {
    let h = a01.grid().spacing();
    let a10 = conj_transpose_form(a01).expect("pure form").scale(-ONE);
    let (ax, ay) = OneForm { dz: a10, dzbar: a01.clone() }.real_components();
    let expo = |w: &LatticeForm| {
        w.map_blocks(|b, n| {
            let e = (block_matrix(b, n) * C::new(h, 0.0)).exp();
            (0..n * n).map(|k| e[(k / n, k % n)]).collect()
        })
    };
    (expo(&ax), expo(&ay))
}

impl ReferenceConnection {
    pub fn new(a01: LatticeForm) -> Result<Self> {
        a01.expect_degree(Degree::ZeroOne, "reference connection")?;
        let links = links_of(&a01);
        Ok(ReferenceConnection { a01, links })
    }

    pub fn trivial(grid: SurfaceGrid, n: usize) -> Self {
        ReferenceConnection::new(LatticeForm::zeros(grid, Degree::ZeroOne, n)).expect("(0,1) form")
    }

    pub fn a01(&self) -> &LatticeForm {
        &self.a01
    }

    /// Link transporters `exp(h A_x)`, `exp(h A_y)` per site.
    pub fn links(&self) -> (LatticeForm, LatticeForm) {
        self.links.clone()
    }

    /// Gauge action on the links, `U_μ(j) ↦ g(j) U_μ(j) g(j+μ)⁻¹`. The site
    /// field is read back with the unitary logarithm; the links themselves
    /// are transformed exactly.
    pub fn gauge_transformed(&self, g: &GaugeElement) -> Result<Self> {
        self.a01.check_compatible(g.form())?;
        let grid = self.a01.grid();
        let n = self.a01.rank();
        let h = grid.spacing();
        let mut links = self.links.clone();
        let mut comps = [LatticeForm::zeros(grid, Degree::Zero, n), LatticeForm::zeros(grid, Degree::Zero, n)];
        for (dir, moved, out) in [(Direction::X, &mut links.0, 0), (Direction::Y, &mut links.1, 1)] {
            for s in 0..grid.site_count() {
                let t = grid.neighbor(s, dir, 1);
                let gu = mat::mul(g.site(s), moved.site(s), n);
                let u = mat::mul(&gu, &mat::adjoint(g.site(t), n), n);
                let log = unitary_log(&block_matrix(&u, n))? * C::new(1.0 / h, 0.0);
                moved.site_mut(s).copy_from_slice(&u);
                let dst = comps[out].site_mut(s);
                for k in 0..n * n {
                    dst[k] = log[(k / n, k % n)];
                }
            }
        }
        // A^{(0,1)} = (A_x + i A_y) / 2
        let a01 = comps[0].axpy(I, &comps[1]).scale_real(0.5).with_degree(Degree::ZeroOne);
        Ok(ReferenceConnection { a01, links })
    }
}

/// How the connection enters the difference operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrScheme {
    /// Covariant differences with link transporters; exactly gauge covariant.
    Link,
    /// Forward `∂̄` plus the site value of `A₀^{(0,1)}`; matches the form calculus.
    Site,
}

/// Sparse operator on `n × n` matrix sections, stored as coordinate triplets.
/// Sections are flattened site-major, row-major like [`LatticeForm`] coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCROperator {
    dim: usize,
    entries: Vec<(usize, usize, C)>,
}

impl DiscreteCROperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        assert_eq!(v.len(), self.dim, "section length mismatch");
        let mut out = vec![ZERO; self.dim];
        for &(r, c, a) in &self.entries {
            out[r] += a * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, a) in &self.entries {
            m[(r, c)] += a;
        }
        m
    }
}

/// Accumulates `coef · M(site_a) · s(site_b)` where `M` acts on the left
/// of an `n × n` section block.
struct Assembler {
    n: usize,
    entries: Vec<(usize, usize, C)>,
}

impl Assembler {
    fn left_mul(&mut self, row_site: usize, col_site: usize, m: &[C], coef: C) {
        let n = self.n;
        let nn = n * n;
        // (M s)_{ik} = Σ_l M_{il} s_{lk}
        for i in 0..n {
            for l in 0..n {
                let v = m[i * n + l] * coef;
                if v == ZERO {
                    continue;
                }
                for k in 0..n {
                    self.entries.push((row_site * nn + i * n + k, col_site * nn + l * n + k, v));
                }
            }
        }
    }

    fn identity(&mut self, row_site: usize, col_site: usize, coef: C) {
        let nn = self.n * self.n;
        for e in 0..nn {
            self.entries.push((row_site * nn + e, col_site * nn + e, coef));
        }
    }

    fn finish(self, dim: usize) -> DiscreteCROperator {
        DiscreteCROperator { dim, entries: self.entries }
    }
}

/// `D = ∂̄ + A₀^{(0,1)} + Φ^{(0,1)}` and `D̃ = ∂ + A₀^{(1,0)} + Φ^{(1,0)}`
/// (backward covariant differences), with `D̃ = −D†`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrOperators {
    pub d: DiscreteCROperator,
    pub d_tilde: DiscreteCROperator,
}

pub fn build_cr_operator(a0: &ReferenceConnection, phi10: &LatticeForm, scheme: CrScheme) -> Result<CrOperators> {
    phi10.expect_degree(Degree::OneZero, "Higgs field")?;
    a0.a01.check_compatible(phi10)?;
    let grid = phi10.grid();
    let n = phi10.rank();
    let dim = grid.site_count() * n * n;
    let inv_2h = 0.5 / grid.spacing();
    let phi01 = phi01_from_phi10(phi10)?;

    let mut d = Assembler { n, entries: Vec::new() };
    let mut dt = Assembler { n, entries: Vec::new() };
    let id = mat::identity(n);
    match scheme {
        CrScheme::Link => {
            let (ux, uy) = a0.links();
            for s in 0..grid.site_count() {
                let (xp, yp) = (grid.neighbor(s, Direction::X, 1), grid.neighbor(s, Direction::Y, 1));
                let (xm, ym) = (grid.neighbor(s, Direction::X, -1), grid.neighbor(s, Direction::Y, -1));
                // D s = ½[(U_x s(j+x) − s)/h + i (U_y s(j+y) − s)/h] + Φ01 s
                d.left_mul(s, xp, ux.site(s), C::new(inv_2h, 0.0));
                d.left_mul(s, yp, uy.site(s), I * inv_2h);
                d.identity(s, s, -(ONE + I) * inv_2h);
                d.left_mul(s, s, phi01.site(s), ONE);
                // D̃ s = ½[(s − U_x(j−x)* s(j−x))/h − i (s − U_y(j−y)* s(j−y))/h] + Φ10 s
                dt.identity(s, s, (ONE - I) * inv_2h);
                dt.left_mul(s, xm, &mat::adjoint(ux.site(xm), n), C::new(-inv_2h, 0.0));
                dt.left_mul(s, ym, &mat::adjoint(uy.site(ym), n), I * inv_2h);
                dt.left_mul(s, s, phi10.site(s), ONE);
            }
        }
        CrScheme::Site => {
            let a10 = conj_transpose_form(&a0.a01)?.scale(-ONE);
            for s in 0..grid.site_count() {
                let (xp, yp) = (grid.neighbor(s, Direction::X, 1), grid.neighbor(s, Direction::Y, 1));
                let (xm, ym) = (grid.neighbor(s, Direction::X, -1), grid.neighbor(s, Direction::Y, -1));
                d.left_mul(s, xp, &id, C::new(inv_2h, 0.0));
                d.left_mul(s, yp, &id, I * inv_2h);
                d.identity(s, s, -(ONE + I) * inv_2h);
                d.left_mul(s, s, a0.a01.site(s), ONE);
                d.left_mul(s, s, phi01.site(s), ONE);
                dt.identity(s, s, (ONE - I) * inv_2h);
                dt.left_mul(s, xm, &id, C::new(-inv_2h, 0.0));
                dt.left_mul(s, ym, &id, I * inv_2h);
                dt.left_mul(s, s, a10.site(s), ONE);
                dt.left_mul(s, s, phi10.site(s), ONE);
            }
        }
    }
    Ok(CrOperators { d: d.finish(dim), d_tilde: dt.finish(dim) })
}

/// `D s` computed with the form calculus (site scheme): `∂̄s + A₀^{(0,1)} s + Φ^{(0,1)} s`.
pub fn apply_d_by_forms(a0: &ReferenceConnection, phi10: &LatticeForm, section: &LatticeForm) -> Result<LatticeForm> {
    section.expect_degree(Degree::Zero, "section")?;
    let potential = &a0.a01 + &phi01_from_phi10(phi10)?;
    Ok(&dbar(section)? + &potential.mul_blocks(section).with_degree(Degree::ZeroOne))
}

/// Hermitian `−Δ = −D̃D = D†D`, symmetrized against roundoff.
pub fn laplacian(ops: &CrOperators) -> DMatrix<C> {
    let m = -(ops.d_tilde.to_dense() * ops.d.to_dense());
    (&m + m.adjoint()) * C::new(0.5, 0.0)
}

/// Ascending eigen-decomposition of a Hermitian matrix.
pub fn hermitian_eigen(m: DMatrix<C>) -> Result<(Vec<f64>, DMatrix<C>)> {
    let dim = m.nrows();
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| LabError::Numerical(format!("Hermitian eigensolver did not converge (dimension {dim})")))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Left action `s ↦ g s` on a flattened section.
fn gauge_section(g: &GaugeElement, v: &[C]) -> Vec<C> {
    let n = g.rank();
    let nn = n * n;
    let mut out = vec![ZERO; v.len()];
    for s in 0..g.grid().site_count() {
        mat::mul_acc(&mut out[s * nn..(s + 1) * nn], g.site(s), &v[s * nn..(s + 1) * nn], n, ONE);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub k: usize,
    pub eigenvalues_base: Vec<f64>,
    pub eigenvalues_gauged: Vec<f64>,
    pub max_rel_discrepancy: f64,
    pub kernel_dim_base: usize,
    pub kernel_dim_gauged: usize,
    pub eigenvector_residual: f64,
    pub pass: bool,
}

impl SpectrumReport {
    pub fn identity_report(&self, digest: &str) -> IdentityReport {
        let mut r = IdentityReport::new("laplacian_spectrum_invariance", digest);
        for (i, (a, b)) in self.eigenvalues_base.iter().zip(&self.eigenvalues_gauged).enumerate() {
            r.real(format!("lambda_{i}"), *a).real(format!("lambda_gauged_{i}"), *b);
        }
        r.bound("max_rel_eigenvalue_discrepancy", self.max_rel_discrepancy, SPECTRUM_TOL)
            .bound("kernel_dim_mismatch", self.kernel_dim_base.abs_diff(self.kernel_dim_gauged) as f64, 0.0)
            .bound("eigenvector_map_residual", self.eigenvector_residual, EIGENVECTOR_TOL);
        r
    }
}

pub fn check_spectrum_caps(sides: usize, n: usize) -> Result<()> {
    if sides > MAX_SPECTRUM_SIDES || n > MAX_SPECTRUM_RANK {
        return domain(format!(
            "dense spectral probe is capped at N <= {MAX_SPECTRUM_SIDES} and n <= {MAX_SPECTRUM_RANK}; got N = {sides}, n = {n}"
        ));
    }
    Ok(())
}

/// Compares the `k` lowest eigenvalues of `−Δ` and `−Δ_g`, with `Δ_g`
/// assembled from the gauge-transformed reference connection and Higgs
/// field, and checks that `s ↦ g s` maps the lowest eigenspace across.
pub fn laplacian_spectrum_invariance(
    a0: &ReferenceConnection,
    phi10: &LatticeForm,
    g: &GaugeElement,
    k: usize,
) -> Result<SpectrumReport> {
    let grid = phi10.grid();
    check_spectrum_caps(grid.sides(), phi10.rank())?;
    phi10.check_compatible(g.form())?;
    let base_ops = build_cr_operator(a0, phi10, CrScheme::Link)?;
    if k == 0 || k > base_ops.d.dim() {
        return domain(format!("k must lie in 1..={}, got {k}", base_ops.d.dim()));
    }
    let gauged_ops = build_cr_operator(&a0.gauge_transformed(g)?, &g.conjugate(phi10)?, CrScheme::Link)?;

    let base = laplacian(&base_ops);
    let gauged = laplacian(&gauged_ops);
    let (vals_b, vecs_b) = hermitian_eigen(base)?;
    let (vals_g, _) = hermitian_eigen(gauged.clone())?;

    let lowest_b: Vec<f64> = vals_b[..k].to_vec();
    let lowest_g: Vec<f64> = vals_g[..k].to_vec();
    let max_rel = lowest_b
        .iter()
        .zip(&lowest_g)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max);
    let kernel = |v: &[f64]| v.iter().filter(|&&x| x < KERNEL_THRESHOLD).count();

    // lowest eigenspace: all eigenvectors within tolerance of the smallest eigenvalue
    let lambda0 = vals_b[0];
    let cluster = vals_b.iter().take_while(|&&x| (x - lambda0).abs() <= 1e-8 * lambda0.abs().max(1.0)).count();
    let mut residual: f64 = 0.0;
    for c in 0..cluster {
        let s: Vec<C> = vecs_b.column(c).iter().copied().collect();
        let gs = DMatrix::from_vec(s.len(), 1, gauge_section(g, &s));
        let r = &gauged * &gs - &gs * C::new(vals_b[c], 0.0);
        residual = residual.max(r.norm() / gs.norm());
    }

    let kernel_dim_base = kernel(&vals_b);
    let kernel_dim_gauged = kernel(&vals_g);
    let pass = max_rel <= SPECTRUM_TOL && kernel_dim_base == kernel_dim_gauged && residual <= EIGENVECTOR_TOL;
    Ok(SpectrumReport {
        k,
        eigenvalues_base: lowest_b,
        eigenvalues_gauged: lowest_g,
        max_rel_discrepancy: max_rel,
        kernel_dim_base,
        kernel_dim_gauged,
        eigenvector_residual: residual,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitchin::random_tangent;
    use crate::kahler::complex_structure;
    use crate::lie::{random_field, random_gauge, seeded_rng, Smoothness};

    fn grid(n: usize) -> SurfaceGrid {
        SurfaceGrid::torus(n, 1.0).unwrap()
    }

    #[test]
    fn phi01_rules() {
        let g = grid(4);
        let phi = LatticeForm::scalar_field(g, Degree::OneZero, 2, |_, _| I);
        let p01 = phi01_from_phi10(&phi).unwrap();
        assert_eq!(p01.degree(), Degree::ZeroOne);
        assert_eq!(p01.coeffs(), phi.coeffs());
        let mut rng = seeded_rng(1);
        let w = random_field(g, Degree::OneZero, 2, Smoothness::Rough, &mut rng);
        assert_eq!(phi10_from_phi01(&phi01_from_phi10(&w).unwrap()).unwrap(), w);
        assert!(phi01_from_phi10(&p01).is_err());
    }

    #[test]
    fn curv_l_closed_form_and_antisymmetry() {
        let g = grid(5);
        let mut rng = seeded_rng(2);
        let x = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        let y = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        let c = curv_l(&x, &y).unwrap();
        assert_eq!(c.re, 0.0);
        let closed = -I * trace_integrate(&wedge_one(&x.alpha(), &y.alpha()).unwrap()).unwrap() / (2.0 * PI);
        assert!((c - closed).norm() < 1e-12 * (1.0 + c.norm()));
        assert!((c + curv_l(&y, &x).unwrap()).norm() < 1e-12 * (1.0 + c.norm()));
    }

    #[test]
    fn r_squared_ignores_connection_directions() {
        let g = grid(4);
        let mut rng = seeded_rng(3);
        let mut x = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        let mut y = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        x.gamma10 = LatticeForm::zeros(g, Degree::OneZero, 2);
        y.gamma10 = LatticeForm::zeros(g, Degree::OneZero, 2);
        let s = curv_p_sections(&x, &y).unwrap();
        assert_eq!(s.r_squared, ZERO);
        assert_eq!(s.r_squared_conjugated, ZERO);
        let d = curv_p_sections(&x, &x).unwrap();
        assert!(d.l_inverse_squared.norm() < 1e-14);
    }

    #[test]
    fn prequantum_identity_random() {
        let g = grid(6);
        let mut rng = seeded_rng(4);
        for n in 1..=3 {
            let x = random_tangent(g, n, Smoothness::Rough, &mut rng);
            let y = random_tangent(g, n, Smoothness::Rough, &mut rng);
            let r = prequantum_check(&x, &y, "t").unwrap();
            assert!(r.pass, "{r:?}");
            // type (1,1): invariant under 𝓘 on both arguments
            let ri = prequantum_check(&complex_structure(&x), &complex_structure(&y), "t").unwrap();
            let s = |r: &IdentityReport| r.values.iter().find(|v| v.label == "sum").unwrap().im;
            assert!((s(&r) - s(&ri)).abs() < 1e-11 * (1.0 + s(&r).abs()));
        }
    }

    #[test]
    fn complex_structure_sign_table() {
        let g = grid(4);
        let mut rng = seeded_rng(5);
        let x = random_tangent(g, 2, Smoothness::Rough, &mut rng);
        let ix = complex_structure(&x);
        assert_eq!(ix.alpha01, x.alpha01.scale(I));
        assert_eq!(ix.gamma10, x.gamma10.scale(I));
        assert!(ix.alpha10().max_abs_diff(&x.alpha10().scale(-I)) == 0.0);
        assert!(ix.gamma01().max_abs_diff(&x.gamma01().scale(-I)) == 0.0);
    }

    #[test]
    fn free_operator_has_constant_kernel() {
        let g = grid(4);
        let ops = build_cr_operator(&ReferenceConnection::trivial(g, 1), &LatticeForm::zeros(g, Degree::OneZero, 1), CrScheme::Link)
            .unwrap();
        let ones = vec![ONE; ops.d.dim()];
        assert!(ops.d.apply(&ones).iter().all(|z| z.norm() < 1e-12));
        let svd = ops.d.to_dense().svd(false, false);
        assert!(svd.singular_values.min() <= 1e-12);
    }

    #[test]
    fn d_tilde_is_minus_adjoint() {
        let g = grid(4);
        let mut rng = seeded_rng(6);
        for scheme in [CrScheme::Link, CrScheme::Site] {
            let a0 = ReferenceConnection::new(random_field(g, Degree::ZeroOne, 2, Smoothness::Rough, &mut rng)).unwrap();
            let phi = random_field(g, Degree::OneZero, 2, Smoothness::Rough, &mut rng);
            let ops = build_cr_operator(&a0, &phi, scheme).unwrap();
            let d = ops.d.to_dense();
            let dt = ops.d_tilde.to_dense();
            assert!((dt + d.adjoint()).norm() < 1e-12 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn site_scheme_matches_form_calculus() {
        let g = grid(4);
        let mut rng = seeded_rng(7);
        let a0 = ReferenceConnection::new(random_field(g, Degree::ZeroOne, 2, Smoothness::Rough, &mut rng)).unwrap();
        let phi = random_field(g, Degree::OneZero, 2, Smoothness::Rough, &mut rng);
        let s = random_field(g, Degree::Zero, 2, Smoothness::Rough, &mut rng);
        let ops = build_cr_operator(&a0, &phi, CrScheme::Site).unwrap();
        let via_op = ops.d.apply(s.coeffs());
        let via_forms = apply_d_by_forms(&a0, &phi, &s).unwrap();
        assert!(mat::max_abs_diff(&via_op, via_forms.coeffs()) < 1e-12);
    }

    #[test]
    fn gauged_links_transform_covariantly() {
        let g = grid(4);
        let mut rng = seeded_rng(8);
        let a0 = ReferenceConnection::new(random_field(g, Degree::ZeroOne, 2, Smoothness::Rough, &mut rng).scale_real(0.5))
            .unwrap();
        let gg = random_gauge(g, 2, 9, Smoothness::Rough, 1.0);
        let moved = a0.gauge_transformed(&gg).unwrap();
        let (ux, _) = a0.links();
        let (vx, _) = moved.links();
        for s in 0..g.site_count() {
            let t = g.neighbor(s, Direction::X, 1);
            let want = mat::mul(&mat::mul(gg.site(s), ux.site(s), 2), &mat::adjoint(gg.site(t), 2), 2);
            assert!(mat::max_abs_diff(vx.site(s), &want) < 1e-12);
        }
    }

    #[test]
    fn identity_gauge_gives_identical_spectrum() {
        let g = grid(4);
        let mut rng = seeded_rng(10);
        let a0 = ReferenceConnection::new(random_field(g, Degree::ZeroOne, 1, Smoothness::Rough, &mut rng)).unwrap();
        let phi = random_field(g, Degree::OneZero, 1, Smoothness::Rough, &mut rng);
        let r = laplacian_spectrum_invariance(&a0, &phi, &GaugeElement::identity(g, 1), 10).unwrap();
        assert!(r.pass);
        assert!(r.max_rel_discrepancy < 1e-12);
        assert!(r.eigenvalues_base.iter().all(|&x| x > -1e-10));
    }

    #[test]
    fn spectrum_caps_and_k_bounds() {
        let g = grid(4);
        let a0 = ReferenceConnection::trivial(g, 1);
        let phi = LatticeForm::zeros(g, Degree::OneZero, 1);
        let id = GaugeElement::identity(g, 1);
        assert!(laplacian_spectrum_invariance(&a0, &phi, &id, 0).is_err());
        assert!(laplacian_spectrum_invariance(&a0, &phi, &id, 17).is_err());
        assert!(check_spectrum_caps(32, 2).is_err());
        assert!(check_spectrum_caps(8, 2).is_ok());
    }
}
