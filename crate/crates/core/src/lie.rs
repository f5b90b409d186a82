//! Lie-algebra operations lifted to lattice forms: graded commutators,
//! conjugate transposes, trace pairings, random u(n) fields and U(n)
//! gauge elements.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, LabError, Result};
use crate::mat;
use crate::surface::{integrate, wedge, Degree, LatticeForm, SurfaceGrid};

/// Entrywise tolerance for the skew-Hermitian invariant.
pub const SKEW_TOL: f64 = 1e-14;
/// Entrywise tolerance for the unitarity invariant.
pub const UNITARY_TOL: f64 = 1e-12;

/// Graded commutator `[u, v] = u ∧ v − (−1)^{pq} v ∧ u`.
pub fn form_commutator(u: &LatticeForm, v: &LatticeForm) -> Result<LatticeForm> {
    let uv = wedge(u, v)?;
    let vu = wedge(v, u)?;
    let sign = if u.degree().total() * v.degree().total() % 2 == 1 { -1.0 } else { 1.0 };
    Ok(uv.axpy(C::new(-sign, 0.0), &vu))
}

/// `η dz ↦ η* dz̄` and `η dz̄ ↦ η* dz`.
pub fn conj_transpose_form(w: &LatticeForm) -> Result<LatticeForm> {
    match w.degree() {
        Degree::OneZero | Degree::ZeroOne => Ok(w.adjoint_blocks().with_degree(w.degree().conjugate())),
        d => domain(format!("conj_transpose_form expects a pure 1-form, got degree {d}")),
    }
}

/// `Tr ∫ w` for a 2-form `w`.
pub fn trace_integrate(w: &LatticeForm) -> Result<C> {
    Ok(integrate(w)?.trace())
}

/// Largest entrywise defect of `x* = −x` over all sites.
pub fn skew_defect(w: &LatticeForm) -> f64 {
    let n = w.rank();
    w.sites()
        .map(|b| {
            let adj = mat::adjoint(b, n);
            b.iter().zip(&adj).map(|(x, y)| (x + y).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Largest entrywise defect of `x* = x` over all sites.
pub fn hermitian_defect(w: &LatticeForm) -> f64 {
    let n = w.rank();
    w.sites()
        .map(|b| mat::max_abs_diff(b, &mat::adjoint(b, n)))
        .fold(0.0, f64::max)
}

/// Spatial profile of random fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothness {
    /// Independent Gaussian entries at every site.
    Rough,
    /// Random Fourier modes with `|m_x|, |m_y| ≤ max_mode`.
    Smooth { max_mode: usize },
}

/// A portable RNG stream seeded from 64 bits (ChaCha8).
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`, so parallel
/// trials draw the same numbers regardless of scheduling.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_c(rng: &mut impl Rng) -> C {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random complex `n × n` matrix with unit-variance Gaussian entries.
pub fn random_matrix(n: usize, rng: &mut impl Rng) -> DMatrix<C> {
    DMatrix::from_fn(n, n, |_, _| gaussian_c(rng))
}

/// Random complex `n × n` block field with unit-variance entries.
pub fn random_field(grid: SurfaceGrid, degree: Degree, n: usize, smooth: Smoothness, rng: &mut impl Rng) -> LatticeForm {
    match smooth {
        Smoothness::Rough => LatticeForm::from_site_fn(grid, degree, n, |_, _, block| {
            for z in block.iter_mut() {
                *z = gaussian_c(rng);
            }
        }),
        Smoothness::Smooth { max_mode } => {
            let m = max_mode as isize;
            let modes: Vec<(isize, isize, Vec<C>)> = (-m..=m)
                .flat_map(|mx| (-m..=m).map(move |my| (mx, my)))
                .map(|(mx, my)| (mx, my, (0..n * n).map(|_| gaussian_c(rng)).collect()))
                .collect();
            let norm = 1.0 / (modes.len() as f64).sqrt();
            let sides = grid.sides() as f64;
            LatticeForm::from_site_fn(grid, degree, n, |j, k, block| {
                for (mx, my, c) in &modes {
                    let phase = 2.0 * std::f64::consts::PI * ((mx * j as isize + my * k as isize) as f64) / sides;
                    let e = C::from_polar(norm, phase);
                    for (z, ci) in block.iter_mut().zip(c) {
                        *z += e * ci;
                    }
                }
            })
        }
    }
}

/// Skew-Hermitian 0-form `ζ` with values in u(n).
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeAlgebraField {
    form: LatticeForm,
}

impl GaugeAlgebraField {
    pub fn new(form: LatticeForm) -> Result<Self> {
        form.expect_degree(Degree::Zero, "GaugeAlgebraField")?;
        let defect = skew_defect(&form);
        if defect > SKEW_TOL {
            return Err(LabError::Consistency {
                what: "skew-Hermitian gauge algebra field".into(),
                defect,
                tolerance: SKEW_TOL,
            });
        }
        Ok(GaugeAlgebraField { form })
    }

    /// Projects any 0-form onto u(n) via `(x − x*)/2`.
    pub fn skew_part(form: &LatticeForm) -> Result<Self> {
        form.expect_degree(Degree::Zero, "skew_part")?;
        let n = form.rank();
        let skew = form.map_blocks(|b, _| {
            let adj = mat::adjoint(b, n);
            b.iter().zip(&adj).map(|(x, y)| (x - y) * 0.5).collect()
        });
        Ok(GaugeAlgebraField { form: skew })
    }

    pub fn zeros(grid: SurfaceGrid, n: usize) -> Self {
        GaugeAlgebraField { form: LatticeForm::zeros(grid, Degree::Zero, n) }
    }

    pub fn constant(grid: SurfaceGrid, m: &DMatrix<C>) -> Result<Self> {
        GaugeAlgebraField::new(LatticeForm::constant(grid, Degree::Zero, m)?)
    }

    pub fn form(&self) -> &LatticeForm {
        &self.form
    }

    pub fn into_form(self) -> LatticeForm {
        self.form
    }

    pub fn grid(&self) -> SurfaceGrid {
        self.form.grid()
    }

    pub fn rank(&self) -> usize {
        self.form.rank()
    }

    pub fn scale(&self, t: f64) -> Self {
        GaugeAlgebraField { form: self.form.scale_real(t) }
    }

    pub fn axpy(&self, t: f64, other: &GaugeAlgebraField) -> Self {
        GaugeAlgebraField { form: self.form.axpy(C::new(t, 0.0), &other.form) }
    }
}

/// Deterministic random u(n) field.
pub fn random_skew_hermitian(grid: SurfaceGrid, n: usize, seed: u64, smooth: Smoothness) -> GaugeAlgebraField {
    let mut rng = seeded_rng(seed);
    random_skew_hermitian_from(grid, n, smooth, &mut rng)
}

/// Same as [`random_skew_hermitian`] but drawing from a caller-owned stream.
pub fn random_skew_hermitian_from(grid: SurfaceGrid, n: usize, smooth: Smoothness, rng: &mut impl Rng) -> GaugeAlgebraField {
    let raw = random_field(grid, Degree::Zero, n, smooth, rng);
    GaugeAlgebraField::skew_part(&raw).expect("degree-0 field")
}

/// Unitary 0-form `g` acting on configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeElement {
    form: LatticeForm,
}

impl GaugeElement {
    pub fn new(form: LatticeForm) -> Result<Self> {
        form.expect_degree(Degree::Zero, "GaugeElement")?;
        let defect = unitary_defect(&form);
        if defect > UNITARY_TOL {
            return Err(LabError::Domain(format!(
                "gauge element is not unitary: defect {defect:.3e} exceeds {UNITARY_TOL:.0e}"
            )));
        }
        Ok(GaugeElement { form })
    }

    pub fn identity(grid: SurfaceGrid, n: usize) -> Self {
        GaugeElement { form: LatticeForm::scalar_field(grid, Degree::Zero, n, |_, _| mat::ONE) }
    }

    pub fn constant(grid: SurfaceGrid, m: &DMatrix<C>) -> Result<Self> {
        GaugeElement::new(LatticeForm::constant(grid, Degree::Zero, m)?)
    }

    pub fn form(&self) -> &LatticeForm {
        &self.form
    }

    pub fn grid(&self) -> SurfaceGrid {
        self.form.grid()
    }

    pub fn rank(&self) -> usize {
        self.form.rank()
    }

    pub fn site(&self, s: usize) -> &[C] {
        self.form.site(s)
    }

    /// `g⁻¹ = g*`
    pub fn inverse(&self) -> GaugeElement {
        GaugeElement { form: self.form.adjoint_blocks() }
    }

    /// Pointwise product `g h`.
    pub fn compose(&self, other: &GaugeElement) -> GaugeElement {
        GaugeElement { form: self.form.mul_blocks(&other.form) }
    }

    /// `g w g⁻¹` site by site, any degree.
    pub fn conjugate(&self, w: &LatticeForm) -> Result<LatticeForm> {
        w.check_compatible(&self.form)?;
        let n = w.rank();
        let mut out = LatticeForm::zeros(w.grid(), w.degree(), n);
        for s in 0..w.grid().site_count() {
            let g = self.form.site(s);
            let gw = mat::mul(g, w.site(s), n);
            mat::mul_acc(out.site_mut(s), &gw, &mat::adjoint(g, n), n, mat::ONE);
        }
        Ok(out)
    }
}

/// Largest entrywise defect of `g* g = Id`.
pub fn unitary_defect(form: &LatticeForm) -> f64 {
    let n = form.rank();
    let id = mat::identity(n);
    form.sites()
        .map(|b| mat::max_abs_diff(&mat::mul(&mat::adjoint(b, n), b, n), &id))
        .fold(0.0, f64::max)
}

/// Site-wise `exp(ε ζ)`.
pub fn exponentiate(zeta: &GaugeAlgebraField, eps: f64) -> GaugeElement {
    let n = zeta.rank();
    let grid = zeta.grid();
    let mut out = LatticeForm::zeros(grid, Degree::Zero, n);
    for s in 0..grid.site_count() {
        let m = DMatrix::from_row_slice(n, n, zeta.form.site(s)) * C::new(eps, 0.0);
        let e = m.exp();
        let dst = out.site_mut(s);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = e[(i, j)];
            }
        }
    }
    GaugeElement { form: out }
}

/// Random gauge element `exp(ζ)` for a random u(n) field `ζ`.
pub fn random_gauge(grid: SurfaceGrid, n: usize, seed: u64, smooth: Smoothness, amplitude: f64) -> GaugeElement {
    exponentiate(&random_skew_hermitian(grid, n, seed, smooth), amplitude)
}

/// Per-site `n × n` block as a nalgebra matrix.
pub fn block_matrix(b: &[C], n: usize) -> DMatrix<C> {
    DMatrix::from_row_slice(n, n, b)
}

/// Skew-Hermitian logarithm of a unitary matrix via its Schur form.
pub fn unitary_log(u: &DMatrix<C>) -> Result<DMatrix<C>> {
    let n = u.nrows();
    let (q, t) = nalgebra::linalg::Schur::try_new(u.clone(), f64::EPSILON, 0)
        .ok_or_else(|| LabError::Numerical("Schur decomposition of a link did not converge".into()))?
        .unpack();
    // A unitary upper-triangular matrix is diagonal; take principal logs of the phases.
    let mut d = DMatrix::<C>::zeros(n, n);
    for i in 0..n {
        let z = t[(i, i)];
        d[(i, i)] = C::new(0.0, z.arg());
    }
    let l = &q * d * q.adjoint();
    Ok((&l - l.adjoint()) * C::new(0.5, 0.0))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::I;

    fn grid() -> SurfaceGrid {
        SurfaceGrid::torus(5, 1.0).unwrap()
    }

    #[test]
    fn graded_commutator_of_one_forms_is_symmetric() {
        let g = grid();
        let mut rng = seeded_rng(3);
        let u = random_field(g, Degree::OneZero, 2, Smoothness::Rough, &mut rng);
        let v = random_field(g, Degree::ZeroOne, 2, Smoothness::Rough, &mut rng);
        let uv = form_commutator(&u, &v).unwrap();
        let vu = form_commutator(&v, &u).unwrap();
        assert!(uv.max_abs_diff(&vu) < 1e-14);
        // same-type 1-forms wedge to zero
        let w = random_field(g, Degree::OneZero, 2, Smoothness::Rough, &mut rng);
        assert!(form_commutator(&u, &w).unwrap().is_zero());
    }

    #[test]
    fn scalar_zero_form_commutes() {
        let g = grid();
        let mut rng = seeded_rng(4);
        let u = random_field(g, Degree::Zero, 1, Smoothness::Rough, &mut rng);
        let v = random_field(g, Degree::OneZero, 1, Smoothness::Rough, &mut rng);
        assert!(form_commutator(&u, &v).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn zero_one_commutator_matches_site_commutator() {
        let g = grid();
        let mut rng = seeded_rng(5);
        let u = random_field(g, Degree::Zero, 2, Smoothness::Rough, &mut rng);
        let v = random_field(g, Degree::ZeroOne, 2, Smoothness::Rough, &mut rng);
        let c = form_commutator(&u, &v).unwrap();
        assert_eq!(c.degree(), Degree::ZeroOne);
        for s in 0..g.site_count() {
            let a = u.site_matrix(s);
            let b = v.site_matrix(s);
            let want = &a * &b - &b * &a;
            assert!((c.site_matrix(s) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn graded_antisymmetry_all_degree_pairs() {
        let g = grid();
        let mut rng = seeded_rng(6);
        let degs = [Degree::Zero, Degree::OneZero, Degree::ZeroOne];
        for &p in &degs {
            for &q in &degs {
                let u = random_field(g, p, 2, Smoothness::Rough, &mut rng);
                let v = random_field(g, q, 2, Smoothness::Rough, &mut rng);
                let uv = form_commutator(&u, &v).unwrap();
                let vu = form_commutator(&v, &u).unwrap();
                // [u,v] = (−1)^{pq+1} [v,u]
                let sign = if p.total() * q.total() % 2 == 1 { 1.0 } else { -1.0 };
                assert!(uv.max_abs_diff(&vu.scale_real(sign)) < 1e-13, "{p} {q}");
            }
        }
    }

    #[test]
    fn conj_transpose_rules() {
        let g = grid();
        let phi = LatticeForm::scalar_field(g, Degree::OneZero, 2, |_, _| I);
        let t = conj_transpose_form(&phi).unwrap();
        assert_eq!(t.degree(), Degree::ZeroOne);
        assert_eq!(t.coeffs(), phi.scale(-mat::ONE).coeffs());
        let mut rng = seeded_rng(1);
        let w = random_field(g, Degree::OneZero, 3, Smoothness::Rough, &mut rng);
        assert_eq!(conj_transpose_form(&conj_transpose_form(&w).unwrap()).unwrap(), w);
        assert!(conj_transpose_form(&LatticeForm::zeros(g, Degree::Two, 1)).is_err());
        assert!(conj_transpose_form(&LatticeForm::zeros(g, Degree::Zero, 1)).is_err());
    }

    #[test]
    fn trace_integrate_matches_direct_sum() {
        let g = grid();
        let mut rng = seeded_rng(8);
        let w = random_field(g, Degree::Two, 2, Smoothness::Rough, &mut rng);
        let h = g.spacing();
        let direct: C = w.sites().map(|b| b[0] + b[3]).sum::<C>() * C::new(0.0, -2.0 * h * h);
        assert!((trace_integrate(&w).unwrap() - direct).norm() < 1e-13);
        assert_eq!(trace_integrate(&LatticeForm::zeros(g, Degree::Two, 2)).unwrap(), C::new(0.0, 0.0));
    }

    #[test]
    fn bracket_moves_across_wedge_under_trace() {
        let g = grid();
        let mut rng = seeded_rng(9);
        let u = random_field(g, Degree::Zero, 2, Smoothness::Rough, &mut rng);
        let v = random_field(g, Degree::OneZero, 2, Smoothness::Rough, &mut rng);
        let w = random_field(g, Degree::ZeroOne, 2, Smoothness::Rough, &mut rng);
        let lhs = wedge(&form_commutator(&u, &v).unwrap(), &w).unwrap();
        let rhs = wedge(&u, &form_commutator(&v, &w).unwrap()).unwrap();
        let d = trace_integrate(&(&lhs - &rhs)).unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn random_fields_are_deterministic_and_skew() {
        let g = grid();
        for smooth in [Smoothness::Rough, Smoothness::Smooth { max_mode: 2 }] {
            let a = random_skew_hermitian(g, 3, 77, smooth);
            let b = random_skew_hermitian(g, 3, 77, smooth);
            assert_eq!(a, b);
            assert_eq!(skew_defect(a.form()), 0.0);
        }
        let s = random_skew_hermitian(g, 1, 2, Smoothness::Rough);
        assert!(s.form().coeffs().iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn non_skew_field_rejected() {
        let g = grid();
        let f = LatticeForm::scalar_field(g, Degree::Zero, 2, |_, _| mat::ONE);
        assert!(GaugeAlgebraField::new(f).is_err());
    }

    #[test]
    fn exponential_limits() {
        let g = grid();
        let z = random_skew_hermitian(g, 2, 10, Smoothness::Rough);
        assert_eq!(exponentiate(&z, 0.0), GaugeElement::identity(g, 2));
        let c = 0.7;
        let scalar = GaugeAlgebraField::new(LatticeForm::scalar_field(g, Degree::Zero, 1, |_, _| C::new(0.0, c))).unwrap();
        let e = exponentiate(&scalar, 0.3);
        for b in e.form().sites() {
            assert!((b[0] - C::from_polar(1.0, 0.3 * c)).norm() < 1e-15);
        }
        let big = random_skew_hermitian(g, 3, 11, Smoothness::Rough);
        assert!(unitary_defect(exponentiate(&big, 3.0).form()) < 1e-12);
    }

    #[test]
    fn exponential_second_order_remainder() {
        let g = grid();
        let z = random_skew_hermitian(g, 2, 12, Smoothness::Rough);
        let id = GaugeElement::identity(g, 2);
        let defect = |eps: f64| {
            let lin = id.form().axpy(C::new(eps, 0.0), z.form());
            exponentiate(&z, eps).form().max_abs_diff(&lin)
        };
        let ratio = defect(1e-2) / defect(1e-3);
        assert!((ratio - 100.0).abs() < 20.0, "ratio {ratio}");
    }

    #[test]
    fn unitary_log_inverts_exp() {
        let g = grid();
        let z = random_skew_hermitian(g, 3, 13, Smoothness::Rough);
        let m = block_matrix(z.form().site(0), 3) * C::new(0.4, 0.0);
        let l = unitary_log(&m.clone().exp()).unwrap();
        assert!((l - m).norm() < 1e-12);
    }
}
