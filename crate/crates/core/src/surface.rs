//! Periodic lattice on the flat torus and matrix-valued differential forms.
//!
//! Forms are collocated on sites. A pure-type form stores one `n × n`
//! block per site: the bare value for a 0-form, the `dz` or `dz̄`
//! coefficient for a 1-form, and the `dz ∧ dz̄` coefficient for a 2-form.
//! Mixed 1-forms are the ordered pair [`OneForm`].
//!
//! Derivatives of 0-forms use forward differences; the exterior
//! derivative of 1-forms uses backward differences, so that
//! `Σ Tr(f · d₁w) = −Σ Tr(d₀f ∧ w)` holds exactly on the lattice.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::error::{domain, Result};
use crate::mat::{self, I, ZERO};

/// `dz ∧ dz̄ = −2i dx ∧ dy`
pub const DZ_DZBAR_AREA: C = C::new(0.0, -2.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceGrid {
    sides: usize,
    length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

impl SurfaceGrid {
    pub fn torus(sides: usize, length: f64) -> Result<Self> {
        if sides < 2 {
            return domain(format!("torus needs at least 2 sites per side, got {sides}"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return domain(format!("torus period must be positive, got {length}"));
        }
        Ok(SurfaceGrid { sides, length })
    }

    pub fn sides(&self) -> usize {
        self.sides
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.sides as f64
    }

    pub fn site_count(&self) -> usize {
        self.sides * self.sides
    }

    /// Site index of `(j, k)` with periodic wrap; `j` runs along x.
    pub fn index(&self, j: isize, k: isize) -> usize {
        let n = self.sides as isize;
        (j.rem_euclid(n) * n + k.rem_euclid(n)) as usize
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.sides, site % self.sides)
    }

    /// Complex coordinate `z = j h + i k h`.
    pub fn z(&self, site: usize) -> C {
        let (j, k) = self.coords(site);
        let h = self.spacing();
        C::new(j as f64 * h, k as f64 * h)
    }

    pub fn neighbor(&self, site: usize, dir: Direction, step: isize) -> usize {
        let (j, k) = self.coords(site);
        let (j, k) = (j as isize, k as isize);
        match dir {
            Direction::X => self.index(j + step, k),
            Direction::Y => self.index(j, k + step),
        }
    }

    /// Area from integrating `dx ∧ dy` over the lattice.
    pub fn area(&self) -> f64 {
        let h = self.spacing();
        (0..self.site_count()).map(|_| h * h).sum()
    }
}

/// Form type. `OneZero` is the `dz` type, `ZeroOne` the `dz̄` type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Degree {
    Zero,
    OneZero,
    ZeroOne,
    Two,
}

impl Degree {
    pub fn total(self) -> usize {
        match self {
            Degree::Zero => 0,
            Degree::OneZero | Degree::ZeroOne => 1,
            Degree::Two => 2,
        }
    }

    /// Type reached by complex conjugation.
    pub fn conjugate(self) -> Degree {
        match self {
            Degree::OneZero => Degree::ZeroOne,
            Degree::ZeroOne => Degree::OneZero,
            d => d,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Degree::Zero => "0",
            Degree::OneZero => "(1,0)",
            Degree::ZeroOne => "(0,1)",
            Degree::Two => "2",
        };
        f.write_str(s)
    }
}

/// Pure-type matrix-valued form sampled on a [`SurfaceGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeForm {
    grid: SurfaceGrid,
    degree: Degree,
    rank: usize,
    coeffs: Vec<C>,
}

impl LatticeForm {
    pub fn zeros(grid: SurfaceGrid, degree: Degree, rank: usize) -> Self {
        assert!(rank >= 1, "rank must be positive");
        LatticeForm {
            grid,
            degree,
            rank,
            coeffs: vec![ZERO; grid.site_count() * rank * rank],
        }
    }

    /// Builds a form from raw site-major, row-major coefficients.
    pub fn from_coeffs(grid: SurfaceGrid, degree: Degree, rank: usize, coeffs: Vec<C>) -> Result<Self> {
        if rank == 0 {
            return domain("rank must be positive");
        }
        let expected = grid.site_count() * rank * rank;
        if coeffs.len() != expected {
            return domain(format!(
                "expected {expected} coefficients for rank {rank} on {} sites, got {}",
                grid.site_count(),
                coeffs.len()
            ));
        }
        Ok(LatticeForm { grid, degree, rank, coeffs })
    }

    /// Fills each site block through `fill(j, k, block)`.
    pub fn from_site_fn(
        grid: SurfaceGrid,
        degree: Degree,
        rank: usize,
        mut fill: impl FnMut(usize, usize, &mut [C]),
    ) -> Self {
        let mut form = LatticeForm::zeros(grid, degree, rank);
        let nn = rank * rank;
        for (s, block) in form.coeffs.chunks_mut(nn).enumerate() {
            let (j, k) = grid.coords(s);
            fill(j, k, block);
        }
        form
    }

    /// `f(j, k) · Id` at every site.
    pub fn scalar_field(grid: SurfaceGrid, degree: Degree, rank: usize, f: impl Fn(usize, usize) -> C) -> Self {
        LatticeForm::from_site_fn(grid, degree, rank, |j, k, block| {
            let v = f(j, k);
            for i in 0..rank {
                block[i * rank + i] = v;
            }
        })
    }

    pub fn constant(grid: SurfaceGrid, degree: Degree, m: &DMatrix<C>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return domain("constant coefficient must be a nonempty square matrix");
        }
        let n = m.nrows();
        Ok(LatticeForm::from_site_fn(grid, degree, n, |_, _, block| {
            for i in 0..n {
                for j in 0..n {
                    block[i * n + j] = m[(i, j)];
                }
            }
        }))
    }

    pub fn grid(&self) -> SurfaceGrid {
        self.grid
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    pub fn site(&self, s: usize) -> &[C] {
        let nn = self.rank * self.rank;
        &self.coeffs[s * nn..(s + 1) * nn]
    }

    pub fn site_mut(&mut self, s: usize) -> &mut [C] {
        let nn = self.rank * self.rank;
        &mut self.coeffs[s * nn..(s + 1) * nn]
    }

    pub fn site_matrix(&self, s: usize) -> DMatrix<C> {
        let n = self.rank;
        DMatrix::from_row_slice(n, n, self.site(s))
    }

    pub fn sites(&self) -> impl Iterator<Item = &[C]> {
        self.coeffs.chunks(self.rank * self.rank)
    }

    /// Same coefficients, relabelled with another degree.
    pub fn with_degree(mut self, degree: Degree) -> Self {
        self.degree = degree;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == ZERO)
    }

    pub fn scale(&self, c: C) -> Self {
        self.map(|z| z * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(C) -> C) -> Self {
        LatticeForm {
            grid: self.grid,
            degree: self.degree,
            rank: self.rank,
            coeffs: self.coeffs.iter().map(|&z| f(z)).collect(),
        }
    }

    /// `self + t · other`
    pub fn axpy(&self, t: C, other: &LatticeForm) -> Self {
        self.assert_same_shape(other);
        LatticeForm {
            grid: self.grid,
            degree: self.degree,
            rank: self.rank,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + t * b).collect(),
        }
    }

    /// Per-site conjugate transpose; the degree is left unchanged.
    pub fn adjoint_blocks(&self) -> Self {
        self.map_blocks(|b, n| mat::adjoint(b, n))
    }

    /// Per-site transpose; the degree is left unchanged.
    pub fn transpose_blocks(&self) -> Self {
        self.map_blocks(|b, n| mat::transpose(b, n))
    }

    pub fn map_blocks(&self, f: impl Fn(&[C], usize) -> Vec<C>) -> Self {
        let n = self.rank;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for block in self.sites() {
            coeffs.extend(f(block, n));
        }
        LatticeForm { grid: self.grid, degree: self.degree, rank: n, coeffs }
    }

    /// Per-site matrix product `self · other` with the degree of `self`.
    pub fn mul_blocks(&self, other: &LatticeForm) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.rank, other.rank, "rank mismatch");
        let n = self.rank;
        let mut out = LatticeForm::zeros(self.grid, self.degree, n);
        for s in 0..self.grid.site_count() {
            let (a, b) = (self.site(s), other.site(s));
            mat::mul_acc(out.site_mut(s), a, b, n, mat::ONE);
        }
        out
    }

    /// Euclidean norm of the raw coefficient array.
    pub fn coeff_norm(&self) -> f64 {
        mat::frobenius_sq(&self.coeffs).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &LatticeForm) -> f64 {
        self.assert_same_shape(other);
        mat::max_abs_diff(&self.coeffs, &other.coeffs)
    }

    /// Real inner product `Re Σ_sites Tr(a* b)` of the raw coefficients.
    pub fn real_dot(&self, other: &LatticeForm) -> f64 {
        self.assert_same_shape(other);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `Σ_sites Tr(a* b)`
    pub fn hermitian_dot(&self, other: &LatticeForm) -> C {
        self.assert_same_shape(other);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub(crate) fn assert_same_shape(&self, other: &LatticeForm) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.rank, other.rank, "rank mismatch");
        assert_eq!(self.degree, other.degree, "degree mismatch");
    }

    pub(crate) fn check_compatible(&self, other: &LatticeForm) -> Result<()> {
        if self.grid != other.grid {
            return domain("forms live on different grids");
        }
        if self.rank != other.rank {
            return domain(format!("rank mismatch: {} vs {}", self.rank, other.rank));
        }
        Ok(())
    }

    pub(crate) fn expect_degree(&self, degree: Degree, op: &str) -> Result<()> {
        if self.degree != degree {
            return domain(format!("{op} expects a degree-{degree} form, got degree {}", self.degree));
        }
        Ok(())
    }
}

impl Add for &LatticeForm {
    type Output = LatticeForm;
    fn add(self, rhs: &LatticeForm) -> LatticeForm {
        self.axpy(mat::ONE, rhs)
    }
}

impl Sub for &LatticeForm {
    type Output = LatticeForm;
    fn sub(self, rhs: &LatticeForm) -> LatticeForm {
        self.axpy(-mat::ONE, rhs)
    }
}

impl Neg for &LatticeForm {
    type Output = LatticeForm;
    fn neg(self) -> LatticeForm {
        self.map(|z| -z)
    }
}

impl Mul<C> for &LatticeForm {
    type Output = LatticeForm;
    fn mul(self, rhs: C) -> LatticeForm {
        self.scale(rhs)
    }
}

/// A mixed 1-form `η dz + θ dz̄`, held as its two pure parts.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub dz: LatticeForm,
    pub dzbar: LatticeForm,
}

impl OneForm {
    pub fn new(dz: LatticeForm, dzbar: LatticeForm) -> Result<Self> {
        dz.expect_degree(Degree::OneZero, "OneForm (dz part)")?;
        dzbar.expect_degree(Degree::ZeroOne, "OneForm (dz̄ part)")?;
        dz.check_compatible(&dzbar)?;
        Ok(OneForm { dz, dzbar })
    }

    pub fn zeros(grid: SurfaceGrid, rank: usize) -> Self {
        OneForm {
            dz: LatticeForm::zeros(grid, Degree::OneZero, rank),
            dzbar: LatticeForm::zeros(grid, Degree::ZeroOne, rank),
        }
    }

    /// Lifts a pure 1-form, filling the other part with zeros.
    pub fn from_pure(w: &LatticeForm) -> Result<Self> {
        let zero_of = |d| LatticeForm::zeros(w.grid(), d, w.rank());
        match w.degree() {
            Degree::OneZero => Ok(OneForm { dz: w.clone(), dzbar: zero_of(Degree::ZeroOne) }),
            Degree::ZeroOne => Ok(OneForm { dz: zero_of(Degree::OneZero), dzbar: w.clone() }),
            d => domain(format!("expected a 1-form, got degree {d}")),
        }
    }

    pub fn grid(&self) -> SurfaceGrid {
        self.dz.grid()
    }

    pub fn rank(&self) -> usize {
        self.dz.rank()
    }

    pub fn scale(&self, c: C) -> Self {
        OneForm { dz: self.dz.scale(c), dzbar: self.dzbar.scale(c) }
    }

    pub fn axpy(&self, t: C, other: &OneForm) -> Self {
        OneForm {
            dz: self.dz.axpy(t, &other.dz),
            dzbar: self.dzbar.axpy(t, &other.dzbar),
        }
    }

    pub fn max_abs_diff(&self, other: &OneForm) -> f64 {
        self.dz.max_abs_diff(&other.dz).max(self.dzbar.max_abs_diff(&other.dzbar))
    }

    /// Largest defect of the unitarity condition `η = −θ*` site by site.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.rank();
        (0..self.grid().site_count())
            .map(|s| {
                let minus_adj: Vec<C> = mat::adjoint(self.dzbar.site(s), n).into_iter().map(|z| -z).collect();
                mat::max_abs_diff(self.dz.site(s), &minus_adj)
            })
            .fold(0.0, f64::max)
    }

    /// Real-direction components `(A_x, A_y)` with `A = A_x dx + A_y dy`.
    pub fn real_components(&self) -> (LatticeForm, LatticeForm) {
        // dz = dx + i dy, dz̄ = dx − i dy
        let p = self.dz.clone().with_degree(Degree::Zero);
        let q = self.dzbar.clone().with_degree(Degree::Zero);
        let ax = &p + &q;
        let ay = (&p - &q).scale(I);
        (ax, ay)
    }

    pub fn hodge1(&self) -> OneForm {
        OneForm { dz: self.dz.scale(-I), dzbar: self.dzbar.scale(I) }
    }

    pub fn hodge2(&self) -> OneForm {
        OneForm {
            dz: self.dzbar.map(|z| -z.conj()).with_degree(Degree::OneZero),
            dzbar: self.dz.map(|z| z.conj()).with_degree(Degree::ZeroOne),
        }
    }
}

impl Add for &OneForm {
    type Output = OneForm;
    fn add(self, rhs: &OneForm) -> OneForm {
        self.axpy(mat::ONE, rhs)
    }
}

impl Sub for &OneForm {
    type Output = OneForm;
    fn sub(self, rhs: &OneForm) -> OneForm {
        self.axpy(-mat::ONE, rhs)
    }
}

#[derive(Clone, Copy)]
enum Stencil {
    Forward,
    Backward,
}

/// `(Dx f + s·i Dy f) / 2` with the given one-sided differences.
fn cauchy_riemann(f: &LatticeForm, stencil: Stencil, sign: f64) -> Vec<C> {
    let grid = f.grid();
    let n = f.rank();
    let inv_2h = 0.5 / grid.spacing();
    let step = match stencil {
        Stencil::Forward => 1,
        Stencil::Backward => -1,
    };
    let mut out = vec![ZERO; f.coeffs().len()];
    let iy = C::new(0.0, sign);
    for s in 0..grid.site_count() {
        let fx = f.site(grid.neighbor(s, Direction::X, step));
        let fy = f.site(grid.neighbor(s, Direction::Y, step));
        let f0 = f.site(s);
        let dst = &mut out[s * n * n..(s + 1) * n * n];
        for e in 0..n * n {
            let (dx, dy) = match stencil {
                Stencil::Forward => (fx[e] - f0[e], fy[e] - f0[e]),
                Stencil::Backward => (f0[e] - fx[e], f0[e] - fy[e]),
            };
            dst[e] = (dx + iy * dy) * inv_2h;
        }
    }
    out
}

fn stencil_form(f: &LatticeForm, stencil: Stencil, sign: f64, degree: Degree) -> LatticeForm {
    let coeffs = cauchy_riemann(f, stencil, sign);
    LatticeForm { grid: f.grid(), degree, rank: f.rank(), coeffs }
}

/// `∂f`: the `dz` coefficient `(∂ₓf − i∂ᵧf)/2` with forward differences.
pub fn del(f: &LatticeForm) -> Result<LatticeForm> {
    f.expect_degree(Degree::Zero, "del")?;
    Ok(stencil_form(f, Stencil::Forward, -1.0, Degree::OneZero))
}

/// `∂̄f`: the `dz̄` coefficient `(∂ₓf + i∂ᵧf)/2` with forward differences.
pub fn dbar(f: &LatticeForm) -> Result<LatticeForm> {
    f.expect_degree(Degree::Zero, "dbar")?;
    Ok(stencil_form(f, Stencil::Forward, 1.0, Degree::ZeroOne))
}

/// Backward-difference `∂`, the stencil adjoint to the forward `∂̄`.
pub fn del_backward(f: &LatticeForm) -> Result<LatticeForm> {
    f.expect_degree(Degree::Zero, "del_backward")?;
    Ok(stencil_form(f, Stencil::Backward, -1.0, Degree::OneZero))
}

/// Backward-difference `∂̄`, the stencil adjoint to the forward `∂`.
pub fn dbar_backward(f: &LatticeForm) -> Result<LatticeForm> {
    f.expect_degree(Degree::Zero, "dbar_backward")?;
    Ok(stencil_form(f, Stencil::Backward, 1.0, Degree::ZeroOne))
}

/// Exterior derivative of a 0-form, `d f = ∂f + ∂̄f`.
pub fn d0(f: &LatticeForm) -> Result<OneForm> {
    Ok(OneForm { dz: del(f)?, dzbar: dbar(f)? })
}

/// Exterior derivative of a 1-form (backward differences):
/// `d(p dz + q dz̄) = (∂q − ∂̄p) dz ∧ dz̄`.
pub fn d1(w: &OneForm) -> LatticeForm {
    let p = w.dz.clone().with_degree(Degree::Zero);
    let q = w.dzbar.clone().with_degree(Degree::Zero);
    let dq = cauchy_riemann(&q, Stencil::Backward, -1.0);
    let dp = cauchy_riemann(&p, Stencil::Backward, 1.0);
    let coeffs = dq.iter().zip(&dp).map(|(a, b)| a - b).collect();
    LatticeForm { grid: w.grid(), degree: Degree::Two, rank: w.rank(), coeffs }
}

/// Wedge product of pure forms with pointwise matrix multiplication.
pub fn wedge(u: &LatticeForm, v: &LatticeForm) -> Result<LatticeForm> {
    u.check_compatible(v)?;
    if u.degree().total() + v.degree().total() > 2 {
        return domain(format!("wedge of degree {} and {} exceeds 2", u.degree(), v.degree()));
    }
    let (degree, sign) = match (u.degree(), v.degree()) {
        (Degree::Zero, d) => (d, 1.0),
        (d, Degree::Zero) => (d, 1.0),
        (Degree::OneZero, Degree::ZeroOne) => (Degree::Two, 1.0),
        (Degree::ZeroOne, Degree::OneZero) => (Degree::Two, -1.0),
        // dz ∧ dz = dz̄ ∧ dz̄ = 0
        _ => return Ok(LatticeForm::zeros(u.grid(), Degree::Two, u.rank())),
    };
    let n = u.rank();
    let mut out = LatticeForm::zeros(u.grid(), degree, n);
    let coef = C::new(sign, 0.0);
    for s in 0..u.grid().site_count() {
        mat::mul_acc(out.site_mut(s), u.site(s), v.site(s), n, coef);
    }
    Ok(out)
}

/// Wedge of two mixed 1-forms.
pub fn wedge_one(u: &OneForm, v: &OneForm) -> Result<LatticeForm> {
    let a = wedge(&u.dz, &v.dzbar)?;
    let b = wedge(&u.dzbar, &v.dz)?;
    Ok(&a + &b)
}

/// Matrix-valued integral of a 2-form, using `dz ∧ dz̄ = −2i dx ∧ dy`.
pub fn integrate(w: &LatticeForm) -> Result<DMatrix<C>> {
    w.expect_degree(Degree::Two, "integrate")?;
    let n = w.rank();
    let h = w.grid().spacing();
    let mut acc = vec![ZERO; n * n];
    for block in w.sites() {
        for (a, b) in acc.iter_mut().zip(block) {
            *a += b;
        }
    }
    let factor = DZ_DZBAR_AREA * (h * h);
    Ok(DMatrix::from_row_slice(n, n, &acc).map(|z| z * factor))
}

/// `*₁`: multiplies `dz` parts by `−i` and `dz̄` parts by `i`.
pub fn hodge1(w: &LatticeForm) -> Result<LatticeForm> {
    match w.degree() {
        Degree::OneZero => Ok(w.scale(-I)),
        Degree::ZeroOne => Ok(w.scale(I)),
        d => domain(format!("hodge1 expects a 1-form, got degree {d}")),
    }
}

/// `*₂`: conjugate-linear, `η dz ↦ η̄ dz̄` and `η dz̄ ↦ −η̄ dz` (entrywise conjugate).
pub fn hodge2(w: &LatticeForm) -> Result<LatticeForm> {
    match w.degree() {
        Degree::OneZero => Ok(w.map(|z| z.conj()).with_degree(Degree::ZeroOne)),
        Degree::ZeroOne => Ok(w.map(|z| -z.conj()).with_degree(Degree::OneZero)),
        d => domain(format!("hodge2 expects a 1-form, got degree {d}")),
    }
}
