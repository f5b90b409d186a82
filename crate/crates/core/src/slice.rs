//! Gauge-orbit tangent bases, `g`-orthogonal projection onto their
//! complement, and the `𝓘`-invariance check of the resulting slice.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64 as C;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, LabError, Result};
use crate::flow::{energy_parts, two_form_norm_sq};
use crate::hitchin::{gauge_vector_field, linearized_eq2, Configuration, TangentVector};
use crate::kahler::{complex_structure, metric_g};
use crate::lie::GaugeAlgebraField;
use crate::moment::{dmoment, moment_pairing, ANALYTIC_TOL};
use crate::report::IdentityReport;
use crate::surface::{Degree, LatticeForm, SurfaceGrid};

/// Generators whose pivoted-Cholesky residual falls below this fraction of
/// the largest Gram diagonal are pruned.
pub const PRUNE_RATIO: f64 = 1e-10;
/// Largest accepted Gram condition number.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Relative orthogonality required of a projected vector.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest count as null.
pub const NULL_RATIO: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Orbit directions `X_ζ` for a finite set of gauge generators at one
/// configuration. Only the generators surviving pruning are kept.
#[derive(Clone, Debug)]
pub struct OrbitBasis {
    pub generators: Vec<GaugeAlgebraField>,
    pub vectors: Vec<TangentVector>,
    pub gram: DMatrix<f64>,
    /// Input positions of the generators that were dropped as null.
    pub pruned: Vec<usize>,
    pub condition: f64,
    factor: Cholesky<f64, Dyn>,
}

impl OrbitBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Number of pruned directions, an upper bound on the stabilizer
    /// dimension seen by the generator set.
    pub fn stabilizer_dimension(&self) -> usize {
        self.pruned.len()
    }

    /// `max_i |g(X_ζi, X)| / (‖X_ζi‖ ‖X‖)`, zero for `X = 0`.
    pub fn orthogonality_residual(&self, x: &TangentVector) -> Result<f64> {
        let nx = g_norm(x)?;
        if nx == 0.0 {
            return Ok(0.0);
        }
        let mut worst = 0.0f64;
        for (i, v) in self.vectors.iter().enumerate() {
            let scale = self.gram[(i, i)].sqrt() * nx;
            worst = worst.max(metric_g(v, x)?.abs() / scale);
        }
        Ok(worst)
    }
}

fn g_norm(x: &TangentVector) -> Result<f64> {
    Ok(metric_g(x, x)?.max(0.0).sqrt())
}

/// u(n) basis: `iE_aa`, `E_ab − E_ba`, `i(E_ab + E_ba)`.
fn unitary_algebra_basis(n: usize) -> Vec<DMatrix<C>> {
    let i = C::new(0.0, 1.0);
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        let mut m = DMatrix::zeros(n, n);
        m[(a, a)] = i;
        out.push(m);
    }
    for a in 0..n {
        for b in a + 1..n {
            let mut m = DMatrix::zeros(n, n);
            m[(a, b)] = C::new(1.0, 0.0);
            m[(b, a)] = C::new(-1.0, 0.0);
            out.push(m);
            let mut m = DMatrix::zeros(n, n);
            m[(a, b)] = i;
            m[(b, a)] = i;
            out.push(m);
        }
    }
    out
}

/// Real Fourier profiles `cos`/`sin(2π(m·x)/N)` with `|m_x|, |m_y| ≤ max_mode`
/// tensored with a basis of u(n). Yields `n²(2·max_mode + 1)²` generators.
pub fn fourier_generators(grid: SurfaceGrid, n: usize, max_mode: usize) -> Vec<GaugeAlgebraField> {
    let m = max_mode as isize;
    let sides = grid.sides() as f64;
    let mut profiles: Vec<Box<dyn Fn(usize, usize) -> f64>> = vec![Box::new(|_, _| 1.0)];
    for mx in 0..=m {
        for my in -m..=m {
            if mx == 0 && my <= 0 {
                continue;
            }
            let phase = move |j: usize, k: usize| {
                2.0 * std::f64::consts::PI * (mx as f64 * j as f64 + my as f64 * k as f64) / sides
            };
            profiles.push(Box::new(move |j, k| phase(j, k).cos()));
            profiles.push(Box::new(move |j, k| phase(j, k).sin()));
        }
    }
    let algebra = unitary_algebra_basis(n);
    let mut out = Vec::with_capacity(profiles.len() * algebra.len());
    for p in &profiles {
        for t in &algebra {
            let form = LatticeForm::from_site_fn(grid, Degree::Zero, n, |j, k, block| {
                let s = p(j, k);
                for (r, z) in block.iter_mut().enumerate() {
                    *z = t[(r / n, r % n)] * s;
                }
            });
            out.push(GaugeAlgebraField::new(form).expect("skew-Hermitian by construction"));
        }
    }
    out
}

/// Builds the orbit basis at `c`, pruning null or dependent generators by a
/// greedy pivoted Cholesky on the Gram matrix.
pub fn orbit_basis(c: &Configuration, generators: &[GaugeAlgebraField]) -> Result<OrbitBasis> {
    if generators.is_empty() {
        return domain("orbit basis needs at least one generator");
    }
    let vectors = generators.iter().map(|z| gauge_vector_field(c, z)).collect::<Result<Vec<_>>>()?;
    let k = vectors.len();
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = metric_g(&vectors[i], &vectors[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let scale = gram.amax();
    let asym = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| {
        (metric_g(&vectors[j], &vectors[i]).unwrap_or(f64::NAN) - gram[(i, j)]).abs()
    });
    let asym = asym.fold(0.0, f64::max);
    if asym.is_nan() || asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(LabError::Consistency { what: "orbit Gram symmetry".into(), defect: asym, tolerance: SYMMETRY_TOL });
    }
    if scale > 0.0 {
        let low = gram.clone().symmetric_eigenvalues().min();
        if low < -PSD_TOL * scale {
            return Err(LabError::Consistency {
                what: "orbit Gram positivity".into(),
                defect: -low / scale,
                tolerance: PSD_TOL,
            });
        }
    }

    let kept = pivoted_cholesky_pivots(&gram);
    if kept.is_empty() {
        return Err(LabError::DegenerateBasis { pruned: (0..k).collect() });
    }
    let pruned: Vec<usize> = (0..k).filter(|i| !kept.contains(i)).collect();
    let sub = DMatrix::from_fn(kept.len(), kept.len(), |i, j| gram[(kept[i], kept[j])]);
    let eig = sub.clone().symmetric_eigenvalues();
    let condition = if eig.min() > 0.0 { eig.max() / eig.min() } else { f64::INFINITY };
    let factor = Cholesky::new(sub.clone()).ok_or(LabError::Conditioning { condition, limit: CONDITION_LIMIT })?;
    Ok(OrbitBasis {
        generators: kept.iter().map(|&i| generators[i].clone()).collect(),
        vectors: kept.iter().map(|&i| vectors[i].clone()).collect(),
        gram: sub,
        pruned,
        condition,
        factor,
    })
}

/// Pivots accepted by a greedy pivoted Cholesky, in ascending order.
fn pivoted_cholesky_pivots(gram: &DMatrix<f64>) -> Vec<usize> {
    let k = gram.nrows();
    let max_diag = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return Vec::new();
    }
    let mut residual: Vec<f64> = (0..k).map(|i| gram[(i, i)]).collect();
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut free: Vec<bool> = vec![true; k];
    loop {
        let best = (0..k).filter(|&i| free[i]).max_by(|&a, &b| residual[a].total_cmp(&residual[b]));
        let Some(p) = best else { break };
        if residual[p] <= PRUNE_RATIO * max_diag {
            break;
        }
        let d = residual[p].sqrt();
        let mut col = DVector::zeros(k);
        for i in 0..k {
            let mut v = gram[(i, p)];
            for l in &columns {
                v -= l[i] * l[p];
            }
            col[i] = v / d;
        }
        for i in 0..k {
            residual[i] -= col[i] * col[i];
        }
        free[p] = false;
        columns.push(col);
        pivots.push(p);
    }
    pivots.sort_unstable();
    pivots
}

/// `X′ = X − Σ cᵢ X_ζi` with `gram · c = (g(X_ζi, X))ᵢ`.
///
/// The orthogonality post-check is relative to `‖X‖ ‖X_ζi‖`, so vectors in
/// the orbit span project to roundoff-sized remainders without failing.
pub fn project_orthogonal(x: &TangentVector, basis: &OrbitBasis) -> Result<TangentVector> {
    if basis.condition > CONDITION_LIMIT {
        return Err(LabError::Conditioning { condition: basis.condition, limit: CONDITION_LIMIT });
    }
    let rhs = DVector::from_iterator(basis.len(), basis.vectors.iter().map(|v| metric_g(v, x)).collect::<Result<Vec<_>>>()?);
    let coef = basis.factor.solve(&rhs);
    let mut out = x.clone();
    for (ci, v) in coef.iter().zip(&basis.vectors) {
        out = out.axpy(-ci, v);
    }
    let nx = g_norm(x)?;
    for (i, v) in basis.vectors.iter().enumerate() {
        let defect = metric_g(v, &out)?.abs();
        let scale = nx * basis.gram[(i, i)].sqrt();
        if defect > ORTHOGONALITY_TOL * scale {
            return Err(LabError::Consistency {
                what: "projected vector orthogonality".into(),
                defect: if scale > 0.0 { defect / scale } else { defect },
                tolerance: ORTHOGONALITY_TOL,
            });
        }
    }
    Ok(out)
}

/// Real coordinates of a tangent vector: `Re`, `Im` of `α^{(0,1)}`, then of `γ^{(1,0)}`.
fn to_coords(x: &TangentVector) -> Vec<f64> {
    x.alpha01.coeffs().iter().chain(x.gamma10.coeffs()).flat_map(|z| [z.re, z.im]).collect()
}

fn from_coords(grid: SurfaceGrid, n: usize, v: &[f64]) -> TangentVector {
    let half = v.len() / 2;
    let part = |s: &[f64], degree| {
        let coeffs = s.chunks_exact(2).map(|p| C::new(p[0], p[1])).collect();
        LatticeForm::from_coeffs(grid, degree, n, coeffs).expect("coordinate length")
    };
    TangentVector::new(part(&v[..half], Degree::ZeroOne), part(&v[half..], Degree::OneZero)).expect("pure types")
}

fn push_normalized(rows: &mut Vec<Vec<f64>>, row: Vec<f64>) {
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        rows.push(row.into_iter().map(|v| v / norm).collect());
    }
}

/// Null space of the linearized equations `dμ(X) = 0`, `(d″_AΦ)′(X) = 0`,
/// optionally intersected with the `g`-orthogonal complement of `orbit`.
#[derive(Clone, Debug)]
pub struct LinearizedSolutions {
    pub grid: SurfaceGrid,
    pub rank: usize,
    /// Orthonormal coordinate vectors spanning the null space.
    pub basis: Vec<Vec<f64>>,
    /// Smallest singular value kept out of the null space, relative to the largest.
    pub gap: f64,
}

impl LinearizedSolutions {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Gaussian combination of the null basis, scaled to unit `g`-norm.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<TangentVector> {
        let dim = self.basis.first().map_or(0, Vec::len);
        let mut v = vec![0.0; dim];
        for b in &self.basis {
            let w: f64 = rng.sample(StandardNormal);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi += w * bi;
            }
        }
        let x = from_coords(self.grid, self.rank, &v);
        let norm = g_norm(&x)?;
        Ok(if norm > 0.0 { x.scale(1.0 / norm) } else { x })
    }
}

pub fn linearized_solutions(c: &Configuration, orbit: Option<&OrbitBasis>) -> Result<LinearizedSolutions> {
    let (grid, n) = (c.grid(), c.rank());
    let zero = TangentVector::zeros(grid, n);
    let dim = to_coords(&zero).len();
    let mut columns = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        let x = from_coords(grid, n, &e);
        let mut col: Vec<f64> = dmoment(c, &x)?.coeffs().iter().flat_map(|z| [z.re, z.im]).collect();
        col.extend(linearized_eq2(c, &x)?.coeffs().iter().flat_map(|z| [z.re, z.im]));
        columns.push(col);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..columns[0].len() {
        push_normalized(&mut rows, columns.iter().map(|col| col[i]).collect());
    }
    if let Some(orbit) = orbit {
        // g(X_ζ, ·) is proportional to the coefficient pairing
        for v in &orbit.vectors {
            push_normalized(&mut rows, to_coords(v));
        }
    }
    while rows.len() < dim {
        rows.push(vec![0.0; dim]);
    }
    let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| LabError::Numerical("SVD without right singular vectors".into()))?;
    let top = svd.singular_values.max();
    let mut basis = Vec::new();
    let mut gap = f64::INFINITY;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= NULL_RATIO * top {
            basis.push(v_t.row(i).iter().copied().collect());
        } else {
            gap = gap.min(s / top);
        }
    }
    if basis.is_empty() {
        return Err(LabError::Numerical("linearized equations have no null space".into()));
    }
    Ok(LinearizedSolutions { grid, rank: n, basis, gap })
}

fn relative(value: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        value / scale
    } else {
        value
    }
}

/// Checks that `𝓘X′` stays in the slice: orthogonal to the orbit and
/// solving the linearized equations, each to `threshold`.
///
/// The orbit pairing is evaluated both as `g(X_ζ, 𝓘X′)` and as
/// `Tr∫ζ dμ(X′)`, which agree exactly on the lattice.
pub fn slice_invariance_check(
    c: &Configuration,
    x: &TangentVector,
    basis: &OrbitBasis,
    threshold: f64,
    digest: &str,
) -> Result<IdentityReport> {
    let parts = energy_parts(c)?;
    let residual = parts.r1_norm.max(parts.r2_norm);
    let xp = project_orthogonal(x, basis)?;
    let nx = g_norm(x)?;
    let nxp = g_norm(&xp)?;

    let mut r = IdentityReport::new("slice_invariance", digest);
    r.real("configuration_residual", residual)
        .real("threshold", threshold)
        .real("orbit_dimension", basis.len() as f64)
        .real("stabilizer_dimension", basis.stabilizer_dimension() as f64)
        .real("gram_condition", basis.condition)
        .bound("configuration_residual", residual, threshold)
        .bound("projection_orthogonality", basis.orthogonality_residual(&xp)?, ORTHOGONALITY_TOL);

    if nxp <= 1e-12 * nx.max(f64::MIN_POSITIVE) {
        r.real("orthogonal_part_norm", nxp);
        return Ok(r);
    }

    let lin_moment = relative(two_form_norm_sq(&dmoment(c, &xp)?).sqrt(), nxp);
    let lin_higgs = relative(two_form_norm_sq(&linearized_eq2(c, &xp)?).sqrt(), nxp);
    let ix = complex_structure(&xp);
    let ix_orth = basis.orthogonality_residual(&ix)?;
    let ix_higgs = relative(two_form_norm_sq(&linearized_eq2(c, &ix)?).sqrt(), nxp);
    let mut weak_moment = 0.0f64;
    for (i, (z, v)) in basis.generators.iter().zip(&basis.vectors).enumerate() {
        let scale = basis.gram[(i, i)].sqrt() * nxp;
        let via_metric = metric_g(v, &ix)?;
        let via_moment = moment_pairing(c, z, &xp)?;
        r.compare_real(format!("g(Xz{i},IX') = pair(z{i},dmu(X'))"), via_metric, via_moment, ANALYTIC_TOL, scale);
        weak_moment = weak_moment.max(relative(moment_pairing(c, z, &ix)?.abs(), scale));
    }
    let ixp = project_orthogonal(&ix, basis)?;
    let invariance = relative(g_norm(&(&ix - &ixp))?, nxp);

    r.real("orthogonal_part_norm", nxp)
        .real("empirical_constant", relative(invariance, residual))
        .bound("linearized_moment(X')", lin_moment, threshold)
        .bound("linearized_higgs(X')", lin_higgs, threshold)
        .bound("orbit_orthogonality(IX')", ix_orth, threshold)
        .bound("linearized_higgs(IX')", ix_higgs, threshold)
        .bound("orbit_moment_pairing(IX')", weak_moment, threshold)
        .bound("projection_invariance(IX')", invariance, threshold);
    Ok(r)
}

/// Orthogonality, idempotence and self-adjointness of the projection on
/// sample vectors.
pub fn projection_report(samples: &[TangentVector], basis: &OrbitBasis, digest: &str) -> Result<IdentityReport> {
    let mut orth = 0.0f64;
    let mut idem = 0.0f64;
    let mut adj = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let px = project_orthogonal(x, basis)?;
        let ppx = project_orthogonal(&px, basis)?;
        orth = orth.max(basis.orthogonality_residual(&px)?);
        idem = idem.max(relative(g_norm(&(&ppx - &px))?, g_norm(&px)?));
        let y = &samples[(i + 1) % samples.len()];
        let py = project_orthogonal(y, basis)?;
        let scale = g_norm(x)? * g_norm(y)?;
        adj = adj.max(relative((metric_g(&px, y)? - metric_g(x, &py)?).abs(), scale));
    }
    let mut r = IdentityReport::new("slice_projection", digest);
    r.real("samples", samples.len() as f64)
        .real("orbit_dimension", basis.len() as f64)
        .bound("orthogonality", orth, ORTHOGONALITY_TOL)
        .bound("idempotence", idem, 1e-10)
        .bound("self_adjointness", adj, ORTHOGONALITY_TOL);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::seed_solution;
    use crate::hitchin::{random_configuration, random_tangent};
    use crate::lie::{random_skew_hermitian, seeded_rng, Smoothness};

    fn grid(n: usize) -> SurfaceGrid {
        SurfaceGrid::torus(n, 1.0).unwrap()
    }

    #[test]
    fn generator_count_and_skewness() {
        let g = grid(4);
        assert_eq!(fourier_generators(g, 2, 1).len(), 4 * 9);
        assert_eq!(fourier_generators(g, 1, 0).len(), 1);
    }

    #[test]
    fn constant_generators_are_pruned_at_abelian_solution() {
        let g = grid(6);
        let c = seed_solution(g, 1, C::new(1.0, -0.5)).unwrap();
        match orbit_basis(&c, &fourier_generators(g, 1, 0)) {
            Err(LabError::DegenerateBasis { pruned }) => assert_eq!(pruned, vec![0]),
            other => panic!("expected degenerate basis, got {other:?}"),
        }
        let b = orbit_basis(&c, &fourier_generators(g, 1, 1)).unwrap();
        assert_eq!(b.pruned, vec![0]);
        assert_eq!(b.len(), 8);
    }

    #[test]
    fn duplicate_generator_is_pruned() {
        let g = grid(6);
        let mut rng = seeded_rng(5);
        let c = random_configuration(g, 2, Smoothness::Smooth { max_mode: 1 }, 0.5, &mut rng);
        let mut gens: Vec<_> = (0..4).map(|s| random_skew_hermitian(g, 2, 100 + s, Smoothness::Smooth { max_mode: 1 })).collect();
        let full = orbit_basis(&c, &gens).unwrap();
        assert_eq!(full.len(), 4);
        assert!(full.gram.clone().symmetric_eigenvalues().min() > 0.0);
        gens.push(gens[1].clone());
        let dup = orbit_basis(&c, &gens).unwrap();
        assert_eq!(dup.len(), 4);
        assert_eq!(dup.pruned.len(), 1);
    }

    #[test]
    fn projection_properties() {
        let g = grid(6);
        let mut rng = seeded_rng(6);
        let c = random_configuration(g, 2, Smoothness::Smooth { max_mode: 1 }, 0.5, &mut rng);
        let basis = orbit_basis(&c, &fourier_generators(g, 2, 1)).unwrap();
        let xs: Vec<_> = (0..5).map(|_| random_tangent(g, 2, Smoothness::Rough, &mut rng)).collect();
        let r = projection_report(&xs, &basis, "test").unwrap();
        assert!(r.pass, "{}", r.to_json_line());

        // orbit directions project to zero
        let v = basis.vectors[3].axpy(0.5, &basis.vectors[7]);
        let pv = project_orthogonal(&v, &basis).unwrap();
        assert!(g_norm(&pv).unwrap() <= 1e-9 * g_norm(&v).unwrap());

        // orthogonal vectors are left alone
        let px = project_orthogonal(&xs[0], &basis).unwrap();
        let ppx = project_orthogonal(&px, &basis).unwrap();
        assert!(g_norm(&(&ppx - &px)).unwrap() <= 1e-10 * g_norm(&px).unwrap());
    }

    #[test]
    fn slice_is_invariant_at_exact_abelian_solution() {
        let g = grid(6);
        let c = seed_solution(g, 1, C::new(0.7, 0.2)).unwrap();
        let basis = orbit_basis(&c, &fourier_generators(g, 1, 1)).unwrap();
        let sols = linearized_solutions(&c, Some(&basis)).unwrap();
        assert!(sols.dimension() > 0);
        let mut rng = seeded_rng(7);
        for _ in 0..3 {
            let x = sols.sample(&mut rng).unwrap();
            let r = slice_invariance_check(&c, &x, &basis, 1e-8, "test").unwrap();
            assert!(r.pass, "{}", r.to_json_line());
        }
        // a pure orbit direction has no orthogonal part
        let r = slice_invariance_check(&c, &basis.vectors[0], &basis, 1e-8, "test").unwrap();
        assert!(r.pass);
    }
}
