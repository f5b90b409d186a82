//! The registered identity suite run by `verify`: every check is evaluated
//! on independent random trials and folded into one report per check.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rayon::prelude::*;

use crate::error::Result;
use crate::hitchin::{random_configuration, random_tangent, Configuration, TangentVector};
use crate::kahler::{complex_structure, metric_coefficients, metric_g, metric_hitchin, omega_paths};
use crate::lie::{random_matrix, random_skew_hermitian_from, trial_rng, GaugeAlgebraField, Smoothness};
use crate::moment::{im_trace_chain, slice_pairing_checks, verify_hamiltonian_identity};
use crate::quillen::prequantum_check;
use crate::report::IdentityReport;
use crate::runconfig::VerifyConfig;

/// Report names in output order.
pub const CHECKS: [&str; 9] = [
    "metric_equivalence",
    "omega_consistency",
    "eq4",
    "eq5",
    "hamiltonian_identity",
    "slice_pairings",
    "prequantum_curvature",
    "complex_structure_signs",
    "trace_lemmas",
];

pub const METRIC_TOL: f64 = 1e-11;
pub const OMEGA_SYMMETRY_TOL: f64 = 1e-11;
pub const TRACE_TOL: f64 = 1e-12;
pub const IM_TRACE_TOL: f64 = 1e-13;

struct TrialInputs {
    c: Configuration,
    x: TangentVector,
    y: TangentVector,
    zeta: GaugeAlgebraField,
    mats: [DMatrix<C>; 3],
}

fn draw(cfg: &VerifyConfig, trial: usize) -> Result<TrialInputs> {
    let grid = cfg.grid.grid()?;
    let n = cfg.grid.rank;
    let mut rng = trial_rng(cfg.seed, trial as u64);
    let c = random_configuration(grid, n, Smoothness::Rough, cfg.amplitude, &mut rng);
    let x = random_tangent(grid, n, Smoothness::Rough, &mut rng);
    let y = random_tangent(grid, n, Smoothness::Rough, &mut rng);
    let zeta = random_skew_hermitian_from(grid, n, Smoothness::Rough, &mut rng);
    let mats = [random_matrix(n, &mut rng), random_matrix(n, &mut rng), random_matrix(n, &mut rng)];
    Ok(TrialInputs { c, x, y, zeta, mats })
}

pub fn metric_equivalence(x: &TangentVector, y: &TangentVector, digest: &str) -> Result<IdentityReport> {
    let g = metric_g(x, x)?;
    let g1 = metric_hitchin(x, x)?;
    let gc = metric_coefficients(x, x);
    let gxy = metric_g(x, y)?;
    let g1xy = metric_hitchin(x, y)?;
    let mut r = IdentityReport::new("metric_equivalence", digest);
    r.real("g(X,X)", g)
        .real("g1(X,X)", g1)
        .real("coefficients(X,X)", gc)
        .compare_real("g(X,X) = g1(X,X)", g, g1, METRIC_TOL, 1.0)
        .compare_real("g(X,X) = coefficients(X,X)", g, gc, METRIC_TOL, 1.0)
        .compare_real("g(X,Y) = g1(X,Y)", gxy, g1xy, METRIC_TOL, 1.0)
        .compare_real("g(X,Y) = g(Y,X)", gxy, metric_g(y, x)?, METRIC_TOL, 1.0);
    Ok(r)
}

pub fn omega_consistency(x: &TangentVector, y: &TangentVector, digest: &str) -> Result<IdentityReport> {
    let xy = omega_paths(x, y)?;
    let yx = omega_paths(y, x)?;
    let (ix, iy) = (complex_structure(x), complex_structure(y));
    let ixy = omega_paths(&ix, &iy)?;
    let mut r = IdentityReport::new("omega_consistency", digest);
    r.real("omega(X,Y) via metric", xy.via_metric)
        .real("omega(X,Y) via forms", xy.via_forms)
        .compare_real("metric path = forms path", xy.via_metric, xy.via_forms, crate::kahler::OMEGA_PATH_TOL, 1.0)
        .compare_real("antisymmetry", xy.via_metric, -yx.via_metric, OMEGA_SYMMETRY_TOL, 1.0)
        .compare_real("I-invariance", ixy.via_metric, xy.via_metric, OMEGA_SYMMETRY_TOL, 1.0)
        .compare_real("g(IX,IY) = g(X,Y)", metric_g(&ix, &iy)?, metric_g(x, y)?, OMEGA_SYMMETRY_TOL, 1.0);
    Ok(r)
}

/// Splits the Hamiltonian report into its curvature-term, Higgs-term and `dH = Ω` parts.
fn hamiltonian_reports(c: &Configuration, zeta: &GaugeAlgebraField, y: &TangentVector, digest: &str) -> Result<[IdentityReport; 3]> {
    let full = verify_hamiltonian_identity(c, zeta, y, digest)?;
    let part = |name: &str, values: &[&str], labels: &[&str]| {
        let mut r = IdentityReport::new(name, digest);
        for v in full.values.iter().filter(|v| values.contains(&v.label.as_str())) {
            r.value(v.label.clone(), C::new(v.re, v.im));
        }
        for d in full.discrepancies.iter().filter(|d| labels.contains(&d.label.as_str())) {
            r.push_discrepancy(d.clone());
        }
        r
    };
    Ok([
        part("eq4", &["eq4_lhs", "eq4_rhs"], &["eq4"]),
        part("eq5", &["eq5_lhs", "eq5_rhs"], &["eq5"]),
        part(
            "hamiltonian_identity",
            &["dH_analytic", "dH_finite_difference", "omega_X_zeta_Y"],
            &["analytic_vs_omega", "finite_difference_vs_omega"],
        ),
    ])
}

/// The sign table of `𝓘` on the four type components, each exact.
pub fn complex_structure_signs(x: &TangentVector, digest: &str) -> IdentityReport {
    let i = C::new(0.0, 1.0);
    let ix = complex_structure(x);
    let iix = complex_structure(&ix);
    let mut r = IdentityReport::new("complex_structure_signs", digest);
    r.bound("I(alpha01) = i alpha01", ix.alpha01.max_abs_diff(&x.alpha01.scale(i)), 0.0)
        .bound("I(gamma10) = i gamma10", ix.gamma10.max_abs_diff(&x.gamma10.scale(i)), 0.0)
        .bound("I(alpha10) = -i alpha10", ix.alpha10().max_abs_diff(&x.alpha10().scale(-i)), 0.0)
        .bound("I(gamma01) = -i gamma01", ix.gamma01().max_abs_diff(&x.gamma01().scale(-i)), 0.0)
        .bound("I(I(X)) = -X", iix.max_abs_diff(&x.scale(-1.0)), 0.0);
    r
}

/// Per-site trace manipulations used by the Hamiltonian derivation.
pub fn trace_lemmas(mats: &[DMatrix<C>; 3], digest: &str) -> IdentityReport {
    let [a, b, c] = mats;
    let comm = |p: &DMatrix<C>, q: &DMatrix<C>| p * q - q * p;
    let cyclic_l = (comm(a, b) * c).trace();
    let cyclic_r = (comm(b, c) * a).trace();
    let re_l = (a * b.adjoint()).trace().re;
    let re_r = (b * a.adjoint()).trace().re;
    let zeta = (a - a.adjoint()) * C::new(0.5, 0.0);
    let (im_l, im_r) = im_trace_chain(&zeta, b, c);
    let scale = a.norm() * b.norm() * c.norm();
    let mut r = IdentityReport::new("trace_lemmas", digest);
    r.value("Tr([A,B]C)", cyclic_l)
        .value("Tr([B,C]A)", cyclic_r)
        .compare("Tr([A,B]C) = Tr([B,C]A)", cyclic_l, cyclic_r, TRACE_TOL, scale)
        .compare_real("Re Tr(AB*) = Re Tr(BA*)", re_l, re_r, TRACE_TOL, a.norm() * b.norm())
        .compare("Im Tr([z,phi]e*) chain", C::new(im_l, 0.0), im_r, IM_TRACE_TOL, scale);
    r
}

fn trial_reports(cfg: &VerifyConfig, trial: usize, digest: &str) -> Result<Vec<IdentityReport>> {
    let t = draw(cfg, trial)?;
    let [eq4, eq5, ham] = hamiltonian_reports(&t.c, &t.zeta, &t.y, digest)?;
    let mut out = vec![
        metric_equivalence(&t.x, &t.y, digest)?,
        omega_consistency(&t.x, &t.y, digest)?,
        eq4,
        eq5,
        ham,
        slice_pairing_checks(&t.c, &t.x, &t.zeta, digest)?,
        prequantum_check(&t.x, &t.y, digest)?,
        complex_structure_signs(&t.x, digest),
        trace_lemmas(&t.mats, digest),
    ];
    for r in &mut out {
        if let Some(tol) = cfg.tolerance_for(&r.identity_name) {
            r.rejudge(tol);
        }
    }
    Ok(out)
}

pub fn suite_digest(cfg: &VerifyConfig) -> String {
    format!(
        "N={} L={} n={} seed={} trials={} amplitude={}",
        cfg.grid.sides, cfg.grid.length, cfg.grid.rank, cfg.seed, cfg.trials, cfg.amplitude
    )
}

/// Runs every check on `cfg.trials` trials (in parallel on the current
/// rayon pool) and returns one aggregated report per check, in [`CHECKS`] order.
pub fn run_suite(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let digest = suite_digest(cfg);
    let per_trial: Vec<Vec<IdentityReport>> =
        (0..cfg.trials).into_par_iter().map(|t| trial_reports(cfg, t, &digest)).collect::<Result<_>>()?;
    Ok(CHECKS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let trials: Vec<IdentityReport> = per_trial.iter().map(|reports| reports[i].clone()).collect();
            IdentityReport::aggregate(*name, digest.clone(), &trials)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runconfig::{Command, RunConfig};

    fn config(text: &str) -> VerifyConfig {
        match RunConfig::parse(text, Command::Verify).unwrap() {
            RunConfig::Verify(v) => v,
            _ => unreachable!(),
        }
    }

    #[test]
    fn small_suite_passes_and_is_ordered() {
        let reports = run_suite(&config("[verify]\nN = 4\nn = 2\ntrials = 3\n")).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.identity_name.as_str()).collect();
        assert_eq!(names, CHECKS);
        for r in &reports {
            assert!(r.pass, "{}", r.to_json_line());
        }
    }

    #[test]
    fn impossible_tolerance_fails() {
        let reports = run_suite(&config("[verify]\nN = 4\nn = 2\ntrials = 2\ntolerance = 1e-30\n")).unwrap();
        assert!(reports.iter().any(|r| !r.pass));
        let ok = run_suite(&config("[verify]\nN = 4\nn = 1\ntrials = 2\ntolerance = 1e-30\ntol.eq4 = 1e-6\n")).unwrap();
        assert!(ok.iter().find(|r| r.identity_name == "eq4").unwrap().pass);
    }
}
