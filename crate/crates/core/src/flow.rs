//! Gradient flow on the residual energy
//! `E = ‖F + [Φ, Φ*]‖² + ‖d″_A Φ‖²`.
//!
//! For a 2-form `w = η dz ∧ dz̄` the norm is taken on its `dx ∧ dy`
//! coefficient `ξ = −2iη`: `‖w‖² = Σ h² Tr(ξ ξ*) = 4h² Σ Tr(η η*)`.

use std::fmt;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hitchin::{selfduality_residuals, Configuration, TangentVector};
use crate::kahler::metric_coefficients;
use crate::lie::form_commutator;
use crate::mat::ONE;
use crate::surface::{dbar, del_backward, Degree, LatticeForm, SurfaceGrid};

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
/// Steps below this end the flow as stagnated.
const MIN_STEP: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub step_size: f64,
    pub max_iters: u64,
    pub target_residual: f64,
    pub backtrack: f64,
    pub growth: f64,
    pub seed: u64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { step_size: 0.01, max_iters: 100_000, target_residual: 1e-8, backtrack: 0.5, growth: 1.2, seed: 0 }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return domain(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return domain(format!("backtracking factor must lie in (0, 1), got {}", self.backtrack));
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return domain(format!("growth factor must be at least 1, got {}", self.growth));
        }
        if !(self.target_residual > 0.0) {
            return domain(format!("target_residual must be positive, got {}", self.target_residual));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub iter: u64,
    pub energy: f64,
    pub r1_norm: f64,
    pub r2_norm: f64,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIters,
    Stagnated,
}

impl fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowStatus::Converged => "converged",
            FlowStatus::MaxIters => "max_iters",
            FlowStatus::Stagnated => "stagnated",
        })
    }
}

/// Position of a flow run, enough to resume it bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub iteration: u64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
    pub final_state: FlowState,
    /// The run continued a saved state; its first record repeats the last
    /// row of the earlier run and is left out of the CSV.
    pub resumed: bool,
}

impl FlowTrace {
    pub fn last(&self) -> &FlowRecord {
        self.records.last().expect("trace holds the initial record")
    }

    pub fn max_residual(&self) -> f64 {
        let r = self.last();
        r.r1_norm.max(r.r2_norm)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].energy < w[0].energy)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,energy,r1_norm,r2_norm,step\n");
        for r in &self.records[usize::from(self.resumed)..] {
            s.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", r.iter, r.energy, r.r1_norm, r.r2_norm, r.step));
        }
        s
    }

    pub fn status_json(&self) -> String {
        let last = self.last();
        serde_json::json!({
            "status": self.status,
            "iterations": self.final_state.iteration,
            "energy": last.energy,
            "r1_norm": last.r1_norm,
            "r2_norm": last.r2_norm,
            "step": self.final_state.step,
        })
        .to_string()
    }
}

/// Squared norm `4h² Σ Tr(η η*)` of a 2-form.
pub fn two_form_norm_sq(w: &LatticeForm) -> f64 {
    let h = w.grid().spacing();
    4.0 * h * h * crate::mat::frobenius_sq(w.coeffs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub energy: f64,
    pub r1_norm: f64,
    pub r2_norm: f64,
}

pub fn energy_parts(c: &Configuration) -> Result<EnergyParts> {
    let (r1, r2) = selfduality_residuals(c)?;
    let (a, b) = (two_form_norm_sq(&r1), two_form_norm_sq(&r2));
    Ok(EnergyParts { energy: a + b, r1_norm: a.sqrt(), r2_norm: b.sqrt() })
}

pub fn energy(c: &Configuration) -> Result<f64> {
    Ok(energy_parts(c)?.energy)
}

fn as_zero(w: &LatticeForm) -> LatticeForm {
    w.clone().with_degree(Degree::Zero)
}

fn bracket(a: &LatticeForm, b: &LatticeForm) -> LatticeForm {
    form_commutator(a, b).expect("0-form commutator")
}

/// Metric-`g` gradient of [`energy`], assembled from the adjoints of the
/// linearized residuals under the lattice pairings.
pub fn energy_gradient(c: &Configuration) -> Result<TangentVector> {
    let (r1, r2) = selfduality_residuals(c)?;
    let r1 = as_zero(&r1);
    let r1_adj = r1.adjoint_blocks();
    let r2 = as_zero(&r2);
    let b = as_zero(c.a01());
    let b_adj = b.adjoint_blocks();
    let phi = as_zero(c.phi10());
    let phi_adj = phi.adjoint_blocks();
    let r1_sum = &r1 + &r1_adj;

    // connection part: −∂̄(R1 + R1*) + [R1 + R1*, b] − [R2, φ*]
    let mut g_b = dbar(&r1_sum)?.with_degree(Degree::Zero).scale(-ONE);
    g_b = &g_b + &bracket(&r1_sum, &b);
    g_b = &g_b - &bracket(&r2, &phi_adj);

    // Higgs part: [R1 + R1*, φ] + ∂_backward R2 + [R2, b*]
    let mut g_p = bracket(&r1_sum, &phi);
    g_p = &g_p + &del_backward(&r2)?.with_degree(Degree::Zero);
    g_p = &g_p + &bracket(&r2, &b_adj);

    Ok(TangentVector {
        alpha01: g_b.scale(C::new(2.0, 0.0)).with_degree(Degree::ZeroOne),
        gamma10: g_p.scale(C::new(2.0, 0.0)).with_degree(Degree::OneZero),
    })
}

/// Rank-1 exact solution `A = 0`, `Φ = c dz`.
pub fn seed_solution(grid: SurfaceGrid, n: usize, c: C) -> Result<Configuration> {
    if n != 1 {
        return domain(format!("seed_solution is the rank-1 solution, got rank {n}"));
    }
    Configuration::new(
        LatticeForm::zeros(grid, Degree::ZeroOne, 1),
        LatticeForm::scalar_field(grid, Degree::OneZero, 1, |_, _| c),
    )
}

pub fn gradient_flow(c0: &Configuration, p: &FlowParams) -> Result<(Configuration, FlowTrace)> {
    gradient_flow_from(c0, p, FlowState { iteration: 0, step: p.step_size })
}

/// Backtracking descent on `E` from a saved [`FlowState`]; runs at most
/// `p.max_iters` further iterations.
pub fn gradient_flow_from(c0: &Configuration, p: &FlowParams, start: FlowState) -> Result<(Configuration, FlowTrace)> {
    p.validate()?;
    let mut c = c0.clone();
    let mut step = start.step;
    let mut iter = start.iteration;
    let mut parts = energy_parts(&c)?;
    let mut records = vec![FlowRecord {
        iter,
        energy: parts.energy,
        r1_norm: parts.r1_norm,
        r2_norm: parts.r2_norm,
        step,
    }];
    let stop_at = start.iteration.saturating_add(p.max_iters);

    let status = loop {
        if parts.r1_norm.max(parts.r2_norm) <= p.target_residual {
            break FlowStatus::Converged;
        }
        if iter >= stop_at {
            break FlowStatus::MaxIters;
        }
        let grad = energy_gradient(&c)?;
        let slope = metric_coefficients(&grad, &grad);
        let accepted = loop {
            let trial = c.displaced(-step, &grad);
            let trial_parts = energy_parts(&trial)?;
            if trial_parts.energy < parts.energy && trial_parts.energy <= parts.energy - ARMIJO * step * slope {
                break Some((trial, trial_parts));
            }
            step *= p.backtrack;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((next, next_parts)) = accepted else {
            break FlowStatus::Stagnated;
        };
        iter += 1;
        records.push(FlowRecord {
            iter,
            energy: next_parts.energy,
            r1_norm: next_parts.r1_norm,
            r2_norm: next_parts.r2_norm,
            step,
        });
        c = next;
        parts = next_parts;
        step *= p.growth;
    };
    let final_state = FlowState { iteration: iter, step };
    Ok((c, FlowTrace { records, status, final_state, resumed: start.iteration > 0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitchin::{gauge_transform, random_configuration, random_tangent};
    use crate::lie::{random_gauge, seeded_rng, Smoothness};

    #[test]
    fn seed_is_exact_and_stationary() {
        let g = SurfaceGrid::torus(8, 1.0).unwrap();
        for c in [C::new(0.0, 0.0), C::new(1.0, 2.0)] {
            let s = seed_solution(g, 1, c).unwrap();
            assert_eq!(energy(&s).unwrap(), 0.0);
            assert!(energy_gradient(&s).unwrap().max_abs() <= 1e-12);
            let (out, trace) = gradient_flow(&s, &FlowParams::default()).unwrap();
            assert_eq!(trace.status, FlowStatus::Converged);
            assert_eq!(trace.records.len(), 1);
            assert_eq!(out, s);
        }
        assert!(seed_solution(g, 2, ONE).is_err());
        let moved = gauge_transform(&seed_solution(g, 1, ONE).unwrap(), &random_gauge(g, 1, 3, Smoothness::Rough, 1.0))
            .unwrap();
        // abelian gauge moves A by a pure-gauge term, which is flat to O(h) only
        assert!(energy(&moved).unwrap().is_finite());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = SurfaceGrid::torus(6, 1.0).unwrap();
        let mut rng = seeded_rng(12);
        for n in 1..=2 {
            let c = random_configuration(g, n, Smoothness::Rough, 1.0, &mut rng);
            let y = random_tangent(g, n, Smoothness::Rough, &mut rng);
            let t = 1e-4;
            let fd = (energy(&c.displaced(t, &y)).unwrap() - energy(&c.displaced(-t, &y)).unwrap()) / (2.0 * t);
            let an = metric_coefficients(&energy_gradient(&c).unwrap(), &y);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "n={n}: {fd} vs {an}");
        }
    }

    #[test]
    fn params_validation() {
        let mut p = FlowParams::default();
        assert!(p.validate().is_ok());
        p.backtrack = 1.0;
        assert!(p.validate().is_err());
        p = FlowParams { step_size: 0.0, ..FlowParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_iterations_from_random_start() {
        let g = SurfaceGrid::torus(6, 1.0).unwrap();
        let mut rng = seeded_rng(13);
        let c = random_configuration(g, 1, Smoothness::Smooth { max_mode: 1 }, 0.5, &mut rng);
        let p = FlowParams { max_iters: 0, ..FlowParams::default() };
        let (_, trace) = gradient_flow(&c, &p).unwrap();
        assert_eq!(trace.status, FlowStatus::MaxIters);
    }

    #[test]
    fn short_flow_is_monotone_and_resumable() {
        let g = SurfaceGrid::torus(6, 1.0).unwrap();
        let mut rng = seeded_rng(14);
        let c = random_configuration(g, 2, Smoothness::Smooth { max_mode: 1 }, 0.5, &mut rng);
        let p = FlowParams { max_iters: 40, ..FlowParams::default() };
        let (full_c, full) = gradient_flow(&c, &p).unwrap();
        assert!(full.is_monotone());
        let half = FlowParams { max_iters: 20, ..p };
        let (mid, first) = gradient_flow(&c, &half).unwrap();
        let (end, second) = gradient_flow_from(&mid, &half, first.final_state).unwrap();
        assert_eq!(end, full_c);
        // the resumed trace opens with a copy of the saved state; compare what follows
        assert_eq!(&full.records[21..], &second.records[1..]);
        assert_eq!(full.records[20].energy, second.records[0].energy);
        let joined = first.to_csv() + second.to_csv().split_once('\n').unwrap().1;
        assert_eq!(joined, full.to_csv());
    }
}
