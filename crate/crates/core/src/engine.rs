//! The regularization-path iteration.
//!
//! Within epoch μ the iterate runs the damped step
//! `x ← x − λ (y + θ_μ x)` on the strongly monotone map `θ_μ I + A` while
//! tracking a radius `r` with `|x − p_μ| ≤ r`, where `p_μ` solves
//! `θ_μ p + A p ∋ 0`. Once `r ≤ ρ_μ` the radius is reset to `(1+|z|)·ρ_μ`
//! (z = A(0)), which bounds the distance to the next regularized solution,
//! and the epoch advances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::MonotoneMap;
use crate::schedule::Schedule;
use crate::trace::{Trace, TraceRow};
use crate::vector::{ensure_dim, ensure_finite, is_finite, Vector};

/// λ = min(1/(2θ), θ r²/|w|²).
pub fn step_lambda(theta: f64, r: f64, w_norm: f64) -> Result<f64> {
    if !(theta > 0.0) || !(r >= 0.0) {
        return Err(Error::Domain(format!("step_lambda(theta={theta}, r={r})")));
    }
    if !(w_norm > 0.0) {
        return Err(Error::Domain(
            "step_lambda with |w| = 0; route through the residual floor".into(),
        ));
    }
    Ok((0.5 / theta).min(theta * r * r / (w_norm * w_norm)))
}

/// x − λ·w.
pub fn step_update(x: &Vector, w: &Vector, lambda: f64) -> Result<Vector> {
    ensure_dim(w, x.len())?;
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("negative step {lambda}")));
    }
    Ok(x - w * lambda)
}

/// sqrt((1 − 2θλ) r² + λ²|w|²).
pub fn radius_update(r: f64, theta: f64, lambda: f64, w_norm: f64) -> Result<f64> {
    let decay = (1.0 - 2.0 * theta * lambda) * r * r;
    let growth = lambda * lambda * w_norm * w_norm;
    let radicand = decay + growth;
    if radicand < -1e-12 * (r * r + growth) || radicand.is_nan() {
        return Err(Error::Numerical(format!(
            "negative radicand {radicand:e} (lambda={lambda} exceeds 1/(2 theta)={})",
            0.5 / theta
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// |x0 + y0/θ0|, the smallest admissible starting radius.
pub fn init_radius(x0: &Vector, y0: &Vector, theta0: f64) -> Result<f64> {
    ensure_dim(y0, x0.len())?;
    ensure_finite(x0, "x0")?;
    ensure_finite(y0, "y0")?;
    if !(theta0 > 0.0) {
        return Err(Error::Domain(format!("theta0 = {theta0}")));
    }
    Ok(x0.iter().zip(y0.iter()).map(|(a, b)| {
        let c = a + b / theta0;
        c * c
    }).sum::<f64>().sqrt())
}

/// (1 + |z|)·ρ_μ.
pub fn epoch_reset(rho_mu: f64, z_norm: f64) -> f64 {
    (1.0 + z_norm) * rho_mu
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Operator-evaluation budget.
    pub max_evals: u64,
    /// Stop once μ reaches this epoch.
    pub target_mu: u64,
    /// |w| at or below this counts as an exact epoch solution.
    pub residual_floor: f64,
    pub divergence_norm: f64,
    /// Relative change of v = θ_μ x between resets that counts as stabilized.
    pub v_tol: f64,
    pub record_trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_evals: 500_000,
            target_mu: 10_000,
            residual_floor: 1e-14,
            divergence_norm: 1e3,
            v_tol: 1e-3,
            record_trace: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 || self.target_mu == 0 {
            return Err(Error::Config("max_evals and target_mu must be positive".into()));
        }
        if !(self.residual_floor > 0.0) {
            return Err(Error::Config(format!("residual_floor = {}", self.residual_floor)));
        }
        if !(self.divergence_norm > 1.0) {
            return Err(Error::Config(format!("divergence_norm = {}", self.divergence_norm)));
        }
        if !(self.v_tol > 0.0) {
            return Err(Error::Config(format!("v_tol = {}", self.v_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    ToleranceReached,
    BudgetExhausted,
    DivergenceSuspected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub n: u64,
    pub mu: u64,
    pub x: Vector,
    pub r: f64,
    pub z_norm: f64,
    pub last_lambda: f64,
    pub last_w_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: Status,
    pub x_final: Vector,
    /// θ_μ·x at exit; estimates −a⁰ on the divergence branch.
    pub v_final: Vector,
    pub mu_final: u64,
    pub n_final: u64,
    /// (1+|z|)·ρ_{μ−1}: certified bound on |x − p_μ| (r itself while μ = 0).
    pub cert_radius: f64,
    pub r_final: f64,
    pub z_norm: f64,
    pub evals: u64,
    pub trace: Option<Trace>,
}

/// One update in epoch `mu`, seen before `x` moves.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'a> {
    pub n: u64,
    pub mu: u64,
    pub theta: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r: f64,
    pub r_next: f64,
    pub w_norm: f64,
    pub x: &'a Vector,
    pub evals: u64,
}

#[derive(Debug, Clone, Copy)]
pub enum Event<'a> {
    Step(StepRecord<'a>),
    /// Reset just performed; `mu` is the new epoch and `r` its starting radius.
    EpochAdvance {
        n: u64,
        mu: u64,
        r: f64,
        x: &'a Vector,
        evals: u64,
    },
}

pub fn solve(
    op: &dyn MonotoneMap,
    x0: &Vector,
    schedule: &Schedule,
    config: &SolveConfig,
) -> Result<SolveReport> {
    if config.record_trace {
        let mut rows = Vec::new();
        let mut report = solve_observed(op, x0, schedule, config, |ev| {
            if let Event::Step(s) = ev {
                rows.push(TraceRow::from_step(&s));
            }
        })?;
        report.trace = Some(Trace { rows });
        Ok(report)
    } else {
        solve_observed(op, x0, schedule, config, |_| {})
    }
}

/// [`solve`] with a callback on every update and every reset.
pub fn solve_observed(
    op: &dyn MonotoneMap,
    x0: &Vector,
    schedule: &Schedule,
    config: &SolveConfig,
    mut observe: impl FnMut(Event<'_>),
) -> Result<SolveReport> {
    config.validate()?;
    schedule.ensure_valid()?;
    let d = op.dim();
    ensure_dim(x0, d)?;
    ensure_finite(x0, "x0")?;

    let mut y = Vector::zeros(d);
    let origin = Vector::zeros(d);
    op.eval_into(&origin, &mut y);
    if !is_finite(&y) {
        return Err(Error::operator_at(&origin));
    }
    let z_norm = y.norm();

    let mut state = SolverState {
        n: 0,
        mu: 0,
        x: x0.clone(),
        r: 0.0,
        z_norm,
        last_lambda: 0.0,
        last_w_norm: 0.0,
    };
    op.eval_into(&state.x, &mut y);
    let mut evals = 2;
    if !is_finite(&y) {
        return Err(Error::operator_at(&state.x));
    }
    state.r = init_radius(&state.x, &y, schedule.theta(0))?;

    let mut w = Vector::zeros(d);
    let mut v_prev = Vector::zeros(d);
    let mut have_v_prev = false;

    let status = loop {
        let theta = schedule.theta(state.mu);
        let rho = schedule.rho(state.mu);
        w.copy_from(&y);
        w.axpy(theta, &state.x, 1.0);
        let w_norm = w.norm();
        state.last_w_norm = w_norm;

        if state.r <= rho || w_norm <= config.residual_floor {
            state.r = epoch_reset(rho, z_norm);
            state.mu += 1;
            observe(Event::EpochAdvance {
                n: state.n,
                mu: state.mu,
                r: state.r,
                x: &state.x,
                evals,
            });
            if state.mu >= config.target_mu {
                break Status::ToleranceReached;
            }
            if state.x.norm() >= config.divergence_norm {
                let theta_next = schedule.theta(state.mu);
                // v_prev ← v_prev − θ x, then compare against |θ x|
                let v_norm = theta_next * state.x.norm();
                if have_v_prev {
                    v_prev.axpy(-theta_next, &state.x, 1.0);
                    if v_prev.norm() <= config.v_tol * v_norm {
                        break Status::DivergenceSuspected;
                    }
                }
                v_prev.copy_from(&state.x);
                v_prev *= theta_next;
                have_v_prev = true;
            } else {
                have_v_prev = false;
            }
            continue;
        }

        if evals >= config.max_evals {
            break Status::BudgetExhausted;
        }

        let lambda = step_lambda(theta, state.r, w_norm)?;
        let r_next = radius_update(state.r, theta, lambda, w_norm)?;
        observe(Event::Step(StepRecord {
            n: state.n,
            mu: state.mu,
            theta,
            rho,
            lambda,
            r: state.r,
            r_next,
            w_norm,
            x: &state.x,
            evals,
        }));
        state.x.axpy(-lambda, &w, 1.0);
        state.r = r_next;
        state.last_lambda = lambda;
        state.n += 1;

        if !is_finite(&state.x) {
            return Err(Error::NonFinite("iterate"));
        }
        op.eval_into(&state.x, &mut y);
        evals += 1;
        if !is_finite(&y) {
            return Err(Error::operator_at(&state.x));
        }
    };

    let cert_radius = if state.mu >= 1 {
        epoch_reset(schedule.rho(state.mu - 1), z_norm)
    } else {
        state.r
    };
    let v_final = &state.x * schedule.theta(state.mu);
    Ok(SolveReport {
        status,
        v_final,
        mu_final: state.mu,
        n_final: state.n,
        cert_radius,
        r_final: state.r,
        z_norm,
        evals,
        x_final: state.x,
        trace: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{constant_map, identity_map, FnMap};
    use crate::vector::vector;

    #[test]
    fn lambda_examples() {
        assert_eq!(step_lambda(0.5, 2.0, 1.0).unwrap(), 1.0);
        assert_eq!(step_lambda(1.0, 1.0, 2.0).unwrap(), 0.25);
        assert_eq!(step_lambda(1.0, 0.0, 3.0).unwrap(), 0.0);
        assert!(step_lambda(1.0, 1.0, 0.0).is_err());
        assert!(step_lambda(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn update_examples() {
        let x = step_update(&vector(&[1.0, 0.0]), &vector(&[2.0, 2.0]), 0.25).unwrap();
        assert_eq!(x, vector(&[0.5, -0.5]));
        assert_eq!(step_update(&vector(&[0.0]), &vector(&[1.0]), 1.0).unwrap(), vector(&[-1.0]));
        let x = vector(&[3.0, -1.0]);
        assert_eq!(step_update(&x, &vector(&[9.0, 9.0]), 0.0).unwrap(), x);
        assert!(step_update(&x, &vector(&[1.0]), 0.1).is_err());
    }

    #[test]
    fn radius_examples() {
        assert!((radius_update(1.0, 1.0, 0.25, 2.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(radius_update(2.0, 0.5, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(radius_update(5.0, 2.0, 0.0, 7.0).unwrap(), 5.0);
        // λ far beyond 1/(2θ)
        assert!(radius_update(10.0, 1.0, 3.0, 0.1).is_err());
    }

    #[test]
    fn init_radius_examples() {
        assert_eq!(init_radius(&vector(&[0.0]), &vector(&[1.0]), 0.5).unwrap(), 2.0);
        assert_eq!(init_radius(&vector(&[0.0, 0.0]), &vector(&[0.0, 0.0]), 3.0).unwrap(), 0.0);
        assert_eq!(init_radius(&vector(&[3.0, 4.0]), &vector(&[0.0, 0.0]), 1.0).unwrap(), 5.0);
    }

    #[test]
    fn reset_examples() {
        assert!((epoch_reset(0.1, 3.0) - 0.4).abs() < 1e-15);
        assert_eq!(epoch_reset(0.25, 0.0), 0.25);
        assert!((epoch_reset(0.05, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identity_collapses_in_one_step() {
        let cfg = SolveConfig {
            target_mu: 3,
            record_trace: true,
            ..Default::default()
        };
        let x0 = vector(&[3.0, 4.0]);
        let rep = solve(identity_map(2).as_ref(), &x0, &Schedule::sqrt(), &cfg).unwrap();
        let rows = &rep.trace.unwrap().rows;
        assert_eq!(rows[0].r, 10.0);
        assert_eq!(rows[0].lambda, 0.5);
        assert_eq!(rep.x_final, Vector::zeros(2));
        assert_eq!(rep.status, Status::ToleranceReached);
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn exact_regularized_start_skips_epoch_zero() {
        // only A(x0) = −θ0·x0 matters here
        let op = FnMap::new(1, "anti", |x: &Vector| {
            if x[0] == 2.0 { vector(&[-2.0]) } else { x.clone() }
        });
        let mut first_step_mu = None;
        let cfg = SolveConfig { target_mu: 3, ..Default::default() };
        solve_observed(&op, &vector(&[2.0]), &Schedule::sqrt(), &cfg, |ev| {
            if let Event::Step(s) = ev {
                first_step_mu.get_or_insert(s.mu);
            }
        })
        .unwrap();
        assert_eq!(first_step_mu, Some(1));
    }

    #[test]
    fn constant_operator_hand_trace() {
        let cfg = SolveConfig { target_mu: 1, record_trace: true, ..Default::default() };
        let rep = solve(
            constant_map(vector(&[1.0])).unwrap().as_ref(),
            &vector(&[0.0]),
            &Schedule::power(0.5, 0.5),
            &cfg,
        )
        .unwrap();
        let rows = rep.trace.unwrap().rows;
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].r, rows[0].lambda, rows[0].norm_x), (2.0, 1.0, 0.0));
        assert_eq!((rows[1].r, rows[1].lambda, rows[1].norm_x), (1.0, 1.0, 1.0));
        assert_eq!(rep.x_final, vector(&[-1.5]));
        let rho0 = 2.0 * (2f64.sqrt() - 1.0);
        assert!((rep.r_final - 2.0 * rho0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = SolveConfig::default();
        let id = identity_map(2);
        assert!(matches!(
            solve(id.as_ref(), &vector(&[1.0]), &Schedule::sqrt(), &cfg),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            solve(id.as_ref(), &vector(&[1.0, 1.0]), &Schedule::harmonic(), &cfg),
            Err(Error::Schedule(_))
        ));
        let bad = SolveConfig { divergence_norm: 0.5, ..Default::default() };
        assert!(matches!(
            solve(id.as_ref(), &vector(&[1.0, 1.0]), &Schedule::sqrt(), &bad),
            Err(Error::Config(_))
        ));
        let nan = FnMap::new(1, "nan", |x: &Vector| if x[0] != 0.0 { vector(&[f64::NAN]) } else { x.clone() });
        match solve(&nan, &vector(&[1.0]), &Schedule::sqrt(), &cfg) {
            Err(Error::Operator { x }) => assert_eq!(x, vec![1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_is_respected() {
        let cfg = SolveConfig { max_evals: 50, ..Default::default() };
        let skew = crate::operators::affine_map(
            nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            vector(&[1.0, 0.0]),
        )
        .unwrap();
        let rep = solve(skew.as_ref(), &vector(&[0.0, 0.0]), &Schedule::sqrt(), &cfg).unwrap();
        assert_eq!(rep.status, Status::BudgetExhausted);
        assert_eq!(rep.evals, 50);
    }
}
