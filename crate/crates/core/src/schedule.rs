//! Regularization schedules μ ↦ θ_μ and the derived gaps ρ_μ = 1/θ_{μ+1} − 1/θ_μ.
//!
//! A schedule is admissible when θ is positive and strictly decreasing, ρ is
//! positive and strictly decreasing, and both tend to zero. The last condition
//! cannot be checked on a finite horizon, so [`Schedule::validate`] asks for a
//! decay witness instead: θ and ρ must both fall below `decay_eps` by the end
//! of the horizon.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_DECAY_EPS: f64 = 0.02;

#[derive(Clone)]
pub enum ScheduleKind {
    /// θ_μ = scale · (μ+1)^(−exponent).
    Power { scale: f64, exponent: f64 },
    /// θ_μ = scale · ratio^μ.
    Geometric { scale: f64, ratio: f64 },
    Custom(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleKind::Power { scale, exponent } => f
                .debug_struct("Power")
                .field("scale", scale)
                .field("exponent", exponent)
                .finish(),
            ScheduleKind::Geometric { scale, ratio } => f
                .debug_struct("Geometric")
                .field("scale", scale)
                .field("ratio", ratio)
                .finish(),
            ScheduleKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub horizon: u64,
    pub decay_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    ThetaNotPositive,
    ThetaNotDecreasing,
    RhoNotPositive,
    RhoNotDecreasing,
    ThetaNoDecay,
    RhoNoDecay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleViolation {
    pub kind: ViolationKind,
    pub mu: u64,
    pub detail: String,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at mu={}: {}", self.kind, self.mu, self.detail)
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::sqrt()
    }
}

impl Schedule {
    pub fn new(kind: ScheduleKind) -> Self {
        Schedule {
            kind,
            horizon: DEFAULT_HORIZON,
            decay_eps: DEFAULT_DECAY_EPS,
        }
    }

    /// The default θ_μ = (μ+1)^(−1/2).
    pub fn sqrt() -> Self {
        Self::power(1.0, 0.5)
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        Self::new(ScheduleKind::Power { scale, exponent })
    }

    /// θ_μ = 1/(μ+1). Not admissible: ρ_μ ≡ 1.
    pub fn harmonic() -> Self {
        Self::power(1.0, 1.0)
    }

    pub fn geometric(scale: f64, ratio: f64) -> Self {
        Self::new(ScheduleKind::Geometric { scale, ratio })
    }

    pub fn custom(f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(ScheduleKind::Custom(Arc::new(f)))
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_decay_eps(mut self, eps: f64) -> Self {
        self.decay_eps = eps;
        self
    }

    /// Parses `NAME[:params]`: `sqrt`, `harmonic`, `power:EXP[:SCALE]`,
    /// `geometric:RATIO[:SCALE]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let params = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Schedule(format!("bad parameter `{p}` in `{text}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |lo: usize, hi: usize| {
            if params.len() < lo || params.len() > hi {
                Err(Error::Schedule(format!(
                    "`{name}` takes {lo}..={hi} parameters, got {}",
                    params.len()
                )))
            } else {
                Ok(())
            }
        };
        match name {
            "sqrt" => {
                arity(0, 1)?;
                Ok(Self::power(params.first().copied().unwrap_or(1.0), 0.5))
            }
            "harmonic" => {
                arity(0, 1)?;
                Ok(Self::power(params.first().copied().unwrap_or(1.0), 1.0))
            }
            "power" => {
                arity(1, 2)?;
                Ok(Self::power(params.get(1).copied().unwrap_or(1.0), params[0]))
            }
            "geometric" => {
                arity(1, 2)?;
                Ok(Self::geometric(params.get(1).copied().unwrap_or(1.0), params[0]))
            }
            other => Err(Error::Schedule(format!("unknown schedule `{other}`"))),
        }
    }

    pub fn theta(&self, mu: u64) -> f64 {
        match &self.kind {
            ScheduleKind::Power { scale, exponent } => scale * ((mu + 1) as f64).powf(-exponent),
            ScheduleKind::Geometric { scale, ratio } => scale * ratio.powf(mu as f64),
            ScheduleKind::Custom(f) => f(mu),
        }
    }

    /// ρ_μ = 1/θ_{μ+1} − 1/θ_μ. The power family uses a cancellation-free form.
    pub fn rho(&self, mu: u64) -> f64 {
        match &self.kind {
            ScheduleKind::Power { scale, exponent } => {
                // ((μ+2)^a − (μ+1)^a)/s = (μ+1)^a · expm1(a·ln(1 + 1/(μ+1)))/s
                let m = (mu + 1) as f64;
                m.powf(*exponent) * (exponent * (1.0 / m).ln_1p()).exp_m1() / scale
            }
            _ => 1.0 / self.theta(mu + 1) - 1.0 / self.theta(mu),
        }
    }

    /// Every violated admissibility condition over `0..=horizon`.
    pub fn validate(&self) -> Vec<ScheduleViolation> {
        let mut out = Vec::new();
        let h = self.horizon.max(1);
        if !(self.decay_eps > 0.0) {
            out.push(ScheduleViolation {
                kind: ViolationKind::ThetaNoDecay,
                mu: 0,
                detail: format!("decay witness must be positive, got {}", self.decay_eps),
            });
            return out;
        }

        let mut prev_theta = self.theta(0);
        if !(prev_theta > 0.0 && prev_theta.is_finite()) {
            out.push(ScheduleViolation {
                kind: ViolationKind::ThetaNotPositive,
                mu: 0,
                detail: format!("theta_0 = {prev_theta}"),
            });
        }
        for mu in 0..h {
            let next = self.theta(mu + 1);
            if !(next > 0.0 && next.is_finite()) {
                out.push(ScheduleViolation {
                    kind: ViolationKind::ThetaNotPositive,
                    mu: mu + 1,
                    detail: format!("theta_{} = {next}", mu + 1),
                });
                break;
            } else if !(next < prev_theta) {
                out.push(ScheduleViolation {
                    kind: ViolationKind::ThetaNotDecreasing,
                    mu,
                    detail: format!("theta_{} = {next} >= theta_{mu} = {prev_theta}", mu + 1),
                });
            }
            prev_theta = next;
            if out.len() > 32 {
                return out;
            }
        }

        let mut prev_rho = self.rho(0);
        if !(prev_rho > 0.0 && prev_rho.is_finite()) {
            out.push(ScheduleViolation {
                kind: ViolationKind::RhoNotPositive,
                mu: 0,
                detail: format!("rho_0 = {prev_rho}"),
            });
        }
        for mu in 0..h.saturating_sub(1) {
            let next = self.rho(mu + 1);
            if !(next > 0.0 && next.is_finite()) {
                out.push(ScheduleViolation {
                    kind: ViolationKind::RhoNotPositive,
                    mu: mu + 1,
                    detail: format!("rho_{} = {next}", mu + 1),
                });
                break;
            } else if !(next < prev_rho) {
                out.push(ScheduleViolation {
                    kind: ViolationKind::RhoNotDecreasing,
                    mu,
                    detail: format!("rho_{} = {next} >= rho_{mu} = {prev_rho}", mu + 1),
                });
                // one report is enough for a flat or increasing tail
                break;
            }
            prev_rho = next;
        }

        let theta_end = self.theta(h);
        if !(theta_end < self.decay_eps) {
            out.push(ScheduleViolation {
                kind: ViolationKind::ThetaNoDecay,
                mu: h,
                detail: format!("theta_{h} = {theta_end} >= {}", self.decay_eps),
            });
        }
        let rho_end = self.rho(h - 1);
        if !(rho_end < self.decay_eps) {
            out.push(ScheduleViolation {
                kind: ViolationKind::RhoNoDecay,
                mu: h - 1,
                detail: format!("rho_{} = {rho_end} >= {}", h - 1, self.decay_eps),
            });
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().take(4).map(|x| x.to_string()).collect();
            Err(Error::Schedule(msgs.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_schedule_is_admissible() {
        assert!(Schedule::sqrt().validate().is_empty());
    }

    #[test]
    fn harmonic_schedule_has_flat_rho() {
        let v = Schedule::harmonic().validate();
        assert!(v.iter().any(|x| x.kind == ViolationKind::RhoNotDecreasing));
        assert!(v.iter().any(|x| x.kind == ViolationKind::RhoNoDecay));
        assert!(!v.iter().any(|x| x.kind == ViolationKind::ThetaNotDecreasing));
    }

    #[test]
    fn increasing_theta_is_rejected() {
        let v = Schedule::custom(|mu| 2f64.powi(mu as i32)).validate();
        assert!(v.iter().any(|x| x.kind == ViolationKind::ThetaNotDecreasing));
    }

    #[test]
    fn geometric_decay_makes_rho_grow() {
        let v = Schedule::geometric(1.0, 0.5).validate();
        assert!(v.iter().any(|x| x.kind == ViolationKind::RhoNotDecreasing));
    }

    #[test]
    fn power_rho_matches_direct_difference() {
        let s = Schedule::power(0.5, 0.5);
        for mu in [0u64, 1, 7, 100, 5000] {
            let direct = 1.0 / s.theta(mu + 1) - 1.0 / s.theta(mu);
            let closed = 2.0 * (((mu + 2) as f64).sqrt() - ((mu + 1) as f64).sqrt());
            assert!((s.rho(mu) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            assert!((s.rho(mu) - closed).abs() <= 1e-12 * (1.0 + closed));
        }
    }

    #[test]
    fn parse_names() {
        assert!(matches!(
            Schedule::parse("power:0.75").unwrap().kind,
            ScheduleKind::Power { exponent, scale } if exponent == 0.75 && scale == 1.0
        ));
        assert_eq!(Schedule::parse("sqrt:0.5").unwrap().theta(0), 0.5);
        assert!(Schedule::parse("cubic").is_err());
        assert!(Schedule::parse("power").is_err());
        assert!(Schedule::parse("power:x").is_err());
    }
}
