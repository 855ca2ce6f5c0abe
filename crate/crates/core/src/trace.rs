//! Per-step trace rows, their CSV form, and a mechanical validator.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::engine::StepRecord;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 10] = [
    "n", "mu", "theta", "rho", "lambda", "r", "norm_w", "norm_x", "norm_v", "dist_pmu",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u64,
    pub mu: u64,
    pub theta: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r: f64,
    pub norm_w: f64,
    pub norm_x: f64,
    pub norm_v: f64,
    /// |x_n − p_μ|, filled in only when a reference solution is available.
    pub dist_pmu: Option<f64>,
}

impl TraceRow {
    pub fn from_step(s: &StepRecord<'_>) -> Self {
        let norm_x = s.x.norm();
        TraceRow {
            n: s.n,
            mu: s.mu,
            theta: s.theta,
            rho: s.rho,
            lambda: s.lambda,
            r: s.r,
            norm_w: s.w_norm,
            norm_x,
            norm_v: s.theta * norm_x,
            dist_pmu: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

/// Slack allowed on the radius certificate: 1e−9·(1 + r).
pub fn certificate_slack(r: f64) -> f64 {
    1e-9 * (1.0 + r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceViolation {
    pub row: usize,
    pub what: String,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER).map_err(io_err)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.mu.to_string(),
                r.theta.to_string(),
                r.rho.to_string(),
                r.lambda.to_string(),
                r.r.to_string(),
                r.norm_w.to_string(),
                r.norm_x.to_string(),
                r.norm_v.to_string(),
                r.dist_pmu.map(|d| d.to_string()).unwrap_or_default(),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Trace(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(io_err)?.clone();
        if header.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(Error::Trace(format!("unexpected header {header:?}")));
        }
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<TraceRow>, _>>()
            .map_err(io_err)?;
        Ok(Trace { rows })
    }

    /// Re-checks the row invariants: n strictly increasing, μ nondecreasing,
    /// λ ∈ [0, 1/(2θ)], r strictly decreasing within an epoch, and
    /// dist_pmu ≤ r + 1e−9(1+r) wherever present.
    pub fn validate(&self) -> Vec<TraceViolation> {
        let mut out = Vec::new();
        let mut flag = |row: usize, what: String| out.push(TraceViolation { row, what });
        for (i, row) in self.rows.iter().enumerate() {
            if !(row.lambda >= 0.0 && row.lambda <= 0.5 / row.theta) {
                flag(i, format!("lambda {} outside [0, {}]", row.lambda, 0.5 / row.theta));
            }
            if let Some(d) = row.dist_pmu {
                if !(d <= row.r + certificate_slack(row.r)) {
                    flag(i, format!("dist_pmu {d:e} exceeds r {:e}", row.r));
                }
            }
            if i == 0 {
                continue;
            }
            let prev = &self.rows[i - 1];
            if row.n <= prev.n {
                flag(i, format!("n not increasing: {} after {}", row.n, prev.n));
            }
            if row.mu < prev.mu {
                flag(i, format!("mu decreased: {} after {}", row.mu, prev.mu));
            }
            if row.mu == prev.mu && row.n == prev.n + 1 && prev.r > 0.0 && !(row.r < prev.r) {
                flag(i, format!("r not decreasing within epoch {}: {} after {}", row.mu, row.r, prev.r));
            }
        }
        out
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Trace(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u64, mu: u64, r: f64) -> TraceRow {
        TraceRow {
            n,
            mu,
            theta: 1.0,
            rho: 0.1,
            lambda: 0.25,
            r,
            norm_w: 1.0,
            norm_x: 1.0,
            norm_v: 1.0,
            dist_pmu: Some(r * 0.5),
        }
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut t = Trace { rows: vec![row(0, 0, 2.0), row(1, 0, 1.0 / 3.0), row(2, 1, 0.7)] };
        t.rows[2].dist_pmu = None;
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,mu,theta,rho,lambda,r,norm_w,norm_x,norm_v,dist_pmu\n"));
        assert!(text.lines().last().unwrap().ends_with(','));
        assert_eq!(Trace::read_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn validator_catches_each_invariant() {
        let good = Trace { rows: vec![row(0, 0, 2.0), row(1, 0, 1.0), row(2, 1, 1.5)] };
        assert!(good.validate().is_empty());

        let mut bad = good.clone();
        bad.rows[1].r = 2.0;
        assert_eq!(bad.validate().len(), 1);

        let mut bad = good.clone();
        bad.rows[2].n = 1;
        assert!(!bad.validate().is_empty());

        let mut bad = good.clone();
        bad.rows[0].dist_pmu = Some(2.1);
        assert_eq!(bad.validate()[0].row, 0);

        let mut bad = good;
        bad.rows[1].lambda = 0.6;
        assert!(!bad.validate().is_empty());
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(Trace::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
