use serde::{Deserialize, Serialize};

/// Which inequality a certificate checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `|K0| <= e^{-x^2/4 eps t} / (2 sqrt(pi eps t)) [e^{-at} + b t E(t)]`
    K0Pointwise,
    /// `int_R |K0| dx <= e^{-at} + sqrt(b) pi t e^{-omega t}`
    K0L1x,
    /// `int_0^t int_R |K0| <= beta0`
    K0L1xt,
    /// `int_R |K1| dx <= E(t)`
    K1L1x,
    /// `int_0^t int_R |K1| <= beta1`
    K1L1xt,
    /// `int_R |K2| dx <= t E(t)`
    K2L1x,
    LinearU,
    NonlinearU,
    NonlinearV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub bound_id: BoundId,
    pub observed_max_lhs: f64,
    pub rhs_min_over_check_set: f64,
    /// `min (rhs - lhs)` over the check set.
    pub margin: f64,
    /// Aggregated quadrature and truncation error bounds behind the LHS.
    pub slack: f64,
    pub passed: bool,
    pub scenario_digest: String,
}

impl BoundCertificate {
    /// Accumulates `(lhs, rhs)` pairs; `passed` iff every `lhs <= rhs + slack`.
    pub fn builder(bound_id: BoundId, scenario_digest: impl Into<String>) -> CertificateBuilder {
        CertificateBuilder {
            bound_id,
            digest: scenario_digest.into(),
            max_lhs: 0.0,
            min_rhs: f64::INFINITY,
            margin: f64::INFINITY,
            slack: 0.0,
            points: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertificateBuilder {
    bound_id: BoundId,
    digest: String,
    max_lhs: f64,
    min_rhs: f64,
    margin: f64,
    slack: f64,
    points: usize,
}

impl CertificateBuilder {
    pub fn check(&mut self, lhs: f64, rhs: f64) {
        self.points += 1;
        self.max_lhs = self.max_lhs.max(lhs);
        self.min_rhs = self.min_rhs.min(rhs);
        let m = rhs - lhs;
        // NaN margins must fail the certificate
        if m.is_nan() {
            self.margin = f64::NEG_INFINITY;
        } else {
            self.margin = self.margin.min(m);
        }
    }

    pub fn add_slack(&mut self, s: f64) {
        self.slack += s.abs();
    }

    pub fn slack_at_least(&mut self, s: f64) {
        self.slack = self.slack.max(s.abs());
    }

    pub fn finish(self) -> BoundCertificate {
        let margin = if self.points == 0 { 0.0 } else { self.margin };
        BoundCertificate {
            bound_id: self.bound_id,
            observed_max_lhs: self.max_lhs,
            rhs_min_over_check_set: if self.points == 0 { 0.0 } else { self.min_rhs },
            margin,
            slack: self.slack,
            passed: margin >= -self.slack,
            scenario_digest: self.digest,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_requires_margin_above_negative_slack() {
        let mut b = BoundCertificate::builder(BoundId::K0L1x, "x");
        b.check(1.0 + 1e-9, 1.0);
        b.add_slack(1e-8);
        let c = b.finish();
        assert!(c.passed);
        assert!(c.margin < 0.0);

        let mut b = BoundCertificate::builder(BoundId::K0L1x, "x");
        b.check(1.1, 1.0);
        b.add_slack(1e-8);
        assert!(!b.finish().passed);
    }

    #[test]
    fn nan_fails() {
        let mut b = BoundCertificate::builder(BoundId::LinearU, "x");
        b.check(f64::NAN, 1.0);
        assert!(!b.finish().passed);
    }
}
