//! The `check-projection` command.

use pmm_core::linalg::dist2;
use pmm_core::projection::sample_problem;
use pmm_core::{project_dual, project_primal, SeededRng};

pub const MAX_DISCREPANCY: f64 = 1e-6;
pub const MAX_KKT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub trials: usize,
    pub max_discrepancy: f64,
    pub max_kkt: f64,
    /// Trials where either route returned an error.
    pub errors: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.errors == 0 && self.max_discrepancy <= MAX_DISCREPANCY && self.max_kkt <= MAX_KKT
    }

    pub fn line(&self) -> String {
        format!(
            "check-projection trials={} max_discrepancy={:.3e} max_kkt={:.3e} errors={} {}",
            self.trials,
            self.max_discrepancy,
            self.max_kkt,
            self.errors,
            if self.passed() { "ok" } else { "FAILED" }
        )
    }
}

/// Projects `trials` random instances through both routes.
pub fn check_projection(trials: usize, seed: u64) -> CheckReport {
    let mut rng = SeededRng::new(seed);
    let mut report = CheckReport {
        trials,
        max_discrepancy: 0.0,
        max_kkt: 0.0,
        errors: 0,
    };
    for _ in 0..trials {
        let (p, _) = sample_problem(&mut rng);
        match (project_dual(&p), project_primal(&p)) {
            (Ok(d), Ok(q)) => {
                report.max_discrepancy = report.max_discrepancy.max(dist2(&d.x_next, &q.x_next));
                report.max_kkt = report.max_kkt.max(d.qp.kkt_residual).max(q.qp.kkt_residual);
            }
            _ => report.errors += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_passes() {
        let r = check_projection(100, 0);
        assert!(r.passed(), "{}", r.line());
        assert_eq!(r.line().lines().count(), 1);
    }

    #[test]
    fn reproducible() {
        assert_eq!(check_projection(10, 3), check_projection(10, 3));
    }
}
