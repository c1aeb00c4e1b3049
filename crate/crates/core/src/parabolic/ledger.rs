use serde::{Deserialize, Serialize};

/// One ledger row. `dissipation` is `∫∫|∂ₜu|²` over the step ending at `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerSample {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// `e^{Ct}E(0) − E(t) − ¼∫₀ᵗ e^{C(t−τ)}D(τ)dτ`.
    pub slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub samples: Vec<LedgerSample>,
    pub constant: f64,
}

impl EnergyLedger {
    /// `F(t) = e^{−Ct}E(t) + ¼∫₀ᵗ e^{−Cτ}D`, so that `slack(s, t) = e^{Ct}(F(s) − F(t))`.
    fn potential(&self, c: f64) -> Vec<f64> {
        let mut acc = 0.0;
        let mut prev_t = self.samples.first().map_or(0.0, |s| s.t);
        self.samples
            .iter()
            .map(|s| {
                acc += 0.25 * (-c * 0.5 * (s.t + prev_t)).exp() * s.dissipation;
                prev_t = s.t;
                (-c * s.t).exp() * s.energy + acc
            })
            .collect()
    }

    pub(crate) fn fill_slack(&mut self) {
        let c = self.constant;
        let f = self.potential(c);
        let Some(&f0) = f.first() else { return };
        let t0 = self.samples[0].t;
        for (s, fk) in self.samples.iter_mut().zip(&f) {
            s.slack = (c * (s.t - t0)).exp() * (f0 - fk);
        }
    }

    /// Running total of the dissipation.
    pub fn cumulative_dissipation(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.samples
            .iter()
            .map(|s| {
                acc += s.dissipation;
                acc
            })
            .collect()
    }

    pub fn is_increasing_in_time(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].t > w[0].t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    /// Minimum of the inequality slack over all sampled `s < t`.
    pub min_slack: f64,
    /// The pair `(s, t)` attaining it.
    pub worst: (f64, f64),
    /// `max_{s<t} |E(s) − E(t) − ∫ₛᵗ∫|∂ₜu|²|`.
    pub identity_defect: f64,
    /// Largest single-step energy increase.
    pub max_step_increase: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Checks `e^{C(t−s)}E(s) − E(t) − ¼∫ₛᵗ e^{C(t−τ)}D ≥ −tol` for all sampled `s < t`.
pub fn energy_inequality_check(ledger: &EnergyLedger, c: f64, tol: f64) -> SlackReport {
    let f = ledger.potential(c);
    let mut min_slack = f64::INFINITY;
    let mut worst = (f64::NAN, f64::NAN);
    let mut best_prior: Option<(f64, usize)> = None;
    for (k, s) in ledger.samples.iter().enumerate() {
        if let Some((fmin, j)) = best_prior {
            let slack = (c * s.t).exp() * (fmin - f[k]);
            if slack < min_slack {
                min_slack = slack;
                worst = (ledger.samples[j].t, s.t);
            }
        }
        if best_prior.map_or(true, |(fmin, _)| f[k] < fmin) {
            best_prior = Some((f[k], k));
        }
    }
    if !min_slack.is_finite() {
        min_slack = 0.0;
    }
    let g: Vec<f64> = ledger
        .samples
        .iter()
        .zip(ledger.cumulative_dissipation())
        .map(|(s, d)| s.energy + d)
        .collect();
    let identity_defect = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - g.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_step_increase = ledger
        .samples
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    SlackReport {
        min_slack,
        worst,
        identity_defect: if identity_defect.is_finite() { identity_defect } else { 0.0 },
        max_step_increase: if max_step_increase.is_finite() { max_step_increase } else { 0.0 },
        tolerance: tol,
        ok: min_slack >= -tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(energies: &[f64], dissipations: &[f64]) -> EnergyLedger {
        let mut l = EnergyLedger {
            samples: energies
                .iter()
                .zip(dissipations)
                .enumerate()
                .map(|(k, (&energy, &dissipation))| LedgerSample {
                    t: k as f64 * 0.1,
                    energy,
                    dissipation,
                    slack: 0.0,
                })
                .collect(),
            constant: 0.0,
        };
        l.fill_slack();
        l
    }

    fn brute_force(l: &EnergyLedger, c: f64) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..l.samples.len() {
            for j in i + 1..l.samples.len() {
                let (s, t) = (l.samples[i].t, l.samples[j].t);
                let mut integral = 0.0;
                for k in i + 1..=j {
                    let mid = 0.5 * (l.samples[k].t + l.samples[k - 1].t);
                    integral += (c * (t - mid)).exp() * l.samples[k].dissipation;
                }
                let slack = (c * (t - s)).exp() * l.samples[i].energy - l.samples[j].energy - 0.25 * integral;
                min = min.min(slack);
            }
        }
        min
    }

    #[test]
    fn exact_dissipation_has_zero_identity_defect() {
        let l = ledger(&[3.0, 2.0, 1.5, 1.25], &[0.0, 1.0, 0.5, 0.25]);
        let r = energy_inequality_check(&l, 0.0, 1e-12);
        assert!(r.identity_defect < 1e-15);
        assert!(r.ok && r.min_slack > 0.0);
        assert!((l.samples[3].slack - (3.0 - 1.25 - 0.25 * 1.75)).abs() < 1e-15);
    }

    #[test]
    fn linear_scan_matches_all_pairs() {
        let l = ledger(&[1.0, 0.7, 0.9, 0.4, 0.5, 0.1], &[0.0, 0.2, 0.1, 1.2, 0.0, 0.3]);
        for c in [0.0, 0.5, 2.0] {
            let r = energy_inequality_check(&l, c, 0.0);
            assert!((r.min_slack - brute_force(&l, c)).abs() < 1e-14, "c={c}");
        }
    }

    #[test]
    fn energy_increase_is_reported() {
        let l = ledger(&[1.0, 1.2], &[0.0, 0.0]);
        let r = energy_inequality_check(&l, 0.0, 0.1);
        assert!(!r.ok);
        assert!((r.max_step_increase - 0.2).abs() < 1e-15);
        assert_eq!(r.worst, (0.0, 0.1));
    }
}
