use std::io::Write;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Two-parameter logistic item characteristic curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccModel {
    discrimination: f64,
    difficulty: f64,
}

impl IccModel {
    pub fn new(discrimination: f64, difficulty: f64) -> Result<Self, MetricsError> {
        if !(discrimination.is_finite() && discrimination > 0.0) || !difficulty.is_finite() {
            return Err(MetricsError::BadDiscrimination(discrimination));
        }
        Ok(Self {
            discrimination,
            difficulty,
        })
    }

    pub fn discrimination(&self) -> f64 {
        self.discrimination
    }

    pub fn difficulty(&self) -> f64 {
        self.difficulty
    }

    /// P(theta) = 1 / (1 + exp(-a (theta - b)))
    pub fn probability(&self, theta: f64) -> f64 {
        1.0 / (1.0 + (-self.discrimination * (theta - self.difficulty)).exp())
    }

    /// `points` evenly spaced abilities from `theta_min` to `theta_max`
    /// inclusive, paired with their probabilities.
    pub fn curve(
        &self,
        theta_min: f64,
        theta_max: f64,
        points: usize,
    ) -> Result<Vec<(f64, f64)>, MetricsError> {
        if points < 2 || !theta_min.is_finite() || !theta_max.is_finite() || theta_min >= theta_max
        {
            return Err(MetricsError::BadRange);
        }
        let span = theta_max - theta_min;
        let last = points - 1;
        Ok((0..points)
            .map(|i| {
                let theta = if i == last {
                    theta_max
                } else {
                    theta_min + span * i as f64 / last as f64
                };
                (theta, self.probability(theta))
            })
            .collect())
    }
}

/// Writes `theta,probability` CSV.
pub fn write_curve_csv(curve: &[(f64, f64)], out: impl Write) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "probability"]).map_err(csv_io)?;
    for (theta, p) in curve {
        w.write_record([theta.to_string(), p.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> MetricsError {
    MetricsError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoint_and_known_value() {
        let m = IccModel::new(1.0, 0.0).unwrap();
        assert_eq!(m.probability(0.0), 0.5);
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((m.probability(2.0) - expected).abs() < 1e-15);
        assert!((m.probability(2.0) - 0.8808).abs() < 5e-5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(IccModel::new(0.0, 0.0).is_err());
        assert!(IccModel::new(-1.0, 0.0).is_err());
        assert!(IccModel::new(f64::NAN, 0.0).is_err());
        assert!(IccModel::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn curve_grid() {
        let m = IccModel::new(1.0, 0.0).unwrap();
        let c = m.curve(-3.0, 3.0, 7).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(c[0].0, -3.0);
        assert_eq!(c[6].0, 3.0);
        assert_eq!(c[3], (0.0, 0.5));
        assert!(c.iter().all(|&(_, p)| p > 0.0 && p < 1.0));
        assert!(matches!(m.curve(1.0, 1.0, 5), Err(MetricsError::BadRange)));
        assert!(matches!(m.curve(-1.0, 1.0, 1), Err(MetricsError::BadRange)));
    }

    #[test]
    fn csv_output() {
        let m = IccModel::new(1.0, 0.0).unwrap();
        let mut out = Vec::new();
        write_curve_csv(&m.curve(-1.0, 1.0, 3).unwrap(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "theta,probability");
        assert_eq!(lines[2], "0,0.5");
        assert_eq!(lines.len(), 4);
    }

    proptest! {
        #[test]
        fn strictly_increasing(a in 0.05f64..4.0, b in -3.0f64..3.0, t1 in -6.0f64..6.0, dt in 0.01f64..3.0) {
            let m = IccModel::new(a, b).unwrap();
            prop_assert!(m.probability(t1) < m.probability(t1 + dt));
        }

        #[test]
        fn symmetric_about_difficulty(a in 0.05f64..4.0, b in -3.0f64..3.0, d in -8.0f64..8.0) {
            let m = IccModel::new(a, b).unwrap();
            prop_assert!((m.probability(b + d) + m.probability(b - d) - 1.0).abs() <= 1e-12);
        }
    }
}
