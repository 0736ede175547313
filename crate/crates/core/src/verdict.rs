use serde::Serialize;

use crate::smallnum::SampleDomain;

/// Sample at which a residual was largest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstSample {
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

/// Outcome of a sampled identity test. `outcome` implies
/// `residual <= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: bool,
    pub residual: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub worst: Option<WorstSample>,
}

/// Running max of scaled residuals with the sample that produced it.
#[derive(Debug, Default)]
pub(crate) struct ResidualMax {
    residual: f64,
    worst: Option<WorstSample>,
    samples: usize,
}

impl ResidualMax {
    pub fn observe(&mut self, residual: f64, point: &[f64], direction: Option<&[f64]>) {
        self.samples += 1;
        // NaN counts as worst
        if self.worst.is_none() || residual > self.residual || residual.is_nan() {
            self.residual = if residual.is_nan() {
                f64::INFINITY
            } else {
                residual
            };
            self.worst = Some(WorstSample {
                point: point.to_vec(),
                direction: direction.map(<[f64]>::to_vec),
            });
        }
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn finish(self, d: &SampleDomain) -> Verdict {
        Verdict {
            outcome: self.residual <= d.tol,
            residual: self.residual,
            samples: self.samples,
            tolerance: d.tol,
            seed: d.seed,
            worst: self.worst,
        }
    }
}
