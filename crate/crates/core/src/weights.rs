//! Sampling weights for the NCC sub-cohort.
//!
//! | group              | new weight | Samuelsen |
//! |--------------------|------------|-----------|
//! | event case         | 1/pi1      | 1         |
//! | event control      | 0          | 1/p0      |
//! | non-event control  | 1/p0       | 1/p0      |

use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::error::{Error, Result};
use crate::sampling::NccSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    New,
    Samuelsen,
    /// All sampling weights 1 (complete-data reference).
    FullCohort,
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightScheme::New => "new",
            WeightScheme::Samuelsen => "samuelsen",
            WeightScheme::FullCohort => "full",
        })
    }
}

/// One weight per cohort subject. Zero means the subject does not enter
/// any weighted sum (its markers may be missing). Perturbed weights can be
/// negative in rare cases; see [`crate::perturbation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingWeights {
    pub values: Vec<f64>,
    pub scheme: WeightScheme,
}

impl SamplingWeights {
    pub fn full_cohort(n: usize) -> Self {
        SamplingWeights {
            values: vec![1.0; n],
            scheme: WeightScheme::FullCohort,
        }
    }

    pub fn compute(scheme: WeightScheme, sample: &NccSample, cohort: &Cohort) -> Result<Self> {
        match scheme {
            WeightScheme::New => new_weight(sample, cohort),
            WeightScheme::Samuelsen => samuelsen_weight(sample, cohort),
            WeightScheme::FullCohort => Ok(Self::full_cohort(cohort.len())),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn inverse_prob(index: usize, v0: f64, p0: f64) -> Result<f64> {
    if v0 == 0.0 {
        Ok(0.0)
    } else if p0 == 0.0 {
        Err(Error::CorruptWeight { index })
    } else {
        Ok(v0 / p0)
    }
}

/// `delta V1 / pi1 + (1 - delta) V0 / p0`, with `0/0 = 0`. Indicator and
/// probability arguments are reals so perturbed values share this path.
#[inline]
pub(crate) fn new_weight_value(index: usize, delta: bool, v1: f64, v0: f64, p0: f64, pi1: f64) -> Result<f64> {
    if delta {
        Ok(v1 / pi1)
    } else {
        inverse_prob(index, v0, p0)
    }
}

fn check_lengths(sample: &NccSample, cohort: &Cohort) -> Result<()> {
    if sample.len() != cohort.len() {
        return Err(Error::DimensionMismatch {
            what: "sample",
            expected: cohort.len(),
            actual: sample.len(),
        });
    }
    Ok(())
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// The weight that inflates event cases by the inverse case fraction and
/// drops events drawn only as controls.
pub fn new_weight(sample: &NccSample, cohort: &Cohort) -> Result<SamplingWeights> {
    check_lengths(sample, cohort)?;
    let pi1 = sample.pi1_realized();
    if !(pi1 > 0.0) {
        return Err(Error::ZeroDenominator("case fraction"));
    }
    let values = (0..cohort.len())
        .map(|j| {
            new_weight_value(
                j,
                cohort.subject(j).delta,
                indicator(sample.v1()[j]),
                indicator(sample.v0()[j]),
                sample.p0()[j],
                pi1,
            )
        })
        .collect::<Result<_>>()?;
    Ok(SamplingWeights {
        values,
        scheme: WeightScheme::New,
    })
}

/// Weight 1 for cases and inverse inclusion probability for every control.
pub fn samuelsen_weight(sample: &NccSample, cohort: &Cohort) -> Result<SamplingWeights> {
    check_lengths(sample, cohort)?;
    let values = (0..cohort.len())
        .map(|j| {
            if cohort.subject(j).delta && sample.v1()[j] {
                Ok(1.0)
            } else {
                inverse_prob(j, indicator(sample.v0()[j]), sample.p0()[j])
            }
        })
        .collect::<Result<_>>()?;
    Ok(SamplingWeights {
        values,
        scheme: WeightScheme::Samuelsen,
    })
}
