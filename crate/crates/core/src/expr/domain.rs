use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Chart, ParamValues};
use crate::error::{Error, Result};

/// A point in the x-chart together with parameter values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Point {
    pub x: [f64; 3],
    pub params: ParamValues,
}

impl Point {
    pub fn new(x: [f64; 3]) -> Self {
        Point {
            x,
            params: ParamValues::new(),
        }
    }

    pub fn with_params(x: [f64; 3], params: ParamValues) -> Self {
        Point { x, params }
    }
}

/// Parameter values, plus optional ranges from which sampling draws
/// fresh values instead of using the fixed value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Parameters {
    pub values: ParamValues,
    #[serde(default)]
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl Parameters {
    pub fn from_values<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Parameters {
            values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            ranges: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.values.insert(name.into(), value);
        self
    }

    pub fn with_range(mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("empty parameter range ({lo}, {hi})")));
        }
        self.ranges.insert(name.into(), (lo, hi));
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Draws values for ranged parameters; fixed parameters keep their value.
    pub(crate) fn sample(&self, rng: &mut impl Rng) -> ParamValues {
        let mut out = self.values.clone();
        for (name, (lo, hi)) in &self.ranges {
            out.insert(name.clone(), lo + (hi - lo) * open_unit(rng));
        }
        out
    }

    pub fn is_ranged(&self) -> bool {
        !self.ranges.is_empty()
    }
}

/// Axis-aligned open box in one chart, optionally restricted to positive
/// coordinates. The box is the sampling window; positivity flags mark
/// coordinates that must stay positive for the structure to be defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    #[serde(default)]
    pub positive: [bool; 3],
    #[serde(default)]
    pub chart: Chart,
}

impl Domain {
    pub fn new(lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        Domain {
            lower,
            upper,
            positive: [false; 3],
            chart: Chart::X,
        }
        .validated()
    }

    /// The box `(lo, hi)^3` with all coordinates flagged positive.
    pub fn positive_orthant(lo: f64, hi: f64) -> Result<Self> {
        Domain {
            lower: [lo; 3],
            upper: [hi; 3],
            positive: [true; 3],
            chart: Chart::X,
        }
        .validated()
    }

    pub fn cube(lo: f64, hi: f64) -> Result<Self> {
        Domain::new([lo; 3], [hi; 3])
    }

    pub fn unit_box() -> Self {
        Domain::cube(0.0, 1.0).expect("unit box is valid")
    }

    pub fn with_positive(mut self, positive: [bool; 3]) -> Result<Self> {
        self.positive = positive;
        self.validated()
    }

    pub fn in_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn validated(self) -> Result<Self> {
        for i in 0..3 {
            let (lo, hi) = self.bounds(i);
            if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "domain bounds for coordinate {} are empty or infinite: ({}, {})",
                    i + 1,
                    self.lower[i],
                    self.upper[i]
                )));
            }
        }
        Ok(self)
    }

    /// Effective sampling interval for coordinate `i`.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = if self.positive[i] {
            self.lower[i].max(0.0)
        } else {
            self.lower[i]
        };
        (lo, self.upper[i])
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| {
            let (lo, hi) = self.bounds(i);
            p[i] > lo && p[i] < hi
        })
    }

    /// Whether `p` satisfies the hard (positivity) constraints, ignoring
    /// the sampling box.
    pub fn admits(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| !self.positive[i] || p[i] > 0.0)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 3] {
        std::array::from_fn(|i| {
            let (lo, hi) = self.bounds(i);
            lo + (hi - lo) * open_unit(rng)
        })
    }
}

/// Uniform draw from the open interval (0, 1).
fn open_unit(rng: &mut impl Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}
