use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Ordered, finite observations with optional calendar dates.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dates: Option<Vec<NaiveDate>>,
}

impl TimeSeries {
    /// Rejects NaN and infinities, reporting the first offending index.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self {
            values,
            dates: None,
        })
    }

    pub fn with_dates(values: Vec<f64>, dates: Vec<NaiveDate>) -> Result<Self> {
        if values.len() != dates.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                actual: dates.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self {
            values,
            dates: Some(dates),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Sub-series `[start, end)`, keeping dates when present.
    pub fn slice(&self, start: usize, end: usize) -> TimeSeries {
        TimeSeries {
            values: self.values[start..end].to_vec(),
            dates: self.dates.as_ref().map(|d| d[start..end].to_vec()),
        }
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite { index: i as i64 }),
        None => Ok(()),
    }
}
