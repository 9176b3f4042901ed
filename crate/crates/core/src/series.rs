use crate::error::{Error, Result};

/// Annual values starting at `start`, one per calendar year.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    pub start: i32,
    pub values: Vec<f64>,
}

impl AnnualSeries {
    pub fn new(start: i32, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> i32 {
        self.start + self.values.len() as i32 - 1
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.start + i as i32)
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let offset = year.checked_sub(self.start)?;
        usize::try_from(offset).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn ensure_aligned(&self, other: &AnnualSeries) -> Result<()> {
        if self.start != other.start || self.len() != other.len() {
            return Err(Error::Misaligned(format!(
                "{}..={} vs {}..={}",
                self.start,
                self.end(),
                other.start,
                other.end()
            )));
        }
        Ok(())
    }

    /// Pointwise combination of two aligned series.
    pub fn zip_with(&self, other: &AnnualSeries, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_aligned(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::new(self.start, values))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.start, self.values.iter().map(|&v| f(v)).collect())
    }
}
