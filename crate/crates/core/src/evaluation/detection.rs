//! Rain-day and categorical detection skill.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{DailySeries, IndicatorSeries, WetState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RainCategory {
    Dry,
    Light,
    Moderate,
    Heavy,
    Violent,
}

impl RainCategory {
    pub const ALL: [RainCategory; 5] = [
        Self::Dry,
        Self::Light,
        Self::Moderate,
        Self::Heavy,
        Self::Violent,
    ];

    /// Lower bounds of Light, Moderate, Heavy and Violent in mm.
    pub const BOUNDS: [f64; 4] = [0.85, 5.0, 20.0, 40.0];

    pub fn from_mm(x: f64) -> Self {
        match Self::BOUNDS.iter().filter(|&&b| x >= b).count() {
            0 => Self::Dry,
            1 => Self::Light,
            2 => Self::Moderate,
            3 => Self::Heavy,
            _ => Self::Violent,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dry => "dry",
            Self::Light => "light",
            Self::Moderate => "moderate",
            Self::Heavy => "heavy",
            Self::Violent => "violent",
        }
    }
}

/// Hits, misses, false alarms and correct negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Contingency2x2 {
    pub h: u64,
    pub m: u64,
    pub f: u64,
    pub c: u64,
}

impl Contingency2x2 {
    pub fn total(&self) -> u64 {
        self.h + self.m + self.f + self.c
    }

    pub fn pod(&self) -> Option<f64> {
        ratio(self.h as f64, (self.h + self.m) as f64)
    }

    pub fn far(&self) -> Option<f64> {
        ratio(self.f as f64, (self.h + self.f) as f64)
    }

    pub fn hss(&self) -> Option<f64> {
        let (h, m, f, c) = (self.h as f64, self.m as f64, self.f as f64, self.c as f64);
        ratio(2.0 * (h * c - f * m), (h + m) * (m + c) + (h + f) * (f + c))
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub table: Contingency2x2,
    pub pod: Option<f64>,
    pub far: Option<f64>,
    pub hss: Option<f64>,
}

/// Rain-day detection on days where both indicators are present.
pub fn detection_2x2(gauge: &IndicatorSeries, model: &IndicatorSeries) -> Result<DetectionScores> {
    if gauge.start() != model.start() || gauge.len() != model.len() {
        return Err(Error::Mismatch("indicators are not aligned".into()));
    }
    let mut t = Contingency2x2::default();
    for (&g, &y) in gauge.states().iter().zip(model.states()) {
        match (g, y) {
            (WetState::Wet, WetState::Wet) => t.h += 1,
            (WetState::Wet, WetState::Dry) => t.m += 1,
            (WetState::Dry, WetState::Wet) => t.f += 1,
            (WetState::Dry, WetState::Dry) => t.c += 1,
            _ => {}
        }
    }
    Ok(DetectionScores {
        table: t,
        pod: t.pod(),
        far: t.far(),
        hss: t.hss(),
    })
}

/// `counts[i][j]`: days with model category `i` and gauge category `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyKxK {
    pub counts: [[u64; 5]; 5],
}

impl ContingencyKxK {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// `n_ii / n_.i`, conditioned on the gauge category.
    pub fn pod(&self, i: usize) -> Option<f64> {
        ratio(self.counts[i][i] as f64, self.col_sum(i) as f64)
    }

    pub fn hss(&self) -> Option<f64> {
        let n = self.total() as f64;
        if n == 0.0 {
            return None;
        }
        let hits: f64 = (0..5).map(|i| self.counts[i][i] as f64).sum();
        let chance: f64 = (0..5)
            .map(|i| self.row_sum(i) as f64 * self.col_sum(i) as f64 / n)
            .sum();
        ratio(hits - chance, n - chance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoricalScores {
    pub table: ContingencyKxK,
    /// Indexed by [`RainCategory::index`].
    pub pod: [Option<f64>; 5],
    pub hss: Option<f64>,
}

/// Five-category detection on pairwise-complete days.
pub fn detection_categorical(
    gauge: &DailySeries,
    model: &DailySeries,
) -> Result<CategoricalScores> {
    if gauge.start() != model.start() || gauge.len() != model.len() {
        return Err(Error::Mismatch("series are not aligned".into()));
    }
    let mut t = ContingencyKxK::default();
    for (g, y) in gauge.values().iter().zip(model.values()) {
        if let (Some(g), Some(y)) = (g, y) {
            t.counts[RainCategory::from_mm(*y).index()][RainCategory::from_mm(*g).index()] += 1;
        }
    }
    Ok(CategoricalScores {
        table: t,
        pod: std::array::from_fn(|i| t.pod(i)),
        hss: t.hss(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_bounds() {
        assert_eq!(RainCategory::from_mm(0.0), RainCategory::Dry);
        assert_eq!(RainCategory::from_mm(0.849), RainCategory::Dry);
        assert_eq!(RainCategory::from_mm(0.85), RainCategory::Light);
        assert_eq!(RainCategory::from_mm(4.9), RainCategory::Light);
        assert_eq!(RainCategory::from_mm(5.0), RainCategory::Moderate);
        assert_eq!(RainCategory::from_mm(19.99), RainCategory::Moderate);
        assert_eq!(RainCategory::from_mm(20.0), RainCategory::Heavy);
        assert_eq!(RainCategory::from_mm(40.0), RainCategory::Violent);
    }

    #[test]
    fn two_by_two_examples() {
        let t = Contingency2x2 {
            h: 8,
            m: 2,
            f: 1,
            c: 5,
        };
        assert_eq!(t.pod(), Some(0.8));
        let t = Contingency2x2 {
            h: 0,
            m: 5,
            f: 5,
            c: 0,
        };
        assert_eq!(t.hss(), Some(-1.0));
        let t = Contingency2x2 {
            h: 3,
            m: 0,
            f: 0,
            c: 4,
        };
        assert_eq!(
            (t.pod(), t.far(), t.hss()),
            (Some(1.0), Some(0.0), Some(1.0))
        );
        assert_eq!(Contingency2x2::default().pod(), None);
    }

    #[test]
    fn kxk_diagonal() {
        let mut t = ContingencyKxK::default();
        t.counts[0][0] = 10;
        t.counts[2][2] = 4;
        assert_eq!(t.hss(), Some(1.0));
        assert_eq!(t.pod(0), Some(1.0));
        assert_eq!(t.pod(1), None);
    }
}
