//! Leave-one-block-out cross-validation: each block is corrected with
//! parameters calibrated on the other blocks, and the corrected blocks are
//! stitched into one validation series.

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CorrectionConfig;
use crate::error::{Error, Result};
use crate::params::{calibrate, Method, ParamSet};
use crate::series::{DailySeries, PeriodScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: NaiveDate,
    /// Inclusive.
    pub end: NaiveDate,
}

impl Block {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Block>", into = "Vec<Block>")]
pub struct BlockScheme {
    blocks: Vec<Block>,
}

impl TryFrom<Vec<Block>> for BlockScheme {
    type Error = Error;

    fn try_from(blocks: Vec<Block>) -> Result<Self> {
        BlockScheme::new(blocks)
    }
}

impl From<BlockScheme> for Vec<Block> {
    fn from(b: BlockScheme) -> Self {
        b.blocks
    }
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl Default for BlockScheme {
    /// 1979-1988, 1989-1998, 1999-2008 and 2009-2023.
    fn default() -> Self {
        Self::from_years(&[(1979, 1988), (1989, 1998), (1999, 2008), (2009, 2023)])
            .expect("default blocks are valid")
    }
}

impl BlockScheme {
    /// Ordered, non-overlapping blocks; at least two are needed.
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::InvalidConfig(
                "cross-validation needs at least two blocks".into(),
            ));
        }
        for b in &blocks {
            if b.start > b.end {
                return Err(Error::InvalidConfig(format!(
                    "block {} to {} ends before it starts",
                    b.start, b.end
                )));
            }
        }
        for w in blocks.windows(2) {
            if w[1].start <= w[0].end {
                return Err(Error::InvalidConfig(format!(
                    "blocks {}..{} and {}..{} overlap or are out of order",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(Self { blocks })
    }

    /// Whole calendar-year blocks, `(first_year, last_year)` inclusive.
    pub fn from_years(years: &[(i32, i32)]) -> Result<Self> {
        Self::new(
            years
                .iter()
                .map(|&(a, b)| Block {
                    start: ymd(a, 1, 1),
                    end: ymd(b, 12, 31),
                })
                .collect(),
        )
    }

    /// `k` blocks of whole calendar years, as equal as possible, spanning the
    /// years of `start..=end`; earlier blocks take the extra years.
    pub fn equal_years(start: NaiveDate, end: NaiveDate, k: usize) -> Result<Self> {
        let (y0, y1) = (start.year(), end.year());
        let n = (y1 - y0 + 1).max(0) as usize;
        if k < 2 || n < k {
            return Err(Error::InvalidConfig(format!(
                "cannot split {n} years into {k} blocks"
            )));
        }
        let mut years = Vec::with_capacity(k);
        let mut first = y0;
        for i in 0..k {
            let len = (n / k + usize::from(i < n % k)) as i32;
            years.push((first, first + len - 1));
            first += len;
        }
        Self::from_years(&years)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }
}

/// Parameters used for one held-out block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub block: Block,
    /// Absent when calibration failed; the block is then left missing.
    pub params: Option<ParamSet>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalResult {
    /// Over the model's date range; days outside every block are missing.
    pub series: DailySeries,
    pub folds: Vec<Fold>,
    pub warnings: Vec<String>,
}

/// Calibrates `method` with block `b` masked out of both series and applies
/// the result to the model values inside `b`.
fn run_fold(
    obs: &DailySeries,
    model: &DailySeries,
    method: Method,
    block: Block,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
) -> (Fold, Option<DailySeries>) {
    let outside = |s: &DailySeries| s.masked(|i| !block.contains(s.date(i)));
    let mut warnings = Vec::new();
    let params = match calibrate(method, &outside(obs), &outside(model), scheme, cfg) {
        Ok(p) => p,
        Err(e) => {
            warnings.push(format!(
                "block {}..{}: calibration failed ({e}); block left missing",
                block.start, block.end
            ));
            return (
                Fold {
                    block,
                    params: None,
                    warnings,
                },
                None,
            );
        }
    };
    let (Some(model_end), from) = (model.end(), block.start.max(model.start())) else {
        return (
            Fold {
                block,
                params: Some(params),
                warnings,
            },
            None,
        );
    };
    let to = block.end.min(model_end);
    if from > to {
        warnings.push(format!(
            "block {}..{} lies outside the model series",
            block.start, block.end
        ));
        return (
            Fold {
                block,
                params: Some(params),
                warnings,
            },
            None,
        );
    }
    match params.apply(&model.window(from, to), scheme) {
        Ok(c) => {
            warnings.extend(c.warnings);
            (
                Fold {
                    block,
                    params: Some(params),
                    warnings,
                },
                Some(c.series),
            )
        }
        Err(e) => {
            warnings.push(format!(
                "block {}..{}: correction failed ({e}); block left missing",
                block.start, block.end
            ));
            (
                Fold {
                    block,
                    params: Some(params),
                    warnings,
                },
                None,
            )
        }
    }
}

pub fn run_crossval(
    obs: &DailySeries,
    model: &DailySeries,
    method: Method,
    blocks: &BlockScheme,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
) -> Result<CrossvalResult> {
    cfg.validate()?;
    if model.is_empty() {
        return Err(Error::EmptySample);
    }
    let folds: Vec<(Fold, Option<DailySeries>)> = blocks
        .blocks()
        .par_iter()
        .map(|&b| run_fold(obs, model, method, b, scheme, cfg))
        .collect();

    let mut values = vec![None; model.len()];
    let mut out_folds = Vec::with_capacity(folds.len());
    let mut warnings = Vec::new();
    for (fold, segment) in folds {
        if let Some(seg) = segment {
            let offset = model
                .index_of(seg.start())
                .expect("segment inside the model range");
            values[offset..offset + seg.len()].copy_from_slice(seg.values());
        }
        warnings.extend(fold.warnings.iter().cloned());
        out_folds.push(fold);
    }
    Ok(CrossvalResult {
        series: DailySeries::new(model.start(), values)?,
        folds: out_folds,
        warnings,
    })
}
