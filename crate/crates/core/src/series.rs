//! Calendar-aware daily series, rain-day indicators and calibration periods.
//!
//! A [`DailySeries`] covers every calendar day between its first and last
//! date; gaps are stored as `None` rather than omitted, so an index into the
//! value vector is always `start + index` days.

use std::ops::Range;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a calibration period, `1..=M`.
pub type PeriodId = u8;

/// Daily rainfall in mm with explicit missing markers.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    start: NaiveDate,
    values: Vec<Option<f64>>,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<Option<f64>>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if !x.is_finite() || *x < 0.0 {
                    return Err(Error::InvalidSeries(format!(
                        "value {x} on {} is not a non-negative finite number",
                        start + Duration::days(i as i64)
                    )));
                }
            }
        }
        Ok(Self { start, values })
    }

    /// Builds a series from plain numbers, treating NaN as missing.
    pub fn from_f64(start: NaiveDate, values: &[f64]) -> Result<Self> {
        Self::new(
            start,
            values
                .iter()
                .map(|&v| if v.is_nan() { None } else { Some(v) })
                .collect(),
        )
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last date covered, or `None` for an empty series.
    pub fn end(&self) -> Option<NaiveDate> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.date(self.values.len() - 1))
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let off = (date - self.start).num_days();
        if off >= 0 && (off as usize) < self.values.len() {
            Some(off as usize)
        } else {
            None
        }
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(move |i| self.date(i))
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Present values as NaN-for-missing floats.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    /// Restricts the series to `[from, to]` (inclusive), padding with missing
    /// days where the requested range extends past the data.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> DailySeries {
        let n = ((to - from).num_days() + 1).max(0) as usize;
        let values = (0..n)
            .map(|i| {
                let d = from + Duration::days(i as i64);
                self.index_of(d).and_then(|j| self.values[j])
            })
            .collect();
        DailySeries {
            start: from,
            values,
        }
    }

    /// Copy with every day for which `keep` returns false set to missing.
    pub fn masked(&self, mut keep: impl FnMut(usize) -> bool) -> DailySeries {
        DailySeries {
            start: self.start,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| if keep(i) { *v } else { None })
                .collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(start: NaiveDate, values: Vec<Option<f64>>) -> Self {
        debug_assert!(values.iter().flatten().all(|v| *v >= 0.0));
        Self { start, values }
    }
}

/// Previous-day or current-day rain state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WetState {
    Wet,
    Dry,
    Missing,
}

impl WetState {
    pub fn is_wet(self) -> bool {
        self == WetState::Wet
    }

    pub fn is_present(self) -> bool {
        self != WetState::Missing
    }

    pub fn from_value(v: Option<f64>, threshold: f64) -> Self {
        match v {
            Some(x) if x > threshold => WetState::Wet,
            Some(_) => WetState::Dry,
            None => WetState::Missing,
        }
    }
}

/// Day-by-day rain states aligned with a [`DailySeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    start: NaiveDate,
    states: Vec<WetState>,
}

impl IndicatorSeries {
    pub fn new(start: NaiveDate, states: Vec<WetState>) -> Self {
        Self { start, states }
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn states(&self) -> &[WetState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }
}

/// Wet iff the value is strictly above `threshold`.
pub fn rain_indicator(series: &DailySeries, threshold: f64) -> IndicatorSeries {
    IndicatorSeries {
        start: series.start,
        states: series
            .values
            .iter()
            .map(|&v| WetState::from_value(v, threshold))
            .collect(),
    }
}

/// State of the previous day for every day; the first day has no predecessor.
pub fn lagged_state(indicator: &IndicatorSeries) -> Vec<WetState> {
    lag_states(&indicator.states)
}

pub(crate) fn lag_states(states: &[WetState]) -> Vec<WetState> {
    let mut out = Vec::with_capacity(states.len());
    if !states.is_empty() {
        out.push(WetState::Missing);
        out.extend_from_slice(&states[..states.len() - 1]);
    }
    out
}

/// Mapping from calendar month to calibration period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PeriodSchemeRepr", into = "PeriodSchemeRepr")]
pub struct PeriodScheme {
    month_to_period: [PeriodId; 12],
    n_periods: PeriodId,
    dry_season_start_month: u32,
    annual_year_start_month: u32,
}

#[derive(Serialize, Deserialize)]
struct PeriodSchemeRepr {
    month_to_period: Vec<PeriodId>,
    #[serde(default = "default_dry_season_start")]
    dry_season_start_month: u32,
    #[serde(default = "default_annual_year_start")]
    annual_year_start_month: u32,
}

fn default_dry_season_start() -> u32 {
    4
}

fn default_annual_year_start() -> u32 {
    8
}

impl TryFrom<PeriodSchemeRepr> for PeriodScheme {
    type Error = Error;

    fn try_from(r: PeriodSchemeRepr) -> Result<Self> {
        let map: [PeriodId; 12] = r.month_to_period.try_into().map_err(|v: Vec<PeriodId>| {
            Error::InvalidScheme(format!("month_to_period needs 12 entries, got {}", v.len()))
        })?;
        PeriodScheme::new(map, r.dry_season_start_month, r.annual_year_start_month)
    }
}

impl From<PeriodScheme> for PeriodSchemeRepr {
    fn from(s: PeriodScheme) -> Self {
        PeriodSchemeRepr {
            month_to_period: s.month_to_period.to_vec(),
            dry_season_start_month: s.dry_season_start_month,
            annual_year_start_month: s.annual_year_start_month,
        }
    }
}

impl Default for PeriodScheme {
    /// October to April each form their own period; May to September are
    /// pooled into a single dry-season period.
    fn default() -> Self {
        PeriodScheme::new([1, 2, 3, 4, 5, 5, 5, 5, 5, 6, 7, 8], 4, 8)
            .expect("default scheme is valid")
    }
}

impl PeriodScheme {
    pub fn new(
        month_to_period: [PeriodId; 12],
        dry_season_start_month: u32,
        annual_year_start_month: u32,
    ) -> Result<Self> {
        for (name, m) in [
            ("dry_season_start_month", dry_season_start_month),
            ("annual_year_start_month", annual_year_start_month),
        ] {
            if !(1..=12).contains(&m) {
                return Err(Error::InvalidScheme(format!("{name} = {m} is not a month")));
            }
        }
        let n = *month_to_period.iter().max().unwrap();
        if month_to_period.contains(&0) {
            return Err(Error::InvalidScheme("period ids start at 1".into()));
        }
        for id in 1..=n {
            if !month_to_period.contains(&id) {
                return Err(Error::InvalidScheme(format!(
                    "period ids must cover 1..={n} without gaps; {id} is unused"
                )));
            }
        }
        Ok(Self {
            month_to_period,
            n_periods: n,
            dry_season_start_month,
            annual_year_start_month,
        })
    }

    /// One period per calendar month.
    pub fn monthly() -> Self {
        let mut map = [0; 12];
        for (i, p) in map.iter_mut().enumerate() {
            *p = i as PeriodId + 1;
        }
        PeriodScheme::new(map, 4, 8).expect("monthly scheme is valid")
    }

    pub fn n_periods(&self) -> PeriodId {
        self.n_periods
    }

    pub fn periods(&self) -> impl Iterator<Item = PeriodId> {
        1..=self.n_periods
    }

    pub fn period_of_month(&self, month: u32) -> PeriodId {
        self.month_to_period[(month - 1) as usize]
    }

    pub fn period_of(&self, date: NaiveDate) -> PeriodId {
        self.period_of_month(date.month())
    }

    pub fn months_of(&self, m: PeriodId) -> Vec<u32> {
        (1..=12)
            .filter(|&mo| self.period_of_month(mo) == m)
            .collect()
    }

    pub fn month_to_period(&self) -> &[PeriodId; 12] {
        &self.month_to_period
    }

    pub fn dry_season_start_month(&self) -> u32 {
        self.dry_season_start_month
    }

    pub fn annual_year_start_month(&self) -> u32 {
        self.annual_year_start_month
    }

    pub fn contains(&self, m: PeriodId) -> bool {
        (1..=self.n_periods).contains(&m)
    }

    /// Index ranges of the maximal runs of consecutive days in period `m`.
    pub fn period_blocks(&self, start: NaiveDate, len: usize, m: PeriodId) -> Vec<Range<usize>> {
        let mut blocks = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..len {
            let inside = self.period_of(start + Duration::days(i as i64)) == m;
            match (inside, open) {
                (true, None) => open = Some(i),
                (false, Some(s)) => {
                    blocks.push(s..i);
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            blocks.push(s..len);
        }
        blocks
    }

    /// Per-day period ids for a run of `len` days starting at `start`.
    pub fn period_index(&self, start: NaiveDate, len: usize) -> Vec<PeriodId> {
        (0..len)
            .map(|i| self.period_of(start + Duration::days(i as i64)))
            .collect()
    }

    /// First index whose date is the first day of the dry-season start month.
    pub fn first_dry_season_start(&self, start: NaiveDate, len: usize) -> Option<usize> {
        (0..len).find(|&i| {
            let d = start + Duration::days(i as i64);
            d.day() == 1 && d.month() == self.dry_season_start_month
        })
    }
}

/// Date-indexed containers that can be cut into contiguous pieces.
pub trait Daily: Sized {
    fn start_date(&self) -> NaiveDate;
    fn day_count(&self) -> usize;
    fn slice(&self, range: Range<usize>) -> Self;
}

impl Daily for DailySeries {
    fn start_date(&self) -> NaiveDate {
        self.start
    }

    fn day_count(&self) -> usize {
        self.values.len()
    }

    fn slice(&self, range: Range<usize>) -> Self {
        DailySeries {
            start: self.date(range.start),
            values: self.values[range].to_vec(),
        }
    }
}

impl Daily for IndicatorSeries {
    fn start_date(&self) -> NaiveDate {
        self.start
    }

    fn day_count(&self) -> usize {
        self.states.len()
    }

    fn slice(&self, range: Range<usize>) -> Self {
        IndicatorSeries {
            start: self.date(range.start),
            states: self.states[range].to_vec(),
        }
    }
}

/// Splits a series into the contiguous runs that fall in period `m`.
pub fn subset_period<S: Daily>(series: &S, scheme: &PeriodScheme, m: PeriodId) -> Result<Vec<S>> {
    if !scheme.contains(m) {
        return Err(Error::InvalidScheme(format!(
            "period {m} not in 1..={}",
            scheme.n_periods()
        )));
    }
    Ok(scheme
        .period_blocks(series.start_date(), series.day_count(), m)
        .into_iter()
        .map(|r| series.slice(r))
        .collect())
}

/// Clips two series to their common date range.
pub fn align(a: &DailySeries, b: &DailySeries) -> Result<(DailySeries, DailySeries)> {
    let (Some(ea), Some(eb)) = (a.end(), b.end()) else {
        return Err(Error::NoOverlap);
    };
    let from = a.start().max(b.start());
    let to = ea.min(eb);
    if from > to {
        return Err(Error::NoOverlap);
    }
    Ok((a.window(from, to), b.window(from, to)))
}

/// Clips two series to their common range and masks days missing in either.
pub fn pairwise_complete(a: &DailySeries, b: &DailySeries) -> Result<(DailySeries, DailySeries)> {
    let (a, b) = align(a, b)?;
    let both: Vec<bool> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.is_some() && y.is_some())
        .collect();
    Ok((a.masked(|i| both[i]), b.masked(|i| both[i])))
}

pub(crate) fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    };
    let first_next = NaiveDate::from_ymd_opt(ny, nm, 1).unwrap();
    let first = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
    (first_next - first).num_days() as u32
}
