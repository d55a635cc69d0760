//! Monthly climatology and annual summaries.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::series::{days_in_month, DailySeries, WetState};
use crate::stats::mean;

use super::spells::longest_dry_spell;

/// Rain-day statistics of one block of days (a month-year or annual year).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub rain_days: f64,
    pub total: f64,
    pub mean_per_rain_day: Option<f64>,
    pub max_daily: f64,
}

fn block_stats(values: &[f64], t_x: f64) -> BlockStats {
    let wet: Vec<f64> = values.iter().copied().filter(|&v| v > t_x).collect();
    BlockStats {
        rain_days: wet.len() as f64,
        total: values.iter().sum(),
        mean_per_rain_day: mean(&wet),
        max_daily: values.iter().copied().fold(0.0, f64::max),
    }
}

/// Year-averaged statistics of one calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthStats {
    pub month: u32,
    /// Month-years passing the completeness rule.
    pub n_years: usize,
    pub rain_days: Option<f64>,
    pub total: Option<f64>,
    pub mean_per_rain_day: Option<f64>,
    pub max_daily: Option<f64>,
}

/// Present values of `series` between two dates (inclusive start, exclusive
/// end) and the number of calendar days in that span.
fn span(series: &DailySeries, from: NaiveDate, to: NaiveDate) -> (Vec<f64>, usize) {
    let days = (to - from).num_days().max(0) as usize;
    let mut values = Vec::new();
    let mut d = from;
    while d < to {
        if let Some(i) = series.index_of(d) {
            if let Some(v) = series.get(i) {
                values.push(v);
            }
        }
        d = d.succ_opt().expect("date in range");
    }
    (values, days)
}

fn first_of(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, month, 1).expect("valid month")
}

fn next_month(year: i32, month: u32) -> (i32, u32) {
    if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    }
}

/// Per calendar month: the statistics of every month-year with at least
/// `completeness` of its days present, averaged over those years.
pub fn monthly_climatology(series: &DailySeries, t_x: f64, completeness: f64) -> Vec<MonthStats> {
    let mut per_month: Vec<Vec<BlockStats>> = vec![Vec::new(); 12];
    if let Some(end) = series.end() {
        let (mut y, mut m) = (series.start().year(), series.start().month());
        while first_of(y, m) <= end {
            let (ny, nm) = next_month(y, m);
            let (values, _) = span(series, first_of(y, m), first_of(ny, nm));
            let days = days_in_month(y, m) as f64;
            if !values.is_empty() && values.len() as f64 >= completeness * days {
                per_month[m as usize - 1].push(block_stats(&values, t_x));
            }
            (y, m) = (ny, nm);
        }
    }
    per_month
        .iter()
        .enumerate()
        .map(|(i, stats)| {
            let pick = |f: fn(&BlockStats) -> Option<f64>| {
                mean(&stats.iter().filter_map(f).collect::<Vec<_>>())
            };
            MonthStats {
                month: i as u32 + 1,
                n_years: stats.len(),
                rain_days: pick(|s| Some(s.rain_days)),
                total: pick(|s| Some(s.total)),
                mean_per_rain_day: pick(|s| s.mean_per_rain_day),
                max_daily: pick(|s| Some(s.max_daily)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualSummary {
    /// Calendar year in which the annual year starts.
    pub year: i32,
    /// Absent when the annual year fails the completeness rule.
    pub stats: Option<BlockStats>,
    /// Longest dry spell from 1 October to 31 March, absent when that window
    /// fails its completeness rule.
    pub longest_dry_spell: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualConfig {
    pub start_month: u32,
    pub completeness: f64,
    pub spell_completeness: f64,
}

impl Default for AnnualConfig {
    fn default() -> Self {
        Self {
            start_month: 8,
            completeness: 0.8,
            spell_completeness: 0.9,
        }
    }
}

fn states_between(series: &DailySeries, from: NaiveDate, to: NaiveDate, t_x: f64) -> Vec<WetState> {
    let mut out = Vec::new();
    let mut d = from;
    while d < to {
        let v = series.index_of(d).and_then(|i| series.get(i));
        out.push(WetState::from_value(v, t_x));
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// One summary per annual year overlapping the series.
pub fn annual_summaries(series: &DailySeries, t_x: f64, cfg: &AnnualConfig) -> Vec<AnnualSummary> {
    let Some(end) = series.end() else {
        return vec![];
    };
    let start = series.start();
    let mut year = if start.month() >= cfg.start_month {
        start.year()
    } else {
        start.year() - 1
    };
    let mut out = Vec::new();
    while first_of(year, cfg.start_month) <= end {
        let (from, to) = (
            first_of(year, cfg.start_month),
            first_of(year + 1, cfg.start_month),
        );
        let (values, days) = span(series, from, to);
        let stats = (!values.is_empty() && values.len() as f64 >= cfg.completeness * days as f64)
            .then(|| block_stats(&values, t_x));

        let oct_year = if cfg.start_month <= 10 {
            year
        } else {
            year + 1
        };
        let window = states_between(
            series,
            first_of(oct_year, 10),
            first_of(oct_year + 1, 4),
            t_x,
        );
        let present = window.iter().filter(|s| s.is_present()).count();
        let longest = (present > 0
            && present as f64 >= cfg.spell_completeness * window.len() as f64)
            .then(|| longest_dry_spell(&window));

        out.push(AnnualSummary {
            year,
            stats,
            longest_dry_spell: longest,
        });
        year += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, dd: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, dd).unwrap()
    }

    #[test]
    fn constant_series() {
        let s = DailySeries::from_f64(d(2001, 1, 1), &[1.0; 365]).unwrap();
        let c = monthly_climatology(&s, 0.85, 0.8);
        assert_eq!(c[0].rain_days, Some(31.0));
        assert_eq!(c[0].mean_per_rain_day, Some(1.0));
        assert_eq!(c[1].rain_days, Some(28.0));
    }

    #[test]
    fn dry_series() {
        let s = DailySeries::from_f64(d(2001, 1, 1), &[0.0; 365]).unwrap();
        let c = monthly_climatology(&s, 0.85, 0.8);
        assert_eq!(c[5].rain_days, Some(0.0));
        assert_eq!(c[5].total, Some(0.0));
        assert_eq!(c[5].mean_per_rain_day, None);
    }

    #[test]
    fn january_totals_average() {
        let mut v = vec![0.0; 365 + 31];
        v[0] = 60.0;
        v[365] = 100.0;
        let s = DailySeries::from_f64(d(2001, 1, 1), &v).unwrap();
        assert_eq!(monthly_climatology(&s, 0.85, 0.8)[0].total, Some(80.0));
    }

    #[test]
    fn incomplete_months_excluded() {
        let mut v: Vec<Option<f64>> = vec![Some(2.0); 31];
        for x in v.iter_mut().take(10) {
            *x = None;
        }
        let s = DailySeries::new(d(2001, 1, 1), v).unwrap();
        let c = monthly_climatology(&s, 0.85, 0.8);
        assert_eq!(c[0].n_years, 0);
        assert_eq!(c[0].total, None);
    }

    #[test]
    fn annual_dry_window() {
        // August 2000 to July 2001, all dry: window 1 Oct 2000 to 31 Mar 2001
        let n = (d(2001, 8, 1) - d(2000, 8, 1)).num_days() as usize;
        let s = DailySeries::from_f64(d(2000, 8, 1), &vec![0.0; n]).unwrap();
        let a = annual_summaries(&s, 0.85, &AnnualConfig::default());
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].year, 2000);
        assert_eq!(a[0].longest_dry_spell, Some(182));
        assert_eq!(a[0].stats.unwrap().rain_days, 0.0);
    }

    #[test]
    fn leap_window() {
        let n = (d(2004, 8, 1) - d(2003, 8, 1)).num_days() as usize;
        let s = DailySeries::from_f64(d(2003, 8, 1), &vec![0.0; n]).unwrap();
        assert_eq!(
            annual_summaries(&s, 0.85, &AnnualConfig::default())[0].longest_dry_spell,
            Some(183)
        );
    }

    #[test]
    fn partial_years_are_incomplete() {
        let s = DailySeries::from_f64(d(2001, 1, 1), &[0.0; 365]).unwrap();
        let a = annual_summaries(&s, 0.85, &AnnualConfig::default());
        assert_eq!(a.len(), 2);
        assert!(a
            .iter()
            .all(|x| x.stats.is_none() && x.longest_dry_spell.is_none()));
    }
}
