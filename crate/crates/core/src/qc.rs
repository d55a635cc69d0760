//! Station-record quality control: range, flat line, maximum consecutive
//! rain days and whole-month false zeros.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::DailySeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QcTest {
    Range,
    FlatLine,
    MaxConsecutiveRain,
    FalseZeros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QcAction {
    FlaggedOnly,
    SetMissing,
}

impl fmt::Display for QcTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for QcAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcFlag {
    pub date: NaiveDate,
    pub test: QcTest,
    pub action: QcAction,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QcConfig {
    pub max_rain_mm: f64,
    /// Minimum length of a run of identical positive values that is flagged.
    pub flatline_min_run: usize,
    pub max_consecutive_rain_days: usize,
    pub false_zero_months: BTreeSet<u32>,
    pub false_zero_action: QcAction,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            max_rain_mm: 400.0,
            flatline_min_run: 5,
            max_consecutive_rain_days: 30,
            false_zero_months: [11, 12, 1, 2, 3].into_iter().collect(),
            false_zero_action: QcAction::SetMissing,
        }
    }
}

impl QcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_rain_mm > 0.0)
            || self.flatline_min_run == 0
            || self.max_consecutive_rain_days == 0
        {
            return Err(Error::InvalidConfig("QC limits must be positive".into()));
        }
        if let Some(m) = self
            .false_zero_months
            .iter()
            .find(|m| !(1..=12).contains(*m))
        {
            return Err(Error::InvalidConfig(format!(
                "false_zero_months contains {m}"
            )));
        }
        Ok(())
    }
}

/// Applies every test and returns the cleaned series plus one flag per event.
///
/// Values are only ever replaced by missing; nothing is imputed.
pub fn run_qc(series: &DailySeries, cfg: &QcConfig) -> (DailySeries, Vec<QcFlag>) {
    let mut values = series.values().to_vec();
    let mut flags = Vec::new();

    for (i, v) in values.iter_mut().enumerate() {
        if let Some(x) = *v {
            if x > cfg.max_rain_mm || x < 0.0 {
                flags.push(QcFlag {
                    date: series.date(i),
                    test: QcTest::Range,
                    action: QcAction::SetMissing,
                    detail: format!("{x} mm outside [0, {}]", cfg.max_rain_mm),
                });
                *v = None;
            }
        }
    }

    // flat line: identical positive values
    let mut i = 0;
    while i < values.len() {
        match values[i] {
            Some(x) if x > 0.0 => {
                let mut j = i + 1;
                while j < values.len() && values[j] == Some(x) {
                    j += 1;
                }
                if j - i >= cfg.flatline_min_run {
                    flags.push(QcFlag {
                        date: series.date(i),
                        test: QcTest::FlatLine,
                        action: QcAction::FlaggedOnly,
                        detail: format!(
                            "{} consecutive days of {x} mm ending {}",
                            j - i,
                            series.date(j - 1)
                        ),
                    });
                }
                i = j;
            }
            _ => i += 1,
        }
    }

    let mut i = 0;
    while i < values.len() {
        if values[i].is_some_and(|x| x > 0.0) {
            let mut j = i + 1;
            while j < values.len() && values[j].is_some_and(|x| x > 0.0) {
                j += 1;
            }
            if j - i > cfg.max_consecutive_rain_days {
                flags.push(QcFlag {
                    date: series.date(i),
                    test: QcTest::MaxConsecutiveRain,
                    action: QcAction::FlaggedOnly,
                    detail: format!(
                        "{} consecutive rain days ending {}",
                        j - i,
                        series.date(j - 1)
                    ),
                });
            }
            i = j;
        } else {
            i += 1;
        }
    }

    // whole month-years recorded as zero
    let mut i = 0;
    while i < values.len() {
        let date = series.date(i);
        let (y, m) = (date.year(), date.month());
        let mut j = i;
        while j < values.len() && {
            let dj = series.date(j);
            dj.year() == y && dj.month() == m
        } {
            j += 1;
        }
        if cfg.false_zero_months.contains(&m) {
            let present: Vec<f64> = values[i..j].iter().flatten().copied().collect();
            if !present.is_empty() && present.iter().all(|&x| x == 0.0) {
                flags.push(QcFlag {
                    date,
                    test: QcTest::FalseZeros,
                    action: cfg.false_zero_action,
                    detail: format!(
                        "all {} recorded values in {y}-{m:02} are zero",
                        present.len()
                    ),
                });
                if cfg.false_zero_action == QcAction::SetMissing {
                    values[i..j].iter_mut().for_each(|v| *v = None);
                }
            }
        }
        i = j;
    }

    flags.sort_by_key(|f| f.date);
    (
        DailySeries::from_parts_unchecked(series.start(), values),
        flags,
    )
}

/// Renders flags as `date,test,action,detail` CSV.
pub fn write_flags_csv(flags: &[QcFlag]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "test", "action", "detail"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for f in flags {
        w.write_record([
            f.date.to_string(),
            f.test.to_string(),
            f.action.to_string(),
            f.detail.clone(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn zero_november_is_false_zero() {
        let mut v = vec![Some(1.0); 31];
        v.extend(vec![Some(0.0); 30]);
        v.extend(vec![Some(2.0); 31]);
        let s = DailySeries::new(d(2000, 10, 1), v).unwrap();
        let (clean, flags) = run_qc(
            &s,
            &QcConfig {
                flatline_min_run: 100,
                max_consecutive_rain_days: 100,
                ..Default::default()
            },
        );
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].test, QcTest::FalseZeros);
        assert_eq!(flags[0].date, d(2000, 11, 1));
        assert!(clean.values()[31..61].iter().all(|v| v.is_none()));
        assert_eq!(clean.present_count(), 62);
    }

    #[test]
    fn partially_missing_zero_month_still_qualifies() {
        let mut v = vec![Some(0.0); 31];
        v[4] = None;
        let s = DailySeries::new(d(2000, 1, 1), v).unwrap();
        let (_, flags) = run_qc(&s, &QcConfig::default());
        assert_eq!(
            flags
                .iter()
                .filter(|f| f.test == QcTest::FalseZeros)
                .count(),
            1
        );
    }

    #[test]
    fn zero_month_outside_window_kept() {
        let s = DailySeries::new(d(2000, 6, 1), vec![Some(0.0); 30]).unwrap();
        let (clean, flags) = run_qc(&s, &QcConfig::default());
        assert!(flags.is_empty());
        assert_eq!(clean, s);
    }

    #[test]
    fn flagged_only_keeps_values() {
        let s = DailySeries::new(d(2000, 1, 1), vec![Some(0.0); 31]).unwrap();
        let cfg = QcConfig {
            false_zero_action: QcAction::FlaggedOnly,
            ..Default::default()
        };
        let (clean, flags) = run_qc(&s, &cfg);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].action, QcAction::FlaggedOnly);
        assert_eq!(clean, s);
    }

    #[test]
    fn range_breach_set_missing() {
        let s = DailySeries::new(d(2000, 6, 1), vec![Some(3.0), Some(999.0), Some(0.0)]).unwrap();
        let (clean, flags) = run_qc(&s, &QcConfig::default());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].test, QcTest::Range);
        assert_eq!(flags[0].action, QcAction::SetMissing);
        assert_eq!(clean.values(), &[Some(3.0), None, Some(0.0)]);
    }

    #[test]
    fn flat_line_flagged_not_removed() {
        let mut v = vec![Some(0.0); 10];
        for x in v.iter_mut().skip(2).take(6) {
            *x = Some(3.2);
        }
        let s = DailySeries::new(d(2000, 6, 1), v).unwrap();
        let (clean, flags) = run_qc(&s, &QcConfig::default());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].test, QcTest::FlatLine);
        assert_eq!(flags[0].date, d(2000, 6, 3));
        assert_eq!(clean, s);
    }

    #[test]
    fn zero_runs_are_not_flat_lines() {
        let s = DailySeries::new(d(2000, 6, 1), vec![Some(0.0); 60]).unwrap();
        let (_, flags) = run_qc(&s, &QcConfig::default());
        assert!(flags.iter().all(|f| f.test != QcTest::FlatLine));
    }

    #[test]
    fn long_wet_run_flagged() {
        let v: Vec<_> = (0..40).map(|i| Some(1.0 + (i % 3) as f64)).collect();
        let s = DailySeries::new(d(2000, 6, 1), v).unwrap();
        let (_, flags) = run_qc(&s, &QcConfig::default());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].test, QcTest::MaxConsecutiveRain);
    }

    #[test]
    fn flags_csv_header() {
        let flags = vec![QcFlag {
            date: d(2000, 1, 2),
            test: QcTest::Range,
            action: QcAction::SetMissing,
            detail: "999 mm outside [0, 400]".into(),
        }];
        let text = write_flags_csv(&flags).unwrap();
        assert_eq!(
            text,
            "date,test,action,detail\n2000-01-02,Range,SetMissing,\"999 mm outside [0, 400]\"\n"
        );
    }

    proptest! {
        #[test]
        fn qc_only_removes_and_is_idempotent(
            v in proptest::collection::vec(
                proptest::option::weighted(0.95, prop_oneof![Just(0.0), Just(3.2), 0.0f64..600.0]),
                1..500,
            )
        ) {
            let s = DailySeries::new(d(2000, 10, 15), v).unwrap();
            let cfg = QcConfig::default();
            let (once, _) = run_qc(&s, &cfg);
            prop_assert!(once.present_count() <= s.present_count());
            for (a, b) in s.values().iter().zip(once.values()) {
                prop_assert!(b.is_none() || a == b);
            }
            let (twice, flags2) = run_qc(&once, &cfg);
            prop_assert_eq!(&twice, &once);
            prop_assert!(flags2.iter().all(|f| f.action == QcAction::FlaggedOnly));
        }
    }
}
