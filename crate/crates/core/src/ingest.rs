//! Station CSV reading and writing (`date,rain`).

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::qc::{QcAction, QcFlag, QcTest};
use crate::series::DailySeries;

/// Parses a station file. Days absent from the file become missing.
pub fn parse_station_csv(text: &str) -> Result<DailySeries> {
    parse(text, false).map(|(s, _)| s)
}

/// As [`parse_station_csv`], but negative values are recorded as missing
/// with a `Range` flag instead of failing the parse.
pub fn parse_station_csv_lenient(text: &str) -> Result<(DailySeries, Vec<QcFlag>)> {
    parse(text, true)
}

fn parse(text: &str, lenient: bool) -> Result<(DailySeries, Vec<QcFlag>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("header must contain `{name}` column"),
            })
    };
    let (date_col, rain_col) = (col("date")?, col("rain")?);

    let mut rows: BTreeMap<NaiveDate, Option<f64>> = BTreeMap::new();
    let mut flags = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let date_txt = rec.get(date_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_txt, "%Y-%m-%d")
            .ok()
            .filter(|_| date_txt.len() == 10)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed date `{date_txt}`, expected YYYY-MM-DD"),
            })?;
        let rain_txt = rec.get(rain_col).unwrap_or("");
        let mut value = if rain_txt.is_empty() || rain_txt == "NA" {
            None
        } else {
            let x: f64 = rain_txt.parse().map_err(|_| Error::Parse {
                line,
                message: format!("rain value `{rain_txt}` is not a number"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("rain value `{rain_txt}` is not finite"),
                });
            }
            Some(x)
        };
        if let Some(x) = value.filter(|x| *x < 0.0) {
            if !lenient {
                return Err(Error::NegativeRain {
                    date,
                    value: x,
                    line,
                });
            }
            flags.push(QcFlag {
                date,
                test: QcTest::Range,
                action: QcAction::SetMissing,
                detail: format!("negative value {x} mm in input"),
            });
            value = None;
        }
        if rows.insert(date, value).is_some() {
            return Err(Error::DuplicateDate { date, line });
        }
    }

    let (Some((&first, _)), Some((&last, _))) = (rows.first_key_value(), rows.last_key_value())
    else {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    };
    let n = (last - first).num_days() as usize + 1;
    let mut values = vec![None; n];
    for (date, v) in rows {
        values[(date - first).num_days() as usize] = v;
    }
    Ok((DailySeries::new(first, values)?, flags))
}

/// Writes `date,rain` with empty fields for missing days.
pub fn write_station_csv(series: &DailySeries) -> String {
    let mut out = String::with_capacity(series.len() * 16 + 16);
    out.push_str("date,rain\n");
    for (i, v) in series.values().iter().enumerate() {
        out.push_str(&series.date(i).format("%Y-%m-%d").to_string());
        out.push(',');
        if let Some(x) = v {
            out.push_str(&format_mm(*x));
        }
        out.push('\n');
    }
    out
}

/// Shortest representation that parses back to the same value.
pub fn format_mm(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gap_filled() {
        let s = parse_station_csv("date,rain\n2000-01-01,0.0\n2000-01-03,2.5\n").unwrap();
        assert_eq!(s.values(), &[Some(0.0), None, Some(2.5)]);
    }

    #[test]
    fn empty_and_na_tokens() {
        let s = parse_station_csv("date,rain\n2000-01-01,\n2000-01-02,NA\n").unwrap();
        assert_eq!(s.values(), &[None, None]);
    }

    #[test]
    fn duplicate_date_rejected() {
        let e = parse_station_csv("date,rain\n2000-01-01,1\n2000-01-01,2\n").unwrap_err();
        assert!(matches!(e, Error::DuplicateDate { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn malformed_date_reports_line() {
        let e = parse_station_csv("date,rain\n2000-01-01,1\n01/02/2000,2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn negative_value_strict_and_lenient() {
        let text = "date,rain\n2000-01-01,-1\n2000-01-02,3\n";
        assert!(matches!(
            parse_station_csv(text),
            Err(Error::NegativeRain { .. })
        ));
        let (s, flags) = parse_station_csv_lenient(text).unwrap();
        assert_eq!(s.values(), &[None, Some(3.0)]);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].test, QcTest::Range);
    }

    #[test]
    fn column_order_and_extra_columns() {
        let s = parse_station_csv("station,rain,date\nA,1.5,2000-02-28\nA,2,2000-03-01\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.values()[2], Some(2.0));
    }

    #[test]
    fn missing_header_rejected() {
        assert!(parse_station_csv("day,value\n2000-01-01,1\n").is_err());
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            v in proptest::collection::vec(proptest::option::of(0.0f64..300.0), 1..200)
        ) {
            let mut v = v;
            v[0] = Some(v[0].unwrap_or(0.0));
            let last = v.len() - 1;
            v[last] = Some(v[last].unwrap_or(1.0));
            let s = DailySeries::new(NaiveDate::from_ymd_opt(1999, 12, 20).unwrap(), v).unwrap();
            let back = parse_station_csv(&write_station_csv(&s)).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
