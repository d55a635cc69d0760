//! Evaluation tables and plots for one station.

use anyhow::Result;

use mcbc::evaluation::{EvalReport, MonthStats, RainCategory, SourceStats, CURVE_KINDS};
use mcbc::params::{Method, ParamSet};
use mcbc::plot::{ecdf_points, BarChart, Chart, Style, Trace};
use mcbc::stats::ComparisonMetrics;

/// CSV text built row by row.
struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    fn finish(self) -> Result<String> {
        Ok(String::from_utf8(self.writer.into_inner()?)?)
    }
}

fn opt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite())
        .map(|v| v.to_string())
        .unwrap_or_default()
}

fn nan(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn all_sources(r: &EvalReport) -> Vec<&SourceStats> {
    std::iter::once(&r.gauge).chain(&r.sources).collect()
}

type Files = Vec<(String, String)>;

fn chart(files: &mut Files, stem: &str, c: Chart) {
    files.push((format!("plots/{stem}.svg"), c.to_svg()));
    files.push((format!("plots/{stem}.csv"), c.to_csv()));
}

fn bars(files: &mut Files, stem: &str, b: BarChart) {
    files.push((format!("plots/{stem}.svg"), b.to_svg()));
    files.push((format!("plots/{stem}.csv"), b.to_csv()));
}

type MonthField = (&'static str, &'static str, fn(&MonthStats) -> Option<f64>);

const MONTH_FIELDS: [MonthField; 4] = [
    ("rain_days", "mean rain days", |m| m.rain_days),
    ("total", "mean total (mm)", |m| m.total),
    ("mean_per_rain_day", "mean rain per rain day (mm)", |m| {
        m.mean_per_rain_day
    }),
    ("max_daily", "mean maximum daily rain (mm)", |m| m.max_daily),
];

fn climatology(r: &EvalReport, files: &mut Files) -> Result<()> {
    let mut t = Table::new(&[
        "source",
        "month",
        "n_years",
        "rain_days",
        "total",
        "mean_per_rain_day",
        "max_daily",
    ])?;
    for s in all_sources(r) {
        for m in &s.climatology {
            t.row(vec![
                s.name.clone(),
                m.month.to_string(),
                m.n_years.to_string(),
                opt(m.rain_days),
                opt(m.total),
                opt(m.mean_per_rain_day),
                opt(m.max_daily),
            ])?;
        }
    }
    files.push(("monthly_climatology.csv".into(), t.finish()?));
    for (key, label, f) in MONTH_FIELDS {
        let traces = all_sources(r)
            .iter()
            .map(|s| Trace {
                label: s.name.clone(),
                points: s
                    .climatology
                    .iter()
                    .map(|m| (m.month as f64, nan(f(m))))
                    .collect(),
            })
            .collect();
        chart(
            files,
            &format!("monthly_{key}"),
            Chart {
                title: format!("Monthly climatology: {label}"),
                x_label: "month".into(),
                y_label: label.into(),
                style: Style::Line,
                traces,
                diagonal: false,
            },
        );
    }
    Ok(())
}

type AnnualField = (
    &'static str,
    &'static str,
    fn(&mcbc::evaluation::AnnualSummary) -> Option<f64>,
);

const ANNUAL_FIELDS: [AnnualField; 5] = [
    ("rain_days", "rain days", |a| a.stats.map(|s| s.rain_days)),
    ("total", "total (mm)", |a| a.stats.map(|s| s.total)),
    ("mean_per_rain_day", "mean rain per rain day (mm)", |a| {
        a.stats.and_then(|s| s.mean_per_rain_day)
    }),
    ("max_daily", "maximum daily rain (mm)", |a| {
        a.stats.map(|s| s.max_daily)
    }),
    (
        "longest_dry_spell",
        "longest Oct-Mar dry spell (days)",
        |a| a.longest_dry_spell.map(|l| l as f64),
    ),
];

fn annual(r: &EvalReport, files: &mut Files) -> Result<()> {
    let mut header = vec!["source", "year"];
    header.extend(ANNUAL_FIELDS.iter().map(|f| f.0));
    let mut t = Table::new(&header)?;
    for s in all_sources(r) {
        for a in &s.annual {
            let mut row = vec![s.name.clone(), a.year.to_string()];
            row.extend(ANNUAL_FIELDS.iter().map(|f| opt((f.2)(a))));
            t.row(row)?;
        }
    }
    files.push(("annual_summary.csv".into(), t.finish()?));
    for (key, label, f) in ANNUAL_FIELDS {
        let traces = all_sources(r)
            .iter()
            .map(|s| Trace {
                label: s.name.clone(),
                points: s
                    .annual
                    .iter()
                    .map(|a| (a.year as f64, nan(f(a))))
                    .collect(),
            })
            .collect();
        chart(
            files,
            &format!("annual_{key}"),
            Chart {
                title: format!("Annual {label}"),
                x_label: "year starting".into(),
                y_label: label.into(),
                style: Style::Line,
                traces,
                diagonal: false,
            },
        );
    }
    Ok(())
}

fn metrics(r: &EvalReport, files: &mut Files) -> Result<()> {
    let mut t = Table::new(&[
        "source",
        "scope",
        "statistic",
        "n",
        "mean_error",
        "rmse",
        "correlation",
        "sd_ratio",
    ])?;
    let mut row = |source: &str, scope: &str, stat: &str, m: &ComparisonMetrics| {
        t.row(vec![
            source.into(),
            scope.into(),
            stat.into(),
            m.n.to_string(),
            opt(Some(m.mean_error)),
            opt(Some(m.rmse)),
            opt(m.correlation),
            opt(m.sd_ratio),
        ])
    };
    for c in &r.comparisons {
        for (stat, m) in &c.monthly {
            row(&c.name, "monthly", stat, m)?;
        }
        for (stat, m) in &c.annual {
            row(&c.name, "annual", stat, m)?;
        }
    }
    files.push(("metrics.csv".into(), t.finish()?));
    Ok(())
}

fn spells(r: &EvalReport, files: &mut Files) -> Result<()> {
    let mut t = Table::new(&[
        "source",
        "spell",
        "d_statistic",
        "p_value",
        "n_gauge",
        "n_source",
    ])?;
    for c in &r.comparisons {
        for (kind, ks) in [("wet", c.wet_spell_ks), ("dry", c.dry_spell_ks)] {
            match ks {
                Some(k) => t.row(vec![
                    c.name.clone(),
                    kind.into(),
                    k.d_statistic.to_string(),
                    k.p_value.to_string(),
                    k.n1.to_string(),
                    k.n2.to_string(),
                ])?,
                None => t.row(vec![
                    c.name.clone(),
                    kind.into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?,
            }
        }
    }
    files.push(("spells_ks.csv".into(), t.finish()?));
    for wet in [true, false] {
        let kind = if wet { "wet" } else { "dry" };
        let traces = all_sources(r)
            .iter()
            .map(|s| {
                let lens = if wet { &s.spells.wet } else { &s.spells.dry };
                let sample: Vec<f64> = lens.iter().map(|&l| l as f64).collect();
                Trace {
                    label: s.name.clone(),
                    points: ecdf_points(&sample),
                }
            })
            .collect();
        chart(
            files,
            &format!("spells_{kind}_ecdf"),
            Chart {
                title: format!("ECDF of October-March {kind} spell lengths"),
                x_label: "spell length (days)".into(),
                y_label: "cumulative probability".into(),
                style: Style::Step,
                traces,
                diagonal: false,
            },
        );
    }
    Ok(())
}

fn curves(r: &EvalReport, files: &mut Files) -> Result<()> {
    let mut t = Table::new(&["source", "curve", "all", "wet", "dry"])?;
    for c in &r.comparisons {
        for (kind, v) in &c.rmse_curve {
            t.row(vec![
                c.name.clone(),
                kind.clone(),
                opt(v.all),
                opt(v.wet),
                opt(v.dry),
            ])?;
        }
    }
    files.push(("rmse_curve.csv".into(), t.finish()?));
    for (kind, _, response) in CURVE_KINDS {
        let mut traces = Vec::new();
        for s in all_sources(r) {
            let Some(fc) = s.curves.get(kind) else {
                continue;
            };
            for (state, values) in fc.labelled() {
                let label = if state == "all" {
                    s.name.clone()
                } else {
                    format!("{} {state}", s.name)
                };
                traces.push(Trace {
                    label,
                    points: values
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| ((i + 1) as f64, v))
                        .collect(),
                });
            }
        }
        let y_label = match response {
            mcbc::seasonal::Response::Occurrence => "probability of rain",
            mcbc::seasonal::Response::Amount => "mean rain per rain day (mm)",
        };
        chart(
            files,
            &format!("curve_{kind}"),
            Chart {
                title: format!("Seasonal {kind} model"),
                x_label: "day of season (1 = 1 August)".into(),
                y_label: y_label.into(),
                style: Style::Line,
                traces,
                diagonal: false,
            },
        );
    }
    Ok(())
}

fn detection(r: &EvalReport, files: &mut Files) -> Result<()> {
    let mut t = Table::new(&[
        "source",
        "hits",
        "misses",
        "false_alarms",
        "correct_negatives",
        "pod",
        "far",
        "hss",
        "categorical_hss",
    ])?;
    let mut k = Table::new(&["source", "model_category", "gauge_category", "days"])?;
    for c in &r.comparisons {
        let d = &c.detection;
        t.row(vec![
            c.name.clone(),
            d.table.h.to_string(),
            d.table.m.to_string(),
            d.table.f.to_string(),
            d.table.c.to_string(),
            opt(d.pod),
            opt(d.far),
            opt(d.hss),
            opt(c.categorical.hss),
        ])?;
        for i in RainCategory::ALL {
            for j in RainCategory::ALL {
                k.row(vec![
                    c.name.clone(),
                    i.name().into(),
                    j.name().into(),
                    c.categorical.table.counts[i.index()][j.index()].to_string(),
                ])?;
            }
        }
    }
    files.push(("detection.csv".into(), t.finish()?));
    files.push(("categorical_table.csv".into(), k.finish()?));
    bars(
        files,
        "detection",
        BarChart {
            title: "Rain-day detection".into(),
            y_label: "score".into(),
            categories: vec![
                "POD".into(),
                "FAR".into(),
                "HSS".into(),
                "categorical HSS".into(),
            ],
            series: r
                .comparisons
                .iter()
                .map(|c| {
                    (
                        c.name.clone(),
                        vec![
                            c.detection.pod,
                            c.detection.far,
                            c.detection.hss,
                            c.categorical.hss,
                        ],
                    )
                })
                .collect(),
        },
    );
    bars(
        files,
        "categorical_pod",
        BarChart {
            title: "Probability of detection by rainfall category".into(),
            y_label: "POD".into(),
            categories: RainCategory::ALL
                .iter()
                .map(|c| c.name().to_string())
                .collect(),
            series: r
                .comparisons
                .iter()
                .map(|c| (c.name.clone(), c.categorical.pod.to_vec()))
                .collect(),
        },
    );
    Ok(())
}

/// Calibrated against target conditional probabilities for each stored
/// Markov-chain parameter set.
fn calibration(method: Method, sets: &[(String, ParamSet)], files: &mut Files) -> Result<()> {
    let mut t = Table::new(&[
        "set",
        "period",
        "target_pw",
        "achieved_pw",
        "target_pd",
        "achieved_pd",
        "iterations",
        "converged",
        "tw",
        "td",
    ])?;
    let (mut pw, mut pd) = (Vec::new(), Vec::new());
    for (label, p) in sets {
        let (ParamSet::McLoci(mc) | ParamSet::McQm(mc)) = p else {
            continue;
        };
        for (m, th) in &mc.thresholds.periods {
            let Some(tg) = mc.targets.periods.get(m) else {
                continue;
            };
            t.row(vec![
                label.clone(),
                m.to_string(),
                opt(tg.pw),
                opt(th.achieved_pw),
                opt(tg.pd),
                opt(th.achieved_pd),
                th.iterations.to_string(),
                th.converged.to_string(),
                th.tw.to_string(),
                th.td.to_string(),
            ])?;
            if let (Some(a), Some(b)) = (tg.pw, th.achieved_pw) {
                pw.push((a, b));
            }
            if let (Some(a), Some(b)) = (tg.pd, th.achieved_pd) {
                pd.push((a, b));
            }
        }
    }
    files.push((format!("calibration_{method}.csv"), t.finish()?));
    chart(
        files,
        &format!("calibration_{method}"),
        Chart {
            title: format!("{method}: calibrated versus target probabilities"),
            x_label: "target probability".into(),
            y_label: "calibrated probability".into(),
            style: Style::Scatter,
            traces: vec![
                Trace {
                    label: "pw".into(),
                    points: pw,
                },
                Trace {
                    label: "pd".into(),
                    points: pd,
                },
            ],
            diagonal: true,
        },
    );
    Ok(())
}

/// Every output file of one station's evaluation, keyed by relative path.
pub fn render(r: &EvalReport, mc_params: &[(Method, Vec<(String, ParamSet)>)]) -> Result<Files> {
    let mut files = vec![(
        "report.json".to_string(),
        serde_json::to_string_pretty(r)? + "\n",
    )];
    climatology(r, &mut files)?;
    annual(r, &mut files)?;
    metrics(r, &mut files)?;
    spells(r, &mut files)?;
    curves(r, &mut files)?;
    detection(r, &mut files)?;
    for (m, sets) in mc_params {
        calibration(*m, sets, &mut files)?;
    }
    Ok(files)
}
