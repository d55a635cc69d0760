//! Evaluation of raw and corrected series against gauge data: climatology,
//! annual summaries, spell distributions, seasonal-model curves and
//! detection skill, all on the days where every source is present.

mod climatology;
mod detection;
mod spells;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use climatology::{
    annual_summaries, monthly_climatology, AnnualConfig, AnnualSummary, BlockStats, MonthStats,
};
pub use detection::{
    detection_2x2, detection_categorical, CategoricalScores, Contingency2x2, ContingencyKxK,
    DetectionScores, RainCategory,
};
pub use spells::{
    in_spell_window, longest_dry_spell, runs, spell_lengths, spell_windows, Spell, SpellLengths,
};

use crate::config::DEFAULT_T_X;
use crate::error::{Error, Result};
use crate::seasonal::{
    fit_amount_model, fit_occurrence_model, rmse_curve, CurveRmse, FittedCurves, Order, Response,
    SeasonalModelSpec,
};
use crate::series::{lagged_state, rain_indicator, DailySeries};
use crate::stats::{comparison_metrics, ks_two_sample, ComparisonMetrics, KsResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub t_x: f64,
    pub monthly_completeness: f64,
    pub annual: AnnualConfig,
    pub discard_spells_adjacent_missing: bool,
    pub n_harmonics: usize,
    pub day_origin: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            t_x: DEFAULT_T_X,
            monthly_completeness: 0.8,
            annual: AnnualConfig::default(),
            discard_spells_adjacent_missing: false,
            n_harmonics: 3,
            day_origin: 8,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("monthly_completeness", self.monthly_completeness),
            ("annual.completeness", self.annual.completeness),
            ("annual.spell_completeness", self.annual.spell_completeness),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidConfig(format!("{name} = {f} not in [0, 1]")));
            }
        }
        if !(1..=12).contains(&self.annual.start_month) {
            return Err(Error::InvalidConfig(
                "annual.start_month must be a month".into(),
            ));
        }
        self.spec(Order::Zero, Response::Occurrence).validate()
    }

    fn spec(&self, order: Order, response: Response) -> SeasonalModelSpec {
        SeasonalModelSpec {
            order,
            response,
            n_harmonics: self.n_harmonics,
            day_origin: self.day_origin,
        }
    }
}

/// The four seasonal models fitted to each source.
pub const CURVE_KINDS: [(&str, Order, Response); 4] = [
    ("occurrence0", Order::Zero, Response::Occurrence),
    ("occurrence1", Order::First, Response::Occurrence),
    ("amount0", Order::Zero, Response::Amount),
    ("amount1", Order::First, Response::Amount),
];

/// Everything computed from one source on the common mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub name: String,
    pub rain_days: usize,
    pub present_days: usize,
    pub climatology: Vec<MonthStats>,
    pub annual: Vec<AnnualSummary>,
    #[serde(skip)]
    pub spells: SpellLengths,
    #[serde(skip)]
    pub curves: BTreeMap<String, FittedCurves>,
}

/// A source compared with the gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceComparison {
    pub name: String,
    pub monthly: BTreeMap<String, ComparisonMetrics>,
    pub annual: BTreeMap<String, ComparisonMetrics>,
    pub wet_spell_ks: Option<KsResult>,
    pub dry_spell_ks: Option<KsResult>,
    pub rmse_curve: BTreeMap<String, CurveRmse>,
    pub detection: DetectionScores,
    pub categorical: CategoricalScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Days present in every source.
    pub common_days: usize,
    pub t_x: f64,
    pub gauge: SourceStats,
    pub sources: Vec<SourceStats>,
    pub comparisons: Vec<SourceComparison>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn comparison(&self, name: &str) -> Option<&SourceComparison> {
        self.comparisons.iter().find(|c| c.name == name)
    }
}

/// Clips every series to the common date range and masks each day that is
/// missing in any of them.
pub fn common_mask(series: &[&DailySeries]) -> Result<Vec<DailySeries>> {
    let mut from = None;
    let mut to = None;
    for s in series {
        let end = s.end().ok_or(Error::NoOverlap)?;
        from = Some(from.map_or(s.start(), |f: NaiveDate| f.max(s.start())));
        to = Some(to.map_or(end, |t: NaiveDate| t.min(end)));
    }
    let (Some(from), Some(to)) = (from, to) else {
        return Err(Error::EmptySample);
    };
    if from > to {
        return Err(Error::NoOverlap);
    }
    let clipped: Vec<DailySeries> = series.iter().map(|s| s.window(from, to)).collect();
    let keep: Vec<bool> = (0..clipped[0].len())
        .map(|i| clipped.iter().all(|s| s.values()[i].is_some()))
        .collect();
    Ok(clipped.iter().map(|s| s.masked(|i| keep[i])).collect())
}

fn source_stats(
    name: &str,
    series: &DailySeries,
    cfg: &EvalConfig,
    warnings: &mut Vec<String>,
) -> SourceStats {
    let ind = rain_indicator(series, cfg.t_x);
    let lag = lagged_state(&ind);
    let mut curves = BTreeMap::new();
    for (key, order, response) in CURVE_KINDS {
        let spec = cfg.spec(order, response);
        let fit = match response {
            Response::Occurrence => fit_occurrence_model(&ind, &lag, &spec),
            Response::Amount => fit_amount_model(series, &ind, &lag, &spec, cfg.t_x),
        };
        match fit {
            Ok(c) => {
                curves.insert(key.to_string(), c);
            }
            Err(e) => warnings.push(format!("{name}: {key} seasonal model not fitted ({e})")),
        }
    }
    SourceStats {
        name: name.to_string(),
        rain_days: ind.states().iter().filter(|s| s.is_wet()).count(),
        present_days: series.present_count(),
        climatology: monthly_climatology(series, cfg.t_x, cfg.monthly_completeness),
        annual: annual_summaries(series, cfg.t_x, &cfg.annual),
        spells: spell_lengths(&ind, cfg.discard_spells_adjacent_missing),
        curves,
    }
}

fn nan(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

type Field<T> = (&'static str, fn(&T) -> Option<f64>);

fn metric_table<T>(
    source: &[T],
    gauge: &[T],
    fields: &[Field<T>],
    warnings: &mut Vec<String>,
    label: &str,
) -> BTreeMap<String, ComparisonMetrics> {
    let mut out = BTreeMap::new();
    for (name, f) in fields {
        let y: Vec<f64> = source.iter().map(|s| nan(f(s))).collect();
        let x: Vec<f64> = gauge.iter().map(|s| nan(f(s))).collect();
        match comparison_metrics(&y, &x) {
            Ok(m) => {
                out.insert(name.to_string(), m);
            }
            Err(e) => warnings.push(format!("{label}: {name} not compared ({e})")),
        }
    }
    out
}

type MonthField = (&'static str, fn(&MonthStats) -> Option<f64>);
type AnnualField = (&'static str, fn(&AnnualSummary) -> Option<f64>);

const MONTH_FIELDS: [MonthField; 4] = [
    ("rain_days", |m| m.rain_days),
    ("total", |m| m.total),
    ("mean_per_rain_day", |m| m.mean_per_rain_day),
    ("max_daily", |m| m.max_daily),
];

const ANNUAL_FIELDS: [AnnualField; 5] = [
    ("rain_days", |a| a.stats.map(|s| s.rain_days)),
    ("total", |a| a.stats.map(|s| s.total)),
    ("mean_per_rain_day", |a| {
        a.stats.and_then(|s| s.mean_per_rain_day)
    }),
    ("max_daily", |a| a.stats.map(|s| s.max_daily)),
    ("longest_dry_spell", |a| {
        a.longest_dry_spell.map(|l| l as f64)
    }),
];

fn spell_ks(gauge: &[usize], other: &[usize]) -> Result<KsResult> {
    let g: Vec<f64> = gauge.iter().map(|&x| x as f64).collect();
    let o: Vec<f64> = other.iter().map(|&x| x as f64).collect();
    ks_two_sample(&g, &o)
}

fn compare(
    gauge: &SourceStats,
    gauge_series: &DailySeries,
    source: &SourceStats,
    series: &DailySeries,
    cfg: &EvalConfig,
    warnings: &mut Vec<String>,
) -> Result<SourceComparison> {
    let label = source.name.as_str();
    let monthly = metric_table(
        &source.climatology,
        &gauge.climatology,
        &MONTH_FIELDS,
        warnings,
        label,
    );
    let annual = metric_table(
        &source.annual,
        &gauge.annual,
        &ANNUAL_FIELDS,
        warnings,
        label,
    );
    let mut ks = |g: &[usize], o: &[usize], what: &str| match spell_ks(g, o) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("{label}: {what} spell K-S not computed ({e})"));
            None
        }
    };
    let wet_spell_ks = ks(&gauge.spells.wet, &source.spells.wet, "wet");
    let dry_spell_ks = ks(&gauge.spells.dry, &source.spells.dry, "dry");
    let mut rmse = BTreeMap::new();
    for (key, _, _) in CURVE_KINDS {
        if let (Some(a), Some(b)) = (source.curves.get(key), gauge.curves.get(key)) {
            rmse.insert(key.to_string(), rmse_curve(a, b)?);
        }
    }
    let detection = detection_2x2(
        &rain_indicator(gauge_series, cfg.t_x),
        &rain_indicator(series, cfg.t_x),
    )?;
    let categorical = detection_categorical(gauge_series, series)?;
    Ok(SourceComparison {
        name: source.name.clone(),
        monthly,
        annual,
        wet_spell_ks,
        dry_spell_ks,
        rmse_curve: rmse,
        detection,
        categorical,
    })
}

/// Full evaluation of every source against the gauge on the common mask.
pub fn evaluate_all(
    gauge: &DailySeries,
    sources: &[(String, DailySeries)],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    let mut all: Vec<&DailySeries> = vec![gauge];
    all.extend(sources.iter().map(|(_, s)| s));
    let masked = common_mask(&all)?;
    let (gauge_m, source_m) = masked.split_first().expect("gauge present");

    let mut warnings = Vec::new();
    let gauge_stats = source_stats("gauge", gauge_m, cfg, &mut warnings);

    let per_source: Vec<Result<(SourceStats, SourceComparison, Vec<String>)>> = sources
        .par_iter()
        .zip(source_m.par_iter())
        .map(|((name, _), s)| {
            let mut w = Vec::new();
            let stats = source_stats(name, s, cfg, &mut w);
            let cmp = compare(&gauge_stats, gauge_m, &stats, s, cfg, &mut w)?;
            Ok((stats, cmp, w))
        })
        .collect();

    let mut stats = Vec::new();
    let mut comparisons = Vec::new();
    for r in per_source {
        let (s, c, w) = r?;
        stats.push(s);
        comparisons.push(c);
        warnings.extend(w);
    }
    Ok(EvalReport {
        start: gauge_m.start(),
        end: gauge_m.end().expect("non-empty"),
        common_days: gauge_m.present_count(),
        t_x: cfg.t_x,
        gauge: gauge_stats,
        sources: stats,
        comparisons,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn common_mask_is_symmetric() {
        let d = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let a = DailySeries::new(d, vec![Some(1.0), None, Some(2.0), Some(3.0)]).unwrap();
        let b = DailySeries::new(
            d.succ_opt().unwrap(),
            vec![Some(1.0), Some(1.0), None, Some(5.0)],
        )
        .unwrap();
        let m = common_mask(&[&a, &b]).unwrap();
        assert_eq!(m[0].start(), m[1].start());
        assert_eq!(m[0].values(), &[None, Some(2.0), None]);
        assert_eq!(m[1].values(), &[None, Some(1.0), None]);
    }

    #[test]
    fn self_comparison_is_ideal() {
        let (truth, _) = generate(&SynthSpec::seasonal(6, 11)).unwrap();
        let r = evaluate_all(
            &truth,
            &[("same".into(), truth.clone())],
            &EvalConfig::default(),
        )
        .unwrap();
        let c = r.comparison("same").unwrap();
        for m in c.monthly.values().chain(c.annual.values()) {
            assert_eq!(m.mean_error, 0.0);
            assert_eq!(m.rmse, 0.0);
            if let Some(r) = m.correlation {
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(c.wet_spell_ks.unwrap().d_statistic, 0.0);
        assert_eq!(c.dry_spell_ks.unwrap().d_statistic, 0.0);
        assert_eq!(c.detection.hss, Some(1.0));
        assert_eq!(c.categorical.hss, Some(1.0));
        for v in c.rmse_curve.values() {
            for x in [v.all, v.wet, v.dry].into_iter().flatten() {
                assert_eq!(x, 0.0);
            }
        }
    }
}
