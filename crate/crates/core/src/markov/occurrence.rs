//! Transition targets, the recursive model rain-day indicator and the damped
//! fixed-point calibration of the state-conditional thresholds.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::CalibrationConfig;
use crate::error::{Error, Result};
use crate::series::{DailySeries, IndicatorSeries, PeriodId, PeriodScheme, WetState};
use crate::stats::{sorted_present, threshold_for_frequency_sorted};

/// Observed unconditional and conditional rain-day probabilities of one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodTargets {
    pub p0: f64,
    /// Absent when no day in the period follows a wet day.
    pub pw: Option<f64>,
    /// Absent when no day in the period follows a dry day.
    pub pd: Option<f64>,
    pub n0: usize,
    pub nw: usize,
    pub nd: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionTargets {
    pub periods: BTreeMap<PeriodId, PeriodTargets>,
}

/// Calibrated thresholds of one period with their diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodThresholds {
    pub t0: f64,
    pub tw: f64,
    pub td: f64,
    pub achieved_pw: Option<f64>,
    pub achieved_pd: Option<f64>,
    /// Generated rain-day frequency over all present days of the period.
    pub achieved_p0: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub tw_frozen: bool,
    #[serde(default)]
    pub td_frozen: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PeriodThresholds {
    /// All three thresholds equal; the chain reduces to a single cut.
    pub fn collapsed(t: f64) -> Self {
        Self {
            t0: t,
            tw: t,
            td: t,
            achieved_pw: None,
            achieved_pd: None,
            achieved_p0: 0.0,
            iterations: 0,
            converged: false,
            tw_frozen: false,
            td_frozen: false,
            warnings: vec![],
        }
    }

    /// Threshold applying after a day in `prev` state.
    pub fn for_state(&self, prev: WetState) -> f64 {
        match prev {
            WetState::Wet => self.tw,
            WetState::Dry => self.td,
            WetState::Missing => self.t0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct McThresholds {
    pub periods: BTreeMap<PeriodId, PeriodThresholds>,
}

impl McThresholds {
    pub(crate) fn get(&self, m: PeriodId) -> Result<&PeriodThresholds> {
        self.periods
            .get(&m)
            .ok_or_else(|| Error::Mismatch(format!("no calibrated thresholds for period {m}")))
    }
}

/// Counts behind the conditional frequencies of a state sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OccurrenceSummary {
    /// Days with both a present state and a present previous state.
    pub usable: usize,
    pub wet_lag: usize,
    pub wet_after_wet: usize,
    pub dry_lag: usize,
    pub wet_after_dry: usize,
}

impl OccurrenceSummary {
    pub fn add(&mut self, state: WetState, lag: WetState) {
        if !state.is_present() {
            return;
        }
        match lag {
            WetState::Wet => {
                self.usable += 1;
                self.wet_lag += 1;
                self.wet_after_wet += state.is_wet() as usize;
            }
            WetState::Dry => {
                self.usable += 1;
                self.dry_lag += 1;
                self.wet_after_dry += state.is_wet() as usize;
            }
            WetState::Missing => {}
        }
    }

    pub fn pw(&self) -> Option<f64> {
        (self.wet_lag > 0).then(|| self.wet_after_wet as f64 / self.wet_lag as f64)
    }

    pub fn pd(&self) -> Option<f64> {
        (self.dry_lag > 0).then(|| self.wet_after_dry as f64 / self.dry_lag as f64)
    }

    /// Fraction of usable days with a wet previous day.
    pub fn q(&self) -> Option<f64> {
        (self.usable > 0).then(|| self.wet_lag as f64 / self.usable as f64)
    }

    /// Wet fraction over usable days.
    pub fn p0(&self) -> Option<f64> {
        (self.usable > 0)
            .then(|| (self.wet_after_wet + self.wet_after_dry) as f64 / self.usable as f64)
    }
}

/// `p0 = pd / (1 - pw + pd)`, the stationary wet probability of the chain.
pub fn stationarity_p0(pw: f64, pd: f64) -> Result<f64> {
    let denom = 1.0 - pw + pd;
    if denom == 0.0 {
        return Err(Error::Domain(format!(
            "1 - pw + pd = 0 for pw = {pw}, pd = {pd}"
        )));
    }
    Ok(pd / denom)
}

/// Observed targets of period `m`. Days whose previous state is missing are
/// left out of the conditional estimates.
pub fn estimate_transition_targets(
    obs_indicator: &IndicatorSeries,
    obs_lagged: &[WetState],
    scheme: &PeriodScheme,
    m: PeriodId,
) -> PeriodTargets {
    let mut summary = OccurrenceSummary::default();
    let (mut n0, mut wet0) = (0usize, 0usize);
    for (i, (&state, &lag)) in obs_indicator.states().iter().zip(obs_lagged).enumerate() {
        if scheme.period_of(obs_indicator.date(i)) != m || !state.is_present() {
            continue;
        }
        n0 += 1;
        wet0 += state.is_wet() as usize;
        summary.add(state, lag);
    }
    PeriodTargets {
        p0: if n0 > 0 { wet0 as f64 / n0 as f64 } else { 0.0 },
        pw: summary.pw(),
        pd: summary.pd(),
        n0,
        nw: summary.wet_lag,
        nd: summary.dry_lag,
    }
}

/// Targets for every period that has at least one observed day.
pub fn estimate_all_targets(
    obs_indicator: &IndicatorSeries,
    obs_lagged: &[WetState],
    scheme: &PeriodScheme,
) -> TransitionTargets {
    TransitionTargets {
        periods: scheme
            .periods()
            .map(|m| {
                (
                    m,
                    estimate_transition_targets(obs_indicator, obs_lagged, scheme, m),
                )
            })
            .filter(|(_, t)| t.n0 > 0)
            .collect(),
    }
}

/// Runs the recursive indicator over one contiguous run of values.
pub(crate) fn generate_states(
    values: &[Option<f64>],
    thresholds: &PeriodThresholds,
    carry_in: WetState,
    out: &mut Vec<WetState>,
) {
    let mut prev = carry_in;
    for v in values {
        let state = match v {
            None => WetState::Missing,
            Some(y) => {
                if *y > thresholds.for_state(prev) {
                    WetState::Wet
                } else {
                    WetState::Dry
                }
            }
        };
        out.push(state);
        prev = state;
    }
}

/// Recursive model rain-day indicator over the whole series.
///
/// Each day is tested against the threshold selected by the previous day's
/// state (wet, dry, or missing/unknown); the state carries across period
/// boundaries. `carry_in` is the state assumed before the first day.
pub fn generate_indicator(
    model: &DailySeries,
    thresholds: &McThresholds,
    scheme: &PeriodScheme,
    carry_in: WetState,
) -> Result<IndicatorSeries> {
    let mut states = Vec::with_capacity(model.len());
    let mut prev = carry_in;
    for (i, v) in model.values().iter().enumerate() {
        let state = match v {
            None => WetState::Missing,
            Some(y) => {
                let th = thresholds.get(scheme.period_of(model.date(i)))?;
                if *y > th.for_state(prev) {
                    WetState::Wet
                } else {
                    WetState::Dry
                }
            }
        };
        states.push(state);
        prev = state;
    }
    Ok(IndicatorSeries::new(model.start(), states))
}

/// Within-period previous-day model states implied by `thresholds`: each
/// period block restarts from a missing state. Days outside any calibrated
/// period are reported as missing.
pub fn block_lagged_states(
    model: &DailySeries,
    thresholds: &McThresholds,
    scheme: &PeriodScheme,
) -> Vec<WetState> {
    let mut lags = vec![WetState::Missing; model.len()];
    let mut buf = Vec::new();
    for (&m, th) in &thresholds.periods {
        for block in scheme.period_blocks(model.start(), model.len(), m) {
            buf.clear();
            generate_states(
                &model.values()[block.clone()],
                th,
                WetState::Missing,
                &mut buf,
            );
            for (k, i) in block.clone().enumerate().skip(1) {
                lags[i] = buf[k - 1];
            }
        }
    }
    lags
}

struct PeriodData<'a> {
    blocks: Vec<&'a [Option<f64>]>,
    sorted: Vec<f64>,
}

impl<'a> PeriodData<'a> {
    fn new(model: &'a DailySeries, blocks: &[Range<usize>]) -> Self {
        let blocks: Vec<&[Option<f64>]> =
            blocks.iter().map(|r| &model.values()[r.clone()]).collect();
        let all: Vec<f64> = blocks
            .iter()
            .flat_map(|b| b.iter().flatten().copied())
            .collect();
        Self {
            blocks,
            sorted: sorted_present(&all),
        }
    }

    /// Generates every block and splits the values by previous state.
    fn evaluate(
        &self,
        th: &PeriodThresholds,
        wet_lag: &mut Vec<f64>,
        dry_lag: &mut Vec<f64>,
    ) -> (OccurrenceSummary, usize, usize) {
        wet_lag.clear();
        dry_lag.clear();
        let mut summary = OccurrenceSummary::default();
        let (mut present, mut wet) = (0usize, 0usize);
        let mut states = Vec::new();
        for block in &self.blocks {
            states.clear();
            generate_states(block, th, WetState::Missing, &mut states);
            let mut prev = WetState::Missing;
            for (v, &s) in block.iter().zip(&states) {
                if let Some(y) = v {
                    present += 1;
                    wet += s.is_wet() as usize;
                    match prev {
                        WetState::Wet => wet_lag.push(*y),
                        WetState::Dry => dry_lag.push(*y),
                        WetState::Missing => {}
                    }
                }
                summary.add(s, prev);
                prev = s;
            }
        }
        (summary, present, wet)
    }
}

/// Indices of the model days in period `m`, grouped in contiguous blocks.
fn blocks_for(model: &DailySeries, scheme: &PeriodScheme, m: PeriodId) -> Vec<Range<usize>> {
    scheme.period_blocks(model.start(), model.len(), m)
}

/// Threshold updates below this size count as negligible.
const STALL_TOLERANCE_MM: f64 = 1e-9;

/// Damped fixed-point calibration of `(tw, td)` for one period.
pub fn calibrate_period(
    model: &DailySeries,
    targets: &PeriodTargets,
    scheme: &PeriodScheme,
    m: PeriodId,
    cfg: &CalibrationConfig,
) -> Result<PeriodThresholds> {
    cfg.validate()?;
    let blocks = blocks_for(model, scheme, m);
    let data = PeriodData::new(model, &blocks);
    if data.sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let t0 = threshold_for_frequency_sorted(&data.sorted, targets.p0)?;
    let mut th = PeriodThresholds::collapsed(t0);
    let mut warnings = Vec::new();
    let eps = cfg.epsilon;

    let (mut frozen_w, mut frozen_d) = (targets.pw.is_none(), targets.pd.is_none());
    if frozen_w {
        warnings.push("no observed wet-to-next-day pairs; tw fixed at t0".to_string());
    }
    if frozen_d {
        warnings.push("no observed dry-to-next-day pairs; td fixed at t0".to_string());
    }

    let (mut wet_lag, mut dry_lag) = (Vec::new(), Vec::new());
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;
    let mut last = (OccurrenceSummary::default(), 0usize, 0usize);

    while iterations < cfg.max_iterations {
        iterations += 1;
        last = data.evaluate(&th, &mut wet_lag, &mut dry_lag);
        let (summary, _, _) = last;

        let mut refrozen = false;
        if !frozen_w && wet_lag.len() < cfg.min_conditional_n {
            frozen_w = true;
            refrozen = true;
            th.tw = t0;
            warnings.push(format!(
                "only {} model days follow a wet day (< {}); tw fixed at t0",
                wet_lag.len(),
                cfg.min_conditional_n
            ));
        }
        if !frozen_d && dry_lag.len() < cfg.min_conditional_n {
            frozen_d = true;
            refrozen = true;
            th.td = t0;
            warnings.push(format!(
                "only {} model days follow a dry day (< {}); td fixed at t0",
                dry_lag.len(),
                cfg.min_conditional_n
            ));
        }
        if refrozen {
            continue;
        }

        let (hat_w, hat_d) = (summary.pw(), summary.pd());
        let close = |hat: Option<f64>, target: Option<f64>| match (hat, target) {
            (Some(h), Some(t)) => (h - t).abs() < eps,
            _ => false,
        };
        let ok_w = frozen_w || close(hat_w, targets.pw);
        let ok_d = frozen_d || close(hat_d, targets.pd);
        if ok_w && ok_d {
            converged = !frozen_w && !frozen_d;
            break;
        }
        if iterations == cfg.max_iterations {
            break;
        }

        let (tw_old, td_old) = (th.tw, th.td);
        if let (false, Some(pw)) = (frozen_w, targets.pw) {
            let target = threshold_for_frequency_sorted(&sorted_present(&wet_lag), pw)?;
            th.tw = ((1.0 - cfg.lambda) * th.tw + cfg.lambda * target).max(0.0);
        }
        if let (false, Some(pd)) = (frozen_d, targets.pd) {
            let target = threshold_for_frequency_sorted(&sorted_present(&dry_lag), pd)?;
            th.td = ((1.0 - cfg.lambda) * th.td + cfg.lambda * target).max(0.0);
        }
        if (th.tw - tw_old).abs() < STALL_TOLERANCE_MM
            && (th.td - td_old).abs() < STALL_TOLERANCE_MM
        {
            stalled = true;
            break;
        }
    }

    // Make the reported frequencies describe the final thresholds.
    if !converged {
        last = data.evaluate(&th, &mut wet_lag, &mut dry_lag);
    }
    let (summary, present, wet) = last;
    th.achieved_pw = summary.pw();
    th.achieved_pd = summary.pd();
    th.achieved_p0 = if present > 0 {
        wet as f64 / present as f64
    } else {
        0.0
    };
    th.iterations = iterations;
    th.converged = converged;
    th.tw_frozen = frozen_w;
    th.td_frozen = frozen_d;
    if stalled {
        warnings.push(format!(
            "iteration stalled after {iterations} iterations before reaching tolerance"
        ));
    } else if !converged && !(frozen_w || frozen_d) {
        warnings.push(format!(
            "no convergence within {} iterations",
            cfg.max_iterations
        ));
    }
    th.warnings = warnings;
    Ok(th)
}

/// Calibrates every period present in both `targets` and the model series.
pub fn calibrate_mc_thresholds(
    model: &DailySeries,
    targets: &TransitionTargets,
    scheme: &PeriodScheme,
    cfg: &CalibrationConfig,
) -> Result<McThresholds> {
    let mut periods = BTreeMap::new();
    for (&m, t) in &targets.periods {
        match calibrate_period(model, t, scheme, m, cfg) {
            Ok(th) => {
                periods.insert(m, th);
            }
            Err(Error::EmptySample) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(McThresholds { periods })
}
