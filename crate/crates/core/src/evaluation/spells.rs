//! Wet and dry spells within the October to March window.

use std::ops::Range;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::series::{IndicatorSeries, WetState};

/// Calendar months of the spell window, October to March.
pub const SPELL_MONTHS: [u32; 6] = [10, 11, 12, 1, 2, 3];

pub fn in_spell_window(month: u32) -> bool {
    SPELL_MONTHS.contains(&month)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spell {
    pub state: WetState,
    pub start: usize,
    pub len: usize,
    /// The day before or after the run is missing.
    pub adjacent_missing: bool,
}

/// Maximal runs of one present state within `states`; missing days end a
/// run. Runs touching the slice edges are kept at their truncated length.
pub fn runs(states: &[WetState]) -> Vec<Spell> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i];
        let mut j = i + 1;
        while j < states.len() && states[j] == s {
            j += 1;
        }
        if s.is_present() {
            let before = i > 0 && !states[i - 1].is_present();
            let after = j < states.len() && !states[j].is_present();
            out.push(Spell {
                state: s,
                start: i,
                len: j - i,
                adjacent_missing: before || after,
            });
        }
        i = j;
    }
    out
}

/// Index ranges of each contiguous October to March window in the series.
pub fn spell_windows(indicator: &IndicatorSeries) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut open = None;
    for i in 0..indicator.len() {
        let inside = in_spell_window(indicator.date(i).month());
        match (inside, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push(s..indicator.len());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpellLengths {
    pub wet: Vec<usize>,
    pub dry: Vec<usize>,
}

/// Wet and dry spell lengths over every October to March window. With
/// `discard_adjacent_missing`, runs bordering a missing day are dropped.
pub fn spell_lengths(indicator: &IndicatorSeries, discard_adjacent_missing: bool) -> SpellLengths {
    let mut out = SpellLengths::default();
    for w in spell_windows(indicator) {
        for r in runs(&indicator.states()[w]) {
            if discard_adjacent_missing && r.adjacent_missing {
                continue;
            }
            match r.state {
                WetState::Wet => out.wet.push(r.len),
                WetState::Dry => out.dry.push(r.len),
                WetState::Missing => {}
            }
        }
    }
    out
}

/// Longest dry run in `states`, 0 when there is none.
pub fn longest_dry_spell(states: &[WetState]) -> usize {
    runs(states)
        .iter()
        .filter(|r| r.state == WetState::Dry)
        .map(|r| r.len)
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use WetState::*;

    #[test]
    fn run_extraction() {
        let r = runs(&[Wet, Wet, Dry, Dry, Dry, Wet]);
        let lens: Vec<(WetState, usize)> = r.iter().map(|s| (s.state, s.len)).collect();
        assert_eq!(lens, vec![(Wet, 2), (Dry, 3), (Wet, 1)]);
        let r = runs(&[Wet, Missing, Wet]);
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|s| s.len == 1 && s.adjacent_missing));
    }

    #[test]
    fn window_spells() {
        // 1 Sep 2000 to 30 Apr 2001: the window is 1 Oct to 31 Mar (182 days)
        let start = NaiveDate::from_ymd_opt(2000, 9, 1).unwrap();
        let n = (NaiveDate::from_ymd_opt(2001, 5, 1).unwrap() - start).num_days() as usize;
        let ind = IndicatorSeries::new(start, vec![Dry; n]);
        let s = spell_lengths(&ind, false);
        assert_eq!(s.dry, vec![182]);
        assert!(s.wet.is_empty());
        let ind = IndicatorSeries::new(start, vec![Wet; n]);
        assert_eq!(spell_lengths(&ind, false).wet, vec![182]);
    }

    #[test]
    fn discard_flag() {
        let start = NaiveDate::from_ymd_opt(2000, 10, 1).unwrap();
        let ind = IndicatorSeries::new(start, vec![Wet, Wet, Missing, Dry, Dry, Wet]);
        assert_eq!(spell_lengths(&ind, false).wet, vec![2, 1]);
        let s = spell_lengths(&ind, true);
        assert_eq!(s.wet, vec![1]);
        assert!(s.dry.is_empty());
    }
}
