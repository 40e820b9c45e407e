//! Quarantine of detected cases and their contacts, and global lockdowns
//! driven by the slope of smoothed daily positives.

use serde::{Deserialize, Serialize};

use crate::city::AgentRoster;
use crate::ids::{AgentId, Day};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerParams {
    /// Lockdown starts the day after the chord slope exceeds this.
    pub tau: f64,
    /// Chord length in days.
    pub chord: u32,
    /// Trailing smoothing window in days.
    pub window: u32,
    pub quarantine_days: u32,
    /// Episode length for fixed-duration lockdowns.
    pub lockdown_days: u32,
}

impl Default for TriggerParams {
    fn default() -> Self {
        Self { tau: 0.5, chord: 10, window: 8, quarantine_days: 10, lockdown_days: 14 }
    }
}

impl TriggerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.chord < 1 {
            return Err("chord must be at least 1 day".into());
        }
        if self.window < 1 {
            return Err("window must be at least 1 day".into());
        }
        if !self.tau.is_finite() {
            return Err(format!("tau must be finite, got {}", self.tau));
        }
        if self.lockdown_days < 1 {
            return Err("lockdown_days must be at least 1".into());
        }
        Ok(())
    }
}

/// Per-agent quarantine intervals `[from, until)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantineTable {
    from: Vec<Day>,
    until: Vec<Day>,
}

impl QuarantineTable {
    pub fn new(n: usize) -> Self {
        Self { from: vec![0; n], until: vec![0; n] }
    }

    #[inline]
    pub fn is_quarantined(&self, agent: AgentId, day: Day) -> bool {
        let i = agent.index();
        self.from[i] <= day && day < self.until[i]
    }

    /// First day the agent is free again, if it was ever quarantined.
    pub fn quarantined_until(&self, agent: AgentId) -> Option<Day> {
        let u = self.until[agent.index()];
        (u > 0).then_some(u)
    }

    /// Quarantines `agent` for `[start, end)`. An interval that overlaps or
    /// touches the current one extends it; the end never moves earlier.
    pub fn place(&mut self, agent: AgentId, start: Day, end: Day) {
        if end <= start {
            return;
        }
        let i = agent.index();
        if self.until[i] >= start && self.from[i] <= end && self.until[i] > 0 {
            self.from[i] = self.from[i].min(start);
            self.until[i] = self.until[i].max(end);
        } else {
            self.from[i] = start;
            self.until[i] = end;
        }
    }

    pub fn count_on(&self, day: Day) -> usize {
        self.from.iter().zip(&self.until).filter(|(f, u)| **f <= day && day < **u).count()
    }
}

/// Which agents may meet on a given day.
#[derive(Debug, Clone, Copy)]
pub struct RestrictionView<'a> {
    pub day: Day,
    pub global_lockdown_active: bool,
    quarantine: Option<&'a QuarantineTable>,
}

impl<'a> RestrictionView<'a> {
    pub fn new(day: Day, global_lockdown_active: bool, quarantine: &'a QuarantineTable) -> Self {
        Self { day, global_lockdown_active, quarantine: Some(quarantine) }
    }

    /// Nobody restricted.
    pub fn open(day: Day) -> Self {
        Self { day, global_lockdown_active: false, quarantine: None }
    }

    #[inline]
    pub fn is_restricted(&self, agent: AgentId) -> bool {
        self.global_lockdown_active || self.quarantine.is_some_and(|q| q.is_quarantined(agent, self.day))
    }
}

/// Quarantines each of day `t`'s positives and all of their fixed contacts
/// for `quarantine_days` days starting on `t + 1`.
pub fn quarantine_update(
    table: &mut QuarantineTable,
    new_positives: &[AgentId],
    roster: &AgentRoster,
    t: Day,
    params: &TriggerParams,
) {
    let (start, end) = (t + 1, t + 1 + params.quarantine_days);
    for &a in new_positives {
        table.place(a, start, end);
        for &c in roster.neighborhood_contacts(a).iter().chain(roster.workplace_contacts(a)) {
            table.place(c, start, end);
        }
    }
}

/// Trailing mean of daily positives over `window` days ending at `t`
/// (`daily[0]` is day 1). Before a full window exists the mean runs over days `1..=t`.
pub fn smoothed_positives(daily: &[u32], t: Day, window: u32) -> f64 {
    assert!(t >= 1 && t as usize <= daily.len(), "day {t} outside recorded history");
    let end = t as usize;
    let start = end.saturating_sub(window as usize);
    let slice = &daily[start..end];
    slice.iter().map(|&x| x as f64).sum::<f64>() / slice.len() as f64
}

/// `(P̄(t) − P̄(t − chord)) / chord`; zero while `t <= chord`.
pub fn chord_slope(daily: &[u32], t: Day, params: &TriggerParams) -> f64 {
    if t <= params.chord {
        return 0.0;
    }
    let now = smoothed_positives(daily, t, params.window);
    let then = smoothed_positives(daily, t - params.chord, params.window);
    (now - then) / params.chord as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockdownMode {
    Indefinite,
    Fixed { days: u32 },
}

/// A lockdown covering days `[start, end)`; `end` is `None` when indefinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockdownEpisode {
    pub start: Day,
    pub end: Option<Day>,
}

impl LockdownEpisode {
    pub fn covers(&self, day: Day) -> bool {
        day >= self.start && self.end.map_or(true, |e| day < e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockdownController {
    mode: LockdownMode,
    episodes: Vec<LockdownEpisode>,
}

impl LockdownController {
    pub fn new(mode: LockdownMode) -> Self {
        Self { mode, episodes: Vec::new() }
    }

    pub fn is_active(&self, day: Day) -> bool {
        self.episodes.last().is_some_and(|e| e.covers(day))
    }

    pub fn episodes(&self) -> &[LockdownEpisode] {
        &self.episodes
    }

    /// Evaluates the trigger at the end of day `t`'s testing. While a
    /// lockdown covers day `t` the trigger is not evaluated. Otherwise a slope
    /// strictly above `tau` starts a lockdown on day `t + 1`.
    pub fn evaluate(&mut self, theta: f64, t: Day, tau: f64) -> Option<LockdownEpisode> {
        if self.is_active(t) || theta <= tau {
            return None;
        }
        let start = t + 1;
        let end = match self.mode {
            LockdownMode::Indefinite => None,
            LockdownMode::Fixed { days } => Some(start + days),
        };
        let ep = LockdownEpisode { start, end };
        self.episodes.push(ep);
        Some(ep)
    }
}
