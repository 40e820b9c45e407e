use crate::error::{Error, Result};
use crate::ids::{AgentId, Day};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestResult {
    Positive,
    Negative,
}

impl TestResult {
    /// Matrix encoding: +1 positive, −1 negative.
    pub fn as_i8(self) -> i8 {
        match self {
            TestResult::Positive => 1,
            TestResult::Negative => -1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == TestResult::Positive
    }
}

/// Test outcomes of every agent on every day.
///
/// Logically an `n × T` matrix over `{0, +1, −1}` with 0 meaning "not
/// tested". Stored sparsely: one sorted result list per day, plus a
/// prior-positive flag per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestingHistory {
    n: usize,
    days: Vec<Vec<(AgentId, TestResult)>>,
    daily_positives: Vec<u32>,
    ever_positive: Vec<bool>,
}

impl TestingHistory {
    pub fn new(n: usize) -> Self {
        Self { n, days: Vec::new(), daily_positives: Vec::new(), ever_positive: vec![false; n] }
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    /// Last day with a slot allocated (recorded or explicitly opened).
    pub fn last_day(&self) -> Day {
        self.days.len() as Day
    }

    fn ensure_day(&mut self, day: Day) {
        assert!(day >= 1, "days start at 1");
        while self.days.len() < day as usize {
            self.days.push(Vec::new());
            self.daily_positives.push(0);
        }
    }

    /// Opens day `day` so it reports zero tests even if nothing is recorded.
    pub fn open_day(&mut self, day: Day) {
        self.ensure_day(day);
    }

    /// Records one outcome. Each `(agent, day)` entry can be set once.
    pub fn record(&mut self, agent: AgentId, day: Day, result: TestResult) -> Result<()> {
        self.ensure_day(day);
        let list = &mut self.days[day as usize - 1];
        match list.binary_search_by_key(&agent, |&(a, _)| a) {
            Ok(_) => return Err(Error::DuplicateTest { agent: agent.0, day }),
            Err(pos) => list.insert(pos, (agent, result)),
        }
        if result.is_positive() {
            self.daily_positives[day as usize - 1] += 1;
            self.ever_positive[agent.index()] = true;
        }
        Ok(())
    }

    /// Matrix entry for `(agent, day)`: 0, +1, or −1.
    pub fn entry(&self, agent: AgentId, day: Day) -> i8 {
        let list = self.results_on(day);
        list.binary_search_by_key(&agent, |&(a, _)| a).map_or(0, |k| list[k].1.as_i8())
    }

    pub fn results_on(&self, day: Day) -> &[(AgentId, TestResult)] {
        if day == 0 {
            return &[];
        }
        self.days.get(day as usize - 1).map_or(&[], Vec::as_slice)
    }

    pub fn positives_on(&self, day: Day) -> impl Iterator<Item = AgentId> + '_ {
        self.results_on(day).iter().filter(|(_, r)| r.is_positive()).map(|&(a, _)| a)
    }

    pub fn tests_on(&self, day: Day) -> usize {
        self.results_on(day).len()
    }

    /// Positive counts per day, `[0]` being day 1.
    pub fn daily_positive_counts(&self) -> &[u32] {
        &self.daily_positives
    }

    pub fn has_positive(&self, agent: AgentId) -> bool {
        self.ever_positive[agent.index()]
    }
}
