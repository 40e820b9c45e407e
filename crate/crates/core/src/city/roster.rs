use log::warn;

use super::model::CityModel;
use crate::epidemic::SimParams;
use crate::error::{Error, Result};
use crate::ids::{AgentId, DestinationId, LocalityId};
use crate::rng::{Purpose, RunRng};
use crate::sampling::subset_excluding;

/// Static attributes of an agent. Contact lists live in the roster;
/// epidemic state lives in [`crate::epidemic::AgentStates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    pub home: LocalityId,
    /// `None` is the no-visit slot.
    pub visit_place: Option<DestinationId>,
}

/// Adjacency lists in compressed row form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContactLists {
    offsets: Vec<usize>,
    targets: Vec<AgentId>,
}

impl ContactLists {
    /// Symmetric closure of directed draws `(from, to)`, sorted and deduplicated per agent.
    fn symmetric(n: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        let reversed: Vec<(u32, u32)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        pairs.extend(reversed);
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self { offsets, targets: pairs.into_iter().map(|(_, b)| AgentId(b)).collect() }
    }

    pub fn get(&self, agent: AgentId) -> &[AgentId] {
        &self.targets[self.offsets[agent.index()]..self.offsets[agent.index() + 1]]
    }

    /// Number of (directed) entries; twice the number of undirected links.
    pub fn total(&self) -> usize {
        self.targets.len()
    }
}

/// The residents of a neighborhood, as a union of contiguous agent ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    spans: Vec<(u32, u32)>,
    len: usize,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The `k`-th resident, `k < len()`.
    #[inline]
    pub fn get(&self, mut k: usize) -> AgentId {
        for &(start, len) in &self.spans {
            if k < len as usize {
                return AgentId(start + k as u32);
            }
            k -= len as usize;
        }
        panic!("neighborhood index out of range");
    }

    /// Inverse of [`Neighborhood::get`].
    pub fn position(&self, agent: AgentId) -> Option<usize> {
        let mut base = 0usize;
        for &(start, len) in &self.spans {
            if agent.0 >= start && agent.0 < start + len {
                return Some(base + (agent.0 - start) as usize);
            }
            base += len as usize;
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.spans.iter().flat_map(|&(s, l)| (s..s + l).map(AgentId))
    }
}

/// The synthetic population with its fixed contact structure.
///
/// Agents are numbered so that each locality's residents form one contiguous
/// id range; `agents-by-locality` is therefore an offset table.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRoster {
    agents: Vec<Agent>,
    locality_offsets: Vec<u32>,
    neighborhoods: Vec<Neighborhood>,
    by_visit: Vec<Vec<AgentId>>,
    neighborhood_contacts: ContactLists,
    workplace_contacts: ContactLists,
}

/// Largest-remainder apportionment of `n` over `weights`; ties go to the lower index.
pub fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    // float floors can undershoot by more than the locality count only with absurd inputs
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Populates `city` with `n` agents and draws their fixed contacts.
///
/// Each agent draws `k_nf` neighborhood contacts and, if it has a visit place,
/// `k_wf` workplace contacts, without replacement. Lists are then closed under
/// symmetry, so they can exceed the nominal sizes.
pub fn build_roster(city: &CityModel, n: usize, params: &SimParams, seed: u64) -> Result<AgentRoster> {
    if n == 0 {
        return Err(Error::InvalidConfig("agent count must be at least 1".into()));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidConfig(format!("agent count {n} exceeds u32 range")));
    }
    let rng = RunRng::new(seed);
    let counts = apportion(n, city.populations());

    let mut locality_offsets = Vec::with_capacity(city.len() + 1);
    locality_offsets.push(0u32);
    let mut agents = Vec::with_capacity(n);
    let od = city.od_matrix();
    for loc in city.localities() {
        for _ in 0..counts[loc.index()] {
            let id = AgentId::from_index(agents.len());
            let mut s = rng.stream(Purpose::VisitPlace, 0, id.0 as u64);
            agents.push(Agent { id, home: loc, visit_place: od.sample(loc.index(), &mut s) });
        }
        locality_offsets.push(agents.len() as u32);
    }

    let neighborhoods: Vec<Neighborhood> = city
        .localities()
        .map(|loc| {
            let spans: Vec<(u32, u32)> = city
                .adjacency(loc)
                .iter()
                .map(|l| {
                    let (a, b) = (locality_offsets[l.index()], locality_offsets[l.index() + 1]);
                    (a, b - a)
                })
                .filter(|&(_, len)| len > 0)
                .collect();
            let len = spans.iter().map(|&(_, l)| l as usize).sum();
            Neighborhood { spans, len }
        })
        .collect();

    let mut by_visit = vec![Vec::new(); city.destinations().len()];
    for a in &agents {
        if let Some(d) = a.visit_place {
            by_visit[d.index()].push(a.id);
        }
    }

    let mut short = 0usize;
    for (loc, hood) in neighborhoods.iter().enumerate() {
        if counts[loc] > 0 && hood.len() < params.k_nf + 1 {
            short += 1;
        }
    }
    if short > 0 {
        warn!(
            "{short} localities have neighborhoods with fewer than {} residents; their agents take every available contact",
            params.k_nf + 1
        );
    }

    let mut nb_pairs = Vec::with_capacity(n * params.k_nf);
    let mut wp_pairs = Vec::with_capacity(n * params.k_wf);
    for a in &agents {
        let hood = &neighborhoods[a.home.index()];
        let me = hood.position(a.id).expect("agent lives in its own neighborhood");
        let mut s = rng.stream(Purpose::FixedNeighborhood, 0, a.id.0 as u64);
        for k in subset_excluding(&mut s, hood.len(), params.k_nf, me) {
            nb_pairs.push((a.id.0, hood.get(k).0));
        }
        if let Some(d) = a.visit_place {
            let peers = &by_visit[d.index()];
            let me = peers.binary_search(&a.id).expect("agent listed at its visit place");
            let mut s = rng.stream(Purpose::FixedWorkplace, 0, a.id.0 as u64);
            for k in subset_excluding(&mut s, peers.len(), params.k_wf, me) {
                wp_pairs.push((a.id.0, peers[k].0));
            }
        }
    }

    Ok(AgentRoster {
        neighborhood_contacts: ContactLists::symmetric(n, nb_pairs),
        workplace_contacts: ContactLists::symmetric(n, wp_pairs),
        agents,
        locality_offsets,
        neighborhoods,
        by_visit,
    })
}

impl AgentRoster {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.index()]
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = AgentId> {
        (0..self.len() as u32).map(AgentId)
    }

    pub fn locality_count(&self) -> usize {
        self.locality_offsets.len() - 1
    }

    /// Residents of `loc` (a contiguous id range).
    pub fn residents(&self, loc: LocalityId) -> impl ExactSizeIterator<Item = AgentId> {
        (self.locality_offsets[loc.index()]..self.locality_offsets[loc.index() + 1]).map(AgentId)
    }

    pub fn resident_count(&self, loc: LocalityId) -> usize {
        (self.locality_offsets[loc.index() + 1] - self.locality_offsets[loc.index()]) as usize
    }

    pub fn neighborhood(&self, loc: LocalityId) -> &Neighborhood {
        &self.neighborhoods[loc.index()]
    }

    pub fn visitors(&self, dest: DestinationId) -> &[AgentId] {
        &self.by_visit[dest.index()]
    }

    pub fn destination_count(&self) -> usize {
        self.by_visit.len()
    }

    pub fn neighborhood_contacts(&self, id: AgentId) -> &[AgentId] {
        self.neighborhood_contacts.get(id)
    }

    pub fn workplace_contacts(&self, id: AgentId) -> &[AgentId] {
        self.workplace_contacts.get(id)
    }

    pub fn neighborhood_links(&self) -> &ContactLists {
        &self.neighborhood_contacts
    }

    pub fn workplace_links(&self) -> &ContactLists {
        &self.workplace_contacts
    }

    /// Full-scan check of every roster invariant. Returns the first violation found.
    pub fn audit(&self, city: &CityModel) -> Result<(), String> {
        if self.locality_count() != city.len() {
            return Err("locality index does not match city".into());
        }
        if *self.locality_offsets.last().unwrap() as usize != self.len() {
            return Err("locality counts do not sum to n".into());
        }
        for a in &self.agents {
            if self.agents[a.id.index()].id != a.id {
                return Err(format!("agent {} stored at wrong index", a.id));
            }
            let (lo, hi) = (self.locality_offsets[a.home.index()], self.locality_offsets[a.home.index() + 1]);
            if !(lo..hi).contains(&a.id.0) {
                return Err(format!("agent {} missing from its locality index", a.id));
            }
            if let Some(d) = a.visit_place {
                if self.visitors(d).binary_search(&a.id).is_err() {
                    return Err(format!("agent {} missing from visit index", a.id));
                }
            }
            for &c in self.neighborhood_contacts(a.id) {
                if c == a.id {
                    return Err(format!("agent {} is its own neighborhood contact", a.id));
                }
                if self.neighborhood_contacts(c).binary_search(&a.id).is_err() {
                    return Err(format!("neighborhood contact {} -> {} not symmetric", a.id, c));
                }
                // either endpoint's draw produced the link, so c lies in a's neighborhood or vice versa;
                // with symmetric adjacency both hold
                if !city.adjacency(a.home).contains(&self.agent(c).home) {
                    return Err(format!("neighborhood contact {} -> {} outside neighborhood", a.id, c));
                }
            }
            for &c in self.workplace_contacts(a.id) {
                if c == a.id {
                    return Err(format!("agent {} is its own workplace contact", a.id));
                }
                if a.visit_place.is_none() || self.agent(c).visit_place != a.visit_place {
                    return Err(format!("workplace contact {} -> {} has a different visit place", a.id, c));
                }
                if self.workplace_contacts(c).binary_search(&a.id).is_err() {
                    return Err(format!("workplace contact {} -> {} not symmetric", a.id, c));
                }
            }
        }
        for (d, list) in self.by_visit.iter().enumerate() {
            if list.iter().any(|id| self.agent(*id).visit_place != Some(DestinationId::from_index(d))) {
                return Err(format!("visit index {d} inconsistent"));
            }
        }
        Ok(())
    }
}

/// Agents living anywhere in `locality`'s neighborhood, in id order.
pub fn neighborhood_residents(roster: &AgentRoster, city: &CityModel, locality: LocalityId) -> Result<Vec<AgentId>> {
    if locality.index() >= city.len() {
        return Err(Error::UnknownLocality(locality.0));
    }
    Ok(roster.neighborhood(locality).iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::{generate_grid_city, GridSpec, WeightFn};

    fn params() -> SimParams {
        SimParams::default()
    }

    #[test]
    fn apportion_is_exact_and_close() {
        let w = [1.0, 2.0, 3.0, 0.0, 0.5];
        let c = apportion(1001, &w);
        assert_eq!(c.iter().sum::<usize>(), 1001);
        for (i, &ci) in c.iter().enumerate() {
            let exact = 1001.0 * w[i] / 6.5;
            assert!((ci as f64 - exact).abs() < 1.0);
        }
        assert_eq!(apportion(3, &[1.0, 1.0, 1.0, 1.0]), vec![1, 1, 1, 0]);
    }

    #[test]
    fn single_agent_has_no_contacts() {
        let city = generate_grid_city(&GridSpec::new(3, 3));
        let r = build_roster(&city, 1, &params(), 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.neighborhood_contacts(AgentId(0)).is_empty());
        assert!(r.workplace_contacts(AgentId(0)).is_empty());
        r.audit(&city).unwrap();
    }

    #[test]
    fn zero_agents_rejected() {
        let city = generate_grid_city(&GridSpec::new(1, 1));
        assert!(build_roster(&city, 0, &params(), 1).is_err());
    }

    #[test]
    fn small_neighborhood_takes_everyone() {
        let city = generate_grid_city(&GridSpec::new(1, 1).with_weights(WeightFn::Uniform).with_visit_fraction(0.0));
        let r = build_roster(&city, 4, &params(), 1).unwrap();
        for id in r.ids() {
            assert_eq!(r.neighborhood_contacts(id).len(), 3);
        }
    }

    #[test]
    fn residents_by_grid_geometry() {
        let city = generate_grid_city(&GridSpec::new(1, 1));
        let r = build_roster(&city, 10, &params(), 1).unwrap();
        assert_eq!(neighborhood_residents(&r, &city, LocalityId(0)).unwrap().len(), 10);
        assert!(neighborhood_residents(&r, &city, LocalityId(1)).is_err());

        let city = generate_grid_city(&GridSpec::new(2, 2).with_weights(WeightFn::Uniform));
        let r = build_roster(&city, 40, &params(), 1).unwrap();
        let res = neighborhood_residents(&r, &city, LocalityId(0)).unwrap();
        assert_eq!(res.len(), 30);
        assert!(res.iter().all(|a| r.agent(*a).home != LocalityId(3)));
    }

    #[test]
    fn roster_is_deterministic_and_valid() {
        let city = generate_grid_city(&GridSpec::new(4, 4).with_seed(3));
        let a = build_roster(&city, 2000, &params(), 11).unwrap();
        let b = build_roster(&city, 2000, &params(), 11).unwrap();
        assert_eq!(a, b);
        a.audit(&city).unwrap();
        let c = build_roster(&city, 2000, &params(), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn neighborhood_position_inverts_get() {
        let city = generate_grid_city(&GridSpec::new(3, 3).with_seed(1));
        let r = build_roster(&city, 300, &params(), 1).unwrap();
        let hood = r.neighborhood(LocalityId(4));
        for k in 0..hood.len() {
            assert_eq!(hood.position(hood.get(k)), Some(k));
        }
    }
}
