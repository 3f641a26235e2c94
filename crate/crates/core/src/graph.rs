//! Directed sensing graphs and leader-follower structure.
//!
//! An edge `(i, j)` means agent `i` senses agent `j`; `j` is then a neighbor
//! of `i`. A leader-follower graph is acyclic and every agent reaches a single
//! root (the leader) along sensing edges.

use std::fmt;

use crate::error::{Error, Result};

/// 1-based agent index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(usize);

impl AgentId {
    pub fn new(one_based: usize) -> Option<Self> {
        (one_based >= 1).then_some(AgentId(one_based))
    }

    pub fn from_index(zero_based: usize) -> Self {
        AgentId(zero_based + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    edges: Vec<(AgentId, AgentId)>,
    neighbors: Vec<Vec<AgentId>>,
}

pub fn build_digraph(n: usize, edges: &[(usize, usize)]) -> Result<Digraph> {
    if n < 2 {
        return Err(Error::TooFewAgents(n));
    }
    let mut neighbors = vec![Vec::new(); n];
    let mut out = Vec::with_capacity(edges.len());
    for &(i, j) in edges {
        if i < 1 || i > n || j < 1 || j > n {
            return Err(Error::EndpointOutOfRange { i, j, n });
        }
        let (a, b) = (AgentId(i), AgentId(j));
        if i == j {
            return Err(Error::SelfLoop(a));
        }
        let list: &mut Vec<AgentId> = &mut neighbors[i - 1];
        if list.contains(&b) {
            return Err(Error::DuplicateEdge(a, b));
        }
        list.push(b);
        out.push((a, b));
    }
    for list in &mut neighbors {
        list.sort();
    }
    Ok(Digraph { n, edges: out, neighbors })
}

impl Digraph {
    pub fn agent_count(&self) -> usize {
        self.n
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[(AgentId, AgentId)] {
        &self.edges
    }

    /// Neighbor set `N_i`, sorted ascending.
    pub fn neighbors(&self, i: AgentId) -> &[AgentId] {
        &self.neighbors[i.index()]
    }

    pub fn neighbor_count(&self, i: AgentId) -> usize {
        self.neighbors[i.index()].len()
    }

    pub fn neighbor_counts(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: AgentId, j: AgentId) -> bool {
        i.index() < self.n && self.neighbors[i.index()].binary_search(&j).is_ok()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (1..=self.n).map(AgentId)
    }

    /// Edges sorted by (i, j); the canonical order used for logs.
    pub fn sorted_edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut e = self.edges.clone();
        e.sort();
        e
    }

    /// The same graph with agents relabeled by `ordering`.
    pub fn renumbered(&self, ordering: &Ordering) -> Digraph {
        let edges: Vec<(usize, usize)> =
            self.edges.iter().map(|&(i, j)| (ordering.new_of(i).get(), ordering.new_of(j).get())).collect();
        build_digraph(self.n, &edges).expect("relabeling preserves validity")
    }
}

/// A relabeling of agents. Position `k` holds the original id that receives
/// the new id `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    originals: Vec<AgentId>,
    new_ids: Vec<AgentId>,
}

impl Ordering {
    fn from_originals(originals: Vec<AgentId>) -> Self {
        let mut new_ids = vec![AgentId(1); originals.len()];
        for (k, orig) in originals.iter().enumerate() {
            new_ids[orig.index()] = AgentId::from_index(k);
        }
        Ordering { originals, new_ids }
    }

    pub fn new_of(&self, original: AgentId) -> AgentId {
        self.new_ids[original.index()]
    }

    pub fn original_of(&self, new: AgentId) -> AgentId {
        self.originals[new.index()]
    }

    /// Original ids in their new order; the first entry is the leader.
    pub fn originals(&self) -> &[AgentId] {
        &self.originals
    }

    pub fn is_identity(&self) -> bool {
        self.originals.iter().enumerate().all(|(k, a)| a.index() == k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureWitness {
    /// Directed cycle, listed from its smallest agent along sensing edges.
    Cycle(Vec<AgentId>),
    /// An agent that cannot reach the root.
    Unreachable(AgentId),
}

impl fmt::Display for FailureWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureWitness::Cycle(c) => {
                let ids: Vec<String> = c.iter().map(ToString::to_string).collect();
                write!(f, "directed cycle ({})", ids.join(","))
            }
            FailureWitness::Unreachable(a) => write!(f, "agent {a} cannot reach the leader"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    pub is_acyclic: bool,
    pub has_spanning_tree: bool,
    pub is_leader_follower: bool,
    pub is_minimal: bool,
    pub leader: Option<AgentId>,
    pub ordering: Option<Ordering>,
    pub failure_witness: Option<FailureWitness>,
}

pub fn validate_leader_follower(g: &Digraph) -> StructureReport {
    let cycle = find_cycle(g);
    let is_acyclic = cycle.is_none();

    let reach_all: Vec<AgentId> = g.agents().filter(|&r| reached_by_all(g, r)).collect();
    let has_spanning_tree = !reach_all.is_empty();
    let root = reach_all.first().copied().unwrap_or_else(|| preferred_root(g));

    let is_leader_follower = is_acyclic && has_spanning_tree && g.neighbors(root).is_empty();
    let is_minimal = is_leader_follower && g.agents().filter(|&a| a != root).all(|a| g.neighbor_count(a) == 1);

    let failure_witness = match cycle {
        Some(c) => Some(FailureWitness::Cycle(c)),
        None if !has_spanning_tree => {
            let reaches = reaching(g, root);
            g.agents().find(|a| !reaches[a.index()]).map(FailureWitness::Unreachable)
        }
        None => None,
    };

    StructureReport {
        is_acyclic,
        has_spanning_tree,
        is_leader_follower,
        is_minimal,
        leader: is_leader_follower.then_some(root),
        ordering: is_leader_follower.then(|| kahn_order(g)),
        failure_witness,
    }
}

/// Numbering with `N_i ⊆ {1, .., i-1}`; ties go to the smallest original id.
pub fn topological_numbering(g: &Digraph) -> Result<Ordering> {
    let report = validate_leader_follower(g);
    match report.ordering {
        Some(o) => Ok(o),
        None => Err(Error::NotLeaderFollower(
            report.failure_witness.map(|w| w.to_string()).unwrap_or_else(|| "leader has neighbors".into()),
        )),
    }
}

/// True when every agent's neighbors carry smaller new ids.
pub fn ordering_respects_neighbors(g: &Digraph, ordering: &Ordering) -> bool {
    g.agents().all(|i| g.neighbors(i).iter().all(|&j| ordering.new_of(j) < ordering.new_of(i)))
}

fn kahn_order(g: &Digraph) -> Ordering {
    let mut placed = vec![false; g.n];
    let mut order = Vec::with_capacity(g.n);
    while order.len() < g.n {
        let next = g
            .agents()
            .find(|&a| !placed[a.index()] && g.neighbors(a).iter().all(|j| placed[j.index()]))
            .expect("acyclic graph always has a ready agent");
        placed[next.index()] = true;
        order.push(next);
    }
    Ordering::from_originals(order)
}

fn preferred_root(g: &Digraph) -> AgentId {
    let first = AgentId(1);
    if g.neighbors(first).is_empty() {
        return first;
    }
    g.agents().find(|&a| g.neighbors(a).is_empty()).unwrap_or(first)
}

/// `reaches[k]` is true when agent `k+1` has a directed path to `root`.
fn reaching(g: &Digraph, root: AgentId) -> Vec<bool> {
    let mut reaches = vec![false; g.n];
    reaches[root.index()] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for a in g.agents() {
            if !reaches[a.index()] && g.neighbors(a).iter().any(|j| reaches[j.index()]) {
                reaches[a.index()] = true;
                changed = true;
            }
        }
    }
    reaches
}

fn reached_by_all(g: &Digraph, root: AgentId) -> bool {
    reaching(g, root).into_iter().all(|r| r)
}

fn find_cycle(g: &Digraph) -> Option<Vec<AgentId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        OnStack,
        Done,
    }
    let mut mark = vec![Mark::New; g.n];
    for start in g.agents() {
        if mark[start.index()] != Mark::New {
            continue;
        }
        // iterative DFS; each frame is (agent, next neighbor position)
        let mut stack: Vec<(AgentId, usize)> = vec![(start, 0)];
        mark[start.index()] = Mark::OnStack;
        while let Some(&mut (a, ref mut pos)) = stack.last_mut() {
            if let Some(&j) = g.neighbors(a).get(*pos) {
                *pos += 1;
                match mark[j.index()] {
                    Mark::New => {
                        mark[j.index()] = Mark::OnStack;
                        stack.push((j, 0));
                    }
                    Mark::OnStack => {
                        let from = stack.iter().position(|&(b, _)| b == j).unwrap();
                        let mut cycle: Vec<AgentId> = stack[from..].iter().map(|&(b, _)| b).collect();
                        let min_at = cycle.iter().enumerate().min_by_key(|(_, a)| **a).unwrap().0;
                        cycle.rotate_left(min_at);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[a.index()] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}
