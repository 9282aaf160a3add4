//! Power chains: sequences of trust relationships that let a weak subject
//! reach someone strong enough to neutralize an adversary.
//!
//! A chain follows trust edges from the requester toward a helper, and every
//! subject on it must be strictly stronger against the adversary than the one
//! that asked it for help. The search returns a chain with the fewest hops;
//! ties go to the chain whose least willing link is most willing, then to the
//! lexicographically smallest sequence of labels.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node bound for the exhaustive oracle.
pub const BRUTEFORCE_NODE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subject {
    pub name: String,
    /// Power against each named adversary.
    pub strength: BTreeMap<String, f64>,
}

/// `requester` can ask `helper` for help.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustEdge {
    pub requester: String,
    pub helper: String,
    pub willingness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct TrustGraph {
    // sorted by name, so comparing ids compares labels
    subjects: Vec<Subject>,
    index: BTreeMap<String, usize>,
    // adjacency by requester id: (helper id, willingness), sorted by helper id
    out: Vec<Vec<(usize, f64)>>,
    edges: Vec<TrustEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: Vec<Subject>,
    #[serde(default)]
    edges: Vec<TrustEdge>,
}

impl TryFrom<RawGraph> for TrustGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        TrustGraph::new(raw.nodes, raw.edges)
    }
}

impl From<TrustGraph> for RawGraph {
    fn from(g: TrustGraph) -> Self {
        RawGraph {
            nodes: g.subjects,
            edges: g.edges,
        }
    }
}

impl TrustGraph {
    pub fn new(mut subjects: Vec<Subject>, edges: Vec<TrustEdge>) -> Result<Self> {
        subjects.sort_by(|a, b| a.name.cmp(&b.name));
        let mut index = BTreeMap::new();
        for (i, s) in subjects.iter().enumerate() {
            if index.insert(s.name.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate node `{}`", s.name)));
            }
            if let Some((adv, v)) = s.strength.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "strength of `{}` against `{adv}` must be finite, got {v}",
                    s.name
                )));
            }
        }
        let mut out = vec![Vec::new(); subjects.len()];
        for e in &edges {
            let from = *index
                .get(&e.requester)
                .ok_or_else(|| Error::UnknownNode(e.requester.clone()))?;
            let to = *index
                .get(&e.helper)
                .ok_or_else(|| Error::UnknownNode(e.helper.clone()))?;
            if from == to {
                return Err(Error::InvalidInput(format!("self-loop on `{}`", e.helper)));
            }
            if !(e.willingness > 0.0 && e.willingness <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "willingness of `{}` -> `{}` must lie in (0, 1], got {}",
                    e.requester, e.helper, e.willingness
                )));
            }
            let adj: &mut Vec<(usize, f64)> = &mut out[from];
            match adj.iter_mut().find(|(h, _)| *h == to) {
                // parallel edges collapse onto the most willing one
                Some(slot) => slot.1 = slot.1.max(e.willingness),
                None => adj.push((to, e.willingness)),
            }
        }
        for adj in &mut out {
            adj.sort_by_key(|&(h, _)| h);
        }
        Ok(TrustGraph {
            subjects,
            index,
            out,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn edges(&self) -> &[TrustEdge] {
        &self.edges
    }

    fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_owned()))
    }

    fn strengths(&self, adversary: &str) -> Result<Vec<f64>> {
        self.subjects
            .iter()
            .map(|s| {
                s.strength
                    .get(adversary)
                    .copied()
                    .ok_or_else(|| Error::MissingStrength {
                        node: s.name.clone(),
                        adversary: adversary.to_owned(),
                    })
            })
            .collect()
    }

    pub fn willingness(&self, requester: &str, helper: &str) -> Option<f64> {
        let (from, to) = (self.id(requester).ok()?, self.id(helper).ok()?);
        self.out[from]
            .iter()
            .find(|(h, _)| *h == to)
            .map(|&(_, w)| w)
    }

    pub fn strength_vs(&self, node: &str, adversary: &str) -> Option<f64> {
        let id = self.id(node).ok()?;
        self.subjects[id].strength.get(adversary).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerChain {
    /// From the weak requester to the terminal helper.
    pub path: Vec<String>,
    pub terminal_strength: f64,
    /// Least willingness along the chain; `None` for a zero-hop chain.
    pub bottleneck_willingness: Option<f64>,
}

impl PowerChain {
    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }
}

pub fn find_power_chain(
    g: &TrustGraph,
    weak: &str,
    adversary: &str,
    threshold: f64,
) -> Result<PowerChain> {
    if !threshold.is_finite() {
        return Err(Error::InvalidInput(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    let start = g.id(weak)?;
    let strengths = g.strengths(adversary)?;
    let strength: &[f64] = &strengths;
    let n = g.node_count();
    let no_chain = || Error::NoChain {
        from: weak.to_owned(),
        adversary: adversary.to_owned(),
        threshold,
    };
    let qualifies = |v: usize| strength[v] >= threshold;
    let admissible = |u: usize| {
        g.out[u]
            .iter()
            .copied()
            .filter(move |&(v, _)| strength[v] > strength[u])
    };

    if qualifies(start) {
        return Ok(PowerChain {
            path: vec![weak.to_owned()],
            terminal_strength: strength[start],
            bottleneck_willingness: None,
        });
    }

    // Hop distances over admissible edges, stopping at the first layer that
    // holds a qualifying helper.
    let mut dist = vec![usize::MAX; n];
    let mut layers: Vec<Vec<usize>> = vec![vec![start]];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut depth = None;
    while let Some(u) = queue.pop_front() {
        if depth.is_some_and(|d| dist[u] >= d) {
            break;
        }
        for (v, _) in admissible(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                if layers.len() <= dist[v] {
                    layers.push(Vec::new());
                }
                layers[dist[v]].push(v);
                if qualifies(v) && depth.is_none() {
                    depth = Some(dist[v]);
                }
                queue.push_back(v);
            }
        }
    }
    let depth = depth.ok_or_else(no_chain)?;
    let dist: &[usize] = &dist;
    let layered = |u: usize| admissible(u).filter(move |&(v, _)| dist[v] == dist[u] + 1);
    let is_terminal = |v: usize| dist[v] == depth && qualifies(v);

    // Best achievable bottleneck over shortest chains.
    let mut reach = vec![f64::NEG_INFINITY; n];
    reach[start] = f64::INFINITY;
    for layer in &layers[..depth] {
        for &u in layer {
            for (v, w) in layered(u) {
                reach[v] = reach[v].max(reach[u].min(w));
            }
        }
    }
    let best = (0..n)
        .filter(|&v| is_terminal(v))
        .map(|v| reach[v])
        .fold(f64::NEG_INFINITY, f64::max);

    // Which nodes still lead to a terminal using links at least that willing.
    let mut leads = vec![false; n];
    for layer in layers[..=depth].iter().rev() {
        for &u in layer {
            leads[u] = is_terminal(u) || layered(u).any(|(v, w)| w >= best && leads[v]);
        }
    }

    // Greedy walk picks the smallest label at each hop.
    let mut path = vec![start];
    let mut cur = start;
    while dist[cur] < depth {
        cur = layered(cur)
            .filter(|&(v, w)| w >= best && leads[v])
            .map(|(v, _)| v)
            .min()
            .expect("a leading node has a leading successor");
        path.push(cur);
    }
    Ok(PowerChain {
        path: path.iter().map(|&i| g.subjects[i].name.clone()).collect(),
        terminal_strength: strength[cur],
        bottleneck_willingness: Some(best),
    })
}

/// Exhaustive oracle: does any simple path from `weak` form a valid chain?
pub fn chain_exists_bruteforce(
    g: &TrustGraph,
    weak: &str,
    adversary: &str,
    threshold: f64,
) -> Result<bool> {
    if g.node_count() > BRUTEFORCE_NODE_LIMIT {
        return Err(Error::TooLarge {
            nodes: g.node_count(),
            limit: BRUTEFORCE_NODE_LIMIT,
        });
    }
    let mut found = false;
    for_each_simple_path(g, weak, &mut |path| {
        if is_valid_chain(g, path, adversary, threshold) {
            found = true;
        }
    })?;
    Ok(found)
}

/// Calls `visit` with every simple path (as node labels) starting at `from`,
/// including the zero-hop path.
pub fn for_each_simple_path(
    g: &TrustGraph,
    from: &str,
    visit: &mut dyn FnMut(&[String]),
) -> Result<()> {
    fn walk(
        g: &TrustGraph,
        u: usize,
        on_path: &mut [bool],
        path: &mut Vec<String>,
        visit: &mut dyn FnMut(&[String]),
    ) {
        visit(path);
        for &(v, _) in &g.out[u] {
            if !on_path[v] {
                on_path[v] = true;
                path.push(g.subjects[v].name.clone());
                walk(g, v, on_path, path, visit);
                path.pop();
                on_path[v] = false;
            }
        }
    }
    let start = g.id(from)?;
    let mut on_path = vec![false; g.node_count()];
    on_path[start] = true;
    walk(g, start, &mut on_path, &mut vec![from.to_owned()], visit);
    Ok(())
}

/// Checks every chain condition on an explicit path of labels.
pub fn is_valid_chain(g: &TrustGraph, path: &[String], adversary: &str, threshold: f64) -> bool {
    let Some(last) = path.last() else {
        return false;
    };
    let strengths: Option<Vec<f64>> = path.iter().map(|n| g.strength_vs(n, adversary)).collect();
    let Some(strengths) = strengths else {
        return false;
    };
    path.windows(2)
        .all(|w| g.willingness(&w[0], &w[1]).is_some())
        && strengths.windows(2).all(|s| s[0] < s[1])
        && g.strength_vs(last, adversary)
            .is_some_and(|s| s >= threshold)
}
