//! Closeness graph and its partition into offline social networks (OffSNs).
//!
//! An OffSN is a connected component, of at least two users, of the graph
//! restricted to edges with closeness ≥ w_T. Users left in singleton
//! components form the white area and are served by the eNB only.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::closeness::{closeness, fit_gamma};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::trace::ContactStats;
use crate::{UserId, UserPair};

#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessGraph {
    users: BTreeSet<UserId>,
    edges: BTreeMap<UserPair, f64>,
    positions: BTreeMap<UserId, Point>,
}

impl ClosenessGraph {
    /// Builds a graph from explicit edge weights. Weights must lie in [0, 1]
    /// and every endpoint must have a position.
    pub fn new(positions: BTreeMap<UserId, Point>, edges: BTreeMap<UserPair, f64>) -> Result<Self> {
        for (pair, &w) in &edges {
            for u in [pair.lo(), pair.hi()] {
                if !positions.contains_key(&u) {
                    return Err(Error::UnknownUser(u.0));
                }
            }
            if pair.lo() == pair.hi() {
                return Err(Error::domain(format!("self-loop edge {pair}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::domain(format!("edge {pair} weight {w} outside [0, 1]")));
            }
        }
        Ok(Self {
            users: positions.keys().copied().collect(),
            edges,
            positions,
        })
    }

    pub fn users(&self) -> &BTreeSet<UserId> {
        &self.users
    }

    pub fn edges(&self) -> &BTreeMap<UserPair, f64> {
        &self.edges
    }

    pub fn positions(&self) -> &BTreeMap<UserId, Point> {
        &self.positions
    }

    pub fn weight(&self, a: UserId, b: UserId) -> Option<f64> {
        self.edges.get(&UserPair::new(a, b)).copied()
    }

    pub fn position(&self, user: UserId) -> Option<Point> {
        self.positions.get(&user).copied()
    }

    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "user_a,user_b,w")?;
        for (pair, w) in &self.edges {
            writeln!(out, "{},{},{}", pair.lo(), pair.hi(), w)?;
        }
        Ok(())
    }
}

/// One edge per pair with encounters, weighted by the pair's closeness at
/// the contact time returned by `x_min` for that pair.
pub fn build_graph<F>(
    stats: &BTreeMap<UserPair, ContactStats>,
    positions: &BTreeMap<UserId, Point>,
    mut x_min: F,
) -> Result<ClosenessGraph>
where
    F: FnMut(UserPair) -> f64,
{
    let mut edges = BTreeMap::new();
    for (pair, s) in stats {
        for u in [pair.lo(), pair.hi()] {
            if !positions.contains_key(&u) {
                return Err(Error::UnknownUser(u.0));
            }
        }
        let law = fit_gamma(s)?;
        let w = closeness(&law, x_min(*pair))?;
        edges.insert(*pair, w.value());
    }
    ClosenessGraph::new(positions.clone(), edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsnPartition {
    offsns: Vec<BTreeSet<UserId>>,
    white_area: BTreeSet<UserId>,
    threshold: f64,
    membership: BTreeMap<UserId, usize>,
}

impl OffsnPartition {
    /// OffSNs, ordered by smallest member id.
    pub fn offsns(&self) -> &[BTreeSet<UserId>] {
        &self.offsns
    }

    pub fn white_area(&self) -> &BTreeSet<UserId> {
        &self.white_area
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Index into [`offsns`](Self::offsns) of the OffSN containing `user`.
    pub fn offsn_of(&self, user: UserId) -> Option<usize> {
        self.membership.get(&user).copied()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components over edges with w ≥ `w_t`.
pub fn partition(graph: &ClosenessGraph, w_t: f64) -> OffsnPartition {
    let users: Vec<UserId> = graph.users.iter().copied().collect();
    let index: BTreeMap<UserId, usize> = users.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let mut sets = DisjointSet::new(users.len());
    for (pair, &w) in &graph.edges {
        if w >= w_t {
            sets.union(index[&pair.lo()], index[&pair.hi()]);
        }
    }

    let mut components: BTreeMap<usize, BTreeSet<UserId>> = BTreeMap::new();
    for (i, u) in users.iter().enumerate() {
        components.entry(sets.find(i)).or_default().insert(*u);
    }

    // Roots are the smallest index in each component, so BTreeMap order is
    // already ascending by smallest member.
    let mut offsns = Vec::new();
    let mut white_area = BTreeSet::new();
    let mut membership = BTreeMap::new();
    for members in components.into_values() {
        if members.len() >= 2 {
            for u in &members {
                membership.insert(*u, offsns.len());
            }
            offsns.push(members);
        } else {
            white_area.extend(members);
        }
    }
    OffsnPartition {
        offsns,
        white_area,
        threshold: w_t,
        membership,
    }
}

/// The `ceil(top_fraction · |users|)` most active users, by activity
/// descending and then id ascending.
pub fn frequent_users(activity: &BTreeMap<UserId, u64>, top_fraction: f64) -> Result<Vec<UserId>> {
    if activity.is_empty() {
        return Err(Error::domain("activity map is empty"));
    }
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::domain(format!(
            "top_fraction must be in (0, 1], got {top_fraction}"
        )));
    }
    let mut ranked: Vec<(UserId, u64)> = activity.iter().map(|(u, a)| (*u, *a)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let keep = ((top_fraction * ranked.len() as f64).ceil() as usize).min(ranked.len());
    Ok(ranked.into_iter().take(keep).map(|(u, _)| u).collect())
}

/// Holder with the highest closeness to `requester` among those within
/// `d_max` meters that share an edge with it. Ties go to the lower id.
pub fn best_holder(
    graph: &ClosenessGraph,
    requester: UserId,
    holders: &BTreeSet<UserId>,
    d_max: f64,
) -> Result<Option<UserId>> {
    best_holder_by(graph, requester, holders, d_max, |_, w| Ok(w))
}

/// [`best_holder`] ranked by `score(holder, w)` instead of the edge weight.
pub fn best_holder_by<F>(
    graph: &ClosenessGraph,
    requester: UserId,
    holders: &BTreeSet<UserId>,
    d_max: f64,
    mut score: F,
) -> Result<Option<UserId>>
where
    F: FnMut(UserId, f64) -> Result<f64>,
{
    let origin = graph.position(requester).ok_or(Error::UnknownUser(requester.0))?;
    let mut best: Option<(UserId, f64)> = None;
    for &h in holders {
        if h == requester {
            continue;
        }
        let Some(w) = graph.weight(requester, h) else {
            continue;
        };
        let Some(pos) = graph.position(h) else {
            continue;
        };
        if origin.distance(pos) > d_max {
            continue;
        }
        let s = score(h, w)?;
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((h, s));
        }
    }
    Ok(best.map(|(h, _)| h))
}

/// Reads `user_id,x_m,y_m` rows; header optional.
pub fn parse_positions<R: BufRead>(source: R) -> Result<BTreeMap<UserId, Point>> {
    let mut out = BTreeMap::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let user = fields[0]
            .parse::<u32>()
            .map_err(|_| Error::parse(lineno, format!("invalid user id {:?}", fields[0])))?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(lineno, format!("invalid coordinate {s:?}")))
        };
        let p = Point::new(coord(fields[1])?, coord(fields[2])?);
        if out.insert(UserId(user), p).is_some() {
            return Err(Error::parse(lineno, format!("duplicate user {user}")));
        }
    }
    Ok(out)
}

pub fn write_positions<W: Write>(positions: &BTreeMap<UserId, Point>, mut out: W) -> Result<()> {
    writeln!(out, "user_id,x_m,y_m")?;
    for (u, p) in positions {
        writeln!(out, "{},{},{}", u, p.x, p.y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::ContactStats;

    fn u(i: u32) -> UserId {
        UserId(i)
    }

    fn line_positions(n: u32) -> BTreeMap<UserId, Point> {
        (0..n).map(|i| (u(i), Point::new(10.0 * i as f64, 0.0))).collect()
    }

    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> ClosenessGraph {
        let e = edges.iter().map(|&(a, b, w)| (UserPair::new(u(a), u(b)), w)).collect();
        ClosenessGraph::new(line_positions(n), e).unwrap()
    }

    fn stats(a: u32, b: u32, m: f64, i: f64) -> (UserPair, ContactStats) {
        let pair = UserPair::new(u(a), u(b));
        (
            pair,
            ContactStats {
                pair,
                n_encounters: 4,
                mean_duration: m,
                irregularity: i,
            },
        )
    }

    #[test]
    fn build_graph_examples() {
        let s: BTreeMap<_, _> = [stats(0, 1, 10.0, 25.0)].into();
        let g = build_graph(&s, &line_positions(2), |_| 0.0).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.weight(u(0), u(1)), Some(1.0));

        let g = build_graph(&s, &line_positions(3), |_| 0.0).unwrap();
        assert_eq!(g.weight(u(0), u(2)), None);

        let s: BTreeMap<_, _> = [stats(0, 1, 10.0, 25.0), stats(0, 2, 4.0, 1.0), stats(1, 2, 3.0, 0.0)].into();
        let g = build_graph(&s, &line_positions(3), |_| 3.5).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert!(g.edges().values().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn build_graph_unknown_user() {
        let s: BTreeMap<_, _> = [stats(0, 7, 10.0, 25.0)].into();
        assert!(matches!(
            build_graph(&s, &line_positions(2), |_| 0.0),
            Err(Error::UnknownUser(7))
        ));
    }

    #[test]
    fn complete_graph_is_one_offsn() {
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((a, b, 0.9));
            }
        }
        let p = partition(&graph(5, &edges), 0.5);
        assert_eq!(p.offsns().len(), 1);
        assert_eq!(p.offsns()[0].len(), 5);
        assert!(p.white_area().is_empty());
    }

    #[test]
    fn chain_with_weak_link() {
        let p = partition(&graph(3, &[(0, 1, 0.8), (1, 2, 0.3)]), 0.5);
        assert_eq!(p.offsns(), &[BTreeSet::from([u(0), u(1)])]);
        assert_eq!(p.white_area(), &BTreeSet::from([u(2)]));
        assert_eq!(p.offsn_of(u(1)), Some(0));
        assert_eq!(p.offsn_of(u(2)), None);
    }

    #[test]
    fn nothing_passes() {
        let p = partition(&graph(4, &[(0, 1, 0.8), (2, 3, 1.0)]), 1.01);
        assert!(p.offsns().is_empty());
        assert_eq!(p.white_area().len(), 4);
    }

    #[test]
    fn components_sorted_by_smallest_member() {
        let p = partition(&graph(6, &[(4, 5, 0.9), (1, 3, 0.9), (0, 2, 0.9)]), 0.5);
        let firsts: Vec<UserId> = p.offsns().iter().map(|c| *c.first().unwrap()).collect();
        assert_eq!(firsts, vec![u(0), u(1), u(4)]);
    }

    #[test]
    fn frequent_user_examples() {
        let act: BTreeMap<_, _> = [(u(0), 10), (u(1), 3), (u(2), 7)].into();
        assert_eq!(frequent_users(&act, 1.0 / 3.0).unwrap(), vec![u(0)]);
        assert_eq!(frequent_users(&act, 1.0).unwrap(), vec![u(0), u(2), u(1)]);

        let flat: BTreeMap<_, _> = [(u(2), 5), (u(0), 5), (u(1), 5)].into();
        assert_eq!(frequent_users(&flat, 1.0).unwrap(), vec![u(0), u(1), u(2)]);

        assert!(frequent_users(&BTreeMap::new(), 0.5).is_err());
        assert!(frequent_users(&act, 0.0).is_err());
    }

    #[test]
    fn best_holder_examples() {
        // requester 0 at origin; holder 1 at 30 m (w 0.9), holder 2 at 10 m (w 0.7)
        let positions: BTreeMap<_, _> = [
            (u(0), Point::new(0.0, 0.0)),
            (u(1), Point::new(30.0, 0.0)),
            (u(2), Point::new(0.0, 10.0)),
            (u(3), Point::new(0.0, -10.0)),
        ]
        .into();
        let edges: BTreeMap<_, _> = [
            (UserPair::new(u(0), u(1)), 0.9),
            (UserPair::new(u(0), u(2)), 0.7),
            (UserPair::new(u(0), u(3)), 0.7),
        ]
        .into();
        let g = ClosenessGraph::new(positions, edges).unwrap();
        let holders = BTreeSet::from([u(1), u(2)]);
        assert_eq!(best_holder(&g, u(0), &holders, 80.0).unwrap(), Some(u(1)));
        assert_eq!(best_holder(&g, u(0), &holders, 5.0).unwrap(), None);
        let tied = BTreeSet::from([u(3), u(2)]);
        assert_eq!(best_holder(&g, u(0), &tied, 80.0).unwrap(), Some(u(2)));
        assert!(matches!(
            best_holder(&g, u(9), &holders, 80.0),
            Err(Error::UnknownUser(9))
        ));
    }

    #[test]
    fn best_holder_requires_an_edge() {
        let g = graph(3, &[(0, 1, 0.4)]);
        let holders = BTreeSet::from([u(1), u(2)]);
        assert_eq!(best_holder(&g, u(0), &holders, 100.0).unwrap(), Some(u(1)));
        assert_eq!(best_holder(&g, u(0), &BTreeSet::from([u(2)]), 100.0).unwrap(), None);
    }

    #[test]
    fn positions_csv() {
        let src = "user_id,x_m,y_m\n0,1.5,-2\n3,0,40\n";
        let p = parse_positions(src.as_bytes()).unwrap();
        assert_eq!(p[&u(3)], Point::new(0.0, 40.0));
        let mut buf = Vec::new();
        write_positions(&p, &mut buf).unwrap();
        assert_eq!(parse_positions(buf.as_slice()).unwrap(), p);
        assert!(matches!(
            parse_positions("0,1,1\n0,2,2".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
