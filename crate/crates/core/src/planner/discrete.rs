use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::scene::NavGraph;

use super::{PlanError, PlanResult};

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra over the viewpoint graph; ties resolve toward smaller ids.
pub fn graph_shortest_path(graph: &NavGraph, from: &str, to: &str) -> Option<Vec<String>> {
    if !graph.nodes.contains_key(from) || !graph.nodes.contains_key(to) {
        return None;
    }
    let adj = graph.adjacency();
    let mut dist: BTreeMap<&str, f64> = BTreeMap::new();
    let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(Reverse((Dist(0.0), from)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if dist.get(u).is_some_and(|best| d > *best) {
            continue;
        }
        if u == to {
            let mut path = vec![to.to_string()];
            let mut cur = to;
            while let Some(p) = prev.get(cur) {
                path.push(p.to_string());
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if dist.get(v).is_none_or(|old| nd < *old) {
                dist.insert(v, nd);
                prev.insert(v, u);
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    None
}

/// Snaps each waypoint to its nearest viewpoint, drops repeats, and bridges
/// non-adjacent consecutive viewpoints with shortest graph paths.
pub fn map_to_discrete(
    path: &PlanResult,
    graph: &NavGraph,
    snap_radius: f64,
) -> Result<Vec<String>, PlanError> {
    if graph.is_empty() {
        return Err(PlanError::EmptyNavGraph);
    }
    let mut snapped: Vec<&str> = Vec::new();
    for (index, w) in path.waypoints.iter().enumerate() {
        let (id, d) = graph.nearest(w).expect("graph is non-empty");
        if d > snap_radius {
            return Err(PlanError::NoNodeNear {
                index,
                position: *w,
                radius: snap_radius,
            });
        }
        if snapped.last() != Some(&id) {
            snapped.push(id);
        }
    }
    let mut out: Vec<String> = Vec::new();
    for (k, id) in snapped.iter().enumerate() {
        if k > 0 && !graph.has_edge(snapped[k - 1], id) {
            let bridge = graph_shortest_path(graph, snapped[k - 1], id)
                .ok_or_else(|| PlanError::Disconnected(snapped[k - 1].to_string(), id.to_string()))?;
            out.extend(bridge[1..bridge.len() - 1].iter().cloned());
        }
        out.push(id.to_string());
    }
    Ok(out)
}
