//! Independent reference implementations used as oracles by the
//! integration and acceptance tests. None of them call into the algorithms
//! they check.

#![allow(dead_code)]

use std::collections::VecDeque;

use lightspan::graph::UnitBallGraph;
use lightspan::metric::{NodeId, PointSet};

pub fn dist(ps: &PointSet, a: NodeId, b: NodeId) -> f64 {
    let (p, q) = (ps.coords(a), ps.coords(b));
    p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// All pairs at distance at most `r`, as `(u, v, w)` with `u < v`.
pub fn brute_pairs(ps: &PointSet, r: f64) -> Vec<(NodeId, NodeId, f64)> {
    let mut out = Vec::new();
    for u in 0..ps.len() {
        for v in u + 1..ps.len() {
            let d = dist(ps, u, v);
            if d <= r {
                out.push((u, v, d));
            }
        }
    }
    out
}

/// Single-source distances by repeated relaxation.
pub fn bellman_ford(n: usize, edges: &[(NodeId, NodeId, f64)], src: NodeId) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    d[src] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, w) in edges {
            if d[u] + w < d[v] {
                d[v] = d[u] + w;
                changed = true;
            }
            if d[v] + w < d[u] {
                d[u] = d[v] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

pub fn floyd_warshall(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        d[u][v] = d[u][v].min(w);
        d[v][u] = d[v][u].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Minimum spanning forest weight of the radius-`r` graph by Prim, restarted
/// in every component.
pub fn prim(ps: &PointSet, r: f64) -> f64 {
    let n = ps.len();
    let mut in_tree = vec![false; n];
    let mut total = 0.0;
    for root in 0..n {
        if in_tree[root] {
            continue;
        }
        let mut key = vec![f64::INFINITY; n];
        key[root] = 0.0;
        loop {
            let next = (0..n).filter(|&v| !in_tree[v] && key[v].is_finite()).min_by(|&a, &b| key[a].total_cmp(&key[b]));
            let Some(u) = next else { break };
            in_tree[u] = true;
            total += key[u];
            for v in 0..n {
                let d = dist(ps, u, v);
                if !in_tree[v] && d <= r && d < key[v] {
                    key[v] = d;
                }
            }
        }
    }
    total
}

/// Connected-component label per node.
pub fn components(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    let mut adj = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = s;
                    q.push_back(v);
                }
            }
        }
    }
    label
}

/// Minimum weight over all edge subsets that connect exactly what the full
/// edge set connects. Exponential; only for a handful of edges.
pub fn brute_force_spanning_weight(n: usize, edges: &[(NodeId, NodeId, f64)]) -> f64 {
    assert!(edges.len() <= 20, "too many edges for enumeration");
    let target = components(n, edges);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        let subset: Vec<_> = (0..edges.len()).filter(|i| mask & (1 << i) != 0).map(|i| edges[i]).collect();
        let w: f64 = subset.iter().map(|e| e.2).sum();
        if w >= best {
            continue;
        }
        if components(n, &subset) == target {
            best = w;
        }
    }
    best
}

/// Greedy t-spanner with a full distance matrix updated after every
/// insertion.
pub fn quadratic_greedy(ps: &PointSet, t: f64, max_len: f64) -> Vec<(NodeId, NodeId)> {
    let n = ps.len();
    let mut pairs: Vec<(f64, NodeId, NodeId)> = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            pairs.push((dist(ps, u, v), u, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let mut kept = Vec::new();
    for (w, u, v) in pairs {
        if w > max_len {
            break;
        }
        if d[u][v] <= t * w {
            continue;
        }
        kept.push((u, v));
        for i in 0..n {
            for j in 0..n {
                let via = (d[i][u] + w + d[v][j]).min(d[i][v] + w + d[u][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    kept.sort_unstable();
    kept
}

/// Proper crossing by solving the 2x2 system for the two segment
/// parameters. Only meaningful for points in general position.
pub fn parametric_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let det = r[0] * (-s[1]) - r[1] * (-s[0]);
    if det.abs() < 1e-15 {
        return false;
    }
    let q = [c[0] - a[0], c[1] - a[1]];
    let lambda = (q[0] * (-s[1]) - q[1] * (-s[0])) / det;
    let mu = (r[0] * q[1] - r[1] * q[0]) / det;
    lambda > 0.0 && lambda < 1.0 && mu > 0.0 && mu < 1.0
}

/// Counts proper crossings among segments with a left-to-right sweep: a
/// segment is tested only against segments still active when it starts.
pub fn sweep_crossings(segments: &[([f64; 2], [f64; 2], [NodeId; 2])]) -> usize {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    let left = |i: usize| segments[i].0[0].min(segments[i].1[0]);
    let right = |i: usize| segments[i].0[0].max(segments[i].1[0]);
    order.sort_by(|&a, &b| left(a).total_cmp(&left(b)));
    let mut active: Vec<usize> = Vec::new();
    let mut count = 0;
    for i in order {
        active.retain(|&j| right(j) >= left(i));
        for &j in &active {
            let (si, sj) = (&segments[i], &segments[j]);
            let shared = si.2.iter().any(|x| sj.2.contains(x));
            if !shared && parametric_cross(si.0, si.1, sj.0, sj.1) {
                count += 1;
            }
        }
        active.push(i);
    }
    count
}

/// Hop distances between all pairs, from Floyd-Warshall on unit weights.
pub fn hop_matrix(g: &UnitBallGraph) -> Vec<Vec<f64>> {
    let mut unit = Vec::new();
    for u in 0..g.len() {
        for v in g.neighbor_ids(u) {
            if u < v {
                unit.push((u, v, 1.0));
            }
        }
    }
    floyd_warshall(g.len(), &unit)
}

/// Independent and dominating in `g`.
pub fn is_maximal_independent(g: &UnitBallGraph, members: &[NodeId]) -> bool {
    let mut inside = vec![false; g.len()];
    for &m in members {
        inside[m] = true;
    }
    (0..g.len()).all(|u| {
        if inside[u] {
            g.neighbor_ids(u).all(|v| !inside[v])
        } else {
            g.neighbor_ids(u).any(|v| inside[v])
        }
    })
}

/// Max over UBG edges of spanner distance over edge length, from an
/// all-pairs table.
pub fn apsp_edge_stretch(g: &UnitBallGraph, spanner: &[(NodeId, NodeId, f64)]) -> f64 {
    let d = floyd_warshall(g.len(), spanner);
    let mut worst = 1.0f64;
    for (u, row) in d.iter().enumerate() {
        for &(v, w) in g.neighbors(u) {
            if v > u && w > 0.0 {
                worst = worst.max(row[v] / w);
            }
        }
    }
    worst
}

pub fn triples(edges: &lightspan::EdgeList) -> Vec<(NodeId, NodeId, f64)> {
    edges.edges().iter().map(|e| (e.u, e.v, e.w)).collect()
}

/// Dense instances with at least one pair at distance in `(1, 1 + eps']`
/// near other points, so the complete-graph greedy keeps long edges.
pub fn long_edge_gadget(seed: u64, eps_prime: f64) -> PointSet {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut xy = Vec::new();
    for k in 0..3 {
        let ox = 4.0 * k as f64;
        let angle: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let len = 1.0 + eps_prime * rng.gen_range(0.05..0.95);
        let (ux, uy) = (ox, 0.0);
        let (vx, vy) = (ox + len * angle.cos(), len * angle.sin());
        xy.push((ux, uy));
        xy.push((vx, vy));
        for (cx, cy) in [(ux, uy), (vx, vy)] {
            for _ in 0..rng.gen_range(0..4) {
                let r = eps_prime * rng.gen::<f64>();
                let a: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                xy.push((cx + r * a.cos(), cy + r * a.sin()));
            }
        }
        for _ in 0..rng.gen_range(0..3) {
            xy.push((ox + rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..1.0)));
        }
    }
    PointSet::from_xy(&xy)
}
