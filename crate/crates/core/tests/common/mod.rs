#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;

use netstab::graph::{EdgeAction, EdgeChange, EdgeDelta, Graph, NodeId};

/// Union-find over node ids.
struct Components(Vec<usize>);

impl Components {
    fn new(n: usize) -> Self {
        Components((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

/// Joins the components of an undirected edge set with one random edge each.
fn connect<R: Rng>(n: usize, edges: &mut BTreeSet<(usize, usize)>, rng: &mut R) {
    let mut comp = Components::new(n);
    for &(i, j) in edges.iter() {
        comp.union(i, j);
    }
    let mut roots: Vec<usize> = (0..n).filter(|&i| comp.find(i) == i).collect();
    while roots.len() > 1 {
        let a = roots.pop().unwrap();
        let b = roots[rng.random_range(0..roots.len())];
        let members_a: Vec<usize> = (0..n).filter(|&i| comp.find(i) == a).collect();
        let members_b: Vec<usize> = (0..n).filter(|&i| comp.find(i) == comp.find(b)).collect();
        let u = members_a[rng.random_range(0..members_a.len())];
        let v = members_b[rng.random_range(0..members_b.len())];
        edges.insert((u.min(v), u.max(v)));
        comp.union(u, v);
    }
}

fn undirected(n: usize, edges: BTreeSet<(usize, usize)>) -> Graph {
    Graph::from_edges(n, false, edges.into_iter().map(|(i, j)| (i, j, 1.0))).unwrap()
}

/// Connected Erdos-Renyi graph: G(n, p) plus one edge per extra component.
pub fn erdos_renyi_connected<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.insert((i, j));
            }
        }
    }
    connect(n, &mut edges, rng);
    undirected(n, edges)
}

/// Connected Watts-Strogatz graph: ring lattice with `k` neighbors per side,
/// each edge rewired with probability `beta`.
pub fn small_world<R: Rng>(n: usize, k: usize, beta: f64, rng: &mut R) -> Graph {
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for s in 1..=k {
            let j = (i + s) % n;
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let original: Vec<(usize, usize)> = edges.iter().copied().collect();
    for (i, j) in original {
        if rng.random::<f64>() < beta {
            let t = rng.random_range(0..n);
            let e = (i.min(t), i.max(t));
            if t != i && !edges.contains(&e) {
                edges.remove(&(i, j));
                edges.insert(e);
            }
        }
    }
    connect(n, &mut edges, rng);
    undirected(n, edges)
}

/// Random graph with edge density `p`, optional random weights in
/// `[0.5, 2)`, no self-loops.
pub fn random_graph<R: Rng>(
    n: usize,
    p: f64,
    directed: bool,
    weighted: bool,
    rng: &mut R,
) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (!directed && j < i) {
                continue;
            }
            if rng.random::<f64>() < p {
                let w = if weighted {
                    rng.random_range(0.5..2.0)
                } else {
                    1.0
                };
                edges.push((i, j, w));
            }
        }
    }
    Graph::from_edges(n, directed, edges).unwrap()
}

/// A valid delta of about `count` changes: additions of absent edges,
/// removals and reweightings of present ones, mirrored for undirected graphs.
pub fn random_delta<R: Rng>(g: &Graph, count: usize, weighted: bool, rng: &mut R) -> EdgeDelta {
    let n = g.n_nodes();
    let mut touched = BTreeSet::new();
    let mut changes = Vec::new();
    let mut attempts = 0;
    while changes.len() < count && attempts < 50 * count.max(1) {
        attempts += 1;
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i == j || touched.contains(&(i, j)) || touched.contains(&(j, i)) {
            continue;
        }
        let w = if weighted {
            rng.random_range(0.5..2.0)
        } else {
            1.0
        };
        let action = if g.has_edge(i, j) {
            if rng.random_bool(0.5) || !weighted {
                EdgeAction::Remove
            } else {
                EdgeAction::Reweight(w)
            }
        } else {
            if !g.is_directed() && g.has_edge(j, i) {
                continue;
            }
            EdgeAction::Add(w)
        };
        touched.insert((i, j));
        changes.push(EdgeChange {
            src: i,
            dst: j,
            action,
        });
    }
    if g.is_directed() {
        EdgeDelta::new(changes)
    } else {
        EdgeDelta::symmetric(changes)
    }
}

/// All-pairs hop distances by Floyd-Warshall.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.n_nodes();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (i, j, _) in g.adjacency().iter() {
        if i != j {
            d[i][j] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(dkj) = d[k][j] {
                    if d[i][j].is_none_or(|v| v > dik + dkj) {
                        d[i][j] = Some(dik + dkj);
                    }
                }
            }
        }
    }
    d
}

pub fn nodes_of(set: &BTreeSet<NodeId>) -> Vec<NodeId> {
    set.iter().copied().collect()
}
