//! Weighted union-find decoder with a virtual boundary.
//!
//! Clusters seeded at syndrome defects grow along edges in proportion to
//! edge weight; odd clusters keep growing until they merge with another odd
//! cluster or touch the boundary. A peeling pass over the grown support then
//! picks the correction and its effect on the logical observable.

use super::detector::DetectorGraph;

struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
    parity: Vec<bool>,
    boundary: Vec<bool>,
}

impl Dsu {
    fn new(defect: &[bool]) -> Self {
        let n = defect.len();
        Dsu {
            parent: (0..n).collect(),
            rank: vec![0; n],
            parity: defect.to_vec(),
            boundary: vec![false; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
        self.parity[ra] ^= self.parity[rb];
        self.boundary[ra] |= self.boundary[rb];
    }

    fn active(&mut self, v: usize) -> bool {
        let r = self.find(v);
        self.parity[r] && !self.boundary[r]
    }
}

/// Decode one syndrome; returns the predicted observable flip.
pub fn decode(graph: &DetectorGraph, syndrome: &[bool]) -> bool {
    debug_assert_eq!(syndrome.len(), graph.detectors.len());
    if syndrome.iter().all(|&s| !s) {
        return false;
    }
    let mut dsu = Dsu::new(syndrome);
    let mut grown = vec![0.0f64; graph.edges.len()];
    let mut saturated = vec![false; graph.edges.len()];

    // Growth: repeatedly advance every frontier edge by the smallest
    // increment that saturates one of them.
    loop {
        let mut any_active = false;
        let mut dt = f64::INFINITY;
        let mut frontier: Vec<(usize, f64)> = Vec::new();
        for (i, e) in graph.edges.iter().enumerate() {
            if saturated[i] {
                continue;
            }
            let ends_active = dsu.active(e.a) as u8
                + e.b.map(|b| dsu.active(b) as u8).unwrap_or(0);
            if ends_active == 0 {
                continue;
            }
            any_active = true;
            let speed = ends_active as f64;
            let need = (e.weight - grown[i]).max(0.0) / speed;
            dt = dt.min(need);
            frontier.push((i, speed));
        }
        if !any_active {
            break;
        }
        for (i, speed) in frontier {
            grown[i] += dt * speed;
            if grown[i] + 1e-12 >= graph.edges[i].weight {
                saturated[i] = true;
                let e = &graph.edges[i];
                match e.b {
                    Some(b) => dsu.union(e.a, b),
                    None => {
                        let r = dsu.find(e.a);
                        dsu.boundary[r] = true;
                    }
                }
            }
        }
    }

    // Peeling over the saturated support, one connected component at a time.
    let n = graph.detectors.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut boundary_edge: Vec<Option<usize>> = vec![None; n];
    for (i, e) in graph.edges.iter().enumerate() {
        if !saturated[i] {
            continue;
        }
        match e.b {
            Some(b) => {
                adj[e.a].push(i);
                adj[b].push(i);
            }
            None => {
                if boundary_edge[e.a].map_or(true, |j| graph.edges[i].weight < graph.edges[j].weight)
                {
                    boundary_edge[e.a] = Some(i);
                }
            }
        }
    }

    let mut defect: Vec<bool> = syndrome.to_vec();
    let mut visited = vec![false; n];
    let mut obs_flip = false;
    for start in 0..n {
        if visited[start] || (!defect[start] && adj[start].is_empty()) {
            continue;
        }
        // Spanning tree by BFS, rooted at a boundary-connected node if the
        // component has one.
        let mut order = vec![start];
        let mut tree_edge: Vec<Option<usize>> = vec![None; n];
        visited[start] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &ei in &adj[v] {
                let e = &graph.edges[ei];
                let w = if e.a == v { e.b.unwrap() } else { e.a };
                if !visited[w] {
                    visited[w] = true;
                    tree_edge[w] = Some(ei);
                    order.push(w);
                }
            }
        }
        let root = order
            .iter()
            .copied()
            .find(|&v| boundary_edge[v].is_some())
            .unwrap_or(start);
        // Re-root the BFS tree at `root`.
        if root != start {
            let mut rorder = vec![root];
            let mut redge: Vec<Option<usize>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[root] = true;
            let mut h = 0;
            while h < rorder.len() {
                let v = rorder[h];
                h += 1;
                for &ei in &adj[v] {
                    let e = &graph.edges[ei];
                    let w = if e.a == v { e.b.unwrap() } else { e.a };
                    if !seen[w] {
                        seen[w] = true;
                        redge[w] = Some(ei);
                        rorder.push(w);
                    }
                }
            }
            order = rorder;
            tree_edge = redge;
        }
        // Leaves first: push defects toward the root.
        for &v in order.iter().skip(1).rev() {
            if defect[v] {
                let ei = tree_edge[v].expect("non-root tree node has a parent edge");
                let e = &graph.edges[ei];
                let parent = if e.a == v { e.b.unwrap() } else { e.a };
                defect[v] = false;
                defect[parent] ^= true;
                obs_flip ^= e.obs;
            }
        }
        if defect[order[0]] {
            let ei = boundary_edge[order[0]]
                .expect("odd component must have reached the boundary");
            defect[order[0]] = false;
            obs_flip ^= graph.edges[ei].obs;
        }
    }
    debug_assert!(defect.iter().all(|&d| !d));
    obs_flip
}
