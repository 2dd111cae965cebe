//! Exact optimal transport between discrete distributions under squared
//! Euclidean cost.
//!
//! Uniform equal-size problems go through the Hungarian algorithm; everything
//! else through successive shortest paths with Dijkstra on reduced costs.
//! Coincident points are merged first and the plan is split back afterwards.

use serde::Serialize;

use crate::dynamics::DiscreteDistribution;
use crate::error::{check_dim, Error, Result};
use crate::kernels::sq_dist;

// masses are normalized, so anything below this is flow round-off
const MASS_EPS: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    /// `coupling[i][j]`: mass moved from point `i` of the source to point `j` of the target.
    pub coupling: Vec<Vec<f64>>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn distance(&self) -> f64 {
        self.cost.max(0.0).sqrt()
    }
}

/// `W_2(p, q)`.
pub fn wasserstein2(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    Ok(optimal_plan(p, q)?.distance())
}

pub fn optimal_plan(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<TransportPlan> {
    check_dim(p.dim(), q.dim())?;
    let (pp, pm, pgroups) = merge(p);
    let (qp, qm, qgroups) = merge(q);
    let cost: Vec<Vec<f64>> = pp
        .iter()
        .map(|x| qp.iter().map(|y| sq_dist(x, y)).collect())
        .collect();
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("transport cost".into()));
    }
    let uniform = |m: &[f64]| m.iter().all(|v| *v == m[0]);
    let merged = if pp.len() == qp.len() && uniform(&pm) && uniform(&qm) {
        let assignment = hungarian(&cost);
        let w = 1.0 / pp.len() as f64;
        let mut c = vec![vec![0.0; qp.len()]; pp.len()];
        for (i, j) in assignment.into_iter().enumerate() {
            c[i][j] = w;
        }
        c
    } else {
        min_cost_flow(&cost, &pm, &qm)
    };
    // split merged rows/columns back in proportion to the original masses
    let mut coupling = vec![vec![0.0; q.len()]; p.len()];
    for (gi, prow) in pgroups.iter().enumerate() {
        for &i in prow {
            let fi = p.masses()[i] / pm[gi];
            for (gj, qcol) in qgroups.iter().enumerate() {
                let flow = merged[gi][gj];
                if flow == 0.0 {
                    continue;
                }
                for &j in qcol {
                    coupling[i][j] = flow * fi * q.masses()[j] / qm[gj];
                }
            }
        }
    }
    let total = coupling
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, f)| f * sq_dist(&p.points()[i], &q.points()[j]))
                .sum::<f64>()
        })
        .sum();
    Ok(TransportPlan {
        coupling,
        cost: total,
    })
}

type Merged = (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<usize>>);

fn merge(d: &DiscreteDistribution) -> Merged {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut masses = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, (x, m)) in d.points().iter().zip(d.masses()).enumerate() {
        match pts.iter().position(|p| p == x) {
            Some(g) => {
                masses[g] += m;
                groups[g].push(i);
            }
            None => {
                pts.push(x.clone());
                masses.push(*m);
                groups.push(vec![i]);
            }
        }
    }
    (pts, masses, groups)
}

/// Minimum-cost perfect matching on a square cost matrix; returns the column of each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based potentials formulation; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Transportation problem by successive shortest paths on the bipartite residual graph.
fn min_cost_flow(cost: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Vec<Vec<f64>> {
    let (n, m) = (supply.len(), demand.len());
    let mut flow = vec![vec![0.0; m]; n];
    let mut left_s = supply.to_vec();
    let mut left_d = demand.to_vec();
    // node potentials: rows 0..n, columns n..n+m
    let mut pot = vec![0.0; n + m];
    loop {
        if left_s.iter().all(|s| *s <= MASS_EPS) || left_d.iter().all(|d| *d <= MASS_EPS) {
            break;
        }
        let mut dist = vec![f64::INFINITY; n + m];
        let mut prev = vec![usize::MAX; n + m];
        let mut done = vec![false; n + m];
        for i in 0..n {
            if left_s[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut best = usize::MAX;
            for v in 0..n + m {
                if !done[v] && dist[v].is_finite() && (best == usize::MAX || dist[v] < dist[best]) {
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best < n {
                let i = best;
                for j in 0..m {
                    let rc = cost[i][j] + pot[i] - pot[n + j];
                    let nd = dist[i] + rc.max(0.0);
                    if nd < dist[n + j] {
                        dist[n + j] = nd;
                        prev[n + j] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if flow[i][j] > MASS_EPS {
                        let rc = -cost[i][j] + pot[n + j] - pot[i];
                        let nd = dist[n + j] + rc.max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = n + j;
                        }
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|&j| left_d[j] > MASS_EPS && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]));
        let Some(tj) = target else { break };
        for v in 0..n + m {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }
        // walk back to find the bottleneck
        let mut amount = left_d[tj];
        let mut v = n + tj;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= n {
                amount = amount.min(flow[v][u - n]);
            }
            v = u;
        }
        amount = amount.min(left_s[v]);
        let mut v = n + tj;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < n {
                flow[u][v - n] += amount;
            } else {
                flow[v][u - n] -= amount;
            }
            v = u;
        }
        left_s[v] -= amount;
        left_d[tj] -= amount;
    }
    flow
}
