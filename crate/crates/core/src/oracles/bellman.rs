use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::instances::RankInstance;
use crate::mdp::{state_distribution, TabularMdp, TabularPolicy};
use crate::par;
use crate::sparse::{greedy_policy, inner_value, v_theta, FeatureMap, SparseParam};

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Exact average Bellman error of `thetas` at level `h` when states and
/// actions come from `rollin`. The `V_{θ_{h+1}}` term is dropped on the last
/// level.
pub fn exact_avg_bellman_error(
    mdp: &TabularMdp,
    phi: &FeatureMap,
    thetas: &[SparseParam],
    h: usize,
    rollin: &TabularPolicy,
) -> Result<f64> {
    if thetas.len() != mdp.horizon() {
        return Err(param("parameter sequence length differs from horizon"));
    }
    let dist = state_distribution(mdp, rollin, h)?;
    let last = h + 1 == mdp.horizon();
    let mut acc = 0.0;
    for (s, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let a = rollin.action(h, s);
        let mut term = inner_value(phi, &thetas[h], h, s, a) - mdp.expected_reward(h, s, a);
        if !last {
            term -= mdp.expect_next(h, s, a, |t| v_theta(phi, &thetas[h + 1], h + 1, t));
        }
        acc += mass * term;
    }
    Ok(acc)
}

/// `entries[i][j] = E_h(θ_i, π_{θ_j})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellmanErrorMatrix {
    pub level: usize,
    pub entries: Vec<Vec<f64>>,
}

impl BellmanErrorMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn rank(&self, tol: f64) -> usize {
        matrix_rank(&self.entries, tol)
    }

    /// Header `row,col_0,…`, one line per row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row");
        for j in 0..self.size() {
            let _ = write!(s, ",col_{j}");
        }
        s.push('\n');
        for (i, row) in self.entries.iter().enumerate() {
            let _ = write!(s, "{i}");
            for x in row {
                let _ = write!(s, ",{x:e}");
            }
            s.push('\n');
        }
        s
    }
}

/// Evaluate every (evaluated, roll-in) pair of `family` at level `h`; cells
/// are independent and computed in parallel.
pub fn bellman_error_matrix(
    mdp: &TabularMdp,
    phi: &FeatureMap,
    family: &[Vec<SparseParam>],
    h: usize,
) -> Result<BellmanErrorMatrix> {
    let n = family.len();
    let policies = family
        .iter()
        .map(|seq| greedy_policy(mdp, phi, seq))
        .collect::<Result<Vec<_>>>()?;
    let cells = par::map_indexed(n * n, |c| {
        exact_avg_bellman_error(mdp, phi, &family[c / n], h, &policies[c % n])
    });
    let mut entries = vec![Vec::with_capacity(n); n];
    for (c, v) in cells.into_iter().enumerate() {
        entries[c / n].push(v?);
    }
    Ok(BellmanErrorMatrix { level: h, entries })
}

/// Last-level matrix over the rank instance's family, checked against
/// `ε(I − J)` entrywise within `1e−12`.
pub fn rank_bellman_matrix(inst: &RankInstance) -> Result<BellmanErrorMatrix> {
    let h = inst.horizon() - 1;
    let w = bellman_error_matrix(&inst.mdp, &inst.phi, &inst.family, h)?;
    for (i, row) in w.entries.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let want = if i == j { 0.0 } else { -inst.eps };
            if (x - want).abs() > 1e-12 {
                return Err(Error::Integrity(format!("W[{i}][{j}] = {x}, expected {want}")));
            }
        }
    }
    Ok(w)
}

/// Rank by Gaussian elimination with partial pivoting; pivots at or below
/// `tol · max|entry|` count as zero.
pub fn matrix_rank(m: &[Vec<f64>], tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return 0;
    }
    let thresh = tol * scale;
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (p, pv) = (rank..rows)
            .map(|r| (r, a[r][c].abs()))
            .fold((rank, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pv <= thresh {
            continue;
        }
        a.swap(rank, p);
        for r in rank + 1..rows {
            let f = a[r][c] / a[rank][c];
            if f != 0.0 {
                for cc in c..cols {
                    a[r][cc] -= f * a[rank][cc];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::make_rank_instance;

    #[test]
    fn rank_basics() {
        let id: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| (i == j) as u8 as f64).collect()).collect();
        assert_eq!(matrix_rank(&id, DEFAULT_RANK_TOL), 5);
        assert_eq!(matrix_rank(&vec![vec![1.0; 4]; 4], DEFAULT_RANK_TOL), 1);
        assert_eq!(matrix_rank(&vec![vec![0.0; 3]; 3], DEFAULT_RANK_TOL), 0);
        let ij: Vec<Vec<f64>> = (0..8).map(|i| (0..8).map(|j| 0.3 * ((i == j) as u8 as f64 - 1.0)).collect()).collect();
        assert_eq!(matrix_rank(&ij, DEFAULT_RANK_TOL), 8);
    }

    #[test]
    fn rank_instance_pattern_and_scaling() {
        let a = rank_bellman_matrix(&make_rank_instance(4, 0.01).unwrap()).unwrap();
        let b = rank_bellman_matrix(&make_rank_instance(4, 0.02).unwrap()).unwrap();
        assert_eq!(a.rank(DEFAULT_RANK_TOL), 4);
        for (ra, rb) in a.entries.iter().zip(&b.entries) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((2.0 * x - y).abs() < 1e-15);
            }
        }
        let two = rank_bellman_matrix(&make_rank_instance(2, 0.3).unwrap()).unwrap();
        assert_eq!(two.entries, vec![vec![0.0, -0.3], vec![-0.3, 0.0]]);
        assert_eq!(two.to_csv().lines().count(), 3);
    }
}
