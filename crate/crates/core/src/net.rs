//! The finite candidate family: a separated subset of the unit sphere in
//! `R^k` crossed with every k-subset of `[d]`.
//!
//! The sphere net is built by greedy sequential packing. It starts from the
//! `2k` signed axis points and then streams uniform sphere samples, keeping any
//! sample at distance at least `ε_net/2` from everything kept so far, until
//! `max_rejections` consecutive samples have been turned away. For `k = 1`
//! the sphere is `{+1, −1}` and no sampling happens.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use tracing::warn;

use crate::error::{param, structure, Result};
use crate::sparse::SparseParam;

pub const DEFAULT_MAX_REJECTIONS: usize = 100_000;

/// Required share of probe points within `ε_net/2` of the sphere net.
pub const COVERAGE_TARGET: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamNet {
    dim: usize,
    sparsity: usize,
    eps_net: f64,
    sphere: Vec<Vec<f64>>,
    supports: Vec<Vec<usize>>,
    candidates: Vec<SparseParam>,
}

pub fn build_net<R: Rng + ?Sized>(d: usize, k: usize, eps_net: f64, rng: &mut R) -> Result<ParamNet> {
    build_net_with(d, k, eps_net, DEFAULT_MAX_REJECTIONS, rng)
}

pub fn build_net_with<R: Rng + ?Sized>(
    d: usize,
    k: usize,
    eps_net: f64,
    max_rejections: usize,
    rng: &mut R,
) -> Result<ParamNet> {
    check_params(d, k, eps_net)?;
    let sphere = if k == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        greedy_sphere_packing(k, eps_net / 2.0, max_rejections, rng)
    };
    ParamNet::from_parts(d, k, eps_net, sphere)
}

fn check_params(d: usize, k: usize, eps_net: f64) -> Result<()> {
    if k == 0 || k > d {
        return Err(param(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    if !(eps_net > 0.0 && eps_net <= 2.0) {
        return Err(param(format!("eps_net must lie in (0, 2], got {eps_net}")));
    }
    Ok(())
}

fn greedy_sphere_packing<R: Rng + ?Sized>(
    k: usize,
    separation: f64,
    max_rejections: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let sep2 = separation * separation;
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; k];
            p[i] = sign;
            pts.push(p);
        }
    }
    let mut rejected = 0;
    while rejected < max_rejections {
        let x = uniform_sphere(k, rng);
        if pts.iter().all(|p| dist2(p, &x) >= sep2) {
            pts.push(x);
            rejected = 0;
        } else {
            rejected += 1;
        }
    }
    pts
}

pub fn uniform_sphere<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All k-subsets of `0..d` in lexicographic order.
pub fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > d {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == d - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `C(n, k)`, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// `(1 + 4/ε_net)^k · C(d, k)`, the cardinality bound on the candidate family.
pub fn candidate_bound(d: usize, k: usize, eps_net: f64) -> f64 {
    (1.0 + 4.0 / eps_net).powi(k as i32) * binomial(d as u64, k as u64).map_or(f64::INFINITY, |c| c as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub probes: usize,
    pub covered: usize,
    pub worst_distance: f64,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        self.covered as f64 / self.probes as f64
    }

    pub fn meets_target(&self) -> bool {
        self.fraction() >= COVERAGE_TARGET
    }
}

impl ParamNet {
    fn from_parts(d: usize, k: usize, eps_net: f64, sphere: Vec<Vec<f64>>) -> Result<Self> {
        check_params(d, k, eps_net)?;
        if sphere.iter().any(|p| p.len() != k) {
            return Err(structure("sphere point of wrong dimension"));
        }
        let supports = k_subsets(d, k);
        let mut candidates = Vec::with_capacity(supports.len() * sphere.len());
        for sup in &supports {
            for p in &sphere {
                candidates.push(SparseParam::new(sup.clone(), p.clone())?);
            }
        }
        Ok(ParamNet {
            dim: d,
            sparsity: k,
            eps_net,
            sphere,
            supports,
            candidates,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn eps_net(&self) -> f64 {
        self.eps_net
    }

    pub fn sphere(&self) -> &[Vec<f64>] {
        &self.sphere
    }

    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    /// Candidates in net order: support-major, then sphere point.
    pub fn candidates(&self) -> &[SparseParam] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidate(&self, id: usize) -> &SparseParam {
        &self.candidates[id]
    }

    /// Smallest pairwise distance within the sphere net (exhaustive).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.sphere.len() {
            for j in i + 1..self.sphere.len() {
                best = best.min(dist2(&self.sphere[i], &self.sphere[j]).sqrt());
            }
        }
        best
    }

    /// Probe-sample the sphere and count points within `ε_net/2` of the net.
    pub fn coverage<R: Rng + ?Sized>(&self, probes: usize, rng: &mut R) -> CoverageReport {
        let radius = self.eps_net / 2.0;
        let mut covered = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let x = uniform_sphere(self.sparsity, rng);
            let d = self
                .sphere
                .iter()
                .map(|p| dist2(p, &x))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            worst = worst.max(d);
            if d <= radius {
                covered += 1;
            }
        }
        let report = CoverageReport {
            probes,
            covered,
            worst_distance: worst,
        };
        if !report.meets_target() {
            warn!(
                fraction = report.fraction(),
                worst = worst,
                "sphere net covers less than the target share of probes"
            );
        }
        report
    }

    /// Exhaustive nearest candidate; the lowest candidate id wins ties.
    pub fn nearest_candidate(&self, theta: &SparseParam) -> (usize, f64) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.candidates.iter().enumerate() {
            let d = c.distance(theta);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        (best, best_d)
    }

    /// Candidate id of an exact member, if present.
    pub fn position(&self, theta: &SparseParam) -> Option<usize> {
        self.candidates.iter().position(|c| c == theta)
    }

    /// Plain-text export, numbers at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sparse parameter net");
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "sparsity {}", self.sparsity);
        let _ = writeln!(s, "eps_net {:.16e}", self.eps_net);
        for sup in &self.supports {
            let idx: Vec<String> = sup.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "support {}", idx.join(" "));
        }
        for p in &self.sphere {
            let xs: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(s, "point {}", xs.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut sparsity = None;
        let mut eps = None;
        let mut supports = Vec::new();
        let mut sphere = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or_default();
            let bad = |what: &str| structure(format!("net text line {}: bad {what}", ln + 1));
            match key {
                "dim" => dim = Some(it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("dim"))?),
                "sparsity" => {
                    sparsity = Some(it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("sparsity"))?)
                }
                "eps_net" => eps = Some(it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("eps_net"))?),
                "support" => supports.push(
                    it.map(|x| x.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("support"))?,
                ),
                "point" => sphere.push(
                    it.map(|x| x.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("point"))?,
                ),
                other => return Err(structure(format!("net text line {}: unknown key {other}", ln + 1))),
            }
        }
        let (d, k, e) = match (dim, sparsity, eps) {
            (Some(d), Some(k), Some(e)) => (d, k, e),
            _ => return Err(structure("net text is missing dim, sparsity or eps_net")),
        };
        let net = ParamNet::from_parts(d, k, e, sphere)?;
        if net.supports != supports {
            return Err(structure("net text supports differ from the k-subsets of [d]"));
        }
        Ok(net)
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn k_one_is_two_points() {
        for eps in [0.1, 1.0, 2.0] {
            let net = build_net(5, 1, eps, &mut seed::stream(0)).unwrap();
            assert_eq!(net.sphere(), &[vec![1.0], vec![-1.0]]);
            assert_eq!(net.len(), 10);
        }
    }

    #[test]
    fn d4_k1_has_eight_candidates_within_bound() {
        for eps in [0.25, 0.5, 1.0, 2.0] {
            let net = build_net(4, 1, eps, &mut seed::stream(1)).unwrap();
            assert_eq!(net.len(), 8);
            assert!(net.len() as f64 <= (1.0 + 4.0 / eps) * 4.0);
        }
    }

    #[test]
    fn parameter_errors() {
        let mut r = seed::stream(0);
        assert!(matches!(build_net(3, 4, 0.5, &mut r), Err(crate::Error::Parameter(_))));
        assert!(matches!(build_net(3, 1, 0.0, &mut r), Err(crate::Error::Parameter(_))));
        assert!(matches!(build_net(3, 1, -1.0, &mut r), Err(crate::Error::Parameter(_))));
        assert!(matches!(build_net(3, 0, 0.5, &mut r), Err(crate::Error::Parameter(_))));
    }

    #[test]
    fn subsets_and_binomials() {
        assert_eq!(k_subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
        for n in 0..20u64 {
            for k in 0..=n {
                assert_eq!(binomial(n, k).unwrap() as usize, k_subsets(n as usize, k as usize).len().max((k == 0) as usize));
            }
        }
        assert_eq!(binomial(200, 100), None);
    }

    #[test]
    fn nearest_sign_rounding_k1() {
        let net = build_net(5, 1, 0.5, &mut seed::stream(0)).unwrap();
        let th = SparseParam::normalized(vec![3], vec![0.999]).unwrap();
        let (id, dist) = net.nearest_candidate(&th);
        assert_eq!(net.candidate(id), &SparseParam::one_hot(3, true));
        assert!(dist < 1e-12);
    }

    #[test]
    fn member_is_its_own_nearest() {
        let net = build_net(4, 2, 0.5, &mut seed::stream(2)).unwrap();
        for id in [0, 7, net.len() - 1] {
            let (got, d) = net.nearest_candidate(net.candidate(id));
            assert_eq!(got, id);
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn text_round_trip() {
        let net = build_net(4, 2, 0.8, &mut seed::stream(5)).unwrap();
        let back = ParamNet::from_text(&net.to_text()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = build_net(3, 2, 0.6, &mut seed::stream(9)).unwrap();
        let b = build_net(3, 2, 0.6, &mut seed::stream(9)).unwrap();
        assert_eq!(a, b);
    }
}
