//! Ball covers of the sphere, the partition-of-unity maps built on them, and
//! a numerical search for antipodal collisions `f(x) = f(-x)`.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::vecops::{dist, normalized};

// Neighbor scans visit 3^n cells; beyond this ambient dimension a linear
// scan is cheaper.
const MAX_GRID_DIM: usize = 7;

/// Points bucketed on a uniform grid with side `cell`. Every point within
/// distance `cell` of a query lies in one of the `3^n` surrounding cells.
#[derive(Debug, Clone)]
struct PointIndex {
    points: Vec<Vec<f64>>,
    cell: f64,
    buckets: Option<HashMap<Vec<i64>, Vec<usize>>>,
    offsets: Vec<Vec<i64>>,
}

impl PointIndex {
    fn new(dim: usize, cell: f64) -> Self {
        let grid = dim <= MAX_GRID_DIM;
        let offsets = if grid {
            (0..3usize.pow(dim as u32))
                .map(|mut k| {
                    (0..dim)
                        .map(|_| {
                            let o = (k % 3) as i64 - 1;
                            k /= 3;
                            o
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        PointIndex {
            points: Vec::new(),
            cell,
            buckets: grid.then(HashMap::new),
            offsets,
        }
    }

    fn from_points(points: &[Vec<f64>], cell: f64) -> Self {
        let mut idx = PointIndex::new(points[0].len(), cell);
        for p in points {
            idx.insert(p.clone());
        }
        idx
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, p: Vec<f64>) {
        let key = self.key(&p);
        let i = self.points.len();
        self.points.push(p);
        if let Some(b) = &mut self.buckets {
            b.entry(key).or_default().push(i);
        }
    }

    /// Calls `f` on every point index that may lie within `cell` of `x`.
    fn for_each_near(&self, x: &[f64], mut f: impl FnMut(usize)) {
        let Some(buckets) = &self.buckets else {
            (0..self.points.len()).for_each(f);
            return;
        };
        let base = self.key(x);
        let mut key = base.clone();
        for off in &self.offsets {
            for ((k, b), o) in key.iter_mut().zip(&base).zip(off) {
                *k = b + o;
            }
            if let Some(ids) = buckets.get(&key) {
                ids.iter().for_each(|&i| f(i));
            }
        }
    }

    fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.for_each_near(x, |i| {
            let d = dist(&self.points[i], x);
            if d < best.1 {
                best = (i, d);
            }
        });
        if best.1 <= self.cell {
            return best;
        }
        nearest_linear(&self.points, x)
    }
}

fn nearest_linear(points: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in points.iter().enumerate() {
        let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

/// Unit-vector centers in `R^{d+1}`, a radius `delta` whose open balls cover
/// `S^d`, and a vector `w_t` in `R^k` assigned to every center.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CoverData", into = "CoverData")]
pub struct CoverWitness {
    centers: Vec<Vec<f64>>,
    delta: f64,
    assignments: Vec<Vec<f64>>,
    index: OnceLock<PointIndex>,
}

#[derive(Serialize, Deserialize)]
struct CoverData {
    centers: Vec<Vec<f64>>,
    delta: f64,
    assignments: Vec<Vec<f64>>,
}

impl TryFrom<CoverData> for CoverWitness {
    type Error = Error;

    fn try_from(d: CoverData) -> Result<Self> {
        CoverWitness::new(d.centers, d.delta, d.assignments)
    }
}

impl From<CoverWitness> for CoverData {
    fn from(w: CoverWitness) -> Self {
        CoverData {
            centers: w.centers,
            delta: w.delta,
            assignments: w.assignments,
        }
    }
}

impl PartialEq for CoverWitness {
    fn eq(&self, other: &Self) -> bool {
        self.centers == other.centers && self.delta == other.delta && self.assignments == other.assignments
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub probes: usize,
    /// Largest distance from a probed point to its nearest center.
    pub max_gap: f64,
    pub covered: bool,
}

/// How the vectors `w_t` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Independent standard normal vectors in `R^k`.
    Gaussian { k: usize },
    /// `w_t = t`, so `k = d + 1`.
    Identity,
}

impl CoverWitness {
    pub fn new(centers: Vec<Vec<f64>>, delta: f64, assignments: Vec<Vec<f64>>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Parameter("a cover needs at least one center".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
        }
        check_dim(centers.len(), assignments.len())?;
        let n = centers[0].len();
        let k = assignments[0].len();
        for (c, w) in centers.iter().zip(&assignments) {
            check_dim(n, c.len())?;
            check_dim(k, w.len())?;
            if (crate::vecops::norm(c) - 1.0).abs() > 1e-10 {
                return Err(Error::Parameter("centers must be unit vectors".into()));
            }
        }
        Ok(CoverWitness {
            centers,
            delta,
            assignments,
            index: OnceLock::new(),
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn assignments(&self) -> &[Vec<f64>] {
        &self.assignments
    }

    /// `d` for covers of `S^d`.
    pub fn sphere_dim(&self) -> usize {
        self.centers[0].len() - 1
    }

    pub fn target_dim(&self) -> usize {
        self.assignments[0].len()
    }

    fn index(&self) -> &PointIndex {
        self.index.get_or_init(|| PointIndex::from_points(&self.centers, self.delta))
    }

    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        self.index().nearest(x)
    }

    /// Random probes plus local maximization of the nearest-center distance.
    pub fn verify_coverage(&self, probes: usize, restarts: usize, seed: u64) -> CoverageReport {
        let max_gap = gap_estimate(self.index(), probes, restarts, seed);
        CoverageReport {
            probes,
            max_gap,
            covered: max_gap < self.delta,
        }
    }
}

fn sphere_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(seed);
    (0..count).map(|_| rng::unit_vector(&mut r, dim)).collect()
}

// Surface area of the unit sphere in R^dim.
fn sphere_area(dim: usize) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => tau,
        n => tau / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

const ASCENT_STEPS: usize = 500;

// Moves x away from its nearest center along the sphere while the gap grows.
// Near a Voronoi ridge this zigzags with tiny gains, hence the step cap.
fn local_gap_ascent(index: &PointIndex, mut x: Vec<f64>) -> f64 {
    let (mut i, mut gap) = index.nearest(&x);
    let mut step = 0.25 * gap.max(1e-3);
    for _ in 0..ASCENT_STEPS {
        if step <= 1e-7 {
            break;
        }
        let y: Vec<f64> = x
            .iter()
            .zip(&index.points[i])
            .map(|(a, c)| a + step * (a - c))
            .collect();
        let Some(y) = normalized(&y) else { break };
        let (j, g) = index.nearest(&y);
        if g > gap {
            x = y;
            gap = g;
            i = j;
        } else {
            step *= 0.5;
        }
    }
    gap
}

fn gap_estimate(index: &PointIndex, probes: usize, restarts: usize, seed: u64) -> f64 {
    let dim = index.points[0].len();
    let pts = sphere_points(dim, probes, seed);
    let mut gaps: Vec<(f64, usize)> = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| (index.nearest(p).1, i))
        .collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let refined = gaps
        .par_iter()
        .take(restarts)
        .map(|(_, i)| local_gap_ascent(index, pts[*i].clone()))
        .reduce(|| 0.0, f64::max);
    refined.max(gaps.first().map_or(0.0, |g| g.0))
}

/// Largest nearest-center distance found over `probes` random points, refined
/// by local ascent from the `restarts` worst ones.
pub fn covering_radius_estimate(centers: &[Vec<f64>], probes: usize, restarts: usize, seed: u64) -> f64 {
    let dim = centers[0].len();
    let spacing = (sphere_area(dim) / centers.len() as f64).powf(1.0 / (dim as f64 - 1.0).max(1.0));
    gap_estimate(&PointIndex::from_points(centers, 2.0 * spacing), probes, restarts, seed)
}

/// Greedy `radius`-net of `pool` random sphere points: a point becomes a
/// center unless one already lies within `radius`.
pub fn greedy_net(dim: usize, radius: f64, pool: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut index = PointIndex::new(dim, radius);
    for p in sphere_points(dim, pool.max(1), seed) {
        extend_net(&mut index, p, radius);
    }
    index.points
}

fn extend_net(index: &mut PointIndex, p: Vec<f64>, radius: f64) {
    let mut near = false;
    index.for_each_near(&p, |i| near |= dist(&index.points[i], &p) <= radius);
    if !near {
        index.insert(p);
    }
}

/// A cover of `S^d` by balls of radius `delta` whose estimated covering radius
/// is at most `delta / 1.5`; centers are refined until that holds.
pub fn random_cover_witness(d: usize, delta: f64, assignment: Assignment, seed: u64) -> Result<CoverWitness> {
    if d == 0 || !(delta > 0.0 && delta < 2.0) {
        return Err(Error::Parameter(format!("need d >= 1 and delta in (0, 2); got d = {d}, delta = {delta}")));
    }
    let dim = d + 1;
    let target = delta / 1.5;
    let radius = 0.8 * target;
    let pool = ((4.0 / target).powi(d as i32) as usize).clamp(2_000, 100_000);
    let mut index = PointIndex::from_points(&greedy_net(dim, radius, pool, rng::derive_seed(seed, 0)), radius);
    for round in 1..=8u64 {
        let before = index.points.len();
        for p in sphere_points(dim, 20_000, rng::derive_seed(seed, round)) {
            extend_net(&mut index, p, radius);
        }
        if index.points.len() == before {
            break;
        }
    }
    let estimate = gap_estimate(&index, 100_000, 64, rng::derive_seed(seed, 99));
    if estimate > target {
        return Err(Error::Construction(format!(
            "covering radius estimate {estimate} exceeds delta / 1.5 = {target}"
        )));
    }
    let centers = index.points;
    let mut r = rng::derived(seed, 100);
    let assignments = match assignment {
        Assignment::Gaussian { k } => centers.iter().map(|_| rng::gaussian_vec(&mut r, k)).collect(),
        Assignment::Identity => centers.clone(),
    };
    CoverWitness::new(centers, delta, assignments)
}

/// Weights `rho_t(x)` proportional to `max(0, delta - |x - t|)`, summing to
/// one, as sparse `(center index, weight)` pairs in increasing index order.
pub fn partition_weights(witness: &CoverWitness, x: &[f64]) -> Result<Vec<(usize, f64)>> {
    check_dim(witness.centers[0].len(), x.len())?;
    let mut raw = Vec::new();
    witness.index().for_each_near(x, |i| {
        let v = witness.delta - dist(x, &witness.centers[i]);
        if v > 0.0 {
            raw.push((i, v));
        }
    });
    raw.sort_by_key(|p| p.0);
    let total: f64 = raw.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        let (_, g) = witness.nearest(x);
        return Err(Error::Domain(format!(
            "point is not covered: nearest center at distance {g}, delta = {}",
            witness.delta
        )));
    }
    Ok(raw.into_iter().map(|(i, v)| (i, v / total)).collect())
}

/// Dense form of [`partition_weights`]: one weight per center.
pub fn partition_of_unity(witness: &CoverWitness, x: &[f64]) -> Result<Vec<f64>> {
    let mut rho = vec![0.0; witness.centers.len()];
    for (i, v) in partition_weights(witness, x)? {
        rho[i] = v;
    }
    Ok(rho)
}

/// `(chi(x), phi(x)) = (sum rho_t(x) t, sum rho_t(x) w_t)`.
pub fn phi_map(witness: &CoverWitness, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut chi = vec![0.0; witness.centers[0].len()];
    let mut phi = vec![0.0; witness.target_dim()];
    for (i, p) in partition_weights(witness, x)? {
        crate::vecops::add_scaled(&mut chi, &witness.centers[i], p);
        crate::vecops::add_scaled(&mut phi, &witness.assignments[i], p);
    }
    Ok((chi, phi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntipodalOptions {
    pub tol: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub fd_step: f64,
    pub seed: u64,
    /// Stop after the first restart chunk that reaches `tol`.
    pub stop_at_first: bool,
}

impl Default for AntipodalOptions {
    fn default() -> Self {
        AntipodalOptions {
            tol: 1e-4,
            restarts: 64,
            max_iters: 200,
            fd_step: 1e-7,
            seed: 0,
            stop_at_first: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub x: Vec<f64>,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntipodalResult {
    pub found: bool,
    pub best: Collision,
    /// Every restart that reached the tolerance, in restart order.
    pub collisions: Vec<Collision>,
    pub restarts_run: usize,
}

const CHUNK: usize = 8;

/// Minimizes `g(x) = |f(x) - f(-x)|` over the unit sphere in `R^dim` by
/// Levenberg–Marquardt steps in the tangent space with a finite-difference
/// Jacobian, from `opts.restarts` random starts.
pub fn antipodal_search<F>(map: F, dim: usize, opts: &AntipodalOptions) -> Result<AntipodalResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if dim < 2 {
        return Err(Error::Parameter("the sphere needs ambient dimension >= 2".into()));
    }
    let mut all: Vec<Collision> = Vec::new();
    let mut restarts_run = 0;
    let mut start = 0;
    while start < opts.restarts {
        let end = (start + CHUNK).min(opts.restarts);
        let chunk: Vec<Collision> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::derived(opts.seed, i as u64);
                descend(&map, rng::unit_vector(&mut r, dim), opts)
            })
            .collect::<Result<_>>()?;
        restarts_run = end;
        let hit = chunk.iter().any(|c| c.g <= opts.tol);
        all.extend(chunk);
        if hit && opts.stop_at_first {
            break;
        }
        start = end;
    }
    let collisions: Vec<Collision> = all.iter().filter(|c| c.g <= opts.tol).cloned().collect();
    let best = all
        .iter()
        .min_by(|a, b| a.g.total_cmp(&b.g))
        .cloned()
        .expect("at least one restart");
    Ok(AntipodalResult {
        found: !collisions.is_empty(),
        best,
        collisions,
        restarts_run,
    })
}

fn odd_part<F>(map: &F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let a = map(x)?;
    let b = map(&neg)?;
    check_dim(a.len(), b.len())?;
    Ok(a.iter().zip(&b).map(|(p, q)| p - q).collect())
}

fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut basis: Vec<Vec<f64>> = vec![x.to_vec()];
    for j in 0..n {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        for b in &basis {
            let c = crate::vecops::dot(&v, b);
            crate::vecops::add_scaled(&mut v, b, -c);
        }
        if crate::vecops::norm(&v) > 1e-6 {
            basis.push(normalized(&v).expect("nonzero"));
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

fn descend<F>(map: &F, mut x: Vec<f64>, opts: &AntipodalOptions) -> Result<Collision>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut f = odd_part(map, &x)?;
    let mut g = crate::vecops::norm(&f);
    let mut lambda = 1e-3;
    for _ in 0..opts.max_iters {
        if g <= opts.tol {
            break;
        }
        let basis = tangent_basis(&x);
        let k = f.len();
        let mut jac = DMatrix::<f64>::zeros(k, basis.len());
        for (j, b) in basis.iter().enumerate() {
            let y: Vec<f64> = x.iter().zip(b).map(|(a, c)| a + opts.fd_step * c).collect();
            let fy = odd_part(map, &normalized(&y).expect("near the sphere"))?;
            for i in 0..k {
                jac[(i, j)] = (fy[i] - f[i]) / opts.fd_step;
            }
        }
        let fv = DVector::from_vec(f.clone());
        let jt = jac.transpose();
        let mut improved = false;
        while lambda < 1e10 {
            let lhs = &jt * &jac + DMatrix::<f64>::identity(basis.len(), basis.len()) * lambda;
            let Some(chol) = lhs.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let mut step = chol.solve(&(&jt * &fv));
            let sn = step.norm();
            if sn > 0.5 {
                step *= 0.5 / sn;
            }
            let mut y = x.clone();
            for (j, b) in basis.iter().enumerate() {
                crate::vecops::add_scaled(&mut y, b, -step[j]);
            }
            let y = normalized(&y).expect("near the sphere");
            let fy = odd_part(map, &y)?;
            let gy = crate::vecops::norm(&fy);
            if gy < g {
                x = y;
                f = fy;
                g = gy;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Ok(Collision { x, g })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorsukUlamDemo {
    pub d: usize,
    pub k: usize,
    pub delta: f64,
    pub collisions: Vec<Collision>,
    pub best_g: f64,
}

/// Random cover of `S^d` with the given assignment and an antipodal search on
/// its `phi` map.
pub fn borsuk_ulam_demo(d: usize, delta: f64, assignment: Assignment, opts: &AntipodalOptions) -> Result<BorsukUlamDemo> {
    let witness = random_cover_witness(d, delta, assignment, opts.seed)?;
    let result = antipodal_search(|x| Ok(phi_map(&witness, x)?.1), d + 1, opts)?;
    Ok(BorsukUlamDemo {
        d,
        k: witness.target_dim(),
        delta,
        collisions: result.collisions,
        best_g: result.best.g,
    })
}
