//! K-means clustering with an index-based choice of cluster count.
//!
//! Lloyd's algorithm with k-means++ seeding, fully deterministic given the
//! seed. The cluster count is picked by sweeping a k range, scoring each
//! clustering with five quality indices, min-max normalizing each index
//! across the sweep (oriented so 1 is best), and taking the k with the best
//! mean normalized score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 300;

/// One converged k-means run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansOutcome {
    pub k: usize,
    /// Cluster index per input row.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
    /// False only when the iteration cap stopped an unconverged run.
    pub converged: bool,
    /// Inertia after each assignment step; non-increasing by construction.
    pub inertia_history: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyInput {
            what: "clustering input".into(),
        });
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidData {
            what: "clustering input".into(),
            detail: "rows are empty or ragged".into(),
        });
    }
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidData {
            what: "clustering input".into(),
            detail: "non-finite coordinate".into(),
        });
    }
    Ok(dim)
}

/// k-means++ initial centroids: first uniform, then proportional to the
/// squared distance from the nearest chosen centroid. When every remaining
/// point coincides with a chosen centroid (duplicate-heavy data), falls back
/// to a uniform pick so seeding always completes.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (slot, point) in d2.iter_mut().zip(points) {
            *slot = slot.min(dist2(point, centroids.last().unwrap()));
        }
    }
    centroids
}

/// Runs seeded k-means. Requires `2 <= k <= points.len()`; duplicate points
/// are fine (a cluster left empty keeps its previous centroid).
pub fn kmeans_cluster(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansOutcome> {
    let dim = validate_points(points)?;
    if k < 2 {
        return Err(Error::InvalidData {
            what: "cluster count".into(),
            detail: format!("k = {k} must be >= 2"),
        });
    }
    if k > points.len() {
        return Err(Error::KTooLarge {
            k,
            points: points.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut inertia = f64::INFINITY;
    let mut inertia_history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;

        // Assignment step: nearest centroid, ties to the lowest index.
        let mut changed = false;
        inertia = 0.0;
        for (point, slot) in points.iter().zip(assignments.iter_mut()) {
            let mut best = 0;
            let mut best_d = dist2(point, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = dist2(point, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            inertia += best_d;
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        inertia_history.push(inertia);
        if !changed {
            converged = true;
            break;
        }

        // Update step: member mean; empty clusters keep their centroid.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(point) {
                *s += v;
            }
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            if counts[c] > 0 {
                for (slot, s) in centroid.iter_mut().zip(&sums[c]) {
                    *slot = s / counts[c] as f64;
                }
            }
        }
    }

    Ok(KMeansOutcome {
        k,
        assignments,
        centroids,
        inertia,
        iterations,
        converged,
        inertia_history,
    })
}

/// The five clustering quality indices. `None` marks an index that is
/// undefined for the clustering at hand (empty cluster, zero spread,
/// coincident centroids...).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexScores {
    /// Mean silhouette width; higher is better.
    pub silhouette: Option<f64>,
    /// Calinski-Harabasz ratio; higher is better.
    pub calinski_harabasz: Option<f64>,
    /// Dunn index (min centroid separation over max cluster diameter);
    /// higher is better.
    pub dunn: Option<f64>,
    /// Davies-Bouldin index; lower is better.
    pub davies_bouldin: Option<f64>,
    /// Xie-Beni index (inertia over n times the squared minimal centroid
    /// separation); lower is better.
    pub xie_beni: Option<f64>,
}

impl IndexScores {
    fn as_array(&self) -> [Option<f64>; 5] {
        [
            self.silhouette,
            self.calinski_harabasz,
            self.dunn,
            self.davies_bouldin,
            self.xie_beni,
        ]
    }

    fn from_array(values: [Option<f64>; 5]) -> Self {
        Self {
            silhouette: values[0],
            calinski_harabasz: values[1],
            dunn: values[2],
            davies_bouldin: values[3],
            xie_beni: values[4],
        }
    }

    /// Whether the i-th index improves with larger values.
    const MAXIMIZE: [bool; 5] = [true, true, true, false, false];
}

/// Scores a clustering. A clustering that left any cluster empty is treated
/// as degenerate: every index comes back `None`.
pub fn quality_indices(points: &[Vec<f64>], outcome: &KMeansOutcome) -> IndexScores {
    let n = points.len();
    let k = outcome.k;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in outcome.assignments.iter().enumerate() {
        members[a].push(i);
    }
    if members.iter().any(Vec::is_empty) || k < 2 {
        return IndexScores::default();
    }

    let d = |i: usize, j: usize| dist2(&points[i], &points[j]).sqrt();

    // Pairwise centroid separations.
    let sep = |a: usize, b: usize| dist2(&outcome.centroids[a], &outcome.centroids[b]).sqrt();
    let mut min_sep = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            min_sep = min_sep.min(sep(a, b));
        }
    }

    // Silhouette.
    let mut sil_sum = 0.0;
    for i in 0..n {
        let own = outcome.assignments[i];
        let a = if members[own].len() > 1 {
            members[own]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| d(i, j))
                .sum::<f64>()
                / (members[own].len() - 1) as f64
        } else {
            // Singleton: silhouette width defined as 0.
            sil_sum += 0.0;
            continue;
        };
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| members[c].iter().map(|&j| d(i, j)).sum::<f64>() / members[c].len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            sil_sum += (b - a) / denom;
        }
    }
    let silhouette = Some(sil_sum / n as f64);

    // Calinski-Harabasz.
    let dim = points[0].len();
    let mut grand = vec![0.0; dim];
    for p in points {
        for (g, v) in grand.iter_mut().zip(p) {
            *g += v;
        }
    }
    for g in grand.iter_mut() {
        *g /= n as f64;
    }
    let between: f64 = (0..k)
        .map(|c| members[c].len() as f64 * dist2(&outcome.centroids[c], &grand))
        .sum();
    let within: f64 = (0..k)
        .map(|c| {
            members[c]
                .iter()
                .map(|&i| dist2(&points[i], &outcome.centroids[c]))
                .sum::<f64>()
        })
        .sum();
    let calinski_harabasz = if n > k && within > 0.0 {
        Some((between / (k - 1) as f64) / (within / (n - k) as f64))
    } else {
        None
    };

    // Dunn: smallest centroid separation over largest cluster diameter.
    let max_diameter = (0..k)
        .map(|c| {
            let m = &members[c];
            let mut diam = 0.0f64;
            for (pos, &i) in m.iter().enumerate() {
                for &j in &m[pos + 1..] {
                    diam = diam.max(d(i, j));
                }
            }
            diam
        })
        .fold(0.0f64, f64::max);
    let dunn = (max_diameter > 0.0).then(|| min_sep / max_diameter);

    // Davies-Bouldin.
    let scatter: Vec<f64> = (0..k)
        .map(|c| {
            members[c]
                .iter()
                .map(|&i| dist2(&points[i], &outcome.centroids[c]).sqrt())
                .sum::<f64>()
                / members[c].len() as f64
        })
        .collect();
    let davies_bouldin = if min_sep > 0.0 {
        let db = (0..k)
            .map(|a| {
                (0..k)
                    .filter(|&b| b != a)
                    .map(|b| (scatter[a] + scatter[b]) / sep(a, b))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum::<f64>()
            / k as f64;
        Some(db)
    } else {
        None
    };

    // Xie-Beni.
    let xie_beni = (min_sep > 0.0).then(|| within / (n as f64 * min_sep * min_sep));

    IndexScores {
        silhouette,
        calinski_harabasz,
        dunn,
        davies_bouldin,
        xie_beni,
    }
}

/// Scores for one candidate k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEvaluation {
    pub k: usize,
    pub indices: IndexScores,
    /// Min-max normalized across the sweep, oriented so 1 is best.
    pub normalized: IndexScores,
    /// Mean of the valid normalized scores; `None` when all five are invalid.
    pub mean_score: Option<f64>,
}

/// Outcome of a k sweep: per-k scores and the chosen clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub k_min: usize,
    pub k_max: usize,
    pub evaluations: Vec<KEvaluation>,
    pub chosen_k: usize,
    /// Assignments (row-aligned with the input) for the chosen k.
    pub assignments: Vec<usize>,
    /// Centroids of the chosen clustering, in the (normalized) feature space.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn normalize_column(values: &[Option<f64>], maximize: bool) -> Vec<Option<f64>> {
    let valid: Vec<f64> = values.iter().flatten().copied().collect();
    if valid.is_empty() {
        return vec![None; values.len()];
    }
    let min = valid.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = valid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| {
            v.map(|x| {
                if (max - min).abs() < 1e-12 {
                    1.0 // every valid k scored the same: all equally best
                } else if maximize {
                    (x - min) / (max - min)
                } else {
                    (max - x) / (max - min)
                }
            })
        })
        .collect()
}

/// Sweeps `k_min..=k_max` (same seed for every k), scores each clustering,
/// and picks the k with the best mean normalized index — ties resolved
/// toward the smaller, more parsimonious k.
pub fn select_k(points: &[Vec<f64>], k_min: usize, k_max: usize, seed: u64) -> Result<ClusteringReport> {
    validate_points(points)?;
    if k_min < 2 || k_min > k_max {
        return Err(Error::InvalidData {
            what: "k range".into(),
            detail: format!("need 2 <= k_min <= k_max, got {k_min}..={k_max}"),
        });
    }
    if k_max > points.len() {
        return Err(Error::KTooLarge {
            k: k_max,
            points: points.len(),
        });
    }

    let mut outcomes = Vec::new();
    let mut raw_scores = Vec::new();
    for k in k_min..=k_max {
        let outcome = kmeans_cluster(points, k, seed)?;
        raw_scores.push(quality_indices(points, &outcome));
        outcomes.push(outcome);
    }

    // Normalize index by index across the sweep.
    let mut normalized: Vec<[Option<f64>; 5]> = vec![[None; 5]; raw_scores.len()];
    for (idx, &maximize) in IndexScores::MAXIMIZE.iter().enumerate() {
        let column: Vec<Option<f64>> = raw_scores.iter().map(|s| s.as_array()[idx]).collect();
        for (row, value) in normalize_column(&column, maximize).into_iter().enumerate() {
            normalized[row][idx] = value;
        }
    }

    let mut evaluations = Vec::with_capacity(raw_scores.len());
    for ((outcome, indices), norm) in outcomes.iter().zip(&raw_scores).zip(&normalized) {
        let valid: Vec<f64> = norm.iter().flatten().copied().collect();
        evaluations.push(KEvaluation {
            k: outcome.k,
            indices: *indices,
            normalized: IndexScores::from_array(*norm),
            mean_score: (!valid.is_empty())
                .then(|| valid.iter().sum::<f64>() / valid.len() as f64),
        });
    }

    let chosen_idx = evaluations
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.mean_score.map(|s| (i, s)))
        // Strictly-greater comparison on a max fold keeps the first (and so
        // the smallest) k among ties.
        .fold(None::<(usize, f64)>, |best, (i, s)| match best {
            Some((_, bs)) if s <= bs => best,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
        .ok_or(Error::NoValidClustering { k_min, k_max })?;

    let chosen = &outcomes[chosen_idx];
    Ok(ClusteringReport {
        k_min,
        k_max,
        evaluations,
        chosen_k: chosen.k,
        assignments: chosen.assignments.clone(),
        centroids: chosen.centroids.clone(),
        inertia: chosen.inertia,
    })
}
