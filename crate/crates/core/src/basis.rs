//! POD basis construction and QR-based sensor placement.
//!
//! The basis is built from the raw (uncentered) snapshot matrix. Sensors are
//! the leading pivots of a Householder QR factorization of `Φᵀ` with
//! classical max-residual-norm column pivoting. The restricted variant zeroes
//! the basis rows of inaccessible grid points before pivoting, so indices stay
//! in global grid numbering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a direction counts as numerically zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Training data: one snapshot per column, one grid point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::validation(format!(
                "snapshot matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        check_finite(&data)?;
        Ok(Self { data })
    }

    /// Number of grid points `N`.
    pub fn grid_size(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }
}

/// Candidate sensor locations (`true` = accessible).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessMask {
    accessible: Vec<bool>,
}

impl AccessMask {
    pub fn new(accessible: Vec<bool>) -> Self {
        Self { accessible }
    }

    pub fn all(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> bool) -> Self {
        Self::new((0..n).map(f).collect())
    }

    /// Mask of length `n` that is true exactly at `indices`.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut accessible = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::validation(format!(
                    "accessible index {i} out of range for grid of size {n}"
                )));
            }
            accessible[i] = true;
        }
        Ok(Self { accessible })
    }

    pub fn len(&self) -> usize {
        self.accessible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accessible.is_empty()
    }

    pub fn is_accessible(&self, i: usize) -> bool {
        self.accessible[i]
    }

    pub fn count(&self) -> usize {
        self.accessible.iter().filter(|&&a| a).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.accessible
    }
}

/// Leading POD modes together with the singular values of the snapshot matrix.
#[derive(Debug, Clone)]
pub struct PodBasis {
    /// `N × m`, orthonormal columns, sign-normalized.
    pub modes: DMatrix<f64>,
    /// All singular values of the snapshot matrix, descending.
    pub singular_values: Vec<f64>,
    /// Number of singular values above `RANK_TOLERANCE · σ_max`.
    pub rank: usize,
}

/// Computes the `m` leading left singular vectors of the snapshot matrix.
///
/// Each returned column is flipped so that its entry of largest magnitude is
/// positive (first such entry on ties).
pub fn compute_pod_basis(snapshots: &SnapshotMatrix, m: usize) -> Result<PodBasis> {
    let n = snapshots.grid_size();
    let ns = snapshots.n_snapshots();
    if m == 0 || m > n.min(ns) {
        return Err(Error::validation(format!(
            "number of modes must be in 1..={}, got {m}",
            n.min(ns)
        )));
    }
    let svd = snapshots.data.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let smax = singular_values[0];
    let rank = singular_values
        .iter()
        .take_while(|&&s| smax > 0.0 && s > RANK_TOLERANCE * smax)
        .count();
    if m > rank {
        return Err(Error::RankDeficient { requested: m, rank });
    }
    let mut modes = DMatrix::zeros(n, m);
    for (j, &k) in order.iter().take(m).enumerate() {
        let mut col = u.column(k).clone_owned();
        fix_sign(&mut col);
        modes.set_column(j, &col);
    }
    Ok(PodBasis {
        modes,
        singular_values,
        rank,
    })
}

fn fix_sign(col: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 1..col.len() {
        if col[i].abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.neg_mut();
    }
}

/// Ordered sensor indices plus the magnitudes `|R_kk|` of the QR pivots that chose them.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSelection {
    pub indices: Vec<usize>,
    pub pivot_magnitudes: Vec<f64>,
}

impl SensorSelection {
    /// True if some pivot after the first is negligible relative to the first one,
    /// i.e. the sampled basis is (numerically) rank deficient.
    pub fn is_rank_deficient(&self) -> bool {
        let Some(&first) = self.pivot_magnitudes.first() else {
            return false;
        };
        first <= 0.0 || self.pivot_magnitudes.iter().any(|&p| p <= RANK_TOLERANCE * first)
    }
}

/// Q-DEIM placement: first `r` pivots of column-pivoted QR on `Φᵀ`.
pub fn cpqr_select(phi: &DMatrix<f64>, r: usize) -> Result<SensorSelection> {
    pivoted_qr_pivots(phi, None, r)
}

/// Restricted placement: column-pivoted QR on `(C_a Φ)ᵀ`, with inaccessible rows of `Φ` zeroed.
pub fn restricted_cpqr_select(
    phi: &DMatrix<f64>,
    mask: &AccessMask,
    r: usize,
) -> Result<SensorSelection> {
    if mask.len() != phi.nrows() {
        return Err(Error::Dimension(format!(
            "mask has length {} but basis has {} rows",
            mask.len(),
            phi.nrows()
        )));
    }
    let available = mask.count();
    if available < r {
        return Err(Error::validation(format!(
            "only {available} accessible grid points for {r} sensors"
        )));
    }
    pivoted_qr_pivots(phi, Some(mask), r)
}

fn pivoted_qr_pivots(
    phi: &DMatrix<f64>,
    mask: Option<&AccessMask>,
    r: usize,
) -> Result<SensorSelection> {
    let (n, m) = phi.shape();
    if r == 0 {
        return Err(Error::validation("number of sensors must be positive"));
    }
    if r > n {
        return Err(Error::validation(format!(
            "{r} sensors requested on a grid of {n} points"
        )));
    }
    if r > m {
        return Err(Error::validation(format!(
            "{r} sensors requested but the basis has only {m} columns; pivoted QR yields at most {m} pivots"
        )));
    }
    check_finite(phi)?;

    // Columns of `a` are grid points; the column layout keeps each point contiguous.
    let mut a = phi.transpose();
    let mut candidate: Vec<bool> = match mask {
        Some(mask) => {
            for (i, &acc) in mask.as_slice().iter().enumerate() {
                if !acc {
                    a.column_mut(i).fill(0.0);
                }
            }
            mask.as_slice().to_vec()
        }
        None => vec![true; n],
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(r);

    for k in 0..r {
        let mut best: Option<(usize, f64)> = None;
        for j in k..n {
            if !candidate[j] {
                continue;
            }
            let norm2: f64 = a.view((k, j), (m - k, 1)).iter().map(|v| v * v).sum();
            match best {
                Some((_, b)) if norm2 <= b => {}
                _ => best = Some((j, norm2)),
            }
        }
        let (p, _) = best.expect("accessible count checked above");
        if p != k {
            a.swap_columns(k, p);
            perm.swap(k, p);
            candidate.swap(k, p);
        }

        // Householder reflector annihilating a[k+1.., k].
        let x: Vec<f64> = a.view((k, k), (m - k, 1)).iter().copied().collect();
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        pivots.push(alpha);
        if alpha == 0.0 || m - k == 1 {
            continue;
        }
        let beta = if x[0] >= 0.0 { -alpha } else { alpha };
        let mut v = x;
        v[0] -= beta;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        a[(k, k)] = beta;
        for i in k + 1..m {
            a[(i, k)] = 0.0;
        }
        for j in k + 1..n {
            let mut col = a.view_mut((k, j), (m - k, 1));
            let dot: f64 = v.iter().zip(col.iter()).map(|(vi, ci)| vi * ci).sum();
            let s = 2.0 * dot / vnorm2;
            if s != 0.0 {
                for (ci, vi) in col.iter_mut().zip(v.iter()) {
                    *ci -= s * vi;
                }
            }
        }
    }

    Ok(SensorSelection {
        indices: perm[..r].to_vec(),
        pivot_magnitudes: pivots,
    })
}

/// Basis, sensor indices and sampled basis `Θ = CΦ`, plus cached spectral data of `Θ`.
#[derive(Debug, Clone)]
pub struct BasisBundle {
    phi: DMatrix<f64>,
    sensors: Vec<usize>,
    theta: DMatrix<f64>,
    theta_pinv: DMatrix<f64>,
    theta_singular_values: Vec<f64>,
    theta_rank: usize,
}

/// Copies the sensor rows of `phi` into `Θ` and caches its SVD-derived quantities.
pub fn assemble_bundle(phi: DMatrix<f64>, sensors: Vec<usize>) -> Result<BasisBundle> {
    let (n, m) = phi.shape();
    if sensors.is_empty() {
        return Err(Error::validation("sensor list is empty"));
    }
    let mut seen = vec![false; n];
    for &s in &sensors {
        if s >= n {
            return Err(Error::validation(format!(
                "sensor index {s} out of range for grid of size {n}"
            )));
        }
        if seen[s] {
            return Err(Error::validation(format!("duplicate sensor index {s}")));
        }
        seen[s] = true;
    }
    check_finite(&phi)?;
    let r = sensors.len();
    let theta = DMatrix::from_fn(r, m, |k, j| phi[(sensors[k], j)]);

    let svd = theta.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = RANK_TOLERANCE * smax;
    let theta_rank = sv.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let theta_pinv = svd
        .pseudo_inverse(cutoff.max(f64::MIN_POSITIVE))
        .expect("both factors computed");

    Ok(BasisBundle {
        phi,
        sensors,
        theta,
        theta_pinv,
        theta_singular_values: sv,
        theta_rank,
    })
}

impl BasisBundle {
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn sensors(&self) -> &[usize] {
        &self.sensors
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// Moore-Penrose pseudo-inverse of `Θ` with relative cutoff `RANK_TOLERANCE`.
    pub fn theta_pinv(&self) -> &DMatrix<f64> {
        &self.theta_pinv
    }

    pub fn grid_size(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.phi.ncols()
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn theta_singular_values(&self) -> &[f64] {
        &self.theta_singular_values
    }

    pub fn theta_rank(&self) -> usize {
        self.theta_rank
    }

    /// `Θ` has full rank `min(r, m)`.
    pub fn is_full_rank(&self) -> bool {
        self.theta_rank == self.n_sensors().min(self.n_modes())
    }

    /// Smallest nonzero singular value of `Θ` (0 if `Θ` vanishes).
    pub fn sigma_min(&self) -> f64 {
        if self.theta_rank == 0 {
            0.0
        } else {
            self.theta_singular_values[self.theta_rank - 1]
        }
    }

    /// Samples a full field at the sensor locations, `y = Cu`.
    pub fn sample(&self, field: &DVector<f64>) -> Result<DVector<f64>> {
        if field.len() != self.grid_size() {
            return Err(Error::Dimension(format!(
                "field has length {} but grid has {} points",
                field.len(),
                self.grid_size()
            )));
        }
        Ok(DVector::from_iterator(
            self.sensors.len(),
            self.sensors.iter().map(|&s| field[s]),
        ))
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}
