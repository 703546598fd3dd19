//! Domain types shared by every solver.
//!
//! Conventions: rates and throughputs in bits/s, durations in seconds,
//! airtimes as fractions of an AP's data-transmission interval `T - O`,
//! utilities in nats. Clients index rows, APs index columns.

use crate::error::{Error, Result};

/// Relative tolerance used by every feasibility check.
pub const TOL: f64 = 1e-9;

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self { rows: n, cols: m, data: rows.concat() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Beacon-interval timing of one AP.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Super-frame (beacon interval) duration, seconds.
    pub superframe: f64,
    /// Overhead inside the super-frame (beacons, beamforming training), seconds.
    pub overhead: f64,
}

impl FrameConfig {
    pub fn new(superframe: f64, overhead: f64) -> Result<Self> {
        let f = Self { superframe, overhead };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.overhead > 0.0 && self.overhead < self.superframe && self.superframe.is_finite()) {
            return Err(Error::Invalid(format!(
                "frame config needs 0 < overhead < superframe, got O={} T={}",
                self.overhead, self.superframe
            )));
        }
        Ok(())
    }

    /// Data-interval efficiency `h = (T - O) / T`.
    pub fn efficiency(&self) -> f64 {
        (self.superframe - self.overhead) / self.superframe
    }

    /// Length of the data-transmission interval, seconds.
    pub fn data_interval(&self) -> f64 {
        self.superframe - self.overhead
    }
}

impl Default for FrameConfig {
    /// 100 ms beacon interval with 10% overhead.
    fn default() -> Self {
        Self { superframe: 0.100, overhead: 0.010 }
    }
}

/// Achievable PHY rate of every client/AP pair. A zero entry marks an
/// infeasible link.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix(Matrix);

impl RateMatrix {
    /// Validates non-negativity, finiteness, and that every client reaches
    /// at least one AP.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::Shape("rate matrix needs at least one client and one AP".into()));
        }
        if let Some(&bad) = m.as_slice().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Invalid(format!("rate {bad} is not a finite non-negative value")));
        }
        for i in 0..m.rows() {
            if m.row(i).iter().all(|&r| r == 0.0) {
                return Err(Error::ClientOutOfCoverage { client: i });
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn n_clients(&self) -> usize {
        self.0.rows()
    }

    pub fn n_aps(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn get(&self, client: usize, ap: usize) -> f64 {
        self.0.get(client, ap)
    }

    #[inline]
    pub fn feasible(&self, client: usize, ap: usize) -> bool {
        self.0.get(client, ap) > 0.0
    }

    pub fn row(&self, client: usize) -> &[f64] {
        self.0.row(client)
    }

    /// APs reachable by `client`, in index order.
    pub fn feasible_aps(&self, client: usize) -> Vec<usize> {
        (0..self.n_aps()).filter(|&j| self.feasible(client, j)).collect()
    }

    /// Returns a copy with every rate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut m = self.0.clone();
        m.data.iter_mut().for_each(|v| *v *= c);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Offered load per client, or the saturated (backlogged) marker.
#[derive(Debug, Clone, PartialEq)]
pub enum Demand {
    Saturated,
    Finite(Vec<f64>),
}

impl Demand {
    pub fn finite(loads: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = loads.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Invalid(format!("demand of client {i} must be positive, got {v}")));
        }
        Ok(Self::Finite(loads))
    }

    pub fn loads(&self) -> Option<&[f64]> {
        match self {
            Demand::Saturated => None,
            Demand::Finite(v) => Some(v),
        }
    }
}

/// Integer association: each client is served by exactly one AP.
///
/// Stored as the AP index of every client, which makes the one-AP-per-row
/// constraint structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Association(Vec<usize>);

impl Association {
    /// Validates against `rates`: every link used must be feasible.
    pub fn new(aps: Vec<usize>, rates: &RateMatrix) -> Result<Self> {
        if aps.len() != rates.n_clients() {
            return Err(Error::Shape(format!(
                "association has {} clients, rate matrix {}",
                aps.len(),
                rates.n_clients()
            )));
        }
        for (i, &j) in aps.iter().enumerate() {
            if j >= rates.n_aps() {
                return Err(Error::Shape(format!("client {i} assigned to unknown AP {j}")));
            }
            if !rates.feasible(i, j) {
                return Err(Error::InfeasibleLink { client: i, ap: j });
            }
        }
        Ok(Self(aps))
    }

    /// Builds without checking link feasibility. Callers guarantee validity.
    pub(crate) fn from_vec_unchecked(aps: Vec<usize>) -> Self {
        Self(aps)
    }

    #[inline]
    pub fn ap_of(&self, client: usize) -> usize {
        self.0[client]
    }

    pub(crate) fn set(&mut self, client: usize, ap: usize) {
        self.0[client] = ap;
    }

    pub fn n_clients(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of clients on each of `n_aps` APs.
    pub fn loads(&self, n_aps: usize) -> Vec<usize> {
        let mut n = vec![0; n_aps];
        for &j in &self.0 {
            n[j] += 1;
        }
        n
    }

    /// Clients associated to `ap`, in index order.
    pub fn clients_of(&self, ap: usize) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &j)| j == ap).map(|(i, _)| i).collect()
    }

    /// Binary 0/1 matrix form.
    pub fn to_matrix(&self, n_aps: usize) -> Matrix {
        let mut m = Matrix::zeros(self.0.len(), n_aps);
        for (i, &j) in self.0.iter().enumerate() {
            m.set(i, j, 1.0);
        }
        m
    }
}

/// Relaxed association with entries in `[0, 1]` and row sums at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssociation(Matrix);

impl FractionalAssociation {
    pub fn new(m: Matrix, rates: &RateMatrix) -> Result<Self> {
        if m.rows() != rates.n_clients() || m.cols() != rates.n_aps() {
            return Err(Error::Shape("fractional association does not match rate matrix".into()));
        }
        for i in 0..m.rows() {
            let row = m.row(i);
            if row.iter().any(|v| !(0.0..=1.0 + TOL).contains(v)) {
                return Err(Error::Invalid(format!("row {i} has entries outside [0, 1]")));
            }
            if row.iter().sum::<f64>() > 1.0 + TOL {
                return Err(Error::Invalid(format!("row {i} sums above one")));
            }
            if let Some(j) = (0..m.cols()).find(|&j| row[j] > 0.0 && !rates.feasible(i, j)) {
                return Err(Error::InfeasibleLink { client: i, ap: j });
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        Self(m)
    }

    pub fn from_association(x: &Association, n_aps: usize) -> Self {
        Self(x.to_matrix(n_aps))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Per-client airtime as a fraction of each AP's data-transmission interval.
#[derive(Debug, Clone, PartialEq)]
pub struct AirtimeAllocation(Matrix);

impl AirtimeAllocation {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.as_slice().iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Invalid("airtimes must be finite and non-negative".into()));
        }
        Ok(Self(m))
    }

    pub(crate) fn zeros(n: usize, m: usize) -> Self {
        Self(Matrix::zeros(n, m))
    }

    #[inline]
    pub fn get(&self, client: usize, ap: usize) -> f64 {
        self.0.get(client, ap)
    }

    pub(crate) fn set(&mut self, client: usize, ap: usize, v: f64) {
        self.0.set(client, ap, v)
    }

    /// Fraction held by `client` on its associated AP.
    pub fn share(&self, x: &Association, client: usize) -> f64 {
        self.0.get(client, x.ap_of(client))
    }

    /// Total fraction handed out by `ap`.
    pub fn column_sum(&self, ap: usize) -> f64 {
        self.0.col_sum(ap)
    }

    /// Airtime of `client` on `ap` in seconds per super-frame.
    pub fn absolute(&self, client: usize, ap: usize, frame: &FrameConfig) -> f64 {
        self.0.get(client, ap) * frame.data_interval()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Checks `t > 0 => x = 1` and per-AP budget `sum <= 1 + TOL`.
    pub fn check_consistent(&self, x: &Association) -> Result<()> {
        for i in 0..self.0.rows() {
            for j in 0..self.0.cols() {
                if self.0.get(i, j) > 0.0 && x.ap_of(i) != j {
                    return Err(Error::Invalid(format!("client {i} holds airtime on AP {j} it is not associated to")));
                }
            }
        }
        for j in 0..self.0.cols() {
            if self.column_sum(j) > 1.0 + TOL {
                return Err(Error::Invalid(format!("AP {j} hands out more than its budget")));
            }
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub policy: String,
    pub seed: u64,
    /// Sum of log throughputs, nats.
    pub utility: f64,
    pub per_client_throughput: Vec<f64>,
    pub aggregate_throughput: f64,
    pub iterations: usize,
    /// Wall-clock time, seconds.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn new(policy: impl Into<String>, seed: u64, per_client_throughput: Vec<f64>, utility: f64) -> Self {
        let aggregate_throughput = per_client_throughput.iter().sum();
        Self {
            policy: policy.into(),
            seed,
            utility,
            per_client_throughput,
            aggregate_throughput,
            iterations: 0,
            wall_time: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_efficiency() {
        let f = FrameConfig::new(0.1, 0.01).unwrap();
        assert!((f.efficiency() - 0.9).abs() < 1e-15);
        assert!(FrameConfig::new(0.1, 0.1).is_err());
        assert!(FrameConfig::new(0.1, 0.0).is_err());
    }

    #[test]
    fn rate_matrix_rejects_uncovered_client() {
        let err = RateMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::ClientOutOfCoverage { client: 1 }));
        assert!(RateMatrix::from_rows(&[vec![-1.0, 1.0]]).is_err());
        assert!(RateMatrix::from_rows(&[vec![f64::NAN, 1.0]]).is_err());
    }

    #[test]
    fn association_rejects_infeasible_link() {
        let r = RateMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(Association::new(vec![0, 1], &r).is_ok());
        assert!(matches!(
            Association::new(vec![1, 1], &r),
            Err(Error::InfeasibleLink { client: 0, ap: 1 })
        ));
        assert!(Association::new(vec![0], &r).is_err());
    }

    #[test]
    fn fractional_rows_bounded() {
        let r = RateMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let ok = Matrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(FractionalAssociation::new(ok, &r).is_ok());
        let bad = Matrix::from_rows(&[vec![0.7, 0.5]]).unwrap();
        assert!(FractionalAssociation::new(bad, &r).is_err());
    }

    #[test]
    fn demand_must_be_positive() {
        assert!(Demand::finite(vec![1.0, 0.0]).is_err());
        assert!(Demand::finite(vec![1.0, 2.0]).is_ok());
    }
}
