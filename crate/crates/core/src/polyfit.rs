//! Weighted least-squares fitting of per-axis polynomial trajectories.
//!
//! Each position axis is fitted independently. Coefficients are stored
//! relative to an epoch (the start of the fitting window) so that the normal
//! equations stay well conditioned for large scan indices; use
//! [`AxisPoly::absolute_coeffs`] for the powers-of-t form.

use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix, SpdFactor};
use crate::types::{Measurement, Position2, ScanIndex};
use crate::{Error, Result};

/// One scalar observation of a single position axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSample {
    pub t: f64,
    pub value: f64,
    /// Inverse variance, m⁻².
    pub weight: f64,
}

impl FitSample {
    pub fn new(t: f64, value: f64, weight: f64) -> Self {
        Self { t, value, weight }
    }
}

/// Rows `[1, (t−epoch), …, (t−epoch)^gamma]`.
pub fn design_matrix(times: &[f64], gamma: usize, epoch: f64) -> Matrix {
    let mut a = Matrix::zeros(times.len(), gamma + 1);
    for (i, &t) in times.iter().enumerate() {
        let dt = t - epoch;
        let mut p = 1.0;
        for j in 0..=gamma {
            a[(i, j)] = p;
            p *= dt;
        }
    }
    a
}

/// Polynomial in (t − epoch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPoly {
    pub coeffs: Vec<f64>,
    pub epoch: f64,
}

impl AxisPoly {
    pub fn new(coeffs: Vec<f64>, epoch: f64) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs at least one coefficient");
        Self { coeffs, epoch }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// `n`-th time derivative at `t`.
    pub fn derivative(&self, t: f64, n: usize) -> f64 {
        let dt = t - self.epoch;
        // Horner over the differentiated coefficients.
        let mut acc = 0.0;
        for j in (n..self.coeffs.len()).rev() {
            let falling: f64 = ((j - n + 1)..=j).map(|v| v as f64).product();
            acc = acc * dt + self.coeffs[j] * falling;
        }
        acc
    }

    /// Coefficients of the same polynomial written in powers of t.
    pub fn absolute_coeffs(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let shift = -self.epoch;
        (0..n)
            .map(|m| {
                (m..n)
                    .map(|j| self.coeffs[j] * binomial(j, m) * shift.powi((j - m) as i32))
                    .sum()
            })
            .collect()
    }

    /// Weighted sum of squared residuals Σ wᵢ (yᵢ − p(tᵢ))².
    pub fn cost(&self, samples: &[FitSample]) -> f64 {
        samples
            .iter()
            .map(|s| {
                let r = s.value - self.evaluate(s.t);
                s.weight * r * r
            })
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Result of a weighted fit on one axis: the estimate and its covariance
/// (AᵀWA)⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisFit {
    pub poly: AxisPoly,
    pub cov: Vec<Vec<f64>>,
}

impl AxisFit {
    pub fn cov_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.cov)
    }
}

fn distinct_times(samples: &[FitSample]) -> usize {
    let mut ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts.len()
}

/// Weighted least-squares polynomial fit of order `gamma`.
///
/// Returns coefficients (AᵀWA)⁻¹AᵀWy and their covariance (AᵀWA)⁻¹ with
/// W = diag(weights). With exactly `gamma + 1` distinct times the result
/// interpolates the samples.
pub fn wls_fit(samples: &[FitSample], gamma: usize, epoch: f64) -> Result<AxisFit> {
    wls_fit_constrained(samples, gamma, epoch, &[])
}

/// As [`wls_fit`], with some coefficients held at fixed values.
///
/// `fixed` lists `(index, value)` pairs for coefficients of the
/// epoch-relative polynomial. Fixed coefficients get zero variance.
pub fn wls_fit_constrained(
    samples: &[FitSample],
    gamma: usize,
    epoch: f64,
    fixed: &[(usize, f64)],
) -> Result<AxisFit> {
    if let Some(&(j, _)) = fixed.iter().find(|(j, _)| *j > gamma) {
        return Err(Error::invalid(format!("constrained coefficient {j} exceeds order {gamma}")));
    }
    if let Some(s) = samples.iter().find(|s| !(s.weight > 0.0) || !s.value.is_finite()) {
        return Err(Error::invalid(format!("bad fit sample {s:?}")));
    }
    let mut free: Vec<usize> = (0..=gamma).collect();
    free.retain(|j| !fixed.iter().any(|(f, _)| f == j));
    let needed = free.len();
    let got = distinct_times(samples);
    if got < needed {
        return Err(Error::InsufficientData { needed, got });
    }

    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let full = design_matrix(&times, gamma, epoch);

    let mut coeffs = vec![0.0; gamma + 1];
    for &(j, v) in fixed {
        coeffs[j] = v;
    }
    let mut cov = vec![vec![0.0; gamma + 1]; gamma + 1];
    if free.is_empty() {
        return Ok(AxisFit {
            poly: AxisPoly::new(coeffs, epoch),
            cov,
        });
    }

    // Normal equations over the free columns, with fixed terms moved to the
    // right-hand side.
    let n = free.len();
    let mut normal = Matrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (i, s) in samples.iter().enumerate() {
        let row = full.row(i);
        let offset: f64 = fixed.iter().map(|&(j, v)| row[j] * v).sum();
        let y = s.value - offset;
        for (a, &ja) in free.iter().enumerate() {
            rhs[a] += s.weight * row[ja] * y;
            for (b, &jb) in free.iter().enumerate() {
                normal[(a, b)] += s.weight * row[ja] * row[jb];
            }
        }
    }
    let factor = SpdFactor::new(&normal)?;
    let solution = factor.solve(&rhs);
    for (a, &ja) in free.iter().enumerate() {
        coeffs[ja] = solution[a];
        for (b, &jb) in free.iter().enumerate() {
            cov[ja][jb] = factor.inverse()[(a, b)];
        }
    }
    Ok(AxisFit {
        poly: AxisPoly::new(coeffs, epoch),
        cov,
    })
}

/// Per-axis samples for a set of timed position measurements, weighting each
/// axis by its own inverse variance. Cross-axis correlation is dropped.
pub fn axis_samples(points: &[(ScanIndex, Measurement)], dim: usize) -> Vec<FitSample> {
    points
        .iter()
        .map(|(k, m)| FitSample::new(f64::from(*k), m.pos.component(dim), 1.0 / m.cov.variance(dim)))
        .collect()
}

/// A fitted trajectory function of time: one polynomial per position axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTrajectory {
    pub gamma: usize,
    pub epoch: ScanIndex,
    pub axes: [AxisFit; 2],
    /// First and last scan of the data the fit was computed from.
    pub window: (ScanIndex, ScanIndex),
}

impl PolyTrajectory {
    /// Fits both axes over `points`, using the earliest scan as epoch.
    pub fn fit(points: &[(ScanIndex, Measurement)], gamma: usize) -> Result<Self> {
        let start = points.iter().map(|(k, _)| *k).min();
        let end = points.iter().map(|(k, _)| *k).max();
        let (Some(start), Some(end)) = (start, end) else {
            return Err(Error::InsufficientData {
                needed: gamma + 1,
                got: 0,
            });
        };
        let epoch = f64::from(start);
        let x = wls_fit(&axis_samples(points, 0), gamma, epoch)?;
        let y = wls_fit(&axis_samples(points, 1), gamma, epoch)?;
        Ok(Self {
            gamma,
            epoch: start,
            axes: [x, y],
            window: (start, end),
        })
    }

    /// Builds a trajectory directly from epoch-relative coefficients.
    pub fn from_coeffs(x: Vec<f64>, y: Vec<f64>, epoch: ScanIndex) -> Self {
        assert_eq!(x.len(), y.len(), "both axes need the same order");
        let gamma = x.len() - 1;
        let zero = vec![vec![0.0; gamma + 1]; gamma + 1];
        let e = f64::from(epoch);
        Self {
            gamma,
            epoch,
            axes: [
                AxisFit {
                    poly: AxisPoly::new(x, e),
                    cov: zero.clone(),
                },
                AxisFit {
                    poly: AxisPoly::new(y, e),
                    cov: zero,
                },
            ],
            window: (epoch, epoch),
        }
    }

    /// Position at time `t`: smoothing before the window end, filtering at
    /// it, prediction after it.
    pub fn evaluate(&self, t: f64) -> Position2 {
        Position2::new(self.axes[0].poly.evaluate(t), self.axes[1].poly.evaluate(t))
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        [self.axes[0].poly.derivative(t, 1), self.axes[1].poly.derivative(t, 1)]
    }

    pub fn acceleration(&self, t: f64) -> [f64; 2] {
        [self.axes[0].poly.derivative(t, 2), self.axes[1].poly.derivative(t, 2)]
    }

    /// Total weighted squared residual over both axes.
    pub fn fit_cost(&self, points: &[(ScanIndex, Measurement)]) -> f64 {
        (0..2).map(|d| self.axes[d].poly.cost(&axis_samples(points, d))).sum()
    }

    /// Coefficients in powers of absolute time, per axis.
    pub fn absolute_coeffs(&self) -> [Vec<f64>; 2] {
        [self.axes[0].poly.absolute_coeffs(), self.axes[1].poly.absolute_coeffs()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Cov2;

    fn unit(ts: &[f64], f: impl Fn(f64) -> f64) -> Vec<FitSample> {
        ts.iter().map(|&t| FitSample::new(t, f(t), 1.0)).collect()
    }

    #[test]
    fn design_matrix_rows() {
        assert_eq!(
            design_matrix(&[0.0, 1.0, 2.0], 1, 0.0).to_rows(),
            vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]
        );
        assert_eq!(design_matrix(&[5.0], 2, 5.0).to_rows(), vec![vec![1.0, 0.0, 0.0]]);
        assert_eq!(
            design_matrix(&[3.0, 4.0], 1, 3.0).to_rows(),
            vec![vec![1.0, 0.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn exact_linear_recovery() {
        let fit = wls_fit(&unit(&[0.0, 1.0, 2.0], |t| 2.0 + 3.0 * t), 1, 0.0).unwrap();
        assert!((fit.poly.coeffs[0] - 2.0).abs() < 1e-9);
        assert!((fit.poly.coeffs[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn covariance_of_three_point_line() {
        // AᵀA = [[3,3],[3,5]] → inverse (1/6)[[5,−3],[−3,3]].
        let fit = wls_fit(&unit(&[0.0, 1.0, 2.0], |_| 0.0), 1, 0.0).unwrap();
        let want = [[5.0 / 6.0, -0.5], [-0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((fit.cov[i][j] - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolates_with_minimal_samples() {
        let s = vec![
            FitSample::new(1.0, 4.0, 2.0),
            FitSample::new(2.0, -1.0, 0.5),
            FitSample::new(4.0, 3.0, 9.0),
        ];
        let fit = wls_fit(&s, 2, 1.0).unwrap();
        for x in &s {
            assert!((fit.poly.evaluate(x.t) - x.value).abs() < 1e-9);
        }
        assert!(fit.poly.cost(&s) < 1e-15);
    }

    #[test]
    fn insufficient_distinct_times() {
        let s = unit(&[1.0, 1.0, 1.0], |_| 1.0);
        assert!(matches!(
            wls_fit(&s, 1, 0.0),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn evaluation_and_derivatives() {
        let tr = PolyTrajectory::from_coeffs(vec![2.0, 3.0], vec![0.0, 1.0], 0);
        assert_eq!(tr.evaluate(2.0), Position2::new(8.0, 2.0));
        assert_eq!(tr.evaluate(0.0), Position2::new(2.0, 0.0));
        assert_eq!(tr.velocity(17.0), [3.0, 1.0]);
        assert_eq!(tr.acceleration(5.0), [0.0, 0.0]);

        let q = PolyTrajectory::from_coeffs(vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], 0);
        assert_eq!(q.evaluate(3.0).x, 10.0);
        assert_eq!(q.velocity(2.0)[1], 4.0);
        assert_eq!(q.acceleration(2.0)[1], 2.0);
    }

    #[test]
    fn single_residual_cost() {
        let p = AxisPoly::new(vec![1.0, 1.0], 0.0);
        let s = [FitSample::new(2.0, 3.0 + 0.5, 4.0)];
        assert!((p.cost(&s) - 4.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn absolute_coefficients_match_shifted_form() {
        let p = AxisPoly::new(vec![1.5, -0.25, 0.125], 100.0);
        let abs = AxisPoly::new(p.absolute_coeffs(), 0.0);
        for t in [95.0, 100.0, 103.5, 120.0] {
            assert!((p.evaluate(t) - abs.evaluate(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn constrained_fit_holds_fixed_coefficient() {
        let s = unit(&[0.0, 1.0, 2.0, 3.0], |t| 5.0 + 2.0 * t + 0.3 * (t - 1.5).powi(2));
        let fit = wls_fit_constrained(&s, 1, 0.0, &[(0, 5.0)]).unwrap();
        assert_eq!(fit.poly.coeffs[0], 5.0);
        assert_eq!(fit.cov[0], vec![0.0, 0.0]);
        // Closed form for slope with known intercept: Σ t (y−5) / Σ t².
        let num: f64 = s.iter().map(|x| x.t * (x.value - 5.0)).sum();
        let den: f64 = s.iter().map(|x| x.t * x.t).sum();
        assert!((fit.poly.coeffs[1] - num / den).abs() < 1e-12);
        assert!((fit.cov[1][1] - 1.0 / den).abs() < 1e-12);
    }

    #[test]
    fn trajectory_fit_uses_per_axis_variances() {
        let pts: Vec<(ScanIndex, Measurement)> = (10..14)
            .map(|k| {
                let t = f64::from(k);
                (k, Measurement::new(Position2::new(t * 2.0, 50.0 - t), Cov2::diag(4.0, 25.0)))
            })
            .collect();
        let tr = PolyTrajectory::fit(&pts, 1).unwrap();
        assert_eq!(tr.epoch, 10);
        assert_eq!(tr.window, (10, 13));
        assert!((tr.evaluate(20.0).x - 40.0).abs() < 1e-9);
        assert!((tr.evaluate(20.0).y - 30.0).abs() < 1e-9);
        // Uniform weights scale the unit-weight covariance by the variance.
        assert!((tr.axes[1].cov[1][1] / tr.axes[0].cov[1][1] - 25.0 / 4.0).abs() < 1e-9);
        assert!(tr.fit_cost(&pts) < 1e-12);
    }
}
