use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::channel::{CsiSnapshot, UraGeometry};

/// Size of one space-frequency subarray: spatial rows, spatial columns and
/// consecutive subcarrier taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubarrayDims {
    pub rows: usize,
    pub cols: usize,
    pub taps: usize,
}

impl Default for SubarrayDims {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            taps: 32,
        }
    }
}

impl SubarrayDims {
    pub fn spatial(&self) -> usize {
        self.rows * self.cols
    }

    pub fn len(&self) -> usize {
        self.spatial() * self.taps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Covariance of stacked space-frequency subvectors. Entry ordering is
/// `(row * cols + col) * taps + tap`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCovariance {
    pub r: DMatrix<Complex64>,
    pub subarray_dims: SubarrayDims,
    pub n_averages: usize,
}

impl SmoothedCovariance {
    pub fn dim(&self) -> usize {
        self.r.nrows()
    }
}

fn check_dims(
    snapshots: &[CsiSnapshot],
    array: &UraGeometry,
    dims: SubarrayDims,
) -> Result<usize, FeatureError> {
    let first = snapshots
        .first()
        .ok_or_else(|| FeatureError::InvalidInput("no snapshots".into()))?;
    if first.n_elements != array.n_elements() {
        return Err(FeatureError::InvalidDims(format!(
            "snapshot has {} elements, array geometry has {}",
            first.n_elements,
            array.n_elements()
        )));
    }
    if snapshots
        .iter()
        .any(|s| s.n_subcarriers != first.n_subcarriers || s.n_elements != first.n_elements)
    {
        return Err(FeatureError::InvalidDims(
            "snapshots differ in shape".into(),
        ));
    }
    let full = [array.rows, array.cols, first.n_subcarriers];
    let sub = [dims.rows, dims.cols, dims.taps];
    if sub.iter().zip(&full).any(|(s, f)| *s == 0 || s > f) {
        return Err(FeatureError::InvalidDims(format!(
            "subarray {sub:?} does not fit data {full:?}"
        )));
    }
    Ok(first.n_subcarriers)
}

/// Forward-only average of the sample covariances of every space-frequency
/// subarray across all snapshots. A subarray equal to the full data gives the
/// plain sample covariance.
pub fn forward_covariance(
    snapshots: &[CsiSnapshot],
    array: &UraGeometry,
    dims: SubarrayDims,
) -> Result<SmoothedCovariance, FeatureError> {
    let n_sub = check_dims(snapshots, array, dims)?;
    let n = dims.len();
    let offsets_r = array.rows - dims.rows + 1;
    let offsets_c = array.cols - dims.cols + 1;
    let offsets_t = n_sub - dims.taps + 1;
    let per_snapshot = offsets_r * offsets_c * offsets_t;
    let total = per_snapshot * snapshots.len();

    // stack subvectors as columns, split into real and imaginary parts so the
    // outer-product sum runs through real matrix products
    let mut re = DMatrix::<f64>::zeros(n, total);
    let mut im = DMatrix::<f64>::zeros(n, total);
    let mut col = 0;
    for snap in snapshots {
        for or in 0..offsets_r {
            for oc in 0..offsets_c {
                for ot in 0..offsets_t {
                    let mut idx = 0;
                    for ir in 0..dims.rows {
                        for ic in 0..dims.cols {
                            let m = (or + ir) * array.cols + oc + ic;
                            for t in 0..dims.taps {
                                let v = snap.at(ot + t, m);
                                re[(idx, col)] = v.re;
                                im[(idx, col)] = v.im;
                                idx += 1;
                            }
                        }
                    }
                    col += 1;
                }
            }
        }
    }
    let scale = 1.0 / total as f64;
    let real = (&re * re.transpose() + &im * im.transpose()) * scale;
    let imag = (&im * re.transpose() - &re * im.transpose()) * scale;
    let r = DMatrix::from_fn(n, n, |i, j| Complex64::new(real[(i, j)], imag[(i, j)]));
    Ok(SmoothedCovariance {
        r,
        subarray_dims: dims,
        n_averages: total,
    })
}

/// `J conj(R) J` with `J` the exchange matrix.
pub fn backward(r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = r.nrows();
    DMatrix::from_fn(n, n, |i, j| r[(n - 1 - i, n - 1 - j)].conj())
}

/// Forward-backward spatial smoothing over space-frequency subarrays.
///
/// The subarray must be strictly smaller than the data along at least one
/// axis, otherwise there is nothing to average over.
pub fn fb_smooth(
    snapshots: &[CsiSnapshot],
    array: &UraGeometry,
    dims: SubarrayDims,
) -> Result<SmoothedCovariance, FeatureError> {
    let n_sub = check_dims(snapshots, array, dims)?;
    if dims.rows == array.rows && dims.cols == array.cols && dims.taps == n_sub {
        return Err(FeatureError::InvalidDims(
            "subarray equals the full data; no subarrays to average".into(),
        ));
    }
    let fwd = forward_covariance(snapshots, array, dims)?;
    Ok(SmoothedCovariance {
        r: (&fwd.r + backward(&fwd.r)) * Complex64::new(0.5, 0.0),
        ..fwd
    })
}
