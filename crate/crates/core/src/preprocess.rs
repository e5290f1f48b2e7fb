//! Turns measured spectra into network inputs: baseline subtraction,
//! natural cubic spline resampling onto the 350..=1800 cm^-1 grid at
//! 1 cm^-1 spacing, and max normalization.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub const GRID_START: f64 = 350.0;
pub const GRID_END: f64 = 1800.0;
/// Number of points on the model grid.
pub const GRID_LEN: usize = 1451;

/// The integer wavenumbers `350, 351, ..., 1800`.
pub fn model_grid() -> Vec<f64> {
    (0..GRID_LEN).map(|i| GRID_START + i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSpectrum {
    pub wavenumber: Vec<f64>,
    pub counts: Vec<f64>,
}

impl RawSpectrum {
    /// Needs at least four samples on a strictly increasing axis.
    pub fn new(wavenumber: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        check_dim("raw spectrum columns", wavenumber.len(), counts.len())?;
        if wavenumber.len() < 4 {
            return Err(Error::Input(format!(
                "a spectrum needs at least 4 samples, got {}",
                wavenumber.len()
            )));
        }
        if let Some(i) = wavenumber.iter().chain(&counts).position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value at sample {}", i % wavenumber.len())));
        }
        if let Some(i) = wavenumber.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Input(format!(
                "wavenumbers not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(Self { wavenumber, counts })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// Straight line through the first and last samples.
    #[default]
    EndpointChord,
    /// Ordinary least-squares line through all samples.
    LeastSquares,
}

pub fn subtract_linear_baseline(raw: &RawSpectrum) -> RawSpectrum {
    subtract_baseline(raw, BaselineMode::EndpointChord)
}

pub fn subtract_baseline(raw: &RawSpectrum, mode: BaselineMode) -> RawSpectrum {
    let x = &raw.wavenumber;
    let y = &raw.counts;
    let n = x.len();
    let line: Box<dyn Fn(usize) -> f64> = match mode {
        BaselineMode::EndpointChord => {
            let (x0, x1, y0, y1) = (x[0], x[n - 1], y[0], y[n - 1]);
            Box::new(move |i| y0 + (x[i] - x0) / (x1 - x0) * (y1 - y0))
        }
        BaselineMode::LeastSquares => {
            let nf = n as f64;
            let mx = x.iter().sum::<f64>() / nf;
            let my = y.iter().sum::<f64>() / nf;
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
            let slope = sxy / sxx;
            Box::new(move |i| my + slope * (x[i] - mx))
        }
    };
    let counts = (0..n)
        .map(|i| {
            let v = y[i] - line(i);
            if mode == BaselineMode::EndpointChord && (i == 0 || i == n - 1) {
                0.0
            } else {
                v
            }
        })
        .collect();
    RawSpectrum {
        wavenumber: x.clone(),
        counts,
    }
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivative at each knot; zero at both ends.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        check_dim("spline knots", x.len(), y.len())?;
        let n = x.len();
        if n < 4 {
            return Err(Error::Input(format!("cubic spline needs at least 4 knots, got {n}")));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // Tridiagonal system for the interior second derivatives, solved
        // with the Thomas algorithm.
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for j in 0..k {
            let i = j + 1;
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            upper[j] = h[i];
            rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        for j in 1..k {
            let w = h[j] / diag[j - 1];
            diag[j] -= w * upper[j - 1];
            rhs[j] -= w * rhs[j - 1];
        }
        let mut m = vec![0.0; n];
        for j in (0..k).rev() {
            let next = if j + 1 < k { m[j + 2] } else { 0.0 };
            m[j + 1] = (rhs[j] - upper[j] * next) / diag[j];
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    /// Evaluates inside the knot range; outside it, returns the nearest
    /// knot value instead of extrapolating.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub values: Vec<f64>,
    /// Grid points outside the measured range, filled with the nearest sample.
    pub clamped: usize,
}

/// Evaluates a natural cubic spline through `raw` at every `grid` point.
pub fn spline_resample(raw: &RawSpectrum, grid: &[f64]) -> Result<Resampled> {
    let spline = CubicSpline::natural(&raw.wavenumber, &raw.counts)?;
    let (lo, hi) = spline.domain();
    let clamped = grid.iter().filter(|&&g| g < lo || g > hi).count();
    Ok(Resampled {
        values: grid.iter().map(|&g| spline.eval(g)).collect(),
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when the input had no positive maximum and was left unchanged.
    pub degenerate: bool,
}

/// Divides by the maximum when it is positive.
pub fn normalize_intensity(v: &[f64]) -> Normalized {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        Normalized {
            values: v.iter().map(|x| x / max).collect(),
            degenerate: false,
        }
    } else {
        Normalized {
            values: v.to_vec(),
            degenerate: true,
        }
    }
}

/// A spectrum on the model grid, ready for the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInput {
    pub intensity: Vec<f64>,
}

impl ModelInput {
    pub fn new(intensity: Vec<f64>) -> Result<Self> {
        check_dim("model input length", GRID_LEN, intensity.len())?;
        Ok(Self { intensity })
    }

    pub fn grid(&self) -> Vec<f64> {
        model_grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub input: ModelInput,
    pub clamped: usize,
    pub degenerate: bool,
}

/// Baseline subtraction, then resampling, then normalization.
pub fn preprocess_pipeline(raw: &RawSpectrum) -> Result<Preprocessed> {
    preprocess_with(raw, BaselineMode::EndpointChord)
}

pub fn preprocess_with(raw: &RawSpectrum, baseline: BaselineMode) -> Result<Preprocessed> {
    let raw = RawSpectrum::new(raw.wavenumber.clone(), raw.counts.clone())?;
    let flat = subtract_baseline(&raw, baseline);
    let resampled = spline_resample(&flat, &model_grid())?;
    let norm = normalize_intensity(&resampled.values);
    Ok(Preprocessed {
        input: ModelInput::new(norm.values)?,
        clamped: resampled.clamped,
        degenerate: norm.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent natural-spline oracle: solves for all 4(n-1) piecewise
    /// polynomial coefficients at once with dense Gaussian elimination.
    fn dense_spline(x: &[f64], y: &[f64]) -> impl Fn(f64) -> f64 {
        let n = x.len();
        let segs = n - 1;
        let dim = 4 * segs;
        let mut a = vec![vec![0.0; dim + 1]; dim];
        let mut row = 0;
        // piece i: c0 + c1 u + c2 u^2 + c3 u^3 with u = t - x_i
        for i in 0..segs {
            let h = x[i + 1] - x[i];
            a[row][4 * i] = 1.0;
            a[row][dim] = y[i];
            row += 1;
            a[row][4 * i] = 1.0;
            a[row][4 * i + 1] = h;
            a[row][4 * i + 2] = h * h;
            a[row][4 * i + 3] = h * h * h;
            a[row][dim] = y[i + 1];
            row += 1;
        }
        for i in 0..segs - 1 {
            let h = x[i + 1] - x[i];
            // first derivative continuity
            a[row][4 * i + 1] = 1.0;
            a[row][4 * i + 2] = 2.0 * h;
            a[row][4 * i + 3] = 3.0 * h * h;
            a[row][4 * (i + 1) + 1] = -1.0;
            row += 1;
            // second derivative continuity
            a[row][4 * i + 2] = 2.0;
            a[row][4 * i + 3] = 6.0 * h;
            a[row][4 * (i + 1) + 2] = -2.0;
            row += 1;
        }
        a[row][2] = 2.0;
        row += 1;
        let hl = x[n - 1] - x[n - 2];
        a[row][4 * (segs - 1) + 2] = 2.0;
        a[row][4 * (segs - 1) + 3] = 6.0 * hl;
        row += 1;
        assert_eq!(row, dim);
        for col in 0..dim {
            let piv = (col..dim).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
            a.swap(col, piv);
            for r in 0..dim {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    if f != 0.0 {
                        for c in col..=dim {
                            a[r][c] -= f * a[col][c];
                        }
                    }
                }
            }
        }
        let coef: Vec<f64> = (0..dim).map(|r| a[r][dim] / a[r][r]).collect();
        let xs = x.to_vec();
        move |t: f64| {
            let i = (0..segs).rev().find(|&i| t >= xs[i]).unwrap_or(0);
            let u = t - xs[i];
            coef[4 * i] + u * (coef[4 * i + 1] + u * (coef[4 * i + 2] + u * coef[4 * i + 3]))
        }
    }

    #[test]
    fn raw_validation() {
        assert!(RawSpectrum::new(vec![1.0, 2.0, 3.0], vec![0.0; 3]).is_err());
        assert!(RawSpectrum::new(vec![1.0, 2.0, 2.0, 3.0], vec![0.0; 4]).is_err());
        assert!(RawSpectrum::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 3]).is_err());
        assert!(RawSpectrum::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn chord_removes_lines_and_constants() {
        let x: Vec<f64> = (0..20).map(|i| 300.0 + 7.5 * i as f64).collect();
        let lin = RawSpectrum::new(x.clone(), x.iter().map(|v| 3.0 - 0.02 * v).collect()).unwrap();
        assert!(subtract_linear_baseline(&lin).counts.iter().all(|v| v.abs() < 1e-12));
        let c = RawSpectrum::new(x.clone(), vec![4.2; 20]).unwrap();
        assert!(subtract_linear_baseline(&c).counts.iter().all(|&v| v == 0.0));
        let ls = subtract_baseline(&lin, BaselineMode::LeastSquares);
        assert!(ls.counts.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn chord_keeps_peak_on_tilted_baseline() {
        let x: Vec<f64> = (0..400).map(|i| 400.0 + 3.0 * i as f64).collect();
        let peak = |t: f64| 5.0 / (1.0 + ((t - 900.0) / 4.0).powi(2));
        // The peak's own tails are not zero at the ends; the chord removes
        // the line through the end values of peak + baseline.
        let y: Vec<f64> = x.iter().map(|&t| peak(t) + 0.7 + 0.004 * t).collect();
        let out = subtract_linear_baseline(&RawSpectrum::new(x.clone(), y).unwrap());
        let (x0, x1) = (x[0], x[399]);
        for (i, &t) in x.iter().enumerate() {
            let s = (t - x0) / (x1 - x0);
            let expect = peak(t) - (peak(x0) + s * (peak(x1) - peak(x0)));
            assert!((out.counts[i] - expect).abs() < 1e-12);
        }
        assert_eq!(out.counts[0], 0.0);
        assert_eq!(out.counts[399], 0.0);
    }

    #[test]
    fn spline_interpolates_knots_and_reproduces_lines() {
        let x: Vec<f64> = (0..30).map(|i| 350.0 + i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| (t * 0.3).sin() * 10.0).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        for (t, v) in x.iter().zip(&y) {
            assert!((s.eval(*t) - v).abs() < 1e-12);
        }
        let xs: Vec<f64> = vec![350.0, 351.7, 355.0, 360.2, 371.0, 380.0];
        let ys: Vec<f64> = xs.iter().map(|t| 2.0 * t - 5.0).collect();
        let lin = CubicSpline::natural(&xs, &ys).unwrap();
        for k in 0..300 {
            let t = 350.0 + k as f64 * 0.1;
            assert!((lin.eval(t) - (2.0 * t - 5.0)).abs() < 1e-9);
        }
        assert!(CubicSpline::natural(&xs[..3], &ys[..3]).is_err());
    }

    #[test]
    fn spline_matches_dense_oracle() {
        // sine sampled every 2 cm^-1, uneven wiggle added to the knots
        let x: Vec<f64> = (0..51).map(|i| 350.0 + 2.0 * i as f64 + if i % 3 == 1 { 0.4 } else { 0.0 }).collect();
        let y: Vec<f64> = x.iter().map(|t| (t / 7.0).sin()).collect();
        let ours = CubicSpline::natural(&x, &y).unwrap();
        let oracle = dense_spline(&x, &y);
        let raw = RawSpectrum::new(x.clone(), y.clone()).unwrap();
        let grid: Vec<f64> = (350..=450).map(f64::from).collect();
        let res = spline_resample(&raw, &grid).unwrap();
        for (g, v) in grid.iter().zip(&res.values) {
            assert!((v - oracle(*g)).abs() < 1e-6, "at {g}");
            assert!((ours.eval(*g) - v).abs() == 0.0);
        }
        assert_eq!(res.clamped, 0);
    }

    #[test]
    fn out_of_range_grid_clamps() {
        let raw = RawSpectrum::new(vec![400.0, 500.0, 600.0, 700.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = spline_resample(&raw, &[350.0, 400.0, 750.0]).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert_eq!(r.values[2], 4.0);
        assert_eq!(r.clamped, 2);
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(normalize_intensity(&[2.0, 4.0, 8.0]).values, vec![0.25, 0.5, 1.0]);
        assert_eq!(normalize_intensity(&[0.25, 1.0]).values, vec![0.25, 1.0]);
        let z = normalize_intensity(&[0.0; 3]);
        assert!(z.degenerate);
        assert_eq!(z.values, vec![0.0; 3]);
    }

    fn tilted_peak_raw(center: f64, start: f64, step: f64, end: f64) -> RawSpectrum {
        let n = ((end - start) / step).floor() as usize + 1;
        let x: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        let y = x
            .iter()
            .map(|&t| 800.0 / (1.0 + ((t - center) / 5.0).powi(2)) + 120.0 + 0.05 * t)
            .collect();
        RawSpectrum::new(x, y).unwrap()
    }

    #[test]
    fn pipeline_recovers_peak_position() {
        for center in [512.3, 1000.0, 1333.7, 1702.5] {
            let raw = tilted_peak_raw(center, 201.37, 0.73, 2000.0);
            let out = preprocess_pipeline(&raw).unwrap();
            assert_eq!(out.input.intensity.len(), 1451);
            let top = crate::model::argmax(&out.input.intensity);
            let found = GRID_START + top as f64;
            assert!((found - center).abs() <= 1.0, "{found} vs {center}");
            assert_eq!(out.input.intensity[top], 1.0);
            assert_eq!(out.clamped, 0);
        }
    }

    #[test]
    fn pipeline_is_idempotent_on_processed_input() {
        let raw = tilted_peak_raw(777.7, 350.0, 0.61, 1800.0);
        let mut raw = raw;
        // make sure the last sample sits exactly on the grid end
        *raw.wavenumber.last_mut().unwrap() = 1800.0;
        let once = preprocess_pipeline(&raw).unwrap().input;
        let again = preprocess_pipeline(&RawSpectrum::new(model_grid(), once.intensity.clone()).unwrap())
            .unwrap()
            .input;
        for (a, b) in once.intensity.iter().zip(&again.intensity) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn baseline_ignores_added_lines(slope in -1.0f64..1.0, offset in -100.0f64..100.0, seed in 0u64..1000) {
            let x: Vec<f64> = (0..40).map(|i| 350.0 + 10.0 * i as f64 + (seed % 7) as f64 * 0.1).collect();
            let y: Vec<f64> = x.iter().enumerate().map(|(i, t)| (t * 0.05).sin() * 3.0 + ((i as u64 * seed) % 5) as f64).collect();
            let shifted: Vec<f64> = x.iter().zip(&y).map(|(t, v)| v + offset + slope * t).collect();
            for mode in [BaselineMode::EndpointChord, BaselineMode::LeastSquares] {
                let a = subtract_baseline(&RawSpectrum::new(x.clone(), y.clone()).unwrap(), mode);
                let b = subtract_baseline(&RawSpectrum::new(x.clone(), shifted.clone()).unwrap(), mode);
                for (p, q) in a.counts.iter().zip(&b.counts) {
                    prop_assert!((p - q).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn pipeline_output_is_1451_with_unit_max(start in 200.0f64..350.0, step in 0.3f64..5.0, seed in 0u64..50) {
            let end = 1800.0 + step * 2.0;
            let raw = tilted_peak_raw(400.0 + (seed as f64) * 25.0, start, step, end);
            let out = preprocess_pipeline(&raw).unwrap();
            prop_assert_eq!(out.input.intensity.len(), 1451);
            prop_assert_eq!(out.input.intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }
}
