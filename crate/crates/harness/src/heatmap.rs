//! Beamfocusing gain `‖b(r, φ)ᴴ W‖²` over a Cartesian grid in front of the
//! array. `y` runs along broadside and `x = r sin φ`.

use beamfocus::geometry::{steering_vector, ArrayGeometry, SteeringMode};
use beamfocus::linalg::CMat;
use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl HeatmapGrid {
    /// Square window of half-width `extent` with `n × n` cells, starting just
    /// off the array.
    pub fn square(extent: f64, n: usize) -> Self {
        Self { x_min: -extent, x_max: extent, nx: n, y_min: 2.0 * extent / n as f64, y_max: 2.0 * extent, ny: n }
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.ny)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug)]
pub struct Heatmap {
    pub grid: HeatmapGrid,
    /// `ny × nx`, row `i` at `ys()[i]`.
    pub gain: DMatrix<f64>,
}

pub fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), x.atan2(y))
}

pub fn beamfocusing_heatmap(w: &CMat, geom: &ArrayGeometry, grid: &HeatmapGrid) -> Result<Heatmap, beamfocus::Error> {
    if grid.nx < 2 || grid.ny < 2 {
        return Err(beamfocus::Error::InvalidArgument("heatmap grid needs at least 2 × 2 points".into()));
    }
    if !(grid.y_min > 0.0 && grid.y_max > grid.y_min && grid.x_max > grid.x_min) {
        return Err(beamfocus::Error::InvalidArgument("heatmap window must lie in front of the array".into()));
    }
    let (xs, ys) = (grid.xs(), grid.ys());
    let mut gain = DMatrix::zeros(ys.len(), xs.len());
    for (i, &y) in ys.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            let (r, phi) = polar(x, y);
            let b = steering_vector(geom.n_tx, geom.wavelength, r, phi, SteeringMode::Exact)?;
            gain[(i, j)] = (b.adjoint() * w).norm_squared();
        }
    }
    Ok(Heatmap { grid: grid.clone(), gain })
}

impl Heatmap {
    /// `(x, y)` of the largest gain.
    pub fn argmax(&self) -> (f64, f64) {
        let (mut bi, mut bj) = (0, 0);
        for i in 0..self.gain.nrows() {
            for j in 0..self.gain.ncols() {
                if self.gain[(i, j)] > self.gain[(bi, bj)] {
                    (bi, bj) = (i, j);
                }
            }
        }
        (self.grid.xs()[bj], self.grid.ys()[bi])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,gain\n");
        let (xs, ys) = (self.grid.xs(), self.grid.ys());
        for (i, y) in ys.iter().enumerate() {
            for (j, x) in xs.iter().enumerate() {
                let f = crate::table::fmt_f64;
                s.push_str(&format!("{},{},{}\n", f(*x), f(*y), f(self.gain[(i, j)])));
            }
        }
        s
    }
}
