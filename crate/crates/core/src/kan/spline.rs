use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorkit::Scalar;

/// Uniform knot grid extended by `order` knots beyond each end of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct SplineGrid {
    pub grid_size: usize,
    pub order: usize,
    pub lo: f64,
    pub hi: f64,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridParams {
    grid_size: usize,
    order: usize,
    lo: f64,
    hi: f64,
}

impl TryFrom<GridParams> for SplineGrid {
    type Error = Error;
    fn try_from(p: GridParams) -> Result<Self> {
        SplineGrid::new(p.grid_size, p.order, p.lo, p.hi)
    }
}

impl From<SplineGrid> for GridParams {
    fn from(g: SplineGrid) -> Self {
        GridParams {
            grid_size: g.grid_size,
            order: g.order,
            lo: g.lo,
            hi: g.hi,
        }
    }
}

impl Default for SplineGrid {
    fn default() -> Self {
        Self::new(5, 3, -1.0, 1.0).expect("default grid is valid")
    }
}

impl SplineGrid {
    pub fn new(grid_size: usize, order: usize, lo: f64, hi: f64) -> Result<Self> {
        if grid_size == 0 || order >= 16 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid spline grid: G={grid_size}, range [{lo}, {hi}]"
            )));
        }
        let mut g = Self {
            grid_size,
            order,
            lo,
            hi,
            knots: Vec::new(),
        };
        g.build_knots();
        Ok(g)
    }

    fn build_knots(&mut self) {
        let h = self.step();
        let (g, k) = (self.grid_size as isize, self.order as isize);
        self.knots = (-k..=g + k)
            .map(|j| match j {
                0 => self.lo,
                j if j == g => self.hi,
                j => self.lo + j as f64 * h,
            })
            .collect();
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.grid_size as f64
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.grid_size + self.order
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Knot interval `[t_s, t_{s+1})` holding `x` (already clamped); the last
    /// interval is closed at `hi`.
    pub fn span(&self, x: f64) -> usize {
        let k = self.order;
        let g = self.grid_size;
        let mut j = (((x - self.lo) / self.step()).floor().max(0.0) as usize).min(g - 1);
        // Guard against rounding disagreement with the stored knots.
        while j > 0 && x < self.knots[j + k] {
            j -= 1;
        }
        while j + 1 < g && x >= self.knots[j + k + 1] {
            j += 1;
        }
        j + k
    }

    /// Values of the `order + 1` non-zero basis functions at clamped `x`,
    /// written to `out`, and their derivatives to `dout`. Returns the index of
    /// the first non-zero basis function.
    pub fn eval_local<T: Scalar>(&self, x: T, out: &mut [T], dout: Option<&mut [T]>) -> usize {
        let p = self.order;
        let xf = x.as_f64();
        let s = self.span(xf);
        let t = &self.knots;
        let mut left = [T::zero(); 16];
        let mut right = [T::zero(); 16];
        assert!(p < 16, "spline order too large");
        // Basis of degree p-1 kept for the derivative.
        let mut lower = [T::zero(); 16];
        out[0] = T::one();
        for j in 1..=p {
            if j == p {
                lower[..p].copy_from_slice(&out[..p]);
            }
            left[j] = x - T::lit(t[s + 1 - j]);
            right[j] = T::lit(t[s + j]) - x;
            let mut saved = T::zero();
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        if let Some(d) = dout {
            if p == 0 {
                d[0] = T::zero();
            } else {
                // dB_{m,p} = p/(t_{m+p} − t_m)·B_{m,p−1} − p/(t_{m+p+1} − t_{m+1})·B_{m+1,p−1}
                let first = s - p;
                for r in 0..=p {
                    let m = first + r;
                    let a = if r >= 1 {
                        T::lit(p as f64 / (t[m + p] - t[m])) * lower[r - 1]
                    } else {
                        T::zero()
                    };
                    let b = if r < p {
                        T::lit(p as f64 / (t[m + p + 1] - t[m + 1])) * lower[r]
                    } else {
                        T::zero()
                    };
                    d[r] = a - b;
                }
            }
        }
        s - p
    }
}

/// All `n_basis` B-spline values at `x`, clamped into the grid range first.
pub fn bspline_basis(x: f64, grid: &SplineGrid) -> Vec<f64> {
    let mut local = vec![0.0; grid.order + 1];
    let first = grid.eval_local(grid.clamp(x), &mut local, None);
    let mut out = vec![0.0; grid.n_basis()];
    out[first..first + local.len()].copy_from_slice(&local);
    out
}
