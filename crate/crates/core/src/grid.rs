//! Polar sample layout on the unit disk.
//!
//! Scalars live at cell centers `r_j = (j + 1/2) dr`. Radial vector
//! components live on the outer cell faces `rho_j = (j + 1) dr`, so the last
//! face is the boundary circle. Angular samples are uniform and every angular
//! derivative is Fourier-spectral.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Work size above which ring-wise kernels are spread over the thread pool.
const PAR_THRESHOLD: usize = 8192;

/// Where a radial sample sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Center,
    Face,
}

#[derive(Clone, Copy, Debug)]
struct Tap {
    ring: usize,
    cross: bool,
    weight: f64,
}

/// Radial interpolation or differentiation rule, one row of taps per target
/// ring. Taps marked `cross` read the sample on the opposite side of the
/// origin (angle shifted by pi), which keeps the innermost stencils centered.
#[derive(Clone, Debug)]
pub struct RadialStencil {
    rows: Vec<Vec<Tap>>,
}

impl RadialStencil {
    fn build(sources: &[f64], targets: &[f64], deriv: usize, zero_at_one: bool, on_node: usize) -> Self {
        let mut nodes: Vec<(f64, Option<(usize, bool)>)> = Vec::with_capacity(2 * sources.len() + 1);
        for (i, &p) in sources.iter().enumerate() {
            nodes.push((p, Some((i, false))));
            nodes.push((-p, Some((i, true))));
        }
        if zero_at_one {
            nodes.push((1.0, None));
        }
        let rows = targets
            .iter()
            .map(|&x| {
                let hit = nodes.iter().any(|(p, _)| (p - x).abs() < 1e-12);
                let want = if hit { on_node } else { 4 };
                let mut sorted = nodes.clone();
                sorted.sort_by(|a, b| {
                    let da = (a.0 - x).abs();
                    let db = (b.0 - x).abs();
                    da.partial_cmp(&db)
                        .unwrap()
                        .then(a.0.partial_cmp(&b.0).unwrap())
                });
                sorted.truncate(want.min(sorted.len()));
                let pos: Vec<f64> = sorted.iter().map(|n| n.0).collect();
                let w = lagrange_weights(&pos, x, deriv);
                sorted
                    .iter()
                    .zip(w)
                    .filter_map(|(n, weight)| {
                        n.1.map(|(ring, cross)| Tap { ring, cross, weight })
                    })
                    .collect()
            })
            .collect();
        RadialStencil { rows }
    }

    /// Applies the rule ring by ring. `sign` multiplies cross-origin samples:
    /// +1 for scalars, -1 for polar components of vectors and one-forms.
    pub fn apply(&self, src: &[f64], n_theta: usize, sign: f64) -> Vec<f64> {
        let half = n_theta / 2;
        let mut out = vec![0.0; self.rows.len() * n_theta];
        for (j, row) in self.rows.iter().enumerate() {
            let dst = &mut out[j * n_theta..(j + 1) * n_theta];
            for tap in row {
                let base = tap.ring * n_theta;
                if tap.cross {
                    let w = sign * tap.weight;
                    for (k, d) in dst.iter_mut().enumerate() {
                        *d += w * src[base + (k + half) % n_theta];
                    }
                } else {
                    for (k, d) in dst.iter_mut().enumerate() {
                        *d += tap.weight * src[base + k];
                    }
                }
            }
        }
        out
    }

    /// Applies only the row for target `j`, returning one value per angle.
    pub fn apply_row(&self, j: usize, src: &[f64], n_theta: usize, sign: f64) -> Vec<f64> {
        let half = n_theta / 2;
        let mut dst = vec![0.0; n_theta];
        for tap in &self.rows[j] {
            let base = tap.ring * n_theta;
            let w = if tap.cross { sign * tap.weight } else { tap.weight };
            for (k, d) in dst.iter_mut().enumerate() {
                let kk = if tap.cross { (k + half) % n_theta } else { k };
                *d += w * src[base + kk];
            }
        }
        dst
    }
}

/// Lagrange interpolation weights (`deriv = 0`) or first-derivative weights
/// (`deriv = 1`) for evaluating at `x` from samples at `nodes`.
pub fn lagrange_weights(nodes: &[f64], x: f64, deriv: usize) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|i| {
            let denom: f64 = (0..m)
                .filter(|&j| j != i)
                .map(|j| nodes[i] - nodes[j])
                .product();
            match deriv {
                0 => {
                    (0..m)
                        .filter(|&j| j != i)
                        .map(|j| x - nodes[j])
                        .product::<f64>()
                        / denom
                }
                _ => {
                    let mut s = 0.0;
                    for k in (0..m).filter(|&k| k != i) {
                        s += (0..m)
                            .filter(|&j| j != i && j != k)
                            .map(|j| x - nodes[j])
                            .product::<f64>();
                    }
                    s / denom
                }
            }
        })
        .collect()
}

/// The polar grid together with its quadrature weights, FFT plans and
/// radial stencils.
#[derive(Clone)]
pub struct Grid {
    pub n_r: usize,
    pub n_theta: usize,
    pub dr: f64,
    pub dtheta: f64,
    /// Cell-center radii.
    pub r: Vec<f64>,
    /// Outer-face radii; the last entry is 1.
    pub r_face: Vec<f64>,
    pub theta: Vec<f64>,
    pub cos_t: Vec<f64>,
    pub sin_t: Vec<f64>,
    /// Quadrature weight of one center node on ring j.
    pub w_center: Vec<f64>,
    /// Quadrature weight of one face node on ring j (half cell on the boundary).
    pub w_face: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pub(crate) st: Arc<Stencils>,
}

pub(crate) struct Stencils {
    pub c2f_val: RadialStencil,
    pub c2f_der: RadialStencil,
    pub f2c_val: RadialStencil,
    pub f2c_der: RadialStencil,
    pub c2c_der: RadialStencil,
    pub f2f_der: RadialStencil,
    /// Center values to faces, using a zero sample on the boundary.
    pub c2f_val_dir: RadialStencil,
    /// Radial derivative at r = 1 from centers plus a zero boundary sample.
    pub c2b_der_dir: RadialStencil,
    /// Extrapolation of center values to r = 1.
    pub c2b_val: RadialStencil,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}x{})", self.n_r, self.n_theta)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_r == other.n_r && self.n_theta == other.n_theta
    }
}

/// Builds the polar grid with `n_r` cell-centered rings and `n_theta` angles.
pub fn build_grid(n_r: usize, n_theta: usize) -> Result<Grid> {
    if n_r == 0 || n_theta == 0 {
        return Err(Error::InvalidGrid(format!(
            "counts must be positive, got n_r={n_r}, n_theta={n_theta}"
        )));
    }
    if n_theta < 4 || n_theta % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "n_theta must be even and at least 4, got {n_theta}"
        )));
    }
    let dr = 1.0 / n_r as f64;
    let dtheta = 2.0 * PI / n_theta as f64;
    let r: Vec<f64> = (0..n_r).map(|j| (j as f64 + 0.5) * dr).collect();
    let r_face: Vec<f64> = (0..n_r).map(|j| (j as f64 + 1.0) * dr).collect();
    let theta: Vec<f64> = (0..n_theta).map(|k| k as f64 * dtheta).collect();
    let cos_t = theta.iter().map(|t| t.cos()).collect();
    let sin_t = theta.iter().map(|t| t.sin()).collect();
    let w_center = r.iter().map(|rj| rj * dr * dtheta).collect();
    let w_face = (0..n_r)
        .map(|j| {
            if j + 1 == n_r {
                0.5 * dr * dtheta
            } else {
                r_face[j] * dr * dtheta
            }
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_theta);
    let inv = planner.plan_fft_inverse(n_theta);
    let st = Stencils {
        c2f_val: RadialStencil::build(&r, &r_face, 0, false, 3),
        c2f_der: RadialStencil::build(&r, &r_face, 1, false, 3),
        f2c_val: RadialStencil::build(&r_face, &r, 0, false, 3),
        f2c_der: RadialStencil::build(&r_face, &r, 1, false, 3),
        c2c_der: RadialStencil::build(&r, &r, 1, false, 3),
        f2f_der: RadialStencil::build(&r_face, &r_face, 1, false, 3),
        c2f_val_dir: RadialStencil::build(&r, &r_face, 0, true, 3),
        c2b_der_dir: RadialStencil::build(&r, &[1.0], 1, true, 4),
        c2b_val: RadialStencil::build(&r, &[1.0], 0, false, 3),
    };
    Ok(Grid {
        n_r,
        n_theta,
        dr,
        dtheta,
        r,
        r_face,
        theta,
        cos_t,
        sin_t,
        w_center,
        w_face,
        fwd,
        inv,
        st: Arc::new(st),
    })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * self.n_theta + k
    }

    /// Index of the angle on the opposite side of the origin.
    #[inline]
    pub fn opposite(&self, k: usize) -> usize {
        (k + self.n_theta / 2) % self.n_theta
    }

    /// Radius of ring `j` at the given location.
    pub fn radius(&self, loc: Location, j: usize) -> f64 {
        match loc {
            Location::Center => self.r[j],
            Location::Face => self.r_face[j],
        }
    }

    pub fn weights(&self, loc: Location) -> &[f64] {
        match loc {
            Location::Center => &self.w_center,
            Location::Face => &self.w_face,
        }
    }

    /// Sum of all center quadrature weights (the disk area).
    pub fn total_weight(&self) -> f64 {
        pairwise_sum(
            &self
                .w_center
                .iter()
                .map(|w| w * self.n_theta as f64)
                .collect::<Vec<_>>(),
        )
    }

    /// Fixed-order quadrature of ring-major samples with per-ring weights.
    pub fn quadrature(&self, loc: Location, values: &[f64]) -> f64 {
        let w = self.weights(loc);
        let terms: Vec<f64> = values
            .chunks(self.n_theta)
            .zip(w)
            .map(|(ring, wj)| wj * pairwise_sum(ring))
            .collect();
        pairwise_sum(&terms)
    }

    /// Forward FFT of every ring.
    pub fn rings_fft(&self, data: &[f64]) -> Vec<Complex64> {
        let n = self.n_theta;
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if data.len() >= PAR_THRESHOLD {
            buf.par_chunks_mut(n).for_each(|c| self.fwd.process(c));
        } else {
            buf.chunks_mut(n).for_each(|c| self.fwd.process(c));
        }
        buf
    }

    /// Inverse FFT of every ring, returning the (normalized) real part.
    pub fn rings_ifft(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        let n = self.n_theta;
        if buf.len() >= PAR_THRESHOLD {
            buf.par_chunks_mut(n).for_each(|c| self.inv.process(c));
        } else {
            buf.chunks_mut(n).for_each(|c| self.inv.process(c));
        }
        let s = 1.0 / n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    /// Signed wavenumber of FFT bin `k`, with the Nyquist bin mapped to zero
    /// so the spectral derivative stays skew-adjoint.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n_theta;
        if k < n / 2 {
            k as f64
        } else if k == n / 2 {
            0.0
        } else {
            k as f64 - n as f64
        }
    }

    /// Spectral angular derivative of ring-major data (any number of rings).
    pub fn d_theta(&self, data: &[f64]) -> Vec<f64> {
        let mut hat = self.rings_fft(data);
        let n = self.n_theta;
        for ring in hat.chunks_mut(n) {
            for (k, c) in ring.iter_mut().enumerate() {
                let m = self.wavenumber(k);
                *c = Complex64::new(-m * c.im, m * c.re);
            }
        }
        self.rings_ifft(hat)
    }

    pub(crate) fn stencils(&self) -> &Stencils {
        &self.st
    }

    /// Boundary distance `1 - r` at every center node.
    pub fn boundary_distance(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.len());
        for j in 0..self.n_r {
            d.extend(std::iter::repeat_n(1.0 - self.r[j], self.n_theta));
        }
        d
    }

    pub fn check_same(&self, n_r: usize, n_theta: usize) -> Result<()> {
        if n_r != self.n_r || n_theta != self.n_theta {
            return Err(Error::GridMismatch {
                expected: (self.n_r, self.n_theta),
                found: (n_r, n_theta),
            });
        }
        Ok(())
    }
}

/// Pairwise summation in a fixed order; deterministic across thread counts.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ring_grid() {
        let g = build_grid(1, 4).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.r.iter().all(|&r| (r - 0.5).abs() < 1e-15));
        let expect = [0.0, PI / 2.0, PI, 1.5 * PI];
        for (t, e) in g.theta.iter().zip(expect) {
            assert!((t - e).abs() < 1e-15);
        }
    }

    #[test]
    fn outer_ring_radius() {
        let g = build_grid(2, 8).unwrap();
        assert_eq!(g.r.iter().cloned().fold(0.0, f64::max), 0.75);
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(build_grid(0, 8).is_err());
        assert!(build_grid(4, 0).is_err());
        assert!(build_grid(4, 7).is_err());
        assert!(build_grid(4, 2).is_err());
    }

    #[test]
    fn disk_area() {
        for n in [8, 32, 64] {
            let g = build_grid(n, n).unwrap();
            assert!((g.total_weight() - PI).abs() < 1e-12);
            let faces: f64 = g.w_face.iter().sum::<f64>() * n as f64;
            assert!((faces - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_exact_on_quadratics() {
        let nodes = [-0.3, 0.1, 0.7];
        let f = |x: f64| 2.0 * x * x - x + 0.5;
        let df = |x: f64| 4.0 * x - 1.0;
        let x = 0.25;
        let v: f64 = lagrange_weights(&nodes, x, 0)
            .iter()
            .zip(nodes)
            .map(|(w, n)| w * f(n))
            .sum();
        let d: f64 = lagrange_weights(&nodes, x, 1)
            .iter()
            .zip(nodes)
            .map(|(w, n)| w * f(n))
            .sum();
        assert!((v - f(x)).abs() < 1e-13);
        assert!((d - df(x)).abs() < 1e-12);
    }

    #[test]
    fn spectral_derivative_of_harmonics() {
        let g = build_grid(3, 16).unwrap();
        let mut data = vec![0.0; g.len()];
        for j in 0..3 {
            for k in 0..16 {
                data[g.idx(j, k)] = (3.0 * g.theta[k]).sin() + j as f64;
            }
        }
        let d = g.d_theta(&data);
        for j in 0..3 {
            for k in 0..16 {
                let e = 3.0 * (3.0 * g.theta[k]).cos();
                assert!((d[g.idx(j, k)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_derivative_through_origin() {
        // f(x, y) = x^2 + 3x along every ray; the center stencil crosses the origin.
        let g = build_grid(8, 8).unwrap();
        let mut f = vec![0.0; g.len()];
        for j in 0..8 {
            for k in 0..8 {
                let x = g.r[j] * g.cos_t[k];
                f[g.idx(j, k)] = x * x + 3.0 * x;
            }
        }
        let d = g.stencils().c2c_der.apply(&f, 8, 1.0);
        for j in 0..8 {
            for k in 0..8 {
                let (c, r) = (g.cos_t[k], g.r[j]);
                let e = 2.0 * r * c * c + 3.0 * c;
                assert!((d[g.idx(j, k)] - e).abs() < 1e-11, "j={j} k={k}");
            }
        }
    }
}
