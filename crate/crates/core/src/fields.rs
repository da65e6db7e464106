//! Field storage on the polar grid.
//!
//! Vector fields and one-forms are stored by their orthonormal polar
//! components: the radial component on faces and the angular component on
//! centers. Cartesian components are available through [`Staggered::to_cartesian`].

use std::io::Write;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{Grid, Location};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub n_r: usize,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField {
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        ScalarField {
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            values,
        }
    }

    /// Samples `f(y1, y2)` at every center node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_polar(grid, |r, c, s| f(r * c, r * s))
    }

    /// Samples `f(r, cos theta, sin theta)` at every center node.
    pub fn from_polar(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n_r {
            for k in 0..grid.n_theta {
                values.push(f(grid.r[j], grid.cos_t[k], grid.sin_t[k]));
            }
        }
        ScalarField::from_values(grid, values)
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n_theta + k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            n_r: self.n_r,
            n_theta: self.n_theta,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "field size mismatch");
        ScalarField {
            n_r: self.n_r,
            n_theta: self.n_theta,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Self, grid: &Grid) -> f64 {
        let p: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        grid.quadrature(Location::Center, &p)
    }

    pub fn norm(&self, grid: &Grid) -> f64 {
        self.dot(self, grid).max(0.0).sqrt()
    }

    /// Extrapolated boundary values at r = 1, one per angle.
    pub fn boundary_trace(&self, grid: &Grid) -> Vec<f64> {
        grid.stencils()
            .c2b_val
            .apply_row(0, &self.values, grid.n_theta, 1.0)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, o: &ScalarField) -> ScalarField {
        self.zip_map(o, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, o: &ScalarField) -> ScalarField {
        self.zip_map(o, |a, b| a - b)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

impl Mul<&ScalarField> for f64 {
    type Output = ScalarField;
    fn mul(self, o: &ScalarField) -> ScalarField {
        o.scale(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contravariant;
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Covariant;

/// Polar components of a vector (contravariant) or one-form (covariant) field:
/// `radial` on faces, `angular` on centers, both ring-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Staggered<K> {
    pub n_r: usize,
    pub n_theta: usize,
    pub radial: Vec<f64>,
    pub angular: Vec<f64>,
    kind: PhantomData<K>,
}

pub type VectorField = Staggered<Contravariant>;
pub type OneForm = Staggered<Covariant>;

impl<K> Staggered<K> {
    pub fn zeros(grid: &Grid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    pub fn from_parts(grid: &Grid, radial: Vec<f64>, angular: Vec<f64>) -> Self {
        assert_eq!(radial.len(), grid.len());
        assert_eq!(angular.len(), grid.len());
        Staggered {
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            radial,
            angular,
            kind: PhantomData,
        }
    }

    /// Samples Cartesian components `f(y1, y2) -> (a1, a2)`: the radial part on
    /// faces and the angular part on centers.
    pub fn from_cartesian(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut radial = Vec::with_capacity(grid.len());
        let mut angular = Vec::with_capacity(grid.len());
        for j in 0..grid.n_r {
            for k in 0..grid.n_theta {
                let (c, s) = (grid.cos_t[k], grid.sin_t[k]);
                let rf = grid.r_face[j];
                let (a, b) = f(rf * c, rf * s);
                radial.push(a * c + b * s);
                let rc = grid.r[j];
                let (a, b) = f(rc * c, rc * s);
                angular.push(-a * s + b * c);
            }
        }
        Self::from_parts(grid, radial, angular)
    }

    /// Cartesian components at the center nodes.
    pub fn to_cartesian(&self, grid: &Grid) -> (ScalarField, ScalarField) {
        let ur = grid
            .stencils()
            .f2c_val
            .apply(&self.radial, grid.n_theta, -1.0);
        let mut x = Vec::with_capacity(grid.len());
        let mut y = Vec::with_capacity(grid.len());
        for j in 0..grid.n_r {
            for k in 0..grid.n_theta {
                let i = grid.idx(j, k);
                let (c, s) = (grid.cos_t[k], grid.sin_t[k]);
                x.push(ur[i] * c - self.angular[i] * s);
                y.push(ur[i] * s + self.angular[i] * c);
            }
        }
        (
            ScalarField::from_values(grid, x),
            ScalarField::from_values(grid, y),
        )
    }

    /// Normal component on the boundary circle, one value per angle.
    pub fn boundary_normal(&self) -> &[f64] {
        let n = self.n_theta;
        &self.radial[(self.n_r - 1) * n..]
    }

    pub fn zip_map(&self, o: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.radial.len(), o.radial.len(), "field size mismatch");
        Staggered {
            n_r: self.n_r,
            n_theta: self.n_theta,
            radial: self
                .radial
                .iter()
                .zip(&o.radial)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            angular: self
                .angular
                .iter()
                .zip(&o.angular)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            kind: PhantomData,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Staggered {
            n_r: self.n_r,
            n_theta: self.n_theta,
            radial: self.radial.iter().map(|v| a * v).collect(),
            angular: self.angular.iter().map(|v| a * v).collect(),
            kind: PhantomData,
        }
    }

    /// `self + a * x`.
    pub fn axpy(&self, a: f64, x: &Self) -> Self {
        self.zip_map(x, |u, v| u + a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.radial
            .iter()
            .chain(&self.angular)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.radial.iter().chain(&self.angular).all(|v| v.is_finite())
    }

    /// Flat (identity-metric) quadrature inner product.
    pub fn dot(&self, o: &Self, grid: &Grid) -> f64 {
        let pr: Vec<f64> = self.radial.iter().zip(&o.radial).map(|(a, b)| a * b).collect();
        let pa: Vec<f64> = self
            .angular
            .iter()
            .zip(&o.angular)
            .map(|(a, b)| a * b)
            .collect();
        grid.quadrature(Location::Face, &pr) + grid.quadrature(Location::Center, &pa)
    }

    /// Flat quadrature norm.
    pub fn norm(&self, grid: &Grid) -> f64 {
        self.dot(self, grid).max(0.0).sqrt()
    }

    /// Reinterprets the components under the other variance; exact for the
    /// identity metric.
    pub fn retag<L>(self) -> Staggered<L> {
        Staggered {
            n_r: self.n_r,
            n_theta: self.n_theta,
            radial: self.radial,
            angular: self.angular,
            kind: PhantomData,
        }
    }
}

impl<K> Add for &Staggered<K> {
    type Output = Staggered<K>;
    fn add(self, o: &Staggered<K>) -> Staggered<K> {
        self.zip_map(o, |a, b| a + b)
    }
}

impl<K> Sub for &Staggered<K> {
    type Output = Staggered<K>;
    fn sub(self, o: &Staggered<K>) -> Staggered<K> {
        self.zip_map(o, |a, b| a - b)
    }
}

impl<K> Neg for &Staggered<K> {
    type Output = Staggered<K>;
    fn neg(self) -> Staggered<K> {
        self.scale(-1.0)
    }
}

impl<K> Mul<&Staggered<K>> for f64 {
    type Output = Staggered<K>;
    fn mul(self, o: &Staggered<K>) -> Staggered<K> {
        o.scale(self)
    }
}

/// A two-form in two dimensions, stored by its single component beta_12.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoForm {
    pub beta12: ScalarField,
}

impl TwoForm {
    pub fn zeros(grid: &Grid) -> Self {
        TwoForm {
            beta12: ScalarField::zeros(grid),
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        TwoForm {
            beta12: ScalarField::constant(grid, c),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.beta12.max_abs()
    }
}

/// Symmetric two-tensor by Cartesian components (11, 12, 22) at centers.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricTensorField {
    pub g11: ScalarField,
    pub g12: ScalarField,
    pub g22: ScalarField,
}

impl SymmetricTensorField {
    pub fn identity(grid: &Grid) -> Self {
        SymmetricTensorField {
            g11: ScalarField::constant(grid, 1.0),
            g12: ScalarField::zeros(grid),
            g22: ScalarField::constant(grid, 1.0),
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        SymmetricTensorField {
            g11: ScalarField::zeros(grid),
            g12: ScalarField::zeros(grid),
            g22: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let vals: Vec<[f64; 3]> = (0..grid.n_r)
            .flat_map(|j| (0..grid.n_theta).map(move |k| (j, k)))
            .map(|(j, k)| f(grid.r[j] * grid.cos_t[k], grid.r[j] * grid.sin_t[k]))
            .collect();
        SymmetricTensorField {
            g11: ScalarField::from_values(grid, vals.iter().map(|v| v[0]).collect()),
            g12: ScalarField::from_values(grid, vals.iter().map(|v| v[1]).collect()),
            g22: ScalarField::from_values(grid, vals.iter().map(|v| v[2]).collect()),
        }
    }

    /// Largest deviation from the identity.
    pub fn identity_defect(&self) -> f64 {
        let a = self.g11.map(|v| v - 1.0).max_abs();
        let b = self.g12.max_abs();
        let c = self.g22.map(|v| v - 1.0).max_abs();
        a.max(b).max(c)
    }

    /// Pointwise operator norm bound (largest absolute eigenvalue).
    pub fn sup_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.g11.values.len() {
            let (a, b, c) = (self.g11.values[i], self.g12.values[i], self.g22.values[i]);
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            m = m.max((mean + rad).abs()).max((mean - rad).abs());
        }
        m
    }

    /// Pointwise inverse; fails on a non positive-definite node.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.g11.values.len();
        let mut i11 = Vec::with_capacity(n);
        let mut i12 = Vec::with_capacity(n);
        let mut i22 = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b, c) = (self.g11.values[i], self.g12.values[i], self.g22.values[i]);
            let det = a * c - b * b;
            if !(det > 0.0 && a + c > 0.0) {
                return Err(crate::error::Error::NotPositiveDefinite { node: i });
            }
            i11.push(c / det);
            i12.push(-b / det);
            i22.push(a / det);
        }
        let mk = |v| ScalarField {
            n_r: self.g11.n_r,
            n_theta: self.g11.n_theta,
            values: v,
        };
        Ok(SymmetricTensorField {
            g11: mk(i11),
            g12: mk(i12),
            g22: mk(i22),
        })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.inverse().is_ok()
    }

    pub fn scale(&self, a: f64) -> Self {
        SymmetricTensorField {
            g11: self.g11.scale(a),
            g12: self.g12.scale(a),
            g22: self.g22.scale(a),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.g11.max_abs().max(self.g12.max_abs()).max(self.g22.max_abs())
    }
}

/// Any of the tensor kinds the Lie derivative acts on.
#[derive(Clone, Debug, PartialEq)]
pub enum Tensor {
    Scalar(ScalarField),
    Vector(VectorField),
    OneForm(OneForm),
    TwoForm(TwoForm),
    Symmetric(SymmetricTensorField),
}

impl Tensor {
    pub fn kind(&self) -> &'static str {
        match self {
            Tensor::Scalar(_) => "scalar",
            Tensor::Vector(_) => "vector",
            Tensor::OneForm(_) => "one-form",
            Tensor::TwoForm(_) => "two-form",
            Tensor::Symmetric(_) => "symmetric tensor",
        }
    }

    /// Flat quadrature norm of all stored components.
    pub fn norm(&self, grid: &Grid) -> f64 {
        match self {
            Tensor::Scalar(s) => s.norm(grid),
            Tensor::Vector(v) => v.norm(grid),
            Tensor::OneForm(w) => w.norm(grid),
            Tensor::TwoForm(b) => b.beta12.norm(grid),
            Tensor::Symmetric(g) => (g.g11.dot(&g.g11, grid)
                + 2.0 * g.g12.dot(&g.g12, grid)
                + g.g22.dot(&g.g22, grid))
            .sqrt(),
        }
    }

    /// Componentwise difference; panics on mismatched kinds.
    pub fn sub(&self, o: &Tensor) -> Tensor {
        match (self, o) {
            (Tensor::Scalar(a), Tensor::Scalar(b)) => Tensor::Scalar(a - b),
            (Tensor::Vector(a), Tensor::Vector(b)) => Tensor::Vector(a - b),
            (Tensor::OneForm(a), Tensor::OneForm(b)) => Tensor::OneForm(a - b),
            (Tensor::TwoForm(a), Tensor::TwoForm(b)) => Tensor::TwoForm(TwoForm {
                beta12: &a.beta12 - &b.beta12,
            }),
            (Tensor::Symmetric(a), Tensor::Symmetric(b)) => {
                Tensor::Symmetric(SymmetricTensorField {
                    g11: &a.g11 - &b.g11,
                    g12: &a.g12 - &b.g12,
                    g22: &a.g22 - &b.g22,
                })
            }
            _ => panic!("tensor kind mismatch: {} vs {}", self.kind(), o.kind()),
        }
    }
}

/// Coefficients of a random trigonometric polynomial in (y1, y2) with integer
/// wavenumbers up to `band`, amplitudes decaying like (1 + |k|)^-2.
#[derive(Clone, Debug)]
pub struct RandomTrig {
    terms: Vec<(f64, f64, f64, f64)>,
}

impl RandomTrig {
    pub fn new(rng: &mut ChaCha8Rng, band: usize) -> Self {
        let mut terms = Vec::new();
        for m in 0..=band {
            for n in 0..=band {
                let damp = 1.0 / (1.0 + (m + n) as f64).powi(2);
                let a: f64 = rng.random_range(-1.0..1.0) * damp;
                let b: f64 = rng.random_range(-1.0..1.0) * damp;
                terms.push((m as f64, n as f64, a, b));
            }
        }
        RandomTrig { terms }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, a, b)| {
                let ph = m * x + n * y;
                a * ph.cos() + b * ph.sin()
            })
            .sum()
    }
}

/// Deterministic random band-limited vector field.
pub fn random_vector_field(grid: &Grid, seed: u64, band: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = RandomTrig::new(&mut rng, band);
    let b = RandomTrig::new(&mut rng, band);
    VectorField::from_cartesian(grid, |x, y| (a.eval(x, y), b.eval(x, y)))
}

/// Deterministic random band-limited scalar field.
pub fn random_scalar_field(grid: &Grid, seed: u64, band: usize) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = RandomTrig::new(&mut rng, band);
    ScalarField::from_fn(grid, |x, y| a.eval(x, y))
}

/// Writes one CSV record per center node: `j,k,r,theta,<columns...>`.
pub fn write_node_csv<W: Write>(
    out: W,
    grid: &Grid,
    names: &[&str],
    columns: &[&ScalarField],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["j", "k", "r", "theta"];
    header.extend_from_slice(names);
    w.write_record(&header)?;
    for j in 0..grid.n_r {
        for k in 0..grid.n_theta {
            let mut rec = vec![
                j.to_string(),
                k.to_string(),
                format!("{:.17e}", grid.r[j]),
                format!("{:.17e}", grid.theta[k]),
            ];
            for c in columns {
                rec.push(format!("{:.17e}", c.get(j, k)));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Field dump of a tensor in node CSV form.
pub fn dump_tensor<W: Write>(out: W, grid: &Grid, t: &Tensor) -> Result<()> {
    match t {
        Tensor::Scalar(s) => write_node_csv(out, grid, &["value"], &[s]),
        Tensor::Vector(v) => {
            let (a, b) = v.to_cartesian(grid);
            write_node_csv(out, grid, &["W1", "W2"], &[&a, &b])
        }
        Tensor::OneForm(v) => {
            let (a, b) = v.to_cartesian(grid);
            write_node_csv(out, grid, &["w1", "w2"], &[&a, &b])
        }
        Tensor::TwoForm(b) => write_node_csv(out, grid, &["beta12"], &[&b.beta12]),
        Tensor::Symmetric(g) => {
            write_node_csv(out, grid, &["g11", "g12", "g22"], &[&g.g11, &g.g12, &g.g22])
        }
    }
}
