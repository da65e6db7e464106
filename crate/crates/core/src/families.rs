//! Tangential vector-field families and Lie derivatives of every tensor kind.
//!
//! The rotation field acts on the stored polar components as the plain
//! angular derivative, so its Lie derivative is evaluated spectrally. Other
//! members are given in closed form with their Cartesian Jacobians and are
//! applied through the staggered derivative stencils.

use std::fmt;

use crate::calculus::{polar_jet, scalar_partials};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, Staggered, SymmetricTensorField, Tensor, TwoForm, VectorField};
use crate::grid::{Grid, Location};

/// Largest multi-index length handled by [`enumerate_indices`].
pub const MAX_INDEX_LEN: usize = 3;

/// Number of interior members.
pub const INTERIOR_COUNT: usize = 5;

/// Scale of the interior pattern: members live in `|Q^T y| <= scale / 2` per axis.
const INTERIOR_SCALE: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Member {
    /// The time derivative along particle paths.
    TimeDerivative,
    /// `(-y2, y1)`.
    Rotation,
    /// Compactly supported interior field number `k`.
    Interior(usize),
    /// `c1 * y`.
    Radial,
}

impl Member {
    pub fn is_static(self) -> bool {
        self != Member::TimeDerivative
    }

    /// Tangential to the boundary circle.
    pub fn is_tangential(self) -> bool {
        self != Member::Radial
    }

    pub fn parse(s: &str) -> Option<Member> {
        match s {
            "Dt" => Some(Member::TimeDerivative),
            "S0" => Some(Member::Rotation),
            "R" => Some(Member::Radial),
            _ => s
                .strip_prefix("S1[")
                .and_then(|r| r.strip_suffix(']'))
                .and_then(|n| n.parse().ok())
                .filter(|&n: &usize| n < INTERIOR_COUNT)
                .map(Member::Interior),
        }
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Member::TimeDerivative => write!(f, "Dt"),
            Member::Rotation => write!(f, "S0"),
            Member::Interior(k) => write!(f, "S1[{k}]"),
            Member::Radial => write!(f, "R"),
        }
    }
}

pub fn format_index(index: &[Member]) -> String {
    if index.is_empty() {
        return "()".into();
    }
    let parts: Vec<String> = index.iter().map(|m| m.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Value and Cartesian Jacobian `jac[a][b] = d_b X^a` at a point.
pub type PointJet = ([f64; 2], [[f64; 2]; 2]);

#[derive(Clone, Debug)]
pub struct VectorFamily {
    pub d0: f64,
    pub c1: f64,
    /// Rotation angle of each interior member's pattern.
    pub interior_angles: Vec<f64>,
}

/// Builds the families with interior threshold `d0` and radial constant `c1`.
pub fn build_families(d0: f64, c1: f64) -> Result<VectorFamily> {
    if !(d0 > 0.0 && d0 < 1.0) {
        return Err(Error::Invalid(format!("d0 must lie in (0, 1), got {d0}")));
    }
    if (1.0 - 0.5 * d0) < INTERIOR_SCALE / std::f64::consts::SQRT_2 {
        return Err(Error::Invalid(format!(
            "d0 = {d0} leaves no room for the interior fields"
        )));
    }
    let interior_angles = (0..INTERIOR_COUNT)
        .map(|k| k as f64 * std::f64::consts::PI / INTERIOR_COUNT as f64)
        .collect();
    Ok(VectorFamily {
        d0,
        c1,
        interior_angles,
    })
}

impl Default for VectorFamily {
    fn default() -> Self {
        build_families(crate::profiles::D0, 1.0).expect("default family")
    }
}

/// Degree-9 transition with four vanishing derivatives at both ends.
fn transition(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let y = 1.0 - x;
    let v = x.powi(5) * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))));
    (v, 630.0 * (x * y).powi(4), 2520.0 * (x * y).powi(3) * (1.0 - 2.0 * x))
}

/// Plateau profile: 1 on `|s| <= 1/4`, 0 on `|s| >= 1/2`; value and two derivatives.
/// The interior fields are built from its first derivative, so it must be
/// smoother than the cutoff profiles to keep them C^3.
fn plateau(s: f64) -> (f64, f64, f64) {
    let sign = if s < 0.0 { -1.0 } else { 1.0 };
    let (v, d, dd) = transition(4.0 * s.abs() - 1.0);
    (1.0 - v, -4.0 * sign * d, -16.0 * dd)
}

impl VectorFamily {
    /// Static members: rotation, interior fields, radial.
    pub fn static_members(&self) -> Vec<Member> {
        let mut v = vec![Member::Rotation];
        v.extend((0..self.interior_angles.len()).map(Member::Interior));
        v.push(Member::Radial);
        v
    }

    /// The tangential set `S0 + S1`.
    pub fn tangential_members(&self) -> Vec<Member> {
        let mut v = vec![Member::Rotation];
        v.extend((0..self.interior_angles.len()).map(Member::Interior));
        v
    }

    /// Closed-form value and Jacobian of a static member.
    pub fn eval(&self, m: Member, x: f64, y: f64) -> Option<PointJet> {
        match m {
            Member::TimeDerivative => None,
            Member::Rotation => Some(([-y, x], [[0.0, -1.0], [1.0, 0.0]])),
            Member::Radial => Some(([self.c1 * x, self.c1 * y], [[self.c1, 0.0], [0.0, self.c1]])),
            Member::Interior(k) => {
                let th = *self.interior_angles.get(k)?;
                let (c, s) = (th.cos(), th.sin());
                let lam = INTERIOR_SCALE;
                let a = (c * x + s * y) / lam;
                let b = (-s * x + c * y) / lam;
                let (fa, fa1, fa2) = plateau(a);
                let (fb, fb1, fb2) = plateau(b);
                let gb = b * fb;
                let gb1 = fb + b * fb1;
                let gb2 = 2.0 * fb1 + b * fb2;
                // Components along the rotated axes: (f(a) g'(b), -f'(a) g(b)).
                let xa = fa * gb1;
                let xb = -fa1 * gb;
                let j_ab = [[fa1 * gb1, fa * gb2], [-fa2 * gb, -fa1 * gb1]];
                let val = [c * xa - s * xb, s * xa + c * xb];
                // J_y = Q J_ab Q^T / lam with Q = [[c, -s], [s, c]].
                let q = [[c, -s], [s, c]];
                let mut jac = [[0.0; 2]; 2];
                for (i, row) in jac.iter_mut().enumerate() {
                    for (jj, v) in row.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for p in 0..2 {
                            for r in 0..2 {
                                acc += q[i][p] * j_ab[p][r] * q[jj][r];
                            }
                        }
                        *v = acc / lam;
                    }
                }
                Some((val, jac))
            }
        }
    }

    /// Samples a static member on the staggered layout.
    pub fn sample(&self, grid: &Grid, m: Member) -> Result<VectorField> {
        if !m.is_static() {
            return Err(Error::Invalid("the time derivative is not a vector field on the disk".into()));
        }
        Ok(VectorField::from_cartesian(grid, |x, y| {
            self.eval(m, x, y).map(|(v, _)| (v[0], v[1])).unwrap_or((0.0, 0.0))
        }))
    }

    /// Samples value and Jacobian at every node of a location, ring-major.
    fn sample_jets(&self, grid: &Grid, m: Member, loc: Location) -> Vec<PointJet> {
        let mut out = Vec::with_capacity(grid.len());
        for j in 0..grid.n_r {
            let r = grid.radius(loc, j);
            for k in 0..grid.n_theta {
                let jet = self
                    .eval(m, r * grid.cos_t[k], r * grid.sin_t[k])
                    .unwrap_or(([0.0; 2], [[0.0; 2]; 2]));
                out.push(jet);
            }
        }
        out
    }

    /// Largest normal component of a static member on the boundary circle.
    pub fn boundary_normal(&self, grid: &Grid, m: Member) -> f64 {
        grid.cos_t
            .iter()
            .zip(&grid.sin_t)
            .map(|(&c, &s)| {
                self.eval(m, c, s)
                    .map(|(v, _)| (v[0] * c + v[1] * s).abs())
                    .unwrap_or(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Lie derivative along a static member, or the supplied time derivative for
/// [`Member::TimeDerivative`].
pub fn lie_derive(
    grid: &Grid,
    fam: &VectorFamily,
    m: Member,
    beta: &Tensor,
    time_jet: Option<&Tensor>,
) -> Result<Tensor> {
    match m {
        Member::TimeDerivative => time_jet.cloned().ok_or(Error::MissingTimeJet),
        Member::Rotation => Ok(lie_rotation(grid, beta)),
        _ => lie_analytic(grid, fam, m, beta),
    }
}

/// Applies `L_{i1} ... L_{ir}` (the last label acts first) to a time jet
/// `[beta, D_t beta, D_t^2 beta, ...]`. Static members act level by level,
/// the time derivative shifts the jet.
pub fn lie_multi(
    grid: &Grid,
    fam: &VectorFamily,
    index: &[Member],
    jet: &[Tensor],
) -> Result<Vec<Tensor>> {
    let mut cur: Vec<Tensor> = jet.to_vec();
    for &m in index.iter().rev() {
        if cur.is_empty() {
            return Err(Error::MissingTimeJet);
        }
        cur = match m {
            Member::TimeDerivative => {
                if cur.len() < 2 {
                    return Err(Error::MissingTimeJet);
                }
                cur[1..].to_vec()
            }
            _ => cur
                .iter()
                .map(|t| lie_derive(grid, fam, m, t, None))
                .collect::<Result<_>>()?,
        };
    }
    Ok(cur)
}

fn commutes(a: Member, b: Member) -> bool {
    a == b
        || a == Member::TimeDerivative
        || b == Member::TimeDerivative
        || matches!(
            (a, b),
            (Member::Rotation, Member::Radial) | (Member::Radial, Member::Rotation)
        )
}

/// Canonical representative: commuting neighbours sorted by label.
fn canonical(mut idx: Vec<Member>) -> Vec<Member> {
    let mut changed = true;
    while changed {
        changed = false;
        for i in 1..idx.len() {
            if idx[i] < idx[i - 1] && commutes(idx[i], idx[i - 1]) {
                idx.swap(i, i - 1);
                changed = true;
            }
        }
    }
    idx
}

/// All multi-indices over `labels` with length at most `order`, deduplicated
/// where the labels commute. Always starts with the empty index.
pub fn enumerate_indices(labels: &[Member], order: usize) -> Result<Vec<Vec<Member>>> {
    if order > MAX_INDEX_LEN {
        return Err(Error::Invalid(format!(
            "multi-index order {order} exceeds the cap {MAX_INDEX_LEN}"
        )));
    }
    let mut out: Vec<Vec<Member>> = vec![vec![]];
    let mut frontier: Vec<Vec<Member>> = vec![vec![]];
    for _ in 0..order {
        let mut next = Vec::new();
        for idx in &frontier {
            for &l in labels {
                let mut v = idx.clone();
                v.push(l);
                let v = canonical(v);
                if !next.contains(&v) {
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

fn lie_rotation(grid: &Grid, beta: &Tensor) -> Tensor {
    let dt = |v: &[f64]| grid.d_theta(v);
    let sf = |v: Vec<f64>| ScalarField::from_values(grid, v);
    match beta {
        Tensor::Scalar(s) => Tensor::Scalar(sf(dt(&s.values))),
        Tensor::Vector(w) => {
            Tensor::Vector(Staggered::from_parts(grid, dt(&w.radial), dt(&w.angular)))
        }
        Tensor::OneForm(w) => {
            Tensor::OneForm(Staggered::from_parts(grid, dt(&w.radial), dt(&w.angular)))
        }
        Tensor::TwoForm(b) => Tensor::TwoForm(TwoForm {
            beta12: sf(dt(&b.beta12.values)),
        }),
        Tensor::Symmetric(g) => {
            let (a, b, c) = (&g.g11.values, &g.g12.values, &g.g22.values);
            let (da, db, dc) = (dt(a), dt(b), dt(c));
            let n = a.len();
            Tensor::Symmetric(SymmetricTensorField {
                g11: sf((0..n).map(|i| da[i] + 2.0 * b[i]).collect()),
                g12: sf((0..n).map(|i| db[i] + c[i] - a[i]).collect()),
                g22: sf((0..n).map(|i| dc[i] - 2.0 * b[i]).collect()),
            })
        }
    }
}

/// `X . d f` at centers for a scalar sampled at centers.
fn directional_scalar(grid: &Grid, jets: &[PointJet], f: &[f64]) -> Vec<f64> {
    let (dr, dt) = scalar_partials(grid, f);
    let mut out = vec![0.0; grid.len()];
    for j in 0..grid.n_r {
        for k in 0..grid.n_theta {
            let i = grid.idx(j, k);
            let (c, s) = (grid.cos_t[k], grid.sin_t[k]);
            let x = jets[i].0;
            let xr = c * x[0] + s * x[1];
            let xt = -s * x[0] + c * x[1];
            out[i] = xr * dr[i] + xt * dt[i];
        }
    }
    out
}

fn lie_staggered<K>(grid: &Grid, fam: &VectorFamily, m: Member, w: &Staggered<K>, covariant: bool) -> Staggered<K> {
    let mut radial = vec![0.0; grid.len()];
    let mut angular = vec![0.0; grid.len()];
    for loc in [Location::Face, Location::Center] {
        let jets = fam.sample_jets(grid, m, loc);
        let pj = polar_jet(grid, w, loc);
        for j in 0..grid.n_r {
            let r = grid.radius(loc, j);
            for k in 0..grid.n_theta {
                let i = grid.idx(j, k);
                let (x, jac) = jets[i];
                if x == [0.0; 2] && jac == [[0.0; 2]; 2] {
                    continue;
                }
                let (c, s) = (grid.cos_t[k], grid.sin_t[k]);
                let xr = c * x[0] + s * x[1];
                let xt = -s * x[0] + c * x[1];
                let (ur, ut) = (pj.ur[i], pj.ut[i]);
                let d_r = xr * pj.dr_ur[i] + xt / r * (pj.dt_ur[i] - ut);
                let d_t = xr * pj.dr_ut[i] + xt / r * (pj.dt_ut[i] + ur);
                let w1 = c * ur - s * ut;
                let w2 = s * ur + c * ut;
                let (m1, m2) = if covariant {
                    (
                        jac[0][0] * w1 + jac[1][0] * w2,
                        jac[0][1] * w1 + jac[1][1] * w2,
                    )
                } else {
                    (
                        -(jac[0][0] * w1 + jac[0][1] * w2),
                        -(jac[1][0] * w1 + jac[1][1] * w2),
                    )
                };
                match loc {
                    Location::Face => radial[i] = d_r + c * m1 + s * m2,
                    Location::Center => angular[i] = d_t - s * m1 + c * m2,
                }
            }
        }
    }
    Staggered::from_parts(grid, radial, angular)
}

fn lie_analytic(grid: &Grid, fam: &VectorFamily, m: Member, beta: &Tensor) -> Result<Tensor> {
    let sf = |v: Vec<f64>| ScalarField::from_values(grid, v);
    Ok(match beta {
        Tensor::Vector(w) => Tensor::Vector(lie_staggered(grid, fam, m, w, false)),
        Tensor::OneForm(w) => Tensor::OneForm(lie_staggered(grid, fam, m, w, true)),
        Tensor::Scalar(s) => {
            let jets = fam.sample_jets(grid, m, Location::Center);
            Tensor::Scalar(sf(directional_scalar(grid, &jets, &s.values)))
        }
        Tensor::TwoForm(b) => {
            let jets = fam.sample_jets(grid, m, Location::Center);
            let mut v = directional_scalar(grid, &jets, &b.beta12.values);
            for (i, x) in v.iter_mut().enumerate() {
                let jac = jets[i].1;
                *x += (jac[0][0] + jac[1][1]) * b.beta12.values[i];
            }
            Tensor::TwoForm(TwoForm { beta12: sf(v) })
        }
        Tensor::Symmetric(g) => {
            let jets = fam.sample_jets(grid, m, Location::Center);
            let mut d11 = directional_scalar(grid, &jets, &g.g11.values);
            let mut d12 = directional_scalar(grid, &jets, &g.g12.values);
            let mut d22 = directional_scalar(grid, &jets, &g.g22.values);
            for i in 0..grid.len() {
                let jac = jets[i].1;
                let gm = [
                    [g.g11.values[i], g.g12.values[i]],
                    [g.g12.values[i], g.g22.values[i]],
                ];
                // (J^T g + g J)_ab = J_ca g_cb + g_ac J_cb
                let term = |a: usize, b: usize| {
                    (0..2)
                        .map(|cc| jac[cc][a] * gm[cc][b] + gm[a][cc] * jac[cc][b])
                        .sum::<f64>()
                };
                d11[i] += term(0, 0);
                d12[i] += term(0, 1);
                d22[i] += term(1, 1);
            }
            Tensor::Symmetric(SymmetricTensorField {
                g11: sf(d11),
                g12: sf(d12),
                g22: sf(d22),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{curl, div};
    use crate::fields::{random_scalar_field, random_vector_field, OneForm};
    use crate::grid::build_grid;

    #[test]
    fn transition_endpoints_and_derivatives() {
        assert_eq!(transition(0.0), (0.0, 0.0, 0.0));
        assert!((transition(1.0 - 1e-12).0 - 1.0).abs() < 1e-10);
        assert!((transition(0.5).0 - 0.5).abs() < 1e-14);
        let h = 1e-6;
        for &x in &[0.1, 0.37, 0.8] {
            let (_, d, dd) = transition(x);
            assert!((d - (transition(x + h).0 - transition(x - h).0) / (2.0 * h)).abs() < 1e-7);
            assert!((dd - (transition(x + h).1 - transition(x - h).1) / (2.0 * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn rotation_and_radial_divergence() {
        let g = build_grid(32, 32).unwrap();
        let fam = VectorFamily::default();
        let s0 = fam.sample(&g, Member::Rotation).unwrap();
        assert!(div(&g, &s0).unwrap().max_abs() < 1e-10);
        let r = fam.sample(&g, Member::Radial).unwrap();
        assert!(div(&g, &r).unwrap().map(|v| v - 2.0).max_abs() < 1e-10);
    }

    #[test]
    fn interior_members_vanish_near_the_boundary() {
        let g = build_grid(64, 64).unwrap();
        let fam = VectorFamily::default();
        for k in 0..INTERIOR_COUNT {
            let m = Member::Interior(k);
            for j in 0..g.n_r {
                for kk in 0..g.n_theta {
                    for loc in [Location::Center, Location::Face] {
                        let r = g.radius(loc, j);
                        if 1.0 - r < fam.d0 / 2.0 {
                            let (v, jac) = fam.eval(m, r * g.cos_t[kk], r * g.sin_t[kk]).unwrap();
                            assert_eq!(v, [0.0, 0.0]);
                            assert_eq!(jac, [[0.0; 2]; 2]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn interior_members_are_divergence_free_pointwise() {
        let fam = VectorFamily::default();
        for k in 0..INTERIOR_COUNT {
            for &(x, y) in &[(0.1, 0.2), (0.3, -0.2), (-0.4, 0.1), (0.05, 0.45)] {
                let (_, jac) = fam.eval(Member::Interior(k), x, y).unwrap();
                assert!((jac[0][0] + jac[1][1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_jacobian_matches_finite_differences() {
        let fam = VectorFamily::default();
        let h = 1e-6;
        for k in 0..INTERIOR_COUNT {
            let m = Member::Interior(k);
            for &(x, y) in &[(0.1, 0.2), (0.3, -0.25), (-0.4, 0.1)] {
                let (_, jac) = fam.eval(m, x, y).unwrap();
                let f = |a: f64, b: f64| fam.eval(m, a, b).unwrap().0;
                for a in 0..2 {
                    let d1 = (f(x + h, y)[a] - f(x - h, y)[a]) / (2.0 * h);
                    let d2 = (f(x, y + h)[a] - f(x, y - h)[a]) / (2.0 * h);
                    assert!((jac[a][0] - d1).abs() < 1e-6);
                    assert!((jac[a][1] - d2).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn interior_members_span_the_inner_disk() {
        let fam = VectorFamily::default();
        for i in 0..=50 {
            for jj in 0..=50 {
                let x = -0.5 + i as f64 / 50.0;
                let y = -0.5 + jj as f64 / 50.0;
                if x * x + y * y > 0.25 {
                    continue;
                }
                let vs: Vec<[f64; 2]> = (0..INTERIOR_COUNT)
                    .map(|k| fam.eval(Member::Interior(k), x, y).unwrap().0)
                    .collect();
                let mut best: f64 = 0.0;
                for a in 0..vs.len() {
                    for b in a + 1..vs.len() {
                        best = best.max((vs[a][0] * vs[b][1] - vs[a][1] * vs[b][0]).abs());
                    }
                }
                assert!(best > 1e-3, "no spanning pair at ({x}, {y})");
            }
        }
    }

    #[test]
    fn rotation_lie_derivative_of_e1() {
        let g = build_grid(16, 16).unwrap();
        let fam = VectorFamily::default();
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let e2 = VectorField::from_cartesian(&g, |_, _| (0.0, 1.0));
        let Tensor::Vector(l) = lie_derive(&g, &fam, Member::Rotation, &Tensor::Vector(e1), None).unwrap()
        else {
            panic!()
        };
        assert!((&l + &e2).max_abs() < 1e-10);
    }

    #[test]
    fn generic_path_agrees_with_spectral_rotation_on_linear_fields() {
        // The rotation member evaluated through the generic stencils must agree
        // with the spectral path on fields the stencils differentiate exactly.
        let g = build_grid(16, 16).unwrap();
        let fam = VectorFamily::default();
        let w = VectorField::from_cartesian(&g, |x, y| (1.0 + 2.0 * x - y, 0.5 * x + 3.0 * y));
        let spectral = lie_rotation(&g, &Tensor::Vector(w.clone()));
        let generic = lie_analytic(&g, &fam, Member::Rotation, &Tensor::Vector(w)).unwrap();
        assert!(spectral.sub(&generic).norm(&g) < 1e-10);
    }

    #[test]
    fn field_along_itself() {
        let g = build_grid(16, 16).unwrap();
        let fam = VectorFamily::default();
        let s = fam.sample(&g, Member::Rotation).unwrap();
        let l = lie_derive(&g, &fam, Member::Rotation, &Tensor::Vector(s), None).unwrap();
        assert!(l.norm(&g) < 1e-12);
    }

    #[test]
    fn curl_commutes_with_rotation_derivative() {
        let g = build_grid(32, 32).unwrap();
        let fam = VectorFamily::default();
        let w: OneForm = random_vector_field(&g, 11, 3).retag();
        let Tensor::OneForm(lw) =
            lie_derive(&g, &fam, Member::Rotation, &Tensor::OneForm(w.clone()), None).unwrap()
        else {
            panic!()
        };
        let a = curl(&g, &lw).unwrap();
        let cw = curl(&g, &w).unwrap();
        let b = lie_derive(&g, &fam, Member::Rotation, &Tensor::TwoForm(cw), None).unwrap();
        assert!(Tensor::TwoForm(a).sub(&b).norm(&g) < 1e-8);
    }

    #[test]
    fn multi_index_rules() {
        let g = build_grid(12, 16).unwrap();
        let fam = VectorFamily::default();
        let s = Tensor::Scalar(random_scalar_field(&g, 3, 2));
        let id = lie_multi(&g, &fam, &[], &[s.clone()]).unwrap();
        assert_eq!(id[0], s);
        let twice = lie_multi(&g, &fam, &[Member::Rotation, Member::Rotation], &[s.clone()]).unwrap();
        let once = lie_derive(&g, &fam, Member::Rotation, &s, None).unwrap();
        let again = lie_derive(&g, &fam, Member::Rotation, &once, None).unwrap();
        assert!(twice[0].sub(&again).norm(&g) < 1e-12);
        let omega = Tensor::TwoForm(TwoForm::constant(&g, 2.0));
        let jet = vec![omega.clone(), Tensor::TwoForm(TwoForm::zeros(&g))];
        let a = lie_multi(&g, &fam, &[Member::TimeDerivative, Member::Rotation], &jet).unwrap();
        let b = lie_multi(&g, &fam, &[Member::Rotation, Member::TimeDerivative], &jet).unwrap();
        assert!(a[0].sub(&b[0]).norm(&g) < 1e-14);
        assert!(matches!(
            lie_multi(&g, &fam, &[Member::TimeDerivative], &[omega]),
            Err(Error::MissingTimeJet)
        ));
    }

    #[test]
    fn enumeration_deduplicates_commuting_pairs() {
        let labels = [Member::Rotation, Member::Radial, Member::TimeDerivative];
        let idx = enumerate_indices(&labels, 2).unwrap();
        assert_eq!(idx[0], Vec::<Member>::new());
        // length 1: 3, length 2: all three labels pairwise commute -> 6 unordered pairs
        assert_eq!(idx.len(), 1 + 3 + 6);
        assert!(enumerate_indices(&labels, 4).is_err());
    }

    #[test]
    fn member_labels_round_trip() {
        for m in VectorFamily::default().static_members() {
            assert_eq!(Member::parse(&m.to_string()), Some(m));
        }
        assert_eq!(Member::parse("Dt"), Some(Member::TimeDerivative));
        assert_eq!(Member::parse("S1[9]"), None);
    }
}
