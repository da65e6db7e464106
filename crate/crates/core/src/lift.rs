//! Polynomial-in-time lift of initial data.
//!
//! Given `(W0, W1)` and the time-jets of the forcing, the recursion produces
//! the Taylor coefficients `W_s` of a solution at `t = 0`. Subtracting the
//! truncated series leaves vanishing data and a forcing whose first `r`
//! time-jets vanish.

use crate::background::{Background, BackgroundJet};
use crate::calculus::{contract_symmetric, contract_two_form};
use crate::error::{Error, Result};
use crate::fields::{OneForm, VectorField};
use crate::grid::Grid;
use crate::operators::{linear_force, normal_unprojected, project_one_form, NormalMode};
use crate::projection::divergence_defect;

/// Exact binomial coefficient.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn require_divergence_free(grid: &Grid, w: &VectorField, b: &BackgroundJet, name: &str) -> Result<()> {
    let defect = divergence_defect(grid, w, b)?;
    if defect > 1e-8 * w.norm(grid).max(1.0) {
        return Err(Error::Invalid(format!(
            "{name} is not divergence-free (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Taylor coefficients `W_0 .. W_{r+2}` of the solution at `t = 0` with the
/// direct normal operator.
pub fn jet_recursion(
    grid: &Grid,
    w0: &VectorField,
    w1: &VectorField,
    f_jets: &[VectorField],
    order: usize,
    b: &BackgroundJet,
) -> Result<Vec<VectorField>> {
    jet_recursion_with(grid, w0, w1, f_jets, order, b, NormalMode::Direct)
}

/// As [`jet_recursion`] with a choice of normal operator. Missing forcing jets
/// count as zero.
pub fn jet_recursion_with(
    grid: &Grid,
    w0: &VectorField,
    w1: &VectorField,
    f_jets: &[VectorField],
    order: usize,
    b: &BackgroundJet,
    mode: NormalMode,
) -> Result<Vec<VectorField>> {
    b.require_order(order + 1)?;
    require_divergence_free(grid, w0, b, "W0")?;
    require_divergence_free(grid, w1, b, "W1")?;
    let zero = VectorField::zeros(grid);
    let forcing = |s: usize| f_jets.get(s).unwrap_or(&zero);
    let mut jets = vec![w0.clone(), w1.clone()];
    for k in 0..=order {
        // One-form of the whole right-hand side; raised and projected once.
        let mut y = OneForm::zeros(grid);
        for s in 0..k {
            let c = binomial(k, s) as f64;
            y = y.axpy(-c, &contract_symmetric(grid, &b.g_jets[k - s], &jets[s + 2])?);
        }
        for s in 0..=k {
            let c = binomial(k, s) as f64;
            let m = k - s;
            y = y.axpy(-c, &contract_symmetric(grid, &b.g_jets[m + 1], &jets[s + 1])?);
            y = y.axpy(c, &contract_two_form(grid, &b.omega_jets[m], &jets[s + 1])?);
            y = y.axpy(-c, &normal_unprojected(grid, &b.p_jets[m], &jets[s], mode)?);
            y = y.axpy(c, &contract_symmetric(grid, &b.g_jets[m], forcing(s))?);
        }
        jets.push(project_one_form(grid, y, b)?);
    }
    Ok(jets)
}

/// Truncated series `W_{0r}(t) = sum_{s <= r+2} t^s / s! W_s`.
#[derive(Clone, Debug)]
pub struct SeriesLift {
    pub jets: Vec<VectorField>,
    pub order: usize,
}

/// Keeps the coefficients `W_0 .. W_{r+2}`.
pub fn assemble_series(jets: &[VectorField], order: usize) -> Result<SeriesLift> {
    if jets.len() < order + 3 {
        return Err(Error::JetOrder {
            available: jets.len().saturating_sub(3),
            needed: order,
        });
    }
    Ok(SeriesLift {
        jets: jets[..order + 3].to_vec(),
        order,
    })
}

impl SeriesLift {
    /// `D_t^k W_{0r}(t)`.
    pub fn derivative(&self, t: f64, k: usize) -> VectorField {
        let mut out = self.jets[0].scale(0.0);
        let mut coef = 1.0;
        for (m, w) in self.jets.iter().skip(k).enumerate() {
            if m > 0 {
                coef *= t / m as f64;
            }
            out = out.axpy(coef, w);
        }
        out
    }

    pub fn value(&self, t: f64) -> VectorField {
        self.derivative(t, 0)
    }

    /// `L_1 W_{0r}(t) = D_t^2 W_{0r} + A W_{0r} + Gdot D_t W_{0r} - C D_t W_{0r}`.
    pub fn apply_l1(&self, grid: &Grid, t: f64, b: &BackgroundJet, mode: NormalMode) -> Result<VectorField> {
        let force = linear_force(grid, &self.value(t), &self.derivative(t, 1), mode, b)?;
        Ok(&self.derivative(t, 2) + &force)
    }

    /// Replacement forcing `F(t) - L_1 W_{0r}(t)`; `forcing` is `F(t)` or zero.
    pub fn residual_forcing(
        &self,
        grid: &Grid,
        background: &dyn Background,
        t: f64,
        forcing: Option<&VectorField>,
        mode: NormalMode,
    ) -> Result<VectorField> {
        let b = background.jet(t, grid)?;
        let l1 = self.apply_l1(grid, t, &b, mode)?;
        Ok(match forcing {
            Some(f) => f - &l1,
            None => -&l1,
        })
    }
}

/// Five-point central estimates of `D_t^s h(0)` for `s = 0..=2` from samples
/// at `t = -2h, -h, 0, h, 2h`, as quadrature norms.
pub fn time_derivative_norms(grid: &Grid, samples: &[VectorField; 5], h: f64) -> [f64; 3] {
    let [m2, m1, z, p1, p2] = samples;
    let d1 = (&(&m2.scale(1.0 / 12.0) - &m1.scale(8.0 / 12.0)) + &(&p1.scale(8.0 / 12.0) - &p2.scale(1.0 / 12.0)))
        .scale(1.0 / h);
    let d2 = (&(&m2.scale(-1.0 / 12.0) + &m1.scale(16.0 / 12.0)) + &(&z.scale(-30.0 / 12.0) + &(&p1.scale(16.0 / 12.0) - &p2.scale(1.0 / 12.0))))
        .scale(1.0 / (h * h));
    [z.norm(grid), d1.norm(grid), d2.norm(grid)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::rigid_rotation_background;
    use crate::grid::build_grid;

    #[test]
    fn binomials_are_exact() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(7, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    fn setup(n: usize, omega: f64) -> (Grid, BackgroundJet) {
        let g = build_grid(n, n).unwrap();
        let b = rigid_rotation_background(omega).jet(0.0, &g).unwrap();
        (g, b)
    }

    #[test]
    fn second_jet_of_rigid_rotation() {
        let (g, b) = setup(64, 1.0);
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let jets = jet_recursion(&g, &e1, &VectorField::zeros(&g), &[], 1, &b).unwrap();
        assert_eq!(jets.len(), 4);
        assert!((&jets[2] + &e1).max_abs() < 1e-3);
        // Third jet is C W_2 = 2 Omega^3 e2.
        let e2 = VectorField::from_cartesian(&g, |_, _| (0.0, 2.0));
        assert!((&jets[3] - &e2).max_abs() < 1e-3);
    }

    #[test]
    fn forcing_only_passes_through() {
        let (g, b) = setup(32, 1.0);
        let f0 = crate::projection::project(&g, &crate::fields::random_vector_field(&g, 3, 3), &b)
            .unwrap()
            .0;
        let z = VectorField::zeros(&g);
        let jets = jet_recursion(&g, &z, &z, &[f0.clone()], 0, &b).unwrap();
        assert!((&jets[2] - &f0).max_abs() < 1e-9 * f0.max_abs());
    }

    #[test]
    fn zero_in_zero_out() {
        let (g, b) = setup(16, 1.0);
        let z = VectorField::zeros(&g);
        for w in jet_recursion(&g, &z, &z, &[], 2, &b).unwrap() {
            assert_eq!(w.max_abs(), 0.0);
        }
    }

    #[test]
    fn rejects_short_background_and_divergent_data() {
        let g = build_grid(16, 16).unwrap();
        let mut bg = rigid_rotation_background(1.0);
        bg.jet_order = 1;
        let b = bg.jet(0.0, &g).unwrap();
        let z = VectorField::zeros(&g);
        assert!(matches!(
            jet_recursion(&g, &z, &z, &[], 2, &b),
            Err(Error::JetOrder { available: 1, needed: 3 })
        ));
        let lin = VectorField::from_cartesian(&g, |x, _| (x, 0.0));
        assert!(jet_recursion(&g, &lin, &z, &[], 0, &b).is_err());
    }

    #[test]
    fn series_matches_data_and_closed_form() {
        let (g, b) = setup(32, 1.0);
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let z = VectorField::zeros(&g);
        let jets = jet_recursion(&g, &e1, &z, &[], 0, &b).unwrap();
        let s = assemble_series(&jets, 0).unwrap();
        assert_eq!((&s.value(0.0) - &e1).max_abs(), 0.0);
        assert_eq!(s.derivative(0.0, 1).max_abs(), 0.0);
        let t = 0.7;
        let want = e1.scale(1.0 - t * t / 2.0);
        assert!((&s.value(t) - &want).max_abs() < 1e-3);
        assert!(assemble_series(&jets, 1).is_err());
    }

    #[test]
    fn residual_forcing_vanishes_to_order() {
        let (g, b) = setup(32, 1.0);
        let bg = rigid_rotation_background(1.0);
        let w0 = crate::projection::project(&g, &crate::fields::random_vector_field(&g, 5, 2), &b)
            .unwrap()
            .0;
        let z = VectorField::zeros(&g);
        let jets = jet_recursion(&g, &w0, &z, &[], 2, &b).unwrap();
        let s = assemble_series(&jets, 2).unwrap();
        let h = 1e-2;
        let samples = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .map(|k| s.residual_forcing(&g, &bg, k * h, None, NormalMode::Direct).unwrap());
        let norms = time_derivative_norms(&g, &samples, h);
        let scale = w0.norm(&g);
        for v in norms {
            assert!(v < 1e-3 * scale, "{norms:?}");
        }
    }
}
