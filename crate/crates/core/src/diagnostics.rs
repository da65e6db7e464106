//! Energies, correctors, curl norms, the conserved curl invariant and the
//! pointwise gradient estimate.

use rayon::prelude::*;
use serde::Serialize;

use crate::background::{Background, BackgroundJet};
use crate::calculus::{contract_two_form, curl, div, inner_product, jacobian_norm, lower, polar_jet, scalar_partials};
use crate::error::{Error, Result};
use crate::evolution::State;
use crate::families::{enumerate_indices, format_index, lie_derive, lie_multi, Member, VectorFamily};
use crate::fields::{ScalarField, Tensor, TwoForm, VectorField};
use crate::grid::{Grid, Location};
use crate::lift::jet_recursion_with;
use crate::operators::{apply_mult, apply_normal, normal_form, Multiplier, NormalMode};

/// `[W, D_t W, ..]` with `count` levels; levels past the first two come from
/// the equation itself, never from differencing a trajectory.
pub fn state_jets(
    grid: &Grid,
    w: &VectorField,
    wdot: &VectorField,
    forcing_jets: &[VectorField],
    count: usize,
    b: &BackgroundJet,
    mode: NormalMode,
) -> Result<Vec<VectorField>> {
    if count <= 2 {
        return Ok([w.clone(), wdot.clone()].into_iter().take(count).collect());
    }
    let mut jets = jet_recursion_with(grid, w, wdot, forcing_jets, count - 3, b, mode)?;
    jets.truncate(count);
    Ok(jets)
}

/// `<W', W'> + <W, (A + I) W>` with the quadratic form of the active operator.
pub fn energy_with(grid: &Grid, w: &VectorField, wdot: &VectorField, b: &BackgroundJet, mode: NormalMode) -> Result<f64> {
    let kinetic = inner_product(grid, wdot, wdot, &b.g)?;
    let mass = inner_product(grid, w, w, &b.g)?;
    let a = normal_form(grid, w, w, &b.p, mode, b)?;
    Ok(kinetic + mass + a)
}

/// Base energy with the boundary form of the direct operator.
pub fn energy_base(grid: &Grid, state: &State, b: &BackgroundJet) -> Result<f64> {
    energy_with(grid, &state.w, &state.wdot, b, NormalMode::Direct)
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexEnergy {
    pub index: String,
    pub energy: f64,
    pub corrector: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentialEnergy {
    pub order: usize,
    pub entries: Vec<IndexEnergy>,
    /// `sum_I sqrt(E_I)`.
    pub total: f64,
}

fn vector_jet(levels: &[VectorField]) -> Vec<Tensor> {
    levels.iter().cloned().map(Tensor::Vector).collect()
}

fn as_vector(t: Tensor) -> VectorField {
    match t {
        Tensor::Vector(v) => v,
        other => panic!("expected a vector field, got {}", other.kind()),
    }
}

fn as_scalar(t: Tensor) -> ScalarField {
    match t {
        Tensor::Scalar(s) => s,
        other => panic!("expected a scalar, got {}", other.kind()),
    }
}

fn time_order(index: &[Member]) -> usize {
    index.iter().filter(|m| **m == Member::TimeDerivative).count()
}

/// Splits `index` by a bit mask into the selected and remaining subsequences.
fn split(index: &[Member], mask: usize) -> (Vec<Member>, Vec<Member>) {
    let mut chosen = Vec::new();
    let mut rest = Vec::new();
    for (i, &m) in index.iter().enumerate() {
        if mask & (1 << i) != 0 {
            chosen.push(m);
        } else {
            rest.push(m);
        }
    }
    (chosen, rest)
}

/// `E_I = E(L^I W)` and the corrector `D_I = 2 sum <W_I, A_{T^I1 p} W_I2>` over
/// splittings with `I1` nonempty, for all indices over `S0, S1, D_t` with
/// `|I| <= order`. `jets` holds `[W, W', W'', ..]`; indices with `k` time
/// derivatives need `k + 2` levels.
pub fn energy_tangential(
    grid: &Grid,
    jets: &[VectorField],
    fam: &VectorFamily,
    order: usize,
    b: &BackgroundJet,
    mode: NormalMode,
) -> Result<TangentialEnergy> {
    let mut labels = vec![Member::TimeDerivative];
    labels.extend(fam.tangential_members());
    let indices = enumerate_indices(&labels, order)?;
    let needed = indices.iter().map(|i| time_order(i) + 2).max().unwrap_or(2);
    if jets.len() < needed {
        return Err(Error::JetOrder {
            available: jets.len().saturating_sub(1),
            needed: needed - 1,
        });
    }
    let w_jet = vector_jet(jets);
    let p_jet: Vec<Tensor> = b.p_jets.iter().cloned().map(Tensor::Scalar).collect();
    let entries: Vec<IndexEnergy> = indices
        .par_iter()
        .map(|index| -> Result<IndexEnergy> {
            let derived = lie_multi(grid, fam, index, &w_jet)?;
            let mut it = derived.into_iter();
            let wi = as_vector(it.next().ok_or(Error::MissingTimeJet)?);
            let wi_dot = as_vector(it.next().ok_or(Error::MissingTimeJet)?);
            let energy = energy_with(grid, &wi, &wi_dot, b, mode)?;
            let mut corrector = 0.0;
            for mask in 1..(1usize << index.len()) {
                let (first, second) = split(index, mask);
                if time_order(&first) >= p_jet.len() {
                    return Err(Error::JetOrder {
                        available: p_jet.len() - 1,
                        needed: time_order(&first),
                    });
                }
                let f = as_scalar(lie_multi(grid, fam, &first, &p_jet)?.swap_remove(0));
                let w2 = as_vector(lie_multi(grid, fam, &second, &w_jet)?.swap_remove(0));
                corrector += 2.0 * normal_form(grid, &wi, &w2, &f, mode, b)?;
            }
            Ok(IndexEnergy {
                index: format_index(index),
                energy,
                corrector,
            })
        })
        .collect::<Result<_>>()?;
    let total = entries.iter().map(|e| e.energy.max(0.0).sqrt()).sum();
    Ok(TangentialEnergy {
        order,
        entries,
        total,
    })
}

/// Flat quadrature norm of a two-form with the metric volume weight.
fn two_form_norm(grid: &Grid, beta: &TwoForm, b: &BackgroundJet) -> f64 {
    let v: Vec<f64> = (0..grid.len())
        .map(|i| {
            let det = b.g.g11.values[i] * b.g.g22.values[i] - b.g.g12.values[i].powi(2);
            beta.beta12.values[i].powi(2) / det
        })
        .collect();
    grid.quadrature(Location::Center, &v).max(0.0).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct CurlNorms {
    pub order: usize,
    /// `C_r = sum_{|J| <= r-1} (|curl L^J w'|^2 + |curl L^J w|^2)^(1/2)`, zero for `r = 0`.
    pub seminorm: f64,
    /// `sum_{|I| <= r} |L^I W|`.
    pub mixed_norm: f64,
}

/// Curl seminorm and mixed norm over the static `labels`.
pub fn curl_seminorms(
    grid: &Grid,
    w: &VectorField,
    wdot: &VectorField,
    fam: &VectorFamily,
    labels: &[Member],
    order: usize,
    b: &BackgroundJet,
) -> Result<CurlNorms> {
    if labels.iter().any(|m| !m.is_static()) {
        return Err(Error::Invalid("curl norms take static labels only".into()));
    }
    let low = Tensor::OneForm(lower(grid, w, &b.g)?);
    let low_dot = Tensor::OneForm(lower(grid, wdot, &b.g)?);
    let mut seminorm = 0.0;
    if order > 0 {
        for index in enumerate_indices(labels, order - 1)? {
            let mut s = 0.0;
            for base in [&low_dot, &low] {
                let Tensor::OneForm(d) = lie_multi(grid, fam, &index, std::slice::from_ref(base))?.swap_remove(0) else {
                    unreachable!("Lie derivatives keep the tensor kind")
                };
                s += two_form_norm(grid, &curl(grid, &d)?, b).powi(2);
            }
            seminorm += s.sqrt();
        }
    }
    let mut mixed_norm = 0.0;
    let wt = [Tensor::Vector(w.clone())];
    for index in enumerate_indices(labels, order)? {
        let d = as_vector(lie_multi(grid, fam, &index, &wt)?.swap_remove(0));
        mixed_norm += inner_product(grid, &d, &d, &b.g)?.max(0.0).sqrt();
    }
    Ok(CurlNorms {
        order,
        seminorm,
        mixed_norm,
    })
}

/// `sum_{|I| <= r} <L^I W, A L^I W>^(1/2)` over the static tangential fields,
/// from the boundary form or from an interior application of the operator.
pub fn a_seminorm(
    grid: &Grid,
    w: &VectorField,
    fam: &VectorFamily,
    order: usize,
    b: &BackgroundJet,
    mode: NormalMode,
    interior: bool,
) -> Result<f64> {
    let wt = [Tensor::Vector(w.clone())];
    let mut total = 0.0;
    for index in enumerate_indices(&fam.tangential_members(), order)? {
        let d = as_vector(lie_multi(grid, fam, &index, &wt)?.swap_remove(0));
        let q = if interior {
            let ad = apply_normal(grid, &b.p, &d, mode, b)?;
            inner_product(grid, &d, &ad, &b.g)?
        } else {
            normal_form(grid, &d, &d, &b.p, mode, b)?
        };
        total += q.max(0.0).sqrt();
    }
    Ok(total)
}

/// `curl(w' - omega . W)`, with `w'` the lowered velocity.
pub fn curl_invariant(grid: &Grid, w: &VectorField, wdot: &VectorField, b: &BackgroundJet) -> Result<TwoForm> {
    let dz = &lower(grid, wdot, &b.g)? - &contract_two_form(grid, &b.omega, w)?;
    curl(grid, &dz)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurlDrift {
    pub t: Vec<f64>,
    pub drift: Vec<f64>,
    pub max_drift: f64,
    /// Norm of the invariant at the first state, for scale.
    pub initial_norm: f64,
}

/// Tracks `|curl dz(t) - curl dz(0)|` along a run.
#[derive(Clone, Debug)]
pub struct CurlTracker {
    initial: TwoForm,
}

impl CurlTracker {
    pub fn new(grid: &Grid, state: &State, b: &BackgroundJet) -> Result<Self> {
        Ok(CurlTracker {
            initial: curl_invariant(grid, &state.w, &state.wdot, b)?,
        })
    }

    pub fn initial_norm(&self, grid: &Grid, b: &BackgroundJet) -> f64 {
        two_form_norm(grid, &self.initial, b)
    }

    pub fn drift(&self, grid: &Grid, state: &State, b: &BackgroundJet) -> Result<f64> {
        let now = curl_invariant(grid, &state.w, &state.wdot, b)?;
        let diff = TwoForm {
            beta12: &now.beta12 - &self.initial.beta12,
        };
        Ok(two_form_norm(grid, &diff, b))
    }
}

/// Drift of the curl invariant over stored states.
pub fn conserved_curl(grid: &Grid, states: &[State], background: &dyn Background) -> Result<CurlDrift> {
    let first = states
        .first()
        .ok_or_else(|| Error::Invalid("empty trajectory".into()))?;
    let b0 = background.jet(first.t, grid)?;
    let tracker = CurlTracker::new(grid, first, &b0)?;
    let mut t = Vec::with_capacity(states.len());
    let mut drift = Vec::with_capacity(states.len());
    for s in states {
        let b = background.jet(s.t, grid)?;
        t.push(s.t);
        drift.push(tracker.drift(grid, s, &b)?);
    }
    let max_drift = drift.iter().cloned().fold(0.0, f64::max);
    Ok(CurlDrift {
        t,
        drift,
        max_drift,
        initial_norm: tracker.initial_norm(grid, &b0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientReport {
    /// Largest pointwise ratio `|dW| / majorant`.
    pub max_ratio: f64,
    /// Polar position `(r, theta)` of the largest ratio.
    pub at: (f64, f64),
    pub nodes: usize,
}

/// Pointwise `|dW|` against `|curl w| + |div W| + sum_S |L_S W| + (1 + |dg|) |W|`.
pub fn gradient_estimate_report(grid: &Grid, w: &VectorField, fam: &VectorFamily, b: &BackgroundJet) -> Result<GradientReport> {
    let grad = jacobian_norm(grid, w)?;
    let curl_w = curl(grid, &lower(grid, w, &b.g)?)?;
    let div_w = div(grid, w)?;
    let mut majorant: Vec<f64> = (0..grid.len())
        .map(|i| curl_w.beta12.values[i].abs() + div_w.values[i].abs())
        .collect();
    for m in fam.tangential_members() {
        let lw = as_vector(lie_derive(grid, fam, m, &Tensor::Vector(w.clone()), None)?);
        let jet = polar_jet(grid, &lw, Location::Center);
        for (i, v) in majorant.iter_mut().enumerate() {
            *v += jet.ur[i].hypot(jet.ut[i]);
        }
    }
    let mut dg2 = vec![0.0; grid.len()];
    for comp in [&b.g.g11, &b.g.g12, &b.g.g22] {
        let (dr, dt) = scalar_partials(grid, &comp.values);
        for i in 0..grid.len() {
            dg2[i] += dr[i] * dr[i] + dt[i] * dt[i];
        }
    }
    let jet = polar_jet(grid, w, Location::Center);
    for i in 0..grid.len() {
        majorant[i] += (1.0 + dg2[i].sqrt()) * jet.ur[i].hypot(jet.ut[i]);
    }
    let scale = majorant.iter().cloned().fold(0.0, f64::max);
    let mut max_ratio: f64 = 0.0;
    let mut at = (0.0, 0.0);
    let mut nodes = 0;
    for j in 0..grid.n_r {
        for k in 0..grid.n_theta {
            let i = grid.idx(j, k);
            if majorant[i] > 1e-12 * scale {
                let ratio = grad.values[i] / majorant[i];
                if ratio > max_ratio {
                    max_ratio = ratio;
                    at = (grid.r[j], grid.theta[k]);
                }
                nodes += 1;
            }
        }
    }
    Ok(GradientReport { max_ratio, at, nodes })
}

/// `n(t) = 1 + |g'|_inf + |d_N p' / d_N p|_inf` on the boundary.
pub fn growth_coefficient(grid: &Grid, b: &BackgroundJet) -> f64 {
    let dn = crate::calculus::normal_derivative_dirichlet(grid, &b.p);
    let dn_dot = crate::calculus::normal_derivative_dirichlet(grid, &b.p_dot);
    let ratio = dn
        .iter()
        .zip(&dn_dot)
        .map(|(a, d)| if *d == 0.0 { 0.0 } else { (d / a).abs() })
        .fold(0.0, f64::max);
    1.0 + b.g_dot.sup_norm() + ratio
}

/// `<W', C W'>`, zero for an exactly antisymmetric `C`.
pub fn rotation_work(grid: &Grid, wdot: &VectorField, b: &BackgroundJet) -> Result<f64> {
    let cw = apply_mult(grid, Multiplier::TwoForm(&b.omega), wdot, b)?;
    inner_product(grid, wdot, &cw, &b.g)
}

/// One line of a verification report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Passes when `measured <= bound`.
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        CheckRecord {
            name: name.to_string(),
            measured,
            bound,
            pass: measured <= bound,
            note: None,
        }
    }

    /// Passes when `measured >= bound`.
    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        CheckRecord {
            name: name.to_string(),
            measured,
            bound,
            pass: measured >= bound,
            note: None,
        }
    }

    pub fn skipped(name: &str, reason: &str) -> Self {
        CheckRecord {
            name: name.to_string(),
            measured: 0.0,
            bound: 0.0,
            pass: true,
            note: Some(format!("skipped: {reason}")),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Energy and forcing norm at one time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub forcing_norm: f64,
    pub growth: f64,
}

fn trapezoid(t: &[f64], v: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; t.len()];
    for i in 1..t.len() {
        acc[i] = acc[i - 1] + 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
    }
    acc
}

/// Checks `E(t) <= e^{int n} (sqrt E(0) + int |F|)^2 (1 + tol)` at every sample;
/// the measured value is the largest ratio of the two sides.
pub fn energy_bound_check(samples: &[EnergySample], tol: f64) -> CheckRecord {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let n_int = trapezoid(&t, &samples.iter().map(|s| s.growth).collect::<Vec<_>>());
    let f_int = trapezoid(&t, &samples.iter().map(|s| s.forcing_norm).collect::<Vec<_>>());
    let e0 = samples.first().map(|s| s.energy.max(0.0)).unwrap_or(0.0);
    let mut worst: f64 = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let rhs = n_int[i].exp() * (e0.sqrt() + f_int[i]).powi(2);
        let ratio = if rhs > 0.0 {
            s.energy / rhs
        } else if s.energy > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
    }
    CheckRecord::at_most("energy-bound", worst, 1.0 + tol)
}

/// Empirical constant of `E_r(t) <= C int_0^t |F|_r` for a run from zero data.
/// `samples` holds `(t, E_r(t), |F(t)|_r)`.
pub fn lifted_energy_constant(samples: &[(f64, f64, f64)], limit: f64) -> CheckRecord {
    let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let f_int = trapezoid(&t, &samples.iter().map(|s| s.2).collect::<Vec<_>>());
    let mut c: f64 = 0.0;
    for (i, s) in samples.iter().enumerate() {
        if f_int[i] > 0.0 {
            c = c.max(s.1 / f_int[i]);
        } else if s.1 > 1e-14 {
            c = f64::INFINITY;
        }
    }
    CheckRecord::at_most("lifted-energy-constant", c, limit)
}

/// Summary of one state.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    pub tangential: TangentialEnergy,
    pub curl: CurlNorms,
    pub a_seminorm: f64,
    pub growth: f64,
}

/// Full report at one state. `forcing_jets` are the forcing's time-jets at
/// the state's time.
pub fn energy_report(
    grid: &Grid,
    state: &State,
    forcing_jets: &[VectorField],
    fam: &VectorFamily,
    order: usize,
    b: &BackgroundJet,
    mode: NormalMode,
) -> Result<EnergyReport> {
    let jets = state_jets(grid, &state.w, &state.wdot, forcing_jets, order + 2, b, mode)?;
    Ok(EnergyReport {
        t: state.t,
        energy: energy_with(grid, &state.w, &state.wdot, b, mode)?,
        tangential: energy_tangential(grid, &jets, fam, order, b, mode)?,
        curl: curl_seminorms(grid, &state.w, &state.wdot, fam, &fam.tangential_members(), order, b)?,
        a_seminorm: a_seminorm(grid, &state.w, fam, order, b, mode, false)?,
        growth: growth_coefficient(grid, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::rigid_rotation_background;
    use crate::grid::build_grid;
    use std::f64::consts::PI;

    fn setup(n: usize, omega: f64) -> (Grid, BackgroundJet) {
        let g = build_grid(n, n).unwrap();
        let b = rigid_rotation_background(omega).jet(0.0, &g).unwrap();
        (g, b)
    }

    fn state(g: &Grid, b: &BackgroundJet, w: VectorField, wdot: VectorField) -> State {
        State::new(g, 0.0, w, wdot, b).unwrap()
    }

    #[test]
    fn base_energy_examples() {
        let (g, b) = setup(64, 1.0);
        assert_eq!(energy_base(&g, &State::zeros(&g, 0.0), &b).unwrap(), 0.0);
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let s = state(&g, &b, e1, VectorField::zeros(&g));
        assert!((energy_base(&g, &s, &b).unwrap() - 2.0 * PI).abs() < 2e-3);
    }

    #[test]
    fn tangential_energy_of_e1() {
        let (g, b) = setup(64, 1.0);
        let fam = VectorFamily::default();
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let jets = state_jets(&g, &e1, &VectorField::zeros(&g), &[], 3, &b, NormalMode::Direct).unwrap();
        let te = energy_tangential(&g, &jets, &fam, 1, &b, NormalMode::Direct).unwrap();
        let s0 = te.entries.iter().find(|e| e.index == "(S0)").unwrap();
        assert!((s0.energy - 2.0 * PI).abs() < 2e-3, "{}", s0.energy);
        assert!(s0.corrector.abs() < 1e-8);
        let r0 = energy_tangential(&g, &jets[..2], &fam, 0, &b, NormalMode::Direct).unwrap();
        assert_eq!(r0.entries.len(), 1);
        assert!((r0.total - (2.0 * PI).sqrt()).abs() < 1e-3);
        assert!(matches!(
            energy_tangential(&g, &jets[..2], &fam, 1, &b, NormalMode::Direct),
            Err(Error::JetOrder { .. })
        ));
    }

    #[test]
    fn curl_norm_examples() {
        let (g, b) = setup(64, 1.0);
        let fam = VectorFamily::default();
        let labels = fam.tangential_members();
        let rot = VectorField::from_cartesian(&g, |x, y| (-y, x));
        let z = VectorField::zeros(&g);
        let c0 = curl_seminorms(&g, &rot, &z, &fam, &labels, 0, &b).unwrap();
        assert_eq!(c0.seminorm, 0.0);
        let c1 = curl_seminorms(&g, &rot, &z, &fam, &labels, 1, &b).unwrap();
        assert!((c1.seminorm - 2.0 * PI.sqrt()).abs() < 1e-3);
        assert_eq!(curl_seminorms(&g, &z, &z, &fam, &labels, 2, &b).unwrap().seminorm, 0.0);
    }

    #[test]
    fn gradient_ratio_examples() {
        let (g, b) = setup(32, 1.0);
        let fam = VectorFamily::default();
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        assert!(gradient_estimate_report(&g, &e1, &fam, &b).unwrap().max_ratio < 1e-10);
        let rot = VectorField::from_cartesian(&g, |x, y| (-y, x));
        let r = gradient_estimate_report(&g, &rot, &fam, &b).unwrap().max_ratio;
        assert!(r.is_finite() && r > 0.1 && r < 1.0, "{r}");
    }

    #[test]
    fn bound_check_detects_injected_growth() {
        let samples: Vec<EnergySample> = (0..=10)
            .map(|i| {
                let t = i as f64 * 0.1;
                EnergySample {
                    t,
                    energy: 2.0 * (0.5 * t).exp(),
                    forcing_norm: 0.0,
                    growth: 1.0,
                }
            })
            .collect();
        assert!(energy_bound_check(&samples, 1e-2).pass);
        let tampered: Vec<EnergySample> = samples
            .iter()
            .map(|s| EnergySample {
                energy: if s.t > 0.0 { 10.0 * s.energy } else { s.energy },
                ..*s
            })
            .collect();
        assert!(!energy_bound_check(&tampered, 1e-2).pass);
        let zero: Vec<EnergySample> = samples
            .iter()
            .map(|s| EnergySample { energy: 0.0, ..*s })
            .collect();
        let rec = energy_bound_check(&zero, 1e-2);
        assert!(rec.pass && rec.measured == 0.0);
    }

    #[test]
    fn rotation_work_vanishes() {
        let (g, b) = setup(32, 1.0);
        let v = crate::projection::project(&g, &crate::fields::random_vector_field(&g, 8, 3), &b)
            .unwrap()
            .0;
        let work = rotation_work(&g, &v, &b).unwrap();
        assert!(work.abs() <= 1e-8 * v.dot(&v, &g));
    }
}
