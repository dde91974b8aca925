use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::EpidemicModel;
use crate::delay::{DelayFamily, DelayWindow};
use crate::magnus::{
    CompatibilizedHistory, ConstantHistory, HistorySampler, InvariantGuard, ProblemSpec,
};
use crate::operator::StateVector;
use crate::{math, Error, Result};

/// Shape of the built-in initial profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    /// Share of the mass in the infected bump.
    pub infected_fraction: f64,
    /// Share of the mass in the (uniform) recovered block.
    pub recovered_fraction: f64,
    /// Standard deviation of the Gaussian infected bump.
    pub width: f64,
    /// Bump centre; the domain centre when `None`.
    pub center: Option<(f64, f64)>,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            infected_fraction: 0.1,
            recovered_fraction: 0.1,
            width: 0.5,
            center: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistoryPreset {
    /// Constant in time: uniform `S` and `R`, Gaussian `I`.
    Default(ProfileParams),
    /// The default profile plus the polynomial boundary correction.
    Compatibilized(ProfileParams),
    /// No infected individuals.
    NoInfection(ProfileParams),
}

impl HistoryPreset {
    pub fn name(&self) -> &'static str {
        match self {
            HistoryPreset::Default(_) => "default",
            HistoryPreset::Compatibilized(_) => "compatibilized",
            HistoryPreset::NoInfection(_) => "no-infection",
        }
    }
}

/// The preset's profile at `s = 0`, scaled to total mass `mass`.
pub fn initial_profile(model: &EpidemicModel, p: &ProfileParams, infected: bool) -> Result<StateVector> {
    let fi = if infected { p.infected_fraction } else { 0.0 };
    let fr = p.recovered_fraction;
    if !(fi >= 0.0 && fr >= 0.0 && fi + fr <= 1.0) {
        return Err(Error::config(
            "infected and recovered fractions must be nonnegative and sum to at most 1",
        ));
    }
    if !(p.width > 0.0) {
        return Err(Error::config("profile width must be positive"));
    }
    let grid = model.grid();
    let n = grid.cells();
    let total = model.params().mass;
    let domain = grid.lx() * grid.ly();
    let (cx, cy) = p.center.unwrap_or((0.5 * grid.lx(), 0.5 * grid.ly()));
    let bump: Vec<f64> = (0..n)
        .map(|k| {
            let (x, y) = grid.center(k);
            let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            math::exp(-0.5 * r2 / (p.width * p.width))
        })
        .collect();
    let bump_mass = grid.cell_area() * bump.iter().sum::<f64>();
    let s = alloc::vec![(1.0 - fi - fr) * total / domain; n];
    let r = alloc::vec![fr * total / domain; n];
    let i: Vec<f64> = bump.iter().map(|b| fi * total * b / bump_mass).collect();
    model.state(&s, &i, &r)
}

/// `phi` must stay nonnegative with total mass `mass` on the whole window.
pub fn check_history_in_w(
    model: &EpidemicModel,
    history: &dyn HistorySampler,
    delta: f64,
    tol: f64,
) -> Result<()> {
    let guard = epidemic_guard(model, tol);
    const SAMPLES: usize = 256;
    for k in 0..=SAMPLES {
        let s = -delta + delta * (k as f64 / SAMPLES as f64);
        let u = history.sample(s, 0)?;
        let check = guard.check(&u);
        if check.violated {
            return Err(Error::Config(format!(
                "initial history leaves the invariant set at s = {s}: min component {:.3e}, \
                 relative mass drift {:.3e}",
                check.min_component, check.mass_drift
            )));
        }
    }
    Ok(())
}

/// Nonnegativity and mass conservation relative to the model's total mass.
pub fn epidemic_guard(model: &EpidemicModel, tol: f64) -> InvariantGuard {
    InvariantGuard::nonnegative_mass(model.params().mass, model.grid().cell_area(), tol)
}

/// Wires the model into a problem, checking that `history` lies in the invariant set.
pub fn make_epidemic_problem(
    model: Arc<EpidemicModel>,
    window: DelayWindow,
    family: DelayFamily,
    history: Arc<dyn HistorySampler>,
    horizon: f64,
) -> Result<ProblemSpec> {
    check_history_in_w(&model, history.as_ref(), window.delta(), 1e-9)?;
    let area = model.grid().cell_area();
    Ok(ProblemSpec::new(model, window, family, history, horizon)?.with_norm_weight(area))
}

/// Problem with one of the built-in histories. `resolution` sets the
/// discretization of `F` used by the boundary correction.
pub fn epidemic_preset(
    model: Arc<EpidemicModel>,
    window: DelayWindow,
    family: DelayFamily,
    preset: HistoryPreset,
    horizon: f64,
    resolution: usize,
) -> Result<ProblemSpec> {
    let (params, infected) = match preset {
        HistoryPreset::Default(p) | HistoryPreset::Compatibilized(p) => (p, true),
        HistoryPreset::NoInfection(p) => (p, false),
    };
    let u0 = initial_profile(&model, &params, infected)?;
    let base: Arc<dyn HistorySampler> = Arc::new(ConstantHistory(u0));
    let spec = make_epidemic_problem(model.clone(), window, family, base, horizon)?;
    match preset {
        HistoryPreset::Compatibilized(_) => {
            let fixed = compatibilize_in_w(&model, &spec, resolution)?;
            make_epidemic_problem(model, window, spec.family, Arc::new(fixed), horizon)
        }
        _ => Ok(spec),
    }
}

/// Boundary correction with the widest support `epsilon / 2^k` that keeps the
/// history in the invariant set.
pub fn compatibilize_in_w(
    model: &EpidemicModel,
    spec: &ProblemSpec,
    resolution: usize,
) -> Result<CompatibilizedHistory> {
    let mut support = spec.window.epsilon();
    for _ in 0..30 {
        let fixed = CompatibilizedHistory::with_support(spec, resolution, support)?;
        if check_history_in_w(model, &fixed, spec.delta(), 1e-9).is_ok() {
            return Ok(fixed);
        }
        support *= 0.5;
    }
    Err(Error::config(
        "no boundary correction keeps this history nonnegative; use the default history",
    ))
}
