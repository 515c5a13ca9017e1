//! Named coefficient families selectable from configuration.

use super::{
    truncate, Constants, FluxComponent, InitialData, JumpCoeff, MarkDensity, MarkMeasure, ProblemSpec,
    ScalarMap,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CATALOG_FLUX: &[&str] = &["burgers", "linear-advection", "zero"];
pub const CATALOG_DIFFUSION: &[&str] = &["porous-medium", "linear", "zero"];
pub const CATALOG_SIGMA: &[&str] = &["truncated-linear", "linear", "zero"];
pub const CATALOG_ETA: &[&str] = &["truncated-linear", "tanh", "decreasing", "zero"];
pub const CATALOG_INITIAL: &[&str] = &[
    "bump",
    "gaussian",
    "indicator",
    "riemann",
    "singular-tail",
    "constant",
    "zero",
];

/// Catalog selection plus scalar parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub dimension: usize,
    /// Flux family; `flux_scale` multiplies it.
    pub flux: String,
    pub flux_scale: f64,
    /// Φ(r) = κ r|r|^{p−1} for `porous-medium`, κ r for `linear`.
    pub diffusion: String,
    pub diffusion_scale: f64,
    pub diffusion_power: f64,
    /// σ(u) = s·T_a(u) for `truncated-linear`, s·u for `linear` (declared
    /// bound s·a, so A7 fails beyond a).
    pub sigma: String,
    pub sigma_scale: f64,
    pub sigma_cap: f64,
    /// η(u; z) = c·h(z)·T_a(u), c·a·h(z)·tanh(u/a), or −c·h(z)·T_a(u).
    pub eta: String,
    pub eta_scale: f64,
    pub eta_cap: f64,
    /// h(z) = 1 for `unit`, z for `identity`.
    pub profile: String,
    pub jump_rate: f64,
    pub mark_lo: f64,
    pub mark_hi: f64,
    pub mark_density: String,
    pub initial: String,
    pub initial_amplitude: f64,
    pub initial_width: f64,
    pub state_bound: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            flux: "burgers".into(),
            flux_scale: 1.0,
            diffusion: "porous-medium".into(),
            diffusion_scale: 0.05,
            diffusion_power: 2.0,
            sigma: "truncated-linear".into(),
            sigma_scale: 0.5,
            sigma_cap: 1.0,
            eta: "truncated-linear".into(),
            eta_scale: 0.5,
            eta_cap: 1.0,
            profile: "identity".into(),
            jump_rate: 2.0,
            mark_lo: 0.0,
            mark_hi: 1.0,
            mark_density: "uniform".into(),
            initial: "bump".into(),
            initial_amplitude: 1.0,
            initial_width: 1.0,
            state_bound: 2.5,
        }
    }
}

fn unknown(kind: &str, name: &str) -> Error {
    Error::UnknownCatalog(format!("{kind} `{name}`"))
}

fn flux_component(name: &str, a: f64, range: f64) -> Result<(FluxComponent, f64)> {
    Ok(match name {
        "burgers" => {
            let map = ScalarMap::new(format!("burgers[{a}]"), move |u| 0.5 * a * u * u).with_slope(move |u| a * u);
            let comp = if a >= 0.0 {
                FluxComponent::with_split(
                    map,
                    move |u| 0.5 * a * u.max(0.0).powi(2),
                    move |u| 0.5 * a * u.min(0.0).powi(2),
                )
            } else {
                FluxComponent::with_split(
                    map,
                    move |u| 0.5 * a * u.min(0.0).powi(2),
                    move |u| 0.5 * a * u.max(0.0).powi(2),
                )
            };
            (comp, a.abs() * range)
        }
        "linear-advection" => {
            let map = ScalarMap::new(format!("advection[{a}]"), move |u| a * u).with_slope(move |_| a);
            let (p, m) = (a.max(0.0), a.min(0.0));
            (FluxComponent::with_split(map, move |u| p * u, move |u| m * u), a.abs())
        }
        "zero" => (FluxComponent::with_split(ScalarMap::zero(), |_| 0.0, |_| 0.0), 0.0),
        other => return Err(unknown("flux", other)),
    })
}

fn diffusion_family(name: &str, kappa: f64, p: f64, range: f64) -> Result<(ScalarMap, f64)> {
    let name = match name.strip_prefix("porous-medium-") {
        Some(suffix) => {
            let p2: f64 = suffix
                .parse()
                .map_err(|_| unknown("diffusion", name))?;
            return diffusion_family("porous-medium", kappa, p2, range);
        }
        None => name,
    };
    Ok(match name {
        "porous-medium" => {
            if p < 1.0 {
                return Err(Error::invalid(format!("porous-medium power must be >= 1, got {p}")));
            }
            let label = format!("porous-medium[{kappa},{p}]");
            let map = if p == p.round() && p <= 8.0 {
                let k = p as i32 - 1;
                ScalarMap::new(label, move |r| kappa * r * r.abs().powi(k))
                    .with_slope(move |r| kappa * p * r.abs().powi(k))
            } else {
                ScalarMap::new(label, move |r| kappa * r * r.abs().powf(p - 1.0))
                    .with_slope(move |r| kappa * p * r.abs().powf(p - 1.0))
            };
            (map, (kappa * p * range.powf(p - 1.0)).abs())
        }
        "linear" => (
            ScalarMap::new(format!("linear[{kappa}]"), move |r| kappa * r).with_slope(move |_| kappa),
            kappa.abs(),
        ),
        "zero" => (ScalarMap::zero(), 0.0),
        other => return Err(unknown("diffusion", other)),
    })
}

fn sigma_family(name: &str, s: f64, cap: f64) -> Result<(ScalarMap, f64, f64)> {
    Ok(match name {
        "truncated-linear" => (
            ScalarMap::new(format!("truncated-linear[{s},{cap}]"), move |u| s * truncate(cap, u))
                .with_slope(move |u| if u.abs() < cap { s } else { 0.0 }),
            s.abs(),
            s.abs() * cap,
        ),
        "linear" => (
            ScalarMap::new(format!("linear[{s}]"), move |u| s * u).with_slope(move |_| s),
            s.abs(),
            s.abs() * cap,
        ),
        "zero" => (ScalarMap::zero(), 0.0, 0.0),
        other => return Err(unknown("sigma", other)),
    })
}

fn profile_family(name: &str) -> Result<ScalarMap> {
    Ok(match name {
        "unit" => ScalarMap::new("unit", |_| 1.0).with_slope(|_| 0.0),
        "identity" => ScalarMap::new("identity", |z| z).with_slope(|_| 1.0),
        other => return Err(unknown("profile", other)),
    })
}

fn eta_family(name: &str, c: f64, cap: f64, profile: &ScalarMap) -> Result<(JumpCoeff, f64, f64)> {
    let h = profile.clone();
    Ok(match name {
        "truncated-linear" => (
            JumpCoeff::separable(
                format!("truncated-linear[{c},{cap}]"),
                move |u| c * truncate(cap, u),
                move |z| h.eval(z),
            ),
            c.abs(),
            c.abs() * cap,
        ),
        "tanh" => (
            JumpCoeff::separable(
                format!("tanh[{c},{cap}]"),
                move |u| c * cap * (u / cap).tanh(),
                move |z| h.eval(z),
            ),
            c.abs(),
            c.abs() * cap,
        ),
        "decreasing" => (
            JumpCoeff::separable(
                format!("decreasing[{c},{cap}]"),
                move |u| -c * truncate(cap, u),
                move |z| h.eval(z),
            ),
            c.abs(),
            c.abs() * cap,
        ),
        "zero" => (JumpCoeff::Zero, 0.0, 0.0),
        other => return Err(unknown("eta", other)),
    })
}

fn initial_family(name: &str, amp: f64, width: f64) -> Result<InitialData> {
    if !(width > 0.0) && !matches!(name, "constant" | "zero") {
        return Err(Error::invalid(format!("initial width must be > 0, got {width}")));
    }
    let norm2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    Ok(match name {
        "bump" => InitialData::new(format!("bump[{amp},{width}]"), move |x| {
            let s = norm2(x) / (width * width);
            if s < 1.0 {
                amp * (1.0 - s).powi(3)
            } else {
                0.0
            }
        }),
        "gaussian" => InitialData::new(format!("gaussian[{amp},{width}]"), move |x| {
            amp * (-norm2(x) / (width * width)).exp()
        }),
        "indicator" => InitialData::new(format!("indicator[{amp},{width}]"), move |x| {
            if norm2(x) < width * width {
                amp
            } else {
                0.0
            }
        }),
        "riemann" => InitialData::new(format!("riemann[{amp},{width}]"), move |x| {
            if x[0] >= -width && x[0] < 0.0 {
                amp
            } else {
                0.0
            }
        }),
        "singular-tail" => InitialData::new(format!("singular-tail[{amp},{width}]"), move |x| {
            let r = norm2(x).sqrt();
            if r < width && r > 0.0 {
                amp / (r.sqrt() * (1.0 + r).powi(2))
            } else {
                0.0
            }
        }),
        "constant" => InitialData::new(format!("constant[{amp}]"), move |_| amp),
        "zero" => InitialData::zero(),
        other => return Err(unknown("initial", other)),
    })
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ProblemSpec> {
        let d = self.dimension;
        let range = self.state_bound;
        if !(range > 0.0) {
            return Err(Error::invalid("state_bound must be > 0"));
        }
        let mut flux = Vec::with_capacity(d);
        let mut lip_flux = 0.0f64;
        for _ in 0..d {
            let (comp, lip) = flux_component(&self.flux, self.flux_scale, range)?;
            lip_flux = lip_flux.max(lip);
            flux.push(comp);
        }
        let (phi, lip_diffusion) =
            diffusion_family(&self.diffusion, self.diffusion_scale, self.diffusion_power, range)?;
        let (sigma, lip_sigma, sigma_bound) = sigma_family(&self.sigma, self.sigma_scale, self.sigma_cap)?;
        let profile = profile_family(&self.profile)?;
        let (eta, lip_eta, eta_bound) = eta_family(&self.eta, self.eta_scale, self.eta_cap, &profile)?;
        let marks = MarkMeasure::new(
            self.jump_rate,
            self.mark_lo,
            self.mark_hi,
            MarkDensity::parse(&self.mark_density)?,
        )?;
        let initial = initial_family(&self.initial, self.initial_amplitude, self.initial_width)?;
        let constants = Constants {
            lip_flux,
            lip_diffusion,
            lip_sigma,
            lip_eta,
            sigma_bound,
            eta_bound,
            state_bound: range,
        };
        Ok(ProblemSpec::zero(d, initial)?
            .with_flux(flux)?
            .with_diffusion(phi)
            .with_sigma(sigma)
            .with_jumps(eta, marks, profile)
            .with_constants(constants))
    }

    /// Same configuration without Brownian or jump noise.
    pub fn deterministic(&self) -> Self {
        Self {
            sigma: "zero".into(),
            eta: "zero".into(),
            jump_rate: 0.0,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_builds() {
        let spec = ProblemConfig::default().build().unwrap();
        assert_eq!(spec.dimension, 1);
        assert!(spec.has_jumps());
        assert!((spec.constants.lip_flux - 2.5).abs() < 1e-15);
        assert!((spec.constants.lip_diffusion - 0.25).abs() < 1e-15);
        // ∫ 0.5 z dm with m = 2 dz on [0, 1] gives 0.5 per unit u
        assert!((spec.compensator(0.4) - 0.5 * 0.4).abs() < 1e-12);
    }

    #[test]
    fn porous_medium_suffix_form() {
        let cfg = ProblemConfig {
            diffusion: "porous-medium-3".into(),
            diffusion_scale: 1.0,
            ..Default::default()
        };
        let spec = cfg.build().unwrap();
        assert!((spec.diffusion.eval(-2.0) + 8.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_names_rejected() {
        for cfg in [
            ProblemConfig { flux: "nope".into(), ..Default::default() },
            ProblemConfig { eta: "nope".into(), ..Default::default() },
            ProblemConfig { initial: "nope".into(), ..Default::default() },
        ] {
            assert!(matches!(cfg.build(), Err(Error::UnknownCatalog(_))));
        }
    }

    #[test]
    fn negative_burgers_split_sums_to_flux() {
        let (c, _) = flux_component("burgers", -0.7, 2.0).unwrap();
        for u in [-1.5, -0.2, 0.0, 0.3, 1.9] {
            assert!((c.plus(u) + c.minus(u) - c.eval(u)).abs() < 1e-15);
        }
    }
}
