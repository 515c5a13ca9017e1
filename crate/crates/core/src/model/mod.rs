//! Problem definition: coefficients, mark measure, initial data, and the
//! scalar calculus kernels built on top of them.

mod calculus;
mod catalog;
mod entropy;
mod validate;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{self, CumulativeTable};

pub use calculus::{
    beta_smooth_abs, h_smooth, kirchhoff, reference_beta, reference_bounds, s_beta_h, truncate,
    KirchhoffTable, TruncationFamily,
};
pub use catalog::{ProblemConfig, CATALOG_DIFFUSION, CATALOG_ETA, CATALOG_FLUX, CATALOG_INITIAL,
    CATALOG_SIGMA};
pub use entropy::{make_entropy_triple, EntropyFn, EntropyTriple};
pub use validate::{validate_assumptions, AssumptionCheck, ValidationReport};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type FnX = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Relative step of the central-difference fallback for missing derivatives.
pub const FD_STEP: f64 = 1e-6;

/// A scalar coefficient with an optional analytic derivative.
#[derive(Clone)]
pub struct ScalarMap {
    label: String,
    value: Fn1,
    slope: Option<Fn1>,
    zero: bool,
}

impl ScalarMap {
    pub fn new(label: impl Into<String>, value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            slope: None,
            zero: false,
        }
    }

    pub fn with_slope(mut self, slope: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.slope = Some(Arc::new(slope));
        self
    }

    pub fn zero() -> Self {
        let mut m = Self::new("zero", |_| 0.0).with_slope(|_| 0.0);
        m.zero = true;
        m
    }

    /// True for maps built by [`ScalarMap::zero`].
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.value)(u)
    }

    /// Analytic derivative if supplied, central difference otherwise.
    #[inline]
    pub fn slope(&self, u: f64) -> f64 {
        match &self.slope {
            Some(s) => s(u),
            None => {
                let h = FD_STEP * (1.0 + u.abs());
                ((self.value)(u + h) - (self.value)(u - h)) / (2.0 * h)
            }
        }
    }

    pub fn has_analytic_slope(&self) -> bool {
        self.slope.is_some()
    }
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarMap({})", self.label)
    }
}

/// One flux component together with its Engquist–Osher split
/// f = f⁺ + f⁻, f⁺(u) = ∫₀ᵘ max(f′, 0), f⁻(u) = ∫₀ᵘ min(f′, 0).
#[derive(Clone, Debug)]
pub struct FluxComponent {
    pub map: ScalarMap,
    split: FluxSplit,
}

#[derive(Clone)]
enum FluxSplit {
    Analytic { plus: Fn1, minus: Fn1 },
    Tabulated { plus: Arc<CumulativeTable>, minus: Arc<CumulativeTable> },
}

impl fmt::Debug for FluxSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxSplit::Analytic { .. } => f.write_str("Analytic"),
            FluxSplit::Tabulated { .. } => f.write_str("Tabulated"),
        }
    }
}

impl FluxComponent {
    /// Split given in closed form; `plus + minus` must equal the flux.
    pub fn with_split(
        map: ScalarMap,
        plus: impl Fn(f64) -> f64 + Send + Sync + 'static,
        minus: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            map,
            split: FluxSplit::Analytic {
                plus: Arc::new(plus),
                minus: Arc::new(minus),
            },
        }
    }

    /// Split tabulated by quadrature of the positive and negative parts of
    /// f′ on `[-range, range]`; states outside are integrated on the fly.
    pub fn tabulated(map: ScalarMap, range: f64) -> Self {
        let cells = quadrature::cell_count(2.0 * range);
        let m1 = map.clone();
        let m2 = map.clone();
        let plus = CumulativeTable::build(-range, range, cells, move |r| m1.slope(r).max(0.0));
        let minus = CumulativeTable::build(-range, range, cells, move |r| m2.slope(r).min(0.0));
        Self {
            map,
            split: FluxSplit::Tabulated {
                plus: Arc::new(plus),
                minus: Arc::new(minus),
            },
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.map.eval(u)
    }

    #[inline]
    pub fn plus(&self, u: f64) -> f64 {
        match &self.split {
            FluxSplit::Analytic { plus, .. } => plus(u),
            FluxSplit::Tabulated { plus, .. } => {
                let m = &self.map;
                plus.eval_with(u, |r| m.slope(r).max(0.0))
            }
        }
    }

    #[inline]
    pub fn minus(&self, u: f64) -> f64 {
        match &self.split {
            FluxSplit::Analytic { minus, .. } => minus(u),
            FluxSplit::Tabulated { minus, .. } => {
                let m = &self.map;
                minus.eval_with(u, |r| m.slope(r).min(0.0))
            }
        }
    }

    /// Engquist–Osher numerical flux F(a, b) = f⁺(a) + f⁻(b).
    #[inline]
    pub fn numerical_flux(&self, a: f64, b: f64) -> f64 {
        self.plus(a) + self.minus(b)
    }
}

/// Jump coefficient η(u; z).
#[derive(Clone)]
pub enum JumpCoeff {
    Zero,
    /// η(u; z) = g(u)·k(z); the compensator reduces to g(u)·∫k dm.
    Separable { label: String, g: Fn1, k: Fn1 },
    General { label: String, eta: Fn2 },
}

impl fmt::Debug for JumpCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JumpCoeff({})", self.label())
    }
}

impl JumpCoeff {
    pub fn separable(
        label: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        JumpCoeff::Separable {
            label: label.into(),
            g: Arc::new(g),
            k: Arc::new(k),
        }
    }

    pub fn general(label: impl Into<String>, eta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        JumpCoeff::General {
            label: label.into(),
            eta: Arc::new(eta),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            JumpCoeff::Zero => "zero",
            JumpCoeff::Separable { label, .. } | JumpCoeff::General { label, .. } => label,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, JumpCoeff::Zero)
    }

    #[inline]
    pub fn eval(&self, u: f64, z: f64) -> f64 {
        match self {
            JumpCoeff::Zero => 0.0,
            JumpCoeff::Separable { g, k, .. } => g(u) * k(z),
            JumpCoeff::General { eta, .. } => eta(u, z),
        }
    }
}

/// Shape of the mark density on the mark interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkDensity {
    /// Constant density.
    Uniform,
    /// Density proportional to z − a on [a, b].
    Linear,
}

impl MarkDensity {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(MarkDensity::Uniform),
            "linear" => Ok(MarkDensity::Linear),
            other => Err(Error::UnknownCatalog(format!("mark density {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkDensity::Uniform => "uniform",
            MarkDensity::Linear => "linear",
        }
    }
}

/// Finite-activity mark measure m(dz) = λ·p(z)dz on a closed interval.
#[derive(Clone, Debug)]
pub struct MarkMeasure {
    rate: f64,
    lo: f64,
    hi: f64,
    density: MarkDensity,
    nodes: Vec<(f64, f64)>,
}

const MARK_PANELS: usize = 4;

impl MarkMeasure {
    pub fn new(rate: f64, lo: f64, hi: f64, density: MarkDensity) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::invalid(format!("jump rate must be finite and >= 0, got {rate}")));
        }
        if !(hi > lo) {
            return Err(Error::invalid(format!("mark interval [{lo}, {hi}] is empty")));
        }
        let width = hi - lo;
        let pdf = move |z: f64| match density {
            MarkDensity::Uniform => 1.0 / width,
            MarkDensity::Linear => 2.0 * (z - lo) / (width * width),
        };
        let panel = width / MARK_PANELS as f64;
        let mut nodes = Vec::with_capacity(8 * MARK_PANELS);
        for p in 0..MARK_PANELS {
            let a = lo + p as f64 * panel;
            for (z, w) in quadrature::gauss_legendre_8_nodes(a, a + panel) {
                nodes.push((z, rate * w * pdf(z)));
            }
        }
        Ok(Self {
            rate,
            lo,
            hi,
            density,
            nodes,
        })
    }

    pub fn none() -> Self {
        Self::new(0.0, 0.0, 1.0, MarkDensity::Uniform).expect("valid empty measure")
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn density(&self) -> MarkDensity {
        self.density
    }

    /// Quadrature nodes (z, weight) with weights summing to λ.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// Maps a uniform variate in [0, 1) to a mark by inverse CDF.
    pub fn sample_from_uniform(&self, v: f64) -> f64 {
        let width = self.hi - self.lo;
        match self.density {
            MarkDensity::Uniform => self.lo + width * v,
            MarkDensity::Linear => self.lo + width * v.sqrt(),
        }
    }

    /// ∫ g(z) m(dz) by the stored quadrature.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().map(|&(z, w)| w * g(z)).sum()
    }
}

/// Initial datum u₀ given pointwise on ℝ^d.
#[derive(Clone)]
pub struct InitialData {
    label: String,
    eval: FnX,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialData({})", self.label)
    }
}

impl InitialData {
    pub fn new(label: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

/// Lipschitz constants and uniform bounds declared for the coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub lip_flux: f64,
    pub lip_diffusion: f64,
    pub lip_sigma: f64,
    pub lip_eta: f64,
    pub sigma_bound: f64,
    pub eta_bound: f64,
    /// States in [−state_bound, state_bound] are probed during validation and
    /// covered by the tabulated entropy fluxes; the Lipschitz constants of
    /// nonlinear fluxes are taken over this range.
    pub state_bound: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            lip_flux: 0.0,
            lip_diffusion: 0.0,
            lip_sigma: 0.0,
            lip_eta: 0.0,
            sigma_bound: 0.0,
            eta_bound: 0.0,
            state_bound: 4.0,
        }
    }
}

/// Coefficients, noise description and data of
/// du + div f(u) dt = ΔΦ(u) dt + σ(u) dW + ∫ η(u; z) Ñ(dz, dt).
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub dimension: usize,
    /// One component per spatial axis.
    pub flux: Vec<FluxComponent>,
    pub diffusion: ScalarMap,
    pub sigma: ScalarMap,
    pub eta: JumpCoeff,
    pub marks: MarkMeasure,
    /// Jump profile h(z) ∈ [0, 1].
    pub profile: ScalarMap,
    pub initial: InitialData,
    pub constants: Constants,
    /// Precomputed ∫k dm for separable η.
    separable_mass: f64,
}

impl ProblemSpec {
    /// All-zero coefficients in dimension `d` with the given data.
    pub fn zero(dimension: usize, initial: InitialData) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dimension}")));
        }
        let zero_flux = FluxComponent::with_split(ScalarMap::zero(), |_| 0.0, |_| 0.0);
        Ok(Self {
            dimension,
            flux: vec![zero_flux; dimension],
            diffusion: ScalarMap::zero(),
            sigma: ScalarMap::zero(),
            eta: JumpCoeff::Zero,
            marks: MarkMeasure::none(),
            profile: ScalarMap::new("unit", |_| 1.0).with_slope(|_| 0.0),
            initial,
            constants: Constants::default(),
            separable_mass: 0.0,
        })
    }

    pub fn with_flux(mut self, flux: Vec<FluxComponent>) -> Result<Self> {
        if flux.len() != self.dimension {
            return Err(Error::invalid(format!(
                "flux has {} components for dimension {}",
                flux.len(),
                self.dimension
            )));
        }
        self.flux = flux;
        Ok(self)
    }

    pub fn with_diffusion(mut self, phi: ScalarMap) -> Self {
        self.diffusion = phi;
        self
    }

    pub fn with_sigma(mut self, sigma: ScalarMap) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_jumps(mut self, eta: JumpCoeff, marks: MarkMeasure, profile: ScalarMap) -> Self {
        self.eta = eta;
        self.marks = marks;
        self.profile = profile;
        self.refresh_compensator();
        self
    }

    pub fn with_initial(mut self, initial: InitialData) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    fn refresh_compensator(&mut self) {
        self.separable_mass = match &self.eta {
            JumpCoeff::Separable { k, .. } => self.marks.integrate(|z| k(z)),
            _ => 0.0,
        };
    }

    pub fn has_jumps(&self) -> bool {
        !self.eta.is_zero() && self.marks.rate() > 0.0
    }

    pub fn has_noise(&self) -> bool {
        !self.sigma.is_zero() || self.has_jumps()
    }

    /// ∫_E η(u; z) m(dz).
    #[inline]
    pub fn compensator(&self, u: f64) -> f64 {
        if self.marks.rate() == 0.0 {
            return 0.0;
        }
        match &self.eta {
            JumpCoeff::Zero => 0.0,
            JumpCoeff::Separable { g, .. } => g(u) * self.separable_mass,
            JumpCoeff::General { eta, .. } => self.marks.integrate(|z| eta(u, z)),
        }
    }

    /// Same spec with σ and η switched off.
    pub fn deterministic(&self) -> Self {
        let mut s = self.clone();
        s.sigma = ScalarMap::zero();
        s.eta = JumpCoeff::Zero;
        s.marks = MarkMeasure::none();
        s.separable_mass = 0.0;
        s.constants.lip_sigma = 0.0;
        s.constants.lip_eta = 0.0;
        s.constants.sigma_bound = 0.0;
        s.constants.eta_bound = 0.0;
        s
    }
}
