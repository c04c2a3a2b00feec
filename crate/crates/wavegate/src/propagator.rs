//! Transmitted-field assembly on (x,t) grids: exact operator closed forms for
//! the rational-T barriers, the boundary-derivative series, the large-distance
//! leading term, and the residue-sum quadrature route, all sharing one output
//! type. Grid points are independent and evaluated in parallel.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::initial_state::{ExponentialSum, InitialData};
use crate::kernel::{phi, phi_free, phi_with_path, series_a, EvalPath, KernelValue};
use crate::quadrature::t_extended;
use crate::special_fn::{sqrt_it, SQRT_PI};
use crate::transmission::TransmissionModel;

/// Which assembly produced a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    /// Pick closed form if the barrier has one, otherwise series or the
    /// large-distance term depending on x^2/4t.
    Auto,
    /// Operator closed form (free, delta, reflectionless only).
    Closed,
    /// Boundary-derivative expansion psi = sum a_n f^(n)(0).
    Series,
    /// Leading large-distance term T(x/2t) sqrt(it/pi) e^{ix^2/4t} f(0)/x.
    Asymptotic,
    /// Residue sum psi = sum c_j phi(-i mu_j) through the quadrature engine.
    Quadrature,
}

impl PropagationMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            PropagationMethod::Auto => "auto",
            PropagationMethod::Closed => "closed",
            PropagationMethod::Series => "series",
            PropagationMethod::Asymptotic => "asymptotic",
            PropagationMethod::Quadrature => "quadrature",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PropagationMethod::Auto),
            "closed" => Ok(PropagationMethod::Closed),
            "series" => Ok(PropagationMethod::Series),
            "asymptotic" => Ok(PropagationMethod::Asymptotic),
            "quadrature" => Ok(PropagationMethod::Quadrature),
            other => Err(SolverError::InvalidInput(format!(
                "unknown method {other:?}; expected auto, closed, series, asymptotic or quadrature"
            ))),
        }
    }
}

/// Observation grid: positions beyond the barrier, times after release.
#[derive(Debug, Clone)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
}

impl Grid {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>) -> Self {
        Grid { xs, ts }
    }

    /// Check orderings and the barrier clearance; errors name the offending
    /// grid point so scenario diagnostics can surface it directly.
    pub fn validate(&self, right_edge: f64) -> Result<()> {
        if self.xs.is_empty() || self.ts.is_empty() {
            return Err(SolverError::InvalidInput("grid must be nonempty".into()));
        }
        for w in self.xs.windows(2) {
            if w[1] <= w[0] {
                return Err(SolverError::InvalidInput(format!(
                    "grid xs must be strictly increasing (x = {} after x = {})",
                    w[1], w[0]
                )));
            }
        }
        for &x in &self.xs {
            if !x.is_finite() || x <= right_edge {
                return Err(SolverError::InvalidInput(format!(
                    "grid point x = {x} does not clear the barrier (right edge at x = {right_edge})"
                )));
            }
        }
        for w in self.ts.windows(2) {
            if w[1] <= w[0] {
                return Err(SolverError::InvalidInput(format!(
                    "grid ts must be strictly increasing (t = {} after t = {})",
                    w[1], w[0]
                )));
            }
        }
        for &t in &self.ts {
            if !t.is_finite() || t <= 0.0 {
                return Err(SolverError::InvalidInput(format!(
                    "grid time t = {t} invalid: t > 0 required"
                )));
            }
        }
        Ok(())
    }
}

/// A sampled field psi(x,t) over a grid, with per-point error estimates and
/// the tag of the method that produced it.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// psi[i][j] at (ts[i], xs[j]).
    pub psi: Vec<Vec<Complex64>>,
    /// err[i][j]: absolute error estimate for psi[i][j].
    pub err: Vec<Vec<f64>>,
    pub method: String,
    pub warnings: Vec<String>,
}

impl WaveField {
    fn assemble(
        grid: &Grid,
        method: &str,
        values: Vec<(Complex64, f64)>,
        warnings: Vec<String>,
    ) -> Result<WaveField> {
        let nx = grid.xs.len();
        let mut psi = Vec::with_capacity(grid.ts.len());
        let mut err = Vec::with_capacity(grid.ts.len());
        for (i, chunk) in values.chunks(nx).enumerate() {
            for (j, (v, _)) in chunk.iter().enumerate() {
                if !v.is_finite() {
                    return Err(SolverError::Overflow(format!(
                        "non-finite field value at x = {}, t = {}",
                        grid.xs[j], grid.ts[i]
                    )));
                }
            }
            psi.push(chunk.iter().map(|(v, _)| *v).collect());
            err.push(chunk.iter().map(|(_, e)| *e).collect());
        }
        Ok(WaveField {
            xs: grid.xs.clone(),
            ts: grid.ts.clone(),
            psi,
            err,
            method: method.to_string(),
            warnings,
        })
    }

    /// Rows `t, x, re_psi, im_psi, density, err_estimate, method` with a
    /// header, at full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,re_psi,im_psi,density,err_estimate,method\n");
        for (i, &t) in self.ts.iter().enumerate() {
            for (j, &x) in self.xs.iter().enumerate() {
                let p = self.psi[i][j];
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    t,
                    x,
                    p.re,
                    p.im,
                    p.norm_sqr(),
                    self.err[i][j],
                    self.method
                ));
            }
        }
        out
    }
}

/// Relative L2 distance sqrt(sum |a-b|^2 / sum |b|^2) over matching grids.
pub fn rel_l2(a: &WaveField, b: &WaveField) -> Result<f64> {
    if a.xs.len() != b.xs.len() || a.ts.len() != b.ts.len() {
        return Err(SolverError::InvalidInput(
            "rel_l2: fields sampled on different grids".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.ts.len() {
        for j in 0..a.xs.len() {
            num += (a.psi[i][j] - b.psi[i][j]).norm_sqr();
            den += b.psi[i][j].norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(SolverError::Domain(
            "rel_l2: reference field is identically zero".into(),
        ));
    }
    Ok((num / den).sqrt())
}

fn map_grid<F>(grid: &Grid, f: F) -> Result<Vec<(Complex64, f64)>>
where
    F: Fn(f64, f64) -> Result<(Complex64, f64)> + Sync,
{
    let points: Vec<(f64, f64)> = grid
        .ts
        .iter()
        .flat_map(|&t| grid.xs.iter().map(move |&x| (x, t)))
        .collect();
    points.par_iter().map(|&(x, t)| f(x, t)).collect()
}

/// Boundary-derivative expansion psi = sum_{n<=N} a_n f^(n)(0).
pub fn propagate_series(
    model: &TransmissionModel,
    f: &InitialData,
    grid: &Grid,
    n: usize,
) -> Result<WaveField> {
    grid.validate(model.right_edge())?;
    if n > 12 {
        return Err(SolverError::InvalidInput(format!(
            "series order N = {n} exceeds the supported maximum 12"
        )));
    }
    // cap at the derivatives actually supplied
    let mut n_eff = n;
    while f.derivative_at_zero(n_eff).is_none() && n_eff > 0 {
        n_eff -= 1;
    }
    if f.derivative_at_zero(0).is_none() {
        return Err(SolverError::InvalidInput(
            "initial data supplies no boundary value f(0)".into(),
        ));
    }
    let derivs: Vec<Complex64> = (0..=n_eff)
        .map(|k| f.derivative_at_zero(k).unwrap())
        .collect();
    let values = map_grid(grid, |x, t| {
        let sc = series_a(model, x, t, n_eff)?;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut last = 0.0;
        for (k, d) in derivs.iter().enumerate() {
            let term = sc.a[k] * d;
            sum += term;
            err += sc.a_err[k] * d.norm();
            last = term.norm();
        }
        // the last retained term stands in for the truncation error
        Ok((sum, err + last))
    })?;
    WaveField::assemble(grid, PropagationMethod::Series.tag(), values, Vec::new())
}

/// Delta-barrier operator closed form: per exponential term,
/// psi_j = c_j [ mu/(mu+lambda/2) Phi(-i mu) + (lambda/2)/(mu+lambda/2) Phi(i lambda/2) ],
/// the resolvent of the boundary-derivative operator acting on f.
pub fn propagate_closed_delta(
    lambda: f64,
    f: &ExponentialSum,
    grid: &Grid,
) -> Result<WaveField> {
    let model = TransmissionModel::Delta { lambda };
    model.validate()?;
    grid.validate(model.right_edge())?;
    let half = Complex64::new(lambda / 2.0, 0.0);
    let guard = 1e-12 * (1.0 + lambda.abs());
    let pass = f.resolvent_apply(|s| {
        if (s + half).norm() < guard {
            return Err(SolverError::OperatorPole(format!(
                "mu = {s} sits on the operator pole -lambda/2"
            )));
        }
        Ok(s / (s + half))
    })?;
    let bound = f.resolvent_apply(|s| Ok(half / (s + half)))?;
    // the second operator collapses onto the fixed argument i lambda/2
    let bound_total: Complex64 = bound.terms().iter().map(|(c, _)| *c).sum();
    let values = map_grid(grid, |x, t| {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (c, mu) in pass.terms() {
            let k = phi_free(-Complex64::i() * mu, x, t)?;
            sum += c * k.value;
            err += c.norm() * k.err_estimate;
        }
        let kb = phi_free(Complex64::new(0.0, lambda / 2.0), x, t)?;
        sum += bound_total * kb.value;
        err += bound_total.norm() * kb.err_estimate;
        Ok((sum, err))
    })?;
    WaveField::assemble(grid, PropagationMethod::Closed.tag(), values, Vec::new())
}

/// Reflectionless-well operator closed form: per exponential term,
/// psi_j = c_j [ Phi(-i mu) - 2a/(mu+a) (Phi(-i mu) - Phi(ia)) ].
pub fn propagate_closed_reflectionless(
    a: f64,
    f: &ExponentialSum,
    grid: &Grid,
) -> Result<WaveField> {
    let model = TransmissionModel::Reflectionless { a };
    model.validate()?;
    grid.validate(model.right_edge())?;
    let aa = Complex64::new(a, 0.0);
    let guard = 1e-12 * (1.0 + a.abs());
    let res = f.resolvent_apply(|s| {
        if (s + aa).norm() < guard {
            return Err(SolverError::OperatorPole(format!(
                "mu = {s} sits on the operator pole -a"
            )));
        }
        Ok(2.0 * aa / (s + aa))
    })?;
    let res_total: Complex64 = res.terms().iter().map(|(c, _)| *c).sum();
    let values = map_grid(grid, |x, t| {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for ((c, mu), (rc, _)) in f.terms().iter().zip(res.terms()) {
            let k = phi_free(-Complex64::i() * mu, x, t)?;
            sum += (c - rc) * k.value;
            err += (c.norm() + rc.norm()) * k.err_estimate;
        }
        let kw = phi_free(Complex64::new(0.0, a), x, t)?;
        sum += res_total * kw.value;
        err += res_total.norm() * kw.err_estimate;
        Ok((sum, err))
    })?;
    WaveField::assemble(grid, PropagationMethod::Closed.tag(), values, Vec::new())
}

/// Leading large-distance field T(x/2t) sqrt(it/pi) e^{ix^2/4t} f(0)/x.
/// Valid for x^2/4t >= 25; points below 100 draw a warning.
pub fn propagate_asymptotic(
    model: &TransmissionModel,
    f: &InitialData,
    grid: &Grid,
) -> Result<WaveField> {
    grid.validate(model.right_edge())?;
    let f0 = f.derivative_at_zero(0).ok_or_else(|| {
        SolverError::InvalidInput("initial data supplies no boundary value f(0)".into())
    })?;
    let f1 = f.derivative_at_zero(1).unwrap_or(Complex64::new(0.0, 0.0));
    let mut worst = f64::INFINITY;
    for &x in &grid.xs {
        for &t in &grid.ts {
            let u = x * x / (4.0 * t);
            if u < worst {
                worst = u;
            }
        }
    }
    if worst < 25.0 {
        return Err(SolverError::Regime(format!(
            "asymptotic method needs x^2/4t >= 25 on the whole grid; found {worst:.3}"
        )));
    }
    let mut warnings = Vec::new();
    if worst < 100.0 {
        warnings.push(format!(
            "asymptotic regime is marginal: min x^2/4t = {worst:.3} < 100"
        ));
    }
    let support = model.remainder_support();
    let values = map_grid(grid, |x, t| {
        let ks = x / (2.0 * t);
        let tk = t_extended(model, ks, support)?;
        let pref = sqrt_it(t)? / SQRT_PI * Complex64::from_polar(1.0, x * x / (4.0 * t)) / x;
        let value = tk * pref * f0;
        // next orders carry 2t/x^2 relative to the lead and a fresh f'(0) term
        let err = value.norm() * 2.0 * t / (x * x)
            + pref.norm() * f1.norm() * 2.0 * t / x;
        Ok((value, err))
    })?;
    WaveField::assemble(grid, PropagationMethod::Asymptotic.tag(), values, warnings)
}

/// Residue-sum route psi = sum_j c_j phi(-i mu_j) with every kernel value
/// forced through the quadrature engine; exact for decaying exponential sums
/// and fully independent of the operator closed forms.
pub fn propagate_quadrature(
    model: &TransmissionModel,
    f: &ExponentialSum,
    grid: &Grid,
) -> Result<WaveField> {
    grid.validate(model.right_edge())?;
    for (_, mu) in f.terms() {
        if mu.re <= 0.0 {
            return Err(SolverError::Divergence(format!(
                "residue sum needs decaying terms (Re mu > 0); got mu = {mu}"
            )));
        }
    }
    let values = map_grid(grid, |x, t| {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (c, mu) in f.terms() {
            let k = phi_with_path(model, -Complex64::i() * mu, x, t, EvalPath::Quadrature)?;
            sum += c * k.value;
            err += c.norm() * k.err_estimate;
        }
        Ok((sum, err))
    })?;
    WaveField::assemble(grid, PropagationMethod::Quadrature.tag(), values, Vec::new())
}

/// Closed form through the kernel's own dispatch (free, delta, reflectionless).
fn propagate_closed(
    model: &TransmissionModel,
    f: &ExponentialSum,
    grid: &Grid,
) -> Result<WaveField> {
    match model {
        TransmissionModel::Free => {
            grid.validate(model.right_edge())?;
            let values = map_grid(grid, |x, t| {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut err = 0.0;
                for (c, mu) in f.terms() {
                    let k: KernelValue = phi(model, -Complex64::i() * mu, x, t)?;
                    sum += c * k.value;
                    err += c.norm() * k.err_estimate;
                }
                Ok((sum, err))
            })?;
            WaveField::assemble(grid, PropagationMethod::Closed.tag(), values, Vec::new())
        }
        TransmissionModel::Delta { lambda } => propagate_closed_delta(*lambda, f, grid),
        TransmissionModel::Reflectionless { a } => {
            propagate_closed_reflectionless(*a, f, grid)
        }
        other => Err(SolverError::UnsupportedKind(format!(
            "no operator closed form for the {} barrier; use series, quadrature or asymptotic",
            other.kind_name()
        ))),
    }
}

/// Default series order for the automatic route.
pub const DEFAULT_SERIES_ORDER: usize = 6;

/// Single dispatch point used by scenario running.
pub fn propagate(
    model: &TransmissionModel,
    f: &InitialData,
    grid: &Grid,
    method: PropagationMethod,
) -> Result<WaveField> {
    model.validate()?;
    match method {
        PropagationMethod::Series => propagate_series(model, f, grid, DEFAULT_SERIES_ORDER),
        PropagationMethod::Asymptotic => propagate_asymptotic(model, f, grid),
        PropagationMethod::Quadrature => match f {
            InitialData::Exponentials(es) => propagate_quadrature(model, es, grid),
            InitialData::BoundaryDerivatives(_) => Err(SolverError::InvalidInput(
                "quadrature method needs the full exponential-sum profile".into(),
            )),
        },
        PropagationMethod::Closed => match f {
            InitialData::Exponentials(es) => propagate_closed(model, es, grid),
            InitialData::BoundaryDerivatives(_) => Err(SolverError::InvalidInput(
                "closed forms need the full exponential-sum profile".into(),
            )),
        },
        PropagationMethod::Auto => {
            let closed_capable = matches!(
                model,
                TransmissionModel::Free
                    | TransmissionModel::Delta { .. }
                    | TransmissionModel::Reflectionless { .. }
            );
            if closed_capable {
                if let InitialData::Exponentials(es) = f {
                    return propagate_closed(model, es, grid);
                }
            }
            let far = grid.xs.iter().all(|&x| {
                grid.ts.iter().all(|&t| x * x / (4.0 * t) >= 25.0)
            });
            if far {
                propagate_asymptotic(model, f, grid)
            } else {
                propagate_series(model, f, grid, DEFAULT_SERIES_ORDER)
            }
        }
    }
}
