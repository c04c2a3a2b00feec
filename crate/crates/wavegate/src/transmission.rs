//! Barrier catalog: every model exposes its plane-wave transmission amplitude
//! T(k) (plus pole data and the WKB opacity integral where defined) so the
//! kernel and propagator stay barrier-agnostic.

use num_complex::Complex64;

use crate::error::{Result, SolverError};
use crate::quadrature::adaptive_gk15_real;

/// A potential profile V(eta) >= 0 on [0, length], used by the WKB model.
#[derive(Clone, Debug)]
pub enum PotentialProfile {
    Constant { v0: f64, length: f64 },
    GaussianBump { v0: f64, center: f64, sigma: f64, length: f64 },
    /// Piecewise-linear samples (eta_i, v_i) with strictly increasing eta.
    Sampled { etas: Vec<f64>, values: Vec<f64> },
}

impl PotentialProfile {
    pub fn length(&self) -> f64 {
        match self {
            PotentialProfile::Constant { length, .. } => *length,
            PotentialProfile::GaussianBump { length, .. } => *length,
            PotentialProfile::Sampled { etas, .. } => *etas.last().unwrap_or(&0.0),
        }
    }

    pub fn value_at(&self, eta: f64) -> f64 {
        match self {
            PotentialProfile::Constant { v0, .. } => *v0,
            PotentialProfile::GaussianBump { v0, center, sigma, .. } => {
                let u = (eta - center) / sigma;
                v0 * (-u * u).exp()
            }
            PotentialProfile::Sampled { etas, values } => {
                if etas.is_empty() {
                    return 0.0;
                }
                match etas.binary_search_by(|e| e.partial_cmp(&eta).unwrap()) {
                    Ok(i) => values[i],
                    Err(0) => values[0],
                    Err(i) if i >= etas.len() => *values.last().unwrap(),
                    Err(i) => {
                        let f = (eta - etas[i - 1]) / (etas[i] - etas[i - 1]);
                        values[i - 1] + f * (values[i] - values[i - 1])
                    }
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            PotentialProfile::Constant { v0, .. } => *v0,
            PotentialProfile::GaussianBump { v0, center, length, .. } => {
                if *center >= 0.0 && *center <= *length {
                    *v0
                } else {
                    self.value_at(0.0).max(self.value_at(*length))
                }
            }
            PotentialProfile::Sampled { values, .. } => {
                values.iter().cloned().fold(0.0, f64::max)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            PotentialProfile::Constant { v0, length } => *v0 >= 0.0 && *length > 0.0,
            PotentialProfile::GaussianBump { v0, sigma, length, .. } => {
                *v0 >= 0.0 && *sigma > 0.0 && *length > 0.0
            }
            PotentialProfile::Sampled { etas, values } => {
                etas.len() >= 2
                    && etas.len() == values.len()
                    && etas.windows(2).all(|w| w[1] > w[0])
                    && values.iter().all(|v| *v >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidInput(
                "potential profile must be nonnegative on a positive-length interval".into(),
            ))
        }
    }
}

/// Sampled k -> T(k) on k >= 0, interpolated with a monotone cubic
/// (Fritsch-Carlson) per component. Above the last node T = 1 (transparent
/// in the high-energy limit); below the first node the model substitutes the
/// threshold law, and negative k maps to conj T(-k).
#[derive(Clone, Debug)]
pub struct TransmissionTable {
    ks: Vec<f64>,
    t_re: Vec<f64>,
    t_im: Vec<f64>,
    d_re: Vec<f64>,
    d_im: Vec<f64>,
}

impl TransmissionTable {
    pub fn new(ks: Vec<f64>, t_re: Vec<f64>, t_im: Vec<f64>) -> Result<Self> {
        if ks.len() < 2 || ks.len() != t_re.len() || ks.len() != t_im.len() {
            return Err(SolverError::InvalidInput(
                "transmission table needs >= 2 rows with matching column lengths".into(),
            ));
        }
        if !ks.windows(2).all(|w| w[1] > w[0]) {
            return Err(SolverError::InvalidInput(
                "transmission table k column must be strictly increasing".into(),
            ));
        }
        if ks[0] < 0.0 {
            // negative k is derived from the table via T(-k) = conj T(k)
            return Err(SolverError::InvalidInput(
                "transmission table k column must be nonnegative".into(),
            ));
        }
        for i in 0..ks.len() {
            let mag = (t_re[i] * t_re[i] + t_im[i] * t_im[i]).sqrt();
            if !mag.is_finite() || mag > 1.0 + 1e-9 {
                return Err(SolverError::InvalidInput(format!(
                    "transmission table row {} violates |T| <= 1: |T({})| = {mag}",
                    i + 1,
                    ks[i]
                )));
            }
        }
        let d_re = pchip_slopes(&ks, &t_re);
        let d_im = pchip_slopes(&ks, &t_im);
        Ok(TransmissionTable { ks, t_re, t_im, d_re, d_im })
    }

    /// Parse whitespace-separated rows `k  Re T  [Im T]`; '#' starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut ks = Vec::new();
        let mut re = Vec::new();
        let mut im = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 && cols.len() != 3 {
                return Err(SolverError::InvalidInput(format!(
                    "line {}: expected 2 or 3 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| {
                    SolverError::InvalidInput(format!("line {}: bad number {s:?}: {e}", lineno + 1))
                })
            };
            ks.push(parse(cols[0])?);
            re.push(parse(cols[1])?);
            im.push(if cols.len() == 3 { parse(cols[2])? } else { 0.0 });
        }
        TransmissionTable::new(ks, re, im)
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn k_min(&self) -> f64 {
        self.ks[0]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.ks
    }

    pub fn k_max(&self) -> f64 {
        *self.ks.last().unwrap()
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        if k < self.k_min() || k > self.k_max() {
            return Complex64::new(1.0, 0.0);
        }
        let i = match self.ks.binary_search_by(|e| e.partial_cmp(&k).unwrap()) {
            Ok(i) => return Complex64::new(self.t_re[i], self.t_im[i]),
            Err(i) => i - 1,
        };
        let h = self.ks[i + 1] - self.ks[i];
        let s = (k - self.ks[i]) / h;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + h * d0 * (s3 - 2.0 * s2 + s)
                + y1 * (-2.0 * s3 + 3.0 * s2)
                + h * d1 * (s3 - s2)
        };
        Complex64::new(
            hermite(self.t_re[i], self.t_re[i + 1], self.d_re[i], self.d_re[i + 1]),
            hermite(self.t_im[i], self.t_im[i + 1], self.d_im[i], self.d_im[i + 1]),
        )
    }

    fn min_spacing(&self) -> f64 {
        self.ks
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let edge = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut e = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if e * d0 <= 0.0 {
            e = 0.0;
        } else if d0 * d1 < 0.0 && e.abs() > 3.0 * d0.abs() {
            e = 3.0 * d0;
        }
        e
    };
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
    } else {
        d[0] = edge(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
    d
}

/// One barrier model; T(k) conventions follow the closed forms it was built
/// from, referenced to the origin.
#[derive(Clone, Debug)]
pub enum TransmissionModel {
    Free,
    /// T(k) = k/(k - i lambda/2); lambda < 0 moves the pole to the lower half-plane.
    Delta { lambda: f64 },
    /// T(k) = k e^{-2ik half_width} / [k C + (i/2)(v0 - 2k^2) S] with
    /// C = cosh(2 half_width kappa), S = sinh(2 half_width kappa)/kappa,
    /// kappa^2 = v0 - k^2 (branch-free: C and S are entire in k^2).
    /// The barrier occupies a slab of width 2*half_width.
    Rectangular { v0: f64, half_width: f64 },
    /// T(k) = 2/(2 theta + 1/(2 theta)) with opacity theta from `wkb_theta`.
    WkbSmooth { profile: PotentialProfile },
    /// T(k) = (k + ia)/(k - ia): unit modulus for all real k.
    Reflectionless { a: f64 },
    Tabulated { table: TransmissionTable },
}

impl TransmissionModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            TransmissionModel::Free => Ok(()),
            TransmissionModel::Delta { lambda } => {
                if lambda.is_finite() {
                    Ok(())
                } else {
                    Err(SolverError::InvalidInput("delta: lambda must be finite".into()))
                }
            }
            TransmissionModel::Rectangular { v0, half_width } => {
                // v0 = 0 is the degenerate free case (T becomes exactly 1)
                if *v0 >= 0.0 && v0.is_finite() && *half_width > 0.0 {
                    Ok(())
                } else {
                    Err(SolverError::InvalidInput(
                        "rectangular: v0 >= 0 and half_width > 0 required".into(),
                    ))
                }
            }
            TransmissionModel::WkbSmooth { profile } => profile.validate(),
            TransmissionModel::Reflectionless { a } => {
                if *a > 0.0 {
                    Ok(())
                } else {
                    Err(SolverError::InvalidInput("reflectionless: a > 0 required".into()))
                }
            }
            TransmissionModel::Tabulated { .. } => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TransmissionModel::Free => "free",
            TransmissionModel::Delta { .. } => "delta",
            TransmissionModel::Rectangular { .. } => "rectangular",
            TransmissionModel::WkbSmooth { .. } => "wkb-smooth",
            TransmissionModel::Reflectionless { .. } => "reflectionless",
            TransmissionModel::Tabulated { .. } => "tabulated",
        }
    }

    /// Rightmost coordinate occupied by the barrier; fields are only defined
    /// beyond this point.
    pub fn right_edge(&self) -> f64 {
        match self {
            TransmissionModel::Rectangular { half_width, .. } => 2.0 * half_width,
            TransmissionModel::WkbSmooth { profile } => profile.length(),
            _ => 0.0,
        }
    }

    /// Characteristic momentum scale (used by high-energy checks).
    pub fn k_char(&self) -> f64 {
        match self {
            TransmissionModel::Free => 1.0,
            TransmissionModel::Delta { lambda } => lambda.abs().max(1e-3),
            TransmissionModel::Rectangular { v0, .. } => v0.sqrt(),
            TransmissionModel::WkbSmooth { profile } => profile.max_value().sqrt().max(1e-3),
            TransmissionModel::Reflectionless { a } => *a,
            TransmissionModel::Tabulated { table } => (table.k_max() / 10.0).max(1e-3),
        }
    }

    /// Poles of T in the upper half-plane together with their residues,
    /// for the kinds whose pole structure is known in closed form.
    pub(crate) fn upper_half_poles(&self) -> Vec<(Complex64, Complex64)> {
        match self {
            TransmissionModel::Delta { lambda } if *lambda > 0.0 => {
                let p = Complex64::new(0.0, lambda / 2.0);
                vec![(p, p)]
            }
            TransmissionModel::Reflectionless { a } => {
                let p = Complex64::new(0.0, *a);
                vec![(p, 2.0 * p)]
            }
            _ => Vec::new(),
        }
    }

    /// Momentum beyond which T(k) is identically 1, when such a cutoff exists.
    pub(crate) fn remainder_support(&self) -> Option<f64> {
        match self {
            TransmissionModel::WkbSmooth { profile } => Some(profile.max_value().sqrt()),
            TransmissionModel::Tabulated { table } => Some(table.k_max()),
            _ => None,
        }
    }

    /// Real momenta where T is not smooth: the spline knots of a tabulated
    /// model (C^1 there) plus k = 0 where the conjugate reflection is glued.
    /// Quadrature panels split at these points so each panel sees an analytic
    /// integrand.
    pub(crate) fn real_axis_breakpoints(&self) -> Vec<f64> {
        match self {
            TransmissionModel::Tabulated { table } => {
                let mut b = vec![0.0];
                b.extend_from_slice(table.nodes());
                b
            }
            _ => Vec::new(),
        }
    }

    /// Width of the structure T carries at k = 0. Every true barrier has
    /// T(0) = 0, and the rise away from it can be much narrower than the
    /// global variation scale (a thin tall rectangle rises over the magnitude
    /// of its lowest pole); quadrature panels must resolve it.
    pub(crate) fn low_k_scale(&self) -> Option<f64> {
        match self {
            TransmissionModel::Rectangular { v0, half_width } if *v0 > 0.0 => {
                let s = v0.sqrt();
                Some(0.5 * s * (2.0 * half_width * s).tanh())
            }
            TransmissionModel::Tabulated { table } => {
                Some(table.k_min().max(table.min_spacing()))
            }
            _ => None,
        }
    }

    /// Scale on which T(k) varies along the real axis (caps quadrature panels).
    pub(crate) fn t_variation_scale(&self) -> f64 {
        match self {
            TransmissionModel::Free => f64::INFINITY,
            TransmissionModel::Delta { lambda } => (lambda.abs() / 4.0).max(5e-3),
            TransmissionModel::Reflectionless { a } => (a / 4.0).max(5e-3),
            TransmissionModel::Rectangular { v0, half_width } => {
                std::f64::consts::PI / (4.0 * half_width * v0.sqrt().max(1.0))
            }
            TransmissionModel::WkbSmooth { profile } => {
                let l = profile.length();
                std::f64::consts::PI / (4.0 * l * profile.max_value().sqrt().max(1.0))
            }
            TransmissionModel::Tabulated { table } => table.min_spacing().max(1e-3),
        }
    }
}

/// T(k) for real or complex momentum, by the model's own closed form.
pub fn t_coeff(model: &TransmissionModel, k: Complex64) -> Result<Complex64> {
    match model {
        TransmissionModel::Free => Ok(Complex64::new(1.0, 0.0)),
        TransmissionModel::Delta { lambda } => {
            if *lambda == 0.0 {
                return Ok(Complex64::new(1.0, 0.0));
            }
            let p = Complex64::new(0.0, lambda / 2.0);
            let den = k - p;
            if den.norm() < 1e-14 * lambda.abs().max(1.0) {
                return Err(SolverError::Pole(format!("t_coeff: k = {k} at delta pole {p}")));
            }
            Ok(k / den)
        }
        TransmissionModel::Reflectionless { a } => {
            let p = Complex64::new(0.0, *a);
            let den = k - p;
            if den.norm() < 1e-14 * a.max(1.0) {
                return Err(SolverError::Pole(format!(
                    "t_coeff: k = {k} at reflectionless pole {p}"
                )));
            }
            Ok((k + p) / den)
        }
        TransmissionModel::Rectangular { v0, half_width } => {
            Ok(rect_t(*v0, *half_width, k)?)
        }
        TransmissionModel::WkbSmooth { .. } => {
            if k.im.abs() > 1e-12 * (1.0 + k.re.abs()) {
                return Err(SolverError::Domain(
                    "t_coeff: wkb-smooth is defined for real momenta only".into(),
                ));
            }
            let theta = wkb_theta(model, k.re)?;
            Ok(Complex64::new(2.0 / (2.0 * theta + 0.5 / theta), 0.0))
        }
        TransmissionModel::Tabulated { table } => {
            if k.im.abs() > 1e-12 * (1.0 + k.re.abs()) {
                return Err(SolverError::Domain(
                    "t_coeff: tabulated T(k) is defined for real momenta only".into(),
                ));
            }
            // Real potentials satisfy T(-k) = conj T(k); tables cover k >= 0.
            let (mag, flip) = if k.re < 0.0 { (-k.re, true) } else { (k.re, false) };
            let v = if mag < table.k_min() {
                // below the first node fall back on the threshold law T ~ c k,
                // anchored at the first node; a hard T = 1 here would put a
                // spurious jump (and a nonzero T(0)) into the quadrature
                table.eval(table.k_min()) * (mag / table.k_min())
            } else {
                table.eval(mag)
            };
            Ok(if flip { v.conj() } else { v })
        }
    }
}

fn rect_t(v0: f64, half_width: f64, k: Complex64) -> Result<Complex64> {
    if v0 == 0.0 {
        // denominator reduces to k e^{-2ik half_width}: T is exactly 1,
        // but the ratio is 0/0 at k = 0, so short-circuit
        return Ok(Complex64::new(1.0, 0.0));
    }
    let w2 = Complex64::new(v0, 0.0) - k * k;
    let arg2 = 4.0 * half_width * half_width * w2;
    let (c, s) = if arg2.norm() < 1e-8 {
        // small-argument series of cosh(2Lk)/1 and sinh(2Lk)/k in arg2 = (2Lk)^2
        let c = 1.0 + arg2 / 2.0 + arg2 * arg2 / 24.0;
        let s = 2.0 * half_width * (1.0 + arg2 / 6.0 + arg2 * arg2 / 120.0);
        (c, s)
    } else {
        let kappa = w2.sqrt();
        let arg = 2.0 * half_width * kappa;
        (arg.cosh(), arg.sinh() / kappa)
    };
    let den = k * c + Complex64::new(0.0, 0.5) * (Complex64::new(v0, 0.0) - 2.0 * k * k) * s;
    if den.norm() == 0.0 {
        return Err(SolverError::Pole(format!("t_coeff: rectangular denominator vanished at k = {k}")));
    }
    let phase = (Complex64::new(0.0, -2.0 * half_width) * k).exp();
    Ok(k * phase / den)
}

/// Opacity integral theta(k) = exp(Int_0^L sqrt(V(eta) - k^2) d eta) over the
/// classically forbidden segments only.
pub fn wkb_theta(model: &TransmissionModel, k: f64) -> Result<f64> {
    let profile = match model {
        TransmissionModel::WkbSmooth { profile } => profile,
        other => {
            return Err(SolverError::UnsupportedKind(format!(
                "wkb_theta: not defined for kind {}",
                other.kind_name()
            )))
        }
    };
    profile.validate()?;
    let k2 = k * k;
    let vmax = profile.max_value();
    if k2 >= vmax {
        return Err(SolverError::Branch(format!(
            "wkb_theta: no turning points, k^2 = {k2} >= max V = {vmax}"
        )));
    }
    let length = profile.length();
    let segments = forbidden_segments(profile, k2, length);
    let mut integral = 0.0;
    for (a, b) in segments {
        let f = |eta: f64| {
            let d = profile.value_at(eta) - k2;
            if d > 0.0 {
                d.sqrt()
            } else {
                0.0
            }
        };
        let (val, _err) = adaptive_gk15_real(&f, a, b, 1e-9, 1e-12);
        integral += val;
    }
    Ok(integral.exp())
}

fn forbidden_segments(profile: &PotentialProfile, k2: f64, length: f64) -> Vec<(f64, f64)> {
    const SCAN: usize = 4096;
    let d_at = |eta: f64| profile.value_at(eta) - k2;
    let mut edges = vec![0.0];
    let mut prev = d_at(0.0);
    for i in 1..=SCAN {
        let eta = length * i as f64 / SCAN as f64;
        let cur = d_at(eta);
        if prev.signum() != cur.signum() && prev != 0.0 && cur != 0.0 {
            let mut lo = length * (i - 1) as f64 / SCAN as f64;
            let mut hi = eta;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if d_at(lo) * d_at(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            edges.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    edges.push(length);
    let mut segments = Vec::new();
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        if d_at(0.5 * (w[0] + w[1])) > 0.0 {
            segments.push((w[0], w[1]));
        }
    }
    segments
}

/// Poles of T(k) for the kinds with known rational structure.
pub fn t_poles(model: &TransmissionModel) -> Result<Vec<Complex64>> {
    match model {
        TransmissionModel::Free => Ok(Vec::new()),
        TransmissionModel::Delta { lambda } => {
            if *lambda == 0.0 {
                Ok(Vec::new())
            } else {
                Ok(vec![Complex64::new(0.0, lambda / 2.0)])
            }
        }
        TransmissionModel::Reflectionless { a } => Ok(vec![Complex64::new(0.0, *a)]),
        other => Err(SolverError::UnsupportedKind(format!(
            "t_poles: kind {} has no closed-form pole catalog",
            other.kind_name()
        ))),
    }
}
