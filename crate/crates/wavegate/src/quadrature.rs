//! Oscillatory quadrature engine for the momentum integrals behind the kernel:
//! Gauss-Kronrod panels that march at the local oscillation scale, Sokhotski
//! principal-value handling of the on-axis pole (never a finite epsilon),
//! integration-by-parts boundary terms for the truncated tails, and closed-form
//! corrections for transmission poles in the upper half-plane.

use num_complex::Complex64;

use crate::error::{Result, SolverError};
use crate::special_fn::faddeeva;
use crate::transmission::{t_coeff, TransmissionModel};

pub(crate) const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub(crate) const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

pub(crate) const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Plain adaptive GK15 for real integrands (used by the WKB opacity integral,
/// whose integrand has sqrt endpoints at the turning points).
pub(crate) fn adaptive_gk15_real<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> (f64, f64) {
    fn gk15_explicit<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut kron = WGK15[7] * fc;
        let mut gauss = WG7[3] * fc;
        for j in 0..7 {
            let s = f(c - h * XGK15[j]) + f(c + h * XGK15[j]);
            kron += WGK15[j] * s;
            if j % 2 == 1 {
                gauss += WG7[j / 2] * s;
            }
        }
        (kron * h, (kron - gauss) * h)
    }
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut err = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, e) = gk15_explicit(f, lo, hi);
        let e = e.abs();
        if depth >= 48 || e <= abs_tol + rel_tol * val.abs() {
            total += val;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (total, err)
}

fn wave(k: f64, x: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, k * (x - k * t))
}

fn wave_c(k: Complex64, x: f64, t: f64) -> Complex64 {
    (Complex64::i() * k * (x - k * t)).exp()
}

/// phi_free in closed form: (1/2) e^{ix^2/4t} w(sqrt(it)(x/2t - q)).
pub(crate) fn phi_free_value(q: Complex64, x: f64, t: f64) -> Result<Complex64> {
    let s = crate::special_fn::sqrt_it(t)?;
    let z = s * (Complex64::new(x / (2.0 * t), 0.0) - q);
    let w = faddeeva(z)?;
    let pref = Complex64::from_polar(0.5, x * x / (4.0 * t));
    Ok(pref * w)
}

/// Marching panel edges over [lo, hi]: local width pi/(|x| + 2|k|t + 1),
/// capped by the model's own T-variation scale and by distance to each
/// structure point (integrand pole, low-k rise of T), all divided by 2^halve.
fn panel_edges(
    lo: f64,
    hi: f64,
    x: f64,
    t: f64,
    cap_t: f64,
    structure: &[Complex64],
    order_cap: Option<usize>,
    halve: u32,
) -> Vec<f64> {
    let shrink = 2f64.powi(halve as i32);
    let mut edges = vec![lo];
    let mut k = lo;
    let span = hi - lo;
    while k < hi {
        let mut w = std::f64::consts::PI / (x.abs() + 2.0 * k.abs() * t + 1.0);
        if cap_t.is_finite() {
            w = w.min(cap_t);
        }
        for p in structure {
            let d = ((k - p.re).abs()).max(p.im.abs());
            w = w.min((d / 3.0).max(1e-3));
        }
        if let Some(n) = order_cap {
            w = w.min(k.abs().max(1e-3) / (n as f64 + 2.0));
        }
        w = (w / shrink).max(span * 1e-9);
        k += w;
        edges.push(k.min(hi));
    }
    if *edges.last().unwrap() < hi {
        edges.push(hi);
    }
    edges
}

/// GK15 over each panel of a complex integrand; returns (sum, error estimate).
fn eval_panels<F>(f: &F, edges: &[f64]) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c)?;
        let mut kron = WGK15[7] * fc;
        let mut gauss = WG7[3] * fc;
        for j in 0..7 {
            let s = f(c - h * XGK15[j])? + f(c + h * XGK15[j])?;
            kron += WGK15[j] * s;
            if j % 2 == 1 {
                gauss += WG7[j / 2] * s;
            }
        }
        total += kron * h;
        err += (kron - gauss).norm() * h;
    }
    Ok((total, err))
}

/// T, T', T'' at a real momentum by 5-point central stencils (the engine only
/// needs boundary derivatives, where T is smooth).
fn t_with_derivs(model: &TransmissionModel, k: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let h = 1e-3 * (1.0 + 1e-2 * k.abs());
    let at = |kk: f64| t_coeff(model, Complex64::new(kk, 0.0));
    let t0 = at(k)?;
    let t1 = at(k + h)?;
    let t2 = at(k + 2.0 * h)?;
    let tm1 = at(k - h)?;
    let tm2 = at(k - 2.0 * h)?;
    let d1 = (8.0 * (t1 - tm1) - (t2 - tm2)) / (12.0 * h);
    let d2 = (16.0 * (t1 + tm1) - (t2 + tm2) - 30.0 * t0) / (12.0 * h * h);
    Ok((t0, d1, d2))
}

/// Extended transmission amplitude used inside the remainder integral:
/// identically 1 beyond the model's compact support (WKB above the barrier
/// top, tabulated beyond the table).
pub(crate) fn t_extended(
    model: &TransmissionModel,
    k: f64,
    support: Option<f64>,
) -> Result<Complex64> {
    if let Some(s) = support {
        if k.abs() >= s {
            return Ok(Complex64::new(1.0, 0.0));
        }
    }
    t_coeff(model, Complex64::new(k, 0.0))
}

/// Boundary terms of the integration-by-parts expansion of
/// Int_{|k|>K} A(k) e^{i(kx - k^2 t)} dk for A = (T-1)/(k-q):
/// three orders retained, the last doubling as the error estimate.
fn ibp_tail(
    model: &TransmissionModel,
    q: Complex64,
    x: f64,
    t: f64,
    big_k: f64,
) -> Result<(Complex64, f64)> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for &kb in &[big_k, -big_k] {
        let (t0, t1, t2) = t_with_derivs(model, kb)?;
        let d = Complex64::new(kb, 0.0) - q;
        let tm1 = t0 - Complex64::new(1.0, 0.0);
        let a0 = tm1 / d;
        let a1 = t1 / d - tm1 / (d * d);
        let a2 = t2 / d - 2.0 * t1 / (d * d) + 2.0 * tm1 / (d * d * d);
        let u = Complex64::new(1.0, 0.0) / (Complex64::i() * (x - 2.0 * kb * t));
        let it2 = Complex64::i() * (2.0 * t);
        let b1 = a0 * u;
        let b2 = a1 * u * u + it2 * a0 * u * u * u;
        let b3 = a2 * u * u * u + 3.0 * it2 * a1 * u.powu(4)
            - Complex64::new(4.0 * t * t, 0.0) * 3.0 * a0 * u.powu(5);
        let hb = wave(kb, x, t);
        let contrib = if kb > 0.0 {
            hb * (-b1 + b2 - b3)
        } else {
            hb * (b1 - b2 + b3)
        };
        total += contrib;
        err += (b3 * hb).norm();
    }
    Ok((total, err))
}

/// phi(q,x,t) by pole-subtracted quadrature: T = 1 + (T-1), the '1' part is
/// phi_free exactly, and the remainder is integrated over the real axis with
/// principal-value + i*pi splitting at real q (Sokhotski-Plemelj), IBP tail
/// terms outside [-K, K], and residue corrections for upper-half poles of T.
///
/// q must satisfy Im(q) <= 0 (the physical evaluation half-plane).
pub(crate) fn phi_by_quadrature(
    model: &TransmissionModel,
    q: Complex64,
    x: f64,
    t: f64,
    rel_tol: f64,
) -> Result<(Complex64, f64)> {
    if q.im > 1e-12 {
        return Err(SolverError::Domain(format!(
            "quadrature path evaluates Im(q) <= 0 only, got q = {q}"
        )));
    }
    if let TransmissionModel::Free = model {
        let v = phi_free_value(q, x, t)?;
        return Ok((v, 1e-14 * v.norm()));
    }

    let support = model.remainder_support();
    let cap_t = model.t_variation_scale();
    let q_real = q.im.abs() < 1e-12;
    // Can we evaluate T at complex q? Needed for the subtraction trick off-axis.
    let analytic_t = matches!(
        model,
        TransmissionModel::Delta { .. }
            | TransmissionModel::Reflectionless { .. }
            | TransmissionModel::Rectangular { .. }
    );
    let mut subtract = q_real || analytic_t;

    let free_part = phi_free_value(q, x, t)?;
    let k0 = match support {
        Some(s) => s.max(q.re.abs() + 1e-3),
        None => (3.0 * x.abs() / (2.0 * t)).max(2.0 * q.norm() + 5.0).max(25.0),
    };

    let mut gq = Complex64::new(0.0, 0.0);
    if subtract {
        let tq_res = if q_real {
            t_extended(model, q.re, support)
        } else {
            t_coeff(model, q)
        };
        match tq_res {
            Ok(tq) if q_real || tq.norm() < 1e6 => {
                gq = (tq - Complex64::new(1.0, 0.0)) * wave_c(q, x, t);
            }
            // T blows up at (or too near) a lower-half pole of its own:
            // the axis integral is still fine, so integrate without subtraction
            Ok(_) => subtract = false,
            Err(SolverError::Pole(_)) if !q_real => subtract = false,
            Err(e) => return Err(e),
        }
    }

    let mut structure = Vec::new();
    if !subtract {
        structure.push(q);
    }
    if let Some(s) = model.low_k_scale() {
        structure.push(Complex64::new(0.0, -s));
    }

    // accuracy is bounded by the mass the integral moves around, not by the
    // (possibly much smaller) cancelled remainder
    let scale = free_part.norm().max(gq.norm()).max(1e-30);

    let mut big_k = k0;
    let mut result = None;
    'attempts: for attempt in 0..5 {
        for halve in 0..3u32 {
            let edges = {
                let mut e = panel_edges(-big_k, big_k, x, t, cap_t, &structure, None, halve);
                // panels must break exactly where the model does: at the
                // support edge (T jumps to 1 there) and at interpolation knots
                let mut extra: Vec<f64> = support.map(|s| vec![-s, s]).unwrap_or_default();
                for bp in model.real_axis_breakpoints() {
                    extra.push(bp);
                    extra.push(-bp);
                }
                if !extra.is_empty() {
                    for edge in extra {
                        if edge > -big_k && edge < big_k {
                            e.push(edge);
                        }
                    }
                    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    e.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                }
                e
            };
            let integrand = |k: f64| -> Result<Complex64> {
                let g = (t_extended(model, k, support)? - 1.0) * wave(k, x, t);
                let den = Complex64::new(k, 0.0) - q;
                if subtract {
                    if den.norm() < 1e-13 * (1.0 + q.norm()) {
                        // node landed on q itself: use a one-sided difference quotient
                        let h = 1e-7 * (1.0 + q.norm());
                        let g2 = (t_extended(model, k + h, support)? - 1.0) * wave(k + h, x, t);
                        return Ok((g2 - gq) / Complex64::new(h, 0.0));
                    }
                    Ok((g - gq) / den)
                } else {
                    Ok(g / den)
                }
            };
            let (panel_sum, panel_err) = eval_panels(&integrand, &edges)?;

            let analytic = if subtract {
                if q_real {
                    let ln = ((big_k - q.re).abs() / (big_k + q.re).abs()).ln();
                    gq * Complex64::new(ln, -std::f64::consts::PI)
                } else {
                    let ratio = (Complex64::new(big_k, 0.0) - q)
                        / (Complex64::new(-big_k, 0.0) - q);
                    gq * ratio.ln()
                }
            } else {
                Complex64::new(0.0, 0.0)
            };

            let (tail, tail_err) = if support.is_some() {
                // T - 1 vanishes identically beyond the support: no tail at all
                (Complex64::new(0.0, 0.0), 0.0)
            } else {
                ibp_tail(model, q, x, t, big_k)?
            };

            if tail_err > 1e-10 * scale && support.is_none() && attempt < 4 {
                big_k *= 2.0;
                continue 'attempts;
            }

            let pref = Complex64::i() / (2.0 * std::f64::consts::PI);
            let mut value = free_part + pref * (panel_sum + analytic + tail);
            if !value.is_finite() {
                return Err(SolverError::Overflow(format!(
                    "phi quadrature overflowed at q={q}, x={x}, t={t}"
                )));
            }
            for (p, r) in model.upper_half_poles() {
                let dp = q - p;
                if dp.norm() < 1e-12 * (1.0 + p.norm()) {
                    return Err(SolverError::Pole(format!(
                        "phi quadrature evaluated at transmission pole q = {q}"
                    )));
                }
                value -= r * wave_c(p, x, t) / dp;
            }
            let err = (panel_err + tail_err) / (2.0 * std::f64::consts::PI)
                + 1e-14 * value.norm();
            if err <= rel_tol * value.norm().max(scale) || halve == 2 {
                result = Some((value, err));
                if err <= rel_tol * value.norm().max(scale) {
                    return Ok((value, err));
                }
            }
        }
        break;
    }

    match result {
        Some((value, err)) if err <= 10.0 * rel_tol * value.norm().max(scale) => Ok((value, err)),
        Some((value, err)) => Err(SolverError::QuadratureFailure(format!(
            "phi quadrature error {err:.3e} exceeds tolerance for |phi| = {:.3e} at q={q}, x={x}, t={t}",
            value.norm()
        ))),
        None => Err(SolverError::QuadratureFailure(format!(
            "phi quadrature failed to converge at q={q}, x={x}, t={t}"
        ))),
    }
}

/// Taylor coefficients of T(k) about k = 0 from a Chebyshev-node polynomial
/// interpolant on [-r, r]; returns (coefficients, noise estimates).
fn t_taylor_at_zero(
    model: &TransmissionModel,
    order: usize,
    radius: f64,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let support = model.remainder_support();
    let m = 2 * order + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|i| radius * (std::f64::consts::PI * i as f64 / (m - 1) as f64).cos())
        .collect();
    let values: Result<Vec<Complex64>> = nodes
        .iter()
        .map(|&k| t_extended(model, k, support))
        .collect();
    let values = values?;
    // Newton divided differences, then expansion into monomial coefficients
    let mut dd = values;
    for j in 1..m {
        for i in (j..m).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / Complex64::new(nodes[i] - nodes[i - j], 0.0);
        }
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
    // Horner-style accumulation of prod (k - node_i)
    for i in (0..m).rev() {
        for j in (1..m).rev() {
            let prev = coeffs[j - 1];
            coeffs[j] = coeffs[j] * Complex64::new(-nodes[i], 0.0) + prev;
        }
        coeffs[0] = coeffs[0] * Complex64::new(-nodes[i], 0.0) + dd[i];
    }
    let max_t = 2.0; // |T| <= 1 on the real axis; headroom for interpolation wiggle
    let noise: Vec<f64> = (0..=order)
        .map(|j| 1e-15 * max_t * (3.0 / radius).powi(j as i32))
        .collect();
    coeffs.truncate(order + 1);
    Ok((coeffs, noise))
}

/// Generic-path coefficients a_n (n = 0..=n_max) of the boundary-derivative
/// expansion: a_n = (-1)^n i^{n+1}/(2 pi) * Int T(k) e^{i(kx-k^2t)} (k+i0)^{-n-1} dk,
/// computed by subtracting the degree-n Taylor polynomial of the numerator
/// g(k) = T(k) e^{i(kx-k^2t)} and integrating it in closed form.
pub(crate) fn a_coeffs_generic(
    model: &TransmissionModel,
    x: f64,
    t: f64,
    n_max: usize,
) -> Result<Vec<(Complex64, f64)>> {
    let extra = 8;
    let jmax = n_max + extra;
    let cap_t = model.t_variation_scale();
    let radius = 0.5f64.min(2.0 * cap_t).max(0.05);
    let (t_taylor, t_noise) = t_taylor_at_zero(model, jmax, radius)?;

    // Taylor coefficients H_m = h^{(m)}(0) of the phase factor via
    // H_{m+1} = i x H_m - 2 i t m H_{m-1}
    let mut h_derivs = vec![Complex64::new(1.0, 0.0); jmax + 1];
    if jmax >= 1 {
        h_derivs[1] = Complex64::new(0.0, x);
        for m in 1..jmax {
            h_derivs[m + 1] = Complex64::new(0.0, x) * h_derivs[m]
                - Complex64::new(0.0, 2.0 * t * m as f64) * h_derivs[m - 1];
        }
    }
    let mut factorial = vec![1.0f64; jmax + 1];
    for m in 1..=jmax {
        factorial[m] = factorial[m - 1] * m as f64;
    }
    // gamma_j = g^{(j)}(0)/j! by the Cauchy product of the two Taylor series
    let mut gamma = vec![Complex64::new(0.0, 0.0); jmax + 1];
    let mut gamma_noise = vec![0.0f64; jmax + 1];
    for j in 0..=jmax {
        for i in 0..=j {
            gamma[j] += t_taylor[i] * h_derivs[j - i] / factorial[j - i];
            gamma_noise[j] += t_noise[i] * h_derivs[j - i].norm() / factorial[j - i];
        }
    }

    let support = model.remainder_support();
    let big_k = match support {
        Some(s) => s.max(25.0).max(3.0 * x.abs() / (2.0 * t)),
        None => (3.0 * x.abs() / (2.0 * t)).max(25.0),
    };

    let structure: Vec<Complex64> = model
        .low_k_scale()
        .map(|s| vec![Complex64::new(0.0, -s)])
        .unwrap_or_default();

    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        // the window series runs in powers of x * window, so the window must
        // shrink into the far field; floor it so the panels never start in the
        // roundoff pit of the subtracted integrand
        let base = 1e-12f64.powf(1.0 / (n as f64 + 1.0)).max(0.05).min(0.5);
        let window = (0.35 * (n as f64 + 1.0) / x.abs().max(1.0)).min(base).max(0.01);
        // inside |k| < window: integrand from the Taylor remainder, analytically
        let mut window_part = Complex64::new(0.0, 0.0);
        let mut window_err = 0.0;
        for j in (n + 1)..=jmax {
            let pw = j - n; // integrand term gamma_j k^{j-n-1}
            if pw % 2 == 1 {
                // odd power of k integrates to an even power / even contribution
                let contrib = 2.0 * gamma[j] * window.powi(pw as i32) / pw as f64;
                window_part += contrib;
                window_err += 2.0 * gamma_noise[j] * window.powi(pw as i32) / pw as f64;
            }
        }
        window_err += gamma[jmax].norm() * window.powi((jmax - n) as i32);

        let integrand = |k: f64| -> Result<Complex64> {
            let g = t_extended(model, k, support)? * wave(k, x, t);
            let mut p = Complex64::new(0.0, 0.0);
            let mut kp = Complex64::new(1.0, 0.0);
            for j in 0..=n {
                p += gamma[j] * kp;
                kp *= k;
            }
            Ok((g - p) / Complex64::new(k, 0.0).powu(n as u32 + 1))
        };
        let mut panels_total = Complex64::new(0.0, 0.0);
        let mut panels_err = 0.0;
        for (lo, hi) in [(window, big_k), (-big_k, -window)] {
            let (a, b) = (lo.min(hi), lo.max(hi));
            let mut edges = panel_edges(a, b, x, t, cap_t, &structure, Some(n), 0);
            let mut extra: Vec<f64> = support.map(|s| vec![-s, s]).unwrap_or_default();
            for bp in model.real_axis_breakpoints() {
                extra.push(bp);
                extra.push(-bp);
            }
            if !extra.is_empty() {
                for edge in extra {
                    if edge > a && edge < b {
                        edges.push(edge);
                    }
                }
                edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
                edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            }
            let (v, e) = eval_panels(&integrand, &edges)?;
            panels_total += v;
            panels_err += e;
        }
        // the subtraction g - P_n cancels ~n digits right above the window
        panels_err += 1e-16 * window.powi(-(n as i32)) / n.max(1) as f64;

        // moments of the subtracted polynomial over [-K, K] against (k+i0)^{-n-1}:
        // order-1 moment = -i pi, even orders 2K^{1-m}/(1-m), odd orders >= 3 vanish
        let mut moment_part = Complex64::new(0.0, 0.0);
        let mut moment_err = 0.0;
        for j in 0..=n {
            let m_order = n + 1 - j;
            let moment = if m_order == 1 {
                Complex64::new(0.0, -std::f64::consts::PI)
            } else if m_order % 2 == 0 {
                Complex64::new(2.0 * big_k.powi(1 - m_order as i32) / (1.0 - m_order as f64), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            moment_part += gamma[j] * moment;
            moment_err += gamma_noise[j] * moment.norm();
        }
        // the same polynomial beyond [-K, K], in closed form
        for j in 0..n {
            if (n - j) % 2 == 1 {
                moment_part += 2.0 * gamma[j] * big_k.powi(-((n - j) as i32)) / (n - j) as f64;
            }
        }

        // oscillatory tail of g/k^{n+1} beyond K by IBP boundary terms
        let mut tail = Complex64::new(0.0, 0.0);
        let mut tail_err = 0.0;
        for &kb in &[big_k, -big_k] {
            let (t0, t1, t2) = t_with_derivs(model, kb)?;
            let np1 = n as f64 + 1.0;
            let kpow = Complex64::new(kb, 0.0).powu(n as u32 + 1);
            let a0 = t0 / kpow;
            let a1 = t1 / kpow - np1 * t0 / (kpow * kb);
            let a2 = t2 / kpow - 2.0 * np1 * t1 / (kpow * kb)
                + np1 * (np1 + 1.0) * t0 / (kpow * kb * kb);
            let u = Complex64::new(1.0, 0.0) / (Complex64::i() * (x - 2.0 * kb * t));
            let it2 = Complex64::i() * (2.0 * t);
            let b1 = a0 * u;
            let b2 = a1 * u * u + it2 * a0 * u * u * u;
            let b3 = a2 * u * u * u + 3.0 * it2 * a1 * u.powu(4)
                - Complex64::new(4.0 * t * t, 0.0) * 3.0 * a0 * u.powu(5);
            let hb = wave(kb, x, t);
            tail += if kb > 0.0 {
                hb * (-b1 + b2 - b3)
            } else {
                hb * (b1 - b2 + b3)
            };
            tail_err += (b3 * hb).norm();
        }

        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let pref = sign * Complex64::i().powu(n as u32 + 1) / (2.0 * std::f64::consts::PI);
        let value = pref * (window_part + panels_total + moment_part + tail);
        let err = (window_err + panels_err + moment_err + tail_err)
            / (2.0 * std::f64::consts::PI)
            + 1e-14 * value.norm();
        out.push((value, err));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_adaptive_integrator_handles_sqrt_endpoint() {
        // Int_0^1 sqrt(1-x) dx = 2/3
        let f = |x: f64| (1.0 - x).max(0.0).sqrt();
        let (v, _) = adaptive_gk15_real(&f, 0.0, 1.0, 1e-10, 1e-13);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn free_model_short_circuits_to_phi_free() {
        let q = Complex64::new(0.4, -0.2);
        let (v, _) = phi_by_quadrature(&TransmissionModel::Free, q, 3.0, 0.7, 1e-9).unwrap();
        let direct = phi_free_value(q, 3.0, 0.7).unwrap();
        assert!((v - direct).norm() < 1e-14);
    }
}
