//! The confined initial profile f(x)·theta(-x) in an exponential-sum basis:
//! f(x) = sum_j c_j e^{mu_j x} on x <= 0, so boundary derivatives, the Fourier
//! transform F(q) and operator-resolvent actions are exact algebra.

use num_complex::Complex64;

use crate::error::{Result, SolverError};

#[derive(Clone, Debug)]
pub struct ExponentialSum {
    terms: Vec<(Complex64, Complex64)>,
}

impl ExponentialSum {
    /// Build from (coefficient, exponent) pairs. Exponents need Re(mu) >= 0 so
    /// f stays bounded on x <= 0; duplicate exponents are merged.
    pub fn new(terms: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(SolverError::InvalidInput(
                "exponential sum needs at least one term".into(),
            ));
        }
        let mut merged: Vec<(Complex64, Complex64)> = Vec::with_capacity(terms.len());
        for (c, mu) in terms {
            if !c.re.is_finite() || !c.im.is_finite() || !mu.re.is_finite() || !mu.im.is_finite() {
                return Err(SolverError::InvalidInput(
                    "exponential sum entries must be finite".into(),
                ));
            }
            if mu.re < 0.0 {
                return Err(SolverError::InvalidInput(format!(
                    "exponent mu = {mu} has Re(mu) < 0; f would blow up toward -infinity"
                )));
            }
            match merged.iter_mut().find(|(_, m)| (*m - mu).norm() < 1e-14) {
                Some((cc, _)) => *cc += c,
                None => merged.push((c, mu)),
            }
        }
        Ok(ExponentialSum { terms: merged })
    }

    /// The single-term constant profile f = c (the sharp step).
    pub fn constant(c: Complex64) -> Self {
        ExponentialSum {
            terms: vec![(c, Complex64::new(0.0, 0.0))],
        }
    }

    /// Single term c e^{mu x}.
    pub fn single(c: Complex64, mu: Complex64) -> Result<Self> {
        ExponentialSum::new(vec![(c, mu)])
    }

    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, mu)| c * (mu * x).exp())
            .sum()
    }

    /// f^{(n)}(0) = sum_j c_j mu_j^n.
    pub fn derivative_at_zero(&self, n: usize) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, mu)| c * mu.powu(n as u32))
            .sum()
    }

    /// F(q) = (2 pi)^{-1} Int_{-inf}^0 f(x) e^{-iqx} dx = (2 pi)^{-1} sum_j c_j/(mu_j - iq),
    /// convergent only when every exponent decays.
    pub fn fourier_transform(&self, q: Complex64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (c, mu) in &self.terms {
            if mu.re <= 0.0 {
                return Err(SolverError::Divergence(format!(
                    "fourier_transform: term with Re(mu) = {} does not decay toward -infinity",
                    mu.re
                )));
            }
            let den = mu - Complex64::new(0.0, 1.0) * q;
            if den.norm() < 1e-300 {
                return Err(SolverError::Divergence(format!(
                    "fourier_transform: q = {q} sits on the pole of a term"
                )));
            }
            sum += c / den;
        }
        Ok(sum / (2.0 * std::f64::consts::PI))
    }

    /// Apply a function of the boundary-derivative operator: each coefficient
    /// becomes c_j * g(mu_j). Poles of g surface as operator-pole errors.
    pub fn resolvent_apply<G>(&self, g: G) -> Result<ExponentialSum>
    where
        G: Fn(Complex64) -> Result<Complex64>,
    {
        let mut out = Vec::with_capacity(self.terms.len());
        for (c, mu) in &self.terms {
            let factor = g(*mu).map_err(|e| {
                SolverError::OperatorPole(format!("resolvent at mu = {mu}: {e}"))
            })?;
            out.push((c * factor, *mu));
        }
        Ok(ExponentialSum { terms: out })
    }
}

/// Initial data accepted by the propagator: a full exponential-sum profile or
/// just the boundary derivatives f(0), f'(0), ... for the series method.
#[derive(Clone, Debug)]
pub enum InitialData {
    Exponentials(ExponentialSum),
    BoundaryDerivatives(Vec<Complex64>),
}

impl InitialData {
    pub fn derivative_at_zero(&self, n: usize) -> Option<Complex64> {
        match self {
            InitialData::Exponentials(f) => Some(f.derivative_at_zero(n)),
            InitialData::BoundaryDerivatives(v) => v.get(n).copied(),
        }
    }
}
