//! Closed-form contraction constants and decay bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the rate, drift, growth and Doeblin conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionConstants {
    pub lambda_star: f64,
    pub theta: f64,
    pub rho: f64,
    pub rho_star: f64,
    pub eta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub gamma_star: f64,
    pub alpha: f64,
    pub t0: f64,
}

impl AssumptionConstants {
    pub fn validated(self) -> Result<Self> {
        let c = &self;
        let fail = |m: String| Err(Error::Domain(m));
        if !(c.lambda_star > 0.0 && c.lambda_star.is_finite()) {
            return fail(format!("lambda_star = {} must be positive", c.lambda_star));
        }
        if !(c.theta >= 0.0 && c.theta.is_finite()) {
            return fail(format!("theta = {} must be nonnegative", c.theta));
        }
        if !(c.rho > 0.0 && c.rho.is_finite()) {
            return fail(format!("rho = {} must be positive", c.rho));
        }
        if !c.rho_star.is_finite() {
            return fail(format!("rho_star = {} must be finite", c.rho_star));
        }
        if !(0.0..1.0).contains(&c.eta) {
            return fail(format!("eta = {} must lie in [0, 1)", c.eta));
        }
        if !(c.m >= 1.0 && c.m.is_finite()) {
            return fail(format!("M = {} must be at least 1", c.m));
        }
        if !(c.gamma_star >= 1.0 && c.gamma_star.is_finite()) {
            return fail(format!("gamma_star = {} must be at least 1", c.gamma_star));
        }
        if !(0.0..=1.0).contains(&c.alpha) {
            return fail(format!("alpha = {} must lie in [0, 1]", c.alpha));
        }
        if !(c.t0 > 0.0 && c.t0.is_finite()) {
            return fail(format!("t0 = {} must be positive", c.t0));
        }
        Ok(self)
    }

    /// The same constants with `eta` raised to at least 1/2, as the particle
    /// certificate requires. The drift condition stays true for any larger
    /// `eta`, so this only weakens the constants.
    pub fn for_particles(self) -> Self {
        AssumptionConstants {
            eta: self.eta.max(0.5),
            ..self
        }
    }

    fn moment(&self) -> f64 {
        self.m / (1.0 - self.eta)
    }
}

/// Which form of the particle contraction factor to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaVariant {
    /// As displayed: `k + k + (e^{th t0} - 1)(g+1) e^{r* + l*(g-1) t0}(1+eta)`.
    Literal,
    /// The display with the exponent read as `(r* + l*(g-1)) t0`.
    Corrected,
    /// The single-`k` factor reached at the end of the contraction argument:
    /// `k + (e^{th t0} - 1)(g+1) e^{(r* + l*(g-1)) t0}(1+eta)`.
    ProofForm,
}

impl KappaVariant {
    pub fn label(self) -> &'static str {
        match self {
            KappaVariant::Literal => "literal",
            KappaVariant::Corrected => "corrected",
            KappaVariant::ProofForm => "proof_form",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CertificateKind {
    Nonlinear,
    Particle { variant: KappaVariant },
}

/// Contraction constants derived from [`AssumptionConstants`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateCertificate {
    pub kind: CertificateKind,
    pub constants: AssumptionConstants,
    pub beta: f64,
    /// Measure-sensitivity term; non-linear certificate only.
    pub c_star: Option<f64>,
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub contracts: bool,
    /// `M / (1 - eta)`.
    pub equilibrium_moment_bound: f64,
    /// Set when the Doeblin pair comes from simulation.
    pub estimate_grade: bool,
}

impl RateCertificate {
    pub fn with_estimate_grade(mut self, flag: bool) -> Self {
        self.estimate_grade = flag;
        self
    }

    /// Non-linear decay bound `2 kt^{t/t0 - 1} (beta + 1 + M/(1-eta)) m0(V)`;
    /// `None` for particle certificates, see [`particle_decay_bound`].
    pub fn decay_bound(&self, t: f64, m0_v: f64) -> Option<f64> {
        let c = &self.constants;
        match self.kind {
            CertificateKind::Nonlinear => Some(
                2.0 * self.kappa_tilde.powf(t / c.t0 - 1.0) * (self.beta + 1.0 + c.moment()) * m0_v,
            ),
            CertificateKind::Particle { .. } => None,
        }
    }
}

/// Particle decay prefactor for a system of `n` particles.
pub fn particle_prefactor(c: &AssumptionConstants, beta: f64, n: usize, nu_v: f64) -> f64 {
    let eta = c.eta;
    2.0 * n as f64 * (beta + c.m * (1.0 + eta) / (1.0 - eta).powi(2)) + (1.0 + eta) / (1.0 - eta) * nu_v
}

/// `e^{th t0} (e^{th t0} - alpha e^{-l* t0})^{floor(t / t0)}`.
pub fn tv_rate(theta: f64, t0: f64, alpha: f64, lambda_star: f64, t: f64) -> Result<f64> {
    if !(theta >= 0.0 && t0 > 0.0 && (0.0..=1.0).contains(&alpha) && lambda_star >= 0.0 && t >= 0.0) {
        return Err(Error::Domain(format!(
            "tv_rate(theta={theta}, t0={t0}, alpha={alpha}, lambda_star={lambda_star}, t={t})"
        )));
    }
    let grow = (theta * t0).exp();
    let base = grow - alpha * (-lambda_star * t0).exp();
    if base < 0.0 {
        return Err(Error::Domain(format!("negative contraction base {base}")));
    }
    Ok(grow * base.powf((t / t0).floor()))
}

/// `(N * rate, rate)` for a system of `n` particles and one particle.
pub fn particle_tv_rate(
    theta: f64,
    t0: f64,
    alpha: f64,
    lambda_star: f64,
    n: usize,
    t: f64,
) -> Result<(f64, f64)> {
    let r = tv_rate(theta, t0, alpha, lambda_star, t)?;
    Ok((n as f64 * r, r))
}

/// Contraction constants for the non-linear equation.
pub fn nonlinear_certificate(c: &AssumptionConstants) -> Result<RateCertificate> {
    let c = c.validated()?;
    let (l, th, rho, t0, g) = (c.lambda_star, c.theta, c.rho, c.t0, c.gamma_star);
    let a_m = c.moment() + 1.0;
    let beta = if c.alpha > 0.0 {
        2.0 * (1.0 - (-rho * t0).exp()) * (l * t0).exp() / c.alpha * a_m
    } else {
        f64::INFINITY
    };
    let c_star = if th == 0.0 {
        0.0
    } else {
        th * (2.0 * (1.0 + beta) * g * a_m) / ((rho + th * g) * a_m)
            * ((c.rho_star + l * (g - 1.0)) * t0).exp()
            * (((rho + th * g) * a_m * t0).exp() - 1.0)
    };
    let kappa = ((1.0 + (-rho * t0).exp()) / 2.0).max(1.0 - 0.5 * c.alpha * (-l * t0).exp());
    let kappa_tilde = (-rho * (1.0 - c.eta) * t0).exp().max(kappa + c_star);
    Ok(RateCertificate {
        kind: CertificateKind::Nonlinear,
        constants: c,
        beta,
        c_star: Some(c_star),
        kappa,
        kappa_tilde,
        contracts: kappa_tilde < 1.0,
        equilibrium_moment_bound: c.moment(),
        estimate_grade: false,
    })
}

/// Moment bound `e^{-r(1-eta)t} m0(V) + (1 - e^{-r(1-eta)t}) M/(1-eta)`.
pub fn lyapunov_bound(c: &AssumptionConstants, m0_v: f64, t: f64) -> f64 {
    let d = (-c.rho * (1.0 - c.eta) * t).exp();
    d * m0_v + (1.0 - d) * c.m / (1.0 - c.eta)
}

/// Contraction constants for the particle system; requires `eta >= 1/2`.
pub fn particle_certificate(c: &AssumptionConstants, variant: KappaVariant) -> Result<RateCertificate> {
    let c = c.validated()?;
    if c.eta < 0.5 {
        return Err(Error::Domain(format!("eta = {} must be at least 1/2", c.eta)));
    }
    let (l, th, rho, t0, g, eta) = (c.lambda_star, c.theta, c.rho, c.t0, c.gamma_star, c.eta);
    let half_decay = (-0.5 * rho * (1.0 - eta) * t0).exp();
    let beta = if c.alpha > 0.0 {
        4.0 * (1.0 + eta) * c.m * (l * t0).exp() / (c.alpha * (1.0 - eta).powi(2)) * (1.0 - half_decay)
    } else {
        f64::INFINITY
    };
    let kappa = ((1.0 + half_decay) / 2.0).max(1.0 - 0.5 * c.alpha * (-l * t0).exp());
    let growth = (th * t0).exp() - 1.0;
    let third = |exponent: f64| growth * (g + 1.0) * exponent.exp() * (1.0 + eta);
    let kappa_tilde = match variant {
        KappaVariant::Literal => kappa + kappa + third(c.rho_star + l * (g - 1.0) * t0),
        KappaVariant::Corrected => kappa + kappa + third((c.rho_star + l * (g - 1.0)) * t0),
        KappaVariant::ProofForm => kappa + third((c.rho_star + l * (g - 1.0)) * t0),
    };
    Ok(RateCertificate {
        kind: CertificateKind::Particle { variant },
        constants: c,
        beta,
        c_star: None,
        kappa,
        kappa_tilde,
        contracts: kappa_tilde < 1.0,
        equilibrium_moment_bound: c.moment(),
        estimate_grade: false,
    })
}

/// Particle decay bound `kt^{floor(t/t0)} prefactor(N, nu(V))`.
pub fn particle_decay_bound(cert: &RateCertificate, n: usize, t: f64, nu_v: f64) -> f64 {
    cert.kappa_tilde.powf((t / cert.constants.t0).floor())
        * particle_prefactor(&cert.constants, cert.beta, n, nu_v)
}
