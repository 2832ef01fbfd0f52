use super::NmrError;
use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystemParams {
    /// Proton Larmor frequency, rad/s.
    pub omega_h: f64,
    /// Carbon Larmor frequency, rad/s.
    pub omega_c: f64,
    /// Scalar coupling, Hz.
    pub j_coupling: f64,
    /// Kelvin.
    pub temperature: f64,
    /// Polarization of the prepared pseudo-pure states, ρ ≈ 𝟙/4 + ε(|ψ⟩⟨ψ| − 𝟙/4).
    pub epsilon_scale: f64,
}

impl Default for SpinSystemParams {
    fn default() -> Self {
        Self {
            omega_h: 2.0 * PI * 500e6,
            omega_c: 2.0 * PI * 125e6,
            j_coupling: 215.0,
            temperature: 300.0,
            epsilon_scale: 4.75e-5,
        }
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<(), NmrError> {
        let fields = [
            ("omega_h", self.omega_h),
            ("omega_c", self.omega_c),
            ("j_coupling", self.j_coupling),
            ("temperature", self.temperature),
            ("epsilon_scale", self.epsilon_scale),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(NmrError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.omega_h <= self.omega_c {
            return Err(NmrError::InvalidParameter("omega_h must exceed omega_c".into()));
        }
        Ok(())
    }
}

/// Relaxation times in seconds; `f64::INFINITY` disables a process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    pub t1_h: f64,
    pub t2_h: f64,
    pub t1_c: f64,
    pub t2_c: f64,
    pub t1_j: f64,
    pub t2_j: f64,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        Self { t1_h: 6.2, t2_h: 0.24, t1_c: 7.4, t2_c: 0.192, t1_j: 5.65, t2_j: 0.177 }
    }
}

impl RelaxationParams {
    pub fn frozen() -> Self {
        Self {
            t1_h: f64::INFINITY,
            t2_h: f64::INFINITY,
            t1_c: f64::INFINITY,
            t2_c: f64::INFINITY,
            t1_j: f64::INFINITY,
            t2_j: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), NmrError> {
        let pairs = [("h", self.t1_h, self.t2_h), ("c", self.t1_c, self.t2_c), ("j", self.t1_j, self.t2_j)];
        for (name, t1, t2) in pairs {
            if !(t1 > 0.0 && t2 > 0.0) || t1.is_nan() || t2.is_nan() {
                return Err(NmrError::InvalidParameter(format!("relaxation times for {name} must be positive")));
            }
            if t2 > 2.0 * t1 {
                return Err(NmrError::InvalidParameter(format!("t2_{name} = {t2} exceeds 2·t1_{name} = {}", 2.0 * t1)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Absolute standard deviation on normalized signals.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, sigma: 0.0, seed: 0 }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::Gaussian, sigma, seed }
    }

    pub fn validate(&self) -> Result<(), NmrError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(NmrError::InvalidParameter(format!("noise sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// t₀ = 0 followed by `count − 1` log-spaced points from `first` to `last`.
pub fn log_time_grid(count: usize, first: f64, last: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let n = count.saturating_sub(1);
    if n == 1 {
        out.push(last);
    } else if n > 1 {
        let (a, b) = (first.ln(), last.ln());
        for i in 0..n {
            out.push((a + (b - a) * i as f64 / (n - 1) as f64).exp());
        }
        out[n] = last;
    }
    out
}
