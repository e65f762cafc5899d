//! Design sizes from the asymptotic parameter table, made concrete by an
//! explicit multiplier on every big-O. Logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Multipliers for the hidden constants. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kappa_t: f64,
    pub kappa_m: f64,
    pub kappa_e: f64,
    pub kappa_d: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            kappa_t: 1.0,
            kappa_m: 1.0,
            kappa_e: 1.0,
            kappa_d: 1.0,
        }
    }
}

/// Measured or configured graph quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamInputs {
    pub n: usize,
    pub d: usize,
    /// Minimum degree `D`.
    pub min_degree: usize,
    pub c: f64,
    /// Mixing time `T(n)`.
    pub t_mix: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub inputs: ParamInputs,
    pub constants: Constants,
    pub d0: u64,
    pub meets_d0: bool,
    pub t1: u64,
    pub t2: u64,
    /// `m_1 .. m_4` (noiseless).
    pub m: [u64; 4],
    /// `m'_i = ⌈m_i / (1 − η)²⌉`.
    pub m_noisy: [u64; 4],
    /// `e_1 .. e_4`; the four share one expression.
    pub e: [u64; 4],
    /// `γ = ln n / (d ln(n/d))`, the fixed-input row factor.
    pub gamma: f64,
}

// ⌈x⌉ that ignores float noise just above an integer.
fn ceil(x: f64) -> u64 {
    (x - 1e-9).ceil().max(0.0) as u64
}

fn floor(x: f64) -> u64 {
    (x + 1e-9).floor().max(0.0) as u64
}

impl ParamInputs {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.d >= self.n {
            return Err(invalid!("need 1 <= d < n, got d = {}, n = {}", self.d, self.n));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(invalid!("eta must lie in [0, 1), got {}", self.eta));
        }
        if self.t_mix < 1 {
            return Err(invalid!("mixing time must be at least 1"));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(invalid!("c must be finite and >= 1, got {}", self.c));
        }
        if self.min_degree < 1 {
            return Err(invalid!("minimum degree must be at least 1"));
        }
        Ok(())
    }

    fn log_ratio(&self) -> f64 {
        (self.n as f64 / self.d as f64).ln()
    }
}

/// Noise tolerance `e(η) = ⌊κ_e η d ln(n/d) / (1 − η)²⌋`.
pub fn tolerance(inputs: &ParamInputs, constants: &Constants, eta: f64) -> u64 {
    floor(constants.kappa_e * eta * inputs.d as f64 * inputs.log_ratio() / (1.0 - eta).powi(2))
}

/// Evaluates every table entry for `inputs`.
pub fn table1_params(inputs: ParamInputs, constants: Constants) -> Result<DesignParams> {
    inputs.validate()?;
    for (name, k) in [
        ("kappa_t", constants.kappa_t),
        ("kappa_m", constants.kappa_m),
        ("kappa_e", constants.kappa_e),
        ("kappa_d", constants.kappa_d),
    ] {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid!("{name} must be positive, got {k}"));
        }
    }
    let n = inputs.n as f64;
    let d = inputs.d as f64;
    let big_d = inputs.min_degree as f64;
    let c = inputs.c;
    let t = inputs.t_mix as f64;
    let log = inputs.log_ratio();
    let km = constants.kappa_m;

    let d0 = ceil(constants.kappa_d * c.powi(2) * d * t * t);
    let m12 = ceil(km * c.powi(4) * d * d * t * t * log).max(1);
    let m3 = ceil(km * c.powi(8) * d.powi(3) * t.powi(4) * log).max(1);
    let m4 = ceil(km * c.powi(9) * d.powi(3) * big_d * t.powi(4) * log).max(1);
    let floor_t = 2 * inputs.t_mix as u64 + 1;
    let t1 = ceil(constants.kappa_t * n / (c.powi(3) * d * t)).max(floor_t);
    let t2 = ceil(constants.kappa_t * n * big_d / (c.powi(3) * d * t)).max(floor_t);

    let m = [m12, m12, m3, m4];
    let inflate = (1.0 - inputs.eta).powi(2);
    let m_noisy = m.map(|mi| ceil(mi as f64 / inflate));
    let e = [tolerance(&inputs, &constants, inputs.eta); 4];
    Ok(DesignParams {
        inputs,
        constants,
        d0,
        meets_d0: inputs.min_degree as u64 >= d0,
        t1,
        t2,
        m,
        m_noisy,
        e,
        gamma: n.ln() / (d * log),
    })
}

impl DesignParams {
    /// Rows for design `1..=4`: `m'_i`, which equals `m_i` when `η = 0`.
    pub fn rows(&self, design: u8) -> u64 {
        self.m_noisy[design as usize - 1]
    }

    /// Walk length for the fixed-length designs (`None` for 3 and 4).
    pub fn walk_length(&self, design: u8) -> Option<u64> {
        match design {
            1 => Some(self.t1),
            2 => Some(self.t2),
            _ => None,
        }
    }

    /// Decoder threshold `⌊(e − 1)/2⌋` (0 when `e = 0`).
    pub fn tau(&self, design: u8) -> u64 {
        self.e[design as usize - 1].saturating_sub(1) / 2
    }
}
