//! Spin operators and the one-site non-Hermitian Hamiltonians with their
//! closed-form spectra.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, CVector, Matrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "3/2")]
    ThreeHalves,
}

impl Spin {
    pub const ALL: [Spin; 3] = [Spin::Half, Spin::One, Spin::ThreeHalves];

    pub fn dim(self) -> usize {
        self.twice() as usize + 1
    }

    /// `2s`.
    pub fn twice(self) -> u32 {
        match self {
            Spin::Half => 1,
            Spin::One => 2,
            Spin::ThreeHalves => 3,
        }
    }

    pub fn value(self) -> f64 {
        self.twice() as f64 / 2.0
    }

    /// Eigenstate labels in ascending order.
    pub fn levels(self) -> &'static [i32] {
        match self {
            Spin::Half => &[-1, 1],
            Spin::One => &[-1, 0, 1],
            Spin::ThreeHalves => &[-3, -1, 1, 3],
        }
    }

    /// The diagonal generator of the Hermitian counterpart: `σ_z` for
    /// spin 1/2, `S_z` otherwise.
    pub fn z_generator(self) -> Matrix {
        let (_, _, sz) = spin_operators(self);
        match self {
            Spin::Half => sz * 2.0,
            _ => sz,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Half => "1/2",
            Spin::One => "1",
            Spin::ThreeHalves => "3/2",
        })
    }
}

impl FromStr for Spin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" | "0.5" | "half" => Ok(Spin::Half),
            "1" | "1.0" | "one" => Ok(Spin::One),
            "3/2" | "1.5" => Ok(Spin::ThreeHalves),
            other => Err(Error::UnsupportedSpin(other.to_string())),
        }
    }
}

/// PT-symmetry regime of the Hamiltonian as a function of `|γ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Unbroken,
    Exceptional,
    Broken,
}

impl Regime {
    pub fn of(gamma: f64) -> Regime {
        let g = gamma.abs();
        if g < 1.0 {
            Regime::Unbroken
        } else if g == 1.0 {
            Regime::Exceptional
        } else {
            Regime::Broken
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Unbroken => "unbroken",
            Regime::Exceptional => "exceptional",
            Regime::Broken => "broken",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub spin: Spin,
    pub gamma: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl ModelParams {
    pub fn new(spin: Spin, gamma: f64, omega: f64) -> Self {
        ModelParams {
            spin,
            gamma,
            omega,
            hbar: 1.0,
        }
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || !self.omega.is_finite() {
            return Err(Error::invalid("gamma and omega must be finite"));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.gamma)
    }

    /// Ratio of the model frequency to `√(1−γ²)`.
    fn freq_factor(&self) -> f64 {
        match self.spin {
            Spin::Half => 1.0,
            Spin::One => std::f64::consts::FRAC_1_SQRT_2,
            Spin::ThreeHalves => 1.0 / 6.0,
        }
    }

    /// Model frequency; NaN for `|γ| > 1`.
    pub fn freq(&self) -> f64 {
        (1.0 - self.gamma * self.gamma).sqrt() * self.freq_factor()
    }

    /// Model frequency continued to the broken regime, where it is imaginary.
    pub fn complex_freq(&self) -> Complex64 {
        re(1.0 - self.gamma * self.gamma).sqrt() * self.freq_factor()
    }

    /// Scalar part of the Hamiltonian, `tr H / dim`.
    pub fn scalar_shift(&self) -> f64 {
        match self.spin {
            Spin::ThreeHalves => -self.omega / 4.0,
            _ => -self.omega / 2.0,
        }
    }
}

/// `(S_x, S_y, S_z)` in the basis `m = s, s−1, …, −s`.
pub fn spin_operators(spin: Spin) -> (Matrix, Matrix, Matrix) {
    let n = spin.dim();
    let s = spin.value();
    let m = |i: usize| s - i as f64;
    // raising operator: S+|m⟩ = √(s(s+1) − m(m+1)) |m+1⟩
    let raise = Matrix::from_fn(n, |i, j| {
        if j == i + 1 {
            re((s * (s + 1.0) - m(j) * (m(j) + 1.0)).sqrt())
        } else {
            re(0.0)
        }
    })
    .expect("spin dimension is 2..=4");
    let lower = raise.adjoint();
    let sx = (raise + lower) * 0.5;
    let sy = (raise - lower) * Complex64::new(0.0, -0.5);
    let sz = Matrix::from_fn(n, |i, j| if i == j { re(m(i)) } else { re(0.0) }).unwrap();
    (sx, sy, sz)
}

pub fn hamiltonian(p: &ModelParams) -> Matrix {
    let g = p.gamma;
    let w = re(p.omega);
    match p.spin {
        Spin::Half => Matrix::from_rows(&[[w, I * (g - 1.0)], [I * (g + 1.0), w]]).unwrap() * -0.5,
        Spin::One => {
            let up = I * (g - 1.0);
            let down = I * (g + 1.0);
            let z = re(0.0);
            Matrix::from_rows(&[[w, up, z], [down, w, up], [z, down, w]]).unwrap() * -0.5
        }
        Spin::ThreeHalves => {
            let (sx, sy, _) = spin_operators(Spin::ThreeHalves);
            let id = Matrix::identity(4).unwrap();
            (sy + sx * (I * g)) * (-1.0 / 6.0) - id * (p.omega / 4.0)
        }
    }
}

/// Closed-form eigen-data; vectors are unnormalised.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub labels: Vec<i32>,
    pub energies: Vec<Complex64>,
    pub vectors: Vec<CVector>,
    pub regime: Regime,
}

impl Spectrum {
    pub fn index_of(&self, k: i32) -> Option<usize> {
        self.labels.iter().position(|&l| l == k)
    }
}

pub fn closed_form_energy(p: &ModelParams, k: i32) -> Complex64 {
    let f = p.complex_freq();
    let k = k as f64;
    match p.spin {
        Spin::Half => -p.omega / 2.0 + k * f / 2.0,
        Spin::One => -p.omega / 2.0 + k * f,
        Spin::ThreeHalves => -k * f / 2.0 - p.omega / 4.0,
    }
}

pub fn closed_form_vector(p: &ModelParams, k: i32) -> CVector {
    let g = p.gamma;
    let f = p.complex_freq();
    let kf = k as f64;
    match p.spin {
        Spin::Half => vec![I * (kf * (1.0 - g)), f],
        Spin::One => {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            vec![re(sign * (1.0 - g)), I * (2.0 * kf) * f, re(1.0 + g)]
        }
        Spin::ThreeHalves => {
            let r3 = 3f64.sqrt();
            let minus = re(1.0 - g).sqrt();
            let plus = re(1.0 + g).sqrt();
            let abs_k = k.abs() as f64;
            vec![
                I * minus * minus * minus,
                -2.0 * r3 * kf * f * minus,
                -2.0 * I * r3 * (kf * kf - 2.0 * abs_k) * f * plus,
                re(kf.signum() * (abs_k - 2.0)) * plus * plus * plus,
            ]
        }
    }
}

pub fn closed_form_spectrum(p: &ModelParams) -> Spectrum {
    let labels = p.spin.levels().to_vec();
    Spectrum {
        energies: labels.iter().map(|&k| closed_form_energy(p, k)).collect(),
        vectors: labels.iter().map(|&k| closed_form_vector(p, k)).collect(),
        labels,
        regime: p.regime(),
    }
}

/// Per-level eigen-equation residuals `‖HΨ_k − E_kΨ_k‖₂ / ‖H‖_F`.
#[derive(Debug, Clone)]
pub struct SpectrumCheck {
    pub residuals: Vec<(i32, f64)>,
    pub tol: f64,
}

impl SpectrumCheck {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|&(_, r)| r <= self.tol)
    }

    pub fn failures(&self) -> Vec<(i32, f64)> {
        self.residuals
            .iter()
            .copied()
            .filter(|&(_, r)| !(r <= self.tol))
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }
}

pub fn verify_eigenpairs(h: &Matrix, spectrum: &Spectrum, tol: f64) -> SpectrumCheck {
    let scale = h.frobenius_norm();
    let residuals = spectrum
        .labels
        .iter()
        .zip(&spectrum.energies)
        .zip(&spectrum.vectors)
        .map(|((&k, &e), v)| {
            let hv = h.mul_vec(v);
            let diff: CVector = hv.iter().zip(v).map(|(a, b)| a - e * b).collect();
            (k, norm(&diff) / scale)
        })
        .collect();
    SpectrumCheck { residuals, tol }
}

/// Checks the closed-form spectrum against the Hamiltonian. The exceptional
/// points `|γ| = 1` are rejected since the eigenvectors coalesce there.
pub fn verify_spectrum(p: &ModelParams, tol: f64) -> Result<SpectrumCheck> {
    p.validate()?;
    if p.regime() == Regime::Exceptional {
        return Err(Error::invalid("spectrum check undefined at |gamma| = 1"));
    }
    Ok(verify_eigenpairs(&hamiltonian(p), &closed_form_spectrum(p), tol))
}
