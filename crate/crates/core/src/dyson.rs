//! Time-dependent Dyson maps `η(t)`, metrics `ρ(t) = η(t)²`, the Hermitian
//! counterparts `h(t) = ηHη⁻¹ + iħη̇η⁻¹`, and the closed-form metrics
//! obtained by solving the quasi-Hermiticity relation directly.
//!
//! Closed forms are written in the dimensionless time `τ = t/ħ`; every
//! public function takes physical time `t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ermakov::EPSolution;
use crate::error::{Error, Result};
use crate::linalg::{time_derivative, Matrix};
use crate::spin::{hamiltonian, ModelParams, Spin};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default step for finite-difference time derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Closed-form Dyson map data: the model, the overall constant `c₁` and the
/// Ermakov-Pinney solution `χ(t)` driving the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonSpec {
    pub params: ModelParams,
    pub c1: f64,
    pub ep: EPSolution,
}

impl DysonSpec {
    pub fn new(params: ModelParams, c1: f64, c2: f64, c3: f64, branch: i8) -> Result<Self> {
        params.validate()?;
        let ep = EPSolution::for_spin(&params, c2, c3, branch)?;
        Self::from_parts(params, c1, ep)
    }

    pub fn from_parts(params: ModelParams, c1: f64, ep: EPSolution) -> Result<Self> {
        params.validate()?;
        if !(c1 != 0.0 && c1.is_finite()) {
            return Err(Error::invalid(format!("c1 must be finite and non-zero, got {c1}")));
        }
        if params.gamma.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "Dyson maps need |gamma| < 1, got {}",
                params.gamma
            )));
        }
        Ok(DysonSpec { params, c1, ep })
    }

    pub fn spin(&self) -> Spin {
        self.params.spin
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    fn tau(&self, t: f64) -> f64 {
        t / self.params.hbar
    }

    /// `χ(t)`, `X(t)` or `Ξ(t)` depending on the spin.
    pub fn chi(&self, t: f64) -> f64 {
        self.ep.value(self.tau(t))
    }

    /// `1 + c₂² + c₃²`.
    pub fn amplitude(&self) -> f64 {
        1.0 + self.ep.c2 * self.ep.c2 + self.ep.c3 * self.ep.c3
    }
}

/// Fills a Hermitian matrix from real components: each diagonal entry takes
/// one component and each upper entry `(i, j)` takes two, `a − ib`, walking
/// the upper triangle row by row.
pub fn assemble_hermitian(dim: usize, components: &[f64]) -> Result<Matrix> {
    let expected = dim * dim;
    if components.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: components.len(),
        });
    }
    let mut m = Matrix::zeros(dim)?;
    let mut it = components.iter().copied();
    for i in 0..dim {
        for j in i..dim {
            if i == j {
                m[(i, i)] = Complex64::new(it.next().unwrap(), 0.0);
            } else {
                let a = it.next().unwrap();
                let b = it.next().unwrap();
                m[(i, j)] = Complex64::new(a, -b);
                m[(j, i)] = Complex64::new(a, b);
            }
        }
    }
    Ok(m)
}

/// Real components of the Dyson map in the layout of [`assemble_hermitian`].
pub fn dyson_components(spec: &DysonSpec, t: f64) -> Result<Vec<f64>> {
    if spec.ep.branch < 0 {
        return Err(Error::NegativeBranch);
    }
    let tau = spec.tau(t);
    let x = spec.ep.value(tau);
    let xd = spec.ep.derivative(tau);
    let g = spec.params.gamma;
    let c1 = spec.c1;
    let p = spec.params.freq();
    Ok(match spec.spin() {
        Spin::Half => {
            let sx = x.sqrt();
            vec![
                c1 * (g + 1.0) / (sx * (g - 1.0)),
                -c1 * xd / (x * sx * (g - 1.0)),
                c1 * sx / (g - 1.0),
                c1 / sx,
            ]
        }
        Spin::One => {
            let gp = 1.0 + g;
            let gm = 1.0 - g;
            let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
            let xd2 = xd * xd;
            vec![
                c1 / x,
                -2.0 * c1 * xd / (gp * x2),
                c1 / gp,
                c1 * (4.0 * xd2 - x4) / (2.0 * gp * gp * x3),
                -2.0 * c1 * xd / (gp * gp * x),
                c1 * (4.0 * xd2 + x4 - 4.0 * p * p * x2) / (2.0 * gp * gp * x3),
                2.0 * gm * c1 * xd / (gp * gp * x2),
                -c1 * gm / (gp * gp),
                c1 * gm * gm / (gp * gp * x),
            ]
        }
        Spin::ThreeHalves => {
            let r3 = 3f64.sqrt();
            let gp = 1.0 + g;
            let gm = 1.0 - g;
            let (gp2, gp3) = (gp * gp, gp * gp * gp);
            let h = |k: i32| x.powf(k as f64 / 2.0);
            let (x2, x4) = (x * x, x * x * x * x);
            let xd2 = xd * xd;
            let p2x2 = p * p * x2;
            let diag_mid = 12.0 * xd2 + 3.0 * x4 - 6.0 * p2x2;
            let mixed = 24.0 * p2x2 - 12.0 * xd2 - 3.0 * x4;
            vec![
                c1 / h(3),
                -6.0 * r3 * c1 * xd / (gp * h(5)),
                3.0 * r3 * c1 / (gp * h(1)),
                9.0 * r3 * c1 * (4.0 * xd2 - x4) / (gp2 * h(7)),
                -36.0 * r3 * c1 * xd / (gp2 * h(3)),
                54.0 * c1 * (3.0 * xd * x4 - 4.0 * xd2 * xd) / (gp3 * h(9)),
                27.0 * c1 * (12.0 * xd2 - x4) / (gp3 * h(5)),
                6.0 * c1 * diag_mid / (gp2 * h(7)),
                18.0 * c1 * xd * mixed / (gp3 * h(9)),
                -9.0 * c1 * mixed / (gp3 * h(5)),
                9.0 * r3 * c1 * gm * (x4 - 4.0 * xd2) / (gp3 * h(7)),
                36.0 * r3 * c1 * gm * xd / (gp3 * h(3)),
                -6.0 * c1 * gm * diag_mid / (gp3 * h(7)),
                -6.0 * r3 * c1 * gm * gm * xd / (gp3 * h(5)),
                3.0 * r3 * c1 * gm * gm / (gp3 * h(1)),
                -c1 * gm * gm * gm / (gp3 * h(3)),
            ]
        }
    })
}

/// Hermitian Dyson map `η(t)`. Defined on the `+1` branch only.
pub fn dyson_map(spec: &DysonSpec, t: f64) -> Result<Matrix> {
    assemble_hermitian(spec.dim(), &dyson_components(spec, t)?)
}

/// `ρ(t) = η(t)† η(t) = η(t)²`.
pub fn metric(spec: &DysonSpec, t: f64) -> Result<Matrix> {
    let eta = dyson_map(spec, t)?;
    Ok(eta * eta)
}

/// The Hermitian Hamiltonian the Dyson map is built to produce:
/// `h(t) = ε𝕀 − ½χ(t)Z` with `ε` the scalar part of `H` and `Z` the diagonal
/// spin generator (`σ_z` for spin 1/2).
pub fn target_hamiltonian(spec: &DysonSpec, t: f64) -> Matrix {
    let n = spec.dim();
    Matrix::identity(n).expect("valid dim") * spec.params.scalar_shift()
        - spec.spin().z_generator() * (0.5 * spec.chi(t))
}

/// `ηHη⁻¹ + iħη̇η⁻¹` with `η̇` from a central difference of step `h_fd`.
pub fn hermitian_counterpart(spec: &DysonSpec, t: f64, h_fd: f64) -> Result<Matrix> {
    let h = hamiltonian(&spec.params);
    let eta = dyson_map(spec, t)?;
    let eta_inv = eta.inverse()?;
    let eta_dot = time_derivative(|s| dyson_map(spec, s), t, h_fd)?;
    Ok(eta * h * eta_inv + eta_dot * eta_inv * (I * spec.params.hbar))
}

/// `‖H†ρ − ρH − iħρ̇‖_max` with `ρ̇` from a central difference.
pub fn quasi_hermiticity_residual<F>(h: &Matrix, rho: F, t: f64, h_fd: f64, hbar: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Matrix>,
{
    let r = rho(t)?;
    let r_dot = time_derivative(&rho, t, h_fd)?;
    Ok((h.adjoint() * r - r * *h - r_dot * (I * hbar)).max_abs())
}

/// [`quasi_hermiticity_residual`] divided by `max(1, ‖ρ(t)‖_max)`.
///
/// The relation is homogeneous in `ρ`, whose overall scale is fixed only by
/// the arbitrary constant `c₁`; for large metrics the absolute residual is
/// dominated by finite-difference roundoff of order `ε‖ρ‖/h_fd`.
pub fn scaled_quasi_hermiticity_residual<F>(h: &Matrix, rho: F, t: f64, h_fd: f64, hbar: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Matrix>,
{
    let scale = rho(t)?.max_abs().max(1.0);
    Ok(quasi_hermiticity_residual(h, rho, t, h_fd, hbar)? / scale)
}

/// `H̃ = H + iħη⁻¹η̇`, the energy operator of the non-Hermitian picture.
pub fn energy_operator(spec: &DysonSpec, t: f64, h_fd: f64) -> Result<Matrix> {
    let eta = dyson_map(spec, t)?;
    let eta_dot = time_derivative(|s| dyson_map(spec, s), t, h_fd)?;
    Ok(hamiltonian(&spec.params) + eta.inverse()? * eta_dot * (I * spec.params.hbar))
}

/// `η⁻¹hη` with `h` the target Hermitian Hamiltonian; agrees with
/// [`energy_operator`] whenever the Dyson relation holds.
pub fn energy_operator_from_counterpart(spec: &DysonSpec, t: f64) -> Result<Matrix> {
    let eta = dyson_map(spec, t)?;
    Ok(eta.inverse()? * target_hamiltonian(spec, t) * eta)
}

/// `det ρ`, constant in time.
pub fn metric_determinant_closed_form(spec: &DysonSpec) -> f64 {
    let g = spec.params.gamma;
    let c1 = spec.c1;
    let s = spec.amplitude();
    match spec.spin() {
        Spin::Half => 4.0 * (1.0 + g) * c1.powi(4) * s / (1.0 - g).powi(3),
        Spin::One => 8.0 * (1.0 - g).powi(3) * c1.powi(6) * s.powi(3) / (1.0 + g).powi(9),
        Spin::ThreeHalves => {
            6f64.powi(12) * (1.0 - g).powi(6) * c1.powi(8) * s.powi(6) / (1.0 + g).powi(18)
        }
    }
}

/// Integration constants of the closed-form metric (4 for spin 1/2, 9 for spin 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConstants {
    pub b: Vec<f64>,
}

impl MetricConstants {
    pub fn new(b: Vec<f64>) -> Self {
        MetricConstants { b }
    }

    pub fn expected_len(spin: Spin) -> Result<usize> {
        match spin {
            Spin::Half => Ok(4),
            Spin::One => Ok(9),
            Spin::ThreeHalves => Err(Error::Unsupported("no closed-form metric family for spin 3/2")),
        }
    }
}

/// `x sin(ωt) + y cos(ωt)`.
fn gamma_abbrev(omega_t: f64, x: f64, y: f64) -> f64 {
    let (s, c) = omega_t.sin_cos();
    x * s + y * c
}

/// General solution of the quasi-Hermiticity relation for spin 1/2 and 1.
pub fn metric_closed_form(b: &MetricConstants, params: &ModelParams, t: f64) -> Result<Matrix> {
    let n = MetricConstants::expected_len(params.spin)?;
    if b.b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.b.len(),
        });
    }
    let g = params.gamma;
    let p = params.freq();
    if !(p > 0.0) {
        return Err(Error::invalid("closed-form metric needs |gamma| < 1"));
    }
    let tau = t / params.hbar;
    let b = &b.b;
    let comps = match params.spin {
        Spin::Half => {
            let gm = |x: f64, y: f64| gamma_abbrev(p * tau, x, y);
            let (b1, b2, b3, b4) = (b[0], b[1], b[2], b[3]);
            vec![
                (1.0 + g) / p * gm(b2, -b1) + b4,
                gm(b1, b2),
                b3,
                (1.0 - g) / p * gm(-b2, b1) + (1.0 - g) / (1.0 + g) * b4,
            ]
        }
        Spin::One => {
            let single = |x: f64, y: f64| gamma_abbrev(p * tau, x, y);
            let double = |x: f64, y: f64| gamma_abbrev(2.0 * p * tau, x, y);
            let (b1, b2, b3, b4, b5, b6, b7, b8, b9) = (b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], b[8]);
            let ratio = (1.0 - g) / (1.0 + g);
            vec![
                (2.0 * b4 + 3.0 * b5) * (g + 1.0) / (8.0 * (1.0 - g)) + single(b6, b7) + double(b8, b9),
                p / (1.0 + g) * (single(-b7, b6) + 2.0 * double(-b9, b8)),
                (1.0 + g) / (2.0 * p) * single(b2, -b1) + b3,
                -ratio * double(b8, b9) + (6.0 * b4 + b5) / 8.0,
                single(b1, b2),
                -2.0 * ratio * double(b8, b9) - (2.0 * b4 - b5) / 4.0,
                std::f64::consts::FRAC_1_SQRT_2 * ratio.powf(1.5) * (single(-b7, b6) + 2.0 * double(b9, -b8)),
                p / (1.0 + g) * single(-b2, b1) + ratio * b3,
                ratio * ratio * (-single(b6, b7) + double(b8, b9)) + ratio / 8.0 * (2.0 * b4 + 3.0 * b5),
            ]
        }
        Spin::ThreeHalves => unreachable!("rejected by expected_len"),
    };
    assemble_hermitian(params.dim(), &comps)
}

/// `det ρ` of the spin-1/2 closed-form metric, `(1−γ)/(1+γ)·b₄² − b₁² − b₂² − b₃²`.
pub fn metric_closed_form_determinant_half(b: &MetricConstants, gamma: f64) -> Result<f64> {
    if b.b.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: b.b.len(),
        });
    }
    let b = &b.b;
    Ok((1.0 - gamma) / (1.0 + gamma) * b[3] * b[3] - b[0] * b[0] - b[1] * b[1] - b[2] * b[2])
}

/// Integration constants for which the closed-form metric coincides with `η²`.
pub fn match_constants(spec: &DysonSpec) -> Result<MetricConstants> {
    MetricConstants::expected_len(spec.spin())?;
    let g = spec.params.gamma;
    let p = spec.params.freq();
    let (c1, c2, c3) = (spec.c1, spec.ep.c2, spec.ep.c3);
    let c1s = c1 * c1;
    let r = spec.ep.root();
    let s = spec.amplitude();
    let b = match spec.spin() {
        Spin::Half => {
            let gm2 = (1.0 - g) * (1.0 - g);
            vec![
                -2.0 * c3 * g * c1s / gm2,
                2.0 * c2 * g * c1s / gm2,
                2.0 * g * c1s / gm2,
                2.0 * p * c1s * r / (gm2 * (1.0 - g)),
            ]
        }
        Spin::One => {
            let gp2 = (1.0 + g) * (1.0 + g);
            let gp4 = gp2 * gp2;
            let p2 = p * p;
            vec![
                -4.0 * g * g * c1s * c3 / gp4,
                4.0 * g * g * c1s * c2 / gp4,
                2.0 * g * c1s * r / (p * gp2 * (1.0 + g)),
                2.0 * c1s * (p2 * (3.0 - c2 * c2 - c3 * c3) - 2.0) / gp4,
                2.0 * c1s * (3.0 + g * g) * s / gp4,
                2.0 * g * c1s * c2 * r / (p2 * gp2),
                2.0 * g * c1s * c3 * r / (p2 * gp2),
                g * g * c1s * c2 * c3 / (p2 * gp2),
                g * g * c1s * (c3 * c3 - c2 * c2) / (2.0 * p2 * gp2),
            ]
        }
        Spin::ThreeHalves => unreachable!(),
    };
    Ok(MetricConstants::new(b))
}
