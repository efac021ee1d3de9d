//! State propagation in the non-Hermitian and Hermitian pictures, metric
//! inner products and the energy-expectation identities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyson::{dyson_map, energy_operator, metric, target_hamiltonian, DysonSpec};
use crate::error::{Error, Result};
use crate::linalg::{inner, CVector, Matrix};
use crate::spin::{closed_form_energy, closed_form_vector, ModelParams, Spin};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    NonHermitian,
    Hermitian,
}

#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub grid: Vec<f64>,
    pub states: Vec<CVector>,
    pub representation: Representation,
}

impl StateTrajectory {
    pub fn norms(&self) -> ObservableSeries {
        ObservableSeries {
            grid: self.grid.clone(),
            values: self.states.iter().map(|s| inner(s, s)).collect(),
            label: "<psi|psi>".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl ObservableSeries {
    /// `max |v(t) − v(t₀)|`.
    pub fn max_drift(&self) -> f64 {
        let first = match self.values.first() {
            Some(v) => *v,
            None => return 0.0,
        };
        self.values.iter().map(|v| (v - first).norm()).fold(0.0, f64::max)
    }
}

fn check_level(spin: Spin, k: i32) -> Result<()> {
    if spin.levels().contains(&k) {
        Ok(())
    } else {
        Err(Error::invalid(format!("level {k} does not exist for spin {spin}")))
    }
}

/// `Ψ_k e^{−iE_k t/ħ}`.
pub fn eigenstate(p: &ModelParams, k: i32, t: f64) -> Result<CVector> {
    check_level(p.spin, k)?;
    let phase = (-I * closed_form_energy(p, k) * (t / p.hbar)).exp();
    Ok(closed_form_vector(p, k).into_iter().map(|z| z * phase).collect())
}

/// `Σ_k c_k Ψ_k e^{−iE_k t/ħ}`.
pub fn closed_form_state(p: &ModelParams, coeffs: &[(i32, Complex64)], t: f64) -> Result<CVector> {
    let mut out = vec![Complex64::new(0.0, 0.0); p.dim()];
    for &(k, c) in coeffs {
        for (o, v) in out.iter_mut().zip(eigenstate(p, k, t)?) {
            *o += c * v;
        }
    }
    Ok(out)
}

/// `⟨a|ρ b⟩`.
pub fn metric_inner_product(a: &[Complex64], b: &[Complex64], rho: &Matrix) -> Result<Complex64> {
    for v in [a, b] {
        if v.len() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: v.len(),
            });
        }
    }
    Ok(inner(a, &rho.mul_vec(b)))
}

/// Spin-1/2 normalisation `N_± = (1−γ) / (∓4c₁²φ(γ ∓ √(1+c₂²+c₃²)))`.
pub fn normalization_half(spec: &DysonSpec, k: i32) -> Result<f64> {
    if spec.spin() != Spin::Half {
        return Err(Error::Unsupported("closed-form normalisation exists for spin 1/2 only"));
    }
    check_level(Spin::Half, k)?;
    let g = spec.params.gamma;
    let s = k as f64;
    let r = spec.ep.root();
    Ok((1.0 - g) / (-s * 4.0 * spec.c1 * spec.c1 * spec.params.freq() * (g - s * r)))
}

/// Normalisation making `N⟨Ψ_k|ρΨ_k⟩ = 1`: closed form for spin 1/2, the
/// (time-independent) metric norm for spin 1. None is available for spin 3/2.
pub fn normalization(spec: &DysonSpec, k: i32) -> Result<f64> {
    match spec.spin() {
        Spin::Half => normalization_half(spec, k),
        Spin::One => {
            let psi = eigenstate(&spec.params, k, 0.0)?;
            Ok(1.0 / metric_inner_product(&psi, &psi, &metric(spec, 0.0)?)?.re)
        }
        Spin::ThreeHalves => Err(Error::Unsupported("no normalisation constants for spin 3/2")),
    }
}

/// `φ = η(t)Ψ`, optionally scaled by `√N_k` for an eigenstate of level `k`.
pub fn map_state(spec: &DysonSpec, psi: &[Complex64], t: f64, normalize: Option<i32>) -> Result<CVector> {
    if psi.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: psi.len(),
        });
    }
    let scale = match normalize {
        Some(k) => normalization(spec, k)?.sqrt(),
        None => 1.0,
    };
    Ok(dyson_map(spec, t)?.mul_vec(psi).into_iter().map(|z| z * scale).collect())
}

/// Explicit Hermitian-picture eigenstate trajectories: normalised for
/// spin 1/2, unnormalised (`η Ψ_k e^{−iE_k t}`) for spin 1.
pub fn explicit_hermitian_state(spec: &DysonSpec, k: i32, t: f64) -> Result<CVector> {
    check_level(spec.spin(), k)?;
    let tau = t / spec.params.hbar;
    let g = spec.params.gamma;
    let p = spec.params.freq();
    let (c1, c2, c3) = (spec.c1, spec.ep.c2, spec.ep.c3);
    let r = spec.ep.root();
    let x = spec.chi(t);
    let e = closed_form_energy(&spec.params, k).re;
    let s = k as f64;
    match spec.spin() {
        Spin::Half => {
            let pre = c1 * (normalization_half(spec, k)? * x).sqrt() * (-I * e * tau).exp();
            let w = (I * s * p * tau).exp();
            let first = I * ((1.0 + g) / p) * (w * (I * c2 - s * c3) + 1.0 - s * r);
            let second = w * (c3 - I * s * c2) + s + r;
            Ok(vec![pre * first, pre * second])
        }
        Spin::One => {
            let pre = c1 * (-I * e * tau).exp() / (1.0 + g);
            let ratio = (1.0 - g) / (1.0 + g);
            if k == 0 {
                let (sn, cs) = (p * tau).sin_cos();
                let first = x * (I * c3 * sn - I * c2 * cs - 1.0) + 2.0 * p * r;
                let second = 2.0 * I * (1.0 - g);
                let third = ratio * (x * (-I * c3 * sn + I * c2 * cs - 1.0) + 2.0 * p * r);
                Ok(vec![pre * first, pre * second, pre * third])
            } else {
                let w = (I * s * p * tau).exp();
                let osc = I * c2 - s * c3;
                let first = -x * (1.0 - s * r + w * osc * (1.0 - 2.0 * s * p / x));
                let second = 2.0 * (1.0 - g) * (-c2 - s * I * c3) * w;
                let third = ratio * x * (1.0 + s * r - w * osc * (1.0 + 2.0 * s * p / x));
                Ok(vec![pre * first, pre * second, pre * third])
            }
        }
        Spin::ThreeHalves => Err(Error::Unsupported("no explicit Hermitian-picture states for spin 3/2")),
    }
}

/// `⟨φ_k|φ_{−k}⟩` for spin 1/2: `−γ(c₃ + k·ic₂) / √(φ² + c₂² + c₃²)`.
pub fn overlap_closed_form_half(spec: &DysonSpec, k: i32) -> Result<Complex64> {
    if spec.spin() != Spin::Half {
        return Err(Error::Unsupported("overlap closed form exists for spin 1/2 only"));
    }
    check_level(Spin::Half, k)?;
    let (g, c2, c3) = (spec.params.gamma, spec.ep.c2, spec.ep.c3);
    let p = spec.params.freq();
    Ok(-g * (c3 + I * (k as f64) * c2) / (p * p + c2 * c2 + c3 * c3).sqrt())
}

/// Spin-1/2 energy expectation
/// `(kφ²R − γ(c₂²+c₃²)) / (2(φ²+c₂²+c₃²)) · χ(t) − ω/2`, `R = √(1+c₂²+c₃²)`.
pub fn energy_closed_form_half(spec: &DysonSpec, k: i32, t: f64) -> Result<f64> {
    if spec.spin() != Spin::Half {
        return Err(Error::Unsupported("energy closed form exists for spin 1/2 only"));
    }
    check_level(Spin::Half, k)?;
    let (g, c2, c3) = (spec.params.gamma, spec.ep.c2, spec.ep.c3);
    let p2 = spec.params.freq().powi(2);
    let q = c2 * c2 + c3 * c3;
    Ok((k as f64 * p2 * spec.ep.root() - g * q) / (2.0 * (p2 + q)) * spec.chi(t) - spec.params.omega / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCheck {
    /// `⟨φ|hφ⟩` in the Hermitian picture.
    pub lhs: f64,
    /// `N⟨Ψ|ρH̃Ψ⟩` in the non-Hermitian picture.
    pub rhs: f64,
    pub rhs_imag: f64,
    /// Closed form, spin 1/2 only.
    pub closed: Option<f64>,
}

/// Both sides of the energy-expectation identity for the eigenstate of level
/// `k`. Spin 1/2 uses the closed-form `N_±`; the other spins normalise by
/// the metric norm.
pub fn energy_expectation_check(spec: &DysonSpec, k: i32, t: f64, h_fd: f64) -> Result<EnergyCheck> {
    let psi = eigenstate(&spec.params, k, t)?;
    let rho = metric(spec, t)?;
    let n = match spec.spin() {
        Spin::Half => normalization_half(spec, k)?,
        _ => 1.0 / metric_inner_product(&psi, &psi, &rho)?.re,
    };
    let phi: CVector = dyson_map(spec, t)?.mul_vec(&psi).into_iter().map(|z| z * n.sqrt()).collect();
    let lhs = inner(&phi, &target_hamiltonian(spec, t).mul_vec(&phi)).re;
    let tilde = energy_operator(spec, t, h_fd)?;
    let rhs = metric_inner_product(&psi, &tilde.mul_vec(&psi), &rho)? * n;
    let closed = match spec.spin() {
        Spin::Half => Some(energy_closed_form_half(spec, k, t)?),
        _ => None,
    };
    Ok(EnergyCheck {
        lhs,
        rhs: rhs.re,
        rhs_imag: rhs.im,
        closed,
    })
}

/// Fixed-step RK4 for `iħψ̇ = G(t)ψ` on `grid`.
pub fn rk4_propagate<G>(
    generator: G,
    psi0: &[Complex64],
    grid: &[f64],
    hbar: f64,
    representation: Representation,
) -> Result<StateTrajectory>
where
    G: Fn(f64) -> Result<Matrix>,
{
    let rate = -I / hbar;
    let deriv = |t: f64, psi: &[Complex64]| -> Result<CVector> {
        Ok(generator(t)?.mul_vec(psi).into_iter().map(|z| z * rate).collect())
    };
    let axpy = |a: &[Complex64], s: f64, b: &[Complex64]| -> CVector { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
    let mut states = Vec::with_capacity(grid.len());
    let mut psi = psi0.to_vec();
    if !grid.is_empty() {
        states.push(psi.clone());
    }
    for w in grid.windows(2) {
        let (t, dt) = (w[0], w[1] - w[0]);
        if !(dt > 0.0) {
            return Err(Error::invalid("time grid must be strictly increasing"));
        }
        let k1 = deriv(t, &psi)?;
        let k2 = deriv(t + 0.5 * dt, &axpy(&psi, 0.5 * dt, &k1))?;
        let k3 = deriv(t + 0.5 * dt, &axpy(&psi, 0.5 * dt, &k2))?;
        let k4 = deriv(t + dt, &axpy(&psi, dt, &k3))?;
        for i in 0..psi.len() {
            psi[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        states.push(psi.clone());
    }
    Ok(StateTrajectory {
        grid: grid.to_vec(),
        states,
        representation,
    })
}

/// One grid point of a closed-form evolution in both pictures.
#[derive(Debug, Clone)]
pub struct EvolutionSample {
    pub t: f64,
    pub psi: CVector,
    pub phi: CVector,
    /// `⟨φ|φ⟩`.
    pub norm_hermitian: f64,
    /// `⟨Ψ|ρΨ⟩`.
    pub norm_metric: f64,
    /// `⟨φ|hφ⟩`.
    pub energy_hermitian: f64,
    /// `⟨Ψ|ρH̃Ψ⟩`.
    pub energy_metric: Complex64,
    pub chi: f64,
}

/// Closed-form trajectory `Σ c_k Ψ_k e^{−iE_k t}` scaled so that `⟨Ψ|ρΨ⟩ = 1`
/// at the first grid point, together with its Hermitian image.
pub fn evolve(spec: &DysonSpec, coeffs: &[(i32, Complex64)], grid: &[f64], h_fd: f64) -> Result<Vec<EvolutionSample>> {
    if coeffs.iter().all(|(_, c)| c.norm() == 0.0) {
        return Err(Error::NullState);
    }
    let t0 = grid.first().copied().unwrap_or(0.0);
    let psi0 = closed_form_state(&spec.params, coeffs, t0)?;
    let n0 = metric_inner_product(&psi0, &psi0, &metric(spec, t0)?)?.re;
    if !(n0 > 0.0) {
        return Err(Error::NullState);
    }
    let scale = 1.0 / n0.sqrt();
    grid.iter()
        .map(|&t| {
            let psi: CVector = closed_form_state(&spec.params, coeffs, t)?
                .into_iter()
                .map(|z| z * scale)
                .collect();
            let rho = metric(spec, t)?;
            let phi = dyson_map(spec, t)?.mul_vec(&psi);
            let tilde = energy_operator(spec, t, h_fd)?;
            Ok(EvolutionSample {
                t,
                norm_hermitian: inner(&phi, &phi).re,
                norm_metric: metric_inner_product(&psi, &psi, &rho)?.re,
                energy_hermitian: inner(&phi, &target_hamiltonian(spec, t).mul_vec(&phi)).re,
                energy_metric: metric_inner_product(&psi, &tilde.mul_vec(&psi), &rho)?,
                chi: spec.chi(t),
                psi,
                phi,
            })
        })
        .collect()
}
