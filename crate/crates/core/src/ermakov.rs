//! Closed-form solutions of the nonlinear constraint
//!
//! ```text
//! χ̈ − (3/2) χ̇²/χ − (1/2) Φ² χ + λ χ³ = 0
//! ```
//!
//! and of the Ermakov-Pinney equation `σ̈ + (Φ²/4) σ = σ⁻³` it reduces to
//! under `χ = (2a/Φ) / σ²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{ModelParams, Spin};

/// `χ(t) = a / D(t)` with `D(t) = c₂ sin Φt + c₃ cos Φt + branch·√(1+c₂²+c₃²)`.
///
/// `|D|` is bounded below by `√(1+c₂²+c₃²) − √(c₂²+c₃²) > 0`, so `χ` never
/// changes sign; it is positive everywhere on the `+1` branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EPSolution {
    pub c2: f64,
    pub c3: f64,
    pub branch: i8,
    pub freq: f64,
    pub scale: f64,
    pub cubic: f64,
}

impl EPSolution {
    pub fn new(c2: f64, c3: f64, branch: i8, freq: f64, scale: f64, cubic: f64) -> Result<Self> {
        if branch != 1 && branch != -1 {
            return Err(Error::invalid(format!("branch must be +1 or -1, got {branch}")));
        }
        if !(freq > 0.0 && freq.is_finite()) {
            return Err(Error::invalid(format!("frequency must be positive and finite, got {freq}")));
        }
        if !(c2.is_finite() && c3.is_finite() && scale.is_finite() && cubic.is_finite()) {
            return Err(Error::invalid("non-finite Ermakov-Pinney constant"));
        }
        Ok(EPSolution {
            c2,
            c3,
            branch,
            freq,
            scale,
            cubic,
        })
    }

    /// The solution family belonging to a spin model; requires `|γ| < 1`.
    pub fn for_spin(params: &ModelParams, c2: f64, c3: f64, branch: i8) -> Result<Self> {
        let freq = params.freq();
        if !(freq > 0.0) {
            return Err(Error::invalid(format!(
                "gamma = {} lies outside the unbroken regime |gamma| < 1",
                params.gamma
            )));
        }
        let (scale, cubic) = match params.spin {
            Spin::Half => (freq, 0.5),
            Spin::One | Spin::ThreeHalves => (2.0 * freq, 0.125),
        };
        Self::new(c2, c3, branch, freq, scale, cubic)
    }

    pub fn root(&self) -> f64 {
        (1.0 + self.c2 * self.c2 + self.c3 * self.c3).sqrt()
    }

    pub fn denominator(&self, t: f64) -> f64 {
        let (s, c) = (self.freq * t).sin_cos();
        self.c2 * s + self.c3 * c + self.branch as f64 * self.root()
    }

    fn denominator_derivatives(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.freq * t).sin_cos();
        let osc = self.c2 * s + self.c3 * c;
        let d = osc + self.branch as f64 * self.root();
        let d1 = self.freq * (self.c2 * c - self.c3 * s);
        let d2 = -self.freq * self.freq * osc;
        (d, d1, d2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.scale / self.denominator(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (d, d1, _) = self.denominator_derivatives(t);
        -self.scale * d1 / (d * d)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let (d, d1, d2) = self.denominator_derivatives(t);
        self.scale * (2.0 * d1 * d1 / (d * d * d) - d2 / (d * d))
    }

    /// `|χ̈ − 1.5 χ̇²/χ − ½Φ²χ + λχ³|` from analytic derivatives.
    pub fn constraint_residual(&self, t: f64) -> f64 {
        let x = self.value(t);
        let x1 = self.derivative(t);
        let x2 = self.second_derivative(t);
        (x2 - 1.5 * x1 * x1 / x - 0.5 * self.freq * self.freq * x + self.cubic * x * x * x).abs()
    }

    /// Ermakov-Pinney constants with `σ² = (2/Φ) D(t)`.
    pub fn abc(&self) -> EPConstantsABC {
        let f = self.freq;
        let br = self.branch as f64 * self.root();
        EPConstantsABC {
            a: 2.0 * (-self.c3 + br) / f,
            b: 2.0 * (self.c3 + br) / f,
            c: 2.0 * self.c2 / f,
        }
    }

    /// Inverse of the reduction `χ = (2a/Φ) / σ²`.
    pub fn chi_from_sigma(&self, sigma: f64) -> f64 {
        2.0 * self.scale / (self.freq * sigma * sigma)
    }
}

pub fn chi_closed_form(sol: &EPSolution, t: f64) -> f64 {
    sol.value(t)
}

pub fn constraint_residual(sol: &EPSolution, t: f64) -> f64 {
    sol.constraint_residual(t)
}

/// Constants of `σ² = A sin²(Φt/2) + B cos²(Φt/2) + 2C sin(Φt/2) cos(Φt/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EPConstantsABC {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub const ABC_TOLERANCE: f64 = 1e-9;

impl EPConstantsABC {
    /// `AB − C² − 4/Φ²`.
    pub fn defect(&self, freq: f64) -> f64 {
        self.a * self.b - self.c * self.c - 4.0 / (freq * freq)
    }

    pub fn validate(&self, freq: f64) -> Result<()> {
        let defect = self.defect(freq);
        if defect.abs() > ABC_TOLERANCE || !defect.is_finite() {
            return Err(Error::NotErmakovPinney { defect });
        }
        Ok(())
    }

    /// `σ²` and its first two time derivatives.
    fn square(&self, freq: f64, t: f64) -> (f64, f64, f64) {
        let (s, c) = (freq * t).sin_cos();
        let mean = 0.5 * (self.a + self.b);
        let amp = 0.5 * (self.b - self.a);
        let q = mean + amp * c + self.c * s;
        let q1 = freq * (-amp * s + self.c * c);
        let q2 = -freq * freq * (amp * c + self.c * s);
        (q, q1, q2)
    }
}

pub fn ep_sigma(abc: &EPConstantsABC, freq: f64, t: f64) -> Result<f64> {
    abc.validate(freq)?;
    let (q, _, _) = abc.square(freq, t);
    if !(q > 0.0) {
        return Err(Error::invalid(format!("sigma^2 = {q} is not positive at t = {t}")));
    }
    Ok(q.sqrt())
}

/// `|σ̈ + Φ²σ/4 − σ⁻³|` from analytic derivatives of `σ = √Q`.
pub fn ep_sigma_residual(abc: &EPConstantsABC, freq: f64, t: f64) -> Result<f64> {
    let sigma = ep_sigma(abc, freq, t)?;
    let (_, q1, q2) = abc.square(freq, t);
    let s3 = sigma * sigma * sigma;
    let sigma2 = q2 / (2.0 * sigma) - q1 * q1 / (4.0 * s3);
    Ok((sigma2 + 0.25 * freq * freq * sigma - 1.0 / s3).abs())
}

/// Classic RK4 for `χ̈ = 1.5 χ̇²/χ + ½Φ²χ − λχ³` on a uniform grid, starting
/// at `grid[0]`. Aborts when `χ` reaches zero or stops being finite.
pub fn ep_numeric_solve(chi0: f64, chid0: f64, freq: f64, cubic: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(chi0 > 0.0) {
        return Err(Error::invalid(format!("initial chi must be positive, got {chi0}")));
    }
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let rhs = |x: f64, v: f64| (v, 1.5 * v * v / x + 0.5 * freq * freq * x - cubic * x * x * x);
    let mut out = Vec::with_capacity(grid.len());
    let (mut x, mut v) = (chi0, chid0);
    out.push(x);
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        if !(dt > 0.0) {
            return Err(Error::invalid("time grid must be strictly increasing"));
        }
        let (k1x, k1v) = rhs(x, v);
        let (k2x, k2v) = rhs(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
        let (k3x, k3v) = rhs(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
        let (k4x, k4v) = rhs(x + dt * k3x, v + dt * k3v);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !(x > 0.0) || !x.is_finite() || !v.is_finite() {
            return Err(Error::SingularTrajectory { t: w[1], value: x });
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::uniform_grid;
    use proptest::prelude::*;

    fn half(gamma: f64, c2: f64, c3: f64, branch: i8) -> EPSolution {
        EPSolution::for_spin(&ModelParams::new(Spin::Half, gamma, 1.0), c2, c3, branch).unwrap()
    }

    /// Independent second-order difference of the closed form.
    fn fd_residual(sol: &EPSolution, t: f64) -> f64 {
        let h = 1e-4;
        let x = sol.value(t);
        let x1 = (sol.value(t + h) - sol.value(t - h)) / (2.0 * h);
        let x2 = (sol.value(t + h) - 2.0 * x + sol.value(t - h)) / (h * h);
        (x2 - 1.5 * x1 * x1 / x - 0.5 * sol.freq * sol.freq * x + sol.cubic * x.powi(3)).abs()
    }

    #[test]
    fn constant_solutions() {
        let sol = half(0.6, 0.0, 0.0, 1);
        assert_eq!(sol.value(3.7), sol.freq);
        assert_eq!(sol.constraint_residual(1.2), 0.0);
        let neg = half(0.6, 0.0, 0.0, -1);
        assert_eq!(neg.value(0.4), -sol.freq);
    }

    #[test]
    fn hand_evaluated_point() {
        // √(1 + 9/16) = 5/4
        let sol = half(0.0, 0.0, 0.75, 1);
        assert!((sol.value(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_solves_constraint() {
        let sol = half(0.6, 1.0, -0.5, 1);
        let grid = uniform_grid(20.0, 0.05);
        let max = grid.iter().map(|&t| sol.constraint_residual(t)).fold(0.0, f64::max);
        assert!(max <= 1e-9, "{max}");
        for &t in &grid[..20] {
            assert!(fd_residual(&sol, t) < 1e-5);
        }
    }

    #[test]
    fn wrong_cubic_coefficient_detected() {
        let mut sol = half(0.6, 1.0, -0.5, 1);
        sol.cubic = 1.0;
        let max = uniform_grid(20.0, 0.05)
            .iter()
            .map(|&t| sol.constraint_residual(t))
            .fold(0.0, f64::max);
        assert!(max > 1e-3);
    }

    #[test]
    fn sigma_at_origin_and_constant_case() {
        let abc = EPConstantsABC { a: 3.0, b: 2.0, c: 2.0 };
        let f = 2.0 / (abc.a * abc.b - abc.c * abc.c).sqrt();
        assert!((ep_sigma(&abc, f, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);

        let f = 0.8;
        let flat = EPConstantsABC {
            a: 2.0 / f,
            b: 2.0 / f,
            c: 0.0,
        };
        for t in [0.0, 1.3, 7.0] {
            assert!((ep_sigma(&flat, f, t).unwrap() - (2.0 / f).sqrt()).abs() < 1e-15);
            assert!(ep_sigma_residual(&flat, f, t).unwrap() < 1e-14);
        }
    }

    #[test]
    fn sigma_maps_to_chi() {
        let f = 0.8;
        let sol = EPSolution::new(1.0, 0.0, 1, f, f, 0.5).unwrap();
        let abc = sol.abc();
        for t in uniform_grid(10.0, 0.5) {
            let sigma = ep_sigma(&abc, f, t).unwrap();
            assert!((sol.chi_from_sigma(sigma) - sol.value(t)).abs() <= 1e-10);
            assert!(ep_sigma_residual(&abc, f, t).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn violated_constraint_rejected() {
        let abc = EPConstantsABC { a: 1.0, b: 1.0, c: 0.0 };
        assert!(matches!(ep_sigma(&abc, 1.0, 0.0), Err(Error::NotErmakovPinney { .. })));
    }

    #[test]
    fn numeric_solver_constant_and_closed_form() {
        let sol = half(0.6, 0.0, 0.0, 1);
        let grid = uniform_grid(5.0, 1e-3);
        let xs = ep_numeric_solve(sol.value(0.0), 0.0, sol.freq, sol.cubic, &grid).unwrap();
        assert!(xs.iter().all(|x| (x - sol.freq).abs() <= 1e-12));

        let p = ModelParams::new(Spin::One, 0.3, 1.0);
        let sol = EPSolution::for_spin(&p, 0.7, -0.4, 1).unwrap();
        let grid = uniform_grid(10.0, 1e-3);
        let xs = ep_numeric_solve(sol.value(0.0), sol.derivative(0.0), sol.freq, sol.cubic, &grid).unwrap();
        assert!((xs.last().unwrap() - sol.value(10.0)).abs() <= 1e-6);
    }

    #[test]
    fn numeric_solver_smoke_and_abort() {
        // with Φ = λ = 0 the solution is (1 − 5t)⁻², blowing up at t = 0.2
        assert!(ep_numeric_solve(1.0, 10.0, 1.0, 0.0, &uniform_grid(0.1, 1e-3)).is_ok());
        let err = ep_numeric_solve(1.0, 10.0, 0.0, 0.0, &uniform_grid(1.0, 1e-3)).unwrap_err();
        assert!(matches!(err, Error::SingularTrajectory { .. }), "{err}");
    }

    proptest! {
        #[test]
        fn constraint_holds_for_every_spin_and_branch(
            c2 in -2.0f64..2.0, c3 in -2.0f64..2.0, g in -0.95f64..0.95,
            si in 0usize..3, neg in any::<bool>(), t in 0.0f64..20.0,
        ) {
            let p = ModelParams::new(Spin::ALL[si], g, 0.5);
            let sol = EPSolution::for_spin(&p, c2, c3, if neg { -1 } else { 1 }).unwrap();
            prop_assert!(sol.constraint_residual(t) <= 1e-9);
            let abc = sol.abc();
            prop_assert!(abc.defect(sol.freq).abs() <= 1e-9);
            if !neg {
                prop_assert!(sol.value(t) > 0.0);
                let sigma = ep_sigma(&abc, sol.freq, t).unwrap();
                prop_assert!((sol.chi_from_sigma(sigma) - sol.value(t)).abs() <= 1e-9 * sol.value(t).max(1.0));
                prop_assert!(ep_sigma_residual(&abc, sol.freq, t).unwrap() <= 1e-9);
            }
        }
    }
}
