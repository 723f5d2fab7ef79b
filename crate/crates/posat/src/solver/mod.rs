//! Equilibrium solvers: separable user equilibrium and system optimum by
//! Frank-Wolfe, asymmetric user equilibrium by diagonalization, and
//! perception-error equilibrium by per-class diagonalization. All solvers are
//! deterministic given their inputs.

mod frank_wolfe;
mod kkt;
mod model;
mod polish;
mod uepe;

pub use frank_wolfe::{solve_prue, solve_prue_warm_start, solve_so};
pub use kkt::{kkt_certificate, KktReport};
pub use uepe::{solve_prue_diagonalization, solve_uepe, solve_uepe_warm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::net::{ArcFlow, ClassFlow};

/// Convergence controls shared by every solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative-gap convergence target.
    pub tol: f64,
    /// Iteration cap (Frank-Wolfe iterations, or outer passes for the
    /// fixed-point solvers).
    pub max_iters: usize,
}

impl SolverOptions {
    /// Defaults for separable Frank-Wolfe solves.
    pub fn frank_wolfe() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iters: 50_000,
        }
    }

    /// Defaults for diagonalization / perception-error solves.
    pub fn fixed_point() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iters: 50_000,
        }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        SolverOptions { tol, ..self }
    }

    pub fn with_max_iters(self, max_iters: usize) -> Self {
        SolverOptions { max_iters, ..self }
    }
}

/// Converged (or best-effort) equilibrium flow with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub x: ClassFlow,
    pub v: ArcFlow,
    /// Total system travel time at `v`, under the instance's true costs.
    pub z: f64,
    /// Final relative gap (perceived gap for perception-error solves).
    pub relative_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-OD shortest-path cost at the final flows (perceived costs for
    /// perception-error solves).
    pub od_costs: Vec<f64>,
}

/// Per-OD, per-arc perception multipliers in `[1/(1+kappa), 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaField {
    kappa: f64,
    num_arcs: usize,
    values: Vec<f64>,
}

impl LambdaField {
    pub fn new(kappa: f64, num_ods: usize, num_arcs: usize, values: Vec<f64>) -> Result<Self> {
        if kappa < 0.0 {
            return Err(Error::NegativeKappa(kappa));
        }
        if values.len() != num_ods * num_arcs {
            return Err(Error::InvalidNetwork(format!(
                "lambda field has {} entries, expected {}",
                values.len(),
                num_ods * num_arcs
            )));
        }
        let lo = 1.0 / (1.0 + kappa);
        let mut field = LambdaField {
            kappa,
            num_arcs,
            values,
        };
        for (i, v) in field.values.iter_mut().enumerate() {
            // tolerate rounding at the box faces, reject anything further out
            if *v < lo - 1e-9 || *v > 1.0 + 1e-9 {
                return Err(Error::LambdaOutOfRange {
                    od: Some(i / num_arcs),
                    arc: i % num_arcs,
                    value: *v,
                });
            }
            *v = v.clamp(lo, 1.0);
        }
        Ok(field)
    }

    /// The identity perception: every multiplier 1.
    pub fn all_ones(kappa: f64, num_ods: usize, num_arcs: usize) -> Result<Self> {
        LambdaField::new(kappa, num_ods, num_arcs, vec![1.0; num_ods * num_arcs])
    }

    /// Every multiplier at the box floor `1/(1+kappa)`.
    pub fn all_lower(kappa: f64, num_ods: usize, num_arcs: usize) -> Result<Self> {
        let lo = 1.0 / (1.0 + kappa);
        LambdaField::new(kappa, num_ods, num_arcs, vec![lo; num_ods * num_arcs])
    }

    /// Independent uniform draws from the box.
    pub fn random<R: rand::Rng>(
        kappa: f64,
        num_ods: usize,
        num_arcs: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let lo = 1.0 / (1.0 + kappa);
        let values = (0..num_ods * num_arcs)
            .map(|_| rng.random_range(lo..=1.0))
            .collect();
        LambdaField::new(kappa, num_ods, num_arcs, values)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lower_bound(&self) -> f64 {
        1.0 / (1.0 + self.kappa)
    }

    pub fn num_ods(&self) -> usize {
        self.values.len().checked_div(self.num_arcs).unwrap_or(0)
    }

    pub fn num_arcs(&self) -> usize {
        self.num_arcs
    }

    pub fn get(&self, od: usize, arc: usize) -> f64 {
        self.values[od * self.num_arcs + arc]
    }

    pub fn set(&mut self, od: usize, arc: usize, value: f64) {
        self.values[od * self.num_arcs + arc] = value;
    }

    pub fn class(&self, od: usize) -> &[f64] {
        &self.values[od * self.num_arcs..(od + 1) * self.num_arcs]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same multipliers reinterpreted in a wider box (larger kappa). Valid
    /// because the boxes are nested.
    pub fn widened(&self, kappa: f64) -> Result<LambdaField> {
        if kappa < self.kappa {
            return Err(Error::NegativeKappa(kappa - self.kappa));
        }
        LambdaField::new(kappa, self.num_ods(), self.num_arcs, self.values.clone())
    }

    /// Affinely rescale each multiplier's position in the old box into a new box.
    pub fn rescaled(&self, kappa: f64) -> Result<LambdaField> {
        if kappa < 0.0 {
            return Err(Error::NegativeKappa(kappa));
        }
        let old_lo = self.lower_bound();
        let new_lo = 1.0 / (1.0 + kappa);
        let values = self
            .values
            .iter()
            .map(|&v| {
                let t = if old_lo < 1.0 {
                    (v - old_lo) / (1.0 - old_lo)
                } else {
                    1.0
                };
                new_lo + t * (1.0 - new_lo)
            })
            .collect();
        LambdaField::new(kappa, self.num_ods(), self.num_arcs, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_field_box_validation() {
        assert!(LambdaField::new(0.5, 1, 2, vec![0.5, 1.0]).is_err()); // below 1/1.5
        assert!(LambdaField::new(0.5, 1, 2, vec![0.7, 1.2]).is_err()); // above 1
        let field = LambdaField::new(0.5, 1, 2, vec![2.0 / 3.0, 1.0]).unwrap();
        assert!((field.lower_bound() - 2.0 / 3.0).abs() < 1e-15);
        assert!(LambdaField::new(-0.1, 1, 2, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn lambda_field_widen_and_rescale() {
        let field = LambdaField::new(0.5, 1, 2, vec![2.0 / 3.0, 1.0]).unwrap();
        // widening keeps values, changes the box
        let wide = field.widened(1.0).unwrap();
        assert_eq!(wide.values(), field.values());
        assert!(field.widened(0.2).is_err());
        // rescaling maps the floor to the new floor and keeps 1 fixed
        let rescaled = field.rescaled(1.0).unwrap();
        assert!((rescaled.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(rescaled.get(0, 1), 1.0);
    }
}

/// Dispatch on cost structure: Frank-Wolfe when separable, diagonalization
/// otherwise.
pub fn solve_prue_auto(inst: &Instance, opts: SolverOptions) -> Result<EquilibriumReport> {
    if inst.cost.is_separable() {
        solve_prue(inst, opts)
    } else {
        solve_prue_diagonalization(inst, opts)
    }
}
