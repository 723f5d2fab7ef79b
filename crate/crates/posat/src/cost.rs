//! Polynomial arc travel-time functions and the quantities derived from them.
//!
//! Every arc time has the form `t_a(v) = sum_m b_am * (d_am . v)^m` with
//! nonnegative coefficients. When each interaction vector `d_am` is the unit
//! vector on the arc itself the cost is *separable*, `t_a(v_a)`, and admits a
//! potential whose minimizer over the feasible set is the user equilibrium.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{ArcFlow, DemandTable, Network};

/// One monomial term of an arc travel-time function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    /// Exponent `m >= 0`.
    pub exponent: u32,
    /// Coefficient `b >= 0`, in time units per flow^m.
    pub coeff: f64,
    /// Sparse interaction vector: `(arc id, weight >= 0)` pairs. The term
    /// argument is the weighted sum of those arcs' flows.
    pub interaction: Vec<(usize, f64)>,
}

impl CostTerm {
    /// Separable term `b * v_a^m` for arc `arc`.
    pub fn separable(arc: usize, exponent: u32, coeff: f64) -> Self {
        CostTerm {
            exponent,
            coeff,
            interaction: vec![(arc, 1.0)],
        }
    }

    fn argument(&self, v: &[f64]) -> f64 {
        self.interaction.iter().map(|&(e, w)| w * v[e]).sum()
    }
}

/// Travel-time functions for every arc of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialCost {
    /// Terms per arc, indexed by arc id.
    arcs: Vec<Vec<CostTerm>>,
    /// Declared polynomial degree `n` of the whole family.
    degree: u32,
}

/// Integer power by repeated multiplication; exact for the small degrees used
/// throughout (n <= 4 in all benchmark instances).
#[inline]
pub fn ipow(x: f64, m: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..m {
        acc *= x;
    }
    acc
}

impl PolynomialCost {
    pub fn new(arcs: Vec<Vec<CostTerm>>, degree: u32) -> Result<Self> {
        for (a, terms) in arcs.iter().enumerate() {
            for term in terms {
                if term.coeff < 0.0 || !term.coeff.is_finite() {
                    return Err(Error::InvalidNetwork(format!(
                        "negative or non-finite coefficient {} on arc {a}",
                        term.coeff
                    )));
                }
                if term.exponent > degree {
                    return Err(Error::InvalidNetwork(format!(
                        "term exponent {} on arc {a} exceeds declared degree {degree}",
                        term.exponent
                    )));
                }
                for &(e, w) in &term.interaction {
                    if e >= arcs.len() {
                        return Err(Error::InvalidNetwork(format!(
                            "interaction with unknown arc {e}"
                        )));
                    }
                    if w < 0.0 || !w.is_finite() {
                        return Err(Error::InvalidNetwork(format!(
                            "negative interaction weight {w} on arc {a}"
                        )));
                    }
                }
            }
        }
        Ok(PolynomialCost { arcs, degree })
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self, arc: usize) -> &[CostTerm] {
        &self.arcs[arc]
    }

    /// True when every interaction vector is the unit vector on its own arc.
    pub fn is_separable(&self) -> bool {
        self.first_nonseparable().is_none()
    }

    pub(crate) fn first_nonseparable(&self) -> Option<usize> {
        self.arcs.iter().enumerate().find_map(|(a, terms)| {
            let sep = terms.iter().all(|t| {
                t.exponent == 0 || (t.interaction.len() == 1 && t.interaction[0] == (a, 1.0))
            });
            (!sep).then_some(a)
        })
    }

    pub(crate) fn require_separable(&self) -> Result<()> {
        match self.first_nonseparable() {
            Some(a) => Err(Error::NotSeparable(a)),
            None => Ok(()),
        }
    }

    /// Travel time on every arc at flow `v`.
    pub fn arc_times(&self, v: &ArcFlow) -> Vec<f64> {
        let mut t = vec![0.0; self.arcs.len()];
        self.arc_times_into(v, &mut t);
        t
    }

    pub(crate) fn arc_times_into(&self, v: &ArcFlow, out: &mut [f64]) {
        for (a, terms) in self.arcs.iter().enumerate() {
            out[a] = terms
                .iter()
                .map(|term| term.coeff * ipow(term.argument(&v.0), term.exponent))
                .sum();
        }
    }

    /// Separable arc time `t_a(u)` evaluated at a scalar own-flow argument.
    pub(crate) fn separable_time(&self, arc: usize, u: f64) -> f64 {
        self.arcs[arc]
            .iter()
            .map(|t| t.coeff * ipow(u, t.exponent))
            .sum()
    }

    /// Antiderivative of the separable arc time at `u` (zero at zero).
    pub(crate) fn separable_time_integral(&self, arc: usize, u: f64) -> f64 {
        self.arcs[arc]
            .iter()
            .map(|t| t.coeff * ipow(u, t.exponent + 1) / f64::from(t.exponent + 1))
            .sum()
    }

    /// Total system travel time `Z(v) = sum_a t_a(v) v_a`.
    pub fn total_travel_time(&self, v: &ArcFlow) -> f64 {
        self.arc_times(v)
            .iter()
            .zip(&v.0)
            .map(|(t, va)| t * va)
            .sum()
    }

    /// Cost of a path (arc-id sequence) at flow `v`.
    pub fn path_cost(&self, v: &ArcFlow, path: &[usize]) -> f64 {
        let t = self.arc_times(v);
        path.iter().map(|&a| t[a]).sum()
    }

    /// Potential whose minimizer over the feasible set is the user
    /// equilibrium: `sum_a integral_0^{v_a} t_a(u) du`, in closed form.
    pub fn beckmann_potential(&self, v: &ArcFlow) -> Result<f64> {
        self.require_separable()?;
        Ok((0..self.arcs.len())
            .map(|a| self.separable_time_integral(a, v[a]))
            .sum())
    }

    /// Per-arc scaled potential `sum_a lambda_a * integral_0^{v_a} t_a(u) du`.
    pub fn perceived_potential(&self, v: &ArcFlow, lambda: &[f64]) -> Result<f64> {
        self.require_separable()?;
        if lambda.len() != self.arcs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} multipliers for {} arcs",
                lambda.len(),
                self.arcs.len()
            )));
        }
        for (arc, &l) in lambda.iter().enumerate() {
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::LambdaOutOfRange {
                    od: None,
                    arc,
                    value: l,
                });
            }
        }
        Ok((0..self.arcs.len())
            .map(|a| lambda[a] * self.separable_time_integral(a, v[a]))
            .sum())
    }

    /// Gradient of the total travel time:
    /// `dZ/dv_a = t_a(v) + sum_e v_e * dt_e/dv_a`, in closed form.
    pub fn total_time_gradient(&self, v: &ArcFlow) -> Vec<f64> {
        let mut grad = self.arc_times(v);
        for (e, terms) in self.arcs.iter().enumerate() {
            let ve = v[e];
            if ve == 0.0 {
                continue;
            }
            for term in terms {
                if term.exponent == 0 {
                    continue;
                }
                let factor = ve
                    * term.coeff
                    * f64::from(term.exponent)
                    * ipow(term.argument(&v.0), term.exponent - 1);
                for &(a, w) in &term.interaction {
                    grad[a] += factor * w;
                }
            }
        }
        grad
    }

    /// Joint travel times and total, bundled for reporting.
    pub fn evaluate(&self, v: &ArcFlow) -> CostEvaluation {
        let times = self.arc_times(v);
        let total = times.iter().zip(&v.0).map(|(t, va)| t * va).sum();
        CostEvaluation { times, total }
    }
}

/// Arc travel times plus the total system travel time at one flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostEvaluation {
    pub times: Vec<f64>,
    pub total: f64,
}

/// Inner product `(t(v1) - t(v2)) . (v1 - v2)` that defines monotonicity.
pub fn monotonicity_inner(cost: &PolynomialCost, v1: &ArcFlow, v2: &ArcFlow) -> f64 {
    let t1 = cost.arc_times(v1);
    let t2 = cost.arc_times(v2);
    t1.iter()
        .zip(&t2)
        .zip(v1.0.iter().zip(&v2.0))
        .map(|((a, b), (x, y))| (a - b) * (x - y))
        .sum()
}

/// Sampled monotonicity diagnostic over random feasible flow pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Smallest observed inner product; negative values mean the sampled
    /// region is not monotone.
    pub min_inner: f64,
    /// Smallest observed `inner / ||v1 - v2||^2`: an estimated strong-
    /// monotonicity modulus. `None` when every sampled pair coincided.
    pub alpha_estimate: Option<f64>,
}

/// Probe monotonicity of the travel-time map on random feasible flows.
///
/// This is a diagnostic, not a proof: path-cost maps are not strongly
/// monotone in general, so the modulus is only estimated by sampling.
pub fn monotonicity_probe(
    net: &Network,
    demands: &DemandTable,
    cost: &PolynomialCost,
    samples: usize,
    seed: u64,
) -> MonotonicityReport {
    use rand::{rngs::StdRng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    let mut min_inner = f64::INFINITY;
    let mut alpha: Option<f64> = None;
    let mut taken = 0;
    for _ in 0..samples {
        let (Some(x1), Some(x2)) = (
            crate::net::random_class_flow(net, demands, &mut rng),
            crate::net::random_class_flow(net, demands, &mut rng),
        ) else {
            continue;
        };
        let v1 = crate::net::aggregate_to_arcflow(&x1);
        let v2 = crate::net::aggregate_to_arcflow(&x2);
        let inner = monotonicity_inner(cost, &v1, &v2);
        min_inner = min_inner.min(inner);
        let norm2: f64 = v1.0.iter().zip(&v2.0).map(|(a, b)| (a - b) * (a - b)).sum();
        if norm2 > 1e-24 {
            let ratio = inner / norm2;
            alpha = Some(alpha.map_or(ratio, |c: f64| c.min(ratio)));
        }
        taken += 1;
    }
    MonotonicityReport {
        samples: taken,
        min_inner: if taken == 0 { 0.0 } else { min_inner },
        alpha_estimate: alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_and_linear() -> PolynomialCost {
        // arc 0: t = 1, arc 1: t = 1 + v
        PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 0, 1.0)],
                vec![
                    CostTerm::separable(1, 0, 1.0),
                    CostTerm::separable(1, 1, 1.0),
                ],
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn constant_arc_time_ignores_flow() {
        let cost = constant_and_linear();
        for v in [0.0, 1.0, 17.5] {
            let t = cost.arc_times(&ArcFlow(vec![v, v]));
            assert_eq!(t[0], 1.0);
            assert_eq!(t[1], 1.0 + v);
        }
    }

    #[test]
    fn zero_flow_zero_intercept() {
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 1, 1.0)],
                vec![CostTerm::separable(1, 1, 1.0)],
            ],
            1,
        )
        .unwrap();
        assert_eq!(cost.arc_times(&ArcFlow(vec![0.0, 0.0])), vec![0.0, 0.0]);
        assert_eq!(cost.total_travel_time(&ArcFlow(vec![0.0, 0.0])), 0.0);
    }

    #[test]
    fn cross_arc_interaction_time() {
        // t_0 = 12 + (1.80 / 5^4) * (v_0 + 0.5 v_1)^4, evaluated at (5, 0)
        let cost = PolynomialCost::new(
            vec![
                vec![
                    CostTerm {
                        exponent: 0,
                        coeff: 12.0,
                        interaction: vec![],
                    },
                    CostTerm {
                        exponent: 4,
                        coeff: 1.80 / ipow(5.0, 4),
                        interaction: vec![(0, 1.0), (1, 0.5)],
                    },
                ],
                vec![CostTerm::separable(1, 0, 12.0)],
            ],
            4,
        )
        .unwrap();
        let t = cost.arc_times(&ArcFlow(vec![5.0, 0.0]));
        assert!((t[0] - 13.8).abs() < 1e-12);
        assert!(!cost.is_separable());
    }

    #[test]
    fn empty_path_costs_zero() {
        let cost = constant_and_linear();
        assert_eq!(cost.path_cost(&ArcFlow(vec![3.0, 4.0]), &[]), 0.0);
    }

    #[test]
    fn beckmann_monomial_and_symmetric_split() {
        // monomial b * v^n at v = 1 contributes b / (n + 1)
        let cost = PolynomialCost::new(vec![vec![CostTerm::separable(0, 3, 2.0)]], 3).unwrap();
        let phi = cost.beckmann_potential(&ArcFlow(vec![1.0])).unwrap();
        assert!((phi - 2.0 / 4.0).abs() < 1e-15);
        assert_eq!(cost.beckmann_potential(&ArcFlow(vec![0.0])).unwrap(), 0.0);

        // identity costs on two arcs at the even split: phi = Q^2 / 4
        let q = 3.0;
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 1, 1.0)],
                vec![CostTerm::separable(1, 1, 1.0)],
            ],
            1,
        )
        .unwrap();
        let phi = cost
            .beckmann_potential(&ArcFlow(vec![q / 2.0, q / 2.0]))
            .unwrap();
        assert!((phi - q * q / 4.0).abs() < 1e-12);
    }

    #[test]
    fn perceived_potential_identity_and_scaling() {
        let cost = constant_and_linear();
        let v = ArcFlow(vec![0.4, 0.6]);
        let phi = cost.beckmann_potential(&v).unwrap();
        let same = cost.perceived_potential(&v, &[1.0, 1.0]).unwrap();
        assert!((same - phi).abs() < 1e-15);
        let scaled = cost.perceived_potential(&v, &[0.5, 0.5]).unwrap();
        assert!((scaled - 0.5 * phi).abs() < 1e-15);
        assert!(cost.perceived_potential(&v, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn perceived_potential_uniform_scaling_of_monomials() {
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 2, 1.5)],
                vec![CostTerm::separable(1, 2, 0.5)],
            ],
            2,
        )
        .unwrap();
        let v = ArcFlow(vec![1.0, 2.0]);
        let kappa = 0.5;
        let l = 1.0 / (1.0 + kappa);
        let psi = cost.perceived_potential(&v, &[l, l]).unwrap();
        let phi = cost.beckmann_potential(&v).unwrap();
        assert!((psi - phi / (1.0 + kappa)).abs() < 1e-12);
    }

    #[test]
    fn beckmann_requires_separable() {
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm {
                    exponent: 1,
                    coeff: 1.0,
                    interaction: vec![(1, 1.0)],
                }],
                vec![],
            ],
            1,
        )
        .unwrap();
        assert!(matches!(
            cost.beckmann_potential(&ArcFlow(vec![0.0, 0.0])),
            Err(Error::NotSeparable(0))
        ));
    }

    #[test]
    fn marginal_cost_monomial_and_constant() {
        // t = v^n with flow l on the arc: marginal is (n + 1) l^n
        let n = 3u32;
        let l = 2.0;
        let cost = PolynomialCost::new(vec![vec![CostTerm::separable(0, n, 1.0)]], n).unwrap();
        let grad = cost.total_time_gradient(&ArcFlow(vec![l]));
        assert!((grad[0] - 4.0 * ipow(l, 3)).abs() < 1e-12);

        let cost = constant_and_linear();
        let grad = cost.total_time_gradient(&ArcFlow(vec![5.0, 0.0]));
        assert_eq!(grad[0], 1.0);
    }

    #[test]
    fn marginal_cost_matches_finite_differences() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        // random asymmetric three-arc cost family
        let mut arcs = Vec::new();
        for a in 0..3usize {
            let mut terms = vec![CostTerm::separable(a, 0, rng.random_range(0.1..1.0))];
            for m in 1..=3u32 {
                let interaction = (0..3)
                    .map(|e| {
                        (
                            e,
                            if e == a {
                                1.0
                            } else {
                                rng.random_range(0.0..0.6)
                            },
                        )
                    })
                    .collect();
                terms.push(CostTerm {
                    exponent: m,
                    coeff: rng.random_range(0.0..0.8),
                    interaction,
                });
            }
            arcs.push(terms);
        }
        let cost = PolynomialCost::new(arcs, 3).unwrap();
        let v = ArcFlow(vec![
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..2.0),
        ]);
        let grad = cost.total_time_gradient(&v);
        let h = 1e-5 * v.max_norm().max(1.0);
        for a in 0..3 {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp.0[a] += h;
            vm.0[a] -= h;
            let fd = (cost.total_travel_time(&vp) - cost.total_travel_time(&vm)) / (2.0 * h);
            let denom = grad[a].abs().max(1.0);
            assert!(
                (grad[a] - fd).abs() / denom <= 1e-6,
                "arc {a}: analytic {} vs fd {fd}",
                grad[a]
            );
        }
    }

    #[test]
    fn monotonicity_inner_zero_for_constant_costs() {
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 0, 2.0)],
                vec![CostTerm::separable(1, 0, 3.0)],
            ],
            0,
        )
        .unwrap();
        let a = ArcFlow(vec![1.0, 0.0]);
        let b = ArcFlow(vec![0.25, 0.75]);
        assert_eq!(monotonicity_inner(&cost, &a, &b), 0.0);
    }

    #[test]
    fn monotonicity_inner_zero_when_only_constant_arc_differs() {
        let cost = constant_and_linear();
        let a = ArcFlow(vec![1.0, 0.5]);
        let b = ArcFlow(vec![0.2, 0.5]);
        assert_eq!(monotonicity_inner(&cost, &a, &b), 0.0);
    }
}
