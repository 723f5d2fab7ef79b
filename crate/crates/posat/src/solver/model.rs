//! Separable arc models driving the Frank-Wolfe engine. Each model exposes a
//! per-arc price (the direction-finding cost) and a per-arc objective term
//! whose sum the iteration provably decreases.

use crate::cost::{ipow, PolynomialCost};
use crate::net::ArcFlow;

pub(crate) trait ArcModel {
    /// Price of arc `a` at own-flow argument `u`.
    fn price(&self, a: usize, u: f64) -> f64;
    /// Objective contribution of arc `a` at own-flow argument `u`.
    fn objective(&self, a: usize, u: f64) -> f64;
}

/// Separable user equilibrium: price is the travel time, objective is its
/// integral (the equilibrium potential).
pub(crate) struct UePotential<'a> {
    pub cost: &'a PolynomialCost,
}

impl ArcModel for UePotential<'_> {
    fn price(&self, a: usize, u: f64) -> f64 {
        self.cost.separable_time(a, u)
    }

    fn objective(&self, a: usize, u: f64) -> f64 {
        self.cost.separable_time_integral(a, u)
    }
}

/// System optimum: price is the marginal total travel time
/// `t_a(u) + u t_a'(u)`, objective is `u t_a(u)` itself.
pub(crate) struct SystemObjective<'a> {
    pub cost: &'a PolynomialCost,
}

impl ArcModel for SystemObjective<'_> {
    fn price(&self, a: usize, u: f64) -> f64 {
        let t: f64 = self.cost.separable_time(a, u);
        let dt: f64 = self
            .cost
            .terms(a)
            .iter()
            .filter(|term| term.exponent >= 1)
            .map(|term| term.coeff * f64::from(term.exponent) * ipow(u, term.exponent - 1))
            .sum();
        t + u * dt
    }

    fn objective(&self, a: usize, u: f64) -> f64 {
        u * self.cost.separable_time(a, u)
    }
}

/// One frozen monomial `b (w u + c)^m` of a diagonalized subproblem.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrozenTerm {
    pub b: f64,
    pub w: f64,
    pub c: f64,
    pub m: u32,
}

/// Separable view of a (possibly asymmetric, possibly perception-scaled)
/// cost with everything but each arc's own argument frozen.
pub(crate) struct FrozenModel {
    terms: Vec<Vec<FrozenTerm>>,
}

impl FrozenModel {
    /// Freeze all cross-arc interactions at the arc flows `v`; each arc's own
    /// flow stays variable. With separable costs this reproduces the original
    /// model exactly.
    pub fn cross_frozen(cost: &PolynomialCost, v: &ArcFlow) -> FrozenModel {
        FrozenModel::build(cost, v, None, None)
    }

    /// Per-class freeze: class `class_row`'s own-arc flow becomes the
    /// variable, everything else (other classes everywhere, this class on
    /// other arcs) is frozen inside `v`. Prices are scaled by the class's
    /// perception multipliers when given.
    pub fn class_frozen(
        cost: &PolynomialCost,
        v: &ArcFlow,
        class_row: &[f64],
        lambda_row: Option<&[f64]>,
    ) -> FrozenModel {
        FrozenModel::build(cost, v, Some(class_row), lambda_row)
    }

    fn build(
        cost: &PolynomialCost,
        v: &ArcFlow,
        class_row: Option<&[f64]>,
        lambda_row: Option<&[f64]>,
    ) -> FrozenModel {
        let terms = (0..cost.num_arcs())
            .map(|a| {
                let scale = lambda_row.map_or(1.0, |l| l[a]);
                let removed = class_row.map_or(v[a], |row| row[a]);
                cost.terms(a)
                    .iter()
                    .map(|t| {
                        let w = t
                            .interaction
                            .iter()
                            .find(|&&(e, _)| e == a)
                            .map_or(0.0, |&(_, w)| w);
                        let full: f64 = t.interaction.iter().map(|&(e, we)| we * v[e]).sum();
                        FrozenTerm {
                            b: scale * t.coeff,
                            w,
                            c: full - w * removed,
                            m: t.exponent,
                        }
                    })
                    .collect()
            })
            .collect();
        FrozenModel { terms }
    }
}

impl ArcModel for FrozenModel {
    fn price(&self, a: usize, u: f64) -> f64 {
        self.terms[a]
            .iter()
            .map(|t| t.b * ipow(t.w * u + t.c, t.m))
            .sum()
    }

    fn objective(&self, a: usize, u: f64) -> f64 {
        self.terms[a]
            .iter()
            .map(|t| {
                if t.w > 0.0 {
                    t.b * (ipow(t.w * u + t.c, t.m + 1) - ipow(t.c, t.m + 1))
                        / (t.w * f64::from(t.m + 1))
                } else {
                    t.b * ipow(t.c, t.m) * u
                }
            })
            .sum()
    }
}
