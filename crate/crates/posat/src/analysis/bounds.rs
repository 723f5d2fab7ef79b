//! Analytical worst-case bounds on the price of satisficing.

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Piecewise worst-case bound for degree-`n` polynomial costs:
///
/// * `(1+kappa)^(n+1)` for `kappa >= (n+1)^(1/n) - 1`, and
/// * `(1/(1+kappa) - n/(n+1)^((n+1)/n))^(-1)` below that threshold.
///
/// The two branches agree at the threshold. `degree == 0` is handled as the
/// `n -> 0` limit, where both branches collapse to `1 + kappa` (an
/// extrapolation of the formula: constant costs make every satisficing flow
/// cost at most `1+kappa` times the equilibrium).
pub fn zeta_bound(kappa: f64, degree: u32) -> Result<f64> {
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(Error::NegativeKappa(kappa));
    }
    if degree == 0 {
        return Ok(1.0 + kappa);
    }
    let n = f64::from(degree);
    let threshold = (n + 1.0).powf(1.0 / n) - 1.0;
    if kappa >= threshold {
        Ok(crate::cost::ipow(1.0 + kappa, degree + 1))
    } else {
        Ok(1.0 / (1.0 / (1.0 + kappa) - n / (n + 1.0).powf((n + 1.0) / n)))
    }
}

/// The demand-scaling bound `(1+kappa)^(n+1)`: the supremum of the price of
/// satisficing over all degree-`n` instances, attained on ring networks.
pub fn simple_posat_bound(kappa: f64, degree: u32) -> Result<f64> {
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(Error::NegativeKappa(kappa));
    }
    Ok(crate::cost::ipow(1.0 + kappa, degree + 1))
}

/// Single-origin deviation bound `1 + kappa * ceil((|N|-1)/2) * Q` with `Q`
/// the total demand. Requires every OD pair to share one origin node.
pub fn deviation_ratio_bound(inst: &Instance, kappa: f64) -> Result<f64> {
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(Error::NegativeKappa(kappa));
    }
    let mut origins = inst.demands.pairs().iter().map(|p| p.origin);
    let first = match origins.next() {
        Some(o) => o,
        None => return Ok(1.0),
    };
    if origins.any(|o| o != first) {
        return Err(Error::MultipleOrigins);
    }
    let q = inst.demands.total_demand();
    let half_nodes = (inst.network.num_nodes() - 1).div_ceil(2);
    Ok(1.0 + kappa * half_nodes as f64 * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_example1;

    #[test]
    fn zeta_known_values() {
        assert!((zeta_bound(0.0, 1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        // threshold for n = 1 is exactly 1: upper branch gives (1+1)^2
        assert!((zeta_bound(1.0, 1).unwrap() - 4.0).abs() < 1e-15);
        // lower branch at n = 1 reduces to 4(1+kappa)/(3-kappa)
        let kappa = 0.5;
        assert!((zeta_bound(kappa, 1).unwrap() - 2.4).abs() < 1e-12);
        for kappa in [0.0, 0.3, 0.7, 0.99] {
            let direct = 4.0 * (1.0 + kappa) / (3.0 - kappa);
            assert!((zeta_bound(kappa, 1).unwrap() - direct).abs() < 1e-12);
        }
        assert!(zeta_bound(-0.1, 1).is_err());
    }

    #[test]
    fn zeta_branches_are_continuous() {
        for degree in 1..=4u32 {
            let n = f64::from(degree);
            let threshold = (n + 1.0).powf(1.0 / n) - 1.0;
            let upper = crate::cost::ipow(1.0 + threshold, degree + 1);
            let lower = zeta_bound(threshold * (1.0 - 1e-14), degree).unwrap();
            assert!(
                (upper - lower).abs() < 1e-9,
                "degree {degree}: {upper} vs {lower}"
            );
        }
    }

    #[test]
    fn zeta_degree_zero_limit() {
        assert!((zeta_bound(0.4, 0).unwrap() - 1.4).abs() < 1e-15);
        assert!((zeta_bound(3.0, 0).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn simple_bound_values() {
        assert_eq!(simple_posat_bound(0.0, 3).unwrap(), 1.0);
        assert_eq!(simple_posat_bound(1.0, 4).unwrap(), 32.0);
        assert!((simple_posat_bound(0.2, 1).unwrap() - 1.44).abs() < 1e-12);
    }

    #[test]
    fn deviation_bound_values() {
        let (q, kappa) = (1.0, 0.5);
        let inst = gen_example1(q).unwrap();
        // two nodes: ceil(1/2) = 1, bound is 1 + kappa * Q
        assert!((deviation_ratio_bound(&inst, kappa).unwrap() - (1.0 + kappa * q)).abs() < 1e-15);
        assert_eq!(deviation_ratio_bound(&inst, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn deviation_bound_five_nodes() {
        use crate::cost::{CostTerm, PolynomialCost};
        use crate::net::{DemandTable, Network};
        let net = Network::new(vec![1, 2, 3, 4, 5], &[(1, 2), (1, 3), (1, 4), (1, 5)]).unwrap();
        let demands = DemandTable::new(&net, &[(1, 2, 1.0), (1, 3, 1.0)]).unwrap();
        let cost = PolynomialCost::new(
            (0..4)
                .map(|a| vec![CostTerm::separable(a, 1, 1.0)])
                .collect(),
            1,
        )
        .unwrap();
        let inst = Instance::new(net, demands, cost).unwrap();
        // ceil(4/2) = 2, Q = 2: bound = 1 + 0.5 * 2 * 2 = 3
        assert!((deviation_ratio_bound(&inst, 0.5).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn deviation_bound_rejects_multiple_origins() {
        use crate::cost::{CostTerm, PolynomialCost};
        use crate::net::{DemandTable, Network};
        let net = Network::new(vec![1, 2, 3], &[(1, 3), (2, 3)]).unwrap();
        let demands = DemandTable::new(&net, &[(1, 3, 1.0), (2, 3, 1.0)]).unwrap();
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 1, 1.0)],
                vec![CostTerm::separable(1, 1, 1.0)],
            ],
            1,
        )
        .unwrap();
        let inst = Instance::new(net, demands, cost).unwrap();
        assert!(matches!(
            deviation_ratio_bound(&inst, 0.1),
            Err(Error::MultipleOrigins)
        ));
    }
}
