//! Problem instances: network + demands + travel-time functions, the JSON
//! exchange format, and generators for the closed-form benchmark families.

use serde::{Deserialize, Serialize};

use crate::cost::{CostTerm, PolynomialCost};
use crate::error::{Error, Result};
use crate::net::{ClassFlow, DemandTable, Network};

/// A complete traffic-assignment instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: Network,
    pub demands: DemandTable,
    pub cost: PolynomialCost,
    /// Generator provenance, when known. Carried through JSON round trips.
    pub meta: Option<InstanceMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circular: Option<CircularMeta>,
}

/// Ring-network construction parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CircularMeta {
    /// Hops on the long (clockwise) route of every OD pair.
    pub long_hops: u64,
    /// Hops on the short (counterclockwise) route.
    pub short_hops: u64,
    /// Exact indifference level: `long_hops / short_hops - 1`.
    pub kappa: f64,
}

/// How the long/short hop ratio of [`gen_circular`] is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircularRatio {
    /// Hop ratio equals `1 + kappa` directly.
    RatioIsKappa,
    /// Hop ratio chosen so the worst/best total-travel-time ratio of the
    /// instance, `(m/l)^(n+1)`, hits `(1+kappa)^5`.
    RatioIsPosat,
}

impl Instance {
    pub fn new(network: Network, demands: DemandTable, cost: PolynomialCost) -> Result<Self> {
        if cost.num_arcs() != network.num_arcs() {
            return Err(Error::InvalidNetwork(format!(
                "cost table covers {} arcs, network has {}",
                cost.num_arcs(),
                network.num_arcs()
            )));
        }
        Ok(Instance {
            network,
            demands,
            cost,
            meta: None,
        })
    }

    pub fn num_arcs(&self) -> usize {
        self.network.num_arcs()
    }

    pub fn num_ods(&self) -> usize {
        self.demands.len()
    }

    /// Same network and costs with every demand multiplied by `1 + kappa`.
    pub fn scale_demands(&self, kappa: f64) -> Result<Instance> {
        if kappa < 0.0 {
            return Err(Error::NegativeKappa(kappa));
        }
        Ok(Instance {
            demands: self.demands.scale(1.0 + kappa),
            ..self.clone()
        })
    }
}

/// Two parallel routes, one constant and one linear: `t_1 = 1`, `t_2 = 1 + v_2`.
pub fn gen_example1(q: f64) -> Result<Instance> {
    if q <= 0.0 || !q.is_finite() {
        return Err(Error::NonpositiveDemand(q));
    }
    let network = Network::new(vec![1, 2], &[(1, 2), (1, 2)])?;
    let demands = DemandTable::new(&network, &[(1, 2, q)])?;
    let cost = PolynomialCost::new(
        vec![
            vec![CostTerm::separable(0, 0, 1.0)],
            vec![
                CostTerm::separable(1, 0, 1.0),
                CostTerm::separable(1, 1, 1.0),
            ],
        ],
        1,
    )?;
    Instance::new(network, demands, cost)
}

/// Two parallel identity-cost routes: `t_1 = v_1`, `t_2 = v_2`.
pub fn gen_example2(q: f64) -> Result<Instance> {
    if q <= 0.0 || !q.is_finite() {
        return Err(Error::NonpositiveDemand(q));
    }
    let network = Network::new(vec![1, 2], &[(1, 2), (1, 2)])?;
    let demands = DemandTable::new(&network, &[(1, 2, q)])?;
    let cost = PolynomialCost::new(
        vec![
            vec![CostTerm::separable(0, 1, 1.0)],
            vec![CostTerm::separable(1, 1, 1.0)],
        ],
        1,
    )?;
    Instance::new(network, demands, cost)
}

/// Ring of `m + l` nodes with one OD pair per node to the node `m` hops
/// away, unit demands, and `(v_a + v_opposite)^n` arc costs on the two
/// directed arcs of every ring segment.
///
/// `m / l` is the smallest integer ratio matching the requested convention;
/// the achieved indifference level `m/l - 1` is reported in the instance
/// metadata and is the level at which the all-clockwise assignment is exactly
/// indifferent to the short route.
pub fn gen_circular(kappa_target: f64, degree: u32, convention: CircularRatio) -> Result<Instance> {
    if kappa_target < 0.0 {
        return Err(Error::NegativeKappa(kappa_target));
    }
    if degree < 1 {
        return Err(Error::NegativeDegree);
    }
    let ratio = match convention {
        CircularRatio::RatioIsKappa => 1.0 + kappa_target,
        CircularRatio::RatioIsPosat => {
            crate::cost::ipow(1.0 + kappa_target, 5).powf(1.0 / f64::from(degree + 1))
        }
    };
    let (m, l) = smallest_integer_ratio(ratio, 1000)?;
    let n = (m + l) as usize;
    let labels: Vec<u64> = (1..=n as u64).collect();
    let mut arc_ends = Vec::with_capacity(2 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        arc_ends.push((labels[i], labels[j]));
        arc_ends.push((labels[j], labels[i]));
    }
    let network = Network::new(labels.clone(), &arc_ends)?;
    let mut cost_terms = Vec::with_capacity(2 * n);
    for a in 0..2 * n {
        let opposite = a ^ 1;
        cost_terms.push(vec![CostTerm {
            exponent: degree,
            coeff: 1.0,
            interaction: vec![(a, 1.0), (opposite, 1.0)],
        }]);
    }
    let cost = PolynomialCost::new(cost_terms, degree)?;
    let od_entries: Vec<(u64, u64, f64)> = (0..n)
        .map(|i| (labels[i], labels[(i + m as usize) % n], 1.0))
        .collect();
    let demands = DemandTable::new(&network, &od_entries)?;
    let mut inst = Instance::new(network, demands, cost)?;
    inst.meta = Some(InstanceMeta {
        circular: Some(CircularMeta {
            long_hops: m,
            short_hops: l,
            kappa: m as f64 / l as f64 - 1.0,
        }),
    });
    Ok(inst)
}

fn smallest_integer_ratio(target: f64, max_denominator: u64) -> Result<(u64, u64)> {
    for l in 1..=max_denominator {
        let m = (target * l as f64).round() as u64;
        if m >= l && m >= 1 && (m as f64 / l as f64 - target).abs() <= 1e-9 {
            return Ok((m, l));
        }
    }
    Err(Error::NoIntegerRatio {
        target,
        max_denominator,
    })
}

impl CircularMeta {
    /// All-clockwise assignment: each OD's unit demand on its long route.
    pub fn clockwise_flow(&self, inst: &Instance) -> ClassFlow {
        let n = (self.long_hops + self.short_hops) as usize;
        let mut x = ClassFlow::zeros(inst.num_ods(), inst.num_arcs());
        for i in 0..n {
            for t in 0..self.long_hops as usize {
                x.set(i, 2 * ((i + t) % n), 1.0);
            }
        }
        x
    }

    /// All-counterclockwise assignment: each OD on its short route.
    pub fn counterclockwise_flow(&self, inst: &Instance) -> ClassFlow {
        let n = (self.long_hops + self.short_hops) as usize;
        let mut x = ClassFlow::zeros(inst.num_ods(), inst.num_arcs());
        for i in 0..n {
            // step from node u to u-1 uses the odd arc of segment u-1
            for t in 0..self.short_hops as usize {
                let seg = (i + n - 1 - t) % n;
                x.set(i, 2 * seg + 1, 1.0);
            }
        }
        x
    }

    /// Perception pattern that makes the all-clockwise assignment an
    /// equilibrium: `1/(1+kappa)` on each OD's own long-route arcs, 1
    /// elsewhere. Returned as a dense (od, arc) matrix in row-major order.
    pub fn clockwise_lambda(&self, inst: &Instance) -> Vec<f64> {
        let n = (self.long_hops + self.short_hops) as usize;
        let lo = 1.0 / (1.0 + self.kappa);
        let mut lambda = vec![1.0; inst.num_ods() * inst.num_arcs()];
        for i in 0..n {
            for t in 0..self.long_hops as usize {
                lambda[i * inst.num_arcs() + 2 * ((i + t) % n)] = lo;
            }
        }
        lambda
    }
}

/// Nine-node bidirectional test network with flow-coupled quartic costs
/// `t_a = A + B ((0.5 v_opp + v_a) / C)^4`.
///
/// Demands are caller-supplied `(origin, dest, q)` labels in 1..=9.
pub fn gen_nine_node_asymmetric(demand_entries: &[(u64, u64, f64)]) -> Result<Instance> {
    const PARAMS: [(u64, u64, f64, f64, f64); 32] = [
        (1, 5, 12.0, 1.80, 5.0),
        (1, 6, 18.0, 2.70, 6.0),
        (2, 5, 35.0, 5.25, 3.0),
        (2, 6, 35.0, 5.25, 9.0),
        (5, 6, 20.0, 3.00, 9.0),
        (5, 7, 11.0, 1.65, 2.0),
        (5, 9, 26.0, 3.90, 8.0),
        (6, 8, 33.0, 4.95, 6.0),
        (6, 9, 30.0, 4.50, 8.0),
        (7, 3, 25.0, 3.75, 3.0),
        (7, 4, 24.0, 3.60, 6.0),
        (7, 8, 19.0, 2.85, 2.0),
        (8, 3, 39.0, 5.85, 8.0),
        (8, 4, 43.0, 6.45, 6.0),
        (9, 7, 26.0, 3.90, 4.0),
        (9, 8, 30.0, 4.50, 8.0),
        (5, 1, 12.0, 1.80, 5.0),
        (6, 1, 18.0, 2.70, 6.0),
        (5, 2, 35.0, 5.25, 3.0),
        (6, 2, 35.0, 5.25, 9.0),
        (6, 5, 20.0, 3.00, 9.0),
        (7, 5, 11.0, 1.65, 2.0),
        (9, 5, 26.0, 3.90, 8.0),
        (8, 6, 33.0, 4.95, 6.0),
        (9, 6, 30.0, 4.50, 8.0),
        (3, 7, 25.0, 3.75, 3.0),
        (4, 7, 24.0, 3.60, 6.0),
        (8, 7, 19.0, 2.85, 2.0),
        (3, 8, 39.0, 5.85, 8.0),
        (4, 8, 43.0, 6.45, 6.0),
        (7, 9, 26.0, 3.90, 4.0),
        (8, 9, 30.0, 4.50, 8.0),
    ];
    let labels: Vec<u64> = (1..=9).collect();
    let arc_ends: Vec<(u64, u64)> = PARAMS.iter().map(|&(t, h, ..)| (t, h)).collect();
    let network = Network::new(labels, &arc_ends)?;
    let mut terms = Vec::with_capacity(32);
    for (a, &(tail, head, big_a, big_b, big_c)) in PARAMS.iter().enumerate() {
        let opposite = PARAMS
            .iter()
            .position(|&(t, h, ..)| t == head && h == tail)
            .expect("every arc has a reverse");
        terms.push(vec![
            CostTerm::separable(a, 0, big_a),
            CostTerm {
                exponent: 4,
                coeff: big_b / crate::cost::ipow(big_c, 4),
                interaction: vec![(a, 1.0), (opposite, 0.5)],
            },
        ]);
    }
    let cost = PolynomialCost::new(terms, 4)?;
    for &(o, d, _) in demand_entries {
        if !(1..=9).contains(&o) {
            return Err(Error::UnknownNode(o));
        }
        if !(1..=9).contains(&d) {
            return Err(Error::UnknownNode(d));
        }
    }
    let demands = DemandTable::new(&network, demand_entries)?;
    Instance::new(network, demands, cost)
}

/// Outcome of [`make_asymmetric_variant`]: arcs without a reverse arc stay
/// separable and are listed.
#[derive(Debug, Clone)]
pub struct AsymmetricVariant {
    pub instance: Instance,
    pub unpaired_arcs: Vec<usize>,
}

/// Couple each arc's cost to the opposite-direction flow: every term argument
/// `v_a` becomes `v_a + omega * v_opposite`.
pub fn make_asymmetric_variant(inst: &Instance, omega: f64) -> Result<AsymmetricVariant> {
    inst.cost.require_separable()?;
    let mut unpaired = Vec::new();
    let mut terms = Vec::with_capacity(inst.num_arcs());
    for a in 0..inst.num_arcs() {
        let reverse = inst.network.reverse_arc(a);
        if reverse.is_none() {
            unpaired.push(a);
        }
        let new_terms = inst
            .cost
            .terms(a)
            .iter()
            .map(|t| {
                let mut term = t.clone();
                if term.exponent >= 1 && omega > 0.0 {
                    if let Some(r) = reverse {
                        term.interaction = vec![(a, 1.0), (r, omega)];
                    }
                }
                term
            })
            .collect();
        terms.push(new_terms);
    }
    let cost = PolynomialCost::new(terms, inst.cost.degree())?;
    let mut out = Instance::new(inst.network.clone(), inst.demands.clone(), cost)?;
    out.meta = inst.meta.clone();
    Ok(AsymmetricVariant {
        instance: out,
        unpaired_arcs: unpaired,
    })
}

// ---------------------------------------------------------------------------
// JSON exchange format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FileInstance {
    nodes: Vec<u64>,
    arcs: Vec<FileArc>,
    demands: Vec<FileDemand>,
    costs: FileCosts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<InstanceMeta>,
}

#[derive(Serialize, Deserialize)]
struct FileArc {
    id: usize,
    tail: u64,
    head: u64,
}

#[derive(Serialize, Deserialize)]
struct FileDemand {
    origin: u64,
    dest: u64,
    q: f64,
}

#[derive(Serialize, Deserialize)]
struct FileCosts {
    degree: u32,
    arcs: Vec<FileArcCost>,
}

#[derive(Serialize, Deserialize)]
struct FileArcCost {
    terms: Vec<FileTerm>,
}

#[derive(Serialize, Deserialize)]
struct FileTerm {
    m: u32,
    b: f64,
    /// Omitted means the separable unit vector on the arc itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<FileInteraction>>,
}

#[derive(Serialize, Deserialize)]
struct FileInteraction {
    arc: usize,
    w: f64,
}

impl Instance {
    pub fn to_json(&self) -> Result<String> {
        let arcs = (0..self.num_arcs())
            .map(|id| {
                let arc = self.network.arc(id);
                FileArc {
                    id,
                    tail: self.network.node_label(arc.tail),
                    head: self.network.node_label(arc.head),
                }
            })
            .collect();
        let demands = self
            .demands
            .pairs()
            .iter()
            .map(|p| FileDemand {
                origin: self.network.node_label(p.origin),
                dest: self.network.node_label(p.dest),
                q: p.quantity,
            })
            .collect();
        let cost_arcs = (0..self.num_arcs())
            .map(|a| FileArcCost {
                terms: self
                    .cost
                    .terms(a)
                    .iter()
                    .map(|t| FileTerm {
                        m: t.exponent,
                        b: t.coeff,
                        d: if t.interaction == vec![(a, 1.0)] {
                            None
                        } else {
                            Some(
                                t.interaction
                                    .iter()
                                    .map(|&(arc, w)| FileInteraction { arc, w })
                                    .collect(),
                            )
                        },
                    })
                    .collect(),
            })
            .collect();
        let file = FileInstance {
            nodes: self.network.node_labels().to_vec(),
            arcs,
            demands,
            costs: FileCosts {
                degree: self.cost.degree(),
                arcs: cost_arcs,
            },
            meta: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let file: FileInstance = serde_json::from_str(text)?;
        let mut sorted = file.arcs.iter().map(|a| a.id).collect::<Vec<_>>();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(Error::InvalidNetwork(
                "arc ids must be dense 0..num_arcs".into(),
            ));
        }
        let mut arc_ends = vec![(0u64, 0u64); file.arcs.len()];
        for a in &file.arcs {
            arc_ends[a.id] = (a.tail, a.head);
        }
        let network = Network::new(file.nodes, &arc_ends)?;
        let entries: Vec<(u64, u64, f64)> = file
            .demands
            .iter()
            .map(|d| (d.origin, d.dest, d.q))
            .collect();
        let demands = DemandTable::new(&network, &entries)?;
        if file.costs.arcs.len() != network.num_arcs() {
            return Err(Error::InvalidNetwork(format!(
                "costs cover {} arcs, network has {}",
                file.costs.arcs.len(),
                network.num_arcs()
            )));
        }
        let terms = file
            .costs
            .arcs
            .iter()
            .enumerate()
            .map(|(a, ac)| {
                ac.terms
                    .iter()
                    .map(|t| CostTerm {
                        exponent: t.m,
                        coeff: t.b,
                        interaction: match &t.d {
                            None => vec![(a, 1.0)],
                            Some(d) => d.iter().map(|i| (i.arc, i.w)).collect(),
                        },
                    })
                    .collect()
            })
            .collect();
        let cost = PolynomialCost::new(terms, file.costs.degree)?;
        let mut inst = Instance::new(network, demands, cost)?;
        inst.meta = file.meta;
        Ok(inst)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Instance> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{aggregate_to_arcflow, ArcFlow};

    #[test]
    fn example1_times() {
        let inst = gen_example1(1.0).unwrap();
        let t = inst.cost.arc_times(&ArcFlow(vec![0.3, 0.7]));
        assert_eq!(t[0], 1.0);
        assert!((t[1] - 1.7).abs() < 1e-15);
        assert!(gen_example1(0.0).is_err());
    }

    #[test]
    fn scale_demands_identity_and_arithmetic() {
        let inst = gen_example2(1.0).unwrap();
        let same = inst.scale_demands(0.0).unwrap();
        assert_eq!(same.demands.pair(0).quantity, 1.0);
        assert!(inst.scale_demands(-0.1).is_err());

        let net = Network::new(vec![1, 2, 3], &[(1, 2), (2, 3)]).unwrap();
        let demands = DemandTable::new(&net, &[(1, 2, 1.0), (2, 3, 2.0)]).unwrap();
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 1, 1.0)],
                vec![CostTerm::separable(1, 1, 1.0)],
            ],
            1,
        )
        .unwrap();
        let inst = Instance::new(net, demands, cost).unwrap();
        let scaled = inst.scale_demands(0.5).unwrap();
        assert_eq!(scaled.demands.pair(0).quantity, 1.5);
        assert_eq!(scaled.demands.pair(1).quantity, 3.0);
    }

    #[test]
    fn circular_smallest_ratio() {
        let inst = gen_circular(1.0, 4, CircularRatio::RatioIsKappa).unwrap();
        let meta = inst.meta.as_ref().unwrap().circular.unwrap();
        assert_eq!((meta.long_hops, meta.short_hops), (2, 1));
        assert_eq!(inst.network.num_nodes(), 3);
        assert_eq!(inst.num_arcs(), 6);
        assert_eq!(inst.num_ods(), 3);
        assert!((meta.kappa - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circular_posat_convention_matches_kappa_at_degree_four() {
        let a = gen_circular(0.3, 4, CircularRatio::RatioIsKappa).unwrap();
        let b = gen_circular(0.3, 4, CircularRatio::RatioIsPosat).unwrap();
        let (ma, mb) = (
            a.meta.as_ref().unwrap().circular.unwrap(),
            b.meta.as_ref().unwrap().circular.unwrap(),
        );
        assert_eq!((ma.long_hops, ma.short_hops), (mb.long_hops, mb.short_hops));
        assert_eq!((ma.long_hops, ma.short_hops), (13, 10));
    }

    #[test]
    fn circular_strategy_totals() {
        // all-clockwise: every arc used clockwise carries m units and the
        // total travel time is (m+l) * m^(n+1); counterclockwise gives
        // (m+l) * l^(n+1)
        for (kappa, degree) in [(1.0, 2u32), (0.5, 4)] {
            let inst = gen_circular(kappa, degree, CircularRatio::RatioIsKappa).unwrap();
            let meta = inst.meta.as_ref().unwrap().circular.unwrap();
            let (m, l) = (meta.long_hops as f64, meta.short_hops as f64);
            let cw = aggregate_to_arcflow(&meta.clockwise_flow(&inst));
            for i in 0..inst.network.num_nodes() {
                assert!((cw[2 * i] - m).abs() < 1e-12);
                assert_eq!(cw[2 * i + 1], 0.0);
            }
            let z_cw = inst.cost.total_travel_time(&cw);
            assert!((z_cw - (m + l) * crate::cost::ipow(m, degree + 1)).abs() < 1e-9 * z_cw);

            let ccw = aggregate_to_arcflow(&meta.counterclockwise_flow(&inst));
            for i in 0..inst.network.num_nodes() {
                assert!((ccw[2 * i + 1] - l).abs() < 1e-12);
                assert_eq!(ccw[2 * i], 0.0);
            }
            let z_ccw = inst.cost.total_travel_time(&ccw);
            assert!(
                (z_ccw - (m + l) * crate::cost::ipow(l, degree + 1)).abs() < 1e-9 * z_ccw.max(1.0)
            );

            // path costs under the clockwise strategy: m * m^n on the long
            // route, l * m^n on the short one
            let meta_flow = meta.clockwise_flow(&inst);
            meta_flow
                .check_conservation(&inst.network, &inst.demands)
                .unwrap();
            let long_path: Vec<usize> = (0..meta.long_hops as usize)
                .map(|t| 2 * (t % inst.network.num_nodes()))
                .collect();
            let c_long = inst.cost.path_cost(&cw, &long_path);
            assert!((c_long - m * crate::cost::ipow(m, degree)).abs() < 1e-9 * c_long);
        }
    }

    #[test]
    fn nine_node_parameters() {
        let inst =
            gen_nine_node_asymmetric(&[(1, 3, 10.0), (1, 4, 20.0), (2, 3, 30.0), (2, 4, 40.0)])
                .unwrap();
        assert_eq!(inst.network.num_nodes(), 9);
        assert_eq!(inst.num_arcs(), 32);
        // zero flow: t = A on every arc
        let t0 = inst.cost.arc_times(&ArcFlow(vec![0.0; 32]));
        assert_eq!(t0[0], 12.0);
        // row (8,4): A = 43, B = 6.45, C = 6
        let a84 = (0..32)
            .find(|&a| {
                let arc = inst.network.arc(a);
                inst.network.node_label(arc.tail) == 8 && inst.network.node_label(arc.head) == 4
            })
            .unwrap();
        assert_eq!(t0[a84], 43.0);
        // opposite pairs share parameters: (1,5) vs (5,1) at mirrored flows
        let mut v = ArcFlow(vec![0.0; 32]);
        v.0[0] = 5.0;
        let t = inst.cost.arc_times(&v);
        assert!((t[0] - 13.8).abs() < 1e-12);
        assert!(gen_nine_node_asymmetric(&[(1, 11, 5.0)]).is_err());
    }

    #[test]
    fn asymmetric_variant_identity_and_scaling() {
        let inst = gen_example2(1.0).unwrap();
        // example networks have no reverse arcs: everything stays separable
        let var = make_asymmetric_variant(&inst, 0.5).unwrap();
        assert_eq!(var.unpaired_arcs, vec![0, 1]);
        assert!(var.instance.cost.is_separable());

        // two-node bidirectional pair with t = v^2
        let net = Network::new(vec![1, 2], &[(1, 2), (2, 1)]).unwrap();
        let demands = DemandTable::new(&net, &[(1, 2, 1.0)]).unwrap();
        let cost = PolynomialCost::new(
            vec![
                vec![CostTerm::separable(0, 2, 1.0)],
                vec![CostTerm::separable(1, 2, 1.0)],
            ],
            2,
        )
        .unwrap();
        let inst = Instance::new(net, demands, cost).unwrap();
        let same = make_asymmetric_variant(&inst, 0.0).unwrap();
        assert_eq!(same.instance.cost, inst.cost);
        let var = make_asymmetric_variant(&inst, 0.5).unwrap();
        assert!(var.unpaired_arcs.is_empty());
        // symmetric flow v = v_opp: times scale by (1 + omega)^m
        let v = ArcFlow(vec![2.0, 2.0]);
        let t = var.instance.cost.arc_times(&v);
        let t0 = inst.cost.arc_times(&v);
        assert!((t[0] - t0[0] * 1.5f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn variant_with_omega_half_reproduces_nine_node() {
        let demands: &[(u64, u64, f64)] = &[(1, 3, 10.0)];
        let asym = gen_nine_node_asymmetric(demands).unwrap();
        // separable base: t = A + (B / C^4) v^4 on the same arcs
        let sep_terms = (0..32)
            .map(|a| {
                let terms = asym.cost.terms(a);
                vec![
                    CostTerm::separable(a, 0, terms[0].coeff),
                    CostTerm::separable(a, 4, terms[1].coeff),
                ]
            })
            .collect();
        let sep_cost = PolynomialCost::new(sep_terms, 4).unwrap();
        let sep = Instance::new(asym.network.clone(), asym.demands.clone(), sep_cost).unwrap();
        let var = make_asymmetric_variant(&sep, 0.5).unwrap();
        assert_eq!(var.instance.cost, asym.cost);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let inst = gen_nine_node_asymmetric(&[(1, 3, 10.0), (2, 4, 40.0)]).unwrap();
        let text = inst.to_json().unwrap();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back.cost, inst.cost);
        assert_eq!(back.network.num_arcs(), inst.network.num_arcs());
        assert_eq!(back.demands.pair(1).quantity, 40.0);

        let circ = gen_circular(1.0, 4, CircularRatio::RatioIsKappa).unwrap();
        let back = Instance::from_json(&circ.to_json().unwrap()).unwrap();
        assert!(back.meta.unwrap().circular.is_some());
    }
}
