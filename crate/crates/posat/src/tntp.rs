//! TNTP benchmark-format ingestion (plain-text net + trips files).
//!
//! Link performance comes as BPR parameters `fft * (1 + B (v/cap)^power)`
//! and is expanded into the polynomial class: constant term `fft` plus a
//! degree-`power` term `fft * B / cap^power`. Fractional powers fall outside
//! the nonnegative-coefficient polynomial class and are rejected rather than
//! approximated.

use crate::cost::{CostTerm, PolynomialCost};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::net::{DemandTable, Network};

#[derive(Debug, Clone, Default)]
pub struct TntpMetadata {
    pub nodes: usize,
    pub links: usize,
    /// OD entries listed in the trips file, including zero-flow cells.
    pub od_entries: usize,
    pub total_od_flow: f64,
    pub first_thru_node: u64,
}

#[derive(Debug, Clone)]
struct TntpLink {
    init: u64,
    term: u64,
    capacity: f64,
    free_flow_time: f64,
    b: f64,
    power: f64,
}

/// Load a net + trips file pair into an instance.
pub fn load_tntp(
    net_path: &std::path::Path,
    trips_path: &std::path::Path,
) -> Result<(Instance, TntpMetadata)> {
    let net_text = std::fs::read_to_string(net_path)?;
    let trips_text = std::fs::read_to_string(trips_path)?;
    parse_tntp(&net_text, &trips_text)
}

/// Parse net + trips file contents.
pub fn parse_tntp(net_text: &str, trips_text: &str) -> Result<(Instance, TntpMetadata)> {
    let (links, mut meta) = parse_net(net_text)?;
    let (entries, listed, total) = parse_trips(trips_text)?;
    meta.od_entries = listed;
    meta.total_od_flow = total;
    meta.links = links.len();

    let num_nodes = meta.nodes.max(
        links
            .iter()
            .flat_map(|l| [l.init, l.term])
            .max()
            .unwrap_or(0) as usize,
    );
    meta.nodes = num_nodes;
    let labels: Vec<u64> = (1..=num_nodes as u64).collect();
    let ends: Vec<(u64, u64)> = links.iter().map(|l| (l.init, l.term)).collect();
    let network = Network::new(labels, &ends)?;

    let mut degree = 0u32;
    let mut terms = Vec::with_capacity(links.len());
    for (a, link) in links.iter().enumerate() {
        let mut arc_terms = vec![CostTerm::separable(a, 0, link.free_flow_time)];
        if link.power.fract() != 0.0 || link.power < 0.0 {
            return Err(Error::UnsupportedPower(link.power));
        }
        let power = link.power as u32;
        let congestion = link.free_flow_time * link.b / crate::cost::ipow(link.capacity, power);
        if congestion > 0.0 && power > 0 {
            degree = degree.max(power);
            arc_terms.push(CostTerm::separable(a, power, congestion));
        }
        terms.push(arc_terms);
    }
    let cost = PolynomialCost::new(terms, degree)?;

    let demand_entries: Vec<(u64, u64, f64)> = entries
        .into_iter()
        .filter(|&(o, d, q)| o != d && q > 0.0)
        .collect();
    let demands = DemandTable::new(&network, &demand_entries)?;
    let inst = Instance::new(network, demands, cost)?;
    Ok((inst, meta))
}

fn parse_net(text: &str) -> Result<(Vec<TntpLink>, TntpMetadata)> {
    let mut meta = TntpMetadata::default();
    let mut links = Vec::new();
    let mut in_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('<') {
            let (tag, value) = rest.split_once('>').ok_or_else(|| Error::ParseError {
                line: line_no,
                message: "unterminated header tag".into(),
            })?;
            let value = value.trim();
            match tag.trim().to_ascii_uppercase().as_str() {
                "NUMBER OF NODES" => meta.nodes = parse_field(value, line_no)? as usize,
                "NUMBER OF LINKS" => meta.links = parse_field(value, line_no)? as usize,
                "FIRST THRU NODE" => meta.first_thru_node = parse_field(value, line_no)? as u64,
                "END OF METADATA" => in_data = true,
                _ => {}
            }
            continue;
        }
        if !in_data {
            return Err(Error::ParseError {
                line: line_no,
                message: "data before <END OF METADATA>".into(),
            });
        }
        let row = line.trim_end_matches(';').trim();
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() < 7 {
            return Err(Error::ParseError {
                line: line_no,
                message: format!("expected at least 7 link fields, got {}", fields.len()),
            });
        }
        let f = |i: usize| -> Result<f64> { parse_field(fields[i], line_no) };
        links.push(TntpLink {
            init: f(0)? as u64,
            term: f(1)? as u64,
            capacity: f(2)?,
            free_flow_time: f(4)?,
            b: f(5)?,
            power: f(6)?,
        });
    }
    Ok((links, meta))
}

/// OD entries, number of listed cells, and the declared total flow.
type ParsedTrips = (Vec<(u64, u64, f64)>, usize, f64);

fn parse_trips(text: &str) -> Result<ParsedTrips> {
    let mut entries = Vec::new();
    let mut origin: Option<u64> = None;
    let mut total_declared = 0.0;
    let mut listed = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('<') {
            let (tag, value) = rest.split_once('>').ok_or_else(|| Error::ParseError {
                line: line_no,
                message: "unterminated header tag".into(),
            })?;
            if tag.trim().eq_ignore_ascii_case("TOTAL OD FLOW") {
                total_declared = parse_field(value.trim(), line_no)?;
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("Origin") {
            origin = Some(parse_field(rest.trim(), line_no)? as u64);
            continue;
        }
        let o = origin.ok_or_else(|| Error::ParseError {
            line: line_no,
            message: "destination entries before any Origin block".into(),
        })?;
        for cell in line.split(';') {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            let (dest, flow) = cell.split_once(':').ok_or_else(|| Error::ParseError {
                line: line_no,
                message: format!("malformed od cell {cell:?}"),
            })?;
            let dest = parse_field(dest.trim(), line_no)? as u64;
            let flow = parse_field(flow.trim(), line_no)?;
            listed += 1;
            entries.push((o, dest, flow));
        }
    }
    Ok((entries, listed, total_declared))
}

fn parse_field(text: &str, line: usize) -> Result<f64> {
    text.parse::<f64>().map_err(|_| Error::ParseError {
        line,
        message: format!("not a number: {text:?}"),
    })
}
