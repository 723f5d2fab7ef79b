//! File formats used by the command line: flow CSVs, perception-field JSON,
//! and equilibrium reports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use posat::instance::Instance;
use posat::net::ClassFlow;
use posat::solver::{EquilibriumReport, LambdaField};
use posat::{Error, Result};

/// 12 significant digits, the fixed precision of every printed float.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Serialize, Deserialize)]
struct LambdaFile {
    kappa: f64,
    /// Row per OD (demand-table order), column per arc id.
    lambda: Vec<Vec<f64>>,
}

pub fn read_lambda_json(path: &Path, num_ods: usize, num_arcs: usize) -> Result<LambdaField> {
    let file: LambdaFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.lambda.len() != num_ods || file.lambda.iter().any(|row| row.len() != num_arcs) {
        return Err(Error::InvalidArgument(format!(
            "lambda file must be {num_ods} rows of {num_arcs} values"
        )));
    }
    LambdaField::new(
        file.kappa,
        num_ods,
        num_arcs,
        file.lambda.into_iter().flatten().collect(),
    )
}

pub fn write_lambda_json(path: &Path, lambda: &LambdaField) -> Result<()> {
    let rows = (0..lambda.num_ods())
        .map(|od| lambda.class(od).to_vec())
        .collect();
    let file = LambdaFile {
        kappa: lambda.kappa(),
        lambda: rows,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Class-flow CSV: header `od,arc,flow`, sparse rows, missing cells are zero.
pub fn read_class_flow_csv(path: &Path, num_ods: usize, num_arcs: usize) -> Result<ClassFlow> {
    let text = std::fs::read_to_string(path)?;
    let mut flow = ClassFlow::zeros(num_ods, num_arcs);
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.starts_with("od")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::ParseError {
                line: line_no,
                message: "expected od,arc,flow".into(),
            });
        }
        let od: usize = fields[0].parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: "bad od index".into(),
        })?;
        let arc: usize = fields[1].parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: "bad arc id".into(),
        })?;
        let value: f64 = fields[2].parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: "bad flow value".into(),
        })?;
        if od >= num_ods || arc >= num_arcs {
            return Err(Error::ParseError {
                line: line_no,
                message: "od or arc out of range".into(),
            });
        }
        flow.set(od, arc, flow.get(od, arc) + value);
    }
    Ok(flow)
}

pub fn write_class_flow_csv(path: &Path, flow: &ClassFlow) -> Result<()> {
    let mut csv = String::from("od,arc,flow\n");
    for od in 0..flow.num_ods() {
        for arc in 0..flow.num_arcs() {
            let value = flow.get(od, arc);
            if value != 0.0 {
                csv.push_str(&format!("{od},{arc},{}\n", fmt_sig(value)));
            }
        }
    }
    std::fs::write(path, csv)?;
    Ok(())
}

/// Write `<out>.report.json`, `<out>.flows.csv` (per-arc totals and times),
/// and `<out>.class_flows.csv` (verify-compatible).
pub fn write_report(out: &Path, inst: &Instance, report: &EquilibriumReport) -> Result<()> {
    let with_ext = |ext: &str| -> std::path::PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(ext);
        name.into()
    };
    std::fs::write(
        with_ext(".report.json"),
        serde_json::to_string_pretty(report)?,
    )?;

    let times = inst.cost.arc_times(&report.v);
    let mut csv = String::from("arc,tail,head,flow,time\n");
    for a in 0..inst.num_arcs() {
        let arc = inst.network.arc(a);
        csv.push_str(&format!(
            "{a},{},{},{},{}\n",
            inst.network.node_label(arc.tail),
            inst.network.node_label(arc.head),
            fmt_sig(report.v[a]),
            fmt_sig(times[a])
        ));
    }
    std::fs::write(with_ext(".flows.csv"), csv)?;
    write_class_flow_csv(&with_ext(".class_flows.csv"), &report.x)?;
    Ok(())
}

/// Demand CSV: header `origin,dest,q`.
pub fn read_demand_csv(path: &Path) -> Result<Vec<(u64, u64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("origin") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::ParseError {
                line: line_no,
                message: "expected origin,dest,q".into(),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::ParseError {
                line: line_no,
                message: format!("bad number {s:?}"),
            })
        };
        entries.push((
            parse(fields[0])? as u64,
            parse(fields[1])? as u64,
            parse(fields[2])?,
        ));
    }
    Ok(entries)
}
