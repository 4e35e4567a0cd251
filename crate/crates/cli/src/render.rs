use std::fmt::Write;

use mcaccess::oracle::Verification;
use mcaccess::simulator::Comparison;
use mcaccess::{ExactReport, Scan, Scenario, SimulationReport};

/// Left-aligned first column, right-aligned rest.
pub fn align(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(headers.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn p4(x: f64) -> String {
    if x.is_nan() {
        "n/a".into()
    } else {
        format!("{x:.4}")
    }
}

pub fn describe(scenario: &Scenario) -> String {
    let scan = match scenario.scan() {
        Scan::Width(s) => format!("s={s}"),
        Scan::Profile(_) => "custom theta".into(),
    };
    format!(
        "m={}, {scan}, k={} (rho={}), n={}",
        scenario.channels(),
        scenario.classes().len(),
        scenario.loading(),
        scenario.users().len()
    )
}

pub fn exact_table(report: &ExactReport) -> String {
    let mut out = String::new();
    writeln!(out, "scenario: {}", describe(&report.scenario)).unwrap();
    writeln!(out, "normalizer: {:.6}", report.normalizer).unwrap();
    match report.phi_0 {
        Some(phi) => writeln!(out, "phi_0: {phi:.4}").unwrap(),
        None => writeln!(out, "phi_0: undefined (no non-persistent classes)").unwrap(),
    }
    out.push('\n');
    if !report.users.is_empty() {
        let rows: Vec<Vec<String>> = report
            .scenario
            .users()
            .iter()
            .zip(&report.users)
            .enumerate()
            .map(|(j, (u, m))| {
                vec![
                    (j + 1).to_string(),
                    u.alpha.to_string(),
                    u.beta.to_string(),
                    u.u.to_string(),
                    u.v.to_string(),
                    p4(m.p_idle),
                    p4(m.p_wait),
                    p4(m.p_transmit),
                    p4(m.throughput),
                    if m.wait_negligible {
                        format!("{} (P[W] ~ 0)", p4(m.success_ratio))
                    } else {
                        p4(m.success_ratio)
                    },
                ]
            })
            .collect();
        out.push_str(&align(
            &[
                "user",
                "alpha",
                "beta",
                "u",
                "v",
                "P[I]",
                "P[W]",
                "P[T]",
                "throughput",
                "phi",
            ],
            &rows,
        ));
        out.push('\n');
    }
    let rows: Vec<Vec<String>> = report
        .busy
        .iter()
        .enumerate()
        .map(|(y, p)| vec![y.to_string(), format!("{p:.6}")])
        .collect();
    out.push_str(&align(&["busy", "P"], &rows));
    out
}

pub fn exact_csv(report: &ExactReport) -> String {
    let mut out = String::from("metric,value\n");
    writeln!(out, "normalizer,{}", report.normalizer).unwrap();
    if let Some(phi) = report.phi_0 {
        writeln!(out, "phi_0,{phi}").unwrap();
    }
    for (j, m) in report.users.iter().enumerate() {
        let id = j + 1;
        writeln!(out, "P[I_{id}],{}", m.p_idle).unwrap();
        writeln!(out, "P[W_{id}],{}", m.p_wait).unwrap();
        writeln!(out, "P[T_{id}],{}", m.p_transmit).unwrap();
        writeln!(out, "throughput_{id},{}", m.throughput).unwrap();
        writeln!(out, "phi_{id},{}", m.success_ratio).unwrap();
    }
    for (y, p) in report.busy.iter().enumerate() {
        writeln!(out, "P[busy={y}],{p}").unwrap();
    }
    out
}

pub fn comparison_table(sim: &SimulationReport, table: &Comparison) -> String {
    let mut out = String::new();
    writeln!(out, "scenario: {}", describe(&sim.scenario)).unwrap();
    writeln!(
        out,
        "simulated {} transitions, seed {}, credited time {:.4}",
        sim.transitions, sim.seed, sim.total_time
    )
    .unwrap();
    out.push('\n');
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.metric.clone(),
                p4(r.simulated),
                p4(r.exact),
                p4(r.abs_diff),
            ]
        })
        .collect();
    out.push_str(&align(&["metric", "simulated", "exact", "|diff|"], &rows));
    writeln!(out, "\nmax |diff|: {:.4}", table.max_abs_diff()).unwrap();
    out
}

pub fn comparison_csv(table: &Comparison) -> String {
    let mut out = String::from("metric,simulated,exact,abs_diff\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.metric, r.simulated, r.exact, r.abs_diff
        )
        .unwrap();
    }
    out
}

pub fn verify_table(v: &Verification) -> String {
    let rows = vec![
        vec!["states".into(), v.states.to_string()],
        vec![
            "max global-balance residual".into(),
            format!("{:.3e}", v.global_balance_residual),
        ],
        vec![
            "max detailed-balance residual".into(),
            format!("{:.3e}", v.detailed_balance_residual),
        ],
        vec![
            "max |product form - solve|".into(),
            format!("{:.3e}", v.product_form_discrepancy),
        ],
        vec![
            "detailed-balance violations".into(),
            v.violations.to_string(),
        ],
    ];
    align(&["check", "value"], &rows)
}

pub fn verify_csv(v: &Verification) -> String {
    format!(
        "metric,value\nstates,{}\nglobal_balance_residual,{}\ndetailed_balance_residual,{}\nproduct_form_discrepancy,{}\nviolations,{}\n",
        v.states, v.global_balance_residual, v.detailed_balance_residual, v.product_form_discrepancy, v.violations
    )
}
