//! Reference superpopulations for the simulation tables and figures.
//!
//! `reported_*` fields carry the published rejection rates so that tables
//! can print them next to fresh simulations.

use serde::Serialize;

use super::strata::{OutcomeFamily, StrataSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub table: &'static str,
    pub label: String,
    pub n: usize,
    pub spec: StrataSpec,
    pub reported_late: f64,
    pub reported_itt: Option<f64>,
}

/// The common baseline: τ = 5, π = 0.2, compliers N(0, 8²).
pub fn baseline() -> StrataSpec {
    StrataSpec {
        mu_c0: 0.0,
        sd_c0: 8.0,
        sd_c1: 8.0,
        tau: 5.0,
        mu_nt: -3.0,
        sd_nt: 12.0,
        mu_at: 3.0,
        sd_at: 4.0,
        p_c: 0.2,
        p_nt: 0.4,
        p_at: 0.4,
        p_z: 0.5,
        family: OutcomeFamily::Normal,
    }
}

fn row(table: &'static str, label: String, n: usize, spec: StrataSpec, late: f64) -> Scenario {
    Scenario {
        table,
        label,
        n,
        spec,
        reported_late: late,
        reported_itt: None,
    }
}

pub fn table_b1() -> Vec<Scenario> {
    let b = baseline();
    let mut rows: Vec<Scenario> = [(1000, 0.43), (2000, 0.71), (4000, 0.93)]
        .into_iter()
        .map(|(n, p)| row("B1", format!("N={n}"), n, b, p))
        .collect();
    rows.extend(
        [(5.0, 0.43), (6.0, 0.57), (7.0, 0.68)]
            .into_iter()
            .map(|(tau, p)| row("B1", format!("tau={tau}"), 1000, b.with_tau(tau), p)),
    );
    rows
}

pub fn table_b2() -> Vec<Scenario> {
    let b = baseline();
    let mut rows = Vec::new();
    for (mu, p) in [(0.0, 0.45), (10.0, 0.35), (20.0, 0.25)] {
        let spec = StrataSpec { mu_c0: mu, ..b };
        rows.push(row("B2", format!("mu_c0={mu}"), 1000, spec, p));
    }
    let wide = StrataSpec {
        p_c: 0.3,
        p_nt: 0.35,
        p_at: 0.35,
        ..b
    };
    for (sd0, sd1, p) in [(8.0, 8.0, 0.76), (8.0, 16.0, 0.63), (16.0, 16.0, 0.52)] {
        let spec = StrataSpec {
            sd_c0: sd0,
            sd_c1: sd1,
            ..wide
        };
        rows.push(row("B2", format!("sd_c0={sd0},sd_c1={sd1}"), 1000, spec, p));
    }
    for (nt, at, p) in [(-3.0, 3.0, 0.44), (10.0, 3.0, 0.26), (10.0, -6.0, 0.13)] {
        let spec = StrataSpec {
            mu_nt: nt,
            mu_at: at,
            ..b
        };
        rows.push(row("B2", format!("mu_nt={nt},mu_at={at}"), 1000, spec, p));
    }
    for (nt, at, p) in [(12.0, 4.0, 0.43), (12.0, 8.0, 0.37), (24.0, 8.0, 0.15)] {
        let spec = StrataSpec {
            sd_nt: nt,
            sd_at: at,
            ..b
        };
        rows.push(row("B2", format!("sd_nt={nt},sd_at={at}"), 1000, spec, p));
    }
    for (pc, pnt, pat, p) in [
        (0.3, 0.35, 0.35, 0.76),
        (0.2, 0.4, 0.4, 0.45),
        (0.2, 0.1, 0.7, 0.71),
        (0.2, 0.8, 0.0, 0.30),
    ] {
        let spec = StrataSpec {
            p_c: pc,
            p_nt: pnt,
            p_at: pat,
            ..b
        };
        rows.push(row(
            "B2",
            format!("p_c={pc},p_nt={pnt},p_at={pat}"),
            1000,
            spec,
            p,
        ));
    }
    rows
}

pub fn table_b3() -> Vec<Scenario> {
    let b = baseline();
    [
        (-10.0, 10.0, 0.34, 0.25),
        (-10.0, 3.0, 0.38, 0.30),
        (-3.0, 3.0, 0.44, 0.41),
        (10.0, 3.0, 0.26, 0.37),
        (10.0, -6.0, 0.13, 0.30),
    ]
    .into_iter()
    .map(|(nt, at, late, itt)| Scenario {
        reported_itt: Some(itt),
        ..row(
            "B3",
            format!("mu_nt={nt},mu_at={at}"),
            1000,
            StrataSpec {
                mu_nt: nt,
                mu_at: at,
                ..b
            },
            late,
        )
    })
    .collect()
}

/// Effect size of the full-compliance study that the B4 scenarios scale up.
pub const B4_ATE_KAPPA: f64 = 5.0 / 8.0;

pub fn table_b4() -> Vec<Scenario> {
    let b = baseline();
    [
        (0.0, 5.0, 8.0, 8.0, 0.87),
        (-10.0, 15.0, 8.0, 8.0, 0.54),
        (0.0, 5.0, 16.0, 16.0, 0.39),
        (-10.0, 15.0, 16.0, 16.0, 0.32),
        (15.0, -10.0, 16.0, 16.0, 0.19),
    ]
    .into_iter()
    .map(|(nt, at, snt, sat, late)| {
        let spec = StrataSpec {
            mu_nt: nt,
            mu_at: at,
            sd_nt: snt,
            sd_at: sat,
            ..b
        };
        row(
            "B4",
            format!("mu_nt={nt},mu_at={at},sd_nt={snt},sd_at={sat}"),
            2500,
            spec,
            late,
        )
    })
    .collect()
}

pub fn table(which: &str) -> Option<Vec<Scenario>> {
    match which.to_ascii_uppercase().as_str() {
        "B1" => Some(table_b1()),
        "B2" => Some(table_b2()),
        "B3" => Some(table_b3()),
        "B4" => Some(table_b4()),
        _ => None,
    }
}

/// Two-sided noncompliance with never-takers above and always-takers below
/// the compliers; drawn at N = 650.
pub fn figure1() -> StrataSpec {
    StrataSpec {
        mu_c0: 0.0,
        sd_c0: 3.0,
        sd_c1: 3.0,
        tau: 5.0,
        mu_nt: 10.0,
        sd_nt: 3.0,
        mu_at: -5.0,
        sd_at: 3.0,
        p_c: 0.3,
        p_nt: 0.35,
        p_at: 0.35,
        p_z: 0.5,
        family: OutcomeFamily::Normal,
    }
}

pub const FIGURE1_N: usize = 650;
pub const FIGURE2_N: usize = 1500;

/// Never-taker and always-taker means of the five bound-validation specs.
pub const FIGURE2_MEANS: [(f64, f64); 5] = [
    (-20.0, 20.0),
    (-10.0, 10.0),
    (-3.0, 3.0),
    (10.0, -10.0),
    (20.0, -20.0),
];

/// Templates (τ = 0) for the bound-validation sweep at assignment
/// probability `p_z`.
pub fn figure2(p_z: f64) -> Vec<StrataSpec> {
    FIGURE2_MEANS
        .iter()
        .map(|&(nt, at)| StrataSpec {
            mu_c0: 0.0,
            sd_c0: 8.0,
            sd_c1: 8.0,
            tau: 0.0,
            mu_nt: nt,
            sd_nt: 12.0,
            mu_at: at,
            sd_at: 4.0,
            p_c: 0.5,
            p_nt: 0.25,
            p_at: 0.25,
            p_z,
            family: OutcomeFamily::Normal,
        })
        .collect()
}
