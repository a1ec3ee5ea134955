//! Text and CSV renderings. Output depends only on its inputs, so repeated
//! runs are byte-identical.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use gatekeeping::{bonferroni_threshold, AuditTrail, FamilyKey, FamilySpec, Layer, PValueSet};

use crate::config::{Config, Problem};

/// `%g`-style formatting with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exponent) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-4..6).contains(&exponent) {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exponent.abs())
    } else {
        let decimals = (5 - exponent).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Left-aligned columns separated by two spaces; trailing spaces trimmed.
fn columns(rows: &[Vec<String>]) -> String {
    let width = rows[0].len();
    let widths: Vec<usize> = (0..width)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            line.push_str(cell);
            if c + 1 < width {
                line.push_str(&" ".repeat(pad + 2));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn position(key: FamilyKey, first_layer: usize) -> usize {
    match key {
        FamilyKey::Ordered(i) => i,
        FamilyKey::Layered {
            layer: Layer::First,
            index,
        } => index,
        FamilyKey::Layered {
            layer: Layer::Second,
            index,
        } => first_layer + index,
    }
}

fn first_layer_len(config: &Config) -> usize {
    match &config.problem {
        Problem::TwoLayer(p) => p.first().len(),
        _ => 0,
    }
}

fn join_labels<'a>(family: &'a FamilySpec, set: &BTreeSet<usize>) -> Vec<&'a str> {
    set.iter()
        .map(|&h| family.hypotheses()[h].as_str())
        .collect()
}

fn summary(out: &mut String, rejected: &[&str]) {
    if rejected.is_empty() {
        out.push_str("rejected: none\n");
    } else {
        let _ = writeln!(out, "rejected: {}", rejected.join(", "));
    }
}

fn header(config: &Config) -> String {
    format!(
        "procedure: {}  alpha: {}\n\n",
        config.kind(),
        sig6(config.alpha())
    )
}

/// Stage-by-stage table for the retesting engines.
pub fn trail_table(config: &Config, trail: &AuditTrail) -> String {
    let families = config.families();
    let m1 = first_layer_len(config);
    let mut rows = vec![vec![
        "stage".to_string(),
        "family".to_string(),
        "level".to_string(),
        "decisions".to_string(),
        "newly rejected".to_string(),
    ]];
    for stage in trail.stages() {
        for test in &stage.families {
            let family = families[position(test.key, m1)];
            let decisions = family
                .hypotheses()
                .iter()
                .enumerate()
                .map(|(h, label)| {
                    format!(
                        "{label}:{}",
                        if test.rejected.contains(&h) {
                            "S"
                        } else {
                            "NS"
                        }
                    )
                })
                .collect::<Vec<_>>()
                .join(" ");
            let new = join_labels(family, &test.newly_rejected);
            rows.push(vec![
                stage.stage.to_string(),
                family.label().to_string(),
                sig6(test.level),
                decisions,
                if new.is_empty() {
                    "-".to_string()
                } else {
                    new.join(", ")
                },
            ]);
        }
    }
    let mut out = header(config);
    out.push_str(&columns(&rows));
    out.push('\n');
    let hypotheses: Vec<&[String]> = families.iter().map(|f| f.hypotheses()).collect();
    summary(&mut out, &trail.rejected_labels(&hypotheses));
    let stages = trail.stage_count();
    let _ = writeln!(
        out,
        "termination: {} after {stages} stage{}",
        trail.termination(),
        if stages == 1 { "" } else { "s" }
    );
    out
}

/// CSV audit: one row per hypothesis per family test.
pub fn trail_csv(config: &Config, p: &PValueSet, trail: &AuditTrail) -> String {
    let families = config.families();
    let m1 = first_layer_len(config);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "stage",
        "family",
        "level",
        "hypothesis",
        "p",
        "threshold",
        "decision",
        "newly_rejected",
    ])
    .expect("writing to memory");
    for stage in trail.stages() {
        for test in &stage.families {
            let at = position(test.key, m1);
            let family = families[at];
            let threshold = bonferroni_threshold(test.level, family.size());
            for (h, label) in family.hypotheses().iter().enumerate() {
                w.write_record([
                    stage.stage.to_string(),
                    family.label().to_string(),
                    test.level.to_string(),
                    label.clone(),
                    p.family(at)[h].to_string(),
                    threshold.to_string(),
                    (if test.rejected.contains(&h) {
                        "S"
                    } else {
                        "NS"
                    })
                    .to_string(),
                    test.newly_rejected.contains(&h).to_string(),
                ])
                .expect("writing to memory");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV of UTF-8 fields")
}

/// Single-pass table for the oracle procedures; `rejected` holds flat
/// hypothesis positions.
pub fn oracle_table(config: &Config, p: &PValueSet, rejected: &BTreeSet<usize>) -> String {
    let families = config.families();
    let mut rows = vec![vec![
        "hypothesis".to_string(),
        "p".to_string(),
        "decision".to_string(),
    ]];
    let mut labels = Vec::new();
    for (i, f) in families.iter().enumerate() {
        let label = f.hypotheses()[0].as_str();
        let hit = rejected.contains(&i);
        if hit {
            labels.push(label);
        }
        rows.push(vec![
            label.to_string(),
            sig6(p.family(i)[0]),
            (if hit { "S" } else { "NS" }).to_string(),
        ]);
    }
    let mut out = header(config);
    out.push_str(&columns(&rows));
    out.push('\n');
    summary(&mut out, &labels);
    out.push_str("termination: single pass\n");
    out
}

/// Oracle CSV with the same columns as the trail CSV; level and threshold
/// are left empty because the oracles do not report them.
pub fn oracle_csv(config: &Config, p: &PValueSet, rejected: &BTreeSet<usize>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "stage",
        "family",
        "level",
        "hypothesis",
        "p",
        "threshold",
        "decision",
        "newly_rejected",
    ])
    .expect("writing to memory");
    for (i, f) in config.families().iter().enumerate() {
        let hit = rejected.contains(&i);
        w.write_record([
            "1",
            f.label(),
            "",
            f.hypotheses()[0].as_str(),
            &p.family(i)[0].to_string(),
            "",
            if hit { "S" } else { "NS" },
            if hit { "true" } else { "false" },
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV of UTF-8 fields")
}

/// Human-readable echo of a validated configuration, including the
/// transition graph as an edge list.
pub fn validation_echo(config: &Config) -> String {
    let mut out = header(config);
    let families = config.families();
    let names: Vec<String> = match &config.problem {
        Problem::TwoLayer(p) => (0..p.first().len())
            .map(|j| format!("F_1{}", j + 1))
            .chain((0..p.second().len()).map(|l| format!("F_2{}", l + 1)))
            .collect(),
        _ => (1..=families.len()).map(|i| format!("F_{i}")).collect(),
    };

    out.push_str("families:\n");
    let rows: Vec<Vec<String>> = families
        .iter()
        .zip(&names)
        .map(|(f, name)| {
            vec![
                format!("  {name}"),
                f.label().to_string(),
                format!("level {}", sig6(f.initial_level())),
                format!("hypotheses {}", f.hypotheses().join(", ")),
            ]
        })
        .collect();
    out.push_str(&columns(&rows));

    let mut edges = Vec::new();
    let mut edge = |from: &str, to: &str, g: f64| {
        if g != 0.0 {
            edges.push(format!("  {from} → {to} : {}\n", sig6(g)));
        }
    };
    match &config.problem {
        Problem::Sequential(p) => {
            for (i, row) in p.transition().rows().iter().enumerate() {
                for (j, &g) in row.iter().enumerate() {
                    edge(&names[i], &names[j], g);
                }
            }
        }
        Problem::TwoLayer(p) => {
            let m1 = p.first().len();
            for (j, row) in p.down_rows().iter().enumerate() {
                for (l, &g) in row.iter().enumerate() {
                    edge(&names[j], &names[m1 + l], g);
                }
            }
            for (l, row) in p.up_rows().iter().enumerate() {
                for (j, &g) in row.iter().enumerate() {
                    edge(&names[m1 + l], &names[j], g);
                }
            }
        }
        Problem::FallbackOracle(_) | Problem::FixedSequenceOracle(_) => {}
    }
    if edges.is_empty() {
        out.push_str("edges: none (single-pass procedure)\n");
    } else {
        out.push_str("edges:\n");
        edges.iter().for_each(|e| out.push_str(e));
    }

    let total: usize = config.sizes().iter().sum();
    match &config.p_values {
        Some(_) => {
            let _ = writeln!(out, "p_values: supplied for all {total} hypotheses");
        }
        None => out.push_str("p_values: not supplied\n"),
    }
    match config.options.stage_cap {
        Some(cap) => {
            let _ = writeln!(out, "stage cap: {cap}");
        }
        None => {
            let _ = writeln!(out, "stage cap: {} (hypotheses + 1)", total + 1);
        }
    }
    out.push_str("status: valid\n");
    out
}
