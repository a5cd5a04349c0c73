//! `msgan shapes`: print the layer-by-layer audit table.

use std::path::Path;

use msgan_core::model::{shape_audit, AuditRow};

use crate::config::load_run_config;

fn print_rows(title: &str, rows: &[AuditRow]) {
    println!("{title}");
    println!(
        "{:<4} {:<16} {:<6} {:>18} {:>18}  {}",
        "blk", "operation", "act", "expected", "computed", "match"
    );
    for row in rows {
        let e = &row.expected;
        let expected = format!("{} x {} x {}", e.shape.0, e.shape.1, e.shape.2);
        let computed = match &row.computed {
            Some(c) => format!("{} x {} x {}", c.shape.0, c.shape.1, c.shape.2),
            None => "(missing)".to_string(),
        };
        println!(
            "{:<4} {:<16} {:<6} {:>18} {:>18}  {}",
            e.block,
            e.operation,
            e.activation,
            expected,
            computed,
            if row.matches { "ok" } else { "MISMATCH" }
        );
    }
}

pub fn run(config_path: &Path) -> anyhow::Result<i32> {
    let cfg = load_run_config(config_path)?;
    let audit = shape_audit(&cfg.model).map_err(|e| anyhow::anyhow!("{e}"))?;
    print_rows("generator", &audit.generator);
    println!();
    print_rows("discriminator", &audit.discriminator);
    println!();
    let mismatches = audit.mismatch_count();
    let total = audit.generator.len() + audit.discriminator.len();
    println!(
        "{}/{} rows match",
        total - mismatches,
        total
    );
    Ok(if audit.all_match() { 0 } else { 1 })
}
