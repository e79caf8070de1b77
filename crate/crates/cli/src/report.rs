//! CSV report tables: UTF-8, comma separators, `.` decimals. Leading `#`
//! comment lines carry the run digest and the column/unit glossary. Floats
//! go through the shortest round-trip formatting, so equal runs produce
//! byte-equal tables.

use std::fmt::Write as _;

use upin_core::{DecayReport, McEstimate};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// One-maturity price table: one row per quantity.
pub fn price_csv(rows: &[(&str, McEstimate)], digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# price report; run digest sha256:{digest}");
    let _ = writeln!(
        out,
        "# columns: quantity (label; prices in spot currency, hit_prob a probability), \
         value, std_error (Monte Carlo standard error)"
    );
    out.push_str("quantity,value,std_error\n");
    for (name, est) in rows {
        let _ = writeln!(out, "{name},{},{}", est.value, est.std_error);
    }
    out
}

/// Maturity-scan table: one row per maturity, largest first.
pub fn scan_csv(report: &DecayReport, digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scan report; run digest sha256:{digest}");
    let _ = writeln!(
        out,
        "# columns: maturity (years), hit_prob (probability), hit_prob_se, \
         grid_hits (paths whose grid maximum reaches the barrier), \
         up_in (price), up_in_se, european (price), european_se, \
         mean_max (mean running maximum of the log price), \
         concentration_bound, cdf_bound, combined_bound (probabilities)"
    );
    out.push_str(
        "maturity,hit_prob,hit_prob_se,grid_hits,up_in,up_in_se,european,european_se,\
         mean_max,concentration_bound,cdf_bound,combined_bound\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.maturity,
            r.hit_prob,
            r.hit_prob_se,
            r.grid_hits,
            r.up_in,
            r.up_in_se,
            r.european,
            r.european_se,
            r.mean_max,
            r.concentration_bound,
            r.cdf_bound,
            r.combined_bound
        );
    }
    out
}

/// Validation-suite table: one row per check.
pub fn checks_csv(rows: &[(&str, bool, String)], digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# validation report; run digest sha256:{digest}");
    let _ = writeln!(out, "# columns: check (name), result (pass|fail), detail (free text)");
    out.push_str("check,result,detail\n");
    for (name, pass, detail) in rows {
        let result = if *pass { "pass" } else { "fail" };
        let _ = writeln!(out, "{name},{result},{}", quote(detail));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_table_shape() {
        let est = McEstimate { value: 0.5, std_error: 0.001, n_paths: 10, seed: 1 };
        let csv = price_csv(&[("european", est)], "abc");
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# price report; run digest sha256:abc"));
        assert_eq!(lines[2], "quantity,value,std_error");
        assert_eq!(lines[3], "european,0.5,0.001");
    }

    #[test]
    fn detail_quoting_survives_commas_and_quotes() {
        let csv = checks_csv(&[("a", false, "x, \"y\"".to_string())], "d");
        assert!(csv.contains("a,fail,\"x, \"\"y\"\"\""));
    }
}
