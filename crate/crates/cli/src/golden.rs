//! Comparison of a report's verdict matrix with a checked-in expectation.

use serde_json::Value;

/// `{rule: {postulate: verdict}}` mismatches, for the rules the report covers.
pub fn mismatches(report: &Value, golden: &Value) -> Result<Vec<String>, String> {
    let golden = golden.as_object().ok_or("golden matrix must be an object of rules")?;
    let matrix = report.get("matrix").and_then(Value::as_array).ok_or("report lacks a `matrix` array")?;
    let lookup = |rule: &str, pid: &str| {
        matrix
            .iter()
            .find(|e| e.get("rule").and_then(Value::as_str) == Some(rule) && e.get("postulate").and_then(Value::as_str) == Some(pid))
            .and_then(|e| e.get("verdict"))
            .and_then(Value::as_str)
    };
    let covered = |rule: &str| matrix.iter().any(|e| e.get("rule").and_then(Value::as_str) == Some(rule));
    let mut out = Vec::new();
    for (rule, row) in golden {
        if !covered(rule) {
            continue;
        }
        let row = row.as_object().ok_or_else(|| format!("golden row `{rule}` must be an object"))?;
        for (pid, want) in row {
            let want = want.as_str().ok_or_else(|| format!("golden `{rule}` {pid} must be a string"))?;
            match lookup(rule, pid) {
                Some(got) if got == want => {}
                Some(got) => out.push(format!("{rule} {pid}: expected {want}, got {got}")),
                None => out.push(format!("{rule} {pid}: expected {want}, missing from the report")),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reports_only_covered_rules() {
        let report = json!({ "matrix": [
            { "rule": "cond", "postulate": "P1", "verdict": "pass" },
            { "rule": "cond", "postulate": "P7", "verdict": "fail" },
        ]});
        let golden = json!({ "cond": { "P1": "pass", "P7": "pass" }, "ml": { "P1": "pass" } });
        assert_eq!(mismatches(&report, &golden).unwrap(), vec!["cond P7: expected pass, got fail"]);
    }
}
