//! Tabular records of bound checks and parameter sweeps, serialized to CSV
//! and JSON.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

/// A pointwise bound `lhs <= rhs` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `lhs / rhs` per point; supplied by the caller when it is computed in
    /// log space to survive underflow.
    pub ratio: Vec<f64>,
    pub worst_ratio: f64,
    pub fitted_constant: f64,
}

impl BoundReport {
    pub fn new(n: u64, grid: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, ratio: Vec<f64>, fitted_constant: f64) -> Self {
        let worst_ratio = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            n,
            grid,
            lhs,
            rhs,
            ratio,
            worst_ratio,
            fitted_constant,
        }
    }

    /// Builds ratios as `lhs / rhs`.
    pub fn from_values(n: u64, grid: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, fitted_constant: f64) -> Self {
        let ratio = lhs
            .iter()
            .zip(&rhs)
            .map(|(&l, &r)| if l == 0.0 { 0.0 } else { l / r })
            .collect();
        Self::new(n, grid, lhs, rhs, ratio, fitted_constant)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Every sampled point satisfies the bound.
    pub fn verified(&self) -> bool {
        !self.is_empty() && self.worst_ratio <= 1.0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,x_or_t,lhs,rhs,ratio\n");
        for i in 0..self.len() {
            let _ = writeln!(s, "{},{},{},{},{}", self.n, self.grid[i], self.lhs[i], self.rhs[i], self.ratio[i]);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One parameter sweep: named inputs, a numeric table and summary values.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, Value>,
}

impl ExperimentReport {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set_summary(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl From<&BoundReport> for ExperimentReport {
    fn from(b: &BoundReport) -> Self {
        let mut r = ExperimentReport::new("bound", &["n", "x_or_t", "lhs", "rhs", "ratio"]);
        for i in 0..b.len() {
            r.push_row(vec![b.n as f64, b.grid[i], b.lhs[i], b.rhs[i], b.ratio[i]]);
        }
        r.set_summary("worst_ratio", b.worst_ratio);
        r.set_summary("fitted_constant", b.fitted_constant);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_csv_layout() {
        let b = BoundReport::from_values(8, vec![0.5, 1.0], vec![0.25, 0.0], vec![0.5, 1.0], 1.5);
        assert_eq!(b.worst_ratio, 0.5);
        assert!(b.verified());
        assert_eq!(b.to_csv(), "n,x_or_t,lhs,rhs,ratio\n8,0.5,0.25,0.5,0.5\n8,1,0,1,0\n");
        let v: Value = serde_json::from_str(&b.to_json()).unwrap();
        assert_eq!(v["fitted_constant"], 1.5);
    }

    #[test]
    fn experiment_csv_roundtrips_floats() {
        let mut r = ExperimentReport::new("demo", &["n", "value"]).input("seed", 7);
        r.push_row(vec![1000.0, 0.1 + 0.2]);
        let csv = r.to_csv();
        let last: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(last, 0.1 + 0.2);
        assert_eq!(ExperimentReport::from(&BoundReport::from_values(1, vec![], vec![], vec![], 0.0)).rows.len(), 0);
    }
}
