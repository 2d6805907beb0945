use serde_json::{json, Map, Value};

/// Output artifact: one header row, data rows, and a few summary values.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Vec<(String, Value)>,
    /// Extra JSON-only payload (castle models and the like).
    pub attachments: Vec<(String, Value)>,
}

pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub mode: String,
}

impl Provenance {
    fn line(&self) -> String {
        format!(
            "# llt {} command={} seed={} mode={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.seed,
            self.mode
        )
    }
}

fn csv_cell(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn attach(&mut self, key: &str, value: Value) {
        self.attachments.push((key.to_string(), value));
    }

    pub fn to_csv(&self, p: &Provenance) -> String {
        let mut out = p.line();
        out.push('\n');
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k}={}\n", csv_cell(v)));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, p: &Provenance) -> String {
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.clone());
        }
        let mut doc = json!({
            "provenance": {
                "version": env!("CARGO_PKG_VERSION"),
                "command": p.command,
                "seed": p.seed,
                "mode": p.mode,
            },
            "columns": self.columns,
            "rows": self.rows,
            "summary": summary,
        });
        for (k, v) in &self.attachments {
            doc[k] = v.clone();
        }
        let mut s = serde_json::to_string_pretty(&doc).expect("json value serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_lists() {
        let mut t = Table::new(&["n", "I"]);
        t.push(vec![json!(1000), json!("4,6,8")]);
        let p = Provenance {
            command: "index".into(),
            seed: 0,
            mode: "float".into(),
        };
        let csv = t.to_csv(&p);
        assert!(csv.ends_with("n,I\n1000,\"4,6,8\"\n"));
        assert!(csv.starts_with("# llt "));
    }
}
