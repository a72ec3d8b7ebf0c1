use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;

/// Header of every record: the resolved configuration and what produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub solver_version: String,
    pub workers: usize,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(config: &RunConfig) -> Self {
        Metadata {
            solver_version: format!("jeans {}", env!("CARGO_PKG_VERSION")),
            workers: config.workers,
            config: config.clone(),
        }
    }
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

/// CSV table preceded by one `# config: {...}` comment line.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    preamble: String,
}

impl Table {
    pub fn new(meta: &Metadata, header: &[String]) -> Self {
        let echo = serde_json::to_string(meta).expect("metadata serializes");
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table {
            writer,
            preamble: format!("# config: {echo}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let body = self.writer.into_inner().expect("in-memory flush");
        self.preamble + &String::from_utf8(body).expect("csv is utf-8")
    }
}

/// Shortest round-trip form, exponent notation for small and large
/// magnitudes; empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => serde_json::to_string(&x).expect("finite floats serialize"),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}
