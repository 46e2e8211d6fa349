//! CSV artifacts: a `# config_hash=` comment, a header row, then rows in `{:.16e}`.

use std::io::Write;

/// A named in-memory output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvTable {
    name: String,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(name: &str, config_hash: &str, header: &[&str]) -> Self {
        let mut buf = Vec::new();
        writeln!(buf, "# config_hash={config_hash}").expect("write to memory");
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header).expect("write to memory");
        Self {
            name: name.to_string(),
            writer,
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        self.writer
            .write_record(values.iter().map(|&v| format_number(v)))
            .expect("write to memory");
    }

    pub fn raw_row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("write to memory");
    }

    pub fn finish(self) -> Artifact {
        let bytes = self.writer.into_inner().expect("flush to memory");
        Artifact {
            name: self.name,
            contents: String::from_utf8(bytes).expect("csv output is utf-8"),
        }
    }
}
