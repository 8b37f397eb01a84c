//! CSV output with `#`-prefixed metadata lines.
//!
//! Reals are written in scientific notation, as the shortest digit string that
//! reads back to the identical `f64`, padded with zeros to at least 12
//! significant digits.

use std::fmt::Write as _;

/// Minimum significant digits of a full-precision real.
const FULL_DIGITS: usize = 12;

/// Significant digits of the optional rounded display.
const PAPER_DIGITS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(i64::from(x))
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Round-trippable values; always used for files.
    Full,
    /// Values rounded to four significant digits for reading on a terminal.
    Paper,
}

pub fn format_real(x: f64, precision: Precision) -> String {
    match precision {
        Precision::Full => {
            let shortest = format!("{x:e}");
            let mantissa = shortest.split('e').next().unwrap_or("");
            let digits = mantissa.chars().filter(char::is_ascii_digit).count();
            if digits >= FULL_DIGITS || !x.is_finite() {
                shortest
            } else {
                format!("{x:.*e}", FULL_DIGITS - 1)
            }
        }
        Precision::Paper => {
            if x == 0.0 || !x.is_finite() {
                return format!("{x}");
            }
            let rounded: f64 = format!("{x:.*e}", PAPER_DIGITS - 1).parse().unwrap();
            Num(rounded).to_string()
        }
    }
}

/// A real in metadata: plain decimal for moderate magnitudes, scientific
/// otherwise; always the shortest form that reads back exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let x = self.0;
        if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
            write!(f, "{x}")
        } else {
            write!(f, "{x:e}")
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvReport {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvReport {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: vec![("tool".into(), format!("muxphoton {}", env!("CARGO_PKG_VERSION")))],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, precision: Precision) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            for line in v.lines() {
                writeln!(out, "# {k}: {line}").unwrap();
            }
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).unwrap();
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Real(x) => format_real(*x, precision),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            }))
            .unwrap();
        }
        out.push_str(&String::from_utf8(w.into_inner().unwrap()).unwrap());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [
            0.1,
            0.3,
            0.996,
            1.0 / 3.0,
            0.367_879_441_171_442_3,
            1.5e-5,
            6.02e23,
            0.0,
            5e-324,
        ] {
            let s = format_real(x, Precision::Full);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap();
            assert!(mantissa.chars().filter(char::is_ascii_digit).count() >= 12, "{s}");
        }
    }

    #[test]
    fn paper_precision_rounds() {
        assert_eq!(format_real(0.889_512_3, Precision::Paper), "0.8895");
        assert_eq!(format_real(6.459_87, Precision::Paper), "6.46");
        assert_eq!(format_real(1.523e-5, Precision::Paper), "1.523e-5");
    }

    #[test]
    fn metadata_numbers() {
        assert_eq!(Num(1e-10).to_string(), "1e-10");
        assert_eq!(Num(0.996).to_string(), "0.996");
        assert_eq!(Num(4.521e-12).to_string(), "4.521e-12");
        assert_eq!(Num(1.0).to_string(), "1");
    }

    #[test]
    fn layout() {
        let mut r = CsvReport::new(&["i", "P_i"]);
        r.meta("scheme", "ideal");
        r.push(vec![Cell::from(1u32), Cell::from(0.5)]);
        r.push(vec![Cell::from("a,b"), Cell::Empty]);
        let text = r.render(Precision::Full);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool: muxphoton "));
        assert_eq!(lines[1], "# scheme: ideal");
        assert_eq!(lines[2], "i,P_i");
        assert_eq!(lines[3], "1,5.00000000000e-1");
        assert_eq!(lines[4], "\"a,b\",");
        assert!(text.ends_with('\n'));
    }
}
