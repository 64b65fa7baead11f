use std::fmt::Write as _;
use std::io::{self, Write};

/// 17 significant digits, so every value reads back to the same `f64`.
pub fn real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Rows are buffered and written in order with LF line endings.
pub struct Table {
    buf: String,
    width: usize,
}

pub enum Cell {
    Real(f64),
    Int(u64),
    Text(&'static str),
    Bool(bool),
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf, width: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match c {
                Cell::Real(v) => self.buf.push_str(&real(*v)),
                Cell::Int(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                Cell::Text(s) => self.buf.push_str(s),
                Cell::Bool(b) => self.buf.push_str(if *b { "true" } else { "false" }),
            }
        }
        self.buf.push('\n');
    }

    pub fn write_to(&self, path: &std::path::Path) -> io::Result<()> {
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.buf.as_bytes())?;
        f.flush()
    }
}
