//! Plain-text network files.
//!
//! ```text
//! hetvar-relu-net v1
//! arch <input_dim> <depth> <width>
//! hidden <s> weights <width*fan_in values, row-major>
//! hidden <s> biases <width values>
//! ...                                  (s = 0..depth-1)
//! output weights <width values>
//! output bias <value>
//! ```
//!
//! Values are written in shortest round-trip exponent form, so reading a
//! written file reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{Network, NetworkArch};

pub const FORMAT_HEADER: &str = "hetvar-relu-net v1";

fn push_values(line: &mut String, values: &[f64]) {
    for v in values {
        write!(line, " {v:e}").expect("writing to String");
    }
}

pub fn write_network<W: Write>(net: &Network, mut out: W) -> std::io::Result<()> {
    let arch = net.arch();
    writeln!(out, "{FORMAT_HEADER}")?;
    writeln!(out, "arch {} {} {}", arch.input_dim(), arch.depth(), arch.width())?;
    for s in 0..arch.depth() {
        let mut line = format!("hidden {s} weights");
        push_values(&mut line, net.layer_weights(s));
        writeln!(out, "{line}")?;
        let mut line = format!("hidden {s} biases");
        push_values(&mut line, net.layer_biases(s));
        writeln!(out, "{line}")?;
    }
    let mut line = String::from("output weights");
    push_values(&mut line, net.output_weights());
    writeln!(out, "{line}")?;
    writeln!(out, "output bias {:e}", net.output_bias())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.number += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.err(format!("read error: {e}"))),
            None => Err(self.err("unexpected end of file".into())),
        }
    }

    fn err(&self, reason: String) -> Error {
        Error::NetworkFormat {
            line: self.number,
            reason,
        }
    }

    /// Reads a line that starts with `prefix` and returns the parsed values after it.
    fn values(&mut self, prefix: &str, count: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let rest = line
            .strip_prefix(prefix)
            .ok_or_else(|| self.err(format!("expected `{prefix}`")))?;
        let vals = rest
            .split_ascii_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| self.err(e.to_string()))?;
        if vals.len() != count {
            return Err(self.err(format!("expected {count} values, found {}", vals.len())));
        }
        Ok(vals)
    }
}

pub fn read_network<R: BufRead>(input: R) -> Result<Network> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let header = lines.next_line()?;
    if header.trim_end() != FORMAT_HEADER {
        return Err(lines.err(format!("expected header `{FORMAT_HEADER}`")));
    }
    let dims = lines.values("arch", 3)?;
    if dims.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return Err(lines.err("arch entries must be positive integers".into()));
    }
    let arch = NetworkArch::new(dims[0] as usize, dims[1] as usize, dims[2] as usize)?;
    let mut weights = Vec::with_capacity(arch.depth());
    let mut biases = Vec::with_capacity(arch.depth());
    for s in 0..arch.depth() {
        let fan_in = if s == 0 { arch.input_dim() } else { arch.width() };
        weights.push(lines.values(&format!("hidden {s} weights"), arch.width() * fan_in)?);
        biases.push(lines.values(&format!("hidden {s} biases"), arch.width())?);
    }
    let out_w = lines.values("output weights", arch.width())?;
    let out_b = lines.values("output bias", 1)?;
    Network::from_parts(arch, &weights, &biases, &out_w, out_b[0])
}

impl Network {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(Error::io(path))?;
        let mut out = std::io::BufWriter::new(file);
        write_network(self, &mut out).map_err(Error::io(path))?;
        out.flush().map_err(Error::io(path))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::io(path))?;
        read_network(std::io::BufReader::new(file))
    }
}
