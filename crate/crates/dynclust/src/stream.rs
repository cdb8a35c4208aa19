//! Edge-stream text format.
//!
//! ```text
//! n 4
//! e 0 1 2.5
//! e 1 2 1
//! ```
//!
//! The first command fixes the vertex count; every later `e u v w` line is
//! one insertion. Tokens are whitespace separated. Blank lines and lines
//! starting with `#` are skipped.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::VertexId;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStream {
    pub n: usize,
    pub edges: Vec<(VertexId, VertexId, f64)>,
}

impl EdgeStream {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(u, v, w) in &self.edges {
            writeln!(out, "e {u} {v} {w}").expect("writing to a string");
        }
        out
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse(text.as_bytes())
    }

    /// Parse a stream. Vertex ranges and weights are checked here; the
    /// weight cap is left to the graph.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut stream: Option<EdgeStream> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = line.map_err(|e| err(e.to_string()))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() || toks[0].starts_with('#') {
                continue;
            }
            match (toks[0], &mut stream) {
                ("n", None) => {
                    if toks.len() != 2 {
                        return Err(err(format!("expected `n <count>`, got {line:?}")));
                    }
                    let n: usize =
                        toks[1].parse().map_err(|_| err(format!("bad vertex count {:?}", toks[1])))?;
                    if n == 0 {
                        return Err(err("vertex count must be positive".into()));
                    }
                    stream = Some(EdgeStream::new(n));
                }
                ("n", Some(_)) => return Err(err("duplicate `n` header".into())),
                ("e", None) => return Err(err("edge before the `n` header".into())),
                ("e", Some(s)) => {
                    if toks.len() != 4 {
                        return Err(err(format!("expected `e <u> <v> <w>`, got {line:?}")));
                    }
                    let vertex = |t: &str| -> Result<VertexId> {
                        let v: VertexId =
                            t.parse().map_err(|_| err(format!("bad vertex id {t:?}")))?;
                        if v >= s.n {
                            return Err(err(format!("vertex {v} out of range for n = {}", s.n)));
                        }
                        Ok(v)
                    };
                    let u = vertex(toks[1])?;
                    let v = vertex(toks[2])?;
                    let w: f64 =
                        toks[3].parse().map_err(|_| err(format!("bad weight {:?}", toks[3])))?;
                    if u == v {
                        return Err(err(format!("self-loop on vertex {u}")));
                    }
                    if !(w >= 1.0) || !w.is_finite() {
                        return Err(err(format!("weight must be a finite real ≥ 1, got {w}")));
                    }
                    s.edges.push((u, v, w));
                }
                (cmd, _) => return Err(err(format!("unknown command {cmd:?}"))),
            }
        }
        stream.ok_or(Error::Parse { line: 0, msg: "missing `n <count>` header".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = EdgeStream { n: 3, edges: vec![(0, 1, 2.5), (1, 2, 1.0)] };
        assert_eq!(EdgeStream::parse_str(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = EdgeStream::parse_str("# demo\n\nn 2\n  e 0 1 3\n").unwrap();
        assert_eq!(s.edges, vec![(0, 1, 3.0)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("n 3\ne 0 1\n", 2),
            ("n 3\ne 0 5 1\n", 2),
            ("n 3\ne 0 1 1\ne 1 1 2\n", 3),
            ("n 3\ne 0 1 0.5\n", 2),
            ("e 0 1 1\n", 1),
            ("n 3\nx 1\n", 2),
            ("n 3\nn 4\n", 2),
            ("n zero\n", 1),
        ];
        for (text, line) in cases {
            match EdgeStream::parse_str(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(matches!(EdgeStream::parse_str(""), Err(Error::Parse { line: 0, .. })));
    }
}
