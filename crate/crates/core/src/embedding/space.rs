use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::skipgram::dot;
use crate::error::{Error, Result};
use crate::fmt::significant;

/// Cosine similarity, `None` when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Word vectors of one snapshot, rows in vocabulary-id order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    label: String,
    words: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    normalized: bool,
}

impl EmbeddingSpace {
    pub fn new(label: impl Into<String>, words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        if data.len() != words.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: words.len() * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("embedding contains non-finite values".into()));
        }
        Ok(EmbeddingSpace {
            label: label.into(),
            words,
            dim,
            data,
            normalized: false,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn vector(&self, id: u32) -> &[f64] {
        &self.data[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.words.iter().position(|w| w == word).map(|i| i as u32)
    }

    /// Scales every vector to unit L2 norm.
    pub fn normalize(&mut self) -> Result<()> {
        for (row, word) in self.data.chunks_exact_mut(self.dim).zip(&self.words) {
            let norm = dot(row, row).sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroNorm(word.clone()));
            }
            row.iter_mut().for_each(|x| *x /= norm);
        }
        self.normalized = true;
        Ok(())
    }

    /// Text format: a `<vocab_size> <dim>` header, then one
    /// `<word> <v1> … <vd>` line per word with 6 significant digits.
    pub fn write_text<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.words.len(), self.dim)?;
        for (word, row) in self.words.iter().zip(self.data.chunks_exact(self.dim)) {
            out.write_all(word.as_bytes())?;
            for &x in row {
                write!(out, " {}", significant(x, 6))?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(file).map_err(|e| Error::io(path, e))
    }

    /// Reads the text format. The result is marked normalized when every
    /// stored vector has unit norm to within the format's precision; it is
    /// then renormalized exactly.
    pub fn read_text<R: Read>(label: impl Into<String>, input: R, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?
            .map_err(|e| Error::io(origin, e))?;
        let mut fields = header.split_whitespace();
        let (Some(n), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(1, "header must be \"<vocab_size> <dim>\"".into()));
        };
        let n: usize = n.parse().map_err(|_| parse_err(1, format!("bad vocabulary size {n:?}")))?;
        let dim: usize = dim.parse().map_err(|_| parse_err(1, format!("bad dimension {dim:?}")))?;

        let mut words = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let word = fields.next().unwrap_or_default();
            let before = data.len();
            for f in fields {
                data.push(f.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad number {f:?}")))?);
            }
            if data.len() - before != dim {
                return Err(parse_err(lineno, format!("expected {dim} values for {word:?}")));
            }
            words.push(word.to_owned());
        }
        if words.len() != n {
            return Err(parse_err(1, format!("header announces {n} words, found {}", words.len())));
        }
        let mut space = EmbeddingSpace::new(label, words, dim, data)?;
        let unit = space
            .data
            .chunks_exact(dim)
            .all(|row| (dot(row, row).sqrt() - 1.0).abs() < 1e-4);
        if unit {
            space.normalize()?;
        }
        Ok(space)
    }

    pub fn load(label: impl Into<String>, path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(label, file, path)
    }
}
