//! Text formats: `swfield v1` field files, `key=value` run configurations
//! and reports.
//!
//! A field file is a header line
//!
//! ```text
//! swfield v1 kind=<scalar|oneform|twoform|spinor> dims=d1,d2,d3,d4 h=<real>
//! ```
//!
//! followed by one line per cell in the domain, in site order (x₁ fastest)
//! and axis-set order within a site. Scalar and form cells carry one real,
//! spinor sites four (`re₁ im₁ re₂ im₂`). Numbers are written in shortest
//! round-trip exponent notation.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gauge::Mode;
use crate::lattice::{axis_sets, Domain, Form, KgSpec, DIM};
use crate::solver::SolverConfig;
use crate::value::{FieldValue, Spinor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    OneForm,
    TwoForm,
    Spinor,
}

impl FieldKind {
    pub fn degree(self) -> usize {
        match self {
            FieldKind::Scalar | FieldKind::Spinor => 0,
            FieldKind::OneForm => 1,
            FieldKind::TwoForm => 2,
        }
    }

    fn reals(self) -> usize {
        match self {
            FieldKind::Spinor => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Scalar => "scalar",
            FieldKind::OneForm => "oneform",
            FieldKind::TwoForm => "twoform",
            FieldKind::Spinor => "spinor",
        })
    }
}

impl FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(FieldKind::Scalar),
            "oneform" => Ok(FieldKind::OneForm),
            "twoform" => Ok(FieldKind::TwoForm),
            "spinor" => Ok(FieldKind::Spinor),
            other => Err(Error::Parse(format!("header: unknown kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub kind: FieldKind,
    pub dims: [usize; DIM],
    pub h: f64,
}

impl FieldHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("swfield") || parts.next() != Some("v1") {
            return Err(Error::Parse("line 1: expected 'swfield v1' header".into()));
        }
        let (mut kind, mut dims, mut h) = (None, None, None);
        for tok in parts {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line 1: malformed header token '{tok}'")))?;
            match k {
                "kind" => kind = Some(v.parse::<FieldKind>()?),
                "dims" => {
                    dims = Some(parse_dims(v).map_err(|e| Error::Parse(format!("line 1: {e}")))?)
                }
                "h" => {
                    h = Some(
                        v.parse::<f64>()
                            .map_err(|_| Error::Parse(format!("line 1: bad h '{v}'")))?,
                    )
                }
                other => {
                    return Err(Error::Parse(format!(
                        "line 1: unknown header key '{other}'"
                    )))
                }
            }
        }
        Ok(FieldHeader {
            kind: kind.ok_or_else(|| Error::Parse("line 1: header lacks kind".into()))?,
            dims: dims.ok_or_else(|| Error::Parse("line 1: header lacks dims".into()))?,
            h: h.ok_or_else(|| Error::Parse("line 1: header lacks h".into()))?,
        })
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.dims, self.h, KgSpec::Constant(0.0), 0.0)
    }
}

impl fmt::Display for FieldHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dims;
        write!(
            f,
            "swfield v1 kind={} dims={},{},{},{} h={:e}",
            self.kind, d[0], d[1], d[2], d[3], self.h
        )
    }
}

pub fn parse_dims(s: &str) -> Result<[usize; DIM]> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad dims '{s}'")))?;
    v.try_into()
        .map_err(|_| Error::Parse(format!("dims need 4 entries, got '{s}'")))
}

/// A parsed field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: FieldHeader,
    /// Reals of every defined cell, in file order.
    pub reals: Vec<f64>,
}

impl FieldFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = FieldHeader::parse(
            lines
                .next()
                .ok_or_else(|| Error::Parse("empty field file".into()))?,
        )?;
        let domain = header.domain()?;
        let per = header.kind.reals();
        let expected = domain.count_cells(header.kind.degree());
        let mut reals = Vec::with_capacity(expected * per);
        let mut records = 0;
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 2;
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("line {lineno}: malformed number")))?;
            if nums.len() != per {
                return Err(Error::Parse(format!(
                    "line {lineno}: expected {per} values for kind={}, got {}",
                    header.kind,
                    nums.len()
                )));
            }
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("line {lineno}: non-finite value")));
            }
            reals.extend(nums);
            records += 1;
        }
        if records != expected {
            return Err(Error::Parse(format!(
                "record count: expected {expected} records for kind={} dims={:?}, got {records}",
                header.kind, header.dims
            )));
        }
        Ok(FieldFile { header, reals })
    }

    /// Rebuild the form on `domain` after checking the header against it.
    pub fn to_form<T: FieldValue>(&self, domain: &Domain, kind: FieldKind) -> Result<Form<T>> {
        if self.header.kind != kind {
            return Err(Error::Parse(format!(
                "header: expected kind={kind}, got kind={}",
                self.header.kind
            )));
        }
        if T::REALS != kind.reals() {
            return Err(Error::Mismatch(format!(
                "kind={kind} does not match the coefficient type"
            )));
        }
        if self.header.dims != domain.dims() {
            return Err(Error::Parse(format!(
                "header: dims {:?} do not match domain {:?}",
                self.header.dims,
                domain.dims()
            )));
        }
        if (self.header.h - domain.h()).abs() > 1e-12 * domain.h() {
            return Err(Error::Parse(format!(
                "header: h={} does not match domain h={}",
                self.header.h,
                domain.h()
            )));
        }
        let degree = kind.degree();
        let mut chunks = self.reals.chunks(T::REALS);
        Ok(Form::from_fn(domain, degree, |_, _| {
            T::from_reals(chunks.next().expect("record count checked"))
        }))
    }
}

/// Serialise a form.
pub fn write_field<T: FieldValue>(
    domain: &Domain,
    kind: FieldKind,
    form: &Form<T>,
) -> Result<String> {
    if form.degree() != kind.degree() || T::REALS != kind.reals() {
        return Err(Error::Mismatch(format!(
            "form of degree {} cannot be written as {kind}",
            form.degree()
        )));
    }
    let header = FieldHeader {
        kind,
        dims: domain.dims(),
        h: domain.h(),
    };
    let mut out = format!("{header}\n");
    let sets = axis_sets(kind.degree()).len();
    let mut buf = Vec::with_capacity(4);
    for s in 0..domain.num_sites() {
        for c in 0..sets {
            if !domain.cell_defined(kind.degree(), s, c) {
                continue;
            }
            buf.clear();
            form.get(s, c).write_reals(&mut buf);
            let line: Vec<String> = buf.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn read_form<T: FieldValue>(path: &Path, domain: &Domain, kind: FieldKind) -> Result<Form<T>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    FieldFile::parse(&text)
        .and_then(|f| f.to_form(domain, kind))
        .map_err(|e| prefix_error(path, e))
}

pub fn write_form<T: FieldValue>(
    path: &Path,
    domain: &Domain,
    kind: FieldKind,
    form: &Form<T>,
) -> Result<()> {
    std::fs::write(path, write_field(domain, kind, form)?)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn prefix_error(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn read_spinor(path: &Path, domain: &Domain) -> Result<Form<Spinor>> {
    read_form(path, domain, FieldKind::Spinor)
}

/// Curvature data: a number or a scalar field file.
#[derive(Debug, Clone, PartialEq)]
pub enum KgValue {
    Constant(f64),
    File(String),
}

impl fmt::Display for KgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KgValue::Constant(v) => write!(f, "{v}"),
            KgValue::File(p) => write!(f, "@{p}"),
        }
    }
}

/// Everything a CLI run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dims: [usize; DIM],
    pub h: f64,
    pub kg: KgValue,
    pub alpha_sq: f64,
    pub solver: SolverConfig,
    /// Amplitude of the random starting point of `solve`.
    pub init_scale: f64,
    pub out: String,
    pub epsilon: f64,
    pub p: f64,
    pub ensemble_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dims: [4; DIM],
            h: 0.5,
            kg: KgValue::Constant(0.0),
            alpha_sq: 0.0,
            solver: SolverConfig::default(),
            init_scale: 0.1,
            out: "run".into(),
            epsilon: 0.5,
            p: 1.5,
            ensemble_size: 100,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::Parse(format!("config line {line}: bad value '{v}' for {key}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {n}: expected key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            let s = &mut c.solver;
            match k {
                "dims" => {
                    c.dims =
                        parse_dims(v).map_err(|e| Error::Parse(format!("config line {n}: {e}")))?
                }
                "h" => c.h = num(k, v, n)?,
                "kg" => {
                    c.kg = match v.strip_prefix('@') {
                        Some(p) => KgValue::File(p.to_string()),
                        None => KgValue::Constant(num(k, v, n)?),
                    }
                }
                "alpha_sq" => c.alpha_sq = num(k, v, n)?,
                "mode" => {
                    s.mode = v
                        .parse::<Mode>()
                        .map_err(|e| Error::Parse(format!("config line {n}: {e}")))?
                }
                "tol" => s.tol = num(k, v, n)?,
                "max_iters" => s.max_iters = num(k, v, n)?,
                "initial_step" => s.initial_step = num(k, v, n)?,
                "shrink" => s.shrink = num(k, v, n)?,
                "armijo_c" => s.armijo_c = num(k, v, n)?,
                "max_backtracks" => s.max_backtracks = num(k, v, n)?,
                "monitor_cadence" => s.monitor_cadence = num(k, v, n)?,
                "energy_bound" => s.energy_bound = num(k, v, n)?,
                "phi_bound" => s.phi_bound = num(k, v, n)?,
                "seed" => s.seed = num(k, v, n)?,
                "init_scale" => c.init_scale = num(k, v, n)?,
                "out" => c.out = v.to_string(),
                "epsilon" => c.epsilon = num(k, v, n)?,
                "p" => c.p = num(k, v, n)?,
                "ensemble_size" => c.ensemble_size = num(k, v, n)?,
                other => {
                    return Err(Error::Parse(format!(
                        "config line {n}: unknown key '{other}'"
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.dims.iter().find(|&&d| d < 3) {
            return Err(Error::Parse(format!(
                "config: dims entries must be >= 3, got {d}"
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Parse(format!(
                "config: h must be positive, got {}",
                self.h
            )));
        }
        if !self.alpha_sq.is_finite() {
            return Err(Error::Parse("config: alpha_sq must be finite".into()));
        }
        if let KgValue::Constant(k) = self.kg {
            if !k.is_finite() {
                return Err(Error::Parse("config: kg must be finite".into()));
            }
        }
        self.solver
            .validate()
            .map_err(|e| Error::Parse(format!("config: {e}")))?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parse(format!(
                "config: epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.p > 1.0 && self.p < 2.0) {
            return Err(Error::Parse(format!(
                "config: p must lie in (1, 2), got {}",
                self.p
            )));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Parse(
                "config: init_scale must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Normalised text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let s = &self.solver;
        let d = self.dims;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("dims", format!("{},{},{},{}", d[0], d[1], d[2], d[3]));
        kv("h", self.h.to_string());
        kv("kg", self.kg.to_string());
        kv("alpha_sq", self.alpha_sq.to_string());
        kv("mode", s.mode.to_string());
        kv("tol", s.tol.to_string());
        kv("max_iters", s.max_iters.to_string());
        kv("initial_step", s.initial_step.to_string());
        kv("shrink", s.shrink.to_string());
        kv("armijo_c", s.armijo_c.to_string());
        kv("max_backtracks", s.max_backtracks.to_string());
        kv("monitor_cadence", s.monitor_cadence.to_string());
        kv("energy_bound", s.energy_bound.to_string());
        kv("phi_bound", s.phi_bound.to_string());
        kv("seed", s.seed.to_string());
        kv("init_scale", self.init_scale.to_string());
        kv("out", self.out.clone());
        kv("epsilon", self.epsilon.to_string());
        kv("p", self.p.to_string());
        kv("ensemble_size", self.ensemble_size.to_string());
        out
    }

    /// Build the domain; a `@file` curvature is resolved relative to `base`.
    pub fn domain(&self, base: Option<&Path>) -> Result<Domain> {
        let kg = match &self.kg {
            KgValue::Constant(v) => KgSpec::Constant(*v),
            KgValue::File(p) => {
                let path = match base {
                    Some(b) if Path::new(p).is_relative() => b.join(p),
                    _ => Path::new(p).to_path_buf(),
                };
                let flat = Domain::new(self.dims, self.h, KgSpec::Constant(0.0), 0.0)?;
                let f: Form<f64> = read_form(&path, &flat, FieldKind::Scalar)?;
                KgSpec::Table(f.values().to_vec())
            }
        };
        Domain::new(self.dims, self.h, kg, self.alpha_sq)
    }
}

/// Ordered `key=value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    /// Floats in exponent notation.
    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, format!("{value:e}"))
    }

    pub fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.push(key, "none"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Report::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("report line {}: expected key=value", i + 1))
            })?;
            r.entries.push((k.to_string(), v.to_string()));
        }
        Ok(r)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
