//! Canonical text form for transforms.
//!
//! ```text
//! spec     := compose | call
//! compose  := "compose" "[" spec (";" spec)* "]"
//! call     := name [ "(" [ arg ("," arg)* ] ")" ]
//! arg      := key "=" value
//! value    := number | "true" | "false" | word
//! ```
//!
//! Templates additionally accept `lo..hi` ranges for numeric values.
//! Whitespace between tokens is ignored. Numbers print in Rust's shortest
//! round-trip form, so `parse(spec.to_string()) == spec` for every valid spec.

use rand::Rng;

use super::{Affine, DomainMode, WarpSpec};
use crate::elastic::ElasticSpec;
use crate::error::{Error, Result};

pub(crate) fn write_spec(spec: &WarpSpec, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
    match spec {
        WarpSpec::XStretch { domain } => write!(f, "xstretch(domain={})", domain.as_str()),
        WarpSpec::YStretch { domain } => write!(f, "ystretch(domain={})", domain.as_str()),
        WarpSpec::Spherical { domain } => write!(f, "spherical(domain={})", domain.as_str()),
        WarpSpec::Daisy { exponent, domain } => {
            write!(f, "daisy(p={},domain={})", exponent, domain.as_str())
        }
        WarpSpec::Affine(a) => write!(
            f,
            "affine(rot={},sx={},sy={},tx={},ty={},flipx={},flipy={})",
            a.rot, a.sx, a.sy, a.tx, a.ty, a.flipx, a.flipy
        ),
        WarpSpec::Skew { kx, ky } => write!(f, "skew(kx={kx},ky={ky})"),
        WarpSpec::Elastic(e) => write!(f, "{e}"),
        WarpSpec::Compose(items) => {
            f.write_str("compose[")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(";")?;
                }
                write_spec(item, f)?;
            }
            f.write_str("]")
        }
    }
}

pub(crate) fn parse_spec(src: &str) -> Result<WarpSpec> {
    let node = Parser::new(src, false).parse_all()?;
    let spec = build(&node, src)?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Number(String),
    Range(f64, f64),
    Bool(bool),
    Word(String),
}

#[derive(Clone, Debug, PartialEq)]
struct Arg {
    key: String,
    offset: usize,
    value: Value,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Call {
        name: String,
        offset: usize,
        args: Vec<Arg>,
    },
    Compose {
        offset: usize,
        items: Vec<Node>,
    },
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    ranges: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, ranges: bool) -> Self {
        Self { src, pos: 0, ranges }
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> Error {
        let token: String = self.src[offset.min(self.src.len())..]
            .chars()
            .take_while(|c| !matches!(c, '(' | ')' | '[' | ']' | ',' | ';'))
            .take(24)
            .collect();
        let token = if token.is_empty() {
            self.src[offset.min(self.src.len())..]
                .chars()
                .next()
                .map(String::from)
                .unwrap_or_else(|| "<end>".into())
        } else {
            token
        };
        Error::SpecParse {
            offset,
            token,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(self.pos, format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos || !self.src[start..].starts_with(|c: char| c.is_ascii_alphabetic())
        {
            return Err(self.error(start, "expected a name"));
        }
        Ok((self.src[start..self.pos].to_ascii_lowercase(), start))
    }

    fn parse_all(mut self) -> Result<Node> {
        let node = self.node()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error(self.pos, "unexpected trailing input"));
        }
        Ok(node)
    }

    fn node(&mut self) -> Result<Node> {
        let (name, offset) = self.ident()?;
        if name == "compose" {
            self.expect('[')?;
            let mut items = vec![self.node()?];
            while self.eat(';') {
                items.push(self.node()?);
            }
            self.expect(']')?;
            return Ok(Node::Compose { offset, items });
        }
        let mut args = Vec::new();
        if self.eat('(') && !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        Ok(Node::Call { name, offset, args })
    }

    fn arg(&mut self) -> Result<Arg> {
        let (key, offset) = self.ident()?;
        self.expect('=')?;
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+' | '_') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let raw = &self.src[start..self.pos];
        if raw.is_empty() {
            return Err(self.error(start, format!("missing value for `{key}`")));
        }
        let value = match raw {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ if raw.starts_with(|c: char| c.is_ascii_alphabetic()) => Value::Word(raw.into()),
            _ if raw.contains("..") => {
                if !self.ranges {
                    return Err(self.error(start, "ranges are only allowed in plan templates"));
                }
                let (lo, hi) = raw.split_once("..").unwrap();
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| self.error(start, format!("bad range bound `{s}`")))
                };
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(self.error(start, "range lower bound exceeds upper bound"));
                }
                Value::Range(lo, hi)
            }
            _ => {
                if raw.parse::<f64>().is_err() {
                    return Err(self.error(start, format!("bad number `{raw}`")));
                }
                Value::Number(raw.into())
            }
        };
        Ok(Arg { key, offset, value })
    }
}

struct Args<'a> {
    name: &'a str,
    args: &'a [Arg],
    used: Vec<bool>,
    src: &'a str,
}

impl<'a> Args<'a> {
    fn new(name: &'a str, args: &'a [Arg], src: &'a str) -> Result<Self> {
        for (i, a) in args.iter().enumerate() {
            if args[..i].iter().any(|b| b.key == a.key) {
                return Err(parse_error(src, a.offset, format!("duplicate argument `{}`", a.key)));
            }
        }
        Ok(Self {
            name,
            args,
            used: vec![false; args.len()],
            src,
        })
    }

    fn take(&mut self, key: &str) -> Option<&'a Arg> {
        let i = self.args.iter().position(|a| a.key == key)?;
        self.used[i] = true;
        Some(&self.args[i])
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(Arg {
                value: Value::Number(raw),
                offset,
                ..
            }) => {
                let v: f64 = raw.parse().unwrap();
                if !v.is_finite() {
                    return Err(parse_error(self.src, *offset, format!("`{key}` must be finite")));
                }
                Ok(v)
            }
            Some(a) => Err(parse_error(
                self.src,
                a.offset,
                format!("`{key}` of {} expects a number", self.name),
            )),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some(Arg {
                value: Value::Number(raw),
                offset,
                ..
            }) => raw.parse().map_err(|_| {
                parse_error(
                    self.src,
                    *offset,
                    format!("`{key}` expects an unsigned integer, got `{raw}`"),
                )
            }),
            Some(a) => Err(parse_error(
                self.src,
                a.offset,
                format!("`{key}` of {} expects an unsigned integer", self.name),
            )),
        }
    }

    fn bool(&mut self, key: &str) -> Result<bool> {
        match self.take(key) {
            None => Ok(false),
            Some(Arg {
                value: Value::Bool(b),
                ..
            }) => Ok(*b),
            Some(a) => Err(parse_error(
                self.src,
                a.offset,
                format!("`{key}` expects true or false"),
            )),
        }
    }

    fn domain(&mut self) -> Result<DomainMode> {
        match self.take("domain") {
            None => Ok(DomainMode::default()),
            Some(Arg {
                value: Value::Word(w),
                offset,
                ..
            }) => match w.as_str() {
                "disk" => Ok(DomainMode::Disk),
                "square" => Ok(DomainMode::Square),
                _ => Err(parse_error(
                    self.src,
                    *offset,
                    format!("unknown domain `{w}` (expected disk or square)"),
                )),
            },
            Some(a) => Err(parse_error(self.src, a.offset, "domain expects disk or square")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.used.iter().position(|u| !u) {
            None => Ok(()),
            Some(i) => {
                let a = &self.args[i];
                Err(parse_error(
                    self.src,
                    a.offset,
                    format!("unknown argument `{}` for {}", a.key, self.name),
                ))
            }
        }
    }
}

fn parse_error(src: &str, offset: usize, message: impl Into<String>) -> Error {
    Parser::new(src, false).error(offset, message)
}

fn build(node: &Node, src: &str) -> Result<WarpSpec> {
    let (name, offset, args) = match node {
        Node::Compose { items, .. } => {
            return items
                .iter()
                .map(|n| build(n, src))
                .collect::<Result<Vec<_>>>()
                .map(WarpSpec::Compose)
        }
        Node::Call { name, offset, args } => (name.as_str(), *offset, args.as_slice()),
    };
    let mut a = Args::new(name, args, src)?;
    let spec = match name {
        "xstretch" => WarpSpec::XStretch { domain: a.domain()? },
        "ystretch" => WarpSpec::YStretch { domain: a.domain()? },
        "spherical" => WarpSpec::Spherical { domain: a.domain()? },
        "daisy" => WarpSpec::Daisy {
            exponent: a.f64("p", WarpSpec::DEFAULT_DAISY_EXPONENT)?,
            domain: a.domain()?,
        },
        "identity" => WarpSpec::identity(),
        "affine" => WarpSpec::Affine(Affine {
            rot: a.f64("rot", 0.0)?,
            sx: a.f64("sx", 1.0)?,
            sy: a.f64("sy", 1.0)?,
            tx: a.f64("tx", 0.0)?,
            ty: a.f64("ty", 0.0)?,
            flipx: a.bool("flipx")?,
            flipy: a.bool("flipy")?,
        }),
        "skew" => WarpSpec::Skew {
            kx: a.f64("kx", 0.0)?,
            ky: a.f64("ky", 0.0)?,
        },
        "elastic" => {
            let line = ElasticSpec::LINE;
            WarpSpec::Elastic(ElasticSpec {
                alpha: a.f64("alpha", line.alpha)?,
                sigma: a.f64("sigma", line.sigma)?,
                seed: a.u64("seed", 0)?,
            })
        }
        other => {
            return Err(parse_error(src, offset, format!("unknown transform `{other}`")));
        }
    };
    a.finish()?;
    Ok(spec)
}

/// A transform pattern whose numeric arguments may be `lo..hi` ranges,
/// e.g. `affine(rot=-0.05..0.05,sx=0.95..1.05)` or `elastic(alpha=8,sigma=16)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    source: String,
    node: Node,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self> {
        let node = Parser::new(src, true).parse_all()?;
        let template = Self {
            source: src.trim().to_string(),
            node,
        };
        // Both range ends must yield a valid spec.
        template.instantiate_with(&mut |lo, _| lo, None)?;
        template.instantiate_with(&mut |_, hi| hi, None)?;
        Ok(template)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// The transform name (`affine`, `xstretch`, `compose`, ...).
    pub fn name(&self) -> &str {
        match &self.node {
            Node::Call { name, .. } => name,
            Node::Compose { .. } => "compose",
        }
    }

    /// Draw every range uniformly from `rng`; elastic templates without an
    /// explicit seed get one from `rng` as well.
    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WarpSpec> {
        let mut draws = Vec::new();
        let mut seeds = Vec::new();
        count_draws(&self.node, &mut draws, &mut seeds);
        let values: Vec<f64> = draws
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
            .collect();
        let seeds: Vec<u64> = seeds.iter().map(|_| rng.next_u64()).collect();
        let mut vi = values.into_iter();
        let mut si = seeds.into_iter();
        let mut pick = |_: f64, _: f64| vi.next().expect("draw count");
        self.instantiate_with(&mut pick, Some(&mut si))
    }

    fn instantiate_with(
        &self,
        pick: &mut dyn FnMut(f64, f64) -> f64,
        mut seeds: Option<&mut dyn Iterator<Item = u64>>,
    ) -> Result<WarpSpec> {
        let node = concretize(&self.node, pick, &mut seeds);
        let spec = build(&node, &self.source)?;
        spec.validate()?;
        Ok(spec)
    }
}

impl std::fmt::Display for Template {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::parse(s)
    }
}

fn count_draws(node: &Node, draws: &mut Vec<(f64, f64)>, seeds: &mut Vec<()>) {
    match node {
        Node::Compose { items, .. } => items.iter().for_each(|n| count_draws(n, draws, seeds)),
        Node::Call { name, args, .. } => {
            for a in args {
                if let Value::Range(lo, hi) = a.value {
                    draws.push((lo, hi));
                }
            }
            if name == "elastic" && !args.iter().any(|a| a.key == "seed") {
                seeds.push(());
            }
        }
    }
}

fn concretize(
    node: &Node,
    pick: &mut dyn FnMut(f64, f64) -> f64,
    seeds: &mut Option<&mut dyn Iterator<Item = u64>>,
) -> Node {
    match node {
        Node::Compose { offset, items } => Node::Compose {
            offset: *offset,
            items: items.iter().map(|n| concretize(n, pick, seeds)).collect(),
        },
        Node::Call { name, offset, args } => {
            let mut args: Vec<Arg> = args
                .iter()
                .map(|a| match a.value {
                    Value::Range(lo, hi) => Arg {
                        value: Value::Number(pick(lo, hi).to_string()),
                        ..a.clone()
                    },
                    _ => a.clone(),
                })
                .collect();
            if name == "elastic" && !args.iter().any(|a| a.key == "seed") {
                if let Some(it) = seeds.as_mut() {
                    let seed = it.next().expect("seed count");
                    args.push(Arg {
                        key: "seed".into(),
                        offset: *offset,
                        value: Value::Number(seed.to_string()),
                    });
                }
            }
            Node::Call {
                name: name.clone(),
                offset: *offset,
                args,
            }
        }
    }
}
