//! Line-oriented text formats for contexts (field + lattice) and elements.
//!
//! Numbers are always written as reduced `p/q` strings, field elements as
//! power-basis tuples `(p/q, ...)`, permutations in one-line notation with
//! 1-based images.  Loading canonicalizes, so save -> load -> save is
//! byte-identical for canonical data.

use num_bigint::BigInt;
use num_traits::One;

use crate::flips::FlipMap;
use crate::ground::{Field, FieldSpec, GroundNum, Rat};
use crate::iet::IetMap;
use crate::lattice::Lattice;
use crate::{Error, Result};

const CONTEXT_MAGIC: &str = "ietabel context v1";
const ELEMENT_MAGIC: &str = "ietabel element v1";

/// A parsed context: the ground field and the breakpoint lattice.
#[derive(Clone, Debug)]
pub struct Context {
    pub field: Field,
    pub lattice: Lattice,
    generators: Vec<GroundNum>,
}

/// An element of either group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    Iet(IetMap),
    Flip(FlipMap),
}

impl Element {
    pub fn lattice(&self) -> &Lattice {
        match self {
            Element::Iet(f) => f.lattice(),
            Element::Flip(f) => f.lattice(),
        }
    }

    /// View as a flip element (embedding when orientation preserving).
    pub fn as_flip(&self) -> FlipMap {
        match self {
            Element::Iet(f) => crate::flips::embed(f),
            Element::Flip(f) => f.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// number rendering and parsing

pub fn render_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer '{num}'")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer '{den}'")))?;
    if d == BigInt::from(0) {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rat::new(n, d))
}

pub fn render_ground(x: &GroundNum) -> String {
    let parts: Vec<String> = x.coords().iter().map(render_rat).collect();
    format!("({})", parts.join(", "))
}

pub fn parse_ground(field: &Field, s: &str) -> Result<GroundNum> {
    let s = s.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected a (..) tuple, got '{s}'")))?;
    let mut coords = Vec::new();
    for part in inner.split(',') {
        coords.push(parse_rat(part)?);
    }
    if coords.len() > field.degree() {
        return Err(Error::Parse(format!(
            "tuple has {} coordinates but the field has degree {}",
            coords.len(),
            field.degree()
        )));
    }
    coords.resize(field.degree(), Rat::new(BigInt::from(0), BigInt::one()));
    field.from_coords(coords)
}

// ---------------------------------------------------------------------------
// context files

pub fn render_context(ctx: &Context) -> String {
    let spec = ctx.field.spec();
    let mut out = String::new();
    out.push_str(CONTEXT_MAGIC);
    out.push('\n');
    out.push_str("minpoly");
    for c in &spec.minpoly {
        out.push(' ');
        out.push_str(&c.to_string());
    }
    out.push('\n');
    out.push_str(&format!(
        "interval {} {}\n",
        render_rat(&spec.isolating.0),
        render_rat(&spec.isolating.1)
    ));
    for g in &ctx.generators {
        out.push_str(&format!("gen {}\n", render_ground(g)));
    }
    out
}

pub fn parse_context(text: &str) -> Result<Context> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let magic = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    if magic.trim() != CONTEXT_MAGIC {
        return Err(Error::Parse(format!("bad magic line '{magic}'")));
    }
    let mut minpoly: Option<Vec<BigInt>> = None;
    let mut interval: Option<(Rat, Rat)> = None;
    let mut gen_strings: Vec<String> = Vec::new();
    for line in lines {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("minpoly") {
            let coeffs: Result<Vec<BigInt>> = rest
                .split_whitespace()
                .map(|w| {
                    w.parse()
                        .map_err(|_| Error::Parse(format!("bad coefficient '{w}'")))
                })
                .collect();
            minpoly = Some(coeffs?);
        } else if let Some(rest) = line.strip_prefix("interval") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Parse("interval needs two endpoints".into()));
            }
            interval = Some((parse_rat(parts[0])?, parse_rat(parts[1])?));
        } else if let Some(rest) = line.strip_prefix("gen") {
            gen_strings.push(rest.trim().to_string());
        } else {
            return Err(Error::Parse(format!("unrecognized line '{line}'")));
        }
    }
    let minpoly = minpoly.ok_or_else(|| Error::Parse("missing minpoly line".into()))?;
    let isolating = interval.ok_or_else(|| Error::Parse("missing interval line".into()))?;
    let field = Field::new(FieldSpec { minpoly, isolating })?;
    let mut generators = Vec::new();
    for g in &gen_strings {
        generators.push(parse_ground(&field, g)?);
    }
    let lattice = Lattice::from_generators(&field, &generators)?;
    Ok(Context {
        field,
        lattice,
        generators,
    })
}

impl Context {
    pub fn new(field: Field, generators: Vec<GroundNum>) -> Result<Context> {
        let lattice = Lattice::from_generators(&field, &generators)?;
        Ok(Context {
            field,
            lattice,
            generators,
        })
    }
}

// ---------------------------------------------------------------------------
// element files

pub fn render_element(e: &Element) -> String {
    let (kind, breaks, tau, signs): (&str, &[GroundNum], &[usize], Option<String>) = match e {
        Element::Iet(f) => ("iet", f.breakpoints(), f.tau(), None),
        Element::Flip(f) => (
            "flip",
            f.breakpoints(),
            f.tau(),
            Some(
                f.signs()
                    .iter()
                    .map(|&s| if s { '-' } else { '+' })
                    .collect(),
            ),
        ),
    };
    let mut out = String::new();
    out.push_str(ELEMENT_MAGIC);
    out.push('\n');
    out.push_str(&format!("kind {kind}\n"));
    out.push_str(&format!("n {}\n", tau.len()));
    for w in breaks.windows(2) {
        out.push_str(&format!("alpha {}\n", render_ground(&w[1].sub_ref(&w[0]))));
    }
    let taus: Vec<String> = tau.iter().map(|t| (t + 1).to_string()).collect();
    out.push_str(&format!("tau {}\n", taus.join(" ")));
    if let Some(s) = signs {
        out.push_str(&format!("signs {s}\n"));
    }
    out
}

pub fn parse_element(ctx: &Context, text: &str) -> Result<Element> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let magic = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    if magic.trim() != ELEMENT_MAGIC {
        return Err(Error::Parse(format!("bad magic line '{magic}'")));
    }
    let mut kind: Option<String> = None;
    let mut n: Option<usize> = None;
    let mut alphas: Vec<GroundNum> = Vec::new();
    let mut tau: Option<Vec<usize>> = None;
    let mut signs: Option<Vec<bool>> = None;
    for line in lines {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("kind") {
            kind = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("alpha") {
            alphas.push(parse_ground(&ctx.field, rest)?);
        } else if let Some(rest) = line.strip_prefix("tau") {
            let images: Result<Vec<usize>> = rest
                .split_whitespace()
                .map(|w| {
                    let v: usize = w
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad tau image '{w}'")))?;
                    if v == 0 {
                        return Err(Error::Parse("tau images are 1-based".into()));
                    }
                    Ok(v - 1)
                })
                .collect();
            tau = Some(images?);
        } else if let Some(rest) = line.strip_prefix("signs") {
            let mut v = Vec::new();
            for c in rest.trim().chars() {
                match c {
                    '+' => v.push(false),
                    '-' => v.push(true),
                    _ => return Err(Error::Parse(format!("bad sign character '{c}'"))),
                }
            }
            signs = Some(v);
        } else if let Some(rest) = line.strip_prefix("n") {
            n = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad interval count".into()))?,
            );
        } else {
            return Err(Error::Parse(format!("unrecognized line '{line}'")));
        }
    }
    let kind = kind.ok_or_else(|| Error::Parse("missing kind line".into()))?;
    let tau = tau.ok_or_else(|| Error::Parse("missing tau line".into()))?;
    if let Some(n) = n {
        if n != alphas.len() {
            return Err(Error::Parse("interval count does not match alphas".into()));
        }
    }
    if tau.len() != alphas.len() {
        return Err(Error::Parse("tau length does not match alphas".into()));
    }
    match kind.as_str() {
        "iet" => {
            if signs.is_some() {
                return Err(Error::Parse("iet elements have no signs line".into()));
            }
            Ok(Element::Iet(IetMap::from_description(
                &ctx.lattice,
                &alphas,
                &tau,
            )?))
        }
        "flip" => {
            let signs = signs.ok_or_else(|| Error::Parse("missing signs line".into()))?;
            Ok(Element::Flip(FlipMap::from_description(
                &ctx.lattice,
                &alphas,
                &tau,
                &signs,
            )?))
        }
        other => Err(Error::Parse(format!("unknown element kind '{other}'"))),
    }
}

/// Split a stream of concatenated element blocks.
pub fn split_element_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        if line.trim() == ELEMENT_MAGIC && !current.trim().is_empty() {
            blocks.push(std::mem::take(&mut current));
        }
        if !line.trim().is_empty() {
            current.push_str(line);
            current.push('\n');
        }
    }
    if !current.trim().is_empty() {
        blocks.push(current);
    }
    blocks
}
