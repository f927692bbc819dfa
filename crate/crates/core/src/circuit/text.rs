//! Line-oriented circuit description format.
//!
//! ```text
//! # comment to end of line
//! atoms 1
//! port in in
//! port out out
//! port discard discard
//! path p1
//! cpbs in=in,vac out=p1,p2      # R keeps its line, L crosses
//! hwp path=p1                   # photon Hadamard
//! sigmax path=p1                # photon bit flip
//! atomh atom=0                  # atom Hadamard
//! cavity path=p2 atom=0         # reflection amplitudes bound at run time
//! mirror from=p2 to=p3          # relabel, no phase
//! checkpoint psi1
//! ```
//!
//! Locations must be declared before use and `atoms` must precede every
//! element. Whitespace around `=` and `,` is ignored. Element order in the
//! file is application order.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::{Checkpoint, CircuitSpec, LocationKind};
use crate::state::{gate_basis_label, AtomBits, BasisLabel, Element, LocationId, Polarization, MAX_ATOMS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based character column.
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownElement(String),
    UnregisteredLocation(String),
    DuplicatePort(LocationKind),
    DuplicateLocation(String),
    MissingPort(LocationKind),
    AtomOutOfRange { index: usize, atom_count: usize },
    InvalidWiring(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownElement(name) => write!(f, "unknown element kind '{name}'"),
            ParseErrorKind::UnregisteredLocation(name) => write!(f, "unregistered location '{name}'"),
            ParseErrorKind::DuplicatePort(kind) => write!(f, "duplicate '{kind}' port declaration"),
            ParseErrorKind::DuplicateLocation(name) => write!(f, "location '{name}' declared twice"),
            ParseErrorKind::MissingPort(kind) => write!(f, "missing '{kind}' port declaration"),
            ParseErrorKind::AtomOutOfRange { index, atom_count } => {
                write!(f, "atom index {index} out of range (atoms {atom_count})")
            }
            ParseErrorKind::InvalidWiring(msg) => write!(f, "invalid wiring: {msg}"),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.kind)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind<'a> {
    Word(&'a str),
    Equals,
    Comma,
}

#[derive(Debug, Clone)]
struct Token<'a> {
    kind: TokenKind<'a>,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().enumerate().peekable();
    while let Some((col, (start, ch))) = chars.next() {
        let column = col + 1;
        match ch {
            '#' => break,
            '=' => tokens.push(Token {
                kind: TokenKind::Equals,
                column,
            }),
            ',' => tokens.push(Token {
                kind: TokenKind::Comma,
                column,
            }),
            c if c.is_whitespace() => {}
            _ => {
                let mut end = start + ch.len_utf8();
                while let Some(&(_, (i, c))) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '=' | ',' | '#') {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                tokens.push(Token {
                    kind: TokenKind::Word(&line[start..end]),
                    column,
                });
            }
        }
    }
    tokens
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

struct Arg<'a> {
    key: &'a str,
    key_column: usize,
    values: Vec<(&'a str, usize)>,
}

impl<'a> LineParser<'a> {
    fn error(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn syntax(&self, column: usize, msg: impl Into<String>) -> ParseError {
        self.error(column, ParseErrorKind::Syntax(msg.into()))
    }

    fn next_column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn word(&mut self, what: &str) -> Result<(&'a str, usize), ParseError> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Word(w),
                column,
            }) => {
                self.pos += 1;
                Ok((w, *column))
            }
            _ => Err(self.syntax(self.next_column(), format!("expected {what}"))),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(self.syntax(t.column, "unexpected trailing input")),
        }
    }

    /// Parses `key=value[,value...]` groups until the end of the line.
    fn args(&mut self) -> Result<Vec<Arg<'a>>, ParseError> {
        let mut args: Vec<Arg<'a>> = Vec::new();
        while self.pos < self.tokens.len() {
            let (key, key_column) = self.word("argument name")?;
            if args.iter().any(|a| a.key == key) {
                return Err(self.syntax(key_column, format!("argument '{key}' given twice")));
            }
            match self.tokens.get(self.pos) {
                Some(Token {
                    kind: TokenKind::Equals,
                    ..
                }) => self.pos += 1,
                _ => return Err(self.syntax(self.next_column(), format!("expected '=' after '{key}'"))),
            }
            let mut values = vec![self.word("argument value")?];
            while let Some(Token {
                kind: TokenKind::Comma, ..
            }) = self.tokens.get(self.pos)
            {
                self.pos += 1;
                values.push(self.word("argument value after ','")?);
            }
            args.push(Arg {
                key,
                key_column,
                values,
            });
        }
        Ok(args)
    }
}

/// Expected argument keys and their arities for an element line.
fn take_args<'a>(
    p: &LineParser<'a>,
    keyword_column: usize,
    args: Vec<Arg<'a>>,
    wanted: &[(&str, usize)],
) -> Result<Vec<Vec<(&'a str, usize)>>, ParseError> {
    for arg in &args {
        if !wanted.iter().any(|(k, _)| *k == arg.key) {
            return Err(p.syntax(arg.key_column, format!("unexpected argument '{}'", arg.key)));
        }
    }
    wanted
        .iter()
        .map(|(key, arity)| {
            let arg = args
                .iter()
                .find(|a| a.key == *key)
                .ok_or_else(|| p.syntax(keyword_column, format!("missing argument '{key}'")))?;
            if arg.values.len() != *arity {
                return Err(p.syntax(
                    arg.key_column,
                    format!("argument '{key}' takes {arity} value(s), got {}", arg.values.len()),
                ));
            }
            Ok(arg.values.clone())
        })
        .collect()
}

fn is_identifier(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Default)]
struct Declarations {
    atom_count: Option<usize>,
    locations: Vec<(String, LocationKind)>,
    elements: Vec<Element>,
    checkpoints: Vec<Checkpoint>,
}

impl Declarations {
    fn resolve(&self, p: &LineParser<'_>, (name, column): (&str, usize)) -> Result<LocationId, ParseError> {
        self.locations
            .iter()
            .position(|(n, _)| n == name)
            .map(LocationId)
            .ok_or_else(|| p.error(column, ParseErrorKind::UnregisteredLocation(name.to_string())))
    }

    fn atom(&self, p: &LineParser<'_>, (text, column): (&str, usize)) -> Result<usize, ParseError> {
        let index: usize = text
            .parse()
            .map_err(|_| p.syntax(column, format!("atom index '{text}' is not a non-negative integer")))?;
        let atom_count = self.atom_count.unwrap_or(0);
        if index >= atom_count {
            return Err(p.error(column, ParseErrorKind::AtomOutOfRange { index, atom_count }));
        }
        Ok(index)
    }
}

/// Parses a circuit description into a validated [`CircuitSpec`].
pub fn parse_circuit(text: &str) -> Result<CircuitSpec, ParseError> {
    let mut decl = Declarations::default();
    let mut last_line = 0;
    for (index, raw) in text.lines().enumerate() {
        last_line = index + 1;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line: index + 1,
            tokens,
            pos: 0,
            end_column: raw.chars().count() + 1,
        };
        let (keyword, kw_col) = p.word("keyword")?;
        match keyword {
            "atoms" => {
                if decl.atom_count.is_some() {
                    return Err(p.syntax(kw_col, "atoms declared twice"));
                }
                if !decl.elements.is_empty() {
                    return Err(p.syntax(kw_col, "atoms must be declared before any element"));
                }
                let (n, col) = p.word("atom count")?;
                let n: usize = n
                    .parse()
                    .map_err(|_| p.syntax(col, format!("atom count '{n}' is not a non-negative integer")))?;
                if n > MAX_ATOMS {
                    return Err(p.syntax(col, format!("at most {MAX_ATOMS} atoms are supported")));
                }
                p.finish()?;
                decl.atom_count = Some(n);
            }
            "path" | "port" => {
                let kind = if keyword == "path" {
                    LocationKind::Path
                } else {
                    let (role, col) = p.word("port role (in, out or discard)")?;
                    match role {
                        "in" => LocationKind::Input,
                        "out" => LocationKind::Output,
                        "discard" => LocationKind::Discard,
                        other => return Err(p.syntax(col, format!("unknown port role '{other}'"))),
                    }
                };
                let (name, col) = p.word("location name")?;
                if !is_identifier(name) {
                    return Err(p.syntax(col, format!("invalid location name '{name}'")));
                }
                p.finish()?;
                if kind != LocationKind::Path && decl.locations.iter().any(|(_, k)| *k == kind) {
                    return Err(p.error(kw_col, ParseErrorKind::DuplicatePort(kind)));
                }
                if decl.locations.iter().any(|(n, _)| n == name) {
                    return Err(p.error(col, ParseErrorKind::DuplicateLocation(name.to_string())));
                }
                decl.locations.push((name.to_string(), kind));
            }
            "checkpoint" => {
                let (label, col) = p.word("checkpoint label")?;
                if !is_identifier(label) {
                    return Err(p.syntax(col, format!("invalid checkpoint label '{label}'")));
                }
                p.finish()?;
                if decl.checkpoints.iter().any(|c| c.label == label) {
                    return Err(p.syntax(col, format!("duplicate checkpoint '{label}'")));
                }
                decl.checkpoints.push(Checkpoint {
                    position: decl.elements.len(),
                    label: label.to_string(),
                });
            }
            "cpbs" | "hwp" | "sigmax" | "atomh" | "cavity" | "mirror" => {
                let args = p.args()?;
                let element = match keyword {
                    "cpbs" => {
                        let v = take_args(&p, kw_col, args, &[("in", 2), ("out", 2)])?;
                        let ports = [
                            decl.resolve(&p, v[0][0])?,
                            decl.resolve(&p, v[0][1])?,
                            decl.resolve(&p, v[1][0])?,
                            decl.resolve(&p, v[1][1])?,
                        ];
                        let columns = [v[0][0].1, v[0][1].1, v[1][0].1, v[1][1].1];
                        for i in 0..4 {
                            if ports[..i].contains(&ports[i]) {
                                let name = &decl.locations[ports[i].0].0;
                                return Err(p.error(
                                    columns[i],
                                    ParseErrorKind::InvalidWiring(format!(
                                        "cpbs ports must be distinct, '{name}' repeats"
                                    )),
                                ));
                            }
                        }
                        Element::Cpbs {
                            inputs: [ports[0], ports[1]],
                            outputs: [ports[2], ports[3]],
                        }
                    }
                    "hwp" => {
                        let v = take_args(&p, kw_col, args, &[("path", 1)])?;
                        Element::PhotonHadamard {
                            loc: decl.resolve(&p, v[0][0])?,
                        }
                    }
                    "sigmax" => {
                        let v = take_args(&p, kw_col, args, &[("path", 1)])?;
                        Element::PhotonSigmaX {
                            loc: decl.resolve(&p, v[0][0])?,
                        }
                    }
                    "atomh" => {
                        let v = take_args(&p, kw_col, args, &[("atom", 1)])?;
                        Element::AtomHadamard {
                            atom: decl.atom(&p, v[0][0])?,
                        }
                    }
                    "cavity" => {
                        let v = take_args(&p, kw_col, args, &[("path", 1), ("atom", 1)])?;
                        Element::CavityScatter {
                            loc: decl.resolve(&p, v[0][0])?,
                            atom: decl.atom(&p, v[1][0])?,
                        }
                    }
                    _ => {
                        let v = take_args(&p, kw_col, args, &[("from", 1), ("to", 1)])?;
                        Element::Relabel {
                            from: decl.resolve(&p, v[0][0])?,
                            to: decl.resolve(&p, v[1][0])?,
                        }
                    }
                };
                if decl.atom_count.is_none() {
                    decl.atom_count = Some(0);
                }
                decl.elements.push(element);
            }
            other => {
                return Err(p.error(kw_col, ParseErrorKind::UnknownElement(other.to_string())));
            }
        }
    }

    let eof = |kind| ParseError {
        line: last_line + 1,
        column: 1,
        kind,
    };
    for kind in [LocationKind::Input, LocationKind::Output] {
        if !decl.locations.iter().any(|(_, k)| *k == kind) {
            return Err(eof(ParseErrorKind::MissingPort(kind)));
        }
    }
    let atom_count = decl.atom_count.unwrap_or(0);
    // Every structural rule was checked line by line; a failure here is a bug.
    CircuitSpec::new(decl.locations, atom_count, decl.elements, decl.checkpoints)
        .map_err(|e| eof(ParseErrorKind::InvalidWiring(e.to_string())))
}

/// Canonical text of `spec`: atoms, locations in declaration order, then
/// elements with checkpoints interleaved.
pub fn serialize_circuit(spec: &CircuitSpec) -> String {
    use std::fmt::Write;

    let layout = spec.layout();
    let name = |loc: LocationId| layout.name(loc);
    let mut out = String::new();
    let _ = writeln!(out, "atoms {}", spec.atom_count());
    for (loc_name, kind) in layout.locations().iter().zip(spec.location_kinds()) {
        let _ = match kind {
            LocationKind::Path => writeln!(out, "path {loc_name}"),
            port => writeln!(out, "port {port} {loc_name}"),
        };
    }
    let mut checkpoints = spec.checkpoints().iter().peekable();
    for (step, element) in spec.elements().iter().enumerate() {
        while let Some(cp) = checkpoints.next_if(|cp| cp.position == step) {
            let _ = writeln!(out, "checkpoint {}", cp.label);
        }
        let _ = match *element {
            Element::Cpbs { inputs, outputs } => writeln!(
                out,
                "cpbs in={},{} out={},{}",
                name(inputs[0]),
                name(inputs[1]),
                name(outputs[0]),
                name(outputs[1])
            ),
            Element::PhotonHadamard { loc } => writeln!(out, "hwp path={}", name(loc)),
            Element::PhotonSigmaX { loc } => writeln!(out, "sigmax path={}", name(loc)),
            Element::AtomHadamard { atom } => writeln!(out, "atomh atom={atom}"),
            Element::CavityScatter { loc, atom } => writeln!(out, "cavity path={} atom={atom}", name(loc)),
            Element::Relabel { from, to } => writeln!(out, "mirror from={} to={}", name(from), name(to)),
        };
    }
    for cp in checkpoints {
        let _ = writeln!(out, "checkpoint {}", cp.label);
    }
    out
}

/// Parses a comma-separated list of `<label>=<amplitude>` terms into a dense
/// gate-basis vector. A label is the polarization followed by one bit per
/// atom, e.g. `L10` for the photon in L, atom 0 in `|1>`, atom 1 in `|0>`.
/// Amplitudes accept complex literals such as `0.5`, `-0.5i` or `0.3+0.4i`.
/// The result is not normalized.
pub fn parse_input_amplitudes(text: &str, atom_count: usize) -> Result<Vec<Complex64>, ParseError> {
    let err = |column: usize, msg: String| ParseError {
        line: 1,
        column,
        kind: ParseErrorKind::Syntax(msg),
    };
    if atom_count > MAX_ATOMS {
        return Err(err(1, format!("at most {MAX_ATOMS} atoms are supported")));
    }
    let mut vector = vec![Complex64::default(); 2 << atom_count];
    let mut seen = vec![false; vector.len()];
    let mut any = false;
    let mut offset = 0;
    for term in text.split(',') {
        let term_column = text[..offset].chars().count() + 1;
        offset += term.len() + 1;
        let trimmed = term.trim_start();
        let column = term_column + (term.chars().count() - trimmed.chars().count());
        let trimmed = trimmed.trim_end();
        if trimmed.is_empty() {
            return Err(err(column, "empty amplitude term".into()));
        }
        let (label, amp) = trimmed
            .split_once('=')
            .ok_or_else(|| err(column, format!("expected <label>=<amplitude>, got '{trimmed}'")))?;
        let label = label.trim();
        let mut chars = label.chars();
        let pol = match chars.next() {
            Some('R') | Some('r') => Polarization::R,
            Some('L') | Some('l') => Polarization::L,
            _ => return Err(err(column, format!("label '{label}' must start with R or L"))),
        };
        let bits: Vec<u8> = chars
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(err(column, format!("label '{label}' has a non-binary atom bit"))),
            })
            .collect::<Result<_, _>>()?;
        if bits.len() != atom_count {
            return Err(err(
                column,
                format!("label '{label}' needs exactly {atom_count} atom bit(s)"),
            ));
        }
        let amp_text = amp.trim();
        let amp_column = column + label.chars().count() + 1;
        let value =
            Complex64::from_str(amp_text).map_err(|_| err(amp_column, format!("invalid amplitude '{amp_text}'")))?;
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(err(amp_column, format!("amplitude '{amp_text}' is not finite")));
        }
        let index = BasisLabel::new(pol, LocationId(0), AtomBits::from_bits(&bits)).gate_index(atom_count);
        if seen[index] {
            return Err(err(column, format!("label '{label}' given twice")));
        }
        seen[index] = true;
        vector[index] = value;
        any = true;
    }
    if !any {
        return Err(err(1, "no amplitudes given".into()));
    }
    Ok(vector)
}

/// Gate-basis label text for index `index`, the inverse of the label syntax
/// accepted by [`parse_input_amplitudes`].
pub fn gate_label(index: usize, atom_count: usize) -> String {
    let (pol, atoms) = gate_basis_label(index, atom_count);
    format!("{pol}{}", atoms.to_string_with(atom_count))
}
