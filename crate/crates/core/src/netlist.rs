//! Netlist front end.
//!
//! One element per line:
//!
//! ```text
//! # kind name node_a node_b value
//! C C1 1 0 1.01p
//! L L1 1 0 1n
//! R R12 1 2 4k
//! ```
//!
//! The kind letter may also be fused with the name SPICE-style (`C1 1 0 1.01p`),
//! in which case the first character of the name selects the kind. Node `0`
//! is ground and must be referenced by at least one element.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Prefix of capacitor names that mark auxiliary (regularizing) elements.
pub const AUX_PREFIX: &str = "Caux";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("malformed literal `{0}`")]
    Malformed(String),
    #[error("unknown suffix `{0}`")]
    UnknownSuffix(char),
    #[error("value must be positive, got {0}")]
    NonPositive(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Value { line: usize, source: ValueError },
    #[error("line {line}: duplicate element name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("element `{name}`: both terminals on node {node}")]
    SelfLoop { name: String, node: usize },
    #[error("element `{name}`: value must be positive, got {value}")]
    BadValue { name: String, value: f64 },
    #[error("node {0} is dangling (fewer than two element terminals)")]
    DanglingNode(usize),
    #[error("no element references ground (node 0)")]
    NoGround,
    #[error("empty netlist")]
    Empty,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Capacitor,
    Inductor,
    Resistor,
    /// Josephson junction; the element value is its critical current.
    Junction,
}

impl ElementKind {
    pub fn letter(self) -> char {
        match self {
            ElementKind::Capacitor => 'C',
            ElementKind::Inductor => 'L',
            ElementKind::Resistor => 'R',
            ElementKind::Junction => 'J',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'C' => Some(ElementKind::Capacitor),
            'L' => Some(ElementKind::Inductor),
            'R' => Some(ElementKind::Resistor),
            'J' => Some(ElementKind::Junction),
            _ => None,
        }
    }
}

/// A two-terminal element. Values are SI: F, H, Ω, or A (junction critical current).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementDecl {
    pub kind: ElementKind,
    pub name: String,
    pub node_a: usize,
    pub node_b: usize,
    pub value: f64,
}

impl ElementDecl {
    pub fn new(kind: ElementKind, name: impl Into<String>, node_a: usize, node_b: usize, value: f64) -> Self {
        ElementDecl {
            kind,
            name: name.into(),
            node_a,
            node_b,
            value,
        }
    }

    pub fn is_auxiliary(&self) -> bool {
        self.kind == ElementKind::Capacitor && self.name.starts_with(AUX_PREFIX)
    }

    /// The terminal opposite `node`, if the element touches it.
    pub fn other_terminal(&self, node: usize) -> Option<usize> {
        if self.node_a == node {
            Some(self.node_b)
        } else if self.node_b == node {
            Some(self.node_a)
        } else {
            None
        }
    }
}

/// A validated netlist whose non-ground nodes are numbered `1..=n_nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    elements: Vec<ElementDecl>,
    n_nodes: usize,
}

impl CircuitSpec {
    /// Validates `elements` and renumbers their nodes contiguously, keeping
    /// ground at 0 and the relative order of the original ids.
    pub fn new(mut elements: Vec<ElementDecl>) -> Result<Self, NetlistError> {
        if elements.is_empty() {
            return Err(NetlistError::Empty);
        }
        let mut seen = HashSet::new();
        for (i, e) in elements.iter().enumerate() {
            if !seen.insert(e.name.as_str()) {
                return Err(NetlistError::DuplicateName {
                    line: i + 1,
                    name: e.name.clone(),
                });
            }
            if e.node_a == e.node_b {
                return Err(NetlistError::SelfLoop {
                    name: e.name.clone(),
                    node: e.node_a,
                });
            }
            if !(e.value.is_finite() && e.value > 0.0) {
                return Err(NetlistError::BadValue {
                    name: e.name.clone(),
                    value: e.value,
                });
            }
        }

        let mut terminals: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &elements {
            *terminals.entry(e.node_a).or_default() += 1;
            *terminals.entry(e.node_b).or_default() += 1;
        }
        if !terminals.contains_key(&0) {
            return Err(NetlistError::NoGround);
        }
        if let Some((&node, _)) = terminals.iter().find(|(&n, &count)| n != 0 && count < 2) {
            return Err(NetlistError::DanglingNode(node));
        }

        let renumber: BTreeMap<usize, usize> = terminals
            .keys()
            .filter(|&&n| n != 0)
            .enumerate()
            .map(|(i, &n)| (n, i + 1))
            .collect();
        let map = |n: usize| if n == 0 { 0 } else { renumber[&n] };
        for e in &mut elements {
            e.node_a = map(e.node_a);
            e.node_b = map(e.node_b);
        }
        Ok(CircuitSpec {
            n_nodes: renumber.len(),
            elements,
        })
    }

    pub fn elements(&self) -> &[ElementDecl] {
        &self.elements
    }

    /// Number of non-ground nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn element(&self, name: &str) -> Option<&ElementDecl> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn has_junctions(&self) -> bool {
        self.elements.iter().any(|e| e.kind == ElementKind::Junction)
    }

    /// Copy of the spec with one element's value replaced.
    pub fn with_value(&self, name: &str, value: f64) -> Result<Self, NetlistError> {
        let mut elements = self.elements.clone();
        let e = elements
            .iter_mut()
            .find(|e| e.name == name)
            .ok_or_else(|| NetlistError::UnknownElement(name.to_string()))?;
        e.value = value;
        CircuitSpec::new(elements)
    }

    /// Copy of the spec with one element appended.
    pub fn with_element(&self, element: ElementDecl) -> Result<Self, NetlistError> {
        let mut elements = self.elements.clone();
        elements.push(element);
        CircuitSpec::new(elements)
    }

    /// Copy of the spec without the named elements.
    pub fn without(&self, names: &[&str]) -> Result<Self, NetlistError> {
        CircuitSpec::new(
            self.elements
                .iter()
                .filter(|e| !names.contains(&e.name.as_str()))
                .cloned()
                .collect(),
        )
    }
}

/// Parses a decimal literal with an optional engineering suffix.
///
/// The result is correctly rounded: `"1.01p"` yields exactly the double
/// nearest to 1.01e-12.
pub fn parse_value(text: &str) -> Result<f64, ValueError> {
    let text = text.trim();
    let malformed = || ValueError::Malformed(text.to_string());
    let last = text.chars().last().ok_or_else(malformed)?;
    let (literal, shift) = if last.is_ascii_alphabetic() {
        let shift = match last {
            'f' => -15,
            'p' => -12,
            'n' => -9,
            'u' => -6,
            'm' => -3,
            'k' => 3,
            'M' => 6,
            'G' => 9,
            // a bare exponent marker is a malformed literal, not a suffix
            'e' | 'E' => return Err(malformed()),
            c => return Err(ValueError::UnknownSuffix(c)),
        };
        (&text[..text.len() - 1], shift)
    } else {
        (text, 0)
    };
    if literal.is_empty()
        || !literal
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
    {
        return Err(malformed());
    }
    let (mantissa, exponent) = match literal.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = literal[pos + 1..].parse().map_err(|_| malformed())?;
            (&literal[..pos], exp)
        }
        None => (literal, 0),
    };
    if mantissa.is_empty() || mantissa.contains(['e', 'E']) {
        return Err(malformed());
    }
    let value: f64 = format!("{mantissa}e{}", exponent + shift)
        .parse()
        .map_err(|_| malformed())?;
    if !value.is_finite() {
        return Err(malformed());
    }
    if value <= 0.0 {
        return Err(ValueError::NonPositive(value));
    }
    Ok(value)
}

fn parse_node(token: &str, line: usize) -> Result<usize, NetlistError> {
    token.parse().map_err(|_| NetlistError::Syntax {
        line,
        msg: format!("invalid node id `{token}`"),
    })
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses netlist text into a canonical [`CircuitSpec`].
pub fn parse_netlist(text: &str) -> Result<CircuitSpec, NetlistError> {
    let mut elements = Vec::new();
    let mut names: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let (kind, name, rest) = match tokens.len() {
            5 => {
                let mut chars = tokens[0].chars();
                let kind = match (chars.next(), chars.next()) {
                    (Some(c), None) => ElementKind::from_letter(c),
                    _ => None,
                }
                .ok_or_else(|| NetlistError::Syntax {
                    line,
                    msg: format!("unknown element kind `{}`", tokens[0]),
                })?;
                (kind, tokens[1], &tokens[2..])
            }
            4 => {
                let first = tokens[0].chars().next().unwrap_or(' ');
                let kind = ElementKind::from_letter(first).ok_or_else(|| NetlistError::Syntax {
                    line,
                    msg: format!("unknown element kind in `{}`", tokens[0]),
                })?;
                (kind, tokens[0], &tokens[1..])
            }
            n => {
                return Err(NetlistError::Syntax {
                    line,
                    msg: format!("expected `<kind> <name> <node_a> <node_b> <value>`, found {n} fields"),
                })
            }
        };
        if !valid_name(name) {
            return Err(NetlistError::Syntax {
                line,
                msg: format!("invalid element name `{name}`"),
            });
        }
        if !names.insert(name.to_string()) {
            return Err(NetlistError::DuplicateName {
                line,
                name: name.to_string(),
            });
        }
        let node_a = parse_node(rest[0], line)?;
        let node_b = parse_node(rest[1], line)?;
        if node_a == node_b {
            return Err(NetlistError::Syntax {
                line,
                msg: format!("element `{name}` connects node {node_a} to itself"),
            });
        }
        let value = parse_value(rest[2]).map_err(|source| NetlistError::Value { line, source })?;
        elements.push(ElementDecl::new(kind, name, node_a, node_b, value));
    }
    CircuitSpec::new(elements)
}

/// Renders a spec in the five-field form; values use shortest round-trip
/// scientific notation so that re-parsing is exact.
pub fn render_netlist(spec: &CircuitSpec) -> String {
    spec.to_string()
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.elements {
            writeln!(
                f,
                "{} {} {} {} {:e}",
                e.kind.letter(),
                e.name,
                e.node_a,
                e.node_b,
                e.value
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIG2: &str = "\
C C1 1 0 1.01p
L L1 1 0 1n
R R12 1 2 4k
L L23 2 3 1n
C C3 3 0 1.01p
L L3 3 0 1n
";

    #[test]
    fn suffix_table() {
        assert_eq!(parse_value("1.01p").unwrap(), 1.01e-12);
        assert_eq!(parse_value("1").unwrap(), 1.0);
        assert_eq!(parse_value("4k").unwrap(), 4.0e3);
        assert_eq!(parse_value("20.26f").unwrap(), 20.26e-15);
        assert_eq!(parse_value("1n").unwrap(), 1e-9);
        assert_eq!(parse_value("3u").unwrap(), 3e-6);
        assert_eq!(parse_value("2m").unwrap(), 2e-3);
        assert_eq!(parse_value("15.71M").unwrap(), 15.71e6);
        assert_eq!(parse_value("5G").unwrap(), 5e9);
        assert_eq!(parse_value("1.01e-12").unwrap(), 1.01e-12);
        assert_eq!(parse_value("1e3k").unwrap(), 1e6);
    }

    #[test]
    fn value_errors() {
        assert_eq!(parse_value("4x"), Err(ValueError::UnknownSuffix('x')));
        assert!(matches!(parse_value("abc"), Err(ValueError::UnknownSuffix('c'))));
        assert!(matches!(parse_value("1.2.3"), Err(ValueError::Malformed(_))));
        assert!(matches!(parse_value(""), Err(ValueError::Malformed(_))));
        assert!(matches!(parse_value("k"), Err(ValueError::Malformed(_))));
        assert!(matches!(parse_value("1e"), Err(ValueError::Malformed(_))));
        assert!(matches!(parse_value("inf"), Err(ValueError::UnknownSuffix('f')) | Err(ValueError::Malformed(_))));
        assert_eq!(parse_value("0"), Err(ValueError::NonPositive(0.0)));
        assert!(matches!(parse_value("-1p"), Err(ValueError::NonPositive(_))));
    }

    #[test]
    fn parses_single_resonator() {
        let spec = parse_netlist("C C1 1 0 1.01p\nL L1 1 0 1n").unwrap();
        assert_eq!(spec.n_nodes(), 1);
        assert_eq!(spec.elements().len(), 2);
        assert_eq!(spec.elements()[0].kind, ElementKind::Capacitor);
        assert_eq!(spec.elements()[0].value, 1.01e-12);
        assert_eq!(spec.elements()[1].kind, ElementKind::Inductor);
        assert_eq!(spec.elements()[1].value, 1e-9);
    }

    #[test]
    fn fused_kind_and_name() {
        let spec = parse_netlist("C1 1 0 1p\r\nL1 1 0 1n\r\n").unwrap();
        assert_eq!(spec.elements()[0].name, "C1");
        assert_eq!(spec.elements()[1].kind, ElementKind::Inductor);
    }

    #[test]
    fn comments_only_is_empty() {
        assert_eq!(parse_netlist("# only comments\n"), Err(NetlistError::Empty));
        assert_eq!(parse_netlist("\n\n   \n"), Err(NetlistError::Empty));
    }

    #[test]
    fn trailing_comment_is_ignored() {
        let spec = parse_netlist("C C1 1 0 1p # tank\nL L1 1 0 1n").unwrap();
        assert_eq!(spec.elements().len(), 2);
    }

    #[test]
    fn fig2_netlist() {
        let spec = parse_netlist(FIG2).unwrap();
        assert_eq!(spec.n_nodes(), 3);
        assert_eq!(spec.elements().len(), 6);
    }

    #[test]
    fn renumbers_nodes_in_order() {
        let spec = parse_netlist("C C1 7 0 1p\nL L1 7 0 1n\nR R 7 3 1k\nC C2 3 0 1p\nL L2 3 0 1n").unwrap();
        assert_eq!(spec.n_nodes(), 2);
        let r = spec.element("R").unwrap();
        assert_eq!((r.node_a, r.node_b), (2, 1));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_netlist("C C1 1 0 1p\nX X1 1 0 1\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 2, .. }), "{err}");
        let err = parse_netlist("C C1 1 0 1p\nL L1 1 0\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 2, .. }));
        let err = parse_netlist("C C1 a 0 1p\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 1, .. }));
        let err = parse_netlist("C C1 1 0 1q\n").unwrap_err();
        assert!(matches!(err, NetlistError::Value { line: 1, .. }));
        let err = parse_netlist("C C1 1 1 1p\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 1, .. }));
    }

    #[test]
    fn duplicate_and_dangling() {
        let err = parse_netlist("C C1 1 0 1p\nL C1 1 0 1n\n").unwrap_err();
        assert_eq!(
            err,
            NetlistError::DuplicateName {
                line: 2,
                name: "C1".into()
            }
        );
        let err = parse_netlist("C C1 1 0 1p\nL L1 1 0 1n\nR R1 1 2 1k\n").unwrap_err();
        assert_eq!(err, NetlistError::DanglingNode(2));
        let err = parse_netlist("C C1 1 2 1p\nL L1 1 2 1n\n").unwrap_err();
        assert_eq!(err, NetlistError::NoGround);
    }

    #[test]
    fn render_includes_auxiliary_line() {
        let spec = parse_netlist(FIG2)
            .unwrap()
            .with_element(ElementDecl::new(ElementKind::Capacitor, "Caux2", 2, 3, 1.01e-15))
            .unwrap();
        let text = render_netlist(&spec);
        assert!(text.contains("C Caux2 2 3 1.01e-15"), "{text}");
        let back = parse_netlist(&text).unwrap();
        assert_eq!(back, spec);
        assert!(back.element("Caux2").unwrap().is_auxiliary());
    }

    fn arb_spec() -> impl Strategy<Value = CircuitSpec> {
        // a chain of resonators joined by random couplers
        (1usize..5, prop::collection::vec((0usize..4, 1e-16f64..1e6), 1..12)).prop_map(|(n, extra)| {
            let mut elements = Vec::new();
            for k in 1..=n {
                elements.push(ElementDecl::new(ElementKind::Capacitor, format!("C{k}"), k, 0, 1e-12 * k as f64));
                elements.push(ElementDecl::new(ElementKind::Inductor, format!("L{k}"), k, 0, 1e-9));
            }
            for (i, (kind, value)) in extra.into_iter().enumerate() {
                let kind = [
                    ElementKind::Capacitor,
                    ElementKind::Inductor,
                    ElementKind::Resistor,
                    ElementKind::Junction,
                ][kind];
                let a = i % n + 1;
                let b = if n > 1 { (i + 1) % n + 1 } else { 0 };
                elements.push(ElementDecl::new(kind, format!("X{i}"), a, b, value));
            }
            CircuitSpec::new(elements).unwrap()
        })
    }

    proptest! {
        #[test]
        fn render_round_trip(spec in arb_spec()) {
            let text = render_netlist(&spec);
            prop_assert_eq!(parse_netlist(&text).unwrap(), spec);
        }

        #[test]
        fn kilo_suffix_is_multiplicative(mantissa in 1u32..1_000_000, frac in 0u32..1000) {
            let x = format!("{mantissa}.{frac:03}");
            let plain = parse_value(&x).unwrap();
            let kilo = parse_value(&format!("{x}k")).unwrap();
            prop_assert!((kilo - 1000.0 * plain).abs() <= 1e-15 * kilo);
        }
    }
}
