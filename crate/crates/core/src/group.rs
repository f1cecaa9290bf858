//! Group presentations and exact normal forms.
//!
//! Four families are supported: free groups (freely reduced words), free
//! products of finite cyclic groups (alternating syllable words with exponents
//! reduced mod the factor order), direct products (tuples of factor normal
//! forms), and finite permutation groups (image maps). Equality of normal
//! forms is equality of group elements, so hashing and deduplication work on
//! the words themselves.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Gen = u16;

/// One letter of a freely reduced word: a generator or its inverse.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize, PartialOrd, Ord)]
pub struct Letter {
    pub gen: Gen,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// One syllable of a free-product normal form: `gen^exp` with
/// `1 <= exp < order(gen)`, adjacent syllables using distinct generators.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize, PartialOrd, Ord)]
pub struct Syllable {
    pub gen: Gen,
    pub exp: u32,
}

/// A permutation of `{0, .., degree-1}` stored as its image map.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize, PartialOrd, Ord)]
pub struct Perm(pub Vec<u16>);

impl Perm {
    pub fn identity(degree: u16) -> Perm {
        Perm((0..degree).collect())
    }

    pub fn degree(&self) -> u16 {
        self.0.len() as u16
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u16 == x)
    }

    pub fn apply(&self, point: u16) -> u16 {
        self.0[point as usize]
    }

    /// Composition acting left: `(a.compose(b))(x) = a(b(x))`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&x| self.0[x as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut img = vec![0u16; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            img[x as usize] = i as u16;
        }
        Perm(img)
    }

    pub fn pow(&self, mut e: u64) -> Perm {
        let mut acc = Perm::identity(self.degree());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    pub fn order(&self) -> u64 {
        let mut p = self.clone();
        let mut n = 1u64;
        while !p.is_identity() {
            p = p.compose(self);
            n += 1;
        }
        n
    }

    /// Parse disjoint-cycle notation like `(1 2 3)(4 5)`, 1-based points.
    /// `()` or an empty string is the identity.
    pub fn parse(s: &str, degree: u16) -> Result<Perm> {
        let mut img: Vec<u16> = (0..degree).collect();
        let s = s.trim();
        if s.is_empty() || s == "()" {
            return Ok(Perm(img));
        }
        let mut used = vec![false; degree as usize];
        let mut rest = s;
        while !rest.is_empty() {
            let open = rest
                .find('(')
                .ok_or_else(|| Error::Config(format!("bad cycle notation: {s:?}")))?;
            let close = rest
                .find(')')
                .ok_or_else(|| Error::Config(format!("unclosed cycle in {s:?}")))?;
            let body = &rest[open + 1..close];
            let pts: Vec<u16> = body
                .split_whitespace()
                .map(|t| {
                    t.parse::<u16>()
                        .map_err(|_| Error::Config(format!("bad point {t:?} in {s:?}")))
                })
                .collect::<Result<_>>()?;
            for &p in &pts {
                if p == 0 || p > degree {
                    return Err(Error::Config(format!(
                        "point {p} out of range 1..={degree} in {s:?}"
                    )));
                }
                if std::mem::replace(&mut used[p as usize - 1], true) {
                    return Err(Error::Config(format!("repeated point {p} in {s:?}")));
                }
            }
            for w in 0..pts.len() {
                let from = pts[w] - 1;
                let to = pts[(w + 1) % pts.len()] - 1;
                img[from as usize] = to;
            }
            rest = &rest[close + 1..];
            rest = rest.trim_start();
        }
        // reject non-injective input (repeated points across cycles)
        let mut seen = vec![false; degree as usize];
        for &x in &img {
            if seen[x as usize] {
                return Err(Error::Config(format!("not a permutation: {s:?}")));
            }
            seen[x as usize] = true;
        }
        Ok(Perm(img))
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut wrote = false;
        for start in 0..n {
            if seen[start] || self.0[start] as usize == start {
                seen[start] = true;
                continue;
            }
            write!(f, "(")?;
            let mut p = start;
            let mut first = true;
            while !seen[p] {
                seen[p] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", p + 1)?;
                first = false;
                p = self.0[p] as usize;
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// Presentation data for the supported group families.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum GroupSpec {
    /// Free group on `labels.len()` generators.
    Free { labels: Vec<String> },
    /// Free product of finite cyclic groups `Z/orders[i]`, one generator per
    /// factor.
    FreeProduct { labels: Vec<String>, orders: Vec<u32> },
    /// Direct product of the factor specs; elements are tuples.
    Direct { factors: Vec<GroupSpec> },
    /// Finite permutation group given by generator permutations.
    Permutation { degree: u16, labels: Vec<String>, gens: Vec<Perm> },
}

/// Normal-form word of a group element. Constructed and kept reduced by the
/// operations on [`GroupSpec`]; never build these by hand.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Word {
    Free(Vec<Letter>),
    Syllables(Vec<Syllable>),
    Tuple(Vec<Word>),
    Perm(Perm),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct GroupElement {
    pub word: Word,
}

impl Word {
    /// Canonical byte encoding, injective on normal forms of a fixed spec.
    /// Used for hashing keys and for the shortlex order.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Word::Free(ls) => {
                for l in ls {
                    out.push(((l.gen as u8) << 1) | l.inv as u8);
                }
            }
            Word::Syllables(ss) => {
                for s in ss {
                    out.push(s.gen as u8);
                    out.push(s.exp as u8);
                }
            }
            Word::Tuple(ws) => {
                for w in ws {
                    let mut inner = Vec::new();
                    w.encode_into(&mut inner);
                    out.push(inner.len() as u8);
                    out.extend_from_slice(&inner);
                }
            }
            Word::Perm(p) => {
                for &x in &p.0 {
                    out.push(x as u8);
                }
            }
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.encode_into(&mut v);
        v
    }

    /// Word length in the shortlex sense: letters for free groups, total
    /// letter count (sum of exponents) for free products, sum over factors
    /// for tuples, 0/1 for permutations.
    pub fn len(&self) -> u64 {
        match self {
            Word::Free(ls) => ls.len() as u64,
            Word::Syllables(ss) => ss.iter().map(|s| s.exp as u64).sum(),
            Word::Tuple(ws) => ws.iter().map(|w| w.len()).sum(),
            Word::Perm(p) => !p.is_identity() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Word::Free(ls) => ls.is_empty(),
            Word::Syllables(ss) => ss.is_empty(),
            Word::Tuple(ws) => ws.iter().all(|w| w.is_empty()),
            Word::Perm(p) => p.is_identity(),
        }
    }
}

impl GroupElement {
    /// Word length of the normal form; the `is_empty` counterpart is
    /// [`GroupElement::is_identity`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }

    /// Shortlex comparison: first by word length, then by encoded bytes.
    /// Total on elements of a common spec. This is the tie-breaking order
    /// used everywhere a deterministic choice is required.
    pub fn shortlex_cmp(&self, other: &GroupElement) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.word.encode().cmp(&other.word.encode()))
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.shortlex_cmp(other)
    }
}

impl GroupSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::Free { labels } => {
                if labels.is_empty() {
                    return Err(Error::SpecMismatch("free group needs >= 1 generator".into()));
                }
                check_labels(labels)
            }
            GroupSpec::FreeProduct { labels, orders } => {
                if labels.len() != orders.len() {
                    return Err(Error::SpecMismatch("labels/orders length mismatch".into()));
                }
                if orders.len() < 2 {
                    return Err(Error::SpecMismatch(
                        "free product needs >= 2 factors".into(),
                    ));
                }
                if orders.iter().any(|&o| o < 2) {
                    return Err(Error::SpecMismatch("factor orders must be >= 2".into()));
                }
                check_labels(labels)
            }
            GroupSpec::Direct { factors } => {
                if factors.is_empty() {
                    return Err(Error::SpecMismatch("direct product needs >= 1 factor".into()));
                }
                for f in factors {
                    f.validate()?;
                    if matches!(f, GroupSpec::Direct { .. }) {
                        return Err(Error::SpecMismatch(
                            "nested direct products are not supported".into(),
                        ));
                    }
                }
                Ok(())
            }
            GroupSpec::Permutation { degree, labels, gens } => {
                if labels.len() != gens.len() {
                    return Err(Error::SpecMismatch("labels/gens length mismatch".into()));
                }
                for g in gens {
                    if g.degree() != *degree {
                        return Err(Error::SpecMismatch("permutation degree mismatch".into()));
                    }
                }
                check_labels(labels)
            }
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            GroupSpec::Free { labels }
            | GroupSpec::FreeProduct { labels, .. }
            | GroupSpec::Permutation { labels, .. } => labels.clone(),
            GroupSpec::Direct { factors } => {
                factors.iter().flat_map(|f| f.labels()).collect()
            }
        }
    }

    pub fn num_generators(&self) -> usize {
        match self {
            GroupSpec::Free { labels } => labels.len(),
            GroupSpec::FreeProduct { labels, .. } => labels.len(),
            GroupSpec::Permutation { gens, .. } => gens.len(),
            GroupSpec::Direct { factors } => {
                factors.iter().map(|f| f.num_generators()).sum()
            }
        }
    }

    pub fn identity(&self) -> GroupElement {
        let word = match self {
            GroupSpec::Free { .. } => Word::Free(Vec::new()),
            GroupSpec::FreeProduct { .. } => Word::Syllables(Vec::new()),
            GroupSpec::Direct { factors } => {
                Word::Tuple(factors.iter().map(|f| f.identity().word).collect())
            }
            GroupSpec::Permutation { degree, .. } => Word::Perm(Perm::identity(*degree)),
        };
        GroupElement { word }
    }

    /// The `i`-th generator as an element. For direct products the index runs
    /// over the concatenated factor generators and the element is the tuple
    /// with that generator in its factor slot and identities elsewhere.
    pub fn generator(&self, i: usize) -> Result<GroupElement> {
        match self {
            GroupSpec::Free { labels } => {
                if i >= labels.len() {
                    return Err(Error::SpecMismatch(format!("no generator #{i}")));
                }
                Ok(GroupElement { word: Word::Free(vec![Letter { gen: i as Gen, inv: false }]) })
            }
            GroupSpec::FreeProduct { labels, .. } => {
                if i >= labels.len() {
                    return Err(Error::SpecMismatch(format!("no generator #{i}")));
                }
                Ok(GroupElement {
                    word: Word::Syllables(vec![Syllable { gen: i as Gen, exp: 1 }]),
                })
            }
            GroupSpec::Permutation { gens, .. } => {
                let p = gens
                    .get(i)
                    .ok_or_else(|| Error::SpecMismatch(format!("no generator #{i}")))?;
                Ok(GroupElement { word: Word::Perm(p.clone()) })
            }
            GroupSpec::Direct { factors } => {
                let mut idx = i;
                let mut tuple: Vec<Word> = factors.iter().map(|f| f.identity().word).collect();
                for (fi, f) in factors.iter().enumerate() {
                    let n = f.num_generators();
                    if idx < n {
                        tuple[fi] = f.generator(idx)?.word;
                        return Ok(GroupElement { word: Word::Tuple(tuple) });
                    }
                    idx -= n;
                }
                Err(Error::SpecMismatch(format!("no generator #{i}")))
            }
        }
    }

    /// Check that a word is a valid normal form over this spec.
    pub fn validate_element(&self, e: &GroupElement) -> Result<()> {
        match (self, &e.word) {
            (GroupSpec::Free { labels }, Word::Free(ls)) => {
                for (k, l) in ls.iter().enumerate() {
                    if l.gen as usize >= labels.len() {
                        return Err(Error::SpecMismatch(format!("letter gen #{}", l.gen)));
                    }
                    if k > 0 && ls[k - 1] == l.inverse() {
                        return Err(Error::SpecMismatch("word not freely reduced".into()));
                    }
                }
                Ok(())
            }
            (GroupSpec::FreeProduct { orders, .. }, Word::Syllables(ss)) => {
                for (k, s) in ss.iter().enumerate() {
                    let ord = *orders
                        .get(s.gen as usize)
                        .ok_or_else(|| Error::SpecMismatch(format!("syllable gen #{}", s.gen)))?;
                    if s.exp == 0 || s.exp >= ord {
                        return Err(Error::SpecMismatch(format!(
                            "syllable exponent {} out of range 1..{}",
                            s.exp, ord
                        )));
                    }
                    if k > 0 && ss[k - 1].gen == s.gen {
                        return Err(Error::SpecMismatch("adjacent syllables share a factor".into()));
                    }
                }
                Ok(())
            }
            (GroupSpec::Direct { factors }, Word::Tuple(ws)) => {
                if factors.len() != ws.len() {
                    return Err(Error::SpecMismatch("tuple arity mismatch".into()));
                }
                for (f, w) in factors.iter().zip(ws) {
                    f.validate_element(&GroupElement { word: w.clone() })?;
                }
                Ok(())
            }
            (GroupSpec::Permutation { degree, .. }, Word::Perm(p)) => {
                if p.degree() != *degree {
                    return Err(Error::SpecMismatch("permutation degree mismatch".into()));
                }
                Ok(())
            }
            _ => Err(Error::SpecMismatch("word shape does not match group".into())),
        }
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let word = match (self, &a.word, &b.word) {
            (GroupSpec::Free { .. }, Word::Free(x), Word::Free(y)) => {
                Word::Free(free_concat(x, y))
            }
            (GroupSpec::FreeProduct { orders, .. }, Word::Syllables(x), Word::Syllables(y)) => {
                Word::Syllables(syllable_concat(x, y, orders))
            }
            (GroupSpec::Direct { factors }, Word::Tuple(x), Word::Tuple(y)) => {
                if x.len() != factors.len() || y.len() != factors.len() {
                    return Err(Error::SpecMismatch("tuple arity mismatch".into()));
                }
                let mut out = Vec::with_capacity(factors.len());
                for ((f, wx), wy) in factors.iter().zip(x).zip(y) {
                    out.push(
                        f.multiply(
                            &GroupElement { word: wx.clone() },
                            &GroupElement { word: wy.clone() },
                        )?
                        .word,
                    );
                }
                Word::Tuple(out)
            }
            (GroupSpec::Permutation { .. }, Word::Perm(p), Word::Perm(q)) => {
                Word::Perm(p.compose(q))
            }
            _ => return Err(Error::SpecMismatch("multiply: word shape mismatch".into())),
        };
        Ok(GroupElement { word })
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        let word = match (self, &a.word) {
            (GroupSpec::Free { .. }, Word::Free(x)) => {
                Word::Free(x.iter().rev().map(|l| l.inverse()).collect())
            }
            (GroupSpec::FreeProduct { orders, .. }, Word::Syllables(x)) => Word::Syllables(
                x.iter()
                    .rev()
                    .map(|s| Syllable { gen: s.gen, exp: orders[s.gen as usize] - s.exp })
                    .collect(),
            ),
            (GroupSpec::Direct { factors }, Word::Tuple(x)) => {
                let mut out = Vec::with_capacity(factors.len());
                for (f, w) in factors.iter().zip(x) {
                    out.push(f.inverse(&GroupElement { word: w.clone() })?.word);
                }
                Word::Tuple(out)
            }
            (GroupSpec::Permutation { .. }, Word::Perm(p)) => Word::Perm(p.inverse()),
            _ => return Err(Error::SpecMismatch("inverse: word shape mismatch".into())),
        };
        Ok(GroupElement { word })
    }

    pub fn pow(&self, a: &GroupElement, e: i64) -> Result<GroupElement> {
        let (base, mut n) = if e < 0 { (self.inverse(a)?, (-e) as u64) } else { (a.clone(), e as u64) };
        let mut acc = self.identity();
        let mut b = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.multiply(&acc, &b)?;
            }
            if n > 1 {
                b = self.multiply(&b, &b)?;
            }
            n >>= 1;
        }
        Ok(acc)
    }

    pub fn conjugate(&self, h: &GroupElement, g: &GroupElement) -> Result<GroupElement> {
        // h g h^-1
        let hg = self.multiply(h, g)?;
        self.multiply(&hg, &self.inverse(h)?)
    }

    pub fn commutator(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let ab = self.multiply(a, b)?;
        let ai = self.inverse(a)?;
        let bi = self.inverse(b)?;
        let abai = self.multiply(&ab, &ai)?;
        self.multiply(&abai, &bi)
    }

    /// Parse a whitespace-separated word like `a b^-1 a^2`. An empty string
    /// (or the token `1`) is the identity. For direct products, see
    /// [`GroupSpec::parse_tuple`].
    pub fn parse_word(&self, input: &str) -> Result<GroupElement> {
        if let GroupSpec::Direct { .. } = self {
            return Err(Error::Config(
                "direct-product elements must be written as per-factor tuples".into(),
            ));
        }
        let mut acc = self.identity();
        let labels = self.labels();
        for tok in input.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| Error::Config(format!("bad exponent in {tok:?}")))?;
                    (n, e)
                }
                None => (tok, 1),
            };
            let idx = labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::Config(format!("unknown generator {name:?}")))?;
            let g = self.generator(idx)?;
            acc = self.multiply(&acc, &self.pow(&g, exp)?)?;
        }
        Ok(acc)
    }

    /// Parse one element of a direct product from per-factor word strings.
    pub fn parse_tuple(&self, parts: &[String]) -> Result<GroupElement> {
        let GroupSpec::Direct { factors } = self else {
            return Err(Error::Config("parse_tuple requires a direct product".into()));
        };
        if parts.len() != factors.len() {
            return Err(Error::Config(format!(
                "expected {} factor words, got {}",
                factors.len(),
                parts.len()
            )));
        }
        let mut ws = Vec::with_capacity(parts.len());
        for (f, p) in factors.iter().zip(parts) {
            ws.push(f.parse_word(p)?.word);
        }
        Ok(GroupElement { word: Word::Tuple(ws) })
    }

    pub fn format_word(&self, e: &GroupElement) -> String {
        match (&self, &e.word) {
            (GroupSpec::Free { labels }, Word::Free(ls)) => {
                if ls.is_empty() {
                    return "1".into();
                }
                ls.iter()
                    .map(|l| {
                        if l.inv {
                            format!("{}^-1", labels[l.gen as usize])
                        } else {
                            labels[l.gen as usize].clone()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            (GroupSpec::FreeProduct { labels, .. }, Word::Syllables(ss)) => {
                if ss.is_empty() {
                    return "1".into();
                }
                ss.iter()
                    .map(|s| {
                        if s.exp == 1 {
                            labels[s.gen as usize].clone()
                        } else {
                            format!("{}^{}", labels[s.gen as usize], s.exp)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            (GroupSpec::Direct { factors }, Word::Tuple(ws)) => {
                let parts: Vec<String> = factors
                    .iter()
                    .zip(ws)
                    .map(|(f, w)| f.format_word(&GroupElement { word: w.clone() }))
                    .collect();
                format!("({})", parts.join(", "))
            }
            (GroupSpec::Permutation { .. }, Word::Perm(p)) => p.to_string(),
            _ => "<mismatched>".into(),
        }
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if l.is_empty() || l == "1" || l.contains('^') || l.contains(char::is_whitespace) {
            return Err(Error::SpecMismatch(format!("bad generator label {l:?}")));
        }
        if !seen.insert(l) {
            return Err(Error::SpecMismatch(format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

/// Concatenate freely reduced words, cancelling at the junction.
pub(crate) fn free_concat(x: &[Letter], y: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = x.to_vec();
    for &l in y {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Concatenate free-product normal forms, merging and cascading at the
/// junction with exponents mod the factor orders.
pub(crate) fn syllable_concat(x: &[Syllable], y: &[Syllable], orders: &[u32]) -> Vec<Syllable> {
    let mut out: Vec<Syllable> = x.to_vec();
    for &s in y {
        match out.last_mut() {
            Some(last) if last.gen == s.gen => {
                let ord = orders[s.gen as usize];
                let e = (last.exp + s.exp) % ord;
                if e == 0 {
                    out.pop();
                } else {
                    last.exp = e;
                }
            }
            _ => out.push(s),
        }
    }
    out
}

/// A finite generating/marking set with its bookkeeping flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkedSubset {
    pub spec: GroupSpec,
    /// Deduplicated, shortlex-sorted.
    pub elements: Vec<GroupElement>,
    pub symmetric: bool,
    pub contains_identity: bool,
}

impl MarkedSubset {
    pub fn new(spec: GroupSpec, elements: Vec<GroupElement>) -> Result<MarkedSubset> {
        spec.validate()?;
        for e in &elements {
            spec.validate_element(e)?;
        }
        let mut elements = elements;
        elements.sort();
        elements.dedup();
        if elements.is_empty() {
            return Err(Error::Precondition("marked subset must be nonempty".into()));
        }
        let set: HashSet<&GroupElement> = elements.iter().collect();
        let mut symmetric = true;
        for e in &elements {
            let inv = spec.inverse(e)?;
            if !set.contains(&inv) {
                symmetric = false;
                break;
            }
        }
        let contains_identity = set.contains(&spec.identity());
        Ok(MarkedSubset { spec, elements, symmetric, contains_identity })
    }

    /// `U ∪ U^{-1}`, as a new marked subset.
    pub fn symmetrize(&self) -> Result<MarkedSubset> {
        let mut els = self.elements.clone();
        for e in &self.elements {
            els.push(self.spec.inverse(e)?);
        }
        MarkedSubset::new(self.spec.clone(), els)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Product-set layers `U^1, .., U^n` as sets of normal forms, with the
/// cumulative ball `U^{<=n}` alongside. `U^0 = {1}` is stored as layer 0.
pub struct BallLayers {
    pub layers: Vec<Vec<GroupElement>>,
    pub ball: HashSet<GroupElement>,
}

/// Enumerate `U^{<=n}` by layered frontier expansion with exact normal-form
/// deduplication. Errors with `ResourceLimit` if the ball exceeds `cap`
/// elements.
pub fn semigroup_ball_layers(
    u: &MarkedSubset,
    n: u32,
    cap: usize,
) -> Result<BallLayers> {
    let spec = &u.spec;
    let mut ball: HashSet<GroupElement> = HashSet::new();
    ball.insert(spec.identity());
    let mut layers: Vec<Vec<GroupElement>> = vec![vec![spec.identity()]];
    let mut frontier: Vec<GroupElement> = vec![spec.identity()];
    for _ in 0..n {
        let produced: Vec<GroupElement> = if frontier.len() >= 256 {
            use rayon::prelude::*;
            frontier
                .par_iter()
                .map(|x| {
                    let mut out = Vec::with_capacity(u.elements.len());
                    for g in &u.elements {
                        out.push(spec.multiply(x, g).expect("validated elements"));
                    }
                    out
                })
                .flatten()
                .collect()
        } else {
            let mut out = Vec::new();
            for x in &frontier {
                for g in &u.elements {
                    out.push(spec.multiply(x, g)?);
                }
            }
            out
        };
        let mut next: Vec<GroupElement> = Vec::new();
        for e in produced {
            if !ball.contains(&e) {
                ball.insert(e.clone());
                next.push(e);
            }
        }
        if ball.len() > cap {
            return Err(Error::ResourceLimit(format!(
                "semigroup ball exceeded cap of {cap} elements"
            )));
        }
        next.sort();
        next.dedup();
        layers.push(next.clone());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    while layers.len() <= n as usize {
        layers.push(Vec::new());
    }
    Ok(BallLayers { layers, ball })
}

/// `U^{<=n}` as a sorted list of elements.
pub fn semigroup_ball(u: &MarkedSubset, n: u32, cap: usize) -> Result<Vec<GroupElement>> {
    let layers = semigroup_ball_layers(u, n, cap)?;
    let mut out: Vec<GroupElement> = layers.ball.into_iter().collect();
    out.sort();
    Ok(out)
}

/// Exact set of products of length exactly `n` (not the ball): `U^n`.
/// Distinct from the layer structure above, which records *new* elements per
/// layer; here repeats of earlier elements are kept in the set.
pub fn product_set(u: &MarkedSubset, n: u32, cap: usize) -> Result<HashSet<GroupElement>> {
    let spec = &u.spec;
    let mut cur: HashSet<GroupElement> = HashSet::new();
    cur.insert(spec.identity());
    for _ in 0..n {
        let prev: Vec<&GroupElement> = cur.iter().collect();
        let mut next: HashSet<GroupElement> = HashSet::with_capacity(cur.len());
        if prev.len() >= 256 {
            use rayon::prelude::*;
            let chunks: Vec<HashSet<GroupElement>> = prev
                .par_chunks(1024)
                .map(|ch| {
                    let mut s = HashSet::new();
                    for x in ch {
                        for g in &u.elements {
                            s.insert(spec.multiply(x, g).expect("validated elements"));
                        }
                    }
                    s
                })
                .collect();
            for c in chunks {
                next.extend(c);
            }
        } else {
            for x in prev {
                for g in &u.elements {
                    next.insert(spec.multiply(x, g)?);
                }
            }
        }
        if next.len() > cap {
            return Err(Error::ResourceLimit(format!(
                "product set exceeded cap of {cap} elements"
            )));
        }
        cur = next;
    }
    Ok(cur)
}

/// Report from the bounded semigroup-generation check: for each `u ∈ U`, is
/// `u^{-1}` a product of at most `depth` elements of `U`?
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationDepth {
    pub depth_checked: u32,
    /// Depth at which every inverse appeared, if it did.
    pub achieved_at: Option<u32>,
}

/// Decide, up to a depth bound, whether the semigroup generated by `U`
/// contains all inverses of `U` (i.e. is a group on the nose up to `depth`).
pub fn generation_depth_check(u: &MarkedSubset, depth: u32, cap: usize) -> Result<GenerationDepth> {
    let mut targets: HashSet<GroupElement> = HashSet::new();
    for e in &u.elements {
        targets.insert(u.spec.inverse(e)?);
    }
    let layers = semigroup_ball_layers(u, depth, cap)?;
    let mut have: HashSet<&GroupElement> = HashSet::new();
    for (d, layer) in layers.layers.iter().enumerate() {
        for e in layer {
            have.insert(e);
        }
        if targets.iter().all(|t| have.contains(t)) {
            return Ok(GenerationDepth { depth_checked: depth, achieved_at: Some(d as u32) });
        }
    }
    Ok(GenerationDepth { depth_checked: depth, achieved_at: None })
}

/// Membership of `g` in `U^{<=n}`, by ball enumeration.
pub fn in_semigroup_ball(
    u: &MarkedSubset,
    g: &GroupElement,
    n: u32,
    cap: usize,
) -> Result<bool> {
    let layers = semigroup_ball_layers(u, n, cap)?;
    Ok(layers.ball.contains(g))
}

/// Evaluate a word over `U` (indices into `u.elements`) to a group element.
pub fn evaluate_uword(u: &MarkedSubset, word: &[usize]) -> Result<GroupElement> {
    let mut acc = u.spec.identity();
    for &i in word {
        let e = u
            .elements
            .get(i)
            .ok_or_else(|| Error::SpecMismatch(format!("U-word index {i} out of range")))?;
        acc = u.spec.multiply(&acc, e)?;
    }
    Ok(acc)
}

/// Deterministic map from elements to first-seen canonical U-words, used when
/// witnesses need recording.
pub fn uword_index(u: &MarkedSubset, max_len: u32, cap: usize) -> Result<HashMap<GroupElement, Vec<usize>>> {
    let spec = &u.spec;
    let mut map: HashMap<GroupElement, Vec<usize>> = HashMap::new();
    map.insert(spec.identity(), Vec::new());
    let mut frontier: Vec<(GroupElement, Vec<usize>)> = vec![(spec.identity(), Vec::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (x, w) in &frontier {
            for (i, g) in u.elements.iter().enumerate() {
                let y = spec.multiply(x, g)?;
                if !map.contains_key(&y) {
                    let mut w2 = w.clone();
                    w2.push(i);
                    map.insert(y.clone(), w2.clone());
                    next.push((y, w2));
                }
            }
        }
        if map.len() > cap {
            return Err(Error::ResourceLimit(format!(
                "U-word index exceeded cap of {cap} elements"
            )));
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn f2() -> GroupSpec {
        GroupSpec::Free { labels: vec!["a".into(), "b".into()] }
    }

    pub fn z2z3() -> GroupSpec {
        GroupSpec::FreeProduct { labels: vec!["s".into(), "t".into()], orders: vec![2, 3] }
    }

    #[test]
    fn free_reduction() {
        let g = f2();
        let w = g.parse_word("a b b^-1 a^-1 b").unwrap();
        assert_eq!(g.format_word(&w), "b");
        let w = g.parse_word("a a^-1").unwrap();
        assert!(w.is_identity());
    }

    #[test]
    fn free_product_normal_form() {
        let g = z2z3();
        // (x, x) -> identity for x the order-2 generator
        let s = g.parse_word("s").unwrap();
        let ss = g.multiply(&s, &s).unwrap();
        assert!(ss.is_identity());
        // t^2 * t = 1; t * t = t^2
        let t = g.parse_word("t").unwrap();
        let t2 = g.multiply(&t, &t).unwrap();
        assert_eq!(g.format_word(&t2), "t^2");
        assert!(g.multiply(&t2, &t).unwrap().is_identity());
        // cascade: s t t^2 s -> 1
        let w = g.parse_word("s t t^2 s").unwrap();
        assert!(w.is_identity());
    }

    #[test]
    fn inverse_is_inverse() {
        let g = f2();
        let w = g.parse_word("a b a^-1 b").unwrap();
        let wi = g.inverse(&w).unwrap();
        assert!(g.multiply(&w, &wi).unwrap().is_identity());
        let h = z2z3();
        let v = h.parse_word("s t s t^2").unwrap();
        let vi = h.inverse(&v).unwrap();
        assert!(h.multiply(&v, &vi).unwrap().is_identity());
    }

    #[test]
    fn direct_product_ops() {
        let g = GroupSpec::Direct { factors: vec![f2(), f2()] };
        let e = g.parse_tuple(&["a b".into(), "b^-1".into()]).unwrap();
        let f = g.parse_tuple(&["b^-1".into(), "b".into()]).unwrap();
        let p = g.multiply(&e, &f).unwrap();
        assert_eq!(g.format_word(&p), "(a, 1)");
    }

    #[test]
    fn perm_parse_and_compose() {
        let p = Perm::parse("(1 2 3)", 3).unwrap();
        assert_eq!(p.0, vec![1, 2, 0]);
        assert_eq!(p.order(), 3);
        let q = Perm::parse("(1 2)", 3).unwrap();
        let pq = p.compose(&q); // p after q
        assert_eq!(pq.apply(0), p.apply(q.apply(0)));
        assert_eq!(p.to_string(), "(1 2 3)");
        assert!(Perm::parse("(1 1 2)", 3).is_err());
        assert!(Perm::parse("(4)", 3).is_err());
    }

    #[test]
    fn shortlex_order() {
        let g = f2();
        let a = g.parse_word("a").unwrap();
        let b = g.parse_word("b").unwrap();
        let ai = g.parse_word("a^-1").unwrap();
        let ab = g.parse_word("a b").unwrap();
        let mut v = vec![ab.clone(), b.clone(), ai.clone(), a.clone()];
        v.sort();
        assert_eq!(v, vec![a, ai, b, ab]);
    }

    // [frozen oracle] |U^{<=2}| for U = {a, b, a^-1, b^-1} in F2: the ball of
    // radius 2 in the 4-regular tree has 1 + 4 + 12 = 17 vertices.
    #[test]
    fn ball_f2_symmetric_radius2() {
        let g = f2();
        let u = MarkedSubset::new(
            g.clone(),
            ["a", "b", "a^-1", "b^-1"].iter().map(|w| g.parse_word(w).unwrap()).collect(),
        )
        .unwrap();
        assert!(u.symmetric);
        assert!(!u.contains_identity);
        let ball = semigroup_ball(&u, 2, 1_000_000).unwrap();
        assert_eq!(ball.len(), 17);
        // |U^2| = 13: identity plus the 12 reduced words of length 2
        let p2 = product_set(&u, 2, 1_000_000).unwrap();
        assert_eq!(p2.len(), 13);
    }

    // [frozen oracle] closed form 2*3^n - 1 for the symmetric ball in F2.
    #[test]
    fn ball_f2_closed_form() {
        let g = f2();
        let u = MarkedSubset::new(
            g.clone(),
            ["a", "b", "a^-1", "b^-1"].iter().map(|w| g.parse_word(w).unwrap()).collect(),
        )
        .unwrap();
        let layers = semigroup_ball_layers(&u, 6, 10_000_000).unwrap();
        let mut cum = 0u64;
        for n in 0..=6u32 {
            cum += layers.layers[n as usize].len() as u64;
            assert_eq!(cum, 2 * 3u64.pow(n) - 1);
        }
    }

    #[test]
    fn generation_depth() {
        let g = z2z3();
        let u = MarkedSubset::new(
            g.clone(),
            vec![g.parse_word("s").unwrap(), g.parse_word("t").unwrap()],
        )
        .unwrap();
        // s^-1 = s at depth 1, t^-1 = t^2 at depth 2
        let r = generation_depth_check(&u, 3, 100_000).unwrap();
        assert_eq!(r.achieved_at, Some(2));
    }

    #[test]
    fn resource_cap_reported() {
        let g = f2();
        let u = MarkedSubset::new(
            g.clone(),
            vec![g.parse_word("a").unwrap(), g.parse_word("b").unwrap()],
        )
        .unwrap();
        let err = semigroup_ball(&u, 10, 50).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }
}
