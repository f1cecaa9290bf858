//! Reidemeister–Schreier generators for finite-index subgroups from a
//! possibly non-symmetric generating set, plus the chained product-set
//! growth arithmetic.
//!
//! The subgroup is always presented through a homomorphism to a finite
//! permutation group: either its kernel (normal case) or the preimage of a
//! point stabilizer (general case, reduced to the normal case through the
//! coset action). Every produced generator carries an explicit positive
//! U-word witness, so membership in the stated power of U is a checked
//! certificate rather than an enumeration.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::group::{evaluate_uword, uword_index, GroupElement, GroupSpec, MarkedSubset, Perm, Word};
use crate::ratio::Ratio;
use crate::{Error, Result};

/// A homomorphism from a free group or free product of finite cyclics to a
/// permutation group on `degree` points, given by generator images.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FiniteQuotient {
    pub spec: GroupSpec,
    pub degree: u16,
    /// Image of generator `i`, in the same order as the spec's alphabet.
    pub images: Vec<Perm>,
}

/// Which finite-index subgroup of the source a quotient designates.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SubgroupDesignator {
    /// `ker ρ` — always normal.
    Kernel,
    /// Preimage of the stabilizer of a point (0-based); generally not normal.
    Stabilizer { point: u16 },
}

impl FiniteQuotient {
    pub fn new(spec: GroupSpec, degree: u16, images: Vec<Perm>) -> Result<FiniteQuotient> {
        spec.validate()?;
        if images.len() != spec.num_generators() {
            return Err(Error::Config(format!(
                "expected {} generator images, got {}",
                spec.num_generators(),
                images.len()
            )));
        }
        for (i, p) in images.iter().enumerate() {
            if p.degree() != degree {
                return Err(Error::Config(format!(
                    "image of generator {i} has degree {} != {degree}",
                    p.degree()
                )));
            }
        }
        match &spec {
            GroupSpec::Free { .. } => {}
            GroupSpec::FreeProduct { orders, .. } => {
                // the only relators are x_i^order = 1
                for (i, &ord) in orders.iter().enumerate() {
                    if !images[i].pow(ord as u64).is_identity() {
                        return Err(Error::Config(format!(
                            "image of generator {i} does not satisfy x^{ord} = 1"
                        )));
                    }
                }
            }
            _ => {
                return Err(Error::Precondition(
                    "quotient source must be a free group or a free product".into(),
                ))
            }
        }
        Ok(FiniteQuotient { spec, degree, images })
    }

    /// Image of an arbitrary element under the homomorphism.
    pub fn apply(&self, g: &GroupElement) -> Result<Perm> {
        let mut acc = Perm::identity(self.degree);
        match &g.word {
            Word::Free(letters) => {
                for l in letters {
                    let img = &self.images[l.gen as usize];
                    let img = if l.inv { img.inverse() } else { img.clone() };
                    acc = acc.compose(&img);
                }
            }
            Word::Syllables(sylls) => {
                for s in sylls {
                    acc = acc.compose(&self.images[s.gen as usize].pow(s.exp as u64));
                }
            }
            _ => {
                return Err(Error::SpecMismatch(
                    "quotient applies to free / free-product elements only".into(),
                ))
            }
        }
        Ok(acc)
    }

    /// Membership in the designated subgroup.
    pub fn in_subgroup(&self, h: &SubgroupDesignator, g: &GroupElement) -> Result<bool> {
        let p = self.apply(g)?;
        Ok(match h {
            SubgroupDesignator::Kernel => p.is_identity(),
            SubgroupDesignator::Stabilizer { point } => p.apply(*point) == *point,
        })
    }
}

fn coset_key(h: &SubgroupDesignator, p: &Perm) -> Vec<u16> {
    match h {
        // cosets of the kernel correspond to image elements
        SubgroupDesignator::Kernel => p.0.clone(),
        // g and g' lie in the same left coset of a point-stabilizer
        // preimage iff their images move the point to the same place
        SubgroupDesignator::Stabilizer { point } => vec![p.apply(*point)],
    }
}

/// One coset representative with its positive U-word of minimal directed
/// length (indices into the generating set).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransversalEntry {
    pub element: GroupElement,
    pub uword: Vec<usize>,
    pub perm: Perm,
}

/// Directed-BFS coset data for a designated finite-index subgroup.
pub struct CosetStructure {
    pub quotient: FiniteQuotient,
    pub designator: SubgroupDesignator,
    /// `[G : H]`, the number of cosets seen.
    pub index: usize,
    /// Order of the image of the whole group in the permutation group.
    pub image_order: usize,
    pub transversal: Vec<TransversalEntry>,
    coset_of: HashMap<Vec<u16>, usize>,
}

/// BFS over the directed coset graph (right multiplication by U), keeping
/// the first — hence directed-minimal — positive word reaching each coset.
pub fn coset_structure(
    u: &MarkedSubset,
    q: &FiniteQuotient,
    h: &SubgroupDesignator,
) -> Result<CosetStructure> {
    if u.spec != q.spec {
        return Err(Error::SpecMismatch("set and quotient live over different groups".into()));
    }
    if let SubgroupDesignator::Stabilizer { point } = h {
        if *point >= q.degree {
            return Err(Error::Config(format!(
                "stabilized point {point} out of range for degree {}",
                q.degree
            )));
        }
    }
    let u_images: Vec<Perm> = u.elements.iter().map(|e| q.apply(e)).collect::<Result<_>>()?;

    // enumerate the image semigroup (= image group, since it is finite)
    let mut order: Vec<Perm> = vec![Perm::identity(q.degree)];
    let mut info: HashMap<Perm, (Vec<usize>, GroupElement)> = HashMap::new();
    info.insert(Perm::identity(q.degree), (Vec::new(), q.spec.identity()));
    let mut frontier = vec![Perm::identity(q.degree)];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for p in &frontier {
            let (w, g) = info.get(p).cloned().expect("frontier perm recorded");
            for (i, (ui, ue)) in u_images.iter().zip(u.elements.iter()).enumerate() {
                let p2 = p.compose(ui);
                if !info.contains_key(&p2) {
                    let mut w2 = w.clone();
                    w2.push(i);
                    info.insert(p2.clone(), (w2, q.spec.multiply(&g, ue)?));
                    order.push(p2.clone());
                    next.push(p2);
                }
            }
        }
        frontier = next;
    }

    let mut coset_of: HashMap<Vec<u16>, usize> = HashMap::new();
    let mut transversal: Vec<TransversalEntry> = Vec::new();
    for p in &order {
        let key = coset_key(h, p);
        if let std::collections::hash_map::Entry::Vacant(e) = coset_of.entry(key) {
            let (w, g) = info.get(p).cloned().expect("ordered perm recorded");
            e.insert(transversal.len());
            transversal.push(TransversalEntry { element: g, uword: w, perm: p.clone() });
        }
    }
    Ok(CosetStructure {
        quotient: q.clone(),
        designator: *h,
        index: transversal.len(),
        image_order: order.len(),
        transversal,
        coset_of,
    })
}

impl CosetStructure {
    /// The transversal index of the coset of `g`.
    pub fn coset_index(&self, g: &GroupElement) -> Result<usize> {
        let p = self.quotient.apply(g)?;
        self.coset_of.get(&coset_key(&self.designator, &p)).copied().ok_or_else(|| {
            Error::Precondition(
                "U does not generate as a semigroup at this quotient: unreached coset".into(),
            )
        })
    }

    /// φ: the transversal representative of the coset of `g`; satisfies
    /// `φ(g)^{-1} g ∈ H`.
    pub fn phi(&self, g: &GroupElement) -> Result<&TransversalEntry> {
        Ok(&self.transversal[self.coset_index(g)?])
    }
}

/// One subgroup generator with its positive U-word witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WEntry {
    pub element: GroupElement,
    pub uword: Vec<usize>,
}

/// Record of the bounded generation check: every tested element of the
/// subgroup was rewritten into an explicit word over `W ∪ W^{-1}` and the
/// rewriting re-multiplied to the element.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GenerationCheck {
    /// All positive U-words up to this length were enumerated and the
    /// subgroup members among them rewritten.
    pub exhaustive_depth: u32,
    pub exhaustive_checked: usize,
    /// Seeded random positive U-words of this length (the `2r` regime,
    /// where exhaustive enumeration is out of reach) were also rewritten.
    pub sampled_length: u32,
    pub sampled_checked: usize,
    /// Longest W-word produced by any rewriting.
    pub max_w_len: usize,
}

/// Generating set for the subgroup with all quantitative assertions from
/// the construction checked exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchreierResult {
    pub w: Vec<WEntry>,
    /// `[G : H]` for the designated subgroup.
    pub index: usize,
    /// Index of the normal subgroup the construction actually ran on
    /// (equals `index` in the kernel case, the coset-action image order in
    /// the general case).
    pub normal_index: usize,
    /// The guaranteed exponent: `d² − d + 1` (normal) or `(d!)² − d! + 1`
    /// (general); every witness word is at most this long.
    pub exponent_bound: u64,
    /// Longest witness actually produced (typically far below the bound).
    pub witness_max_len: usize,
    pub generation: GenerationCheck,
}

/// Caps for the bounded generation verification.
#[derive(Clone, Copy, Debug)]
pub struct VerifyParams {
    pub exhaustive_depth: u32,
    pub samples: usize,
    pub seed: u64,
    pub cap: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { exhaustive_depth: 5, samples: 200, seed: 1, cap: 2_000_000 }
    }
}

/// Internal: W with lookup tables for the Schreier rewriting.
struct NormalGens {
    entries: Vec<WEntry>,
    /// element -> index in `entries`
    index_of: HashMap<GroupElement, usize>,
    /// transversal index -> index of `a^d` in `entries`
    apow: Vec<usize>,
    /// (u index, transversal index) -> index of `φ(ua)^{d-1} u a`
    pair: HashMap<(usize, usize), usize>,
    witness_max_len: usize,
}

fn normal_gens(u: &MarkedSubset, c: &CosetStructure) -> Result<NormalGens> {
    let spec = &u.spec;
    let d = c.index as u64;
    let r = d * d - d + 1;
    let mut entries: Vec<WEntry> = Vec::new();
    let mut index_of: HashMap<GroupElement, usize> = HashMap::new();
    let mut witness_max_len = 0usize;
    let mut push = |e: GroupElement, w: Vec<usize>| -> Result<usize> {
        if let Some(&i) = index_of.get(&e) {
            return Ok(i);
        }
        if w.len() as u64 > r {
            return Err(Error::InvariantViolation(format!(
                "witness of length {} exceeds the exponent bound {r}",
                w.len()
            )));
        }
        if evaluate_uword(u, &w)? != e {
            return Err(Error::InvariantViolation("witness word does not multiply out".into()));
        }
        if !c.quotient.apply(&e)?.is_identity() {
            return Err(Error::InvariantViolation("produced generator is not in the kernel".into()));
        }
        witness_max_len = witness_max_len.max(w.len());
        index_of.insert(e.clone(), entries.len());
        entries.push(WEntry { element: e, uword: w });
        Ok(entries.len() - 1)
    };

    // { a^d : a in T }
    let mut apow = Vec::with_capacity(c.transversal.len());
    for a in &c.transversal {
        let e = spec.pow(&a.element, d as i64)?;
        let mut w = Vec::with_capacity(a.uword.len() * d as usize);
        for _ in 0..d {
            w.extend_from_slice(&a.uword);
        }
        apow.push(push(e, w)?);
    }
    // { φ(ua)^{d-1} u a : u in U, a in T }
    let mut pair = HashMap::new();
    for (iu, ue) in u.elements.iter().enumerate() {
        for (ia, a) in c.transversal.iter().enumerate() {
            let ua = spec.multiply(ue, &a.element)?;
            let rep = c.phi(&ua)?;
            let e = spec.multiply(&spec.pow(&rep.element, d as i64 - 1)?, &ua)?;
            let mut w = Vec::new();
            for _ in 0..d - 1 {
                w.extend_from_slice(&rep.uword);
            }
            w.push(iu);
            w.extend_from_slice(&a.uword);
            pair.insert((iu, ia), push(e, w)?);
        }
    }
    Ok(NormalGens { entries, index_of, apow, pair, witness_max_len })
}

impl NormalGens {
    /// Schreier rewriting of a positive U-word known to lie in the normal
    /// subgroup: peel factors from the right, tracking the running coset.
    /// Returns the rewriting as signed W indices and checks that it
    /// re-multiplies to the element; the final coset must be trivial.
    ///
    /// In the general case the word may end in a nontrivial transversal
    /// element of the subgroup; the caller passes `allow_final` to map it.
    fn rewrite(
        &self,
        u: &MarkedSubset,
        c: &CosetStructure,
        word: &[usize],
        target: &GroupElement,
        allow_final: Option<&HashMap<usize, usize>>,
        extra: &[WEntry],
    ) -> Result<usize> {
        let spec = &u.spec;
        let mut coset = 0usize; // a_1 = 1
        let mut pieces: Vec<(usize, bool)> = Vec::new(); // (index, inverted), s_1 first
        for &iu in word.iter().rev() {
            let a = &c.transversal[coset];
            let ua = spec.multiply(&u.elements[iu], &a.element)?;
            let next = c.coset_index(&ua)?;
            // φ(ua)^{-1} u a = (φ(ua)^d)^{-1} · φ(ua)^{d-1} u a; pushed in
            // reverse so the final right-to-left product reads correctly
            pieces.push((self.pair[&(iu, coset)], false));
            pieces.push((self.apow[next], true));
            coset = next;
        }
        let lookup = |i: usize| -> &WEntry {
            if i < self.entries.len() {
                &self.entries[i]
            } else {
                &extra[i - self.entries.len()]
            }
        };
        let mut prod = match (coset, allow_final) {
            (0, _) => spec.identity(),
            (k, Some(map)) => match map.get(&k) {
                Some(&wi) => lookup(wi).element.clone(),
                None => {
                    return Err(Error::InvariantViolation(
                        "rewriting ended in a coset outside the subgroup".into(),
                    ))
                }
            },
            (_, None) => {
                return Err(Error::InvariantViolation(
                    "rewriting of a kernel element ended in a nontrivial coset".into(),
                ))
            }
        };
        let head = if coset == 0 { 0 } else { 1 };
        // h = a_fin · s_n ⋯ s_1
        for (i, invert) in pieces.iter().rev() {
            let e = &lookup(*i).element;
            let e = if *invert { spec.inverse(e)? } else { e.clone() };
            prod = spec.multiply(&prod, &e)?;
        }
        if &prod != target {
            return Err(Error::InvariantViolation(
                "Schreier rewriting does not reproduce the element".into(),
            ));
        }
        Ok(pieces.len() + head)
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_generation(
    u: &MarkedSubset,
    c: &CosetStructure,
    gens: &NormalGens,
    member: &dyn Fn(&GroupElement) -> Result<bool>,
    allow_final: Option<&HashMap<usize, usize>>,
    extra: &[WEntry],
    sampled_length: u32,
    ver: &VerifyParams,
) -> Result<GenerationCheck> {
    let mut max_w_len = 0usize;
    // exhaustive: every subgroup member among all positive U-words up to
    // the cap depth
    let idx = uword_index(u, ver.exhaustive_depth, ver.cap)?;
    let mut exhaustive_checked = 0usize;
    let mut items: Vec<(&GroupElement, &Vec<usize>)> = idx.iter().collect();
    items.sort_by(|a, b| a.0.shortlex_cmp(b.0).then(a.1.cmp(b.1)));
    for (e, w) in items {
        if member(e)? {
            max_w_len = max_w_len.max(gens.rewrite(u, c, w, e, allow_final, extra)?);
            exhaustive_checked += 1;
        }
    }
    // sampled: random positive words in the full-exponent length regime
    let mut rng = ChaCha8Rng::seed_from_u64(ver.seed);
    let mut sampled_checked = 0usize;
    for _ in 0..ver.samples {
        let len = rng.gen_range(1..=sampled_length.max(1));
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..u.elements.len())).collect();
        let e = evaluate_uword(u, &word)?;
        if member(&e)? {
            max_w_len = max_w_len.max(gens.rewrite(u, c, &word, &e, allow_final, extra)?);
            sampled_checked += 1;
        }
    }
    Ok(GenerationCheck {
        exhaustive_depth: ver.exhaustive_depth,
        exhaustive_checked,
        sampled_length,
        sampled_checked,
        max_w_len,
    })
}

/// Lemma-facing construction for a normal subgroup given as a kernel:
/// `W = {a^d} ∪ {φ(ua)^{d-1} u a} ⊆ U^{≤ d²−d+1}` with `|W| ≥ |U|/d`.
pub fn schreier_generators_normal(
    u: &MarkedSubset,
    c: &CosetStructure,
    ver: &VerifyParams,
) -> Result<SchreierResult> {
    if !matches!(c.designator, SubgroupDesignator::Kernel) {
        return Err(Error::Precondition(
            "normal construction requires a kernel designator".into(),
        ));
    }
    let d = c.index as u64;
    let r = d * d - d + 1;
    let gens = normal_gens(u, c)?;
    if (gens.entries.len() as u64) * d < u.elements.len() as u64 {
        return Err(Error::InvariantViolation(format!(
            "|W| = {} below the pigeonhole bound |U|/d = {}/{d}",
            gens.entries.len(),
            u.elements.len()
        )));
    }
    let q = c.quotient.clone();
    let member = move |g: &GroupElement| -> Result<bool> { Ok(q.apply(g)?.is_identity()) };
    let generation =
        verify_generation(u, c, &gens, &member, None, &[], (2 * r).min(64) as u32, ver)?;
    Ok(SchreierResult {
        witness_max_len: gens.witness_max_len,
        w: gens.entries,
        index: c.index,
        normal_index: c.index,
        exponent_bound: r,
        generation,
    })
}

fn factorial(d: u64) -> Result<u64> {
    let mut f = 1u64;
    for k in 2..=d {
        f = f
            .checked_mul(k)
            .ok_or_else(|| Error::ResourceLimit(format!("{d}! overflows u64")))?;
    }
    Ok(f)
}

/// General construction for an arbitrary finite-index subgroup: pass to
/// the kernel of the coset action (index `r ≤ d!`), take its generators,
/// and adjoin the transversal representatives lying in the subgroup.
/// Guarantees `W ⊆ U^{≤ (d!)²−d!+1}` and `|W| ≥ |U|/d!`.
pub fn schreier_generators(
    u: &MarkedSubset,
    q: &FiniteQuotient,
    h: &SubgroupDesignator,
    ver: &VerifyParams,
) -> Result<SchreierResult> {
    let point = match h {
        SubgroupDesignator::Kernel => {
            return schreier_generators_normal(u, &coset_structure(u, q, h)?, ver)
        }
        SubgroupDesignator::Stabilizer { point } => *point,
    };
    if point >= q.degree {
        return Err(Error::Config(format!(
            "stabilized point {point} out of range for degree {}",
            q.degree
        )));
    }
    // the index of H is the length of the point's orbit under the image
    let orbit = {
        let mut orbit = vec![point];
        let mut seen = vec![false; q.degree as usize];
        seen[point as usize] = true;
        let mut i = 0;
        while i < orbit.len() {
            for img in &q.images {
                let p2 = img.apply(orbit[i]);
                if !seen[p2 as usize] {
                    seen[p2 as usize] = true;
                    orbit.push(p2);
                }
            }
            i += 1;
        }
        orbit
    };
    let d = orbit.len() as u64;
    let dfact = factorial(d)?;
    let bound = dfact * dfact - dfact + 1;

    // coset action of the group on the orbit = on the cosets of H; its
    // kernel is the normal subgroup the lemma runs on
    let relabel: HashMap<u16, u16> = orbit
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i as u16))
        .collect();
    let images: Vec<Perm> = q
        .images
        .iter()
        .map(|img| Perm(orbit.iter().map(|&p| relabel[&img.apply(p)]).collect()))
        .collect();
    let q2 = FiniteQuotient::new(q.spec.clone(), d as u16, images)?;
    let c2 = coset_structure(u, &q2, &SubgroupDesignator::Kernel)?;
    let r_norm = c2.index as u64;
    if r_norm > dfact {
        return Err(Error::InvariantViolation(format!(
            "coset-action image of order {r_norm} exceeds d! = {dfact}"
        )));
    }
    let gens = normal_gens(u, &c2)?;
    // adjoin transversal representatives that lie in H; the rewriting of a
    // subgroup element may legitimately end in any of these cosets
    let mut extra: Vec<WEntry> = Vec::new();
    let mut allow_final: HashMap<usize, usize> = HashMap::new();
    let mut witness_max_len = gens.witness_max_len;
    for (ia, a) in c2.transversal.iter().enumerate() {
        if q.apply(&a.element)?.apply(point) == point {
            let wi = match gens.index_of.get(&a.element) {
                Some(&i) => i,
                None => {
                    witness_max_len = witness_max_len.max(a.uword.len());
                    extra.push(WEntry { element: a.element.clone(), uword: a.uword.clone() });
                    gens.entries.len() + extra.len() - 1
                }
            };
            allow_final.insert(ia, wi);
        }
    }
    let total = gens.entries.len() + extra.len();
    if (total as u64) * dfact < u.elements.len() as u64 {
        return Err(Error::InvariantViolation(format!(
            "|W| = {total} below the bound |U|/d! = {}/{dfact}",
            u.elements.len()
        )));
    }
    if witness_max_len as u64 > bound {
        return Err(Error::InvariantViolation(format!(
            "witness of length {witness_max_len} exceeds the exponent bound {bound}"
        )));
    }
    let qv = q.clone();
    let member =
        move |g: &GroupElement| -> Result<bool> { Ok(qv.apply(g)?.apply(point) == point) };
    let generation = verify_generation(
        u,
        &c2,
        &gens,
        &member,
        Some(&allow_final),
        &extra,
        (2 * bound).min(64) as u32,
        ver,
    )?;
    let mut w = gens.entries;
    w.extend(extra);
    Ok(SchreierResult {
        w,
        index: d as usize,
        normal_index: r_norm as usize,
        exponent_bound: bound,
        witness_max_len,
        generation,
    })
}

/// Verdict of the chained finite-index lower bound on a measured series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainVerdict {
    pub d: u64,
    /// `r = (d!)² − d! + 1`.
    pub r: u64,
    pub alpha: Ratio,
    pub beta: Ratio,
    /// Per-n satisfaction of `|Uⁿ| ≥ (α |U| / (d! · 2^{r/β}))^{(β/r) n}`.
    pub per_n: Vec<bool>,
    pub first_violation: Option<u32>,
}

impl ChainVerdict {
    pub fn satisfied(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Exact arithmetic check of the chained bound. With β = p/q the claim at
/// each n is `|Uⁿ| · 2ⁿ ≥ (α |U| / d!)^{(β/r) n}`, i.e.
/// `(|Uⁿ| · 2ⁿ)^{qr} · (α_den · d!)^{pn} ≥ (α_num · |U|)^{pn}`,
/// checked in arbitrary precision.
pub fn chain_psg_bound(
    counts: &[u64],
    u_size: u64,
    d: u64,
    alpha: Ratio,
    beta: Ratio,
) -> Result<ChainVerdict> {
    if d < 1 {
        return Err(Error::Config("index d must be at least 1".into()));
    }
    let dfact = factorial(d)?;
    let r = dfact * dfact - dfact + 1;
    let mut per_n = Vec::with_capacity(counts.len());
    let mut first_violation = None;
    for (i, &cnt) in counts.iter().enumerate() {
        let n = (i + 1) as u32;
        let lhs = (BigUint::from(cnt) << n).pow((beta.den * r) as u32)
            * BigUint::from(alpha.den * dfact).pow(beta.num as u32 * n);
        let rhs = BigUint::from(alpha.num * u_size).pow(beta.num as u32 * n);
        let ok = lhs >= rhs;
        if !ok && first_violation.is_none() {
            first_violation = Some(n);
        }
        per_n.push(ok);
    }
    Ok(ChainVerdict { d, r, alpha, beta, per_n, first_violation })
}

/// The quotient rescaling: a PSG inequality with α on the image pulls back
/// with α/|ker ρ| along an epimorphism with finite kernel.
pub fn quotient_rescale(alpha: Ratio, ker_order: u64) -> Result<Ratio> {
    alpha.div_int(ker_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    fn f2() -> GroupSpec {
        GroupSpec::Free { labels: vec!["a".into(), "b".into()] }
    }

    fn z2z3() -> GroupSpec {
        GroupSpec::FreeProduct { labels: vec!["s".into(), "t".into()], orders: vec![2, 3] }
    }

    fn f2_sym() -> MarkedSubset {
        let g = f2();
        MarkedSubset::new(
            g.clone(),
            ["a", "b", "a^-1", "b^-1"].iter().map(|w| g.parse_word(w).unwrap()).collect(),
        )
        .unwrap()
    }

    fn mod2_quotient() -> FiniteQuotient {
        let g = f2();
        FiniteQuotient::new(
            g,
            2,
            vec![Perm::parse("(1 2)", 2).unwrap(), Perm::identity(2)],
        )
        .unwrap()
    }

    #[test]
    fn quotient_validation() {
        let g = z2z3();
        // t has order 3; an order-2 image violates the relator
        assert!(FiniteQuotient::new(
            g.clone(),
            2,
            vec![Perm::parse("(1 2)", 2).unwrap(), Perm::parse("(1 2)", 2).unwrap()],
        )
        .is_err());
        let q = FiniteQuotient::new(
            g.clone(),
            3,
            vec![Perm::parse("(2 3)", 3).unwrap(), Perm::parse("(1 2 3)", 3).unwrap()],
        )
        .unwrap();
        let st = g.parse_word("s t").unwrap();
        // ρ(st) = ρ(s)ρ(t): 1 -> 2 -> ... composed left-to-right as actions
        assert_eq!(q.apply(&st).unwrap(), q.apply(&g.generator(0).unwrap()).unwrap()
            .compose(&q.apply(&g.generator(1).unwrap()).unwrap()));
    }

    #[test]
    fn coset_structure_kernel_two() {
        let u = f2_sym();
        let c = coset_structure(&u, &mod2_quotient(), &SubgroupDesignator::Kernel).unwrap();
        assert_eq!(c.index, 2);
        assert!(c.transversal[0].element.is_identity());
        // the nontrivial coset is reached in one step by a
        assert_eq!(c.transversal[1].uword.len(), 1);
        assert_eq!(c.transversal[1].element, u.spec.parse_word("a").unwrap());
        // φ fixes its own representatives and lands kernel elements at 1
        let g = &u.spec;
        assert!(c.phi(&g.parse_word("a b b").unwrap()).unwrap().element == g.parse_word("a").unwrap());
        assert!(c.phi(&g.parse_word("a b a").unwrap()).unwrap().element.is_identity());
    }

    #[test]
    fn coset_structure_stabilizer_three() {
        let g = f2();
        let u = f2_sym();
        let q = FiniteQuotient::new(
            g,
            3,
            vec![Perm::parse("(1 2 3)", 3).unwrap(), Perm::parse("(1 2)", 3).unwrap()],
        )
        .unwrap();
        let c =
            coset_structure(&u, &q, &SubgroupDesignator::Stabilizer { point: 0 }).unwrap();
        assert_eq!(c.index, 3);
        assert!(c.transversal.iter().all(|t| t.uword.len() <= 2));
        // image is all of S_3
        assert_eq!(c.image_order, 6);
    }

    #[test]
    fn trivial_quotient_gives_whole_group() {
        let u = f2_sym();
        let g = &u.spec;
        let q = FiniteQuotient::new(g.clone(), 1, vec![Perm::identity(1); 2]).unwrap();
        let c = coset_structure(&u, &q, &SubgroupDesignator::Kernel).unwrap();
        assert_eq!(c.index, 1);
        let res = schreier_generators_normal(&u, &c, &VerifyParams::default()).unwrap();
        // W = {1} ∪ U for d = 1
        let wset: Vec<&GroupElement> = res.w.iter().map(|w| &w.element).collect();
        for e in &u.elements {
            assert!(wset.contains(&e));
        }
        assert_eq!(res.exponent_bound, 1);
    }

    #[test]
    fn normal_index_two() {
        let u = f2_sym();
        let g = &u.spec;
        let c = coset_structure(&u, &mod2_quotient(), &SubgroupDesignator::Kernel).unwrap();
        let res = schreier_generators_normal(&u, &c, &VerifyParams::default()).unwrap();
        assert_eq!(res.exponent_bound, 3);
        let wset: Vec<&GroupElement> = res.w.iter().map(|w| &w.element).collect();
        // the classical index-2 generators appear
        for word in ["a a", "b", "a b a"] {
            let e = g.parse_word(word).unwrap();
            assert!(wset.contains(&&e), "missing {word}");
        }
        assert!(res.w.len() as u64 * 2 >= u.elements.len() as u64);
        assert!(res.witness_max_len as u64 <= res.exponent_bound);
        assert!(res.generation.exhaustive_checked > 0);
        assert!(res.generation.sampled_checked > 0);
    }

    #[test]
    fn general_index_three() {
        let g = f2();
        let u = f2_sym();
        let q = FiniteQuotient::new(
            g,
            3,
            vec![Perm::parse("(1 2 3)", 3).unwrap(), Perm::parse("(1 2)", 3).unwrap()],
        )
        .unwrap();
        let res = schreier_generators(
            &u,
            &q,
            &SubgroupDesignator::Stabilizer { point: 0 },
            &VerifyParams::default(),
        )
        .unwrap();
        assert_eq!(res.index, 3);
        assert_eq!(res.normal_index, 6); // image of the coset action is S_3
        assert_eq!(res.exponent_bound, 31); // (3!)^2 - 3! + 1
        assert!(res.witness_max_len as u64 <= res.exponent_bound);
        assert!(res.w.len() as u64 * 6 >= u.elements.len() as u64);
        // every generator is in the stabilizer preimage
        for w in &res.w {
            assert!(q.apply(&w.element).unwrap().apply(0) == 0);
        }
        assert!(res.generation.exhaustive_checked > 0);
    }

    #[test]
    fn kernel_result_consistent_between_paths() {
        let u = f2_sym();
        let q = mod2_quotient();
        let a = schreier_generators_normal(
            &u,
            &coset_structure(&u, &q, &SubgroupDesignator::Kernel).unwrap(),
            &VerifyParams::default(),
        )
        .unwrap();
        let b =
            schreier_generators(&u, &q, &SubgroupDesignator::Kernel, &VerifyParams::default())
                .unwrap();
        let wa: Vec<&GroupElement> = a.w.iter().map(|w| &w.element).collect();
        let wb: Vec<&GroupElement> = b.w.iter().map(|w| &w.element).collect();
        assert_eq!(wa, wb);
    }

    #[test]
    fn chain_bound_arithmetic() {
        // free-semigroup counts |Uⁿ| = |U|ⁿ: satisfied for α = β = 1
        let counts: Vec<u64> = (1..=8).map(|n| 2u64.pow(n)).collect();
        let v = chain_psg_bound(&counts, 2, 2, Ratio::new(1, 1).unwrap(), Ratio::new(1, 1).unwrap())
            .unwrap();
        assert!(v.satisfied());
        assert_eq!(v.r, 3);
        // the measured F2 example from the plan: exact verdict at every n
        let f2_counts = [4u64, 13, 37, 109, 325, 973, 2917, 8749, 26245, 78733];
        let v = chain_psg_bound(
            &f2_counts,
            4,
            2,
            Ratio::new(1, 8).unwrap(),
            Ratio::new(1, 4).unwrap(),
        )
        .unwrap();
        assert_eq!(v.per_n.len(), 10);
        assert!(v.satisfied());
        // rescaling divides α by the kernel order
        let a = quotient_rescale(Ratio::new(1, 8).unwrap(), 3).unwrap();
        assert_eq!(a, Ratio::new(1, 24).unwrap());
    }
}
