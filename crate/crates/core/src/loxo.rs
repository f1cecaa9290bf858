//! Loxodromic extraction and free-semigroup certification.
//!
//! The constructions follow the delta = 0 tree specializations of the
//! general hyperbolic arguments, with every inequality decided exactly.
//! Displacement minimization runs over the barycentric subdivision (doubled
//! metric) because the optimum for elliptic-only sets can sit mid-edge;
//! unspecified integer parameters (powers of auxiliary elements) are found by
//! least-integer direct search against the exact inequalities they must
//! satisfy, and every certificate ends with a literal distinctness
//! verification that aborts loudly on failure.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::displacement::{displacement_at4, min_displacement, min_displacement_subdivided};
use crate::group::{GroupElement, MarkedSubset};
use crate::tree::{same_axis, same_endpoint_pair, AxisFingerprint, IsomClass, TreeAction, TreePoint, TreeVertex};
use crate::{Error, Result};

/// Which branch of the short-loxodromic dichotomy produced the element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShortLoxoProvenance {
    /// Some `s` in the large-displacement subset was itself loxodromic with
    /// small backtracking at the basepoint: `b = s`.
    Single { s: GroupElement },
    /// The two-element criterion fired for the maximizer `t` and some `s`:
    /// `b = t s`.
    Product { t: GroupElement, s: GroupElement },
}

/// Certificate for a short loxodromic element `b` in `S^{<=2}`.
///
/// All metric fields are in the doubled (subdivision) metric; divide by two
/// for the original edge-length-one normalization. The certified bound is
/// `d(o, bo) >= lambda(S, X) - 10` (doubled: `- 20`), with `o` the exact
/// minimizer of the displacement over the subdivision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShortLoxoCertificate {
    pub b: GroupElement,
    pub provenance: ShortLoxoProvenance,
    pub basepoint: TreePoint,
    /// `lambda(S, X)` over the quarter grid, quadrupled metric.
    pub lambda4: u64,
    /// `d(o, bo)`, quadrupled metric.
    pub dist4: u64,
    pub tau: u64,
    pub fingerprint: AxisFingerprint,
}

/// Extract a loxodromic element of `S^{<=2}` whose displacement at the
/// displacement minimizer is within an additive 10 of `lambda(S, X)`.
///
/// Procedure (tree form, delta = min(lambda/30, 1) carried exactly in units
/// of 1/120): minimize displacement over the quarter grid to get `o`; keep
/// the subset `S_0` of elements displacing `o` by at least `lambda - 9 delta`;
/// let `t` maximize `d(o, so)`. Every `s` in `S_0` is then either loxodromic
/// with `<o, s^2 o>_{so} <= 4 delta` (take `b = s`) or satisfies
/// `max{<t^{-1}o, so>_o, <to, s^{-1}o>_o} <= 4 delta` (take `b = t s`).
pub fn short_loxodromic(action: &TreeAction, s: &[GroupElement]) -> Result<ShortLoxoCertificate> {
    if s.is_empty() {
        return Err(Error::Precondition("short_loxodromic of an empty set".into()));
    }
    let mut s_sorted = s.to_vec();
    s_sorted.sort();
    s_sorted.dedup();
    let (o, lambda4) = min_displacement_subdivided(action, &s_sorted)?;
    if lambda4 == 0 {
        return Err(Error::Precondition(
            "lambda(S, X) = 0: the set has a common fixed point, no loxodromic exists".into(),
        ));
    }
    // Exact arithmetic in units of 1/120 of the original metric: a
    // quadrupled distance d4 is worth 30*d4 units, a gromov4 product 15
    // units each; delta = min(lambda/30, 1) is min(lambda4, 120) units;
    // the threshold L0 = 4 delta.
    let delta120 = lambda4.min(120);
    let l0 = 4 * delta120;
    let pts: Vec<(GroupElement, TreePoint, u64)> = s_sorted
        .iter()
        .map(|g| {
            let go = action.act_point(g, &o)?;
            let d4 = action.dist4(&o, &go)?;
            Ok((g.clone(), go, d4))
        })
        .collect::<Result<_>>()?;
    // S_0: elements with 30*d4 >= 30*lambda4 - 9*delta120
    let s0: Vec<&(GroupElement, TreePoint, u64)> = pts
        .iter()
        .filter(|(_, _, d4)| 30 * d4 + 9 * delta120 >= 30 * lambda4)
        .collect();
    // t maximizes d(o, so); shortlex tie-break (s_sorted is sorted already,
    // so the first maximum wins)
    let (t, _, _) = pts
        .iter()
        .max_by(|a, b| a.2.cmp(&b.2).then_with(|| b.0.shortlex_cmp(&a.0)))
        .unwrap()
        .clone();
    let t_inv = action.spec.inverse(&t)?;
    let to = action.act_point(&t, &o)?;
    let ti_o = action.act_point(&t_inv, &o)?;

    for (cand, cand_o, d4) in &s0 {
        // branch 1: cand loxodromic with small backtracking at o
        let trans = action.translation(cand)?;
        if trans.tau > 0 {
            let s2o = action.act_point(cand, cand_o)?;
            let gp = action.gromov4_pts(&o, &s2o, cand_o)?; // 1/8 units
            if 15 * gp <= l0 {
                return finish_certificate(
                    action,
                    &s_sorted,
                    cand.clone(),
                    ShortLoxoProvenance::Single { s: cand.clone() },
                    o,
                    lambda4,
                    *d4,
                )?
                .map(Ok)
                .unwrap_or_else(|| {
                    Err(Error::InvariantViolation("branch-1 element not loxodromic".into()))
                });
            }
        }
        // branch 2: the two-element criterion for the pair (t, cand)
        let s_inv = action.spec.inverse(cand)?;
        let si_o = action.act_point(&s_inv, &o)?;
        let g1 = action.gromov4_pts(&ti_o, cand_o, &o)?;
        let g2 = action.gromov4_pts(&to, &si_o, &o)?;
        if 15 * g1 <= l0 && 15 * g2 <= l0 {
            let b = action.spec.multiply(&t, cand)?;
            let bo = action.act_point(&b, &o)?;
            let db = action.dist4(&o, &bo)?;
            if let Some(cert) = finish_certificate(
                action,
                &s_sorted,
                b,
                ShortLoxoProvenance::Product { t: t.clone(), s: cand.clone() },
                o.clone(),
                lambda4,
                db,
            )? {
                return Ok(cert);
            }
            // the dichotomy promises loxodromy here; falling through would
            // hide a real bug
            return Err(Error::InvariantViolation(
                "two-element branch produced an elliptic product".into(),
            ));
        }
    }
    Err(Error::InvariantViolation(
        "short-loxodromic dichotomy fired for no element of S_0".into(),
    ))
}

fn finish_certificate(
    action: &TreeAction,
    s: &[GroupElement],
    b: GroupElement,
    provenance: ShortLoxoProvenance,
    o: TreePoint,
    lambda4: u64,
    dist4: u64,
) -> Result<Option<ShortLoxoCertificate>> {
    let trans = action.translation(&b)?;
    let IsomClass::Loxodromic { fingerprint } = trans.class else {
        return Ok(None);
    };
    // certified bound: d(o, bo) >= lambda(S, X) - 10, quadrupled
    if dist4 + 40 < lambda4 {
        return Err(Error::InvariantViolation(format!(
            "short loxodromic displacement {dist4} below lambda4 {lambda4} - 40"
        )));
    }
    // membership in S^{<=2} is by construction (b = s or b = t s); still
    // recheck displacement coherence at the basepoint
    let lam_here = displacement_at4(action, s, &o)?;
    debug_assert!(lam_here >= lambda4);
    Ok(Some(ShortLoxoCertificate {
        b,
        provenance,
        basepoint: o,
        lambda4,
        dist4,
        tau: trans.tau,
        fingerprint,
    }))
}

/// Hypothesis-and-conclusion record of the two-element joint loxodromy
/// criterion: there is an `L > 0` with `min{d(o,go), d(o,ho)}/4 >= L >=
/// max{<go, h^{-1}o>_o, <g^{-1}o, ho>_o}` iff `min_d2 > 0` and
/// `min_d2 >= 4 max_gp2` (delta = 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointLoxoReport {
    pub hypothesis_holds: bool,
    pub min_dist4: u64,
    pub max_gromov4: u64,
    /// Present when the hypothesis holds: `gh` must then be loxodromic.
    pub gh_tau: Option<u64>,
    /// Measured quasi-geodesic constant of the concatenated broken path
    /// through `(gh)^i o`, as a display value.
    pub measured_c: Option<f64>,
}

pub fn joint_loxodromic(
    action: &TreeAction,
    g: &GroupElement,
    h: &GroupElement,
    o: &TreeVertex,
) -> Result<JointLoxoReport> {
    let op = TreePoint::Vertex(o.clone());
    let spec = &action.spec;
    let go = action.act_point(g, &op)?;
    let ho = action.act_point(h, &op)?;
    let gi_o = action.act_point(&spec.inverse(g)?, &op)?;
    let hi_o = action.act_point(&spec.inverse(h)?, &op)?;
    let dg = action.dist4(&op, &go)?;
    let dh = action.dist4(&op, &ho)?;
    let min_d4 = dg.min(dh);
    let gp1 = action.gromov4_pts(&go, &hi_o, &op)?;
    let gp2 = action.gromov4_pts(&gi_o, &ho, &op)?;
    // dist4 is four times, gromov4_pts eight times the original metric, so
    // the condition min_d/4 >= max_gp reads min_d4 >= 2 * max_gp4.
    let max_gp4 = gp1.max(gp2);
    let hypothesis_holds = min_d4 > 0 && min_d4 >= 2 * max_gp4;
    if !hypothesis_holds {
        return Ok(JointLoxoReport {
            hypothesis_holds,
            min_dist4: min_d4,
            max_gromov4: max_gp4,
            gh_tau: None,
            measured_c: None,
        });
    }
    let gh = spec.multiply(g, h)?;
    let t = action.translation(&gh)?;
    if t.tau == 0 {
        return Err(Error::InvariantViolation(
            "joint loxodromy hypothesis held but gh is elliptic".into(),
        ));
    }
    // measure the quasi-geodesic constant of the broken path through the
    // orbit o, (gh)o, (gh)^2 o, ...: windows of vertices o, go on consecutive
    // translates. c = max over pairs of pathlength / distance.
    let mut pts: Vec<TreePoint> = Vec::new();
    let mut acc = spec.identity();
    for _ in 0..4u32 {
        pts.push(action.act_point(&acc, &op)?);
        let acc_g = spec.multiply(&acc, g)?;
        pts.push(action.act_point(&acc_g, &op)?);
        acc = spec.multiply(&acc, &gh)?;
    }
    pts.push(action.act_point(&acc, &op)?);
    let mut plen = vec![0u64];
    for w in pts.windows(2) {
        let d = action.dist4(&w[0], &w[1])?;
        plen.push(plen.last().unwrap() + d);
    }
    let mut c: f64 = 1.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let along = (plen[j] - plen[i]) as f64;
            let direct = action.dist4(&pts[i], &pts[j])? as f64;
            if direct == 0.0 {
                if along > 0.0 {
                    c = f64::INFINITY;
                }
            } else {
                c = c.max(along / direct);
            }
        }
    }
    Ok(JointLoxoReport {
        hypothesis_holds,
        min_dist4: min_d4,
        max_gromov4: max_gp4,
        gh_tau: Some(t.tau),
        measured_c: Some(c),
    })
}

/// Free-semigroup certificate for a pair of elements: all words of length at
/// most `depth` over the (ordered) pair are pairwise distinct.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PingPongCertificate {
    /// Which of the four sign pairs `{g^{±1}, h^{±1}}` verified, as the
    /// actual elements.
    pub pair: (GroupElement, GroupElement),
    pub depth: u32,
    pub words_checked: u64,
}

/// Over loxodromics with distinct endpoint pairs, some pair among
/// `{g^{±1}, h^{±1}}` generates a free semigroup; find the first (in the
/// fixed search order `(g,h), (g,h^{-1}), (g^{-1},h), (g^{-1},h^{-1})`) that
/// verifies to the requested depth.
pub fn pingpong_pair(
    action: &TreeAction,
    g: &GroupElement,
    h: &GroupElement,
    depth: u32,
) -> Result<PingPongCertificate> {
    let spec = &action.spec;
    if action.translation(g)?.tau == 0 || action.translation(h)?.tau == 0 {
        return Err(Error::Precondition("pingpong_pair needs two loxodromic elements".into()));
    }
    if same_axis(action, g, h)? {
        return Err(Error::Precondition(
            "pingpong_pair needs distinct endpoint pairs".into(),
        ));
    }
    let gi = spec.inverse(g)?;
    let hi = spec.inverse(h)?;
    let candidates = [
        (g.clone(), h.clone()),
        (g.clone(), hi.clone()),
        (gi.clone(), h.clone()),
        (gi, hi),
    ];
    for (x, y) in candidates {
        if let Some(words) = free_words_distinct(spec, &[x.clone(), y.clone()], depth)? {
            return Ok(PingPongCertificate { pair: (x, y), depth, words_checked: words });
        }
    }
    Err(Error::Inconclusive(format!(
        "no sign pair verified freeness to depth {depth}"
    )))
}

/// Check that all nonempty words of length <= depth over `gens` evaluate to
/// pairwise distinct elements. Returns the number of words on success, `None`
/// on a collision.
fn free_words_distinct(
    spec: &crate::group::GroupSpec,
    gens: &[GroupElement],
    depth: u32,
) -> Result<Option<u64>> {
    let mut seen: HashMap<GroupElement, Vec<usize>> = HashMap::new();
    let mut frontier: Vec<(GroupElement, Vec<usize>)> = vec![(spec.identity(), Vec::new())];
    let mut count = 0u64;
    for _ in 0..depth {
        let mut next = Vec::new();
        for (e, w) in &frontier {
            for (i, gen) in gens.iter().enumerate() {
                let e2 = spec.multiply(e, gen)?;
                let mut w2 = w.clone();
                w2.push(i);
                if e2.is_identity() {
                    return Ok(None);
                }
                if let Some(_prev) = seen.get(&e2) {
                    return Ok(None);
                }
                seen.insert(e2.clone(), w2.clone());
                count += 1;
                next.push((e2, w2));
            }
        }
        frontier = next;
    }
    Ok(Some(count))
}

/// Result of the distinctness check exposed for arbitrary base sets, with
/// the colliding pair of words (as index sequences into the set) on failure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeRankReport {
    pub free: bool,
    pub depth: u32,
    pub words_checked: u64,
    pub collision: Option<(Vec<usize>, Vec<usize>)>,
}

pub fn free_rank_verify(
    spec: &crate::group::GroupSpec,
    gens: &[GroupElement],
    depth: u32,
) -> Result<FreeRankReport> {
    let mut seen: HashMap<GroupElement, Vec<usize>> = HashMap::new();
    let mut frontier: Vec<(GroupElement, Vec<usize>)> = vec![(spec.identity(), Vec::new())];
    let mut count = 0u64;
    for _ in 0..depth {
        let mut next = Vec::new();
        for (e, w) in &frontier {
            for (i, gen) in gens.iter().enumerate() {
                let e2 = spec.multiply(e, gen)?;
                let mut w2 = w.clone();
                w2.push(i);
                if e2.is_identity() {
                    return Ok(FreeRankReport {
                        free: false,
                        depth,
                        words_checked: count,
                        collision: Some((w2, Vec::new())),
                    });
                }
                if let Some(prev) = seen.get(&e2) {
                    return Ok(FreeRankReport {
                        free: false,
                        depth,
                        words_checked: count,
                        collision: Some((w2, prev.clone())),
                    });
                }
                seen.insert(e2.clone(), w2.clone());
                count += 1;
                next.push((e2, w2));
            }
        }
        frontier = next;
    }
    Ok(FreeRankReport { free: true, depth, words_checked: count, collision: None })
}

/// Operational classification of the action generated by a marked set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ActionClass {
    /// A common fixed vertex of all generators (hence of the whole group).
    Bounded { fixed: TreeVertex },
    /// Loxodromics found, all sharing one endpoint pair, up to the search
    /// depth.
    Lineal { fingerprint: AxisFingerprint, search_depth: u32 },
    /// Loxodromics sharing exactly one endpoint. Cannot occur for these tree
    /// families (trivial edge stabilizers); the variant exists so the
    /// invariant "never Focal" is a statement about outputs, not types.
    Focal,
    /// Two loxodromics with disjoint endpoint pairs, as witnesses.
    General { w1: GroupElement, w2: GroupElement },
}

/// Classify by exact fixed-point detection plus a bounded search for
/// independent loxodromics in the symmetrized powers. Horocyclic actions do
/// not exist here (a tree action without loxodromics fixes a vertex), so the
/// outcome is Bounded, Lineal (to the stated depth), or General.
pub fn classify_action(
    action: &TreeAction,
    u: &MarkedSubset,
    depth: u32,
    cap: usize,
) -> Result<ActionClass> {
    let md = min_displacement(action, &u.elements)?;
    if md.lambda == 0 {
        return Ok(ActionClass::Bounded { fixed: md.witness });
    }
    let sym = u.symmetrize()?;
    let ball = crate::group::semigroup_ball(&sym, depth, cap)?;
    let mut first: Option<(GroupElement, AxisFingerprint)> = None;
    for e in &ball {
        let t = action.translation(e)?;
        if let IsomClass::Loxodromic { fingerprint } = t.class {
            match &first {
                None => first = Some((e.clone(), fingerprint)),
                Some((w1, f1)) => {
                    if !f1.same_endpoint_pair(&fingerprint, &action.spec)? {
                        return Ok(ActionClass::General { w1: w1.clone(), w2: e.clone() });
                    }
                }
            }
        }
    }
    match first {
        Some((_, fingerprint)) => Ok(ActionClass::Lineal { fingerprint, search_depth: depth }),
        None => Err(Error::Inconclusive(format!(
            "no loxodromic element found to depth {depth} despite lambda > 0"
        ))),
    }
}

/// Certificate for a large free-semigroup base extracted from a marked set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeBaseCertificate {
    /// The base set `T = { s h^{n3} : s in U_0 }`.
    pub t: Vec<GroupElement>,
    /// The short loxodromic `b` and its provenance.
    pub short: ShortLoxoCertificate,
    /// The auxiliary loxodromic `h = f b^{n1}`, independent of `b`.
    pub h: GroupElement,
    pub f: GroupElement,
    pub n1: u32,
    pub n3: u32,
    /// `F = E(h) ∩ E(b)` within the configured word-length ball.
    pub f_subgroup: Vec<GroupElement>,
    /// The coset-separated subset of `U` indexing `T`.
    pub u0: Vec<GroupElement>,
    /// Every element of `T` is a product of at most this many elements of
    /// `U` (by construction; recorded for the growth chaining).
    pub kappa: u64,
    pub depth: u32,
    pub verified: bool,
}

/// Build a free-semigroup base of size about `|U| / |F|` from a marked set
/// whose action is of general type, then verify freeness to `depth` exactly.
///
/// Integer parameters: `n1` is the least power making `h = f b^{n1}`
/// loxodromic, independent of `b`, and displacing the basepoint at least
/// twice as far as `b`; `n3` is the least power giving the ping-pong margin
/// `min_t d(o, to) > 4 max_{t,u} <to, u^{-1}o>_o` over `T`. Both found by
/// direct search since all quantities are exact.
pub fn build_free_base(
    action: &TreeAction,
    u: &MarkedSubset,
    depth: u32,
    f_word_bound: u64,
    search_cap: u32,
) -> Result<FreeBaseCertificate> {
    let spec = &action.spec;
    let class = classify_action(action, u, 3, 4_000_000)?;
    if !matches!(class, ActionClass::General { .. }) {
        return Err(Error::Precondition(
            "build_free_base requires an action of general type".into(),
        ));
    }
    let short = short_loxodromic(action, &u.elements)?;
    let b = short.b.clone();
    let o = short.basepoint.clone();

    // f: first element of U (shortlex) outside E(b)
    let mut f: Option<GroupElement> = None;
    for cand in &u.elements {
        if !same_endpoint_pair(action, &b, cand)? {
            f = Some(cand.clone());
            break;
        }
    }
    let f = f.ok_or_else(|| {
        Error::InvariantViolation("general type but every generator preserves E(b)".into())
    })?;

    // n1: least power with h = f b^n loxodromic, independent of b, and
    // displacing o at least twice as far as b does.  Among such powers,
    // prefer the first whose axis class E(h) separates the generators:
    // if s'^{-1} s lies in E(h) for distinct s, s' in U then s h^n and
    // s' h^{n +/- 1} head down the same ray and the base below degenerates
    // (e.g. h = ba in F_2 identifies b^{-1} h^n h with a h^n), so such a
    // pair would cost us a generator in the coset filter.
    let d_b = action.dist4(&o, &action.act_point(&b, &o)?)?;
    let mut best: Option<(GroupElement, u32)> = None;
    let mut h: Option<(GroupElement, u32)> = None;
    let mut bpow = spec.identity();
    for n in 1..=search_cap {
        bpow = spec.multiply(&bpow, &b)?;
        let cand = spec.multiply(&f, &bpow)?;
        if action.translation(&cand)?.tau == 0 {
            continue;
        }
        if same_axis(action, &cand, &b)? {
            continue;
        }
        let d_h = action.dist4(&o, &action.act_point(&cand, &o)?)?;
        if d_h < 2 * d_b {
            continue;
        }
        if best.is_none() {
            best = Some((cand.clone(), n));
        }
        let mut separates = true;
        'pairs: for (i, s) in u.elements.iter().enumerate() {
            for s2 in &u.elements[i + 1..] {
                let q = spec.multiply(&spec.inverse(s2)?, s)?;
                if same_endpoint_pair(action, &cand, &q)? {
                    separates = false;
                    break 'pairs;
                }
            }
        }
        if separates {
            h = Some((cand, n));
            break;
        }
    }
    let (h, n1) = h.or(best).ok_or_else(|| {
        Error::Inconclusive(format!("no valid power f b^n found up to n = {search_cap}"))
    })?;

    // F = E(h) ∩ E(b) over elements of word length <= f_word_bound
    let f_subgroup = axis_stabilizer_intersection(action, &b, &h, f_word_bound)?;
    let f_set: HashSet<&GroupElement> = f_subgroup.iter().collect();

    // U_0: greedy subset of U avoiding F with pairwise distinct sF cosets
    // and pairwise distinct sE(h) cosets.  The second condition is exact
    // here (axis comparison) and is what actually guarantees distinct
    // initial shadows for the base elements s h^{n3}.
    let mut u0: Vec<GroupElement> = Vec::new();
    for s in &u.elements {
        if f_set.contains(s) {
            continue;
        }
        let mut fresh = true;
        for s2 in &u0 {
            let q = spec.multiply(&spec.inverse(s2)?, s)?;
            if f_set.contains(&q) || same_endpoint_pair(action, &h, &q)? {
                fresh = false;
                break;
            }
        }
        if fresh {
            u0.push(s.clone());
        }
    }
    if u0.is_empty() {
        return Err(Error::Inconclusive("no generator survives the coset filter".into()));
    }

    // n3: least power with the exact ping-pong margin over T = { s h^n }
    let mut n3: Option<u32> = None;
    let mut hpow = spec.identity();
    let mut t_set: Vec<GroupElement> = Vec::new();
    for n in 1..=search_cap {
        hpow = spec.multiply(&hpow, &h)?;
        let t_cand: Vec<GroupElement> = u0
            .iter()
            .map(|s| spec.multiply(s, &hpow))
            .collect::<Result<_>>()?;
        if t_cand.iter().any(|e| e.is_identity()) {
            continue;
        }
        let mut min_d = u64::MAX;
        let mut max_gp = 0u64;
        let mut images = Vec::new();
        let mut inv_images = Vec::new();
        for t in &t_cand {
            let to = action.act_point(t, &o)?;
            min_d = min_d.min(action.dist4(&o, &to)?);
            images.push(to);
            inv_images.push(action.act_point(&spec.inverse(t)?, &o)?);
        }
        for (i, ti) in images.iter().enumerate() {
            for uj in &inv_images {
                max_gp = max_gp.max(action.gromov4_pts(ti, uj, &o)?);
            }
            // initial shadows of distinct base elements must also be
            // disjoint, not just consecutive cancellation small
            for tj in &images[i + 1..] {
                max_gp = max_gp.max(action.gromov4_pts(ti, tj, &o)?);
            }
        }
        // margin in quadrupled units: d/4 > gp <=> min_d4 > 2 * max_gp4
        if min_d > 0 && min_d > 2 * max_gp {
            n3 = Some(n);
            t_set = t_cand;
            break;
        }
    }
    let n3 = n3.ok_or_else(|| {
        Error::Inconclusive(format!("no ping-pong margin up to h^{search_cap}"))
    })?;

    // final exact verification; a failure here is a hard stop
    let report = free_rank_verify(spec, &t_set, depth)?;
    if !report.free {
        return Err(Error::InvariantViolation(format!(
            "free base failed distinctness at depth {depth}: collision {:?}",
            report.collision
        )));
    }
    // kappa: U-length bound per element of T: 1 + n3 * (|f|_U + n1 * |b|_U),
    // with |b|_U <= 2 and |f|_U = 1
    let b_ulen: u64 = match short.provenance {
        ShortLoxoProvenance::Single { .. } => 1,
        ShortLoxoProvenance::Product { .. } => 2,
    };
    let kappa = 1 + n3 as u64 * (1 + n1 as u64 * b_ulen);
    Ok(FreeBaseCertificate {
        t: t_set,
        short,
        h,
        f,
        n1,
        n3,
        f_subgroup,
        u0,
        kappa,
        depth,
        verified: true,
    })
}

/// Enumerate `E(g) ∩ E(h)` over all group elements of word length at most
/// `bound` (reduced length over the group's own generators).
pub fn axis_stabilizer_intersection(
    action: &TreeAction,
    g: &GroupElement,
    h: &GroupElement,
    bound: u64,
) -> Result<Vec<GroupElement>> {
    let spec = &action.spec;
    // enumerate the ball over the symmetrized generator set of the group
    let mut gens = Vec::new();
    for i in 0..spec.num_generators() {
        gens.push(spec.generator(i)?);
        gens.push(spec.inverse(&spec.generator(i)?)?);
    }
    let gens = MarkedSubset::new(spec.clone(), gens)?;
    let ball = crate::group::semigroup_ball(&gens, bound as u32, 10_000_000)?;
    let mut out = Vec::new();
    for e in ball {
        if same_endpoint_pair(action, g, &e)? && same_endpoint_pair(action, h, &e)? {
            out.push(e);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::tree::TreeKind;

    fn f2_action() -> TreeAction {
        TreeAction::new(
            GroupSpec::Free { labels: vec!["a".into(), "b".into()] },
            TreeKind::Cayley,
        )
        .unwrap()
    }

    fn z2z3_action() -> TreeAction {
        TreeAction::new(
            GroupSpec::FreeProduct {
                labels: vec!["s".into(), "t".into()],
                orders: vec![2, 3],
            },
            TreeKind::BassSerre,
        )
        .unwrap()
    }

    #[test]
    fn short_loxo_free_generators() {
        let a = f2_action();
        let g = &a.spec;
        let s = vec![g.parse_word("a").unwrap(), g.parse_word("b").unwrap()];
        let cert = short_loxodromic(&a, &s).unwrap();
        assert!(matches!(cert.provenance, ShortLoxoProvenance::Single { .. }));
        assert_eq!(cert.b, g.parse_word("a").unwrap());
        assert!(cert.dist4 + 40 >= cert.lambda4);
    }

    // [frozen oracle] two elliptic generators of Z/2 * Z/3: the dichotomy
    // must land in the product branch with b = st or ts, tau = 2.
    #[test]
    fn short_loxo_elliptic_pair() {
        let a = z2z3_action();
        let g = &a.spec;
        let s = vec![g.parse_word("s").unwrap(), g.parse_word("t").unwrap()];
        let cert = short_loxodromic(&a, &s).unwrap();
        assert!(matches!(cert.provenance, ShortLoxoProvenance::Product { .. }));
        let st = g.parse_word("s t").unwrap();
        let ts = g.parse_word("t s").unwrap();
        assert!(cert.b == st || cert.b == ts, "got {}", g.format_word(&cert.b));
        assert_eq!(cert.tau, 2);
    }

    #[test]
    fn joint_loxo_basic() {
        let a = f2_action();
        let g = &a.spec;
        let base = a.base();
        let r = joint_loxodromic(
            &a,
            &g.parse_word("a").unwrap(),
            &g.parse_word("b").unwrap(),
            &base,
        )
        .unwrap();
        assert!(r.hypothesis_holds);
        assert_eq!(r.gh_tau, Some(2));
        assert!(r.measured_c.unwrap() >= 1.0);
        // rejected: g and its inverse backtrack fully
        let r2 = joint_loxodromic(
            &a,
            &g.parse_word("a").unwrap(),
            &g.parse_word("a^-1").unwrap(),
            &base,
        )
        .unwrap();
        assert!(!r2.hypothesis_holds);
    }

    #[test]
    fn pingpong_f2_conjugates() {
        let a = f2_action();
        let g = &a.spec;
        let cert = pingpong_pair(
            &a,
            &g.parse_word("a").unwrap(),
            &g.parse_word("b a b^-1").unwrap(),
            6,
        )
        .unwrap();
        // a and b a b^-1 already generate freely
        assert_eq!(cert.pair.0, g.parse_word("a").unwrap());
        assert_eq!(cert.depth, 6);
    }

    // [frozen oracle] in Z/2 * Z/3 the pair (st, ts) collides:
    // (st)(ts)(st) = s = (ts)(st)(ts); the sign pair (st, (ts)^{-1} = s t^2)
    // generates freely (alternating syllable words never cancel).
    #[test]
    fn pingpong_bass_serre_needs_sign_flip() {
        let a = z2z3_action();
        let g = &a.spec;
        let st = g.parse_word("s t").unwrap();
        let ts = g.parse_word("t s").unwrap();
        // the raw pair collides
        let spec = &a.spec;
        let w1 = spec
            .multiply(&spec.multiply(&st, &ts).unwrap(), &st)
            .unwrap();
        let w2 = spec
            .multiply(&spec.multiply(&ts, &st).unwrap(), &ts)
            .unwrap();
        assert_eq!(w1, w2);
        assert_eq!(w1, g.parse_word("s").unwrap());
        let cert = pingpong_pair(&a, &st, &ts, 6).unwrap();
        let st2 = g.parse_word("s t^2").unwrap();
        assert_eq!(cert.pair, (st.clone(), st2));
    }

    #[test]
    fn classify_examples() {
        let a = f2_action();
        let g = &a.spec;
        let mk = |ws: &[&str]| {
            MarkedSubset::new(g.clone(), ws.iter().map(|w| g.parse_word(w).unwrap()).collect())
                .unwrap()
        };
        // single loxodromic generator: lineal to the search depth
        let c = classify_action(&a, &mk(&["a"]), 3, 1_000_000).unwrap();
        assert!(matches!(c, ActionClass::Lineal { .. }));
        // two independent generators: general type
        let c = classify_action(&a, &mk(&["a", "b"]), 3, 1_000_000).unwrap();
        assert!(matches!(c, ActionClass::General { .. }));
        assert!(!matches!(c, ActionClass::Focal));
        // Z/2 * Z/3 with one elliptic generator: bounded
        let a2 = z2z3_action();
        let g2 = &a2.spec;
        let u = MarkedSubset::new(g2.clone(), vec![g2.parse_word("t").unwrap()]).unwrap();
        let c = classify_action(&a2, &u, 3, 1_000_000).unwrap();
        assert!(matches!(c, ActionClass::Bounded { .. }));
    }

    #[test]
    fn free_base_f2_symmetric() {
        let a = f2_action();
        let g = &a.spec;
        let u = MarkedSubset::new(
            g.clone(),
            ["a", "b", "a^-1", "b^-1"].iter().map(|w| g.parse_word(w).unwrap()).collect(),
        )
        .unwrap();
        let cert = build_free_base(&a, &u, 6, 4, 64).unwrap();
        assert_eq!(cert.t.len(), 4);
        assert!(cert.verified);
        // free action: F is exactly {1}
        assert_eq!(cert.f_subgroup.len(), 1);
        assert!(cert.f_subgroup[0].is_identity());
        // the base really is U-generated within kappa letters
        let idx = crate::group::uword_index(&u, cert.kappa as u32, 10_000_000).unwrap();
        for t in &cert.t {
            let w = idx.get(t).expect("T element reachable over U");
            assert!(w.len() as u64 <= cert.kappa);
        }
    }

    #[test]
    fn free_base_bass_serre() {
        let a = z2z3_action();
        let g = &a.spec;
        let u = MarkedSubset::new(
            g.clone(),
            vec![g.parse_word("s").unwrap(), g.parse_word("t").unwrap(), g.parse_word("t^2").unwrap()],
        )
        .unwrap();
        let cert = build_free_base(&a, &u, 5, 7, 64).unwrap();
        assert!(cert.verified);
        assert!(!cert.t.is_empty());
    }
}
