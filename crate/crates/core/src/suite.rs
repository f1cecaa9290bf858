//! The acceptance suite: ten seeded end-to-end checks over the two desk
//! testbeds (the Cayley tree of F₂ and the Bass–Serre tree of ℤ/2 * ℤ/3)
//! plus the ℓ¹ product F₂ × F₂.
//!
//! Each criterion is a self-contained runner returning a one-line detail
//! string on success; the CLI `suite` subcommand and the integration
//! harness share these runners verbatim, so a green suite means the same
//! thing in both places. All randomness is ChaCha8 with fixed seeds and
//! all comparisons are exact.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::displacement::{
    displacement_at, factor_transfer, min_displacement, min_displacement_exhaustive,
    min_displacement_subdivided, quasi_center, ProductAction, ProductMode,
};
use crate::group::{
    product_set, semigroup_ball, evaluate_uword, GroupElement, GroupSpec, MarkedSubset, Perm,
    Word,
};
use crate::growth::{commutator_set, growth_rate, product_set_counts, psg_check};
use crate::loxo::{build_free_base, free_rank_verify, pingpong_pair, short_loxodromic};
use crate::ratio::Ratio;
use crate::report::{cert_to_toml, chain_csv, commutators_csv, growth_csv};
use crate::schreier::{
    chain_psg_bound, quotient_rescale, schreier_generators, FiniteQuotient, SubgroupDesignator,
    VerifyParams,
};
use crate::tree::{IsomClass, TreeAction, TreeKind};
use crate::{Error, Result};

/// Outcome of one criterion run. `detail` carries either the success
/// summary or the failing check's message.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub millis: u64,
}

pub const NUM_CRITERIA: u32 = 10;

/// Run one criterion by number (1–10). Internal check failures become a
/// failed report, not an error; only an unknown id is an error.
pub fn run_criterion(id: u32) -> Result<CriterionReport> {
    let (name, f): (&str, fn() -> Result<String>) = match id {
        1 => ("short-loxodromic extraction", c1_short_loxodromic),
        2 => ("quasi-center bound", c2_quasi_center),
        3 => ("product displacement transfer", c3_transfer),
        4 => ("translation-length identities", c4_translation),
        5 => ("free-semigroup certificates", c5_free_semigroup),
        6 => ("schreier generators", c6_schreier),
        7 => ("growth counts vs closed forms", c7_growth),
        8 => ("commutator growth", c8_commutators),
        9 => ("chaining arithmetic", c9_chain),
        10 => ("determinism", c10_determinism),
        _ => return Err(Error::Config(format!("no acceptance criterion {id}"))),
    };
    let start = Instant::now();
    let outcome = f();
    let millis = start.elapsed().as_millis() as u64;
    Ok(match outcome {
        Ok(detail) => {
            CriterionReport { id, name: name.into(), passed: true, detail, millis }
        }
        Err(e) => {
            CriterionReport { id, name: name.into(), passed: false, detail: e.to_string(), millis }
        }
    })
}

pub fn run_all() -> Result<Vec<CriterionReport>> {
    (1..=NUM_CRITERIA).map(run_criterion).collect()
}

/// The "ACCEPTANCE n: PASS/FAIL" line for a report.
pub fn format_line(r: &CriterionReport) -> String {
    format!(
        "ACCEPTANCE {}: {} {} — {} [{} ms]",
        r.id,
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.detail,
        r.millis
    )
}

// ---------------------------------------------------------------------------
// Testbeds and seeded instance generation
// ---------------------------------------------------------------------------

fn f2_spec() -> GroupSpec {
    GroupSpec::Free { labels: vec!["a".into(), "b".into()] }
}

fn z2z3_spec() -> GroupSpec {
    GroupSpec::FreeProduct { labels: vec!["s".into(), "t".into()], orders: vec![2, 3] }
}

fn testbeds() -> Result<Vec<(&'static str, TreeAction)>> {
    Ok(vec![
        ("F2/Cayley", TreeAction::new(f2_spec(), TreeKind::Cayley)?),
        ("Z2*Z3/Bass-Serre", TreeAction::new(z2z3_spec(), TreeKind::BassSerre)?),
    ])
}

fn f2xf2() -> Result<ProductAction> {
    let f2 = f2_spec();
    let g = GroupSpec::Direct { factors: vec![f2.clone(), f2.clone()] };
    ProductAction::new(
        g,
        ProductMode::Direct,
        vec![TreeAction::new(f2.clone(), TreeKind::Cayley)?, TreeAction::new(f2, TreeKind::Cayley)?],
    )
}

/// All nontrivial generator powers: the symmetric generating alphabet.
fn sym_gens(spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    let mut out = Vec::new();
    for i in 0..spec.num_generators() {
        let g = spec.generator(i)?;
        let order = match spec {
            GroupSpec::FreeProduct { orders, .. } => orders[i] as i64,
            _ => 0,
        };
        if order == 0 {
            out.push(g.clone());
            out.push(spec.inverse(&g)?);
        } else {
            for e in 1..order {
                out.push(spec.pow(&g, e)?);
            }
        }
    }
    Ok(out)
}

/// A random nonidentity reduced word of length at most `max_len`.
fn random_word(
    spec: &GroupSpec,
    alphabet: &[GroupElement],
    rng: &mut ChaCha8Rng,
    max_len: u64,
) -> Result<GroupElement> {
    loop {
        let len = rng.gen_range(1..=max_len);
        let mut w = spec.identity();
        for _ in 0..len {
            w = spec.multiply(&w, &alphabet[rng.gen_range(0..alphabet.len())])?;
        }
        if !w.is_identity() && w.len() <= max_len {
            return Ok(w);
        }
    }
}

/// A random set of distinct nonidentity words, sorted shortlex-stably by
/// the derived `Ord` so downstream iteration order is deterministic.
fn random_set(
    spec: &GroupSpec,
    alphabet: &[GroupElement],
    rng: &mut ChaCha8Rng,
    max_len: u64,
    lo: usize,
    hi: usize,
) -> Result<Vec<GroupElement>> {
    let target = rng.gen_range(lo..=hi);
    let mut set: Vec<GroupElement> = Vec::new();
    let mut guard = 0;
    while set.len() < target {
        let w = random_word(spec, alphabet, rng, max_len)?;
        if !set.contains(&w) {
            set.push(w);
        }
        guard += 1;
        if guard > 10_000 {
            return Err(Error::Inconclusive("random set generation stalled".into()));
        }
    }
    set.sort();
    Ok(set)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvariantViolation(msg()))
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: short loxodromic extraction on 200 seeded sets per testbed
// ---------------------------------------------------------------------------

fn c1_short_loxodromic() -> Result<String> {
    let mut total = 0usize;
    for (ti, (name, action)) in testbeds()?.into_iter().enumerate() {
        let spec = action.spec.clone();
        let alphabet = sym_gens(&spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(101 + ti as u64);
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 200 {
            attempts += 1;
            if attempts > 5_000 {
                return Err(Error::Inconclusive(format!(
                    "{name}: could not find 200 sets with positive displacement"
                )));
            }
            let s = random_set(&spec, &alphabet, &mut rng, 4, 2, 6)?;
            let (_, lam4) = min_displacement_subdivided(&action, &s)?;
            if lam4 == 0 {
                continue;
            }
            let cert = short_loxodromic(&action, &s)?;
            // b lies in S ∪ S·S
            let mut sq: HashSet<GroupElement> = s.iter().cloned().collect();
            for x in &s {
                for y in &s {
                    sq.insert(spec.multiply(x, y)?);
                }
            }
            check(sq.contains(&cert.b), || format!("{name}: b outside S^(<=2)"))?;
            // independently loxodromic with positive translation length
            let tr = action.translation(&cert.b)?;
            check(
                tr.tau > 0 && matches!(tr.class, IsomClass::Loxodromic { .. }),
                || format!("{name}: extracted b is not loxodromic"),
            )?;
            // displacement within the additive 10 (40 in quadrupled units)
            check(cert.lambda4 == lam4, || format!("{name}: certificate lambda mismatch"))?;
            let bo = action.act_point(&cert.b, &cert.basepoint)?;
            let d4 = action.dist4(&cert.basepoint, &bo)?;
            check(d4 == cert.dist4, || format!("{name}: certificate distance mismatch"))?;
            check(d4 + 40 >= lam4, || {
                format!("{name}: d(o,bo) = {d4} below lambda - 10 = {} (quadrupled)", lam4)
            })?;
            accepted += 1;
        }
        total += accepted;
    }
    Ok(format!("{total} seeded sets, b in S^(<=2) loxodromic with d(o,bo) >= lambda - 10"))
}

// ---------------------------------------------------------------------------
// Criterion 2: quasi-center bound vs brute force over ∪[o, so]
// ---------------------------------------------------------------------------

fn c2_quasi_center() -> Result<String> {
    let mut total = 0usize;
    for (ti, (name, action)) in testbeds()?.into_iter().enumerate() {
        let spec = action.spec.clone();
        let alphabet = sym_gens(&spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(202 + ti as u64);
        for _ in 0..200 {
            let s = random_set(&spec, &alphabet, &mut rng, 4, 2, 6)?;
            let o = action.base();
            // the construction itself asserts lambda(z) <= 6 lambda(x) + 3
            let qc = quasi_center(&action, &s, &o, &o)?;
            let recomputed = displacement_at(&action, &s, &qc.z)?.lambda;
            check(recomputed == qc.lambda_at_z, || {
                format!("{name}: lambda at z disagrees with recomputation")
            })?;
            // brute-force minimum over the union of geodesics [o, so]
            let mut cands: Vec<_> = vec![o.clone()];
            for g in &s {
                cands.extend(action.geodesic(&o, &action.act(g, &o)?)?);
            }
            let mut seen = HashSet::new();
            cands.retain(|v| seen.insert(v.clone()));
            let mut brute = u64::MAX;
            let mut argmin = o.clone();
            for v in &cands {
                let lam = displacement_at(&action, &s, v)?.lambda;
                if lam < brute {
                    brute = lam;
                    argmin = v.clone();
                }
            }
            check(qc.lambda_at_z <= 6 * brute + 3, || {
                format!(
                    "{name}: lambda(z) = {} exceeds 6*{brute}+3 from the brute minimizer",
                    qc.lambda_at_z
                )
            })?;
            // re-run anchored at the brute minimizer; internal assertion
            // checks the bound there too
            let qc2 = quasi_center(&action, &s, &o, &argmin)?;
            check(qc2.lambda_at_x == brute, || {
                format!("{name}: brute minimum disagrees with displacement at its witness")
            })?;
            // the global descent minimum can only be lower
            check(min_displacement(&action, &s)?.lambda <= brute, || {
                format!("{name}: descent minimum above brute-force minimum")
            })?;
            total += 1;
        }
    }
    Ok(format!("{total} instances, lambda(z) <= 6 lambda(x) + 3 against brute force"))
}

// ---------------------------------------------------------------------------
// Criterion 3: displacement transfer on F₂ × F₂ at M = 1
// ---------------------------------------------------------------------------

fn c3_transfer() -> Result<String> {
    let p = f2xf2()?;
    let spec = p.group.clone();
    let f2 = f2_spec();
    let factor_action = TreeAction::new(f2.clone(), TreeKind::Cayley)?;
    let alphabet = sym_gens(&f2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 50 {
        attempts += 1;
        if attempts > 2_000 {
            return Err(Error::Inconclusive("could not find 50 nondegenerate sets".into()));
        }
        // tuples of two words of length <= 3, not both trivial
        let target = rng.gen_range(8..=10);
        let mut s: Vec<GroupElement> = Vec::new();
        while s.len() < target {
            let mut parts = Vec::with_capacity(2);
            for _ in 0..2 {
                let w = if rng.gen_range(0..4) == 0 {
                    f2.identity()
                } else {
                    random_word(&f2, &alphabet, &mut rng, 3)?
                };
                parts.push(w.word);
            }
            let e = GroupElement { word: Word::Tuple(parts) };
            if !e.is_identity() && !s.contains(&e) {
                s.push(e);
            }
        }
        s.sort();
        // no factor-kernel degeneracy: each factor must see an element
        // translating by at least 2, which already forces the transfer
        let mut solid = [false, false];
        for e in &s {
            for (i, ok) in solid.iter_mut().enumerate() {
                let c = p.factor_element(e, i)?;
                if factor_action.translation(&c)?.tau >= 2 {
                    *ok = true;
                }
            }
        }
        if !(solid[0] && solid[1]) {
            continue;
        }
        let tr = factor_transfer(&p, &s, 1)?;
        let Some(fac) = tr.factor else {
            return Err(Error::InvariantViolation(
                "transfer failed at M = 1 on a nondegenerate set".into(),
            ));
        };
        check(tr.lambda_per_factor[fac] > 1, || "transfer factor not above M".into())?;
        // factor values against the exhaustive-ball oracle
        for (i, &lam) in tr.lambda_per_factor.iter().enumerate() {
            let proj: Vec<GroupElement> =
                s.iter().map(|e| p.factor_element(e, i)).collect::<Result<_>>()?;
            let ex = min_displacement_exhaustive(&factor_action, &proj, 5_000_000)?;
            check(ex.lambda == lam, || {
                format!("factor {i}: descent {lam} vs exhaustive {}", ex.lambda)
            })?;
        }
        let _ = spec; // tuples validated on construction paths above
        accepted += 1;
    }
    Ok(format!("{accepted} sets on F2 x F2, transfer at M = 1 with exhaustive factor oracles"))
}

// ---------------------------------------------------------------------------
// Criterion 4: translation-length identities over whole balls
// ---------------------------------------------------------------------------

fn c4_translation() -> Result<String> {
    let mut total = 0usize;
    for (ti, (name, action)) in testbeds()?.into_iter().enumerate() {
        let spec = action.spec.clone();
        let alphabet = sym_gens(&spec)?;
        let sym = MarkedSubset::new(spec.clone(), alphabet.clone())?;
        let ball = semigroup_ball(&sym, 6, 10_000_000)?;
        for g in &ball {
            let tau = action.translation(g)?.tau;
            // tau(g) = lambda(g) exactly on a tree
            let md = min_displacement(&action, std::slice::from_ref(g))?;
            check(md.lambda == tau, || {
                format!("{name}: tau = {tau} but min displacement = {}", md.lambda)
            })?;
            for n in 2..=4i64 {
                let gn = spec.pow(g, n)?;
                check(action.translation(&gn)?.tau == n as u64 * tau, || {
                    format!("{name}: tau(g^{n}) != {n} tau(g)")
                })?;
            }
            total += 1;
        }
        // conjugacy invariance on 100 seeded pairs
        let mut rng = ChaCha8Rng::seed_from_u64(404 + ti as u64);
        for _ in 0..100 {
            let g = &ball[rng.gen_range(0..ball.len())];
            let h = random_word(&spec, &alphabet, &mut rng, 4)?;
            let conj = spec.conjugate(&h, g)?;
            check(action.translation(&conj)?.tau == action.translation(g)?.tau, || {
                format!("{name}: tau not conjugacy invariant")
            })?;
        }
    }
    Ok(format!(
        "{total} ball elements: tau = lambda, tau(g^n) = n tau(g), conjugacy invariant"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 5: ping-pong pairs and the size-4 free base in F₂
// ---------------------------------------------------------------------------

fn c5_free_semigroup() -> Result<String> {
    // (a, b a b^{-1}) on the Cayley tree of F₂
    let f2 = f2_spec();
    let fa = TreeAction::new(f2.clone(), TreeKind::Cayley)?;
    let a = f2.generator(0)?;
    let b = f2.generator(1)?;
    let bab = f2.conjugate(&b, &a)?;
    let pp1 = pingpong_pair(&fa, &a, &bab, 6)?;
    // (st, ts) on the Bass–Serre tree of ℤ/2 * ℤ/3
    let z = z2z3_spec();
    let za = TreeAction::new(z.clone(), TreeKind::BassSerre)?;
    let st = z.parse_word("s t")?;
    let ts = z.parse_word("t s")?;
    let pp2 = pingpong_pair(&za, &st, &ts, 6)?;
    // free base of size 4 out of the symmetric generators
    let u = MarkedSubset::new(f2.clone(), sym_gens(&f2)?)?;
    let cert = build_free_base(&fa, &u, 6, 4, 64)?;
    check(cert.t.len() == 4, || format!("|T| = {} instead of 4", cert.t.len()))?;
    check(cert.verified, || "free base not verified at its own depth".into())?;
    let rr = free_rank_verify(&f2, &cert.t, 6)?;
    check(rr.free && rr.collision.is_none(), || "free rank re-verification failed".into())?;
    // |T^n| = 4^n — the free semigroup has no positive relations
    let tset = MarkedSubset::new(f2, cert.t.clone())?;
    for n in 1..=6u32 {
        let size = product_set(&tset, n, 10_000_000)?.len();
        check(size == 4usize.pow(n), || format!("|T^{n}| = {size} != 4^{n}"))?;
    }
    Ok(format!(
        "ping-pong pairs at depth 6 ({} + {} words), |T| = 4 free with |T^n| = 4^n up to n = 6",
        pp1.words_checked, pp2.words_checked
    ))
}

// ---------------------------------------------------------------------------
// Criterion 6: Schreier generators for 20 seeded quotients of F₂
// ---------------------------------------------------------------------------

fn random_perm(degree: u16, rng: &mut ChaCha8Rng) -> Perm {
    let mut v: Vec<u16> = (0..degree).collect();
    for i in (1..v.len()).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
    Perm(v)
}

fn c6_schreier() -> Result<String> {
    let spec = f2_spec();
    let u = MarkedSubset::new(spec.clone(), sym_gens(&spec)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut normals = 0usize;
    let mut generals = 0usize;
    for k in 0..20u64 {
        let degree = rng.gen_range(2..=4u16);
        let (images, designator) = if k % 2 == 0 {
            // normal case: cyclic image, so the kernel has index = degree
            let mut c: Vec<u16> = (1..degree).collect();
            c.push(0);
            let c = Perm(c);
            let e = rng.gen_range(0..degree as u64);
            (vec![c.clone(), c.pow(e)], SubgroupDesignator::Kernel)
        } else {
            let point = rng.gen_range(0..degree);
            (
                vec![random_perm(degree, &mut rng), random_perm(degree, &mut rng)],
                SubgroupDesignator::Stabilizer { point },
            )
        };
        let q = FiniteQuotient::new(spec.clone(), degree, images)?;
        let params = VerifyParams { exhaustive_depth: 5, samples: 100, seed: 600 + k, cap: 2_000_000 };
        let res = schreier_generators(&u, &q, &designator, &params)?;
        check(res.index <= 4, || format!("index {} above 4", res.index))?;
        let d = res.index as u64;
        let (bound, denom) = match designator {
            SubgroupDesignator::Kernel => (d * d - d + 1, d),
            SubgroupDesignator::Stabilizer { .. } => {
                let df: u64 = (1..=d).product();
                (df * df - df + 1, df)
            }
        };
        check(res.exponent_bound == bound, || {
            format!("exponent bound {} != {bound}", res.exponent_bound)
        })?;
        // W ⊆ U^{≤bound}, |W| ≥ |U|/d (resp. |U|/d!), every entry in H
        check(res.w.len() as u64 * denom >= u.len() as u64, || {
            format!("|W| = {} below |U|/{denom}", res.w.len())
        })?;
        for entry in &res.w {
            check(entry.uword.len() as u64 <= bound, || "witness above exponent bound".into())?;
            check(evaluate_uword(&u, &entry.uword)? == entry.element, || {
                "witness word does not multiply out".into()
            })?;
            check(q.in_subgroup(&designator, &entry.element)?, || {
                "W entry outside the subgroup".into()
            })?;
        }
        check(res.witness_max_len as u64 <= bound, || "witness length above bound".into())?;
        // bounded generation actually exercised on both regimes
        check(res.generation.exhaustive_checked > 0, || "no exhaustive members checked".into())?;
        // roughly samples/index of the random words land in the subgroup
        check(res.generation.sampled_checked > 0, || "sampled regime never hit H".into())?;
        match designator {
            SubgroupDesignator::Kernel => normals += 1,
            _ => generals += 1,
        }
    }
    Ok(format!(
        "{normals} normal + {generals} stabilizer quotients, W within exponent bounds and generating"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 7: growth counts against closed forms; rate estimate near 3
// ---------------------------------------------------------------------------

fn c7_growth() -> Result<String> {
    let spec = f2_spec();
    let a = spec.generator(0)?;
    let b = spec.generator(1)?;
    // positive words: |{a,b}^n| = 2^n
    let pos = MarkedSubset::new(spec.clone(), vec![a, b])?;
    let series = product_set_counts(&pos, 14, 10_000_000)?;
    check(!series.truncated, || "positive series truncated".into())?;
    for (i, &c) in series.counts.iter().enumerate() {
        let n = (i + 1) as u32;
        check(c == 1u64 << n, || format!("|U^{n}| = {c} != 2^{n}"))?;
    }
    // symmetric ball: |U^{<=n}| = 2 * 3^n - 1
    let sym = MarkedSubset::new(spec.clone(), sym_gens(&spec)?)?;
    let s2 = product_set_counts(&sym, 12, 10_000_000)?;
    check(!s2.truncated, || "symmetric series truncated".into())?;
    for (i, &c) in s2.cumulative.iter().enumerate() {
        let n = (i + 1) as u32;
        check(c == 2 * 3u64.pow(n) - 1, || format!("|U^(<={n})| = {c} != 2*3^{n}-1"))?;
    }
    // rate estimates: roots decrease toward the exact omega = 3 from above;
    // the ratio estimator is the one that lands within 0.05 by n = 12
    let rates = growth_rate(&s2)?;
    for w in rates.roots.windows(2) {
        check(w[1] < w[0], || "root estimates not strictly decreasing".into())?;
    }
    check(rates.roots.iter().all(|&r| r > 3.0), || "root estimate below omega".into())?;
    let ratio = *rates.ratios.last().unwrap();
    check((ratio - 3.0).abs() < 0.05, || {
        format!("ratio estimate {ratio} not within 0.05 of 3 at n = 12")
    })?;
    Ok(format!(
        "2^n to n = 14, 2*3^n - 1 to n = 12, omega estimate {:.6} (root envelope {:.3})",
        ratio,
        rates.envelope.last().unwrap()
    ))
}

// ---------------------------------------------------------------------------
// Criterion 8: commutator growth |C(S^{<=n}, S^{<=n})| >= n/2
// ---------------------------------------------------------------------------

fn c8_commutators() -> Result<String> {
    let spec = f2_spec();
    let s = MarkedSubset::new(spec, sym_gens(&f2_spec())?)?;
    let c = Ratio::new(1, 2)?;
    let mut last = 0u64;
    let mut sizes = Vec::new();
    for n in 1..=6u32 {
        let rep = commutator_set(&s, n, c, 10_000_000, 10)?;
        check(rep.satisfied, || format!("|C| = {} below {n}/2", rep.size))?;
        check(2 * rep.size >= n as u64, || "verdict flag inconsistent".into())?;
        check(rep.size >= last, || "commutator counts decreased".into())?;
        last = rep.size;
        sizes.push(rep.size);
    }
    Ok(format!("|C(S^(<=n), S^(<=n))| = {sizes:?} for n = 1..6, all >= n/2"))
}

// ---------------------------------------------------------------------------
// Criterion 9: the finite-index and quotient chaining arithmetic
// ---------------------------------------------------------------------------

fn c9_chain() -> Result<String> {
    let spec = f2_spec();
    let sym = MarkedSubset::new(spec.clone(), sym_gens(&spec)?)?;
    let series = product_set_counts(&sym, 10, 10_000_000)?;
    let alpha = Ratio::new(1, 8)?;
    let beta = Ratio::new(1, 4)?;
    // the measured series satisfies the plain PSG inequality ...
    let fit = psg_check(&series, alpha, beta)?;
    check(fit.first_violation.is_none(), || "base PSG inequality violated".into())?;
    // ... and the index-2 chained bound, at every n <= 10
    let v = chain_psg_bound(&series.counts, sym.len() as u64, 2, alpha, beta)?;
    check(v.r == 3, || format!("r = {} != 3 for d = 2", v.r))?;
    check(v.per_n.len() == 10 && v.satisfied(), || {
        format!("chained bound violated at n = {:?}", v.first_violation)
    })?;
    // floating-point cross-check of every exact verdict, away from ties
    let r = v.r as f64;
    let bq = beta.as_f64();
    for (i, &ok) in v.per_n.iter().enumerate() {
        let n = (i + 1) as f64;
        let lhs = (series.counts[i] as f64).ln() + n * 2f64.ln();
        let rhs = (bq / r) * n * (alpha.as_f64() * sym.len() as f64 / 2.0).ln();
        if (lhs - rhs).abs() > 1e-6 {
            check(ok == (lhs >= rhs), || format!("exact/float verdict mismatch at n = {}", i + 1))?;
        }
    }
    // quotient rescaling alpha -> alpha / |ker|, still satisfied (weaker)
    let resc = quotient_rescale(alpha, 2)?;
    check(resc == Ratio::new(1, 16)?, || "rescale 1/8 by kernel order 2 != 1/16".into())?;
    let v2 = chain_psg_bound(&series.counts, sym.len() as u64, 2, resc, beta)?;
    check(v2.satisfied(), || "rescaled (weaker) bound violated".into())?;
    // violation branch: a flat series with |U| large enough that the
    // chained base alpha|U|/d! beats the 2^{r/beta} slack must fail at n = 1
    let flat = chain_psg_bound(&[1; 10], 1 << 14, 2, Ratio::new(1, 1)?, beta)?;
    check(flat.first_violation == Some(1), || "flat series wrongly satisfied the bound".into())?;
    Ok("chained bound holds at all n <= 10 (d = 2, r = 3, alpha 1/8 -> 1/16 under kernel 2)".to_string())
}

// ---------------------------------------------------------------------------
// Criterion 10: byte-identical artifacts across re-runs and thread counts
// ---------------------------------------------------------------------------

fn c10_artifacts() -> Result<Vec<u8>> {
    let spec = f2_spec();
    let sym = MarkedSubset::new(spec.clone(), sym_gens(&spec)?)?;
    let series = product_set_counts(&sym, 8, 10_000_000)?;
    let fit = psg_check(&series, Ratio::new(1, 8)?, Ratio::new(1, 4)?)?;
    let rates = growth_rate(&series)?;
    let mut out = growth_csv(&series, Some(&fit), &rates)?.into_bytes();
    let comms: Vec<_> = (1..=3u32)
        .map(|n| commutator_set(&sym, n, Ratio::new(1, 2)?, 10_000_000, 10))
        .collect::<Result<_>>()?;
    out.extend(commutators_csv(&spec, &comms)?.into_bytes());
    let v = chain_psg_bound(&series.counts, sym.len() as u64, 2, Ratio::new(1, 8)?, Ratio::new(1, 4)?)?;
    out.extend(chain_csv(&series.counts, &v)?.into_bytes());
    // a full certificate artifact as well
    let fa = TreeAction::new(spec.clone(), TreeKind::Cayley)?;
    let u = MarkedSubset::new(spec, sym_gens(&f2_spec())?)?;
    let cert = build_free_base(&fa, &u, 5, 4, 64)?;
    out.extend(cert_to_toml(&cert)?.into_bytes());
    Ok(out)
}

fn c10_determinism() -> Result<String> {
    let reference = c10_artifacts()?;
    // re-run in-process
    check(c10_artifacts()? == reference, || "re-run artifacts differ".into())?;
    // re-run under dedicated pools of 1, 2 and 4 threads
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let bytes = pool.install(c10_artifacts)?;
        check(bytes == reference, || format!("artifacts differ under {threads} thread(s)"))?;
    }
    // seeded instance streams are reproducible too
    let spec = f2_spec();
    let alphabet = sym_gens(&spec)?;
    let mut r1 = ChaCha8Rng::seed_from_u64(1010);
    let mut r2 = ChaCha8Rng::seed_from_u64(1010);
    for _ in 0..5 {
        let s1 = random_set(&spec, &alphabet, &mut r1, 4, 2, 6)?;
        let s2 = random_set(&spec, &alphabet, &mut r2, 4, 2, 6)?;
        check(s1 == s2, || "seeded instance streams diverged".into())?;
    }
    Ok(format!(
        "{} artifact bytes identical across re-runs and 1/2/4-thread pools",
        reference.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_rejected() {
        assert!(run_criterion(0).is_err());
        assert!(run_criterion(11).is_err());
    }

    #[test]
    fn line_format() {
        let r = CriterionReport {
            id: 3,
            name: "x".into(),
            passed: false,
            detail: "boom".into(),
            millis: 7,
        };
        let line = format_line(&r);
        assert!(line.starts_with("ACCEPTANCE 3: FAIL"));
        assert!(line.contains("boom"));
    }

    #[test]
    fn failures_reported_not_raised() {
        // criterion 9 on its own is fast; sanity-run one real criterion here
        let r = run_criterion(9).unwrap();
        assert!(r.passed, "{}", r.detail);
    }
}
