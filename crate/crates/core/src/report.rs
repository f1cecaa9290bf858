//! Artifact emission: RFC-4180 CSV tables and structured-text (TOML)
//! certificate records. Everything written here is deterministic for a
//! fixed config and seed — no timestamps, no thread-dependent ordering.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::group::GroupSpec;
use crate::growth::{CommutatorReport, GrowthFit, GrowthRates, GrowthSeries};
use crate::schreier::ChainVerdict;
use crate::{Error, Result};

/// Serialize a certificate to TOML.
pub fn cert_to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}

/// Read a certificate back; used by the `--verify` pass.
pub fn cert_from_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv utf8: {e}")))
}

/// Growth table: `n, count_exact, cumulative, bound_value, verdict`.
/// `bound_value` is the display form of `(α|U|)^{βn}` when a fit was
/// requested (the verdict itself comes from the exact integer comparison).
pub fn growth_csv(
    series: &GrowthSeries,
    fit: Option<&GrowthFit>,
    rates: &GrowthRates,
) -> Result<String> {
    let mut w = csv_writer();
    w.write_record([
        "n",
        "count_exact",
        "cumulative",
        "bound_value",
        "verdict",
        "root_estimate",
        "envelope",
        "ratio_estimate",
    ])
    .map_err(|e| Error::Config(e.to_string()))?;
    for i in 0..series.counts.len() {
        let n = i + 1;
        let (bound, verdict) = match fit {
            Some(f) => {
                let base = f.alpha.as_f64() * series.u_size as f64;
                let b = base.powf(f.beta.as_f64() * n as f64);
                (format!("{b:.6}"), if f.per_n[i] { "ok" } else { "violated" }.to_string())
            }
            None => (String::new(), String::new()),
        };
        w.write_record([
            n.to_string(),
            series.counts[i].to_string(),
            series.cumulative[i].to_string(),
            bound,
            verdict,
            format!("{:.6}", rates.roots[i]),
            format!("{:.6}", rates.envelope[i]),
            format!("{:.6}", rates.ratios[i]),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    finish(w)
}

/// Commutator table: `n, ball_size, size, bound_value, verdict`.
pub fn commutators_csv(spec: &GroupSpec, reports: &[CommutatorReport]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["n", "ball_size", "size", "bound_value", "verdict", "witnesses"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for r in reports {
        let witnesses: Vec<String> =
            r.witnesses.iter().map(|e| spec.format_word(e)).collect();
        w.write_record([
            r.n.to_string(),
            r.ball_size.to_string(),
            r.size.to_string(),
            format!("{} * {}", r.c, r.n),
            if r.satisfied { "ok" } else { "violated" }.to_string(),
            witnesses.join(" ; "),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    finish(w)
}

/// Chained-bound table: `n, count_exact, verdict`.
pub fn chain_csv(counts: &[u64], verdict: &ChainVerdict) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["n", "count_exact", "verdict"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for (i, &c) in counts.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            c.to_string(),
            if verdict.per_n[i] { "ok" } else { "violated" }.to_string(),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::MarkedSubset;
    use crate::growth::{growth_rate, product_set_counts, psg_check};
    use crate::ratio::Ratio;

    #[test]
    fn growth_csv_shape() {
        let g = GroupSpec::Free { labels: vec!["a".into(), "b".into()] };
        let u = MarkedSubset::new(
            g.clone(),
            vec![g.parse_word("a").unwrap(), g.parse_word("b").unwrap()],
        )
        .unwrap();
        let s = product_set_counts(&u, 4, 100_000).unwrap();
        let fit = psg_check(&s, Ratio::new(1, 1).unwrap(), Ratio::new(1, 1).unwrap()).unwrap();
        let rates = growth_rate(&s).unwrap();
        let text = growth_csv(&s, Some(&fit), &rates).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("n,count_exact,cumulative"));
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(2).unwrap().starts_with("2,4,7,4.000000,ok"));
        // emission is deterministic
        assert_eq!(text, growth_csv(&s, Some(&fit), &rates).unwrap());
    }

    #[test]
    fn cert_round_trip() {
        let g = GroupSpec::Free { labels: vec!["a".into(), "b".into()] };
        let e = g.parse_word("a b^-1").unwrap();
        let text = cert_to_toml(&e).unwrap();
        let back: crate::group::GroupElement = cert_from_toml(&text).unwrap();
        assert_eq!(back, e);
    }
}
