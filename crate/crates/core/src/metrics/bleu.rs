use std::collections::HashMap;

use crate::text::words;

pub const BLEU_EPSILON: f64 = 1e-9;

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    for g in tokens.windows(n) {
        *out.entry(g).or_insert(0) += 1;
    }
    out
}

/// Sentence BLEU over unigrams and bigrams with brevity penalty. Zero match
/// counts are replaced by ε; candidates of one token use unigrams only.
pub fn bleu2(candidate: &str, reference: &str) -> f64 {
    let cand = words(candidate);
    let refr = words(reference);
    if cand.is_empty() {
        return 0.0;
    }
    let order = cand.len().min(2);
    let mut log_sum = 0.0;
    for n in 1..=order {
        let c = ngrams(&cand, n);
        let r = ngrams(&refr, n);
        let matched: usize = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
        let total = cand.len() + 1 - n;
        let m = if matched == 0 { BLEU_EPSILON } else { matched as f64 };
        log_sum += (m / total as f64).ln();
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / order as f64).exp()
}
