//! Textbook single-hypothesis sequential procedures, coded directly.
//! They share no code with the engines and exist to cross-check them.

use std::collections::BTreeSet;

/// Fallback procedure: hypothesis `i` is tested at its own level plus the
/// level of hypothesis `i - 1` if that one was rejected. A level of zero
/// rejects nothing.
pub fn fallback_oracle(p: &[f64], levels: &[f64]) -> BTreeSet<usize> {
    assert_eq!(p.len(), levels.len(), "one level per hypothesis");
    let mut out = BTreeSet::new();
    let mut carried = 0.0;
    for (i, (&pi, &own)) in p.iter().zip(levels).enumerate() {
        let level = own + carried;
        if level > 0.0 && pi <= level {
            out.insert(i);
            carried = level;
        } else {
            carried = 0.0;
        }
    }
    out
}

/// Fixed-sequence procedure: test in order at the full level and stop at
/// the first acceptance.
pub fn fixed_sequence_oracle(p: &[f64], alpha: f64) -> BTreeSet<usize> {
    p.iter()
        .take_while(|&&pi| pi <= alpha)
        .enumerate()
        .map(|(i, _)| i)
        .collect()
}
