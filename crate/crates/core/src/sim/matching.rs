//! Alignment of received against transmitted zero-crossings.

use crate::channel_params::ZeroCrossingSeq;

/// Outcome of aligning a received crossing sequence to the transmitted one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    /// Received crossings beyond the first assignee of each tx crossing.
    pub n_insertions: usize,
    /// Maximal runs of consecutive surplus received crossings.
    pub insertion_events: usize,
    /// Consecutive up/down tx pairs with no assignee.
    pub n_deletions: usize,
    /// Received minus transmitted time for the closest assignee of each
    /// matched tx crossing.
    pub shift_samples: Vec<f64>,
    /// Received symbols per transmitted symbol; 0 marks a symbol whose
    /// closing crossing was lost.
    pub per_symbol_counts: Vec<usize>,
}

/// Index of the same-polarity tx crossing closest to `t`; ties go to the
/// earlier one.
fn nearest(times: &[f64], t: f64) -> Option<usize> {
    if times.is_empty() {
        return None;
    }
    let pos = times.partition_point(|&x| x < t);
    if pos == 0 {
        return Some(0);
    }
    if pos == times.len() {
        return Some(pos - 1);
    }
    if t - times[pos - 1] <= times[pos] - t {
        Some(pos - 1)
    } else {
        Some(pos)
    }
}

/// Matches every received upcrossing to the closest transmitted upcrossing
/// and likewise for downcrossings.
pub fn match_crossings(tx: &ZeroCrossingSeq, rx: &ZeroCrossingSeq) -> MatchReport {
    let n_tx = tx.len();
    // tx indices split by polarity
    let mut tx_idx: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for i in 0..n_tx {
        tx_idx[tx.is_rising(i) as usize].push(i);
    }
    let tx_times: [Vec<f64>; 2] = [0, 1].map(|p| tx_idx[p].iter().map(|&i| tx.times[i]).collect());

    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n_tx];
    for j in 0..rx.len() {
        let p = rx.is_rising(j) as usize;
        if let Some(m) = nearest(&tx_times[p], rx.times[j]) {
            assigned[tx_idx[p][m]].push(j);
        }
    }

    let mut primary = vec![false; rx.len()];
    let mut shift_samples = Vec::new();
    let mut n_insertions = 0;
    for (i, list) in assigned.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        n_insertions += list.len() - 1;
        let best = *list
            .iter()
            .min_by(|&&a, &&b| {
                let da = (rx.times[a] - tx.times[i]).abs();
                let db = (rx.times[b] - tx.times[i]).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .unwrap();
        primary[best] = true;
        shift_samples.push(rx.times[best] - tx.times[i]);
    }

    let mut insertion_events = 0;
    let mut in_run = false;
    for &is_primary in &primary {
        if !is_primary && !in_run {
            insertion_events += 1;
        }
        in_run = !is_primary;
    }

    let mut n_deletions = 0;
    let mut i = 0;
    while i + 1 < n_tx {
        if assigned[i].is_empty() && assigned[i + 1].is_empty() {
            n_deletions += 1;
            i += 2;
        } else {
            i += 1;
        }
    }

    // symbol k spans (T_{k-1}, T_k]; surplus crossings inside it add symbols
    let mut per_symbol_counts = Vec::with_capacity(n_tx);
    let mut cursor = 0;
    let mut start = tx.t0;
    for (&end, list) in tx.times.iter().zip(&assigned) {
        let mut surplus = 0;
        while cursor < rx.len() && rx.times[cursor] <= end {
            if rx.times[cursor] > start && !primary[cursor] {
                surplus += 1;
            }
            cursor += 1;
        }
        per_symbol_counts.push(if list.is_empty() { 0 } else { 1 + surplus });
        start = end;
    }

    MatchReport { n_insertions, insertion_events, n_deletions, shift_samples, per_symbol_counts }
}
