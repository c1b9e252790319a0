//! Ranking evaluation: seeded negative sampling, pessimistic ranks, MRR,
//! Hits@K, and AP/AUC for the one-negative binary mode.
//!
//! Scoring an event at time t only ever sees history strictly before t
//! (the neighbor lookup enforces it), so evaluation cannot leak the future.

use rand::Rng;

use crate::graph::TemporalGraph;
use crate::numeric::Tape;
use crate::rng::substream_rng;

use super::{HarnessError, HarnessResult, LinkModel};

/// Sorted distinct destination ids observed in the graph: the candidate set
/// for negative sampling.
pub fn destination_universe(graph: &TemporalGraph) -> Vec<usize> {
    let mut dsts: Vec<usize> = graph.events().iter().map(|e| e.dst).collect();
    dsts.sort_unstable();
    dsts.dedup();
    dsts
}

/// Uniform sample without replacement from `universe`, excluding the true
/// positive. Deterministic for a fixed generator state.
pub fn sample_negatives(
    universe: &[usize],
    positive: usize,
    num_neg: usize,
    rng: &mut impl Rng,
) -> HarnessResult<Vec<usize>> {
    let mut pool: Vec<usize> = universe.iter().cloned().filter(|&d| d != positive).collect();
    if pool.len() < num_neg {
        return Err(HarnessError::Domain(format!(
            "cannot sample {num_neg} negatives from {} candidates",
            pool.len()
        )));
    }
    for i in 0..num_neg {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(num_neg);
    Ok(pool)
}

/// Pessimistic rank of the positive among `1 + negatives` candidates: ties
/// count against the positive, so a constant scorer lands at the bottom.
pub fn rank_pessimistic(pos_score: f64, neg_scores: &[f64]) -> usize {
    1 + neg_scores.iter().filter(|&&s| s >= pos_score).count()
}

/// Per-query ranks and their aggregates.
#[derive(Debug, Clone)]
pub struct RankingResult {
    pub ranks: Vec<usize>,
    pub mrr: f64,
    /// `(k, fraction of queries with rank <= k)`
    pub hits: Vec<(usize, f64)>,
    /// Average precision, only for the one-negative binary mode.
    pub ap: Option<f64>,
    /// Area under the ROC curve, only for the one-negative binary mode.
    pub auc: Option<f64>,
    pub num_negatives: usize,
}

impl RankingResult {
    /// Aggregate scored queries: each entry is the positive's score and the
    /// negatives' scores.
    pub fn from_scored_queries(scored: &[(f64, Vec<f64>)], ks: &[usize]) -> RankingResult {
        let num_negatives = scored.first().map(|(_, n)| n.len()).unwrap_or(0);
        let ranks: Vec<usize> = scored
            .iter()
            .map(|(pos, negs)| rank_pessimistic(*pos, negs))
            .collect();
        let n = ranks.len().max(1) as f64;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        let hits = ks
            .iter()
            .map(|&k| {
                let frac = ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
                (k, frac)
            })
            .collect();
        let (ap, auc) = if num_negatives == 1 && !scored.is_empty() {
            let labeled: Vec<(f64, bool)> = scored
                .iter()
                .flat_map(|(pos, negs)| [(*pos, true), (negs[0], false)])
                .collect();
            (Some(average_precision(&labeled)), Some(roc_auc(&labeled)))
        } else {
            (None, None)
        };
        RankingResult {
            ranks,
            mrr,
            hits,
            ap,
            auc,
            num_negatives,
        }
    }
}

/// Binary average precision over (score, is_positive) pairs. At equal
/// scores negatives sort first, consistent with pessimistic ranking.
fn average_precision(labeled: &[(f64, bool)]) -> f64 {
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.sort_by(|&a, &b| {
        labeled[b].0.partial_cmp(&labeled[a].0).unwrap().then_with(|| {
            // negatives (false) ahead of positives at the same score
            labeled[a].1.cmp(&labeled[b].1)
        })
    });
    let mut hits = 0usize;
    let mut ap_sum = 0.0;
    for (i, &idx) in order.iter().enumerate() {
        if labeled[idx].1 {
            hits += 1;
            ap_sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        ap_sum / hits as f64
    }
}

/// Mann-Whitney AUC with mid-ranks for ties.
fn roc_auc(labeled: &[(f64, bool)]) -> f64 {
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.sort_by(|&a, &b| labeled[a].0.partial_cmp(&labeled[b].0).unwrap());
    let n = labeled.len();
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && labeled[order[j]].0 == labeled[order[i]].0 {
            j += 1;
        }
        // ranks are 1-based; ties share the mid-rank of their block
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labeled[idx].1 {
                rank_sum_pos += mid_rank;
            }
        }
        i = j;
    }
    let n_pos = labeled.iter().filter(|(_, l)| *l).count() as f64;
    let n_neg = n as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return 0.5;
    }
    (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

/// Rank every event in `range` (indices into the graph's event list):
/// the positive destination against `num_neg` sampled negatives.
pub fn evaluate_model(
    model: &LinkModel,
    graph: &TemporalGraph,
    range: std::ops::Range<usize>,
    num_neg: usize,
    ks: &[usize],
    neg_seed: u64,
) -> HarnessResult<RankingResult> {
    let universe = destination_universe(graph);
    let mut rng = substream_rng(neg_seed, "negatives");
    let mut tape = Tape::new();
    let mut scored = Vec::with_capacity(range.len());
    for idx in range {
        let ev = &graph.events()[idx];
        let negs = sample_negatives(&universe, ev.dst, num_neg, &mut rng)?;
        let mut candidates = Vec::with_capacity(1 + negs.len());
        candidates.push(ev.dst);
        candidates.extend_from_slice(&negs);
        let scores = model.score_candidates(&mut tape, graph, ev.src, ev.time, &candidates)?;
        scored.push((scores[0], scores[1..].to_vec()));
    }
    Ok(RankingResult::from_scored_queries(&scored, ks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_other_destinations_when_exhaustive() {
        let universe = vec![10, 11, 12, 13];
        let mut rng = substream_rng(1, "negatives-test");
        let negs = sample_negatives(&universe, 11, 3, &mut rng).unwrap();
        let mut sorted = negs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![10, 12, 13]);
    }

    #[test]
    fn positive_never_sampled() {
        let universe: Vec<usize> = (0..20).collect();
        let mut rng = substream_rng(2, "negatives-test");
        for _ in 0..10_000 {
            let negs = sample_negatives(&universe, 7, 3, &mut rng).unwrap();
            assert!(!negs.contains(&7));
        }
    }

    #[test]
    fn fixed_seed_fixed_set() {
        let universe: Vec<usize> = (0..50).collect();
        let a = sample_negatives(&universe, 3, 5, &mut substream_rng(9, "negs")).unwrap();
        let b = sample_negatives(&universe, 3, 5, &mut substream_rng(9, "negs")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_candidates_is_an_error() {
        let universe = vec![1, 2];
        let mut rng = substream_rng(3, "negatives-test");
        assert!(sample_negatives(&universe, 1, 2, &mut rng).is_err());
    }

    #[test]
    fn mrr_of_perfect_ranks() {
        let scored = vec![(5.0, vec![1.0, 2.0]), (9.0, vec![0.0, 3.0]), (2.0, vec![1.0, 0.0])];
        let r = RankingResult::from_scored_queries(&scored, &[1, 2]);
        assert_eq!(r.ranks, vec![1, 1, 1]);
        assert_eq!(r.mrr, 1.0);
        assert_eq!(r.hits[0], (1, 1.0));
    }

    #[test]
    fn mrr_arithmetic_from_definition() {
        // ranks [1, 2, 4] -> (1 + 0.5 + 0.25) / 3
        let scored = vec![
            (5.0, vec![1.0, 2.0, 3.0]),
            (2.5, vec![3.0, 1.0, 0.0]),
            (0.5, vec![1.0, 2.0, 3.0]),
        ];
        let r = RankingResult::from_scored_queries(&scored, &[]);
        assert_eq!(r.ranks, vec![1, 2, 4]);
        assert!((r.mrr - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_scorer_gets_worst_rank() {
        let scored = vec![(1.0, vec![1.0; 20])];
        let r = RankingResult::from_scored_queries(&scored, &[]);
        assert_eq!(r.ranks, vec![21]);
        assert!((r.mrr - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_random_scorer_matches_expected_mrr() {
        use rand::Rng;
        let mut rng = substream_rng(5, "random-scorer");
        let num_neg = 20;
        let queries = 10_000;
        let mut scored = Vec::with_capacity(queries);
        for _ in 0..queries {
            let pos: f64 = rng.random_range(0.0..1.0);
            let negs: Vec<f64> = (0..num_neg).map(|_| rng.random_range(0.0..1.0)).collect();
            scored.push((pos, negs));
        }
        let r = RankingResult::from_scored_queries(&scored, &[]);
        let m = (num_neg + 1) as f64;
        let expect: f64 = (1..=num_neg + 1).map(|k| 1.0 / k as f64).sum::<f64>() / m;
        // variance of 1/rank under a uniform rank
        let second: f64 = (1..=num_neg + 1)
            .map(|k| 1.0 / (k * k) as f64)
            .sum::<f64>()
            / m;
        let se = ((second - expect * expect) / queries as f64).sqrt();
        assert!(
            (r.mrr - expect).abs() < 3.0 * se,
            "mrr {} vs {expect} (se {se})",
            r.mrr
        );
    }

    #[test]
    fn binary_mode_ap_auc() {
        // perfectly separated scores
        let scored = vec![(0.9, vec![0.1]), (0.8, vec![0.2]), (0.7, vec![0.3])];
        let r = RankingResult::from_scored_queries(&scored, &[1]);
        assert_eq!(r.ap, Some(1.0));
        assert_eq!(r.auc, Some(1.0));

        // fully tied scores: AUC 0.5, positives ranked pessimistically
        let scored = vec![(0.5, vec![0.5]), (0.5, vec![0.5])];
        let r = RankingResult::from_scored_queries(&scored, &[1]);
        assert_eq!(r.auc, Some(0.5));
        assert!(r.ap.unwrap() < 0.75);
    }
}
