//! Timestamped interaction storage: event streams, chronological splits,
//! temporal neighbor lookup, and inter-arrival statistics.
//!
//! A [`TemporalGraph`] is immutable after construction and safe to share
//! across threads for concurrent reads.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type GraphResult<T> = Result<T, GraphError>;

/// One timestamped interaction `(src, dst, edge features, time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEvent {
    pub src: usize,
    pub dst: usize,
    pub time: f64,
    pub edge_feat: Vec<f64>,
}

/// Chronologically ordered event stream over `num_nodes` nodes with
/// `d_e`-dimensional edge features. Ties in time keep input order.
#[derive(Debug, Clone)]
pub struct TemporalGraph {
    events: Vec<TemporalEvent>,
    num_nodes: usize,
    d_e: usize,
    /// Per-node indices into `events`, ascending in time (graph order).
    /// An event is history for both endpoints.
    node_events: Vec<Vec<usize>>,
}

/// The most recent events touching a node strictly before a query time.
#[derive(Debug, Clone)]
pub struct NeighborBatch {
    pub center: usize,
    pub query_time: f64,
    /// `(neighbor node, edge features, event time)`, most recent first.
    pub neighbors: Vec<(usize, Vec<f64>, f64)>,
    /// `query_time - event time`, aligned with `neighbors`; always >= 0.
    pub delta_ts: Vec<f64>,
}

impl NeighborBatch {
    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }
}

impl TemporalGraph {
    /// Build from events (stably sorted by time here) with an explicit node
    /// count; `num_nodes` must cover every endpoint.
    pub fn new(mut events: Vec<TemporalEvent>, num_nodes: usize, d_e: usize) -> GraphResult<Self> {
        for ev in &events {
            if ev.time < 0.0 || !ev.time.is_finite() {
                return Err(GraphError::Domain(format!(
                    "event time must be finite and non-negative, got {}",
                    ev.time
                )));
            }
            if ev.edge_feat.len() != d_e {
                return Err(GraphError::Domain(format!(
                    "edge feature length {} does not match d_e = {}",
                    ev.edge_feat.len(),
                    d_e
                )));
            }
            if ev.src >= num_nodes || ev.dst >= num_nodes {
                return Err(GraphError::Domain(format!(
                    "node id out of range: ({}, {}) with num_nodes = {}",
                    ev.src, ev.dst, num_nodes
                )));
            }
        }
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
        let mut node_events = vec![Vec::new(); num_nodes];
        for (idx, ev) in events.iter().enumerate() {
            node_events[ev.src].push(idx);
            if ev.dst != ev.src {
                node_events[ev.dst].push(idx);
            }
        }
        Ok(TemporalGraph {
            events,
            num_nodes,
            d_e,
            node_events,
        })
    }

    /// Load from CSV rows `src,dst,time,f_0,...,f_{d_e-1}`. A leading header
    /// line is skipped when its first field is not an integer.
    pub fn load_csv(path: impl AsRef<Path>, d_e: usize) -> GraphResult<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let reader = BufReader::new(file);
        let mut events = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| GraphError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let line_num = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if line_num == 1 && fields[0].trim().parse::<usize>().is_err() {
                continue; // optional header
            }
            events.push(parse_event(&fields, line_num, d_e)?);
        }
        let num_nodes = events
            .iter()
            .map(|e| e.src.max(e.dst) + 1)
            .max()
            .unwrap_or(0);
        TemporalGraph::new(events, num_nodes, d_e)
    }

    pub fn events(&self) -> &[TemporalEvent] {
        &self.events
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    /// Event times of everything touching `node`, ascending.
    pub fn node_times(&self, node: usize) -> Vec<f64> {
        self.node_events[node]
            .iter()
            .map(|&i| self.events[i].time)
            .collect()
    }

    /// Up to `k` most recent events incident to `node` strictly before
    /// `query_time`, most recent first. Membership is undirected: an event
    /// `(i, j)` is history for both `i` and `j`.
    pub fn recent_neighbors(&self, node: usize, query_time: f64, k: usize) -> NeighborBatch {
        let mut neighbors = Vec::new();
        let mut delta_ts = Vec::new();
        if node < self.num_nodes && k >= 1 {
            let idxs = &self.node_events[node];
            let cut = idxs.partition_point(|&i| self.events[i].time < query_time);
            for &i in idxs[..cut].iter().rev().take(k) {
                let ev = &self.events[i];
                let other = if ev.src == node { ev.dst } else { ev.src };
                neighbors.push((other, ev.edge_feat.clone(), ev.time));
                delta_ts.push(query_time - ev.time);
            }
        }
        NeighborBatch {
            center: node,
            query_time,
            neighbors,
            delta_ts,
        }
    }

    fn slice(&self, range: std::ops::Range<usize>) -> TemporalGraph {
        let events = self.events[range].to_vec();
        TemporalGraph::new(events, self.num_nodes, self.d_e).expect("slice of valid graph")
    }
}

fn parse_event(fields: &[&str], line: usize, d_e: usize) -> GraphResult<TemporalEvent> {
    let expected = 3 + d_e;
    if fields.len() != expected {
        return Err(GraphError::Parse {
            line,
            message: format!("expected {expected} fields, got {}", fields.len()),
        });
    }
    let src = fields[0].trim().parse::<usize>().map_err(|e| GraphError::Parse {
        line,
        message: format!("bad src: {e}"),
    })?;
    let dst = fields[1].trim().parse::<usize>().map_err(|e| GraphError::Parse {
        line,
        message: format!("bad dst: {e}"),
    })?;
    let time = fields[2].trim().parse::<f64>().map_err(|e| GraphError::Parse {
        line,
        message: format!("bad time: {e}"),
    })?;
    if time < 0.0 || !time.is_finite() {
        return Err(GraphError::Domain(format!(
            "line {line}: time must be finite and non-negative, got {time}"
        )));
    }
    let mut edge_feat = Vec::with_capacity(d_e);
    for (fi, field) in fields[3..].iter().enumerate() {
        let v = field.trim().parse::<f64>().map_err(|e| GraphError::Parse {
            line,
            message: format!("bad feature f_{fi}: {e}"),
        })?;
        edge_feat.push(v);
    }
    Ok(TemporalEvent {
        src,
        dst,
        time,
        edge_feat,
    })
}

/// Index boundaries of a chronological split: `[0, train_end)` trains,
/// `[train_end, val_end)` validates, the remainder tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitBounds {
    pub train_end: usize,
    pub val_end: usize,
}

/// Floor rule: train and val sizes floor to whole events, test takes the rest.
pub fn chrono_split_bounds(
    num_events: usize,
    train_frac: f64,
    val_frac: f64,
) -> GraphResult<SplitBounds> {
    if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0) {
        return Err(GraphError::Domain(format!(
            "invalid split fractions: train {train_frac}, val {val_frac}"
        )));
    }
    let train_end = (num_events as f64 * train_frac).floor() as usize;
    let val_end = train_end + (num_events as f64 * val_frac).floor() as usize;
    Ok(SplitBounds { train_end, val_end })
}

/// Contiguous time-ordered partitions; every event lands in exactly one.
pub fn chrono_split(
    g: &TemporalGraph,
    train_frac: f64,
    val_frac: f64,
) -> GraphResult<(TemporalGraph, TemporalGraph, TemporalGraph)> {
    let bounds = chrono_split_bounds(g.num_events(), train_frac, val_frac)?;
    Ok((
        g.slice(0..bounds.train_end),
        g.slice(bounds.train_end..bounds.val_end),
        g.slice(bounds.val_end..g.num_events()),
    ))
}

/// Population standard deviation of consecutive event-time gaps over the
/// globally time-sorted stream. Errors with fewer than two gaps, and when
/// every gap is equal (the decay kernels would be constant).
pub fn train_sigma(train: &TemporalGraph) -> GraphResult<f64> {
    let times: Vec<f64> = train.events().iter().map(|e| e.time).collect();
    if times.len() < 3 {
        return Err(GraphError::Domain(format!(
            "need at least 3 events (2 gaps) to estimate sigma, got {}",
            times.len()
        )));
    }
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64;
    let sigma = var.sqrt();
    if sigma <= 0.0 {
        return Err(GraphError::Degenerate(
            "all inter-event gaps are equal; sigma = 0 would make the kernels constant".into(),
        ));
    }
    Ok(sigma)
}

/// Equal-width histogram with right-inclusive bins over `[0, max_gap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges from 0 to the maximum gap.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Pool per-node consecutive gaps across the split and bin them. Returns
/// `None` when the split yields no gaps at all.
pub fn interarrival_histogram(g: &TemporalGraph, bins: usize) -> GraphResult<Option<Histogram>> {
    if bins < 1 {
        return Err(GraphError::Domain("bins must be >= 1".into()));
    }
    let mut gaps = Vec::new();
    for node in 0..g.num_nodes() {
        let times = g.node_times(node);
        for w in times.windows(2) {
            gaps.push(w[1] - w[0]);
        }
    }
    if gaps.is_empty() {
        return Ok(None);
    }
    let max_gap = gaps.iter().cloned().fold(0.0_f64, f64::max);
    let width = max_gap / bins as f64;
    let mut counts = vec![0usize; bins];
    for &gap in &gaps {
        let idx = if width == 0.0 || gap <= 0.0 {
            0
        } else {
            (((gap / width).ceil() as usize).saturating_sub(1)).min(bins - 1)
        };
        counts[idx] += 1;
    }
    let edges = (0..=bins).map(|i| width * i as f64).collect();
    Ok(Some(Histogram { edges, counts }))
}

/// Shannon entropy (nats) of the node's inter-arrival frequency spectrum.
///
/// Takes the DFT of the node's gap sequence and normalizes the magnitudes of
/// the strictly positive frequencies below Nyquist (the zero-frequency term
/// is excluded). A constant gap sequence leaves no mass there and scores
/// exactly 0 — the fully periodic case.
pub fn spectral_entropy(g: &TemporalGraph, node: usize) -> GraphResult<f64> {
    if node >= g.num_nodes() {
        return Err(GraphError::Domain(format!(
            "node {node} out of range (num_nodes = {})",
            g.num_nodes()
        )));
    }
    let times = g.node_times(node);
    if times.len() < 4 {
        return Err(GraphError::Domain(format!(
            "spectral entropy needs >= 4 events on the node, got {}",
            times.len()
        )));
    }
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mags = dft_half_spectrum(&gaps);
    // A constant gap sequence carries all spectral mass at zero frequency.
    // With that term excluded, only float noise remains: compare against the
    // DC magnitude and call it exactly periodic (entropy 0).
    let dc: f64 = gaps.iter().sum::<f64>().abs();
    let total: f64 = mags.iter().sum();
    if total <= 1e-9 * dc.max(1e-300) {
        return Ok(0.0);
    }
    Ok(entropy_of_magnitudes(&mags))
}

/// Magnitudes |X_f| for f = 1 ..= (m-1)/2 of the length-m DFT — the unique
/// positive frequencies, excluding the zero-frequency term (and Nyquist).
fn dft_half_spectrum(series: &[f64]) -> Vec<f64> {
    let m = series.len();
    let top = (m - 1) / 2;
    let mut mags = Vec::with_capacity(top);
    for f in 1..=top {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &x) in series.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (f * k) as f64 / m as f64;
            re += x * angle.cos();
            im += x * angle.sin();
        }
        mags.push((re * re + im * im).sqrt());
    }
    mags
}

/// Entropy of magnitude-normalized weights; zero total mass counts as 0.
pub fn entropy_of_magnitudes(mags: &[f64]) -> f64 {
    let total: f64 = mags.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &m in mags {
        let p = m / total;
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn event(src: usize, dst: usize, time: f64) -> TemporalEvent {
        TemporalEvent {
            src,
            dst,
            time,
            edge_feat: vec![],
        }
    }

    #[test]
    fn load_empty_file() {
        let dir = std::env::temp_dir().join("keat_graph_test_empty");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        File::create(&path).unwrap();
        let g = TemporalGraph::load_csv(&path, 2).unwrap();
        assert_eq!(g.num_events(), 0);
        assert_eq!(g.num_nodes(), 0);
    }

    #[test]
    fn load_sorts_by_time() {
        let dir = std::env::temp_dir().join("keat_graph_test_sort");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0,1,3.0,0.5").unwrap();
        writeln!(f, "1,2,1.0,0.5").unwrap();
        writeln!(f, "2,0,2.0,0.5").unwrap();
        drop(f);
        let g = TemporalGraph::load_csv(&path, 1).unwrap();
        let times: Vec<f64> = g.events().iter().map(|e| e.time).collect();
        assert_eq!(times, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn load_fixture_counts_nodes() {
        let dir = std::env::temp_dir().join("keat_graph_test_fixture");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fixture.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "src,dst,time,f_0").unwrap();
        for (s, d, t) in [(0, 3, 0.5), (1, 3, 1.0), (2, 4, 1.5), (0, 4, 2.0), (1, 7, 2.5)] {
            writeln!(f, "{s},{d},{t},1.0").unwrap();
        }
        drop(f);
        let g = TemporalGraph::load_csv(&path, 1).unwrap();
        assert_eq!(g.num_events(), 5);
        assert_eq!(g.num_nodes(), 8); // max id 7 + 1
    }

    #[test]
    fn load_reports_line_number_on_malformed_row() {
        let dir = std::env::temp_dir().join("keat_graph_test_badrow");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0,1,1.0,0.5").unwrap();
        writeln!(f, "0,oops,2.0,0.5").unwrap();
        drop(f);
        let err = TemporalGraph::load_csv(&path, 1).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn load_rejects_negative_time() {
        let dir = std::env::temp_dir().join("keat_graph_test_negtime");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("neg.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0,1,-1.0,0.5").unwrap();
        drop(f);
        assert!(matches!(
            TemporalGraph::load_csv(&path, 1),
            Err(GraphError::Domain(_))
        ));
    }

    #[test]
    fn split_floor_rule() {
        let events = (0..10).map(|i| event(0, 1, i as f64)).collect();
        let g = TemporalGraph::new(events, 2, 0).unwrap();
        let (train, val, test) = chrono_split(&g, 0.7, 0.15).unwrap();
        assert_eq!(train.num_events(), 7);
        assert_eq!(val.num_events(), 1);
        assert_eq!(test.num_events(), 2);
    }

    #[test]
    fn split_all_train() {
        let events = (0..4).map(|i| event(0, 1, i as f64)).collect();
        let g = TemporalGraph::new(events, 2, 0).unwrap();
        let (train, val, test) = chrono_split(&g, 1.0, 0.0).unwrap();
        assert_eq!(train.num_events(), 4);
        assert_eq!(val.num_events(), 0);
        assert_eq!(test.num_events(), 0);
    }

    #[test]
    fn split_empty_graph() {
        let g = TemporalGraph::new(vec![], 0, 0).unwrap();
        let (train, val, test) = chrono_split(&g, 0.7, 0.15).unwrap();
        assert_eq!(train.num_events() + val.num_events() + test.num_events(), 0);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let g = TemporalGraph::new(vec![event(0, 1, 0.0)], 2, 0).unwrap();
        assert!(chrono_split(&g, 0.8, 0.3).is_err());
        assert!(chrono_split(&g, 0.0, 0.1).is_err());
    }

    #[test]
    fn neighbors_empty_history() {
        let g = TemporalGraph::new(vec![event(0, 1, 1.0)], 3, 0).unwrap();
        let batch = g.recent_neighbors(2, 5.0, 4);
        assert!(batch.is_empty());
    }

    #[test]
    fn neighbors_enumeration_oracle() {
        let events = vec![event(0, 1, 1.0), event(0, 2, 2.0), event(0, 3, 3.0)];
        let g = TemporalGraph::new(events, 4, 0).unwrap();
        let batch = g.recent_neighbors(0, 2.5, 10);
        assert_eq!(batch.len(), 2);
        // most recent first
        assert_eq!(batch.neighbors[0].0, 2);
        assert_eq!(batch.neighbors[1].0, 1);
        assert!((batch.delta_ts[0] - 0.5).abs() < 1e-15);
        assert!((batch.delta_ts[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn neighbors_truncate_to_k() {
        let events = vec![event(0, 1, 1.0), event(0, 2, 2.0), event(0, 3, 3.0)];
        let g = TemporalGraph::new(events, 4, 0).unwrap();
        let batch = g.recent_neighbors(0, 10.0, 1);
        assert_eq!(batch.len(), 1);
        assert_eq!(batch.neighbors[0].0, 3);
    }

    #[test]
    fn neighbors_never_see_future_or_present() {
        let events = vec![event(0, 1, 1.0), event(2, 0, 2.0)];
        let g = TemporalGraph::new(events, 3, 0).unwrap();
        let batch = g.recent_neighbors(0, 2.0, 10);
        assert_eq!(batch.len(), 1); // the time-2 event is not visible at time 2
        assert_eq!(batch.neighbors[0].0, 1);
    }

    #[test]
    fn sigma_constant_gaps_degenerate() {
        let events = (0..4).map(|i| event(0, 1, i as f64)).collect();
        let g = TemporalGraph::new(events, 2, 0).unwrap();
        assert!(matches!(train_sigma(&g), Err(GraphError::Degenerate(_))));
    }

    #[test]
    fn sigma_direct_computation() {
        // times [0,1,3,6] -> gaps [1,2,3] -> population std sqrt(2/3)
        let events = [0.0, 1.0, 3.0, 6.0]
            .iter()
            .map(|&t| event(0, 1, t))
            .collect();
        let g = TemporalGraph::new(events, 2, 0).unwrap();
        let sigma = train_sigma(&g).unwrap();
        assert!((sigma - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma_needs_two_gaps() {
        let events = vec![event(0, 1, 0.0), event(0, 1, 2.0)];
        let g = TemporalGraph::new(events, 2, 0).unwrap();
        assert!(matches!(train_sigma(&g), Err(GraphError::Domain(_))));
    }

    #[test]
    fn histogram_single_node() {
        let events = vec![event(0, 0, 0.0), event(0, 0, 1.0), event(0, 0, 2.0)];
        let g = TemporalGraph::new(events, 1, 0).unwrap();
        let h = interarrival_histogram(&g, 1).unwrap().unwrap();
        assert_eq!(h.counts, vec![2]);
    }

    #[test]
    fn histogram_no_gaps_is_explicit_empty() {
        let events = vec![event(0, 1, 0.0)];
        let g = TemporalGraph::new(events, 2, 0).unwrap();
        // both nodes have exactly one event -> no consecutive gaps anywhere
        // (the single shared event gives each node a history of length 1)
        assert!(interarrival_histogram(&g, 3).unwrap().is_none());
    }

    #[test]
    fn histogram_manual_binning_oracle() {
        // gaps [1,1,2,4] with 2 right-inclusive bins over [0,4] -> [3,1]
        let events = [0.0, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&t| event(0, 0, t))
            .collect();
        let g = TemporalGraph::new(events, 1, 0).unwrap();
        let h = interarrival_histogram(&g, 2).unwrap().unwrap();
        assert_eq!(h.counts, vec![3, 1]);
        assert_eq!(h.edges, vec![0.0, 2.0, 4.0]);
    }

    #[test]
    fn entropy_constant_gaps_is_zero() {
        let events = (0..8).map(|i| event(0, 0, i as f64)).collect();
        let g = TemporalGraph::new(events, 1, 0).unwrap();
        assert_eq!(spectral_entropy(&g, 0).unwrap(), 0.0);
    }

    #[test]
    fn entropy_two_equal_components() {
        assert!((entropy_of_magnitudes(&[1.0, 1.0]) - 2.0f64.ln()).abs() < 1e-12);
        // end to end: gaps with two equal-amplitude tones at f=1 and f=2
        let m = 16usize;
        let times: Vec<f64> = {
            let mut acc = 0.0;
            let mut ts = vec![0.0];
            for k in 0..m {
                let g = 10.0
                    + (2.0 * std::f64::consts::PI * k as f64 / m as f64).cos()
                    + (4.0 * std::f64::consts::PI * k as f64 / m as f64).cos();
                acc += g;
                ts.push(acc);
            }
            ts
        };
        let events = times.iter().map(|&t| event(0, 0, t)).collect();
        let g = TemporalGraph::new(events, 1, 0).unwrap();
        let h = spectral_entropy(&g, 0).unwrap();
        assert!((h - 2.0f64.ln()).abs() < 1e-6, "entropy {h}");
    }

    #[test]
    fn entropy_needs_four_events() {
        let events = (0..3).map(|i| event(0, 0, i as f64)).collect();
        let g = TemporalGraph::new(events, 1, 0).unwrap();
        assert!(spectral_entropy(&g, 0).is_err());
    }

    #[test]
    fn entropy_white_noise_near_uniform() {
        // 64 iid gaps -> 31 positive-frequency bins; mean entropy over 100
        // seeds should sit near ln 31.
        use rand::Rng;
        let mut total = 0.0;
        for seed in 0..100u64 {
            let mut rng = crate::rng::substream_rng(seed, "entropy-test");
            let mut acc = 0.0;
            let mut times = vec![0.0];
            for _ in 0..64 {
                acc += rng.random_range(0.05..1.0);
                times.push(acc);
            }
            let events = times.iter().map(|&t| event(0, 0, t)).collect();
            let g = TemporalGraph::new(events, 1, 0).unwrap();
            total += spectral_entropy(&g, 0).unwrap();
        }
        let mean = total / 100.0;
        let target = 31.0f64.ln();
        assert!(
            (mean - target).abs() / target < 0.15,
            "mean entropy {mean} vs ln(31) = {target}"
        );
    }

    #[test]
    fn sigma_translation_and_dilation() {
        let base = [0.0, 1.0, 3.0, 6.0, 10.0];
        let g = |times: &[f64]| {
            TemporalGraph::new(times.iter().map(|&t| event(0, 1, t)).collect(), 2, 0).unwrap()
        };
        let s0 = train_sigma(&g(&base)).unwrap();
        let shifted: Vec<f64> = base.iter().map(|t| t + 100.0).collect();
        let scaled: Vec<f64> = base.iter().map(|t| t * 3.0).collect();
        assert!((train_sigma(&g(&shifted)).unwrap() - s0).abs() < 1e-9);
        assert!((train_sigma(&g(&scaled)).unwrap() - 3.0 * s0).abs() < 1e-9);
    }
}
