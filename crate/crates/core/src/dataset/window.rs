use std::ops::Range;

use ndarray::{ArrayView2, Axis};

use super::CsiDataset;
use crate::error::{Error, Result};

/// Sliding-window geometry in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    pub length: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub const PRESENCE: WindowSpec = WindowSpec { length: 64, stride: 32 };
    pub const ACTIVITY: WindowSpec = WindowSpec { length: 450, stride: 1 };

    pub fn new(length: usize, stride: usize) -> Result<Self> {
        if length == 0 || stride == 0 {
            return Err(Error::config("window length and stride must be >= 1"));
        }
        Ok(WindowSpec { length, stride })
    }

    /// Number of window positions over `n` frames, ignoring labels.
    pub fn count(&self, n: usize) -> usize {
        if n < self.length {
            0
        } else {
            (n - self.length) / self.stride + 1
        }
    }
}

/// A window of consecutive frames sharing one label.
///
/// Windows reference rows of a frame matrix instead of owning a copy, since
/// stride-1 activity windows overlap almost entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub length: usize,
    pub label: u16,
}

impl Window {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.length
    }

    /// The window's `length × D` slice of `frames`.
    pub fn matrix<'a>(&self, frames: ArrayView2<'a, f64>) -> ArrayView2<'a, f64> {
        frames.slice_axis_move(Axis(0), self.range().into())
    }
}

/// Windows of `spec` over `range`, dropping any that straddle a label change.
pub(crate) fn windows_in(labels: &[u16], range: Range<usize>, spec: WindowSpec) -> Vec<Window> {
    let n = range.len();
    let count = spec.count(n);
    // Next index at which the label changes, for O(1) boundary checks.
    let mut run_end = vec![0usize; n];
    for i in (0..n).rev() {
        let gi = range.start + i;
        run_end[i] = if i + 1 < n && labels[gi + 1] == labels[gi] { run_end[i + 1] } else { i + 1 };
    }
    (0..count)
        .map(|w| w * spec.stride)
        .filter(|&off| run_end[off] >= off + spec.length)
        .map(|off| Window { start: range.start + off, length: spec.length, label: labels[range.start + off] })
        .collect()
}

/// All label-homogeneous windows over the whole dataset.
pub fn make_windows(dataset: &CsiDataset, spec: WindowSpec) -> Result<Vec<Window>> {
    if dataset.len() < spec.length {
        return Err(Error::EmptyResult(format!(
            "{} frames cannot hold a {}-frame window",
            dataset.len(),
            spec.length
        )));
    }
    Ok(windows_in(&dataset.labels, 0..dataset.len(), spec))
}

/// Output of a train/test split. Spans are frame ranges; windows never cross
/// a span boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub train: Vec<Window>,
    pub test: Vec<Window>,
    pub train_spans: Vec<Range<usize>>,
    pub test_spans: Vec<Range<usize>>,
    /// Groups/spans too short to hold a single window.
    pub skipped: usize,
    /// Set when the activity split had to scale its segments down.
    pub fallback: bool,
}

impl Split {
    /// Indices of all frames that belong to a training span.
    pub fn train_frames(&self) -> Vec<usize> {
        self.train_spans.iter().flat_map(|r| r.clone()).collect()
    }

    pub fn test_frames(&self) -> Vec<usize> {
        self.test_spans.iter().flat_map(|r| r.clone()).collect()
    }
}

/// Presence-detection protocol: cut the recording into fixed-length groups,
/// put the first `train_fraction` of every group in training and the rest in
/// testing, then window each part independently.
pub fn split_presence(
    dataset: &CsiDataset,
    group_seconds: f64,
    window: WindowSpec,
    train_fraction: f64,
) -> Result<Split> {
    let rate = dataset.meta.frame_rate;
    if !(rate > 0.0) {
        return Err(Error::config("frame rate must be positive"));
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::config("train fraction must lie in [0, 1]"));
    }
    let group_len = (group_seconds * rate).round() as usize;
    if group_len == 0 {
        return Err(Error::config("group shorter than one frame"));
    }
    let n = dataset.len();
    let mut split = Split::default();
    let mut start = 0;
    while start < n {
        let end = (start + group_len).min(n);
        let len = end - start;
        if len < window.length {
            split.skipped += 1;
            start = end;
            continue;
        }
        let train_len = (train_fraction * len as f64).floor() as usize;
        let train = start..start + train_len;
        let test = start + train_len..end;
        if !train.is_empty() {
            split.train.extend(windows_in(&dataset.labels, train.clone(), window));
            split.train_spans.push(train);
        }
        if !test.is_empty() {
            split.test.extend(windows_in(&dataset.labels, test.clone(), window));
            split.test_spans.push(test);
        }
        start = end;
    }
    if split.skipped > 0 {
        log::warn!("split_presence skipped {} groups shorter than one window", split.skipped);
    }
    Ok(split)
}

/// Activity-recognition protocol parameters (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivitySplit {
    pub segments: usize,
    pub segment_seconds: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
    /// Buffer between the training and test spans. `None` places half of the
    /// unassigned time before the test span and half after it.
    pub buffer_before_test: Option<f64>,
}

impl Default for ActivitySplit {
    fn default() -> Self {
        ActivitySplit {
            segments: 5,
            segment_seconds: 16.0,
            train_seconds: 9.0,
            test_seconds: 3.0,
            buffer_before_test: None,
        }
    }
}

impl ActivitySplit {
    fn validate(&self) -> Result<()> {
        let spare = self.segment_seconds - self.train_seconds - self.test_seconds;
        if self.segments == 0 || self.train_seconds <= 0.0 || self.test_seconds <= 0.0 || spare < -1e-9 {
            return Err(Error::config("activity split does not fit inside its segment"));
        }
        if let Some(b) = self.buffer_before_test {
            if b < 0.0 || b > spare + 1e-9 {
                return Err(Error::config("buffer does not fit inside the segment"));
            }
        }
        Ok(())
    }

    fn buffer_before(&self) -> f64 {
        let spare = (self.segment_seconds - self.train_seconds - self.test_seconds).max(0.0);
        self.buffer_before_test.unwrap_or(spare / 2.0)
    }
}

/// Activity-recognition protocol: each contiguous single-label recording is
/// cut into `segments` segments; each segment contributes a training span, a
/// buffer, a test span and a trailing buffer.
pub fn split_activity(dataset: &CsiDataset, cfg: &ActivitySplit, window: WindowSpec) -> Result<Split> {
    cfg.validate()?;
    let rate = dataset.meta.frame_rate;
    if !(rate > 0.0) {
        return Err(Error::config("frame rate must be positive"));
    }
    let mut split = Split::default();
    for run in label_runs(&dataset.labels) {
        let run_len = run.len();
        let nominal = (cfg.segment_seconds * rate).round() as usize;
        let (seg_len, train_len, gap_len, test_len) = if nominal * cfg.segments <= run_len {
            (
                nominal,
                (cfg.train_seconds * rate).round() as usize,
                (cfg.buffer_before() * rate).round() as usize,
                (cfg.test_seconds * rate).round() as usize,
            )
        } else {
            // Scale the segment down to fit, keeping the train:spare:test proportions.
            split.fallback = true;
            let seg_len = run_len / cfg.segments;
            let scale = seg_len as f64 / cfg.segment_seconds;
            (
                seg_len,
                (cfg.train_seconds * scale).floor() as usize,
                (cfg.buffer_before() * scale).floor() as usize,
                (cfg.test_seconds * scale).floor() as usize,
            )
        };
        for s in 0..cfg.segments {
            let seg_start = run.start + s * seg_len;
            let train = seg_start..seg_start + train_len;
            let test_start = train.end + gap_len;
            let test = test_start..(test_start + test_len).min(seg_start + seg_len);
            for (span, dst, spans) in [
                (train, &mut split.train, &mut split.train_spans),
                (test, &mut split.test, &mut split.test_spans),
            ] {
                if span.len() < window.length {
                    split.skipped += 1;
                }
                if !span.is_empty() {
                    dst.extend(windows_in(&dataset.labels, span.clone(), window));
                    spans.push(span);
                }
            }
        }
    }
    if split.fallback {
        log::warn!("split_activity: recordings shorter than {} segments, proportions scaled", cfg.segments);
    }
    Ok(split)
}

fn label_runs(labels: &[u16]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            runs.push(start..i);
            start = i;
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetMeta;
    use ndarray::Array2;

    fn dataset(labels: Vec<u16>, rate: f64) -> CsiDataset {
        let n = labels.len();
        CsiDataset::from_amplitudes(Array2::ones((n, 2)), labels, DatasetMeta::new(2, rate, 20)).unwrap()
    }

    #[test]
    fn window_counts() {
        let ds = dataset(vec![0; 128], 64.0);
        assert_eq!(make_windows(&ds, WindowSpec::PRESENCE).unwrap().len(), 3);
        let ds = dataset(vec![0; 450], 150.0);
        assert_eq!(make_windows(&ds, WindowSpec::ACTIVITY).unwrap().len(), 1);
        let ds = dataset(vec![0; 452], 150.0);
        assert_eq!(make_windows(&ds, WindowSpec::ACTIVITY).unwrap().len(), 3);
    }

    #[test]
    fn short_dataset_errors() {
        let ds = dataset(vec![0; 10], 10.0);
        assert!(matches!(make_windows(&ds, WindowSpec::PRESENCE), Err(Error::EmptyResult(_))));
    }

    #[test]
    fn label_boundary_windows_discarded() {
        let mut labels = vec![0; 64];
        labels.extend(vec![1; 64]);
        let ds = dataset(labels, 64.0);
        let w = make_windows(&ds, WindowSpec::PRESENCE).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].start, w[0].label), (0, 0));
        assert_eq!((w[1].start, w[1].label), (64, 1));
    }

    #[test]
    fn presence_full_train_fraction_has_no_test() {
        let ds = dataset(vec![0; 64 * 30], 64.0);
        let s = split_presence(&ds, 3.0, WindowSpec::PRESENCE, 1.0).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.train.len(), 10 * 5);
    }

    #[test]
    fn presence_default_geometry() {
        let ds = dataset(vec![0; 64 * 60], 64.0);
        let s = split_presence(&ds, 3.0, WindowSpec::PRESENCE, 2.0 / 3.0).unwrap();
        assert_eq!(s.train.len(), 20 * 3);
        assert_eq!(s.test.len(), 20);
    }

    #[test]
    fn activity_nominal_geometry() {
        // 80 s at 150 fps
        let ds = dataset(vec![0; 12_000], 150.0);
        let s = split_activity(&ds, &ActivitySplit::default(), WindowSpec::ACTIVITY).unwrap();
        assert!(!s.fallback);
        assert_eq!(s.train_spans.len(), 5);
        assert_eq!(s.train_spans[0], 0..1350);
        assert_eq!(s.test_spans[0], 1650..2100);
        assert_eq!(s.train_frames().len(), 5 * 1350);
        assert_eq!(s.test_frames().len(), 5 * 450);
        assert_eq!(s.train.len(), 5 * 901);
        assert_eq!(s.test.len(), 5);
    }

    #[test]
    fn activity_short_recording_falls_back() {
        let ds = dataset(vec![0; 4_000], 150.0);
        let s = split_activity(&ds, &ActivitySplit::default(), WindowSpec::new(50, 1).unwrap()).unwrap();
        assert!(s.fallback);
        assert_eq!(s.train_spans.len(), 5);
        let seg = 800;
        assert_eq!(s.train_spans[0], 0..seg * 9 / 16);
    }
}
