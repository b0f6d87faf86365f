//! Half-open interval arithmetic on the content timeline.

use serde::{Deserialize, Serialize};

/// A half-open interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    /// Length of the intersection with `other`, zero when disjoint.
    pub fn overlap(&self, other: &Span) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    /// Intersection-over-union; zero when both spans are empty.
    pub fn iou(&self, other: &Span) -> f64 {
        let inter = self.overlap(other);
        let union = self.len() + other.len() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Merges spans into a sorted list of disjoint spans. Touching spans are joined.
pub fn union(spans: impl IntoIterator<Item = Span>) -> Vec<Span> {
    let mut sorted: Vec<Span> = spans.into_iter().filter(|s| !s.is_empty()).collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut out: Vec<Span> = Vec::with_capacity(sorted.len());
    for s in sorted {
        match out.last_mut() {
            Some(last) if s.start <= last.end => last.end = last.end.max(s.end),
            _ => out.push(s),
        }
    }
    out
}

/// Total length covered by the union of `spans`.
pub fn union_length(spans: impl IntoIterator<Item = Span>) -> f64 {
    union(spans).iter().map(Span::len).sum()
}

/// Length of the part of `target` covered by the union of `spans`.
pub fn covered_length(target: &Span, spans: impl IntoIterator<Item = Span>) -> f64 {
    union(spans).iter().map(|s| s.overlap(target)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_joins_overlapping_and_touching() {
        let u = union([Span::new(5.0, 7.0), Span::new(0.0, 2.0), Span::new(2.0, 3.0), Span::new(6.0, 9.0)]);
        assert_eq!(u, vec![Span::new(0.0, 3.0), Span::new(5.0, 9.0)]);
    }

    #[test]
    fn union_length_counts_double_watch_once() {
        assert_eq!(union_length([Span::new(0.0, 200.0), Span::new(100.0, 350.0)]), 350.0);
    }

    #[test]
    fn iou_of_nested_spans() {
        let planted = Span::new(100.0, 130.0);
        let detected = Span::new(95.0, 135.0);
        assert_eq!(planted.iou(&detected), 0.75);
        assert_eq!(planted.iou(&planted), 1.0);
        assert_eq!(planted.iou(&Span::new(200.0, 210.0)), 0.0);
    }

    #[test]
    fn covered_length_clips_to_target() {
        let t = Span::new(10.0, 20.0);
        assert_eq!(covered_length(&t, [Span::new(0.0, 12.0), Span::new(11.0, 14.0), Span::new(19.0, 30.0)]), 5.0);
    }
}
