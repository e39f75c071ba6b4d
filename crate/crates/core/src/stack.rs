use crate::geometry::{polyline_length, Point3};

/// LIFO of tether contact points. The bottom element is the tether origin
/// and is never popped. Each pushed contact remembers the length of the
/// tether segment leading to it, so the static length can be maintained
/// incrementally.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactStack {
    points: Vec<Point3>,
    /// `segments[n]` is the length from `points[n]` to `points[n + 1]`.
    segments: Vec<f64>,
    static_length: f64,
}

impl ContactStack {
    pub fn new(origin: Point3) -> Self {
        ContactStack {
            points: vec![origin],
            segments: Vec::new(),
            static_length: 0.0,
        }
    }

    pub fn origin(&self) -> Point3 {
        self.points[0]
    }

    pub fn top(&self) -> Point3 {
        *self.points.last().expect("stack always holds the origin")
    }

    /// Second element from the top, present when at least one contact has
    /// been pushed.
    pub fn below_top(&self) -> Option<Point3> {
        self.points.len().checked_sub(2).map(|n| self.points[n])
    }

    /// Number of elements including the origin.
    pub fn depth(&self) -> usize {
        self.points.len()
    }

    /// Number of pushed contacts, excluding the origin.
    pub fn contacts(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn push(&mut self, p: Point3) {
        let seg = self.top().distance(p);
        self.points.push(p);
        self.segments.push(seg);
        self.static_length += seg;
    }

    /// Remove the top contact. Returns `None` (and leaves the stack alone)
    /// when only the origin is left.
    pub fn pop(&mut self) -> Option<Point3> {
        if self.points.len() == 1 {
            return None;
        }
        let seg = self.segments.pop().expect("one segment per pushed contact");
        self.static_length -= seg;
        if self.segments.is_empty() {
            self.static_length = 0.0;
        }
        self.points.pop()
    }

    /// Tether length from the origin to the top contact, maintained by
    /// push/pop bookkeeping.
    pub fn static_length(&self) -> f64 {
        self.static_length
    }

    /// Same quantity recomputed from scratch.
    pub fn recompute_static_length(&self) -> f64 {
        static_length(&self.points)
    }
}

/// Sum of segment lengths between consecutive contacts.
pub fn static_length(contacts: &[Point3]) -> f64 {
    polyline_length(contacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_never_popped() {
        let mut s = ContactStack::new(Point3::ORIGIN);
        assert_eq!(s.pop(), None);
        assert_eq!(s.depth(), 1);
        assert_eq!(s.static_length(), 0.0);
        assert_eq!(s.below_top(), None);
    }

    #[test]
    fn unit_steps() {
        let mut s = ContactStack::new(Point3::ORIGIN);
        s.push(Point3::new(1.0, 0.0, 0.0));
        s.push(Point3::new(1.0, 1.0, 0.0));
        assert_eq!(s.static_length(), 2.0);
        assert_eq!(s.recompute_static_length(), 2.0);
        assert_eq!(s.below_top(), Some(Point3::new(1.0, 0.0, 0.0)));
        assert_eq!(s.pop(), Some(Point3::new(1.0, 1.0, 0.0)));
        assert_eq!(s.static_length(), 1.0);
        assert_eq!(s.contacts(), 1);
    }
}
