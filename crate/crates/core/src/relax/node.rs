use crate::instance::{Instance, Interval, Region, RegionBounds};

/// Branching state of one activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivityStatus {
    Free,
    Fixed(Region),
    /// Free, except the flagged sides are closed.
    Forbidden {
        left: bool,
        right: bool,
    },
}

/// The regions an activity may still take at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenRegions {
    pub left: Option<Interval>,
    pub right: Option<Interval>,
    /// Set when the activity is fixed; `None` interval for `S`.
    pub fixed: Option<(Region, Option<Interval>)>,
}

impl OpenRegions {
    pub fn of(rb: &RegionBounds, status: ActivityStatus) -> Self {
        match status {
            ActivityStatus::Free => Self {
                left: rb.left,
                right: rb.right,
                fixed: None,
            },
            ActivityStatus::Forbidden { left, right } => Self {
                left: rb.left.filter(|_| !left),
                right: rb.right.filter(|_| !right),
                fixed: None,
            },
            ActivityStatus::Fixed(r) => {
                let iv = rb.get(r).filter(|_| r.is_change());
                Self {
                    left: None,
                    right: None,
                    fixed: Some((r, iv)),
                }
            }
        }
    }

    pub fn count_nonzero(&self) -> usize {
        match self.fixed {
            Some((r, _)) => r.is_change() as usize,
            None => self.left.is_some() as usize + self.right.is_some() as usize,
        }
    }
}

/// Fixings that define a branch-and-bound node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeState {
    pub status: Vec<ActivityStatus>,
}

impl NodeState {
    /// All activities free, after propagation.
    pub fn root(inst: &Instance) -> Self {
        let mut node = Self {
            status: vec![ActivityStatus::Free; inst.n()],
        };
        node.propagate(inst);
        node
    }

    pub fn fixed_changes(&self) -> usize {
        self.status
            .iter()
            .filter(|s| matches!(s, ActivityStatus::Fixed(r) if r.is_change()))
            .count()
    }

    pub fn is_leaf(&self) -> bool {
        self.status
            .iter()
            .all(|s| matches!(s, ActivityStatus::Fixed(_)))
    }

    /// Region assignment of a leaf.
    pub fn assignment(&self) -> Option<Vec<Region>> {
        self.status
            .iter()
            .map(|s| match s {
                ActivityStatus::Fixed(r) => Some(*r),
                _ => None,
            })
            .collect()
    }

    pub fn open(&self, inst: &Instance, i: usize) -> OpenRegions {
        OpenRegions::of(inst.region(i), self.status[i])
    }

    /// Child with activity `i` fixed to `region`, or `None` if the region is
    /// closed at this node or the fixing breaks the cardinality cap.
    pub fn child(&self, inst: &Instance, i: usize, region: Region) -> Option<Self> {
        let open = self.open(inst, i);
        if open.fixed.is_some() {
            return None;
        }
        let allowed = match region {
            Region::Stay => true,
            Region::Left => open.left.is_some(),
            Region::Right => open.right.is_some(),
        };
        if !allowed || (region.is_change() && self.fixed_changes() >= inst.m()) {
            return None;
        }
        let mut node = self.clone();
        node.status[i] = ActivityStatus::Fixed(region);
        node.propagate(inst);
        Some(node)
    }

    /// Fixes to `S` every free activity with no open side, and every free
    /// activity once the cap is reached.
    fn propagate(&mut self, inst: &Instance) {
        let full = self.fixed_changes() >= inst.m();
        for i in 0..self.status.len() {
            if matches!(self.status[i], ActivityStatus::Fixed(_)) {
                continue;
            }
            if full || self.open(inst, i).count_nonzero() == 0 {
                self.status[i] = ActivityStatus::Fixed(Region::Stay);
            }
        }
    }

    /// Number of completions of this node that respect its fixings, ignoring
    /// cardinality. Saturates at `usize::MAX`.
    pub fn open_assignments(&self, inst: &Instance) -> usize {
        (0..inst.n()).fold(1usize, |acc, i| {
            let o = self.open(inst, i);
            let k = if o.fixed.is_some() {
                1
            } else {
                1 + o.count_nonzero()
            };
            acc.saturating_mul(k)
        })
    }
}
