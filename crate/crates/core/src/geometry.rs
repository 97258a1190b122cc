//! Observable-zone geometry on the time-time diagram.
//!
//! A vehicle is a point `(x, t)`: upstream arrival time `x` (decimal hours
//! from local midnight) and journey time `t` (hours). Its downstream arrival
//! is `y = x + t`. The two stations' recording windows, the free-flow time and
//! the maximum modeled journey time cut the plane into five zones; only
//! [`Zone::Zone2`] is observable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on modeled journey time, in hours.
pub const DEFAULT_MAX_JOURNEY: f64 = 24.0;

/// Recording windows of a two-point survey plus journey-time bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindows")]
pub struct SurveyWindows {
    pub upstream_start: f64,
    pub upstream_end: f64,
    pub downstream_start: f64,
    pub downstream_end: f64,
    pub free_flow_time: f64,
    pub max_journey: f64,
}

#[derive(Deserialize)]
struct RawWindows {
    upstream_start: f64,
    upstream_end: f64,
    downstream_start: f64,
    downstream_end: f64,
    #[serde(default)]
    free_flow_time: f64,
    #[serde(default = "default_max_journey")]
    max_journey: f64,
}

fn default_max_journey() -> f64 {
    DEFAULT_MAX_JOURNEY
}

impl TryFrom<RawWindows> for SurveyWindows {
    type Error = Error;

    fn try_from(raw: RawWindows) -> Result<Self> {
        SurveyWindows::new(
            raw.upstream_start,
            raw.upstream_end,
            raw.downstream_start,
            raw.downstream_end,
            raw.free_flow_time,
            raw.max_journey,
        )
    }
}

/// Zone of the time-time plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    /// Inside the interest box, reaches downstream before it starts recording.
    Zone1,
    /// Observable.
    Zone2,
    /// Inside the interest box, reaches downstream after it stops recording.
    Zone3,
    /// Outside the upstream window or longer than the maximum journey.
    Zone4,
    /// Faster than free flow; physically impossible.
    Zone5,
}

impl Zone {
    pub const ALL: [Zone; 5] = [Zone::Zone1, Zone::Zone2, Zone::Zone3, Zone::Zone4, Zone::Zone5];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Zone::Zone1 => "zone1",
            Zone::Zone2 => "zone2",
            Zone::Zone3 => "zone3",
            Zone::Zone4 => "zone4",
            Zone::Zone5 => "zone5",
        }
    }
}

/// A point in the upstream-centric view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTimePoint {
    /// Upstream arrival, hours of day.
    pub x: f64,
    /// Journey time, hours.
    pub t: f64,
}

impl TimeTimePoint {
    pub fn new(x: f64, t: f64) -> Self {
        Self { x, t }
    }

    pub fn downstream_time(&self) -> f64 {
        self.x + self.t
    }

    pub fn to_downstream_view(self) -> DownstreamPoint {
        DownstreamPoint { y: self.x + self.t, t: self.t }
    }
}

/// A point in the downstream-centric view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownstreamPoint {
    /// Downstream arrival, hours of day.
    pub y: f64,
    /// Journey time, hours.
    pub t: f64,
}

impl DownstreamPoint {
    pub fn new(y: f64, t: f64) -> Self {
        Self { y, t }
    }

    pub fn from_downstream_view(self) -> TimeTimePoint {
        TimeTimePoint { x: self.y - self.t, t: self.t }
    }
}

impl SurveyWindows {
    pub fn new(
        upstream_start: f64,
        upstream_end: f64,
        downstream_start: f64,
        downstream_end: f64,
        free_flow_time: f64,
        max_journey: f64,
    ) -> Result<Self> {
        let w = Self {
            upstream_start,
            upstream_end,
            downstream_start,
            downstream_end,
            free_flow_time,
            max_journey,
        };
        w.validate()?;
        Ok(w)
    }

    /// Windows with `free_flow_time = 0` and the default maximum journey.
    pub fn with_defaults(
        upstream_start: f64,
        upstream_end: f64,
        downstream_start: f64,
        downstream_end: f64,
    ) -> Result<Self> {
        Self::new(upstream_start, upstream_end, downstream_start, downstream_end, 0.0, DEFAULT_MAX_JOURNEY)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.upstream_start,
            self.upstream_end,
            self.downstream_start,
            self.downstream_end,
            self.free_flow_time,
            self.max_journey,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWindows("all bounds must be finite".into()));
        }
        if self.upstream_start >= self.upstream_end {
            return Err(Error::InvalidWindows(format!(
                "upstream start {} must precede end {}",
                self.upstream_start, self.upstream_end
            )));
        }
        if self.downstream_start >= self.downstream_end {
            return Err(Error::InvalidWindows(format!(
                "downstream start {} must precede end {}",
                self.downstream_start, self.downstream_end
            )));
        }
        if !(0.0 <= self.free_flow_time && self.free_flow_time < self.max_journey) {
            return Err(Error::InvalidWindows(format!(
                "need 0 <= free_flow_time ({}) < max_journey ({})",
                self.free_flow_time, self.max_journey
            )));
        }
        if self.max_slice_width() <= 0.0 {
            return Err(Error::InvalidWindows("observable zone is empty".into()));
        }
        Ok(())
    }

    pub fn upstream_width(&self) -> f64 {
        self.upstream_end - self.upstream_start
    }

    /// Widest observable journey-time slice over the upstream window.
    ///
    /// The slice width is concave piecewise linear in `x`, so its maximum is
    /// attained at an endpoint or a breakpoint.
    fn max_slice_width(&self) -> f64 {
        let mut candidates = vec![self.upstream_start, self.upstream_end];
        candidates.extend(self.breakpoints());
        candidates
            .into_iter()
            .map(|x| {
                let (lo, hi) = self.raw_bounds(x);
                hi - lo
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn raw_bounds(&self, x: f64) -> (f64, f64) {
        (
            self.free_flow_time.max(self.downstream_start - x),
            self.max_journey.min(self.downstream_end - x),
        )
    }

    /// Observable journey-time interval `(b_l, b_u)` for vehicles arriving
    /// upstream at `x`.
    ///
    /// Absent outside the upstream window or when the slice is empty
    /// (`b_l > b_u`). A zero-width slice is returned so that boundary points
    /// classified as observable always have bounds.
    pub fn bounds_at(&self, x: f64) -> Option<(f64, f64)> {
        if !(self.upstream_start..=self.upstream_end).contains(&x) {
            return None;
        }
        let (lo, hi) = self.raw_bounds(x);
        (lo <= hi).then_some((lo, hi))
    }

    /// Upstream arrival times inside the window where `b_l` or `b_u` has a
    /// kink or the slice opens or closes. Sorted, deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let raw = [
            self.downstream_start - self.free_flow_time,
            self.downstream_end - self.max_journey,
            self.downstream_start - self.max_journey,
            self.downstream_end - self.free_flow_time,
        ];
        let mut pts: Vec<f64> = raw
            .into_iter()
            .filter(|&x| x > self.upstream_start && x < self.upstream_end)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn classify(&self, p: TimeTimePoint) -> Zone {
        let TimeTimePoint { x, t } = p;
        if t < self.free_flow_time {
            Zone::Zone5
        } else if !(self.upstream_start..=self.upstream_end).contains(&x) || t > self.max_journey {
            Zone::Zone4
        } else if t < self.downstream_start - x {
            Zone::Zone1
        } else if t > self.downstream_end - x {
            Zone::Zone3
        } else {
            Zone::Zone2
        }
    }

    pub fn is_observable(&self, p: TimeTimePoint) -> bool {
        self.classify(p) == Zone::Zone2
    }

    /// Smallest observable journey time over the upstream window.
    pub fn min_observable_journey(&self) -> f64 {
        // b_l is nonincreasing in x.
        self.free_flow_time.max(self.downstream_start - self.upstream_end)
    }

    /// Largest observable journey time over the upstream window.
    pub fn max_observable_journey(&self) -> f64 {
        // b_u is nonincreasing in x.
        self.max_journey.min(self.downstream_end - self.upstream_start)
    }
}
