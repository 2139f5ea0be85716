use super::{Event, EventError, Frequency, US_PER_S};

/// Events falling in `[start_t, end_t)`.
///
/// `start_t`/`end_t` are the smallest integer microseconds at or above the
/// exact rational boundaries `t0 + k * 1e6 / f`, so integer timestamps test
/// membership exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct EventWindow {
    pub index: u64,
    pub start_t: i64,
    pub end_t: i64,
    pub events: Vec<Event>,
    frequency: Frequency,
    t0: i64,
}

impl EventWindow {
    /// An empty window `k` of the partition anchored at `t0`.
    pub fn empty(index: u64, frequency: Frequency, t0: i64) -> Self {
        Self {
            index,
            start_t: boundary_us(t0, index, frequency),
            end_t: boundary_us(t0, index + 1, frequency),
            events: Vec::new(),
            frequency,
            t0,
        }
    }

    pub fn last_event_t(&self) -> Option<i64> {
        self.events.last().map(|e| e.t)
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn origin(&self) -> i64 {
        self.t0
    }

    /// Copy keeping only the final event: enough to time the next interval.
    pub fn timing_only(&self) -> EventWindow {
        EventWindow {
            index: self.index,
            start_t: self.start_t,
            end_t: self.end_t,
            events: self.events.last().copied().into_iter().collect(),
            frequency: self.frequency,
            t0: self.t0,
        }
    }

    /// Reference time for the decay interval as an exact fraction
    /// `(numerator, denominator)` of microseconds: the final event, or the
    /// exact end boundary when the window is empty.
    fn reference_time(&self) -> (i128, i128) {
        match self.last_event_t() {
            Some(t) => (t as i128, 1),
            None => {
                let num = self.frequency.num() as i128;
                let den = self.frequency.den() as i128;
                (
                    self.t0 as i128 * num + (self.index as i128 + 1) * US_PER_S as i128 * den,
                    num,
                )
            }
        }
    }
}

/// `ceil(t0 + k * 1e6 * den / num)`.
fn boundary_us(t0: i64, k: u64, f: Frequency) -> i64 {
    let scaled = k as i128 * US_PER_S as i128 * f.den() as i128;
    let num = f.num() as i128;
    let offset = (scaled + num - 1) / num;
    (t0 as i128 + offset) as i64
}

/// Window index holding `t` (requires `t >= t0`).
fn window_of(t: i64, t0: i64, f: Frequency) -> u64 {
    let scaled = (t as i128 - t0 as i128) * f.num() as i128;
    (scaled / (US_PER_S as i128 * f.den() as i128)) as u64
}

/// Elapsed seconds between the reference times of two windows.
///
/// The reference time is the final event of a window; an empty window
/// substitutes its end boundary so surfaces keep decaying through silence.
pub fn elapsed_dt(prev: &EventWindow, curr: &EventWindow) -> Result<f64, EventError> {
    if curr.index <= prev.index && prev.frequency == curr.frequency && prev.t0 == curr.t0 {
        return Err(EventError::Ordering(format!(
            "window {} does not follow window {}",
            curr.index, prev.index
        )));
    }
    let (a_num, a_den) = prev.reference_time();
    let (b_num, b_den) = curr.reference_time();
    let diff = b_num * a_den - a_num * b_den;
    if diff <= 0 {
        return Err(EventError::Ordering(format!(
            "non-positive interval between windows {} and {}",
            prev.index, curr.index
        )));
    }
    Ok(diff as f64 / (a_den * b_den * US_PER_S as i128) as f64)
}

/// What to do once the source runs dry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Tail {
    /// End with the window holding the last event (no windows for empty input).
    #[default]
    StopAfterLastEvent,
    /// Keep yielding empty windows forever; pair with `take`.
    Unbounded,
}

/// Partitions a monotone event stream into consecutive fixed-duration windows.
/// Empty windows in gaps are emitted because they still decay the surface.
pub struct WindowStream<I> {
    source: I,
    frequency: Frequency,
    t0: i64,
    tail: Tail,
    next_index: u64,
    pending: Option<Event>,
    exhausted: bool,
    failed: bool,
    seen: u64,
    last_t: Option<i64>,
}

pub fn window_stream<I>(events: I, frequency: Frequency, t0: i64) -> WindowStream<I::IntoIter>
where
    I: IntoIterator<Item = Result<Event, EventError>>,
{
    WindowStream {
        source: events.into_iter(),
        frequency,
        t0,
        tail: Tail::StopAfterLastEvent,
        next_index: 0,
        pending: None,
        exhausted: false,
        failed: false,
        seen: 0,
        last_t: None,
    }
}

/// Windows an in-memory slice, ending with the window of the last event.
pub fn window_events(
    events: &[Event],
    frequency: Frequency,
    t0: i64,
) -> Result<Vec<EventWindow>, EventError> {
    window_stream(events.iter().copied().map(Ok), frequency, t0).collect()
}

impl<I> WindowStream<I>
where
    I: Iterator<Item = Result<Event, EventError>>,
{
    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    fn pull(&mut self) -> Result<Option<Event>, EventError> {
        if let Some(e) = self.pending.take() {
            return Ok(Some(e));
        }
        if self.exhausted {
            return Ok(None);
        }
        let Some(item) = self.source.next() else {
            self.exhausted = true;
            return Ok(None);
        };
        let e = item?;
        let index = self.seen;
        self.seen += 1;
        if e.t < self.t0 {
            return Err(EventError::BeforeOrigin {
                index,
                t: e.t,
                t0: self.t0,
            });
        }
        if let Some(prev) = self.last_t {
            if e.t < prev {
                return Err(EventError::NonMonotonic { index, t: e.t, prev });
            }
        }
        self.last_t = Some(e.t);
        Ok(Some(e))
    }

    fn fill(&mut self, window: &mut EventWindow) -> Result<(), EventError> {
        while let Some(e) = self.pull()? {
            if window_of(e.t, self.t0, self.frequency) == window.index {
                window.events.push(e);
            } else {
                self.pending = Some(e);
                break;
            }
        }
        Ok(())
    }
}

impl<I> Iterator for WindowStream<I>
where
    I: Iterator<Item = Result<Event, EventError>>,
{
    type Item = Result<EventWindow, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.tail == Tail::StopAfterLastEvent && self.pending.is_none() {
            match self.pull() {
                Ok(Some(e)) => self.pending = Some(e),
                Ok(None) => return None,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
        let mut window = EventWindow::empty(self.next_index, self.frequency, self.t0);
        self.next_index += 1;
        if let Err(e) = self.fill(&mut window) {
            self.failed = true;
            return Some(Err(e));
        }
        Some(Ok(window))
    }
}
