//! Event records, the CSV and `EVW1` binary file formats, and time windowing.
//!
//! CSV: one event per line, `t,x,y,p`, LF-terminated. Binary: an 8-byte
//! header (`EVW1`, width: u16 LE, height: u16 LE) followed by 16-byte
//! little-endian records `t: u64, x: u16, y: u16, p: i8, pad: [0u8; 3]`.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const BINARY_MAGIC: &[u8; 4] = b"EVW1";
pub const BINARY_HEADER_LEN: usize = 8;
pub const BINARY_RECORD_LEN: usize = 16;

/// Timestamp in microseconds.
pub type Micros = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Brightness decrease, encoded as −1.
    Off,
    /// Brightness increase, encoded as +1.
    On,
}

impl Polarity {
    #[inline]
    pub fn sign(self) -> i32 {
        match self {
            Polarity::Off => -1,
            Polarity::On => 1,
        }
    }

    /// Decodes an on-disk value. With `zero_is_off`, 0 maps to `Off`.
    pub fn decode(raw: i64, zero_is_off: bool) -> Option<Self> {
        match raw {
            1 => Some(Polarity::On),
            -1 => Some(Polarity::Off),
            0 if zero_is_off => Some(Polarity::Off),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t: Micros,
    pub x: u16,
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: Micros, x: u16, y: u16, p: Polarity) -> Self {
        Self { t, x, y, p }
    }
}

/// Sensor resolution in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorDims {
    pub width: usize,
    pub height: usize,
}

impl SensorDims {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

impl fmt::Display for SensorDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for SensorDims {
    type Err = Error;

    /// Parses `WxH`, e.g. `640x480`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected dimensions as WxH, got {s:?}"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        let height: usize = h.trim().parse().map_err(|_| bad())?;
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Self { width, height })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Binary,
}

impl FromStr for EventFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "bin" | "binary" => Ok(EventFormat::Binary),
            other => Err(Error::Config(format!("unknown event format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Sensor size. Required to range-check CSV input; for binary input it
    /// must agree with the file header when given.
    pub dims: Option<SensorDims>,
    /// Accept polarity 0 as −1.
    pub polarity01: bool,
    /// Reject timestamps that decrease.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvents {
    pub events: Vec<Event>,
    /// From the binary header or the options.
    pub dims: Option<SensorDims>,
}

pub fn parse_events<R: Read>(source: R, format: EventFormat, opts: &ParseOptions) -> Result<ParsedEvents> {
    match format {
        EventFormat::Csv => parse_csv(source, opts),
        EventFormat::Binary => parse_binary(source, opts),
    }
}

fn check_event(index: usize, ev: &Event, prev_t: Option<Micros>, dims: Option<SensorDims>, strict: bool) -> Result<()> {
    if let Some(d) = dims {
        if !d.contains(ev.x, ev.y) {
            return Err(Error::Validation {
                index,
                message: format!("coordinate ({}, {}) outside sensor {d}", ev.x, ev.y),
            });
        }
    }
    if strict {
        if let Some(prev) = prev_t {
            if ev.t < prev {
                return Err(Error::Validation {
                    index,
                    message: format!("timestamp {} precedes previous {prev}", ev.t),
                });
            }
        }
    }
    Ok(())
}

fn parse_csv<R: Read>(source: R, opts: &ParseOptions) -> Result<ParsedEvents> {
    let mut reader = BufReader::new(source);
    let mut events = Vec::new();
    let mut line = Vec::new();
    let mut offset: u64 = 0;
    loop {
        line.clear();
        let n = reader.read_until(b'\n', &mut line).map_err(|e| Error::io("reading CSV events", e))?;
        if n == 0 {
            break;
        }
        let start = offset;
        offset += n as u64;
        let mut text = &line[..];
        if let Some(stripped) = text.strip_suffix(b"\n") {
            text = stripped;
        }
        if let Some(stripped) = text.strip_suffix(b"\r") {
            text = stripped;
        }
        if text.is_empty() {
            continue;
        }
        let index = events.len();
        let ev = parse_csv_line(text, opts.polarity01).map_err(|message| match message {
            CsvLineError::Syntax(message) => Error::Parse { offset: start, message },
            CsvLineError::Polarity(raw) => {
                Error::Validation { index, message: format!("polarity {raw} is not -1 or +1") }
            }
        })?;
        check_event(index, &ev, events.last().map(|e: &Event| e.t), opts.dims, opts.strict)?;
        events.push(ev);
    }
    Ok(ParsedEvents { events, dims: opts.dims })
}

enum CsvLineError {
    Syntax(String),
    Polarity(i64),
}

fn parse_csv_line(text: &[u8], polarity01: bool) -> std::result::Result<Event, CsvLineError> {
    let text = std::str::from_utf8(text).map_err(|_| CsvLineError::Syntax("line is not valid UTF-8".into()))?;
    let mut fields = text.split(',');
    let mut next =
        |name: &str| fields.next().map(str::trim).ok_or_else(|| CsvLineError::Syntax(format!("missing field {name}")));
    let t = next("t")?;
    let x = next("x")?;
    let y = next("y")?;
    let p = next("p")?;
    if fields.next().is_some() {
        return Err(CsvLineError::Syntax("more than four fields".into()));
    }
    let num = |name: &str, s: &str| CsvLineError::Syntax(format!("field {name} is not a valid integer: {s:?}"));
    let t: u64 = t.parse().map_err(|_| num("t", t))?;
    let x: u16 = x.parse().map_err(|_| num("x", x))?;
    let y: u16 = y.parse().map_err(|_| num("y", y))?;
    let raw_p: i64 = p.parse().map_err(|_| num("p", p))?;
    let p = Polarity::decode(raw_p, polarity01).ok_or(CsvLineError::Polarity(raw_p))?;
    Ok(Event { t, x, y, p })
}

fn parse_binary<R: Read>(source: R, opts: &ParseOptions) -> Result<ParsedEvents> {
    let mut reader = BufReader::new(source);
    let mut header = [0u8; BINARY_HEADER_LEN];
    let got = read_full(&mut reader, &mut header)?;
    if got == 0 {
        // An empty file carries no events and no header.
        return Ok(ParsedEvents { events: Vec::new(), dims: opts.dims });
    }
    if got < BINARY_HEADER_LEN {
        return Err(Error::Parse {
            offset: 0,
            message: format!("truncated header ({got} of {BINARY_HEADER_LEN} bytes)"),
        });
    }
    if &header[..4] != BINARY_MAGIC {
        return Err(Error::Parse { offset: 0, message: "bad magic, expected EVW1".into() });
    }
    let width = u16::from_le_bytes([header[4], header[5]]) as usize;
    let height = u16::from_le_bytes([header[6], header[7]]) as usize;
    let dims = SensorDims::new(width, height);
    if let Some(expected) = opts.dims {
        if expected != dims {
            return Err(Error::dim(format!("file header declares {dims}, configured sensor is {expected}")));
        }
    }

    let mut events = Vec::new();
    let mut rec = [0u8; BINARY_RECORD_LEN];
    let mut offset = BINARY_HEADER_LEN as u64;
    loop {
        let got = read_full(&mut reader, &mut rec)?;
        if got == 0 {
            break;
        }
        if got < BINARY_RECORD_LEN {
            return Err(Error::Parse {
                offset,
                message: format!("truncated record ({got} of {BINARY_RECORD_LEN} bytes)"),
            });
        }
        if rec[13..16] != [0, 0, 0] {
            return Err(Error::Parse { offset, message: "non-zero padding bytes".into() });
        }
        let index = events.len();
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let raw_p = rec[12] as i8 as i64;
        let p = Polarity::decode(raw_p, opts.polarity01)
            .ok_or_else(|| Error::Validation { index, message: format!("polarity {raw_p} is not -1 or +1") })?;
        let ev = Event { t, x, y, p };
        check_event(index, &ev, events.last().map(|e: &Event| e.t), Some(dims), opts.strict)?;
        events.push(ev);
        offset += BINARY_RECORD_LEN as u64;
    }
    Ok(ParsedEvents { events, dims: Some(dims) })
}

/// Reads until `buf` is full or EOF; returns the byte count.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("reading binary events", e)),
        }
    }
    Ok(filled)
}

pub fn write_binary<W: Write>(mut sink: W, dims: SensorDims, events: &[Event]) -> Result<()> {
    let (w, h) = (
        u16::try_from(dims.width).map_err(|_| Error::dim("width exceeds u16"))?,
        u16::try_from(dims.height).map_err(|_| Error::dim("height exceeds u16"))?,
    );
    let wrap = |e| Error::io("writing binary events", e);
    let mut header = [0u8; BINARY_HEADER_LEN];
    header[..4].copy_from_slice(BINARY_MAGIC);
    header[4..6].copy_from_slice(&w.to_le_bytes());
    header[6..8].copy_from_slice(&h.to_le_bytes());
    sink.write_all(&header).map_err(wrap)?;
    let mut rec = [0u8; BINARY_RECORD_LEN];
    for ev in events {
        rec[0..8].copy_from_slice(&ev.t.to_le_bytes());
        rec[8..10].copy_from_slice(&ev.x.to_le_bytes());
        rec[10..12].copy_from_slice(&ev.y.to_le_bytes());
        rec[12] = ev.p.sign() as i8 as u8;
        sink.write_all(&rec).map_err(wrap)?;
    }
    sink.flush().map_err(wrap)
}

pub fn write_csv<W: Write>(mut sink: W, events: &[Event]) -> Result<()> {
    let wrap = |e| Error::io("writing CSV events", e);
    for ev in events {
        writeln!(sink, "{},{},{},{}", ev.t, ev.x, ev.y, ev.p.sign()).map_err(wrap)?;
    }
    sink.flush().map_err(wrap)
}

/// Events falling in the half-open interval `[t_start, t_end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    pub events: Vec<Event>,
    pub t_start: Micros,
    pub t_end: Micros,
    pub dims: SensorDims,
}

impl EventWindow {
    pub fn duration(&self) -> Micros {
        self.t_end - self.t_start
    }
}

/// Index of the first event whose timestamp is smaller than its predecessor's.
pub fn first_inversion(events: &[Event]) -> Option<usize> {
    events.windows(2).position(|pair| pair[1].t < pair[0].t).map(|i| i + 1)
}

/// Tiles `[t_first, t_last]` with windows `[t_first + i·dt, t_first + (i+1)·dt)`.
/// Empty windows between events are emitted; the trailing partial window is kept.
pub fn slice_windows(events: &[Event], dt: Micros, dims: SensorDims) -> Result<Vec<EventWindow>> {
    if dt == 0 {
        return Err(Error::param("window duration must be > 0"));
    }
    if let Some(index) = first_inversion(events) {
        return Err(Error::Unsorted { index });
    }
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return Ok(Vec::new());
    };
    let count = (last.t - first.t) / dt + 1;
    slice_sorted(events, dt, dims, first.t, count as usize)
}

/// Like [`slice_windows`] but over an explicit range of `count` windows
/// starting at `origin`. Every event must fall inside the range.
pub fn slice_windows_from(
    events: &[Event],
    dt: Micros,
    dims: SensorDims,
    origin: Micros,
    count: usize,
) -> Result<Vec<EventWindow>> {
    if dt == 0 {
        return Err(Error::param("window duration must be > 0"));
    }
    if let Some(index) = first_inversion(events) {
        return Err(Error::Unsorted { index });
    }
    let end = origin + dt * count as u64;
    if let Some(pos) = events.iter().position(|e| e.t < origin || e.t >= end) {
        return Err(Error::Validation {
            index: pos,
            message: format!("timestamp {} outside window range [{origin}, {end})", events[pos].t),
        });
    }
    slice_sorted(events, dt, dims, origin, count)
}

fn slice_sorted(
    events: &[Event],
    dt: Micros,
    dims: SensorDims,
    origin: Micros,
    count: usize,
) -> Result<Vec<EventWindow>> {
    let mut windows = Vec::with_capacity(count);
    let mut cursor = 0;
    for i in 0..count as u64 {
        let t_start = origin + i * dt;
        let t_end = t_start + dt;
        let len = events[cursor..].partition_point(|e| e.t < t_end);
        windows.push(EventWindow { events: events[cursor..cursor + len].to_vec(), t_start, t_end, dims });
        cursor += len;
    }
    debug_assert_eq!(cursor, events.len());
    Ok(windows)
}

/// Per-pixel signed sum of polarities over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarityMatrix {
    pub values: Grid<i32>,
}

impl PolarityMatrix {
    pub fn dims(&self) -> SensorDims {
        SensorDims::new(self.values.width(), self.values.height())
    }

    pub fn total(&self) -> i64 {
        self.values.as_slice().iter().map(|&v| v as i64).sum()
    }
}

pub fn polarity_matrix(window: &EventWindow) -> Result<PolarityMatrix> {
    let dims = window.dims;
    let mut values = Grid::<i32>::new(dims.width, dims.height);
    for (index, ev) in window.events.iter().enumerate() {
        if !dims.contains(ev.x, ev.y) {
            return Err(Error::Validation {
                index,
                message: format!("coordinate ({}, {}) outside sensor {dims}", ev.x, ev.y),
            });
        }
        *values.get_mut(ev.x as usize, ev.y as usize) += ev.p.sign();
    }
    Ok(PolarityMatrix { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str, opts: ParseOptions) -> Result<Vec<Event>> {
        parse_events(text.as_bytes(), EventFormat::Csv, &opts).map(|p| p.events)
    }

    fn ev(t: u64, x: u16, y: u16, p: i32) -> Event {
        let p = if p > 0 { Polarity::On } else { Polarity::Off };
        Event::new(t, x, y, p)
    }

    #[test]
    fn csv_field_mapping() {
        let events = csv("1000,5,7,1\n", ParseOptions::default()).unwrap();
        assert_eq!(events, vec![ev(1000, 5, 7, 1)]);
    }

    #[test]
    fn csv_zero_polarity_needs_flag() {
        let opts = ParseOptions { polarity01: true, ..Default::default() };
        assert_eq!(csv("1000,5,7,0\n", opts).unwrap()[0].p, Polarity::Off);
        assert!(matches!(csv("1000,5,7,0\n", ParseOptions::default()), Err(Error::Validation { index: 0, .. })));
        assert!(matches!(csv("1000,5,7,2\n", opts), Err(Error::Validation { .. })));
    }

    #[test]
    fn csv_empty_file() {
        assert!(csv("", ParseOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn csv_parse_error_reports_line_offset() {
        let err = csv("1,0,0,1\n2,0,zz,1\n", ParseOptions::default()).unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(csv("1,0,0\n", ParseOptions::default()), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn csv_accepts_crlf_and_missing_final_newline() {
        let events = csv("1,0,0,1\r\n2,1,1,-1", ParseOptions::default()).unwrap();
        assert_eq!(events, vec![ev(1, 0, 0, 1), ev(2, 1, 1, -1)]);
    }

    #[test]
    fn coordinate_out_of_range() {
        let opts = ParseOptions { dims: Some(SensorDims::new(4, 4)), ..Default::default() };
        assert!(matches!(csv("1,0,0,1\n2,4,0,1\n", opts), Err(Error::Validation { index: 1, .. })));
    }

    #[test]
    fn strict_rejects_decreasing_time() {
        let text = "5,0,0,1\n3,0,0,1\n";
        assert_eq!(csv(text, ParseOptions::default()).unwrap().len(), 2);
        let strict = ParseOptions { strict: true, ..Default::default() };
        assert!(matches!(csv(text, strict), Err(Error::Validation { index: 1, .. })));
    }

    #[test]
    fn binary_round_trip_and_errors() {
        let dims = SensorDims::new(8, 6);
        let events = vec![ev(0, 1, 2, 1), ev(7, 7, 5, -1), ev(u64::MAX, 0, 0, 1)];
        let mut bytes = Vec::new();
        write_binary(&mut bytes, dims, &events).unwrap();
        assert_eq!(bytes.len(), BINARY_HEADER_LEN + 3 * BINARY_RECORD_LEN);
        assert_eq!(&bytes[..4], b"EVW1");

        let parsed = parse_events(&bytes[..], EventFormat::Binary, &ParseOptions::default()).unwrap();
        assert_eq!(parsed.events, events);
        assert_eq!(parsed.dims, Some(dims));

        let mut padded = bytes.clone();
        padded[BINARY_HEADER_LEN + 14] = 1;
        assert!(matches!(
            parse_events(&padded[..], EventFormat::Binary, &ParseOptions::default()),
            Err(Error::Parse { offset: 8, .. })
        ));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(
            parse_events(truncated, EventFormat::Binary, &ParseOptions::default()),
            Err(Error::Parse { offset: 40, .. })
        ));

        let mut bad_p = bytes.clone();
        bad_p[BINARY_HEADER_LEN + 12] = 3;
        assert!(matches!(
            parse_events(&bad_p[..], EventFormat::Binary, &ParseOptions::default()),
            Err(Error::Validation { index: 0, .. })
        ));

        let mismatch = ParseOptions { dims: Some(SensorDims::new(9, 6)), ..Default::default() };
        assert!(matches!(parse_events(&bytes[..], EventFormat::Binary, &mismatch), Err(Error::Dimension(_))));
    }

    #[test]
    fn windows_half_open() {
        let dims = SensorDims::new(2, 2);
        let events = vec![ev(0, 0, 0, 1), ev(5, 0, 0, 1), ev(10, 0, 0, 1)];
        let w = slice_windows(&events, 10, dims).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].t_start, w[0].t_end), (0, 10));
        assert_eq!(w[0].events.iter().map(|e| e.t).collect::<Vec<_>>(), [0, 5]);
        assert_eq!((w[1].t_start, w[1].t_end), (10, 20));
        assert_eq!(w[1].events.iter().map(|e| e.t).collect::<Vec<_>>(), [10]);
    }

    #[test]
    fn windows_edge_cases() {
        let dims = SensorDims::new(2, 2);
        assert!(slice_windows(&[], 10, dims).unwrap().is_empty());
        let single = slice_windows(&[ev(123, 1, 1, -1)], 7, dims).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].events.len(), 1);
        assert!(slice_windows(&[ev(0, 0, 0, 1)], 0, dims).is_err());

        let unsorted = [ev(0, 0, 0, 1), ev(9, 0, 0, 1), ev(4, 0, 0, 1)];
        assert!(matches!(slice_windows(&unsorted, 5, dims), Err(Error::Unsorted { index: 2 })));
    }

    #[test]
    fn windows_gaps_are_emitted_empty() {
        let dims = SensorDims::new(1, 1);
        let w = slice_windows(&[ev(0, 0, 0, 1), ev(35, 0, 0, 1)], 10, dims).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w[1].events.is_empty() && w[2].events.is_empty());
        assert_eq!(w[3].events.len(), 1);
    }

    #[test]
    fn windows_from_origin() {
        let dims = SensorDims::new(1, 1);
        let w = slice_windows_from(&[ev(15, 0, 0, 1)], 10, dims, 0, 3).unwrap();
        assert_eq!(w.iter().map(|w| w.events.len()).collect::<Vec<_>>(), [0, 1, 0]);
        assert!(slice_windows_from(&[ev(30, 0, 0, 1)], 10, dims, 0, 3).is_err());
    }

    #[test]
    fn polarity_sums() {
        let dims = SensorDims::new(3, 3);
        let win = |events| EventWindow { events, t_start: 0, t_end: 10, dims };
        let m = polarity_matrix(&win(vec![ev(0, 0, 0, 1), ev(1, 0, 0, -1)])).unwrap();
        assert_eq!(*m.values.get(0, 0), 0);
        let m = polarity_matrix(&win(vec![ev(0, 1, 2, 1), ev(1, 1, 2, 1)])).unwrap();
        assert_eq!(*m.values.get(1, 2), 2);
        let m = polarity_matrix(&win(vec![])).unwrap();
        assert!(m.values.as_slice().iter().all(|&v| v == 0));
        assert!(polarity_matrix(&win(vec![ev(0, 3, 0, 1)])).is_err());
    }

    #[test]
    fn dims_from_str() {
        assert_eq!("640x480".parse::<SensorDims>().unwrap(), SensorDims::new(640, 480));
        assert!("640".parse::<SensorDims>().is_err());
        assert!("0x4".parse::<SensorDims>().is_err());
    }
}
