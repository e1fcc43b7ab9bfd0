//! Parsing of directed, timestamped communication logs.
//!
//! Two input shapes are accepted: whitespace separated `sender receiver seconds`
//! triples (the SNAP temporal edge list layout) and CSV files with a
//! `sender,receiver,timestamp` header. Files ending in `.gz` are decompressed
//! transparently.
//!
//! The resulting [`EventLog`] is immutable. Events are sorted by timestamp, ties
//! keep input order, and every unordered entity pair is indexed so that
//! [`EventLog::pair_sequence`] does not scan the whole log.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// Opaque entity identifier as it appears in the input.
///
/// Identifiers that parse as integers order numerically (so `9 < 10`) and sort
/// before non-numeric identifiers, which order lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<i128> {
        self.0.parse().ok()
    }
}

impl Ord for EntityId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for EntityId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Hash and Eq agree with `str`; only used for hash-map lookups.
impl std::borrow::Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

impl From<u64> for EntityId {
    fn from(v: u64) -> Self {
        EntityId(v.to_string())
    }
}

/// Dense handle into [`EventLog::entities`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityHandle(pub u32);

/// One directed communication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub sender: EntityHandle,
    pub receiver: EntityHandle,
    /// Seconds since epoch.
    pub timestamp: f64,
}

impl Event {
    pub fn is_self_loop(&self) -> bool {
        self.sender == self.receiver
    }
}

/// Direction of an event relative to the first entity of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// a → b
    Outgoing,
    /// b → a
    Incoming,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
        }
    }

    /// `+1` for outgoing, `-1` for incoming.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Outgoing => 1.0,
            Direction::Incoming => -1.0,
        }
    }
}

/// Ordered pair of entities; "outgoing" always means `a → b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub a: EntityId,
    pub b: EntityId,
}

impl Pair {
    pub fn new(a: impl Into<EntityId>, b: impl Into<EntityId>) -> Self {
        Pair {
            a: a.into(),
            b: b.into(),
        }
    }

    pub fn flipped(&self) -> Pair {
        Pair {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// Orientation with the smaller entity first.
    pub fn canonical(&self) -> Pair {
        if self.a <= self.b {
            self.clone()
        } else {
            self.flipped()
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

impl FromStr for Pair {
    type Err = EngineError;

    /// Parses `a,b`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',').map(str::trim);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => Ok(Pair::new(a, b)),
            _ => Err(EngineError::InvalidParameter(format!(
                "pair must be given as `a,b`, got `{s}`"
            ))),
        }
    }
}

/// Message counts of one unordered pair, oriented `a < b`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    /// Messages a → b.
    pub ab: usize,
    /// Messages b → a.
    pub ba: usize,
}

impl PairCounts {
    pub fn total(&self) -> usize {
        self.ab + self.ba
    }
}

/// Row of [`EventLog::list_pairs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair: Pair,
    pub count_ab: usize,
    pub count_ba: usize,
}

impl PairSummary {
    pub fn total(&self) -> usize {
        self.count_ab + self.count_ba
    }
}

/// Merged, direction-tagged events between two entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSequence {
    pub pair: Pair,
    /// Sorted by timestamp; ties keep log order.
    pub events: Vec<(f64, Direction)>,
}

impl PairSequence {
    pub fn new(pair: Pair, mut events: Vec<(f64, Direction)>) -> Self {
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        PairSequence { pair, events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn timestamps(&self, direction: Direction) -> Vec<f64> {
        self.events
            .iter()
            .filter(|(_, d)| *d == direction)
            .map(|(t, _)| *t)
            .collect()
    }

    /// `(min, max)` timestamp, `None` when empty.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.events.first()?.0, self.events.last()?.0))
    }

    /// Same events seen from `b`.
    pub fn flipped(&self) -> PairSequence {
        PairSequence {
            pair: self.pair.flipped(),
            events: self.events.iter().map(|&(t, d)| (t, d.flip())).collect(),
        }
    }

    /// Shifts every timestamp by `delta` seconds.
    pub fn shifted(&self, delta: f64) -> PairSequence {
        PairSequence {
            pair: self.pair.clone(),
            events: self.events.iter().map(|&(t, d)| (t + delta, d)).collect(),
        }
    }
}

/// Input layout accepted by [`parse_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `sender receiver seconds` per line; `#` and `%` start comment lines.
    #[default]
    Whitespace,
    /// CSV with a header naming `sender`, `receiver` and `timestamp` columns.
    Csv,
}

impl InputFormat {
    /// CSV for `.csv`/`.csv.gz` paths, whitespace triples otherwise.
    pub fn from_path(path: &Path) -> InputFormat {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".csv") {
            InputFormat::Csv
        } else {
            InputFormat::Whitespace
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    pub format: InputFormat,
    /// Abort on the first malformed record instead of skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Diagnostics emitted alongside a parsed log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub lines: usize,
    pub comment_lines: usize,
    pub records: usize,
    pub self_loops: usize,
    pub skipped: usize,
    pub skipped_lines: Vec<SkippedLine>,
    /// Distinct identifiers seen as sender or receiver.
    pub entities: usize,
    /// Entities taking part in at least one non-self-loop message.
    pub paired_entities: usize,
    /// Distinct ordered (sender, receiver) combinations, self-loops included.
    pub distinct_directed_edges: usize,
    /// Distinct unordered pairs, self-loops excluded.
    pub distinct_pairs: usize,
    pub first_timestamp: Option<f64>,
    pub last_timestamp: Option<f64>,
    pub span_seconds: f64,
    /// Whole days between the first and last event.
    pub span_days: u64,
}

impl fmt::Display for ParseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lines: {}", self.lines)?;
        writeln!(f, "comment lines: {}", self.comment_lines)?;
        writeln!(f, "records: {}", self.records)?;
        writeln!(f, "self-loops: {}", self.self_loops)?;
        writeln!(f, "skipped: {}", self.skipped)?;
        for s in &self.skipped_lines {
            writeln!(f, "  line {}: {}", s.line, s.reason)?;
        }
        writeln!(f, "entities: {}", self.entities)?;
        writeln!(f, "paired entities: {}", self.paired_entities)?;
        writeln!(
            f,
            "distinct directed edges: {}",
            self.distinct_directed_edges
        )?;
        writeln!(f, "distinct pairs: {}", self.distinct_pairs)?;
        write!(f, "span: {} s ({} days)", self.span_seconds, self.span_days)
    }
}

/// Only the first few skipped lines are kept verbatim in the report.
const MAX_REPORTED_SKIPS: usize = 100;

/// Immutable, time-sorted communication log.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    events: Vec<Event>,
    entities: Vec<EntityId>,
    entity_index: HashMap<EntityId, EntityHandle>,
    /// Keyed by (smaller, larger) handle in [`EntityId`] order.
    pair_index: HashMap<(EntityHandle, EntityHandle), PairCounts>,
    pair_events: HashMap<(EntityHandle, EntityHandle), Vec<u32>>,
    self_loops: usize,
}

#[derive(Default)]
struct LogBuilder {
    raw: Vec<Event>,
    entities: Vec<EntityId>,
    entity_index: HashMap<EntityId, EntityHandle>,
}

impl LogBuilder {
    fn intern(&mut self, id: &str) -> EntityHandle {
        if let Some(&h) = self.entity_index.get(id) {
            return h;
        }
        let h = EntityHandle(self.entities.len() as u32);
        let id = EntityId::new(id);
        self.entities.push(id.clone());
        self.entity_index.insert(id, h);
        h
    }

    fn push(&mut self, sender: &str, receiver: &str, timestamp: f64) {
        let sender = self.intern(sender);
        let receiver = self.intern(receiver);
        self.raw.push(Event {
            sender,
            receiver,
            timestamp,
        });
    }

    fn finish(self) -> EventLog {
        let LogBuilder {
            mut raw,
            entities,
            entity_index,
        } = self;
        // stable: ties keep input order
        raw.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));

        let mut pair_index: HashMap<(EntityHandle, EntityHandle), PairCounts> = HashMap::new();
        let mut pair_events: HashMap<(EntityHandle, EntityHandle), Vec<u32>> = HashMap::new();
        let mut self_loops = 0;
        for (i, e) in raw.iter().enumerate() {
            if e.is_self_loop() {
                self_loops += 1;
                continue;
            }
            let forward = entities[e.sender.0 as usize] < entities[e.receiver.0 as usize];
            let key = if forward {
                (e.sender, e.receiver)
            } else {
                (e.receiver, e.sender)
            };
            let counts = pair_index.entry(key).or_default();
            if forward {
                counts.ab += 1;
            } else {
                counts.ba += 1;
            }
            pair_events.entry(key).or_default().push(i as u32);
        }
        EventLog {
            events: raw,
            entities,
            entity_index,
            pair_index,
            pair_events,
            self_loops,
        }
    }
}

impl EventLog {
    /// Builds a log from `(sender, receiver, timestamp)` triples.
    pub fn from_triples<S: AsRef<str>>(
        triples: impl IntoIterator<Item = (S, S, f64)>,
    ) -> Result<Self> {
        let mut builder = LogBuilder::default();
        for (i, (s, r, t)) in triples.into_iter().enumerate() {
            if !t.is_finite() {
                return Err(EngineError::Parse {
                    line: i + 1,
                    reason: format!("timestamp {t} is not finite"),
                });
            }
            builder.push(s.as_ref(), r.as_ref(), t);
        }
        Ok(builder.finish())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn entity(&self, handle: EntityHandle) -> &EntityId {
        &self.entities[handle.0 as usize]
    }

    pub fn handle(&self, id: &EntityId) -> Option<EntityHandle> {
        self.entity_index.get(id).copied()
    }

    pub fn self_loop_count(&self) -> usize {
        self.self_loops
    }

    /// Message counts for the unordered pair, oriented as `(a → b, b → a)`.
    pub fn pair_counts(&self, a: &EntityId, b: &EntityId) -> PairCounts {
        let (Some(ha), Some(hb)) = (self.handle(a), self.handle(b)) else {
            return PairCounts::default();
        };
        if a <= b {
            self.pair_index.get(&(ha, hb)).copied().unwrap_or_default()
        } else {
            let c = self.pair_index.get(&(hb, ha)).copied().unwrap_or_default();
            PairCounts { ab: c.ba, ba: c.ab }
        }
    }

    /// Events between `a` and `b`, tagged outgoing for `a → b`.
    pub fn pair_sequence(&self, a: &EntityId, b: &EntityId) -> Result<PairSequence> {
        if a == b {
            return Err(EngineError::InvalidPair(a.to_string()));
        }
        let pair = Pair::new(a.clone(), b.clone());
        let (Some(ha), Some(hb)) = (self.handle(a), self.handle(b)) else {
            return Ok(PairSequence {
                pair,
                events: Vec::new(),
            });
        };
        let key = if a < b { (ha, hb) } else { (hb, ha) };
        let events = self
            .pair_events
            .get(&key)
            .map(|idx| {
                idx.iter()
                    .map(|&i| {
                        let e = &self.events[i as usize];
                        let dir = if e.sender == ha {
                            Direction::Outgoing
                        } else {
                            Direction::Incoming
                        };
                        (e.timestamp, dir)
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(PairSequence { pair, events })
    }

    /// Unordered pairs with at least `min_messages` messages, busiest first;
    /// ties broken by pair id.
    pub fn list_pairs(&self, min_messages: usize) -> Vec<PairSummary> {
        let mut out: Vec<PairSummary> = self
            .pair_index
            .iter()
            .filter(|(_, c)| c.total() >= min_messages.max(1))
            .map(|(&(a, b), c)| PairSummary {
                pair: Pair::new(self.entity(a).clone(), self.entity(b).clone()),
                count_ab: c.ab,
                count_ba: c.ba,
            })
            .collect();
        out.sort_by(|x, y| y.total().cmp(&x.total()).then_with(|| x.pair.cmp(&y.pair)));
        out
    }

    /// `(first, last)` timestamp.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((
            self.events.first()?.timestamp,
            self.events.last()?.timestamp,
        ))
    }

    /// Writes the log as whitespace triples, one event per line.
    pub fn write_triples<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            writeln!(
                out,
                "{} {} {}",
                self.entity(e.sender),
                self.entity(e.receiver),
                e.timestamp
            )?;
        }
        Ok(())
    }

    fn summarize(&self, report: &mut ParseReport) {
        report.records = self.events.len();
        report.self_loops = self.self_loops;
        report.entities = self.entities.len();
        let mut paired = HashSet::new();
        for &(a, b) in self.pair_index.keys() {
            paired.insert(a);
            paired.insert(b);
        }
        report.paired_entities = paired.len();
        report.distinct_directed_edges = self
            .events
            .iter()
            .map(|e| (e.sender, e.receiver))
            .collect::<HashSet<_>>()
            .len();
        report.distinct_pairs = self.pair_index.len();
        if let Some((first, last)) = self.span() {
            report.first_timestamp = Some(first);
            report.last_timestamp = Some(last);
            report.span_seconds = last - first;
            report.span_days = ((last - first) / 86_400.0).floor() as u64;
        }
    }
}

fn record_skip(report: &mut ParseReport, strict: bool, line: usize, reason: String) -> Result<()> {
    if strict {
        return Err(EngineError::Parse { line, reason });
    }
    report.skipped += 1;
    if report.skipped_lines.len() < MAX_REPORTED_SKIPS {
        report.skipped_lines.push(SkippedLine { line, reason });
    }
    Ok(())
}

fn parse_timestamp(field: &str) -> std::result::Result<f64, String> {
    let t: f64 = field
        .parse()
        .map_err(|_| format!("malformed timestamp `{field}`"))?;
    if t.is_finite() {
        Ok(t)
    } else {
        Err(format!("timestamp `{field}` is not finite"))
    }
}

/// Parses a communication log from a reader.
pub fn parse_events<R: Read>(input: R, options: ParseOptions) -> Result<(EventLog, ParseReport)> {
    let mut report = ParseReport::default();
    let mut builder = LogBuilder::default();
    match options.format {
        InputFormat::Whitespace => {
            parse_whitespace(input, options.strict, &mut builder, &mut report)?
        }
        InputFormat::Csv => parse_csv(input, options.strict, &mut builder, &mut report)?,
    }
    let log = builder.finish();
    log.summarize(&mut report);
    Ok((log, report))
}

/// Parses a file, decompressing it when the name ends in `.gz`.
pub fn read_events(path: &Path, options: ParseOptions) -> Result<(EventLog, ParseReport)> {
    let file = File::open(path).map_err(|e| {
        EngineError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let gz = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("gz"));
    if gz {
        parse_events(
            BufReader::new(MultiGzDecoder::new(BufReader::new(file))),
            options,
        )
    } else {
        parse_events(BufReader::new(file), options)
    }
}

fn parse_whitespace<R: Read>(
    input: R,
    strict: bool,
    builder: &mut LogBuilder,
    report: &mut ParseReport,
) -> Result<()> {
    let reader = BufReader::new(input);
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        report.lines = lineno;
        let line = match line {
            Ok(l) => l,
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                record_skip(report, strict, lineno, "line is not valid UTF-8".into())?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            report.comment_lines += 1;
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            record_skip(
                report,
                strict,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            )?;
            continue;
        }
        match parse_timestamp(fields[2]) {
            Ok(t) => builder.push(fields[0], fields[1], t),
            Err(reason) => record_skip(report, strict, lineno, reason)?,
        }
    }
    Ok(())
}

fn parse_csv<R: Read>(
    input: R,
    strict: bool,
    builder: &mut LogBuilder,
    report: &mut ParseReport,
) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(());
    }
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(si), Some(ri), Some(ti)) =
        (column("sender"), column("receiver"), column("timestamp"))
    else {
        return Err(EngineError::Parse {
            line: 1,
            reason: "CSV header must contain sender, receiver and timestamp columns".into(),
        });
    };
    report.lines = 1;
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(report.lines + 1);
                report.lines = report.lines.max(line);
                record_skip(report, strict, line, e.to_string())?;
                continue;
            }
        };
        let lineno = record.position().map(|p| p.line() as usize).unwrap_or(0);
        report.lines = report.lines.max(lineno);
        if record.len() != headers.len() {
            record_skip(
                report,
                strict,
                lineno,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            )?;
            continue;
        }
        match parse_timestamp(&record[ti]) {
            Ok(t) => builder.push(&record[si], &record[ri], t),
            Err(reason) => record_skip(report, strict, lineno, reason)?,
        }
    }
    Ok(())
}
