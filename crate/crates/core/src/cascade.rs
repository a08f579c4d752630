//! Per-item cascades of page creations and the dataset file formats.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ids::{Edition, ItemId, UnixSeconds};
use crate::ingest::{PageCreationRecord, TopicScores};

/// One page creation inside a cascade.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub created_at: UnixSeconds,
    pub edition: Edition,
}

impl Event {
    pub fn new(edition: Edition, created_at: UnixSeconds) -> Self {
        Self { created_at, edition }
    }
}

/// Name of a violated cascade or dataset invariant.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invariant violated: {0}")]
pub struct InvariantError(pub &'static str);

pub const INV_NONEMPTY: &str = "cascade has at least one event";
pub const INV_ORDERED: &str = "events ordered by (created_at, edition)";
pub const INV_DISTINCT: &str = "distinct editions";
pub const INV_CUTOFF: &str = "event timestamps do not exceed cutoff";
pub const INV_UNIQUE_ITEMS: &str = "unique item ids";
pub const INV_TOPIC_RANGE: &str = "topic scores in [0, 1]";

/// The time-ordered page creations of one Wikidata item.
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade {
    wikidata_id: ItemId,
    events: Vec<Event>,
    topics: TopicScores,
}

impl Cascade {
    /// Build a cascade from events already in canonical order.
    pub fn new(
        wikidata_id: ItemId,
        events: Vec<Event>,
        topics: TopicScores,
    ) -> Result<Self, InvariantError> {
        if events.is_empty() {
            return Err(InvariantError(INV_NONEMPTY));
        }
        if events.windows(2).any(|w| w[0] >= w[1]) {
            // Strict ordering also rejects two identical events.
            return Err(InvariantError(INV_ORDERED));
        }
        let distinct: BTreeSet<_> = events.iter().map(|e| &e.edition).collect();
        if distinct.len() != events.len() {
            return Err(InvariantError(INV_DISTINCT));
        }
        if topics.values().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(InvariantError(INV_TOPIC_RANGE));
        }
        Ok(Self {
            wikidata_id,
            events,
            topics,
        })
    }

    /// Build a cascade from unordered events with distinct editions.
    pub fn from_unsorted(
        wikidata_id: ItemId,
        mut events: Vec<Event>,
        topics: TopicScores,
    ) -> Result<Self, InvariantError> {
        events.sort();
        Self::new(wikidata_id, events, topics)
    }

    pub fn wikidata_id(&self) -> ItemId {
        self.wikidata_id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn topics(&self) -> &TopicScores {
        &self.topics
    }

    /// Propagation length: the number of editions reached.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start_time(&self) -> UnixSeconds {
        self.events[0].created_at
    }

    pub fn last_time(&self) -> UnixSeconds {
        self.events[self.events.len() - 1].created_at
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CascadeError {
    #[error("record {item}/{edition} created at {created_at} exceeds cutoff {cutoff}")]
    CutoffViolation {
        item: ItemId,
        edition: Edition,
        created_at: UnixSeconds,
        cutoff: UnixSeconds,
    },
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// All cascades of a corpus plus the edition → items index.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeDataset {
    cascades: BTreeMap<ItemId, Cascade>,
    edition_index: BTreeMap<Edition, BTreeSet<ItemId>>,
    cutoff: UnixSeconds,
}

impl CascadeDataset {
    pub fn from_cascades(
        cascades: impl IntoIterator<Item = Cascade>,
        cutoff: UnixSeconds,
    ) -> Result<Self, InvariantError> {
        let mut map = BTreeMap::new();
        for cascade in cascades {
            if cascade.last_time() > cutoff {
                return Err(InvariantError(INV_CUTOFF));
            }
            if map.insert(cascade.wikidata_id, cascade).is_some() {
                return Err(InvariantError(INV_UNIQUE_ITEMS));
            }
        }
        let mut edition_index: BTreeMap<Edition, BTreeSet<ItemId>> = BTreeMap::new();
        for cascade in map.values() {
            for event in &cascade.events {
                edition_index
                    .entry(event.edition.clone())
                    .or_default()
                    .insert(cascade.wikidata_id);
            }
        }
        Ok(Self {
            cascades: map,
            edition_index,
            cutoff,
        })
    }

    pub fn cutoff(&self) -> UnixSeconds {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.cascades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cascades.is_empty()
    }

    pub fn get(&self, id: ItemId) -> Option<&Cascade> {
        self.cascades.get(&id)
    }

    /// Cascades in ascending item-number order.
    pub fn cascades(&self) -> impl ExactSizeIterator<Item = &Cascade> + Clone {
        self.cascades.values()
    }

    pub fn edition_index(&self) -> &BTreeMap<Edition, BTreeSet<ItemId>> {
        &self.edition_index
    }

    pub fn editions(&self) -> impl ExactSizeIterator<Item = &Edition> {
        self.edition_index.keys()
    }

    pub fn items_of(&self, edition: &Edition) -> Option<&BTreeSet<ItemId>> {
        self.edition_index.get(edition)
    }

    /// Number of items an edition covers within the dataset.
    pub fn edition_size(&self, edition: &Edition) -> usize {
        self.items_of(edition).map_or(0, BTreeSet::len)
    }
}

#[derive(Default)]
struct ItemAccumulator {
    earliest: HashMap<Edition, UnixSeconds>,
    topics: TopicScores,
}

/// Incremental grouping of accepted records into cascades.
///
/// Builders over disjoint or overlapping record shards merge with
/// [`CascadeBuilder::merge`]; the result does not depend on record order.
pub struct CascadeBuilder {
    cutoff: UnixSeconds,
    items: HashMap<ItemId, ItemAccumulator>,
}

impl CascadeBuilder {
    pub fn new(cutoff: UnixSeconds) -> Self {
        Self {
            cutoff,
            items: HashMap::new(),
        }
    }

    pub fn add(&mut self, record: PageCreationRecord) -> Result<(), CascadeError> {
        if record.created_at > self.cutoff {
            return Err(CascadeError::CutoffViolation {
                item: record.wikidata_id,
                edition: record.edition,
                created_at: record.created_at,
                cutoff: self.cutoff,
            });
        }
        let acc = self.items.entry(record.wikidata_id).or_default();
        acc.earliest
            .entry(record.edition)
            .and_modify(|t| *t = (*t).min(record.created_at))
            .or_insert(record.created_at);
        merge_topics(&mut acc.topics, record.topics);
        Ok(())
    }

    pub fn merge(&mut self, other: CascadeBuilder) {
        for (id, theirs) in other.items {
            let ours = self.items.entry(id).or_default();
            for (edition, t) in theirs.earliest {
                ours.earliest
                    .entry(edition)
                    .and_modify(|cur| *cur = (*cur).min(t))
                    .or_insert(t);
            }
            merge_topics(&mut ours.topics, theirs.topics);
        }
        self.cutoff = self.cutoff.min(other.cutoff);
    }

    pub fn finish(self) -> Result<CascadeDataset, CascadeError> {
        let mut cascades = Vec::with_capacity(self.items.len());
        for (id, acc) in self.items {
            let events = acc
                .earliest
                .into_iter()
                .map(|(edition, t)| Event::new(edition, t))
                .collect();
            cascades.push(Cascade::from_unsorted(id, events, acc.topics)?);
        }
        Ok(CascadeDataset::from_cascades(cascades, self.cutoff)?)
    }
}

/// Item-level topic union; a label seen with several scores keeps the highest.
fn merge_topics(into: &mut TopicScores, from: TopicScores) {
    for (label, score) in from {
        into.entry(label)
            .and_modify(|s| *s = s.max(score))
            .or_insert(score);
    }
}

/// Group records by item into cascades observed up to `cutoff`.
pub fn build_cascades(
    records: impl IntoIterator<Item = PageCreationRecord>,
    cutoff: UnixSeconds,
) -> Result<CascadeDataset, CascadeError> {
    let mut builder = CascadeBuilder::new(cutoff);
    for record in records {
        builder.add(record)?;
    }
    builder.finish()
}

struct EditionsInOrder<'a>(&'a [Event]);

impl Serialize for EditionsInOrder<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for event in self.0 {
            map.serialize_entry(event.edition.as_str(), &event.created_at)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct CascadeRecordOut<'a> {
    wikidata_id: ItemId,
    editions: EditionsInOrder<'a>,
    topics: &'a TopicScores,
}

/// Editions object read as an ordered list so duplicate keys stay visible.
struct EditionList(Vec<(String, UnixSeconds)>);

impl<'de> Deserialize<'de> for EditionList {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ListVisitor;
        impl<'de> Visitor<'de> for ListVisitor {
            type Value = EditionList;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping edition codes to integer timestamps")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, UnixSeconds>()? {
                    out.push((k, v));
                }
                Ok(EditionList(out))
            }
        }
        deserializer.deserialize_map(ListVisitor)
    }
}

#[derive(Deserialize)]
struct CascadeRecordIn {
    wikidata_id: ItemId,
    editions: EditionList,
    #[serde(default)]
    topics: TopicScores,
}

/// One cascade as a single-line JSON object; editions keep event order.
pub fn to_json_record(cascade: &Cascade) -> String {
    serde_json::to_string(&CascadeRecordOut {
        wikidata_id: cascade.wikidata_id,
        editions: EditionsInOrder(&cascade.events),
        topics: &cascade.topics,
    })
    .expect("cascade serializes")
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RecordParseError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// Parse a cascade record, re-checking every cascade invariant.
pub fn parse_json_record(line: &str) -> Result<Cascade, RecordParseError> {
    let raw: CascadeRecordIn =
        serde_json::from_str(line).map_err(|e| RecordParseError::Schema(e.to_string()))?;
    let mut events = Vec::with_capacity(raw.editions.0.len());
    for (code, t) in raw.editions.0 {
        let edition = Edition::new(code).map_err(|e| RecordParseError::Schema(e.to_string()))?;
        events.push(Event::new(edition, t));
    }
    Ok(Cascade::new(raw.wikidata_id, events, raw.topics)?)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("invariant error at line {line}: {invariant}")]
    Invariant { line: usize, invariant: &'static str },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetHeader {
    cutoff: UnixSeconds,
}

/// Write the dataset file: a `{"cutoff": ...}` header then one record per line.
pub fn write_dataset<W: Write>(dataset: &CascadeDataset, mut out: W) -> io::Result<()> {
    let header = serde_json::to_string(&DatasetHeader {
        cutoff: dataset.cutoff,
    })?;
    writeln!(out, "{header}")?;
    for cascade in dataset.cascades() {
        writeln!(out, "{}", to_json_record(cascade))?;
    }
    out.flush()
}

pub fn save_dataset(dataset: &CascadeDataset, path: impl AsRef<Path>) -> io::Result<()> {
    write_dataset(dataset, io::BufWriter::new(File::create(path)?))
}

pub fn read_dataset<R: BufRead>(source: R) -> Result<CascadeDataset, DatasetError> {
    let mut lines = source.lines();
    let header_line = lines.next().transpose()?.ok_or(DatasetError::Schema {
        line: 1,
        message: "missing cutoff header".into(),
    })?;
    let header: DatasetHeader =
        serde_json::from_str(&header_line).map_err(|e| DatasetError::Schema {
            line: 1,
            message: format!("expected {{\"cutoff\": <integer>}} header: {e}"),
        })?;

    let mut cascades = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cascade = parse_json_record(&line).map_err(|e| match e {
            RecordParseError::Schema(message) => DatasetError::Schema {
                line: line_no,
                message,
            },
            RecordParseError::Invariant(InvariantError(invariant)) => DatasetError::Invariant {
                line: line_no,
                invariant,
            },
        })?;
        if cascade.last_time() > header.cutoff {
            return Err(DatasetError::Invariant {
                line: line_no,
                invariant: INV_CUTOFF,
            });
        }
        if cascades.insert(cascade.wikidata_id, cascade).is_some() {
            return Err(DatasetError::Invariant {
                line: line_no,
                invariant: INV_UNIQUE_ITEMS,
            });
        }
    }
    CascadeDataset::from_cascades(cascades.into_values(), header.cutoff).map_err(|e| {
        DatasetError::Invariant {
            line: 0,
            invariant: e.0,
        }
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<CascadeDataset, DatasetError> {
    read_dataset(BufReader::new(File::open(path)?))
}

fn join_topics(topics: &TopicScores) -> String {
    topics
        .iter()
        .map(|(label, score)| format!("{label}:{score}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Flat CSV export: one row per event, sorted by item number, time, edition.
pub fn write_csv<W: Write>(dataset: &CascadeDataset, out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["wikidata_id", "edition", "created_at", "topics"])?;
    for cascade in dataset.cascades() {
        let id = cascade.wikidata_id.to_string();
        let topics = join_topics(&cascade.topics);
        for event in &cascade.events {
            writer.write_record([
                id.as_str(),
                event.edition.as_str(),
                &event.created_at.to_string(),
                &topics,
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn to_csv(dataset: &CascadeDataset) -> String {
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf).expect("in-memory csv");
    String::from_utf8(buf).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn listing_records() -> Vec<PageCreationRecord> {
        let topics: TopicScores = [
            ("STEM.STEM*".to_string(), 0.96),
            ("STEM.Technology".to_string(), 0.73),
        ]
        .into();
        [
            ("ruwiki", 1544017388),
            ("enwiki", 1070560507),
            ("zh_yuewiki", 1562334127),
            ("fawiki", 1351061927),
            ("nlwiki", 1330883168),
            ("ptwiki", 1424133378),
        ]
        .into_iter()
        .map(|(e, t)| PageCreationRecord {
            edition: Edition::new(e).unwrap(),
            wikidata_id: "Q2462783".parse().unwrap(),
            created_at: t,
            creator_is_bot: false,
            topics: topics.clone(),
        })
        .collect()
    }

    fn rec(id: &str, edition: &str, t: UnixSeconds) -> PageCreationRecord {
        PageCreationRecord {
            edition: Edition::new(edition).unwrap(),
            wikidata_id: id.parse().unwrap(),
            created_at: t,
            creator_is_bot: false,
            topics: TopicScores::new(),
        }
    }

    const CUTOFF: UnixSeconds = 1_585_699_200;

    #[test]
    fn listing_cascade() {
        let ds = build_cascades(listing_records(), CUTOFF).unwrap();
        assert_eq!(ds.len(), 1);
        let c = ds.get("Q2462783".parse().unwrap()).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c.events()[0], Event::new(Edition::new("enwiki").unwrap(), 1070560507));
        assert_eq!(
            c.events()[5],
            Event::new(Edition::new("zh_yuewiki").unwrap(), 1562334127)
        );
    }

    #[test]
    fn listing_json_record() {
        let ds = build_cascades(listing_records(), CUTOFF).unwrap();
        let c = ds.cascades().next().unwrap();
        assert_eq!(
            to_json_record(c),
            r#"{"wikidata_id":"Q2462783","editions":{"enwiki":1070560507,"nlwiki":1330883168,"fawiki":1351061927,"ptwiki":1424133378,"ruwiki":1544017388,"zh_yuewiki":1562334127},"topics":{"STEM.STEM*":0.96,"STEM.Technology":0.73}}"#
        );
        assert_eq!(&parse_json_record(&to_json_record(c)).unwrap(), c);
    }

    #[test]
    fn single_record_and_duplicates() {
        let ds = build_cascades([rec("Q1", "enwiki", 1_000_000_000)], CUTOFF).unwrap();
        assert_eq!(ds.cascades().next().unwrap().len(), 1);

        let ds = build_cascades(
            [rec("Q1", "enwiki", 1_000_000_100), rec("Q1", "enwiki", 1_000_000_050)],
            CUTOFF,
        )
        .unwrap();
        let c = ds.cascades().next().unwrap();
        assert_eq!(c.events(), [Event::new(Edition::new("enwiki").unwrap(), 1_000_000_050)]);
    }

    #[test]
    fn ties_ordered_by_edition() {
        let ds = build_cascades(
            [rec("Q1", "frwiki", 1_000_000_000), rec("Q1", "dewiki", 1_000_000_000)],
            CUTOFF,
        )
        .unwrap();
        let order: Vec<_> = ds.cascades().next().unwrap().events().iter().map(|e| e.edition.as_str()).collect();
        assert_eq!(order, ["dewiki", "frwiki"]);
    }

    #[test]
    fn cutoff_violation() {
        let err = build_cascades([rec("Q1", "enwiki", CUTOFF + 1)], CUTOFF).unwrap_err();
        assert!(matches!(err, CascadeError::CutoffViolation { .. }));
    }

    #[test]
    fn topics_union_keeps_highest_score() {
        let mut a = rec("Q1", "enwiki", 1_000_000_000);
        a.topics.insert("History".into(), 0.6);
        let mut b = rec("Q1", "dewiki", 1_000_000_001);
        b.topics.insert("History".into(), 0.9);
        b.topics.insert("Geography".into(), 0.7);
        let ds = build_cascades([a, b], CUTOFF).unwrap();
        let c = ds.cascades().next().unwrap();
        assert_eq!(c.topics()["History"], 0.9);
        assert_eq!(c.topics()["Geography"], 0.7);
    }

    #[test]
    fn edition_index_is_inverse() {
        let ds = build_cascades(
            [
                rec("Q1", "enwiki", 1_000_000_000),
                rec("Q2", "enwiki", 1_000_000_000),
                rec("Q2", "dewiki", 1_000_000_500),
            ],
            CUTOFF,
        )
        .unwrap();
        let en = Edition::new("enwiki").unwrap();
        let de = Edition::new("dewiki").unwrap();
        assert_eq!(ds.edition_size(&en), 2);
        assert_eq!(ds.edition_size(&de), 1);
        assert_eq!(ds.edition_size(&Edition::new("xxwiki").unwrap()), 0);
    }

    #[test]
    fn csv_layout() {
        let mut records = listing_records();
        records.push(rec("Q10", "enwiki", 1_000_000_000));
        records.push(rec("Q9", "dewiki", 1_000_000_000));
        let ds = build_cascades(records, CUTOFF).unwrap();
        let csv = to_csv(&ds);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "wikidata_id,edition,created_at,topics");
        assert_eq!(lines[1], "Q9,dewiki,1000000000,");
        assert_eq!(lines[2], "Q10,enwiki,1000000000,");
        assert_eq!(
            lines[3],
            "Q2462783,enwiki,1070560507,STEM.STEM*:0.96;STEM.Technology:0.73"
        );
        assert_eq!(lines.len(), 9);

        let empty = CascadeDataset::from_cascades([], CUTOFF).unwrap();
        assert_eq!(to_csv(&empty), "wikidata_id,edition,created_at,topics\n");
    }

    #[test]
    fn length_one_empty_topics_record() {
        let c = Cascade::new(
            ItemId::new(3).unwrap(),
            vec![Event::new(Edition::new("enwiki").unwrap(), 1_000_000_000)],
            TopicScores::new(),
        )
        .unwrap();
        assert_eq!(
            to_json_record(&c),
            r#"{"wikidata_id":"Q3","editions":{"enwiki":1000000000},"topics":{}}"#
        );
    }

    #[test]
    fn parse_rejects_invariant_violations() {
        let dup = r#"{"wikidata_id":"Q1","editions":{"enwiki":1000000000,"enwiki":1000000001},"topics":{}}"#;
        assert_eq!(
            parse_json_record(dup),
            Err(RecordParseError::Invariant(InvariantError(INV_DISTINCT)))
        );
        let unordered = r#"{"wikidata_id":"Q1","editions":{"enwiki":1000000005,"dewiki":1000000001},"topics":{}}"#;
        assert_eq!(
            parse_json_record(unordered),
            Err(RecordParseError::Invariant(InvariantError(INV_ORDERED)))
        );
        let empty = r#"{"wikidata_id":"Q1","editions":{},"topics":{}}"#;
        assert_eq!(
            parse_json_record(empty),
            Err(RecordParseError::Invariant(InvariantError(INV_NONEMPTY)))
        );
        assert!(matches!(
            parse_json_record(r#"{"wikidata_id":"1","editions":{}}"#),
            Err(RecordParseError::Schema(_))
        ));
    }

    #[test]
    fn dataset_file_errors() {
        let err = read_dataset(&b""[..]).unwrap_err();
        assert!(matches!(err, DatasetError::Schema { line: 1, .. }));

        let no_header = r#"{"wikidata_id":"Q1","editions":{"enwiki":1000000000},"topics":{}}"#;
        let err = read_dataset(no_header.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::Schema { line: 1, .. }));

        let dup = "{\"cutoff\":1585699200}\n{\"wikidata_id\":\"Q1\",\"editions\":{\"enwiki\":1000000000,\"dewiki\":1000000001,\"enwiki\":1000000002},\"topics\":{}}\n";
        match read_dataset(dup.as_bytes()).unwrap_err() {
            DatasetError::Invariant { line, invariant } => {
                assert_eq!(line, 2);
                assert_eq!(invariant, INV_DISTINCT);
            }
            other => panic!("{other:?}"),
        }

        let late = "{\"cutoff\":1000000000}\n{\"wikidata_id\":\"Q1\",\"editions\":{\"enwiki\":1000000001},\"topics\":{}}\n";
        assert!(matches!(
            read_dataset(late.as_bytes()).unwrap_err(),
            DatasetError::Invariant { invariant: INV_CUTOFF, .. }
        ));

        let repeated = "{\"cutoff\":1585699200}\n{\"wikidata_id\":\"Q1\",\"editions\":{\"enwiki\":1000000001},\"topics\":{}}\n{\"wikidata_id\":\"Q1\",\"editions\":{\"dewiki\":1000000001},\"topics\":{}}\n";
        assert!(matches!(
            read_dataset(repeated.as_bytes()).unwrap_err(),
            DatasetError::Invariant { line: 3, invariant: INV_UNIQUE_ITEMS }
        ));
    }

    #[test]
    fn dataset_file_round_trip() {
        let mut records = listing_records();
        records.push(rec("Q7", "enwiki", 1_000_000_000));
        let ds = build_cascades(records, CUTOFF).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert!(buf.starts_with(b"{\"cutoff\":1585699200}\n"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), ds);
    }
}
