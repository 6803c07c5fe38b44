//! Timestamped contact lists and their windowed graph snapshots.
//!
//! Input lines look like `t i j [class_i class_j]`, separated by tabs or
//! spaces, with `#` starting a comment line. Timestamps are seconds (in the
//! school data, seconds since midnight).

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};
use crate::graph::AdjacencyMatrix;

pub mod surrogate;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub t: i64,
    pub i: u64,
    pub j: u64,
    pub class_i: Option<String>,
    pub class_j: Option<String>,
}

/// Named time ranges of the school study.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Period {
    /// 8:30 to 12:00 in 6-minute windows: 35 snapshots.
    Morning,
    /// 14:00 to 16:30 in 347-second windows, the last one partial: 26 snapshots.
    Afternoon,
}

impl Period {
    /// `(start, end, width)` in seconds since midnight.
    pub fn bounds(self) -> (i64, i64, i64) {
        match self {
            Period::Morning => (8 * 3600 + 30 * 60, 12 * 3600, 360),
            Period::Afternoon => (14 * 3600, 16 * 3600 + 30 * 60, 347),
        }
    }
}

/// Parses contact lines; `source` names the input in error messages.
pub fn parse_contacts<R: BufRead>(reader: R, source: &str) -> Result<Vec<ContactEvent>> {
    let mut events = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| error::io(source, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: source.to_string(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 5 {
            return Err(bad(format!(
                "expected 3 or 5 fields, found {}",
                fields.len()
            )));
        }
        let t: i64 = fields[0]
            .parse()
            .map_err(|_| bad(format!("timestamp {:?} is not an integer", fields[0])))?;
        let i: u64 = fields[1]
            .parse()
            .map_err(|_| bad(format!("node id {:?} is not an integer", fields[1])))?;
        let j: u64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("node id {:?} is not an integer", fields[2])))?;
        if t < 0 {
            return Err(bad(format!("negative timestamp {t}")));
        }
        if i == j {
            return Err(bad(format!("self-contact of node {i}")));
        }
        let (class_i, class_j) = if fields.len() == 5 {
            (Some(fields[3].to_string()), Some(fields[4].to_string()))
        } else {
            (None, None)
        };
        events.push(ContactEvent {
            t,
            i,
            j,
            class_i,
            class_j,
        });
    }
    Ok(events)
}

/// Reads a contact file; names ending in `.gz` are decompressed.
pub fn read_contacts_file(path: &Path) -> Result<Vec<ContactEvent>> {
    let file = File::open(path).map_err(|e| error::io(path, e))?;
    let name = path.display().to_string();
    if path.extension().is_some_and(|e| e == "gz") {
        parse_contacts(BufReader::new(flate2::read::GzDecoder::new(file)), &name)
    } else {
        parse_contacts(BufReader::new(file), &name)
    }
}

/// Writes events in the tab-separated input format.
pub fn write_contacts<W: Write>(mut out: W, events: &[ContactEvent]) -> std::io::Result<()> {
    for e in events {
        write!(out, "{}\t{}\t{}", e.t, e.i, e.j)?;
        if let (Some(a), Some(b)) = (&e.class_i, &e.class_j) {
            write!(out, "\t{a}\t{b}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One unweighted graph per time window over a fixed node set.
#[derive(Clone, Debug)]
pub struct SnapshotSeries {
    /// Raw id of node `k`, ascending.
    pub node_ids: Vec<u64>,
    /// Class label of node `k` if the input carried one.
    pub node_classes: Vec<Option<String>>,
    pub graphs: Vec<AdjacencyMatrix>,
    /// Half-open `[start, end)` of each window.
    pub window_bounds: Vec<(i64, i64)>,
}

impl SnapshotSeries {
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

/// Builds windows `[start + k·width, start + (k+1)·width)` covering
/// `[start, end)`, the last one possibly partial. An edge is present when
/// at least one contact falls in the window. The node set is every id seen
/// in `[start, end)`.
pub fn window_graphs(
    events: &[ContactEvent],
    start: i64,
    end: i64,
    width: i64,
) -> Result<SnapshotSeries> {
    if width <= 0 {
        return Err(Error::InvalidParameter(format!(
            "window width must be positive, got {width}"
        )));
    }
    if start >= end {
        return Err(Error::InvalidParameter(format!(
            "start {start} must precede end {end}"
        )));
    }
    let in_range: Vec<&ContactEvent> = events
        .iter()
        .filter(|e| (start..end).contains(&e.t))
        .collect();
    let mut classes: BTreeMap<u64, Option<String>> = BTreeMap::new();
    for e in &in_range {
        for (id, class) in [(e.i, &e.class_i), (e.j, &e.class_j)] {
            let slot = classes.entry(id).or_insert(None);
            if slot.is_none() {
                slot.clone_from(class);
            }
        }
    }
    let node_ids: Vec<u64> = classes.keys().copied().collect();
    let node_classes: Vec<Option<String>> = classes.into_values().collect();
    let index: BTreeMap<u64, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(k, &id)| (id, k))
        .collect();
    let n = node_ids.len();

    let windows = ((end - start) + width - 1) / width;
    let window_bounds: Vec<(i64, i64)> = (0..windows)
        .map(|k| (start + k * width, (start + (k + 1) * width).min(end)))
        .collect();
    let mut edges: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); windows as usize];
    for e in in_range {
        let w = ((e.t - start) / width) as usize;
        let (a, b) = (index[&e.i], index[&e.j]);
        edges[w].insert((a.min(b), a.max(b)));
    }
    let graphs = edges
        .into_iter()
        .map(|set| {
            let mut m = Mat::<f64>::zeros(n, n);
            for (a, b) in set {
                m[(a, b)] = 1.0;
                m[(b, a)] = 1.0;
            }
            AdjacencyMatrix::new(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnapshotSeries {
        node_ids,
        node_classes,
        graphs,
        window_bounds,
    })
}
