//! Chip graphs with calibrated qubit and edge properties.
//!
//! A [`ChipGraph`] is one chip's qubit set plus its on-chip coupling edges.
//! Graphs are validated on construction (connected, no duplicate edges, no
//! self-loops, all probabilities in `[0,1)`) and immutable afterwards, so they
//! can be shared freely across workers.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calibrated per-qubit properties. Coordinates are planar positions in μm,
/// times in ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitProperties {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub readout_error: f64,
}

/// A two-qubit gate edge between qubits `a` and `b` (unordered).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeProperties {
    pub a: u32,
    pub b: u32,
    pub gate_time_ns: f64,
    pub gate_error: f64,
}

/// Latency and error of one inter-chip coupler technology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub latency_ns: f64,
    pub error: f64,
}

impl CouplerSpec {
    pub fn new(latency_ns: f64, error: f64) -> Result<Self> {
        if !(latency_ns > 0.0) {
            return Err(Error::validation("latency_ns", "latency_ns must be > 0"));
        }
        if !(0.0..1.0).contains(&error) {
            return Err(Error::validation("error", "coupler error out of [0,1)"));
        }
        Ok(CouplerSpec { latency_ns, error })
    }
}

impl Default for CouplerSpec {
    /// CNOT over a coupler link: 3.5% error over a 235 ns operation.
    fn default() -> Self {
        CouplerSpec {
            latency_ns: 235.0,
            error: 0.035,
        }
    }
}

/// One chip: validated qubit set plus on-chip coupling edges.
#[derive(Debug, Clone)]
pub struct ChipGraph {
    name: String,
    qubits: Vec<QubitProperties>,
    edges: Vec<EdgeProperties>,
    index: HashMap<u32, usize>,
    // (neighbor position, edge index), sorted by neighbor position
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for ChipGraph {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.qubits == other.qubits && self.edges == other.edges
    }
}

impl ChipGraph {
    pub fn new(
        name: impl Into<String>,
        qubits: Vec<QubitProperties>,
        edges: Vec<EdgeProperties>,
    ) -> Result<Self> {
        let name = name.into();
        if qubits.is_empty() {
            return Err(Error::validation("qubits", "chip has no qubits"));
        }
        let mut index = HashMap::with_capacity(qubits.len());
        for (pos, q) in qubits.iter().enumerate() {
            if index.insert(q.id, pos).is_some() {
                return Err(Error::validation("id", format!("duplicate qubit id {}", q.id)));
            }
            if !(q.t1_ns > 0.0) {
                return Err(Error::validation("t1_ns", format!("t1_ns must be > 0 on qubit {}", q.id)));
            }
            if !(q.t2_ns > 0.0) {
                return Err(Error::validation("t2_ns", format!("t2_ns must be > 0 on qubit {}", q.id)));
            }
            if !(0.0..1.0).contains(&q.readout_error) {
                return Err(Error::validation(
                    "readout_error",
                    format!("readout_error out of [0,1) on qubit {}", q.id),
                ));
            }
        }
        let mut adjacency = vec![Vec::new(); qubits.len()];
        let mut seen = HashMap::new();
        for (eidx, e) in edges.iter().enumerate() {
            if e.a == e.b {
                return Err(Error::validation("endpoints", format!("self-loop on qubit {}", e.a)));
            }
            let pa = *index
                .get(&e.a)
                .ok_or_else(|| Error::validation("endpoints", format!("unknown qubit id {}", e.a)))?;
            let pb = *index
                .get(&e.b)
                .ok_or_else(|| Error::validation("endpoints", format!("unknown qubit id {}", e.b)))?;
            let key = (e.a.min(e.b), e.a.max(e.b));
            if seen.insert(key, eidx).is_some() {
                return Err(Error::validation(
                    "endpoints",
                    format!("duplicate edge ({}, {})", key.0, key.1),
                ));
            }
            if !(e.gate_time_ns > 0.0) {
                return Err(Error::validation(
                    "gate_time_ns",
                    format!("gate_time_ns must be > 0 on edge ({}, {})", e.a, e.b),
                ));
            }
            if !(0.0..1.0).contains(&e.gate_error) {
                return Err(Error::validation(
                    "gate_error",
                    format!("gate_error out of [0,1) on edge ({}, {})", e.a, e.b),
                ));
            }
            adjacency[pa].push((pb, eidx));
            adjacency[pb].push((pa, eidx));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let chip = ChipGraph {
            name,
            qubits,
            edges,
            index,
            adjacency,
        };
        if !chip.is_connected() {
            return Err(Error::Disconnected(format!("chip {} is not connected", chip.name)));
        }
        Ok(chip)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubits(&self) -> &[QubitProperties] {
        &self.qubits
    }

    pub fn edges(&self) -> &[EdgeProperties] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Position of a qubit id in the internal dense ordering.
    pub fn position(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.index.contains_key(&id)
    }

    pub fn id_at(&self, pos: usize) -> u32 {
        self.qubits[pos].id
    }

    /// Neighbors of the qubit at `pos` as `(neighbor position, edge index)`.
    pub fn neighbors(&self, pos: usize) -> &[(usize, usize)] {
        &self.adjacency[pos]
    }

    pub fn coords(&self, pos: usize) -> (f64, f64) {
        (self.qubits[pos].x, self.qubits[pos].y)
    }

    /// Euclidean distance in μm between two qubits given by id.
    pub fn phys_distance(&self, id_a: u32, id_b: u32) -> Option<f64> {
        let pa = self.position(id_a)?;
        let pb = self.position(id_b)?;
        let (xa, ya) = self.coords(pa);
        let (xb, yb) = self.coords(pb);
        Some(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt())
    }

    fn is_connected(&self) -> bool {
        let n = self.qubits.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }
}

/// All-pairs unweighted shortest-path lengths, indexed by qubit position.
pub fn hop_distances(chip: &ChipGraph) -> Vec<Vec<u32>> {
    let n = chip.len();
    let mut matrix = Vec::with_capacity(n);
    for source in 0..n {
        let mut dist = vec![u32::MAX; n];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in chip.neighbors(u) {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        matrix.push(dist);
    }
    matrix
}

/// The six canonical on-chip connectivity families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Line,
    Ring,
    Grid,
    Star,
    Complete,
    HeavyHex,
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(TopologyKind::Line),
            "ring" => Ok(TopologyKind::Ring),
            "grid" => Ok(TopologyKind::Grid),
            "star" => Ok(TopologyKind::Star),
            "complete" => Ok(TopologyKind::Complete),
            "heavy_hex" | "heavy-hex" => Ok(TopologyKind::HeavyHex),
            other => Err(Error::Parse(format!("unknown topology kind '{other}'"))),
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopologyKind::Line => "line",
            TopologyKind::Ring => "ring",
            TopologyKind::Grid => "grid",
            TopologyKind::Star => "star",
            TopologyKind::Complete => "complete",
            TopologyKind::HeavyHex => "heavy_hex",
        };
        f.write_str(s)
    }
}

/// Layout dimensions plus uniform default properties applied to every
/// generated qubit and edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyOpts {
    /// Grid / heavy-hex row count. Inferred when omitted.
    pub rows: Option<usize>,
    /// Grid column count / heavy-hex row width. Inferred when omitted.
    pub cols: Option<usize>,
    /// Lattice pitch in μm.
    pub pitch_um: f64,
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub readout_error: f64,
    pub gate_time_ns: f64,
    pub gate_error: f64,
}

impl Default for TopologyOpts {
    fn default() -> Self {
        TopologyOpts {
            rows: None,
            cols: None,
            pitch_um: 1.0,
            t1_ns: 100_000.0,
            t2_ns: 100_000.0,
            readout_error: 0.01,
            gate_time_ns: 100.0,
            gate_error: 0.01,
        }
    }
}

impl TopologyOpts {
    fn qubit(&self, id: u32, x: f64, y: f64) -> QubitProperties {
        QubitProperties {
            id,
            x: x * self.pitch_um,
            y: y * self.pitch_um,
            t1_ns: self.t1_ns,
            t2_ns: self.t2_ns,
            readout_error: self.readout_error,
        }
    }

    fn edge(&self, a: u32, b: u32) -> EdgeProperties {
        EdgeProperties {
            a,
            b,
            gate_time_ns: self.gate_time_ns,
            gate_error: self.gate_error,
        }
    }
}

/// Builds one of the canonical topology families with `n` qubits.
///
/// Heavy-hex tilings exist only for certain sizes; supported sizes include
/// 27 (2 rows × width 12) and 156 (8 rows × width 16). Pass explicit
/// `rows`/`cols` in `opts` to pin a particular tiling.
pub fn generate_topology(kind: TopologyKind, n: usize, opts: &TopologyOpts) -> Result<ChipGraph> {
    if n == 0 {
        return Err(Error::validation("n", "qubit count must be >= 1"));
    }
    let mut qubits = Vec::with_capacity(n);
    let mut edges = Vec::new();
    match kind {
        TopologyKind::Line => {
            for i in 0..n {
                qubits.push(opts.qubit(i as u32, i as f64, 0.0));
                if i + 1 < n {
                    edges.push(opts.edge(i as u32, i as u32 + 1));
                }
            }
        }
        TopologyKind::Ring => {
            if n < 3 {
                return Err(Error::validation("n", "ring requires n >= 3"));
            }
            let radius = 0.5 / (std::f64::consts::PI / n as f64).sin();
            for i in 0..n {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                qubits.push(opts.qubit(i as u32, radius * theta.cos(), radius * theta.sin()));
                edges.push(opts.edge(i as u32, ((i + 1) % n) as u32));
            }
        }
        TopologyKind::Grid => {
            let (rows, cols) = grid_dims(n, opts)?;
            for r in 0..rows {
                for c in 0..cols {
                    let id = (r * cols + c) as u32;
                    qubits.push(opts.qubit(id, c as f64, r as f64));
                    if c + 1 < cols {
                        edges.push(opts.edge(id, id + 1));
                    }
                    if r + 1 < rows {
                        edges.push(opts.edge(id, id + cols as u32));
                    }
                }
            }
        }
        TopologyKind::Star => {
            qubits.push(opts.qubit(0, 0.0, 0.0));
            for i in 1..n {
                let theta = 2.0 * std::f64::consts::PI * (i - 1) as f64 / (n - 1) as f64;
                qubits.push(opts.qubit(i as u32, theta.cos(), theta.sin()));
                edges.push(opts.edge(0, i as u32));
            }
        }
        TopologyKind::Complete => {
            let radius = if n > 2 {
                0.5 / (std::f64::consts::PI / n as f64).sin()
            } else {
                0.5
            };
            for i in 0..n {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                qubits.push(opts.qubit(i as u32, radius * theta.cos(), radius * theta.sin()));
                for j in (i + 1)..n {
                    edges.push(opts.edge(i as u32, j as u32));
                }
            }
        }
        TopologyKind::HeavyHex => {
            return heavy_hex(n, opts);
        }
    }
    ChipGraph::new(format!("{kind}{n}"), qubits, edges)
}

fn grid_dims(n: usize, opts: &TopologyOpts) -> Result<(usize, usize)> {
    if let (Some(rows), Some(cols)) = (opts.rows, opts.cols) {
        if rows * cols != n {
            return Err(Error::validation(
                "rows",
                format!("grid dims {rows}x{cols} do not match n={n}"),
            ));
        }
        return Ok((rows, cols));
    }
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    Ok((rows.max(1), n / rows.max(1)))
}

/// Number of bridge qubits in gap `g` of a width-`w` heavy-hex row pair.
/// Bridge columns alternate between offsets 0 and 2 (step 4), so no row
/// qubit ever hosts two bridges and all degrees stay <= 3.
fn heavy_hex_bridges(width: usize, gap: usize) -> usize {
    let start = if gap % 2 == 0 { 0 } else { 2 };
    if width > start {
        (width - start).div_ceil(4)
    } else {
        0
    }
}

fn heavy_hex_size(rows: usize, width: usize) -> usize {
    rows * width + (0..rows - 1).map(|g| heavy_hex_bridges(width, g)).sum::<usize>()
}

fn heavy_hex_dims(n: usize, opts: &TopologyOpts) -> Result<(usize, usize)> {
    if let (Some(rows), Some(cols)) = (opts.rows, opts.cols) {
        if rows < 2 || cols < 4 {
            return Err(Error::validation("rows", "heavy-hex needs rows >= 2 and width >= 4"));
        }
        if heavy_hex_size(rows, cols) != n {
            return Err(Error::validation(
                "rows",
                format!(
                    "heavy-hex {rows}x{cols} has {} qubits, not {n}",
                    heavy_hex_size(rows, cols)
                ),
            ));
        }
        return Ok((rows, cols));
    }
    let mut best: Option<(usize, usize)> = None;
    for rows in 2..=32 {
        for width in 4..=128 {
            if heavy_hex_size(rows, width) == n {
                let better = match best {
                    None => true,
                    Some((br, bw)) => {
                        let cand = (width as i64 - 2 * rows as i64).abs();
                        let cur = (bw as i64 - 2 * br as i64).abs();
                        cand < cur
                    }
                };
                if better {
                    best = Some((rows, width));
                }
            }
        }
    }
    best.ok_or_else(|| {
        Error::validation("n", format!("no heavy-hex tiling with {n} qubits (27 and 156 are valid)"))
    })
}

/// Heavy-hex lattice: horizontal qubit rows joined by bridge qubits on
/// alternating column offsets, giving maximum degree 3.
fn heavy_hex(n: usize, opts: &TopologyOpts) -> Result<ChipGraph> {
    let (rows, width) = heavy_hex_dims(n, opts)?;
    let mut qubits = Vec::with_capacity(n);
    let mut edges = Vec::new();
    let mut next_id: u32 = 0;
    let mut row_ids: Vec<Vec<u32>> = Vec::with_capacity(rows);

    for r in 0..rows {
        let mut ids = Vec::with_capacity(width);
        for c in 0..width {
            qubits.push(opts.qubit(next_id, c as f64, 2.0 * r as f64));
            if c > 0 {
                edges.push(opts.edge(next_id - 1, next_id));
            }
            ids.push(next_id);
            next_id += 1;
        }
        row_ids.push(ids);
    }
    for g in 0..rows - 1 {
        let start = if g % 2 == 0 { 0 } else { 2 };
        let mut c = start;
        while c < width {
            qubits.push(opts.qubit(next_id, c as f64, 2.0 * g as f64 + 1.0));
            edges.push(opts.edge(row_ids[g][c], next_id));
            edges.push(opts.edge(next_id, row_ids[g + 1][c]));
            next_id += 1;
            c += 4;
        }
    }
    ChipGraph::new(format!("heavy_hex{n}"), qubits, edges)
}

#[derive(Debug, Serialize, Deserialize)]
struct DeviceDoc {
    name: String,
    qubits: Vec<QubitDoc>,
    edges: Vec<EdgeProperties>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QubitDoc {
    id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    t1_ns: f64,
    t2_ns: f64,
    readout_error: f64,
}

const DOC_KEYS: &[&str] = &["name", "qubits", "edges"];
const QUBIT_KEYS: &[&str] = &["id", "x", "y", "t1_ns", "t2_ns", "readout_error"];
const EDGE_KEYS: &[&str] = &["a", "b", "gate_time_ns", "gate_error"];

fn unknown_keys(value: &serde_json::Value, allowed: &[&str], context: &str, out: &mut Vec<String>) {
    if let Some(map) = value.as_object() {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                out.push(format!("unknown key '{key}' in {context}"));
            }
        }
    }
}

/// Parses a device description document.
///
/// In strict mode any unknown key is a parse error; otherwise unknown keys
/// are returned as warnings. Qubits that omit coordinates get layout-derived
/// defaults (index position along a unit line).
pub fn parse_device_with_warnings(text: &str, strict: bool) -> Result<(ChipGraph, Vec<String>)> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut warnings = Vec::new();
    unknown_keys(&value, DOC_KEYS, "device document", &mut warnings);
    if let Some(qs) = value.get("qubits").and_then(|v| v.as_array()) {
        for (i, q) in qs.iter().enumerate() {
            unknown_keys(q, QUBIT_KEYS, &format!("qubits[{i}]"), &mut warnings);
        }
    }
    if let Some(es) = value.get("edges").and_then(|v| v.as_array()) {
        for (i, e) in es.iter().enumerate() {
            unknown_keys(e, EDGE_KEYS, &format!("edges[{i}]"), &mut warnings);
        }
    }
    if strict && !warnings.is_empty() {
        return Err(Error::Parse(warnings.join("; ")));
    }
    let doc: DeviceDoc = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let qubits = doc
        .qubits
        .into_iter()
        .enumerate()
        .map(|(i, q)| QubitProperties {
            id: q.id,
            x: q.x.unwrap_or(i as f64),
            y: q.y.unwrap_or(0.0),
            t1_ns: q.t1_ns,
            t2_ns: q.t2_ns,
            readout_error: q.readout_error,
        })
        .collect();
    let chip = ChipGraph::new(doc.name, qubits, doc.edges)?;
    Ok((chip, warnings))
}

/// Lenient parse; unknown keys are tolerated.
pub fn parse_device(text: &str) -> Result<ChipGraph> {
    parse_device_with_warnings(text, false).map(|(chip, _)| chip)
}

/// Serializes a chip back to the device document format.
pub fn serialize_device(chip: &ChipGraph) -> String {
    let doc = DeviceDoc {
        name: chip.name().to_string(),
        qubits: chip
            .qubits()
            .iter()
            .map(|q| QubitDoc {
                id: q.id,
                x: Some(q.x),
                y: Some(q.y),
                t1_ns: q.t1_ns,
                t2_ns: q.t2_ns,
                readout_error: q.readout_error,
            })
            .collect(),
        edges: chip.edges().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("device document serialization")
}
