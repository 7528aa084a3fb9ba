//! Synthetic leader/follower gesture corpus standing in for recorded
//! teleoperation data, and its on-disk format.
//!
//! Each gesture spec defines a periodic 6-DoF joint pattern as a posture offset
//! plus up to three harmonics of a base period. A leader executes the pattern;
//! a follower imitates it after `follower_lag` steps. Both streams carry
//! independent observation noise and every value is clipped to [-1, 1] and
//! quantized to six decimals, the precision of the CSV format.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::Sequence;
use crate::numerics::{derive_stream, stream_label, RngStream};
use crate::scalar::Real;

pub const DOF: usize = 6;
pub const CORPUS_FORMAT_VERSION: u32 = 1;
pub const META_FILE: &str = "corpus.meta";

const SPEC_STREAM: u64 = 0x5350_4543;
const NOISE_STREAM: u64 = 0x4E4F_4953;

#[derive(Debug, Error)]
pub enum GestureError {
    #[error("{}:{line}:{column}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Leader,
    Follower,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Leader, Role::Follower];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
        }
    }

    fn index(self) -> u64 {
        match self {
            Role::Leader => 0,
            Role::Follower => 1,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub amplitude: f64,
    /// Period in steps.
    pub period: f64,
    pub phase: f64,
}

/// One joint channel: a resting offset plus at most three sinusoids.
#[derive(Debug, Clone, PartialEq)]
pub struct DofPattern {
    pub offset: f64,
    pub components: Vec<Component>,
}

impl DofPattern {
    pub fn value(&self, t: usize) -> f64 {
        self.offset
            + self
                .components
                .iter()
                .map(|c| c.amplitude * (2.0 * PI * t as f64 / c.period + c.phase).sin())
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureSpec {
    pub id: usize,
    pub dofs: Vec<DofPattern>,
    pub noise_sigma: f64,
    pub follower_lag: usize,
    pub length: usize,
}

impl GestureSpec {
    pub fn with_length(&self, length: usize) -> Self {
        Self {
            length,
            ..self.clone()
        }
    }

    /// Noise-free pattern, step-major.
    pub fn clean(&self) -> Vec<f64> {
        (0..self.length)
            .flat_map(|t| self.dofs.iter().map(move |d| d.value(t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gesture {
    pub spec_id: usize,
    pub role: Role,
    /// Own action, step-major `length x DOF`.
    pub proprio: Vec<f64>,
    /// Partner's action, same layout.
    pub extero: Vec<f64>,
}

impl Gesture {
    pub fn len(&self) -> usize {
        self.proprio.len() / DOF
    }

    pub fn is_empty(&self) -> bool {
        self.proprio.is_empty()
    }

    pub fn file_name(&self) -> String {
        format!("gesture_{}_{}.csv", self.spec_id, self.role)
    }

    pub fn to_sequence<T: Real>(&self) -> Sequence<T> {
        Sequence::from_streams(
            DOF,
            self.proprio.iter().map(|&v| T::of(v)).collect(),
            self.extero.iter().map(|&v| T::of(v)).collect(),
        )
    }

    /// First `length` steps.
    pub fn truncated(&self, length: usize) -> Self {
        let n = length.min(self.len()) * DOF;
        Self {
            spec_id: self.spec_id,
            role: self.role,
            proprio: self.proprio[..n].to_vec(),
            extero: self.extero[..n].to_vec(),
        }
    }
}

fn quantize(v: f64) -> f64 {
    (v.clamp(-1.0, 1.0) * 1e6).round() / 1e6
}

/// Renders one recording of `spec` from the given role's point of view.
///
/// Both streams are drawn in a fixed order, so the same `rng` state yields
/// role-swapped copies of the same recording.
pub fn synth_gesture(spec: &GestureSpec, role: Role, rng: &mut RngStream) -> Gesture {
    let clean = spec.clean();
    let n = spec.length;
    let lag = spec.follower_lag;
    let sigma = spec.noise_sigma;
    let mut leader = Vec::with_capacity(n * DOF);
    let mut follower = Vec::with_capacity(n * DOF);
    for t in 0..n {
        let src = t.saturating_sub(lag);
        for j in 0..DOF {
            leader.push(clean[t * DOF + j] + sigma * rng.normal::<f64>());
            follower.push(clean[src * DOF + j] + sigma * rng.normal::<f64>());
        }
    }
    let leader: Vec<f64> = leader.into_iter().map(quantize).collect();
    let follower: Vec<f64> = follower.into_iter().map(quantize).collect();
    let (proprio, extero) = match role {
        Role::Leader => (leader, follower),
        Role::Follower => (follower, leader),
    };
    Gesture {
        spec_id: spec.id,
        role,
        proprio,
        extero,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusOptions {
    pub n_specs: usize,
    pub length: usize,
    pub noise_sigma: f64,
    pub follower_lag: usize,
    /// Inclusive range of base periods in steps.
    pub period_range: (usize, usize),
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            n_specs: 31,
            length: 300,
            noise_sigma: 0.05,
            follower_lag: 5,
            period_range: (24, 60),
        }
    }
}

impl CorpusOptions {
    /// Eight specs of 100 steps: the small corpus used for fast runs.
    pub fn desk() -> Self {
        Self {
            n_specs: 8,
            length: 100,
            ..Self::default()
        }
    }
}

/// Derives the pattern of gesture `id` from the corpus seed.
pub fn derive_spec(master_seed: u64, id: usize, opts: &CorpusOptions) -> GestureSpec {
    let mut rng = derive_stream(master_seed, stream_label(&[SPEC_STREAM, id as u64]));
    let (lo, hi) = opts.period_range;
    let base = (lo + rng.below(hi - lo + 1)) as f64;
    let dofs = (0..DOF)
        .map(|_| {
            let offset: f64 = rng.uniform(-0.2, 0.2);
            let k = 1 + rng.below(3);
            let mut components: Vec<Component> = (1..=k)
                .map(|m| Component {
                    amplitude: rng.uniform(0.2, 1.0) / m as f64,
                    period: base / m as f64,
                    phase: rng.uniform(0.0, 2.0 * PI),
                })
                .collect();
            let budget = (0.9 - offset.abs()) * rng.uniform(0.5, 1.0);
            let total: f64 = components.iter().map(|c| c.amplitude).sum();
            for c in &mut components {
                c.amplitude *= budget / total;
            }
            DofPattern { offset, components }
        })
        .collect();
    GestureSpec {
        id,
        dofs,
        noise_sigma: opts.noise_sigma,
        follower_lag: opts.follower_lag,
        length: opts.length,
    }
}

/// Noise stream for one recording of (spec, role); `rendition` 0 is the corpus copy.
pub fn recording_stream(master_seed: u64, spec_id: usize, role: Role, rendition: u64) -> RngStream {
    derive_stream(
        master_seed,
        stream_label(&[NOISE_STREAM, spec_id as u64, role.index(), rendition]),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub master_seed: u64,
    pub options: CorpusOptions,
    pub specs: Vec<GestureSpec>,
    /// Leader then follower for each spec, in spec order.
    pub gestures: Vec<Gesture>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.gestures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gestures.is_empty()
    }

    pub fn sequences<T: Real>(&self) -> Vec<Sequence<T>> {
        self.gestures.iter().map(|g| g.to_sequence()).collect()
    }

    pub fn spec(&self, id: usize) -> Option<&GestureSpec> {
        self.specs.iter().find(|s| s.id == id)
    }
}

pub fn build_corpus(master_seed: u64, options: CorpusOptions) -> Corpus {
    let specs: Vec<GestureSpec> = (1..=options.n_specs)
        .map(|id| derive_spec(master_seed, id, &options))
        .collect();
    let gestures = specs
        .iter()
        .flat_map(|s| {
            Role::BOTH.map(|role| synth_gesture(s, role, &mut recording_stream(master_seed, s.id, role, 0)))
        })
        .collect();
    Corpus {
        master_seed,
        options,
        specs,
        gestures,
    }
}

fn csv_header() -> String {
    let mut h = String::from("step");
    for j in 0..DOF {
        h.push_str(&format!(",p{j}"));
    }
    for j in 0..DOF {
        h.push_str(&format!(",x{j}"));
    }
    h
}

pub fn gesture_csv(g: &Gesture) -> String {
    let mut s = csv_header();
    s.push('\n');
    for t in 0..g.len() {
        s.push_str(&t.to_string());
        for v in g.proprio[t * DOF..(t + 1) * DOF]
            .iter()
            .chain(&g.extero[t * DOF..(t + 1) * DOF])
        {
            s.push_str(&format!(",{v:.6}"));
        }
        s.push('\n');
    }
    s
}

fn corpus_meta(c: &Corpus) -> String {
    let o = &c.options;
    let mut s = format!(
        "format_version = {CORPUS_FORMAT_VERSION}\nmaster_seed = {}\nn_specs = {}\nlength = {}\nnoise_sigma = {}\nfollower_lag = {}\nperiod_min = {}\nperiod_max = {}\n",
        c.master_seed, o.n_specs, o.length, o.noise_sigma, o.follower_lag, o.period_range.0, o.period_range.1
    );
    for spec in &c.specs {
        for (j, d) in spec.dofs.iter().enumerate() {
            let comps: Vec<String> = d
                .components
                .iter()
                .map(|c| format!("{}:{}:{}", c.amplitude, c.period, c.phase))
                .collect();
            s.push_str(&format!("spec.{}.dof{} = {};{}\n", spec.id, j, d.offset, comps.join(";")));
        }
    }
    s
}

pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<Vec<PathBuf>, GestureError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| GestureError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for g in &corpus.gestures {
        let path = dir.join(g.file_name());
        fs::write(&path, gesture_csv(g)).map_err(io(&path))?;
        written.push(path);
    }
    let meta = dir.join(META_FILE);
    fs::write(&meta, corpus_meta(corpus)).map_err(io(&meta))?;
    written.push(meta);
    Ok(written)
}

struct Cursor<'a> {
    file: &'a Path,
}

impl Cursor<'_> {
    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> GestureError {
        GestureError::Parse {
            file: self.file.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }

    fn num<V: std::str::FromStr>(&self, s: &str, line: usize, column: usize) -> Result<V, GestureError> {
        s.trim()
            .parse()
            .map_err(|_| self.err(line, column, format!("invalid number {:?}", s.trim())))
    }
}

/// Parses one gesture CSV. Column numbers in errors are 1-based character offsets.
pub fn parse_gesture_csv(
    text: &str,
    file: &Path,
    spec_id: usize,
    role: Role,
    expected_len: Option<usize>,
) -> Result<Gesture, GestureError> {
    let cur = Cursor { file };
    let mut lines = text.lines().enumerate();
    let header = csv_header();
    match lines.next() {
        Some((_, h)) if h.trim_end() == header => {}
        Some((_, h)) => {
            let col = h
                .chars()
                .zip(header.chars())
                .position(|(a, b)| a != b)
                .unwrap_or(h.len().min(header.len()))
                + 1;
            return Err(cur.err(1, col, format!("expected header {header:?}")));
        }
        None => return Err(cur.err(1, 1, "empty file")),
    }
    let mut proprio = Vec::new();
    let mut extero = Vec::new();
    let mut rows = 0;
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut col = 1;
        let mut fields = 0;
        for (k, field) in line.split(',').enumerate() {
            if k == 0 {
                let step: usize = cur.num(field, lineno, col)?;
                if step != rows {
                    return Err(cur.err(lineno, col, format!("expected step {rows}, found {step}")));
                }
            } else if k <= 2 * DOF {
                let v: f64 = cur.num(field, lineno, col)?;
                if !(-1.0..=1.0).contains(&v) {
                    return Err(cur.err(lineno, col, format!("value {v} outside [-1, 1]")));
                }
                if k <= DOF {
                    proprio.push(v);
                } else {
                    extero.push(v);
                }
            } else {
                return Err(cur.err(lineno, col, "too many fields"));
            }
            col += field.chars().count() + 1;
            fields += 1;
        }
        if fields != 1 + 2 * DOF {
            return Err(cur.err(
                lineno,
                col,
                format!("expected {} fields, found {fields}", 1 + 2 * DOF),
            ));
        }
        rows += 1;
    }
    if let Some(n) = expected_len {
        if rows != n {
            return Err(cur.err(
                rows + 2,
                1,
                format!("expected {n} rows, found {rows} (truncated file?)"),
            ));
        }
    }
    Ok(Gesture {
        spec_id,
        role,
        proprio,
        extero,
    })
}

fn parse_meta(text: &str, file: &Path) -> Result<(u64, CorpusOptions, Vec<GestureSpec>), GestureError> {
    let cur = Cursor { file };
    let mut kv = std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(cur.err(i + 1, 1, "expected `key = value`"));
        };
        kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string(), k.len() + 2));
    }
    let get = |key: &str| {
        kv.get(key)
            .ok_or_else(|| cur.err(text.lines().count() + 1, 1, format!("missing key {key}")))
    };
    let num = |key: &str| -> Result<f64, GestureError> {
        let (l, v, c) = get(key)?;
        cur.num(v, *l, *c)
    };
    let int = |key: &str| -> Result<usize, GestureError> {
        let (l, v, c) = get(key)?;
        cur.num(v, *l, *c)
    };
    let (l, v, c) = get("format_version")?;
    let version: u32 = cur.num(v, *l, *c)?;
    if version != CORPUS_FORMAT_VERSION {
        return Err(cur.err(*l, *c, format!("unsupported format version {version}")));
    }
    let (l, v, c) = get("master_seed")?;
    let master_seed: u64 = cur.num(v, *l, *c)?;
    let options = CorpusOptions {
        n_specs: int("n_specs")?,
        length: int("length")?,
        noise_sigma: num("noise_sigma")?,
        follower_lag: int("follower_lag")?,
        period_range: (int("period_min")?, int("period_max")?),
    };
    let mut specs = Vec::with_capacity(options.n_specs);
    for id in 1..=options.n_specs {
        let mut dofs = Vec::with_capacity(DOF);
        for j in 0..DOF {
            let (l, v, c) = get(&format!("spec.{id}.dof{j}"))?;
            let mut parts = v.split(';');
            let offset: f64 = cur.num(parts.next().unwrap_or(""), *l, *c)?;
            let mut components = Vec::new();
            for p in parts {
                let f: Vec<&str> = p.split(':').collect();
                if f.len() != 3 {
                    return Err(cur.err(*l, *c, format!("component {p:?} is not amplitude:period:phase")));
                }
                components.push(Component {
                    amplitude: cur.num(f[0], *l, *c)?,
                    period: cur.num(f[1], *l, *c)?,
                    phase: cur.num(f[2], *l, *c)?,
                });
            }
            dofs.push(DofPattern { offset, components });
        }
        specs.push(GestureSpec {
            id,
            dofs,
            noise_sigma: options.noise_sigma,
            follower_lag: options.follower_lag,
            length: options.length,
        });
    }
    Ok((master_seed, options, specs))
}

pub fn load_gesture(path: &Path, spec_id: usize, role: Role, expected_len: Option<usize>) -> Result<Gesture, GestureError> {
    let text = fs::read_to_string(path).map_err(|source| GestureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_gesture_csv(&text, path, spec_id, role, expected_len)
}

pub fn load_corpus(dir: &Path) -> Result<Corpus, GestureError> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|source| GestureError::Io {
        path: meta_path.clone(),
        source,
    })?;
    let (master_seed, options, specs) = parse_meta(&text, &meta_path)?;
    let mut gestures = Vec::with_capacity(2 * specs.len());
    for spec in &specs {
        for role in Role::BOTH {
            let path = dir.join(format!("gesture_{}_{}.csv", spec.id, role));
            gestures.push(load_gesture(&path, spec.id, role, Some(options.length))?);
        }
    }
    Ok(Corpus {
        master_seed,
        options,
        specs,
        gestures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::pearson;
    use proptest::prelude::*;

    fn flat_spec(offset: f64, noise: f64, lag: usize) -> GestureSpec {
        GestureSpec {
            id: 1,
            dofs: (0..DOF)
                .map(|_| DofPattern {
                    offset,
                    components: vec![Component {
                        amplitude: 0.0,
                        period: 20.0,
                        phase: 1.0,
                    }],
                })
                .collect(),
            noise_sigma: noise,
            follower_lag: lag,
            length: 30,
        }
    }

    #[test]
    fn zero_amplitude_is_constant() {
        let g = synth_gesture(&flat_spec(0.25, 0.0, 5), Role::Leader, &mut derive_stream(1, 0));
        assert!(g.proprio.iter().chain(&g.extero).all(|&v| v == 0.25));
        let g = synth_gesture(&flat_spec(3.0, 0.0, 5), Role::Leader, &mut derive_stream(1, 0));
        assert!(g.proprio.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn follower_is_shifted_leader() {
        let spec = derive_spec(3, 4, &CorpusOptions { noise_sigma: 0.0, ..CorpusOptions::desk() });
        let g = synth_gesture(&spec, Role::Leader, &mut derive_stream(1, 0));
        let k = spec.follower_lag;
        for t in k..g.len() {
            assert_eq!(&g.extero[t * DOF..(t + 1) * DOF], &g.proprio[(t - k) * DOF..(t - k + 1) * DOF]);
        }
        for t in 0..k {
            assert_eq!(&g.extero[t * DOF..(t + 1) * DOF], &g.proprio[..DOF]);
        }
        for j in 0..DOF {
            let lead = g.to_sequence::<f64>().channel(false, j);
            let follow = g.to_sequence::<f64>().channel(true, j);
            let r = pearson(&lead[..g.len() - k], &follow[k..]).unwrap();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn role_swap_exchanges_streams() {
        let spec = derive_spec(3, 2, &CorpusOptions::desk());
        let a = synth_gesture(&spec, Role::Leader, &mut derive_stream(5, 5));
        let b = synth_gesture(&spec, Role::Follower, &mut derive_stream(5, 5));
        assert_eq!(a.proprio, b.extero);
        assert_eq!(a.extero, b.proprio);
    }

    #[test]
    fn corpus_sizes() {
        assert_eq!(build_corpus(42, CorpusOptions::default()).len(), 62);
        let c = build_corpus(42, CorpusOptions { n_specs: 8, ..CorpusOptions::default() });
        assert_eq!(c.len(), 16);
        assert_eq!(c, build_corpus(42, CorpusOptions { n_specs: 8, ..CorpusOptions::default() }));
    }

    #[test]
    fn specs_respect_headroom_and_periods() {
        let opts = CorpusOptions::default();
        for id in 1..=31 {
            let s = derive_spec(11, id, &opts);
            for d in &s.dofs {
                assert!(d.components.len() <= 3 && !d.components.is_empty());
                let peak = d.offset.abs() + d.components.iter().map(|c| c.amplitude.abs()).sum::<f64>();
                assert!(peak <= 0.9 + 1e-12);
                assert!(d.components.iter().all(|c| c.period >= 8.0));
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let c = build_corpus(9, CorpusOptions { n_specs: 3, length: 40, ..CorpusOptions::default() });
        let dir = tempfile::tempdir().unwrap();
        let files = save_corpus(&c, dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        let back = load_corpus(dir.path()).unwrap();
        assert_eq!(c, back);
        let again = tempfile::tempdir().unwrap();
        save_corpus(&build_corpus(9, c.options), again.path()).unwrap();
        for f in &files {
            let name = f.file_name().unwrap();
            assert_eq!(fs::read(f).unwrap(), fs::read(again.path().join(name)).unwrap());
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let c = build_corpus(9, CorpusOptions { n_specs: 1, length: 10, ..CorpusOptions::default() });
        let text = gesture_csv(&c.gestures[0]);
        let cut = &text[..text.len() - 30];
        let err = parse_gesture_csv(cut, Path::new("g.csv"), 1, Role::Leader, Some(10)).unwrap_err();
        match err {
            GestureError::Parse { line, .. } => assert_eq!(line, 11),
            e => panic!("{e}"),
        }
        let err = parse_gesture_csv(&text[..text.len() - 60], Path::new("g.csv"), 1, Role::Leader, Some(10))
            .unwrap_err();
        assert!(err.to_string().starts_with("g.csv:"), "{err}");
    }

    #[test]
    fn hand_written_fixture() {
        let text = "step,p0,p1,p2,p3,p4,p5,x0,x1,x2,x3,x4,x5\n\
                    0,0.100000,0.200000,0.300000,0.400000,0.500000,0.600000,-0.100000,-0.200000,-0.300000,-0.400000,-0.500000,-0.600000\n\
                    1,0.000000,0.000000,0.000000,0.000000,0.000000,0.000000,1.000000,1.000000,1.000000,1.000000,1.000000,1.000000\n\
                    2,-1.000000,0.250000,0.000000,0.000000,0.000000,0.123456,0.000000,0.000000,0.000000,0.000000,0.000000,-0.999999\n";
        let g = parse_gesture_csv(text, Path::new("f.csv"), 7, Role::Follower, Some(3)).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(&g.proprio[..6], &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(g.extero[6..12], [1.0; 6]);
        assert_eq!(g.proprio[12], -1.0);
        assert_eq!(g.proprio[17], 0.123456);
        assert_eq!(g.extero[17], -0.999999);
        assert_eq!(gesture_csv(&g), text);
    }

    #[test]
    fn bad_number_reports_column() {
        let text = "step,p0,p1,p2,p3,p4,p5,x0,x1,x2,x3,x4,x5\n0,0.1,abc,0,0,0,0,0,0,0,0,0,0\n";
        match parse_gesture_csv(text, Path::new("b.csv"), 1, Role::Leader, None).unwrap_err() {
            GestureError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 7);
            }
            e => panic!("{e}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn values_always_in_range(seed in any::<u64>(), id in 1usize..40, noise in 0.0f64..0.5, lag in 0usize..10) {
            let opts = CorpusOptions { length: 50, noise_sigma: noise, follower_lag: lag, ..CorpusOptions::default() };
            let spec = derive_spec(seed, id, &opts);
            let g = synth_gesture(&spec, Role::Follower, &mut derive_stream(seed, 1));
            prop_assert!(g.proprio.iter().chain(&g.extero).all(|v| (-1.0..=1.0).contains(v)));
        }
    }
}
