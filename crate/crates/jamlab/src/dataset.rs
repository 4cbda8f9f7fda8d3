//! Snapshot persistence and train/val/test splitting.
//!
//! A dataset is a directory holding one binary file per (class, JSR)
//! stratum plus a text manifest. The binary layout is normative and
//! little-endian throughout:
//!
//! ```text
//! magic  b"CGI21"          5 bytes
//! version u16              currently 1
//! class   u8
//! jsr     i16              centi-dB (30 dB -> 3000)
//! count   u32              snapshots in this file
//! length  u32              samples per snapshot
//! payload count * length complex samples, f32 I then f32 Q each
//! ```
//!
//! Snapshots are stored in sample-index order, so a record's position in
//! its file is its `sample_idx` and the whole record (samples, seed,
//! labels) reloads bit-exactly. The first `n_train` records of every
//! stratum form the training pool; the remainder are the held-out test
//! records, generated at disjoint sample indices.
//!
//! The manifest is line-oriented text: a version line, the generator
//! config hash, the class table, the JSR grid in centi-dB, one `stratum`
//! line per file, and an `end` sentinel that guards against truncation.

use crate::prng::Stream;
use crate::signal::{
    compose_snapshot, derive_seed, jsr_index, ComplexSignal, LinkBudget, SeedTriple,
    SnapshotRecord, CLASS_TABLE, N_CLASSES, SNAPSHOT_LEN,
};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 5] = b"CGI21";
pub const FORMAT_VERSION: u16 = 1;
pub const MANIFEST_NAME: &str = "manifest.txt";
const HEADER_LEN: usize = 5 + 2 + 1 + 2 + 4 + 4;

/// What to generate: which strata and how many snapshots per stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub classes: Vec<u8>,
    pub jsr_levels_db: Vec<f64>,
    pub train_per_stratum: u32,
    pub test_per_stratum: u32,
    /// First snapshot index of every stratum. Shifting it yields a
    /// disjoint, equally deterministic dataset from the same seed
    /// formula.
    pub sample_base: u32,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.jsr_levels_db.is_empty() {
            return Err(Error::Config("empty class or jsr list".into()));
        }
        for &c in &self.classes {
            if c as usize >= N_CLASSES {
                return Err(Error::Config(format!("class id {c} out of range")));
            }
        }
        let mut sorted = self.classes.clone();
        sorted.dedup();
        if sorted.len() != self.classes.len() {
            return Err(Error::Config("duplicate class ids".into()));
        }
        for &j in &self.jsr_levels_db {
            jsr_index(j)?;
        }
        if self.train_per_stratum == 0 && self.test_per_stratum == 0 {
            return Err(Error::Config("nothing to generate".into()));
        }
        // Snapshot indices must stay inside the seed formula's 20-bit
        // sample field.
        let last = self.sample_base as u64 + (self.train_per_stratum + self.test_per_stratum) as u64;
        if last > 1 << 20 {
            return Err(Error::Config(format!(
                "sample indices reach {last}, past the 2^20 seed-field limit"
            )));
        }
        Ok(())
    }

    /// FNV-1a over a canonical rendering, so any change to what the
    /// directory contains changes the hash.
    pub fn config_hash(&self) -> u64 {
        let canonical = format!(
            "v{};classes={};jsr_cdb={};train={};test={};base={}",
            FORMAT_VERSION,
            join(self.classes.iter()),
            join(self.jsr_levels_db.iter().map(|j| (j * 100.0).round() as i64)),
            self.train_per_stratum,
            self.test_per_stratum,
            self.sample_base,
        );
        fnv1a(canonical.as_bytes())
    }
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// One stratum's bookkeeping inside the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumMeta {
    pub class_id: u8,
    pub jsr_db: f64,
    pub file: String,
    pub n_train: u32,
    pub n_test: u32,
}

/// Parsed sidecar manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub schema_version: u16,
    pub config_hash: u64,
    /// First sample index of every stratum. Record files store only
    /// positions; this offset turns a position back into a sample index.
    pub sample_base: u32,
    /// (id, name) for every class present.
    pub classes: Vec<(u8, String)>,
    pub jsr_levels_db: Vec<f64>,
    pub strata: Vec<StratumMeta>,
}

impl DatasetManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("jamlab-dataset {}\n", self.schema_version));
        out.push_str(&format!("hash {:016x}\n", self.config_hash));
        out.push_str(&format!("base {}\n", self.sample_base));
        for (id, name) in &self.classes {
            out.push_str(&format!("class {id} {name}\n"));
        }
        out.push_str("jsr");
        for &j in &self.jsr_levels_db {
            out.push_str(&format!(" {}", (j * 100.0).round() as i64));
        }
        out.push('\n');
        for s in &self.strata {
            out.push_str(&format!(
                "stratum {} {} {} {} {}\n",
                s.class_id,
                (s.jsr_db * 100.0).round() as i64,
                s.file,
                s.n_train,
                s.n_test
            ));
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, what: &str| Error::Manifest(format!("line {}: {}", line + 1, what));
        let mut lines = text.lines().enumerate();

        let (ln, first) = lines.next().ok_or_else(|| bad(0, "empty manifest"))?;
        let mut it = first.split_whitespace();
        if it.next() != Some("jamlab-dataset") {
            return Err(bad(ln, "missing jamlab-dataset header"));
        }
        let schema_version: u16 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(ln, "unreadable schema version"))?;

        let mut config_hash = None;
        let mut sample_base = 0u32;
        let mut classes = Vec::new();
        let mut jsr_levels_db = Vec::new();
        let mut strata = Vec::new();
        let mut ended = false;
        for (ln, line) in lines {
            if ended {
                return Err(bad(ln, "content after end"));
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("hash") => {
                    let h = it.next().ok_or_else(|| bad(ln, "missing hash value"))?;
                    config_hash =
                        Some(u64::from_str_radix(h, 16).map_err(|_| bad(ln, "bad hash hex"))?);
                }
                Some("base") => {
                    sample_base = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad(ln, "bad base value"))?;
                }
                Some("class") => {
                    let id: u8 = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad(ln, "bad class id"))?;
                    let name = it.next().ok_or_else(|| bad(ln, "missing class name"))?;
                    classes.push((id, name.to_string()));
                }
                Some("jsr") => {
                    for v in it.by_ref() {
                        let cdb: i64 = v.parse().map_err(|_| bad(ln, "bad jsr value"))?;
                        jsr_levels_db.push(cdb as f64 / 100.0);
                    }
                    if jsr_levels_db.is_empty() {
                        return Err(bad(ln, "empty jsr grid"));
                    }
                }
                Some("stratum") => {
                    let mut next = || it.next().ok_or_else(|| bad(ln, "short stratum line"));
                    let class_id: u8 =
                        next()?.parse().map_err(|_| bad(ln, "bad stratum class"))?;
                    let cdb: i64 = next()?.parse().map_err(|_| bad(ln, "bad stratum jsr"))?;
                    let file = next()?.to_string();
                    let n_train: u32 =
                        next()?.parse().map_err(|_| bad(ln, "bad train count"))?;
                    let n_test: u32 = next()?.parse().map_err(|_| bad(ln, "bad test count"))?;
                    strata.push(StratumMeta {
                        class_id,
                        jsr_db: cdb as f64 / 100.0,
                        file,
                        n_train,
                        n_test,
                    });
                }
                Some("end") => ended = true,
                Some(other) => return Err(bad(ln, &format!("unknown keyword {other:?}"))),
                None => {}
            }
        }
        if !ended {
            return Err(Error::Manifest("missing end sentinel (truncated?)".into()));
        }
        Ok(DatasetManifest {
            schema_version,
            config_hash: config_hash.ok_or_else(|| Error::Manifest("missing hash line".into()))?,
            sample_base,
            classes,
            jsr_levels_db,
            strata,
        })
    }
}

/// Conventional stratum file name.
pub fn stratum_file_name(class_id: u8, jsr_db: f64) -> String {
    format!("c{:02}_j{:04}.bin", class_id, (jsr_db * 100.0).round() as i64)
}

/// Writes one stratum. All records must share the file's (class, JSR) and
/// arrive in sample-index order starting at `sample_base`; the file keeps
/// only positions, so the base must travel in the manifest.
pub fn write_records(
    records: &[SnapshotRecord],
    class_id: u8,
    jsr_db: f64,
    sample_base: u32,
    path: &Path,
) -> Result<()> {
    let jsr_cdb = (jsr_db * 100.0).round() as i16;
    let mut payload = Vec::with_capacity(HEADER_LEN + records.len() * SNAPSHOT_LEN * 8);
    payload.extend_from_slice(MAGIC);
    payload.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    payload.push(class_id);
    payload.extend_from_slice(&jsr_cdb.to_le_bytes());
    payload.extend_from_slice(&(records.len() as u32).to_le_bytes());
    payload.extend_from_slice(&(SNAPSHOT_LEN as u32).to_le_bytes());
    for (i, r) in records.iter().enumerate() {
        if r.class_id != class_id || r.jsr_db != jsr_db {
            return Err(Error::Config(format!(
                "record {} belongs to stratum ({}, {}), not ({}, {})",
                i, r.class_id, r.jsr_db, class_id, jsr_db
            )));
        }
        if r.sample_idx != sample_base + i as u32 {
            return Err(Error::Config(format!(
                "record at position {} has sample_idx {}, expected {}",
                i,
                r.sample_idx,
                sample_base + i as u32
            )));
        }
        for z in &r.signal.samples {
            payload.extend_from_slice(&(z.re as f32).to_le_bytes());
            payload.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    std::fs::write(path, payload)?;
    Ok(())
}

/// Reads one stratum back; sample index = `sample_base` + file position.
pub fn read_records(path: &Path, sample_base: u32) -> Result<Vec<SnapshotRecord>> {
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; HEADER_LEN];
    f.read_exact(&mut header)
        .map_err(|_| Error::Truncated(format!("{}: header", path.display())))?;
    if &header[..5] != MAGIC {
        return Err(Error::MagicMismatch { found: header[..5].to_vec() });
    }
    let version = u16::from_le_bytes([header[5], header[6]]);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let class_id = header[7];
    let jsr_db = i16::from_le_bytes([header[8], header[9]]) as f64 / 100.0;
    let count = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    let length = u32::from_le_bytes(header[14..18].try_into().unwrap()) as usize;
    if class_id as usize >= N_CLASSES {
        return Err(Error::CountMismatch(format!("class id {class_id} out of range")));
    }
    if length != SNAPSHOT_LEN {
        return Err(Error::CountMismatch(format!(
            "snapshot length {length} in header, this build expects {SNAPSHOT_LEN}"
        )));
    }
    let jsr_idx = jsr_index(jsr_db)
        .map_err(|_| Error::CountMismatch(format!("jsr {jsr_db} dB off-grid in header")))?;

    let mut body = Vec::new();
    f.read_to_end(&mut body)?;
    let expect = count * length * 8;
    if body.len() < expect {
        return Err(Error::Truncated(format!(
            "{}: payload {} of {} bytes",
            path.display(),
            body.len(),
            expect
        )));
    }
    if body.len() > expect {
        return Err(Error::CountMismatch(format!(
            "{}: {} trailing bytes beyond count*length",
            path.display(),
            body.len() - expect
        )));
    }

    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let base = i * length * 8;
        let samples: Vec<Complex64> = (0..length)
            .map(|n| {
                let o = base + n * 8;
                let re = f32::from_le_bytes(body[o..o + 4].try_into().unwrap());
                let im = f32::from_le_bytes(body[o + 4..o + 8].try_into().unwrap());
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        let sample_idx = sample_base + i as u32;
        records.push(SnapshotRecord {
            signal: ComplexSignal::new(samples)?,
            class_id,
            jsr_db,
            seed: derive_seed(SeedTriple { class_idx: class_id as u32, jsr_idx, sample_idx })?,
            sample_idx,
        });
    }
    Ok(records)
}

/// Synthesizes every stratum of `cfg` into `dir` (created if missing) and
/// writes the manifest last. Strata are independent, so they fan out over
/// the rayon pool; each output file has exactly one writer.
pub fn generate_dataset(cfg: &GenerationConfig, dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let per = cfg.train_per_stratum + cfg.test_per_stratum;

    let mut jobs = Vec::new();
    for &class_id in &cfg.classes {
        for &jsr_db in &cfg.jsr_levels_db {
            jobs.push((class_id, jsr_db));
        }
    }
    let strata: Vec<StratumMeta> = jobs
        .par_iter()
        .map(|&(class_id, jsr_db)| -> Result<StratumMeta> {
            let class = &CLASS_TABLE[class_id as usize];
            let budget = LinkBudget::new(jsr_db)?;
            let records: Vec<SnapshotRecord> = (0..per)
                .map(|i| compose_snapshot(class, &budget, cfg.sample_base + i))
                .collect::<Result<_>>()?;
            let file = stratum_file_name(class_id, jsr_db);
            write_records(&records, class_id, jsr_db, cfg.sample_base, &dir.join(&file))?;
            Ok(StratumMeta {
                class_id,
                jsr_db,
                file,
                n_train: cfg.train_per_stratum,
                n_test: cfg.test_per_stratum,
            })
        })
        .collect::<Result<_>>()?;

    let manifest = DatasetManifest {
        schema_version: FORMAT_VERSION,
        config_hash: cfg.config_hash(),
        sample_base: cfg.sample_base,
        classes: cfg
            .classes
            .iter()
            .map(|&id| (id, CLASS_TABLE[id as usize].name.to_string()))
            .collect(),
        jsr_levels_db: cfg.jsr_levels_db.clone(),
        strata,
    };
    let mut f = std::fs::File::create(dir.join(MANIFEST_NAME))?;
    f.write_all(manifest.render().as_bytes())?;
    Ok(manifest)
}

/// A fully loaded dataset: the manifest plus all records, stratum by
/// stratum in manifest order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<SnapshotRecord>,
    /// Per stratum: (offset of its first record, n_train, n_test).
    extents: Vec<(usize, u32, u32)>,
}

/// Loads a dataset directory, verifying every stratum file against the
/// manifest counts.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let manifest = DatasetManifest::parse(&text)?;

    let mut records = Vec::new();
    let mut extents = Vec::new();
    for s in &manifest.strata {
        let recs = read_records(&dir.join(&s.file))?;
        let expect = (s.n_train + s.n_test) as usize;
        if recs.len() != expect {
            return Err(Error::CountMismatch(format!(
                "{}: manifest says {} records, file holds {}",
                s.file,
                expect,
                recs.len()
            )));
        }
        if !recs.is_empty() && (recs[0].class_id != s.class_id || recs[0].jsr_db != s.jsr_db) {
            return Err(Error::Manifest(format!(
                "{}: header stratum ({}, {}) disagrees with manifest ({}, {})",
                s.file, recs[0].class_id, recs[0].jsr_db, s.class_id, s.jsr_db
            )));
        }
        extents.push((records.len(), s.n_train, s.n_test));
        records.extend(recs);
    }
    Ok(Dataset { manifest, records, extents })
}

/// Record indices (into `records`) of the training pool, stratum order.
impl Dataset {
    pub fn train_pool(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &(off, n_train, _) in &self.extents {
            out.extend(off..off + n_train as usize);
        }
        out
    }

    pub fn test_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &(off, n_train, n_test) in &self.extents {
            let start = off + n_train as usize;
            out.extend(start..start + n_test as usize);
        }
        out
    }

    /// Training-pool indices grouped per stratum.
    fn pool_by_stratum(&self) -> Vec<Vec<usize>> {
        self.extents
            .iter()
            .map(|&(off, n_train, _)| (off..off + n_train as usize).collect())
            .collect()
    }
}

/// Disjoint index sets over a loaded dataset's records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Carves a validation set out of the training pool, stratified per
/// (class, JSR): each stratum contributes `round(fraction * pool)`
/// records, chosen by a seeded shuffle. The test set is the generation-
/// time holdout and is never touched. Fraction 0 is allowed and yields an
/// empty validation set.
pub fn split(ds: &Dataset, val_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Config(format!("val fraction {val_fraction} outside [0, 1)")));
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (k, mut pool) in ds.pool_by_stratum().into_iter().enumerate() {
        let n_val = (val_fraction * pool.len() as f64).round() as usize;
        let mut rng = Stream::from_raw(seed ^ fnv1a(format!("stratum{k}").as_bytes()));
        rng.shuffle(&mut pool);
        let (v, t) = pool.split_at(n_val);
        val.extend_from_slice(v);
        train.extend_from_slice(t);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok(SplitIndices { train, val, test: ds.test_indices() })
}

/// Dataset directory plus derived splits, as most commands consume it.
pub fn load_with_split(dir: &Path, val_fraction: f64, seed: u64) -> Result<(Dataset, SplitIndices)> {
    let ds = load_dataset(dir)?;
    let sp = split(&ds, val_fraction, seed)?;
    Ok((ds, sp))
}

/// Standard dataset path for a config hash, used by CLI defaults.
pub fn default_dir(root: &Path, cfg: &GenerationConfig) -> PathBuf {
    root.join(format!("dataset_{:016x}", cfg.config_hash()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mini_cfg() -> GenerationConfig {
        GenerationConfig {
            classes: vec![6, 19],
            jsr_levels_db: vec![30.0, 50.0],
            train_per_stratum: 5,
            test_per_stratum: 2,
            sample_base: 0,
        }
    }

    #[test]
    fn fnv1a_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_record_list_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.bin");
        write_records(&[], 0, 30.0, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), HEADER_LEN as u64);
        assert!(read_records(&path).unwrap().is_empty());
    }

    #[test]
    fn single_record_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.bin");
        let budget = LinkBudget::new(30.0).unwrap();
        let r = compose_snapshot(&CLASS_TABLE[19], &budget, 0).unwrap();
        write_records(std::slice::from_ref(&r), 19, 30.0, &path).unwrap();
        assert_eq!(
            std::fs::metadata(&path).unwrap().len(),
            (HEADER_LEN + SNAPSHOT_LEN * 2 * 4) as u64
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.bin");
        let budget = LinkBudget::new(26.0).unwrap();
        let records: Vec<SnapshotRecord> =
            (0..50).map(|i| compose_snapshot(&CLASS_TABLE[3], &budget, i).unwrap()).collect();
        write_records(&records, 3, 26.0, &path).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn corrupt_headers_give_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        let budget = LinkBudget::new(30.0).unwrap();
        let r = compose_snapshot(&CLASS_TABLE[0], &budget, 0).unwrap();
        write_records(std::slice::from_ref(&r), 0, 30.0, &path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(matches!(read_records(&path), Err(Error::MagicMismatch { .. })));

        let mut bad_version = good.clone();
        bad_version[5] = 9;
        std::fs::write(&path, &bad_version).unwrap();
        assert!(matches!(
            read_records(&path),
            Err(Error::VersionMismatch { found: 9, expected: 1 })
        ));

        std::fs::write(&path, &good[..good.len() - 4]).unwrap();
        assert!(matches!(read_records(&path), Err(Error::Truncated(_))));

        let mut bad_count = good.clone();
        bad_count[10..14].copy_from_slice(&2u32.to_le_bytes());
        std::fs::write(&path, &bad_count).unwrap();
        assert!(matches!(read_records(&path), Err(Error::Truncated(_))));

        let mut trailing = good.clone();
        trailing.extend_from_slice(&[0; 8]);
        std::fs::write(&path, &trailing).unwrap();
        assert!(matches!(read_records(&path), Err(Error::CountMismatch(_))));
    }

    #[test]
    fn manifest_round_trip_and_diagnostics() {
        let m = DatasetManifest {
            schema_version: 1,
            config_hash: 0xdead_beef_0123_4567,
            classes: vec![(6, "LChirpWideSlow".into()), (19, "CWI".into())],
            jsr_levels_db: vec![30.0, 50.0],
            strata: vec![StratumMeta {
                class_id: 6,
                jsr_db: 30.0,
                file: "c06_j3000.bin".into(),
                n_train: 5,
                n_test: 2,
            }],
        };
        let text = m.render();
        assert_eq!(DatasetManifest::parse(&text).unwrap(), m);

        let truncated = text.replace("end\n", "");
        assert!(matches!(DatasetManifest::parse(&truncated), Err(Error::Manifest(_))));
        let unknown = text.replace("stratum", "blob");
        assert!(matches!(DatasetManifest::parse(&unknown), Err(Error::Manifest(_))));
    }

    #[test]
    fn generate_load_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = mini_cfg();
        let manifest = generate_dataset(&cfg, dir.path()).unwrap();
        assert_eq!(manifest.strata.len(), 4);
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.manifest, manifest);
        assert_eq!(ds.records.len(), 4 * 7);
        assert_eq!(ds.train_pool().len(), 4 * 5);
        assert_eq!(ds.test_indices().len(), 4 * 2);
        // Every record reloads as a pure function of its coordinates.
        for &i in &ds.test_indices() {
            let r = &ds.records[i];
            let budget = LinkBudget::new(r.jsr_db).unwrap();
            let again =
                compose_snapshot(&CLASS_TABLE[r.class_id as usize], &budget, r.sample_idx).unwrap();
            assert_eq!(r, &again);
        }
    }

    #[test]
    fn load_rejects_count_drift() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = mini_cfg();
        let manifest = generate_dataset(&cfg, dir.path()).unwrap();
        // Shrink one stratum file behind the manifest's back.
        let victim = dir.path().join(&manifest.strata[0].file);
        let mut bytes = std::fs::read(&victim).unwrap();
        bytes.truncate(HEADER_LEN + SNAPSHOT_LEN * 8 * 3);
        bytes[10..14].copy_from_slice(&3u32.to_le_bytes());
        std::fs::write(&victim, &bytes).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::CountMismatch(_))));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenerationConfig { train_per_stratum: 10, ..mini_cfg() };
        generate_dataset(&cfg, dir.path()).unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        let sp = split(&ds, 0.2, 7).unwrap();
        assert_eq!(sp.val.len(), 4 * 2);
        assert_eq!(sp.train.len(), 4 * 8);
        assert_eq!(sp.test.len(), 4 * 2);

        let mut all: Vec<usize> =
            sp.train.iter().chain(&sp.val).chain(&sp.test).copied().collect();
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        assert_eq!(all.len(), before, "splits overlap");
        assert_eq!(all.len(), ds.records.len());

        // Per-stratum balance of the validation set.
        for s in &ds.manifest.strata {
            let n = sp
                .val
                .iter()
                .filter(|&&i| {
                    ds.records[i].class_id == s.class_id && ds.records[i].jsr_db == s.jsr_db
                })
                .count();
            assert_eq!(n, 2);
        }

        // Determinism and seed sensitivity.
        assert_eq!(split(&ds, 0.2, 7).unwrap(), sp);
        assert_ne!(split(&ds, 0.2, 8).unwrap().val, sp.val);
    }

    #[test]
    fn split_fraction_zero_and_bounds() {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(&mini_cfg(), dir.path()).unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        let sp = split(&ds, 0.0, 1).unwrap();
        assert!(sp.val.is_empty());
        assert_eq!(sp.train.len(), ds.train_pool().len());
        assert!(split(&ds, 1.0, 1).is_err());
        assert!(split(&ds, -0.1, 1).is_err());
    }

    #[test]
    fn config_hash_sensitivity() {
        let a = mini_cfg();
        let mut b = a.clone();
        b.train_per_stratum += 1;
        let mut c = a.clone();
        c.jsr_levels_db = vec![30.0, 48.0];
        let mut d = a.clone();
        d.sample_base = 7;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
        assert_ne!(a.config_hash(), d.config_hash());
        assert_eq!(a.config_hash(), mini_cfg().config_hash());
    }
}
