//! Data manifests, checksum verification and the bundled data set.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::data::{parse_attenuation, parse_depth_intensity, parse_gamma_spectrum};
use crate::error::{Error, Result};
use crate::gamma::{AttenuationTable, GammaSpectrum};
use crate::muon::DepthIntensityTable;
use crate::physics::Material;

/// Environment variable naming a data directory that holds `manifest.txt`.
pub const DATA_DIR_ENV: &str = "CSL_BUDGET_DATA_DIR";
pub const MANIFEST_FILE: &str = "manifest.txt";

const BUNDLED_MANIFEST: &str = include_str!("../data/manifest.txt");
const BUNDLED_PB: &str = include_str!("../data/pb_attenuation.csv");
const BUNDLED_GE: &str = include_str!("../data/ge_attenuation.csv");
const BUNDLED_SPECTRUM: &str = include_str!("../data/lngs_gamma_sample.csv");
const BUNDLED_ROCK: &str = include_str!("../data/standard_rock_depth_intensity.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    Attenuation,
    Spectrum,
    DepthIntensity,
}

impl DataKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "attenuation" => Some(Self::Attenuation),
            "spectrum" => Some(Self::Spectrum),
            "depth_intensity" => Some(Self::DepthIntensity),
            _ => None,
        }
    }
}

/// One manifest line: `kind path material_or_site sha256`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub kind: DataKind,
    pub path: PathBuf,
    pub key: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataManifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl DataManifest {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut entries: Vec<ManifestEntry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                source_name: source_name.to_string(),
                line: i as u64 + 1,
                msg,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [kind, path, key, sha] = fields[..] else {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            };
            let kind = DataKind::parse(kind).ok_or_else(|| err(format!("unknown data kind `{kind}`")))?;
            if sha.len() != 64 || !sha.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(err("sha256 must be 64 hex digits".into()));
            }
            if entries.iter().any(|e| e.path.as_path() == Path::new(path)) {
                return Err(Error::validation(source_name, format!("line {}: duplicate path `{path}`", i + 1)));
            }
            entries.push(ManifestEntry {
                kind,
                path: PathBuf::from(path),
                key: key.to_string(),
                sha256: sha.to_ascii_lowercase(),
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|err| Error::Io {
            path: path.to_path_buf(),
            err,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn find(&self, kind: DataKind, key: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.kind == kind && e.key == key)
    }
}

/// Reads a manifest entry relative to `dir` and checks its digest.
pub fn read_verified(dir: &Path, entry: &ManifestEntry) -> Result<String> {
    let path = dir.join(&entry.path);
    let bytes = std::fs::read(&path).map_err(|err| Error::Io { path: path.clone(), err })?;
    let found = sha256_hex(&bytes);
    if found != entry.sha256 {
        return Err(Error::Checksum {
            path,
            expected: entry.sha256.clone(),
            found,
        });
    }
    String::from_utf8(bytes).map_err(|e| Error::Parse {
        source_name: path.display().to_string(),
        line: 0,
        msg: format!("not UTF-8: {e}"),
    })
}

/// Directory from an explicit option, else from the environment.
pub fn resolve_data_dir(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
}

/// Input tables needed by the budget: photon coefficients for the shield and
/// the detector, an external gamma spectrum and a depth-intensity relation.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    pub shield_table: AttenuationTable,
    pub detector_table: AttenuationTable,
    pub spectrum: GammaSpectrum,
    pub depth_intensity: DepthIntensityTable,
}

pub fn bundled_pb_table() -> AttenuationTable {
    parse_attenuation(BUNDLED_PB, "bundled:pb_attenuation.csv", Material::lead()).expect("bundled Pb table")
}

pub fn bundled_ge_table() -> AttenuationTable {
    parse_attenuation(BUNDLED_GE, "bundled:ge_attenuation.csv", Material::germanium()).expect("bundled Ge table")
}

pub fn bundled_spectrum() -> GammaSpectrum {
    parse_gamma_spectrum(BUNDLED_SPECTRUM, "bundled:lngs_gamma_sample.csv").expect("bundled spectrum")
}

pub fn bundled_standard_rock() -> DepthIntensityTable {
    parse_depth_intensity(BUNDLED_ROCK, "bundled:standard_rock_depth_intensity.csv", "standard_rock")
        .expect("bundled depth-intensity table")
}

pub fn bundled_manifest() -> DataManifest {
    DataManifest::parse(BUNDLED_MANIFEST, "bundled:manifest.txt").expect("bundled manifest")
}

impl DataSet {
    pub fn bundled() -> Self {
        Self {
            shield_table: bundled_pb_table(),
            detector_table: bundled_ge_table(),
            spectrum: bundled_spectrum(),
            depth_intensity: bundled_standard_rock(),
        }
    }

    /// Loads every table from `dir/manifest.txt`, verifying checksums.
    pub fn from_dir(dir: &Path, shield: &str, detector: &str, site: &str) -> Result<Self> {
        let data = DataDir::open(dir)?;
        Ok(Self {
            shield_table: data.attenuation(shield)?,
            detector_table: data.attenuation(detector)?,
            spectrum: data.spectrum()?,
            depth_intensity: data.depth_intensity(site)?,
        })
    }
}

/// A data directory described by its `manifest.txt`.
#[derive(Clone, Debug)]
pub struct DataDir {
    dir: PathBuf,
    manifest: DataManifest,
}

impl DataDir {
    pub fn open(dir: &Path) -> Result<Self> {
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: DataManifest::load(&dir.join(MANIFEST_FILE))?,
        })
    }

    pub fn manifest(&self) -> &DataManifest {
        &self.manifest
    }

    fn entry(&self, kind: DataKind, key: Option<&str>, what: &str) -> Result<(&ManifestEntry, String, String)> {
        let entry = match key {
            Some(k) => self.manifest.find(kind, k),
            None => self.manifest.entries.iter().find(|e| e.kind == kind),
        }
        .ok_or_else(|| {
            Error::validation(
                &self.dir.join(MANIFEST_FILE).display().to_string(),
                format!("no entry for {what}"),
            )
        })?;
        let text = read_verified(&self.dir, entry)?;
        Ok((entry, text, self.dir.join(&entry.path).display().to_string()))
    }

    /// Photon coefficients for the material preset called `name`.
    pub fn attenuation(&self, name: &str) -> Result<AttenuationTable> {
        let material = Material::by_name(name).ok_or_else(|| Error::param(format!("unknown material `{name}`")))?;
        let (_, text, src) = self.entry(DataKind::Attenuation, Some(name), &format!("attenuation `{name}`"))?;
        parse_attenuation(&text, &src, material)
    }

    /// The first gamma spectrum listed.
    pub fn spectrum(&self) -> Result<GammaSpectrum> {
        let (_, text, src) = self.entry(DataKind::Spectrum, None, "a gamma spectrum")?;
        parse_gamma_spectrum(&text, &src)
    }

    pub fn depth_intensity(&self, site: &str) -> Result<DepthIntensityTable> {
        let (_, text, src) = self.entry(DataKind::DepthIntensity, Some(site), &format!("depth-intensity site `{site}`"))?;
        parse_depth_intensity(&text, &src, site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_checksums_match() {
        let m = bundled_manifest();
        assert_eq!(m.entries.len(), 4);
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        for e in &m.entries {
            read_verified(&dir, e).unwrap();
        }
        let from_dir = DataSet::from_dir(&dir, "Pb", "Ge", "standard_rock").unwrap();
        assert_eq!(from_dir, DataSet::bundled());
    }

    #[test]
    fn bundled_rock_matches_two_exponential_form() {
        let t = bundled_standard_rock();
        for r in t.rows() {
            let h = r.depth;
            let i = 8.60e-6 * (-h / 0.45).exp() + 0.44e-6 * (-h / 0.87).exp();
            assert!((r.intensity / i - 1.0).abs() < 1e-6, "depth {h}");
        }
    }

    #[test]
    fn manifest_rejects_bad_lines() {
        assert!(matches!(DataManifest::parse("attenuation a.csv Pb\n", "m"), Err(Error::Parse { line: 1, .. })));
        assert!(DataManifest::parse("foo a.csv Pb 00\n", "m").is_err());
        let sha = "0".repeat(64);
        let dup = format!("attenuation a.csv Pb {sha}\nattenuation a.csv Ge {sha}\n");
        assert!(matches!(DataManifest::parse(&dup, "m"), Err(Error::Validation { .. })));
    }

    #[test]
    fn tampered_file_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let sha = sha256_hex(b"original");
        std::fs::write(dir.path().join("f.csv"), b"tampered").unwrap();
        let entry = ManifestEntry {
            kind: DataKind::Spectrum,
            path: "f.csv".into(),
            key: "x".into(),
            sha256: sha,
        };
        let e = read_verified(dir.path(), &entry).unwrap_err();
        assert!(matches!(e, Error::Checksum { .. }));
        assert_eq!(e.exit_code(), 3);
    }
}
