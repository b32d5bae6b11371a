use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::InfluenceResult;
use crate::error::{Error, Result};
use crate::hashing::{f64s_to_hex, hex_to_f64s, ContentHasher};

const FORMAT: &str = "influx-influence";
const VERSION: u32 = 1;

/// Content-addressed key of an influence result.
pub fn cache_key(
    model_hash: &str,
    test_example_id: &str,
    method: &str,
    config_digest: &str,
) -> String {
    ContentHasher::new()
        .str(model_hash)
        .str(test_example_id)
        .str(method)
        .str(config_digest)
        .finish()
}

impl InfluenceResult {
    pub fn cache_key(&self) -> String {
        cache_key(
            &self.model_hash,
            &self.test_example_id,
            &self.method,
            &self.config_digest,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct Repr {
    format: String,
    version: u32,
    key: String,
    test_example_id: String,
    predicted_class: usize,
    method: String,
    model_hash: String,
    config_digest: String,
    converged: Option<bool>,
    /// IEEE-754 bits, 16 hex digits per score.
    raw_scores: String,
    z_scores: String,
}

/// Directory of `<key>.json` influence results.
#[derive(Debug, Clone)]
pub struct InfluenceCache {
    dir: PathBuf,
}

impl InfluenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(InfluenceCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn store(&self, result: &InfluenceResult) -> Result<String> {
        let key = result.cache_key();
        let repr = Repr {
            format: FORMAT.into(),
            version: VERSION,
            key: key.clone(),
            test_example_id: result.test_example_id.clone(),
            predicted_class: result.predicted_class,
            method: result.method.clone(),
            model_hash: result.model_hash.clone(),
            config_digest: result.config_digest.clone(),
            converged: result.converged,
            raw_scores: f64s_to_hex(&result.raw_scores),
            z_scores: f64s_to_hex(&result.z_scores),
        };
        let path = self.path(&key);
        // write then rename so a concurrent reader never sees a partial file
        let tmp = self.dir.join(format!(".{key}.tmp"));
        fs::write(&tmp, serde_json::to_string(&repr)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(key)
    }

    /// The stored result for the given provenance, or `None` on a miss. A
    /// file whose contents do not match its key is treated as a miss.
    pub fn load(
        &self,
        model_hash: &str,
        test_example_id: &str,
        method: &str,
        config_digest: &str,
    ) -> Result<Option<InfluenceResult>> {
        let key = cache_key(model_hash, test_example_id, method, config_digest);
        let path = self.path(&key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let repr: Repr = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                warn!("ignoring unreadable cache entry {}: {e}", path.display());
                return Ok(None);
            }
        };
        let matches = repr.format == FORMAT
            && repr.version == VERSION
            && repr.key == key
            && repr.model_hash == model_hash
            && repr.test_example_id == test_example_id
            && repr.method == method
            && repr.config_digest == config_digest;
        if !matches {
            debug!("cache entry {} does not match its key", path.display());
            return Ok(None);
        }
        let (raw, z) = match (hex_to_f64s(&repr.raw_scores), hex_to_f64s(&repr.z_scores)) {
            (Ok(r), Ok(z)) if r.len() == z.len() => (r, z),
            _ => return Ok(None),
        };
        Ok(Some(InfluenceResult {
            test_example_id: repr.test_example_id,
            predicted_class: repr.predicted_class,
            method: repr.method,
            raw_scores: raw,
            z_scores: z,
            model_hash: repr.model_hash,
            config_digest: repr.config_digest,
            converged: repr.converged,
        }))
    }
}
