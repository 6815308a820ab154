//! Binary model container.
//!
//! All integers are little-endian `u64` unless noted, all reals little-endian
//! IEEE-754 `f64`, so a write/read round trip is exact.
//!
//! ```text
//! magic    8 bytes  "PECFMDL\0"
//! version  u32      1
//! kind     u8       0 = single factor model, 1 = mixture, 2 = additive (boost)
//! payload
//!   single:   factor block
//!   mixture:  K, pi[K], noise_sigma, K factor blocks
//!   additive: K, shrinkage, K factor blocks
//! factor block: d, m, n, U (d x m, row-major), V (d x n, row-major)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::boost::BoostModel;
use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::wmf::FactorModel;
use crate::Predictor;

pub const MAGIC: &[u8; 8] = b"PECFMDL\0";
pub const VERSION: u32 = 1;

const KIND_SINGLE: u8 = 0;
const KIND_MIXTURE: u8 = 1;
const KIND_ADDITIVE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Single(FactorModel),
    Mixture(EnsembleModel),
    Additive(BoostModel),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Single(_) => "single",
            SavedModel::Mixture(_) => "mixture",
            SavedModel::Additive(_) => "additive",
        }
    }

    fn inner(&self) -> &dyn Predictor {
        match self {
            SavedModel::Single(m) => m,
            SavedModel::Mixture(m) => m,
            SavedModel::Additive(m) => m,
        }
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        match self {
            SavedModel::Single(m) => {
                out.write_all(&[KIND_SINGLE])?;
                write_factors(&mut out, m)?;
            }
            SavedModel::Mixture(m) => {
                out.write_all(&[KIND_MIXTURE])?;
                write_u64(&mut out, m.len() as u64)?;
                for w in m.weights() {
                    write_f64(&mut out, *w)?;
                }
                write_f64(&mut out, m.noise_sigma())?;
                for c in m.components() {
                    write_factors(&mut out, c)?;
                }
            }
            SavedModel::Additive(m) => {
                out.write_all(&[KIND_ADDITIVE])?;
                write_u64(&mut out, m.len() as u64)?;
                write_f64(&mut out, m.shrinkage())?;
                for c in m.components() {
                    write_factors(&mut out, c)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a model file (bad magic)".into()));
        }
        let mut version = [0u8; 4];
        input.read_exact(&mut version)?;
        let version = u32::from_le_bytes(version);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let mut kind = [0u8; 1];
        input.read_exact(&mut kind)?;
        let model = match kind[0] {
            KIND_SINGLE => SavedModel::Single(read_factors(&mut input)?),
            KIND_MIXTURE => {
                let k = read_count(&mut input)?;
                let weights = (0..k).map(|_| read_f64(&mut input)).collect::<Result<Vec<_>>>()?;
                let sigma = read_f64(&mut input)?;
                let comps = (0..k).map(|_| read_factors(&mut input)).collect::<Result<Vec<_>>>()?;
                SavedModel::Mixture(EnsembleModel::new(comps, weights, sigma)?)
            }
            KIND_ADDITIVE => {
                let k = read_count(&mut input)?;
                let shrinkage = read_f64(&mut input)?;
                let comps = (0..k).map(|_| read_factors(&mut input)).collect::<Result<Vec<_>>>()?;
                SavedModel::Additive(BoostModel::new(comps, shrinkage)?)
            }
            other => return Err(Error::Format(format!("unknown model kind tag {other}"))),
        };
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after model".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

impl Predictor for SavedModel {
    fn num_users(&self) -> usize {
        self.inner().num_users()
    }

    fn num_items(&self) -> usize {
        self.inner().num_items()
    }

    fn score(&self, user: usize, item: usize) -> f64 {
        self.inner().score(user, item)
    }

    fn user_scores(&self, user: usize, out: &mut [f64]) {
        self.inner().user_scores(user, out)
    }
}

fn write_u64(out: &mut impl Write, v: u64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(out: &mut impl Write, v: f64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_count(input: &mut impl Read) -> Result<usize> {
    let v = read_u64(input)?;
    usize::try_from(v).ok().filter(|&v| v < (1 << 40)).ok_or_else(|| Error::Format(format!("implausible count {v}")))
}

/// Transposes a `rows x cols` block stored with each column contiguous into
/// row-major order (and back, with the arguments swapped).
fn transpose(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for c in 0..cols {
        for r in 0..rows {
            out[r * cols + c] = data[c * rows + r];
        }
    }
    out
}

fn write_factors(out: &mut impl Write, m: &FactorModel) -> Result<()> {
    let (d, users, items) = (m.dim(), m.num_users(), m.num_items());
    for v in [d, users, items] {
        write_u64(out, v as u64)?;
    }
    for x in transpose(m.user_factors(), d, users).into_iter().chain(transpose(m.item_factors(), d, items)) {
        write_f64(out, x)?;
    }
    Ok(())
}

fn read_factors(input: &mut impl Read) -> Result<FactorModel> {
    let d = read_count(input)?;
    let users = read_count(input)?;
    let items = read_count(input)?;
    let mut read_block = |len: usize| (0..len).map(|_| read_f64(input)).collect::<Result<Vec<_>>>();
    let u = read_block(d * users)?;
    let v = read_block(d * items)?;
    // row-major (d x m) back to one contiguous vector per user
    FactorModel::from_vectors(d, users, items, transpose(&u, users, d), transpose(&v, items, d))
}
