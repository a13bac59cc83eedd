//! On-disk artifact formats.
//!
//! All binary numbers are little-endian IEEE-754 float64 unless stated
//! otherwise; all JSON is written with stable field order, so identical
//! inputs produce byte-identical files.
//!
//! **Projector** (`projector.bin` + `projector.json`): the binary file holds
//! the basis `V_r` (d×r, row-major) followed by the cobasis `W_r = Γ V_r`
//! (d×r, row-major); the sidecar records `{dim, rank, metric_hash,
//! eigenvalues}`. `metric_hash` is the hex SHA-256 of the generating
//! problem's canonical spec, the construction space tag, and the metric
//! matrix bytes — `sample` recomputes it from the config and refuses to run
//! on mismatch.
//!
//! **Chain** (`*.bin`): a `u64` header length, a JSON header `{dim, K,
//! kernel, seed, N, rank}`, then `K` records of `dim + 2` floats: the state,
//! the unnormalized log-target, and the accept flag (1.0 or 0.0).
//!
//! **Data** (`data.csv` + `data.json` + `truth.bin` + `field.bin`): the CSV
//! holds `index,value` rows of the observation vector; the sidecar carries
//! the problem fingerprint, generator seed, optional noise σ, and the
//! SHA-256 of the CSV bytes. The two `.bin` files are raw float64 snapshots
//! of the true parameter vector and its field representation.

use crate::error::{io_err, CliError, Result};
use lis_core::linalg::RankRProjector;
use lis_core::samplers::ChainRecord;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const PROJECTOR_BIN: &str = "projector.bin";
pub const PROJECTOR_SIDECAR: &str = "projector.json";
pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const REPORT_JSON: &str = "report.json";
pub const DATA_CSV: &str = "data.csv";
pub const DATA_SIDECAR: &str = "data.json";
pub const TRUTH_BIN: &str = "truth.bin";
pub const FIELD_BIN: &str = "field.bin";
pub const MANIFEST_JSON: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Shortest decimal that round-trips to the same float64 (Rust's `{:?}`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

// ---------------------------------------------------------------------------
// Projector files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorSidecar {
    pub dim: usize,
    pub rank: usize,
    pub metric_hash: String,
    /// Full construction spectrum, descending: generalized eigenvalues for
    /// the eigenvector kinds, prior eigenvalues for `prior_based`, sorted
    /// scores for `coordinate`.
    pub eigenvalues: Vec<f64>,
}

pub fn save_projector(
    dir: &Path,
    projector: &RankRProjector,
    metric_hash: &str,
    eigenvalues: &[f64],
) -> Result<()> {
    let bin_path = dir.join(PROJECTOR_BIN);
    let mut bytes =
        Vec::with_capacity(2 * projector.dim() * projector.rank() * 8);
    for mat in [projector.basis(), projector.cobasis()] {
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                bytes.extend_from_slice(&mat[(i, j)].to_le_bytes());
            }
        }
    }
    std::fs::write(&bin_path, bytes).map_err(io_err(&bin_path))?;

    let sidecar = ProjectorSidecar {
        dim: projector.dim(),
        rank: projector.rank(),
        metric_hash: metric_hash.to_string(),
        eigenvalues: eigenvalues.to_vec(),
    };
    write_json(&dir.join(PROJECTOR_SIDECAR), &sidecar)
}

pub fn load_projector(dir: &Path) -> Result<(RankRProjector, ProjectorSidecar)> {
    let sidecar: ProjectorSidecar = read_json(&dir.join(PROJECTOR_SIDECAR))?;
    let bin_path = dir.join(PROJECTOR_BIN);
    let bytes = std::fs::read(&bin_path).map_err(io_err(&bin_path))?;
    let (d, r) = (sidecar.dim, sidecar.rank);
    let expected = 2 * d * r * 8;
    if bytes.len() != expected {
        return Err(CliError::Format {
            path: bin_path,
            message: format!(
                "expected {expected} bytes for a {d}×{r} basis/cobasis pair, found {}",
                bytes.len()
            ),
        });
    }
    let floats: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    // The file stores each matrix row-major.
    let basis = DMatrix::from_row_slice(d, r, &floats[..d * r]);
    let cobasis = DMatrix::from_row_slice(d, r, &floats[d * r..]);
    let projector = RankRProjector::from_parts(basis, cobasis).map_err(|e| CliError::Format {
        path: bin_path.clone(),
        message: format!("stored basis/cobasis pair is not a valid projector: {e}"),
    })?;
    Ok((projector, sidecar))
}

/// Offline construction report written next to the projector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceReport {
    /// Monte Carlo sample count behind the averaged matrix (0 when the kind
    /// involves no sampling).
    #[serde(rename = "K")]
    pub k: usize,
    pub kind: String,
    /// Tail of the running-trace history of the Monte Carlo average — flat
    /// values indicate a converged estimate.
    pub trace_history_tail: Vec<f64>,
    pub selected_rank: usize,
    /// Certified KL bound `(κ/2)·Σ_{i>r} λ_i` at the selected rank; absent
    /// for kinds without a certificate (`prior_based`, `coordinate`).
    pub bound_at_rank: Option<f64>,
}

// ---------------------------------------------------------------------------
// Chain files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainHeader {
    pub dim: usize,
    /// Number of recorded steps.
    #[serde(rename = "K")]
    pub k: usize,
    pub kernel: String,
    pub seed: u64,
    /// Complement-set size of the reduced likelihood driving the chain.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Projector rank, for subspace-driven chains.
    pub rank: Option<usize>,
}

pub fn save_chain(
    path: &Path,
    chain: &ChainRecord,
    n: Option<usize>,
    rank: Option<usize>,
) -> Result<()> {
    let header = ChainHeader {
        dim: chain.dim(),
        k: chain.len(),
        kernel: chain.kernel().to_string(),
        seed: chain.seed(),
        n,
        rank,
    };
    let header_bytes = serde_json::to_vec(&header).expect("chain headers always serialize");
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(io_err(path))?,
    );
    let io = io_err(path);
    (|| -> std::io::Result<()> {
        file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        file.write_all(&header_bytes)?;
        for j in 0..chain.len() {
            for &v in chain.state(j).iter() {
                file.write_all(&v.to_le_bytes())?;
            }
            file.write_all(&chain.log_targets()[j].to_le_bytes())?;
            let flag: f64 = if chain.accepted()[j] { 1.0 } else { 0.0 };
            file.write_all(&flag.to_le_bytes())?;
        }
        file.flush()
    })()
    .map_err(io)
}

pub fn load_chain(path: &Path) -> Result<(ChainHeader, ChainRecord)> {
    let mut file = std::io::BufReader::new(
        std::fs::File::open(path).map_err(io_err(path))?,
    );
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes).map_err(io_err(path))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    if header_len > 1 << 20 {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("implausible header length {header_len}"),
        });
    }
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes).map_err(io_err(path))?;
    let header: ChainHeader =
        serde_json::from_slice(&header_bytes).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: format!("bad chain header: {e}"),
        })?;

    let record_len = header.dim + 2;
    let mut body = Vec::new();
    file.read_to_end(&mut body).map_err(io_err(path))?;
    if body.len() != header.k * record_len * 8 {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!(
                "expected {} records of {} floats, found {} bytes",
                header.k,
                record_len,
                body.len()
            ),
        });
    }
    let mut chain = ChainRecord::with_capacity(
        header.dim,
        header.kernel.clone(),
        header.seed,
        header.k,
    );
    for rec in body.chunks_exact(record_len * 8) {
        let mut floats = rec
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let state = DVector::from_fn(header.dim, |_, _| floats.next().expect("length checked"));
        let log_target = floats.next().expect("length checked");
        let flag = floats.next().expect("length checked");
        if flag != 0.0 && flag != 1.0 {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                message: format!("accept flag must be 0.0 or 1.0, found {flag}"),
            });
        }
        chain.push(state, log_target, flag == 1.0);
    }
    Ok((header, chain))
}

// ---------------------------------------------------------------------------
// Data files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSidecar {
    pub problem_fingerprint: String,
    pub seed: u64,
    pub noise_sigma: Option<f64>,
    pub dim_obs: usize,
    /// Hex SHA-256 of the `data.csv` bytes; checked on every load.
    pub data_sha256: String,
}

pub fn save_data(
    dir: &Path,
    y: &DVector<f64>,
    x_true: &DVector<f64>,
    field: &DVector<f64>,
    problem_fingerprint: &str,
    seed: u64,
    noise_sigma: Option<f64>,
) -> Result<()> {
    let mut csv = String::from("index,value\n");
    for (i, v) in y.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, fmt_f64(*v)));
    }
    let csv_path = dir.join(DATA_CSV);
    std::fs::write(&csv_path, csv.as_bytes()).map_err(io_err(&csv_path))?;

    let sidecar = DataSidecar {
        problem_fingerprint: problem_fingerprint.to_string(),
        seed,
        noise_sigma,
        dim_obs: y.len(),
        data_sha256: sha256_hex(csv.as_bytes()),
    };
    write_json(&dir.join(DATA_SIDECAR), &sidecar)?;

    write_f64_vector(&dir.join(TRUTH_BIN), x_true)?;
    write_f64_vector(&dir.join(FIELD_BIN), field)
}

/// Loads the observation vector, verifying the recorded CSV hash.
pub fn load_data(dir: &Path) -> Result<(DVector<f64>, DataSidecar)> {
    let sidecar: DataSidecar = read_json(&dir.join(DATA_SIDECAR))?;
    let csv_path = dir.join(DATA_CSV);
    let bytes = std::fs::read(&csv_path).map_err(io_err(&csv_path))?;
    let found = sha256_hex(&bytes);
    if found != sidecar.data_sha256 {
        return Err(CliError::HashMismatch {
            what: "data file",
            expected: sidecar.data_sha256,
            found,
        });
    }
    let text = String::from_utf8(bytes).map_err(|e| CliError::Format {
        path: csv_path.clone(),
        message: e.to_string(),
    })?;
    let mut values = Vec::with_capacity(sidecar.dim_obs);
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "index,value" {
                return Err(CliError::Format {
                    path: csv_path,
                    message: format!("expected header \"index,value\", found \"{line}\""),
                });
            }
            continue;
        }
        let bad = || CliError::Format {
            path: csv_path.clone(),
            message: format!("bad row at line {}: \"{line}\"", lineno + 1),
        };
        let (idx, val) = line.split_once(',').ok_or_else(bad)?;
        if idx.parse::<usize>().map_err(|_| bad())? != lineno {
            return Err(bad());
        }
        values.push(val.parse::<f64>().map_err(|_| bad())?);
    }
    if values.len() != sidecar.dim_obs {
        return Err(CliError::Format {
            path: csv_path,
            message: format!(
                "sidecar promises {} observations, CSV holds {}",
                sidecar.dim_obs,
                values.len()
            ),
        });
    }
    Ok((DVector::from_vec(values), sidecar))
}

pub fn write_f64_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(v.len() * 8);
    for x in v.iter() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_f64_vector(path: &Path) -> Result<DVector<f64>> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("length {} is not a multiple of 8", bytes.len()),
        });
    }
    Ok(DVector::from_iterator(
        bytes.len() / 8,
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))),
    ))
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub method: String,
    pub kernel: String,
    pub problem_fingerprint: String,
    pub reduction_kind: Option<String>,
    pub rank: Option<usize>,
    pub n: Option<usize>,
    pub steps: usize,
    pub step_size: f64,
    pub recycle: Option<bool>,
    pub projector_metric_hash: Option<String>,
    pub data_sha256: String,
    /// Free-form remarks, e.g. the estimator-exactness note for N = 1
    /// pseudo-marginal runs.
    pub notes: Vec<String>,
    pub runs: Vec<RunEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub seed: u64,
    /// The method's working chain (subspace coordinates for subspace
    /// methods, full space otherwise), relative to the manifest directory.
    pub chain_file: String,
    /// Full-space companion chain, when the method produces one.
    pub full_chain_file: Option<String>,
    pub acceptance_rate: f64,
    /// Mean second-stage acceptance probability (delayed acceptance only).
    pub stage2_mean_beta: Option<f64>,
    pub stage2_evals: Option<usize>,
    /// Spread of the log reduced-likelihood estimate at the final state
    /// (pseudo-marginal only).
    pub pm_log_likelihood_sd: Option<f64>,
    pub wall_seconds: f64,
}

// ---------------------------------------------------------------------------
// JSON and CSV helpers
// ---------------------------------------------------------------------------

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact JSON always serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes a CSV with the given header line and pre-rendered rows.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// `chain_s<seed>.bin` naming used by `sample`.
pub fn chain_file_name(seed: u64) -> String {
    format!("chain_s{seed}.bin")
}

pub fn full_chain_file_name(seed: u64) -> String {
    format!("full_s{seed}.bin")
}

pub fn path_string(path: &Path) -> String {
    path.display().to_string()
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "chain".to_string())
}

#[allow(dead_code)]
fn _assert_path_buf_used(p: PathBuf) -> PathBuf {
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use lis_core::linalg::SpdMatrix;

    #[test]
    fn projector_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        // A Γ-orthonormal rank-2 basis in d = 3 under Γ = diag(4, 1, 1/4).
        let gamma = SpdMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.25])).unwrap();
        let basis = DMatrix::from_column_slice(
            3,
            2,
            &[0.5, 0.0, 0.0, /* col 2 */ 0.0, 1.0, 0.0],
        );
        let cobasis = gamma.matrix() * &basis;
        let proj = RankRProjector::from_parts(basis, cobasis).unwrap();
        let eigen = [3.0, 0.5, 0.125];
        save_projector(dir.path(), &proj, "sha-test", &eigen).unwrap();
        let (loaded, sidecar) = load_projector(dir.path()).unwrap();
        assert_eq!(loaded.basis(), proj.basis());
        assert_eq!(loaded.cobasis(), proj.cobasis());
        assert_eq!(sidecar.dim, 3);
        assert_eq!(sidecar.rank, 2);
        assert_eq!(sidecar.metric_hash, "sha-test");
        assert_eq!(sidecar.eigenvalues, eigen);
    }

    #[test]
    fn truncated_projector_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let sidecar = ProjectorSidecar {
            dim: 3,
            rank: 2,
            metric_hash: "h".into(),
            eigenvalues: vec![1.0],
        };
        write_json(&dir.path().join(PROJECTOR_SIDECAR), &sidecar).unwrap();
        std::fs::write(dir.path().join(PROJECTOR_BIN), [0u8; 24]).unwrap();
        let err = load_projector(dir.path()).unwrap_err();
        assert_eq!(err.kind(), "format");
    }

    #[test]
    fn chain_round_trips_bitwise_including_negative_zero() {
        let dir = tempfile::tempdir().unwrap();
        let mut chain = ChainRecord::with_capacity(2, "unit".to_string(), 99, 3);
        chain.push(DVector::from_vec(vec![1.5, -0.0]), -3.25, true);
        chain.push(DVector::from_vec(vec![-2.0, 0.125]), -3.5, false);
        chain.push(DVector::from_vec(vec![0.75, 4.0]), -1.0, true);
        let path = dir.path().join("c.bin");
        save_chain(&path, &chain, Some(5), Some(2)).unwrap();

        let (header, loaded) = load_chain(&path).unwrap();
        assert_eq!(header.dim, 2);
        assert_eq!(header.k, 3);
        assert_eq!(header.kernel, "unit");
        assert_eq!(header.seed, 99);
        assert_eq!(header.n, Some(5));
        assert_eq!(header.rank, Some(2));
        assert_eq!(loaded, chain);
        // −0.0 must survive bit-for-bit.
        assert!(loaded.state(0)[1].to_bits() == (-0.0f64).to_bits());

        // Saving the loaded chain reproduces the file byte-for-byte.
        let path2 = dir.path().join("c2.bin");
        save_chain(&path2, &loaded, Some(5), Some(2)).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupt_chain_flags_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut chain = ChainRecord::with_capacity(1, "unit".to_string(), 1, 1);
        chain.push(DVector::from_vec(vec![1.0]), 0.0, true);
        let path = dir.path().join("c.bin");
        save_chain(&path, &chain, None, None).unwrap();
        // Overwrite the accept flag (last 8 bytes) with 0.5.
        let mut bytes = std::fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 8..].copy_from_slice(&0.5f64.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert_eq!(load_chain(&path).unwrap_err().kind(), "format");
    }

    #[test]
    fn data_round_trip_verifies_hash() {
        let dir = tempfile::tempdir().unwrap();
        let y = DVector::from_vec(vec![0.1, -2.5, 1e-17]);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        save_data(dir.path(), &y, &x, &x, "fp", 7, Some(0.25)).unwrap();
        let (loaded, sidecar) = load_data(dir.path()).unwrap();
        assert_eq!(loaded, y);
        assert_eq!(sidecar.seed, 7);
        assert_eq!(sidecar.noise_sigma, Some(0.25));
        assert_eq!(sidecar.problem_fingerprint, "fp");
        assert_eq!(read_f64_vector(&dir.path().join(TRUTH_BIN)).unwrap(), x);

        // Tampering with the CSV trips the hash check.
        let csv = dir.path().join(DATA_CSV);
        let mut text = std::fs::read_to_string(&csv).unwrap();
        text = text.replace("-2.5", "-2.4");
        std::fs::write(&csv, text).unwrap();
        assert_eq!(load_data(dir.path()).unwrap_err().kind(), "hash_mismatch");
    }

    #[test]
    fn csv_floats_round_trip_exactly() {
        for v in [
            0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
            -0.0,
            6.02e23,
        ] {
            let text = fmt_f64(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{text}");
        }
    }
}
