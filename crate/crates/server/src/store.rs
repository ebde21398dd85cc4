//! File-backed persistence under the data directory:
//!
//! ```text
//! datasets/<id>.json    ingested columnar snapshot, written once
//! documents/<id>.json   latest canvas document, replaced atomically
//! jobs.jsonl            one job snapshot per line, appended per transition
//! ```
//!
//! Whole-file writes go through a temporary file and a rename, so a crash
//! leaves either the old or the new file. A torn last line in the job log
//! is ignored on load.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hypocanvas_core::canvas::CanvasDocument;
use hypocanvas_core::data::Dataset;
use uuid::Uuid;

use crate::jobs::GenerationJob;

const JOB_LOG: &str = "jobs.jsonl";

/// Everything found on disk at startup.
#[derive(Debug, Default)]
pub struct Loaded {
    pub datasets: Vec<Dataset>,
    pub documents: Vec<CanvasDocument>,
    /// Latest snapshot per job, in first-seen order.
    pub jobs: Vec<GenerationJob>,
    /// Files or log lines that could not be read.
    pub skipped: Vec<String>,
}

pub struct Store {
    root: PathBuf,
    job_log: Mutex<File>,
}

impl Store {
    pub fn open(root: &Path) -> io::Result<(Self, Loaded)> {
        fs::create_dir_all(root.join("datasets"))?;
        fs::create_dir_all(root.join("documents"))?;
        let mut loaded = Loaded::default();

        for path in json_files(&root.join("datasets"))? {
            match fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| {
                serde_json::from_str::<Dataset>(&t).map_err(|e| e.to_string())
            }) {
                Ok(ds) => loaded.datasets.push(ds),
                Err(e) => loaded.skipped.push(format!("{}: {e}", path.display())),
            }
        }
        for path in json_files(&root.join("documents"))? {
            match fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| CanvasDocument::from_json(&t).map_err(|e| e.to_string()))
            {
                Ok(doc) => loaded.documents.push(doc),
                Err(e) => loaded.skipped.push(format!("{}: {e}", path.display())),
            }
        }

        let log_path = root.join(JOB_LOG);
        if log_path.exists() {
            let mut order = Vec::new();
            let mut latest: HashMap<Uuid, GenerationJob> = HashMap::new();
            for (n, line) in BufReader::new(File::open(&log_path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<GenerationJob>(&line) {
                    Ok(job) => {
                        if !latest.contains_key(&job.job_id) {
                            order.push(job.job_id);
                        }
                        latest.insert(job.job_id, job);
                    }
                    Err(e) => loaded.skipped.push(format!("{JOB_LOG} line {}: {e}", n + 1)),
                }
            }
            loaded.jobs = order.into_iter().filter_map(|id| latest.remove(&id)).collect();
        }
        let mut log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        // a torn tail from a crash must not swallow the next record
        let len = log.metadata()?.len();
        if len > 0 && !ends_with_newline(&log_path)? {
            log.write_all(b"\n")?;
        }

        Ok((Self { root: root.to_path_buf(), job_log: Mutex::new(log) }, loaded))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn save_dataset(&self, ds: &Dataset) -> io::Result<()> {
        let json = serde_json::to_vec(ds).map_err(io::Error::other)?;
        write_atomic(&self.root.join("datasets").join(format!("{}.json", ds.id())), &json)
    }

    pub fn save_document(&self, doc: &CanvasDocument) -> io::Result<()> {
        write_atomic(&self.root.join("documents").join(format!("{}.json", doc.id())), doc.to_json().as_bytes())
    }

    pub fn append_job(&self, job: &GenerationJob) -> io::Result<()> {
        let mut line = serde_json::to_vec(job).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut log = self.job_log.lock().unwrap();
        log.write_all(&line)?;
        log.sync_data()
    }
}

fn json_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

fn ends_with_newline(path: &Path) -> io::Result<bool> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = File::open(path)?;
    f.seek(SeekFrom::End(-1))?;
    let mut last = [0u8; 1];
    f.read_exact(&mut last)?;
    Ok(last[0] == b'\n')
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("json.{}.tmp", Uuid::now_v7()));
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_data()?;
    drop(f);
    fs::rename(&tmp, path)
}
