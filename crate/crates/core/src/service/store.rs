//! Append-only journal backing the service.
//!
//! Every state change is one JSON object per line in `journal.jsonl`. The
//! in-memory state is rebuilt by replaying the file from the top; a record is
//! written (and flushed) before the change it describes is acknowledged.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::{Course, SessionRecord};
use crate::error::{Error, Result};
use crate::summarizer::UsageEvent;

pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    CourseRegistered { course: Course },
    SessionOpened { session: SessionRecord },
    /// `samples` are `[t_ms, level, face_detected]`.
    SamplesIngested { session_id: String, student_token: String, samples: Vec<(i64, f64, bool)> },
    SessionClosed { session_id: String, recording_end_ms: i64, recording_uri: String },
    UsageLogged { event: UsageEvent },
}

pub struct Journal {
    path: PathBuf,
    sync: bool,
    writer: Mutex<BufWriter<File>>,
}

impl Journal {
    /// Opens (creating if needed) the journal under `dir` and returns the
    /// records already in it. A torn final line is cut off.
    pub fn open(dir: &Path, sync: bool) -> Result<(Journal, Vec<Record>)> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(JOURNAL_FILE);
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;

        let mut records = Vec::new();
        let mut good_len = 0u64;
        {
            let mut reader = BufReader::new(&file);
            let mut line = String::new();
            let mut offset = 0u64;
            loop {
                line.clear();
                let n = reader.read_line(&mut line)?;
                if n == 0 {
                    break;
                }
                offset += n as u64;
                if !line.ends_with('\n') {
                    break;
                }
                match serde_json::from_str::<Record>(line.trim_end()) {
                    Ok(r) => {
                        records.push(r);
                        good_len = offset;
                    }
                    Err(e) => {
                        let rest_is_empty = reader.fill_buf()?.is_empty();
                        if rest_is_empty {
                            break;
                        }
                        return Err(Error::Storage(format!("{}: corrupt record at byte {}: {e}", path.display(), offset - n as u64)));
                    }
                }
            }
        }
        if file.metadata()?.len() != good_len {
            tracing::warn!(path = %path.display(), kept = good_len, "truncating torn journal tail");
            file.set_len(good_len)?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((Journal { path, sync, writer: Mutex::new(BufWriter::new(file)) }, records))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &Record) -> Result<()> {
        let mut line = serde_json::to_vec(record).map_err(|e| Error::Storage(e.to_string()))?;
        line.push(b'\n');
        let mut w = self.writer.lock();
        w.write_all(&line)?;
        w.flush()?;
        if self.sync {
            w.get_ref().sync_data()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn usage(n: i64) -> Record {
        Record::UsageLogged {
            event: UsageEvent {
                student_ref: "t".into(),
                session_ref: "s".into(),
                start_s: n,
                end_s: n + 1,
                strategy_played: crate::summarizer::Strategy::Full,
                at_ms: 0,
            },
        }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let (j, existing) = Journal::open(dir.path(), false).unwrap();
        assert!(existing.is_empty());
        j.append(&usage(1)).unwrap();
        j.append(&usage(2)).unwrap();
        drop(j);
        let (_, records) = Journal::open(dir.path(), false).unwrap();
        assert_eq!(records, vec![usage(1), usage(2)]);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let (j, _) = Journal::open(dir.path(), false).unwrap();
        j.append(&usage(1)).unwrap();
        drop(j);
        let mut f = OpenOptions::new().append(true).open(dir.path().join(JOURNAL_FILE)).unwrap();
        f.write_all(br#"{"type":"usage_logged","ev"#).unwrap();
        drop(f);

        let (j, records) = Journal::open(dir.path(), false).unwrap();
        assert_eq!(records, vec![usage(1)]);
        j.append(&usage(3)).unwrap();
        drop(j);
        let (_, records) = Journal::open(dir.path(), false).unwrap();
        assert_eq!(records, vec![usage(1), usage(3)]);
    }

    #[test]
    fn corruption_in_the_middle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(JOURNAL_FILE), "not json\n{\"type\":\"x\"}\n").unwrap();
        assert!(matches!(Journal::open(dir.path(), false), Err(Error::Storage(_))));
    }
}
