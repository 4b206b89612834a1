//! The JSONL event log as storage, with an in-memory index of line offsets
//! per session. One writer at a time appends whole batches; readers copy the
//! offsets of a session under the lock and read the lines afterwards.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;
use tmfix_core::event::{decode_event, is_non_event_line, SessionEvent};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("event log {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("event log {path} changed at byte {offset} after indexing")]
    Corrupt { path: PathBuf, offset: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Span {
    offset: u64,
    len: usize,
}

#[derive(Debug)]
struct Inner {
    file: File,
    end: u64,
    index: HashMap<String, Vec<Span>>,
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl Store {
    /// Opens or creates the log. Lines that do not decode are skipped with a
    /// warning and never served.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let io = |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        let mut index: HashMap<String, Vec<Span>> = HashMap::new();
        let mut reader = BufReader::new(&file);
        let mut offset = 0u64;
        let mut line_no = 0usize;
        let mut buf = Vec::new();
        let mut last_byte = b'\n';
        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf).map_err(io)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            last_byte = buf[n - 1];
            let text = String::from_utf8_lossy(&buf);
            let line = text.trim_end_matches(['\n', '\r']);
            if !is_non_event_line(line) {
                match decode_event(line) {
                    Ok(e) => index.entry(e.session_id().to_string()).or_default().push(Span {
                        offset,
                        len: line.len(),
                    }),
                    Err(e) => tracing::warn!(line = line_no, error = %e, "skipping undecodable log line"),
                }
            }
            offset += n as u64;
        }
        drop(reader);
        if last_byte != b'\n' {
            file.write_all(b"\n").map_err(io)?;
            offset += 1;
        }
        tracing::info!(path = %path.display(), sessions = index.len(), "event log indexed");
        Ok(Store {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner {
                file,
                end: offset,
                index,
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn io(&self, source: std::io::Error) -> StoreError {
        StoreError::Io {
            path: self.path.clone(),
            source,
        }
    }

    /// Appends the lines in a single write. On failure the log is truncated
    /// back to its previous length and the index is left untouched.
    pub fn append(&self, lines: &[(&str, &SessionEvent)]) -> Result<(), StoreError> {
        if lines.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        let mut spans = Vec::with_capacity(lines.len());
        let mut inner = self.inner.lock().expect("store lock poisoned");
        let start = inner.end;
        for (line, event) in lines {
            spans.push((event.session_id(), start + buf.len() as u64, line.len()));
            buf.push_str(line);
            buf.push('\n');
        }
        let written = inner.file.write_all(buf.as_bytes()).and_then(|_| inner.file.flush());
        if let Err(e) = written {
            if let Err(t) = inner.file.set_len(start) {
                tracing::error!(error = %t, "could not roll back partial append");
            }
            return Err(self.io(e));
        }
        inner.end = start + buf.len() as u64;
        for (sid, offset, len) in spans {
            inner
                .index
                .entry(sid.to_string())
                .or_default()
                .push(Span { offset, len });
        }
        Ok(())
    }

    /// Every stored event of a session, in log order.
    pub fn session_events(&self, session_id: &str) -> Result<Vec<SessionEvent>, StoreError> {
        let spans = {
            let inner = self.inner.lock().expect("store lock poisoned");
            match inner.index.get(session_id) {
                Some(s) => s.clone(),
                None => return Ok(Vec::new()),
            }
        };
        let mut file = File::open(&self.path).map_err(|e| self.io(e))?;
        let mut events = Vec::with_capacity(spans.len());
        let mut buf = Vec::new();
        for span in &spans {
            buf.resize(span.len, 0);
            file.seek(SeekFrom::Start(span.offset)).map_err(|e| self.io(e))?;
            file.read_exact(&mut buf).map_err(|e| self.io(e))?;
            let event = std::str::from_utf8(&buf)
                .ok()
                .and_then(|l| decode_event(l).ok())
                .ok_or(StoreError::Corrupt {
                    path: self.path.clone(),
                    offset: span.offset,
                })?;
            events.push(event);
        }
        Ok(events)
    }

    pub fn session_count(&self) -> usize {
        self.inner.lock().expect("store lock poisoned").index.len()
    }
}
