//! Line-delimited JSON sessions with a child process.
//!
//! The engine writes one JSON object per line to the child's stdin and reads
//! one JSON object per line from its stdout. A session opens with
//! `{"hello": 1, "alphabet": 258}` and waits for `{"ready": true}`. Every
//! request carries an integer `id`; the matching response must echo it, and
//! responses must come back in request order.
//!
//! Once any error is observed the session is poisoned and every later call
//! fails, so a half-finished exchange can never be silently resumed.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::ALPHABET_SIZE;
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Deserialize)]
struct Ready {
    ready: bool,
}

pub struct LineSession {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
    poisoned: bool,
}

impl std::fmt::Debug for LineSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LineSession")
            .field("command", &self.command)
            .field("next_id", &self.next_id)
            .field("poisoned", &self.poisoned)
            .finish()
    }
}

impl LineSession {
    /// Starts `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Session(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let mut session = LineSession {
            command: command.to_string(),
            child,
            stdin,
            lines,
            timeout,
            next_id: 0,
            poisoned: false,
        };
        session.send_line(&json!({"hello": 1, "alphabet": ALPHABET_SIZE}))?;
        let reply = session.recv(None)?;
        match serde_json::from_value::<Ready>(reply) {
            Ok(Ready { ready: true }) => Ok(session),
            _ => Err(session.poison(Error::Protocol {
                request_id: None,
                message: "expected {\"ready\": true}".into(),
            })),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn poison(&mut self, err: Error) -> Error {
        self.poisoned = true;
        let _ = self.child.kill();
        err
    }

    fn send_line(&mut self, value: &Value) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Session("stdin already closed".into()))?;
        let mut line = serde_json::to_vec(value).expect("JSON values always serialize");
        line.push(b'\n');
        if let Err(e) = stdin.write_all(&line).and_then(|_| stdin.flush()) {
            return Err(self.poison(Error::Session(format!("write to external process failed: {e}"))));
        }
        Ok(())
    }

    fn recv(&mut self, request_id: Option<u64>) -> Result<Value> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(self.poison(Error::Session(format!("read failed: {e}")))),
            Err(RecvTimeoutError::Timeout) => {
                let what = request_id.map_or_else(|| "handshake".to_string(), |id| format!("request {id}"));
                return Err(self.poison(Error::Session(format!(
                    "timed out after {:?} waiting for {what}",
                    self.timeout
                ))));
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(self.poison(Error::Session("external process exited".into())))
            }
        };
        serde_json::from_str(&line).map_err(|e| {
            self.poison(Error::Protocol {
                request_id,
                message: format!("malformed response line: {e}"),
            })
        })
    }

    /// Sends `body` with a fresh `id` and returns the decoded response.
    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&mut self, body: &Req) -> Result<(u64, Resp)> {
        if self.poisoned {
            return Err(Error::Session("session is no longer usable after an earlier error".into()));
        }
        let id = self.next_id;
        self.next_id += 1;
        let mut value = serde_json::to_value(body).expect("request types always serialize");
        match value.as_object_mut() {
            Some(obj) => {
                obj.insert("id".into(), json!(id));
            }
            None => return Err(Error::Internal("request body must be a JSON object".into())),
        }
        self.send_line(&value)?;
        let reply = self.recv(Some(id))?;
        match reply.get("id").and_then(Value::as_u64) {
            Some(got) if got == id => {}
            got => {
                return Err(self.poison(Error::Protocol {
                    request_id: Some(id),
                    message: format!("response id {got:?} does not match request id {id}"),
                }))
            }
        }
        let resp = serde_json::from_value(reply).map_err(|e| {
            self.poison(Error::Protocol {
                request_id: Some(id),
                message: e.to_string(),
            })
        })?;
        Ok((id, resp))
    }

    /// Marks the session unusable after the caller rejected a response.
    pub fn reject(&mut self, request_id: u64, message: impl Into<String>) -> Error {
        self.poison(Error::Protocol {
            request_id: Some(request_id),
            message: message.into(),
        })
    }
}

impl Drop for LineSession {
    fn drop(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
