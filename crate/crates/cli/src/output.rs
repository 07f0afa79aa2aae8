use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(kigt::Error),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl CliError {
    /// 2 for bad input, 3 for resource limits, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(e) if e.is_resource_limit() => 3,
            CliError::Model(kigt::Error::InvalidParameter(_) | kigt::Error::Degenerate(_)) => 2,
            CliError::Model(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<kigt::Error> for CliError {
    fn from(e: kigt::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Where a command's data goes, plus the sidecar manifest.
pub struct Sink {
    out: Option<PathBuf>,
    manifest: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, manifest: Option<PathBuf>) -> Self {
        let manifest = manifest.or_else(|| {
            out.as_ref().map(|p| {
                let mut s = p.clone().into_os_string();
                s.push(".manifest.json");
                PathBuf::from(s)
            })
        });
        Self { out, manifest }
    }

    pub fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    pub fn write_json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn finish(&self, run: RunManifest) -> CliResult<()> {
        if let Some(path) = &self.manifest {
            let mut outputs = Vec::new();
            if let Some(p) = &self.out {
                outputs.push(p.display().to_string());
            }
            let manifest = RunManifest { outputs, ..run };
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut w, &manifest)?;
            writeln!(w)?;
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix_secs: u64,
    pub wall_clock_secs: f64,
    pub outputs: Vec<String>,
}

pub struct Clock {
    started: Instant,
    unix: u64,
}

impl Clock {
    pub fn start() -> Self {
        Self {
            started: Instant::now(),
            unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn manifest<T: Serialize>(&self, command: &str, config: &T, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_secs: self.unix,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            outputs: Vec::new(),
        }
    }
}
