//! Run directories: config snapshot, manifest, Hall-of-Fame genomes,
//! generation logs and a per-round checkpoint for resume.
//!
//! ```text
//! <run>/config.toml           config snapshot
//! <run>/manifest.json         hash, version, progress
//! <run>/hof/gen_NNNN/<role>.json
//! <run>/generations.jsonl     one record per role per round
//! <run>/timings.jsonl         wall-clock time per role per round
//! <run>/checkpoint.json       full coevolution state after the last round
//! <run>/.lock                 present while a command owns the directory
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coevo::{CoevoState, Role};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::neat::Genome;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: u32,
    pub generations_completed: usize,
    pub total_generations: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    root: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Writes through a temporary file and a rename so readers never see a
/// half-written file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

fn append_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r)?);
        buf.push('\n');
    }
    file.write_all(buf.as_bytes())
        .map_err(|e| Error::io(format!("appending to {}", path.display()), e))
}

/// Keeps only the first `lines` lines of a log file.
fn truncate_lines(path: &Path, lines: usize) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut kept = String::new();
    for line in BufReader::new(file).lines().take(lines) {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        kept.push_str(&line);
        kept.push('\n');
    }
    write_atomic(path, kept.as_bytes())
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.root.join("checkpoint.json")
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join("generations.jsonl")
    }

    pub fn timings_path(&self) -> PathBuf {
        self.root.join("timings.jsonl")
    }

    pub fn lock_path(&self) -> PathBuf {
        self.root.join(".lock")
    }

    pub fn hof_path(&self, generation: usize, role: Role) -> PathBuf {
        self.root
            .join("hof")
            .join(format!("gen_{generation:04}"))
            .join(format!("{}.json", role.name()))
    }

    pub fn exists(&self) -> bool {
        self.manifest_path().exists()
    }

    pub fn read_manifest(&self) -> Result<RunManifest> {
        Ok(serde_json::from_str(&read(&self.manifest_path())?)?)
    }

    fn write_manifest(&self, manifest: &RunManifest) -> Result<()> {
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        write_atomic(&self.manifest_path(), text.as_bytes())
    }

    /// The config the run was started with.
    pub fn read_config(&self) -> Result<RunConfig> {
        RunConfig::from_toml_str(&read(&self.config_path())?)
    }

    pub fn load_genome(&self, generation: usize, role: Role) -> Result<Genome> {
        let path = self.hof_path(generation, role);
        if !path.exists() {
            return Err(Error::Inventory {
                generation,
                role: role.name().to_string(),
            });
        }
        Genome::from_json(&read(&path)?)
    }

    pub fn load_trio(&self, generation: usize) -> Result<[Genome; 3]> {
        Ok([
            self.load_genome(generation, Role::Predator(0))?,
            self.load_genome(generation, Role::Predator(1))?,
            self.load_genome(generation, Role::Predator(2))?,
        ])
    }

    /// Number of leading generations with a genome file for `role`.
    pub fn generations_for(&self, role: Role) -> usize {
        (0..).take_while(|&g| self.hof_path(g, role).exists()).count()
    }

    pub fn lock(&self) -> Result<RunLock> {
        RunLock::acquire(&self.lock_path())
    }

    fn write_round(&self, state: &CoevoState, report: &crate::coevo::RoundReport) -> Result<()> {
        let generation = state.generation - 1;
        let dir = self.hof_path(generation, Role::Prey).parent().unwrap().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        for role in Role::CYCLE {
            let genome = state.hall_of_fame.get(role, generation).expect("round just completed");
            let mut text = genome.to_json();
            text.push('\n');
            write_atomic(&self.hof_path(generation, role), text.as_bytes())?;
        }
        append_lines(&self.log_path(), &report.records)?;
        append_lines(&self.timings_path(), &report.timings)?;
        self.write_checkpoint(state)
    }

    fn write_checkpoint(&self, state: &CoevoState) -> Result<()> {
        write_atomic(&self.checkpoint_path(), serde_json::to_string(state)?.as_bytes())
    }

    pub fn read_checkpoint(&self) -> Result<CoevoState> {
        Ok(serde_json::from_str(&read(&self.checkpoint_path())?)?)
    }
}

/// Exclusive ownership of a run directory; released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    fn acquire(path: &Path) -> Result<Self> {
        match OpenOptions::new().write(true).create_new(true).open(path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RunLock { path: path.to_path_buf() })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(path.parent().unwrap_or(path).to_path_buf()))
            }
            Err(e) => Err(Error::io(format!("creating {}", path.display()), e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvolveOptions {
    pub resume: bool,
    /// Stop after this many rounds in this invocation, leaving a resumable
    /// run behind.
    pub max_rounds: Option<usize>,
}

/// Creates or resumes a run at `config.run.output_dir` and evolves until the
/// configured generation count or `max_rounds` is reached.
pub fn evolve(config: &RunConfig, options: EvolveOptions) -> Result<RunManifest> {
    config.validate()?;
    let dir = RunDir::new(&config.run.output_dir);
    let hash = config.hash();

    if dir.exists() && !options.resume {
        return Err(Error::Config(format!(
            "{} already holds a run; pass --resume to continue it",
            dir.root().display()
        )));
    }
    if !dir.exists() && options.resume {
        return Err(Error::Config(format!("no run to resume at {}", dir.root().display())));
    }
    fs::create_dir_all(dir.root()).map_err(|e| Error::io(format!("creating {}", dir.root().display()), e))?;
    let _lock = dir.lock()?;

    let (mut state, mut manifest) = if options.resume {
        let manifest = dir.read_manifest()?;
        if manifest.config_hash != hash {
            return Err(Error::ResumeMismatch {
                expected: manifest.config_hash,
                actual: hash,
            });
        }
        let state = dir.read_checkpoint()?;
        // rounds are logged before the checkpoint; anything past it is a torn round
        truncate_lines(&dir.log_path(), state.generation * 4)?;
        truncate_lines(&dir.timings_path(), state.generation * 4)?;
        (state, manifest)
    } else {
        write_atomic(&dir.config_path(), config.to_toml_string().as_bytes())?;
        let manifest = RunManifest {
            config_hash: hash,
            version: ARTIFACT_VERSION,
            generations_completed: 0,
            total_generations: config.neat.generations,
            complete: config.neat.generations == 0,
        };
        dir.write_manifest(&manifest)?;
        let state = CoevoState::new(config);
        dir.write_checkpoint(&state)?;
        for p in [dir.log_path(), dir.timings_path()] {
            File::create(&p).map_err(|e| Error::io(format!("creating {}", p.display()), e))?;
        }
        (state, manifest)
    };

    let mut rounds = 0;
    while state.generation < config.neat.generations && options.max_rounds.is_none_or(|m| rounds < m) {
        let report = state.evolve_round(config)?;
        dir.write_round(&state, &report)?;
        manifest.generations_completed = state.generation;
        manifest.complete = state.generation >= config.neat.generations;
        dir.write_manifest(&manifest)?;
        rounds += 1;
    }
    manifest.generations_completed = state.generation;
    manifest.complete = state.generation >= config.neat.generations;
    dir.write_manifest(&manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunListing {
    pub name: String,
    pub generations_completed: usize,
    pub total_generations: usize,
    pub complete: bool,
}

/// Run directories directly below `root`, sorted by name. Directories
/// without a readable manifest are skipped.
pub fn list_runs(root: &Path) -> Result<Vec<RunListing>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
    let mut runs = Vec::new();
    for entry in entries.flatten() {
        let dir = RunDir::new(entry.path());
        let Ok(m) = dir.read_manifest() else { continue };
        runs.push(RunListing {
            name: entry.file_name().to_string_lossy().into_owned(),
            generations_completed: m.generations_completed,
            total_generations: m.total_generations,
            complete: m.complete,
        });
    }
    runs.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(runs)
}
