//! Master tournaments: every generation's best predator trio against every
//! generation's best prey.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::coevo::Role;
use crate::config::RunConfig;
use crate::episode::{run_episode, EpisodeOutcome};
use crate::error::{Error, Result};
use crate::neat::Genome;
use crate::run::RunDir;
use crate::seed::{self, tag};
use crate::trajectory;

/// Mean caught times, rows indexed by predator generation and columns by
/// prey generation.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentMatrix {
    pub cells: Vec<Vec<f64>>,
    pub episodes: usize,
    pub seed: u64,
    pub episode_time: f64,
}

impl TournamentMatrix {
    pub fn predator_generations(&self) -> usize {
        self.cells.len()
    }

    pub fn prey_generations(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("predator_gen\\prey_gen");
        for j in 0..self.prey_generations() {
            write!(out, ",{j}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            write!(out, "{i}").unwrap();
            for v in row {
                write!(out, ",{v:.3}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    /// Column sums of the matrix, one per prey generation.
    pub prey: Vec<f64>,
    /// Row sums of `T - cell`, one per predator generation.
    pub predator: Vec<f64>,
}

pub fn accumulated_scores(matrix: &TournamentMatrix, episode_time: f64) -> ScoreSeries {
    let prey = (0..matrix.prey_generations())
        .map(|j| matrix.cells.iter().map(|row| row[j]).sum())
        .collect();
    let predator = matrix
        .cells
        .iter()
        .map(|row| row.iter().map(|v| episode_time - v).sum())
        .collect();
    ScoreSeries { prey, predator }
}

fn series_csv(header: &str, values: &[f64]) -> String {
    let mut out = format!("generation,{header}\n");
    for (g, v) in values.iter().enumerate() {
        writeln!(out, "{g},{v:.3}").unwrap();
    }
    out
}

/// Seed of episode `e` in cell (predator generation `i`, prey generation `j`).
pub fn episode_seed(seed: u64, i: usize, j: usize, e: usize) -> u64 {
    seed::derive(seed, &[tag::TOURNAMENT, i as u64, j as u64, e as u64])
}

struct Roster {
    config: RunConfig,
    trios: Vec<[Genome; 3]>,
    prey: Vec<Genome>,
}

fn load_roster(dir: &RunDir) -> Result<Roster> {
    let config = dir.read_config()?;
    let generations = dir.read_manifest()?.generations_completed;
    let trios = (0..generations).map(|g| dir.load_trio(g)).collect::<Result<_>>()?;
    let prey = (0..generations)
        .map(|g| dir.load_genome(g, Role::Prey))
        .collect::<Result<_>>()?;
    Ok(Roster { config, trios, prey })
}

fn play(roster: &Roster, i: usize, j: usize, seed: u64) -> Result<EpisodeOutcome> {
    let t = &roster.trios[i];
    run_episode([&t[0], &t[1], &t[2]], &roster.prey[j], &roster.config.arena, &roster.config.camera, seed)
}

/// Plays `episodes` seeded episodes per cell over all completed generations.
/// Cells run in parallel; the result does not depend on scheduling.
pub fn master_tournament(dir: &RunDir, episodes: usize, seed: u64) -> Result<TournamentMatrix> {
    if episodes == 0 {
        return Err(Error::Config("episodes per cell must be >= 1".into()));
    }
    let roster = load_roster(dir)?;
    let rows = roster.trios.len();
    let cols = roster.prey.len();
    let flat: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            let mut total = 0.0;
            for e in 0..episodes {
                total += play(&roster, i, j, episode_seed(seed, i, j, e))?.t;
            }
            Ok(total / episodes as f64)
        })
        .collect::<Result<_>>()?;
    Ok(TournamentMatrix {
        cells: flat.chunks(cols.max(1)).take(rows).map(<[f64]>::to_vec).collect(),
        episodes,
        seed,
        episode_time: roster.config.arena.episode_time,
    })
}

fn argmax(values: &[f64]) -> Option<usize> {
    (0..values.len()).reduce(|best, k| if values[k] > values[best] { k } else { best })
}

pub fn summary(matrix: &TournamentMatrix, scores: &ScoreSeries) -> String {
    let mut out = String::new();
    writeln!(out, "predator generations: {}", matrix.predator_generations()).unwrap();
    writeln!(out, "prey generations: {}", matrix.prey_generations()).unwrap();
    writeln!(out, "episodes per cell: {}", matrix.episodes).unwrap();
    writeln!(out, "seed: {}", matrix.seed).unwrap();
    let n = matrix.cell_count().max(1) as f64;
    let mean = matrix.cells.iter().flatten().sum::<f64>() / n;
    writeln!(out, "mean caught time: {mean:.3}").unwrap();
    if let Some(g) = argmax(&scores.predator) {
        writeln!(out, "best predator generation: {g} (score {:.3})", scores.predator[g]).unwrap();
    }
    if let Some(g) = argmax(&scores.prey) {
        writeln!(out, "best prey generation: {g} (score {:.3})", scores.prey[g]).unwrap();
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Writes `matrix.csv`, `prey_scores.csv`, `predator_scores.csv` and
/// `summary.txt` into `out_dir`.
pub fn write_outputs(matrix: &TournamentMatrix, out_dir: &Path) -> Result<ScoreSeries> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let scores = accumulated_scores(matrix, matrix.episode_time);
    write(&out_dir.join("matrix.csv"), &matrix.to_csv())?;
    write(&out_dir.join("prey_scores.csv"), &series_csv("prey_score", &scores.prey))?;
    write(&out_dir.join("predator_scores.csv"), &series_csv("predator_score", &scores.predator))?;
    write(&out_dir.join("summary.txt"), &summary(matrix, &scores))?;
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportedEpisode {
    pub episode: usize,
    pub seed: u64,
    pub path: PathBuf,
    pub outcome: EpisodeOutcome,
}

/// Plays the tournament episodes of one cell and writes each trajectory
/// plus an `index.csv` of outcomes.
pub fn export_trajectories(
    predator_generation: usize,
    prey_generation: usize,
    dir: &RunDir,
    episodes: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<ExportedEpisode>> {
    let config = dir.read_config()?;
    let trio = dir.load_trio(predator_generation)?;
    let prey = dir.load_genome(prey_generation, Role::Prey)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;

    let mut index = String::from("episode,seed,file,caught,catcher,t,d0,d1,d2\n");
    let mut exported = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let s = episode_seed(seed, predator_generation, prey_generation, e);
        let outcome = run_episode([&trio[0], &trio[1], &trio[2]], &prey, &config.arena, &config.camera, s)?;
        let name = format!("episode_{e:03}.csv");
        let path = out_dir.join(&name);
        trajectory::save(&path, &outcome.trajectory)?;
        let catcher = outcome.catcher.map_or(String::new(), |c| c.to_string());
        let [d0, d1, d2] = outcome.final_distances;
        writeln!(
            index,
            "{e},{s},{name},{},{catcher},{:.1},{d0:.6},{d1:.6},{d2:.6}",
            outcome.caught, outcome.t
        )
        .unwrap();
        exported.push(ExportedEpisode { episode: e, seed: s, path, outcome });
    }
    write(&out_dir.join("index.csv"), &index)?;
    Ok(exported)
}
