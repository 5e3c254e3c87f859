use std::fs;
use std::path::Path;

use predprey::coevo::Role;
use predprey::config::RunConfig;
use predprey::episode::run_episode;
use predprey::run::{evolve, EvolveOptions, RunDir};
use predprey::tournament::{accumulated_scores, export_trajectories, master_tournament, write_outputs};
use predprey::trajectory;
use predprey::Error;

fn three_generation_run(root: &Path) -> RunConfig {
    let mut c = RunConfig::smoke();
    c.neat.generations = 3;
    c.neat.population_size = 5;
    c.neat.elites = 1;
    c.coevo.evaluations = 1;
    c.run.output_dir = root.join("run");
    evolve(&c, EvolveOptions::default()).unwrap();
    c
}

#[test]
fn grid_is_complete_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let config = three_generation_run(tmp.path());
    let dir = RunDir::new(&config.run.output_dir);
    let m = master_tournament(&dir, 2, 4).unwrap();
    assert_eq!(m.predator_generations(), 3);
    assert_eq!(m.prey_generations(), 3);
    assert_eq!(m.cell_count(), 9);
    assert!(m.cells.iter().flatten().all(|&c| c > 0.0 && c <= 30.0));
    assert_eq!(m, master_tournament(&dir, 2, 4).unwrap());

    // each cell is the mean of exactly E = 2 seeded episodes
    let trio = dir.load_trio(1).unwrap();
    let prey = dir.load_genome(2, Role::Prey).unwrap();
    let mean: f64 = (0..2)
        .map(|e| {
            let s = predprey::tournament::episode_seed(4, 1, 2, e);
            run_episode([&trio[0], &trio[1], &trio[2]], &prey, &config.arena, &config.camera, s).unwrap().t
        })
        .sum::<f64>()
        / 2.0;
    assert_eq!(m.cells[1][2], mean);

    let out = tmp.path().join("t");
    let scores = write_outputs(&m, &out).unwrap();
    assert_eq!(scores, accumulated_scores(&m, 30.0));
    let csv = fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("predator_gen\\prey_gen,0,1,2\n"));
    assert_eq!(fs::read_to_string(out.join("prey_scores.csv")).unwrap().lines().count(), 4);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("best prey generation"));
}

#[test]
fn scores_scale_with_deviation_from_timeout() {
    let tmp = tempfile::tempdir().unwrap();
    let config = three_generation_run(tmp.path());
    let m = master_tournament(&RunDir::new(&config.run.output_dir), 1, 0).unwrap();
    let base = accumulated_scores(&m, 30.0);
    let mut half = m.clone();
    for v in half.cells.iter_mut().flatten() {
        *v = 30.0 - (30.0 - *v) / 2.0;
    }
    let scaled = accumulated_scores(&half, 30.0);
    for (a, b) in base.predator.iter().zip(&scaled.predator) {
        assert!((a / 2.0 - b).abs() < 1e-9);
    }
}

#[test]
fn missing_genome_is_an_inventory_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = three_generation_run(tmp.path());
    let dir = RunDir::new(&config.run.output_dir);
    fs::remove_file(dir.hof_path(1, Role::Predator(2))).unwrap();
    match master_tournament(&dir, 1, 0) {
        Err(Error::Inventory { generation, role }) => {
            assert_eq!(generation, 1);
            assert_eq!(role, "predator2");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn exported_trajectories_replay_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let config = three_generation_run(tmp.path());
    let dir = RunDir::new(&config.run.output_dir);
    let out = tmp.path().join("traj");
    let single = export_trajectories(2, 0, &dir, 1, 9, &out.join("one")).unwrap();
    assert_eq!(fs::read_dir(out.join("one")).unwrap().count(), 2);
    assert_eq!(single.len(), 1);

    let episodes = export_trajectories(2, 0, &dir, 4, 9, &out).unwrap();
    let index = fs::read_to_string(out.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 5);
    let trio = dir.load_trio(2).unwrap();
    let prey = dir.load_genome(0, Role::Prey).unwrap();
    for ep in &episodes {
        let again = run_episode([&trio[0], &trio[1], &trio[2]], &prey, &config.arena, &config.camera, ep.seed).unwrap();
        assert_eq!(trajectory::to_csv(&again.trajectory), fs::read_to_string(&ep.path).unwrap());

        let summary = trajectory::replay_file(&ep.path, &config.arena).unwrap();
        assert_eq!(summary.caught, ep.outcome.caught);
        assert_eq!(summary.catcher, ep.outcome.catcher);
        assert!((summary.t - ep.outcome.t).abs() < 1e-9);
        if ep.outcome.caught {
            let frames = trajectory::load(&ep.path).unwrap();
            let last = frames.last().unwrap();
            let min = (1..4).map(|k| last[0].distance_to(&last[k])).fold(f64::INFINITY, f64::min);
            assert!(min <= config.arena.catch_radius + 1e-5);
        }
    }
}
