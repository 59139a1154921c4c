//! Deterministic evaluation protocols and the per-step trace format shared
//! with replay.

use std::fs::{self, File};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use manitail_rl::{ActorCritic, Environment, Status};

use crate::envs::{EndReason, EpisodeOverride, Impulse, QuadrupedEnv, Section, Task};
use crate::experiment::ExperimentConfig;
use crate::trainer::build_env;
use crate::RunError;

pub const TURN_SPEEDS: [f64; 4] = [3.0, 3.5, 4.0, 4.5];
pub const TURN_ANGLE_DEG: f64 = 135.0;
pub const DROP_HEIGHTS: [f64; 4] = [1.5, 1.75, 2.0, 2.25];
pub const DROP_TILTS_DEG: [f64; 3] = [90.0, 105.0, 120.0];
pub const IMPULSE_AXIS: [f64; 9] = [-100.0, -75.0, -50.0, -25.0, 0.0, 25.0, 50.0, 75.0, 100.0];
pub const IMPULSE_WALK_SPEED: f64 = 1.0;
pub const IMPULSE_ONSET: f64 = 2.0;
/// Trajectory sampling period of the turning protocol (s).
pub const TRAJECTORY_PERIOD: f64 = 0.05;
/// Heading error below which a turn counts as complete (deg).
pub const TURN_COMPLETE_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    TurningSpeeds,
    DropGrid,
    RandomDrops,
    ImpulseGrid,
}

impl Protocol {
    pub const ALL: [Protocol; 4] =
        [Protocol::TurningSpeeds, Protocol::DropGrid, Protocol::RandomDrops, Protocol::ImpulseGrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::TurningSpeeds => "turning-speeds",
            Protocol::DropGrid => "drop-grid",
            Protocol::RandomDrops => "random-drops",
            Protocol::ImpulseGrid => "impulse-grid",
        }
    }

    pub fn task(self) -> Task {
        match self {
            Protocol::TurningSpeeds => Task::Turning,
            Protocol::DropGrid | Protocol::RandomDrops => Task::Reorientation,
            Protocol::ImpulseGrid => Task::Balancing,
        }
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown protocol `{s}`"))
    }
}

/// Columns of the per-speed turning trajectory files.
pub const TURN_COLUMNS: [&str; 9] =
    ["time", "x", "y", "ideal_x", "ideal_y", "heading_deg", "heading_cmd_deg", "lateral_displacement", "section"];
/// Columns of `drops.csv`.
pub const DROP_COLUMNS: [&str; 8] =
    ["episode", "drop_height", "drop_tilt_deg", "achieved_deg", "air_time", "end_reason", "end_time", "episode_return"];
/// Columns of `impulse_grid.csv`.
pub const IMPULSE_COLUMNS: [&str; 6] = ["j_y", "j_z", "in_training_range", "survived", "end_reason", "end_time"];

/// Outcome of one deterministic episode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub steps: u64,
    pub end_reason: &'static str,
    pub end_time: f64,
    /// No rule was violated.
    pub survived: bool,
    pub episode_return: f64,
    pub initial_tilt_deg: f64,
    /// Base height at reset (m).
    pub initial_height: f64,
    /// Largest tilt reduction while the air region was active (deg).
    pub achieved_reorientation_deg: f64,
    /// Time spent in the air region (s).
    pub air_time: f64,
}

/// Runs one episode with the mean action, calling `on_step` after every
/// control step.
pub fn run_episode(
    env: &mut QuadrupedEnv,
    model: &ActorCritic,
    mut on_step: impl FnMut(&QuadrupedEnv) -> Result<(), RunError>,
) -> Result<EpisodeResult, RunError> {
    let mut obs = env.reset()?;
    let initial = env.initial_tilt();
    let initial_height = env.state().base_position.z;
    let mut achieved: f64 = 0.0;
    let mut air_time = 0.0;
    let mut ret = 0.0;
    loop {
        let action = model.act_deterministic(&obs)?;
        let step = env.step(&action)?;
        ret += step.reward;
        let info = env.info();
        if info.section == Some(Section::Air) {
            achieved = achieved.max(initial - info.tilt);
            air_time += env.config().control_dt;
        }
        on_step(env)?;
        if step.status != Status::Running {
            let end = info.end.unwrap_or(EndReason::TimeLimit);
            return Ok(EpisodeResult {
                steps: env.step_count(),
                end_reason: end.as_str(),
                end_time: info.time,
                survived: !end.is_violation(),
                episode_return: ret,
                initial_tilt_deg: initial.to_degrees(),
                initial_height,
                achieved_reorientation_deg: achieved.to_degrees(),
                air_time,
            });
        }
        obs = step.observation;
    }
}

/// Per-control-step state dump.
pub struct TraceWriter {
    writer: csv::Writer<File>,
}

impl TraceWriter {
    pub fn header(joints: usize, feet: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "step", "time", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz", "tilt_deg",
            "heading_deg", "heading_cmd_deg", "speed_cmd", "section", "reward", "r_pos", "r_neg", "r_total", "end",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend((0..feet).map(|i| format!("contact_{i}")));
        h.extend((0..joints).map(|i| format!("q_{i}")));
        h.extend((0..joints).map(|i| format!("qd_{i}")));
        h.extend((0..joints).map(|i| format!("q_des_{i}")));
        h.extend((0..joints).map(|i| format!("tau_{i}")));
        h
    }

    pub fn create(path: &Path, env: &QuadrupedEnv) -> Result<Self, RunError> {
        let mut writer = csv::Writer::from_writer(File::create(path)?);
        writer.write_record(Self::header(env.robot().num_joints(), env.info().foot_contacts.len()))?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, env: &QuadrupedEnv) -> Result<(), RunError> {
        let s = env.state();
        let i = env.info();
        let r = s.base_orientation.to_rotation_matrix();
        let heading = r[(1, 0)].atan2(r[(0, 0)]);
        let v = s.base_linear_velocity;
        let w = s.base_angular_velocity_world();
        let q = s.base_orientation;
        let mut row: Vec<String> = [
            env.step_count() as f64,
            i.time,
            s.base_position.x,
            s.base_position.y,
            s.base_position.z,
            q.w,
            q.x,
            q.y,
            q.z,
            v.x,
            v.y,
            v.z,
            w.x,
            w.y,
            w.z,
            i.tilt.to_degrees(),
            heading.to_degrees(),
            i.heading_command.to_degrees(),
            env.command().speed,
        ]
        .iter()
        .map(|x| x.to_string())
        .collect();
        row.push(i.section.map_or("", Section::as_str).to_string());
        for x in [i.reward, i.breakdown.r_pos, i.breakdown.r_neg, i.breakdown.total] {
            row.push(x.to_string());
        }
        row.push(i.end.map_or("", EndReason::as_str).to_string());
        row.extend(i.foot_contacts.iter().map(|c| u8::from(*c).to_string()));
        for vals in [&s.joint_positions[..], &s.joint_velocities[..], env.q_des(), env.tau()] {
            row.extend(vals.iter().map(|x| x.to_string()));
        }
        self.writer.write_record(row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), RunError> {
        self.writer.flush()?;
        Ok(())
    }
}

fn check_task(cfg: &ExperimentConfig, protocol: Protocol) -> Result<(), RunError> {
    if cfg.task != protocol.task() {
        return Err(RunError::Checkpoint(format!(
            "protocol {} needs a {} policy, checkpoint is {}",
            protocol.as_str(),
            protocol.task().as_str(),
            cfg.task.as_str()
        )));
    }
    Ok(())
}

fn eval_env(cfg: &ExperimentConfig, seed: u64) -> Result<QuadrupedEnv, RunError> {
    let mut env = build_env(cfg, seed)?;
    env.reseed(seed);
    Ok(env)
}

/// Re-simulates one evaluation episode from `seed` with the mean action and
/// writes its per-step trace to `path`.
pub fn replay(cfg: &ExperimentConfig, model: &ActorCritic, seed: u64, path: &Path) -> Result<EpisodeResult, RunError> {
    let mut env = eval_env(cfg, seed)?;
    let mut trace = TraceWriter::create(path, &env)?;
    let result = run_episode(&mut env, model, |e| trace.write(e))?;
    trace.finish()?;
    Ok(result)
}

/// Random drops from the training distribution; the first `episodes`
/// episodes of the evaluation seed.
pub fn random_drops(
    cfg: &ExperimentConfig,
    model: &ActorCritic,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeResult>, RunError> {
    check_task(cfg, Protocol::RandomDrops)?;
    let mut env = eval_env(cfg, seed)?;
    (0..episodes).map(|_| run_episode(&mut env, model, |_| Ok(()))).collect()
}

/// Mean achieved reorientation over the random-drop protocol (deg).
pub fn mean_achieved_reorientation(
    cfg: &ExperimentConfig,
    model: &ActorCritic,
    episodes: usize,
    seed: u64,
) -> Result<f64, RunError> {
    let runs = random_drops(cfg, model, episodes, seed)?;
    Ok(runs.iter().map(|r| r.achieved_reorientation_deg).sum::<f64>() / episodes.max(1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TurnResult {
    pub speed: f64,
    pub turn_deg: f64,
    pub onset_time: f64,
    /// Time from onset until the heading error first drops below the
    /// completion threshold (s); absent when it never does.
    pub completion_time: Option<f64>,
    /// Largest distance from the ideal post-turn line (m).
    pub peak_lateral_displacement: f64,
    pub episode: EpisodeResult,
}

fn write_summary(out_dir: &Path, protocol: Protocol, cfg: &ExperimentConfig, results: serde_json::Value) -> Result<(), RunError> {
    let summary = serde_json::json!({
        "protocol": protocol.as_str(),
        "task": cfg.task.as_str(),
        "robot": cfg.robot.as_str(),
        "results": results,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| RunError::Runtime(e.to_string()))?;
    fs::write(out_dir.join("summary.json"), text)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value, RunError> {
    serde_json::to_value(v).map_err(|e| RunError::Runtime(e.to_string()))
}

pub fn turning_speeds(cfg: &ExperimentConfig, model: &ActorCritic, out_dir: &Path) -> Result<Vec<TurnResult>, RunError> {
    check_task(cfg, Protocol::TurningSpeeds)?;
    let mut env = eval_env(cfg, cfg.evaluation.seed)?;
    let dt = cfg.env.control_dt;
    let onset_step = (cfg.env.run_warmup / dt).round() as u64;
    let every = ((TRAJECTORY_PERIOD / dt).round() as u64).max(1);
    let turn = TURN_ANGLE_DEG.to_radians();
    let mut results = Vec::new();
    for speed in TURN_SPEEDS {
        env.set_override(Some(EpisodeOverride {
            speed: Some(speed),
            turn_angle: Some(turn),
            onset_step: Some(onset_step),
            no_joint_noise: true,
            ..Default::default()
        }));
        let mut csv = csv::Writer::from_writer(File::create(out_dir.join(format!("turn_speed_{speed:.1}.csv")))?);
        csv.write_record(TURN_COLUMNS)?;
        let dir = (turn.cos(), turn.sin());
        let mut anchor: Option<(f64, f64, f64)> = None;
        let mut peak: f64 = 0.0;
        let mut completion = None;
        let episode = run_episode(&mut env, model, |e| {
            let s = e.state();
            let t = e.info().time;
            let (x, y) = (s.base_position.x, s.base_position.y);
            if e.step_count() == onset_step {
                anchor = Some((x, y, t));
            }
            let (ix, iy, lateral) = match anchor {
                Some((ax, ay, at)) => {
                    let d = speed * (t - at);
                    let lateral = ((x - ax) * dir.1 - (y - ay) * dir.0).abs();
                    (ax + d * dir.0, ay + d * dir.1, lateral)
                }
                None => (x, y, 0.0),
            };
            peak = peak.max(lateral);
            if anchor.is_some() && completion.is_none() && e.heading_error().abs().to_degrees() < TURN_COMPLETE_DEG {
                completion = Some(t - anchor.map_or(0.0, |a| a.2));
            }
            if e.step_count() % every == 0 {
                let r = s.base_orientation.to_rotation_matrix();
                let heading = r[(1, 0)].atan2(r[(0, 0)]).to_degrees();
                csv.write_record([
                    t.to_string(),
                    x.to_string(),
                    y.to_string(),
                    ix.to_string(),
                    iy.to_string(),
                    heading.to_string(),
                    e.info().heading_command.to_degrees().to_string(),
                    lateral.to_string(),
                    e.info().section.map_or("", Section::as_str).to_string(),
                ])?;
            }
            Ok(())
        })?;
        csv.flush()?;
        results.push(TurnResult {
            speed,
            turn_deg: TURN_ANGLE_DEG,
            onset_time: onset_step as f64 * dt,
            completion_time: completion,
            peak_lateral_displacement: peak,
            episode,
        });
    }
    env.set_override(None);
    write_summary(out_dir, Protocol::TurningSpeeds, cfg, to_json(&results)?)?;
    Ok(results)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DropResult {
    pub drop_height: f64,
    pub drop_tilt_deg: f64,
    pub trace: String,
    pub episode: EpisodeResult,
}

pub fn drop_grid(cfg: &ExperimentConfig, model: &ActorCritic, out_dir: &Path) -> Result<Vec<DropResult>, RunError> {
    check_task(cfg, Protocol::DropGrid)?;
    let mut env = eval_env(cfg, cfg.evaluation.seed)?;
    let mut results = Vec::new();
    for h in DROP_HEIGHTS {
        for tilt in DROP_TILTS_DEG {
            env.set_override(Some(EpisodeOverride {
                drop_height: Some(h),
                drop_tilt: Some(tilt.to_radians()),
                ..Default::default()
            }));
            let name = format!("drop_h{h:.2}_t{tilt:.0}.csv");
            let mut trace = TraceWriter::create(&out_dir.join(&name), &env)?;
            let episode = run_episode(&mut env, model, |e| trace.write(e))?;
            trace.finish()?;
            results.push(DropResult { drop_height: h, drop_tilt_deg: tilt, trace: name, episode });
        }
    }
    env.set_override(None);
    write_summary(out_dir, Protocol::DropGrid, cfg, to_json(&results)?)?;
    Ok(results)
}

pub fn random_drop_protocol(
    cfg: &ExperimentConfig,
    model: &ActorCritic,
    out_dir: &Path,
) -> Result<Vec<EpisodeResult>, RunError> {
    check_task(cfg, Protocol::RandomDrops)?;
    let results = random_drops(cfg, model, cfg.evaluation.episodes, cfg.evaluation.seed)?;
    let mut csv = csv::Writer::from_writer(File::create(out_dir.join("drops.csv"))?);
    csv.write_record(DROP_COLUMNS)?;
    for (k, r) in results.iter().enumerate() {
        csv.write_record([
            k.to_string(),
            r.initial_height.to_string(),
            r.initial_tilt_deg.to_string(),
            r.achieved_reorientation_deg.to_string(),
            r.air_time.to_string(),
            r.end_reason.to_string(),
            r.end_time.to_string(),
            r.episode_return.to_string(),
        ])?;
    }
    csv.flush()?;
    let mean = results.iter().map(|r| r.achieved_reorientation_deg).sum::<f64>() / results.len().max(1) as f64;
    write_summary(
        out_dir,
        Protocol::RandomDrops,
        cfg,
        serde_json::json!({ "episodes": results.len(), "mean_achieved_deg": mean, "runs": to_json(&results)? }),
    )?;
    Ok(results)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImpulseCell {
    pub j_y: f64,
    pub j_z: f64,
    /// Magnitude inside the training range.
    pub in_training_range: bool,
    pub episode: EpisodeResult,
}

pub fn impulse_grid(cfg: &ExperimentConfig, model: &ActorCritic, out_dir: &Path) -> Result<Vec<ImpulseCell>, RunError> {
    check_task(cfg, Protocol::ImpulseGrid)?;
    let mut env = eval_env(cfg, cfg.evaluation.seed)?;
    let mut csv = csv::Writer::from_writer(File::create(out_dir.join("impulse_grid.csv"))?);
    csv.write_record(IMPULSE_COLUMNS)?;
    let range = cfg.env.impulse.magnitude;
    let mut cells = Vec::new();
    for j_y in IMPULSE_AXIS {
        for j_z in IMPULSE_AXIS {
            let impulse = Impulse { impulse: [0.0, j_y, j_z], onset: IMPULSE_ONSET, window: cfg.env.impulse.window };
            env.set_override(Some(EpisodeOverride {
                speed: Some(IMPULSE_WALK_SPEED),
                impulse: Some(Some(impulse)),
                no_joint_noise: true,
                ..Default::default()
            }));
            let episode = run_episode(&mut env, model, |_| Ok(()))?;
            let mag = j_y.hypot(j_z);
            let in_range = mag >= range[0] && mag <= range[1];
            csv.write_record([
                j_y.to_string(),
                j_z.to_string(),
                u8::from(in_range).to_string(),
                u8::from(episode.survived).to_string(),
                episode.end_reason.to_string(),
                episode.end_time.to_string(),
            ])?;
            cells.push(ImpulseCell { j_y, j_z, in_training_range: in_range, episode });
        }
    }
    csv.flush()?;
    env.set_override(None);
    let rate = |f: &dyn Fn(&ImpulseCell) -> bool| {
        let sel: Vec<_> = cells.iter().filter(|c| f(c)).collect();
        sel.iter().filter(|c| c.episode.survived).count() as f64 / sel.len().max(1) as f64
    };
    let summary = serde_json::json!({
        "survival_rate": rate(&|_| true),
        "survival_rate_training_range": rate(&|c| c.in_training_range),
        "walk_speed": IMPULSE_WALK_SPEED,
        "onset": IMPULSE_ONSET,
        "window": cfg.env.impulse.window,
        "cells": to_json(&cells)?,
    });
    write_summary(out_dir, Protocol::ImpulseGrid, cfg, summary)?;
    Ok(cells)
}

/// Runs `protocol` and writes its files into `out_dir`.
pub fn run_protocol(
    protocol: Protocol,
    cfg: &ExperimentConfig,
    model: &ActorCritic,
    out_dir: &Path,
) -> Result<(), RunError> {
    check_task(cfg, protocol)?;
    fs::create_dir_all(out_dir)?;
    match protocol {
        Protocol::TurningSpeeds => turning_speeds(cfg, model, out_dir).map(|_| ()),
        Protocol::DropGrid => drop_grid(cfg, model, out_dir).map(|_| ()),
        Protocol::RandomDrops => random_drop_protocol(cfg, model, out_dir).map(|_| ()),
        Protocol::ImpulseGrid => impulse_grid(cfg, model, out_dir).map(|_| ()),
    }
}
