//! The three task environments: rapid turning, aerial reorientation with
//! landing, and balancing under impulses.

mod termination;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use manitail_core::dynamics::{body_ground_collision, forward_kinematics, ContactParams, ExternalForce, JointLimits};
use manitail_core::dynamics::{gravity_vector, MarkerKind};
use manitail_core::math::{signed_planar_angle, Vec3};
use manitail_core::models::Robot;
use manitail_core::{SimState, Simulator, UnitQuaternion};
use manitail_rl::{Environment, Status, Step};

pub use termination::{check_termination, EndReason, TerminationRules};

use crate::control::{pd_torque, scale_action, CommandObservation, ObservationLayout, PdGains, ACTION_SCALE};
use crate::curriculum::Stage;
use crate::rewards::{
    finish, general_constraint_reward, reorient_terms, tilt_angle, turning_terms, FootContactTracker, FootState,
    ReorientInputs, RewardBreakdown, RewardCoefficients, TurningInputs,
};
use crate::TaskError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Turning,
    Reorientation,
    Balancing,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Turning => "turning",
            Task::Reorientation => "reorientation",
            Task::Balancing => "balancing",
        }
    }

    /// Default episode length (s).
    pub fn default_episode_length(self) -> f64 {
        match self {
            Task::Turning => 4.0,
            Task::Reorientation => 2.5,
            Task::Balancing => 6.0,
        }
    }
}

/// Active reward column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Run,
    Turn,
    Air,
    Ground,
}

impl Section {
    pub fn as_str(self) -> &'static str {
        match self {
            Section::Run => "run",
            Section::Turn => "turn",
            Section::Air => "air",
            Section::Ground => "ground",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropAxis {
    Pitch,
    Roll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpulseConfig {
    pub enabled: bool,
    /// Impulse magnitude range (N s).
    pub magnitude: [f64; 2],
    /// Duration over which the impulse is spread (s).
    pub window: f64,
    /// Onset time range within the episode (s).
    pub onset: [f64; 2],
}

impl Default for ImpulseConfig {
    fn default() -> Self {
        Self { enabled: true, magnitude: [50.0, 100.0], window: 0.2, onset: [1.0, 4.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Policy period (s).
    pub control_dt: f64,
    /// Physics steps per control step.
    pub substeps: usize,
    /// Episode length (s); the task default when absent.
    pub episode_length: Option<f64>,
    /// Uniform joint perturbation at standing resets (rad).
    pub joint_noise: f64,
    /// Straight running before the turn-onset window in stage 2 (s).
    pub run_warmup: f64,
    /// Minimum running time after the turn onset (s).
    pub post_turn: f64,
    pub max_turn_deg: f64,
    /// Base drop height range (m).
    pub drop_height: [f64; 2],
    /// Drop tilt range (deg).
    pub drop_tilt_deg: [f64; 2],
    pub drop_axis: DropAxis,
    /// Base height above which the air region is active (m).
    pub air_height: f64,
    /// End reorientation episodes when the air region is left.
    pub aerial_only: bool,
    /// Walking speed command range for balancing (m/s).
    pub walk_speed: [f64; 2],
    pub impulse: ImpulseConfig,
    pub termination: TerminationRules,
    pub gains: PdGains,
    pub action_scale: f64,
    pub contact: ContactParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.01,
            substeps: 10,
            episode_length: None,
            joint_noise: 0.05,
            run_warmup: 1.5,
            post_turn: 2.0,
            max_turn_deg: 135.0,
            drop_height: [1.5, 2.25],
            drop_tilt_deg: [90.0, 120.0],
            drop_axis: DropAxis::Pitch,
            air_height: 0.4,
            aerial_only: false,
            walk_speed: [0.5, 3.0],
            impulse: ImpulseConfig::default(),
            termination: TerminationRules::default(),
            gains: PdGains::default(),
            action_scale: ACTION_SCALE,
            contact: ContactParams::default(),
        }
    }
}

fn ordered(name: &str, r: [f64; 2]) -> Result<(), String> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(format!("{name} must be an ordered [low, high] pair"))
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.control_dt > 0.0) || self.substeps == 0 {
            return Err("control_dt and substeps must be positive".into());
        }
        if let Some(l) = self.episode_length {
            if !(l >= self.control_dt) {
                return Err("episode_length must cover at least one control step".into());
            }
        }
        for (name, v) in [
            ("joint_noise", self.joint_noise),
            ("run_warmup", self.run_warmup),
            ("post_turn", self.post_turn),
            ("air_height", self.air_height),
        ] {
            if !(v >= 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        if !(0.0..=180.0).contains(&self.max_turn_deg) {
            return Err("max_turn_deg must lie in [0, 180]".into());
        }
        ordered("drop_height", self.drop_height)?;
        ordered("drop_tilt_deg", self.drop_tilt_deg)?;
        ordered("walk_speed", self.walk_speed)?;
        ordered("impulse.magnitude", self.impulse.magnitude)?;
        ordered("impulse.onset", self.impulse.onset)?;
        if self.impulse.magnitude[0] < 0.0 || !(self.impulse.window > 0.0) {
            return Err("impulse magnitude must be >= 0 and window > 0".into());
        }
        if !(self.gains.kp > 0.0 && self.gains.kd > 0.0) {
            return Err("gains.kp and gains.kd must be positive".into());
        }
        if !(self.action_scale > 0.0) {
            return Err("action_scale must be positive".into());
        }
        self.termination.validate()?;
        self.contact.validate().map_err(|e| e.to_string())
    }

    pub fn physics_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }
}

/// Curriculum quantities the environments read at reset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSnapshot {
    pub stage: Stage,
    /// Command velocity bound (m/s).
    pub velocity: f64,
    /// Turn-onset window width (control steps).
    pub command_range: u64,
}

impl Default for CurriculumSnapshot {
    fn default() -> Self {
        Self { stage: Stage::One, velocity: 1.0, command_range: 1 }
    }
}

/// A constant force on the base COM for `window` seconds from `onset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    /// Impulse vector (N s).
    pub impulse: [f64; 3],
    pub onset: f64,
    pub window: f64,
}

impl Impulse {
    pub fn force(&self) -> Vec3 {
        Vec3::from(self.impulse) / self.window
    }
}

/// Fixed episode parameters for evaluation; `None` fields are sampled.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOverride {
    pub speed: Option<f64>,
    /// Signed turn angle (rad).
    pub turn_angle: Option<f64>,
    pub onset_step: Option<u64>,
    pub drop_height: Option<f64>,
    /// Drop tilt (rad).
    pub drop_tilt: Option<f64>,
    /// `Some(None)` disables the impulse.
    pub impulse: Option<Option<Impulse>>,
    /// Skip the standing joint perturbation.
    pub no_joint_noise: bool,
}

/// Per-episode command schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeCommand {
    pub speed: f64,
    /// Signed heading change issued at the onset (rad).
    pub turn_angle: f64,
    /// First control step using the turn column.
    pub onset_step: u64,
}

impl EpisodeCommand {
    /// World heading commanded at control step `t` (rad).
    pub fn heading_at(&self, t: u64) -> f64 {
        if t >= self.onset_step {
            self.turn_angle
        } else {
            0.0
        }
    }
}

/// What the last control step produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub time: f64,
    pub breakdown: RewardBreakdown,
    pub reward: f64,
    pub section: Option<Section>,
    pub end: Option<EndReason>,
    pub foot_contacts: Vec<bool>,
    /// Angle between body z and world z (rad).
    pub tilt: f64,
    pub heading_command: f64,
    /// Squared norms checked by the termination rules.
    pub smoothness: f64,
    pub torque: f64,
    pub deviation: f64,
}

pub struct QuadrupedEnv {
    task: Task,
    config: EnvConfig,
    rewards: RewardCoefficients,
    robot: Robot,
    limits: Vec<JointLimits>,
    sim: Simulator,
    layout: ObservationLayout,
    seed: u64,
    rng: ChaCha8Rng,
    curriculum: CurriculumSnapshot,
    episode_override: Option<EpisodeOverride>,
    state: SimState,
    step_count: u64,
    max_steps: u64,
    history: [Vec<f64>; 2],
    q_des: Vec<f64>,
    q_des_prev: Vec<f64>,
    tau: Vec<f64>,
    tracker: FootContactTracker,
    command: EpisodeCommand,
    impulse: Option<Impulse>,
    base_com: Vec3,
    info: StepInfo,
    initial_tilt: f64,
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

impl QuadrupedEnv {
    pub fn new(
        task: Task,
        robot: Robot,
        config: EnvConfig,
        rewards: RewardCoefficients,
        seed: u64,
    ) -> Result<Self, TaskError> {
        config.validate().map_err(TaskError::Config)?;
        rewards.validate().map_err(|e| TaskError::Config(e.to_string()))?;
        let n = robot.num_joints();
        let limits = robot.joint_limits();
        let mut sim = Simulator::new(Arc::clone(&robot.tree), Some(config.contact), gravity_vector());
        sim.momentum_projection = true;
        let layout = ObservationLayout { joints: n, with_command: task != Task::Reorientation };
        let base_com = robot.tree.links()[0].inertia.com;
        let feet = robot.tree.num_feet();
        let state = robot.nominal_state();
        let mut env = Self {
            task,
            config,
            rewards,
            limits,
            sim,
            layout,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            curriculum: CurriculumSnapshot::default(),
            episode_override: None,
            state,
            step_count: 0,
            max_steps: 0,
            history: [vec![0.0; n], vec![0.0; n]],
            q_des: vec![0.0; n],
            q_des_prev: vec![0.0; n],
            tau: vec![0.0; n],
            tracker: FootContactTracker::new(feet),
            command: EpisodeCommand::default(),
            impulse: None,
            base_com,
            info: StepInfo::default(),
            initial_tilt: 0.0,
            robot,
        };
        env.reset_episode()?;
        Ok(env)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn info(&self) -> &StepInfo {
        &self.info
    }

    pub fn command(&self) -> &EpisodeCommand {
        &self.command
    }

    pub fn impulse(&self) -> Option<&Impulse> {
        self.impulse.as_ref()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn q_des(&self) -> &[f64] {
        &self.q_des
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn initial_tilt(&self) -> f64 {
        self.initial_tilt
    }

    pub fn curriculum(&self) -> &CurriculumSnapshot {
        &self.curriculum
    }

    pub fn set_curriculum(&mut self, snapshot: CurriculumSnapshot) {
        self.curriculum = snapshot;
    }

    /// Pins episode parameters for all following resets.
    pub fn set_override(&mut self, o: Option<EpisodeOverride>) {
        self.episode_override = o;
    }

    /// Restarts the environment's random stream.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn layout(&self) -> ObservationLayout {
        self.layout
    }

    fn steps_for(&self, seconds: f64) -> u64 {
        (seconds / self.config.control_dt).round() as u64
    }

    fn foot_positions(&self, state: &SimState) -> Result<(Vec<Vec3>, bool), TaskError> {
        let frames = forward_kinematics(&self.robot.tree, state)?;
        let feet = self
            .robot
            .tree
            .markers()
            .iter()
            .filter(|m| m.kind == MarkerKind::Foot)
            .map(|m| frames.marker_position(m))
            .collect();
        Ok((feet, body_ground_collision(&self.robot.tree, &frames)))
    }

    fn reset_episode(&mut self) -> Result<Vec<f64>, TaskError> {
        let o = self.episode_override.clone().unwrap_or_default();
        let mut state = self.robot.nominal_state();
        let n = self.robot.num_joints();
        match self.task {
            Task::Turning | Task::Balancing => {
                if !o.no_joint_noise && self.config.joint_noise > 0.0 {
                    let s = self.config.joint_noise;
                    for (q, l) in state.joint_positions.iter_mut().zip(&self.limits) {
                        *q = (*q + self.rng.random_range(-s..=s)).clamp(l.lower, l.upper);
                    }
                }
                let (feet, _) = self.foot_positions(&state)?;
                let lowest = feet.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
                // Settle into the static contact penetration.
                let static_load = self.robot.tree.total_mass() * 9.81 / feet.len().max(1) as f64;
                state.base_position.z -= lowest + static_load / self.config.contact.stiffness;
            }
            Task::Reorientation => {
                let h = o.drop_height.unwrap_or_else(|| uniform(&mut self.rng, self.config.drop_height));
                let tilt = o
                    .drop_tilt
                    .unwrap_or_else(|| uniform(&mut self.rng, self.config.drop_tilt_deg).to_radians());
                let axis = match self.config.drop_axis {
                    DropAxis::Pitch => Vec3::y(),
                    DropAxis::Roll => Vec3::x(),
                };
                state.base_position = Vec3::new(0.0, 0.0, h);
                state.base_orientation = UnitQuaternion::from_axis_angle(&axis, tilt);
            }
        }

        let length = self.config.episode_length.unwrap_or_else(|| self.task.default_episode_length());
        self.max_steps = self.steps_for(length).max(1);
        self.command = EpisodeCommand::default();
        self.impulse = None;
        match self.task {
            Task::Turning => {
                let v = self.curriculum.velocity;
                let speed = o.speed.unwrap_or_else(|| uniform(&mut self.rng, [0.5 * v, v]));
                let turn_angle = o.turn_angle.unwrap_or_else(|| {
                    let a = self.rng.random_range(0.0..=self.config.max_turn_deg).to_radians();
                    if self.rng.random_bool(0.5) {
                        a
                    } else {
                        -a
                    }
                });
                let onset_step = o.onset_step.unwrap_or_else(|| match self.curriculum.stage {
                    Stage::One => 0,
                    Stage::Two => {
                        self.steps_for(self.config.run_warmup)
                            + self.rng.random_range(0..self.curriculum.command_range.max(1))
                    }
                });
                self.command = EpisodeCommand { speed, turn_angle, onset_step };
                self.max_steps = self.max_steps.max(onset_step + self.steps_for(self.config.post_turn));
            }
            Task::Balancing => {
                let speed = o.speed.unwrap_or_else(|| uniform(&mut self.rng, self.config.walk_speed));
                self.command = EpisodeCommand { speed, turn_angle: 0.0, onset_step: u64::MAX };
                self.impulse = match o.impulse {
                    Some(i) => i,
                    None if self.config.impulse.enabled => {
                        let c = &self.config.impulse;
                        let mag = uniform(&mut self.rng, c.magnitude);
                        let dir: [f64; 3] = UnitSphere.sample(&mut self.rng);
                        let onset = (uniform(&mut self.rng, c.onset) / self.config.control_dt).round()
                            * self.config.control_dt;
                        Some(Impulse { impulse: [dir[0] * mag, dir[1] * mag, dir[2] * mag], onset, window: c.window })
                    }
                    None => None,
                };
            }
            Task::Reorientation => {}
        }

        self.state = state;
        self.step_count = 0;
        let p = self.state.joint_positions.clone();
        self.history = [p.clone(), p.clone()];
        self.q_des_prev.copy_from_slice(&p);
        self.q_des.copy_from_slice(&p);
        self.tau = vec![0.0; n];
        let (feet, _) = self.foot_positions(&self.state)?;
        let contacts: Vec<bool> = feet.iter().map(|f| f.z <= 0.0).collect();
        self.tracker.reset(&contacts);
        self.initial_tilt = tilt_angle(&self.body_z());
        self.info = StepInfo {
            foot_contacts: contacts,
            tilt: self.initial_tilt,
            heading_command: self.command.heading_at(0),
            ..StepInfo::default()
        };
        Ok(self.observation())
    }

    fn body_z(&self) -> Vec3 {
        self.state.base_orientation.to_rotation_matrix().column(2).into_owned()
    }

    pub fn observation(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.len());
        let cmd = (self.task != Task::Reorientation).then(|| CommandObservation {
            vx: self.command.speed,
            vy: 0.0,
            heading: self.command.heading_at(self.step_count),
        });
        self.layout.build(&self.state, [&self.history[0], &self.history[1]], cmd.as_ref(), &mut out);
        out
    }

    fn external_forces(&self, substep: u64) -> Option<ExternalForce> {
        let imp = self.impulse?;
        let dt = self.config.physics_dt();
        let start = (imp.onset / dt).round() as u64;
        let len = (imp.window / dt).round() as u64;
        (substep >= start && substep < start + len).then(|| ExternalForce {
            link: 0,
            offset: self.base_com,
            force: imp.force(),
        })
    }

    fn advance(&mut self, action: &[f64]) -> Result<Step, TaskError> {
        let n = self.robot.num_joints();
        if action.len() != n {
            return Err(TaskError::Action { expected: n, got: action.len() });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(TaskError::Fault {
                task: self.task.as_str(),
                time: self.state.time,
                message: "non-finite action".into(),
            });
        }
        let t = self.step_count;
        self.q_des_prev.copy_from_slice(&self.q_des);
        scale_action(action, &self.robot.nominal_joints, self.config.action_scale, &self.limits, &mut self.q_des);
        let prev = self.state.joint_positions.clone();
        let dt = self.config.physics_dt();
        let substeps = self.config.substeps as u64;
        for k in 0..substeps {
            pd_torque(
                &self.q_des,
                &self.state.joint_positions,
                &self.state.joint_velocities,
                &self.config.gains,
                &self.limits,
                &mut self.tau,
            );
            let ext: Vec<ExternalForce> = self.external_forces(t * substeps + k).into_iter().collect();
            self.sim.step(&mut self.state, &self.tau, &ext, dt).map_err(|e| TaskError::Fault {
                task: self.task.as_str(),
                time: self.state.time,
                message: format!("{e}; base at {:?}", self.state.base_position.as_slice()),
            })?;
        }
        self.history.swap(0, 1);
        self.history[0].copy_from_slice(&prev);
        self.step_count += 1;

        let (feet, body_contact) = self.foot_positions(&self.state)?;
        let contacts: Vec<bool> = feet.iter().map(|f| f.z <= 0.0).collect();
        self.tracker.update(&contacts, self.config.control_dt);
        let foot_states: Vec<FootState> = feet
            .iter()
            .enumerate()
            .map(|(i, f)| FootState {
                height: f.z,
                in_contact: contacts[i],
                t_stance: self.tracker.t_stance[i],
                t_air: self.tracker.t_air[i],
            })
            .collect();

        let arm = self.robot.tail_joints();
        let p = &self.state.joint_positions;
        let nominal = &self.robot.nominal_joints;
        let rot = self.state.base_orientation.to_rotation_matrix();
        let body_x: Vec3 = rot.column(0).into_owned();
        let body_z: Vec3 = rot.column(2).into_owned();
        let v_body = self.state.base_linear_velocity_body();
        let yaw_rate = self.state.base_angular_velocity_world().z;
        let general = general_constraint_reward(
            &self.rewards.general,
            p,
            nominal,
            &self.state.joint_velocities,
            &self.tau,
            &self.q_des,
            &self.q_des_prev,
        )
        .map_err(|e| TaskError::Config(e.to_string()))?;

        let mut b = RewardBreakdown::default();
        let section = match self.task {
            Task::Turning | Task::Balancing => {
                let section = if t < self.command.onset_step { Section::Run } else { Section::Turn };
                let heading = self.command.heading_at(t);
                let inputs = TurningInputs {
                    velocity_body: v_body,
                    command_velocity: [self.command.speed, 0.0],
                    command_heading: Vec3::new(heading.cos(), heading.sin(), 0.0),
                    body_x,
                    body_z,
                    yaw_rate,
                    turn_sign: if self.command.turn_angle < 0.0 { -1.0 } else { 1.0 },
                    vertical_velocity: self.state.base_linear_velocity.z,
                    feet: &foot_states,
                    arm: &p[arm.clone()],
                    arm_nominal: &nominal[arm.clone()],
                };
                let column = if section == Section::Run { &self.rewards.run } else { &self.rewards.turn };
                turning_terms(column, self.rewards.foot_clearance, &inputs, &mut b);
                finish(&mut b, general, self.rewards.reward_factor, false);
                section
            }
            Task::Reorientation => {
                let air = self.state.base_position.z > self.config.air_height;
                let section = if air || self.config.aerial_only { Section::Air } else { Section::Ground };
                let inputs = ReorientInputs {
                    body_z,
                    velocity_xy: [v_body.x, v_body.y],
                    command_velocity: [0.0, 0.0],
                    height: self.state.base_position.z,
                    nominal_height: self.robot.nominal_height(),
                    yaw_rate,
                    feet: &foot_states,
                    arm: &p[arm.clone()],
                    arm_nominal: &nominal[arm.clone()],
                };
                let column = if section == Section::Air { &self.rewards.air } else { &self.rewards.ground };
                reorient_terms(column, self.rewards.foot_clearance, &inputs, &mut b);
                finish(&mut b, general, self.rewards.reward_factor, true);
                if air {
                    Section::Air
                } else {
                    Section::Ground
                }
            }
        };

        let rules = &self.config.termination;
        let mut end = check_termination(rules, body_contact, &self.tau, &self.q_des, &self.q_des_prev, p, nominal);
        if end.is_none() && self.config.aerial_only && section == Section::Ground {
            end = Some(EndReason::Landed);
        }
        if end.is_none() && self.step_count >= self.max_steps {
            end = Some(EndReason::TimeLimit);
        }
        let reward = match end {
            Some(r) if r.is_violation() => rules.penalty,
            _ => b.total,
        };
        let status = match end {
            None => Status::Running,
            Some(EndReason::TimeLimit) => Status::Truncated,
            Some(_) => Status::Terminated,
        };
        let sq = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        self.info = StepInfo {
            time: self.step_count as f64 * self.config.control_dt,
            breakdown: b,
            reward,
            section: Some(section),
            end,
            foot_contacts: contacts,
            tilt: tilt_angle(&body_z),
            heading_command: self.command.heading_at(t),
            smoothness: sq(&self.q_des, &self.q_des_prev),
            torque: self.tau.iter().map(|x| x * x).sum(),
            deviation: sq(p, nominal),
        };
        let mut terms = b.terms().to_vec();
        terms.extend_from_slice(&[b.r_pos, b.r_neg, b.total]);
        Ok(Step { observation: self.observation(), reward, status, tag: end.map_or(0, EndReason::code), terms })
    }

    /// Heading error of the body x-axis to the commanded heading (rad).
    pub fn heading_error(&self) -> f64 {
        let h = self.command.heading_at(self.step_count.saturating_sub(1));
        let x: Vec3 = self.state.base_orientation.to_rotation_matrix().column(0).into_owned();
        signed_planar_angle(&x, &Vec3::new(h.cos(), h.sin(), 0.0))
    }
}

pub const TERM_NAMES: [&str; 16] = [
    "r_p", "r_pdot", "r_tau", "r_s", "r_v", "r_phi", "r_w", "r_air", "r_cl", "r_base", "r_ori", "r_arm", "r_h", "r_pos",
    "r_neg", "r_total",
];

impl Environment for QuadrupedEnv {
    type Error = TaskError;

    fn observation_dim(&self) -> usize {
        self.layout.len()
    }

    fn action_dim(&self) -> usize {
        self.robot.num_joints()
    }

    fn term_names(&self) -> Vec<&'static str> {
        TERM_NAMES.to_vec()
    }

    fn reset(&mut self) -> Result<Vec<f64>, TaskError> {
        self.reset_episode()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step, TaskError> {
        self.advance(action)
    }
}
