//! Independent reward oracle, random-input generators and small training
//! runs shared by the integration tests and the acceptance target.

#![allow(dead_code)]

pub mod runs;

use manitail_core::math::Vec3;
use manitail_tasks::rewards::{
    finish, general_constraint_reward, reorient_terms, turning_terms, FootState, ReorientCoefficients, ReorientInputs,
    RewardBreakdown, RewardCoefficients, TurningCoefficients, TurningInputs,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Angle between the horizontal projections of two vectors, via atan2.
pub fn oracle_heading_angle(a: &Vec3, b: &Vec3) -> f64 {
    let (ax, ay, bx, by) = (a.x, a.y, b.x, b.y);
    if ax.hypot(ay) < 1e-9 || bx.hypot(by) < 1e-9 {
        return std::f64::consts::FRAC_PI_2;
    }
    (ax * by - ay * bx).abs().atan2(ax * bx + ay * by)
}

/// Angle between world z and a body z axis, via atan2.
pub fn oracle_tilt(z: &Vec3) -> f64 {
    z.x.hypot(z.y).atan2(z.z)
}

pub fn oracle_airtime(k: f64, ts: f64, ta: f64) -> f64 {
    let t = if ts > ta { ts } else { ta };
    if t >= 0.25 {
        0.0
    } else if t < 0.2 {
        k * 0.2
    } else {
        k * t
    }
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).powi(2);
    }
    s
}

fn clearance(k: f64, thres: f64, feet: &[FootState]) -> f64 {
    let mut s = 0.0;
    for f in feet {
        if !f.in_contact {
            s += k * (f.height - thres) * (f.height - thres);
        }
    }
    s
}

/// Inputs drawn for one golden-suite sample.
#[derive(Clone, Debug)]
pub struct Sample {
    pub p: Vec<f64>,
    pub p_nominal: Vec<f64>,
    pub pdot: Vec<f64>,
    pub tau: Vec<f64>,
    pub q_des: Vec<f64>,
    pub q_des_prev: Vec<f64>,
    pub velocity: Vec3,
    pub command: [f64; 2],
    pub heading: Vec3,
    pub body_x: Vec3,
    pub body_z: Vec3,
    pub yaw_rate: f64,
    pub turn_sign: f64,
    pub feet: Vec<FootState>,
    pub arm: Vec<f64>,
    pub arm_nominal: Vec<f64>,
    pub height: f64,
    pub nominal_height: f64,
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_sample(rng: &mut ChaCha8Rng) -> Sample {
    let n = 18;
    let feet = (0..4)
        .map(|_| FootState {
            height: rng.random_range(-0.01..0.3),
            in_contact: rng.random_bool(0.5),
            t_stance: rng.random_range(0.0..0.4),
            t_air: rng.random_range(0.0..0.4),
        })
        .collect();
    Sample {
        p: vector(rng, n, 2.0),
        p_nominal: vector(rng, n, 1.0),
        pdot: vector(rng, n, 20.0),
        tau: vector(rng, n, 20.0),
        q_des: vector(rng, n, 2.0),
        q_des_prev: vector(rng, n, 2.0),
        velocity: Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        command: [rng.random_range(0.0..5.0), rng.random_range(-1.0..1.0)],
        heading: unit(rng),
        body_x: unit(rng),
        body_z: unit(rng),
        yaw_rate: rng.random_range(-10.0..10.0),
        turn_sign: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        feet,
        arm: vector(rng, 6, 2.0),
        arm_nominal: vector(rng, 6, 1.0),
        height: rng.random_range(0.0..2.5),
        nominal_height: rng.random_range(0.2..0.4),
    }
}

/// Oracle values, indexed like `RewardBreakdown::TERM_NAMES`.
pub fn oracle_general(c: &RewardCoefficients, s: &Sample) -> [f64; 4] {
    let zeros = vec![0.0; s.pdot.len()];
    [
        c.general.k_p * sq(&s.p, &s.p_nominal),
        c.general.k_pdot * sq(&s.pdot, &zeros),
        c.general.k_tau * sq(&s.tau, &zeros),
        c.general.k_s * sq(&s.q_des, &s.q_des_prev),
    ]
}

pub fn oracle_turning(c: &TurningCoefficients, thres: f64, s: &Sample) -> [f64; 8] {
    let dv = (s.command[0] - s.velocity.x).powi(2) + (s.command[1] - s.velocity.y).powi(2);
    let mut air = 0.0;
    for f in &s.feet {
        air += oracle_airtime(c.k_air, f.t_stance, f.t_air);
    }
    [
        c.k_v * (-dv).exp(),
        c.k_phi * (-2.5 * oracle_heading_angle(&s.heading, &s.body_x)).exp(),
        c.k_w * (3.0 - 12.0 * (-0.5 * s.turn_sign * s.yaw_rate).exp()),
        air,
        clearance(c.k_cl, thres, &s.feet),
        c.k_base * s.velocity.z.powi(2),
        c.k_ori * oracle_tilt(&s.body_z).powi(2),
        c.k_arm * sq(&s.arm, &s.arm_nominal),
    ]
}

pub fn oracle_reorient(c: &ReorientCoefficients, thres: f64, s: &Sample) -> [f64; 5] {
    let dv = (s.command[0] - s.velocity.x).powi(2) + (s.command[1] - s.velocity.y).powi(2);
    [
        c.k_ori * (-2.5 * oracle_tilt(&s.body_z).powi(2)).exp(),
        c.k_v * (-5.0 * dv).exp(),
        c.k_h * (-10.0 * (s.nominal_height - s.height).abs()).exp(),
        clearance(c.k_cl, thres, &s.feet),
        c.k_arm * sq(&s.arm, &s.arm_nominal),
    ]
}

pub fn turning_breakdown(c: &RewardCoefficients, col: &TurningCoefficients, s: &Sample) -> RewardBreakdown {
    let mut b = RewardBreakdown::default();
    let x = TurningInputs {
        velocity_body: s.velocity,
        command_velocity: s.command,
        command_heading: s.heading,
        body_x: s.body_x,
        body_z: s.body_z,
        yaw_rate: s.yaw_rate,
        turn_sign: s.turn_sign,
        vertical_velocity: s.velocity.z,
        feet: &s.feet,
        arm: &s.arm,
        arm_nominal: &s.arm_nominal,
    };
    turning_terms(col, c.foot_clearance, &x, &mut b);
    let g = general_constraint_reward(&c.general, &s.p, &s.p_nominal, &s.pdot, &s.tau, &s.q_des, &s.q_des_prev)
        .unwrap();
    finish(&mut b, g, c.reward_factor, false);
    b
}

pub fn reorient_breakdown(c: &RewardCoefficients, col: &ReorientCoefficients, s: &Sample) -> RewardBreakdown {
    let mut b = RewardBreakdown::default();
    let x = ReorientInputs {
        body_z: s.body_z,
        velocity_xy: [s.velocity.x, s.velocity.y],
        command_velocity: s.command,
        height: s.height,
        nominal_height: s.nominal_height,
        yaw_rate: s.yaw_rate,
        feet: &s.feet,
        arm: &s.arm,
        arm_nominal: &s.arm_nominal,
    };
    reorient_terms(col, c.foot_clearance, &x, &mut b);
    let g = general_constraint_reward(&c.general, &s.p, &s.p_nominal, &s.pdot, &s.tau, &s.q_des, &s.q_des_prev)
        .unwrap();
    finish(&mut b, g, c.reward_factor, true);
    b
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Worst error per named term and for the composition identity.
#[derive(Clone, Debug, Default)]
pub struct GoldenReport {
    pub term_errors: Vec<(String, f64)>,
    pub composition_error: f64,
    pub samples: usize,
}

impl GoldenReport {
    fn record(&mut self, name: String, err: f64) {
        match self.term_errors.iter_mut().find(|(n, _)| *n == name) {
            Some((_, e)) => *e = e.max(err),
            None => self.term_errors.push((name, err)),
        }
    }

    pub fn worst_term(&self) -> f64 {
        self.term_errors.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

/// Compares every term of every column against the oracle on `samples`
/// random inputs. Errors are relative to `max(1, |oracle|)`.
pub fn golden_suite(seed: u64, samples: usize) -> GoldenReport {
    let c = RewardCoefficients::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GoldenReport { samples, ..Default::default() };
    for _ in 0..samples {
        let s = random_sample(&mut rng);
        let g = oracle_general(&c, &s);
        for (col_name, col) in [("run", &c.run), ("turn", &c.turn)] {
            let b = turning_breakdown(&c, col, &s);
            let o = oracle_turning(col, c.foot_clearance, &s);
            let got = [b.v, b.phi, b.w, b.air, b.cl, b.base, b.ori, b.arm];
            for (name, (x, y)) in ["r_v", "r_phi", "r_w", "r_air", "r_cl", "r_base", "r_ori", "r_arm"]
                .iter()
                .zip(got.iter().zip(&o))
            {
                report.record(format!("{col_name}.{name}"), rel_err(*x, *y));
            }
            for (name, (x, y)) in ["r_p", "r_pdot", "r_tau", "r_s"].iter().zip([b.p, b.pdot, b.tau, b.s].iter().zip(&g)) {
                report.record(name.to_string(), rel_err(*x, *y));
            }
            let pos = o[0] + o[1] + o[2] + o[3];
            let neg = g.iter().sum::<f64>() + o[4] + o[5] + o[6] + o[7];
            report.record(format!("{col_name}.r_pos"), rel_err(b.r_pos, pos));
            report.record(format!("{col_name}.r_neg"), rel_err(b.r_neg, neg));
            report.record(format!("{col_name}.total"), rel_err(b.total, pos * (c.reward_factor * neg).exp()));
            report.composition_error = report.composition_error.max((b.total - b.recomputed_total(c.reward_factor)).abs());
        }
        for (col_name, col) in [("air", &c.air), ("ground", &c.ground)] {
            let b = reorient_breakdown(&c, col, &s);
            let o = oracle_reorient(col, c.foot_clearance, &s);
            let got = [b.ori, b.v, b.h, b.cl, b.arm];
            for (name, (x, y)) in ["r_ori", "r_v", "r_h", "r_cl", "r_arm"].iter().zip(got.iter().zip(&o)) {
                report.record(format!("{col_name}.{name}"), rel_err(*x, *y));
            }
            let pos = o[0] + o[1] + o[2];
            let neg = g.iter().sum::<f64>() + o[3] + o[4];
            report.record(format!("{col_name}.r_pos"), rel_err(b.r_pos, pos));
            report.record(format!("{col_name}.r_neg"), rel_err(b.r_neg, neg));
            report.record(format!("{col_name}.total"), rel_err(b.total, pos * (c.reward_factor * neg).exp()));
            report.composition_error = report.composition_error.max((b.total - b.recomputed_total(c.reward_factor)).abs());
        }
    }
    report
}
