//! Seeded instance generation, the hand-built fixtures and JSON file I/O.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::InstanceError;
use crate::model::Instance;

/// Size classes of the benchmark sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    /// `(patients, nurses, services)`
    pub fn dimensions(self) -> (usize, usize, usize) {
        match self {
            SizeClass::Small => (10, 3, 6),
            SizeClass::Medium => (15, 5, 6),
            SizeClass::Large => (25, 5, 6),
        }
    }
}

impl std::str::FromStr for SizeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(SizeClass::Small),
            "medium" => Ok(SizeClass::Medium),
            "large" => Ok(SizeClass::Large),
            other => Err(format!("unknown size class `{other}`")),
        }
    }
}

/// Default service features for six services: service 3 must finish at
/// the laboratory, service 6 must start from it. Other service counts get
/// the same flags where the indices exist.
pub fn table5_features(num_services: usize) -> (Vec<u8>, Vec<u8>) {
    let mut start = vec![0; num_services];
    let mut end = vec![0; num_services];
    if num_services > 5 {
        start[5] = 1;
    }
    if num_services > 2 {
        end[2] = 1;
    }
    (start, end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_patients: usize,
    pub num_nurses: usize,
    pub num_services: usize,
    /// Side of the square patients are scattered in; travel time equals
    /// Euclidean distance.
    pub area_side: f64,
    pub demand_density: f64,
    pub qualification_density: f64,
    pub window_width: f64,
    pub horizon: f64,
    pub min_duration: f64,
    pub max_duration: f64,
    pub start_req: Vec<u8>,
    pub end_req: Vec<u8>,
    /// Depot coordinates; `None` puts it at the origin corner.
    pub depot_xy: Option<[f64; 2]>,
    /// Laboratory coordinates; `None` puts it at the opposite corner.
    pub lab_xy: Option<[f64; 2]>,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(num_patients: usize, num_nurses: usize, num_services: usize, seed: u64) -> Self {
        let (start_req, end_req) = table5_features(num_services);
        GenConfig {
            num_patients,
            num_nurses,
            num_services,
            area_side: 50.0,
            demand_density: 0.15,
            qualification_density: 0.6,
            window_width: 240.0,
            horizon: 480.0,
            min_duration: 10.0,
            max_duration: 30.0,
            start_req,
            end_req,
            depot_xy: None,
            lab_xy: None,
            seed,
        }
    }

    pub fn class(class: SizeClass, seed: u64) -> Self {
        let (n, v, s) = class.dimensions();
        GenConfig::new(n, v, s, seed)
    }

    pub fn check(&self) -> Result<(), InstanceError> {
        let bad = |msg: String| Err(InstanceError::Generation(msg));
        if self.num_patients == 0 || self.num_services == 0 {
            return bad("num_patients and num_services must be positive".into());
        }
        if self.num_nurses == 0 {
            return bad("no nurse available to hold any qualification".into());
        }
        for (name, d) in [
            ("demand_density", self.demand_density),
            ("qualification_density", self.qualification_density),
        ] {
            if !(d > 0.0 && d <= 1.0) {
                return bad(format!("{name} = {d} is outside (0, 1]"));
            }
        }
        if !(self.window_width > 0.0 && self.horizon >= self.window_width) {
            return bad(format!(
                "need horizon >= window_width > 0, got horizon {} and width {}",
                self.horizon, self.window_width
            ));
        }
        if !(self.area_side > 0.0) {
            return bad("area_side must be positive".into());
        }
        if !(self.min_duration >= 0.0 && self.max_duration >= self.min_duration) {
            return bad("need 0 <= min_duration <= max_duration".into());
        }
        if self.start_req.len() != self.num_services || self.end_req.len() != self.num_services {
            return bad("start_req and end_req must have one entry per service".into());
        }
        if self.start_req.iter().chain(&self.end_req).any(|&b| b > 1) {
            return bad("start_req and end_req must be 0/1".into());
        }
        Ok(())
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Draws a random instance. Identical configs give bit-identical output.
pub fn generate(config: &GenConfig) -> Result<Instance, InstanceError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.num_patients;
    let v = config.num_nurses;
    let s = config.num_services;
    let side = config.area_side;

    let mut coords = Vec::with_capacity(n + 2);
    coords.push(config.depot_xy.unwrap_or([0.0, 0.0]));
    for _ in 0..n {
        coords.push([rng.gen_range(0.0..side), rng.gen_range(0.0..side)]);
    }
    coords.push(config.lab_xy.unwrap_or([side, side]));

    let travel_time: Vec<Vec<f64>> = coords
        .iter()
        .map(|a| {
            coords
                .iter()
                .map(|b| round3(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()))
                .collect()
        })
        .collect();

    let mut demand = vec![vec![0u8; s]; n];
    for row in demand.iter_mut() {
        for g in row.iter_mut() {
            *g = rng.gen_bool(config.demand_density) as u8;
        }
        if row.iter().all(|&g| g == 0) {
            row[rng.gen_range(0..s)] = 1;
        }
    }

    let mut qualification = vec![vec![0u8; s]; v];
    for row in qualification.iter_mut() {
        for a in row.iter_mut() {
            *a = rng.gen_bool(config.qualification_density) as u8;
        }
    }
    for service in 0..s {
        if qualification.iter().all(|row| row[service] == 0) {
            qualification[rng.gen_range(0..v)][service] = 1;
        }
    }

    let mut service_duration = vec![vec![0.0; s]; n];
    for (i, row) in service_duration.iter_mut().enumerate() {
        for (sv, d) in row.iter_mut().enumerate() {
            let draw = if config.max_duration > config.min_duration {
                rng.gen_range(config.min_duration..config.max_duration)
            } else {
                config.min_duration
            };
            if demand[i][sv] == 1 {
                *d = round3(draw);
            }
        }
    }

    let latest_open = config.horizon - config.window_width;
    let mut window_lo = Vec::with_capacity(n);
    let mut window_hi = Vec::with_capacity(n);
    for _ in 0..n {
        let open = if latest_open > 0.0 {
            round3(rng.gen_range(0.0..=latest_open))
        } else {
            0.0
        };
        window_lo.push(open);
        window_hi.push(open + config.window_width);
    }

    let instance = Instance {
        name: format!("gen-n{n}-v{v}-s{s}-seed{}", config.seed),
        num_patients: n,
        num_nurses: v,
        num_services: s,
        travel_time,
        service_duration,
        window_lo,
        window_hi,
        qualification,
        demand,
        start_req: config.start_req.clone(),
        end_req: config.end_req.clone(),
    };
    instance.validate()?;
    Ok(instance)
}

/// Two patients, one nurse, two services; the second service must finish
/// at the laboratory.
pub fn tiny_t1() -> Instance {
    Instance {
        name: "T1".into(),
        num_patients: 2,
        num_nurses: 1,
        num_services: 2,
        travel_time: vec![
            vec![0.0, 10.0, 20.0, 30.0],
            vec![10.0, 0.0, 10.0, 25.0],
            vec![20.0, 10.0, 0.0, 15.0],
            vec![30.0, 25.0, 15.0, 0.0],
        ],
        service_duration: vec![vec![5.0, 5.0], vec![5.0, 5.0]],
        window_lo: vec![0.0, 0.0],
        window_hi: vec![1000.0, 1000.0],
        qualification: vec![vec![1, 1]],
        demand: vec![vec![1, 0], vec![0, 1]],
        start_req: vec![0, 0],
        end_req: vec![0, 1],
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let instance: Instance =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    instance.validate()?;
    Ok(instance)
}

pub fn instance_to_string(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(instance).expect("instance serializes");
    text.push('\n');
    text
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    fs::write(path, instance_to_string(instance))?;
    Ok(())
}
