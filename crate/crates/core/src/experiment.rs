//! Randomized property runs with byte-stable reports.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{
    atb_norm_lp, decompose_delta_indicator, decompose_h1_to_blocks, duality_bound_check_p2,
    validate_block, BlockRule,
};
use crate::error::{Error, Result};
use crate::gen::{
    gen_block, gen_filtration, gen_measurable_set, gen_nc_filtration, gen_projection, gen_rv,
    gen_set, MAX_DEPTH, MAX_DIM, MAX_POINTS,
};
use crate::medians::{
    all_valid_medians, bmo_alpha_norm, cm_lemma_check, cond_median, weak_atom_split, MedianSequence,
};
use crate::nc::{decompose_delta_projection, tau, validate_nc_block};
use crate::norms::{big_bmo_norm, bmo_equiv_gap};
use crate::prob::{Filtration, Rv, WeightedSpace};

pub const LP_POINTS: usize = crate::atoms::LP_MAX_POINTS;
pub const THREADS_VAR: &str = "MARTBLOCKS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    NormEquiv,
    Step2Constant,
    DualityP2,
    MedianLemma,
    WeakAtom,
    LpOracle,
    NcStep2,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::NormEquiv,
        Kind::Step2Constant,
        Kind::DualityP2,
        Kind::MedianLemma,
        Kind::WeakAtom,
        Kind::LpOracle,
        Kind::NcStep2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::NormEquiv => "norm-equiv",
            Kind::Step2Constant => "step2-constant",
            Kind::DualityP2 => "duality-p2",
            Kind::MedianLemma => "median-lemma",
            Kind::WeakAtom => "weak-atom",
            Kind::LpOracle => "lp-oracle",
            Kind::NcStep2 => "nc-step2",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind '{s}'")))
    }
}

/// What to run: kind, trial count, size caps and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub trials: usize,
    pub seed: u64,
    pub points: usize,
    pub depth: usize,
    pub dim: usize,
    /// Subatom exponent, where the kind takes one; `None` means the default.
    pub p: Option<f64>,
}

impl ExperimentSpec {
    pub fn new(kind: Kind, trials: usize, seed: u64) -> Self {
        Self {
            kind,
            trials,
            seed,
            points: MAX_POINTS,
            depth: MAX_DEPTH,
            dim: MAX_DIM,
            p: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.points < 2 || self.points > MAX_POINTS {
            return Err(Error::Config(format!(
                "points must lie in 2..={MAX_POINTS}"
            )));
        }
        if self.depth < 2 || self.depth > MAX_DEPTH {
            return Err(Error::Config(format!("depth must lie in 2..={MAX_DEPTH}")));
        }
        if self.dim < 1 || self.dim > MAX_DIM {
            return Err(Error::Config(format!("dim must lie in 1..={MAX_DIM}")));
        }
        if let Some(p) = self.p {
            if self.kind == Kind::DualityP2 && p != 2.0 {
                return Err(Error::Config(format!(
                    "duality-p2 runs at p = 2 only, got p = {p}"
                )));
            }
            if !(p > 1.0) {
                return Err(Error::Config(format!("p must exceed 1, got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; empty when `rhs = 0`.
    pub ratio: Option<f64>,
    pub pass: bool,
}

impl ReportRow {
    fn new(instance_id: u64, lhs: f64, rhs: f64, pass: bool) -> Self {
        let ratio = (rhs > 0.0).then(|| lhs / rhs);
        Self {
            instance_id,
            lhs,
            rhs,
            ratio,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub passes: usize,
    pub max_ratio: Option<f64>,
}

impl Summary {
    pub fn of(rows: &[ReportRow]) -> Self {
        Self {
            trials: rows.len(),
            passes: rows.iter().filter(|r| r.pass).count(),
            max_ratio: rows.iter().filter_map(|r| r.ratio).reduce(f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

/// The generator for one instance: stream `id` of the seeded ChaCha8 generator.
pub fn instance_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_VAR} must be a positive integer, got '{v}'"
            ))
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs every trial; rows come back in instance order whatever the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    spec.check()?;
    let pool = thread_pool()?;
    let rows = pool.install(|| {
        (0..spec.trials as u64)
            .into_par_iter()
            .map(|id| run_instance(spec, id))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Report {
        spec: spec.clone(),
        summary: Summary::of(&rows),
        rows,
    })
}

/// Runs one trial.
pub fn run_instance(spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let mut rng = instance_rng(spec.seed, id);
    let rng = &mut rng;
    match spec.kind {
        Kind::NormEquiv => norm_equiv(rng, spec, id),
        Kind::Step2Constant => step2_constant(rng, spec, id),
        Kind::DualityP2 => duality(rng, spec, id),
        Kind::MedianLemma => median_lemma(rng, spec, id),
        Kind::WeakAtom => weak_atom(rng, spec, id),
        Kind::LpOracle => lp_oracle(rng, spec, id),
        Kind::NcStep2 => nc_step2(rng, spec, id),
    }
}

/// A random filtration with `2..=max_points` points and `min_depth..=max_depth` levels.
fn sized_filtration(
    rng: &mut ChaCha8Rng,
    max_points: usize,
    min_depth: usize,
    max_depth: usize,
) -> Result<Filtration> {
    let n = rng.random_range(2..=max_points);
    let d = rng.random_range(min_depth..=max_depth.max(min_depth));
    gen_filtration(rng, n, d)
}

fn le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * b.abs().max(1.0)
}

fn norm_equiv(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let filt = sized_filtration(rng, spec.points, 1, spec.depth)?;
    let f = gen_rv(rng, &filt);
    let ms = MedianSequence::new(&f, &filt)?;
    let lhs = big_bmo_norm(&f, &filt)?;
    let rhs = 5.0 * bmo_alpha_norm(&f, &filt, &ms, 2.0)?;
    let (gl, gr) = bmo_equiv_gap(&f, &filt)?;
    Ok(ReportRow::new(
        id,
        lhs,
        rhs,
        le(lhs, rhs, 1e-12) && le(gl, gr, 1e-12),
    ))
}

fn step2_constant(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let filt = sized_filtration(rng, spec.points, 2, spec.depth)?;
    let a0 = gen_set(rng, filt.len());
    let k = rng.random_range(2..=filt.depth());
    let block = decompose_delta_indicator(&a0, &filt, k)?;
    let chi = filt.indicator(&a0).into_values();
    let target: Vec<f64> = filt
        .average(&chi, k)
        .iter()
        .zip(filt.average(&chi, k - 1))
        .map(|(a, b)| a - b)
        .collect();
    let recon = block
        .values(filt.len())
        .iter()
        .zip(&target)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    let rhs = 6.0 * filt.mass(&a0);
    let checked = validate_block(&block, &filt, BlockRule::hardy(f64::INFINITY));
    let lhs = checked.clone().unwrap_or_else(|_| block.lambda_mass());
    Ok(ReportRow::new(
        id,
        lhs,
        rhs,
        checked.is_ok() && recon <= 1e-9 && le(lhs, rhs, 1e-12),
    ))
}

fn duality(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let filt = sized_filtration(rng, spec.points, 1, spec.depth)?;
    let block = if filt.depth() >= 2 && rng.random_bool(0.25) {
        let k = rng.random_range(2..=filt.depth());
        decompose_delta_indicator(&gen_set(rng, filt.len()), &filt, k)?
    } else {
        gen_block(rng, &filt, 2.0)
    };
    let phi = gen_rv(rng, &filt);
    let (lhs, rhs) = duality_bound_check_p2(&block, &phi, &filt)?;
    Ok(ReportRow::new(id, lhs, rhs, lhs <= rhs + 1e-9))
}

fn median_lemma(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let max_points = if rng.random_bool(0.5) {
        spec.points.min(10)
    } else {
        spec.points
    };
    let filt = sized_filtration(rng, max_points, 1, spec.depth)?;
    let f = gen_rv(rng, &filt);
    let k = rng.random_range(1..=filt.depth());
    let set = gen_measurable_set(rng, &filt, k);
    let (lower, ok) = cm_lemma_check(&f, &filt, k, &set)?;
    let rhs = set
        .iter()
        .fold(f64::INFINITY, |m, &i| m.min(lower.values()[i]));
    let valid = MedianSequence::new(&f, &filt)?.is_valid(&f, &filt);
    let agrees = filt.len() > 10 || brute_force_agrees(&f, &filt)?;
    Ok(ReportRow::new(id, 0.5, rhs, ok && valid && agrees))
}

/// The lowest value passing both median inequalities on each block equals the
/// conditional median, at every level.
fn brute_force_agrees(f: &Rv, filt: &Filtration) -> Result<bool> {
    for k in 1..=filt.depth() {
        let alpha = cond_median(f, filt, k)?;
        for (block, valid) in filt.blocks(k).iter().zip(all_valid_medians(f, filt, k)?) {
            if valid.first() != Some(&alpha.values()[block[0]]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn weak_atom(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let filt = sized_filtration(rng, spec.points, 2, spec.depth)?;
    let k = rng.random_range(2..=filt.depth());
    let blocks = filt.blocks(k);
    let a = blocks[rng.random_range(0..blocks.len())].clone();
    let xi = filt.rv((0..filt.len())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect())?;
    let split = weak_atom_split(&xi, &a, &filt, k)?;
    let parent = filt.block_containing(k - 1, a[0]).to_vec();
    let (ma, mb) = (filt.mass(&a), filt.mass(&parent));
    let rest = mb - ma;
    let mut bounds = true;
    for i in 0..filt.len() {
        let (in_a, in_b) = (a.contains(&i), parent.contains(&i));
        let a1 = split.a1.values()[i].abs();
        let a2 = split.a2.values()[i].abs();
        bounds &= if in_b && !in_a {
            a1 <= (1.0 + 1e-12) / rest
        } else {
            a1 == 0.0
        };
        bounds &= if in_a {
            a2 <= (2.0 + 1e-12) / ma
        } else {
            a2 == 0.0
        };
    }
    let recon = (&split.a1 + &split.a2).sup_dist(&split.w);
    let pass = bounds
        && recon <= 1e-12 * split.w.norm(f64::INFINITY).max(1.0)
        && le(split.cost, 6.0, 1e-12);
    Ok(ReportRow::new(id, split.cost, 6.0, pass))
}

fn lp_oracle(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let filt = sized_filtration(rng, spec.points.min(LP_POINTS), 1, spec.depth.min(4))?;
    let f = gen_rv(rng, &filt);
    let lp = atb_norm_lp(&f, &filt)?;
    let upper = decompose_h1_to_blocks(&f, &filt, f64::INFINITY)?.cost;
    let pass = f.norm(1.0) <= lp + 1e-7 && lp <= upper + 1e-7;
    Ok(ReportRow::new(id, lp, upper, pass))
}

fn nc_step2(rng: &mut ChaCha8Rng, spec: &ExperimentSpec, id: u64) -> Result<ReportRow> {
    let n = rng.random_range(1..=spec.dim);
    let filt = gen_nc_filtration(rng, n, spec.depth)?;
    let k = rng.random_range(2..=filt.depth());
    let rank = rng.random_range(1..=n);
    let p = gen_projection(rng, n, rank);
    let block = decompose_delta_projection(&p, &filt, k)?;
    let target = filt.cond_exp(&p, k) - filt.cond_exp(&p, k - 1);
    let recon = crate::nc::algebra::max_entry(&(block.value(n) - target));
    let checked = [2.0, f64::INFINITY].map(|q| validate_nc_block(&block, &filt, q));
    let lhs = block.lambda_mass();
    let rhs = 6.0 * tau(&p).re;
    let pass = checked.iter().all(|c| c.is_ok()) && recon <= 1e-9 && le(lhs, rhs, 1e-12);
    Ok(ReportRow::new(id, lhs, rhs, pass))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format '{s}'"))),
        }
    }
}

pub const CSV_HEADER: [&str; 5] = ["instance_id", "lhs", "rhs", "ratio", "pass"];

/// Writes rows as CSV with a fixed header, or as a JSON array.
pub fn emit_report<W: Write>(rows: &[ReportRow], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_rows_json(s: &str) -> Result<Vec<ReportRow>> {
    Ok(serde_json::from_str(s)?)
}

/// A function on a filtered space: `levels[k-1][i]` is the level-`k` block of point `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub weights: Vec<f64>,
    pub levels: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

impl Instance {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn build(&self) -> Result<(Filtration, Rv)> {
        let filt = Filtration::new(
            WeightedSpace::new(self.weights.clone())?,
            self.levels.clone(),
        )?;
        let f = filt.rv(self.values.clone())?;
        Ok((filt, f))
    }
}

/// Parses `inf`, `infinity` or a number greater than 1.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let p = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        t => t
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse exponent '{s}'")))?,
    };
    if !(p > 1.0) {
        return Err(Error::Config(format!("exponent must exceed 1, got {s}")));
    }
    Ok(p)
}
