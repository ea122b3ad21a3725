//! Planted-relevance generator, per-method quality metrics and a timing grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use framesel_core::Method;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::api::select_embeddings;
use crate::format::Embeddings;
use crate::report::{check_schema, SCHEMA_VERSION};
use crate::{Error, Result, RunConfig, ENGINE_VERSION};

pub const BENCH_SCHEMA: &str = "framesel.bench";
pub const DEFAULT_GRID: [usize; 3] = [2048, 8192, 32768];

/// Lag-one correlation of the background frame stream.
const BACKGROUND_CORRELATION: f64 = 0.9;

/// Synthetic stream: correlated background frames plus a contiguous run of
/// `planted` near-copies of the query starting at segment `segment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub d: usize,
    pub planted: usize,
    /// Index of the segment (of the run's segment size) where planting starts.
    pub segment: usize,
    /// Expected norm of the perturbation added to the query.
    pub noise: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self { n: 256, d: 64, planted: 16, segment: 3, noise: 0.1, seed: 0 }
    }
}

impl GeneratorSpec {
    /// Parses `key=value` pairs separated by commas; missing keys keep defaults.
    pub fn parse(s: &str) -> Result<Self> {
        let mut spec = Self::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("generator: expected key=value, got `{part}`")))?;
            let bad = || Error::Config(format!("generator: bad value for `{key}`: `{value}`"));
            match key.trim() {
                "n" => spec.n = value.trim().parse().map_err(|_| bad())?,
                "d" => spec.d = value.trim().parse().map_err(|_| bad())?,
                "planted" => spec.planted = value.trim().parse().map_err(|_| bad())?,
                "segment" => spec.segment = value.trim().parse().map_err(|_| bad())?,
                "noise" => spec.noise = value.trim().parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::Config(format!("generator: unknown key `{other}`"))),
            }
        }
        Ok(spec)
    }

    /// First planted frame for segment size `m`.
    pub fn planted_start(&self, m: usize) -> usize {
        self.segment.saturating_mul(m)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Config("generator: n and d must be positive".into()));
        }
        if self.planted == 0 {
            return Err(Error::Config("generator: planted must be positive".into()));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::Config("generator: noise must be finite and nonnegative".into()));
        }
        if self.planted_start(m).saturating_add(self.planted) > self.n {
            return Err(Error::Config(format!(
                "generator: planted frames {}..{} exceed n = {}",
                self.planted_start(m),
                self.planted_start(m).saturating_add(self.planted),
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub frames: Embeddings,
    pub query: Embeddings,
    /// Planted frame indices, ascending.
    pub planted: Vec<usize>,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_f32(v: &[f64]) -> Vec<f32> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / norm) as f32).collect()
}

pub fn generate(spec: &GeneratorSpec, m: usize) -> Result<PlantedInstance> {
    spec.validate(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let q = gaussian(&mut rng, d);
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let q: Vec<f64> = q.iter().map(|x| x / qn).collect();
    let start = spec.planted_start(m);
    let planted: Vec<usize> = (start..start + spec.planted).collect();
    let rho = BACKGROUND_CORRELATION;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut state = gaussian(&mut rng, d);
    let mut data = Vec::with_capacity(spec.n * d);
    for i in 0..spec.n {
        let g = gaussian(&mut rng, d);
        state.iter_mut().zip(&g).for_each(|(s, e)| *s = rho * *s + innovation * e);
        if planted.binary_search(&i).is_ok() {
            let e = gaussian(&mut rng, d);
            let scale = spec.noise / (d as f64).sqrt();
            let v: Vec<f64> = q.iter().zip(&e).map(|(qi, ei)| qi + scale * ei).collect();
            data.extend(unit_f32(&v));
        } else {
            data.extend(unit_f32(&state));
        }
    }
    Ok(PlantedInstance {
        frames: Embeddings::new(spec.n, d, data)?,
        query: Embeddings::new(1, d, unit_f32(&q))?,
        planted,
    })
}

/// Share of `min(k, |planted|)` planted frames that were selected.
pub fn recall(selected: &[usize], planted: &[usize]) -> f64 {
    if selected.is_empty() || planted.is_empty() {
        return 0.0;
    }
    let hits = selected.iter().filter(|i| planted.binary_search(i).is_ok()).count();
    hits as f64 / selected.len().min(planted.len()) as f64
}

/// Mean pairwise cosine similarity of the selected frames; 0 for fewer than two.
pub fn redundancy(selected: &[usize], frames: &Embeddings) -> f64 {
    if selected.len() < 2 {
        return 0.0;
    }
    let row = |i: usize| frames.row(i).iter().map(|&v| f64::from(v)).collect::<Vec<f64>>();
    let rows: Vec<Vec<f64>> = selected.iter().map(|&i| row(i)).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            let dot: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
            total += dot / (norms[a] * norms[b]);
            pairs += 1;
        }
    }
    total / pairs as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub generator: GeneratorSpec,
    pub methods: Vec<Method>,
    /// Generator seeds `generator.seed .. generator.seed + seeds`.
    pub seeds: usize,
    /// Method, k, λ, segment size, kernel, normalization and parallelism.
    pub run: RunConfig,
    /// Frame counts of the timing grid; empty skips timing.
    pub grid: Vec<usize>,
    pub grid_dim: usize,
    /// Best of this many runs per timing cell.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorSpec::default(),
            methods: Method::ALL.to_vec(),
            seeds: 50,
            run: RunConfig::default(),
            grid: DEFAULT_GRID.to_vec(),
            grid_dim: 64,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRow {
    pub seed: u64,
    pub method: String,
    pub recall: f64,
    pub redundancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSummary {
    pub method: String,
    pub recall: f64,
    pub redundancy: f64,
    /// Mean selection wall time per seed.
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingRow {
    pub method: String,
    pub n: usize,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub schema: String,
    pub schema_version: u32,
    pub engine_version: String,
    pub generator: GeneratorSpec,
    pub seeds: usize,
    pub k: usize,
    pub lambda: f64,
    pub segment: usize,
    pub kernel: Vec<f64>,
    pub summary: Vec<MethodSummary>,
    pub per_seed: Vec<SeedRow>,
    pub timing: Vec<TimingRow>,
    /// Least-squares slope of log time against log n, per method.
    pub slopes: BTreeMap<String, f64>,
}

impl BenchReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method.name())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        check_schema(&doc.schema, BENCH_SCHEMA, doc.schema_version)?;
        Ok(doc)
    }

    /// Plain-text tables.
    pub fn render(&self) -> String {
        let g = &self.generator;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "planted-relevance: n={} d={} planted={} segment={} noise={} seeds={} (from {}) k={} lambda={} m={}",
            g.n, g.d, g.planted, g.segment, g.noise, self.seeds, g.seed, self.k, self.lambda, self.segment
        );
        let _ = writeln!(out, "{:<12} {:>8} {:>11} {:>10}", "method", "recall", "redundancy", "ms/run");
        for s in &self.summary {
            let _ = writeln!(out, "{:<12} {:>8.3} {:>11.4} {:>10.3}", s.method, s.recall, s.redundancy, s.millis);
        }
        if !self.timing.is_empty() {
            let mut grid: Vec<usize> = self.timing.iter().map(|t| t.n).collect();
            grid.sort_unstable();
            grid.dedup();
            let _ = write!(out, "\n{:<12}", "method");
            for n in &grid {
                let _ = write!(out, " {:>12}", format!("n={n} ms"));
            }
            let _ = writeln!(out, " {:>8}", "slope");
            for (method, slope) in &self.slopes {
                let _ = write!(out, "{method:<12}");
                for n in &grid {
                    let ms =
                        self.timing.iter().find(|t| &t.method == method && t.n == *n).map_or(f64::NAN, |t| t.millis);
                    let _ = write!(out, " {ms:>12.3}");
                }
                let _ = writeln!(out, " {slope:>8.3}");
            }
        }
        out
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(1e-9).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if den == 0.0 {
        return f64::NAN;
    }
    num / den
}

fn with_method(run: &RunConfig, method: Method) -> RunConfig {
    RunConfig { method, ..run.clone() }
}

/// Wall time in milliseconds of the best of `repeats` selections.
pub fn time_method(inst: &PlantedInstance, run: &RunConfig, repeats: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        select_embeddings(&inst.frames, &inst.query, run)?;
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(best)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.methods.is_empty() {
        return Err(Error::Config("bench: no methods".into()));
    }
    if cfg.seeds == 0 {
        return Err(Error::Config("bench: seeds must be positive".into()));
    }
    let m = cfg.run.m;
    let mut per_seed = Vec::with_capacity(cfg.seeds * cfg.methods.len());
    let mut totals: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); cfg.methods.len()];
    for s in 0..cfg.seeds as u64 {
        let spec = GeneratorSpec { seed: cfg.generator.seed + s, ..cfg.generator.clone() };
        let inst = generate(&spec, m)?;
        for (slot, &method) in cfg.methods.iter().enumerate() {
            let t = Instant::now();
            let out = select_embeddings(&inst.frames, &inst.query, &with_method(&cfg.run, method))?;
            let ms = t.elapsed().as_secs_f64() * 1e3;
            let rc = recall(&out.indices, &inst.planted);
            let rd = redundancy(&out.indices, &inst.frames);
            totals[slot].0 += rc;
            totals[slot].1 += rd;
            totals[slot].2 += ms;
            per_seed.push(SeedRow { seed: spec.seed, method: method.name().into(), recall: rc, redundancy: rd });
        }
    }
    let count = cfg.seeds as f64;
    let summary = cfg
        .methods
        .iter()
        .zip(&totals)
        .map(|(method, t)| MethodSummary {
            method: method.name().into(),
            recall: t.0 / count,
            redundancy: t.1 / count,
            millis: t.2 / count,
        })
        .collect();

    let mut timing = Vec::new();
    let mut slopes = BTreeMap::new();
    if !cfg.grid.is_empty() {
        let instances = cfg
            .grid
            .iter()
            .map(|&n| {
                let spec = GeneratorSpec { n, d: cfg.grid_dim, ..cfg.generator.clone() };
                generate(&spec, m)
            })
            .collect::<Result<Vec<_>>>()?;
        for &method in &cfg.methods {
            let run = with_method(&cfg.run, method);
            let mut points = Vec::with_capacity(instances.len());
            for (inst, &n) in instances.iter().zip(&cfg.grid) {
                let ms = time_method(inst, &run, cfg.repeats)?;
                timing.push(TimingRow { method: method.name().into(), n, millis: ms });
                points.push((n as f64, ms));
            }
            if points.len() >= 2 {
                slopes.insert(method.name().to_string(), loglog_slope(&points));
            }
        }
    }

    Ok(BenchReport {
        schema: BENCH_SCHEMA.into(),
        schema_version: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.into(),
        generator: cfg.generator.clone(),
        seeds: cfg.seeds,
        k: cfg.run.k,
        lambda: cfg.run.lambda,
        segment: m,
        kernel: cfg.run.alphas.clone(),
        summary,
        per_seed,
        timing,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        let s = GeneratorSpec::parse("n=100, d=8,planted=4,seed=9").unwrap();
        assert_eq!((s.n, s.d, s.planted, s.seed), (100, 8, 4, 9));
        assert_eq!(s.segment, 3);
        assert!(GeneratorSpec::parse("n=1,x=2").is_err());
        assert!(GeneratorSpec::parse("n").is_err());
        assert!(GeneratorSpec::parse("n=-1").is_err());
    }

    #[test]
    fn plantation_must_fit() {
        let s = GeneratorSpec { n: 100, segment: 3, planted: 8, ..Default::default() };
        assert!(generate(&s, 32).is_err());
        assert!(generate(&s, 16).is_ok());
    }

    #[test]
    fn generator_is_seeded() {
        let s = GeneratorSpec::default();
        assert_eq!(generate(&s, 32).unwrap(), generate(&s, 32).unwrap());
        let other = GeneratorSpec { seed: 1, ..s.clone() };
        assert_ne!(generate(&s, 32).unwrap().frames, generate(&other, 32).unwrap().frames);
    }

    #[test]
    fn metrics() {
        assert_eq!(recall(&[1, 2, 9], &[1, 2, 3, 4]), 2.0 / 3.0);
        assert_eq!(recall(&[1, 2, 3, 4, 9], &[1, 2]), 1.0);
        let e = Embeddings::new(3, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(redundancy(&[0, 1], &e), 1.0);
        assert!((redundancy(&[0, 1, 2], &e) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(redundancy(&[0], &e), 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(1.5))).collect();
        assert!((loglog_slope(&pts) - 1.5).abs() < 1e-12);
    }
}
