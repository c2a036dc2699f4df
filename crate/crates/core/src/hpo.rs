//! Bayesian model selection: a Gaussian-process surrogate over a mixed
//! discrete/continuous search space with expected-improvement acquisition.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::data::PatientExample;
use crate::error::{Error, Result};
use crate::math;
use crate::nn::{Activation, EncoderConfig, EncoderFamily, HeadConfig, ModelConfig};
use crate::rng::{self, SeedRng};
use crate::training::{self, TrainConfig, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadPreset {
    Small,
    Medium,
}

impl HeadPreset {
    pub fn hidden_sizes(self) -> Vec<usize> {
        match self {
            HeadPreset::Small => vec![16],
            HeadPreset::Medium => vec![64, 16],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeadPreset::Small => "small",
            HeadPreset::Medium => "medium",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRate {
    LogUniform { lo: f64, hi: f64 },
    Choices { values: Vec<f64> },
}

impl LearningRate {
    fn log_bounds(&self) -> (f64, f64) {
        match self {
            LearningRate::LogUniform { lo, hi } => (math::ln(*lo), math::ln(*hi)),
            LearningRate::Choices { values } => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (math::ln(lo), math::ln(hi))
            }
        }
    }

    /// Position of `lr` on the log scale, in `[0, 1]`.
    fn normalize(&self, lr: f64) -> f64 {
        let (a, b) = self.log_bounds();
        if b > a {
            (math::ln(lr) - a) / (b - a)
        } else {
            0.0
        }
    }

    /// Inverse of [`normalize`](Self::normalize), clamped so rounding in
    /// `exp(ln x)` cannot leave the range.
    fn denormalize(&self, u: f64) -> f64 {
        let (a, b) = self.log_bounds();
        let x = math::exp(a + u.clamp(0.0, 1.0) * (b - a));
        match self {
            LearningRate::LogUniform { lo, hi } => x.clamp(*lo, *hi),
            LearningRate::Choices { .. } => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub hidden: Vec<usize>,
    pub layers: Vec<usize>,
    pub family: Vec<EncoderFamily>,
    pub learning_rate: LearningRate,
    pub head: Vec<HeadPreset>,
    pub head_activation: Activation,
    pub shared_across_scenes: bool,
    pub use_demographics: bool,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            hidden: vec![32, 64, 128],
            layers: vec![2, 4, 6],
            family: vec![EncoderFamily::Lstm, EncoderFamily::BiLstm],
            learning_rate: LearningRate::LogUniform { lo: 1e-4, hi: 1e-2 },
            head: vec![HeadPreset::Small, HeadPreset::Medium],
            head_activation: Activation::Tanh,
            shared_across_scenes: true,
            use_demographics: false,
        }
    }
}

/// One configuration in a [`SearchSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub family: EncoderFamily,
    pub hidden: usize,
    pub layers: usize,
    pub head: HeadPreset,
    pub learning_rate: f64,
}

/// The discrete part of a [`Point`].
type Combo = (EncoderFamily, usize, usize, HeadPreset);

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("search space: {what}")));
        if self.hidden.is_empty() || self.layers.is_empty() || self.family.is_empty() || self.head.is_empty() {
            return bad("every discrete dimension needs at least one value");
        }
        if self.hidden.contains(&0) || self.layers.contains(&0) {
            return bad("hidden sizes and layer counts must be positive");
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match &self.learning_rate {
            LearningRate::LogUniform { lo, hi } => {
                if !(positive(*lo) && positive(*hi) && lo < hi) {
                    return bad("learning-rate range must satisfy 0 < lo < hi");
                }
            }
            LearningRate::Choices { values } => {
                if values.is_empty() || !values.iter().all(|v| positive(*v)) {
                    return bad("learning-rate choices must be positive and non-empty");
                }
            }
        }
        Ok(())
    }

    pub fn model_config(&self, p: &Point) -> ModelConfig {
        let mut enc = EncoderConfig::new(p.family, p.hidden, p.layers);
        enc.shared_across_scenes = self.shared_across_scenes;
        let mut cfg = ModelConfig::new(enc, HeadConfig { hidden_sizes: p.head.hidden_sizes(), activation: self.head_activation });
        cfg.use_demographics = self.use_demographics;
        cfg
    }

    fn combos(&self) -> Vec<Combo> {
        let mut out = Vec::new();
        for &f in &self.family {
            for &h in &self.hidden {
                for &l in &self.layers {
                    for &hp in &self.head {
                        out.push((f, h, l, hp));
                    }
                }
            }
        }
        out
    }

    /// Number of points when the space is finite.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.learning_rate {
            LearningRate::LogUniform { .. } => None,
            LearningRate::Choices { values } => Some(self.combos().len() * values.len()),
        }
    }

    /// Every point of a finite space.
    pub fn enumerate(&self) -> Option<Vec<Point>> {
        let LearningRate::Choices { values } = &self.learning_rate else { return None };
        let mut out = Vec::new();
        for (family, hidden, layers, head) in self.combos() {
            for &learning_rate in values {
                out.push(Point { family, hidden, layers, head, learning_rate });
            }
        }
        Some(out)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let lr_ok = match &self.learning_rate {
            LearningRate::LogUniform { lo, hi } => p.learning_rate >= *lo && p.learning_rate <= *hi,
            LearningRate::Choices { values } => values.contains(&p.learning_rate),
        };
        self.family.contains(&p.family)
            && self.hidden.contains(&p.hidden)
            && self.layers.contains(&p.layers)
            && self.head.contains(&p.head)
            && lr_ok
    }

    pub fn random_point(&self, rng: &mut SeedRng) -> Point {
        let pick = |rng: &mut SeedRng, n: usize| (rng::uniform(rng, 0.0, n as f64) as usize).min(n - 1);
        let family = self.family[pick(rng, self.family.len())];
        let hidden = self.hidden[pick(rng, self.hidden.len())];
        let layers = self.layers[pick(rng, self.layers.len())];
        let head = self.head[pick(rng, self.head.len())];
        let learning_rate = match &self.learning_rate {
            LearningRate::LogUniform { .. } => self.learning_rate.denormalize(rng::uniform(rng, 0.0, 1.0)),
            LearningRate::Choices { values } => values[pick(rng, values.len())],
        };
        Point { family, hidden, layers, head, learning_rate }
    }

    /// Unit-cube encoding: one-hot blocks for the discrete dimensions and
    /// the log-scaled learning rate.
    pub fn encode(&self, p: &Point) -> Vec<f64> {
        let mut v = Vec::new();
        let one_hot = |v: &mut Vec<f64>, n: usize, i: Option<usize>| {
            for k in 0..n {
                v.push(if Some(k) == i { 1.0 } else { 0.0 });
            }
        };
        one_hot(&mut v, self.family.len(), self.family.iter().position(|x| *x == p.family));
        one_hot(&mut v, self.hidden.len(), self.hidden.iter().position(|x| *x == p.hidden));
        one_hot(&mut v, self.layers.len(), self.layers.iter().position(|x| *x == p.layers));
        one_hot(&mut v, self.head.len(), self.head.iter().position(|x| *x == p.head));
        v.push(self.learning_rate.normalize(p.learning_rate));
        v
    }
}

/// Exact GP regression with a squared-exponential kernel of unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gp {
    xs: Vec<Vec<f64>>,
    /// Cholesky factor of `K + noise I`, row-major lower triangle.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    length_scale: f64,
    y_mean: f64,
    y_scale: f64,
}

impl Gp {
    /// Observations are centred and scaled to unit variance internally.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], length_scale: f64, noise: f64) -> Result<Self> {
        let n = xs.len();
        if n == 0 || n != ys.len() {
            return Err(Error::Shape(format!("{n} inputs for {} observations", ys.len())));
        }
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum::<f64>() / n as f64;
        let y_scale = if var > 1e-24 { math::sqrt(var) } else { 1.0 };
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel(&xs[i], &xs[j], length_scale);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
            k[i * n + i] += noise;
        }
        let chol = cholesky(&k, n)?;
        let z: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_scale).collect();
        let alpha = chol_solve(&chol, n, &z);
        Ok(Gp { xs: xs.to_vec(), chol, alpha, length_scale, y_mean, y_scale })
    }

    /// Posterior mean and variance of the latent function, in the units of
    /// the observations.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let n = self.xs.len();
        let ks: Vec<f64> = self.xs.iter().map(|xi| kernel(xi, x, self.length_scale)).collect();
        let mean = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let v = forward_sub(&self.chol, n, &ks);
        let var = (1.0 - v.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * self.y_scale * var)
    }
}

fn kernel(a: &[f64], b: &[f64], ls: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    math::exp(-0.5 * d2 / (ls * ls))
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return Err(Error::InvalidConfig("GP kernel matrix is not positive definite".into()));
                }
                l[i * n + i] = math::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    y
}

fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let y = forward_sub(l, n, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * x[k]).sum::<f64>()) / l[i * n + i];
    }
    x
}

/// Expected improvement over `best` for a maximization problem.
pub fn expected_improvement(mean: f64, var: f64, best: f64) -> f64 {
    let sd = math::sqrt(var);
    let gain = mean - best;
    if sd < 1e-12 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    let cdf = 0.5 * (1.0 + math::erf(z / SQRT_2));
    let pdf = math::exp(-0.5 * z * z) / math::sqrt(2.0 * PI);
    gain * cdf + sd * pdf
}

/// Validation score a trial is ranked by (higher is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// F1 over validation cycles, NH positive.
    #[default]
    CycleF1,
    /// F1 over validation patients (mean-probability aggregation).
    PatientF1,
    /// Negated mean validation BCE.
    NegLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HpoConfig {
    pub budget: usize,
    pub n_init: usize,
    pub seed: u64,
    pub objective: Objective,
    pub length_scale: f64,
    pub noise: f64,
    /// Random learning-rate starts per discrete combination before local
    /// refinement.
    pub multistart: usize,
}

impl Default for HpoConfig {
    fn default() -> Self {
        HpoConfig { budget: 5, n_init: 2, seed: 0, objective: Objective::CycleF1, length_scale: 0.5, noise: 1e-3, multistart: 8 }
    }
}

impl HpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("search budget must be at least 1".into()));
        }
        if !(self.length_scale > 0.0 && self.noise > 0.0) {
            return Err(Error::InvalidConfig("GP length scale and noise must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialStatus {
    Completed,
    Failed { diagnostic: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub point: Point,
    pub objective: Option<f64>,
    pub num_params: usize,
    pub status: TrialStatus,
}

impl Trial {
    pub fn is_completed(&self) -> bool {
        self.status == TrialStatus::Completed && self.objective.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Suggestion {
    Point(Point),
    /// Every point of a finite space has been tried.
    Exhausted,
}

fn tried(history: &[Trial], p: &Point) -> bool {
    history.iter().any(|t| t.point == *p)
}

fn surrogate(history: &[Trial], space: &SearchSpace, cfg: &HpoConfig) -> Result<Option<(Gp, f64)>> {
    let done: Vec<&Trial> = history.iter().filter(|t| t.is_completed()).collect();
    if done.is_empty() {
        return Ok(None);
    }
    let xs: Vec<Vec<f64>> = done.iter().map(|t| space.encode(&t.point)).collect();
    let ys: Vec<f64> = done.iter().map(|t| t.objective.unwrap_or(0.0)).collect();
    let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Some((Gp::fit(&xs, &ys, cfg.length_scale, cfg.noise)?, best)))
}

/// Expected improvement of `p` under the surrogate fitted to `history`.
pub fn acquisition(history: &[Trial], space: &SearchSpace, cfg: &HpoConfig, p: &Point) -> Result<f64> {
    Ok(match surrogate(history, space, cfg)? {
        Some((gp, best)) => {
            let (m, v) = gp.predict(&space.encode(p));
            expected_improvement(m, v, best)
        }
        None => 0.0,
    })
}

/// Next point to evaluate.
///
/// The first `n_init` suggestions are random; the second and later of
/// these maximize the minimum distance to earlier points among a batch of
/// random candidates. Afterwards expected improvement is maximized over
/// every discrete combination, with the learning rate found by random
/// multistart plus golden-section refinement on its log scale.
pub fn suggest(history: &[Trial], space: &SearchSpace, cfg: &HpoConfig, rng: &mut SeedRng) -> Result<Suggestion> {
    space.validate()?;
    if let Some(all) = space.enumerate() {
        if all.iter().all(|p| tried(history, p)) {
            return Ok(Suggestion::Exhausted);
        }
    }
    let fresh = |p: &Point| !tried(history, p);
    let completed = history.iter().filter(|t| t.is_completed()).count();
    if history.len() < cfg.n_init || completed == 0 {
        let seen: Vec<Vec<f64>> = history.iter().map(|t| space.encode(&t.point)).collect();
        let mut best: Option<(f64, Point)> = None;
        for _ in 0..64 {
            let p = space.random_point(rng);
            if !fresh(&p) {
                continue;
            }
            if seen.is_empty() {
                return Ok(Suggestion::Point(p));
            }
            let x = space.encode(&p);
            let d = seen.iter().map(|s| s.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).fold(f64::INFINITY, f64::min);
            if best.as_ref().map_or(true, |(bd, _)| d > *bd) {
                best = Some((d, p));
            }
        }
        if let Some((_, p)) = best {
            return Ok(Suggestion::Point(p));
        }
        // Random draws kept hitting tried points; fall through to the
        // exhaustive acquisition pass.
    }

    let Some((gp, incumbent)) = surrogate(history, space, cfg)? else {
        return Ok(Suggestion::Point(space.random_point(rng)));
    };
    let ei = |p: &Point| {
        let (m, v) = gp.predict(&space.encode(p));
        expected_improvement(m, v, incumbent)
    };
    let mut best: Option<(f64, Point)> = None;
    let consider = |p: Point, best: &mut Option<(f64, Point)>| {
        if tried(history, &p) {
            return;
        }
        let a = ei(&p);
        if best.as_ref().map_or(true, |(b, _)| a > *b) {
            *best = Some((a, p));
        }
    };
    for (family, hidden, layers, head) in space.combos() {
        let at = |lr: f64| Point { family, hidden, layers, head, learning_rate: lr };
        match &space.learning_rate {
            LearningRate::Choices { values } => {
                for &lr in values {
                    consider(at(lr), &mut best);
                }
            }
            lr_space @ LearningRate::LogUniform { .. } => {
                let score = |u: f64| ei(&at(lr_space.denormalize(u)));
                let mut starts: Vec<f64> = vec![0.0, 1.0];
                starts.extend((0..cfg.multistart).map(|_| rng::uniform(rng, 0.0, 1.0)));
                let u0 = starts.iter().copied().fold((f64::NEG_INFINITY, 0.0), |acc, u| {
                    let s = score(u);
                    if s > acc.0 {
                        (s, u)
                    } else {
                        acc
                    }
                });
                let u = golden_max(&score, (u0.1 - 0.15).max(0.0), (u0.1 + 0.15).min(1.0), u0);
                consider(at(lr_space.denormalize(u)), &mut best);
            }
        }
    }
    match best {
        Some((_, p)) => Ok(Suggestion::Point(p)),
        None => Ok(Suggestion::Exhausted),
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`, never returning
/// a point worse than the starting `(value, x)`.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, start: (f64, f64)) -> f64 {
    let r = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..30 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let (fx, x) = if fc > fd { (fc, c) } else { (fd, d) };
    if fx > start.0 {
        x
    } else {
        start.1
    }
}

/// What an objective function returns for one point.
#[derive(Debug, Clone)]
pub struct Evaluated<M> {
    pub objective: f64,
    pub num_params: usize,
    pub payload: M,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<M> {
    pub trials: Vec<Trial>,
    pub best: Trial,
    pub best_payload: M,
}

/// Run up to `cfg.budget` trials of `evaluate` and return the best
/// completed one. Ties go to fewer parameters, then to the earlier trial.
pub fn search<M, F>(space: &SearchSpace, cfg: &HpoConfig, mut evaluate: F) -> Result<SearchOutcome<M>>
where
    F: FnMut(&Point) -> Result<Evaluated<M>>,
{
    cfg.validate()?;
    space.validate()?;
    let mut rng = rng::stream(cfg.seed, &[rng::tag("hpo")]);
    let mut trials: Vec<Trial> = Vec::new();
    let mut best: Option<(Trial, M)> = None;
    for index in 0..cfg.budget {
        let point = match suggest(&trials, space, cfg, &mut rng)? {
            Suggestion::Point(p) => p,
            Suggestion::Exhausted => break,
        };
        let trial = match evaluate(&point) {
            Ok(ev) if ev.objective.is_finite() => {
                let t = Trial {
                    index,
                    point,
                    objective: Some(ev.objective),
                    num_params: ev.num_params,
                    status: TrialStatus::Completed,
                };
                let better = match &best {
                    None => true,
                    Some((b, _)) => {
                        let bo = b.objective.unwrap_or(f64::NEG_INFINITY);
                        ev.objective > bo || (ev.objective == bo && ev.num_params < b.num_params)
                    }
                };
                if better {
                    best = Some((t.clone(), ev.payload));
                }
                t
            }
            Ok(ev) => Trial {
                index,
                point,
                objective: None,
                num_params: ev.num_params,
                status: TrialStatus::Failed { diagnostic: format!("non-finite objective {}", ev.objective) },
            },
            Err(e) => Trial { index, point, objective: None, num_params: 0, status: TrialStatus::Failed { diagnostic: format!("{e}") } },
        };
        trials.push(trial);
    }
    match best {
        Some((best, best_payload)) => Ok(SearchOutcome { trials, best, best_payload }),
        None => {
            let diagnostics = trials
                .iter()
                .map(|t| match &t.status {
                    TrialStatus::Failed { diagnostic } => format!("trial {}: {diagnostic}", t.index),
                    TrialStatus::Completed => format!("trial {}: completed", t.index),
                })
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::AllTrialsFailed { count: trials.len(), diagnostics })
        }
    }
}

/// Best-so-far objective after each trial (failed trials repeat the
/// previous value).
pub fn incumbent_trace(trials: &[Trial]) -> Vec<Option<f64>> {
    let mut best: Option<f64> = None;
    trials
        .iter()
        .map(|t| {
            if let Some(o) = t.objective.filter(|_| t.is_completed()) {
                best = Some(best.map_or(o, |b: f64| b.max(o)));
            }
            best
        })
        .collect()
}

/// F1 with NH as the positive class; 0 when there are no true positives.
pub fn f1_score(predicted_nh: &[bool], actual_nh: &[bool]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    for (&p, &a) in predicted_nh.iter().zip(actual_nh) {
        match (p, a) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
    }
}

/// Validation score of a trained model under `objective`.
pub fn score(model: &TrainedModel, val: &[PatientExample], objective: Objective) -> Result<f64> {
    if val.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let probs = model.predict_examples(val)?;
    Ok(match objective {
        Objective::CycleF1 => {
            let pred: Vec<bool> = probs.iter().map(|p| *p >= 0.5).collect();
            let act: Vec<bool> = val.iter().map(|e| e.label.is_positive()).collect();
            f1_score(&pred, &act)
        }
        Objective::PatientF1 => {
            let mut ids: Vec<&str> = val.iter().map(|e| e.patient_id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            let mut pred = Vec::new();
            let mut act = Vec::new();
            for id in ids {
                let ps: Vec<f64> =
                    val.iter().zip(&probs).filter(|(e, _)| e.patient_id == id).map(|(_, p)| *p).collect();
                let (label, _) = training::predict_patient(&ps)?;
                pred.push(label.is_positive());
                act.push(val.iter().find(|e| e.patient_id == id).map_or(false, |e| e.label.is_positive()));
            }
            f1_score(&pred, &act)
        }
        Objective::NegLoss => {
            -probs.iter().zip(val).map(|(p, e)| crate::nn::bce_loss(*p, e.label.target())).sum::<f64>() / val.len() as f64
        }
    })
}

/// Everything a training-backed search produced.
#[derive(Debug, Clone)]
pub struct TrainedSearch {
    pub trials: Vec<Trial>,
    pub best: Trial,
    pub model: TrainedModel,
    pub history: training::History,
}

/// Train one model per suggested point on `tr`, score it on `vl`, and
/// return the best trial together with its trained model.
pub fn run_search(
    tr: &[PatientExample],
    vl: &[PatientExample],
    space: &SearchSpace,
    cfg: &HpoConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainedSearch> {
    let out = search(space, cfg, |p| {
        let model_cfg = space.model_config(p);
        let tc = TrainConfig { learning_rate: p.learning_rate, ..train_cfg.clone() };
        let (model, history) = training::fit(tr, vl, &model_cfg, &tc)?;
        let objective = score(&model, vl, cfg.objective)?;
        Ok(Evaluated { objective, num_params: model.num_params(), payload: (model, history) })
    })?;
    let (model, history) = out.best_payload;
    Ok(TrainedSearch { trials: out.trials, best: out.best, model, history })
}
