//! Training strategies: three-stage (pretrain, frozen-predictor backbone
//! training, joint fine-tuning) and the alternating, co-training and
//! single-stage alternatives.
//!
//! Every stage keeps the best-on-validation snapshot and restores it when the
//! stage ends, so a stage's reported metric is the minimum of its curve.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::Forecaster;
use crate::error::{Result, WdanError};
use crate::nn::{self, adam_step, AdamConfig, AdamState, Grads, Params};
use crate::norm::NormConfig;
use crate::pipeline::{ModelBundle, PreparedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ThreeStage,
    TwoStageAlt,
    TwoStageCotrain,
    SingleStage,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::ThreeStage,
        Strategy::TwoStageAlt,
        Strategy::TwoStageCotrain,
        Strategy::SingleStage,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::ThreeStage => "three_stage",
            Strategy::TwoStageAlt => "two_stage_alt",
            Strategy::TwoStageCotrain => "two_stage_cotrain",
            Strategy::SingleStage => "single_stage",
        }
    }
}

impl FromStr for Strategy {
    type Err = WdanError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| WdanError::InvalidStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub strategy: Strategy,
    /// Epoch budgets for statistics pretraining, backbone training and joint
    /// fine-tuning.
    pub epochs_per_stage: [usize; 3],
    pub lr_stat: f64,
    pub lr_backbone: f64,
    /// Defaults to a tenth of `lr_backbone`.
    pub lr_joint: Option<f64>,
    /// Epochs without validation improvement before a stage stops; 0 disables.
    pub patience: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            strategy: Strategy::ThreeStage,
            epochs_per_stage: [50, 50, 20],
            lr_stat: 1e-3,
            lr_backbone: 1e-3,
            lr_joint: None,
            patience: 5,
            seed: 0,
            batch_size: 32,
        }
    }
}

impl TrainConfig {
    pub fn lr_joint(&self) -> f64 {
        self.lr_joint.unwrap_or(0.1 * self.lr_backbone)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, lr) in [
            ("trainer.lr_stat", self.lr_stat),
            ("trainer.lr_backbone", self.lr_backbone),
            ("trainer.lr_joint", self.lr_joint()),
        ] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(WdanError::config(field, "must be a nonnegative finite number"));
            }
        }
        if self.batch_size == 0 {
            return Err(WdanError::config("trainer.batch_size", "must be positive"));
        }
        Ok(())
    }

    fn shuffle_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ 0x7472_6169_6e5f_7368)
    }
}

/// Training and validation samples.
#[derive(Debug, Clone, Default)]
pub struct TrainSet {
    pub train: Vec<PreparedSample>,
    pub val: Vec<PreparedSample>,
}

impl TrainSet {
    fn require_nonempty(&self, stage: &str) -> Result<()> {
        if self.train.is_empty() {
            return Err(WdanError::NoData(format!("{stage}: no training windows")));
        }
        if self.val.is_empty() {
            return Err(WdanError::NoData(format!("{stage}: no validation windows")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Statistics prediction loss against the horizon's true statistics.
    Pretrain,
    /// MSE of the de-normalized forecast.
    Forecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub objective: Objective,
    /// One entry per completed epoch.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// `None` when the entry state was never beaten (or no epoch ran).
    pub best_epoch: Option<usize>,
    pub best_val: Option<f64>,
    pub stopped_early: bool,
    pub restored: bool,
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub strategy: Strategy,
    pub variant: String,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub best_val_mse: f64,
    pub best_val_mae: f64,
    pub checkpoints: Vec<String>,
    /// Wall clock is kept out of the serialized report so that reports are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub timing: Vec<StageTiming>,
}

/// Writes best-of-stage snapshots as `{stage}_{epoch}_{metric}.json`.
#[derive(Debug, Clone)]
pub struct Checkpointer {
    pub dir: PathBuf,
    pub norm: NormConfig,
    pub moving_avg_kernel: usize,
}

impl Checkpointer {
    pub fn file_name(stage: &str, epoch: Option<usize>, metric: f64) -> String {
        let epoch = epoch.map_or_else(|| "init".to_string(), |e| e.to_string());
        format!("{stage}_{epoch}_{metric:.6e}.json")
    }

    pub fn save(&self, stage: &str, epoch: Option<usize>, metric: f64, bundle: &ModelBundle) -> Result<String> {
        let name = Self::file_name(stage, epoch, metric);
        let path = self.dir.join(&name);
        std::fs::create_dir_all(&self.dir).map_err(|e| WdanError::io(&self.dir, e))?;
        let json = serde_json::to_string_pretty(&bundle.to_record(&self.norm, self.moving_avg_kernel))?;
        std::fs::write(&path, json).map_err(|e| WdanError::io(&path, e))?;
        Ok(name)
    }
}

/// Per-module optimizer state; `None` means the module is not updated.
struct Optimizers {
    predictor: Option<AdamState>,
    backbone: Option<AdamState>,
}

impl Optimizers {
    fn new(bundle: &ModelBundle, lr_predictor: Option<f64>, lr_backbone: Option<f64>) -> Result<Self> {
        let predictor = match (lr_predictor, &bundle.predictor) {
            (Some(lr), Some(p)) => {
                if p.is_frozen() {
                    return Err(WdanError::ContractViolation(
                        "cannot update a frozen statistics predictor".into(),
                    ));
                }
                Some(AdamState::new(p, AdamConfig { lr, ..AdamConfig::default() }))
            }
            (Some(_), None) => {
                return Err(WdanError::ContractViolation(format!(
                    "variant `{}` has no statistics predictor to train",
                    bundle.variant
                )))
            }
            (None, _) => None,
        };
        let backbone = match lr_backbone {
            Some(lr) => {
                if bundle.backbone.is_frozen() {
                    return Err(WdanError::ContractViolation("cannot update a frozen backbone".into()));
                }
                Some(AdamState::new(&bundle.backbone, AdamConfig { lr, ..AdamConfig::default() }))
            }
            None => None,
        };
        Ok(Optimizers { predictor, backbone })
    }
}

fn sample_loss(bundle: &ModelBundle, s: &PreparedSample, objective: Objective) -> Result<f64> {
    match objective {
        Objective::Pretrain => bundle.pretrain_grads(s).map(|(l, _)| l),
        Objective::Forecast => nn::mse(&bundle.forecast(s)?, &s.target),
    }
}

/// Mean objective over `samples` without updating anything.
pub fn mean_loss(bundle: &ModelBundle, samples: &[PreparedSample], objective: Objective) -> Result<f64> {
    if samples.is_empty() {
        return Err(WdanError::NoData("no samples to evaluate".into()));
    }
    let mut total = 0.0;
    for s in samples {
        total += sample_loss(bundle, s, objective)?;
    }
    Ok(total / samples.len() as f64)
}

fn check_finite(stage: &str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(WdanError::NumericFailure(format!("{stage}: non-finite {what} ({v})")))
    }
}

/// One shuffled pass of minibatch Adam; returns the mean pre-update loss.
fn train_epoch(
    stage: &str,
    bundle: &mut ModelBundle,
    samples: &[PreparedSample],
    objective: Objective,
    opt: &mut Optimizers,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let want_p = opt.predictor.is_some();
    let want_b = opt.backbone.is_some();
    let mut total = 0.0;
    for batch in order.chunks(batch_size) {
        let mut gp: Option<Grads> = None;
        let mut gb: Option<Grads> = None;
        for &i in batch {
            let s = &samples[i];
            let (loss, p, b) = match objective {
                Objective::Pretrain => {
                    let (l, g) = bundle.pretrain_grads(s)?;
                    (l, Some(g), None)
                }
                Objective::Forecast => {
                    let r = bundle.forecast_grads(s, want_b, want_p)?;
                    (r.loss, r.predictor, r.backbone)
                }
            };
            total += loss;
            for (acc, g) in [(&mut gp, p), (&mut gb, b)] {
                if let Some(g) = g {
                    match acc {
                        Some(a) => a.add_scaled(&g, 1.0),
                        None => *acc = Some(g),
                    }
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        if let (Some(state), Some(mut g)) = (opt.predictor.as_mut(), gp) {
            g.scale(scale);
            if !g.is_finite() {
                return Err(WdanError::NumericFailure(format!("{stage}: non-finite predictor gradient")));
            }
            let p = bundle.predictor.as_mut().expect("optimizer implies predictor");
            adam_step(p, &g, state)?;
        }
        if let (Some(state), Some(mut g)) = (opt.backbone.as_mut(), gb) {
            g.scale(scale);
            if !g.is_finite() {
                return Err(WdanError::NumericFailure(format!("{stage}: non-finite backbone gradient")));
            }
            adam_step(&mut bundle.backbone, &g, state)?;
        }
    }
    let mean = total / samples.len() as f64;
    check_finite(stage, "training loss", mean)?;
    let params_ok = bundle.backbone.params_finite()
        && bundle.predictor.as_ref().map_or(true, |p| p.params_finite());
    if !params_ok {
        return Err(WdanError::NumericFailure(format!("{stage}: non-finite parameters")));
    }
    Ok(mean)
}

/// Best-snapshot bookkeeping shared by all stages.
struct BestTracker {
    best: Option<(f64, Option<usize>, ModelBundle)>,
    since_best: usize,
    patience: usize,
}

impl BestTracker {
    fn new(patience: usize) -> Self {
        BestTracker {
            best: None,
            since_best: 0,
            patience,
        }
    }

    fn seed(&mut self, val: f64, bundle: &ModelBundle) {
        self.best = Some((val, None, bundle.clone()));
    }

    /// Returns true when the stage should stop.
    fn observe(&mut self, val: f64, epoch: usize, bundle: &ModelBundle) -> bool {
        let improved = self.best.as_ref().map_or(true, |(b, _, _)| val < *b);
        if improved {
            self.best = Some((val, Some(epoch), bundle.clone()));
            self.since_best = 0;
            false
        } else {
            self.since_best += 1;
            self.patience > 0 && self.since_best >= self.patience
        }
    }

    /// Restores the snapshot; returns (best epoch, best value, restored).
    fn finish(self, bundle: &mut ModelBundle) -> (Option<usize>, Option<f64>, bool) {
        match self.best {
            Some((v, epoch, snap)) => {
                let restored = *bundle != snap;
                if restored {
                    *bundle = snap;
                }
                (epoch, Some(v), restored)
            }
            None => (None, None, false),
        }
    }
}

struct StageSpec<'a> {
    name: &'a str,
    objective: Objective,
    epochs: usize,
    lr_predictor: Option<f64>,
    lr_backbone: Option<f64>,
    /// Count the entry state as a candidate for the best snapshot.
    entry_is_candidate: bool,
}

struct Ctx<'a> {
    cfg: &'a TrainConfig,
    rng: ChaCha8Rng,
    ckpt: Option<&'a Checkpointer>,
    timing: Vec<StageTiming>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a TrainConfig, ckpt: Option<&'a Checkpointer>) -> Self {
        Ctx {
            cfg,
            rng: cfg.shuffle_rng(),
            ckpt,
            timing: Vec::new(),
        }
    }
}

fn run_stage(spec: StageSpec<'_>, bundle: &mut ModelBundle, data: &TrainSet, ctx: &mut Ctx<'_>) -> Result<StageReport> {
    let start = Instant::now();
    data.require_nonempty(spec.name)?;
    let mut opt = Optimizers::new(bundle, spec.lr_predictor, spec.lr_backbone)?;
    let mut tracker = BestTracker::new(ctx.cfg.patience);
    if spec.entry_is_candidate {
        let v = mean_loss(bundle, &data.val, spec.objective)?;
        check_finite(spec.name, "validation loss", v)?;
        tracker.seed(v, bundle);
    }
    let mut report = StageReport {
        stage: spec.name.to_string(),
        objective: spec.objective,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: None,
        best_val: None,
        stopped_early: false,
        restored: false,
        checkpoint: None,
    };
    for epoch in 0..spec.epochs {
        let tl = train_epoch(
            spec.name,
            bundle,
            &data.train,
            spec.objective,
            &mut opt,
            ctx.cfg.batch_size,
            &mut ctx.rng,
        )?;
        let vl = mean_loss(bundle, &data.val, spec.objective)?;
        check_finite(spec.name, "validation loss", vl)?;
        report.train_loss.push(tl);
        report.val_loss.push(vl);
        log::debug!("{} epoch {epoch}: train {tl:.6} val {vl:.6}", spec.name);
        if tracker.observe(vl, epoch, bundle) {
            report.stopped_early = epoch + 1 < spec.epochs;
            break;
        }
    }
    let (best_epoch, best_val, restored) = tracker.finish(bundle);
    report.best_epoch = best_epoch;
    report.best_val = best_val;
    report.restored = restored;
    if let (Some(ck), Some(v)) = (ctx.ckpt, best_val) {
        report.checkpoint = Some(ck.save(spec.name, best_epoch, v, bundle)?);
    }
    ctx.timing.push(StageTiming {
        stage: spec.name.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(report)
}

fn require_predictor(bundle: &ModelBundle, stage: &str) -> Result<()> {
    if bundle.predictor.is_none() {
        return Err(WdanError::ContractViolation(format!(
            "{stage} needs a statistics predictor; variant `{}` has none",
            bundle.variant
        )));
    }
    Ok(())
}

/// Pretrains the statistics predictor on horizon statistics.
pub fn stage1_pretrain(bundle: &mut ModelBundle, data: &TrainSet, cfg: &TrainConfig) -> Result<StageReport> {
    let mut ctx = Ctx::new(cfg, None);
    stage1_with(bundle, data, &mut ctx)
}

fn stage1_with(bundle: &mut ModelBundle, data: &TrainSet, ctx: &mut Ctx<'_>) -> Result<StageReport> {
    require_predictor(bundle, "stage1_pretrain")?;
    let spec = StageSpec {
        name: "stage1_pretrain",
        objective: Objective::Pretrain,
        epochs: ctx.cfg.epochs_per_stage[0],
        lr_predictor: Some(ctx.cfg.lr_stat),
        lr_backbone: None,
        entry_is_candidate: false,
    };
    run_stage(spec, bundle, data, ctx)
}

/// Trains the backbone through the frozen predictor's de-normalization.
pub fn stage2_backbone(bundle: &mut ModelBundle, data: &TrainSet, cfg: &TrainConfig) -> Result<StageReport> {
    let mut ctx = Ctx::new(cfg, None);
    stage2_with(bundle, data, &mut ctx)
}

fn stage2_with(bundle: &mut ModelBundle, data: &TrainSet, ctx: &mut Ctx<'_>) -> Result<StageReport> {
    if let Some(p) = &bundle.predictor {
        if !p.is_frozen() {
            return Err(WdanError::ContractViolation(
                "stage2_backbone requires a frozen statistics predictor".into(),
            ));
        }
    }
    let spec = StageSpec {
        name: "stage2_backbone",
        objective: Objective::Forecast,
        epochs: ctx.cfg.epochs_per_stage[1],
        lr_predictor: None,
        lr_backbone: Some(ctx.cfg.lr_backbone),
        entry_is_candidate: false,
    };
    run_stage(spec, bundle, data, ctx)
}

/// Fine-tunes both modules at `lr_joint`. The entry state competes for the
/// best snapshot, so validation never ends worse than it started.
pub fn stage3_joint(bundle: &mut ModelBundle, data: &TrainSet, cfg: &TrainConfig) -> Result<StageReport> {
    let mut ctx = Ctx::new(cfg, None);
    stage3_with(bundle, data, &mut ctx)
}

fn stage3_with(bundle: &mut ModelBundle, data: &TrainSet, ctx: &mut Ctx<'_>) -> Result<StageReport> {
    require_predictor(bundle, "stage3_joint")?;
    let lr = ctx.cfg.lr_joint();
    let spec = StageSpec {
        name: "stage3_joint",
        objective: Objective::Forecast,
        epochs: ctx.cfg.epochs_per_stage[2],
        lr_predictor: Some(lr),
        lr_backbone: Some(lr),
        entry_is_candidate: true,
    };
    run_stage(spec, bundle, data, ctx)
}

fn set_predictor_frozen(bundle: &mut ModelBundle, frozen: bool) {
    if let Some(p) = bundle.predictor.as_mut() {
        if frozen {
            p.freeze()
        } else {
            p.unfreeze()
        }
    }
}

/// Alternates statistics epochs and backbone epochs (predictor frozen while
/// the backbone trains); model selection uses forecast validation MSE after
/// every round.
fn two_stage_alt(bundle: &mut ModelBundle, data: &TrainSet, ctx: &mut Ctx<'_>) -> Result<Vec<StageReport>> {
    let start = Instant::now();
    data.require_nonempty("two_stage_alt")?;
    require_predictor(bundle, "two_stage_alt")?;
    let [e_stat, e_bb, _] = ctx.cfg.epochs_per_stage;
    set_predictor_frozen(bundle, false);
    let mut opt_stat = Optimizers::new(bundle, Some(ctx.cfg.lr_stat), None)?;
    let mut opt_bb = Optimizers::new(bundle, None, Some(ctx.cfg.lr_backbone))?;
    let mut stat = StageReport {
        stage: "alt_stat".into(),
        objective: Objective::Pretrain,
        train_loss: vec![],
        val_loss: vec![],
        best_epoch: None,
        best_val: None,
        stopped_early: false,
        restored: false,
        checkpoint: None,
    };
    let mut bb = StageReport {
        stage: "alt_backbone".into(),
        objective: Objective::Forecast,
        ..stat.clone()
    };
    let mut tracker = BestTracker::new(ctx.cfg.patience);
    let rounds = e_stat.max(e_bb);
    for round in 0..rounds {
        if round < e_stat {
            set_predictor_frozen(bundle, false);
            let tl = train_epoch("alt_stat", bundle, &data.train, Objective::Pretrain, &mut opt_stat, ctx.cfg.batch_size, &mut ctx.rng)?;
            let vl = mean_loss(bundle, &data.val, Objective::Pretrain)?;
            check_finite("alt_stat", "validation loss", vl)?;
            stat.train_loss.push(tl);
            stat.val_loss.push(vl);
        }
        set_predictor_frozen(bundle, true);
        let val = if round < e_bb {
            let tl = train_epoch("alt_backbone", bundle, &data.train, Objective::Forecast, &mut opt_bb, ctx.cfg.batch_size, &mut ctx.rng)?;
            let vl = mean_loss(bundle, &data.val, Objective::Forecast)?;
            bb.train_loss.push(tl);
            bb.val_loss.push(vl);
            vl
        } else {
            mean_loss(bundle, &data.val, Objective::Forecast)?
        };
        check_finite("two_stage_alt", "validation loss", val)?;
        if tracker.observe(val, round, bundle) {
            let stopped = round + 1 < rounds;
            stat.stopped_early = stopped;
            bb.stopped_early = stopped;
            break;
        }
    }
    let (best_round, best_val, restored) = tracker.finish(bundle);
    set_predictor_frozen(bundle, false);
    bb.best_epoch = best_round;
    bb.best_val = best_val;
    bb.restored = restored;
    stat.restored = restored;
    if let Some(r) = best_round.filter(|r| *r < e_stat) {
        stat.best_epoch = Some(r);
        stat.best_val = stat.val_loss.get(r).copied();
    }
    if let (Some(ck), Some(v)) = (ctx.ckpt, best_val) {
        bb.checkpoint = Some(ck.save("alt_backbone", best_round, v, bundle)?);
    }
    ctx.timing.push(StageTiming {
        stage: "two_stage_alt".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(vec![stat, bb])
}

/// Runs the configured strategy and reports curves plus final validation
/// metrics. Variants without a statistics predictor train only the backbone,
/// for the backbone and joint epoch budgets combined.
pub fn run_strategy(
    bundle: &mut ModelBundle,
    data: &TrainSet,
    cfg: &TrainConfig,
    ckpt: Option<&Checkpointer>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut ctx = Ctx::new(cfg, ckpt);
    let [_, e_bb, e_joint] = cfg.epochs_per_stage;
    let stages = if bundle.predictor.is_none() {
        let spec = StageSpec {
            name: "backbone",
            objective: Objective::Forecast,
            epochs: e_bb + e_joint,
            lr_predictor: None,
            lr_backbone: Some(cfg.lr_backbone),
            entry_is_candidate: false,
        };
        vec![run_stage(spec, bundle, data, &mut ctx)?]
    } else {
        match cfg.strategy {
            Strategy::ThreeStage => {
                set_predictor_frozen(bundle, false);
                let s1 = stage1_with(bundle, data, &mut ctx)?;
                set_predictor_frozen(bundle, true);
                let s2 = stage2_with(bundle, data, &mut ctx)?;
                set_predictor_frozen(bundle, false);
                let s3 = stage3_with(bundle, data, &mut ctx)?;
                vec![s1, s2, s3]
            }
            Strategy::TwoStageAlt => two_stage_alt(bundle, data, &mut ctx)?,
            Strategy::TwoStageCotrain | Strategy::SingleStage => {
                set_predictor_frozen(bundle, false);
                let mut out = Vec::new();
                let name = if cfg.strategy == Strategy::TwoStageCotrain {
                    out.push(stage1_with(bundle, data, &mut ctx)?);
                    "cotrain_joint"
                } else {
                    "single_joint"
                };
                let spec = StageSpec {
                    name,
                    objective: Objective::Forecast,
                    epochs: e_bb,
                    lr_predictor: Some(cfg.lr_stat),
                    lr_backbone: Some(cfg.lr_backbone),
                    entry_is_candidate: false,
                };
                out.push(run_stage(spec, bundle, data, &mut ctx)?);
                out
            }
        }
    };
    data.require_nonempty("final validation")?;
    let (mse, mae) = forecast_metrics(bundle, &data.val)?;
    Ok(TrainReport {
        strategy: cfg.strategy,
        variant: bundle.variant.label().to_string(),
        seed: cfg.seed,
        checkpoints: stages.iter().filter_map(|s| s.checkpoint.clone()).collect(),
        stages,
        best_val_mse: mse,
        best_val_mae: mae,
        timing: ctx.timing,
    })
}

/// Forecast MSE and MAE averaged over all samples.
pub fn forecast_metrics(bundle: &ModelBundle, samples: &[PreparedSample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(WdanError::NoData("no windows to evaluate".into()));
    }
    let (mut se, mut ae) = (0.0, 0.0);
    for s in samples {
        let y = bundle.forecast(s)?;
        se += nn::mse(&y, &s.target)?;
        ae += nn::mae(&y, &s.target)?;
    }
    let n = samples.len() as f64;
    Ok((se / n, ae / n))
}
