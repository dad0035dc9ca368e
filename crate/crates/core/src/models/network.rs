use rand::seq::SliceRandom;

use super::{normalize_pair, EpochLog, ModelKind, ModelParams, ModelSpec, TrainedModel, TrainingLog};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::masking::{apply_random_mask, remask, MaskedSample};
use crate::nn::{backward, optimizer_step, AdamState, Forward, NetworkParams, Objective};
use crate::rng::{derive_seed, rng_from_seed, tag};

struct Phase {
    id: u8,
    objective: Objective,
    epochs: usize,
    /// Keep the epoch with the best masked validation AUC.
    select: bool,
}

/// DFCN: joint classification and reconstruction on the wide architecture.
pub fn train_dfcn(spec: &ModelSpec, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    expect_kind(spec, &[ModelKind::Dfcn])?;
    joint(spec, spec.lambda, train, val)
}

/// FCN: the DFCN procedure with the reconstruction weight forced to zero.
pub fn train_fcn(spec: &ModelSpec, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    expect_kind(spec, &[ModelKind::Fcn])?;
    joint(spec, 0.0, train, val)
}

/// SDAE: the DFCN procedure on a bottlenecked architecture.
pub fn train_sdae(spec: &ModelSpec, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    expect_kind(spec, &[ModelKind::Sdae])?;
    joint(spec, spec.lambda, train, val)
}

/// DAE: reconstruction-only pre-training of the encoder-decoder pair, then
/// classifier training on the frozen encoder.
pub fn train_dae(spec: &ModelSpec, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    expect_kind(spec, &[ModelKind::Dae])?;
    let phases = [
        Phase {
            id: 1,
            objective: Objective::reconstruction_only(spec.training.eligible),
            epochs: spec.training.pretrain_epochs.unwrap_or(spec.training.epochs),
            select: false,
        },
        Phase {
            id: 2,
            objective: Objective::classification_frozen_encoder(),
            epochs: spec.training.epochs,
            select: true,
        },
    ];
    run(spec, &phases, train, val)
}

fn joint(spec: &ModelSpec, lambda: f64, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    let phase = Phase {
        id: 0,
        objective: Objective::joint(lambda, spec.training.eligible),
        epochs: spec.training.epochs,
        select: true,
    };
    run(spec, &[phase], train, val)
}

fn expect_kind(spec: &ModelSpec, kinds: &[ModelKind]) -> Result<()> {
    if !kinds.contains(&spec.kind) {
        return Err(Error::InvalidConfig(format!("spec of kind {} passed to the {} trainer", spec.kind, kinds[0])));
    }
    spec.validate()
}

fn run(spec: &ModelSpec, phases: &[Phase], train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    let (normalizer, train, val) = normalize_pair(train, val)?;
    if spec.architecture.input_dim != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.architecture.input_dim,
            got: train.dim(),
        });
    }
    let mut params = NetworkParams::init(&spec.architecture, derive_seed(spec.seed, &[tag("init")]));
    let val_set = masked_validation(spec, &val)?;
    let mut log = TrainingLog::default();
    for phase in phases {
        run_phase(spec, phase, &mut params, &train, &val_set, &mut log)?;
    }
    Ok(TrainedModel {
        spec: spec.clone(),
        normalizer,
        params: ModelParams::Network(params),
        log,
    })
}

/// IMP-masked copies of the validation set, drawn once per model.
fn masked_validation(spec: &ModelSpec, val: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let replicas = if spec.imp == 0.0 { 1 } else { spec.training.val_mask_replicas.max(1) };
    let mut rng = rng_from_seed(derive_seed(spec.seed, &[tag("val-mask")]));
    let mut inputs = Vec::with_capacity(replicas * val.len());
    let mut labels = Vec::with_capacity(replicas * val.len());
    for _ in 0..replicas {
        for r in &val.records {
            inputs.push(apply_random_mask(r, spec.imp, &mut rng).values);
            labels.push(r.label);
        }
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass {
            positives: pos,
            negatives: labels.len() - pos,
            required: 1,
        }
        .context("validation set"));
    }
    Ok((inputs, labels))
}

fn validation_auc(params: &NetworkParams, val: &(Vec<Vec<f64>>, Vec<u8>), fwd: &mut Forward) -> Result<f64> {
    let scores = val
        .0
        .iter()
        .map(|x| params.predict_input(x, fwd))
        .collect::<Result<Vec<f64>>>()?;
    Ok(roc_auc(&scores, &val.1)?.auc)
}

fn trunk_checksum(params: &NetworkParams) -> u64 {
    let t = params.tensors();
    let n = params.encoder_tensor_count() + 2 * params.classifier.len();
    NetworkParams::checksum_of(&t[..n])
}

fn run_phase(
    spec: &ModelSpec,
    phase: &Phase,
    params: &mut NetworkParams,
    train: &Dataset,
    val: &(Vec<Vec<f64>>, Vec<u8>),
    log: &mut TrainingLog,
) -> Result<()> {
    let cfg = &spec.training;
    let objective = &phase.objective;
    let mut rng = rng_from_seed(derive_seed(spec.seed, &[tag("train"), phase.id as u64]));
    let mut state = AdamState::new(params);
    let mut grads = params.zeros_like();
    let mut fwd = Forward::for_network(params);
    let with_decoder = params.has_decoder() && objective.lambda != 0.0;
    let mut sample = MaskedSample::unmasked(&train.records[0]);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, usize, NetworkParams)> = None;
    let mut step = 0usize;

    for epoch in 0..phase.epochs {
        order.shuffle(&mut rng);
        let (mut cls, mut rec, mut obj) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            grads.fill(0.0);
            for &i in batch {
                let record = &train.records[i];
                remask(&mut sample, record, spec.imp, &mut rng);
                params.forward_into(&sample.values, &mut fwd, with_decoder)?;
                let lb = objective.breakdown(&fwd, &sample);
                let value = objective.value(&lb);
                if !value.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, step });
                }
                cls += lb.classification;
                rec += lb.reconstruction;
                obj += value;
                backward(params, &fwd, &sample, objective, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            optimizer_step(params, &grads, &mut state, &cfg.adam);
            step += 1;
        }
        let n = train.len() as f64;
        let val_auc = if phase.select { Some(validation_auc(params, val, &mut fwd)?) } else { None };
        if let Some(auc) = val_auc {
            if best.as_ref().is_none_or(|(b, _, _)| auc > *b) {
                best = Some((auc, epoch, params.clone()));
            }
        }
        log.epochs.push(EpochLog {
            phase: phase.id,
            epoch,
            classification: cls / n,
            reconstruction: rec / n,
            objective: obj / n,
            val_auc,
            trunk_checksum: trunk_checksum(params),
        });
    }
    if phase.select {
        match best {
            Some((auc, epoch, p)) => {
                *params = p;
                log.selected_epoch = Some(epoch);
                log.val_auc = Some(auc);
            }
            None => {
                log.selected_epoch = None;
                log.val_auc = Some(validation_auc(params, val, &mut fwd)?);
            }
        }
    }
    Ok(())
}
