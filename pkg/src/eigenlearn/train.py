"""Pre-training and fine-tuning loops.

Pre-training drives the encoder + eigenvector head against the combined
spectral objective per graph with gradient accumulation; fine-tuning swaps in
a downstream scalar-regression head over the same concatenated-padded node
embeddings. Runs are deterministic per seed, including across a checkpoint
save/load boundary (the run generator state travels with the checkpoint).
"""

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data import atomic_write_text
from .eigen import eigendecompose, lowest_k
from .errors import (EmptyDatasetAfterFilter, InvalidParams, IsolatedNode,
                     MissingTarget, NumericalFault, RankDeficient)
from .graphs import LAPLACIAN_NORMS, Graph, build_laplacian
from .losses import LossWeights, eigvec_loss, energy_loss, ortho_loss
from .nn import (GRAPH_LEVEL, HEAD_KINDS, EigenModel, GinEncoder, GraphLevelHead,
                 Mlp, NodeWiseHead, abs_cos_mae_loss_t, combined_loss_t,
                 mae_loss_t, orthonormalize)
from .optim import Adam, ReduceLROnPlateau
from .wavelets import FeatureConfig, augment_features

log = logging.getLogger("eigenlearn.train")

CHECKPOINT_FORMAT = "eigenlearn-checkpoint"
CHECKPOINT_VERSION = 1

ARM_OURS = "eigvec_ours"
ARM_BASELINE = "abs_cos_mae"
ARM_RANDOM = "random_orthogonal"
COMPARISON_ARMS = (ARM_OURS, ARM_BASELINE, ARM_RANDOM)


@dataclass(frozen=True)
class SchedulerConfig:
    kind: str = "reduce_on_plateau"  # or "none"
    patience: int = 5
    factor: float = 0.9
    monitored: str = "train_loss"  # or "val_loss"

    def __post_init__(self):
        if self.kind not in ("none", "reduce_on_plateau"):
            raise InvalidParams(f"unknown scheduler kind {self.kind!r}")
        if self.monitored not in ("train_loss", "val_loss"):
            raise InvalidParams(f"unknown monitored metric {self.monitored!r}")
        if self.kind == "reduce_on_plateau" and not 0.0 < self.factor < 1.0:
            raise InvalidParams("plateau factor must be in (0,1)")


@dataclass(frozen=True)
class PretrainConfig:
    """Every knob of the pre-training run; defaults are the desk-scale
    rendition of the reference hyperparameter table."""

    k: int = 6
    epochs: int = 200
    batch_size: int = 128
    lr: float = 0.001
    loss_weights: LossWeights = LossWeights()
    laplacian_norm: str = "unnormalized"
    head_kind: str = GRAPH_LEVEL
    max_nodes: int = 40
    scheduler: SchedulerConfig = SchedulerConfig()
    seed: int = 0
    feature_config: FeatureConfig = FeatureConfig()
    hidden_dim: int = 60
    mp_layers: int = 4
    update_layers: int = 3
    head_layers: int = 5
    head_hidden_dim: int = 2400
    dropout: float = 0.1
    finetune_epochs: int = 500
    keep_pretrain_head: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParams("k must be >= 1")
        if self.laplacian_norm not in LAPLACIAN_NORMS:
            raise InvalidParams(f"unknown laplacian_norm {self.laplacian_norm!r}")
        if self.head_kind not in HEAD_KINDS:
            raise InvalidParams(f"unknown head_kind {self.head_kind!r}")


def config_to_dict(cfg: PretrainConfig) -> dict:
    return {
        "k": cfg.k,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr": cfg.lr,
        "loss_weights": {
            "alpha_energy": cfg.loss_weights.alpha_energy,
            "beta_eigvec": cfg.loss_weights.beta_eigvec,
            "gamma_ortho": cfg.loss_weights.gamma_ortho,
        },
        "laplacian_norm": cfg.laplacian_norm,
        "head_kind": cfg.head_kind,
        "max_nodes": cfg.max_nodes,
        "scheduler": {
            "kind": cfg.scheduler.kind,
            "patience": cfg.scheduler.patience,
            "factor": cfg.scheduler.factor,
            "monitored": cfg.scheduler.monitored,
        },
        "seed": cfg.seed,
        "feature_config": {
            "use_wavelet_positional": cfg.feature_config.use_wavelet_positional,
            "use_diffused_dirac": cfg.feature_config.use_diffused_dirac,
            "scales_J": cfg.feature_config.scales_J,
            "dirac_seed": cfg.feature_config.dirac_seed,
            "keep_original_features": cfg.feature_config.keep_original_features,
        },
        "hidden_dim": cfg.hidden_dim,
        "mp_layers": cfg.mp_layers,
        "update_layers": cfg.update_layers,
        "head_layers": cfg.head_layers,
        "head_hidden_dim": cfg.head_hidden_dim,
        "dropout": cfg.dropout,
        "finetune_epochs": cfg.finetune_epochs,
        "keep_pretrain_head": cfg.keep_pretrain_head,
    }


def _take(src: dict, keys) -> dict:
    unknown = set(src) - set(keys)
    if unknown:
        raise InvalidParams(f"unknown config fields: {sorted(unknown)}")
    return {k: src[k] for k in keys if k in src}


def config_from_dict(d: dict) -> PretrainConfig:
    """Build a config from a plain dict; unspecified fields take defaults,
    unknown fields are rejected."""
    d = dict(d)
    kwargs = _take(d, [
        "k", "epochs", "batch_size", "lr", "loss_weights", "laplacian_norm",
        "head_kind", "max_nodes", "scheduler", "seed", "feature_config",
        "hidden_dim", "mp_layers", "update_layers", "head_layers",
        "head_hidden_dim", "dropout", "finetune_epochs", "keep_pretrain_head",
    ])
    if "loss_weights" in kwargs:
        kwargs["loss_weights"] = LossWeights(**_take(
            kwargs["loss_weights"],
            ["alpha_energy", "beta_eigvec", "gamma_ortho"]))
    if "scheduler" in kwargs:
        kwargs["scheduler"] = SchedulerConfig(**_take(
            kwargs["scheduler"],
            ["kind", "patience", "factor", "monitored"]))
    if "feature_config" in kwargs:
        kwargs["feature_config"] = FeatureConfig(**_take(
            kwargs["feature_config"],
            ["use_wavelet_positional", "use_diffused_dirac", "scales_J",
             "dirac_seed", "keep_original_features"]))
    return PretrainConfig(**kwargs)


@dataclass
class TrainingExample:
    """A graph with everything pre-training needs attached."""

    graph: Graph
    features: np.ndarray
    laplacian: np.ndarray
    lambda_k: np.ndarray
    psi_k: np.ndarray


@dataclass
class EpochRow:
    epoch: int
    loss_total: float
    loss_energy: float
    loss_eigvec: float
    ortho_residual: float
    lr: float
    seconds: float


RUN_RECORD_HEADER = "epoch,loss_total,loss_energy,loss_eigvec,ortho_residual,lr,seconds"


@dataclass
class RunRecord:
    rows: list[EpochRow] = field(default_factory=list)
    skipped_batches: int = 0

    def to_csv(self, include_timing: bool = True) -> str:
        lines = [RUN_RECORD_HEADER]
        for r in self.rows:
            seconds = r.seconds if include_timing else 0.0
            lines.append(f"{r.epoch},{r.loss_total!r},{r.loss_energy!r},"
                         f"{r.loss_eigvec!r},{r.ortho_residual!r},{r.lr!r},{seconds!r}")
        return "\n".join(lines) + "\n"

    def deterministic_key(self) -> list[tuple]:
        """Row tuples with the wall-clock column dropped (the one
        nondeterministic field); used for run-equality comparisons."""
        return [(r.epoch, r.loss_total, r.loss_energy, r.loss_eigvec,
                 r.ortho_residual, r.lr) for r in self.rows]


def precompute_targets(graphs: list[Graph], cfg: PretrainConfig) -> list[TrainingExample]:
    """Attach augmented features, the Laplacian, and the lowest-k spectrum to
    every usable graph; drop (and count) graphs violating the preconditions
    (n < k, n > max_nodes, isolated nodes)."""
    examples = []
    dropped = 0
    for g in graphs:
        if g.num_nodes < cfg.k or g.num_nodes > cfg.max_nodes:
            dropped += 1
            continue
        try:
            features = augment_features(g, cfg.feature_config)
        except IsolatedNode:
            dropped += 1
            continue
        laplacian = build_laplacian(g, cfg.laplacian_norm)
        spectrum = eigendecompose(laplacian)
        lambda_k, psi_k = lowest_k(spectrum, cfg.k)
        examples.append(TrainingExample(g, features, laplacian, lambda_k, psi_k))
    if dropped:
        log.info("dropped %d of %d graphs during target precomputation",
                 dropped, len(graphs))
    if not examples:
        raise EmptyDatasetAfterFilter(
            f"no graph survived filtering (k={cfg.k}, max_nodes={cfg.max_nodes})")
    return examples


def feature_dim(examples: list[TrainingExample]) -> int:
    dims = {ex.features.shape[1] for ex in examples}
    if len(dims) != 1:
        raise InvalidParams(f"inconsistent feature dims across dataset: {sorted(dims)}")
    return dims.pop()


def build_model(cfg: PretrainConfig, d_in: int) -> EigenModel:
    rng = np.random.default_rng([cfg.seed, 0])
    encoder = GinEncoder(d_in, cfg.hidden_dim, cfg.mp_layers, cfg.update_layers,
                         cfg.dropout, rng)
    if cfg.head_kind == GRAPH_LEVEL:
        head = GraphLevelHead(cfg.max_nodes, cfg.hidden_dim, cfg.k,
                              cfg.head_hidden_dim, cfg.head_layers, cfg.dropout, rng)
    else:
        head = NodeWiseHead(cfg.hidden_dim, cfg.k, cfg.head_hidden_dim,
                            cfg.head_layers, cfg.dropout, rng)
    return EigenModel(encoder, head, cfg.head_kind)


def build_downstream_head(cfg: PretrainConfig, d_in: int | None = None) -> Mlp:
    """Scalar-regression head over the concatenated-padded node embeddings."""
    rng = np.random.default_rng([cfg.seed, 3])
    input_dim = d_in if d_in is not None else cfg.max_nodes * cfg.hidden_dim
    dims = [input_dim] + [cfg.head_hidden_dim] * (cfg.head_layers - 1) + [1]
    return Mlp(dims, cfg.dropout, rng)


@dataclass
class TrainState:
    """Everything that must survive a checkpoint to resume bit-for-bit."""

    optimizer: Adam
    scheduler: ReduceLROnPlateau | None
    rng: np.random.Generator
    epoch: int = 0
    skipped_batches: int = 0


def _fresh_state(params: dict, cfg: PretrainConfig, rng_stream: int) -> TrainState:
    optimizer = Adam(params, lr=cfg.lr)
    scheduler = None
    if cfg.scheduler.kind == "reduce_on_plateau":
        scheduler = ReduceLROnPlateau(optimizer, cfg.scheduler.patience,
                                      cfg.scheduler.factor)
    return TrainState(optimizer, scheduler, np.random.default_rng([cfg.seed, rng_stream]))


def _ortho_residual(u_hat: np.ndarray) -> float:
    k = u_hat.shape[1]
    return float(np.linalg.norm(u_hat.T @ u_hat - np.eye(k)))


def pretrain(examples: list[TrainingExample], model: EigenModel, cfg: PretrainConfig,
             state: TrainState | None = None) -> tuple[RunRecord, TrainState]:
    """Run the eigenvector-learning loop from state.epoch up to cfg.epochs.

    Per graph: encoder -> head -> forced orthogonality -> combined loss;
    gradients accumulate across graphs and an Adam step fires every
    `batch_size` successful passes. A numerical fault or a rank-deficient
    orthogonalization aborts the current batch (its gradients are discarded)
    and is counted, never clamped.
    """
    if state is None:
        state = _fresh_state(model.parameters(), cfg, rng_stream=1)
    record = RunRecord()
    for epoch in range(state.epoch, cfg.epochs):
        started = time.perf_counter()
        order = state.rng.permutation(len(examples))
        sums = np.zeros(4)
        evaluated = 0
        in_batch = 0
        for idx in order:
            ex = examples[idx]
            try:
                u_tilde = model.forward(ex.graph, ad.constant(ex.features),
                                        training=True, rng=state.rng)
                u_hat = orthonormalize(u_tilde)
                loss = combined_loss_t(u_hat, ex.laplacian, ex.lambda_k, cfg.loss_weights)
                loss.backward()
            except (NumericalFault, RankDeficient) as exc:
                state.optimizer.zero_grad()
                in_batch = 0
                state.skipped_batches += 1
                log.warning("skipped batch at epoch %d: %s", epoch, exc)
                continue
            values = u_hat.values
            sums += (loss.item(),
                     energy_loss(values, ex.laplacian),
                     eigvec_loss(values, ex.laplacian, ex.lambda_k),
                     _ortho_residual(values))
            evaluated += 1
            in_batch += 1
            if in_batch == cfg.batch_size:
                state.optimizer.step(grad_scale=1.0 / in_batch)
                state.optimizer.zero_grad()
                in_batch = 0
        if in_batch:
            state.optimizer.step(grad_scale=1.0 / in_batch)
            state.optimizer.zero_grad()
        means = sums / max(evaluated, 1)
        if state.scheduler is not None:
            monitored = means[0]
            if cfg.scheduler.monitored == "val_loss":
                monitored = evaluate_pretrain_loss(model, examples, cfg)
            state.scheduler.step(float(monitored))
        state.epoch = epoch + 1
        record.rows.append(EpochRow(epoch, float(means[0]), float(means[1]),
                                    float(means[2]), float(means[3]),
                                    state.optimizer.lr,
                                    time.perf_counter() - started))
    record.skipped_batches = state.skipped_batches
    return record, state


def evaluate_pretrain_loss(model: EigenModel, examples: list[TrainingExample],
                           cfg: PretrainConfig) -> float:
    """Evaluation-mode (dropout-free) mean combined loss over a dataset."""
    total = 0.0
    for ex in examples:
        u_hat = model.predict(ex.graph, ex.features)
        total += (cfg.loss_weights.alpha_energy * energy_loss(u_hat, ex.laplacian)
                  + cfg.loss_weights.beta_eigvec * eigvec_loss(u_hat, ex.laplacian, ex.lambda_k))
        if cfg.loss_weights.gamma_ortho:
            total += cfg.loss_weights.gamma_ortho * ortho_loss(u_hat)
    return total / len(examples)


def _downstream_forward(model: EigenModel, head: Mlp, ex: TrainingExample,
                        cfg: PretrainConfig, training: bool,
                        rng: np.random.Generator | None):
    z = model.encoder.forward(ex.graph, ad.constant(ex.features), training, rng)
    padded = ad.zero_pad_rows(z, cfg.max_nodes)
    flat = ad.reshape(padded, (1, cfg.max_nodes * cfg.hidden_dim))
    return head.forward(flat, training, rng)


def predict_target(model: EigenModel, head: Mlp, ex: TrainingExample,
                   cfg: PretrainConfig) -> float:
    return float(_downstream_forward(model, head, ex, cfg, False, None).values[0, 0])


def evaluate_mae(model: EigenModel, head: Mlp, examples: list[TrainingExample],
                 cfg: PretrainConfig, target_name: str) -> float:
    errors = [abs(predict_target(model, head, ex, cfg) - ex.graph.graph_targets[target_name])
              for ex in examples]
    return float(np.mean(errors))


def finetune(examples: list[TrainingExample], model: EigenModel, head: Mlp,
             cfg: PretrainConfig, target_name: str, epochs: int | None = None,
             val_examples: list[TrainingExample] | None = None,
             state: TrainState | None = None) -> tuple[RunRecord, TrainState]:
    """Mean-absolute-error regression of a named scalar graph target.

    The downstream head replaces the eigenvector head (both encoder and head
    weights update); with cfg.keep_pretrain_head the spectral objective keeps
    training alongside the regression loss through the retained head.
    """
    epochs = cfg.finetune_epochs if epochs is None else epochs
    for ex in examples + (val_examples or []):
        if target_name not in ex.graph.graph_targets:
            raise MissingTarget(target_name)
    params = {f"encoder.{n}": p for n, p in model.encoder.parameters().items()}
    params.update({f"downstream.{n}": p for n, p in head.parameters().items()})
    if cfg.keep_pretrain_head:
        params.update({f"head.{n}": p for n, p in model.head.parameters().items()})
    if state is None:
        state = _fresh_state(params, cfg, rng_stream=4)
    record = RunRecord()
    for epoch in range(state.epoch, epochs):
        started = time.perf_counter()
        order = state.rng.permutation(len(examples))
        total = 0.0
        evaluated = 0
        in_batch = 0
        for idx in order:
            ex = examples[idx]
            target = ex.graph.graph_targets[target_name]
            try:
                pred = _downstream_forward(model, head, ex, cfg, True, state.rng)
                loss = mae_loss_t(pred, np.array([[target]]))
                if cfg.keep_pretrain_head:
                    u_hat = orthonormalize(model.head.forward(
                        model.encoder.forward(ex.graph, ad.constant(ex.features),
                                              True, state.rng), True, state.rng))
                    loss = ad.add(loss, combined_loss_t(u_hat, ex.laplacian,
                                                        ex.lambda_k, cfg.loss_weights))
                loss.backward()
            except (NumericalFault, RankDeficient) as exc:
                state.optimizer.zero_grad()
                in_batch = 0
                state.skipped_batches += 1
                log.warning("skipped batch at epoch %d: %s", epoch, exc)
                continue
            total += loss.item()
            evaluated += 1
            in_batch += 1
            if in_batch == cfg.batch_size:
                state.optimizer.step(grad_scale=1.0 / in_batch)
                state.optimizer.zero_grad()
                in_batch = 0
        if in_batch:
            state.optimizer.step(grad_scale=1.0 / in_batch)
            state.optimizer.zero_grad()
        mean_loss = total / max(evaluated, 1)
        if state.scheduler is not None:
            monitored = mean_loss
            if cfg.scheduler.monitored == "val_loss" and val_examples:
                monitored = evaluate_mae(model, head, val_examples, cfg, target_name)
            state.scheduler.step(float(monitored))
        state.epoch = epoch + 1
        record.rows.append(EpochRow(epoch, float(mean_loss), 0.0, 0.0, 0.0,
                                    state.optimizer.lr,
                                    time.perf_counter() - started))
    record.skipped_batches = state.skipped_batches
    return record, state


# --- loss-comparison harness ------------------------------------------------


@dataclass
class ComparisonRow:
    arm: str
    epoch: int
    loss_eigvec: float
    loss_energy: float


COMPARISON_HEADER = "arm,epoch,loss_eigvec,loss_energy"


def comparison_to_csv(rows: list[ComparisonRow]) -> str:
    lines = [COMPARISON_HEADER]
    for r in rows:
        lines.append(f"{r.arm},{r.epoch},{r.loss_eigvec!r},{r.loss_energy!r}")
    return "\n".join(lines) + "\n"


def _evaluate_outputs(outputs: list[np.ndarray], examples: list[TrainingExample]) -> tuple[float, float]:
    """Single metric path for every comparison arm: mean eigvec and energy
    losses of orthonormal outputs against each graph's own targets."""
    ev = np.mean([eigvec_loss(u, ex.laplacian, ex.lambda_k)
                  for u, ex in zip(outputs, examples)])
    en = np.mean([energy_loss(u, ex.laplacian) for u, ex in zip(outputs, examples)])
    return float(ev), float(en)


def _random_orthonormal(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.where(np.diag(r) >= 0, 1.0, -1.0)[None, :]


def compare_losses(examples: list[TrainingExample], cfg: PretrainConfig,
                   arms: tuple[str, ...] = COMPARISON_ARMS) -> dict[str, list[ComparisonRow]]:
    """Train one identical architecture per arm (the no-training arm emits
    seeded random orthonormal outputs) and report per-epoch eigvec/energy
    losses from one shared evaluation pass."""
    unknown = set(arms) - set(COMPARISON_ARMS)
    if unknown:
        raise InvalidParams(f"unknown arms: {sorted(unknown)}")
    d_in = feature_dim(examples)
    results: dict[str, list[ComparisonRow]] = {}
    for arm in arms:
        rows: list[ComparisonRow] = []
        if arm == ARM_RANDOM:
            outputs = [_random_orthonormal(ex.graph.num_nodes, cfg.k,
                                           np.random.default_rng([cfg.seed, 2, i]))
                       for i, ex in enumerate(examples)]
            ev, en = _evaluate_outputs(outputs, examples)
            for epoch in range(cfg.epochs):
                rows.append(ComparisonRow(arm, epoch, ev, en))
            results[arm] = rows
            continue
        model = build_model(cfg, d_in)
        state = _fresh_state(model.parameters(), cfg, rng_stream=1)
        for epoch in range(cfg.epochs):
            _train_comparison_epoch(model, examples, cfg, state, arm)
            outputs = [model.predict(ex.graph, ex.features) for ex in examples]
            ev, en = _evaluate_outputs(outputs, examples)
            rows.append(ComparisonRow(arm, epoch, ev, en))
        results[arm] = rows
    return results


def _train_comparison_epoch(model: EigenModel, examples: list[TrainingExample],
                            cfg: PretrainConfig, state: TrainState, arm: str) -> None:
    order = state.rng.permutation(len(examples))
    in_batch = 0
    for idx in order:
        ex = examples[idx]
        try:
            u_tilde = model.forward(ex.graph, ad.constant(ex.features),
                                    training=True, rng=state.rng)
            u_hat = orthonormalize(u_tilde)
            if arm == ARM_OURS:
                loss = combined_loss_t(u_hat, ex.laplacian, ex.lambda_k, cfg.loss_weights)
            else:
                loss = abs_cos_mae_loss_t(u_hat, ex.psi_k)
            loss.backward()
        except (NumericalFault, RankDeficient):
            state.optimizer.zero_grad()
            in_batch = 0
            state.skipped_batches += 1
            continue
        in_batch += 1
        if in_batch == cfg.batch_size:
            state.optimizer.step(grad_scale=1.0 / in_batch)
            state.optimizer.zero_grad()
            in_batch = 0
    if in_batch:
        state.optimizer.step(grad_scale=1.0 / in_batch)
        state.optimizer.zero_grad()


# --- checkpointing -----------------------------------------------------------


def _params_to_jsonable(params: dict) -> dict:
    return {name: {"shape": list(p.values.shape), "values": p.values.ravel().tolist()}
            for name, p in params.items()}


def _load_params(params: dict, blob: dict) -> None:
    missing = set(params) - set(blob)
    extra = set(blob) - set(params)
    if missing or extra:
        raise InvalidParams(f"checkpoint parameter mismatch: missing={sorted(missing)} "
                            f"extra={sorted(extra)}")
    for name, p in params.items():
        entry = blob[name]
        p.values = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])


def save_checkpoint(path: str, model: EigenModel, cfg: PretrainConfig,
                    state: TrainState, d_in: int, kind: str = "pretrain",
                    downstream_head: Mlp | None = None,
                    extra: dict | None = None) -> None:
    params = model.parameters()
    blob = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config_to_dict(cfg),
        "d_in": d_in,
        "epoch": state.epoch,
        "skipped_batches": state.skipped_batches,
        "params": _params_to_jsonable(params),
        "optimizer": state.optimizer.state_dict(),
        "scheduler": state.scheduler.state_dict() if state.scheduler else None,
        "rng_state": state.rng.bit_generator.state,
        "extra": extra or {},
    }
    if downstream_head is not None:
        blob["downstream_head"] = {
            "dims": downstream_head.dims,
            "params": _params_to_jsonable(downstream_head.parameters()),
        }
    atomic_write_text(path, json.dumps(blob))


def load_checkpoint(path: str):
    """Returns (model, cfg, state, d_in, downstream_head_or_None, extra)."""
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise InvalidParams(f"{path} is not an eigenlearn checkpoint")
    if blob.get("version") != CHECKPOINT_VERSION:
        raise InvalidParams(f"unsupported checkpoint version {blob.get('version')}")
    cfg = config_from_dict(blob["config"])
    d_in = blob["d_in"]
    model = build_model(cfg, d_in)
    _load_params(model.parameters(), blob["params"])
    head = None
    params = model.parameters()
    if blob["kind"] == "finetune":
        head = Mlp(blob["downstream_head"]["dims"], cfg.dropout,
                   np.random.default_rng(0))
        _load_params(head.parameters(), blob["downstream_head"]["params"])
        params = {f"encoder.{n}": p for n, p in model.encoder.parameters().items()}
        params.update({f"downstream.{n}": p for n, p in head.parameters().items()})
        if cfg.keep_pretrain_head:
            params.update({f"head.{n}": p for n, p in model.head.parameters().items()})
    optimizer = Adam(params, lr=cfg.lr)
    optimizer.load_state_dict(blob["optimizer"])
    scheduler = None
    if blob["scheduler"] is not None:
        scheduler = ReduceLROnPlateau(optimizer, cfg.scheduler.patience,
                                      cfg.scheduler.factor)
        scheduler.load_state_dict(blob["scheduler"])
    rng = np.random.default_rng()
    rng.bit_generator.state = blob["rng_state"]
    state = TrainState(optimizer, scheduler, rng, blob["epoch"], blob["skipped_batches"])
    return model, cfg, state, d_in, head, blob.get("extra", {})
