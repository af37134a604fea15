"""Conditional tabular GAN with packed WGAN-GP training.

The generator takes latent noise concatenated with a condition vector and
emits one span per transformed column (tanh for normalized continuous
scalars, gumbel-softmax for mode indicators and categories). The
discriminator scores pac-packed batches; its loss is the Wasserstein
estimate plus a gradient penalty. Every source of randomness flows through
explicit generators derived from the config seed, so a fit is reproducible
bit-for-bit at any parallelism level.
"""

from __future__ import annotations

import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import torch
from torch import nn

from ..data import Dataset, Schema, SYNTHETIC_ID_PREFIX
from ..errors import ArtifactError, ConfigError, DivergenceError, TrainingError
from ..seeding import derive_seed
from .sampler import ConditionSampler
from .transform import TableTransform, decode_table, encode_table, fit_table_transform

logger = logging.getLogger(__name__)

GENERATOR_FORMAT_VERSION = 1

GUMBEL_TAU = 0.2
DROPOUT_P = 0.5
ADAM_BETAS = (0.5, 0.9)
_EPS = 1e-20


@dataclass(frozen=True)
class GanConfig:
    epochs: int = 10
    batch_size: int = 50
    gen_lr: float = 2e-4
    dis_lr: float = 2e-6
    dis_steps_per_gen_step: int = 5
    latent_dim: int = 128
    mixture_modes: int = 10
    hidden_dim: int = 256
    pac: int = 10
    condition_on_label: bool = True
    grad_penalty: float = 10.0
    gen_weight_decay: float = 1e-6
    dis_weight_decay: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "dis_steps_per_gen_step", "latent_dim",
                     "mixture_modes", "hidden_dim", "pac"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("gen_lr", "dis_lr"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.grad_penalty < 0:
            raise ConfigError(f"grad_penalty must be >= 0, got {self.grad_penalty}")

    def with_seed(self, seed: int) -> "GanConfig":
        doc = self.to_dict()
        doc["seed"] = seed
        return GanConfig.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "gen_lr": self.gen_lr,
            "dis_lr": self.dis_lr,
            "dis_steps_per_gen_step": self.dis_steps_per_gen_step,
            "latent_dim": self.latent_dim,
            "mixture_modes": self.mixture_modes,
            "hidden_dim": self.hidden_dim,
            "pac": self.pac,
            "condition_on_label": self.condition_on_label,
            "grad_penalty": self.grad_penalty,
            "gen_weight_decay": self.gen_weight_decay,
            "dis_weight_decay": self.dis_weight_decay,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GanConfig":
        try:
            return cls(
                epochs=int(doc.get("epochs", 10)),
                batch_size=int(doc.get("batch_size", 50)),
                gen_lr=float(doc.get("gen_lr", 2e-4)),
                dis_lr=float(doc.get("dis_lr", 2e-6)),
                dis_steps_per_gen_step=int(doc.get("dis_steps_per_gen_step", 5)),
                latent_dim=int(doc.get("latent_dim", 128)),
                mixture_modes=int(doc.get("mixture_modes", 10)),
                hidden_dim=int(doc.get("hidden_dim", 256)),
                pac=int(doc.get("pac", 10)),
                condition_on_label=bool(doc.get("condition_on_label", True)),
                grad_penalty=float(doc.get("grad_penalty", 10.0)),
                gen_weight_decay=float(doc.get("gen_weight_decay", 1e-6)),
                dis_weight_decay=float(doc.get("dis_weight_decay", 1e-6)),
                seed=int(doc.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed GAN config: {exc}") from exc


class _Residual(nn.Module):
    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.fc = nn.Linear(in_dim, out_dim)
        # batch statistics only: keeps the module immutable across generate calls
        self.bn = nn.BatchNorm1d(out_dim, track_running_stats=False)
        self.relu = nn.ReLU()

    def forward(self, x):
        out = self.relu(self.bn(self.fc(x)))
        return torch.cat([out, x], dim=1)


class _Generator(nn.Module):
    def __init__(self, input_dim: int, hidden_dim: int, data_dim: int):
        super().__init__()
        self.block1 = _Residual(input_dim, hidden_dim)
        self.block2 = _Residual(input_dim + hidden_dim, hidden_dim)
        self.head = nn.Linear(input_dim + 2 * hidden_dim, data_dim)

    def forward(self, x):
        return self.head(self.block2(self.block1(x)))


class _Discriminator(nn.Module):
    """Pac-packed critic; dropout is applied manually so its randomness is seeded."""

    def __init__(self, packed_dim: int, hidden_dim: int):
        super().__init__()
        self.fc1 = nn.Linear(packed_dim, hidden_dim)
        self.fc2 = nn.Linear(hidden_dim, hidden_dim)
        self.head = nn.Linear(hidden_dim, 1)
        self.act = nn.LeakyReLU(0.2)

    def forward(self, x, torch_gen: torch.Generator | None):
        h = self.act(self.fc1(x))
        h = _dropout(h, DROPOUT_P, torch_gen)
        h = self.act(self.fc2(h))
        h = _dropout(h, DROPOUT_P, torch_gen)
        return self.head(h)


def _dropout(x: torch.Tensor, p: float, torch_gen: torch.Generator | None) -> torch.Tensor:
    if torch_gen is None:
        return x  # prediction path: dropout off
    mask = (torch.rand(x.shape, generator=torch_gen) >= p).to(x.dtype)
    return x * mask / (1.0 - p)


def _init_module(module: nn.Module, torch_gen: torch.Generator) -> None:
    """Re-draw all Linear parameters from the explicit generator.

    Matches the default fan-in uniform bounds, but from a seeded stream
    instead of torch's global one.
    """
    for m in module.modules():
        if isinstance(m, nn.Linear):
            bound = 1.0 / np.sqrt(m.in_features)
            with torch.no_grad():
                m.weight.uniform_(-bound, bound, generator=torch_gen)
                if m.bias is not None:
                    m.bias.uniform_(-bound, bound, generator=torch_gen)


def _gumbel_softmax(logits: torch.Tensor, torch_gen: torch.Generator) -> torch.Tensor:
    u = torch.rand(logits.shape, generator=torch_gen)
    gumbel = -torch.log(-torch.log(u + _EPS) + _EPS)
    return torch.softmax((logits + gumbel) / GUMBEL_TAU, dim=-1)


def _apply_activate(raw: torch.Tensor, tf: TableTransform, torch_gen: torch.Generator) -> torch.Tensor:
    pieces = []
    offset = 0
    for span in tf.spans():
        chunk = raw[:, offset: offset + span.dim]
        if span.activation == "tanh":
            pieces.append(torch.tanh(chunk))
        else:
            pieces.append(_gumbel_softmax(chunk, torch_gen))
        offset += span.dim
    return torch.cat(pieces, dim=1)


@dataclass
class GeneratorModel:
    """Fitted per-subpopulation generator plus everything needed to reuse it."""

    config: GanConfig
    schema_fingerprint: str
    schema: Schema
    encodings: dict[str, tuple[str, ...]]
    transform: TableTransform
    sampler: ConditionSampler
    network: _Generator
    loss_trace: list[tuple[int, int, float, float]]
    sp_label: str
    train_row_ids: frozenset[str]
    batch_size: int = field(default=0)  # effective (possibly clamped) batch

    def loss_trace_finite(self) -> bool:
        return all(np.isfinite(d) and np.isfinite(g) for _, _, d, g in self.loss_trace)


def _effective_batch_pac(cfg: GanConfig, n: int) -> tuple[int, int]:
    batch = cfg.batch_size
    if batch > n:
        logger.warning("batch_size %d exceeds training size %d; clamping", batch, n)
        batch = n
    pac = min(cfg.pac, batch)
    while batch % pac != 0:
        pac -= 1
    if pac != cfg.pac:
        logger.warning("pac adjusted from %d to %d to divide batch %d", cfg.pac, pac, batch)
    return batch, pac


def _gradient_penalty(
    critic: _Discriminator,
    real_cat: torch.Tensor,
    fake_cat: torch.Tensor,
    pac: int,
    torch_gen: torch.Generator,
    lam: float,
) -> torch.Tensor:
    batch, dim = real_cat.shape
    alpha = torch.rand(batch // pac, 1, 1, generator=torch_gen, dtype=real_cat.dtype)
    alpha = alpha.repeat(1, pac, dim).reshape(batch, dim)
    interp = (alpha * real_cat + (1 - alpha) * fake_cat).requires_grad_(True)
    score = critic(interp.reshape(batch // pac, pac * dim), torch_gen)
    grad = torch.autograd.grad(
        outputs=score,
        inputs=interp,
        grad_outputs=torch.ones_like(score),
        create_graph=True,
        retain_graph=True,
        only_inputs=True,
    )[0]
    norms = grad.reshape(batch // pac, pac * dim).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean() * lam


def _cond_loss(
    raw: torch.Tensor,
    cond: torch.Tensor,
    mask: torch.Tensor,
    tf: TableTransform,
    sampler: ConditionSampler,
) -> torch.Tensor:
    data_layout = {col: (off, size) for col, off, size in tf.categorical_layout()}
    losses = []
    for j, col in enumerate(sampler.columns):
        d_off, size = data_layout[col]
        c_off, _ = sampler.cond_span(j)
        target = torch.argmax(cond[:, c_off: c_off + size], dim=1)
        ce = nn.functional.cross_entropy(
            raw[:, d_off: d_off + size], target, reduction="none"
        )
        losses.append(ce * mask[:, j])
    stacked = torch.stack(losses, dim=1)
    return stacked.sum() / raw.shape[0]


def fit_generator(train_sp: Dataset, cfg: GanConfig) -> GeneratorModel:
    """Adversarially fit a conditional generator on one subpopulation's training rows.

    Runs ``dis_steps_per_gen_step`` critic updates per generator update for
    ``epochs`` epochs. Raises on any non-finite loss, carrying the trace.
    """
    train_sp.require_encoded("fit_generator")
    if train_sp.n < 2:
        raise TrainingError(
            f"cannot fit a generator on {train_sp.n} row(s); need at least 2"
        )
    torch.set_num_threads(1)

    n = train_sp.n
    batch, pac = _effective_batch_pac(cfg, n)

    np_rng = np.random.default_rng(derive_seed(cfg.seed, "gan", "numpy"))
    torch_gen = torch.Generator().manual_seed(derive_seed(cfg.seed, "gan", "torch") % (2**63))

    tf = fit_table_transform(train_sp, cfg.mixture_modes, derive_seed(cfg.seed, "gan", "bgm"))
    data = torch.from_numpy(encode_table(tf, train_sp, np_rng))

    cond_columns = list(train_sp.schema.categorical_columns)
    if not cfg.condition_on_label:
        cond_columns = [c for c in cond_columns if c != train_sp.schema.label_column]
    sampler = ConditionSampler(train_sp, tf, tuple(cond_columns))

    data_dim = tf.output_dim
    cond_dim = sampler.cond_dim
    generator = _Generator(cfg.latent_dim + cond_dim, cfg.hidden_dim, data_dim).double()
    critic = _Discriminator((data_dim + cond_dim) * pac, cfg.hidden_dim).double()
    _init_module(generator, torch_gen)
    _init_module(critic, torch_gen)

    opt_g = torch.optim.Adam(
        generator.parameters(), lr=cfg.gen_lr, betas=ADAM_BETAS, weight_decay=cfg.gen_weight_decay
    )
    opt_d = torch.optim.Adam(
        critic.parameters(), lr=cfg.dis_lr, betas=ADAM_BETAS, weight_decay=cfg.dis_weight_decay
    )

    def make_fake(batch_n: int):
        z = torch.randn(batch_n, cfg.latent_dim, generator=torch_gen, dtype=torch.float64)
        condvec = sampler.sample_train(batch_n, np_rng)
        if condvec is None:
            return z, None, None, None, None
        cond, mask, col_ids, cat_ids = condvec
        cond_t = torch.from_numpy(cond)
        return torch.cat([z, cond_t], dim=1), cond_t, torch.from_numpy(mask), col_ids, cat_ids

    loss_trace: list[tuple[int, int, float, float]] = []
    steps_per_epoch = max(n // batch, 1)
    for epoch in range(cfg.epochs):
        for step in range(steps_per_epoch):
            d_loss_val = 0.0
            for _ in range(cfg.dis_steps_per_gen_step):
                gen_in, cond_t, mask_t, col_ids, cat_ids = make_fake(batch)
                fake_act = _apply_activate(generator(gen_in), tf, torch_gen)
                if cond_t is None:
                    rows = np_rng.integers(0, n, size=batch)
                    real = data[rows]
                    real_cat, fake_cat = real, fake_act
                else:
                    perm = np_rng.permutation(batch)
                    rows = sampler.sample_rows(col_ids[perm], cat_ids[perm], np_rng)
                    real = data[rows]
                    real_cat = torch.cat([real, cond_t[torch.from_numpy(perm)]], dim=1)
                    fake_cat = torch.cat([fake_act, cond_t], dim=1)
                y_real = critic(real_cat.reshape(batch // pac, -1), torch_gen)
                y_fake = critic(fake_cat.reshape(batch // pac, -1), torch_gen)
                penalty = _gradient_penalty(
                    critic, real_cat.detach(), fake_cat.detach(), pac, torch_gen, cfg.grad_penalty
                )
                loss_d = -(y_real.mean() - y_fake.mean()) + penalty
                opt_d.zero_grad(set_to_none=False)
                loss_d.backward()
                opt_d.step()
                d_loss_val = float(loss_d.detach())

            gen_in, cond_t, mask_t, _, _ = make_fake(batch)
            raw = generator(gen_in)
            fake_act = _apply_activate(raw, tf, torch_gen)
            fake_cat = fake_act if cond_t is None else torch.cat([fake_act, cond_t], dim=1)
            y_fake = critic(fake_cat.reshape(batch // pac, -1), torch_gen)
            ce = (
                torch.tensor(0.0, dtype=torch.float64)
                if cond_t is None
                else _cond_loss(raw, cond_t, mask_t, tf, sampler)
            )
            loss_g = -y_fake.mean() + ce
            opt_g.zero_grad(set_to_none=False)
            loss_g.backward()
            opt_g.step()

            g_loss_val = float(loss_g.detach())
            loss_trace.append((epoch, step, d_loss_val, g_loss_val))
            if not (np.isfinite(d_loss_val) and np.isfinite(g_loss_val)):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, step {step} "
                    f"(d={d_loss_val}, g={g_loss_val})",
                    loss_trace=loss_trace,
                )

    pm_col = train_sp.schema.pm_column
    pm_values = set(train_sp.decode_column(pm_col))
    sp_label = pm_values.pop() if len(pm_values) == 1 else "mixed"

    return GeneratorModel(
        config=cfg,
        schema_fingerprint=train_sp.fingerprint(),
        schema=train_sp.schema,
        encodings=dict(train_sp.encodings),
        transform=tf,
        sampler=sampler,
        network=generator,
        loss_trace=loss_trace,
        sp_label=sp_label,
        train_row_ids=train_sp.all_row_ids(),
        batch_size=batch,
    )


def generate(model: GeneratorModel, n: int, seed: int) -> Dataset:
    """Sample n schema-valid synthetic rows, deterministic given seed."""
    if n < 0:
        raise ConfigError(f"cannot generate a negative number of rows: {n}")
    torch.set_num_threads(1)
    schema = model.schema
    if n == 0:
        empty = {
            spec.name: pd.Series(
                [], dtype="float64" if spec.kind == "continuous" else "int64"
            )
            for spec in schema.columns
        }
        return Dataset(
            schema=schema,
            df=pd.DataFrame(empty, columns=list(schema.names)),
            provenance=f"gan:{model.sp_label}:seed={seed}",
            row_ids=np.empty(0, dtype=object),
            encodings=dict(model.encodings),
        )

    np_rng = np.random.default_rng(derive_seed(seed, "generate", "numpy"))
    torch_gen = torch.Generator().manual_seed(derive_seed(seed, "generate", "torch") % (2**63))
    batch = model.batch_size if model.batch_size > 0 else model.config.batch_size

    chunks = []
    with torch.no_grad():
        produced = 0
        while produced < n:
            z = torch.randn(batch, model.config.latent_dim, generator=torch_gen, dtype=torch.float64)
            cond = model.sampler.sample_generate(batch, np_rng)
            gen_in = z if cond is None else torch.cat([z, torch.from_numpy(cond)], dim=1)
            act = _apply_activate(model.network(gen_in), model.transform, torch_gen)
            chunks.append(act.numpy())
            produced += batch
    activations = np.concatenate(chunks, axis=0)[:n]
    df = decode_table(model.transform, activations)
    for spec in schema.columns:
        if spec.kind == "continuous":
            df[spec.name] = df[spec.name].astype("float64")
        else:
            df[spec.name] = df[spec.name].astype("int64")
    row_ids = np.array(
        [f"{SYNTHETIC_ID_PREFIX}gan:{model.sp_label}:{seed}:{i}" for i in range(n)],
        dtype=object,
    )
    return Dataset(
        schema=schema,
        df=df,
        provenance=f"gan:{model.sp_label}:seed={seed}",
        row_ids=row_ids,
        encodings=dict(model.encodings),
    )


def save_generator(model: GeneratorModel, path) -> None:
    payload = {
        "format_version": GENERATOR_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "schema_fingerprint": model.schema_fingerprint,
        "schema": model.schema.to_dict(),
        "encodings": {k: list(v) for k, v in model.encodings.items()},
        "transform": model.transform.to_state(),
        "sampler": model.sampler.to_state(),
        "network_state": model.network.state_dict(),
        "network_dims": {
            "input_dim": model.config.latent_dim + model.sampler.cond_dim,
            "hidden_dim": model.config.hidden_dim,
            "data_dim": model.transform.output_dim,
        },
        "loss_trace": list(model.loss_trace),
        "sp_label": model.sp_label,
        "train_row_ids": sorted(model.train_row_ids),
        "batch_size": model.batch_size,
    }
    with open(path, "wb") as fh:
        pickle.dump(payload, fh)


def load_generator(path, expected_fingerprint: str | None = None) -> GeneratorModel:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"generator artifact not found: {path}")
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except Exception as exc:  # truncated or corrupt container
        raise ArtifactError(f"cannot read generator artifact {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format_version") != GENERATOR_FORMAT_VERSION:
        raise ArtifactError(f"generator artifact {path} has unsupported format")
    if expected_fingerprint is not None and payload["schema_fingerprint"] != expected_fingerprint:
        raise ArtifactError(
            f"generator artifact {path} was fitted on a different schema "
            f"({payload['schema_fingerprint'][:12]}... != {expected_fingerprint[:12]}...)"
        )
    dims = payload["network_dims"]
    network = _Generator(dims["input_dim"], dims["hidden_dim"], dims["data_dim"]).double()
    network.load_state_dict(payload["network_state"])
    return GeneratorModel(
        config=GanConfig.from_dict(payload["config"]),
        schema_fingerprint=payload["schema_fingerprint"],
        schema=Schema.from_dict(payload["schema"]),
        encodings={k: tuple(v) for k, v in payload["encodings"].items()},
        transform=TableTransform.from_state(payload["transform"]),
        sampler=ConditionSampler.from_state(payload["sampler"]),
        network=network,
        loss_trace=[tuple(t) for t in payload["loss_trace"]],
        sp_label=payload["sp_label"],
        train_row_ids=frozenset(payload["train_row_ids"]),
        batch_size=int(payload["batch_size"]),
    )


def save_loss_trace(model: GeneratorModel, path) -> None:
    """Loss trace as delimited text: epoch, step, discriminator loss, generator loss."""
    lines = ["epoch,step,d_loss,g_loss"]
    lines += [f"{e},{s},{d!r},{g!r}" for e, s, d, g in model.loss_trace]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
