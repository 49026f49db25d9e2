"""Adversarial training loop: one discriminator update, then one generator update."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from wavefill.discriminator import Discriminator, DiscriminatorConfig, hole_bbox
from wavefill.errors import NonFiniteLoss
from wavefill.generator import Generator, GeneratorConfig, bands_to_image, mask_bands
from wavefill.losses import (
    FeatureExtractor,
    LossReport,
    LossWeights,
    loss_d_hinge,
    loss_fm,
    loss_g_adv,
    loss_lf,
    loss_perceptual,
    total_objective,
)
from wavefill.nn.optim import Adam
from wavefill.nn.tensor import Tensor, no_grad
from wavefill.pipeline import checkpoint as ckpt
from wavefill.pipeline.data import sample_batch

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    steps: int = 1000
    batch_size: int = 8
    lr_g: float = 1e-4
    lr_d: float = 4e-4
    seed: int = 0
    dataset: str = "toy:stripes,checker"
    checkpoint_interval: int = 0
    lambda_lf: float = 2.0
    lambda_fm: float = 5.0
    lambda_perceptual: float = 10.0

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")

    @property
    def weights(self) -> LossWeights:
        return LossWeights(self.lambda_lf, self.lambda_fm, self.lambda_perceptual)

    @property
    def toy_kinds(self) -> tuple:
        scheme, _, kinds = self.dataset.partition(":")
        if scheme != "toy":
            raise ValueError(f"unsupported dataset {self.dataset!r}; only toy:<kinds> is bundled")
        return tuple(k for k in kinds.split(",") if k) or ("stripes", "checker")


@dataclass
class Models:
    generator: Generator
    disc_lv1: Discriminator
    disc_lv2: Discriminator
    extractor: FeatureExtractor

    def named(self) -> dict:
        return {"gen": self.generator, "disc.lv1": self.disc_lv1, "disc.lv2": self.disc_lv2}


def build_models(gen_config: GeneratorConfig, disc_config: DiscriminatorConfig | None = None,
                 dtype=np.float32) -> Models:
    disc_config = disc_config or DiscriminatorConfig(in_channels=3 * gen_config.channels)
    seed = gen_config.seed
    lv1 = DiscriminatorConfig(**{**asdict(disc_config), "seed": seed + 101})
    lv2 = DiscriminatorConfig(**{**asdict(disc_config), "seed": seed + 202})
    return Models(
        generator=Generator(gen_config, dtype),
        disc_lv1=Discriminator(lv1, dtype),
        disc_lv2=Discriminator(lv2, dtype),
        extractor=FeatureExtractor(gen_config.channels, seed=seed + 303, dtype=dtype),
    )


def batch_boxes(known: np.ndarray) -> list:
    return [hole_bbox(known[i, 0]) for i in range(known.shape[0])]


class Trainer:
    def __init__(self, gen_config: GeneratorConfig, train_config: TrainConfig,
                 disc_config: DiscriminatorConfig | None = None, dtype=np.float32):
        self.gen_config = gen_config
        self.config = train_config
        self.dtype = dtype
        self.models = build_models(gen_config, disc_config, dtype)
        g = self.models.generator
        d1, d2 = self.models.disc_lv1, self.models.disc_lv2
        self.opt_g = Adam(g.named_parameters("gen"), lr=train_config.lr_g, betas=(0.0, 0.9))
        d_params = list(d1.named_parameters("disc.lv1")) + list(d2.named_parameters("disc.lv2"))
        self.opt_d = Adam(d_params, lr=train_config.lr_d, betas=(0.0, 0.9))
        self.step = 0

    # -- one step ---------------------------------------------------------
    def train_step(self, images: np.ndarray, holes: np.ndarray) -> LossReport:
        m = self.models
        masked, gt = mask_bands(images, holes, dtype=self.dtype)
        boxes1, boxes2 = batch_boxes(masked.known_lv1), batch_boxes(masked.known_lv2)
        gt_image = Tensor(images.transpose(0, 3, 1, 2).astype(self.dtype))

        pred = m.generator(masked)

        self.opt_d.zero_grad()
        d1 = loss_d_hinge(m.disc_lv1(gt.lv1, boxes1), m.disc_lv1(pred.lv1.detach(), boxes1))
        d2 = loss_d_hinge(m.disc_lv2(gt.lv2, boxes2), m.disc_lv2(pred.lv2.detach(), boxes2))
        total_d = d1 + d2
        self._check_finite({"d_adv_lv1": d1, "d_adv_lv2": d2})
        total_d.backward()
        self.opt_d.step()

        fake1 = m.disc_lv1(pred.lv1, boxes1)
        fake2 = m.disc_lv2(pred.lv2, boxes2)
        with no_grad():
            real1 = m.disc_lv1(gt.lv1, boxes1)
            real2 = m.disc_lv2(gt.lv2, boxes2)
        lf = loss_lf(pred.low, gt.low)
        g_adv = loss_g_adv([fake1, fake2])
        fm = loss_fm([real1.activations, real2.activations], [fake1.activations, fake2.activations])
        perc = loss_perceptual(bands_to_image(pred), gt_image, m.extractor)
        parts = {"lf_l1": lf, "g_adv": g_adv, "fm": fm, "perceptual": perc}
        self._check_finite(parts)
        total_g, _ = total_objective(lf, g_adv, fm, perc, weights=self.config.weights)

        self.opt_g.zero_grad()
        total_g.backward()
        self.opt_g.step()
        self.opt_d.zero_grad()
        self.step += 1
        return LossReport(
            lf_l1=lf.item(), g_adv=g_adv.item(), d_adv_per_level=[d1.item(), d2.item()],
            fm=fm.item(), perceptual=perc.item(), total_g=total_g.item(), total_d=total_d.item(),
        )

    def _check_finite(self, parts: dict) -> None:
        values = {k: float(v.data) for k, v in parts.items()}
        if not all(np.isfinite(v) for v in values.values()):
            dump = {"step": self.step, "losses": {k: repr(v) for k, v in values.items()}}
            log.error("non-finite loss: %s", json.dumps(dump))
            raise NonFiniteLoss(json.dumps(dump))

    def next_batch(self):
        return sample_batch(self.config.seed, self.step, self.config.batch_size,
                            self.gen_config.image_size, self.config.toy_kinds)

    def run(self, steps: int | None = None, log_file=None, checkpoint_dir=None) -> list:
        """Train from the current step; returns one LossReport per step."""
        steps = self.config.steps if steps is None else steps
        reports = []
        for _ in range(steps):
            images, holes = self.next_batch()
            report = self.train_step(images, holes)
            reports.append(report)
            if log_file is not None:
                log_file.write(json.dumps(report.record(step=self.step)) + "\n")
                log_file.flush()
            interval = self.config.checkpoint_interval
            if checkpoint_dir is not None and interval and self.step % interval == 0:
                self.save(Path(checkpoint_dir) / f"step_{self.step:06d}.wfck")
        return reports

    # -- persistence ------------------------------------------------------
    def checkpoint(self) -> ckpt.Checkpoint:
        meta = {
            "step": self.step,
            "generator_config": asdict(self.gen_config),
            "train_config": asdict(self.config),
            "discriminator_config": asdict(self.models.disc_lv1.config),
        }
        return ckpt.collect(self.models.named(), {"gen": self.opt_g, "disc": self.opt_d}, meta)

    def save(self, path) -> None:
        ckpt.save_checkpoint(path, self.checkpoint())

    @classmethod
    def from_checkpoint(cls, path, dtype=np.float32) -> "Trainer":
        data = ckpt.load_checkpoint(path)
        meta = data.meta
        disc = dict(meta["discriminator_config"])
        trainer = cls(
            GeneratorConfig(**meta["generator_config"]),
            TrainConfig(**meta["train_config"]),
            DiscriminatorConfig(**disc),
            dtype=dtype,
        )
        ckpt.restore(data, trainer.models.named(), {"gen": trainer.opt_g, "disc": trainer.opt_d})
        trainer.step = int(meta["step"])
        return trainer


def load_generator(path, dtype=np.float32) -> Generator:
    data = ckpt.load_checkpoint(path)
    gen = Generator(GeneratorConfig(**data.meta["generator_config"]), dtype)
    ckpt.restore(data, {"gen": gen})
    return gen
