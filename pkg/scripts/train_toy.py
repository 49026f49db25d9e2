"""Train the desk-scale model on the toy textures and score it against zero-fill.

    python scripts/train_toy.py --steps 1000 --out runs/toy
"""
import argparse
import json
from pathlib import Path

import numpy as np

from wavefill.generator import GeneratorConfig
from wavefill.pipeline.evaluate import compare_to_zero_fill, eval_set
from wavefill.pipeline.train import Trainer, TrainConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--batch", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--channels", type=int, default=32, help="generator base width")
    parser.add_argument("--dataset", default="toy:stripes,checker")
    parser.add_argument("--eval-count", type=int, default=16)
    parser.add_argument("--out", type=Path, default=Path("runs/toy"))
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    trainer = Trainer(GeneratorConfig(base_channels=args.channels, seed=args.seed),
                      TrainConfig(steps=args.steps, batch_size=args.batch, seed=args.seed, dataset=args.dataset))
    with open(args.out / "log.jsonl", "w") as log:
        reports = trainer.run(log_file=log)
    trainer.save(args.out / "final.wfck")

    lf = np.array([r.lf_l1 for r in reports])
    window = max(1, min(100, len(lf) // 2))
    images, holes = eval_set(7, args.eval_count, trainer.gen_config.image_size, trainer.config.toy_kinds)
    summary = {
        "steps": trainer.step,
        "lf_median_first": float(np.median(lf[:window])),
        "lf_median_last": float(np.median(lf[-window:])),
        "eval": compare_to_zero_fill(trainer.models.generator, images, holes),
    }
    summary["lf_ratio"] = summary["lf_median_last"] / summary["lf_median_first"]
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
