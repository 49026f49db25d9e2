"""Side-by-side PNG of masked input, zero-fill, model output and ground truth.

    python scripts/gallery.py runs/toy/final.wfck gallery.png --count 4
"""
import argparse
from pathlib import Path

import numpy as np

from wavefill.generator import inpaint
from wavefill.pipeline.evaluate import eval_set
from wavefill.pipeline.imageio import write_image
from wavefill.pipeline.train import load_generator


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("checkpoint", type=Path)
    parser.add_argument("output", type=Path)
    parser.add_argument("--count", type=int, default=4)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--kinds", default="stripes,checker")
    args = parser.parse_args()

    generator = load_generator(args.checkpoint)
    images, holes = eval_set(args.seed, args.count, generator.config.image_size, tuple(args.kinds.split(",")))
    rows = []
    for image, hole in zip(images, holes):
        hole3 = hole[..., None]
        masked = image * (1 - hole3) + 0.5 * hole3
        zero = image * (1 - hole3)
        rows.append(np.concatenate([masked, zero, inpaint(image, hole, generator), image], axis=1))
    write_image(args.output, np.concatenate(rows, axis=0))
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
