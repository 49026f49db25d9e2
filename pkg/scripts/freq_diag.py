"""Band coefficient histograms of model output, zero-fill and ground truth.

Writes ``histograms.csv`` (one row per band, method and bin) and prints the EMD
of each method's missing-coefficient histogram to the ground truth's.

    python scripts/freq_diag.py runs/toy/final.wfck --out runs/toy/diag
"""
import argparse
import csv
import json
from pathlib import Path

import numpy as np

from wavefill.generator import mask_bands
from wavefill.nn.tensor import no_grad
from wavefill.pipeline.evaluate import eval_set, zero_fill
from wavefill.pipeline.metrics import band_histograms, emd_1d
from wavefill.pipeline.train import load_generator


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("checkpoint", type=Path)
    parser.add_argument("--count", type=int, default=16)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--bins", type=int, default=64)
    parser.add_argument("--out", type=Path, default=Path("runs/diag"))
    args = parser.parse_args()

    generator = load_generator(args.checkpoint)
    images, holes = eval_set(args.seed, args.count, generator.config.image_size)
    masked, gt = mask_bands(images, holes, dtype=generator.parameters()[0].dtype)
    with no_grad():
        outputs = {"model": generator(masked), "zero_fill": zero_fill(masked)}

    args.out.mkdir(parents=True, exist_ok=True)
    table = {}
    with open(args.out / "histograms.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["band", "method", "bin_left", "pred_mass", "gt_mass"])
        for band, known in (("low", masked.known_low), ("lv2", masked.known_lv2), ("lv1", masked.known_lv1)):
            missing = np.broadcast_to(known < 0.5, getattr(gt, band).shape)
            truth = getattr(gt, band).data[missing]
            for method, bands in outputs.items():
                pred = getattr(bands, band).data[missing]
                hp, hg, width = band_histograms(pred, truth, args.bins)
                lo = min(pred.min(), truth.min())
                for k, (a, b) in enumerate(zip(hp, hg)):
                    writer.writerow([band, method, f"{lo + k * width:.6g}", f"{a:.6g}", f"{b:.6g}"])
                table.setdefault(band, {})[method] = emd_1d(hp, hg, width)
    print(json.dumps(table, indent=2))


if __name__ == "__main__":
    main()
