#!/usr/bin/env python3
"""Regenerates tests/data/reference: stored 16-bit score maps, truth and FOV
masks, and the metric values computed for them by numpy/scikit-learn.

The C++ evaluator is checked against expected.json, so the values here must
come from this script, not from the evaluator itself.

    python3 tools/make_reference_maps.py [out_dir]
"""

import json
import pathlib
import sys

import numpy as np
from PIL import Image
from sklearn.metrics import roc_auc_score

W, H = 60, 48
THRESHOLD = 0.5


def smooth(field, passes):
    for _ in range(passes):
        field = (field + np.roll(field, 1, 0) + np.roll(field, -1, 0)
                 + np.roll(field, 1, 1) + np.roll(field, -1, 1)) / 5.0
    return field


def make_case(rng, levels, with_fov):
    yy, xx = np.mgrid[0:H, 0:W]
    r = np.hypot(xx - (W - 1) / 2, yy - (H - 1) / 2)
    fov = r <= 0.45 * min(W, H) if with_fov else np.ones((H, W), bool)

    latent = smooth(rng.normal(size=(H, W)), 3)
    truth = latent > np.quantile(latent, 0.8)
    scores = 1 / (1 + np.exp(-(6 * latent + rng.normal(scale=1.0, size=(H, W)))))
    raw = np.round(scores * 65535).astype(np.int64)
    if levels:
        # Coarse levels force many tied scores.
        raw = np.round(raw / 65535 * (levels - 1)) * 65535 // (levels - 1)
    # Keep scores off the threshold so float rounding cannot flip a pixel.
    raw[(raw >= 32760) & (raw <= 32775)] = 32700
    return raw.astype(np.uint16), truth, fov


def metrics(raw, truth, fov):
    s = raw[fov].astype(np.float64)
    t = truth[fov]
    pred = (np.float32(1.0) * raw[fov] / np.float32(65535)) >= THRESHOLD
    tp = int(np.sum(pred & t))
    tn = int(np.sum(~pred & ~t))
    fp = int(np.sum(pred & ~t))
    fn = int(np.sum(~pred & t))
    return {
        "auc": float(roc_auc_score(t, s)),
        "accuracy": (tp + tn) / t.size,
        "dice": 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 1.0,
        "tp": tp, "tn": tn, "fp": fp, "fn": fn,
    }


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data/reference")
    for sub in ("pred", "truth", "fov"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240611)
    cases = [("01_ref", 0, True), ("02_ref", 16, True), ("03_ref", 0, False), ("04_ref", 5, True)]
    expected = {"threshold": THRESHOLD, "images": {}}
    for stem, levels, with_fov in cases:
        raw, truth, fov = make_case(rng, levels, with_fov)
        Image.fromarray(raw).save(out / "pred" / f"{stem}.png")
        Image.fromarray((truth * 255).astype(np.uint8)).save(out / "truth" / f"{stem}.png")
        if with_fov:
            Image.fromarray((fov * 255).astype(np.uint8)).save(out / "fov" / f"{stem}.png")
        expected["images"][stem] = metrics(raw, truth, fov)
    imgs = expected["images"].values()
    expected["mean_auc"] = float(np.mean([m["auc"] for m in imgs]))
    expected["mean_accuracy"] = float(np.mean([m["accuracy"] for m in imgs]))
    expected["mean_dice"] = float(np.mean([m["dice"] for m in imgs]))
    (out / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
