#!/usr/bin/env python3
"""Generate the synthetic magnitude/phase source images shipped under data/.

Each image is an 8-bit binary PGM (P5, maxval 255). The reconstruction
pipeline only assumes square 8-bit inputs; these particular patterns mix
smooth gradients with localized features so that both magnitude and phase
carry structure at several length scales.
"""

import argparse
import numpy as np


def blobs(n, seed, count=6):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n] / n
    img = np.zeros((n, n))
    for _ in range(count):
        cy, cx = rng.uniform(0.15, 0.85, size=2)
        sigma = rng.uniform(0.06, 0.18)
        amp = rng.uniform(0.4, 1.0)
        img += amp * np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2)))
    img += 0.3 * np.sin(2 * np.pi * 3 * xx) * np.cos(2 * np.pi * 2 * yy)
    return img


def rings(n, seed):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n] / n
    r = np.hypot(yy - 0.5, xx - 0.55)
    img = 0.5 + 0.5 * np.cos(2 * np.pi * r * rng.uniform(4, 7))
    img *= np.exp(-3 * r)
    img += 0.4 * (xx + yy) / 2
    return img


def to_pgm(img, path):
    lo, hi = img.min(), img.max()
    b = np.round((img - lo) / (hi - lo) * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(b.tobytes())
    print(path)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="data")
    args = ap.parse_args()
    for n in (64, 128):
        to_pgm(blobs(n, seed=7), f"{args.outdir}/magnitude_{n}.pgm")
        to_pgm(rings(n, seed=11), f"{args.outdir}/phase_{n}.pgm")


if __name__ == "__main__":
    main()
