#!/usr/bin/env python3
"""Converts the digits bundled with the npm `mnist` package (10,000 MNIST
samples stored as JSON, pixels rounded to 3 decimals) into IDX files.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 tools/mnist_npm_to_idx.py package/src/digits data/mnist

Per digit, the first 80% of the samples go to the train files and the rest
to the t10k files. Samples are interleaved round-robin across digits.
"""

import argparse
import json
import pathlib
import struct

PIXELS = 28 * 28


def load_digits(src: pathlib.Path):
    digits = []
    for d in range(10):
        flat = json.loads((src / f"{d}.json").read_text())["data"]
        if len(flat) % PIXELS:
            raise SystemExit(f"{d}.json: {len(flat)} values is not a multiple of {PIXELS}")
        digits.append([flat[i:i + PIXELS] for i in range(0, len(flat), PIXELS)])
    return digits


def interleave(groups):
    out = []
    for i in range(max(len(g) for g in groups)):
        for label, g in enumerate(groups):
            if i < len(g):
                out.append((label, g[i]))
    return out


def write_idx(dst: pathlib.Path, prefix: str, samples):
    images = bytearray(struct.pack(">IIII", 0x803, len(samples), 28, 28))
    labels = bytearray(struct.pack(">II", 0x801, len(samples)))
    for label, pixels in samples:
        images.extend(min(255, max(0, round(v * 255))) for v in pixels)
        labels.append(label)
    (dst / f"{prefix}-images-idx3-ubyte").write_bytes(bytes(images))
    (dst / f"{prefix}-labels-idx1-ubyte").write_bytes(bytes(labels))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=pathlib.Path)
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--train-fraction", type=float, default=0.8)
    args = parser.parse_args()

    digits = load_digits(args.digits_dir)
    cut = [int(len(g) * args.train_fraction) for g in digits]
    train = interleave([g[:c] for g, c in zip(digits, cut)])
    test = interleave([g[c:] for g, c in zip(digits, cut)])
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(args.out_dir, "train", train)
    write_idx(args.out_dir, "t10k", test)
    print(f"wrote {len(train)} train and {len(test)} test samples to {args.out_dir}")


if __name__ == "__main__":
    main()
