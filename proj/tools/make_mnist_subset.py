#!/usr/bin/env python3
"""Write a small stratified MNIST subset in IDX format.

The 5000-sample MNIST extract shipped inside the `mlxtend` wheel
(mlxtend/data/data/mnist_5k.csv.gz, 500 images per digit, pixels then label
per row) is split into 200 train + 50 test images per class and written with
the standard IDX file names:

    train-images-idx3-ubyte  train-labels-idx1-ubyte
    t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte

Usage:
    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist-subset
"""
import argparse
import gzip
import io
import random
import struct
import zipfile
from pathlib import Path

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(source: Path):
    if source.suffix == ".whl":
        with zipfile.ZipFile(source) as zf:
            raw = zf.read(MEMBER)
    else:
        raw = source.read_bytes()
    text = gzip.decompress(raw).decode("ascii")
    rows = []
    for line in io.StringIO(text):
        fields = line.strip().split(",")
        if len(fields) != 785:
            continue
        pixels = bytes(int(float(v)) for v in fields[:784])
        rows.append((pixels, int(float(fields[784]))))
    return rows


def write_idx(out: Path, prefix: str, samples):
    with open(out / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with open(out / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source", type=Path, help="mlxtend wheel or mnist_5k.csv.gz")
    ap.add_argument("out", type=Path)
    ap.add_argument("--train-per-class", type=int, default=200)
    ap.add_argument("--test-per-class", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20171018)
    args = ap.parse_args()

    by_class = {}
    for pixels, label in read_rows(args.source):
        by_class.setdefault(label, []).append((pixels, label))

    rng = random.Random(args.seed)
    train, test = [], []
    for label in sorted(by_class):
        items = by_class[label]
        rng.shuffle(items)
        train += items[: args.train_per_class]
        test += items[args.train_per_class : args.train_per_class + args.test_per_class]
    rng.shuffle(train)
    rng.shuffle(test)

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out, "train", train)
    write_idx(args.out, "t10k", test)
    print(f"wrote {len(train)} train / {len(test)} test images to {args.out}")


if __name__ == "__main__":
    main()
