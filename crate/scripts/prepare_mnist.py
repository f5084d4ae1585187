#!/usr/bin/env python3
"""Build IDX files from the 10,000 MNIST digits bundled in the npm `mnist` package.

Usage:
    npm pack mnist            # produces mnist-1.1.0.tgz
    python3 scripts/prepare_mnist.py mnist-1.1.0.tgz data/mnist

Writes gzip-compressed IDX files (standard MNIST file names) with a fixed
8000/2000 train/test split. The split is a seeded permutation, so the output
is byte-identical across runs.
"""
import gzip
import json
import struct
import sys
import tarfile

import numpy as np

TRAIN = 8000
SPLIT_SEED = 20230501


def load(tgz):
    images, labels = [], []
    with tarfile.open(tgz) as tar:
        for digit in range(10):
            raw = json.load(tar.extractfile(f"package/src/digits/{digit}.json"))["data"]
            pix = np.rint(np.asarray(raw, dtype=np.float64) * 255.0).astype(np.uint8)
            pix = pix.reshape(-1, 28, 28)
            images.append(pix)
            labels.append(np.full(len(pix), digit, dtype=np.uint8))
    return np.concatenate(images), np.concatenate(labels)


def write_images(path, images):
    header = struct.pack(">IIII", 2051, len(images), 28, 28)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + images.tobytes())


def write_labels(path, labels):
    header = struct.pack(">II", 2049, len(labels))
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + labels.tobytes())


def main():
    tgz, out = sys.argv[1], sys.argv[2]
    images, labels = load(tgz)
    order = np.random.RandomState(SPLIT_SEED).permutation(len(images))
    images, labels = images[order], labels[order]
    write_images(f"{out}/train-images-idx3-ubyte.gz", images[:TRAIN])
    write_labels(f"{out}/train-labels-idx1-ubyte.gz", labels[:TRAIN])
    write_images(f"{out}/t10k-images-idx3-ubyte.gz", images[TRAIN:])
    write_labels(f"{out}/t10k-labels-idx1-ubyte.gz", labels[TRAIN:])
    print(f"{len(images)} digits: {TRAIN} train, {len(images) - TRAIN} test -> {out}")


if __name__ == "__main__":
    main()
