#!/usr/bin/env python3
"""Trains the small digit classifier used by the end-to-end tests and writes it,
together with a held-out evaluation set, in squarebox's on-disk formats.

The images are the 8x8 scikit-learn digits, bilinearly upsampled to 28x28 and
scaled to [0, 1]. Output (default tests/fixtures/):

  digits_cnn.json / digits_cnn.bin    model manifest + little-endian f32 weights
  digits_eval.json / digits_eval.bin  dataset manifest + little-endian f32 images
"""

import argparse
import json
import pathlib

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split


def build_model():
    return nn.Sequential(
        nn.Conv2d(1, 8, 3, stride=2, padding=1),
        nn.ReLU(),
        nn.Conv2d(8, 16, 3, stride=2, padding=1),
        nn.ReLU(),
        nn.Flatten(),
        nn.Linear(16 * 7 * 7, 10),
    )


def layer_manifest(model):
    layers = []
    for m in model:
        if isinstance(m, nn.Conv2d):
            layers.append({
                "kind": "conv2d",
                "in_channels": m.in_channels,
                "out_channels": m.out_channels,
                "kernel_h": m.kernel_size[0],
                "kernel_w": m.kernel_size[1],
                "stride": m.stride[0],
                "padding": m.padding[0],
            })
        elif isinstance(m, nn.Linear):
            layers.append({"kind": "dense", "in_dim": m.in_features, "out_dim": m.out_features})
        elif isinstance(m, nn.ReLU):
            layers.append({"kind": "relu"})
        elif isinstance(m, nn.Softplus):
            layers.append({"kind": "softplus"})
        elif isinstance(m, nn.Flatten):
            layers.append({"kind": "flatten"})
        else:
            raise ValueError(f"unsupported layer {m}")
    return layers


def weight_blob(model):
    parts = []
    for m in model:
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            parts.append(m.weight.detach().numpy().astype("<f4").ravel())
            parts.append(m.bias.detach().numpy().astype("<f4").ravel())
    return np.concatenate(parts).tobytes()


def load_images():
    digits = load_digits()
    x = torch.tensor(digits.images, dtype=torch.float32).unsqueeze(1) / 16.0
    x = F.interpolate(x, size=(28, 28), mode="bilinear", align_corners=False)
    return x.clamp(0.0, 1.0).numpy(), digits.target.astype(np.int64)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--eval-count", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    images, labels = load_images()
    x_tr, x_te, y_tr, y_te = train_test_split(
        images, labels, test_size=0.3, random_state=args.seed, stratify=labels)

    model = build_model()
    opt = torch.optim.Adam(model.parameters(), lr=2e-3)
    xt, yt = torch.tensor(x_tr), torch.tensor(y_tr)
    for epoch in range(args.epochs):
        perm = torch.randperm(len(xt))
        for i in range(0, len(xt), 64):
            idx = perm[i:i + 64]
            opt.zero_grad()
            loss = F.cross_entropy(model(xt[idx]), yt[idx])
            loss.backward()
            opt.step()

    model.eval()
    with torch.no_grad():
        acc = (model(torch.tensor(x_te)).argmax(1).numpy() == y_te).mean()
    n_params = sum(p.numel() for p in model.parameters())
    print(f"test accuracy {acc:.4f}, parameters {n_params}")

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "input_shape": [1, 28, 28],
        "num_classes": 10,
        "weights": "digits_cnn.bin",
        "layers": layer_manifest(model),
    }
    (out / "digits_cnn.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (out / "digits_cnn.bin").write_bytes(weight_blob(model))

    n = min(args.eval_count, len(x_te))
    ds = {
        "count": n,
        "shape": [1, 28, 28],
        "labels": [int(v) for v in y_te[:n]],
        "blob": "digits_eval.bin",
    }
    (out / "digits_eval.json").write_text(json.dumps(ds) + "\n")
    (out / "digits_eval.bin").write_bytes(x_te[:n].astype("<f4").tobytes())


if __name__ == "__main__":
    main()
