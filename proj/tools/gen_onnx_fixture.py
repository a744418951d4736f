"""Exports a small convnet with torch and records reference outputs.

    python3 tools/gen_onnx_fixture.py fixtures/onnx_bundle
"""
import json
import sys
from pathlib import Path

import numpy as np
import torch
from torch import nn


class Backbone(nn.Module):
    def __init__(self):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(3, 4, 3, padding=1),
            nn.BatchNorm2d(4),
            nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(4, 6, 3, stride=2, padding=1, groups=2),
            nn.LeakyReLU(0.1),
            nn.AvgPool2d(2),
            nn.Conv2d(6, 8, 1),
            nn.Sigmoid(),
        )
        self.fc = nn.Linear(8 * 2 * 2, 3)

    def forward(self, x):
        feats = torch.flatten(self.body(x), 1)
        return feats, self.fc(feats)


def main(out: Path):
    torch.manual_seed(3)
    model = Backbone().eval()
    with torch.no_grad():
        bn = model.body[1]
        bn.running_mean.uniform_(-0.2, 0.2)
        bn.running_var.uniform_(0.5, 1.5)
        bn.weight.uniform_(0.5, 1.5)
        bn.bias.uniform_(-0.1, 0.1)

    out.mkdir(parents=True, exist_ok=True)
    dummy = torch.zeros(1, 3, 16, 16)
    torch.onnx.export(model, dummy, out / "backbone.onnx", input_names=["input"],
                      output_names=["features", "logits"], opset_version=13, dynamo=False,
                      do_constant_folding=False)

    fc = {"weight": model.fc.weight.detach().double().tolist(),
          "bias": model.fc.bias.detach().double().tolist(),
          "labels": ["cat", "dog", "fox"]}
    (out / "fc.json").write_text(json.dumps(fc) + "\n")
    pre = {"resize": [16, 16], "mean": [0.485, 0.456, 0.406], "std": [0.229, 0.224, 0.225]}
    (out / "preprocess.json").write_text(json.dumps(pre) + "\n")

    # Reference: a fixed 20x24 uint8 image run through the same preprocessing
    # (bilinear, half-pixel centres, no antialias) and the torch model.
    rng = np.random.default_rng(11)
    img = rng.integers(0, 256, size=(20, 24, 3), dtype=np.uint8)
    x = torch.from_numpy(img.astype(np.float32) / 255.0).permute(2, 0, 1)[None]
    x = nn.functional.interpolate(x, size=(16, 16), mode="bilinear", align_corners=False, antialias=False)
    mean = torch.tensor(pre["mean"], dtype=torch.float32)[None, :, None, None]
    std = torch.tensor(pre["std"], dtype=torch.float32)[None, :, None, None]
    x = (x - mean) / std
    with torch.no_grad():
        feats, logits = model(x)
    ref = {
        "height": 20, "width": 24,
        "pixels": img.reshape(-1).tolist(),
        "features": feats[0].double().tolist(),
        "probs": torch.softmax(logits[0].double(), 0).tolist(),
    }
    (out / "reference.json").write_text(json.dumps(ref) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]))
