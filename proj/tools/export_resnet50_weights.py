#!/usr/bin/env python3
"""Export torchvision ResNet50 weights as a dermanet .dnw artifact.

The artifact feeds `[model] weights = ...` in the run configuration. By
default the ImageNet-pretrained weights are exported; --random exports a
fresh initialization (useful for format checks without network access).

Requires torch and torchvision.
"""

import argparse
import struct
import sys

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
MASK64 = (1 << 64) - 1


class Writer:
    def __init__(self, fh):
        self.fh = fh
        self.checksum = FNV_OFFSET

    def raw(self, data: bytes):
        self.fh.write(data)
        h = self.checksum
        for b in data:
            h = ((h ^ b) * FNV_PRIME) & MASK64
        self.checksum = h

    def u32(self, v: int):
        self.raw(struct.pack("<I", v))

    def u64(self, v: int):
        self.raw(struct.pack("<Q", v))

    def string(self, s: str):
        data = s.encode()
        self.u64(len(data))
        self.raw(data)

    def doubles(self, array):
        self.u64(array.size)
        self.raw(array.astype("<f8").tobytes())

    def finish(self):
        self.fh.write(struct.pack("<Q", self.checksum))


def ordered_entries(model):
    """(name, tensor) pairs in the exact order the C++ loader expects:
    parameters in traversal order, then batch-norm statistics."""

    params = [("backbone.conv1.weight", model.conv1.weight),
              ("backbone.bn1.gamma", model.bn1.weight),
              ("backbone.bn1.beta", model.bn1.bias)]
    buffers = [("backbone.bn1.running_mean", model.bn1.running_mean),
               ("backbone.bn1.running_var", model.bn1.running_var)]

    stages = [model.layer1, model.layer2, model.layer3, model.layer4]
    for stage_index, stage in enumerate(stages, start=1):
        for block_index, block in enumerate(stage):
            base = f"backbone.layer{stage_index}.{block_index}"
            for conv_name, bn_name in (("conv1", "bn1"), ("conv2", "bn2"),
                                       ("conv3", "bn3")):
                conv = getattr(block, conv_name)
                bn = getattr(block, bn_name)
                params.append((f"{base}.{conv_name}.weight", conv.weight))
                params.append((f"{base}.{bn_name}.gamma", bn.weight))
                params.append((f"{base}.{bn_name}.beta", bn.bias))
                buffers.append((f"{base}.{bn_name}.running_mean",
                                bn.running_mean))
                buffers.append((f"{base}.{bn_name}.running_var",
                                bn.running_var))
            if block.downsample is not None:
                conv, bn = block.downsample[0], block.downsample[1]
                params.append((f"{base}.proj_conv.weight", conv.weight))
                params.append((f"{base}.proj_bn.gamma", bn.weight))
                params.append((f"{base}.proj_bn.beta", bn.bias))
                buffers.append((f"{base}.proj_bn.running_mean",
                                bn.running_mean))
                buffers.append((f"{base}.proj_bn.running_var", bn.running_var))
    return params, buffers


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output .dnw path")
    parser.add_argument("--random", action="store_true",
                        help="export a fresh initialization instead of the "
                             "ImageNet weights")
    args = parser.parse_args()

    import torch
    import torchvision

    if args.random:
        model = torchvision.models.resnet50(weights=None)
    else:
        model = torchvision.models.resnet50(
            weights=torchvision.models.ResNet50_Weights.IMAGENET1K_V1)
    model.eval()

    params, buffers = ordered_entries(model)
    with torch.no_grad(), open(args.out, "wb") as fh:
        writer = Writer(fh)
        writer.raw(b"DNWT")
        writer.u32(1)
        writer.string("resnet50")
        writer.u32(len(params))
        for name, tensor in params:
            writer.string(name)
            writer.doubles(tensor.detach().numpy())
        writer.u32(len(buffers))
        for name, tensor in buffers:
            writer.string(name)
            writer.doubles(tensor.detach().numpy())
        writer.finish()
    print(f"wrote {args.out}: {len(params)} parameters, "
          f"{len(buffers)} statistics buffers")


if __name__ == "__main__":
    sys.exit(main())
