#!/usr/bin/env python3
"""Export torchvision's ImageNet DenseNet-121 weights to the native checkpoint
format (SALCKPT1 binary + JSON sidecar manifest).

Usage:
    python3 tools/export_densenet121.py [out.bin]

Then point training at the file:
    export SALIENCE_DENSENET121_CHECKPOINT=/path/to/out.bin
or set "pretrained_checkpoint" in the train config. The ImageNet classifier
head is deliberately not exported; the trainer installs a fresh 2-class head.

Requires torch + torchvision and network access for the weight download.
"""

import json
import struct
import sys
from pathlib import Path


def main() -> None:
    out_path = Path(sys.argv[1] if len(sys.argv) > 1 else "densenet121_imagenet.bin")

    try:
        from torchvision.models import DenseNet121_Weights, densenet121
    except ImportError:
        sys.exit("torchvision is required: pip install torch torchvision")

    model = densenet121(weights=DenseNet121_Weights.IMAGENET1K_V1)
    state = model.state_dict()

    entries = []
    for name, tensor in state.items():
        if name.startswith("classifier."):
            continue  # replaced by the 2-class head at load time
        if name.endswith("num_batches_tracked"):
            continue  # statistics are frozen; the count is unused
        entries.append((name, tensor.detach().double().numpy()))

    with open(out_path, "wb") as f:
        f.write(b"SALCKPT1")
        f.write(struct.pack("<I", len(entries)))
        for name, arr in entries:
            encoded = name.encode()
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<i", dim))
            f.write(arr.astype("<f8", copy=False).tobytes(order="C"))

    manifest = {
        "arch": "densenet121_pretrained",
        "seed": 0,
        "variant": "none",
        "fingerprint": "imagenet-export",
        "in_channels": 3,
        "source": "torchvision densenet121 IMAGENET1K_V1",
    }
    manifest_path = out_path.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(entries)} arrays to {out_path} (+ {manifest_path.name})")


if __name__ == "__main__":
    main()
