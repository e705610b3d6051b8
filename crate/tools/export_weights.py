#!/usr/bin/env python3
"""Export the linear weights of a transformer checkpoint as weight containers.

Writes one `rows cols f32` container per 2-D linear weight plus
`manifest.json`. The matrix is stored as (in_features x out_features) so it
is the M x N operand of `input(K x M) * weight(M x N)`.
"""
import argparse
import hashlib
import json
import pathlib

import numpy as np
import torch
from transformers import AutoModel


def write_container(path, w):
    w = np.ascontiguousarray(w, dtype="<f4")
    with open(path, "wb") as f:
        f.write(f"{w.shape[0]} {w.shape[1]} f32\n".encode())
        f.write(w.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", required=True, help="hub name or local checkpoint directory")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = AutoModel.from_pretrained(args.model)
    digest = hashlib.sha256()
    layers = []
    for name, mod in model.named_modules():
        if not isinstance(mod, torch.nn.Linear):
            continue
        w = mod.weight.detach().cpu().numpy().T
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(w, dtype="<f4").tobytes())
        fname = name.replace(".", "_") + ".bin"
        write_container(out / fname, w)
        layers.append({"name": name, "path": fname, "rows": int(w.shape[0]), "cols": int(w.shape[1])})

    manifest = {"model": args.model, "layers": layers, "source_sha256": digest.hexdigest()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


if __name__ == "__main__":
    main()
