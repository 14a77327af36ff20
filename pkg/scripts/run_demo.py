#!/usr/bin/env python3
"""End-to-end demo on synthetic data.

Generates a planted-map dataset, runs the leave-two-out benchmark in both
directions for the planted embeddings and a random control model, and
compares their mismatch matrices. Everything lands under --out.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from neurodecode.cli import main as cli_main
from neurodecode.embeddings import EmbeddingTable, write_embedding_table


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo_out"))
    parser.add_argument("--words", type=int, default=20)
    parser.add_argument("--voxels", type=int, default=50)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--noise", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    spec = {
        "n_words": args.words,
        "n_voxels": args.voxels,
        "emb_dim": args.dim,
        "presentations": 6,
        "noise_sigma": args.noise,
        "map_kind": "linear",
        "seed": args.seed,
    }
    spec_path = out / "spec.json"
    spec_path.write_text(json.dumps(spec, indent=2), encoding="utf-8")
    if cli_main(["synth", str(spec_path), "--out", str(out / "data")]) != 0:
        return 1

    # a random control model: same words, unrelated vectors
    rng = np.random.default_rng(args.seed + 1)
    control = EmbeddingTable(
        model_name="control",
        dim=args.dim,
        entries={f"w{i:03d}": rng.standard_normal(args.dim) for i in range(args.words)},
    )
    write_embedding_table(control, out / "data" / "control.vec", "headered-vec")

    config = {
        "vocabulary": "words.csv",
        "subjects": [f"subject_synth{args.seed}.tsv"],
        "embeddings": [
            {"name": "planted", "path": "planted.vec", "format": "headered-vec"},
            {"name": "control", "path": "control.vec", "format": "headered-vec"},
        ],
        "directions": ["word2brain", "brain2word"],
        "regressor": {"linear_mode": True, "keep_rate": 1.0, "epochs": 300, "step_size": 0.01},
        "selection": {"k": None},
        "seed": args.seed,
        "workers": args.workers,
        "output_dir": "results",
    }
    config_path = out / "data" / "demo_config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    if cli_main(["run", str(config_path)]) != 0:
        return 1

    results = out / "data" / "results"
    code = cli_main([
        "analyze", "--mode", "mismatch-overlap",
        str(results / f"mismatch_synth{args.seed}_planted_word2brain.csv"),
        str(results / f"mismatch_synth{args.seed}_control_word2brain.csv"),
        "--out", str(out / "overlap"),
    ])
    if code != 0:
        return code
    print(f"summary: {results / 'summary.csv'}")
    print(f"chart:   {results / 'summary.svg'}")
    print(f"overlap: {out / 'overlap' / 'overlap.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
