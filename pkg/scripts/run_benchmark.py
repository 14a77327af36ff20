#!/usr/bin/env python3
"""Full benchmark over real converted subject files.

Takes converted subject TSVs (see the matconvert tool), a word-list CSV,
and any number of pretrained embedding files, then runs the whole
subjects x models x directions matrix with the drop-connect tanh
regressor and per-fold stability voxel selection. With the dependency
-based and 25-verb models supplied, also evaluates their concatenation.

Embedding arguments look like NAME=PATH[:FORMAT], e.g.

    python3 scripts/run_benchmark.py --vocab words.csv \\
        --subjects converted/subject_*.tsv \\
        --emb deps=deps.vec:headerless-vec --emb verbs25=verbs25.vec \\
        --mix deps+verbs25 --out bench_out
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from neurodecode.cli import main as cli_main


def parse_embedding(arg: str) -> dict:
    name, _, rest = arg.partition("=")
    if not name or not rest:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH[:FORMAT], got {arg!r}")
    path, _, fmt = rest.partition(":")
    return {"name": name, "path": path, "format": fmt or "headerless-vec"}


def main() -> int:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("--vocab", required=True, help="word-list CSV")
    parser.add_argument("--subjects", nargs="+", required=True, help="subject TSV files")
    parser.add_argument("--emb", action="append", type=parse_embedding, required=True,
                        metavar="NAME=PATH[:FORMAT]")
    parser.add_argument("--mix", action="append", default=None,
                        metavar="A+B", help="also evaluate the concatenation of two models")
    parser.add_argument("--subset", default=None, help="named word subset (default: all words)")
    parser.add_argument("--directions", nargs="+", default=["word2brain", "brain2word"])
    parser.add_argument("--select-voxels", type=int, default=500)
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--step-size", type=float, default=1e-3)
    parser.add_argument("--keep-rate", type=float, default=0.7)
    parser.add_argument("--l2", type=float, default=0.001)
    parser.add_argument("--linear", action="store_true", help="identity activation instead of tanh")
    parser.add_argument("--voxel-analysis", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--out", type=Path, default=Path("bench_out"))
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    combinations = []
    for mix in args.mix or []:
        a, _, b = mix.partition("+")
        combinations.append({"a": a, "b": b, "method": "concat", "name": mix})
    config = {
        "vocabulary": str(Path(args.vocab).resolve()),
        "subjects": [str(Path(s).resolve()) for s in args.subjects],
        "embeddings": [
            {**e, "path": str(Path(e["path"]).resolve())} for e in args.emb
        ],
        "combinations": combinations,
        "subset": args.subset,
        "directions": args.directions,
        "regressor": {
            "architecture": "tanh-direct",
            "keep_rate": args.keep_rate,
            "l2_lambda": args.l2,
            "step_size": args.step_size,
            "epochs": args.epochs,
            "linear_mode": args.linear,
        },
        "selection": {"k": args.select_voxels or None},
        "voxel_analysis": args.voxel_analysis,
        "seed": args.seed,
        "workers": args.workers,
        "output_dir": "results",
    }
    config_path = args.out / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    print(f"running {len(args.subjects)} subject(s) x "
          f"{len(args.emb) + len(combinations)} model(s) x {len(args.directions)} direction(s)")
    return cli_main(["run", str(config_path)])


if __name__ == "__main__":
    sys.exit(main())
