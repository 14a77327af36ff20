"""Command line: ``matconvert --in a.mat b.mat --out dir [--manifest m.json]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .converter import ConversionError, convert_subject


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="matconvert",
        description="Convert MAT-file subject data to canonical TSV subject files.",
    )
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="FILE",
                        help="input MAT files")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--manifest", default=None, help="write a JSON conversion manifest here")
    args = parser.parse_args(argv)

    entries = []
    status = 0
    for input_path in args.inputs:
        try:
            entry = convert_subject(input_path, args.out)
        except ConversionError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
            continue
        for warning in entry.warnings:
            print(f"warning: {input_path}: {warning}", file=sys.stderr)
        print(f"converted {input_path} -> {entry.output} "
              f"({entry.trials} trials, {entry.voxels} voxels, {entry.words} words)",
              file=sys.stderr)
        entries.append(entry.to_dict())

    if args.manifest:
        manifest = {"subjects": entries}
        Path(args.manifest).parent.mkdir(parents=True, exist_ok=True)
        Path(args.manifest).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8", newline="\n",
        )
    return status


if __name__ == "__main__":
    sys.exit(main())
