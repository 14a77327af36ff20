"""Command-line front end.

Subcommands:

* ``run <config.json>``: execute every (subject, model, direction) cell of
  an experiment, writing per-run eval and mismatch CSVs, optional voxel
  predictability CSVs, a ``summary.csv``, and a grouped-bar ``summary.svg``
  with the 0.5 chance line.
* ``analyze --mode {mismatch-overlap|voxel-overlap} <A> <B> --out <dir>``:
  compare two run artifacts, emitting an overlap CSV and an SVG.
* ``synth <spec.json> --out <dir>``: generate a planted-map dataset in the
  canonical file formats plus a ready-to-run config.

All config paths are resolved relative to the config file. The
``NEURODECODE_WORKERS`` environment variable overrides the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, svgplot, synth
from .dataset import (
    StimulusVocabulary,
    SubjectDataset,
    load_subject_dataset,
    load_word_list,
    write_subject_dataset,
    write_word_list,
)
from .embeddings import (
    FORMATS,
    EmbeddingTable,
    combine_tables,
    load_embedding_table,
    write_embedding_table,
)
from .errors import NeurodecodeError
from .evaluation import (
    DIRECTIONS,
    WORD_TO_BRAIN,
    EvalConfig,
    eval_csv_name,
    normalize_direction,
    run_leave_two_out,
    write_eval_csv,
)
from .regressor import RegressorConfig


@dataclass(frozen=True)
class EmbeddingSpec:
    name: str
    path: Path
    format: str


@dataclass(frozen=True)
class CombinationSpec:
    a: str
    b: str
    method: str = "concat"
    alpha: float | None = None
    name: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    vocabulary: Path
    subjects: tuple[Path, ...]
    embeddings: tuple[EmbeddingSpec, ...]
    combinations: tuple[CombinationSpec, ...] = ()
    subset: str | None = None
    directions: tuple[str, ...] = (WORD_TO_BRAIN,)
    regressor: RegressorConfig = field(default_factory=RegressorConfig)
    select_voxels: int | None = 500
    solver: str = "gradient"
    voxel_analysis: bool = False
    seed: int = 0
    workers: int = 1
    output_dir: Path = Path("out")

    def model_names(self) -> list[str]:
        names = [e.name for e in self.embeddings]
        names.extend(c.name or f"{c.a}+{c.b}" for c in self.combinations)
        return names


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment config JSON."""
    path = Path(path)
    base = path.parent
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from None

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base / q

    try:
        embeddings = tuple(
            EmbeddingSpec(name=e["name"], path=resolve(e["path"]), format=e["format"])
            for e in raw.get("embeddings", [])
        )
        combinations = tuple(
            CombinationSpec(
                a=c["a"],
                b=c["b"],
                method=c.get("method", "concat"),
                alpha=c.get("alpha"),
                name=c.get("name"),
            )
            for c in raw.get("combinations", [])
        )
        reg = raw.get("regressor", {})
        regressor = RegressorConfig(
            architecture=reg.get("architecture", "tanh-direct"),
            hidden_width=int(reg.get("hidden_width", 0) or 0),
            keep_rate=float(reg.get("keep_rate", 0.7)),
            l2_lambda=float(reg.get("l2_lambda", 0.001)),
            step_size=float(reg.get("step_size", 1e-3)),
            epochs=int(reg.get("epochs", 500)),
            seed=int(raw.get("seed", 0)),
            linear_mode=bool(reg.get("linear_mode", False)),
        )
        selection = raw.get("selection", {"k": 500})
        k = selection.get("k", 500) if isinstance(selection, dict) else selection
        config = ExperimentConfig(
            vocabulary=resolve(raw["vocabulary"]),
            subjects=tuple(resolve(s) for s in raw["subjects"]),
            embeddings=embeddings,
            combinations=combinations,
            subset=raw.get("subset"),
            directions=tuple(normalize_direction(d) for d in raw.get("directions", [WORD_TO_BRAIN])),
            regressor=regressor,
            select_voxels=None if k in (None, 0) else int(k),
            solver=raw.get("solver", "gradient"),
            voxel_analysis=bool(raw.get("voxel_analysis", False)),
            seed=int(raw.get("seed", 0)),
            workers=int(raw.get("workers", 1)),
            output_dir=resolve(raw.get("output_dir", "out")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid config {path}: {exc}") from None
    _validate_config(config)
    return config


def _validate_config(config: ExperimentConfig) -> None:
    if not config.subjects:
        raise ValueError("config lists no subject files")
    if not config.embeddings:
        raise ValueError("config lists no embedding models")
    names = config.model_names()
    if len(set(names)) != len(names):
        raise ValueError(f"model names must be unique, got {names}")
    known = {e.name for e in config.embeddings}
    for c in config.combinations:
        for ref in (c.a, c.b):
            if ref not in known:
                raise ValueError(f"combination references unknown model {ref!r}")
    if not config.directions:
        raise ValueError("config lists no directions")
    if config.workers < 1:
        raise ValueError("workers must be >= 1")
    for p in (config.vocabulary, *config.subjects, *(e.path for e in config.embeddings)):
        if not Path(p).exists():
            raise ValueError(f"missing input file: {p}")


def _build_tables(config: ExperimentConfig) -> dict[str, EmbeddingTable]:
    tables: dict[str, EmbeddingTable] = {}
    for espec in config.embeddings:
        tables[espec.name] = load_embedding_table(espec.path, espec.format, espec.name)
    for cspec in config.combinations:
        combined = combine_tables(tables[cspec.a], tables[cspec.b], cspec.method, cspec.alpha)
        name = cspec.name or f"{cspec.a}+{cspec.b}"
        tables[name] = EmbeddingTable(
            model_name=name, dim=combined.dim, entries=combined.entries
        )
    return tables


def cmd_run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    workers = int(os.environ.get("NEURODECODE_WORKERS", config.workers))
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    vocab = load_word_list(config.vocabulary)
    words = vocab.subset_words(config.subset)
    tables = _build_tables(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary_rows: list[tuple[str, str, str, float]] = []
    for subject_path in config.subjects:
        ds = load_subject_dataset(subject_path, vocab)
        for model_name in config.model_names():
            table = tables[model_name]
            for direction in config.directions:
                keep = config.voxel_analysis and direction == WORD_TO_BRAIN
                eval_cfg = EvalConfig(
                    regressor=config.regressor,
                    select_voxels=config.select_voxels,
                    solver=config.solver,
                    keep_predictions=keep,
                    workers=workers,
                )
                tag = f"{ds.subject_id}/{model_name}/{direction}"
                chunk = None

                def progress(done: int, total: int, _tag=tag) -> None:
                    nonlocal chunk
                    if chunk is None:
                        chunk = max(1, total // 8)
                    if done % chunk == 0 or done == total:
                        print(f"[{_tag}] fold {done}/{total}", file=sys.stderr)

                result = run_leave_two_out(
                    ds, vocab, words, table, direction, eval_cfg, progress=progress
                )
                write_eval_csv(result, out / eval_csv_name(ds.subject_id, model_name, direction))
                mm = analysis.mismatch_matrix(result)
                analysis.write_mismatch_csv(
                    mm, out / f"mismatch_{_safe(ds.subject_id)}_{_safe(model_name)}_{direction}.csv"
                )
                if keep:
                    vp = analysis.voxel_predictability(result)
                    analysis.write_voxelpred_csv(
                        vp,
                        out / f"voxpred_{_safe(ds.subject_id)}_{_safe(model_name)}.csv",
                        coords=ds.voxel_coords,
                    )
                summary_rows.append((ds.subject_id, model_name, direction, result.accuracy))

    _write_summary(config, summary_rows, out)
    print(f"wrote {len(summary_rows)} result rows to {out}", file=sys.stderr)
    return 0


def _safe(name: str) -> str:
    return "".join(c if (c.isalnum() or c in "-.") else "_" for c in name)


def _write_summary(
    config: ExperimentConfig, rows: list[tuple[str, str, str, float]], out: Path
) -> None:
    lines = ["subject,model,direction,accuracy"]
    for subject, model, direction, acc in rows:
        lines.append(f"{subject},{model},{direction},{acc!r}")
    averages: list[tuple[str, str, float]] = []
    for model in config.model_names():
        for direction in config.directions:
            accs = [a for s, m, d, a in rows if m == model and d == direction]
            if accs:
                averages.append((model, direction, float(np.mean(accs))))
    for model, direction, acc in averages:
        lines.append(f"average,{model},{direction},{acc!r}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    subjects = list(dict.fromkeys(s for s, _, _, _ in rows)) + ["average"]
    series = []
    for model in config.model_names():
        for direction in config.directions:
            label = f"{model} ({direction})" if len(config.directions) > 1 else model
            by_subject = {s: a for s, m, d, a in rows if m == model and d == direction}
            for m, d, a in averages:
                if m == model and d == direction:
                    by_subject["average"] = a
            series.append((label, [by_subject.get(s, 0.0) for s in subjects]))
    svgplot.bar_chart(
        out / "summary.svg",
        groups=subjects,
        series=series,
        chance=0.5,
        ylabel="accuracy",
        title="leave-two-out accuracy",
    )


def cmd_analyze(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path_a, path_b = Path(args.artifacts[0]), Path(args.artifacts[1])
    for p in (path_a, path_b):
        if not p.exists():
            raise ValueError(f"missing artifact: {p}")
    if args.mode == "mismatch-overlap":
        a = analysis.read_mismatch_csv(path_a)
        b = analysis.read_mismatch_csv(path_b)
        report = analysis.matrix_overlap(a, b, threshold=args.threshold)
        analysis.write_overlap_csv(report, out / "overlap.csv")
        membership = {}
        for pair in report.only_a:
            membership[pair] = "only_a"
        for pair in report.only_b:
            membership[pair] = "only_b"
        for pair in report.common:
            membership[pair] = "common"
        svgplot.pair_grid(
            out / "overlap.svg",
            words=a.word_order,
            membership=membership,
            title="mismatched pairs",
            label_a=a.model_name,
            label_b=b.model_name,
        )
    else:
        a = analysis.read_voxelpred_csv(path_a)
        b = analysis.read_voxelpred_csv(path_b)
        report = analysis.top_k_overlap(a, b, k=args.k)
        analysis.write_overlap_csv(report, out / "overlap.csv")
        points = []
        for kind in ("only_a", "only_b", "common"):
            for v in getattr(report, kind):
                points.append((float(a.scores[v]), float(b.scores[v]), kind))
        svgplot.score_scatter(
            out / "overlap.svg",
            points,
            xlabel=a.model_name,
            ylabel=b.model_name,
            title=f"top-{args.k} predictable voxels",
        )
    print(f"jaccard {report.jaccard!r}", file=sys.stderr)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    try:
        spec = synth.SynthSpec(**raw)
    except TypeError as exc:
        raise ValueError(f"invalid synth spec: {exc}") from None
    data = synth.generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_word_list(data.vocab, out / "words.csv")
    subject_file = f"subject_{data.dataset.subject_id}.tsv"
    write_subject_dataset(data.dataset, out / subject_file, data.vocab)
    write_embedding_table(data.table, out / "planted.vec", "headered-vec")
    config = {
        "vocabulary": "words.csv",
        "subjects": [subject_file],
        "embeddings": [{"name": "planted", "path": "planted.vec", "format": "headered-vec"}],
        "directions": ["word2brain"],
        "regressor": {"linear_mode": True, "keep_rate": 1.0},
        "selection": {"k": None},
        "seed": spec.seed,
        "workers": 1,
        "output_dir": "out",
    }
    (out / "config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )
    print(f"wrote synthetic dataset to {out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurodecode",
        description="Benchmark word-embedding models against per-voxel brain responses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="experiment config JSON")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="compare two run artifacts")
    p_an.add_argument("--mode", required=True, choices=["mismatch-overlap", "voxel-overlap"])
    p_an.add_argument("artifacts", nargs=2, help="two artifact CSVs of the chosen kind")
    p_an.add_argument("--out", default="analysis", help="output directory")
    p_an.add_argument("--threshold", type=float, default=0.0, help="error threshold (mismatch mode)")
    p_an.add_argument("--k", type=int, default=50, help="top-k size (voxel mode)")
    p_an.set_defaults(func=cmd_analyze)

    p_sy = sub.add_parser("synth", help="generate a synthetic dataset")
    p_sy.add_argument("spec", help="synth spec JSON")
    p_sy.add_argument("--out", required=True, help="output directory")
    p_sy.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NeurodecodeError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
