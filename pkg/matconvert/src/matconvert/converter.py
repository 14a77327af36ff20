"""MAT-file to TSV conversion.

The input MAT files carry three variables:

* ``data``: one activation vector per trial (cell array of 1 x V doubles,
  or a plain trials x voxels matrix),
* ``info``: per-trial stimulus metadata; the ``word`` field names the
  stimulus shown on each trial,
* ``meta``: session-level metadata; ``colToCoord`` (V x 3) maps voxel
  columns to grid coordinates and ``subject`` names the participant.

Output is the plain-text subject format:

    #neurodecode-subject v1
    subject=<id>\\tvoxels=<V>\\tpresentations=<P>
    coords=<file>                       (only when coordinates exist)
    word\\tpresentation\\tv0 ... v{V-1}

Values are copied without rescaling and written with full float round-trip
precision. Word labels are lowercased. The presentation index of a trial
is the number of earlier trials showing the same word, in original trial
order. Deliberately independent of any downstream package: the TSV format
is the only contract.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import loadmat

SUBJECT_MAGIC = "#neurodecode-subject v1"


class ConversionError(Exception):
    """The MAT file is missing required structure."""


@dataclass
class SubjectSummary:
    """Per-subject manifest entry."""

    input: str
    subject_id: str
    output: str
    coords_output: str | None
    trials: int
    voxels: int
    words: int
    word_list_sha256: str
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "subject_id": self.subject_id,
            "output": self.output,
            "coords_output": self.coords_output,
            "trials": self.trials,
            "voxels": self.voxels,
            "words": self.words,
            "word_list_sha256": self.word_list_sha256,
            "warnings": self.warnings,
        }


def _get_field(record, name: str):
    """Field access that works for mat_structs, dicts, and record arrays."""
    if hasattr(record, name):
        return getattr(record, name)
    if isinstance(record, dict) and name in record:
        return record[name]
    if hasattr(record, "dtype") and record.dtype.names and name in record.dtype.names:
        return record[name]
    return None


def _as_text(value) -> str:
    if isinstance(value, np.ndarray):
        value = value.item() if value.size == 1 else "".join(str(v) for v in value.ravel())
    return str(value)


def _trial_matrix(data) -> np.ndarray:
    """Stack the per-trial cells into a trials x voxels float matrix."""
    arr = np.asarray(data)
    if arr.dtype == object:
        cells = [np.asarray(c, dtype=np.float64).ravel() for c in arr.ravel()]
        widths = {len(c) for c in cells}
        if len(widths) != 1:
            raise ConversionError(f"trial vectors differ in length: {sorted(widths)}")
        return np.stack(cells)
    if arr.ndim != 2:
        raise ConversionError(f"expected a trials x voxels matrix, got shape {arr.shape}")
    return arr.astype(np.float64)


def _trial_words(info, n_trials: int) -> list[str]:
    records = np.asarray(info).ravel()
    if len(records) != n_trials:
        raise ConversionError(
            f"info describes {len(records)} trials but data holds {n_trials}"
        )
    words = []
    for record in records:
        word = _get_field(record, "word")
        if word is None:
            raise ConversionError("info record is missing the 'word' field")
        words.append(_as_text(word).strip().lower())
    if any(not w for w in words):
        raise ConversionError("empty word label in info")
    return words


def convert_subject(input_path: str | Path, output_dir: str | Path) -> SubjectSummary:
    """Convert one MAT file; returns its manifest entry.

    Raises ConversionError when required variables or fields are absent.
    Trial/word counts different from the full session (360 trials, 60
    words) are recorded as warnings, not errors, so reduced fixtures
    convert cleanly.
    """
    input_path = Path(input_path)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    try:
        mat = loadmat(str(input_path), squeeze_me=True, struct_as_record=False)
    except (OSError, ValueError, NotImplementedError) as exc:
        raise ConversionError(f"{input_path}: cannot read MAT file: {exc}") from None

    for required in ("data", "info"):
        if required not in mat:
            raise ConversionError(f"{input_path}: missing the '{required}' variable")
    trials = _trial_matrix(mat["data"])
    words = _trial_words(mat["info"], trials.shape[0])

    warnings: list[str] = []
    meta = mat.get("meta")
    coords = None
    if meta is None:
        warnings.append("missing 'meta' variable; no coordinates written")
    else:
        raw_coords = _get_field(meta, "colToCoord")
        if raw_coords is None:
            warnings.append("meta has no colToCoord table; no coordinates written")
        else:
            coords = np.asarray(raw_coords)
            if coords.shape != (trials.shape[1], 3):
                warnings.append(
                    f"colToCoord shape {coords.shape} does not match "
                    f"{trials.shape[1]} voxels; no coordinates written"
                )
                coords = None

    subject_id = None
    if meta is not None:
        raw_subject = _get_field(meta, "subject")
        if raw_subject is not None:
            subject_id = _as_text(raw_subject)
    if not subject_id:
        subject_id = input_path.stem
    subject_id = "".join(c if (c.isalnum() or c in "-_.") else "_" for c in subject_id)

    n_trials, n_voxels = trials.shape
    distinct = sorted(set(words))
    if n_trials != 360:
        warnings.append(f"expected 360 trials for a full session, found {n_trials}")
    if len(distinct) != 60:
        warnings.append(f"expected 60 distinct words for a full session, found {len(distinct)}")

    # presentation index: how many earlier trials showed the same word
    seen: dict[str, int] = {}
    presentations = []
    for w in words:
        presentations.append(seen.get(w, 0))
        seen[w] = seen.get(w, 0) + 1
    counts = set(seen.values())
    if len(counts) != 1:
        raise ConversionError(
            f"{input_path}: words have unequal presentation counts: {sorted(counts)}"
        )
    n_pres = counts.pop()

    out_name = f"subject_{subject_id}.tsv"
    coords_name = f"subject_{subject_id}_coords.tsv" if coords is not None else None
    lines = [SUBJECT_MAGIC, f"subject={subject_id}\tvoxels={n_voxels}\tpresentations={n_pres}"]
    if coords_name is not None:
        lines.append(f"coords={coords_name}")
    for row in range(n_trials):
        values = "\t".join(repr(float(x)) for x in trials[row])
        lines.append(f"{words[row]}\t{presentations[row]}\t{values}")
    (output_dir / out_name).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if coords is not None:
        coord_lines = ["\t".join(str(int(x)) for x in row) for row in coords]
        (output_dir / coords_name).write_text(
            "\n".join(coord_lines) + "\n", encoding="utf-8", newline="\n"
        )

    word_hash = hashlib.sha256("\n".join(distinct).encode("utf-8")).hexdigest()
    return SubjectSummary(
        input=str(input_path),
        subject_id=subject_id,
        output=str(output_dir / out_name),
        coords_output=str(output_dir / coords_name) if coords_name else None,
        trials=n_trials,
        voxels=n_voxels,
        words=len(distinct),
        word_list_sha256=word_hash,
        warnings=warnings,
    )
