"""File formats: log-likelihood matrix CSV, summary tables, run metadata, SVG.

Matrix CSV: a header row of datapoint ids, then one row per posterior draw,
comma-separated decimal floats. Summary CSV: one comment line carrying the
tool version and seed, a header, then one row per datapoint sorted by WAPDI
rank; floats are written with repr so a read-back reproduces every bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import LogLikMatrix, MismatchReport
from .models import VoteTable

__all__ = [
    "InputFormatError",
    "meta_line",
    "read_meta_line",
    "read_loglik_csv",
    "write_summary_csv",
    "read_summary_csv",
    "write_summary_ndjson",
    "write_run_json",
    "write_wapdi_svg",
    "read_group_labels_csv",
    "read_votes_csv",
    "read_values_csv",
]

SUMMARY_COLUMNS = (
    "id",
    "log_mu",
    "mu_log",
    "sigma2_log",
    "log_sigma2",
    "wapdi",
    "pdi_log",
    "waic_term",
    "rank_wapdi",
    "rank_logpred",
    "flags",
)


class InputFormatError(ValueError):
    """Malformed input file; maps to exit code 3 in the CLI."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(cell: str, line_no: int, col_no: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise InputFormatError(
            f"non-numeric value {cell!r} at line {line_no}, column {col_no}"
        ) from None


def read_loglik_csv(path, allow_degenerate: bool = False) -> LogLikMatrix:
    """Read a draws-by-datapoints log-likelihood matrix.

    The header row holds datapoint ids; every following non-blank row is one
    posterior draw. Trailing blank lines are tolerated; ragged rows and
    non-numeric cells are rejected with their line number.
    """
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"no such file: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    rows = [
        (i + 1, line)
        for i, line in enumerate(lines)
        if line.strip() and not line.startswith("#")
    ]
    if not rows:
        raise InputFormatError(f"{path}: empty file")
    header = [c.strip() for c in rows[0][1].split(",")]
    n_cols = len(header)
    values = []
    for line_no, line in rows[1:]:
        cells = line.split(",")
        if len(cells) != n_cols:
            raise InputFormatError(
                f"{path}: line {line_no} has {len(cells)} values, expected {n_cols}"
            )
        values.append(
            [_parse_float(c.strip(), line_no, j + 1) for j, c in enumerate(cells)]
        )
    if len(values) < 2:
        raise InputFormatError(
            f"{path}: need at least 2 posterior draws, found {len(values)}"
        )
    try:
        return LogLikMatrix(
            np.array(values), header, allow_degenerate=allow_degenerate
        )
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def meta_line(seed) -> str:
    return f"# pdikit {__version__} seed={seed}"


def read_meta_line(path) -> str | None:
    """First ``# pdikit`` comment of a file, if any."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return first.rstrip("\n") if first.startswith("# pdikit") else None


def write_summary_csv(path, report: MismatchReport, seed: int) -> None:
    lines = [meta_line(seed), ",".join(SUMMARY_COLUMNS)]
    for row in report.rows:
        s = row.summary
        lines.append(
            ",".join(
                [
                    row.datapoint_id,
                    _fmt(s.log_mu),
                    _fmt(s.mu_log),
                    _fmt(s.sigma2_log),
                    _fmt(s.log_sigma2),
                    _fmt(s.wapdi),
                    _fmt(s.pdi_ratio_log),
                    _fmt(s.waic_term),
                    str(row.rank_wapdi),
                    str(row.rank_log_mu),
                    ";".join(s.flags),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_summary_csv(path) -> list[dict]:
    """Read back a summary table as a list of per-row dicts."""
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"no such file: {path}")
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    if not lines:
        raise InputFormatError(f"{path}: empty summary file")
    header = lines[0].split(",")
    if list(header) != list(SUMMARY_COLUMNS):
        raise InputFormatError(f"{path}: unexpected summary header {header}")
    out = []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(SUMMARY_COLUMNS):
            raise InputFormatError(f"{path}: ragged row at line {line_no}")
        rec: dict = {"id": cells[0], "flags": tuple(f for f in cells[10].split(";") if f)}
        for col_no, (name, cell) in enumerate(zip(SUMMARY_COLUMNS[1:8], cells[1:8]), 2):
            rec[name] = _parse_float(cell, line_no, col_no)
        rec["rank_wapdi"] = int(cells[8])
        rec["rank_logpred"] = int(cells[9])
        out.append(rec)
    return out


def write_summary_ndjson(path, report: MismatchReport, seed: int) -> None:
    records = [{"pdikit": __version__, "seed": seed, "waic": report.waic}]
    for row in report.rows:
        s = row.summary
        records.append(
            {
                "id": row.datapoint_id,
                "log_mu": s.log_mu,
                "mu_log": s.mu_log,
                "sigma2_log": s.sigma2_log,
                "log_sigma2": s.log_sigma2,
                "wapdi": s.wapdi,
                "pdi_log": s.pdi_ratio_log,
                "waic_term": s.waic_term,
                "rank_wapdi": row.rank_wapdi,
                "rank_logpred": row.rank_log_mu,
                "flags": list(s.flags),
            }
        )
    text = "\n".join(json.dumps(r, sort_keys=True) for r in records)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_run_json(path, payload: dict) -> None:
    payload = {"pdikit": __version__, **payload}
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _svg_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def write_wapdi_svg(path, report: MismatchReport, seed: int, top_k: int | None = None) -> None:
    """Self-contained horizontal bar chart of WAPDI, most negative at top.

    Presentation only: values come straight from the report. Flagged (NaN)
    rows are skipped.
    """
    rows = [r for r in report.rows if not np.isnan(r.summary.wapdi)]
    if top_k is not None:
        rows = rows[:top_k]
    bar_h, gap, label_w, chart_w = 14, 4, 160, 420
    height = len(rows) * (bar_h + gap) + 30
    width = label_w + chart_w + 80
    max_mag = max((abs(r.summary.wapdi) for r in rows), default=1.0) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f"<!-- pdikit {__version__} seed={seed} -->",
        '<style>text{font-family:monospace;font-size:11px}</style>',
        f'<text x="{label_w}" y="14">WAPDI, worst datapoints first</text>',
    ]
    y = 24
    for row in rows:
        w = abs(row.summary.wapdi) / max_mag * chart_w
        parts.append(
            f'<text x="{label_w - 6}" y="{y + bar_h - 3}" text-anchor="end">'
            f"{_svg_escape(row.datapoint_id)}</text>"
        )
        parts.append(
            f'<rect x="{label_w}" y="{y}" width="{w:.2f}" height="{bar_h}" '
            'fill="#4878a8"/>'
        )
        parts.append(
            f'<text x="{label_w + w + 4:.2f}" y="{y + bar_h - 3}">'
            f"{row.summary.wapdi:.4f}</text>"
        )
        y += bar_h + gap
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def read_group_labels_csv(path) -> dict[str, str]:
    """Two-column id,label file mapping datapoints to groups."""
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"no such file: {path}")
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    out: dict[str, str] = {}
    start = 1 if lines and lines[0].lower().replace(" ", "") == "id,label" else 0
    for line_no, line in enumerate(lines[start:], start=start + 1):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 2:
            raise InputFormatError(f"{path}: line {line_no} is not 'id,label'")
        if cells[0] in out:
            raise InputFormatError(f"{path}: duplicate id {cells[0]!r}")
        out[cells[0]] = cells[1]
    return out


def read_values_csv(path) -> np.ndarray:
    """One positive number per line; a single leading header line is allowed."""
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"no such file: {path}")
    lines = [
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    if not lines:
        raise InputFormatError(f"{path}: empty file")
    try:
        float(lines[0])
    except ValueError:
        lines = lines[1:]
    if not lines:
        raise InputFormatError(f"{path}: no numeric rows")
    return np.array([_parse_float(line, i + 1, 1) for i, line in enumerate(lines)])


_VOTE_REQUIRED = ("vote", "sex", "race", "state")


def read_votes_csv(path) -> VoteTable:
    """Read the survey schema: vote,sex,race,state[,age][,edu].

    vote: 0/1; sex: 0=male, 1=female; race: 1=black, 0 otherwise; state: a
    string code; age/edu: small non-negative integer category codes. Category
    indices are assigned from the sorted distinct codes in the file.
    """
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"no such file: {path}")
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    if len(lines) < 2:
        raise InputFormatError(f"{path}: need a header and at least one row")
    header = [c.strip().lower() for c in lines[0].split(",")]
    missing = [c for c in _VOTE_REQUIRED if c not in header]
    if missing:
        raise InputFormatError(f"{path}: missing columns: {', '.join(missing)}")
    extra_col = next((c for c in ("age", "edu") if c in header), None)
    idx = {c: header.index(c) for c in header}

    def int_cell(cells, col, line_no, allowed=None):
        raw = cells[idx[col]].strip()
        try:
            val = int(raw)
        except ValueError:
            raise InputFormatError(
                f"{path}: line {line_no}: column {col!r} must be an integer, got {raw!r}"
            ) from None
        if allowed is not None and val not in allowed:
            raise InputFormatError(
                f"{path}: line {line_no}: column {col!r} must be in {sorted(allowed)}"
            )
        return val

    vote, female, black, state_raw, extra_raw = [], [], [], [], []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise InputFormatError(f"{path}: ragged row at line {line_no}")
        vote.append(int_cell(cells, "vote", line_no, {0, 1}))
        female.append(int_cell(cells, "sex", line_no, {0, 1}))
        black.append(int_cell(cells, "race", line_no, {0, 1}))
        state_raw.append(cells[idx["state"]].strip())
        if extra_col:
            extra_raw.append(int_cell(cells, extra_col, line_no))

    state_codes = tuple(sorted(set(state_raw)))
    state = np.array([state_codes.index(s) for s in state_raw])
    extra = None
    extra_codes: tuple[str, ...] = ()
    if extra_col:
        distinct = sorted(set(extra_raw))
        extra_codes = tuple(str(v) for v in distinct)
        lookup = {v: i for i, v in enumerate(distinct)}
        extra = np.array([lookup[v] for v in extra_raw])
    return VoteTable(
        vote=np.array(vote),
        female=np.array(female),
        black=np.array(black),
        state=state,
        state_codes=state_codes,
        extra=extra,
        extra_codes=extra_codes,
    )
