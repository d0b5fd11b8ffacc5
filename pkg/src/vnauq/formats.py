"""Touchstone v1 one-port files, sample CSV tables and JSON documents.

Every parser raises :class:`~vnauq.errors.ParseError` carrying the 1-based
line number of the offending input line.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from typing import Any

import numpy as np

from .bayes import SampleSet
from .errors import ParseError

FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
FORMATS = ("RI", "MA", "DB")
_UNIT_NAMES = {"hz": "Hz", "khz": "kHz", "mhz": "MHz", "ghz": "GHz"}


@dataclass
class Sweep:
    frequencies: np.ndarray
    s11: np.ndarray
    format_tag: str = "MA"
    ref_impedance: float = 50.0

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float).ravel()
        self.s11 = np.asarray(self.s11, dtype=complex).ravel()
        if self.frequencies.shape != self.s11.shape:
            raise ValueError("frequency and S11 arrays differ in length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if self.format_tag not in FORMATS:
            raise ValueError(f"format_tag must be one of {FORMATS}")


def _parse_option_line(body: str, lineno: int):
    unit, fmt, z0 = "ghz", "MA", 50.0
    tokens = body.split()
    i = 0
    while i < len(tokens):
        tok = tokens[i].lower()
        if tok in FREQ_UNITS:
            unit = tok
        elif tok in ("ri", "ma", "db"):
            fmt = tok.upper()
        elif tok == "s":
            pass
        elif tok in ("y", "z", "h", "g"):
            raise ParseError(f"only S-parameter files are supported, option line says {tokens[i]!r}", lineno)
        elif tok == "r":
            if i + 1 == len(tokens):
                raise ParseError("option 'R' has no reference impedance value", lineno)
            try:
                z0 = float(tokens[i + 1])
            except ValueError:
                raise ParseError(f"bad reference impedance {tokens[i + 1]!r}", lineno) from None
            if not z0 > 0:
                raise ParseError(f"reference impedance must be positive, got {tokens[i + 1]!r}", lineno)
            i += 1
        else:
            raise ParseError(f"malformed option line: unknown token {tokens[i]!r}", lineno)
        i += 1
    return unit, fmt, z0


def _to_complex(a: float, b: float, fmt: str) -> complex:
    if fmt == "RI":
        return complex(a, b)
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    phase = math.radians(b)
    return complex(mag * math.cos(phase), mag * math.sin(phase))


def parse_touchstone_s1p(text: str) -> Sweep:
    """Parse a Touchstone v1 one-port file into a :class:`Sweep` in Hz and rectangular form."""
    option = None
    freqs: list[float] = []
    values: list[complex] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise ParseError(
                f"Touchstone v2 keyword {line.split()[0]!r} found; only Touchstone v1 is supported",
                lineno,
            )
        if line.startswith("#"):
            if option is not None:
                raise ParseError("malformed option line: more than one option line", lineno)
            if freqs:
                raise ParseError("malformed option line: option line after data", lineno)
            option = _parse_option_line(line[1:], lineno)
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(f"expected 3 columns (frequency and one S11 pair), found {len(tokens)}", lineno)
        try:
            f, a, b = (float(t) for t in tokens)
        except ValueError:
            raise ParseError(f"non-numeric data in {line!r}", lineno) from None
        unit, fmt, _ = option or ("ghz", "MA", 50.0)
        f *= FREQ_UNITS[unit]
        if freqs and not f > freqs[-1]:
            raise ParseError(f"frequency {f:g} Hz does not increase", lineno)
        freqs.append(f)
        values.append(_to_complex(a, b, fmt))
    if not freqs:
        raise ParseError("no data lines found", None)
    _, fmt, z0 = option or ("ghz", "MA", 50.0)
    return Sweep(np.array(freqs), np.array(values), fmt, z0)


def write_touchstone_s1p(sweep: Sweep, unit: str = "GHz", comment: str | None = None) -> str:
    """Render a sweep as Touchstone v1 text in its own format tag."""
    key = unit.lower()
    if key not in FREQ_UNITS:
        raise ValueError(f"unknown frequency unit {unit!r}")
    scale = FREQ_UNITS[key]
    lines = []
    if comment:
        lines.extend(f"! {c}" for c in comment.splitlines())
    lines.append(f"# {_UNIT_NAMES[key]} S {sweep.format_tag} R {sweep.ref_impedance:.17g}")
    for f, s in zip(sweep.frequencies, sweep.s11):
        if sweep.format_tag == "RI":
            a, b = s.real, s.imag
        else:
            mag = abs(s)
            a = mag if sweep.format_tag == "MA" else 20.0 * math.log10(mag)
            b = math.degrees(math.atan2(s.imag, s.real))
        lines.append(f"{f / scale:.17g} {a:.17g} {b:.17g}")
    return "\n".join(lines) + "\n"


class SampleTable(dict):
    """Named columns of samples, in file order."""

    @property
    def n(self) -> int:
        return next(iter(self.values())).n if self else 0


def parse_sample_csv(text: str) -> SampleTable:
    """Parse a headed, comma-separated numeric table into per-column sample sets."""
    header = None
    columns: list[list[float]] = []
    header_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        row = next(csv.reader([raw]))
        if header is None:
            header = [h.strip() for h in row]
            header_line = lineno
            seen = {}
            for col, name in enumerate(header, start=1):
                if not name:
                    raise ParseError("empty column name in header", lineno, col)
                if name in seen:
                    raise ParseError(f"duplicate header {name!r} (first in column {seen[name]})", lineno, col)
                seen[name] = col
            columns = [[] for _ in header]
            continue
        if len(row) != len(header):
            raise ParseError(f"ragged row: expected {len(header)} cells, found {len(row)}", lineno)
        for col, cell in enumerate(row, start=1):
            try:
                value = float(cell.strip())
            except ValueError:
                raise ParseError(f"non-numeric cell {cell.strip()!r}", lineno, col) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite cell {cell.strip()!r}", lineno, col)
            columns[col - 1].append(value)
    if header is None:
        raise ParseError("empty table: no header row", None)
    if not columns[0]:
        raise ParseError("empty table: header has no data rows", header_line)
    if len(columns[0]) < 2:
        raise ParseError("each column needs at least 2 values", header_line)
    return SampleTable((name, SampleSet(vals)) for name, vals in zip(header, columns))


# -- JSON documents ------------------------------------------------------------

_NUM = "\x00num\x00"
_NUM_RE = re.compile(r'"\\u0000num\\u0000([^"]*)"')


def _encode_floats(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite number {value!r}")
        return f"{_NUM}{value:.16e}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_encode_floats(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(document: dict) -> str:
    """Deterministic JSON text; every float carries 17 significant digits."""
    text = json.dumps(_encode_floats(document), indent=2, sort_keys=True, ensure_ascii=False)
    return _NUM_RE.sub(r"\1", text) + "\n"


def loads(text: str, kind: str | None = None) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object", 1)
    if kind is not None and doc.get("format") != kind:
        raise ParseError(f"expected a {kind!r} document, found format {doc.get('format')!r}", 1)
    return doc
