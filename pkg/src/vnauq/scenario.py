"""Scenario configuration files (JSON).

A scenario file is a JSON object::

    {
      "frequencies": {"start_hz": 1e9, "stop_hz": 4e9, "points": 31},
      "reference_impedance": 50,
      "kit": "typical-3.5mm",
      "beliefs": {"load.residual_mag": {"mean": 0.005, "std": 0.002}},
      "error_terms": {"rule": "typical"},
      "dut": {"s11_db": -30, "phase_deg": 0},
      "draws": 10000,
      "seed": 1,
      "output_unit": "db",
      "aut_columns": "frequency"
    }

``frequencies`` may also be a plain list of Hz values. ``beliefs`` entries
override the kit defaults; with ``"kit": null`` every source must be given.
``error_terms`` is ``{"rule": "typical" | "ideal"}`` or
``{"values": [{"e_d": [re, im], "e_s": [re, im], "e_r": [re, im]}, ...]}``.
``dut`` is a flat ``s11_db``/``phase_deg`` pair, a list ``"s11": [[re, im], ...]``
or ``"touchstone": "path.s1p"`` (relative to the scenario file; values are
interpolated onto the frequency grid, and the file's grid is used when
``frequencies`` is absent). ``aut_columns`` says how tier-two CSV columns map
to frequencies: by ``"frequency"`` label in Hz or by column ``"order"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bayes import GaussianBelief
from .errors import ScenarioError
from .formats import loads, parse_touchstone_s1p
from .montecarlo import SOURCE_NAMES, UNITS, Scenario, SourceBeliefs
from .vna import C_LIGHT

# 3.5 mm calibration-kit style definitions with type-B style priors
TYPICAL_KIT = {
    "open.c0": GaussianBelief(49.433e-15, 2.0e-15),
    "open.c1": GaussianBelief(-310.131e-27, 30e-27),
    "open.c2": GaussianBelief(23.1682e-36, 3e-36),
    "open.c3": GaussianBelief(-0.15966e-45, 0.02e-45),
    "open.offset_length": GaussianBelief(29.243e-12 * C_LIGHT, 0.05e-3),
    "short.l0": GaussianBelief(2.0765e-12, 0.5e-12),
    "short.l1": GaussianBelief(-108.54e-24, 10e-24),
    "short.l2": GaussianBelief(2.1705e-33, 0.3e-33),
    "short.l3": GaussianBelief(-0.01e-42, 0.005e-42),
    "short.offset_length": GaussianBelief(31.785e-12 * C_LIGHT, 0.05e-3),
    "load.residual_mag": GaussianBelief(0.005, 0.002),
    "tcc_mag": GaussianBelief(1.0, 1e-3),
    "tcc_phase": GaussianBelief(0.0, 5e-3),
    "rcc_mag": GaussianBelief(0.002, 0.001),
    "noise_floor_mag": GaussianBelief(0.0, 1e-3),
}
KITS = {"typical-3.5mm": TYPICAL_KIT}


def typical_error_terms(frequencies):
    """Smooth, plausible raw error terms of an uncorrected VNA port."""
    f = np.asarray(frequencies, dtype=float)
    e_d = 0.05 * np.exp(-2j * np.pi * f * 0.3e-9)
    e_s = 0.08 * np.exp(-2j * np.pi * f * 0.5e-9)
    e_r = 0.9 * np.exp(-2j * np.pi * f * 1.0e-9)
    return e_d, e_s, e_r


@dataclass
class ScenarioConfig:
    scenario: Scenario
    aut_columns: str = "frequency"
    path: Path | None = None


def _complex(value, what):
    try:
        re_, im_ = value
        return complex(float(re_), float(im_))
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} must be a [re, im] pair, got {value!r}") from None


def _frequencies(spec):
    if isinstance(spec, dict):
        try:
            start, stop, points = float(spec["start_hz"]), float(spec["stop_hz"]), int(spec["points"])
        except (KeyError, TypeError, ValueError):
            raise ScenarioError("frequencies needs numeric start_hz, stop_hz and points") from None
        if points < 1 or (points > 1 and not stop > start):
            raise ScenarioError("frequency range must have points >= 1 and stop > start")
        return np.linspace(start, stop, points) if points > 1 else np.array([start])
    if isinstance(spec, list):
        try:
            return np.array([float(f) for f in spec])
        except (TypeError, ValueError):
            raise ScenarioError("frequency list must be numeric") from None
    raise ScenarioError("frequencies must be a list or a {start_hz, stop_hz, points} object")


def _beliefs(doc):
    kit = doc.get("kit", "typical-3.5mm")
    if kit is None:
        base = {}
    elif kit in KITS:
        base = dict(KITS[kit])
    else:
        raise ScenarioError(f"unknown kit {kit!r}; known kits: {', '.join(KITS)}")
    for name, entry in (doc.get("beliefs") or {}).items():
        if name not in SOURCE_NAMES:
            raise ScenarioError(f"unknown uncertainty source {name!r}")
        try:
            base[name] = GaussianBelief(float(entry["mean"]), float(entry["std"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"belief {name!r} needs a mean and a positive std ({exc})") from None
    return SourceBeliefs(base)


def _dut(spec, freqs, base_dir):
    if not isinstance(spec, dict):
        raise ScenarioError("dut must be an object")
    if "touchstone" in spec:
        path = Path(base_dir, spec["touchstone"])
        sweep = parse_touchstone_s1p(path.read_text(encoding="utf-8"))
        if freqs is None:
            return sweep.frequencies, sweep.s11
        lo, hi = sweep.frequencies[0], sweep.frequencies[-1]
        if freqs[0] < lo * (1 - 1e-12) or freqs[-1] > hi * (1 + 1e-12):
            raise ScenarioError(f"{path.name} covers {lo:g}..{hi:g} Hz, not the scenario grid")
        re_ = np.interp(freqs, sweep.frequencies, sweep.s11.real)
        im_ = np.interp(freqs, sweep.frequencies, sweep.s11.imag)
        return freqs, re_ + 1j * im_
    if freqs is None:
        raise ScenarioError("frequencies are required unless the DUT comes from a Touchstone file")
    if "s11_db" in spec:
        mag = 10.0 ** (float(spec["s11_db"]) / 20.0)
        phase = np.radians(float(spec.get("phase_deg", 0.0)))
        return freqs, np.full(freqs.size, mag * np.exp(1j * phase))
    if "s11" in spec:
        values = np.array([_complex(v, "dut s11 value") for v in spec["s11"]])
        if values.size != freqs.size:
            raise ScenarioError(f"dut lists {values.size} values for {freqs.size} frequencies")
        return freqs, values
    raise ScenarioError("dut needs one of s11_db, s11 or touchstone")


def _error_terms(spec, freqs):
    spec = spec or {"rule": "typical"}
    if "values" in spec:
        rows = spec["values"]
        if len(rows) != freqs.size:
            raise ScenarioError(f"error_terms lists {len(rows)} entries for {freqs.size} frequencies")
        e_d = np.array([_complex(r["e_d"], "e_d") for r in rows])
        e_s = np.array([_complex(r["e_s"], "e_s") for r in rows])
        e_r = np.array([_complex(r["e_r"], "e_r") for r in rows])
        return e_d, e_s, e_r
    rule = spec.get("rule")
    if rule == "typical":
        return typical_error_terms(freqs)
    if rule == "ideal":
        n = freqs.size
        return np.zeros(n, complex), np.zeros(n, complex), np.ones(n, complex)
    raise ScenarioError(f"unknown error_terms rule {rule!r}")


def scenario_from_dict(doc: dict, base_dir=".") -> ScenarioConfig:
    freqs = _frequencies(doc["frequencies"]) if "frequencies" in doc else None
    freqs, dut = _dut(doc.get("dut", {}), freqs, base_dir)
    e_d, e_s, e_r = _error_terms(doc.get("error_terms"), freqs)
    unit = doc.get("output_unit", "db")
    if unit not in UNITS:
        raise ScenarioError(f"output_unit must be one of {UNITS}, got {unit!r}")
    aut_columns = doc.get("aut_columns", "frequency")
    if aut_columns not in ("frequency", "order"):
        raise ScenarioError(f"aut_columns must be 'frequency' or 'order', got {aut_columns!r}")
    try:
        scenario = Scenario(
            frequencies=freqs,
            beliefs=_beliefs(doc),
            e_d=e_d,
            e_s=e_s,
            e_r=e_r,
            dut_gamma=dut,
            draws=doc.get("draws", 10_000),
            seed=doc.get("seed", 0),
            output_unit=unit,
            ref_impedance=float(doc.get("reference_impedance", 50.0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from None
    return ScenarioConfig(scenario=scenario, aut_columns=aut_columns)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    doc = loads(path.read_text(encoding="utf-8"))
    try:
        config = scenario_from_dict(doc, base_dir=path.parent)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from None
    config.path = path
    return config
