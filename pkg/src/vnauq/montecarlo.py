"""Monte Carlo propagation of source uncertainties through a simulated SOL cycle.

Each draw simulates one complete calibration and measurement: the three
standards are realised from the (posterior) source beliefs and measured
through the hidden true error box with fresh cable/connector errors, the
error terms are solved against the *nominal* standard definitions, and the
DUT is measured and corrected with those terms.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import vna
from .bayes import GaussianBelief, SampleSet, sample_skewness, skewness_std_error
from .errors import ExcessiveDiscardError, InsufficientSampleError, ScenarioError

log = logging.getLogger(__name__)

OPEN_PARAMS = ("c0", "c1", "c2", "c3", "offset_length")
SHORT_PARAMS = ("l0", "l1", "l2", "l3", "offset_length")
SOURCE_NAMES = (
    *(f"open.{p}" for p in OPEN_PARAMS),
    *(f"short.{p}" for p in SHORT_PARAMS),
    "load.residual_mag",
    "tcc_mag",
    "tcc_phase",
    "rcc_mag",
    "noise_floor_mag",
)

UNITS = ("db", "linear")
MAX_DISCARD_FRACTION = 0.01
MIN_DRAWS = 100
THREADS_ENV = "VNAUQ_THREADS"

# stream roles; the integer is part of the substream key
_ROLE_STANDARDS = 0
_ROLE_CONNECT = {"open": 1, "short": 2, "load": 3, "dut": 4}


class SourceBeliefs(Mapping[str, GaussianBelief]):
    """Belief for every uncertainty source, keyed by the names in SOURCE_NAMES."""

    def __init__(self, beliefs: Mapping[str, GaussianBelief]):
        missing = [n for n in SOURCE_NAMES if n not in beliefs]
        unknown = [n for n in beliefs if n not in SOURCE_NAMES]
        if missing:
            raise ScenarioError(f"no belief given for sources: {', '.join(missing)}")
        if unknown:
            raise ScenarioError(f"unknown uncertainty sources: {', '.join(unknown)}")
        self._beliefs = {n: beliefs[n] for n in SOURCE_NAMES}

    def __getitem__(self, name):
        return self._beliefs[name]

    def __iter__(self):
        return iter(self._beliefs)

    def __len__(self):
        return len(self._beliefs)

    def __repr__(self):
        return f"SourceBeliefs({self._beliefs!r})"

    def replace(self, updates: Mapping[str, GaussianBelief]) -> "SourceBeliefs":
        merged = dict(self._beliefs)
        merged.update(updates)
        return SourceBeliefs(merged)

    def nominal_open(self, ref_impedance=50.0):
        return {p: self[f"open.{p}"].mean for p in OPEN_PARAMS} | {"ref_impedance": ref_impedance}

    def nominal_short(self, ref_impedance=50.0):
        return {p: self[f"short.{p}"].mean for p in SHORT_PARAMS} | {"ref_impedance": ref_impedance}


@dataclass
class Scenario:
    frequencies: np.ndarray
    beliefs: SourceBeliefs
    e_d: np.ndarray
    e_s: np.ndarray
    e_r: np.ndarray
    dut_gamma: np.ndarray
    draws: int = 10_000
    seed: int = 0
    output_unit: str = "db"
    ref_impedance: float = 50.0

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float).ravel()
        nf = self.frequencies.size
        if nf == 0:
            raise ScenarioError("scenario has no frequencies")
        if np.any(self.frequencies <= 0) or np.any(np.diff(self.frequencies) <= 0):
            raise ScenarioError("frequencies must be positive and strictly increasing")
        for name in ("e_d", "e_s", "e_r", "dut_gamma"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=complex), (nf,)).copy()
            setattr(self, name, arr)
        if np.any(self.e_r == 0):
            raise ScenarioError("true reflection tracking must be nonzero")
        if int(self.draws) != self.draws or self.draws < MIN_DRAWS:
            raise ScenarioError(f"draws must be an integer >= {MIN_DRAWS}, got {self.draws}")
        self.draws = int(self.draws)
        if not 0 <= int(self.seed) < 2**64:
            raise ScenarioError("seed must fit in an unsigned 64-bit integer")
        self.seed = int(self.seed)
        if self.output_unit not in UNITS:
            raise ScenarioError(f"output_unit must be one of {UNITS}, got {self.output_unit!r}")
        if not isinstance(self.beliefs, SourceBeliefs):
            self.beliefs = SourceBeliefs(self.beliefs)

    def true_terms(self, index: int) -> vna.ErrorTerms:
        return vna.ErrorTerms(self.e_d[index], self.e_s[index], self.e_r[index])


@dataclass
class EmpiricalDistribution:
    frequency: float
    samples: np.ndarray
    discard_count: int = 0


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    variance: float
    skewness: float
    skew_std_error: float
    count: int

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass
class HistogramData:
    bin_edges: np.ndarray
    counts: np.ndarray
    overlay_normal: tuple = field(default=(0.0, 0.0))


def substream(seed: int, freq_index: int, role: int) -> np.random.Generator:
    """Counter-based generator keyed on (seed, frequency index, role).

    Draw ``i`` of a batch reads position ``i`` of each variate array, so
    every draw has a fixed address independent of scheduling.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(freq_index, role))
    return np.random.Generator(np.random.Philox(ss))


def _normal(rng, belief: GaussianBelief, size):
    return belief.mean + belief.std * rng.standard_normal(size)


def _draw_connection(rng, beliefs: SourceBeliefs, size):
    t_mag = _normal(rng, beliefs["tcc_mag"], size)
    t_phase = _normal(rng, beliefs["tcc_phase"], size)
    r_mag = np.abs(_normal(rng, beliefs["rcc_mag"], size))
    r_phase = rng.uniform(0.0, 2 * np.pi, size)
    n_mag = np.abs(_normal(rng, beliefs["noise_floor_mag"], size))
    n_phase = rng.uniform(0.0, 2 * np.pi, size)
    t_cc = t_mag * np.exp(1j * t_phase)
    ok = (t_mag > 0) & (np.abs(t_cc - 1) < 1) & (r_mag < 1)
    return t_cc, r_mag * np.exp(1j * r_phase), n_mag * np.exp(1j * n_phase), ok


def draw_cycles(scenario: Scenario, index: int, size: int):
    """Run ``size`` simulated calibrate-and-measure cycles at one frequency.

    Returns ``(samples, ok)``; draws with ``ok`` False hit an unphysical
    parameter or a singular denominator and must be discarded.
    """
    f = scenario.frequencies[index]
    b = scenario.beliefs
    z0 = scenario.ref_impedance
    rng = substream(scenario.seed, index, _ROLE_STANDARDS)

    open_draw = {p: _normal(rng, b[f"open.{p}"], size) for p in OPEN_PARAMS}
    short_draw = {p: _normal(rng, b[f"short.{p}"], size) for p in SHORT_PARAMS}
    load_mag = np.abs(_normal(rng, b["load.residual_mag"], size))
    load_phase = rng.uniform(0.0, 2 * np.pi, size)

    cap = open_draw["c0"] + f * (open_draw["c1"] + f * (open_draw["c2"] + f * open_draw["c3"]))
    ok = (cap >= 0) & (load_mag < 0.1)
    # rejected draws get an ideal open so the batch still evaluates
    for p in ("c0", "c1", "c2", "c3"):
        open_draw[p] = np.where(cap >= 0, open_draw[p], 0.0)
    actual = {
        "open": vna.gamma_open_params(f, **open_draw, ref_impedance=z0),
        "short": vna.gamma_short_params(f, **short_draw, ref_impedance=z0),
        "load": load_mag * np.exp(1j * load_phase),
    }
    g_nominal = np.array(
        [
            vna.gamma_open_params(f, **b.nominal_open(z0)),
            vna.gamma_short_params(f, **b.nominal_short(z0)),
            0j,
        ]
    )

    e_d, e_s, e_r = scenario.e_d[index], scenario.e_s[index], scenario.e_r[index]
    measured = {}
    for name in ("open", "short", "load", "dut"):
        crng = substream(scenario.seed, index, _ROLE_CONNECT[name])
        t_cc, r_cc, noise, c_ok = _draw_connection(crng, b, size)
        gamma = scenario.dut_gamma[index] if name == "dut" else actual[name]
        m, m_ok = vna.raw_measurement_unchecked(gamma, e_d, e_s, e_r, t_cc, r_cc, noise)
        measured[name] = m
        ok &= c_ok & m_ok

    m_std = np.stack([measured["open"], measured["short"], measured["load"]], axis=-1)
    s_d, s_s, s_r, s_ok = vna.solve_error_terms_unchecked(m_std, g_nominal)
    corrected, c_ok = vna.calibrate_unchecked(measured["dut"], s_d, s_s, s_r)
    ok &= s_ok & c_ok

    mag = np.abs(corrected)
    if scenario.output_unit == "db":
        with np.errstate(divide="ignore"):
            out = 20.0 * np.log10(mag)
    else:
        out = mag
    ok &= np.isfinite(out)
    return out, ok


def simulate_frequency(scenario: Scenario, index: int) -> EmpiricalDistribution:
    samples, ok = draw_cycles(scenario, index, scenario.draws)
    discards = int(np.count_nonzero(~ok))
    f = float(scenario.frequencies[index])
    if discards / scenario.draws >= MAX_DISCARD_FRACTION:
        raise ExcessiveDiscardError(
            f"{discards} of {scenario.draws} draws rejected at {f:g} Hz "
            f"(budget {MAX_DISCARD_FRACTION:.0%})"
        )
    if discards:
        log.debug("%d draws discarded at %g Hz", discards, f)
    return EmpiricalDistribution(frequency=f, samples=samples[ok], discard_count=discards)


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, env)
    return os.cpu_count() or 1


def run_monte_carlo(scenario: Scenario, workers: int | None = None) -> list[EmpiricalDistribution]:
    """Simulate every frequency of the scenario; results are in frequency order."""
    workers = worker_count() if workers is None else max(1, workers)
    indices = range(scenario.frequencies.size)
    if workers == 1:
        return [simulate_frequency(scenario, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: simulate_frequency(scenario, i), indices))


def summarize(dist: EmpiricalDistribution | Sequence[float]) -> DistributionSummary:
    """Mean, variance (n - 1), skewness and its normal-theory standard error."""
    values = dist.samples if isinstance(dist, EmpiricalDistribution) else dist
    s = SampleSet(values)
    if s.n < 9:
        raise InsufficientSampleError(f"summary needs at least 9 samples, got {s.n}")
    var = float(np.var(s.values, ddof=1))
    skew = sample_skewness(s) if var > 0 else 0.0
    return DistributionSummary(
        mean=s.mean, variance=var, skewness=skew, skew_std_error=skewness_std_error(s.n), count=s.n
    )


def histogram(dist: EmpiricalDistribution | Sequence[float], bins: int) -> HistogramData:
    """Equal-width histogram over [min, max] with a normal reference overlay.

    A value on an interior edge counts in the bin above it; the maximum
    lands in the last bin.
    """
    values = np.asarray(dist.samples if isinstance(dist, EmpiricalDistribution) else dist, float)
    if bins < 5:
        raise ValueError(f"need at least 5 bins, got {bins}")
    if values.size < bins:
        raise InsufficientSampleError(f"{values.size} samples cannot fill {bins} bins")
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        edges = np.linspace(lo, hi, bins + 1)
    else:
        # all samples equal: any positive width keeps the edges increasing
        edges = lo + np.arange(bins + 1) * max(abs(lo), 1.0) * 1e-9
    idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return HistogramData(bin_edges=edges, counts=counts, overlay_normal=(float(values.mean()), std))
