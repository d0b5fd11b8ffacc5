"""Result records and their JSON documents.

Three document kinds are written, one per pipeline step:

``vnauq-posteriors``
    tier-one beliefs after fusion, one entry per uncertainty source.
``vnauq-simulation``
    the Monte Carlo prior per frequency: summary statistics, discard count
    and histogram data, plus the tier-one beliefs that drove it.
``vnauq-report``
    the final per-frequency tier-two result. Schema::

        format, schema_version, tool_version, seed, draws, output_unit
        tier_one: [{source, prior_mean, prior_std, posterior_mean,
                    posterior_std, n, pass_through}]
        results:  [{frequency_hz, discard_count,
                    mc_prior: {mean, std, variance, skewness,
                               skew_std_error, count},
                    aut_n,
                    posterior: {mean, variance, skewness},
                    beta: [beta_1, beta_2, beta_3]}]

All floats are written with 17 significant digits so a document read back
and rewritten is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bayes import GaussianBelief
from .errors import ParseError
from .formats import dumps, loads
from .montecarlo import DistributionSummary, HistogramData

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FusedSource:
    name: str
    prior: GaussianBelief
    posterior: GaussianBelief
    n: int = 0
    pass_through: bool = True

    def to_json(self):
        return {
            "source": self.name,
            "prior_mean": self.prior.mean,
            "prior_std": self.prior.std,
            "posterior_mean": self.posterior.mean,
            "posterior_std": self.posterior.std,
            "n": self.n,
            "pass_through": self.pass_through,
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            name=d["source"],
            prior=GaussianBelief(d["prior_mean"], d["prior_std"]),
            posterior=GaussianBelief(d["posterior_mean"], d["posterior_std"]),
            n=int(d["n"]),
            pass_through=bool(d["pass_through"]),
        )


def _summary_to_json(s: DistributionSummary):
    return {
        "mean": s.mean,
        "std": s.std,
        "variance": s.variance,
        "skewness": s.skewness,
        "skew_std_error": s.skew_std_error,
        "count": s.count,
    }


def _summary_from_json(d) -> DistributionSummary:
    return DistributionSummary(
        mean=float(d["mean"]),
        variance=float(d["variance"]),
        skewness=float(d["skewness"]),
        skew_std_error=float(d["skew_std_error"]),
        count=int(d["count"]),
    )


@dataclass
class FrequencySimulation:
    frequency: float
    summary: DistributionSummary
    discard_count: int
    histogram: HistogramData | None = None


@dataclass
class SimulationResult:
    seed: int
    draws: int
    output_unit: str
    tier_one: list[FusedSource]
    frequencies: list[FrequencySimulation]
    tool_version: str = __version__


@dataclass
class FrequencyResult:
    frequency: float
    discard_count: int
    mc_prior: DistributionSummary
    aut_n: int
    posterior_mean: float
    posterior_variance: float
    posterior_skewness: float
    beta: tuple[float, float, float]


@dataclass
class Report:
    seed: int
    draws: int
    output_unit: str
    tier_one: list[FusedSource] = field(default_factory=list)
    results: list[FrequencyResult] = field(default_factory=list)
    tool_version: str = __version__


def write_posteriors(sources: list[FusedSource]) -> str:
    return dumps(
        {
            "format": "vnauq-posteriors",
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "sources": [s.to_json() for s in sources],
        }
    )


def read_posteriors(text: str) -> list[FusedSource]:
    doc = loads(text, "vnauq-posteriors")
    try:
        return [FusedSource.from_json(d) for d in doc["sources"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed posteriors document: {exc}") from None


def write_simulation(sim: SimulationResult) -> str:
    entries = []
    for fs in sim.frequencies:
        entry = {
            "frequency_hz": fs.frequency,
            "discard_count": fs.discard_count,
            "summary": _summary_to_json(fs.summary),
        }
        if fs.histogram is not None:
            h = fs.histogram
            entry["histogram"] = {
                "bin_edges": [float(e) for e in h.bin_edges],
                "counts": [int(c) for c in h.counts],
                "overlay_normal": {"mean": h.overlay_normal[0], "std": h.overlay_normal[1]},
            }
        entries.append(entry)
    return dumps(
        {
            "format": "vnauq-simulation",
            "schema_version": SCHEMA_VERSION,
            "tool_version": sim.tool_version,
            "seed": sim.seed,
            "draws": sim.draws,
            "output_unit": sim.output_unit,
            "tier_one": [s.to_json() for s in sim.tier_one],
            "frequencies": entries,
        }
    )


def read_simulation(text: str) -> SimulationResult:
    doc = loads(text, "vnauq-simulation")
    try:
        freqs = []
        for e in doc["frequencies"]:
            hist = None
            if "histogram" in e:
                h = e["histogram"]
                hist = HistogramData(
                    bin_edges=np.array(h["bin_edges"], dtype=float),
                    counts=np.array(h["counts"], dtype=int),
                    overlay_normal=(h["overlay_normal"]["mean"], h["overlay_normal"]["std"]),
                )
            freqs.append(
                FrequencySimulation(
                    frequency=float(e["frequency_hz"]),
                    summary=_summary_from_json(e["summary"]),
                    discard_count=int(e["discard_count"]),
                    histogram=hist,
                )
            )
        return SimulationResult(
            seed=int(doc["seed"]),
            draws=int(doc["draws"]),
            output_unit=doc["output_unit"],
            tier_one=[FusedSource.from_json(d) for d in doc["tier_one"]],
            frequencies=freqs,
            tool_version=doc["tool_version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed simulation document: {exc}") from None


def write_report(report: Report) -> str:
    """Serialize a final report; the text is fully determined by ``report``."""
    results = [
        {
            "frequency_hz": r.frequency,
            "discard_count": r.discard_count,
            "mc_prior": _summary_to_json(r.mc_prior),
            "aut_n": r.aut_n,
            "posterior": {
                "mean": r.posterior_mean,
                "variance": r.posterior_variance,
                "skewness": r.posterior_skewness,
            },
            "beta": [float(b) for b in r.beta],
        }
        for r in report.results
    ]
    return dumps(
        {
            "format": "vnauq-report",
            "schema_version": SCHEMA_VERSION,
            "tool_version": report.tool_version,
            "seed": report.seed,
            "draws": report.draws,
            "output_unit": report.output_unit,
            "tier_one": [s.to_json() for s in report.tier_one],
            "results": results,
        }
    )


def read_report(text: str) -> Report:
    doc = loads(text, "vnauq-report")
    try:
        results = [
            FrequencyResult(
                frequency=float(r["frequency_hz"]),
                discard_count=int(r["discard_count"]),
                mc_prior=_summary_from_json(r["mc_prior"]),
                aut_n=int(r["aut_n"]),
                posterior_mean=float(r["posterior"]["mean"]),
                posterior_variance=float(r["posterior"]["variance"]),
                posterior_skewness=float(r["posterior"]["skewness"]),
                beta=tuple(float(b) for b in r["beta"]),
            )
            for r in doc["results"]
        ]
        return Report(
            seed=int(doc["seed"]),
            draws=int(doc["draws"]),
            output_unit=doc["output_unit"],
            tier_one=[FusedSource.from_json(d) for d in doc["tier_one"]],
            results=results,
            tool_version=doc["tool_version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed report document: {exc}") from None
