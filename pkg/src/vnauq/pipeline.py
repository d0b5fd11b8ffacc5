"""The three evaluation steps as plain functions over in-memory records."""

from __future__ import annotations

import logging
from typing import Iterable, Mapping

import numpy as np

from .bayes import (
    GaussianBelief,
    PriorSummary,
    SampleSet,
    credibility_moments,
    posterior_normal,
    posterior_skewness,
)
from .errors import ScenarioError, VnauqError
from .formats import SampleTable
from .montecarlo import Scenario, histogram, run_monte_carlo, summarize
from .report import FrequencyResult, FrequencySimulation, FusedSource, Report, SimulationResult

log = logging.getLogger(__name__)


class FuseError(VnauqError, ValueError):
    pass


class CoverageError(ScenarioError):
    pass


class GridMismatchError(VnauqError, ValueError):
    pass


def fuse(priors: Mapping[str, GaussianBelief], tables: Iterable[SampleTable] = ()) -> list[FusedSource]:
    """Tier-one fusion of every source prior with its sample column, if any."""
    samples: dict[str, SampleSet] = {}
    for table in tables:
        for name, column in table.items():
            if name in samples:
                raise FuseError(f"source {name!r} has samples in more than one file")
            if name not in priors:
                raise FuseError(f"samples given for unknown source {name!r}")
            samples[name] = column

    fused = []
    for name, prior in priors.items():
        if name not in samples:
            fused.append(FusedSource(name, prior, prior, n=0, pass_through=True))
            continue
        try:
            post = posterior_normal(prior, samples[name])
        except VnauqError as exc:
            raise FuseError(f"source {name!r}: {exc}") from exc
        fused.append(FusedSource(name, prior, post.as_belief(), n=samples[name].n, pass_through=False))
    return fused


def simulate(scenario: Scenario, tier_one: list[FusedSource], bins: int = 30, workers=None) -> SimulationResult:
    """Monte Carlo step with the scenario beliefs replaced by tier-one posteriors."""
    posteriors = {s.name: s.posterior for s in tier_one}
    missing = [n for n in scenario.beliefs if n not in posteriors]
    if missing:
        raise CoverageError(f"no tier-one posterior for sources: {', '.join(missing)}")
    run = Scenario(
        frequencies=scenario.frequencies,
        beliefs=scenario.beliefs.replace({n: posteriors[n] for n in scenario.beliefs}),
        e_d=scenario.e_d,
        e_s=scenario.e_s,
        e_r=scenario.e_r,
        dut_gamma=scenario.dut_gamma,
        draws=scenario.draws,
        seed=scenario.seed,
        output_unit=scenario.output_unit,
        ref_impedance=scenario.ref_impedance,
    )
    per_freq = []
    for dist in run_monte_carlo(run, workers=workers):
        per_freq.append(
            FrequencySimulation(
                frequency=dist.frequency,
                summary=summarize(dist),
                discard_count=dist.discard_count,
                histogram=histogram(dist, bins),
            )
        )
    return SimulationResult(
        seed=run.seed,
        draws=run.draws,
        output_unit=run.output_unit,
        tier_one=list(tier_one),
        frequencies=per_freq,
    )


def match_aut_columns(table: SampleTable, frequencies, mode: str = "frequency") -> list[SampleSet]:
    """Order the AUT sample columns along the simulated frequency grid."""
    frequencies = np.asarray(frequencies, dtype=float)
    names = list(table)
    if len(names) != frequencies.size:
        raise GridMismatchError(
            f"AUT table has {len(names)} columns but the prior has {frequencies.size} frequencies"
        )
    if mode == "order":
        return [table[n] for n in names]
    by_freq = {}
    for name in names:
        try:
            by_freq[float(name)] = table[name]
        except ValueError:
            raise GridMismatchError(f"AUT column {name!r} is not a frequency in Hz") from None
    labels = np.array(sorted(by_freq))
    out = []
    for f in frequencies:
        i = int(np.argmin(np.abs(labels - f)))
        if abs(labels[i] - f) > 1e-9 * abs(f):
            raise GridMismatchError(f"no AUT column for {f:g} Hz")
        out.append(by_freq[labels[i]])
    return out


def evaluate(sim: SimulationResult, aut: list[SampleSet]) -> Report:
    """Tier-two fusion of the Monte Carlo prior with repeated AUT measurements."""
    if len(aut) != len(sim.frequencies):
        raise GridMismatchError(
            f"{len(aut)} AUT sample sets for {len(sim.frequencies)} simulated frequencies"
        )
    results = []
    for fs, samples in zip(sim.frequencies, aut):
        s = fs.summary
        if not s.variance > 0:
            raise ScenarioError(f"Monte Carlo prior at {fs.frequency:g} Hz has zero variance")
        post = posterior_normal(GaussianBelief(s.mean, s.std), samples)
        prior = PriorSummary(s.mean, s.std, s.skewness, s.skew_std_error)
        ws = credibility_moments(prior, samples)
        results.append(
            FrequencyResult(
                frequency=fs.frequency,
                discard_count=fs.discard_count,
                mc_prior=s,
                aut_n=samples.n,
                posterior_mean=post.mean,
                posterior_variance=post.variance,
                posterior_skewness=posterior_skewness(ws),
                beta=tuple(float(b) for b in ws.beta),
            )
        )
    return Report(
        seed=sim.seed,
        draws=sim.draws,
        output_unit=sim.output_unit,
        tier_one=list(sim.tier_one),
        results=results,
        tool_version=sim.tool_version,
    )
