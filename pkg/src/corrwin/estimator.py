"""Timing and space arithmetic comparing slow-cycle platforms (trapped ions)
against a fast-cycle superconducting baseline.

All durations are exact rationals internally; rounding to display precision
happens only in the CLI report.  gamma is the QEC-round-time ratio between the
two platforms, eta the reaction-time ratio.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

BASE_LOOKUP_MS = Fraction(14)
BASE_ADDITION_MS = Fraction(22)
SC_ROUND_US = Fraction(1)
SC_LOOKUP_ADDITION_ROUNDS = 36_000  # 36 ms at 1 us per round


class EstimatorError(ValueError):
    pass


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class PlatformParams:
    gamma: Fraction
    eta: Fraction
    d: int = 27
    p: float = 1e-3
    p_th: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "gamma", _frac(self.gamma))
        object.__setattr__(self, "eta", _frac(self.eta))
        if self.gamma <= 0 or self.eta <= 0:
            raise EstimatorError("gamma and eta must be positive")
        if self.d <= 0:
            raise EstimatorError("distance must be positive")
        if not (100 <= self.gamma <= 1000) or not (2 <= self.eta <= 20):
            warnings.warn(
                "gamma/eta outside the studied regime (100..1000, 2..20)",
                stacklevel=2,
            )

    def consistent_scaling(self, ratio: int = 50) -> bool:
        """True when gamma and eta follow the assumed proportional scaling."""
        return self.gamma == ratio * self.eta


def lookup_time(params: PlatformParams) -> Fraction:
    """Lookup-phase duration in ms: the base time slowed by gamma but sped up
    by the single-round multi-target CNOT (a factor of d)."""
    return BASE_LOOKUP_MS * params.gamma / params.d


def addition_time(params: PlatformParams) -> Fraction:
    """Addition-phase duration in ms: reaction-limited, so it scales with eta."""
    return BASE_ADDITION_MS * params.eta


def total_ratio(params: PlatformParams) -> Fraction:
    """Combined lookup+addition time relative to the fast-cycle baseline."""
    return (lookup_time(params) + addition_time(params)) / (BASE_LOOKUP_MS + BASE_ADDITION_MS)


def qec_rounds(params: PlatformParams, platform: str) -> Fraction:
    """QEC rounds spent per lookup+addition on the given platform."""
    if platform == "superconducting":
        return Fraction(SC_LOOKUP_ADDITION_ROUNDS)
    if platform == "ion":
        round_time_us = params.gamma * SC_ROUND_US
        lookup_us = lookup_time(params) * 1000
        addition_us = addition_time(params) * 1000
        return (lookup_us + addition_us) / round_time_us
    raise EstimatorError(f"unknown platform {platform!r}")


def error_rate_reduction(params: PlatformParams) -> Fraction:
    """Cumulative logical-error advantage from running fewer QEC rounds."""
    return Fraction(SC_LOOKUP_ADDITION_ROUNDS) / qec_rounds(params, "ion")


def logical_error_per_round(d: int, p: float, p_th: float) -> float:
    """Per-round logical error scaling (p/p_th)^((d+1)/2), constant dropped."""
    if p >= p_th:
        raise EstimatorError("scaling law requires p < p_th")
    return (p / p_th) ** ((d + 1) // 2)


def space_reduction(d_from: int, d_to: int) -> Fraction:
    """Fractional physical-qubit saving when shrinking the code distance."""
    if d_to > d_from:
        raise EstimatorError("d_to must not exceed d_from")
    for d in (d_from, d_to):
        if d % 2 == 0 or d < 3:
            raise EstimatorError(f"distance must be odd and >= 3, got {d}")
    patch = lambda d: 2 * d * d - 1  # data plus measure qubits per rotated patch
    return 1 - Fraction(patch(d_to), patch(d_from))


@dataclass(frozen=True)
class FactoryModelConfig:
    """Accounting knobs for the magic-state factory space comparison.

    The composition below 99% is reconstruction-dependent; every intermediate
    is reported so the accounting can be audited or re-parametrised.
    """

    distill_logical_qubits: int = 16 * 113
    convert_logical_qubits: int = 6 * 113
    distill_reduction: Fraction = Fraction(5)
    convert_reduction: Fraction | None = None  # defaults to the code distance
    rate_expansion: Fraction | None = None  # defaults to gamma/eta
    computational_qubits: int = 6200


def factory_space_model(params: PlatformParams, config: FactoryModelConfig | None = None) -> dict:
    """Composed factory-space ratio against the baseline, with intermediates."""
    config = config or FactoryModelConfig()
    convert_reduction = (
        _frac(config.convert_reduction)
        if config.convert_reduction is not None
        else Fraction(params.d)
    )
    rate_expansion = (
        _frac(config.rate_expansion)
        if config.rate_expansion is not None
        else params.gamma / params.eta
    )
    distill_after = Fraction(config.distill_logical_qubits) / _frac(config.distill_reduction)
    convert_after = Fraction(config.convert_logical_qubits) / convert_reduction
    baseline = Fraction(config.distill_logical_qubits + config.convert_logical_qubits)
    factory_ratio = (distill_after + convert_after) * rate_expansion / baseline
    return {
        "distill_baseline": Fraction(config.distill_logical_qubits),
        "convert_baseline": Fraction(config.convert_logical_qubits),
        "distill_after_reduction": distill_after,
        "convert_after_reduction": convert_after,
        "rate_expansion": rate_expansion,
        "factory_ratio": factory_ratio,
        "reconstruction_dependent": True,
    }


def cat_state_depth(n: int) -> int:
    """CNOT layers to fan a single qubit out to an n-qubit cat state."""
    if n < 1:
        raise EstimatorError("cat state needs at least one qubit")
    return (n - 1).bit_length()


def report(params: PlatformParams) -> str:
    """Human-readable summary of every headline quantity."""
    lt, at = lookup_time(params), addition_time(params)
    lines = [
        f"gamma={float(params.gamma):g} eta={float(params.eta):g} d={params.d}",
        f"lookup time: {float(lt):.1f} ms",
        f"addition time: {float(at):.1f} ms",
        f"total ratio vs baseline: {float(total_ratio(params)):.2f}",
        f"QEC rounds (slow-cycle platform): {float(qec_rounds(params, 'ion')):.1f}",
        f"QEC rounds (baseline): {SC_LOOKUP_ADDITION_ROUNDS}",
        f"error-rate reduction: {float(error_rate_reduction(params)):.1f}x",
        f"space reduction 27->25: {float(space_reduction(27, 25)) * 100:.1f}%",
    ]
    fm = factory_space_model(params)
    lines.append(
        "factory model: distill {}->{} convert {}->{} rate x{} ratio {:.3f} "
        "(reconstruction-dependent)".format(
            fm["distill_baseline"],
            float(fm["distill_after_reduction"]),
            fm["convert_baseline"],
            float(fm["convert_after_reduction"]),
            float(fm["rate_expansion"]),
            float(fm["factory_ratio"]),
        )
    )
    return "\n".join(lines) + "\n"
