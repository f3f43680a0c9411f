"""Python access to the abrsim simulator core.

Exact rates (max-min allocations, MIT fair shares) are returned as
``fractions.Fraction``; everything measured by a simulation run is a float.
"""

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import _abrsim
from ._abrsim import (
    CSV_VERSION,
    ConfigError,
    DegenerateOptimal,
    InsufficientBuffer,
    adaptive_allocate,
    beat_down_probability,
    fairness_index,
    static_credit_size,
)

__all__ = [
    "CSV_VERSION",
    "ConfigError",
    "DegenerateOptimal",
    "InsufficientBuffer",
    "adaptive_allocate",
    "beat_down_probability",
    "fairness_index",
    "max_min",
    "mit_fair_share",
    "oracle",
    "run",
    "serialize",
    "static_credit_size",
]


def _exact(x) -> str:
    if isinstance(x, float):
        raise TypeError("exact rates must be int, Fraction or str, not float")
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def max_min(
    links: Mapping[str, object],
    vcs: Iterable[tuple],
) -> list[Fraction]:
    """Max-min allocation.

    ``links`` maps link id to capacity. Each vc is ``(id, [link ids])`` or
    ``(id, [link ids], demand)``. Returns one Fraction per vc, in order.
    """
    link_args = [(k, _exact(v)) for k, v in links.items()]
    vc_args = []
    for vc in vcs:
        demand = vc[2] if len(vc) > 2 else None
        vc_args.append((str(vc[0]), list(vc[1]), None if demand is None else _exact(demand)))
    return [Fraction(x) for x in _abrsim.max_min(link_args, vc_args)]


def mit_fair_share(link_bw, rates: Sequence) -> tuple[Fraction, int, int]:
    """(fair share, recomputations, underloading vcs) of the MIT iteration."""
    share, recomputations, under = _abrsim.mit_fair_share_detailed(_exact(link_bw), [_exact(r) for r in rates])
    return Fraction(share), recomputations, under


def oracle(config_text: str) -> dict[int, Fraction]:
    """Max-min rates in cells/s of the scenario's vcs, keyed by vc id."""
    return {vc: Fraction(x) for vc, x in _abrsim.oracle(config_text)}


def run(config_text: str, seed: Optional[int] = None, duration_ms: Optional[float] = None) -> dict:
    """Runs a scenario given as configuration text and returns its headline,
    the metrics CSV and the report text."""
    return _abrsim.run(config_text, seed, duration_ms)


def serialize(config_text: str) -> str:
    """Fully expanded configuration text equivalent to ``config_text``."""
    return _abrsim.serialize(config_text)
