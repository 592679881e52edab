"""Stratum-level ratios and Mantel-Haenszel summary indicators.

All summary indicators are ratios of weighted count sums, so they stay
defined when individual strata contain zeros; a stratum-level ratio that
hits a zero denominator is reported as ``None`` rather than raised.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

from .tables import StratifiedDataset, StratumTable


class UndefinedIndicatorError(ValueError):
    """An indicator's defining denominator sum is zero."""


class IndicatorKind(enum.Enum):
    MHRR = "MHRR"
    MHCR = "MHCR"
    MHOR = "MHOR"
    MHQ = "MHq"


@dataclass(frozen=True)
class StratumRatios:
    """Row risk ratio, column risk ratio, and odds ratio for one stratum.

    A field is ``None`` exactly when its defining fraction has a zero
    denominator or takes the 0/0 form.
    """

    row_rr: float | None
    col_rr: float | None
    odds_ratio: float | None


def _ratio(num_top: int, num_bot: int, den_top: int, den_bot: int) -> float | None:
    # (num_top/num_bot) / (den_top/den_bot); undefined when either inner
    # denominator is zero or the divisor fraction is zero.
    if num_bot == 0 or den_bot == 0 or den_top == 0:
        return None
    return (num_top / num_bot) / (den_top / den_bot)


def stratum_ratios(t: StratumTable) -> StratumRatios:
    """Compute the three association measures for a single stratum."""
    return StratumRatios(
        row_rr=_ratio(t.a, t.a + t.b, t.c, t.c + t.d),
        col_rr=_ratio(t.a, t.a + t.c, t.b, t.b + t.d),
        odds_ratio=_ratio(t.a, t.b, t.c, t.d),
    )


def _sum_ratio(ds: StratifiedDataset, num: Callable, den: Callable, name: str) -> float:
    total_num = math.fsum(num(t) for t in ds.strata)
    total_den = math.fsum(den(t) for t in ds.strata)
    if total_den == 0.0:
        raise UndefinedIndicatorError(f"{name} undefined: its denominator sum over all strata is zero")
    return total_num / total_den


def mh_row_risk_ratio(ds: StratifiedDataset) -> float:
    """Pooled row risk ratio: how much more likely group members are mentioned."""
    return _sum_ratio(
        ds,
        lambda t: t.a * (t.c + t.d) / t.n,
        lambda t: t.c * (t.a + t.b) / t.n,
        "MHRR",
    )


def mh_col_risk_ratio(ds: StratifiedDataset) -> float:
    """Pooled column risk ratio: how much more likely mentioned articles are in the group."""
    return _sum_ratio(
        ds,
        lambda t: t.a * (t.b + t.d) / t.n,
        lambda t: t.b * (t.a + t.c) / t.n,
        "MHCR",
    )


def mh_odds_ratio(ds: StratifiedDataset) -> float:
    """Pooled odds ratio of being mentioned for group members versus the rest."""
    return _sum_ratio(
        ds,
        lambda t: t.a * t.d / t.n,
        lambda t: t.b * t.c / t.n,
        "MHOR",
    )


def mhq(ds: StratifiedDataset) -> float:
    """Pooled column risk ratio under group-vs-world weights.

    Algebraically a weighted average of the stratum column risk ratios, with
    weights b*(a+c)/(a+b+n); for a single stratum it equals the column risk
    ratio exactly.
    """
    return _sum_ratio(
        ds,
        lambda t: t.a * (t.b + t.d) / (t.a + t.b + t.n),
        lambda t: t.b * (t.a + t.c) / (t.a + t.b + t.n),
        "MHq",
    )


_RAW_WEIGHT: dict[IndicatorKind, Callable[[StratumTable], float]] = {
    IndicatorKind.MHRR: lambda t: t.c * (t.a + t.b) / t.n,
    IndicatorKind.MHCR: lambda t: t.b * (t.a + t.c) / t.n,
    IndicatorKind.MHOR: lambda t: t.b * t.c / t.n,
    IndicatorKind.MHQ: lambda t: t.b * (t.a + t.c) / (t.a + t.b + t.n),
}

_STRATUM_RATIO: dict[IndicatorKind, str] = {
    IndicatorKind.MHRR: "row_rr",
    IndicatorKind.MHCR: "col_rr",
    IndicatorKind.MHOR: "odds_ratio",
    IndicatorKind.MHQ: "col_rr",
}

INDICATOR_FN: dict[IndicatorKind, Callable[[StratifiedDataset], float]] = {
    IndicatorKind.MHRR: mh_row_risk_ratio,
    IndicatorKind.MHCR: mh_col_risk_ratio,
    IndicatorKind.MHOR: mh_odds_ratio,
    IndicatorKind.MHQ: mhq,
}


def stratum_weights(ds: StratifiedDataset, kind: IndicatorKind) -> tuple[float, ...]:
    """Normalized per-stratum weights behind the weighted-average form of each indicator.

    The indicator equals the weighted average of the matching stratum ratios
    (see :func:`stratum_ratio_field`) whenever all those ratios are defined.
    """
    raw = [_RAW_WEIGHT[kind](t) for t in ds.strata]
    total = math.fsum(raw)
    if total == 0.0:
        raise UndefinedIndicatorError(f"{kind.value} weights undefined: every raw stratum weight is zero")
    return tuple(w / total for w in raw)


def stratum_ratio_field(kind: IndicatorKind) -> str:
    """Name of the :class:`StratumRatios` field averaged by the given indicator."""
    return _STRATUM_RATIO[kind]


def world_comparison_row(t: StratumTable) -> float:
    """Mention probability of the group relative to the whole stratum.

    Equals row_rr / (1 + f*(row_rr - 1)) with f the group's share of the
    stratum, and lies strictly between 1 and row_rr (or between row_rr and 1
    when row_rr < 1). Requires a defined row risk ratio; that already implies
    at least one mentioned article.
    """
    ratios = stratum_ratios(t)
    if ratios.row_rr is None:
        raise UndefinedIndicatorError(
            f"world comparison undefined for stratum {t.label!r}: the row risk ratio is undefined"
        )
    return (t.a / (t.a + t.b)) / (t.n_mentioned / t.n)


def transpose(ds: StratifiedDataset) -> StratifiedDataset:
    """Swap the group axis with the mention axis in every stratum.

    Exclusion diagnostics are carried along with their tables transposed;
    the recorded reasons still describe the original orientation.
    """
    return StratifiedDataset(
        tuple(t.transposed() for t in ds.strata),
        tuple((t.transposed(), reason) for t, reason in ds.excluded),
    )
