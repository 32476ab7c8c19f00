"""Full-multiplication counters for the tone-grid pipelines.

The orchestration code reports its work here as it happens: one call per
decomposition, per scaling pass, per interpolation stage. Charges follow
the same unit as the cost model (one full complex multiplication), with
scalings enumerated structurally:

  * scale-chain products and the entry scalings of a forward map, minus
    the first-column map which reuses the original column unchanged;
  * unscaling of k leading columns, minus the first diagonal entry whose
    recovery is a pure square root;
  * the rank-(k-1) cancellation multiply of a reduction step.

These enumerations are deliberately independent of the closed forms used
by the cost module for decomposition charges, so agreement between a
counter-instrumented run and the model is a real cross-check of the
schedule, not an identity. The one exception is spelled out in cost.py:
the multi-step MMSE composition reuses map_charge/demap_charge/
reduction_charge below, because no independent closed form exists for it.
"""

from __future__ import annotations

from fractions import Fraction


def map_charge(rows: int, m: int, k0: int) -> Fraction:
    """Forward-map charge for columns k0..m of an m-column system whose
    scaled columns carry ``rows`` entries each.

    Chain: two products per column (previous running product times the
    diagonal entry, then times the diagonal again), one short for k0 = 1
    where the chain starts at 1. Entries: every scaled column entry and
    every scaled row entry except the diagonal, which the chain already
    produced; for k0 = 1 the first scaled column equals the original
    column and costs nothing.
    """
    if k0 < 1 or k0 > m:
        raise ValueError(f"k0 must lie in 1..{m}, got {k0}")
    ncols = m - k0 + 1
    chain = 2 * ncols - (1 if k0 == 1 else 0)
    q_entries = rows * ncols - (rows if k0 == 1 else 0)
    r_entries = sum(m - j + 1 for j in range(k0, m + 1)) - ncols
    return Fraction(chain + q_entries + r_entries)


def demap_charge(rows: int, m: int, k: int) -> Fraction:
    """Unscaling charge for the leading k columns (rows per column as
    given, scaled row j spanning columns j..m).

    One product per column beyond the first builds the pairwise diagonal
    products under the inverse square roots; each scaled entry costs one
    multiplication except the leading diagonal entry, which is recovered
    by a square root alone.
    """
    if k < 1 or k > m:
        raise ValueError(f"k must lie in 1..{m}, got {k}")
    entries = rows * k + sum(m - j + 1 for j in range(1, k + 1)) - 1
    return Fraction(entries + (k - 1))


def reduction_charge(rows: int, k: int, width: int) -> Fraction:
    """Charge of cancelling k-1 known columns from a rows x width block:
    the (rows x (k-1)) @ ((k-1) x width) product, additions free."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return Fraction(rows * (k - 1) * width)


class MultCounter:
    """Per-task running totals, exact rationals throughout.

    Tasks mirror the cost model's rows (interp_H, interp_QR, qr, map,
    demap, reduction); anything else (for example the rank-recovery
    fallback) lands under its own key so the standard rows stay clean.
    """

    def __init__(self) -> None:
        self.tasks: dict[str, Fraction] = {}

    def add(self, task: str, amount: Fraction | int) -> None:
        self.tasks[task] = self.tasks.get(task, Fraction(0)) + Fraction(amount)

    def get(self, task: str) -> Fraction:
        return self.tasks.get(task, Fraction(0))

    @property
    def total(self) -> Fraction:
        return sum(self.tasks.values(), Fraction(0))

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.tasks)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.tasks.items()))
        return f"MultCounter({inner})"


class _NullCounter(MultCounter):
    """Shared sink for uninstrumented runs."""

    def add(self, task: str, amount: Fraction | int) -> None:  # noqa: ARG002
        return


NULL_COUNTER = _NullCounter()


def active(counter: MultCounter | None) -> MultCounter:
    """The counter itself, or a do-nothing stand-in."""
    return counter if counter is not None else NULL_COUNTER
