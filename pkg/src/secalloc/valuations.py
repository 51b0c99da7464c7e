"""Interdependent valuation functions over bundles of items.

Every agent holds a single nonnegative signal; a valuation maps a
(bundle, signal profile) pair to a nonnegative value.  The constructive
family here builds bundle values out of :class:`SignalWeight` atoms —
capped affine functions of the signal profile with nonnegative
coefficients.  Uncapped weights are linear in the signals (hence XOS over
signals); capped weights stay subadditive over signals.

Three spec families are provided:

* :class:`XOSValuation` — max over additive clauses of per-item weights.
* :class:`UnitDemandValuation` — best single item in the bundle.
* :class:`SeparableValuation` — unit-demand with per-item weight split
  into an own-signal part and an others'-signals part (the structure the
  truthful matching mechanism requires).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Real
from typing import Callable, Iterable, Mapping, Sequence, Union

from .errors import ValidationError

__all__ = [
    "SignalProfile",
    "SignalWeight",
    "ValuationSpec",
    "XOSValuation",
    "UnitDemandValuation",
    "SeparableValuation",
    "Instance",
    "mask_signals",
    "eval_valuation",
    "bundle_value_table",
]


def _check_nonneg(x, what: str):
    if isinstance(x, float) and math.isnan(x):
        raise ValidationError(f"{what} must not be NaN")
    if x < 0:
        raise ValidationError(f"{what} must be nonnegative, got {x!r}")


@dataclass(frozen=True)
class SignalProfile:
    """The vector of agent signals; entry i is agent i's signal.

    Values may be floats or Fractions; exact-arithmetic paths rely on the
    latter flowing through untouched.
    """

    values: tuple

    def __init__(self, values: Iterable):
        vals = tuple(values)
        for i, v in enumerate(vals):
            _check_nonneg(v, f"signal {i}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int):
        return self.values[i]

    def mask(self, agents: Iterable[int]) -> "SignalProfile":
        return mask_signals(self, agents)


def mask_signals(profile: SignalProfile, agents: Iterable[int]) -> SignalProfile:
    """Zero out the signals of every agent outside ``agents``."""
    keep = set(agents)
    n = len(profile)
    bad = [i for i in keep if not (0 <= i < n)]
    if bad:
        raise ValidationError(f"agent ids {sorted(bad)} out of range for n={n}")
    zero = 0 * profile.values[0] if n else 0
    return SignalProfile(v if i in keep else zero for i, v in enumerate(profile.values))


@dataclass(frozen=True)
class SignalWeight:
    """Capped affine function of the signal profile.

    w(s) = min(cap, const + sum_k coeffs[k] * s[k]); no clamping when cap
    is None.  Coefficients and the constant must be nonnegative, which
    makes every weight monotone in the signals.
    """

    coeffs: tuple
    const: Real = 0.0
    cap: Union[Real, None] = None

    def __init__(self, coeffs: Iterable, const=0.0, cap=None):
        cs = tuple(coeffs)
        for k, c in enumerate(cs):
            _check_nonneg(c, f"coeffs[{k}]")
        _check_nonneg(const, "const")
        if cap is not None:
            _check_nonneg(cap, "cap")
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "const", const)
        object.__setattr__(self, "cap", cap)

    def __call__(self, signals: Sequence):
        total = self.const + sum(c * s for c, s in zip(self.coeffs, signals))
        if self.cap is not None and total > self.cap:
            return self.cap
        return total

    def exact(self) -> "SignalWeight":
        """Lift all parameters to Fractions (float mixing would demote them)."""
        from fractions import Fraction

        return SignalWeight(
            (Fraction(c) for c in self.coeffs),
            Fraction(self.const),
            None if self.cap is None else Fraction(self.cap),
        )


class ValuationSpec:
    """Base for the constructive valuation families.

    Subclasses expose ``num_agents``/``num_items``, per-bundle evaluation
    via :meth:`value`, and a per-item scalar hook used by the table
    builders.
    """

    num_agents: int
    num_items: int

    def value(self, bundle: Iterable[int], signals: Sequence):
        raise NotImplementedError

    def _validate_bundle(self, bundle: Iterable[int]) -> frozenset:
        b = frozenset(bundle)
        bad = [j for j in b if not (0 <= j < self.num_items)]
        if bad:
            raise ValidationError(
                f"item ids {sorted(bad)} out of range for m={self.num_items}"
            )
        return b

    def _validate_signals(self, signals: Sequence):
        if len(signals) != self.num_agents:
            raise ValidationError(
                f"signal profile has length {len(signals)}, expected {self.num_agents}"
            )


def _as_clause(clause: Mapping[int, SignalWeight]) -> tuple:
    items = sorted(clause)
    return tuple((j, clause[j]) for j in items)


@dataclass(frozen=True)
class XOSValuation(ValuationSpec):
    """Max over additive clauses; each clause maps items to SignalWeights."""

    clauses: tuple
    num_items: int = 0
    num_agents: int = field(default=0)

    def __init__(self, clauses: Iterable[Mapping[int, SignalWeight]], num_items: int):
        cls = tuple(_as_clause(c) for c in clauses)
        if not cls:
            raise ValidationError("an XOS valuation needs at least one clause")
        n = None
        for clause in cls:
            for j, w in clause:
                if not (0 <= j < num_items):
                    raise ValidationError(f"clause references item {j} >= m={num_items}")
                if n is None:
                    n = len(w.coeffs)
                elif len(w.coeffs) != n:
                    raise ValidationError("all clause weights must share the agent count")
        object.__setattr__(self, "clauses", cls)
        object.__setattr__(self, "num_items", num_items)
        object.__setattr__(self, "num_agents", 0 if n is None else n)

    def value(self, bundle, signals):
        b = self._validate_bundle(bundle)
        self._validate_signals(signals)
        best = 0
        for clause in self.clauses:
            tot = sum(w(signals) for j, w in clause if j in b)
            if tot > best:
                best = tot
        return best

    def item_scalars(self, signals) -> list[list]:
        """Per-clause, per-item weight values at a fixed profile."""
        out = []
        for clause in self.clauses:
            row = [0] * self.num_items
            for j, w in clause:
                row[j] = w(signals)
            out.append(row)
        return out

    def exact(self) -> "XOSValuation":
        return XOSValuation(
            ({j: w.exact() for j, w in clause} for clause in self.clauses),
            num_items=self.num_items,
        )


@dataclass(frozen=True)
class UnitDemandValuation(ValuationSpec):
    """Value of a bundle is the best single item's weight."""

    weights: tuple
    num_agents: int = field(default=0)

    def __init__(self, weights: Iterable[SignalWeight]):
        ws = tuple(weights)
        if not ws:
            raise ValidationError("a unit-demand valuation needs per-item weights")
        n = len(ws[0].coeffs)
        if any(len(w.coeffs) != n for w in ws):
            raise ValidationError("all item weights must share the agent count")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "num_agents", n)

    @property
    def num_items(self) -> int:
        return len(self.weights)

    def value(self, bundle, signals):
        b = self._validate_bundle(bundle)
        self._validate_signals(signals)
        if not b:
            return 0
        return max(self.weights[j](signals) for j in b)

    def item_weight(self, j: int, signals):
        return self.weights[j](signals)

    def exact(self) -> "UnitDemandValuation":
        return UnitDemandValuation(w.exact() for w in self.weights)


@dataclass(frozen=True)
class SeparableValuation(ValuationSpec):
    """Unit-demand valuation whose per-item weight splits by signal source.

    Item j is worth own[j](s) + others[j](s), where own[j] may only read
    the owner's signal (and a constant, no cap) and others[j] has a zero
    coefficient on the owner.  On bundles of at most one item this is
    exactly the additive own-part/others-part decomposition the payment
    rule differences; on larger bundles the best single item wins, which
    keeps the valuation unit-demand for every signal profile.
    """

    agent: int
    own: tuple
    others: tuple
    num_agents: int = field(default=0)

    def __init__(self, agent: int, own: Iterable[SignalWeight], others: Iterable[SignalWeight]):
        own_t, others_t = tuple(own), tuple(others)
        if len(own_t) != len(others_t) or not own_t:
            raise ValidationError("own/others must be equal-length, nonempty item lists")
        n = len(own_t[0].coeffs)
        if not (0 <= agent < n):
            raise ValidationError(f"agent {agent} out of range for n={n}")
        for j, w in enumerate(own_t):
            if len(w.coeffs) != n:
                raise ValidationError("all weights must share the agent count")
            if any(c != 0 for k, c in enumerate(w.coeffs) if k != agent):
                raise ValidationError(f"own[{j}] may only use the owner's coefficient")
            if w.cap is not None:
                raise ValidationError(f"own[{j}] must be uncapped (affine in s_i)")
        for j, w in enumerate(others_t):
            if len(w.coeffs) != n:
                raise ValidationError("all weights must share the agent count")
            if w.coeffs[agent] != 0:
                raise ValidationError(f"others[{j}] must not read the owner's signal")
        object.__setattr__(self, "agent", agent)
        object.__setattr__(self, "own", own_t)
        object.__setattr__(self, "others", others_t)
        object.__setattr__(self, "num_agents", n)

    @property
    def num_items(self) -> int:
        return len(self.own)

    def item_weight(self, j: int, signals):
        return self.own[j](signals) + self.others[j](signals)

    def value(self, bundle, signals):
        b = self._validate_bundle(bundle)
        self._validate_signals(signals)
        if not b:
            return 0
        return max(self.item_weight(j, signals) for j in b)

    def own_value(self, bundle: Iterable[int], signals):
        """Own-signal part on a bundle of at most one item."""
        b = self._validate_bundle(bundle)
        if not b:
            return 0
        if len(b) > 1:
            raise ValidationError("own_value is defined for bundles of size <= 1")
        (j,) = b
        return self.own[j](signals)

    def others_value(self, bundle: Iterable[int], signals):
        """Others'-signals part on a bundle of at most one item."""
        b = self._validate_bundle(bundle)
        if not b:
            return 0
        if len(b) > 1:
            raise ValidationError("others_value is defined for bundles of size <= 1")
        (j,) = b
        return self.others[j](signals)

    def exact(self) -> "SeparableValuation":
        return SeparableValuation(
            self.agent,
            (w.exact() for w in self.own),
            (w.exact() for w in self.others),
        )


SetFunction = Callable[[frozenset, Sequence], Real]
SpecLike = Union[ValuationSpec, SetFunction]


def eval_valuation(spec: SpecLike, bundle: Iterable[int], signals: Sequence):
    """Evaluate a valuation (spec or raw callable) on a bundle and profile."""
    if isinstance(spec, ValuationSpec):
        return spec.value(bundle, signals)
    sigs = signals.values if isinstance(signals, SignalProfile) else signals
    return spec(frozenset(bundle), sigs)


def _additive_table(scalars: Sequence) -> list:
    m = len(scalars)
    tab = [0] * (1 << m)
    for mask in range(1, 1 << m):
        low = mask & -mask
        tab[mask] = tab[mask ^ low] + scalars[low.bit_length() - 1]
    return tab


def _max_table(scalars: Sequence) -> list:
    m = len(scalars)
    tab = [0] * (1 << m)
    for mask in range(1, 1 << m):
        low = mask & -mask
        prev = tab[mask ^ low]
        cur = scalars[low.bit_length() - 1]
        tab[mask] = cur if cur > prev else prev
    return tab


def bundle_value_table(spec: SpecLike, signals: Sequence) -> list:
    """Values of every bundle, indexed by item bitmask (length 2^m).

    This is the hot path behind the offline optima: tables are exact in
    whatever numeric domain the signals live in (float or Fraction).
    """
    if isinstance(signals, SignalProfile):
        signals = signals.values
    if isinstance(spec, XOSValuation):
        per_clause = [_additive_table(row) for row in spec.item_scalars(signals)]
        tab = per_clause[0]
        for other in per_clause[1:]:
            tab = [a if a > b else b for a, b in zip(tab, other)]
        return tab
    if isinstance(spec, (UnitDemandValuation, SeparableValuation)):
        scalars = [spec.item_weight(j, signals) for j in range(spec.num_items)]
        return _max_table(scalars)
    if isinstance(spec, ValuationSpec):
        raise ValidationError(f"unsupported spec type {type(spec).__name__}")
    # Raw oracle: evaluate every bundle directly.
    raise ValidationError("bundle_value_table requires a constructive spec")


@dataclass(frozen=True)
class Instance:
    """A full problem input: agents, items, valuations, true signals."""

    n: int
    m: int
    specs: tuple
    signals: SignalProfile
    family: Union[str, None] = None

    def __init__(self, specs: Iterable[ValuationSpec], signals, family=None):
        specs_t = tuple(specs)
        sig = signals if isinstance(signals, SignalProfile) else SignalProfile(signals)
        n = len(specs_t)
        if len(sig) != n:
            raise ValidationError(f"{len(sig)} signals for {n} agents")
        ms = {s.num_items for s in specs_t}
        if len(ms) != 1:
            raise ValidationError(f"specs disagree on item count: {sorted(ms)}")
        for i, s in enumerate(specs_t):
            if s.num_agents != n:
                raise ValidationError(
                    f"spec {i} is built for {s.num_agents} agents, instance has {n}"
                )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", ms.pop())
        object.__setattr__(self, "specs", specs_t)
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "family", family)

    def exact(self) -> "Instance":
        """Same instance with signals and weight parameters as exact Fractions."""
        from fractions import Fraction

        return Instance(
            (spec.exact() for spec in self.specs),
            SignalProfile(Fraction(v) for v in self.signals.values),
            family=self.family,
        )
