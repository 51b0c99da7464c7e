"""Exact offline optima: the benchmark and the inner step of every online run.

Both solvers return *the* welfare-maximizing allocation with a fully
deterministic tie-break: among maximizers (in exact rational arithmetic),
the lexicographically smallest assignment vector wins, where the vector
lists each item's assignee in ascending item order and "unassigned"
sorts before every agent id.

The tie-break is implemented without tolerances by maximizing a single
integer objective ``welfare * K - lex_code``: weights are integerized
exactly (floats are dyadic rationals), ``lex_code`` encodes the
assignment vector as a base-B number, and K is large enough that any
true welfare improvement dominates every possible code difference.  That
objective has a unique maximizer, so the subset-DP solver and the
matching solver cannot disagree on ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

from ._util import integerize, set_of, submasks
from .errors import CapabilityError, ValidationError
from .valuations import ValuationSpec

__all__ = ["WeightOracle", "Allocation", "opt_general", "opt_matching", "opt_split"]

DEFAULT_ENUMERATION_BUDGET = 10_000_000


@dataclass(frozen=True)
class WeightOracle:
    """A bundle-valuation for one agent, fixed at some signal profile."""

    agent: int
    fn: Callable[[frozenset], object]

    def evaluate(self, bundle: Iterable[int]):
        return self.fn(frozenset(bundle))

    @classmethod
    def from_spec(cls, agent: int, spec: ValuationSpec, signals) -> "WeightOracle":
        """Freeze a valuation spec at a (possibly masked) signal profile."""
        return cls(agent, lambda bundle: spec.value(bundle, signals))

    @classmethod
    def from_item_weights(cls, agent: int, weights: Sequence) -> "WeightOracle":
        """Unit-demand oracle over a dense per-item weight vector."""
        ws = tuple(weights)
        return cls(agent, lambda bundle: max((ws[j] for j in bundle), default=0))


@dataclass(frozen=True)
class Allocation:
    """An allocation of (some) items to agents, with its welfare split.

    ``bundles`` holds only agents that received something; ``agents`` and
    ``items`` record the sets the optimum was computed over.
    """

    agents: frozenset
    items: frozenset
    bundles: Mapping[int, frozenset]
    per_agent_value: Mapping[int, object]
    value: object

    def __post_init__(self):
        seen = set()
        for i, bundle in self.bundles.items():
            if i not in self.agents:
                raise ValidationError(f"bundle for unknown agent {i}")
            if not bundle:
                raise ValidationError(f"agent {i} carries an empty bundle entry")
            if not bundle <= self.items:
                raise ValidationError(f"agent {i} allocated items outside the item set")
            if seen & bundle:
                raise ValidationError(f"agent {i} overlaps a previously allocated item")
            seen |= bundle
        total = sum(self.per_agent_value.values())
        if abs(self.value - total) > 1e-9 * max(1.0, abs(self.value)):
            raise ValidationError("allocation value does not match the per-agent split")

    def bundle_of(self, agent: int) -> frozenset:
        return self.bundles.get(agent, frozenset())

    def to_json(self) -> dict:
        return {
            "agents": sorted(self.agents),
            "items": sorted(self.items),
            "bundles": {str(i): sorted(b) for i, b in sorted(self.bundles.items())},
            "per_agent_value": {str(i): float(v) for i, v in sorted(self.per_agent_value.items())},
            "value": float(self.value),
        }


def _lex_codes(num_items: int, base: int) -> list[int]:
    """lex code of each item bitmask for one agent of rank weight 1."""
    powers = [base ** (num_items - 1 - b) for b in range(num_items)]
    codes = [0] * (1 << num_items)
    for mask in range(1, 1 << num_items):
        low = mask & -mask
        codes[mask] = codes[mask ^ low] + powers[low.bit_length() - 1]
    return codes


def solve_from_tables(agent_ids: Sequence[int], tables: Sequence[Sequence], item_ids: Sequence[int]) -> Allocation:
    """Exact optimum over bundle-value tables (one table per agent).

    ``tables[r]`` is indexed by bitmask over ``item_ids`` (ascending).
    This is the shared engine behind :func:`opt_general` and the
    per-step optima of the online algorithms.
    """
    agents = list(agent_ids)
    items = list(item_ids)
    q = len(items)
    t = len(agents)
    full = (1 << q) - 1

    if t == 0:
        return Allocation(frozenset(), frozenset(items), {}, {}, 0.0)

    for r, tab in enumerate(tables):
        if tab[0] != 0:
            raise ValidationError(f"oracle for agent {agents[r]} must value the empty bundle at 0")

    flat = [v for tab in tables for v in tab]
    ints, _ = integerize(flat)
    size = 1 << q
    base = t + 2
    big_k = base ** q
    codes = _lex_codes(q, base)

    combined = []
    for r in range(t):
        off = r * size
        rank_w = r + 1
        combined.append([ints[off + mask] * big_k - rank_w * codes[mask] for mask in range(size)])

    f = [0] * size
    choices = []
    for r in range(t):
        comb = combined[r]
        g = [0] * size
        choice = [0] * size
        for s_mask in range(size):
            best = f[s_mask]  # agent r takes nothing
            best_x = 0
            for x in submasks(s_mask):
                if x == 0:
                    continue
                cand = f[s_mask ^ x] + comb[x]
                if cand > best:
                    best = cand
                    best_x = x
            g[s_mask] = best
            choice[s_mask] = best_x
        f = g
        choices.append(choice)

    bundles: dict[int, frozenset] = {}
    per_agent: dict[int, object] = {}
    s_mask = full
    for r in range(t - 1, -1, -1):
        x = choices[r][s_mask]
        s_mask ^= x
        if x:
            bundles[agents[r]] = frozenset(items[b] for b in set_of(x))
            per_agent[agents[r]] = tables[r][x]

    value = sum(per_agent[i] for i in sorted(per_agent)) if per_agent else 0.0
    return Allocation(frozenset(agents), frozenset(items), bundles, per_agent, value)


def opt_general(
    agents: Iterable[int],
    oracles: Mapping[int, Union[WeightOracle, Callable]],
    items: Iterable[int],
    *,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> Allocation:
    """Welfare-maximizing partition of a subset of ``items`` among ``agents``.

    Exact for arbitrary monotone bundle oracles; desk scale only.  The
    candidate-assignment count (|A|+1)^|J| is the capability guard.
    """
    ag = sorted(set(agents))
    it = sorted(set(items))
    count = (len(ag) + 1) ** len(it)
    if count > budget:
        raise CapabilityError(
            f"{count} candidate assignments exceed the enumeration budget {budget}"
        )
    tables = []
    for i in ag:
        oracle = oracles[i]
        fn = oracle.evaluate if isinstance(oracle, WeightOracle) else oracle
        tab = [fn(frozenset(it[b] for b in set_of(mask))) for mask in range(1 << len(it))]
        tables.append(tab)
    return solve_from_tables(ag, tables, it)


def _min_cost_assignment(cost: list[list]) -> list[int]:
    """Exact square assignment (Hungarian with potentials), O(N^3).

    Works on arbitrary exact integers; returns the column of each row.
    """
    n = len(cost)
    inf = float("inf")
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            row = cost[i0 - 1]
            ui = u[i0]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


def opt_matching(
    agents: Iterable[int],
    weights: Mapping[int, Sequence],
    items: Iterable[int],
) -> Allocation:
    """Maximum-weight bipartite matching (each agent gets at most one item).

    Exact; agrees with :func:`opt_general` on unit-demand oracles, ties
    included.  Weights are read as ``weights[agent][item]`` and must be
    finite and nonnegative.
    """
    ag = sorted(set(agents))
    it = sorted(set(items))
    t, q = len(ag), len(it)
    if t == 0 or q == 0:
        return Allocation(frozenset(ag), frozenset(it), {}, {}, 0.0)

    w_rows = []
    for i in ag:
        row = []
        for j in it:
            w = weights[i][j]
            if not (w >= 0) or (isinstance(w, float) and w != w):
                raise ValidationError(f"weight for agent {i}, item {j} must be finite nonnegative")
            if isinstance(w, float) and w == float("inf"):
                raise ValidationError(f"weight for agent {i}, item {j} must be finite")
            row.append(w)
        w_rows.append(row)

    ints, _ = integerize([w for row in w_rows for w in row])
    base = t + 2
    big_k = base ** q
    powers = [base ** (q - 1 - b) for b in range(q)]

    size = t + q
    gains = [[0] * size for _ in range(size)]
    for r in range(t):
        for b in range(q):
            gains[r][b] = ints[r * q + b] * big_k - (r + 1) * powers[b]

    cols = _min_cost_assignment([[-g for g in row] for row in gains])

    bundles: dict[int, frozenset] = {}
    per_agent: dict[int, object] = {}
    for r in range(t):
        b = cols[r]
        if b < q and gains[r][b] > 0:
            bundles[ag[r]] = frozenset({it[b]})
            per_agent[ag[r]] = w_rows[r][b]
    value = sum(per_agent[i] for i in sorted(per_agent)) if per_agent else 0.0
    return Allocation(frozenset(ag), frozenset(it), bundles, per_agent, value)


def opt_split(alloc: Allocation, agent: int) -> tuple:
    """Split an optimum into (agent's contribution, everyone else's)."""
    if agent not in alloc.agents:
        raise ValidationError(f"agent {agent} is not part of this allocation")
    own = alloc.per_agent_value.get(agent, 0.0)
    return own, alloc.value - own
