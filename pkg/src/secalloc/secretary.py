"""Non-strategic online allocation under random arrival order.

Two flavors of sample-then-greedy runs are provided:

* :func:`run_sample_then_greedy` — skip a sample prefix, then at each
  step recompute an optimal allocation of *all* items under the signals
  observed so far and hand the arriving agent the still-available part
  of her bundle.  The sample size k is a parameter: k = floor(n/e) for
  valuations subadditive over signals, k = floor(n/2) for valuations XOS
  over signals.
* :func:`run_sample_then_match` — the classical matching variant for
  fixed (non-interdependent) unit-demand weights: after the sample, each
  step matches the arrived agents to the *available* items only and the
  arriving agent keeps her matched item.

:func:`run_proxy_framework` lifts any classical online algorithm to the
interdependent setting by spending the first half of the agents purely
on signal information and running the algorithm on the residual agents
with frozen proxy valuations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from ._util import bits_of, mask_of, set_of, trial_rng
from .errors import CapabilityError, ValidationError
from .offline import WeightOracle, opt_matching, solve_from_tables
from .valuations import Instance, bundle_value_table, mask_signals

__all__ = [
    "ArrivalOrder",
    "StepRecord",
    "RunResult",
    "run_sample_then_greedy",
    "run_sample_then_match",
    "run_proxy_framework",
    "blackbox_nothing",
    "make_sample_then_greedy_blackbox",
    "make_sample_then_match_blackbox",
    "survival_probability",
    "TailSumCheck",
    "check_tail_harmonic_sum",
    "random_valid_tail_sequence",
    "sample_size",
]


def sample_size(n: int, rule: str) -> int:
    """Sample-phase length: floor(n/e), floor(n/2) or floor(n/2e)."""
    if rule == "n/e":
        return int(n / math.e)
    if rule == "n/2":
        return n // 2
    if rule == "n/2e":
        return int(n / (2 * math.e))
    raise ValidationError(f"unknown sample rule {rule!r}")


@dataclass(frozen=True)
class ArrivalOrder:
    """The order agents arrive in; a permutation of the agent ids."""

    agents: tuple

    def __init__(self, agents: Sequence[int]):
        ag = tuple(int(a) for a in agents)
        if len(set(ag)) != len(ag):
            raise ValidationError("arrival order repeats an agent")
        object.__setattr__(self, "agents", ag)

    def __len__(self) -> int:
        return len(self.agents)

    def __iter__(self):
        return iter(self.agents)

    def __getitem__(self, t):
        return self.agents[t]

    @classmethod
    def identity(cls, n: int) -> "ArrivalOrder":
        return cls(range(n))

    @classmethod
    def random(cls, n: int, rng) -> "ArrivalOrder":
        return cls(int(a) for a in rng.permutation(n))


def _check_order(order: ArrivalOrder, n: int) -> ArrivalOrder:
    if not isinstance(order, ArrivalOrder):
        order = ArrivalOrder(order)
    if set(order.agents) != set(range(n)):
        raise ValidationError(f"order must be a permutation of 0..{n - 1}")
    return order


@dataclass(frozen=True)
class StepRecord:
    """One online step: arriving agent, items still available, bundle given."""

    t: int
    agent: int
    available: frozenset
    bundle: frozenset

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "agent": self.agent,
            "available": sorted(self.available),
            "bundle": sorted(self.bundle),
        }


@dataclass(frozen=True)
class RunResult:
    """Outcome of one online run, scored at the full true signal profile."""

    bundles: Mapping[int, frozenset]
    welfare: object
    trace: tuple
    opt_scope: str  # "all_items" or "available_items"

    def __post_init__(self):
        seen: set = set()
        for i, b in self.bundles.items():
            if seen & b:
                raise ValidationError(f"agent {i} overlaps another agent's bundle")
            seen |= b

    def bundle_of(self, agent: int) -> frozenset:
        return self.bundles.get(agent, frozenset())

    def trace_json_lines(self) -> list[str]:
        import json

        return [json.dumps(rec.to_json(), sort_keys=True) for rec in self.trace]


class InstanceRuntime:
    """Per-instance caches shared across many runs (orders) of one instance.

    Step optima depend only on the *set* of arrived agents, so they are
    memoized by agent bitmask.  All tables are exact in the numeric
    domain of the instance's signals.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self._tables: dict = {}
        self._step_opt: dict = {}
        full = (1 << inst.n) - 1
        self.true_tables = [self.table(i, full) for i in range(inst.n)]

    def table(self, agent: int, amask: int):
        key = (agent, amask)
        tab = self._tables.get(key)
        if tab is None:
            masked = mask_signals(self.inst.signals, set_of(amask))
            tab = bundle_value_table(self.inst.specs[agent], masked)
            self._tables[key] = tab
        return tab

    def step_opt(self, amask: int):
        """Optimal allocation of all items to the arrived agents.

        Weights are each agent's valuation with unseen signals masked to
        zero.  Returns (Allocation, per-agent bundle bitmasks).
        """
        hit = self._step_opt.get(amask)
        if hit is None:
            agents = bits_of(amask)
            tables = [self.table(i, amask) for i in agents]
            alloc = solve_from_tables(agents, tables, range(self.inst.m))
            masks = {i: mask_of(b) for i, b in alloc.bundles.items()}
            hit = (alloc, masks)
            self._step_opt[amask] = hit
        return hit

    def true_welfare(self, bundle_masks: Mapping[int, int]):
        total = 0
        for i in sorted(bundle_masks):
            total += self.true_tables[i][bundle_masks[i]]
        return total

    def proxy_oracle(self, agent: int, sample_mask: int) -> WeightOracle:
        """Valuation frozen at the sample's signals plus the agent's own."""
        tab = self.table(agent, sample_mask | (1 << agent))
        return WeightOracle(agent, lambda bundle, _t=tab: _t[mask_of(bundle)])


def run_sample_then_greedy(
    inst: Instance,
    order,
    k: int,
    *,
    runtime: Optional[InstanceRuntime] = None,
) -> RunResult:
    """Skip k agents, then greedily hand out step-optimal bundles.

    Every step optimum is over *all* items (availability is applied only
    when the arriving agent's bundle is carved out); that asymmetry with
    :func:`run_sample_then_match` is deliberate and load-bearing.
    """
    order = _check_order(order, inst.n)
    if not (0 <= k < inst.n):
        raise ValidationError(f"sample size k={k} must satisfy 0 <= k < n={inst.n}")
    rt = runtime if runtime is not None else InstanceRuntime(inst)

    avail = (1 << inst.m) - 1
    amask = 0
    trace = []
    bundle_masks: dict[int, int] = {}
    for t0, agent in enumerate(order):
        t = t0 + 1
        amask |= 1 << agent
        taken = 0
        if t > k:
            _, masks = rt.step_opt(amask)
            taken = masks.get(agent, 0) & avail
            if taken:
                bundle_masks[agent] = taken
        trace.append(StepRecord(t, agent, set_of(avail), set_of(taken)))
        avail &= ~taken

    bundles = {i: set_of(bm) for i, bm in bundle_masks.items()}
    return RunResult(bundles, rt.true_welfare(bundle_masks), tuple(trace), "all_items")


def run_sample_then_match(
    weights: Mapping[int, Sequence],
    num_items: int,
    order,
    k: Optional[int] = None,
    *,
    cache: Optional[dict] = None,
) -> RunResult:
    """Secretary matching on fixed unit-demand weights, available items only.

    Welfare is the sum of matched weights (the weights are the final
    word here: there is no interdependence left at this layer).
    """
    if not isinstance(order, ArrivalOrder):
        order = ArrivalOrder(order)
    n = len(order)
    if n == 0:
        raise ValidationError("empty arrival order")
    if k is None:
        k = int(n / math.e)
    if not (0 <= k < n):
        raise ValidationError(f"sample size k={k} must satisfy 0 <= k < n={n}")
    memo = cache if cache is not None else {}

    items = list(range(num_items))
    avail = (1 << num_items) - 1
    arrived: list[int] = []
    trace = []
    bundles: dict[int, frozenset] = {}
    welfare = 0
    for t0, agent in enumerate(order):
        t = t0 + 1
        arrived.append(agent)
        taken = 0
        if t > k and avail:
            key = (frozenset(arrived), avail)
            alloc = memo.get(key)
            if alloc is None:
                alloc = opt_matching(arrived, weights, [j for j in items if avail >> j & 1])
                memo[key] = alloc
            bundle = alloc.bundle_of(agent)
            if bundle:
                (j,) = bundle
                taken = 1 << j
                bundles[agent] = bundle
                welfare += weights[agent][j]
        trace.append(StepRecord(t, agent, set_of(avail), set_of(taken)))
        avail &= ~taken
    return RunResult(bundles, welfare, tuple(trace), "available_items")


Blackbox = Callable[[Sequence, int], Mapping[int, frozenset]]


def blackbox_nothing(arrivals, num_items) -> dict:
    """Degenerate online algorithm: never allocates anything."""
    return {}


def make_sample_then_greedy_blackbox(k: Optional[int] = None) -> Blackbox:
    """Classical sample-then-greedy over all items, on frozen oracles."""

    def run(arrivals, num_items):
        n = len(arrivals)
        kk = int(n / math.e) if k is None else k
        tables = {
            agent: [oracle.fn(set_of(mask)) for mask in range(1 << num_items)]
            for agent, oracle in arrivals
        }
        avail = (1 << num_items) - 1
        arrived: list[int] = []
        out: dict[int, frozenset] = {}
        for t0, (agent, _) in enumerate(arrivals):
            arrived.append(agent)
            if t0 + 1 <= kk:
                continue
            ag = sorted(arrived)
            alloc = solve_from_tables(ag, [tables[a] for a in ag], range(num_items))
            taken = mask_of(alloc.bundle_of(agent)) & avail
            if taken:
                out[agent] = set_of(taken)
            avail &= ~taken
        return out

    return run


def make_sample_then_match_blackbox(k: Optional[int] = None) -> Blackbox:
    """Classical secretary matching; oracles must be unit-demand."""

    def run(arrivals, num_items):
        weights = {
            agent: [oracle.fn(frozenset({j})) for j in range(num_items)]
            for agent, oracle in arrivals
        }
        order = ArrivalOrder(agent for agent, _ in arrivals)
        result = run_sample_then_match(weights, num_items, order, k)
        return dict(result.bundles)

    return run


def run_proxy_framework(
    inst: Instance,
    order,
    blackbox: Blackbox,
    *,
    runtime: Optional[InstanceRuntime] = None,
) -> RunResult:
    """Half the agents buy signal information; a classical algorithm runs on the rest.

    The first floor(n/2) agents are skipped and only their signals are
    kept.  Each remaining agent's valuation is frozen at (sample signals
    + her own), which removes interdependence, and the blackbox plays
    the residual instance over all items.  Welfare is still scored at
    the full true profile.
    """
    order = _check_order(order, inst.n)
    if inst.n < 2:
        raise ValidationError("the proxy framework needs at least 2 agents")
    rt = runtime if runtime is not None else InstanceRuntime(inst)
    k1 = inst.n // 2
    sample_mask = mask_of(order.agents[:k1])

    arrivals = [(agent, rt.proxy_oracle(agent, sample_mask)) for agent in order.agents[k1:]]
    raw = blackbox(arrivals, inst.m)

    residual = set(order.agents[k1:])
    bundle_masks: dict[int, int] = {}
    for agent, bundle in raw.items():
        if agent not in residual:
            raise RuntimeError(f"blackbox allocated to non-residual agent {agent}")
        bm = mask_of(bundle)
        if bm & ~((1 << inst.m) - 1):
            raise RuntimeError(f"blackbox allocated unknown items to agent {agent}")
        bundle_masks[agent] = bm

    trace = []
    avail = (1 << inst.m) - 1
    for t0, agent in enumerate(order):
        t = t0 + 1
        taken = 0
        if t > k1:
            taken = bundle_masks.get(agent, 0)
            if taken & ~avail:
                raise RuntimeError(f"blackbox gave agent {agent} an unavailable item")
        trace.append(StepRecord(t, agent, set_of(avail), set_of(taken)))
        avail &= ~taken

    bundle_masks = {i: bm for i, bm in bundle_masks.items() if bm}
    bundles = {i: set_of(bm) for i, bm in bundle_masks.items()}
    return RunResult(bundles, rt.true_welfare(bundle_masks), tuple(trace), "available_items")


def survival_probability(
    inst: Instance,
    item: int,
    step: int,
    k: int,
    mode: str = "exact",
    *,
    trials: int = 10_000,
    seed: int = 0,
    runtime: Optional[InstanceRuntime] = None,
):
    """Probability that ``item`` is still unallocated after ``step`` steps.

    Runs :func:`run_sample_then_greedy` with sample size k over arrival
    orders.  Exact mode enumerates all n! orders and returns a Fraction;
    Monte Carlo returns a float over ``trials`` seeded orders.
    """
    if not (0 <= item < inst.m):
        raise ValidationError(f"item {item} out of range for m={inst.m}")
    if not (1 <= step <= inst.n):
        raise ValidationError(f"step {step} out of range for n={inst.n}")
    rt = runtime if runtime is not None else InstanceRuntime(inst)

    def survives(order_seq) -> bool:
        avail = (1 << inst.m) - 1
        amask = 0
        for t0 in range(step):
            agent = order_seq[t0]
            amask |= 1 << agent
            if t0 + 1 > k:
                _, masks = rt.step_opt(amask)
                avail &= ~(masks.get(agent, 0) & avail)
        return bool(avail >> item & 1)

    if mode == "exact":
        if inst.n > 7:
            raise CapabilityError(f"exact mode enumerates {inst.n}! orders; n <= 7 required")
        total = math.factorial(inst.n)
        count = sum(1 for perm in itertools.permutations(range(inst.n)) if survives(perm))
        return Fraction(count, total)
    if mode == "monte_carlo":
        count = 0
        for trial in range(trials):
            order = trial_rng(seed, trial).permutation(inst.n)
            if survives([int(a) for a in order]):
                count += 1
        return count / trials
    raise ValidationError(f"unknown mode {mode!r}")


def random_valid_tail_sequence(n: int, rng) -> list[float]:
    """Random nonnegative, nondecreasing sequence with a_n <= a_t + a_{n-t}.

    Mixture of three families that each satisfy both constraints (which
    are preserved under addition): a concave cumulative sum, a constant,
    and a step function whose threshold stays in the first half.
    """
    concave = list(itertools.accumulate(sorted(rng.uniform(0, 1, n), reverse=True)))
    const = float(rng.uniform(0, 1))
    tau = int(rng.integers(1, max(2, n // 2 + 1)))
    step_height = float(rng.uniform(0, 1))
    w1, w2, w3 = rng.uniform(0, 1, 3)
    return [
        float(w1 * concave[t] + w2 * const + w3 * (step_height if t + 1 >= tau else 0.0))
        for t in range(n)
    ]


@dataclass(frozen=True)
class TailSumCheck:
    lhs: float
    rhs: float
    passed: bool


def check_tail_harmonic_sum(values: Sequence, slack_constant: float = 5.0) -> TailSumCheck:
    """Check sum_{t=ceil(n/e)}^n a_t/(t-1) >= (a_n/2) * (1 - c/n).

    The sequence must be nonnegative, nondecreasing, and satisfy
    a_n <= a_t + a_{n-t} for every t (a_0 reads as 0).  The c/n slack
    absorbs the finite-n correction term, whose sign is not pinned down
    at small n; c defaults to 5.
    """
    a = list(values)
    n = len(a)
    if n < 3:
        raise ValidationError("need a sequence of length >= 3")
    if a[0] < 0:
        raise ValidationError("sequence must be nonnegative (index 1)")
    for t in range(1, n):
        if a[t] < a[t - 1]:
            raise ValidationError(f"sequence must be nondecreasing (index {t + 1})")
    for t in range(1, n):
        if a[n - 1] > a[t - 1] + a[n - t - 1] + 1e-12:
            raise ValidationError(f"complement-sum bound fails at index {t}")

    start = math.ceil(n / math.e)
    lhs = sum(a[t - 1] / (t - 1) for t in range(start, n + 1))
    rhs = a[n - 1] / 2
    slack = slack_constant / n
    return TailSumCheck(lhs, rhs, lhs >= rhs * (1 - slack))
