"""Truthful online matching with signal reports, plus its audit harness.

The mechanism splits the arrival sequence in three: the first floor(n/2)
agents are pure signal sample (no allocation, no payment), the next
floor(n/2e) agents are the matching subroutine's own sample, and every
later agent is matched against the *available* items under proxy
valuations frozen at (sample signals + own report).  Prices are a
difference of two step optima plus a correction that swaps the proxy's
others-part for the fully-informed one; own-signal terms cancel, which
is what makes truthful reporting a dominant choice once everyone else is
truthful, for every fixed arrival order.

Utilities are always scored at the *true* signals, whatever was
reported.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ._util import mask_of, set_of, trial_rng
from .errors import CapabilityError, ValidationError
from .offline import opt_matching, solve_from_tables
from .secretary import _check_order
from .valuations import (
    Instance,
    SeparableValuation,
    SignalProfile,
    bundle_value_table,
    mask_signals,
)

__all__ = [
    "ReportProfile",
    "MechStep",
    "MechanismOutcome",
    "run_mechanism",
    "agent_utility",
    "EpicAudit",
    "check_epic",
    "SamplingBoundCheck",
    "check_random_sampling_bound",
    "price_ledger_csv",
]


class ReportProfile(SignalProfile):
    """Reported signals; may differ from the true profile."""


@dataclass(frozen=True)
class MechStep:
    """One mechanism step with the ingredients of its price."""

    t: int
    agent: int
    available: frozenset
    bundle: frozenset
    opt_prev: Optional[object] = None
    opt_minus: Optional[object] = None
    g_full: Optional[object] = None
    g_sample: Optional[object] = None
    price: object = 0.0


@dataclass(frozen=True)
class MechanismOutcome:
    """Allocation, payments and true-signal utilities of one run."""

    bundles: Mapping[int, frozenset]
    payments: Mapping[int, object]
    utilities: Mapping[int, object]
    trace: tuple
    k1: int
    k2: int

    def __post_init__(self):
        seen: set = set()
        for i, b in self.bundles.items():
            if len(b) > 1:
                raise ValidationError(f"agent {i} received more than one item")
            if seen & b:
                raise ValidationError(f"agent {i} overlaps another bundle")
            seen |= b
        for i, p in self.payments.items():
            if i not in self.bundles and p != 0:
                raise ValidationError(f"agent {i} has no items but pays {p}")
            if not math.isfinite(float(p)):
                raise ValidationError(f"agent {i} has a non-finite payment {p!r}")

    def bundle_of(self, agent: int) -> frozenset:
        return self.bundles.get(agent, frozenset())


def _require_separable(inst: Instance) -> None:
    for i, spec in enumerate(inst.specs):
        if not isinstance(spec, SeparableValuation):
            raise ValidationError(f"agent {i}'s valuation is not separable unit-demand")


def run_mechanism(
    inst: Instance,
    order,
    reports=None,
    *,
    solver_cache: Optional[dict] = None,
) -> MechanismOutcome:
    """Run the truthful matching mechanism under the given reports.

    ``reports`` defaults to the true signals.  Payments follow
    p_t = OPT(prev agents; J^t) - OPT_others(cur agents; J^t)
          + g(bundle, all reports but own) - g(bundle, sample reports),
    finalized once all reports are known; agents with empty bundles pay
    exactly 0 (the formula evaluates to 0 there as well).
    """
    _require_separable(inst)
    n = inst.n
    if n < 3:
        raise ValidationError("the mechanism needs n >= 3")
    order = _check_order(order, n)
    if reports is None:
        reports = inst.signals
    elif not isinstance(reports, SignalProfile):
        reports = ReportProfile(reports)
    if len(reports) != n:
        raise ValidationError(f"{len(reports)} reports for {n} agents")

    memo = solver_cache if solver_cache is not None else {}
    k1 = n // 2
    k2 = int(n / (2 * math.e))
    sample = order.agents[:k1]
    sample_set = frozenset(sample)
    all_agents = frozenset(range(n))

    # Proxy weight vectors: own report plus the first sample's reports.
    w_vec: dict[int, tuple] = {}
    for agent in order.agents[k1:]:
        masked = mask_signals(reports, sample_set | {agent})
        spec = inst.specs[agent]
        w_vec[agent] = tuple(spec.item_weight(j, masked.values) for j in range(inst.m))

    def matching(agent_set: frozenset, avail_mask: int):
        key = (tuple(sorted((a, w_vec[a]) for a in agent_set)), avail_mask)
        hit = memo.get(key)
        if hit is None:
            items = [j for j in range(inst.m) if avail_mask >> j & 1]
            hit = opt_matching(agent_set, w_vec, items)
            memo[key] = hit
        return hit

    avail = (1 << inst.m) - 1
    arrived: list[int] = []
    trace = []
    bundles: dict[int, frozenset] = {}
    payments: dict[int, object] = {i: 0.0 for i in range(n)}
    for t0, agent in enumerate(order):
        t = t0 + 1
        if t > k1:
            arrived.append(agent)
        if t <= k1 + k2:
            trace.append(MechStep(t, agent, set_of(avail), frozenset()))
            continue

        cur = frozenset(arrived)
        alloc = matching(cur, avail)
        prev = matching(cur - {agent}, avail)
        bundle = alloc.bundle_of(agent)
        opt_minus = alloc.value - alloc.per_agent_value.get(agent, 0)
        spec = inst.specs[agent]
        g_full = spec.others_value(bundle, mask_signals(reports, all_agents - {agent}).values)
        g_sample = spec.others_value(bundle, mask_signals(reports, sample_set).values)
        formula = prev.value - opt_minus + g_full - g_sample
        price = formula if bundle else 0.0
        if bundle:
            bundles[agent] = bundle
            payments[agent] = price
        trace.append(MechStep(t, agent, set_of(avail), bundle,
                              prev.value, opt_minus, g_full, g_sample, price))
        avail &= ~mask_of(bundle)

    true_sigs = inst.signals.values
    utilities = {
        i: inst.specs[i].value(bundles.get(i, frozenset()), true_sigs) - payments[i]
        for i in range(n)
    }
    return MechanismOutcome(bundles, payments, utilities, tuple(trace), k1, k2)


def agent_utility(outcome: MechanismOutcome, inst: Instance, agent: int):
    """True-signal utility: value of the received bundle minus the payment."""
    if not (0 <= agent < inst.n):
        raise ValidationError(f"agent {agent} out of range for n={inst.n}")
    value = inst.specs[agent].value(outcome.bundle_of(agent), inst.signals.values)
    return value - outcome.payments.get(agent, 0.0)


@dataclass(frozen=True)
class EpicAudit:
    """Result of probing one agent's misreport incentives on a fixed order."""

    agent: int
    truth_utility: float
    best_deviation: float
    best_utility: float
    violation: float
    passed: bool
    deviations_tested: int

    def to_json(self) -> dict:
        return {
            "agent": self.agent,
            "truth_utility": self.truth_utility,
            "best_deviation": self.best_deviation,
            "best_utility": self.best_utility,
            "violation": self.violation,
        }


def check_epic(
    inst: Instance,
    order,
    agent: int,
    grid: Optional[Sequence] = None,
    *,
    grid_points: int = 21,
    refine: bool = True,
    tol: float = 1e-9,
    solver_cache: Optional[dict] = None,
) -> EpicAudit:
    """Audit one agent's incentive to misreport under a fixed order.

    Runs the mechanism once truthfully and once per deviation on the
    grid (everyone else truthful), scoring the agent's utility at the
    true signals each time.  With ``refine`` a second, finer grid is
    laid around the best deviation found.
    """
    if not (0 <= agent < inst.n):
        raise ValidationError(f"agent {agent} out of range for n={inst.n}")
    memo = solver_cache if solver_cache is not None else {}
    truth = run_mechanism(inst, order, solver_cache=memo)
    u_truth = truth.utilities[agent]

    s_true = float(inst.signals[agent])
    if grid is None:
        hi = 2 * s_true if s_true > 0 else 1.0
        grid = [hi * i / (grid_points - 1) for i in range(grid_points)]

    def utility_of(report_value) -> float:
        values = list(inst.signals.values)
        values[agent] = report_value
        outcome = run_mechanism(inst, order, ReportProfile(values), solver_cache=memo)
        return outcome.utilities[agent]

    tested = [(float(d), utility_of(d)) for d in grid]
    best_dev, best_u = max(tested, key=lambda pair: pair[1])
    if refine and len(grid) > 1:
        spacing = max(grid) / (len(grid) - 1) if max(grid) > 0 else 1.0
        lo = max(0.0, best_dev - spacing)
        fine = [lo + (best_dev + spacing - lo) * i / 10 for i in range(11)]
        refined = [(float(d), utility_of(d)) for d in fine]
        tested.extend(refined)
        best_dev, best_u = max(tested, key=lambda pair: pair[1])

    violation = best_u - u_truth
    return EpicAudit(
        agent=agent,
        truth_utility=float(u_truth),
        best_deviation=best_dev,
        best_utility=float(best_u),
        violation=float(violation),
        passed=violation <= tol,
        deviations_tested=len(tested),
    )


@dataclass(frozen=True)
class SamplingBoundCheck:
    lhs: object
    rhs: object
    passed: bool
    subsets: int


def check_random_sampling_bound(
    inst: Instance,
    mode: str = "exact",
    *,
    trials: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
) -> SamplingBoundCheck:
    """Check E over random half-samples of the proxy optimum >= OPT/4.

    The proxy optimum allocates all items to the agents *outside* the
    sample, each valued with her own signal plus the sample's signals
    only.  Exact mode averages over every floor(n/2)-subset.
    """
    n, m = inst.n, inst.m
    k1 = n // 2
    sigs = inst.signals

    def proxy_opt(sample: tuple) -> object:
        sample_set = frozenset(sample)
        rest = sorted(set(range(n)) - sample_set)
        tables = [
            bundle_value_table(inst.specs[i], mask_signals(sigs, sample_set | {i}))
            for i in rest
        ]
        return solve_from_tables(rest, tables, range(m)).value

    full_tables = [bundle_value_table(spec, sigs) for spec in inst.specs]
    opt_true = solve_from_tables(range(n), full_tables, range(m)).value
    rhs = opt_true / 4

    if mode == "exact":
        if n > 12:
            raise CapabilityError(
                f"exact mode enumerates C({n},{k1}) subsets; n <= 12 required"
            )
        subsets = list(itertools.combinations(range(n), k1))
        total = sum(proxy_opt(s) for s in subsets)
        lhs = total / len(subsets)
        return SamplingBoundCheck(lhs, rhs, lhs >= rhs - tol, len(subsets))
    if mode == "monte_carlo":
        vals = []
        for trial in range(trials):
            perm = trial_rng(seed, trial).permutation(n)
            vals.append(proxy_opt(tuple(int(a) for a in perm[:k1])))
        lhs = sum(vals) / trials
        return SamplingBoundCheck(lhs, rhs, lhs >= rhs - tol, trials)
    raise ValidationError(f"unknown mode {mode!r}")


def price_ledger_csv(outcome: MechanismOutcome) -> str:
    """Render the per-step price ledger as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "agent", "opt_prev", "opt_minus", "g_full", "g_sample", "price"])
    for step in outcome.trace:
        writer.writerow([
            step.t,
            step.agent,
            "" if step.opt_prev is None else float(step.opt_prev),
            "" if step.opt_minus is None else float(step.opt_minus),
            "" if step.g_full is None else float(step.g_full),
            "" if step.g_sample is None else float(step.g_sample),
            float(step.price),
        ])
    return buf.getvalue()
