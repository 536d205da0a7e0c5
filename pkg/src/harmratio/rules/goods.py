"""Allocation rules for indivisible goods: Egal, Nash, Util, RR."""
from __future__ import annotations

import numpy as np

from harmratio.errors import InvalidInstanceError
from harmratio.model import Allocation, GoodsInstance, nash_welfare
from harmratio.opt.bnb import MAX_AGENTS, MAX_GOODS, branch_and_bound_allocation, greedy_egal_owners
from harmratio.opt.milp import leximin_milp, maxmin_milp
from harmratio.rules.base import RuleResult, stopwatch

GOODS_RULES = ("Egal", "Nash", "Util", "RR")

# max-min branch and bound slows down sharply past this many goods
BNB_MAXMIN_GOODS = 12


def _indivisible(instance: GoodsInstance):
    if instance.divisible:
        raise InvalidInstanceError("goods rules allocate indivisible goods")


def _utilities(instance, owners):
    V = instance.valuations
    u = np.zeros(instance.n)
    np.add.at(u, owners, V[owners, np.arange(instance.m)])
    return u


def util_rule(instance: GoodsInstance) -> RuleResult:
    """Each good to an agent valuing it most (lowest index on ties)."""
    _indivisible(instance)
    with stopwatch() as sw:
        owners = np.argmax(instance.valuations, axis=0)
    u = _utilities(instance, owners)
    return RuleResult("Util", Allocation.from_owners(owners, instance.n), u, float(u.sum()), runtime=sw["t"])


def round_robin_goods(instance: GoodsInstance, order=None, seed: int | None = None) -> RuleResult:
    """Agents pick in a fixed cyclic order, each taking its favourite remaining good.

    Ties go to the lowest good index; an agent that values nothing left still
    picks, so the allocation stays complete. ``order`` defaults to input
    order, or a permutation drawn from ``seed``.
    """
    _indivisible(instance)
    n, m = instance.n, instance.m
    if order is None:
        order = np.arange(n) if seed is None else np.random.default_rng(seed).permutation(n)
    order = [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the agents")
    with stopwatch() as sw:
        V = instance.valuations
        left = np.ones(m, dtype=bool)
        owners = np.zeros(m, dtype=np.int64)
        turn = 0
        while left.any():
            i = order[turn % n]
            vals = np.where(left, V[i], -1.0)
            g = int(np.argmax(vals))
            owners[g] = i
            left[g] = False
            turn += 1
    u = _utilities(instance, owners)
    return RuleResult("RR", Allocation.from_owners(owners, n), u, float(u.sum()), runtime=sw["t"],
                      diagnostics={"order": order})


def nash_rule(instance: GoodsInstance, max_agents: int = MAX_AGENTS, max_goods: int = MAX_GOODS) -> RuleResult:
    """Exact maximum Nash welfare (most positive agents first, then their product)."""
    _indivisible(instance)
    with stopwatch() as sw:
        A = branch_and_bound_allocation(instance, "nash", max_agents, max_goods)
    u = _utilities(instance, A.owners())
    return RuleResult("Nash", A, u, nash_welfare(u), runtime=sw["t"],
                      diagnostics={"positive_agents": int((u > 0).sum())})


def egal_rule(instance: GoodsInstance, solver: str = "auto", max_agents: int = MAX_AGENTS,
              max_goods: int = MAX_GOODS, leximin: bool = False) -> RuleResult:
    """Exact maximum egalitarian welfare; ``leximin=True`` refines by frozen minima.

    ``solver`` is ``"bnb"`` (own branch and bound), ``"milp"`` (HiGHS), or
    ``"auto"``: branch and bound up to a dozen goods, MILP beyond.
    """
    _indivisible(instance)
    if solver not in ("auto", "bnb", "milp"):
        raise ValueError("solver must be auto, bnb or milp")
    if solver == "auto":
        solver = "bnb" if instance.m <= BNB_MAXMIN_GOODS and instance.n <= max_agents else "milp"
    V = instance.valuations
    with stopwatch() as sw:
        if solver == "bnb":
            A = branch_and_bound_allocation(instance, "leximin" if leximin else "egalitarian", max_agents, max_goods)
            owners = A.owners()
        elif leximin:
            owners, _ = leximin_milp(V)
        else:
            _, owners = maxmin_milp(V)
            if owners is None:
                owners = greedy_egal_owners(V)
    u = _utilities(instance, owners)
    return RuleResult("Egal", Allocation.from_owners(owners, instance.n), u, float(u.min()), runtime=sw["t"],
                      diagnostics={"solver": solver, "leximin": leximin})


def goods_rules(instance: GoodsInstance, rules=GOODS_RULES, **caps) -> dict[str, RuleResult]:
    """Run the requested rules; ``caps`` (max_agents, max_goods) go to the exact solvers."""
    out = {}
    for r in rules:
        if r == "Egal":
            out[r] = egal_rule(instance, **caps)
        elif r == "Nash":
            out[r] = nash_rule(instance, **caps)
        elif r == "Util":
            out[r] = util_rule(instance)
        elif r == "RR":
            out[r] = round_robin_goods(instance)
        else:
            raise ValueError(f"unknown goods rule {r!r}; choose from {GOODS_RULES}")
    return out
