"""Harm-ratio fairness audits for goods division, participatory budgeting and reviewer assignment.

Typical use::

    from harmratio import GoodsInstance, enumerate_allocations, ihr, nash_rule

    inst = GoodsInstance([[3, 1], [1, 3]])
    res = nash_rule(inst)
    value, witness = ihr(enumerate_allocations(inst), res.outcome)
"""
from harmratio.criteria import (
    ALL_CRITERIA,
    DEFAULT_CRITERIA,
    CheckResult,
    FairnessReport,
    GroupScan,
    HarmWitness,
    audit,
    core_check,
    eghr,
    envy_free_check,
    ghr,
    ghr_curve,
    ghr_exhaustive_scan,
    ghr_scan,
    group_fair_check,
    ihr,
    is_alpha_ghr,
    max_nash_welfare,
    nw_ratio,
    pareto_check,
    pf_value,
    private_envy_ratio,
    prop_ratio,
    shuffle_envy_ratio,
)
from harmratio.errors import (
    ApproxPFError,
    CapExceededError,
    HarmRatioError,
    InfeasibleError,
    InvalidInstanceError,
    InvalidOutcomeError,
    ParseError,
    SolverError,
)
from harmratio.model import (
    Allocation,
    BudgetSelection,
    FiniteUtilityTable,
    GoodsInstance,
    PBInstance,
    Project,
    ReviewAssignment,
    ReviewInstance,
    nash_welfare,
    normalize_valuations,
    utility_vector,
)
from harmratio.opt.convex import MNWResult, approx_pf_solve, eisenberg_gale_mnw, proportional_point
from harmratio.rules import (
    GOODS_RULES,
    PB_RULES,
    REVIEW_RULES,
    RuleResult,
    egal_rule,
    global_u,
    goods_rules,
    greedy_u,
    leximin_review,
    mes,
    nash_pb,
    nash_review,
    nash_rule,
    pav,
    pb_rules,
    phragmen_rule,
    review_rules,
    round_robin_goods,
    round_robin_review,
    smooth_nash,
    tpms,
    util_rule,
)
from harmratio.space import (
    EnumeratedSpace,
    IntegerProgramSpace,
    OutcomeSpace,
    PolytopeSpace,
    discretize_goods,
    enumerate_allocations,
    enumerate_budget_feasible,
    enumerate_review_assignments,
    fractional_goods_polytope,
    integer_goods_space,
    review_assignment_space,
    space_for,
    table_space,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
