"""Decision rules for goods division, participatory budgeting, and reviewer assignment."""
from harmratio.rules.base import RuleResult
from harmratio.rules.goods import GOODS_RULES, egal_rule, goods_rules, nash_rule, round_robin_goods, util_rule
from harmratio.rules.pb import (
    PB_RULES,
    global_u,
    greedy_complete,
    greedy_u,
    mes,
    method_of_equal_shares,
    nash_pb,
    pav,
    pb_rules,
    phragmen,
    phragmen_rule,
    smooth_nash,
)
from harmratio.rules.review import REVIEW_RULES, leximin_review, nash_review, review_rules, round_robin_review, tpms

__all__ = [
    "RuleResult", "GOODS_RULES", "PB_RULES", "REVIEW_RULES",
    "goods_rules", "pb_rules", "review_rules",
    "egal_rule", "nash_rule", "util_rule", "round_robin_goods",
    "global_u", "greedy_u", "greedy_complete", "mes", "method_of_equal_shares", "phragmen", "phragmen_rule",
    "nash_pb", "pav", "smooth_nash",
    "tpms", "nash_review", "leximin_review", "round_robin_review",
]
