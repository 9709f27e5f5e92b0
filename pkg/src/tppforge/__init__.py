"""Exact search and verification tools for the triple product property in finite groups."""

from .catalog import group_from_text, parse_group_spec
from .errors import TppForgeError
from .groups import GroupSpec, GroupTable, build_group, enumerate_subgroups
from .search import SearchConfig, SearchReport, beta0_exact, beta_exact, run_search, search_best_of_type
from .tpp import TppTriple, is_tpp_definitional, is_tpp_quotient

__all__ = [
    "GroupSpec",
    "GroupTable",
    "SearchConfig",
    "SearchReport",
    "TppForgeError",
    "TppTriple",
    "beta0_exact",
    "beta_exact",
    "build_group",
    "enumerate_subgroups",
    "group_from_text",
    "is_tpp_definitional",
    "is_tpp_quotient",
    "parse_group_spec",
    "run_search",
    "search_best_of_type",
]
__version__ = "0.1.0"
