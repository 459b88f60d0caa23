"""slicekit: desk-scale program slicing toolkit.

Parsing and dataflow graphs for Java/Python snippets, dataflow-aware
pretraining corpus generation, the TSED structural metric, lexically and
syntactically constrained beam-search decoding, a reference graph-reachability
slicer, and an evaluation harness.
"""

from .corpusgen import (
    CorruptionExample,
    PermutationExample,
    SftExample,
    format_sft,
    independent_pairs,
    permute_statements,
    span_corrupt,
)
from .decode import DecodeConfig, constrained_beam_search, run_beam_search
from .dfg import DataFlowGraph, VarOccurrence, build_dfg
from .evaluate import acc_d, evaluate, exact_match
from .oracle import Slice, SliceQuery, oracle_slice
from .syntax import SyntaxTree, TreeNode, parse
from .tsedmod import TsedScore, monotonic_check, tsed, tree_edit_distance
from .units import SourceUnit, Statement, extract_statements, parse_unit, same_basic_block

__all__ = [
    "CorruptionExample",
    "DataFlowGraph",
    "DecodeConfig",
    "PermutationExample",
    "SftExample",
    "Slice",
    "SliceQuery",
    "SourceUnit",
    "Statement",
    "SyntaxTree",
    "TreeNode",
    "TsedScore",
    "VarOccurrence",
    "acc_d",
    "build_dfg",
    "constrained_beam_search",
    "evaluate",
    "exact_match",
    "extract_statements",
    "format_sft",
    "independent_pairs",
    "monotonic_check",
    "oracle_slice",
    "parse",
    "parse_unit",
    "permute_statements",
    "run_beam_search",
    "same_basic_block",
    "span_corrupt",
    "tsed",
    "tree_edit_distance",
]

__version__ = "0.1.0"
