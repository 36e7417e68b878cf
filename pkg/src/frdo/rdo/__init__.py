"""Lagrangian mode/partition decisions with pluggable distortion."""

from .config import EncoderConfig
from .lagrangian import (DEFAULT_K, Lambda, RDCost, best_leaf_config, compare_candidates,
                         evaluate_candidates, inject_fault, lambda_from_qp, rd_cost,
                         score_distortions)
from .partition import (SPLIT_BITS, PartitionNode, SplitType, child_rects, count_shapes,
                        delta_qp_search, enumerate_shapes, exhaustive_partition_oracle,
                        legal_splits, partition_region, search_ctu)
from .stream import EncodeStats, decode_frame, encode_frame, read_header, write_tree

__all__ = [
    "DEFAULT_K", "EncodeStats", "EncoderConfig", "Lambda", "PartitionNode", "RDCost",
    "SPLIT_BITS", "SplitType", "best_leaf_config", "child_rects", "compare_candidates",
    "count_shapes", "decode_frame", "delta_qp_search", "encode_frame", "enumerate_shapes",
    "evaluate_candidates", "exhaustive_partition_oracle", "inject_fault", "lambda_from_qp",
    "legal_splits", "partition_region", "rd_cost", "read_header", "score_distortions",
    "search_ctu", "write_tree",
]
