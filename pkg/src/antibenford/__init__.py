"""Detect dense subgraphs of transaction networks whose amounts violate Benford's law."""

from .benford import BENFORD, BenfordModel, ChiSquareResult, DigitHistogram, chi_square, first_digit, histogram, psi
from .dsp import ReweightedGraph, brute_force_densest, exact_densest, greedy_peel, peel_iterations
from .pipeline import DetectionConfig, SubgraphReport, detect_one, detect_topk, find_candidate, global_stats
from .scoring import NodeScoreTable, node_scores, reweight
from .synthgen import SynthSpec, generate, generate_null
from .txgraph import IngestConfig, TransactionGraph, load_csv

__version__ = "0.1.0"
