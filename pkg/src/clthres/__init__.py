"""Chow-Liu forest learning with adaptive mutual-information thresholding."""

from .core import (
    DirectedForest,
    ForestModel,
    NodeDist,
    PairwiseDist,
    conditional_kl,
    directed_decomposition,
    forest_kl,
    forest_projection,
    kl_divergence,
    log_likelihood,
    mutual_information,
    pairwise_marginal,
    project_onto_structure,
)
from .estimation import SampleMatrix, all_empirical_mi, empirical_pairwise
from .learning import EdgeRanking, LearnedModel, RegSchedule, chow_liu, clthres, kruskal_mwst
from .synthgen import SeededRng, StarForestSpec, build_random_forest, build_star_forest, sample

__version__ = "0.1.0"

__all__ = [
    "DirectedForest",
    "EdgeRanking",
    "ForestModel",
    "LearnedModel",
    "NodeDist",
    "PairwiseDist",
    "RegSchedule",
    "SampleMatrix",
    "SeededRng",
    "StarForestSpec",
    "all_empirical_mi",
    "build_random_forest",
    "build_star_forest",
    "chow_liu",
    "clthres",
    "conditional_kl",
    "directed_decomposition",
    "empirical_pairwise",
    "forest_kl",
    "forest_projection",
    "kl_divergence",
    "kruskal_mwst",
    "log_likelihood",
    "mutual_information",
    "pairwise_marginal",
    "project_onto_structure",
    "sample",
]
