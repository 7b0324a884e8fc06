"""Occupancy-grid SLAM: log-odds scan integration, likelihood-field scan
matching, Rao-Blackwellized particle-filter mapping, Monte-Carlo
localization on a fixed map, and map-agreement scoring."""

from .mapping import MappingParams, integrate_scan
from .likelihood import LikelihoodField
from .scanmatch import ScanMatchParams, ScanMatchResult, scan_match
from .rbpf import SlamParams, SlamState, slam_init, slam_step
from .mcl import MclParams, MclState, mcl_init, mcl_init_global, mcl_step
from .agreement import AgreementResult, map_agreement

__all__ = [
    "MappingParams", "integrate_scan",
    "LikelihoodField",
    "ScanMatchParams", "ScanMatchResult", "scan_match",
    "SlamParams", "SlamState", "slam_init", "slam_step",
    "MclParams", "MclState", "mcl_init", "mcl_init_global", "mcl_step",
    "AgreementResult", "map_agreement",
]
