"""Exact desk-scale analysis of weak coin flipping with causal boxes."""
from .distribution import Distribution, tv_distance
from .engine import SystemGraph, run_exact, sample
from .fractions_io import fmt, parse_fraction
from .poset import CausalityFn, DelayFn, Poset, union_posets
from .wcf import WcfParams, WcfProtocol, verify_standalone

__all__ = ["Distribution", "tv_distance", "SystemGraph", "run_exact", "sample", "fmt",
           "parse_fraction", "CausalityFn", "DelayFn", "Poset", "union_posets",
           "WcfParams", "WcfProtocol", "verify_standalone"]
