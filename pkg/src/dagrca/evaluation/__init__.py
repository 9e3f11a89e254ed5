"""Localization scoring, synthetic ground truth and structure diagnostics."""
from .metrics import GroundTruth, ac_at_k, avg_at_k, structural_metrics
from .synthetic import (
    PROFILES,
    SyntheticCase,
    TrueDag,
    choose_fault_node,
    generate_random_dag,
    inject_fault,
    make_case,
    simulate_sem,
    synthetic_ids,
)
