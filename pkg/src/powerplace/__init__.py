"""Optimal two-dimensional placement of hierarchical powertrain layouts."""

from .formulation import (BigM, Formulation, OrientationRequirement,
                          build_model, compute_big_m, derive_orientation)
from .milp import MilpModel
from .model import (Connection, DesignSpace, Edge, ElementSpec, EnergyDomain,
                    FixedPose, GroupDirective, InterferencePair, PortRef,
                    PortSpec, SystemDescription, ValidatedSystem,
                    ValidationError, group_elements, interference_pairs,
                    validate)
from .oracle import (OrientationState, enumerate_optimal,
                     regenerate_truth_tables, simulate_orientation)
from .solution import SolutionDocument, build_solution_document
from .solver import (LpSolution, MipSolution, SolveOptions, branch_and_bound,
                     solve_lp, verify_assignment)

__version__ = "0.1.0"

__all__ = [
    "BigM", "Connection", "DesignSpace", "Edge", "ElementSpec", "EnergyDomain",
    "FixedPose", "Formulation", "GroupDirective", "InterferencePair",
    "LpSolution", "MilpModel", "MipSolution", "OrientationRequirement",
    "OrientationState", "PortRef", "PortSpec", "SolutionDocument",
    "SolveOptions", "SystemDescription", "ValidatedSystem", "ValidationError",
    "branch_and_bound", "build_model", "build_solution_document",
    "compute_big_m", "derive_orientation", "enumerate_optimal",
    "group_elements", "interference_pairs", "regenerate_truth_tables",
    "simulate_orientation", "solve_lp", "validate", "verify_assignment",
]
