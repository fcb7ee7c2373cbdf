"""Fairness-aware minimum load shedding on damaged DC power grids."""

from .caseio import (
    Bus,
    CaseFormatError,
    Generator,
    Line,
    Load,
    Network,
    bundled_case_path,
    parse_case,
    parse_case_file,
    read_weights,
    validate,
)
from .conic import (
    Cone,
    ConicProgram,
    PowerGadget,
    ShedVector,
    add_eps_fairness,
    build_fair_mls,
    build_mls,
    build_mls_minmax,
    build_mls_pnorm,
    extract_shed,
    kappa,
    power_epigraph,
)
from .fairness import FairnessReport, eps_max, gini, jain, pof, variance_bound_gap
from .scenario import (
    DamagedNetwork,
    DamageScenario,
    apply_damage,
    enumerate_damage,
    sample_damage,
    scenario_count,
    scenario_from_ordinal,
)
from .solver import (
    Residuals,
    SolveResult,
    SolveSettings,
    SolveStatus,
    check_certificate,
    solve,
)

__version__ = "0.1.0"
