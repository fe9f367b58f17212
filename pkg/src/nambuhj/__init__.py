"""Nambu-Jacobi brackets with their Hamilton-Jacobi theory."""

from .brackets import (
    Residual,
    VnjStructure,
    box_bracket,
    det_generic,
    fundamental_identity_residual,
    lambda_bracket,
    leibniz_residual,
    nj_bracket,
    skew_residual,
)
from .errors import (
    ArityError,
    ConfigError,
    DegeneratePointError,
    DivergenceError,
    DomainError,
    InvalidInputError,
    NambuError,
    ParseError,
    UnboundParameterError,
    UnknownIdentifierError,
)
from .exprlang import ScalarField, evaluate, parse, pretty
from .fields import (
    HamiltonianSystem,
    characteristic_rank,
    ham_vf,
    ham_vf_composed,
    lie_derivative_residual,
    vf_from_brackets,
)
from .flows import Trajectory, integrate
from .hj import (
    Cloud,
    QuasiLinearPde,
    Section,
    assemble_hj_pde,
    estimate_cloud_residual,
    hj_residual,
    project_vf,
    relatedness_residual,
    solve_characteristics,
    theorem_sign,
)
from .jets import Jet2, seed_jets
from .riccati import RiccatiParams, riccati_hj, riccati_system
from .wedge import KForm, Subspace, annihilator, is_j_lagrangian, sharp_box, sharp_lambda, wedge

__version__ = "0.1.0"
