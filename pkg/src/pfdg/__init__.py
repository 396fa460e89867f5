"""Penalty-free mixed discontinuous Galerkin solvers for fourth-order PDEs."""
from .field import DGField, error_l2, error_linf, l2_project
from .forms import (
    AssembledForm,
    OperatorSpec,
    assemble_A_boundary,
    assemble_A_periodic_1d,
    assemble_A_periodic_2d,
    assemble_mass,
    assemble_sh_form,
    assemble_tilde_A,
    build_operator,
)
from .mesh import Mesh1D, Mesh2D, build_mesh_1d, build_mesh_2d
from .quadrature import eval_basis, gauss_legendre
from .stepper import SchemeConfig, ThetaStepper, cfl_max_dt, evolve, gamma_k, recover_q

__version__ = "0.1.0"
