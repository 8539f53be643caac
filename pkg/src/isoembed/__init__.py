"""Local isometric embedding of 2-metrics given in geodesic parameters."""
from .characteristics import GeodesicCharacteristic, InitialData1D, solve_u_hat, solve_v_hat
from .components import ComponentPair, augmented_determinant, consistency_residual, cramer_RS
from .embedding import EG_from_ab, EmbeddedSurface, build_surface, export_mesh
from .errors import (
    DomainExitError,
    InconsistencyError,
    InversionError,
    PipelineError,
    PositivityError,
    RangeError,
    RealityViolation,
    SingularJacobianError,
)
from .expr import derive, evaluate, parse, render
from .metric import FirstFundamentalForm, GeodesicMetric, OrthogonalMetric, Rect, ScalarField2
from .ode_system import choose_hhat, integrate
from .pipeline import PipelineConfig, run_pipeline, sweep
from .transform import ParamMap2, geodesic_map, invert_plane
from .verify import check_claim_ER_GS, induced_fff, worked_example, surface_curvature

__version__ = "0.1.0"
