"""Shape coordinates for the Newtonian four-body problem."""

from .central_config import (
    ConicParams,
    PlanarCentralConfig,
    cayley_menger,
    dziobek_roots,
    dziobek_solve,
    equilateral_configuration,
    homographic_state,
    homographic_trajectory,
    laplace_homothetic_state,
    planar_energy_momentum,
    solve_kepler,
)
from .dynamics import (
    KinematicRates,
    accelerations,
    integrate,
    kinetic_energy_new_coords,
    newton_potential,
    rates_from_velocities,
)
from .errors import (
    Collision,
    CollisionAbort,
    ComplexDistance,
    DegenerateMasses,
    FourBodyError,
    GimbalNear,
    InconsistentAreas,
    NegativeMass,
    NoRoot,
    SolverFailure,
)
from .tetrahedron import (
    MassQuadruple,
    ShapeTetrahedron,
    build_shape_tetrahedron,
    characteristic_cubic_roots,
    reduced_mass,
    validate_shape_identities,
)
from .transforms import (
    ConfigurationState,
    CoordinateDecomposition,
    decompose_configuration,
    forward_transform,
    planar_decompose,
)

__version__ = "0.1.0"
