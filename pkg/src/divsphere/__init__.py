"""Divergence-free tangential vector field interpolation on the unit sphere.

Two interchangeable solvers over the same kernel space: a direct symmetric
solve of the matrix-valued kernel system, and a stable change of basis that
removes the shape-parameter powers analytically and stays well conditioned
down to the flat limit.  Both expose field evaluation and stream-function
extraction; a harness module drives shape-parameter sweeps and flat-file
I/O, and a small CLI wraps the harness.
"""

from .geom import (
    TangentFrame,
    cross_matrix,
    hammersley_nodes,
    latlon_grid,
    reconstruct_vector,
    sphere_point,
    sphere_points,
    tangent_frame,
    tangent_frames,
)
from .harmonics import (
    HarmonicEnumeration,
    HarmonicIndex,
    assoc_legendre,
    divfree_components,
    divfree_harmonic,
    enumerate_harmonics,
    harmonic_matrix,
    scalar_harmonic,
    scalar_harmonic_matrix,
)
from .kernels import (
    KERNELS,
    CoefficientTable,
    KernelConfig,
    SeriesConvergenceError,
    TruncationCapError,
    TruncationPlan,
    build_truncation_plan,
    expansion_coeff,
    minimum_degree,
    phi,
    radial_factors,
    scaled_expansion_coeff,
)
from .direct import (
    DirectInterpolant,
    NotDefiniteError,
    TangentFieldSamples,
    assemble_system,
    eval_direct,
    fit_direct,
    kernel_block,
    stream_direct,
)
from .rbfqr import (
    QRInterpolant,
    SingularSystemError,
    StableBasis,
    UnisolvencyError,
    basis_eval,
    build_stable_basis,
    epsilon_exponents,
    eval_qr,
    expansion_matrix,
    fit_qr,
    stream_qr,
)
from .harness import (
    ParseError,
    SweepReport,
    SweepRow,
    TargetField,
    builtin_target,
    read_nodes,
    read_samples,
    relative_max_error,
    run_sweep,
    samples_from_target,
    stream_error,
    write_nodes,
    write_report,
    write_samples,
)

__version__ = "0.1.0"
