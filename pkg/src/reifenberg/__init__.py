"""Reifenberg flatness of point clouds, box-counting dimensions and covering/packing pre-measures."""

from .flatness import (
    DEFAULT_DELTA_GRID,
    PROPERTY_IDS,
    PROPERTY_NAMES,
    FlatnessProfile,
    ReifenbergVerdict,
    classify,
    flatness_profile,
    strong_flatness,
)
from .generators import (
    GeneratorSpec,
    comb_slabs,
    gen_circle,
    gen_comb,
    gen_koch,
    gen_lipschitz_graph,
    gen_plane_patch,
    gen_variable_koch,
    koch_pieces,
    union,
)
from .geometry import (
    AffinePlane,
    Ball,
    InputError,
    PointCloud,
    ScaleLadder,
    distance_point_plane,
    fit_plane,
    hausdorff_distance,
    neighborhood,
    one_sided_deviation,
)
from .harness import TableConfig, TableExpectation, TableReport, run_pipeline, verify_table
from .io import read_cloud, write_cloud
from .measure import (
    DimensionEstimate,
    MeasureReport,
    box_count,
    covering_recursion_check,
    eta,
    graph_ball_lower_bound_check,
    hausdorff_premeasure,
    lipschitz_constants,
    measure_compare,
    minkowski_dims,
    packing_dim_bound,
    packing_premeasure,
    slab_covering_constant,
)

__version__ = "0.1.0"
