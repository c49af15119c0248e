"""Shape from a virtually warped texture.

Stage I deforms a regular virtual texture over an input image under an
image-guidance gradient; Stage II recovers a depth map from the deformed
texture coordinates by minimizing a conformal energy on the grid mesh.
"""

from .conformal import TriangleSet, laplacian_l1, lscm_energy, triangulate
from .grids import masked_stats, read_pfm, read_pnm, write_pfm, write_pnm
from .guidance import (
    GuidanceRequest,
    GuidanceResponse,
    NoisyOracleGuidance,
    OracleGuidance,
    RemoteGuidance,
)
from .optimize import (
    Adam,
    Snapshot,
    StageConfig,
    forward_lscm,
    select_snapshot,
    spherical_init,
    stage1,
    stage2,
)
from .render import (
    Camera,
    blend,
    checkerboard,
    normals_from_depth,
    rasterize_ortho,
    resample_inverse,
    sample_bilinear,
)
from .warpfield import (
    identity_coords,
    init_identity,
    integrate,
    pyramid_kernel,
    synthesize,
)

__version__ = "0.1.0"
