"""Shadow-aware ratio-image relighting toolkit.

Deterministic building blocks for relighting with realistic shadows:
mesh-based shadow masks (BVH ray casting), shadow-border weight maps,
9-coefficient spherical-harmonics lighting with ambient compensation,
ratio-image relighting in gamma-corrected luminance space, and the
matching loss/metric suite.
"""

from .borderweights import BorderParams, BorderSet, border_weights
from .errors import (
    ContractError,
    DegenerateGeometryError,
    DomainError,
    EmptyMeshError,
    MeshParseError,
    NoShadowPixelsError,
    ParameterError,
    RelightError,
    StructuralError,
)
from .imagecore import (
    ColorImage,
    ColorSpace,
    gamma_decode,
    gamma_encode,
    luminance,
    rgb_to_yuv,
    yuv_to_rgb,
)
from .lighting import (
    ShLighting,
    estimate_ambient,
    inject_ambient,
    lighting_error,
    project_light,
    sh_basis,
    sh_irradiance,
    shade,
)
from .mesh import (
    GBuffer,
    Hit,
    Pose,
    Ray,
    TriMesh,
    apply_pose,
    intersect,
    load_obj,
    rasterize_geometry,
)
from .metrics import (
    MetricReport,
    dssim,
    evaluate,
    l_border,
    l_gradient,
    l_ratio,
    l_wratio,
    mse,
    si_mse,
    ssim,
)
from .relight import (
    RatioImage,
    RelightResult,
    apply_ratio,
    ratio_from_shadings,
    reciprocal,
    relight,
)
from .shadow import (
    DirectionalLight,
    PointLight,
    ShadowMask,
    cast_shadow_test,
    self_shadow_test,
    shadow_mask,
)

__version__ = "0.1.0"
