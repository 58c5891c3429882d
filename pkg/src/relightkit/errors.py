"""Exception taxonomy shared by every module.

The CLI maps these onto exit codes: parameter/usage problems exit 2,
data and domain problems exit 3.
"""


class RelightError(Exception):
    """Base class for all toolkit errors."""


class StructuralError(RelightError):
    """Containers disagree about shape, channel count, or color space tag."""


class DomainError(RelightError):
    """A value lies outside an operation's mathematical domain."""


class ParameterError(RelightError):
    """A configuration value violates its documented constraints."""


class MeshParseError(RelightError):
    """A mesh file record could not be parsed; message carries the line number."""


class EmptyMeshError(RelightError):
    """A mesh source yielded zero triangles."""


class DegenerateGeometryError(RelightError):
    """Geometry degenerates (e.g. a point light coincides with a surface point)."""


class NoShadowPixelsError(RelightError):
    """Ambient estimation found no shadow pixels to average."""


class ContractError(RelightError):
    """An operation was invoked in a state its contract forbids."""


#: Errors that indicate bad configuration or usage (CLI exit code 2).
USAGE_ERRORS = (ParameterError,)

#: Errors that indicate bad data or domain violations (CLI exit code 3).
DATA_ERRORS = (
    StructuralError,
    DomainError,
    MeshParseError,
    EmptyMeshError,
    DegenerateGeometryError,
    NoShadowPixelsError,
    ContractError,
)
