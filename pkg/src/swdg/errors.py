"""Exception types shared across the solver."""


class SwdgError(Exception):
    """Base class for all solver errors."""


class MeshError(SwdgError):
    """Structural mesh problem (non-manifold edge, bad orientation, inverted element)."""


class UnsupportedOrderError(SwdgError):
    """Requested polynomial order outside the supported range 0..3."""


class DomainError(SwdgError):
    """Evaluation point outside the reference triangle."""


class ConfigError(SwdgError):
    """Invalid run configuration."""


class DepthError(SwdgError):
    """Depth degeneracy: non-positive water column or singular local system."""


class InvariantError(SwdgError):
    """A runtime invariant was violated (NaN/Inf state, H <= 0 at flux evaluation)."""
