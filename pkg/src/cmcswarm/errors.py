"""Exception types shared across the package."""


class CmcError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CmcError):
    """Inconsistent dimensions or invalid parameter values."""


class VelocityBoundError(CmcError):
    """A measured speed exceeds the swarm-wide velocity bound beyond tolerance."""


class DegenerateGeometryError(CmcError):
    """Two points coincide, so no separating plane exists."""


class OutOfWorkspaceError(CmcError):
    """A position lies outside every inset free-space cell."""


class GeneratorError(CmcError):
    """Scenario generation failed (e.g. rejection sampling exhausted)."""


class PrecheckError(CmcError):
    """Scenario failed the initial feasibility pre-check; refusing to run."""


class InfeasibleStartError(CmcError):
    """All planner branches failed and no stored braking plan exists."""


class HardRunError(CmcError):
    """A controller raised a hard error mid-run; the simulation was aborted."""


class ArtifactError(CmcError):
    """Run artifacts are missing or malformed."""
