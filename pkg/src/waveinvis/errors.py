"""Exception types shared across the package.

The CLI and the HTTP service map these onto exit codes / status payloads, so
they are collected here rather than scattered over the modules that raise
them.
"""


class WaveinvisError(Exception):
    """Base class for all package errors."""


class ConfigError(WaveinvisError):
    """Invalid or inconsistent run configuration."""


class CutoffError(WaveinvisError):
    """Wavenumber too close to a modal cutoff n*pi."""


class ResolutionError(WaveinvisError):
    """Mesh too coarse for the requested geometry."""


class SolverError(WaveinvisError):
    """Linear solve failed (singular or badly conditioned factorization)."""


class DimensionError(WaveinvisError):
    """Functional dimension inconsistent with the mode count or reference."""


class SingularGramError(WaveinvisError):
    """Gram matrix of the constraint densities is numerically singular."""


class DegenerateSeedError(WaveinvisError):
    """Kernel seed lies in the span of the constraint basis."""


class DivergenceError(WaveinvisError):
    """Fixed-point iteration failed to converge within its trust region."""


class ZeroAreaCellError(WaveinvisError):
    """A partition cell has (numerically) zero area."""


class EvanescentSlabError(WaveinvisError):
    """Slab oracle called with a non-propagating interior medium (1+rho <= 0)."""
