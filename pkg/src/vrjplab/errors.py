"""Exception types shared across the package."""


class VrjplabError(Exception):
    """Base class for all package errors."""


class CapacityError(VrjplabError):
    """Requested object exceeds the configured memory cap."""


class PartitionError(VrjplabError, ValueError):
    """Blocks overlap, leave vertices uncovered, or reference unknown vertices."""


class NotPositiveDefiniteError(VrjplabError):
    """A matrix that must be SPD failed its factorization.

    For a sampled potential this signals an invalid sample: the sample must be
    discarded, never patched.
    """


class NumericalError(VrjplabError):
    """A linear solve or transform lost too much accuracy to be trusted."""
