"""Exception types shared across the package."""


class ShapeMismatchError(ValueError):
    """Operands or indices disagree with a tensor's core shapes."""


class OutOfDomainError(ValueError):
    """A continuous coordinate lies outside its grid range."""


class StaleCacheError(ValueError):
    """A suffix-sum cache no longer matches the tensor it summarizes."""


class SizeLimitError(ValueError):
    """A dense reconstruction or exhaustive scan would exceed the safety limit."""


class ConfigError(ValueError):
    """A problem/suite configuration file is malformed."""


class SolverIncompatibleError(ValueError):
    """The requested solver cannot handle the given problem class."""
