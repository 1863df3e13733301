class DomainError(ValueError):
    """An argument lies outside the region where the quantity is defined."""


class UnsupportedError(TypeError):
    """The operation needs a finite-support law and got something else."""


class SizeError(ValueError):
    """An exact enumeration would exceed the state cap."""
