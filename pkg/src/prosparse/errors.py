"""Exception hierarchy. Every error is a ``ValueError`` subclass except
``ResourceError``, which signals an exceeded memory or work budget."""


class ProSparseError(ValueError):
    pass


class InvalidDimensionError(ProSparseError):
    pass


class InvalidSupportError(ProSparseError):
    pass


class InvalidSparsityError(ProSparseError):
    pass


class InvalidWindowError(ProSparseError):
    pass


class InvalidInputError(ProSparseError):
    pass


class InvalidParameterError(ProSparseError):
    pass


class UndefinedCircularError(ProSparseError):
    """Circular maximum gap requested for an empty support."""


class ResourceError(RuntimeError):
    pass
