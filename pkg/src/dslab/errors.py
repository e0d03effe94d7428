"""Exception hierarchy shared by every ``dslab`` module."""


class DSLabError(Exception):
    """Base class for all errors raised by dslab."""


class DimOutOfRange(DSLabError, ValueError):
    pass


class ModulusTie(DSLabError, ArithmeticError):
    """Two eigenvalues have (numerically) equal modulus.

    Happens on a Haar-null set of a coset ``U(d) A``; Monte Carlo loops
    resample and count the skip.
    """


class Singular(DSLabError, ArithmeticError):
    pass


class NoConvergence(DSLabError, ArithmeticError):
    pass


class NotOrthonormal(DSLabError, ValueError):
    pass


class NotDescending(DSLabError, ValueError):
    pass


class Parabolic(DSLabError, ValueError):
    """|trace| = 2 after determinant normalisation; no measure is assigned."""


class BadParameter(DSLabError, ValueError):
    pass


class OutOfSupport(DSLabError, ValueError):
    pass


class ScalarInput(DSLabError, ValueError):
    pass


class NegDetInput(DSLabError, ValueError):
    pass


class NoRoot(DSLabError, ArithmeticError):
    pass


class DerivativeVanishing(DSLabError, ArithmeticError):
    pass
