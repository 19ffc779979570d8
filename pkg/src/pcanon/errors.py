"""Exception taxonomy for the pcanon package.

Every failure mode that reflects bad input or a broken mathematical
invariant gets its own class, so callers (and the test suite) can tell
"you gave me garbage" apart from "an internal certificate failed".
All of them derive from PCanonError.
"""

__all__ = [
    'PCanonError',
    'InvalidGCM',
    'MixedSystems',
    'Overflow',
    'NotMinimalRep',
    'DivisionByNonRoot',
    'NotInRI',
    'NotConstant',
    'FrameMismatch',
    'NoBraidRelation',
    'MissingBraidMatrix',
    'Underdetermined',
    'NoSolution',
    'MissingDependency',
    'NonConstantEntry',
    'NoUnitPivot',
    'SolveFailure',
    'CharacterMismatch',
    'NonIntegerEntry',
    'NegativeCoefficient',
    'ConflictingKnownValue',
    'VersionMismatch',
    'CorruptCheckpoint',
    'ConfigError',
]


class PCanonError(Exception):
    """Base class for all package-specific errors."""


class InvalidGCM(PCanonError):
    """The given matrix is not a generalized Cartan matrix."""


class MixedSystems(PCanonError):
    """Two objects from different Coxeter systems were combined."""


class Overflow(PCanonError):
    """A packed exponent outgrew its field width."""


class NotMinimalRep(PCanonError):
    """An element is not minimal in its parabolic coset."""


class DivisionByNonRoot(PCanonError):
    """A rational function inverse would need a non-root, non-unit factor."""


class NotInRI(PCanonError):
    """A rational function does not lie in the parabolic subring R_I."""


class NotConstant(PCanonError):
    """A rational function expected to be a constant is not."""


class FrameMismatch(PCanonError):
    """Composition or comparison of matrices over different frames."""


class NoBraidRelation(PCanonError):
    """The pair of generators has infinite order, so no braid matrix exists."""


class MissingBraidMatrix(PCanonError):
    """A braid matrix is needed but neither builtin, derived, nor imported."""


class Underdetermined(PCanonError):
    """The braid matrix constraints admit more than one solution."""


class NoSolution(PCanonError):
    """The braid matrix constraints admit no solution."""


class MissingDependency(PCanonError):
    """An element's data was requested before it was computed."""


class NonConstantEntry(PCanonError):
    """An intersection-form entry failed to be a scalar."""


class NoUnitPivot(PCanonError):
    """A nonzero modular rank with no unit entry to pivot on."""


class SolveFailure(PCanonError):
    """An exact linear solve that must succeed did not."""


class CharacterMismatch(PCanonError):
    """Two independently computed characters disagree."""


class NonIntegerEntry(PCanonError):
    """An intersection-pairing entry failed to be an integer."""


class NegativeCoefficient(PCanonError):
    """A multiplicity that must be nonnegative came out negative."""


class ConflictingKnownValue(PCanonError):
    """Two symmetry transports assign different values to one coefficient."""


class VersionMismatch(PCanonError):
    """A checkpoint file was written by an incompatible format version."""


class CorruptCheckpoint(PCanonError):
    """A checkpoint file failed its integrity hash."""


class ConfigError(PCanonError):
    """An invalid run configuration."""
