from __future__ import annotations


class SparsePRError(Exception):
    """Base class for every error raised by sparse_pr."""


class InvalidArgumentError(SparsePRError, ValueError):
    pass


class RefusedError(InvalidArgumentError):
    """Request is well-formed but too expensive to honour (brute force)."""


class CollisionError(SparsePRError, ValueError):
    """Two distinct point pairs map to the same difference."""


class DegenerateInputError(SparsePRError, ValueError):
    """Numerical system is rank-deficient or ill-conditioned."""


class DegenerateOutputError(SparsePRError, RuntimeError):
    pass


class LabelingError(SparsePRError, ValueError):
    """No ACF atom close enough to a pairwise difference of the support."""


class AmplitudeDomainError(SparsePRError, ValueError):
    """Log-domain amplitude recovery needs strictly positive weights."""


class InconsistentMeasurementError(SparsePRError, ValueError):
    pass
