"""Error types shared by the iterative solvers."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """An iterative solve hit its iteration budget before its tolerance.

    Carries whatever partial result was available for diagnosis (an
    eigenpair with its trace, or the last Dirichlet iterate).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
