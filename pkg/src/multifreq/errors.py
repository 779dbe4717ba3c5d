"""Exception types raised across the toolkit."""


class MultifreqError(Exception):
    """Base class for all toolkit errors."""


class EmptyRegionError(MultifreqError, ValueError):
    """The requested interior region contains no vertices."""


class NearEigenvalue(MultifreqError):
    """omega**2 lies too close to the Dirichlet spectrum for a lossless solve."""

    def __init__(self, omega, distance, gap_tol):
        self.omega = omega
        self.distance = distance
        self.gap_tol = gap_tol
        super().__init__(
            f"omega={omega:g}: spectral distance {distance:.3e} < gap_tol {gap_tol:.3e}"
        )


class SingularSystem(MultifreqError):
    """Factorization failed or the residual contract was not met."""


class SpectrumError(MultifreqError, ValueError):
    """Bad request to the eigenvalue estimator."""


class NoGap(MultifreqError):
    """No eigenvalue-free subinterval survives the shrinking step."""


class NotReached(MultifreqError):
    """find_min_n exhausted n_max without reaching the target constant."""

    def __init__(self, n_max, best_n, report):
        self.n_max = n_max
        self.best_n = best_n
        self.report = report
        achieved = report.achieved_C if report is not None else float("nan")
        super().__init__(
            f"target not reached for n <= {n_max} (best n={best_n}, C={achieved:.4g})"
        )


class EmptyMask(MultifreqError):
    """The validity mask of a reconstruction excludes every region vertex."""


class ConfigError(MultifreqError, ValueError):
    """Run configuration failed validation."""


class SingularA(MultifreqError):
    """The gradient matrix of the data ratios is singular at some vertex."""


class MissingArtifact(MultifreqError):
    """A run directory lacks the outputs a report needs."""


class ModeDivergenceWarning(UserWarning):
    """The two source-term conventions of the log-permittivity solve disagree."""
