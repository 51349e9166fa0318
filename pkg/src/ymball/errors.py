"""Error conditions raised by the lattice gauge laboratory.

Every failure mode that callers are expected to branch on gets its own
class; anything else surfaces as a plain ValueError. Warnings mirror the
conditions that return a value but deserve a flag.
"""


class YmballError(Exception):
    """Base class for all package-specific failures."""


# algebra / group
class AntipodalPoint(YmballError):
    """log requested at (or within 1e-9 of) the antipode of the identity."""


class DegenerateAverage(YmballError):
    """Quaternion with norm below 1e-9 cannot be projected to the group."""


# lattice geometry and fields
class TooCoarse(YmballError):
    """Lattice has fewer than 8 sites per axis."""


class SpecMismatch(YmballError):
    """Two fields on different lattices were combined."""


class GeometryMismatch(YmballError):
    """Two slices with different centers, radii or grids were combined."""


class UnsupportedDegree(YmballError):
    """Differential-form degree outside the implemented range."""


class SliceTooSmall(YmballError):
    """Sphere slice radius below 3 lattice spacings."""


class SliceOutOfDomain(YmballError):
    """Sphere slice (plus interpolation margin) leaves the lattice ball."""


class ShellOutOfDomain(YmballError):
    """Shell integration sphere leaves the lattice ball."""


class BallOutOfDomain(YmballError):
    """Ball for a density ratio or replacement leaves the domain."""


class AnnulusOutOfDomain(YmballError):
    """Radial-gauge annulus leaves the lattice ball."""


class EmptyRegionWarning(UserWarning):
    """Integration region contains no lattice sites; the integral is 0."""


# gauge fixing
class NotRadialGauge(YmballError):
    """Field passed as radially gauged still has a radial component."""


class TransitionTooLarge(YmballError):
    """Annulus transition gauge is farther than the smallness threshold
    from its group average, so log-interpolation is not well defined."""


class SolverStall(YmballError):
    """Iterative solver made no progress for many consecutive steps."""


# approximation pipeline
class NoAdmissibleDraw(YmballError):
    """No random radius draw satisfied the grid shell inequalities."""

    def __init__(self, msg, best_ratios=None):
        super().__init__(msg)
        self.best_ratios = best_ratios


class ShellEnergyTooLarge(YmballError):
    """Good-ball replacement invoked on a shell exceeding eps0."""


class ModeUnavailable(YmballError):
    """Bad-ball mode cannot run (e.g. shell energy too large for morrey)."""


class KernelTooNarrow(YmballError):
    """Mollifier width below twice the slice node spacing."""


class EnergyTooLarge(YmballError):
    """Slice energy exceeds the smallness threshold eps0."""


class NotLipschitz(YmballError):
    """Supplied test function violates the |d xi| <= 1 constraint."""


class CurvatureMismatch(YmballError):
    """Curvature field does not match the connection it was derived from."""


class SupportTouchesBoundary(YmballError):
    """Inner-variation vector field does not vanish near the shell."""


# solver outcomes
class Diverged(YmballError):
    """Energy increased beyond recovery or became non-finite."""


# I/O
class SnapshotError(YmballError):
    """Base for snapshot read failures."""


class BadMagic(SnapshotError):
    """File does not start with the snapshot magic."""


class VersionMismatch(SnapshotError):
    """Snapshot version field is not supported."""


class TruncatedFile(SnapshotError):
    """Snapshot payload shorter than the header promises."""


class ConfigError(YmballError):
    """One or more config-file errors; carries the full list."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(str(p) for p in self.problems))
