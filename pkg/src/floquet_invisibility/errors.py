"""Exception hierarchy shared by the solvers and the CLI."""


class FloquetError(Exception):
    """Base class; ``to_dict`` gives the structured form echoed by the CLI."""

    def to_dict(self):
        d = {"error": type(self).__name__, "message": str(self)}
        d.update({k: v for k, v in vars(self).items() if not k.startswith("_")})
        return d


class ChannelOpening(FloquetError):
    """A Floquet sideband sits on a band edge, where amplitudes diverge."""

    def __init__(self, alpha, energy, message=None):
        self.alpha = int(alpha)
        self.energy = float(energy)
        super().__init__(
            message or f"channel alpha={alpha} opens at E={energy:.12g} (|cos q_alpha| = 1)"
        )


class BandEdge(FloquetError):
    """Incidence momentum on a band edge (zero group velocity)."""


class SingularMatrix(FloquetError):
    pass


class NoConvergence(FloquetError):
    pass


class GeometryError(FloquetError):
    pass


class BoundaryBreach(FloquetError):
    pass


class StepTooLarge(FloquetError):
    pass


class ScanResolutionTooCoarse(FloquetError):
    pass


class ConfigError(FloquetError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        super().__init__(message)


class ValidationError(ConfigError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)
