"""Exception hierarchy shared by the collapse models and the experiment driver."""


class CollapseSimError(Exception):
    """Base class for every error raised by csl_sim"""


class ParameterError(CollapseSimError, ValueError):
    """A scalar parameter is outside its allowed range (dt, rates, grids...)"""


class ResolutionError(ParameterError):
    """A sampling grid is too coarse or too narrow for the requested basis"""


class InputError(CollapseSimError, ValueError):
    """An array argument is malformed: wrong shape, not Hermitian, not normalized"""


class ContractViolation(InputError):
    """Collapse-generating operators that were promised to commute do not"""


class NumericError(CollapseSimError, ArithmeticError):
    """A quadrature or integrator produced NaN/inf or an unphysical value"""


class ConfigError(CollapseSimError):
    """An experiment configuration document is invalid"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
