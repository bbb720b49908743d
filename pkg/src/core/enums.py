import enum


class InitialConditionPreset(str, enum.Enum):
    RANDOM_HK = "random_hk"
    GAUSSIAN_VORTICES = "gaussian_vortices"
    SHEAR = "shear"
    ROUGH = "rough"
    PROFILE = "profile"


class IntegratorScheme(str, enum.Enum):
    """Time integrators for the advective part; dissipation is always exact."""

    IMEX_EULER = "imex_euler"
    IMEX_HEUN = "imex_heun"


class MultiplierMethod(str, enum.Enum):
    BESSEL = "bessel"
    QUADRATURE = "quadrature"


class DiagnoseKind(str, enum.Enum):
    OSCILLATION = "oscillation"
    LEVELSETS = "levelsets"
    ISOPERIMETRIC = "isoperimetric"
    RECURSION = "recursion"


class VerifySuite(str, enum.Enum):
    RIESZ = "riesz"
    EXTENSION_IDENTITY = "extension-identity"
    NEUMANN = "neumann"
    ENERGY = "energy"
    OPERATOR = "operator"
    DECAY = "decay"
    OSCILLATION = "oscillation"
    ISOPERIMETRIC = "isoperimetric"
    CONSTANTS = "constants"
    RECURSION = "recursion"
    ALL = "all"


class RecursionOutcome(str, enum.Enum):
    CONVERGES = "converges"
    DIVERGES = "diverges"
    UNCLASSIFIED = "unclassified"
