"""Exact arithmetic for elementary abelian number fields and their l-torsion savings."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AbeliaError,
    BoundExceeded,
    BudgetExceeded,
    CacheError,
    IdentityFailure,
    InvalidParams,
    ResourceError,
    SieveTooSmall,
)
from .fields import (  # noqa: E402
    AbelianExtension,
    SubfieldDescriptor,
    construct_extension,
    parse_record,
    quadratic_compositum,
)
from .quadratic import QuadraticForm, class_group, ell_torsion  # noqa: E402

__all__ = [
    "__version__",
    "AbeliaError",
    "BoundExceeded",
    "BudgetExceeded",
    "CacheError",
    "IdentityFailure",
    "InvalidParams",
    "ResourceError",
    "SieveTooSmall",
    "AbelianExtension",
    "SubfieldDescriptor",
    "construct_extension",
    "parse_record",
    "quadratic_compositum",
    "QuadraticForm",
    "class_group",
    "ell_torsion",
]
