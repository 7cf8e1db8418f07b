"""Isoperimetric profiles of measures on the line and dimension-free bounds
for their products under the uniform (max-coordinate) enlargement."""

from .errors import DomainError, NumericalError, PreconditionError
from .measure1d import (IntervalUnion, Measure1D, boundary_measure_1d, cdf,
                        check_halfline_optimal, measure_from_profile, parse_measure,
                        profile_J, quantile)
from .profiles import (Ent, J0, J1, Kbeta, Ma, MinExp, Profile, SupProfile, Tabulated,
                       parse_profile, sup_profile, symmetry_defect, tabulate)

__version__ = "0.1.0"
