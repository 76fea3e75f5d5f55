"""Rates and capacity of two-relay diamond channels with a state known at the source.

The state-dependent channel reaches the destination through two relays
that are fed by rate-limited links from the source.  The package
evaluates the capacity and achievable rates of this model for finite
alphabets (by brute force), for a binary example and for the Gaussian
model, plus a small Monte Carlo check of the binning scheme.
"""

from .binary_line import (BinaryInputPolicy, BinaryLineParams, capacity_binary,
                          r_pure_message_binary, r_separate_binary)
from .errors import (ConfigError, DegenerateConstructionError, DiamondCapError, DomainError,
                     InfeasibleError, SingularityError)
from .gaussian_rates import (GaussianDiamondParams, GpQsPoint, c1_limit_capacity, r_gp_qs,
                             r_no_si, r_qgp, r_upper_gaussian)
from .optimizer import GridConfig, RateResult, maximize_min

__version__ = "0.1.0"
