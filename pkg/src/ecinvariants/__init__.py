"""Invariants of elliptic curves over prime fields, averaged over families."""

__version__ = "0.1.0"

from .arithfn import ArithmeticFunction, GrowthBound, builtin, moebius_invert, validate_growth
from .constants import ConstantValue, c0_euler, c0_series, koblitz_constant, moment_constant
from .ec import (
    BadReduction,
    Curve,
    GroupStructure,
    Point,
    PrimeField,
    Uncertified,
    count_points,
    enumerate_points,
    group_structure,
    has_full_torsion,
    make_curve,
    point_add,
    point_order,
    quadratic_twist,
    scalar_mul,
)
from .family import (
    BoxSpec,
    OrbitRep,
    PrimeAggregate,
    SampleReport,
    compare_main_term,
    howe_count,
    main_term_sum,
    moment_sum,
    orbit_representatives,
    prime_order_census,
    sample_box_average,
    variance_experiment,
)
from .numtheory import (
    divisors,
    factorize,
    log_integral,
    mult_fn,
    phi,
    psi,
    sieve_primes,
    smooth_count,
)
