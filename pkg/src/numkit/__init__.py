from .rng import Rng, rng_next, rng_uniform, rng_permutation, derive_seed
from .linalg import (
    Matrix, Vector, as_matrix, as_vector, ensure_finite, uniform_init,
    matvec, matvec_transposed, outer_accumulate, identity,
)
