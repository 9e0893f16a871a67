"""Super-resolution phase retrieval for sparse signals."""
from .fri import superresolve_acf
from .pipeline import reconstruct
from .support import recover_support
from .amplitudes import assemble_weight_matrix, recover_amplitudes
from .theory import success_probability
