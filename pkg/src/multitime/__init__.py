"""Multi-time quantum process matrices: synthesis, tomography, analysis.

The pipeline runs in five stages, each usable on its own:

- :mod:`multitime.qops`        labeled-operator algebra (tensor, traces,
  transposes, Choi forms, link products)
- :mod:`multitime.model`       exact process matrices of a qubit coupled to
  one memory qubit
- :mod:`multitime.protocol`    the 324-setting tomography protocol, exact
  outcome distributions and shot sampling
- :mod:`multitime.reconstruct` least-squares inversion and projection onto
  the physical set
- :mod:`multitime.analyze`     non-Markovianity metrics, bootstrap credible
  intervals, parameter scans
"""

from .analyze import (BootstrapResult, MetricsReport, bootstrap_ci, landscape_scan,
                      markovian_reference, negativity, sqrt_jsd)
from .fileio import InputDataError, UsageError
from .model import (WEAK_COUPLING_PARAMS, STRONG_COUPLING_PARAMS, ModelParams, ProcessMatrix,
                    free_evolution, hamiltonian, ideal_process_matrix,
                    model_process_matrix)
from .protocol import (BasisState, CountsTable, Observable, ReadoutErrorModel,
                       RotationGate, Setting, ShotTuple, born_distribution,
                       effect_operator, enumerate_settings, exact_counts,
                       read_counts, realized_preparation, sample_counts,
                       write_counts)
from .qops import (LabeledOperator, PROCESS_LABELS, choi_of_unitary, hermitian_eig,
                   identity, link_product, partial_trace, partial_transpose, pauli,
                   read_operator, reorder, tensor, trace_and_replace, write_operator)
from .reconstruct import (CombConstraintReport, ProjectionResult,
                          comb_subspace_projection, constraint_report, design_matrix,
                          invert_counts, pauli_coefficients, project_physical)

__version__ = "0.1.0"
