"""Selective tomography of one-dimensional continuous-variable states.

Simulates the controlled-translation / controlled-squeezing circuit that
measures single position-space density-matrix elements, and composes those
measurements into an adaptive piecewise-constant reconstruction.
"""

from .mesh import (
    Interval,
    MeshError,
    Partition,
    RefinementConfig,
    Region,
    RegionSelectionError,
    SupportError,
    find_support_interval,
    refine_partition,
    select_region,
    squeezing_for_width,
)
from .numerics import (
    QuadratureError,
    QuadratureSpec,
    RandomStream,
    hermite_eval,
    integrate_line,
    integrate_rect,
    sample_index,
)
from .protocol import (
    ChernoffPlan,
    CircuitSettings,
    ModelError,
    OutcomeDistribution,
    ShotTally,
    branch_probability,
    chernoff_condition_shots,
    chernoff_estimate_shots,
    coherence_integral,
    estimate_from_tallies,
    exact_estimate,
    outcome_distribution,
    sample_shots,
)
from .states import (
    DensityKernel,
    OscillatorState,
    PureStateKernel,
    SqueezedCoherentState,
    density,
    diagonal_weight,
    osc_wavefunction,
    parse_state,
    squeezed_wavefunction,
)
from .tomography import (
    ElementEstimate,
    FidelityReport,
    ReconstructedState,
    estimate_element,
    evaluate,
    fidelity,
    reconstruct,
)

__version__ = "0.1.0"
