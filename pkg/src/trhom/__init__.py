"""Few-photon simulator for a polarization-entangled pair source built on
time-reversed Hong-Ou-Mandel interference in a crossed-crystal Sagnac loop,
with the detection and analysis chain needed to turn it into lab numbers."""

from .fock import (
    CreationMonomial,
    FockKet,
    ModeLabel,
    ModePattern,
    OperatorPoly,
    StateVector,
    apply_to_vacuum,
    fidelity,
    inner_product,
    multiply,
    normalize,
    occupation_probability,
    substitute,
)
from .optics import ModeMap, bs_map, compose, identity_map, pbs_map, phase_shift_map, waveplate_map
from .source import (
    SourceConfig,
    SpectralEnvelope,
    bell_state,
    crossed_crystal_poly,
    phase_profile,
    sagnac_state,
    temporal_overlap,
)
from .detection import (
    DetectionConfig,
    PolarizerSetting,
    TagStream,
    accidentals,
    coincidence_probability,
    correlate_window,
    fringe_scan,
    generate_timetags,
    visibility,
)
from .metrics import concurrence_bound, fidelity_bound, rate_metrics, stability_stats

__version__ = "0.1.0"
