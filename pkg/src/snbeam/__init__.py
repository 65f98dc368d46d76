"""snbeam: sub-Nyquist ultrasound beamforming and learned reconstruction.

Library layout follows the processing chain:

* :mod:`snbeam.core` -- array geometry, acquisition config, delay model
* :mod:`snbeam.simulate` -- synthetic phantoms and RF channel data
* :mod:`snbeam.beamform_time` -- DAS / minimum-variance references + display
* :mod:`snbeam.beamform_fourier` -- distortion-coefficient (Q) tables and
  frequency-domain alignment, sub-Nyquist band selection, reconstruction
* :mod:`snbeam.sampling` -- x5/x9/x11 schemes, degraded cubes, training data
* :mod:`snbeam.neural` / :mod:`snbeam.training` -- the from-scratch
  encoder-decoder network, SMSLE loss, Adam, training loop
* :mod:`snbeam.metrics` -- FWHM / CNR / SSIM / NRMSE
* :mod:`snbeam.io` / :mod:`snbeam.cli` -- file formats and the batch CLI
"""

from .beamform_fourier import (
    BeamSpectrum,
    QTable,
    SpectrumSet,
    build_angle_tables,
    build_q_table,
    build_q_tables,
    degraded_reconstruct,
    dft_coeffs,
    fd_beamform,
    fd_time_align,
    subnyquist_select,
)
from .beamform_time import (
    AlignedCube,
    MVConfig,
    bmode_image,
    das,
    envelope,
    log_compress,
    mv_beamform,
    scan_convert,
    time_align,
)
from .core import (
    AcquisitionConfig,
    ArrayGeometry,
    BeamLine,
    RFFrame,
    default_config,
    default_geometry,
    delay_tau,
    distance_dm,
    element_positions,
)
from .metrics import RegionSpec, cnr, fwhm, nrmse, ssim
from .neural import NetworkSpec, he_normal_init, init_params, unet_forward
from .sampling import (
    SamplingScheme,
    TrainingSample,
    default_sparse_pattern,
    make_degraded_channels,
    normalize_dataset,
    scheme_by_label,
    slice_cubes,
    spatial_subsample,
)
from .simulate import (
    Phantom,
    PulseSpec,
    SectorRegion,
    anechoic_cyst_phantom,
    point_grid_phantom,
    pulse_waveform,
    simulate_rf,
)
from .training import AdamState, TrainHistory, adam_step, predict, smsle_loss, train

__version__ = "0.1.0"
