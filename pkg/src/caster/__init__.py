"""Gesture-to-channel simulator.

Turns 21-keypoint hand motion (from video keypoint detectors or synthetic
fixtures) into sequences of ray-traced channel impulse responses and
time-Doppler spectrograms for training gesture recognition models without
physical channel measurements.
"""

from ._kernels import USING_NUMBA
from .camera import (CameraIntrinsics, Pose, project, project_points,
                     solve_pnp, to_camera)
from .channel import (BistaticGeometry, ChannelSnapshot, IsotropicGain, Ray,
                      Scatterer, Scenario, TableGain, bistatic_geometry,
                      clip_target_amplitudes, collapse_clip, ellipsoid_rcs,
                      ellipsoid_rcs_batch, environment_rays,
                      generate_environment, los_ray, primitive_ray,
                      snapshot_channel, static_rays, target_related,
                      SPEED_OF_LIGHT)
from .dsp import (NarrowbandSeries, Spectrogram, StftConfig, collapse, export,
                  read_cstr, remove_clutter, series_from_parts, stft)
from .errors import (BehindCamera, CasterError, ClipRejected,
                     DegeneratePrimitive, FormatError, InsufficientFrames,
                     IoFailure, NonConvergence, SeriesTooShort)
from .hand import (Primitive, SkeletonTopology, build_primitives,
                   default_topology)
from .motion import (FilterParams, MotionClip, SnapshotSequence, load_motion,
                     resample, save_motion, smooth)
from .runner import (ClipResult, Placement, RunConfig, config_from_dict,
                     default_config, derive_seed, load_config, run_batch,
                     run_clip, synth_gesture)

__version__ = "0.1.0"
