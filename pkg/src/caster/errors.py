"""Exception types shared across the simulator."""


class CasterError(Exception):
    """Base class for all simulator errors."""


class DegeneratePrimitive(CasterError):
    """An edge's two keypoints coincide, so no ellipsoid can be built."""


class BehindCamera(CasterError):
    """A point has non-positive depth in the camera frame."""


class NonConvergence(CasterError):
    """Pose optimization exhausted its iteration budget without settling."""


class InsufficientFrames(CasterError):
    """Too few frames to resample a trajectory."""


class SeriesTooShort(CasterError):
    """Series shorter than one analysis window."""


class ClipRejected(CasterError):
    """Clip dropped: too many bad frames or unusable motion data."""


class FormatError(CasterError):
    """A config, motion, or output file does not match its declared schema."""


class IoFailure(CasterError):
    """Reading or writing an artifact file failed."""
