"""Exception hierarchy for mvglidar."""


class MVGLidarError(Exception):
    """Base class for every error raised by mvglidar."""


class InvariantError(MVGLidarError, ValueError):
    """A domain object was built with values that break its invariants.

    Parameters
    ----------
    field : str
        Name of the offending field, e.g. ``rows``.
    message : str
        Human readable description.
    """

    def __init__(self, field, message):
        self.field = field
        super(InvariantError, self).__init__("%s: %s" % (field, message))


class InvalidIntervalError(MVGLidarError, ValueError):
    """Echo timestamp precedes the transmit timestamp."""


class SingularityError(MVGLidarError, ValueError):
    """Azimuth at or beyond +-pi/2, where the tangent model is undefined."""


class BehindSensorError(MVGLidarError, ValueError):
    """Cartesian point with z <= 0."""


class HypothesisOutOfRangeError(MVGLidarError, ValueError):
    """Registration hypothesis (m, k) does not fit the frame."""


class NoSignalError(MVGLidarError):
    """No valid neighbouring pairs to score."""


class CalibrationFailedError(MVGLidarError):
    """Every hypothesis of the search grid was inadmissible."""


class DriftEstimationFailedError(MVGLidarError):
    """Fewer than two frames survived calibration."""


class ConfigError(MVGLidarError):
    """Malformed or invalid configuration document."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        if line is not None:
            message = "line %d: %s" % (line, message)
        super(ConfigError, self).__init__(message)


class StreamFormatError(MVGLidarError):
    """Malformed range-stream or cost-surface file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super(StreamFormatError, self).__init__(message)


class OutputError(MVGLidarError):
    """I/O failure while writing or reading a file."""

    def __init__(self, path, cause):
        self.path = path
        super(OutputError, self).__init__("%s: %s" % (path, cause))
