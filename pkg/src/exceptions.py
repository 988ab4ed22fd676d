"""
Exception hierarchy shared across tokeneeg subpackages
"""


class TokenEEGError(Exception):
    """Base class for every error raised by tokeneeg"""


class InvalidRecordingError(TokenEEGError, ValueError):
    """Recording violates its invariants"""


class RecordingFormatError(TokenEEGError, ValueError):
    """EEGB/EEGS file cannot be parsed"""


class ManifestError(TokenEEGError, ValueError):
    """Manifest is malformed or inconsistent"""


class SynthSpecError(TokenEEGError, ValueError):
    """Synthetic dataset parameters are invalid"""


class MontageError(TokenEEGError, ValueError):
    """Channel set cannot be mapped to the target montage"""


class SingularSystemError(TokenEEGError, ValueError):
    """Spline system matrix is singular or numerically degenerate"""


class SignalError(TokenEEGError, ValueError):
    """Signal does not satisfy a filtering/segmentation precondition"""


class WaveletError(TokenEEGError, ValueError):
    """Wavelet transform precondition violated"""


class ShapeError(TokenEEGError, ValueError):
    """Tensor shapes do not line up"""


class GradientError(TokenEEGError, ArithmeticError):
    """Loss or gradient became non-finite"""


class TrainingError(TokenEEGError, RuntimeError):
    """Training could not proceed"""


class FoldError(TokenEEGError, RuntimeError):
    """A cross-validation fold failed"""


class ReportError(TokenEEGError, ValueError):
    """Report is empty or malformed"""


class CheckpointError(TokenEEGError, ValueError):
    """Checkpoint file cannot be read"""
