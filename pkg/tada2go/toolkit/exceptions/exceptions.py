class TadaException(Exception):
    """
    Base class of all tada2go exceptions.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'An unexpected error occurred.'

    def __init__(self, *args):
        if args:
            self.message = args[0]
        else:
            self.message = None

    def __str__(self):
        if self.message:
            return str(self.message)
        else:
            return self.default_message


# -------- Imagery -------- #

class InvalidImageException(TadaException):
    """
    Exception raised when an image violates its geometry or value invariants.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Image is empty, not two-dimensional or contains non-finite values.'


class InvalidPipelineException(TadaException):
    """
    Exception raised when a development pipeline cannot be built or applied.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Development pipeline is invalid for this image.'


class ImageIOException(TadaException):
    """
    Exception raised when an image file cannot be read or written.

    Attributes:
        message -- explanation of the error
    """

    def __str__(self):
        if self.message:
            return f'{self.message} could not be read or written.'
        else:
            return 'Image file could not be read or written.'


# -------- JPEG codec -------- #

class InvalidBlockGeometryException(TadaException):
    """
    Exception raised when image dimensions are not compatible with the 8x8 JPEG grid.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Image dimensions must be positive multiples of 8.'


class JpegParseException(TadaException):
    """
    Exception raised when a JPEG stream or coefficient container is malformed or truncated.

    Attributes:
        message -- explanation of the error
    """

    def __str__(self):
        if self.message:
            return f'JPEG data could not be parsed: {self.message}'
        else:
            return 'JPEG data could not be parsed.'


class UnsupportedJpegException(TadaException):
    """
    Exception raised when a JPEG stream uses a feature outside baseline grayscale coding.

    Attributes:
        message -- name of the unsupported marker or feature
    """

    def __str__(self):
        if self.message:
            return f'Unsupported JPEG feature: {self.message}. Only baseline sequential grayscale streams are supported.'
        else:
            return 'Unsupported JPEG stream. Only baseline sequential grayscale streams are supported.'


# -------- Residuals -------- #

class InvalidPatchGeometryException(TadaException):
    """
    Exception raised when residual filtering or patch tiling is impossible for the given geometry.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'No complete patch fits in the residual.'


class EmptySelectionException(TadaException):
    """
    Exception raised when a patch or sample selection ends up empty.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Selection is empty.'


# -------- Alignment metrics -------- #

class InsufficientSamplesException(TadaException):
    """
    Exception raised when a statistic needs more samples than available.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Not enough samples to compute this statistic.'


class DimensionMismatchException(TadaException):
    """
    Exception raised when two operands do not share their dimensions.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Operands must have identical dimensions.'


class RankDeficiencyException(TadaException):
    """
    Exception raised when a data set spans fewer principal directions than requested.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Data is rank deficient for the requested subspace dimension.'


class InstanceTooLargeException(TadaException):
    """
    Exception raised when an exact solver is called on an instance beyond its size limit.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Instance is too large for the exact solver.'


# -------- Emulator -------- #

class InvalidKernelException(TadaException):
    """
    Exception raised when a learnable kernel is requested with invalid geometry or parameters.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Kernel size must be odd and between 3 and 11.'


class SaturatedDevelopmentException(TadaException):
    """
    Exception raised when a developed batch is near-constant and carries no residual information.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Saturated development: the developed batch is near-constant.'


class NonFiniteLossException(TadaException):
    """
    Exception raised when the alignment loss evaluates to NaN or infinity.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Alignment loss is not finite.'


class QuantTableMismatchException(TadaException):
    """
    Exception raised when target images do not share one quantization table.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'All target images must share one quantization table.'


# -------- Steganography -------- #

class InvalidEmbeddingConfigException(TadaException):
    """
    Exception raised when an embedding configuration is out of range.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Embedding scheme unknown or payload outside (0, 1.5] bpnzac.'


class InfeasiblePayloadException(TadaException):
    """
    Exception raised when a payload cannot be carried by the embeddable coefficients.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Payload exceeds the capacity of the embeddable coefficients.'


# -------- Steganalysis -------- #

class SchemaMismatchException(TadaException):
    """
    Exception raised when feature vectors or detectors come from different extractor schemas.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Feature schemas do not match.'


class DegenerateLabelsException(TadaException):
    """
    Exception raised when a classifier receives a single class or too few examples.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'At least two examples of each class are required.'


# -------- Harness -------- #

class ConfigurationException(TadaException):
    """
    Exception raised when an experiment configuration fails validation.

    Attributes:
        message -- explanation of the error
    """

    def __str__(self):
        if self.message:
            return f'Invalid configuration: {self.message}'
        else:
            return 'Invalid configuration.'


class OutputExistsException(TadaException):
    """
    Exception raised when an output directory already holds results and overwriting was not requested.

    Attributes:
        message -- the output directory
    """

    def __str__(self):
        if self.message:
            return f'Output directory {self.message} already contains results. Pass --overwrite to replace them.'
        else:
            return 'Output directory already contains results. Pass --overwrite to replace them.'


class StageFailureException(TadaException):
    """
    Exception raised when a stage of an experiment fails.

    Attributes:
        message -- name of the failed stage
        cause -- the original exception
    """

    def __init__(self, *args, cause: Exception = None):
        super().__init__(*args)
        self.cause = cause

    def __str__(self):
        reason = f': {self.cause}' if self.cause is not None else ''
        if self.message:
            return f'Stage {self.message} failed{reason}'
        else:
            return f'Experiment stage failed{reason}'


class ReportException(TadaException):
    """
    Exception raised when a report cannot be emitted or read.

    Attributes:
        message -- explanation of the error
    """

    default_message = 'Report could not be written.'
