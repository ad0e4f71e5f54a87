from tada2go.toolkit.exceptions.exceptions import (
    ConfigurationException, DegenerateLabelsException,
    DimensionMismatchException, EmptySelectionException, ImageIOException,
    InfeasiblePayloadException, InstanceTooLargeException,
    InsufficientSamplesException, InvalidBlockGeometryException,
    InvalidEmbeddingConfigException, InvalidImageException,
    InvalidKernelException, InvalidPatchGeometryException,
    InvalidPipelineException, JpegParseException, NonFiniteLossException,
    OutputExistsException, QuantTableMismatchException, RankDeficiencyException,
    ReportException, SaturatedDevelopmentException, SchemaMismatchException,
    StageFailureException, TadaException, UnsupportedJpegException)

__all__ = [
    'TadaException', 'InvalidImageException', 'InvalidPipelineException', 'ImageIOException',
    'InvalidBlockGeometryException', 'JpegParseException', 'UnsupportedJpegException',
    'InvalidPatchGeometryException', 'EmptySelectionException', 'InsufficientSamplesException',
    'DimensionMismatchException', 'RankDeficiencyException', 'InstanceTooLargeException',
    'InvalidKernelException', 'SaturatedDevelopmentException', 'NonFiniteLossException',
    'QuantTableMismatchException', 'InvalidEmbeddingConfigException', 'InfeasiblePayloadException',
    'SchemaMismatchException', 'DegenerateLabelsException', 'ConfigurationException',
    'OutputExistsException', 'StageFailureException', 'ReportException']
