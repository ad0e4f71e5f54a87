import os
from typing import List, Optional, Sequence

from natsort import natsorted

from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   ImageIOException)
from tada2go.toolkit.imagery.image import GrayImage, RawPool, read_pgm, write_pgm
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs, compress_hard
from tada2go.toolkit.jpegcodec.container import read_container, write_container
from tada2go.toolkit.jpegcodec.jfif import read_jpeg_files, read_jpeg, write_jpeg
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (container_file_suffixes,
                                             image_file_suffixes,
                                             jpeg_file_suffixes,
                                             pgm_file_suffixes)


def load_image_directory(path: str, suffixes: Sequence[str] = image_file_suffixes) -> List[str]:
    """
    Lists the image files of a directory in natural order (img2 before img10).

    Args:
        path (str): Directory to scan (not recursive).
        suffixes (Sequence[str], optional): Accepted lower-case suffixes.

    Returns:
        List[str]: Matching file paths.

    Raises:
        ImageIOException: If the directory cannot be read or holds no matching file.
    """
    try:
        names = os.listdir(path)
    except OSError:
        msg = f"Failed to list image directory '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Directory '{path}'")
    files = natsorted(name for name in names if os.path.splitext(name)[1].lower() in suffixes)
    if not files:
        raise ImageIOException(f"Directory '{path}' holds no file with suffix {tuple(suffixes)}")
    return [os.path.join(path, name) for name in files]


def load_raw_directory(path: str) -> RawPool:
    """RAW pool from the PGM files of a directory."""
    files = load_image_directory(path, pgm_file_suffixes)
    return RawPool([read_pgm(file) for file in files], provenance={'files': [os.path.basename(f) for f in files]})


def read_coefficients(path: str, quant: Optional[QuantTable] = None) -> JpegCoeffs:
    """
    Reads one image as JPEG coefficients: JPEG and container files directly, PGM files compressed with quant.

    Raises:
        ConfigurationException: If a PGM file is given without a table.
    """
    suffix = os.path.splitext(path)[1].lower()
    if suffix in jpeg_file_suffixes:
        return read_jpeg(path)
    if suffix in container_file_suffixes:
        return read_container(path)
    if quant is None:
        raise ConfigurationException(f"'{path}' is not compressed: a quantization table is required.")
    return compress_hard(read_pgm(path).block_aligned(), quant)


def load_target_images(path: str, quant: Optional[QuantTable] = None) -> List[JpegCoeffs]:
    """Reads every image of a directory as JPEG coefficients, in natural order."""
    files = load_image_directory(path)
    if all(os.path.splitext(file)[1].lower() in jpeg_file_suffixes for file in files):
        images = read_jpeg_files(files)
    else:
        images = [read_coefficients(file, quant) for file in files]
    logger.info(f"Loaded {len(images)} target images from '{path}'.")
    return images


def write_coefficients(images: Sequence[JpegCoeffs], directory: str, stem: str = 'img',
                       image_format: str = 'jpeg') -> List[str]:
    """
    Writes images as numbered JPEG or container files.

    Raises:
        ConfigurationException: If the format is unknown.
    """
    if image_format not in ('jpeg', 'container'):
        raise ConfigurationException(f"Image format must be 'jpeg' or 'container', got '{image_format}'.")
    os.makedirs(directory, exist_ok=True)
    paths = []
    for index, image in enumerate(images):
        if image_format == 'jpeg':
            paths.append(write_jpeg(image, os.path.join(directory, f"{stem}_{index:04d}.jpg")))
        else:
            paths.append(write_container(image, os.path.join(directory, f"{stem}_{index:04d}.tadc")))
    return paths


def write_images(images: Sequence[GrayImage], directory: str, stem: str = 'img', bit_depth: int = 16) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    return [write_pgm(image, os.path.join(directory, f"{stem}_{index:04d}.pgm"), bit_depth)
            for index, image in enumerate(images)]
