import os
from typing import List, Optional

import numpy as np
from PIL import Image

from tada2go.toolkit.exceptions.exceptions import (ImageIOException,
                                                   InvalidImageException)
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import PIXEL_MAX, PIXEL_MIN


class GrayImage:
    """Single-channel image with real-valued intensities, the unit every pipeline stage works on."""

    def __init__(self, pixels) -> None:
        """
        Initializes a GrayImage.

        Args:
            pixels (array-like): 2D grid of intensities. Developed images live in [0, 255];
                unclipped decompressions and residuals may leave that range.

        Raises:
            InvalidImageException: If the grid is not 2D, empty, or holds non-finite values.
        """
        array = np.asarray(pixels, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise InvalidImageException(f"Image must be a non-empty 2D grid, got shape {array.shape}.")
        if not np.all(np.isfinite(array)):
            raise InvalidImageException("Image contains non-finite values.")
        self._pixels = array
        self._pixels.setflags(write=False)

    @property
    def pixels(self) -> np.ndarray:
        """Read-only view of the intensity grid."""
        return self._pixels

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def shape(self) -> tuple:
        return self._pixels.shape

    def clipped(self) -> 'GrayImage':
        """
        Returns the image clipped to the 8-bit intensity range.

        Returns:
            GrayImage: Image with values in [0, 255].
        """
        return GrayImage(np.clip(self._pixels, PIXEL_MIN, PIXEL_MAX))

    def crop(self, row: int, col: int, height: int, width: int) -> 'GrayImage':
        """
        Returns a rectangular sub-image.

        Args:
            row (int): Top row.
            col (int): Left column.
            height (int): Crop height.
            width (int): Crop width.

        Raises:
            InvalidImageException: If the rectangle leaves the image.
        """
        if row < 0 or col < 0 or row + height > self.height or col + width > self.width:
            raise InvalidImageException(
                f"Crop ({row}, {col}, {height}, {width}) leaves image of size {self.height}x{self.width}.")
        return GrayImage(self._pixels[row:row + height, col:col + width])

    def block_aligned(self) -> 'GrayImage':
        """
        Drops trailing rows and columns so that both dimensions are multiples of 8.

        Raises:
            InvalidImageException: If the image is smaller than one 8x8 block.
        """
        height = self.height - self.height % 8
        width = self.width - self.width % 8
        if height == 0 or width == 0:
            raise InvalidImageException(f"Image of size {self.height}x{self.width} holds no 8x8 block.")
        if (height, width) == self.shape:
            return self
        return self.crop(0, 0, height, width)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._pixels, other._pixels)

    def __repr__(self) -> str:
        return f"GrayImage({self.height}x{self.width})"


class RawPool:
    """Pool of RAW-like images sharing their dimensions, developed by every candidate pipeline."""

    def __init__(self, images: List[GrayImage], seed: Optional[int] = None, provenance: Optional[dict] = None) -> None:
        """
        Initializes a RawPool.

        Args:
            images (List[GrayImage]): The RAW-like images.
            seed (int, optional): Seed that produced the pool, if synthetic.
            provenance (dict, optional): Generator parameters or the list of source files.

        Raises:
            InvalidImageException: If the pool is empty or the images differ in size.
        """
        if not images:
            raise InvalidImageException("A RAW pool needs at least one image.")
        shapes = {image.shape for image in images}
        if len(shapes) != 1:
            raise InvalidImageException(f"All images of a RAW pool must share dimensions, got {sorted(shapes)}.")
        self.images = list(images)
        self.seed = seed
        self.provenance = dict(provenance or {})

    @property
    def shape(self) -> tuple:
        return self.images[0].shape

    def stack(self, indices=None) -> np.ndarray:
        """
        Returns the pool (or a subset of it) as one array.

        Args:
            indices (sequence of int, optional): Images to include. Defaults to all.

        Returns:
            np.ndarray: Array of shape (count, height, width).
        """
        chosen = self.images if indices is None else [self.images[i] for i in indices]
        return np.stack([image.pixels for image in chosen])

    def __len__(self) -> int:
        return len(self.images)

    def __iter__(self):
        return iter(self.images)

    def __getitem__(self, index: int) -> GrayImage:
        return self.images[index]


def read_pgm(path: str) -> GrayImage:
    """
    Reads an 8-bit or 16-bit binary PGM (P5) file.

    Values are rescaled to [0, 255] using the file's maxval.

    Args:
        path (str): File to read.

    Returns:
        GrayImage: The image.

    Raises:
        ImageIOException: If the file cannot be read or is not a grayscale PGM.
    """
    try:
        with open(path, 'rb') as file_handler:
            header = file_handler.read(2)
        if header != b'P5':
            raise ValueError(f"not a binary PGM (magic {header!r})")
        with Image.open(path) as img:
            img.load()
            maxval = 255 if img.mode == 'L' else 65535
            array = np.asarray(img, dtype=np.float64)
    except Exception:
        msg = f"Failed to read PGM file '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"PGM file '{path}'")
    return GrayImage(array * (PIXEL_MAX / maxval))


def write_pgm(image: GrayImage, path: str, bit_depth: int = 8) -> str:
    """
    Writes an image as binary PGM (P5).

    Values are clipped to [0, 255] and stored with maxval 255 (8-bit) or 65535 (16-bit, big-endian samples).

    Args:
        image (GrayImage): Image to write.
        path (str): Destination file.
        bit_depth (int, optional): 8 or 16. Defaults to 8.

    Returns:
        str: The written path.

    Raises:
        ImageIOException: If the bit depth is unsupported or the file cannot be written.
    """
    if bit_depth not in (8, 16):
        raise ImageIOException(f"PGM with bit depth {bit_depth}")
    values = np.clip(image.pixels, PIXEL_MIN, PIXEL_MAX)
    try:
        if bit_depth == 8:
            img = Image.fromarray(np.round(values).astype(np.uint8), mode='L')
        else:
            # Pillow stores mode "I" PGMs as 16-bit big-endian samples with maxval 65535
            img = Image.fromarray(np.round(values * (65535.0 / PIXEL_MAX)).astype(np.int32), mode='I')
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        img.save(path, format='PPM')
    except Exception:
        msg = f"Failed to write PGM file '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"PGM file '{path}'")
    return path
