# quantization first: imagery.pipeline depends on it while this package is still initialising
from tada2go.toolkit.jpegcodec.quantization import QuantTable, quality_scale
from tada2go.toolkit.jpegcodec.dct import (blockify, blockwise_dct,
                                           blockwise_idct, dct_basis,
                                           dct_block, inverse_dct, unblockify)
from tada2go.toolkit.jpegcodec.compression import (JpegCoeffs, compress_hard,
                                                   compress_soft, count_nzac,
                                                   decompress, decompress_8bit,
                                                   soft_round)
from tada2go.toolkit.jpegcodec.container import (container_bytes,
                                                 parse_container,
                                                 read_container,
                                                 write_container)
from tada2go.toolkit.jpegcodec.jfif import (jpeg_bytes, parse_jpeg_grayscale,
                                            read_jpeg, write_jpeg)

__all__ = ['QuantTable', 'quality_scale', 'dct_block', 'inverse_dct', 'blockify', 'unblockify', 'blockwise_dct',
           'blockwise_idct', 'dct_basis', 'JpegCoeffs', 'compress_hard', 'compress_soft', 'soft_round',
           'decompress', 'decompress_8bit', 'count_nzac', 'container_bytes', 'parse_container',
           'write_container', 'read_container', 'jpeg_bytes', 'parse_jpeg_grayscale', 'write_jpeg', 'read_jpeg']
