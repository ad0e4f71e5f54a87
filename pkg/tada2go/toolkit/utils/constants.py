import numpy as np

# Accepted image file suffixes
pgm_file_suffixes = ('.pgm',)
jpeg_file_suffixes = ('.jpg', '.jpeg')
container_file_suffixes = ('.tadc',)
image_file_suffixes = pgm_file_suffixes + jpeg_file_suffixes + container_file_suffixes

# File format metadata
file_format = {
    '.pgm': 'PGM', '.jpg': 'JPEG', '.jpeg': 'JPEG', '.tadc': 'TADA coefficient container'
}

# 8-bit pixel range
PIXEL_MIN = 0.0
PIXEL_MAX = 255.0

# JPEG level shift and block size
LEVEL_SHIFT = 128.0
BLOCK = 8

# Annex K luminance quantization table (quality 50)
ANNEX_K_LUMINANCE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)

# Quality factors used in the experiments
EXPERIMENT_QUALITIES = (75, 85, 90, 93, 95, 100)

# Zigzag scan order, entry i is the row-major index of the i-th scanned coefficient
ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.int64)

# Annex K standard Huffman tables (luminance)
STD_DC_LUMINANCE_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
STD_DC_LUMINANCE_VALUES = tuple(range(12))
STD_AC_LUMINANCE_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d)
STD_AC_LUMINANCE_VALUES = (
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7,
    0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5,
    0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
    0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
)

# Largest AC magnitude representable in baseline 8-bit JPEG
BASELINE_AC_LIMIT = 1023

# Coefficient container: magic, version, header layout
CONTAINER_MAGIC = b'TADC'
CONTAINER_VERSION = 1

# Residual high-pass filters
KB_KERNEL = np.array([
    [-0.25, 0.5, -0.25],
    [0.5, -1.0, 0.5],
    [-0.25, 0.5, -0.25],
])
L4_KERNEL = np.array([
    [0.0, 1.0, 0.0],
    [1.0, -4.0, 1.0],
    [0.0, 1.0, 0.0],
])

# 3x3 sharpening filter S, sums to 1
SHARPEN_S = np.array([
    [0.0, -0.25, 0.0],
    [-0.25, 2.0, -0.25],
    [0.0, -0.25, 0.0],
])

# Synthetic content range before noise
CONTENT_LOW = 30.0
CONTENT_HIGH = 225.0

# Patch selection quantiles
DEFAULT_Q_LOW = 0.3
DEFAULT_Q_HIGH = 0.6

# Emulator defaults
KERNEL_SIZES = (3, 5, 7, 9, 11)
DEFAULT_INIT_SIGMA = 0.01
DEFAULT_FD_STEP = 1e-3
DEFAULT_SUBSAMPLE = 1024
DEFAULT_EPSILON_SCALE = 0.05
SATURATION_STD = 1e-3
CONSTRAINT_KINDS = ('none', 'sum-to-1', 'symmetry', 'both')
SUM_PROJECTIONS = ('uniform', 'center')
LOSS_TERMS = ('cov', 'wass', 'corr')

# DCTR defaults
DCTR_THRESHOLD = 4
DCTR_KERNEL_SIZE = 8

# Embedding
EMBEDDING_SCHEMES = ('UERD', 'uniform-cost')
MAX_PAYLOAD_BPNZAC = 1.5
UERD_NEIGHBOR_WEIGHT = 0.25

# Harness
BALANCES = ('full-cover', 'mix', 'full-stego')
STRATEGIES = (
    'TgtOnly', 'SrcOnly', 'All', 'Multiclassifier',
    'Closest-NSCD', 'Closest-CovFrobenius', 'Closest-MMD', 'Closest-Wasserstein',
    'SubspaceAlignment', 'CORAL', 'TADA',
)
CLOSEST_METRICS = {
    'Closest-NSCD': 'NSCD',
    'Closest-CovFrobenius': 'cov-frobenius',
    'Closest-MMD': 'MMD',
    'Closest-Wasserstein': 'wasserstein',
}
ABLATION_AXES = (
    'patch-size', 'kernel-size', 'operational-size', 'loss-combo',
    'residual-extractor', 'constraints', 'patch-selection',
)
REPORT_COLUMNS = (
    'strategy', 'target', 'balance', 'seed', 'accuracy', 'selected_source',
    'l_eval_init', 'l_eval_final', 'detail',
)
REPORT_FLOAT_PRECISION = 6
EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 1
EXIT_STAGE_FAILURE = 2
