"""Deep image features for chemometric regression.

From-scratch ResNet-18 inference over a portable weight archive, PLS1
regression with cross-validated latent-variable selection, SO-PLS
two-block fusion, and hyperspectral pseudo-RGB tooling.
"""

from ._backend import BACKEND
from .archive import ArchiveError, WeightArchive, load_archive, load_archive_file, save_archive
from .cube import BandTriplet, CubeError, HyperCube, load_cube, mean_spectrum, pca_compress, select_bands
from .imageprep import NormalizationStats, RasterImage, decode_image, normalize, resize_bilinear
from .netgraph import NetworkGraph, build_resnet18, forward, residual_block
from .pls import (
    CvCurve,
    DataBlock,
    FoldSpec,
    PlsModel,
    ResponseVector,
    cross_validate,
    metrics,
    pls_fit,
    pls_predict,
    select_lv,
)
from .sopls import LvGrid, SoplsModel, sopls_cv, sopls_fit, sopls_predict
from .tensor import (
    BatchNormParams,
    ConvParams,
    FeatureVector,
    Tensor,
    add,
    batchnorm_infer,
    conv2d,
    global_avg_pool,
    maxpool2d,
    relu,
)

__version__ = "0.1.0"
