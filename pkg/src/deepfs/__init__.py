"""Deep feature screening for high-dimension, low-sample-size data."""

from .errors import (ConfigError, DeepFSError, DimensionError, DivergenceError,
                     InsufficientSamplesError, InvalidInputError, InvalidLabelError,
                     UnsupportedDimensionError)
from .mvrank import RankMap, assign, rank_1d
from .neuralnet import DenseNet, TrainConfig
from .pipeline import Dataset, ScreeningReport, default_k, estimate_m, run_deepfs
from .qmc import QmcGrid, halton, lattice_1d, sobol
from .rdcorr import RdcCache, build_cache, rdcorr, rdcov2, screen_all

__version__ = "0.1.0"
