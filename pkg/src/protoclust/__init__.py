"""Message-type clustering for protocol reverse engineering.

Byte n-gram features, set and vector distances, complete-linkage
clustering, internal and external validation, and a configuration sweep
with effect-size analysis.  Hot kernels are compiled with numba when it
is available; set ``PROTOCLUST_BACKEND=numpy`` to force the pure numpy path.
"""
from ._accel import BACKEND_ENV, backend
from .distance import MEASURES, Measure, build_matrix
from .hcluster import Dendrogram, Partition, agglomerate, cut
from .ingest import Corpus, Message, load_corpus
from .preprocess import PreprocessConfig, featurize
from .sweep import SweepPlan, run_sweep, select_optimal
from .validation import INDICES, Index, adjusted_rand, validate

__version__ = "0.1.0"
