"""Application flows: tensor compression and Einstein-product PCA recognition."""

from .compress import CompressionReport, compress, compress_sweep, relative_error
from .images import (
    ImageSet,
    export_video,
    ingest_video,
    load_dataset,
    read_ppm,
    save_dataset,
    synthetic_faces,
    synthetic_video,
    write_ppm,
)
from .pca import (
    PcaModel,
    build_training_tensor,
    identification_rate,
    load_model,
    pca_query,
    pca_train,
    save_model,
)
