from .fingerprint_db import (
    CSV_COLUMNS,
    DEFAULT_MIN_COUNT,
    V_C,
    FingerprintRecord,
    LookupTable,
    build_lookup_table,
    generate_synthetic,
    group_fingerprints,
    ingest_csv,
    save_csv,
)
from .parquet_storage import ParquetStorage
