from .distance import (
    DistanceRow,
    EncryptedScan,
    LocalizationScan,
    compute_distance_rows,
    load_scan_csv,
    plaintext_distances,
    prepare_scan,
    save_scan_csv,
    synthetic_scan,
)
from .localizer import (
    ServerModeResult,
    client_argmin,
    decrypt_coords,
    default_params,
    localize_client_mode,
    localize_server_mode,
    oracle_argmin,
    oracle_kmin,
)
