import numpy as np

from encloc.data_storage.fingerprint_db import build_lookup_table, generate_synthetic
from encloc.data_storage.parquet_storage import ParquetStorage


def test_save_and_load(data_dir):
    storage = ParquetStorage(str(data_dir))
    table = build_lookup_table(generate_synthetic(6, 5, seed=1), min_count=1)

    assert storage.save_lookup_table('floor1', table)
    assert storage.list_tables() == ['floor1']

    loaded = storage.load_lookup_table('floor1')
    assert loaded.ap_columns == table.ap_columns
    assert loaded.coords == table.coords
    assert np.array_equal(loaded.rss, table.rss)
    assert loaded.v_c == table.v_c
    assert loaded.map_id == 'synthetic'


def test_missing_table(data_dir):
    assert ParquetStorage(str(data_dir)).load_lookup_table('nope') is None


def test_delete(data_dir):
    storage = ParquetStorage(str(data_dir))
    storage.save_lookup_table('floor1', build_lookup_table(generate_synthetic(3, 2, seed=2), min_count=1))
    assert storage.delete_lookup_table('floor1')
    assert storage.list_tables() == []
    assert storage.delete_lookup_table('floor1')


def test_build_log(data_dir):
    storage = ParquetStorage(str(data_dir))
    assert storage.get_latest_build_info() is None
    for seed in range(3):
        storage.save_lookup_table(f"t{seed}", build_lookup_table(generate_synthetic(3, 2, seed=seed), min_count=1))
    latest = storage.get_latest_build_info()
    assert latest['name'] == 't2'
    assert latest['n_fingerprints'] == 3
    assert 'timestamp' in latest
