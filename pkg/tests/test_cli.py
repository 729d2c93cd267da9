import importlib.util
from pathlib import Path

import pytest
import yaml

from encloc.data_storage.fingerprint_db import ingest_csv
from encloc.localization.distance import load_scan_csv

SCRIPT = Path(__file__).resolve().parent.parent / 'scripts' / 'encloc.py'


@pytest.fixture(scope='module')
def cli():
    spec = importlib.util.spec_from_file_location('encloc_cli', SCRIPT)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text(yaml.safe_dump({'data_storage': {'base_path': str(tmp_path / 'data')}}), encoding='utf-8')
    return path


def test_gen_and_table(cli, tmp_path, config_path):
    fp = tmp_path / 'fp.csv'
    scan = tmp_path / 'scan.csv'
    assert cli.main(['-c', str(config_path), 'gen', '--fingerprints', '5', '--aps', '4',
                     '--out', str(fp), '--scan-out', str(scan)]) == 0
    assert len(ingest_csv(fp)) == 20
    assert len(load_scan_csv(scan).pairs) == 4

    assert cli.main(['-c', str(config_path), 'table', '--db', str(fp), '--name', 'f1', '--min-count', '1']) == 0
    assert (tmp_path / 'data' / 'tables' / 'f1.parquet').exists()


def test_bad_csv_exit_code(cli, tmp_path, config_path):
    fp = tmp_path / 'bad.csv'
    fp.write_text('map_id,x,y,mac,rss,device,timestamp\nm,0,0,zz,-40,d,t\n', encoding='utf-8')
    assert cli.main(['-c', str(config_path), 'table', '--db', str(fp), '--name', 'f1']) == 1


def test_missing_file_exit_code(cli, tmp_path, config_path):
    assert cli.main(['-c', str(config_path), 'table', '--db', str(tmp_path / 'none.csv'), '--name', 'x']) == 1


def test_keygen(cli, tmp_path, config_path):
    out_dir = tmp_path / 'keys'
    assert cli.main(['-c', str(config_path), 'keygen', '--scheme', 'paillier', '--key-bits', '512',
                     '--out-dir', str(out_dir)]) == 0
    assert (out_dir / 'paillier_carrier.json').exists()
    assert (out_dir / 'dgk_bit.json').exists()


def test_requires_subcommand(cli):
    with pytest.raises(SystemExit):
        cli.main([])


def test_paper_preset_alias(cli):
    args = cli.build_parser().parse_args(['bench', '--preset', 'paper', '--trials', '20'])
    assert args.preset == 'paper'
    assert args.trials == 20
