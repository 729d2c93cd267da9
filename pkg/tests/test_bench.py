import json

import pytest

from encloc.net.bench import run_bench
from encloc.net.settings import BenchConfig


@pytest.fixture(scope='module')
def smoke_report(tmp_path_factory):
    reports_dir = tmp_path_factory.mktemp('reports')
    config = BenchConfig(preset='smoke', trials=1, key_bits=512, n_fprints=5, n_aps=4,
                         seed=11, reports_dir=str(reports_dir))
    return run_bench(config, show_progress=False)


def test_all_trials_match_oracle(smoke_report):
    trials = smoke_report.trials
    assert len(trials) == 4
    assert smoke_report.failed == 0, trials['error'].tolist()
    assert set(zip(trials['scheme'], trials['mode'])) == {
        ('paillier', 'client'), ('dgk', 'client'), ('paillier', 'server'), ('dgk', 'server'),
    }


def test_server_mode_counts(smoke_report):
    server_rows = smoke_report.trials[smoke_report.trials['mode'] == 'server']
    assert (server_rows['comparisons'] == 4).all()
    assert (server_rows['keyholder_sessions'] == 4).all()
    assert (server_rows['server_comparisons'] == 4).all()


def test_client_mode_receives_all_rows(smoke_report):
    client_rows = smoke_report.trials[smoke_report.trials['mode'] == 'client']
    assert (client_rows['rows_received'] == 5).all()
    assert (client_rows['keyholder_sessions'] == 0).all()


def test_summary_table(smoke_report):
    table = smoke_report.summary_table()
    assert sorted(table.index) == ['client', 'server']
    assert sorted(table.columns) == ['dgk', 'paillier']
    assert (table > 0).all().all()


def test_save(smoke_report):
    paths = smoke_report.save()
    assert paths['csv'].exists()
    summary = json.loads(paths['json'].read_text(encoding='utf-8'))
    assert summary['total_trials'] == 4
    assert summary['failed_trials'] == 0
    assert set(summary['summary_wall_ms']) == {'client', 'server'}


def test_result_payload_scaling(tmp_path):
    sizes = (5, 19, 50)
    result_bytes = {'server': [], 'client': []}
    for n_fprints in sizes:
        config = BenchConfig(preset='smoke', trials=1, key_bits=512, n_fprints=n_fprints, n_aps=4,
                             seed=13, schemes=('paillier',), reports_dir=str(tmp_path))
        trials = run_bench(config, show_progress=False).trials.set_index('mode')
        assert trials['ok'].all()
        assert trials.loc['client', 'rows_received'] == n_fprints
        for mode in result_bytes:
            result_bytes[mode].append(int(trials.loc[mode, 'result_bytes']))

    # 服务器模式只返回 2 个坐标密文，长度仅随十六进制前导零浮动
    server = result_bytes['server']
    assert max(server) - min(server) <= 8

    client = result_bytes['client']
    per_row_low = (client[1] - client[0]) / (sizes[1] - sizes[0])
    per_row_high = (client[2] - client[1]) / (sizes[2] - sizes[1])
    assert per_row_low > 0
    assert abs(per_row_high - per_row_low) <= 0.05 * per_row_low


@pytest.mark.slow
def test_full_size_preset(tmp_path):
    config = BenchConfig.from_config(preset='full', trials=2, reports_dir=str(tmp_path))
    report = run_bench(config, show_progress=False)
    assert report.failed == 0
