import numpy as np
import pytest

from entropy_transport.basis import SystemSpec
from entropy_transport.curvefit import fit_binary_entropy
from entropy_transport.dataset import (
    DatasetFormatError,
    TrajectoryDataset,
    load,
    run_trajectory,
    save,
    sweep,
)

SMALL = SystemSpec(L=4, t_max=20.0, n_samples=41)


def test_frozen_trajectory_stays_in_initial_state():
    tr = run_trajectory(SystemSpec(L=4, J=0.0, U=2.0, barrier=(2.5, 5.0), n_samples=51))
    assert np.all(tr.n_A == 0.0)
    assert np.abs(tr.S_A).max() < 1e-14


def test_trajectory_starts_clean_and_conserves():
    tr = run_trajectory(SystemSpec(L=4, U=2.0, barrier=(2.5, 5.0)))
    assert len(tr) == 2001
    assert tr.t[0] == 0.0 and tr.n_A[0] == 0.0 and tr.S_A[0] == 0.0
    assert tr.norm_drift < 1e-10 and tr.energy_drift < 1e-8


def test_long_chain_density_stays_small():
    tr = run_trajectory(SystemSpec(L=8, U=3.0, barrier=(3.0, 6.0)))
    assert 0 < tr.n_A.max() < 0.01


def test_sweep_counts_and_skips():
    ds = sweep([2.0, 5.0, 6.0], [5.0], 4, template=SMALL)
    assert ds.group_keys() == [(2.0, 5.0, 4)]
    assert ds.skipped == [(5.0, 5.0, 4), (6.0, 5.0, 4)]
    assert len(ds) == 41
    assert ds.metadata["barrier_ratio"] == "0.5"


def test_sweep_without_tunneling_filter():
    ds = sweep([2.0, 6.0], [5.0, 6.0], 4, template=SMALL, tunneling_only=False)
    assert len(ds.group_keys()) == 4 and ds.skipped == []


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep([], [5.0], 4)


def test_worker_count_does_not_change_result():
    a = sweep([2.0, 3.0], [5.0, 6.0], 4, template=SMALL, workers=1)
    b = sweep([2.0, 3.0], [5.0, 6.0], 4, template=SMALL, workers=2)
    assert a == b


def test_roundtrip(tmp_path):
    ds = sweep([2.0, 3.0], [5.0, 6.0], 4, template=SMALL)
    path = tmp_path / "d.csv"
    save(ds, path)
    back = load(path)
    assert back == ds
    np.testing.assert_array_equal(back.rows, ds.rows)
    save(back, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_bytes() == path.read_bytes()


def test_empty_dataset_roundtrip(tmp_path):
    ds = TrajectoryDataset(np.empty((0, 6)), {"J": "1.0"}, [(5.0, 5.0, 4)])
    save(ds, tmp_path / "e.csv")
    back = load(tmp_path / "e.csv")
    assert len(back) == 0 and back.skipped == [(5.0, 5.0, 4)]


def _write(tmp_path, body):
    p = tmp_path / "bad.csv"
    p.write_text("U,h,L,t,n_A,S_A\n" + body)
    return p


def test_nan_row_rejected_with_line_number(tmp_path):
    p = _write(tmp_path, "2,5,4,0,0,0\n2,5,4,0.05,nan,0\n")
    with pytest.raises(DatasetFormatError, match=":3:"):
        load(p)


def test_non_monotonic_time_rejected(tmp_path):
    p = _write(tmp_path, "2,5,4,0,0,0\n2,5,4,0.1,0,0\n2,5,4,0.05,0,0\n")
    with pytest.raises(DatasetFormatError, match="strictly increasing"):
        load(p)


def test_split_group_rejected(tmp_path):
    p = _write(tmp_path, "2,5,4,0,0,0\n3,5,4,0,0,0\n2,5,4,1,0,0\n")
    with pytest.raises(DatasetFormatError, match="contiguous"):
        load(p)


def test_malformed_header_and_fields(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("U,h,L,time,n_A,S_A\n2,5,4,0,0,0\n")
    with pytest.raises(DatasetFormatError, match="header"):
        load(p)
    with pytest.raises(DatasetFormatError, match="6 fields"):
        load(_write(tmp_path, "2,5,4,0,0\n"))
    with pytest.raises(DatasetFormatError, match="integer"):
        load(_write(tmp_path, "2,5,4.5,0,0,0\n"))


def test_fit_insensitive_to_doubling_samples():
    fits = []
    for n_samples in (2001, 4001):
        tr = run_trajectory(SystemSpec(L=8, U=3.0, barrier=(3.0, 6.0), n_samples=n_samples))
        fits.append(fit_binary_entropy(tr.n_A, tr.S_A))
    a, b = fits
    assert abs(a.r2 - b.r2) < 1e-3
    assert abs(a.c1 - b.c1) < 0.02 * abs(a.c1) and abs(a.c2 - b.c2) < 0.02 * abs(a.c2)
