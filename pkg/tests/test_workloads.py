from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartt_sim.topology import FatTreeConfig, build
from smartt_sim.workloads import (
    FlowSpec,
    WorkloadSpec,
    build_schedule,
    gen_alltoall,
    gen_incast,
    gen_permutation,
    ideal_incast,
    ideal_permutation,
    ideal_time,
    read_matrix,
    total_bytes,
    write_matrix,
)

MIB = 1024 * 1024
TOPO16 = build(FatTreeConfig(n_hosts=16))


def test_incast_eight_to_one():
    flows = gen_incast(8, 2 * MIB, TOPO16, receiver=0)
    assert len(flows) == 8
    assert {f.dst for f in flows} == {0}
    assert len({f.src for f in flows}) == 8
    assert all(f.size == 2 * MIB and f.start == 0 for f in flows)
    # off-rack senders come first
    assert not any(TOPO16.same_rack(f.src, 0) for f in flows)


def test_incast_of_zero_is_empty():
    assert gen_incast(0, MIB, TOPO16) == []


def test_incast_too_large_rejected():
    with pytest.raises(ValueError):
        gen_incast(16, MIB, TOPO16)


def test_uneven_incast_overrides_one_flow():
    flows = gen_incast(4, MIB, TOPO16, uneven={0: 2 * MIB})
    assert [f.size for f in flows] == [2 * MIB, MIB, MIB, MIB]


def _is_valid_permutation(flows, topo):
    srcs = [f.src for f in flows]
    dsts = [f.dst for f in flows]
    return (
        sorted(srcs) == list(range(topo.n_hosts))
        and sorted(dsts) == list(range(topo.n_hosts))
        and all(not topo.same_rack(f.src, f.dst) for f in flows)
    )


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000),
       st.sampled_from([16, 32, 64]))
def test_permutation_crosses_racks_and_is_bijective(seed, n):
    topo = build(FatTreeConfig(n_hosts=n))
    flows = gen_permutation(topo.racks, MIB, seed)
    assert _is_valid_permutation(flows, topo)


def test_permutation_is_seeded():
    a = gen_permutation(TOPO16.racks, MIB, 5)
    b = gen_permutation(TOPO16.racks, MIB, 5)
    c = gen_permutation(TOPO16.racks, MIB, 6)
    assert a == b
    assert a != c


def test_permutation_rack_pairing_is_a_derangement():
    topo = build(FatTreeConfig(n_hosts=64))
    flows = gen_permutation(topo.racks, MIB, 3)
    rack_of = {h: i for i, r in enumerate(topo.racks) for h in r}
    pairs = {(rack_of[f.src], rack_of[f.dst]) for f in flows}
    src_racks = Counter(p[0] for p in pairs)
    # every rack sends to exactly one other rack
    assert all(v == 1 for v in src_racks.values())
    assert all(a != b for a, b in pairs)


def test_alltoall_window_one_chains_every_flow():
    flows = gen_alltoall(range(4), MIB, 1)
    assert len(flows) == 12
    mine = [i for i, f in enumerate(flows) if f.src == 0]
    assert [flows[i].dst for i in mine] == [1, 2, 3]
    assert flows[mine[0]].depends_on == ()
    assert flows[mine[1]].depends_on == (mine[0],)
    assert flows[mine[2]].depends_on == (mine[1],)


def test_alltoall_wide_window_has_no_dependencies():
    flows = gen_alltoall(range(6), MIB, 5)
    assert all(f.depends_on == () for f in flows)
    assert Counter((f.src, f.dst) for f in flows) == Counter(
        (s, d) for s in range(6) for d in range(6) if s != d)


def test_alltoall_window_k_limits_outstanding():
    flows = gen_alltoall(range(8), MIB, 3)
    for i, f in enumerate(flows):
        for d in f.depends_on:
            assert flows[d].src == f.src
            assert d < i


def test_total_bytes():
    flows = gen_alltoall(range(16), MIB, 2)
    assert total_bytes(flows) == 16 * 15 * MIB


def test_matrix_round_trip(tmp_path):
    flows = gen_alltoall(range(4), 12345, 2) + [FlowSpec(1, 2, 99, start=500)]
    path = tmp_path / "m.txt"
    write_matrix(flows, path)
    assert read_matrix(path) == flows


@pytest.mark.parametrize("text,msg", [
    ("0 1 100 0\n", "expected 5 fields"),
    ("0 1 100 0 3\n", "unknown flow"),
    ("0 1 100 0 0\n", "unknown flow"),
    ("0 1 100 0 -1\n", "negative"),
])
def test_matrix_errors_name_the_problem(tmp_path, text, msg):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError, match=msg):
        read_matrix(path)


def test_workload_spec_validation():
    with pytest.raises(ValueError):
        WorkloadSpec(kind="shuffle").validate(16)
    with pytest.raises(ValueError):
        WorkloadSpec(fan_in=16).validate(16)
    with pytest.raises(ValueError):
        WorkloadSpec(kind="alltoall", k_window=0).validate(16)
    with pytest.raises(ValueError):
        WorkloadSpec(kind="matrix").validate(16)


def test_build_schedule_dispatch():
    assert len(build_schedule(WorkloadSpec(kind="incast", fan_in=5), TOPO16)) == 5
    assert len(build_schedule(WorkloadSpec(kind="permutation"), TOPO16)) == 16
    assert len(build_schedule(WorkloadSpec(kind="alltoall", k_window=2), TOPO16)) == 240


@pytest.mark.parametrize("n,size", [(8, 2 * MIB), (15, 8 * MIB), (3, MIB)])
def test_ideal_time_matches_incast_oracle(n, size):
    flows = gen_incast(n, size, TOPO16)
    expected = ideal_incast(n, size, 800e9, TOPO16.base_rtt)
    assert ideal_time(flows, TOPO16) == expected
    # the receiver downlink is the bottleneck: n * size bytes at 100 B/ns
    assert expected == n * size // 100 + 7368


@pytest.mark.parametrize("oversub", [1, 4])
def test_ideal_time_matches_permutation_oracle(oversub):
    topo = build(FatTreeConfig(n_hosts=16, oversub_ratio=oversub))
    flows = gen_permutation(topo.racks, 4 * MIB, 1)
    assert ideal_time(flows, topo) == ideal_permutation(4 * MIB, 800e9, topo.base_rtt, oversub)


def test_ideal_time_alltoall_oversubscribed():
    topo = build(FatTreeConfig(n_hosts=16, oversub_ratio=4))
    flows = gen_alltoall(range(16), MIB, 1)
    # each rack pushes 4 hosts * 12 off-rack peers * 1 MiB through one uplink
    assert ideal_time(flows, topo) == int(48 * MIB / 100) + topo.base_rtt


def test_ideal_time_empty():
    assert ideal_time([], TOPO16) == 0
