#!/usr/bin/env python3
# A permutation on a non-blocking 16-host tree: every host sends 4 MiB to a
# host in another rack. With a single path per flow, hash collisions pile
# several flows onto one spine uplink; spraying spreads them out, and REPS
# additionally steers away from entropies that came back ECN-marked.

from smartt_sim import config_from_dict, run_experiment

for lb in ("reps", "oblivious", "single"):
    cfg = config_from_dict({
        "topology": {"n_hosts": 16},
        "lb_mode": lb,
        "trace_cwnd": False,
        "trace_queues": False,
        "workload": {"kind": "permutation", "msg_size": 4 << 20},
    })
    s = run_experiment(cfg).summary()
    print(f"{lb:10s} max FCT {s['fct_max'] / 1e3:7.1f} us  ({s['ideal_ratio']:.2f}x ideal), "
          f"spread {s['fct_delta'] / 1e3:6.1f} us, {s['ecn_marks']} ECN marks")
