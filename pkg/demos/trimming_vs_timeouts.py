#!/usr/bin/env python3
# Same 16:1 incast twice: once with switches trimming overflowing packets to
# headers, once with plain drops. Without trimming a lost packet is only
# noticed when its retransmission timer (7 base RTTs) expires, so small
# messages finish about one RTO later. For large messages the difference
# disappears in the noise.

from smartt_sim import config_from_dict, run_experiment


def max_fct(size, trimming):
    cfg = config_from_dict({
        "topology": {"n_hosts": 32},
        "trimming": trimming,
        "trace_cwnd": False,
        "trace_queues": False,
        "workload": {"kind": "incast", "fan_in": 16, "msg_size": size},
    })
    return run_experiment(cfg).summary()


rto = 7 * 7368
for size in (180 * 4096, 2 << 20, 8 << 20):
    a = max_fct(size, True)
    b = max_fct(size, False)
    delta = b["fct_max"] - a["fct_max"]
    print(f"{size / (1 << 20):5.2f} MiB: trim {a['fct_max'] / 1e3:8.1f} us, "
          f"timeout {b['fct_max'] / 1e3:8.1f} us ({b['timeouts']} timeouts), "
          f"delta {delta / rto:.2f} RTO")
