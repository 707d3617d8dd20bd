#!/usr/bin/env python3
# Windowed all-to-all on a 4:1 oversubscribed 16-host tree. Each host sends
# 1 MiB to every other host, keeping at most k transfers outstanding. The
# single uplink per rack is the bottleneck, and the ideal time assumes it
# never idles.

from smartt_sim import config_from_dict, run_experiment

for k in (1, 4):
    cfg = config_from_dict({
        "topology": {"n_hosts": 16, "oversub_ratio": 4},
        "trace_cwnd": False,
        "trace_queues": False,
        "workload": {"kind": "alltoall", "msg_size": 1 << 20, "k_window": k},
    })
    s = run_experiment(cfg).summary()
    print(f"k={k}: {s['n_flows']} flows, done in {s['completion_time'] / 1e3:.1f} us, "
          f"ideal {s['ideal_ns'] / 1e3:.1f} us ({s['ideal_ratio']:.3f}x), {s['trims']} trims")
