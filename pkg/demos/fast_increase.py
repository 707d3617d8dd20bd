#!/usr/bin/env python3
# Uneven 8:1 incast: flow 0 carries twice as much as the others. Once the
# short flows finish, the survivor has the receiver link to itself. With
# FastIncrease it notices a full window of uncongested ACKs and grows by two
# MTUs per ACK; without it, it creeps up with the ordinary increase rules.

from smartt_sim import config_from_dict, Experiment

for fast in (True, False):
    cfg = config_from_dict({
        "topology": {"n_hosts": 16},
        "cc": {"fast_increase": fast},
        "trace_queues": False,
        "workload": {"kind": "incast", "fan_in": 8, "msg_size": 8 << 20, "uneven": {"0": 16 << 20}},
    })
    ex = Experiment(cfg)
    report = ex.run()
    survivor = ex.flows[0]
    freed = max(f.finish_time for f in ex.flows[1:])
    target = 0.9 * survivor.cc.p.bdp
    hit = next((t for t, fid, cw, *_ in report.cwnd_trace if fid == 0 and t >= freed and cw >= target), None)
    took = "never" if hit is None else f"{(hit - freed) / 1e3:.1f} us"
    print(f"fast_increase={fast!s:5s}: others done at {freed / 1e3:.1f} us, "
          f"survivor back at 0.9 BDP after {took}, finished at {survivor.finish_time / 1e3:.1f} us")
