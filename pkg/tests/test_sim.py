import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartt_sim.sim import EventKind, SchedulingError, Simulator


def test_event_at_now_fires_first():
    sim = Simulator()
    seen = []
    sim.at(0, seen.append, "zero")
    sim.at(1, seen.append, "one")
    sim.run()
    assert seen == ["zero", "one"]


def test_simultaneous_events_fire_in_insertion_order():
    sim = Simulator()
    seen = []
    for tag in "abcde":
        sim.at(50, seen.append, tag)
    sim.run()
    assert seen == list("abcde")


def test_scheduling_in_the_past_raises():
    sim = Simulator()
    sim.at(10, lambda _: None)
    sim.run()
    assert sim.now == 10
    with pytest.raises(SchedulingError):
        sim.at(5, lambda _: None)


def test_rescheduling_same_event_raises():
    sim = Simulator()
    ev = sim.at(3, lambda _: None)
    with pytest.raises(SchedulingError):
        sim.schedule(ev)


def test_run_until_on_empty_queue_advances_clock():
    sim = Simulator()
    stats = sim.run_until(1234)
    assert stats.now == 1234
    assert stats.events_processed == 0


def test_run_until_leaves_later_events_pending():
    sim = Simulator()
    seen = []
    sim.at(100, seen.append, 1)
    sim.run_until(50)
    assert seen == []
    assert sim.pending == 1
    assert sim.now == 50
    sim.run_until(100)
    assert seen == [1]


def test_cancel_semantics():
    sim = Simulator()
    ev = sim.at(10, lambda _: None, kind=EventKind.TIMEOUT)
    assert sim.cancel(ev) is True
    assert sim.cancel(ev) is False
    fired = sim.at(20, lambda _: None)
    sim.run()
    assert sim.cancel(fired) is False
    assert sim.cancel(None) is False


def test_cancelled_event_does_not_fire():
    sim = Simulator()
    seen = []
    ev = sim.at(10, seen.append, "x")
    sim.at(20, seen.append, "y")
    sim.cancel(ev)
    sim.run()
    assert seen == ["y"]
    assert sim.stats().events_cancelled == 1


def test_handlers_can_schedule_at_current_time():
    sim = Simulator()
    seen = []

    def first(_):
        seen.append("first")
        sim.after(0, seen.append, "nested")

    sim.at(5, first)
    sim.at(5, seen.append, "second")
    sim.run()
    # the nested event was inserted after "second", so it runs after it
    assert seen == ["first", "second", "nested"]


def _random_program(seed):
    sim = Simulator(seed)
    log = []

    def step(depth):
        log.append((sim.now, depth, sim.rng.random()))
        if depth < 4:
            for _ in range(2):
                sim.after(sim.rng.randrange(0, 50), step, depth + 1)

    sim.at(0, step, 0)
    stats = sim.run()
    return log, stats


def test_same_seed_gives_identical_runs():
    assert _random_program(7) == _random_program(7)
    assert _random_program(7) != _random_program(8)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=60))
def test_fire_order_is_time_then_insertion(times):
    sim = Simulator()
    fired = []
    for i, t in enumerate(times):
        sim.at(t, fired.append, (t, i))
    sim.run()
    assert fired == sorted(fired)
    assert sim.now == max(times)
    assert len(fired) == len(times)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=1000), min_size=1, max_size=40),
       st.integers(min_value=0, max_value=1000))
def test_clock_never_moves_backwards(times, horizon):
    sim = Simulator()
    observed = []
    for t in times:
        sim.at(t, lambda _: observed.append(sim.now))
    sim.run_until(horizon)
    assert observed == sorted(observed)
    assert all(t <= horizon for t in observed)
    assert sim.now >= (observed[-1] if observed else 0)
