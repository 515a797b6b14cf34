"""Simulator-level behaviour: determinism, fairness, adversary powers."""

import pytest

from coinlab import NonTerminationError, SystemConfig, run_simulation
from coinlab.adversaries import CrashAdversary, FifoAdversary, StallAdversary
from coinlab.metrics import trace_metrics
from coinlab.sim import AGING_FACTOR, FAIRNESS_BOUND_FACTOR


class PingPong:
    """Process 0 pings process 1, which pongs back; both then output."""

    def __init__(self, pid, rt):
        self.pid = pid
        self.rt = rt
        rt.register("pp", self._handle)

    def start(self):
        if self.pid == 0:
            self.rt.send(1, "pp", ("ping",))
        else:
            self.rt.output("idle")

    def _handle(self, src, payload):
        if payload[0] == "ping":
            self.rt.send(src, "pp", ("pong",))
        else:
            self.rt.output("done")


class Chatter:
    """Every process broadcasts `rounds` waves; used for scheduling tests."""

    def __init__(self, pid, rt, rounds=2):
        self.pid = pid
        self.rt = rt
        self.rounds = rounds
        self.seen = 0
        rt.register("chat", self._handle)

    def start(self):
        self.rt.broadcast("chat", (0, self.pid))

    def _handle(self, src, payload):
        rnd = payload[0]
        self.seen += 1
        if rnd + 1 < self.rounds:
            self.rt.send(src, "chat", (rnd + 1, self.pid))
        enough = self.rounds * (self.rt.config.n - self.rt.config.f)
        if self.seen >= enough and not self.rt.done:
            self.rt.output(self.seen)


def pingpong_config():
    return SystemConfig(n=2, f=0, master_seed=7)


def test_pingpong_two_deliveries():
    trace = run_simulation(pingpong_config(), PingPong)
    deliveries = [ev for ev in trace.events if ev[1] == "dlv"]
    assert len(deliveries) == 2


def test_pingpong_outputs():
    trace = run_simulation(pingpong_config(), PingPong)
    assert trace.outputs[1] == "idle"
    assert trace.outputs[0] == "done"


def test_determinism_equal_hash():
    from coinlab.adversaries import ReorderAdversary
    cfg = SystemConfig(n=4, f=1, master_seed=11)
    t1 = run_simulation(cfg, Chatter, ReorderAdversary(), seed=5)
    t2 = run_simulation(cfg, Chatter, ReorderAdversary(), seed=5)
    assert t1.trace_hash == t2.trace_hash
    t3 = run_simulation(cfg, Chatter, ReorderAdversary(), seed=6)
    assert t3.trace_hash != t1.trace_hash


def test_fifo_delivers_in_enqueue_order():
    cfg = SystemConfig(n=4, f=1, master_seed=1)
    trace = run_simulation(cfg, Chatter, FifoAdversary())
    sends = [ev for ev in trace.events if ev[1] == "snd"]
    deliveries = [ev for ev in trace.events if ev[1] == "dlv"]
    assert [d[2:6] for d in deliveries] == [s[2:6] for s in sends][:len(deliveries)]


def test_stalled_envelope_force_delivered():
    cfg = SystemConfig(n=4, f=1, master_seed=3)
    bound = FAIRNESS_BOUND_FACTOR * cfg.n * cfg.n
    trace = run_simulation(cfg, lambda pid, rt: Chatter(pid, rt, rounds=20),
                           StallAdversary(victim=2), seed=3)
    assert 2 in trace.outputs
    skips = [ev[7] for ev in trace.events if ev[1] == "dlv"]
    assert max(skips) >= AGING_FACTOR * cfg.n * cfg.n  # the stall really bit
    assert max(skips) <= bound


def test_crash_adversary_silences_victim():
    cfg = SystemConfig(n=4, f=1, master_seed=9)
    adv = CrashAdversary(victims=[3], by_step=0)
    trace = run_simulation(cfg, Chatter, adv, seed=9)
    crash_step = trace.corrupted[3][0]
    late_sends = [ev for ev in trace.events
                  if ev[1] in ("snd", "inj") and ev[2] == 3
                  and ev[0] > crash_step]
    assert late_sends == []
    assert 3 not in trace.outputs


def test_corruption_budget_enforced():
    cfg = SystemConfig(n=4, f=1, master_seed=2)
    adv = CrashAdversary(victims=[1, 2], by_step=0)
    trace = run_simulation(cfg, Chatter, adv, seed=2)
    assert len(trace.corrupted) == 1
    assert any(ev[1] == "rej" for ev in trace.events)
    assert set(trace.outputs) == {0, 2, 3}


class OneShot:
    def __init__(self, pid, rt):
        self.pid = pid
        self.rt = rt
        rt.register("blob", lambda src, payload: rt.output("got"))

    def start(self):
        if self.pid == 0:
            self.rt.send(1, "blob", b"y" * 96)   # encodes to exactly 100 bytes
        if self.pid != 1:
            self.rt.output("sent")


def test_bit_counter_for_single_envelope():
    trace = run_simulation(SystemConfig(n=2, f=0, master_seed=4), OneShot)
    metrics = trace_metrics(trace)
    assert metrics["tags"]["blob"].bits == 800
    assert metrics["tags"]["blob"].messages == 1


def test_metrics_empty_trace():
    class Quiet:
        def __init__(self, pid, rt):
            self.rt = rt

        def start(self):
            self.rt.output(0)

    trace = run_simulation(SystemConfig(n=2, f=0, master_seed=4), Quiet)
    metrics = trace_metrics(trace)
    assert metrics["total_messages"] == 0
    assert metrics["total_bits"] == 0


def test_deadlock_names_stuck_stage():
    class Stuck:
        def __init__(self, pid, rt):
            self.rt = rt
            rt.stage = "waiting/forever"

        def start(self):
            pass

    with pytest.raises(NonTerminationError) as err:
        run_simulation(SystemConfig(n=2, f=0, master_seed=4), Stuck)
    assert "waiting/forever" in str(err.value)


def test_step_budget_raises():
    class Loop:
        def __init__(self, pid, rt):
            self.pid = pid
            self.rt = rt
            rt.stage = "loop"
            rt.register("loop", self._handle)

        def start(self):
            self.rt.send(self.pid, "loop", (0,))

        def _handle(self, src, payload):
            self.rt.send(self.pid, "loop", (payload[0] + 1,))

    with pytest.raises(NonTerminationError) as err:
        run_simulation(SystemConfig(n=2, f=0, master_seed=4), Loop,
                       max_steps=500)
    assert "loop" in str(err.value)
