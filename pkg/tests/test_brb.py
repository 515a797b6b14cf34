"""Byzantine Reliable Broadcast: validity, consistency, totality."""

import pytest

from coinlab import run_simulation
from coinlab.adversaries import MutatingAdversary, ReorderAdversary
from coinlab.brb import Brb, SEND, echo_threshold
from coinlab.sim import Adversary

from helpers import ScriptedInjector, config, correct_outputs


class BrbHost:
    """Single BRB instance with a fixed leader; outputs on deliver."""

    message = ("payload", 42)

    def __init__(self, pid, rt, leader=0, silent_leader=False):
        self.pid = pid
        self.rt = rt
        self.silent_leader = silent_leader
        rt.stage = "brb"
        self.brb = Brb(rt, "b/0", leader, rt.output)

    def start(self):
        if self.pid == self.brb.leader and not self.silent_leader:
            self.brb.broadcast(self.message)


def test_thresholds_n4_f1():
    assert echo_threshold(4, 1) == 3
    # ready amplification f+1 = 2, deliver 2f+1 = 3 are fixed by construction


def test_validity_all_correct():
    trace = run_simulation(config(4, 1, seed=1), BrbHost)
    assert correct_outputs(trace) == {p: BrbHost.message for p in range(4)}


def test_three_message_delay_phases():
    trace = run_simulation(config(4, 1, seed=2), BrbHost)
    # causal depth of each output: SEND -> ECHO -> READY -> deliver
    assert set(trace.output_depths.values()) == {3}


def test_silent_leader_no_delivery():
    with pytest.raises(Exception) as err:
        run_simulation(config(4, 1, seed=3),
                       lambda pid, rt: BrbHost(pid, rt, silent_leader=True),
                       max_steps=20000)
    assert "brb" in str(err.value) or "b/0" in str(err.value)


def test_double_broadcast_rejected():
    class DoubleHost(BrbHost):
        def start(self):
            if self.pid == 0:
                self.brb.broadcast(("m",))
                with pytest.raises(ValueError):
                    self.brb.broadcast(("m2",))

    trace = run_simulation(config(4, 1, seed=4), DoubleHost)
    assert correct_outputs(trace) == {p: ("m",) for p in range(4)}


def test_equivocating_leader_consistency_property():
    """Corrupted leader sends m to half, m' to the rest: the set of delivered
    messages across correct processes stays <= 1, and if anyone delivers all
    correct deliver the same thing (1000 randomized seeds)."""
    n, f = 4, 1
    for seed in range(1000):
        script = [(dst, "b/0", (SEND, ("m1",) if dst % 2 else ("m2",)))
                  for dst in range(n)]
        adv = ScriptedInjector(victim=0, script=script)
        try:
            trace = run_simulation(
                config(n, f, seed=seed),
                lambda pid, rt: BrbHost(pid, rt, silent_leader=True),
                adv, seed=seed, record_hash=False, drain=True)
            outs = correct_outputs(trace)
        except Exception as exc:  # no delivery at all is a legal outcome
            assert "NonTermination" in type(exc).__name__
            continue
        assert len(set(outs.values())) <= 1
        assert len(outs) == n - len(trace.corrupted)  # totality


def test_mutating_leader_consistency_and_totality():
    n, f = 4, 1
    violations = 0
    for seed in range(300):
        adv = MutatingAdversary(victims=[0], mutate_prob=0.6)
        try:
            trace = run_simulation(config(n, f, seed=seed), BrbHost, adv,
                                   seed=seed, record_hash=False, drain=True)
        except Exception as exc:
            assert "NonTermination" in type(exc).__name__
            continue
        outs = correct_outputs(trace)
        if len(set(outs.values())) > 1:
            violations += 1
        if outs and len(outs) != n - len(trace.corrupted):
            violations += 1
    assert violations == 0


def test_totality_after_first_delivery():
    """If one correct process delivered, all correct eventually deliver."""
    for seed in range(200):
        adv = ReorderAdversary()
        trace = run_simulation(config(4, 1, seed=seed), BrbHost, adv,
                               seed=seed, record_hash=False, drain=True)
        outs = correct_outputs(trace)
        assert len(outs) == 4
        assert set(outs.values()) == {BrbHost.message}
