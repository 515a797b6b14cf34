"""Shared wrapper processes and property-run drivers for the test suite."""

from __future__ import annotations

from coinlab import SystemConfig, run_simulation
from coinlab.adversaries import (AdaptiveAdversary, CrashAdversary,
                                 FifoAdversary, MutatingAdversary,
                                 ReorderAdversary)
from coinlab.sim import AdversaryDecision, SILENT


def config(n, f, seed=0, lam=32):
    return SystemConfig(n=n, f=f, lam=lam, master_seed=seed)


def correct_outputs(trace):
    return {pid: v for pid, v in trace.outputs.items()
            if pid not in trace.corrupted}


def adversary_mix(seed):
    """A rotating pool of adversaries for randomized property runs."""
    kind = seed % 4
    if kind == 0:
        return ReorderAdversary()
    if kind == 1:
        return CrashAdversary()
    if kind == 2:
        return MutatingAdversary()
    return AdaptiveAdversary()


class ScriptedInjector(ReorderAdversary):
    """Corrupts `victim` silently at step 0 and injects a scripted batch of
    (dst, tag, payload) messages from it."""

    def __init__(self, victim, script):
        self.victim = victim
        self.script = script

    def setup(self, cfg, rng):
        super().setup(cfg, rng)
        self._armed = False

    def step(self, view, pending):
        decision = super().step(view, pending)
        if not self._armed:
            self._armed = True
            decision.corrupt = [(self.victim, SILENT)]
            decision.sends = [(self.victim, dst, tag, payload)
                              for dst, tag, payload in self.script]
        return decision
