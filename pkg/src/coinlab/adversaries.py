"""Adversary strategies for the simulator.

The built-in strategies only exercise powers the model grants: delivery
scheduling, corruption of up to f processes, dropping messages from
corrupted senders, injecting messages from corrupted senders, and rewriting
the outgoing traffic of puppet-corrupted processes.  Protocol-specific
attacks (e.g. a crafted equivocating BRB leader) are built from the same
hooks inside the test suite.
"""

from __future__ import annotations

from .sim import Adversary, AdversaryDecision, PUPPET, SILENT


class FifoAdversary(Adversary):
    """Delivers strictly in enqueue order; corrupts nobody."""


class ReorderAdversary(Adversary):
    """Uniformly random delivery order.

    Keeps a lazily-pruned list of sequence numbers so a random pick is O(1)
    amortised even though envelopes leave the pending set out of order.
    """

    def setup(self, config, rng):
        super().setup(config, rng)
        self._seqs = []
        self._known = 0

    def step(self, view, pending):
        if self._known < len(pending) or not self._seqs:
            self._seqs = list(pending.keys())
        while True:
            i = self.rng.randrange(len(self._seqs))
            seq = self._seqs[i]
            env = pending.get(seq)
            last = self._seqs.pop()
            if i < len(self._seqs):
                self._seqs[i] = last
            if env is not None:
                self._known = len(pending)
                return AdversaryDecision(deliver=env)
            if not self._seqs:
                self._seqs = list(pending.keys())


class StallAdversary(ReorderAdversary):
    """Never schedules traffic touching `victim` until the aging rule forces it."""

    def __init__(self, victim):
        self.victim = victim

    def step(self, view, pending):
        candidates = [e for e in pending.values()
                      if e.src != self.victim and e.dst != self.victim]
        if not candidates:
            return AdversaryDecision(deliver=None)
        return AdversaryDecision(deliver=self.rng.choice(candidates))


class CrashAdversary(ReorderAdversary):
    """Crashes `count` processes (silent corruption) within the first steps."""

    def __init__(self, count=None, victims=None, by_step=0):
        self.count = count
        self.victims = victims
        self.by_step = by_step

    def setup(self, config, rng):
        super().setup(config, rng)
        if self.victims is None:
            count = config.f if self.count is None else self.count
            self.victims = rng.sample(range(config.n), count)
        self._crashed = False

    def step(self, view, pending):
        decision = super().step(view, pending)
        if not self._crashed and view.step >= self.by_step:
            decision.corrupt = [(pid, SILENT) for pid in self.victims]
            self._crashed = True
        return decision


class MutatingAdversary(ReorderAdversary):
    """Generic Byzantine behaviour: puppet-corrupts processes and randomly
    rewrites their outgoing messages (drop, duplicate, field mutation,
    replay of earlier payloads)."""

    def __init__(self, count=None, victims=None, mutate_prob=0.35):
        self.count = count
        self.victims = victims
        self.mutate_prob = mutate_prob

    def setup(self, config, rng):
        super().setup(config, rng)
        if self.victims is None:
            count = config.f if self.count is None else self.count
            self.victims = rng.sample(range(config.n), count)
        self._seen = []
        self._corrupted = False

    def step(self, view, pending):
        decision = super().step(view, pending)
        if not self._corrupted:
            decision.corrupt = [(pid, PUPPET) for pid in self.victims]
            self._corrupted = True
        return decision

    def _mutate_value(self, value):
        rng = self.rng
        if isinstance(value, bool):
            return rng.random() < 0.5
        if isinstance(value, int):
            return rng.choice([0, 1, value + 1, value - 1,
                               rng.randrange(1 << 16)])
        if isinstance(value, bytes):
            return bytes(rng.randrange(256) for _ in range(len(value) or 1))
        if isinstance(value, str):
            return value[::-1] or "x"
        if isinstance(value, tuple):
            if not value:
                return value
            items = list(value)
            i = rng.randrange(len(items))
            items[i] = self._mutate_value(items[i])
            return tuple(items)
        if isinstance(value, frozenset):
            items = set(value)
            if items and rng.random() < 0.5:
                items.pop()
            else:
                items.add(rng.randrange(self.config.n))
            return frozenset(items)
        return value

    def transform_send(self, env, view):
        self._seen.append((env.tag, env._payload))
        if len(self._seen) > 64:
            self._seen.pop(0)
        rng = self.rng
        if rng.random() >= self.mutate_prob:
            return [(env.dst, env.tag, env._payload)]
        roll = rng.random()
        if roll < 0.25:
            return []                                   # withhold
        if roll < 0.50:                                 # equivocate
            return [(dst, env.tag, self._mutate_value(env._payload))
                    for dst in range(self.config.n)]
        if roll < 0.75 and self._seen:                  # replay something old
            tag, payload = rng.choice(self._seen)
            return [(env.dst, env.tag, env._payload), (env.dst, tag, payload)]
        return [(env.dst, env.tag, self._mutate_value(env._payload))]


class AdaptiveAdversary(MutatingAdversary):
    """Behaves honestly until the first top-level output appears, then turns
    into a mutating adversary.  Used to check that bound values (gather core,
    RSD assignments) cannot be changed after the fact."""

    def __init__(self, count=None, mutate_prob=0.5):
        super().__init__(count=count, mutate_prob=mutate_prob)

    def setup(self, config, rng):
        super().setup(config, rng)
        self._corrupted = True     # hold off puppet corruption
        self._armed = False

    def step(self, view, pending):
        decision = ReorderAdversary.step(self, view, pending)
        if not self._armed and view.outputs():
            decision.corrupt = [(pid, PUPPET) for pid in self.victims]
            self._armed = True
        return decision

    def transform_send(self, env, view):
        if not self._armed:
            return [(env.dst, env.tag, env._payload)]
        return super().transform_send(env, view)


ADVERSARIES = {
    "fifo": FifoAdversary,
    "reorder": ReorderAdversary,
    "crash": CrashAdversary,
    "equivocate": MutatingAdversary,
    "adaptive": AdaptiveAdversary,
}


def make_adversary(name, **kwargs) -> Adversary:
    try:
        cls = ADVERSARIES[name]
    except KeyError:
        raise ValueError(f"unknown adversary {name!r}; "
                         f"choose from {sorted(ADVERSARIES)}") from None
    return cls(**kwargs)
