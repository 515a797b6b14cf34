"""Deterministic discrete-event simulator with a pluggable adversary.

One simulation hosts n protocol state machines.  The adversary owns the
network: each scheduler step it picks the next pending envelope to deliver,
may corrupt processes (up to the budget f), inject messages from corrupted
processes, and drop in-flight messages whose sender it has corrupted.

Liveness is enforced by an aging rule: an envelope between two currently
correct processes that has been passed over for AGING_FACTOR * n**2
delivery steps is force-delivered before the adversary is consulted, so
"eventual delivery" holds in every run no matter how hostile the schedule.

Everything is a pure function of (config, adversary program, seed): process
randomness comes from per-(process, tag) PRNG streams derived from the
master seed, the adversary draws from its own derived stream, and all
container iteration is insertion-ordered.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from hashlib import sha256

from .config import SystemConfig
from .encoding import digest, encode, seed_int

AGING_FACTOR = 8           # force-delivery threshold, in units of n**2
FAIRNESS_BOUND_FACTOR = 64  # invariant checked by tests: skip_count <= 64 n**2
DEFAULT_STEP_BUDGET = 10_000_000

SILENT = "silent"
PUPPET = "puppet"


class NonTerminationError(Exception):
    """Step budget ran out or the system deadlocked before all outputs."""

    def __init__(self, msg, stuck_tags=()):
        super().__init__(msg)
        self.stuck_tags = tuple(stuck_tags)


class Envelope:
    __slots__ = ("seq", "src", "dst", "tag", "_payload", "nbytes",
                 "enqueue_step", "depth", "injected")

    def __init__(self, seq, src, dst, tag, payload, nbytes, enqueue_step,
                 depth, injected=False):
        self.seq = seq
        self.src = src
        self.dst = dst
        self.tag = tag
        self._payload = payload
        self.nbytes = nbytes
        self.enqueue_step = enqueue_step
        self.depth = depth
        self.injected = injected

    def __repr__(self):
        return (f"Envelope(#{self.seq} {self.src}->{self.dst} "
                f"tag={self.tag!r} {self.nbytes}B)")


@dataclass
class AdversaryDecision:
    """What the adversary wants to happen this scheduler step."""

    deliver: Envelope | None = None
    corrupt: list = field(default_factory=list)   # (pid, mode) pairs
    sends: list = field(default_factory=list)     # (src, dst, tag, payload)
    drops: list = field(default_factory=list)     # Envelopes to discard


class Adversary:
    """Base strategy: FIFO delivery, no corruption."""

    def setup(self, config: SystemConfig, rng: random.Random):
        self.config = config
        self.rng = rng

    def step(self, view, pending):
        return AdversaryDecision(deliver=view.oldest_pending())

    def transform_send(self, env, view):
        """Rewrite an outgoing message of a puppet-corrupted process.

        Returns a list of (dst, tag, payload); default is faithful delivery.
        """
        return [(env.dst, env.tag, env._payload)]


class Trace:
    """Replayable record of one simulation."""

    def __init__(self, config, record_events=True, record_hash=True):
        self.config = config
        self.record_events = record_events
        self.events = []            # (step, kind, src, dst, tag, nbytes, depth, skip)
        self.notes = []             # (step, pid, tag, kind, data) -- test instrumentation
        self.outputs = {}           # pid -> top-level output
        self.output_steps = {}
        self.output_depths = {}
        self.counters = {}          # tag -> [messages, bits]
        self.corrupted = {}         # pid -> (step, mode)
        self.steps = 0
        self._hasher = sha256() if record_hash else None
        self.trace_hash = None

    def _hash_line(self, step, kind, src, dst, tag, nbytes, dig):
        self._hasher.update(
            b"%d|%s|%d|%d|%s|%d|%s\n"
            % (step, kind.encode(), src, dst, tag.encode(), nbytes, dig)
        )

    def event(self, step, kind, src, dst, tag, nbytes=0, depth=0, skip=0,
              payload_digest=b""):
        if self.record_events:
            self.events.append((step, kind, src, dst, tag, nbytes, depth, skip))
        if self._hasher is not None:
            self._hash_line(step, kind, src, dst, tag, nbytes,
                            payload_digest.hex().encode())

    def count_send(self, tag, nbytes):
        c = self.counters.get(tag)
        if c is None:
            self.counters[tag] = [1, 8 * nbytes]
        else:
            c[0] += 1
            c[1] += 8 * nbytes

    def finalize(self):
        if self._hasher is not None:
            self.trace_hash = self._hasher.hexdigest()
        return self

    def export_log(self) -> str:
        """Canonical line-based event log (see External Interfaces)."""
        lines = ["%d %s %d %d %s %d %d %d" % ev for ev in self.events]
        return "\n".join(lines) + ("\n" if lines else "")


class IdealVault:
    """Simulator-owned ideal secret-sharing functionality.

    Secrets deposited here never travel in messages, which is what makes the
    adversary-view secrecy boundary structural: a secret becomes visible to
    the adversary only once some correct process has enabled its retrieval.
    """

    def __init__(self, sim):
        self._sim = sim
        self._secrets = {}        # tag -> (dealer, value)
        self._enabled = {}        # tag -> set of pids
        self._requests = []       # (tag, pid, callback), unresolved
        self._released = {}       # tag -> step of first correct enable

    def deposit(self, tag, dealer, value):
        if tag in self._secrets:
            raise ValueError(f"double deposit on {tag!r}")
        self._secrets[tag] = (dealer, value)

    def deposited(self, tag):
        return tag in self._secrets

    def enable(self, tag, pid):
        enabled = self._enabled.setdefault(tag, set())
        if pid in enabled:
            return
        enabled.add(pid)
        if tag not in self._released and pid not in self._sim.corrupted:
            self._released[tag] = self._sim.step
            self._sim.trace.event(self._sim.step, "irl", pid, -1, tag)

    def request(self, tag, pid, callback):
        self._requests.append((tag, pid, callback))

    def peek(self, tag):
        """Value as deposited; for oracles and for dealers' own state."""
        return self._secrets[tag][1]

    def released(self, tag):
        return tag in self._released

    def release_step(self, tag):
        return self._released.get(tag)

    def _satisfiable(self, tag):
        if tag not in self._secrets:
            return False
        enabled = self._enabled.get(tag, ())
        return all(p in enabled or p in self._sim.corrupted
                   for p in range(self._sim.config.n))

    def resolve(self):
        """Fire retrieve callbacks whose release condition now holds."""
        fired = False
        still = []
        for tag, pid, callback in self._requests:
            if pid not in self._sim.corrupted and self._satisfiable(tag):
                fired = True
                self._sim.trace.event(self._sim.step, "idl", pid, -1, tag)
                self._sim._run_in_process(pid, callback,
                                          self._secrets[tag][1])
            else:
                still.append((tag, pid, callback))
        self._requests = still
        return fired

    def pending_requests(self):
        return len(self._requests)


class AdversaryView:
    """What the adversary is allowed to see.

    In-flight payload *contents* are visible only when an endpoint is
    corrupted (private channels); unreleased vault secrets are not reachable
    from here at all.
    """

    def __init__(self, sim):
        self._sim = sim

    @property
    def step(self):
        return self._sim.step

    @property
    def config(self):
        return self._sim.config

    @property
    def corrupted(self):
        return dict(self._sim.corrupted)

    def pending(self):
        return list(self._sim.pending.values())

    def oldest_pending(self):
        pend = self._sim.pending
        return next(iter(pend.values())) if pend else None

    def payload_of(self, env):
        if env.src in self._sim.corrupted or env.dst in self._sim.corrupted:
            return env._payload
        return None

    def process_state(self, pid):
        if pid not in self._sim.corrupted:
            raise PermissionError("process is not corrupted")
        return self._sim.processes[pid]

    def released_secrets(self):
        vault = self._sim.vault
        return {tag: vault._secrets[tag][1] for tag in vault._released}

    def outputs(self):
        return dict(self._sim.trace.outputs)

    def events(self):
        return self._sim.trace.events

    def can_corrupt(self):
        return len(self._sim.corrupted) < self._sim.config.f


class ProcessRuntime:
    """Per-process face of the simulator: sending, randomness, output."""

    def __init__(self, sim, pid):
        self._sim = sim
        self.pid = pid
        self.config = sim.config
        self.handlers = {}
        self._rngs = {}
        self.done = False
        self.stage = "init"

    def register(self, tag, handler):
        if tag in self.handlers:
            raise ValueError(f"duplicate handler for tag {tag!r}")
        self.handlers[tag] = handler

    def rng(self, tag) -> random.Random:
        r = self._rngs.get(tag)
        if r is None:
            r = random.Random(seed_int(self.config.master_seed, self.pid, tag))
            self._rngs[tag] = r
        return r

    def random_int(self, domain, tag):
        """RandomInt(D): uniform over [0, domain)."""
        return self.rng(tag).randrange(domain)

    def send(self, dst, tag, payload):
        self._sim.post(self.pid, dst, tag, payload)

    def broadcast(self, tag, payload):
        for dst in range(self.config.n):
            self._sim.post(self.pid, dst, tag, payload)

    def note(self, kind, data, tag=""):
        self._sim.trace.notes.append((self._sim.step, self.pid, tag, kind, data))

    def output(self, value):
        if self.done:
            raise RuntimeError(f"process {self.pid} output twice")
        self.done = True
        self._sim.record_output(self.pid, value)

    @property
    def vault(self) -> IdealVault:
        return self._sim.vault

    def is_self_corrupted(self):
        return self.pid in self._sim.corrupted


class Simulator:
    def __init__(self, config: SystemConfig, factory, adversary: Adversary,
                 seed=None, max_steps=DEFAULT_STEP_BUDGET, record_events=True,
                 record_hash=True, drain=False):
        if seed is not None:
            config = SystemConfig(config.n, config.f, config.lam, seed)
        self.config = config
        self.trace = Trace(config, record_events, record_hash)
        self.vault = IdealVault(self)
        self.adversary = adversary
        self.max_steps = max_steps
        self.drain = drain
        self.step = 0
        self.seq = 0
        self.pending = {}        # seq -> Envelope, insertion == age order
        self.corrupted = {}      # pid -> mode
        self.runtimes = [ProcessRuntime(self, pid) for pid in range(config.n)]
        self.processes = [factory(pid, rt) for pid, rt in enumerate(self.runtimes)]
        self._delivery_depth = 0
        self._current_pid = None
        self._aging_threshold = AGING_FACTOR * config.n * config.n
        adversary.setup(config, random.Random(seed_int(config.master_seed, -1, "adv")))

    # -- plumbing used by runtimes ------------------------------------------

    def post(self, src, dst, tag, payload):
        if not 0 <= dst < self.config.n:
            raise ValueError(f"bad destination {dst}")
        mode = self.corrupted.get(src)
        if mode == SILENT:
            return
        if mode == PUPPET:
            env = Envelope(-1, src, dst, tag, payload, 0, self.step,
                           self._delivery_depth + 1)
            routed = self.adversary.transform_send(env, AdversaryView(self))
            for rdst, rtag, rpayload in routed:
                self._enqueue(src, rdst, rtag, rpayload, injected=True)
            return
        self._enqueue(src, dst, tag, payload)

    def _enqueue(self, src, dst, tag, payload, injected=False):
        data = encode(payload)
        env = Envelope(self.seq, src, dst, tag, payload, len(data), self.step,
                       self._delivery_depth + 1, injected)
        self.seq += 1
        self.pending[env.seq] = env
        self.trace.count_send(tag, env.nbytes)
        dig = digest(data) if self.trace._hasher is not None else b""
        self.trace.event(self.step, "inj" if injected else "snd", src, dst,
                         tag, env.nbytes, env.depth, payload_digest=dig)
        return env

    def record_output(self, pid, value):
        self.trace.outputs[pid] = value
        self.trace.output_steps[pid] = self.step
        self.trace.output_depths[pid] = self._delivery_depth
        self.trace.event(self.step, "out", pid, -1, "output", 0,
                         self._delivery_depth,
                         payload_digest=digest(encode(value)))

    def _run_in_process(self, pid, fn, *args):
        prev, prev_depth = self._current_pid, self._delivery_depth
        self._current_pid = pid
        try:
            fn(*args)
        finally:
            self._current_pid, self._delivery_depth = prev, prev_depth

    # -- adversary actions ---------------------------------------------------

    def corrupt(self, pid, mode=SILENT):
        if pid in self.corrupted:
            return True
        if len(self.corrupted) >= self.config.f:
            self.trace.event(self.step, "rej", pid, -1, "corrupt-budget")
            return False
        if mode not in (SILENT, PUPPET):
            raise ValueError(f"unknown corruption mode {mode!r}")
        self.corrupted[pid] = mode
        self.trace.corrupted[pid] = (self.step, mode)
        self.trace.event(self.step, "crp", pid, -1, mode)
        return True

    def _apply_decision(self, decision):
        for pid, mode in decision.corrupt:
            self.corrupt(pid, mode)
        for env in decision.drops:
            if env.seq not in self.pending:
                continue
            if env.src not in self.corrupted:
                self.trace.event(self.step, "rej", env.src, env.dst, "drop")
                continue
            del self.pending[env.seq]
            self.trace.event(self.step, "drp", env.src, env.dst, env.tag,
                             env.nbytes)
        for src, dst, tag, payload in decision.sends:
            if src not in self.corrupted:
                self.trace.event(self.step, "rej", src, dst, "inject")
                continue
            self._enqueue(src, dst, tag, payload, injected=True)
        env = decision.deliver
        if env is not None and env.seq not in self.pending:
            self.trace.event(self.step, "rej", env.src, env.dst, "deliver")
            env = None
        if env is None and self.pending:
            env = next(iter(self.pending.values()))
        return env

    # -- the event loop ------------------------------------------------------

    def _forced_aged(self):
        if not self.pending:
            return None
        first = next(iter(self.pending.values()))
        if self.step - first.enqueue_step < self._aging_threshold:
            return None
        for env in self.pending.values():
            if self.step - env.enqueue_step < self._aging_threshold:
                return None
            if env.src not in self.corrupted and env.dst not in self.corrupted:
                return env
        return None

    def _deliver(self, env):
        del self.pending[env.seq]
        self.step += 1
        skip = self.step - 1 - env.enqueue_step
        self.trace.event(self.step, "dlv", env.src, env.dst, env.tag,
                         env.nbytes, env.depth, skip)
        mode = self.corrupted.get(env.dst)
        if mode == SILENT:
            return
        rt = self.runtimes[env.dst]
        handler = rt.handlers.get(env.tag)
        if handler is None:
            return
        self._current_pid = env.dst
        self._delivery_depth = env.depth
        try:
            handler(env.src, env._payload)
        except (TypeError, ValueError, KeyError, IndexError, AttributeError):
            if env.src not in self.corrupted:
                raise
            self.trace.event(self.step, "bad", env.src, env.dst, env.tag)
        finally:
            self._current_pid = None
            self._delivery_depth = 0

    def _all_correct_done(self):
        return all(rt.done or pid in self.corrupted
                   for pid, rt in enumerate(self.runtimes))

    def _stuck_tags(self):
        tags = {rt.stage for pid, rt in enumerate(self.runtimes)
                if not rt.done and pid not in self.corrupted}
        if self.pending:
            tags.add(next(iter(self.pending.values())).tag)
        return sorted(tags)

    def run(self) -> Trace:
        for pid, proc in enumerate(self.processes):
            self._run_in_process(pid, proc.start)
        view = AdversaryView(self)
        while True:
            self.vault.resolve()
            if self._all_correct_done():
                break
            if not self.pending:
                if self.vault.resolve():
                    continue
                raise NonTerminationError(
                    f"deadlock at step {self.step}: no pending messages, "
                    f"stuck on {self._stuck_tags()}", self._stuck_tags())
            if self.step >= self.max_steps:
                raise NonTerminationError(
                    f"step budget {self.max_steps} exhausted, stuck on "
                    f"{self._stuck_tags()}", self._stuck_tags())
            env = self._forced_aged()
            if env is None:
                decision = self.adversary.step(view, self.pending)
                if isinstance(decision, Envelope):
                    decision = AdversaryDecision(deliver=decision)
                env = self._apply_decision(decision)
            if env is not None:
                self._deliver(env)
        if self.drain:
            self._drain()
        self.trace.steps = self.step
        return self.trace.finalize()

    def _drain(self):
        """FIFO-deliver leftovers so 'eventually' properties can be asserted."""
        while self.step < self.max_steps:
            self.vault.resolve()
            if not self.pending:
                if not self.vault.resolve():
                    break
                continue
            self._deliver(next(iter(self.pending.values())))


def run_simulation(config, protocol_factory, adversary=None, seed=None, *,
                   max_steps=DEFAULT_STEP_BUDGET, record_events=True,
                   record_hash=True, drain=False) -> Trace:
    """Run one simulation to completion and return its trace."""
    sim = Simulator(config, protocol_factory, adversary or Adversary(),
                    seed=seed, max_steps=max_steps,
                    record_events=record_events, record_hash=record_hash,
                    drain=drain)
    return sim.run()
