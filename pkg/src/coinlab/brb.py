"""Bracha-style Byzantine Reliable Broadcast.

Three phases: the leader SENDs the payload, everyone ECHOes its digest,
READY votes amplify and trigger delivery.  ECHO and READY carry only the
digest; a process that reaches the delivery threshold without ever seeing
the payload pulls it from processes that echoed the digest (they must hold
it), which preserves Totality without shipping the payload n^2 times.

Thresholds for n >= 3f+1:
    echo -> ready      ceil((n+f+1)/2) matching ECHOs
    ready amplification f+1 matching READYs
    deliver            2f+1 matching READYs
"""

from __future__ import annotations

from .encoding import digest, encode

SEND, ECHO, READY, PULL, PAYLOAD = "s", "e", "r", "q", "p"


def echo_threshold(n, f):
    return (n + f + 2) // 2          # == ceil((n+f+1)/2)


class Brb:
    def __init__(self, rt, tag, leader, on_deliver):
        self.rt = rt
        self.tag = tag
        self.leader = leader
        self.on_deliver = on_deliver
        cfg = rt.config
        self._echo_thresh = echo_threshold(cfg.n, cfg.f)
        self._ready_amplify = cfg.f + 1
        self._deliver_thresh = 2 * cfg.f + 1
        self.sent_echo = False
        self.sent_ready = False
        self.delivered = False
        self.payloads = {}           # digest -> message
        self.echo_set = {}           # digest -> set of senders
        self.ready_set = {}
        self._pulled_from = set()
        self._broadcast_done = False
        rt.register(tag, self._handle)

    def broadcast(self, message):
        if self.rt.pid != self.leader:
            raise ValueError("only the leader may broadcast")
        if self._broadcast_done:
            raise ValueError("double broadcast on one BRB instance")
        self._broadcast_done = True
        self.rt.broadcast(self.tag, (SEND, message))

    def _digest(self, message):
        return digest(encode((self.tag, message)), self.rt.config.lam)

    def _handle(self, src, payload):
        kind = payload[0]
        if kind == SEND:
            self._on_send(src, payload[1])
        elif kind == ECHO:
            self._on_vote(src, payload[1], self.echo_set)
        elif kind == READY:
            self._on_vote(src, payload[1], self.ready_set)
        elif kind == PULL:
            self._on_pull(src, payload[1])
        elif kind == PAYLOAD:
            self._on_payload(payload[1])

    def _on_send(self, src, message):
        if src != self.leader or self.sent_echo:
            return
        d = self._digest(message)
        self.payloads[d] = message
        self.sent_echo = True
        self.rt.broadcast(self.tag, (ECHO, d))
        self._check(d)

    def _on_vote(self, src, d, votes):
        if not isinstance(d, bytes):
            return
        seen = votes.setdefault(d, set())
        if src in seen:
            return
        seen.add(src)
        self._check(d)

    def _check(self, d):
        echoes = len(self.echo_set.get(d, ()))
        readies = len(self.ready_set.get(d, ()))
        if not self.sent_ready and (echoes >= self._echo_thresh
                                    or readies >= self._ready_amplify):
            self.sent_ready = True
            self.rt.broadcast(self.tag, (READY, d))
        if readies >= self._deliver_thresh and not self.delivered:
            if d in self.payloads:
                self._deliver(d)
            else:
                # Pull the payload from echoers: at least f+1 correct
                # processes hold it and their ECHOs reach us eventually.
                for pid in sorted(self.echo_set.get(d, ())):
                    if pid not in self._pulled_from:
                        self._pulled_from.add(pid)
                        self.rt.send(pid, self.tag, (PULL, d))

    def _on_pull(self, src, d):
        message = self.payloads.get(d)
        if message is not None:
            self.rt.send(src, self.tag, (PAYLOAD, message))

    def _on_payload(self, message):
        d = self._digest(message)
        self.payloads.setdefault(d, message)
        self._check(d)

    def _deliver(self, d):
        self.delivered = True
        self.on_deliver(self.payloads[d])


class BrbGroup:
    """n BRB instances under one tag prefix, one leader each."""

    def __init__(self, rt, prefix, on_deliver):
        self.rt = rt
        self.instances = [
            Brb(rt, f"{prefix}/{leader}", leader,
                (lambda ldr: lambda m: on_deliver(ldr, m))(leader))
            for leader in range(rt.config.n)
        ]

    def broadcast(self, message):
        self.instances[self.rt.pid].broadcast(message)
