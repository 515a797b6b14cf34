"""Asynchronous Verifiable Secret Sharing, two swappable backends.

The ideal backend keeps the secret inside the simulator-owned vault and
only broadcasts a completion token, giving the coin experiments a fast AVSS
with a crisp secrecy boundary.  The Shamir backend is a desk-scale concrete
scheme: hash commitments to blinded shares ride on BRB, shares travel on
private channels, completion uses a Bracha-style ACK/DONE double threshold
so that SharingComplete at one correct process propagates to all.

Both expose the same surface:

    share(secret)              dealer only, once
    on_complete(callback)      fires when SharingComplete
    enable_retrieve()          idempotent; answers future share requests
    retrieve(callback)         callback(value) once the bound secret is known
"""

from __future__ import annotations

from .brb import Brb
from .encoding import digest, encode
from .shamir import (DEFAULT_PRIME, interpolate_at_zero, interpolate_coeffs,
                     make_shares, poly_eval)

ACK, DONE, REQ, REVEAL, SHARE = "a", "d", "rq", "rv", "sh"


class AvssBindingError(Exception):
    """Commitment-valid shares off a single degree-f polynomial: the dealer
    provably committed to an inconsistent share vector."""


class _AvssBase:
    def __init__(self, rt, tag, dealer):
        self.rt = rt
        self.tag = tag
        self.dealer = dealer
        self.sharing_complete = False
        self.retrieve_enabled = False
        self._complete_cbs = []
        self._retrieve_cbs = []
        self._cached = None
        self._shared = False

    def on_complete(self, callback):
        if self.sharing_complete:
            callback()
        else:
            self._complete_cbs.append(callback)

    def _mark_complete(self):
        if self.sharing_complete:
            return
        self.sharing_complete = True
        callbacks, self._complete_cbs = self._complete_cbs, []
        for cb in callbacks:
            cb()

    def retrieve(self, callback):
        if self._cached is not None:
            callback(self._cached)
            return
        self._retrieve_cbs.append(callback)
        if self.sharing_complete:
            self._request()
        else:
            self.on_complete(self._request)

    def _resolve(self, value):
        if self._cached is not None:
            return
        self._cached = value
        callbacks, self._retrieve_cbs = self._retrieve_cbs, []
        for cb in callbacks:
            cb(value)

    def _request(self):
        raise NotImplementedError


class AvssIdeal(_AvssBase):
    """Ideal functionality: deposit with the vault, BRB a completion token."""

    def __init__(self, rt, tag, dealer):
        super().__init__(rt, tag, dealer)
        self._brb = Brb(rt, tag + "/c", dealer, self._on_token)
        self._requested = False

    def share(self, secret):
        if self.rt.pid != self.dealer:
            raise ValueError("only the dealer shares")
        if self._shared:
            raise ValueError("double share")
        self._shared = True
        self.rt.vault.deposit(self.tag, self.dealer, secret)
        self._brb.broadcast(b"ok")

    def _on_token(self, message):
        # A token forged without a deposit must not count as completion.
        if self.rt.vault.deposited(self.tag):
            self._mark_complete()

    def enable_retrieve(self):
        if self.retrieve_enabled:
            return
        self.retrieve_enabled = True
        self.rt.vault.enable(self.tag, self.rt.pid)

    def _request(self):
        if not self._requested:
            self._requested = True
            self.rt.vault.request(self.tag, self.rt.pid, self._resolve)


class AvssShamir(_AvssBase):
    """Concrete desk-scale scheme over GF(p), p = 2^61 - 1 by default."""

    def __init__(self, rt, tag, dealer, prime=DEFAULT_PRIME):
        super().__init__(rt, tag, dealer)
        self.p = prime
        self.commitments = None
        self.my_share = None          # (value, blind) once verified
        self._candidate = None
        self.ack_set = set()
        self.done_set = set()
        self._sent_ack = False
        self._sent_done = False
        self._revealed = {}           # pid -> verified share value
        self._req_sent = False
        self._pending_reqs = set()
        self._brb = Brb(rt, tag + "/c", dealer, self._on_commitments)
        rt.register(tag, self._handle)

    # -- dealing -------------------------------------------------------------

    def _commit(self, index, value, blind):
        return digest(encode((self.tag, index, value, blind)),
                      self.rt.config.lam)

    def share(self, secret):
        if self.rt.pid != self.dealer:
            raise ValueError("only the dealer shares")
        if self._shared:
            raise ValueError("double share")
        self._shared = True
        cfg = self.rt.config
        rng = self.rt.rng(self.tag)
        _, shares = make_shares(secret, cfg.f, cfg.n, rng, self.p)
        blinds = [rng.getrandbits(cfg.lam) for _ in range(cfg.n)]
        commits = tuple(self._commit(j, shares[j], blinds[j])
                        for j in range(cfg.n))
        self._brb.broadcast(commits)
        for j in range(cfg.n):
            self.rt.send(j, self.tag, (SHARE, shares[j], blinds[j]))

    # -- acceptance ----------------------------------------------------------

    def _on_commitments(self, commits):
        if self.commitments is not None:
            return
        if not (isinstance(commits, tuple) and len(commits) == self.rt.config.n
                and all(isinstance(c, bytes) for c in commits)):
            return
        self.commitments = commits
        self._try_ack()
        self._check_thresholds()
        self._answer_reqs()

    def _handle(self, src, payload):
        kind = payload[0]
        if kind == SHARE and src == self.dealer:
            if self._candidate is None:
                value, blind = payload[1], payload[2]
                if isinstance(value, int) and isinstance(blind, int):
                    self._candidate = (value, blind)
                    self._try_ack()
        elif kind == ACK:
            self.ack_set.add(src)
            self._check_thresholds()
        elif kind == DONE:
            self.done_set.add(src)
            self._check_thresholds()
        elif kind == REQ:
            self._pending_reqs.add(src)
            self._answer_reqs()
        elif kind == REVEAL:
            self._on_reveal(src, payload[1], payload[2])

    def _try_ack(self):
        if self._sent_ack or self.commitments is None or self._candidate is None:
            return
        value, blind = self._candidate
        if not 0 <= value < self.p:
            return
        if self._commit(self.rt.pid, value, blind) != self.commitments[self.rt.pid]:
            return
        self.my_share = self._candidate
        self._sent_ack = True
        self.rt.broadcast(self.tag, (ACK,))
        self._answer_reqs()

    def _check_thresholds(self):
        cfg = self.rt.config
        if not self._sent_done and (len(self.ack_set) >= cfg.quorum
                                    or len(self.done_set) >= cfg.f + 1):
            self._sent_done = True
            self.rt.broadcast(self.tag, (DONE,))
        if (len(self.done_set) >= cfg.quorum
                and self.commitments is not None):
            self._mark_complete()

    # -- retrieval -----------------------------------------------------------

    def enable_retrieve(self):
        if self.retrieve_enabled:
            return
        self.retrieve_enabled = True
        self._answer_reqs()

    def _answer_reqs(self):
        if not self.retrieve_enabled or self.my_share is None:
            return
        for pid in sorted(self._pending_reqs):
            self.rt.send(pid, self.tag,
                         (REVEAL, self.my_share[0], self.my_share[1]))
        self._pending_reqs.clear()

    def _request(self):
        if self._req_sent:
            return
        self._req_sent = True
        self.rt.broadcast(self.tag, (REQ,))

    def _on_reveal(self, src, value, blind):
        if self._cached is not None or self.commitments is None:
            return
        if src in self._revealed:
            return
        if not (isinstance(value, int) and isinstance(blind, int)
                and 0 <= value < self.p):
            return
        if self._commit(src, value, blind) != self.commitments[src]:
            return
        self._revealed[src] = value
        f = self.rt.config.f
        if len(self._revealed) < f + 1 or not self._req_sent:
            return
        points = sorted(self._revealed.items())[: f + 1]
        coeffs_points = [(pid + 1, val) for pid, val in points]
        secret = interpolate_at_zero(coeffs_points, self.p)
        coeffs = interpolate_coeffs(coeffs_points, self.p)
        for pid, val in self._revealed.items():
            if poly_eval(coeffs, pid + 1, self.p) != val:
                raise AvssBindingError(
                    f"{self.tag}: commitment-valid shares are inconsistent")
        self._resolve(secret)


def make_avss(backend, rt, tag, dealer, prime=DEFAULT_PRIME):
    if backend == "ideal":
        return AvssIdeal(rt, tag, dealer)
    if backend == "shamir":
        return AvssShamir(rt, tag, dealer, prime)
    raise ValueError(f"unknown AVSS backend {backend!r}")
