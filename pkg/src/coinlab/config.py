"""System-wide configuration shared by every protocol instance."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SystemConfig:
    """Parameters of one simulated system.

    n            -- number of processes
    f            -- corruption budget of the adversary
    lam          -- security parameter: hash width and ticket width, in bits
    master_seed  -- 64-bit seed from which all per-process randomness derives
    """

    n: int
    f: int
    lam: int = 32
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.f < 0:
            raise ValueError("f must be non-negative")
        if self.n < 3 * self.f + 1:
            raise ValueError(f"need n >= 3f+1, got n={self.n}, f={self.f}")
        if not 32 <= self.lam <= 60:
            raise ValueError("lambda must be in [32, 60]")

    @property
    def quorum(self) -> int:
        """2f+1: intersection quorum used all over the stack."""
        return 2 * self.f + 1

    @property
    def supermajority(self) -> int:
        """n-f: the count of processes one can safely wait for."""
        return self.n - self.f

    def require_faults(self):
        """Coin protocols divide by f; reject f=0 configs early."""
        if self.f < 1:
            raise ValueError("coin protocols require f >= 1")
        return self
