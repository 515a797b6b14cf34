"""Counters and summaries computed over finished traces."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class TagMetrics:
    messages: int = 0
    bits: int = 0


def trace_metrics(trace):
    """Per protocol tag: message count, total bits, plus completion steps.

    Counters are recomputed from the event list when it was recorded, so the
    incremental counters can be cross-checked against the events.
    """
    per_tag = {}
    if trace.record_events:
        for step, kind, src, dst, tag, nbytes, depth, skip in trace.events:
            if kind in ("snd", "inj"):
                m = per_tag.setdefault(tag, TagMetrics())
                m.messages += 1
                m.bits += 8 * nbytes
    else:
        for tag, (count, bits) in trace.counters.items():
            per_tag[tag] = TagMetrics(count, bits)
    steps = sorted(s for pid, s in trace.output_steps.items()
                   if pid not in trace.corrupted)
    return {
        "tags": per_tag,
        "total_messages": sum(m.messages for m in per_tag.values()),
        "total_bits": sum(m.bits for m in per_tag.values()),
        "first_output_step": steps[0] if steps else None,
        "last_output_step": steps[-1] if steps else None,
    }


def bits_by_prefix(trace, sep="/"):
    """Aggregate the bit counters by the first tag component."""
    agg = {}
    for tag, (count, bits) in trace.counters.items():
        key = tag.split(sep, 1)[0]
        entry = agg.setdefault(key, TagMetrics())
        entry.messages += count
        entry.bits += bits
    return agg


def bits_matching(trace, predicate):
    return sum(bits for tag, (count, bits) in trace.counters.items()
               if predicate(tag))


def hash_compressed_bits(trace, predicate, lam):
    """Bits if every payload matched by `predicate` were replaced by a digest.

    Used to compare the desk-scale full-value reports of bundled approximate
    agreement with the hash-optimised variant the complexity analysis assumes.
    """
    total = 0
    for step, kind, src, dst, tag, nbytes, depth, skip in trace.events:
        if kind not in ("snd", "inj"):
            continue
        if predicate(tag):
            total += 8 * (lam // 8)
        else:
            total += 8 * nbytes
    return total
