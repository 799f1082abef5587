"""Seeded synthetic protocol traces with known message types.

Binary types open with a distinct 2-byte opcode and a type-specific fixed
header; text types open with an ASCII keyword.  Everything that tells the
types apart sits in the first 16 bytes.  Later bytes mix fields drawn from a
vocabulary shared by all types with random filler, which is what makes long
message prefixes and set-based distances behave differently.
"""
from __future__ import annotations

import enum
import random
import struct
from dataclasses import dataclass

from .ingest import Corpus, Message, Transport

_WORDS = (b"boot.img", b"config.cfg", b"pxelinux.0", b"firmware.bin", b"octet", b"netascii",
          b"blksize", b"tsize", b"timeout", b"index.html", b"status", b"update")
_KEYWORDS = (b"GET ", b"POST ", b"HEAD ", b"PUT ", b"DELETE ", b"OPTIONS ", b"PATCH ", b"TRACE ",
             b"NOTIFY ", b"SUBSCRIBE ", b"REGISTER ", b"INVITE ")


class Mode(str, enum.Enum):
    BINARY = "binary"
    TEXT = "text"
    MIXED = "mixed"


@dataclass(frozen=True)
class SynthSpec:
    type_count: int = 5
    count: int = 2000
    mode: Mode = Mode.BINARY
    seed: int = 7
    length_range: tuple = (24, 96)
    port: int = 6969

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.type_count < 2:
            raise ValueError("need at least 2 message types")
        if self.count < self.type_count:
            raise ValueError("count must be at least the number of types")
        lo, hi = self.length_range
        if not 16 <= lo <= hi:
            raise ValueError("length_range must satisfy 16 <= min <= max")


@dataclass(frozen=True)
class _Template:
    label: str
    prefix: bytes  # fixed, type-discriminating
    choices: tuple  # mode field values, dominant first; empty when the type has none
    words: tuple  # shared-vocabulary words this type tends to carry
    text: bool


def _templates(spec: SynthSpec, rng: random.Random) -> list:
    out = []
    for t in range(spec.type_count):
        text = spec.mode is Mode.TEXT or (spec.mode is Mode.MIXED and t % 2 == 1)
        if text:
            kw = _KEYWORDS[t % len(_KEYWORDS)]
            if t >= len(_KEYWORDS):
                kw = kw.rstrip() + str(t).encode() + b" "
            prefix = kw + b"/"
            label = kw.strip().decode()
        else:
            opcode = struct.pack(">H", t + 1)
            prefix = opcode + bytes(rng.randrange(256) for _ in range(rng.randint(2, 4)))
            label = f"OP{t + 1}"
        choices = tuple(rng.sample(range(256), 3)) if t % 2 == 0 else ()
        words = tuple(rng.sample(_WORDS, 3))
        out.append(_Template(label, prefix, choices, words, text))
    return out


def _message(tpl: _Template, length: int, rng: random.Random) -> bytes:
    if tpl.text:
        body = bytearray(tpl.prefix)
        while len(body) < length:
            body += rng.choice(tpl.words if rng.random() < 0.7 else _WORDS)
            body += rng.choice((b"/", b"?", b"&", b" ", b"\r\n"))
        return bytes(body[:length])
    body = bytearray(tpl.prefix)
    if tpl.choices:
        # mode-like field: one dominant value, rare alternatives
        body.append(tpl.choices[0] if rng.random() < 0.9 else rng.choice(tpl.choices[1:]))
    body += bytes(rng.randrange(256) for _ in range(2))  # transaction id
    body += struct.pack(">H", length)
    while len(body) < 16:
        body.append(rng.randrange(256))
    while len(body) < length:
        if rng.random() < 0.5:
            body += rng.choice(tpl.words if rng.random() < 0.6 else _WORDS) + b"\x00"
        else:
            body += bytes(rng.randrange(256) for _ in range(rng.randint(2, 8)))
    return bytes(body[:length])


def _type_sequence(spec: SynthSpec, rng: random.Random) -> list:
    k, n = spec.type_count, spec.count
    floor = n // (2 * k)
    seq = [t for t in range(k) for _ in range(floor)]
    weights = [rng.uniform(0.5, 1.5) for _ in range(k)]
    seq += rng.choices(range(k), weights=weights, k=n - len(seq))
    rng.shuffle(seq)
    return seq


def generate(spec: SynthSpec) -> Corpus:
    """Labeled corpus, identical for identical specs."""
    rng = random.Random(spec.seed)
    templates = _templates(spec, rng)
    lo, hi = spec.length_range
    messages = []
    for i, t in enumerate(_type_sequence(spec, rng)):
        tpl = templates[t]
        payload = _message(tpl, rng.randint(lo, hi), rng)
        client = 1024 + rng.randrange(64000)
        if rng.random() < 0.5:
            src, dst = client, spec.port
        else:
            src, dst = spec.port, client
        messages.append(Message(payload, i, src, dst, Transport.UDP, tpl.label))
    return Corpus(messages, source=f"synth(K={spec.type_count},N={spec.count},{spec.mode.value},seed={spec.seed})")
