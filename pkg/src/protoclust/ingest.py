"""Packet capture ingest: classic pcap parsing, port-based classification,
ground-truth labels and the ``PMSG`` messages file.

Only Ethernet / IPv4 / {UDP, TCP} is decoded.  TCP segments are not
reassembled, each non-empty segment payload becomes one message.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import struct
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Optional, Sequence, Union

from .errors import (
    DuplicateIndex,
    IndexOutOfRange,
    LabelError,
    MessagesFileError,
    TruncatedRecord,
    UnknownMagic,
    UnsupportedLinkType,
)

log = logging.getLogger(__name__)

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_SWAPPED = 0xD4C3B2A1
LINKTYPE_ETHERNET = 1
ETHERTYPE_IPV4 = 0x0800
IPPROTO_TCP = 6
IPPROTO_UDP = 17

MESSAGES_MAGIC = b"PMSG"


class Transport(enum.IntEnum):
    UDP = 0
    TCP = 1

    @classmethod
    def parse(cls, value: Union[str, int, "Transport"]) -> "Transport":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown transport {value!r}") from None
        return cls(value)


class Direction(str, enum.Enum):
    """Which side of the conversation the filter port must be on."""

    BOTH = "both"
    TO_PORT = "to"  # dst_port == port (client -> server for a server port)
    FROM_PORT = "from"


@dataclass(frozen=True)
class RawPacket:
    ts_sec: int
    ts_usec: int
    data: bytes
    orig_len: int


@dataclass(frozen=True)
class Message:
    payload: bytes
    index: int
    src_port: int
    dst_port: int
    transport: Transport
    label: Optional[str] = None

    def __post_init__(self):
        if len(self.payload) < 1:
            raise ValueError("message payload must be non-empty")


@dataclass(frozen=True)
class Corpus:
    messages: tuple
    source: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        prev = -1
        for m in self.messages:
            if m.index <= prev:
                raise ValueError("message indices must be unique and strictly increasing")
            prev = m.index

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    def __getitem__(self, i):
        return self.messages[i]

    @property
    def payloads(self) -> list:
        return [m.payload for m in self.messages]

    @property
    def labels(self) -> list:
        return [m.label for m in self.messages]


# -- pcap -------------------------------------------------------------------

def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def parse_pcap(stream: Union[BinaryIO, bytes]) -> Iterator[RawPacket]:
    """Yield the records of a classic pcap capture.

    Accepts a binary stream or a bytes object.  Raises UnknownMagic,
    TruncatedRecord or UnsupportedLinkType.
    """
    if isinstance(stream, (bytes, bytearray, memoryview)):
        stream = io.BytesIO(bytes(stream))
    header = _read_exact(stream, 24)
    if len(header) < 4:
        raise UnknownMagic("file too short for a pcap global header")
    (magic,) = struct.unpack("<I", header[:4])
    if magic == PCAP_MAGIC:
        endian = "<"
    elif magic == PCAP_MAGIC_SWAPPED:
        endian = ">"
    else:
        raise UnknownMagic(f"bad pcap magic 0x{magic:08x}")
    if len(header) < 24:
        raise TruncatedRecord("global header shorter than 24 bytes")
    _, _, _, _, _, _, linktype = struct.unpack(endian + "IHHiIII", header)
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinkType(f"link type {linktype} (only Ethernet=1 is supported)")

    rec_fmt = endian + "IIII"
    while True:
        rec = _read_exact(stream, 16)
        if not rec:
            return
        if len(rec) < 16:
            raise TruncatedRecord("partial record header at end of file")
        ts_sec, ts_usec, incl_len, orig_len = struct.unpack(rec_fmt, rec)
        data = _read_exact(stream, incl_len)
        if len(data) < incl_len:
            raise TruncatedRecord(f"record claims {incl_len} bytes, only {len(data)} remain")
        yield RawPacket(ts_sec, ts_usec, data, orig_len)


def write_pcap(packets: Iterable[Union[RawPacket, bytes]], byteorder: str = "<",
               snaplen: int = 65535) -> bytes:
    """Serialise frames as a classic pcap (Ethernet link type)."""
    out = [struct.pack(byteorder + "IHHiIII", PCAP_MAGIC, 2, 4, 0, 0, snaplen, LINKTYPE_ETHERNET)]
    for i, p in enumerate(packets):
        if not isinstance(p, RawPacket):
            p = RawPacket(i, 0, bytes(p), len(p))
        out.append(struct.pack(byteorder + "IIII", p.ts_sec, p.ts_usec, len(p.data), p.orig_len))
        out.append(p.data)
    return b"".join(out)


# -- decoding ---------------------------------------------------------------

@dataclass(frozen=True)
class _Segment:
    src_port: int
    dst_port: int
    transport: Transport
    payload: bytes


def _decode(frame: bytes, tally: Counter) -> Optional[_Segment]:
    if len(frame) < 14:
        tally["malformed"] += 1
        return None
    (ethertype,) = struct.unpack("!H", frame[12:14])
    if ethertype != ETHERTYPE_IPV4:
        tally["non_ipv4"] += 1
        return None
    ip = frame[14:]
    if len(ip) < 20 or ip[0] >> 4 != 4:
        tally["malformed"] += 1
        return None
    ihl = (ip[0] & 0x0F) * 4
    (total_len,) = struct.unpack("!H", ip[2:4])
    (frag,) = struct.unpack("!H", ip[6:8])
    proto = ip[9]
    if ihl < 20 or total_len < ihl or total_len > len(ip):
        tally["malformed"] += 1
        return None
    if frag & 0x1FFF:
        # non-first fragment: no transport header
        tally["fragment"] += 1
        return None
    # total_len drops Ethernet trailer padding
    l4 = ip[ihl:total_len]
    if proto == IPPROTO_UDP:
        if len(l4) < 8:
            tally["malformed"] += 1
            return None
        sport, dport, ulen = struct.unpack("!HHH", l4[:6])
        if ulen < 8 or ulen > len(l4):
            tally["malformed"] += 1
            return None
        return _Segment(sport, dport, Transport.UDP, l4[8:ulen])
    if proto == IPPROTO_TCP:
        if len(l4) < 20:
            tally["malformed"] += 1
            return None
        sport, dport = struct.unpack("!HH", l4[:4])
        off = (l4[12] >> 4) * 4
        if off < 20 or off > len(l4):
            tally["malformed"] += 1
            return None
        return _Segment(sport, dport, Transport.TCP, l4[off:])
    tally["other_transport"] += 1
    return None


def _port_matches(src: int, dst: int, port: int, direction: Direction) -> bool:
    if direction is Direction.TO_PORT:
        return dst == port
    if direction is Direction.FROM_PORT:
        return src == port
    return src == port or dst == port


def classify_by_port(packets: Iterable[RawPacket], port: int, transport, *,
                     direction: Union[str, Direction] = Direction.BOTH,
                     source: str = "") -> Corpus:
    """Keep application payloads of packets on ``port`` over ``transport``.

    Skipped packets are tallied in ``corpus.diagnostics`` by reason; the
    tally always satisfies ``emitted + sum(skipped) == records``.
    """
    if not 0 <= port <= 65535:
        raise ValueError(f"port out of range: {port}")
    transport = Transport.parse(transport)
    direction = Direction(direction)
    tally: Counter = Counter()
    messages = []
    records = 0
    for pkt in packets:
        records += 1
        seg = _decode(pkt.data, tally)
        if seg is None:
            continue
        if seg.transport is not transport:
            tally["other_transport"] += 1
            continue
        if not _port_matches(seg.src_port, seg.dst_port, port, direction):
            tally["other_port"] += 1
            continue
        if not seg.payload:
            tally["empty_payload"] += 1
            continue
        messages.append(Message(seg.payload, len(messages), seg.src_port, seg.dst_port, transport))
    diagnostics = {"records": records, "emitted": len(messages), "skipped": dict(sorted(tally.items()))}
    if not source:
        source = f"port={port}/{transport.name.lower()}/{direction.value}"
    return Corpus(messages, source=source, diagnostics=diagnostics)


def filter_messages(corpus: Corpus, port: int, transport, *,
                    direction: Union[str, Direction] = Direction.BOTH) -> Corpus:
    """Apply the port filter to an existing corpus, keeping message indices."""
    transport = Transport.parse(transport)
    direction = Direction(direction)
    kept = [m for m in corpus
            if m.transport is transport and _port_matches(m.src_port, m.dst_port, port, direction)]
    return Corpus(kept, source=corpus.source, diagnostics=dict(corpus.diagnostics))


# -- labels -----------------------------------------------------------------

def read_labels(source: Union[str, Path, io.TextIOBase]) -> dict:
    """Parse an ``index,label`` CSV (path or text stream) into a dict.

    The ``index,label`` header row is optional.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    labels = {}
    for lineno, row in enumerate(rows, 1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and row[0].strip().lower() == "index":
            continue
        if len(row) < 2:
            raise LabelError(f"line {lineno}: expected 'index,label'")
        try:
            idx = int(row[0])
        except ValueError:
            raise LabelError(f"line {lineno}: bad index {row[0]!r}") from None
        if idx in labels:
            raise DuplicateIndex(f"index {idx} labeled twice")
        labels[idx] = row[1]
    return labels


def attach_labels(corpus: Corpus, labels) -> Corpus:
    """Return a copy of ``corpus`` whose messages carry ground-truth labels.

    ``labels`` is a mapping ``index -> label`` or anything read_labels accepts.
    Indices refer to corpus positions.
    """
    if not isinstance(labels, dict):
        labels = read_labels(labels)
    n = len(corpus)
    for idx in labels:
        if not 0 <= idx < n:
            raise IndexOutOfRange(f"label index {idx} outside corpus of {n}")
    if not labels:
        return corpus
    messages = [replace(m, label=labels.get(pos)) for pos, m in enumerate(corpus)]
    return Corpus(messages, source=corpus.source, diagnostics=dict(corpus.diagnostics))


def write_labels(corpus: Corpus, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label"])
        for pos, m in enumerate(corpus):
            if m.label is not None:
                w.writerow([pos, m.label])


# -- messages file ----------------------------------------------------------

def dump_messages(corpus: Union[Corpus, Sequence[Message]]) -> bytes:
    msgs = list(corpus)
    out = [MESSAGES_MAGIC, struct.pack("<I", len(msgs))]
    for m in msgs:
        out.append(struct.pack("<I", len(m.payload)))
        out.append(m.payload)
        out.append(struct.pack("<HHB", m.src_port, m.dst_port, int(m.transport)))
    return b"".join(out)


def load_messages(data: bytes, source: str = "") -> Corpus:
    if data[:4] != MESSAGES_MAGIC:
        raise MessagesFileError("not a messages file (missing PMSG magic)")
    if len(data) < 8:
        raise MessagesFileError("truncated messages file header")
    (count,) = struct.unpack_from("<I", data, 4)
    pos = 8
    messages = []
    for i in range(count):
        if pos + 4 > len(data):
            raise MessagesFileError(f"truncated at message {i}")
        (plen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        end = pos + plen + 5
        if end > len(data):
            raise MessagesFileError(f"truncated at message {i}")
        payload = data[pos:pos + plen]
        sport, dport, tr = struct.unpack_from("<HHB", data, pos + plen)
        if plen == 0:
            raise MessagesFileError(f"message {i} has an empty payload")
        if tr not in (Transport.UDP, Transport.TCP):
            raise MessagesFileError(f"message {i} has unknown transport code {tr}")
        messages.append(Message(payload, i, sport, dport, Transport(tr)))
        pos = end
    if pos != len(data):
        raise MessagesFileError(f"{len(data) - pos} trailing bytes after last message")
    return Corpus(messages, source=source)


def write_messages(corpus, path: Union[str, Path]) -> None:
    Path(path).write_bytes(dump_messages(corpus))


def read_messages(path: Union[str, Path]) -> Corpus:
    return load_messages(Path(path).read_bytes(), source=str(path))


def load_corpus(messages_path, labels_path=None) -> Corpus:
    corpus = read_messages(messages_path)
    if labels_path is not None:
        corpus = attach_labels(corpus, read_labels(labels_path))
    return corpus
