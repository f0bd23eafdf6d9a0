"""Bit-exact codec for the headset's serial packet stream.

Frame layout (see PROTOCOL.md):

    [0xAA] [0xAA] [plen] [payload: plen bytes] [checksum]

plen < 170; checksum is the bitwise complement of the low 8 bits of the
payload byte sum. The payload is a run of data rows:

    [0x55 (EXCODE)]*  [code]  ([vlen] value... if code >= 0x80 else value)

The decoder accepts arbitrary bytes, resynchronizes on the next 0xAA 0xAA
pair after corruption, and reassembles packets split across feed calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import N_BANDS
from .errors import PayloadTooLarge, PayloadTooSmall

SYNC = 0xAA
EXCODE = 0x55
MAX_PAYLOAD = 169

CODE_POOR_SIGNAL = 0x02
CODE_ATTENTION = 0x04
CODE_MEDITATION = 0x05
CODE_RAW_WAVE = 0x80
CODE_EEG_POWER = 0x83


@dataclass(frozen=True)
class DataRow:
    """One typed value inside a packet payload."""

    code: int
    value: bytes
    excode_count: int = 0

    def __post_init__(self):
        if not 0 <= self.code <= 0xFF or self.code in (SYNC, EXCODE):
            raise ValueError(f"invalid row code 0x{self.code:02X}")
        if self.code < 0x80 and len(self.value) != 1:
            raise ValueError("single-byte codes carry exactly one value byte")
        if self.code >= 0x80 and len(self.value) > 0xFF:
            raise ValueError("multi-byte value exceeds one-byte length prefix")
        if self.excode_count < 0:
            raise ValueError("excode_count must be non-negative")


# Parsed events
@dataclass(frozen=True)
class PoorSignal:
    level: int  # 0..200, 200 = no skin contact


@dataclass(frozen=True)
class Attention:
    level: int


@dataclass(frozen=True)
class Meditation:
    level: int


@dataclass(frozen=True)
class RawWave:
    sample: int  # signed 16-bit


@dataclass(frozen=True)
class EegPower:
    bands: tuple[int, ...]  # 8 values, canonical band order, 24-bit each


@dataclass(frozen=True)
class Unknown:
    code: int
    raw: bytes
    excode_count: int = 0


ParsedEvent = PoorSignal | Attention | Meditation | RawWave | EegPower | Unknown


@dataclass(frozen=True)
class FrameError:
    kind: str  # "bad_checksum" | "bad_length"
    offset: int  # absolute byte offset of the frame's first sync byte
    detail: str = ""


@dataclass
class DecoderState:
    """Carry-over between decode_stream calls. Not safe for concurrent use."""

    buffer: bytearray = field(default_factory=bytearray)
    offset: int = 0  # absolute stream offset of buffer[0]


def checksum(payload: bytes) -> int:
    return ~sum(payload) & 0xFF


def serialize_rows(rows: list[DataRow]) -> bytes:
    out = bytearray()
    for row in rows:
        out.extend(bytes([EXCODE]) * row.excode_count)
        out.append(row.code)
        if row.code >= 0x80:
            out.append(len(row.value))
        out.extend(row.value)
    return bytes(out)


def parse_payload(payload: bytes) -> list[DataRow]:
    """Split a verified payload into rows; raises ValueError on truncation."""
    rows = []
    i = 0
    n = len(payload)
    while i < n:
        excode = 0
        while i < n and payload[i] == EXCODE:
            excode += 1
            i += 1
        if i >= n:
            raise ValueError("payload ends inside an excode run")
        code = payload[i]
        i += 1
        if code >= 0x80:
            if i >= n:
                raise ValueError("payload ends before value length")
            vlen = payload[i]
            i += 1
        else:
            vlen = 1
        if i + vlen > n:
            raise ValueError("payload ends inside a row value")
        rows.append(DataRow(code=code, value=bytes(payload[i : i + vlen]), excode_count=excode))
        i += vlen
    return rows


def encode_packet(rows: list[DataRow]) -> bytes:
    """Frame a row list as a single packet."""
    if not rows:
        raise PayloadTooSmall("a packet must carry at least one data row")
    payload = serialize_rows(rows)
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"serialized payload is {len(payload)} bytes (max {MAX_PAYLOAD})")
    return bytes([SYNC, SYNC, len(payload)]) + payload + bytes([checksum(payload)])


def row_to_event(row: DataRow) -> ParsedEvent:
    if row.excode_count == 0:
        if row.code == CODE_POOR_SIGNAL:
            return PoorSignal(row.value[0])
        if row.code == CODE_ATTENTION:
            return Attention(row.value[0])
        if row.code == CODE_MEDITATION:
            return Meditation(row.value[0])
        if row.code == CODE_RAW_WAVE and len(row.value) == 2:
            return RawWave(int.from_bytes(row.value, "big", signed=True))
        if row.code == CODE_EEG_POWER and len(row.value) == 3 * N_BANDS:
            bands = tuple(
                int.from_bytes(row.value[3 * b : 3 * b + 3], "big") for b in range(N_BANDS)
            )
            return EegPower(bands)
    return Unknown(row.code, row.value, row.excode_count)


def event_to_row(event: ParsedEvent) -> DataRow:
    if isinstance(event, PoorSignal):
        return DataRow(CODE_POOR_SIGNAL, bytes([event.level]))
    if isinstance(event, Attention):
        return DataRow(CODE_ATTENTION, bytes([event.level]))
    if isinstance(event, Meditation):
        return DataRow(CODE_MEDITATION, bytes([event.level]))
    if isinstance(event, RawWave):
        return DataRow(CODE_RAW_WAVE, event.sample.to_bytes(2, "big", signed=True))
    if isinstance(event, EegPower):
        value = b"".join(v.to_bytes(3, "big") for v in event.bands)
        return DataRow(CODE_EEG_POWER, value)
    if isinstance(event, Unknown):
        return DataRow(event.code, event.raw, event.excode_count)
    raise TypeError(f"not a ParsedEvent: {event!r}")


def eeg_power_packet(bands) -> bytes:
    """Single-packet encoding of one eight-band power row."""
    return encode_packet([event_to_row(EegPower(tuple(int(v) for v in bands)))])


def _scan(buf: bytearray, base: int, final: bool):
    """Scan buf for packets. Returns (events, errors, keep_from).

    final=True treats the buffer as the end of the stream: an incomplete
    frame is abandoned (skip one byte, rescan) instead of held for more input.
    """
    events: list[ParsedEvent] = []
    errors: list[FrameError] = []
    i = 0
    n = len(buf)
    while True:
        j = buf.find(b"\xaa\xaa", i)
        if j < 0:
            # keep a trailing lone sync byte: it may pair with the next chunk
            keep = n - 1 if (not final and n and buf[-1] == SYNC) else n
            return events, errors, keep
        if j + 2 >= n:
            if final:
                return events, errors, n
            return events, errors, j
        plen = buf[j + 2]
        if plen == SYNC:  # sync run [AA AA AA ...]: slide one byte
            i = j + 1
            continue
        if plen > MAX_PAYLOAD:
            errors.append(FrameError("bad_length", base + j, f"declared length {plen}"))
            i = j + 2
            continue
        end = j + 3 + plen + 1
        if end > n:
            if final:
                i = j + 1
                continue
            return events, errors, j
        payload = bytes(buf[j + 3 : j + 3 + plen])
        if checksum(payload) != buf[end - 1]:
            errors.append(FrameError("bad_checksum", base + j))
            i = j + 1
            continue
        try:
            rows = parse_payload(payload)
        except ValueError as exc:
            errors.append(FrameError("bad_length", base + j, str(exc)))
            i = j + 1
            continue
        events.extend(row_to_event(r) for r in rows)
        i = end


def decode_stream(
    data: bytes, state: DecoderState | None = None
) -> tuple[list[ParsedEvent], list[FrameError], DecoderState]:
    """Feed bytes to the decoder; returns completed events, frame errors, state.

    A packet split across calls is held in the state and completed by the
    next feed. Corruption never raises: bad frames become FrameError values
    and the scan resumes at the next sync pair.
    """
    if state is None:
        state = DecoderState()
    state.buffer.extend(data)
    events, errors, keep = _scan(state.buffer, state.offset, final=False)
    del state.buffer[:keep]
    state.offset += keep
    return events, errors, state


def finish(state: DecoderState) -> tuple[list[ParsedEvent], list[FrameError]]:
    """Flush a decoder at end of stream, abandoning any incomplete frame."""
    events, errors, keep = _scan(state.buffer, state.offset, final=True)
    del state.buffer[:keep]
    state.offset += keep
    return events, errors


def decode_bytes(data: bytes) -> tuple[list[ParsedEvent], list[FrameError]]:
    """One-shot decode of a complete byte string (stream feed + flush)."""
    events, errors, state = decode_stream(data)
    ev2, er2 = finish(state)
    return events + ev2, errors + er2
