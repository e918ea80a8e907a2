"""Self-delimiting bit-string codec for circuits.

Each component is written as a 16-bit record length followed by the record:
a gate-count header of ``ceil(log2(n + 1))`` bits, then one entry per gate.
A gate entry is a 3-bit opcode followed by operand fields of
``ceil(log2 n)`` bits each:

    H, X : target
    CR   : k, control, target
    CNOT : l, controls..., target

Bit strings are plain ``str`` objects of ``'0'``/``'1'``.  The hex form writes
each component separately as four hex digits of length plus the record padded
with zeros to a nibble boundary.
"""

from .circuit import Circuit, Component, Gate
from .errors import DecodeError, MalformedComponentError

LENGTH_BITS = 16
OPCODES = {"H": 0, "X": 1, "CR": 2, "CNOT": 3}
_KIND_OF = {v: k for k, v in OPCODES.items()}


def field_width(n):
    return (n - 1).bit_length()


def count_width(n):
    return n.bit_length()


def _bits(value, width):
    return format(value, f"0{width}b") if width else ""


def component_record(c: Component) -> str:
    w = field_width(c.n)
    out = [_bits(len(c.gates), count_width(c.n))]
    for g in c.gates:
        out.append(_bits(OPCODES[g.kind], 3))
        if g.kind == "CR":
            out.append(_bits(g.k, w) + _bits(g.controls[0], w))
        elif g.kind == "CNOT":
            out.append(_bits(len(g.controls), w))
            out.extend(_bits(q, w) for q in g.controls)
        out.append(_bits(g.target, w))
    return "".join(out)


def encode_component(c: Component) -> str:
    rec = component_record(c)
    if len(rec) >= 1 << LENGTH_BITS:
        raise ValueError("component record too long for a 16-bit length prefix")
    return _bits(len(rec), LENGTH_BITS) + rec


def encode(C: Circuit) -> str:
    return "".join(encode_component(c) for c in C.components)


def component_bit_lengths(C: Circuit) -> list[int]:
    """Record length of each component, excluding the length prefix."""
    return [len(component_record(c)) for c in C.components]


class _Reader:
    def __init__(self, bits, start=0):
        self.bits = bits
        self.pos = start

    def take(self, width, what):
        if self.pos + width > len(self.bits):
            raise DecodeError(f"truncated while reading {what}", self.pos)
        chunk = self.bits[self.pos:self.pos + width]
        self.pos += width
        return int(chunk, 2) if width else 0


def _decode_record(bits, start, end, n):
    r = _Reader(bits[:end], start)
    w = field_width(n)
    count = r.take(count_width(n), "gate count")
    gates = []
    for _ in range(count):
        at = r.pos
        op = r.take(3, "opcode")
        kind = _KIND_OF.get(op)
        if kind is None:
            raise DecodeError(f"unknown opcode {op}", at)
        try:
            if kind in ("H", "X"):
                gates.append(Gate(kind, r.take(w, "target")))
            elif kind == "CR":
                k = r.take(w, "k")
                c = r.take(w, "control")
                gates.append(Gate.cr(k, c, r.take(w, "target")))
            else:
                l = r.take(w, "control count")
                if l < 1:
                    raise DecodeError("CNOT with zero controls", at)
                controls = [r.take(w, "control") for _ in range(l)]
                gates.append(Gate.cnot(controls, r.take(w, "target")))
        except MalformedComponentError as exc:
            raise DecodeError(str(exc), at) from exc
    if r.pos != end:
        raise DecodeError("record length does not match its contents", r.pos)
    try:
        return Component(n, tuple(gates))
    except MalformedComponentError as exc:
        raise DecodeError(str(exc), start) from exc


def decode(bits: str, n: int, t: int, L: int) -> Circuit:
    if set(bits) - {"0", "1"}:
        raise DecodeError("bit string contains characters other than 0/1", 0)
    r = _Reader(bits)
    comps = []
    while r.pos < len(bits):
        length = r.take(LENGTH_BITS, "record length")
        start = r.pos
        if start + length > len(bits):
            raise DecodeError("record runs past end of string", start)
        comps.append(_decode_record(bits, start, start + length, n))
        r.pos = start + length
    return Circuit(n, t, L, tuple(comps))


def to_hex(C: Circuit) -> str:
    out = []
    for c in C.components:
        rec = component_record(c)
        pad = "0" * (-len(rec) % 4)
        body = rec + pad
        out.append(format(len(rec), "04x") + (format(int(body, 2), f"0{len(body) // 4}x") if body else ""))
    return "".join(out)


def from_hex(text: str, n: int, t: int, L: int) -> Circuit:
    text = text.strip().lower()
    comps = []
    pos = 0
    while pos < len(text):
        if pos + 4 > len(text):
            raise DecodeError("truncated length prefix", pos * 4)
        try:
            length = int(text[pos:pos + 4], 16)
            digits = -(-length // 4)
            chunk = text[pos + 4:pos + 4 + digits]
            if len(chunk) != digits:
                raise DecodeError("truncated record", (pos + 4) * 4)
            body = format(int(chunk, 16), f"0{digits * 4}b") if digits else ""
        except ValueError as exc:
            if isinstance(exc, DecodeError):
                raise
            raise DecodeError("invalid hex digit", pos * 4) from exc
        if body[length:].strip("0"):
            raise DecodeError("nonzero padding bits", (pos + 4) * 4 + length)
        comps.append(_decode_record(body, 0, length, n))
        pos += 4 + digits
    return Circuit(n, t, L, tuple(comps))
