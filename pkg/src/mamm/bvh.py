"""BVH motion-capture file parsing and serialization.

Only the ASCII BVH dialect is supported: a HIERARCHY section built from
ROOT/JOINT/End Site blocks with OFFSET and CHANNELS lines, followed by a
MOTION section with ``Frames:`` / ``Frame Time:`` headers and one
whitespace-delimited line of channel values per frame. Rotation channels are
degrees. Each joint carries either 3 channels (rotations) or 6 (positions
then rotations).

Parsing is lossless: the raw per-frame channel values, the channel layout,
and end sites are all preserved, so serialize(parse(text)) round-trips
exactly (floats are emitted with ``repr`` so a second parse is bit-identical
to the first).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BvhError

_POSITION_CHANNELS = {"Xposition", "Yposition", "Zposition"}
_ROTATION_CHANNELS = {"Xrotation", "Yrotation", "Zrotation"}


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int | None
    offset: np.ndarray  # (3,)
    channels: tuple[str, ...]

    @property
    def rotation_order(self) -> str:
        """Rotation axes in application order, e.g. ``"ZXY"``."""
        return "".join(c[0] for c in self.channels if c in _ROTATION_CHANNELS)

    @property
    def has_position(self) -> bool:
        return any(c in _POSITION_CHANNELS for c in self.channels)


@dataclass(frozen=True)
class EndSite:
    parent: int
    offset: np.ndarray


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy; joint 0 is the unique root and parents precede children."""

    joints: tuple[Joint, ...]
    end_sites: tuple[EndSite, ...] = ()

    def __post_init__(self):
        if not self.joints:
            raise ValueError("skeleton needs at least one joint")
        if self.joints[0].parent is not None:
            raise ValueError("joint 0 must be the root (parent None)")
        names = set()
        for i, j in enumerate(self.joints):
            if i > 0 and (j.parent is None or not 0 <= j.parent < i):
                raise ValueError(f"joint {i} ({j.name}): parent must precede it")
            if j.name in names:
                raise ValueError(f"duplicate joint name {j.name!r}")
            names.add(j.name)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def names(self) -> list[str]:
        return [j.name for j in self.joints]

    def children(self, index: int) -> list[int]:
        return [i for i, j in enumerate(self.joints) if j.parent == index]


@dataclass(frozen=True)
class BvhData:
    """Raw parse result: skeleton plus per-frame channel values (degrees)."""

    skeleton: Skeleton
    channels: np.ndarray  # (frames, total_channels)
    frame_time: float
    # column range of each joint inside ``channels``
    joint_slices: tuple[slice, ...] = field(default=())

    @property
    def fps(self) -> float:
        return 1.0 / self.frame_time if self.frame_time > 0 else 30.0


class _Tokens:
    """Whitespace tokenizer that remembers line numbers for error messages."""

    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self.items.append((tok, lineno))
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    @property
    def lineno(self) -> int:
        idx = min(self.pos, len(self.items) - 1)
        return self.items[idx][1] if self.items else 0

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.items):
            raise BvhError(f"line {self.lineno}: unexpected end of file"
                           + (f" (expected {expect!r})" if expect else ""))
        tok, lineno = self.items[self.pos]
        self.pos += 1
        if expect is not None and tok != expect:
            raise BvhError(f"line {lineno}: expected {expect!r}, got {tok!r}")
        return tok

    def next_float(self) -> float:
        tok = self.next()
        try:
            return float(tok)
        except ValueError:
            raise BvhError(f"line {self.lineno}: expected a number, got {tok!r}") from None

    def next_int(self) -> int:
        tok = self.next()
        try:
            return int(tok)
        except ValueError:
            raise BvhError(f"line {self.lineno}: expected an integer, got {tok!r}") from None


def _parse_joint_block(tok: _Tokens, parent: int | None, joints: list[Joint],
                       end_sites: list[EndSite]) -> None:
    index = len(joints)
    name = tok.next()
    tok.next("{")
    tok.next("OFFSET")
    offset = np.array([tok.next_float() for _ in range(3)])
    tok.next("CHANNELS")
    lineno = tok.lineno
    n = tok.next_int()
    channels = tuple(tok.next() for _ in range(n))
    if n not in (3, 6):
        raise BvhError(f"line {lineno}: joint {name!r} declares {n} channels; expected 3 or 6")
    rot = [c for c in channels if c in _ROTATION_CHANNELS]
    if len(rot) != 3 or len({c[0] for c in rot}) != 3:
        raise BvhError(f"line {lineno}: joint {name!r} needs three distinct rotation channels")
    for c in channels:
        if c not in _ROTATION_CHANNELS and c not in _POSITION_CHANNELS:
            raise BvhError(f"line {lineno}: unknown channel {c!r}")
    joints.append(Joint(name=name, parent=parent, offset=offset, channels=channels))

    while True:
        nxt = tok.peek()
        if nxt == "JOINT":
            tok.next()
            _parse_joint_block(tok, index, joints, end_sites)
        elif nxt == "End":
            tok.next()
            tok.next("Site")
            tok.next("{")
            tok.next("OFFSET")
            off = np.array([tok.next_float() for _ in range(3)])
            tok.next("}")
            end_sites.append(EndSite(parent=index, offset=off))
        elif nxt == "}":
            tok.next()
            return
        else:
            raise BvhError(f"line {tok.lineno}: expected JOINT, End Site or '}}', got {nxt!r}")


def parse_bvh(text: str) -> BvhData:
    """Parse BVH text into a skeleton and raw per-frame channel values.

    Errors (malformed hierarchy, channel-count mismatch, frame-count mismatch
    with the declared ``Frames:`` value) are reported with line numbers.
    """
    tok = _Tokens(text)
    tok.next("HIERARCHY")
    tok.next("ROOT")
    joints: list[Joint] = []
    end_sites: list[EndSite] = []
    _parse_joint_block(tok, None, joints, end_sites)
    skeleton = Skeleton(joints=tuple(joints), end_sites=tuple(end_sites))

    tok.next("MOTION")
    tok.next("Frames:")
    declared = tok.next_int()
    tok.next("Frame")
    tok.next("Time:")
    frame_time = tok.next_float()

    per_joint = [len(j.channels) for j in skeleton.joints]
    total = sum(per_joint)
    start = tok.pos
    remaining = len(tok.items) - start
    if remaining != declared * total:
        # Locate the short/long line for the report.
        lines: dict[int, int] = {}
        for t, ln in tok.items[start:]:
            lines[ln] = lines.get(ln, 0) + 1
        bad = next((ln for ln, cnt in sorted(lines.items()) if cnt != total), None)
        if bad is not None:
            raise BvhError(
                f"line {bad}: frame has {lines[bad]} values, expected {total} channels"
            )
        n_lines = len(lines)
        where = max(lines) if lines else tok.lineno
        raise BvhError(
            f"line {where}: declared Frames: {declared} but found {n_lines} data lines"
        )
    try:
        flat = np.array([float(t) for t, _ in tok.items[start:]])
    except ValueError:
        for t, ln in tok.items[start:]:
            try:
                float(t)
            except ValueError:
                raise BvhError(f"line {ln}: expected a number, got {t!r}") from None
        raise
    channels = flat.reshape(declared, total)

    slices = []
    col = 0
    for n in per_joint:
        slices.append(slice(col, col + n))
        col += n
    return BvhData(skeleton=skeleton, channels=channels, frame_time=frame_time,
                   joint_slices=tuple(slices))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_bvh(data: BvhData) -> str:
    """Serialize parsed (or synthesized) BVH data back to text.

    Uses ``repr`` float formatting so that re-parsing reproduces the channel
    values exactly.
    """
    sk = data.skeleton
    lines = ["HIERARCHY"]
    kids = {i: sk.children(i) for i in range(sk.n_joints)}
    ends: dict[int, list[EndSite]] = {}
    for e in sk.end_sites:
        ends.setdefault(e.parent, []).append(e)

    def emit(index: int, depth: int):
        j = sk.joints[index]
        pad = "  " * depth
        kw = "ROOT" if index == 0 else "JOINT"
        lines.append(f"{pad}{kw} {j.name}")
        lines.append(f"{pad}{{")
        inner = "  " * (depth + 1)
        lines.append(f"{inner}OFFSET {' '.join(_fmt(v) for v in j.offset)}")
        lines.append(f"{inner}CHANNELS {len(j.channels)} {' '.join(j.channels)}")
        for child in kids[index]:
            emit(child, depth + 1)
        for e in ends.get(index, []):
            lines.append(f"{inner}End Site")
            lines.append(f"{inner}{{")
            lines.append(f"{inner}  OFFSET {' '.join(_fmt(v) for v in e.offset)}")
            lines.append(f"{inner}}}")
        lines.append(f"{pad}}}")

    emit(0, 0)
    lines.append("MOTION")
    lines.append(f"Frames: {data.channels.shape[0]}")
    lines.append(f"Frame Time: {_fmt(data.frame_time)}")
    for row in data.channels:
        lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"
